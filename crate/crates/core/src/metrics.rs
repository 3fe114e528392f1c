//! Entropy, information gain and the surrogate placement metric.
//!
//! All quantities are in nats. A voxel crossed by at least one beam is
//! treated as observed and contributes no conditional entropy; voxels the
//! rig never reaches keep their marginal entropy.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lidar::{coverage_with, CoverageMask, CoverageOptions, PlacementConfig};
use crate::pog::Pog;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Binary entropy in nats, with `0·ln 0 := 0`.
pub fn voxel_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Argument(format!("probability {p} outside [0, 1]")));
    }
    Ok(binary_entropy(p))
}

#[inline]
fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Entropy of a voxel seen in `k` of `t` frames. `k/t` and `(t-k)/t` are
/// computed separately so the result is exactly symmetric in `k <-> t-k`.
#[inline]
fn count_entropy(k: u32, t: u64) -> f64 {
    let t = t as f64;
    let term = |c: f64| if c > 0.0 { let q = c / t; -q * q.ln() } else { 0.0 };
    term(k as f64) + term(t - k as f64)
}

/// Total POG entropy: sum of voxel entropies over stored voxels.
pub fn pog_entropy(pog: &Pog) -> f64 {
    let t = pog.frame_count();
    pog.entries()
        .iter()
        .map(|&(_, k)| count_entropy(k, t))
        .collect::<CompensatedSum>()
        .value()
}

fn check_grid(pog: &Pog, mask: &CoverageMask) -> Result<()> {
    if pog.grid() != mask.grid() {
        return Err(Error::Argument(format!(
            "POG grid {:?} differs from coverage grid {:?}",
            pog.grid().roi,
            mask.grid().roi
        )));
    }
    Ok(())
}

/// Residual entropy of the voxels no beam intersects.
pub fn conditional_entropy(pog: &Pog, mask: &CoverageMask) -> Result<f64> {
    check_grid(pog, mask)?;
    let t = pog.frame_count();
    Ok(pog
        .entries()
        .iter()
        .filter(|(i, _)| !mask.contains(*i))
        .map(|&(_, k)| count_entropy(k, t))
        .collect::<CompensatedSum>()
        .value())
}

/// `-H(V | C)`; always `<= 0`, with 0 meaning nothing is left unobserved.
pub fn surrogate_metric(pog: &Pog, mask: &CoverageMask) -> Result<f64> {
    Ok(negate(conditional_entropy(pog, mask)?))
}

pub fn info_gain(pog: &Pog, mask: &CoverageMask) -> Result<f64> {
    let h_cond = conditional_entropy(pog, mask)?;
    Ok(pog_entropy(pog) - h_cond)
}

fn negate(x: f64) -> f64 {
    0.0 - x
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub class: String,
    pub h_pog: f64,
    pub h_cond: f64,
    pub info_gain: f64,
    pub s_mig: f64,
    pub nonzero_voxels: u64,
    pub covered_nonzero_voxels: u64,
}

impl MetricsRow {
    fn new(class: String, h_pog: f64, h_cond: f64, nonzero: u64, covered: u64) -> Self {
        MetricsRow {
            class,
            h_pog,
            h_cond,
            info_gain: h_pog - h_cond,
            s_mig: negate(h_cond),
            nonzero_voxels: nonzero,
            covered_nonzero_voxels: covered,
        }
    }
}

pub const TOTAL_CLASS: &str = "total";

pub const CSV_HEADER: &str =
    "config,class,h_pog,h_cond,info_gain,s_mig,nonzero_voxels,covered_nonzero_voxels";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub config_name: String,
    pub rows: Vec<MetricsRow>,
    pub total: MetricsRow,
}

/// Metrics for one class against a precomputed mask.
pub fn class_row(pog: &Pog, mask: &CoverageMask) -> Result<MetricsRow> {
    check_grid(pog, mask)?;
    let t = pog.frame_count();
    let mut h_pog = CompensatedSum::default();
    let mut h_cond = CompensatedSum::default();
    let mut covered = 0u64;
    for &(i, k) in pog.entries() {
        let h = count_entropy(k, t);
        h_pog.add(h);
        if mask.contains(i) {
            covered += 1;
        } else {
            h_cond.add(h);
        }
    }
    Ok(MetricsRow::new(
        pog.class_label().to_string(),
        h_pog.value(),
        h_cond.value(),
        pog.len() as u64,
        covered,
    ))
}

impl MetricsReport {
    pub fn from_rows(config_name: impl Into<String>, rows: Vec<MetricsRow>) -> Self {
        let sum = |f: fn(&MetricsRow) -> f64| rows.iter().map(f).collect::<CompensatedSum>().value();
        let total = MetricsRow::new(
            TOTAL_CLASS.to_string(),
            sum(|r| r.h_pog),
            sum(|r| r.h_cond),
            rows.iter().map(|r| r.nonzero_voxels).sum(),
            rows.iter().map(|r| r.covered_nonzero_voxels).sum(),
        );
        MetricsReport {
            config_name: config_name.into(),
            rows,
            total,
        }
    }

    /// Metrics for an already computed coverage mask.
    pub fn from_mask(config_name: &str, pogs: &[Pog], mask: &CoverageMask) -> Result<Self> {
        let rows = pogs
            .iter()
            .map(|p| class_row(p, mask))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_rows(config_name, rows))
    }

    pub fn s_mig(&self) -> f64 {
        self.total.s_mig
    }

    /// Same report with entropies expressed in bits instead of nats.
    pub fn in_bits(&self) -> MetricsReport {
        let scale = |r: &MetricsRow| MetricsRow {
            h_pog: r.h_pog / std::f64::consts::LN_2,
            h_cond: r.h_cond / std::f64::consts::LN_2,
            info_gain: r.info_gain / std::f64::consts::LN_2,
            s_mig: r.s_mig / std::f64::consts::LN_2,
            ..r.clone()
        };
        MetricsReport {
            config_name: self.config_name.clone(),
            rows: self.rows.iter().map(scale).collect(),
            total: scale(&self.total),
        }
    }

    fn all_rows(&self) -> impl Iterator<Item = &MetricsRow> {
        self.rows.iter().chain(std::iter::once(&self.total))
    }

    /// CSV body rows (no header), one per class plus `total`.
    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        for r in self.all_rows() {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                self.config_name,
                r.class,
                r.h_pog,
                r.h_cond,
                r.info_gain,
                r.s_mig,
                r.nonzero_voxels,
                r.covered_nonzero_voxels
            )
            .unwrap();
        }
        s
    }

    pub fn to_csv(&self) -> String {
        format!("{CSV_HEADER}\n{}", self.csv_rows())
    }

    /// Human-readable table with entropies in units of 10³ nats.
    pub fn to_text(&self) -> String {
        let mut s = format!("placement: {}\n", self.config_name);
        writeln!(
            s,
            "{:<12} {:>12} {:>12} {:>12} {:>12} {:>10} {:>10}",
            "class", "H_POG(e3)", "H_cond(e3)", "IG(e3)", "S-MIG(e3)", "nonzero", "covered"
        )
        .unwrap();
        for r in self.all_rows() {
            writeln!(
                s,
                "{:<12} {:>12} {:>12} {:>12} {:>12} {:>10} {:>10}",
                r.class,
                format_thousands(r.h_pog),
                format_thousands(r.h_cond),
                format_thousands(r.info_gain),
                format_thousands(r.s_mig),
                r.nonzero_voxels,
                r.covered_nonzero_voxels
            )
            .unwrap();
        }
        s
    }
}

/// Value in units of 10³ with two decimals; scientific notation beyond 1e6.
pub fn format_thousands(v: f64) -> String {
    let k = v / 1e3;
    let s = if k.abs() >= 1e6 {
        format!("{k:.2e}")
    } else {
        format!("{k:.2}")
    };
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Computes coverage once, then one row per class plus the summed total.
pub fn evaluate(
    config: &PlacementConfig,
    pogs: &[Pog],
    grid: &crate::geometry::VoxelGrid,
) -> Result<MetricsReport> {
    evaluate_with(config, pogs, grid, CoverageOptions::default())
}

pub fn evaluate_with(
    config: &PlacementConfig,
    pogs: &[Pog],
    grid: &crate::geometry::VoxelGrid,
    opts: CoverageOptions,
) -> Result<MetricsReport> {
    for p in pogs {
        if p.grid() != grid {
            return Err(Error::Argument(format!(
                "{} POG grid {:?} differs from evaluation grid {:?}",
                p.class_label(),
                p.grid().roi,
                grid.roi
            )));
        }
    }
    let mask = coverage_with(config, grid, opts)?;
    MetricsReport::from_mask(&config.name, pogs, &mask)
}
