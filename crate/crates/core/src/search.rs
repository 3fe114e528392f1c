//! Placement search: first-improvement coordinate descent with step halving,
//! plus one-dimensional parameter sweeps.
//!
//! Mount fields are perturbed in the config's declared (source) frame, so
//! bounds and trace values read the same as the placement file.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, VoxelGrid};
use crate::lidar::{coverage_with, CoverageOptions, PlacementConfig};
use crate::metrics::{MetricsReport, CSV_HEADER};
use crate::pog::Pog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    X,
    Y,
    Z,
    Roll,
    Pitch,
    Yaw,
}

impl Dimension {
    /// The dimensions searched by [`optimize`], in sweep order.
    pub const SEARCHED: [Dimension; 5] = [
        Dimension::X,
        Dimension::Y,
        Dimension::Z,
        Dimension::Roll,
        Dimension::Pitch,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Dimension::X => "x",
            Dimension::Y => "y",
            Dimension::Z => "z",
            Dimension::Roll => "roll",
            Dimension::Pitch => "pitch",
            Dimension::Yaw => "yaw",
        }
    }

    pub fn get(&self, p: &Pose) -> f64 {
        match self {
            Dimension::X => p.x,
            Dimension::Y => p.y,
            Dimension::Z => p.z,
            Dimension::Roll => p.roll,
            Dimension::Pitch => p.pitch,
            Dimension::Yaw => p.yaw,
        }
    }

    pub fn set(&self, p: &mut Pose, v: f64) {
        match self {
            Dimension::X => p.x = v,
            Dimension::Y => p.y = v,
            Dimension::Z => p.z = v,
            Dimension::Roll => p.roll = v,
            Dimension::Pitch => p.pitch = v,
            Dimension::Yaw => p.yaw = v,
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Dimension::X),
            "y" => Ok(Dimension::Y),
            "z" => Ok(Dimension::Z),
            "roll" => Ok(Dimension::Roll),
            "pitch" => Ok(Dimension::Pitch),
            "yaw" => Ok(Dimension::Yaw),
            _ => Err(Error::Argument(format!(
                "unknown dimension {s:?} (x, y, z, roll, pitch, yaw)"
            ))),
        }
    }
}

/// Inclusive `[min, max]` per searched dimension for one sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorBounds {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
    pub roll: [f64; 2],
    pub pitch: [f64; 2],
}

impl SensorBounds {
    /// Roof box: x ∈ [-1, 1.2], y ∈ [-0.8, 0.8], z ∈ [2, 3.2] m, roll/pitch ∈ ±0.35 rad.
    pub fn roof() -> Self {
        SensorBounds {
            x: [-1.0, 1.2],
            y: [-0.8, 0.8],
            z: [2.0, 3.2],
            roll: [-0.35, 0.35],
            pitch: [-0.35, 0.35],
        }
    }

    /// Bounds pinned to the given pose (no freedom in any dimension).
    pub fn fixed(p: &Pose) -> Self {
        SensorBounds {
            x: [p.x, p.x],
            y: [p.y, p.y],
            z: [p.z, p.z],
            roll: [p.roll, p.roll],
            pitch: [p.pitch, p.pitch],
        }
    }

    pub fn get(&self, d: Dimension) -> Option<[f64; 2]> {
        match d {
            Dimension::X => Some(self.x),
            Dimension::Y => Some(self.y),
            Dimension::Z => Some(self.z),
            Dimension::Roll => Some(self.roll),
            Dimension::Pitch => Some(self.pitch),
            Dimension::Yaw => None,
        }
    }

    pub fn contains(&self, p: &Pose) -> bool {
        Dimension::SEARCHED.iter().all(|d| {
            let [lo, hi] = self.get(*d).unwrap();
            (lo..=hi).contains(&d.get(p))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    /// One entry per sensor, or a single entry applied to every sensor.
    pub bounds: Vec<SensorBounds>,
    /// Initial step per searched dimension (x, y, z, roll, pitch).
    pub initial_step: [f64; 5],
    pub min_step: [f64; 5],
    pub max_iterations: usize,
    pub max_evaluations: usize,
    /// Coarser azimuth sampling used while searching; the result is
    /// re-evaluated at the config's own resolution.
    pub search_azimuth_steps: Option<u32>,
    pub threads: Option<usize>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            bounds: vec![SensorBounds::roof()],
            initial_step: [0.4, 0.4, 0.4, 0.16, 0.16],
            min_step: [0.05, 0.05, 0.05, 0.02, 0.02],
            max_iterations: 50,
            max_evaluations: 2_000,
            search_azimuth_steps: Some(720),
            threads: None,
        }
    }
}

impl SearchSpace {
    pub fn validate(&self, sensors: usize) -> Result<()> {
        if self.bounds.is_empty() || (self.bounds.len() != 1 && self.bounds.len() != sensors) {
            return Err(Error::config(
                "bounds",
                format!("expected 1 or {sensors} entries, got {}", self.bounds.len()),
            ));
        }
        for (i, b) in self.bounds.iter().enumerate() {
            for d in Dimension::SEARCHED {
                let [lo, hi] = b.get(d).unwrap();
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::config(
                        format!("bounds[{i}].{d}"),
                        format!("empty interval [{lo}, {hi}]"),
                    ));
                }
            }
        }
        for k in 0..5 {
            let (s0, s1) = (self.initial_step[k], self.min_step[k]);
            if !(s1 > 0.0 && s0 >= s1 && s0.is_finite()) {
                return Err(Error::config(
                    format!("step.{}", Dimension::SEARCHED[k]),
                    format!("need initial {s0} >= min {s1} > 0"),
                ));
            }
        }
        if self.search_azimuth_steps == Some(0) {
            return Err(Error::config("search_azimuth_steps", "must be >= 1"));
        }
        Ok(())
    }

    pub fn bounds_for(&self, sensor: usize) -> &SensorBounds {
        if self.bounds.len() == 1 {
            &self.bounds[0]
        } else {
            &self.bounds[sensor]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    /// `None` for the initial and final evaluations.
    pub sensor: Option<usize>,
    pub dimension: Option<Dimension>,
    pub label: &'static str,
    pub pose: Option<Pose>,
    pub azimuth_steps: u32,
    pub s_mig: f64,
    pub accepted: bool,
}

pub const TRACE_HEADER: &str =
    "iteration,sensor,dimension,x,y,z,roll,pitch,yaw,azimuth_steps,s_mig,accepted";

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut s = format!("{TRACE_HEADER}\n");
    for r in trace {
        let sensor = r.sensor.map(|v| v.to_string()).unwrap_or_default();
        let dim = r.dimension.map(|d| d.as_str()).unwrap_or(r.label);
        let pose = match &r.pose {
            Some(p) => format!("{},{},{},{},{},{}", p.x, p.y, p.z, p.roll, p.pitch, p.yaw),
            None => ",,,,,".to_string(),
        };
        writeln!(
            s,
            "{},{sensor},{dim},{pose},{},{},{}",
            r.iteration, r.azimuth_steps, r.s_mig, r.accepted
        )
        .unwrap();
    }
    s
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub config: PlacementConfig,
    /// Metrics at the config's own azimuth resolution.
    pub report: MetricsReport,
    pub trace: Vec<TraceRow>,
    pub evaluations: usize,
}

struct Evaluator<'a> {
    pogs: &'a [Pog],
    grid: &'a VoxelGrid,
    opts: CoverageOptions,
}

impl Evaluator<'_> {
    fn report(&self, config: &PlacementConfig) -> Result<MetricsReport> {
        let mask = coverage_with(config, self.grid, self.opts)?;
        MetricsReport::from_mask(&config.name, self.pogs, &mask)
    }
}

fn search_config(c: &PlacementConfig, steps: Option<u32>) -> PlacementConfig {
    match steps {
        Some(n) => c.with_azimuth_steps(n),
        None => c.clone(),
    }
}

/// Maximizes aggregate S-MIG over the mount poses of every sensor.
///
/// Sweeps run sensor-major, dimension-minor, `+step` before `-step`; the
/// first strict improvement is accepted. A sweep with no improvement halves
/// every step (floored at the minimum); a sweep at minimum steps with no
/// improvement terminates. S-MIG of 0 is the global maximum and also stops.
pub fn optimize(
    initial: &PlacementConfig,
    space: &SearchSpace,
    pogs: &[Pog],
    grid: &VoxelGrid,
) -> Result<SearchOutcome> {
    initial.validate()?;
    space.validate(initial.sensors.len())?;
    for p in pogs {
        if p.grid() != grid {
            return Err(Error::Argument("POG grid differs from search grid".into()));
        }
    }
    for (i, s) in initial.sensors.iter().enumerate() {
        if !space.bounds_for(i).contains(&s.mount) {
            return Err(Error::Argument(format!(
                "initial sensor {i} pose {:?} lies outside the search bounds",
                s.mount
            )));
        }
    }
    let eval = Evaluator {
        pogs,
        grid,
        opts: CoverageOptions {
            threads: space.threads,
            ..CoverageOptions::default()
        },
    };
    let search_steps = space.search_azimuth_steps;
    let az_of = |c: &PlacementConfig| c.sensors[0].spec.azimuth_steps;

    let mut current = search_config(initial, search_steps);
    let mut best = eval.report(&current)?.s_mig();
    let mut evaluations = 1usize;
    let mut trace = vec![TraceRow {
        iteration: 0,
        sensor: None,
        dimension: None,
        label: "initial",
        pose: None,
        azimuth_steps: az_of(&current),
        s_mig: best,
        accepted: true,
    }];
    let mut steps = space.initial_step;
    let mut iteration = 0usize;

    'outer: while iteration < space.max_iterations {
        iteration += 1;
        let mut improved = false;
        for sensor in 0..current.sensors.len() {
            let bounds = *space.bounds_for(sensor);
            for (k, dim) in Dimension::SEARCHED.into_iter().enumerate() {
                let [lo, hi] = bounds.get(dim).unwrap();
                for sign in [1.0, -1.0] {
                    let base = dim.get(&current.sensors[sensor].mount);
                    let value = (base + sign * steps[k]).clamp(lo, hi);
                    if value == base {
                        continue;
                    }
                    if evaluations >= space.max_evaluations {
                        break 'outer;
                    }
                    let mut cand = current.clone();
                    dim.set(&mut cand.sensors[sensor].mount, value);
                    let score = eval.report(&cand)?.s_mig();
                    evaluations += 1;
                    let accepted = score > best;
                    trace.push(TraceRow {
                        iteration,
                        sensor: Some(sensor),
                        dimension: Some(dim),
                        label: "",
                        pose: Some(cand.sensors[sensor].mount),
                        azimuth_steps: az_of(&cand),
                        s_mig: score,
                        accepted,
                    });
                    if accepted {
                        current = cand;
                        best = score;
                        improved = true;
                        break;
                    }
                }
            }
        }
        if best >= 0.0 {
            break;
        }
        if !improved {
            if steps.iter().zip(&space.min_step).all(|(s, m)| s <= m) {
                break;
            }
            for (s, m) in steps.iter_mut().zip(&space.min_step) {
                *s = (*s / 2.0).max(*m);
            }
        }
    }

    let mut config = current;
    for (s, orig) in config.sensors.iter_mut().zip(&initial.sensors) {
        s.spec = orig.spec;
    }
    let report = eval.report(&config)?;
    if search_steps.is_some() {
        evaluations += 1;
        trace.push(TraceRow {
            iteration,
            sensor: None,
            dimension: None,
            label: "final",
            pose: None,
            azimuth_steps: az_of(&config),
            s_mig: report.s_mig(),
            accepted: false,
        });
    }
    Ok(SearchOutcome {
        config,
        report,
        trace,
        evaluations,
    })
}

/// `(sensor index, scale)`: the swept value times `scale` is written to that sensor.
pub type SweepTarget = (usize, f64);

/// Evaluates `template` with `dimension` overridden per value on every target sensor.
pub fn grid_sweep(
    template: &PlacementConfig,
    targets: &[SweepTarget],
    dimension: Dimension,
    values: &[f64],
    pogs: &[Pog],
    grid: &VoxelGrid,
    opts: CoverageOptions,
) -> Result<Vec<(f64, MetricsReport)>> {
    if values.is_empty() {
        return Err(Error::Argument("sweep needs at least one value".into()));
    }
    if targets.is_empty() {
        return Err(Error::Argument("sweep needs at least one target sensor".into()));
    }
    if let Some(&(i, _)) = targets.iter().find(|(i, _)| *i >= template.sensors.len()) {
        return Err(Error::Argument(format!(
            "sweep target sensor {i} out of range ({} sensors)",
            template.sensors.len()
        )));
    }
    let eval = Evaluator { pogs, grid, opts };
    values
        .iter()
        .map(|&v| {
            let mut c = template.clone();
            for &(i, scale) in targets {
                dimension.set(&mut c.sensors[i].mount, scale * v);
            }
            Ok((v, eval.report(&c)?))
        })
        .collect()
}

pub fn sweep_csv(dimension: Dimension, rows: &[(f64, MetricsReport)]) -> String {
    let mut s = format!("{dimension},{CSV_HEADER}\n");
    for (v, report) in rows {
        for line in report.csv_rows().lines() {
            writeln!(s, "{v},{line}").unwrap();
        }
    }
    s
}

/// Parses `0:-1,3:1` into sweep targets; a bare index means scale 1.
pub fn parse_targets(s: &str) -> Result<Vec<SweepTarget>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            let (i, scale) = t.split_once(':').unwrap_or((t, "1"));
            let i = i
                .parse::<usize>()
                .map_err(|_| Error::Argument(format!("bad sensor index in {t:?}")))?;
            let scale = scale
                .parse::<f64>()
                .map_err(|_| Error::Argument(format!("bad scale in {t:?}")))?;
            Ok((i, scale))
        })
        .collect()
}
