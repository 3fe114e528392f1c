//! Correlation between externally measured detection metrics and S-MIG.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::metrics::{CompensatedSum, TOTAL_CLASS};

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct DetectionRow {
    pub placement: String,
    pub detector: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub placement: String,
    pub detector: String,
    pub metric: String,
    pub s_mig: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupResult {
    pub metric: String,
    pub detector: String,
    pub n: usize,
    /// `None` when either variable has zero variance.
    pub pearson_r: Option<f64>,
    pub spearman_rho: Option<f64>,
}

impl GroupResult {
    pub fn is_undefined(&self) -> bool {
        self.pearson_r.is_none() || self.spearman_rho.is_none()
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::parse(path, line, format!("{kind:?}")),
    }
}

pub fn read_detection_csv(path: &Path) -> Result<Vec<DetectionRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    for want in ["placement", "detector", "metric", "value"] {
        if !headers.iter().any(|h| h == want) {
            return Err(Error::parse(path, 1, format!("missing column {want:?}")));
        }
    }
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<DetectionRow>() {
        let row = rec.map_err(|e| csv_err(path, e))?;
        if !row.value.is_finite() {
            return Err(Error::parse(path, rows.len() + 2, "non-finite metric value"));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Deserialize)]
struct ReportRecord {
    config: String,
    class: String,
    s_mig: f64,
}

/// Reads aggregate (`total`) S-MIG per config from a metrics report CSV.
pub fn read_report_s_mig(path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out = BTreeMap::new();
    for rec in rdr.deserialize::<ReportRecord>() {
        let r = rec.map_err(|e| csv_err(path, e))?;
        if r.class == TOTAL_CLASS && out.insert(r.config.clone(), r.s_mig).is_some() {
            return Err(Error::Validation(format!(
                "{}: config {:?} has more than one total row",
                path.display(),
                r.config
            )));
        }
    }
    Ok(out)
}

pub fn join(detections: &[DetectionRow], s_mig: &BTreeMap<String, f64>) -> Result<Vec<CorrelationRow>> {
    detections
        .iter()
        .map(|d| {
            let s = s_mig.get(&d.placement).ok_or_else(|| {
                Error::Validation(format!("no S-MIG for placement {:?}", d.placement))
            })?;
            Ok(CorrelationRow {
                placement: d.placement.clone(),
                detector: d.detector.clone(),
                metric: d.metric.clone(),
                s_mig: *s,
                value: d.value,
            })
        })
        .collect()
}

fn all_equal(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

fn mean(v: &[f64]) -> f64 {
    v.iter().copied().collect::<CompensatedSum>().value() / v.len() as f64
}

/// Product-moment correlation; `None` on zero variance or fewer than two points.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 || all_equal(x) || all_equal(y) {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = CompensatedSum::default();
    let mut sxx = CompensatedSum::default();
    let mut syy = CompensatedSum::default();
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    let r = sxy.value() / (sxx.value() * syy.value()).sqrt();
    Some(r.clamp(-1.0, 1.0))
}

/// 1-based ranks with ties given their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Groups rows by (metric, detector) and computes both coefficients per group.
pub fn correlate(rows: &[CorrelationRow]) -> Result<Vec<GroupResult>> {
    let mut groups: BTreeMap<(&str, &str), Vec<&CorrelationRow>> = BTreeMap::new();
    for r in rows {
        if !(r.s_mig.is_finite() && r.value.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value for placement {:?}",
                r.placement
            )));
        }
        groups.entry((&r.metric, &r.detector)).or_default().push(r);
    }
    if groups.is_empty() {
        return Err(Error::Validation("no correlation rows".into()));
    }
    groups
        .into_iter()
        .map(|((metric, detector), mut g)| {
            if g.len() < 3 {
                return Err(Error::Validation(format!(
                    "group ({metric}, {detector}) has {} rows, need at least 3",
                    g.len()
                )));
            }
            g.sort_by(|a, b| a.placement.cmp(&b.placement));
            if let Some(w) = g.windows(2).find(|w| w[0].placement == w[1].placement) {
                return Err(Error::Validation(format!(
                    "placement {:?} repeated in group ({metric}, {detector})",
                    w[0].placement
                )));
            }
            let x: Vec<f64> = g.iter().map(|r| r.s_mig).collect();
            let y: Vec<f64> = g.iter().map(|r| r.value).collect();
            Ok(GroupResult {
                metric: metric.to_string(),
                detector: detector.to_string(),
                n: g.len(),
                pearson_r: pearson(&x, &y),
                spearman_rho: spearman(&x, &y),
            })
        })
        .collect()
}

pub const COEFFICIENTS_HEADER: &str = "metric,detector,n,pearson_r,spearman_rho,flag";

pub fn coefficients_csv(results: &[GroupResult]) -> String {
    let fmt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |r| r.to_string());
    let mut s = format!("{COEFFICIENTS_HEADER}\n");
    for r in results {
        let flag = if r.is_undefined() { "zero_variance" } else { "" };
        writeln!(
            s,
            "{},{},{},{},{},{flag}",
            r.metric,
            r.detector,
            r.n,
            fmt(r.pearson_r),
            fmt(r.spearman_rho)
        )
        .unwrap();
    }
    s
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn span(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    });
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    }
}

/// Static SVG scatter of one metric: S-MIG on x, metric on y, one series per detector.
pub fn scatter_svg(rows: &[CorrelationRow], metric: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const L: f64 = 80.0;
    const R: f64 = 160.0;
    const T: f64 = 40.0;
    const B: f64 = 60.0;
    let mut pts: Vec<&CorrelationRow> = rows.iter().filter(|r| r.metric == metric).collect();
    pts.sort_by(|a, b| (&a.detector, &a.placement).cmp(&(&b.detector, &b.placement)));
    let detectors: BTreeSet<&str> = pts.iter().map(|r| r.detector.as_str()).collect();
    let (x0, x1) = span(pts.iter().map(|r| r.s_mig));
    let (y0, y1) = span(pts.iter().map(|r| r.value));
    let px = |x: f64| L + (x - x0) / (x1 - x0) * (W - L - R);
    let py = |y: f64| H - B - (y - y0) / (y1 - y0) * (H - T - B);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        (L + W - R) / 2.0,
        escape(metric)
    )
    .unwrap();
    writeln!(
        s,
        r#"<path d="M{L} {T} V{} H{}" fill="none" stroke="black"/>"#,
        H - B,
        W - R
    )
    .unwrap();
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{:.4}</text>"#,
            px(xv),
            H - B + 18.0,
            xv
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end" dominant-baseline="middle">{:.4}</text>"#,
            L - 6.0,
            py(yv),
            yv
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">S-MIG (nats)</text>"#,
        (L + W - R) / 2.0,
        H - 16.0
    )
    .unwrap();
    for (i, det) in detectors.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        writeln!(s, r#"<g fill="{color}">"#).unwrap();
        for r in pts.iter().filter(|r| r.detector == *det) {
            writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4"><title>{}</title></circle>"#,
                px(r.s_mig),
                py(r.value),
                escape(&r.placement)
            )
            .unwrap();
        }
        let ly = T + 20.0 * i as f64;
        writeln!(
            s,
            r#"<circle cx="{}" cy="{ly}" r="4"/><text x="{}" y="{ly}" fill="black" dominant-baseline="middle">{}</text></g>"#,
            W - R + 20.0,
            W - R + 30.0,
            escape(det)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

pub fn metric_names(rows: &[CorrelationRow]) -> Vec<String> {
    let set: BTreeSet<&str> = rows.iter().map(|r| r.metric.as_str()).collect();
    set.into_iter().map(str::to_string).collect()
}
