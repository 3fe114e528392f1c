//! Synthetic box datasets and label file I/O.
//!
//! The generator places objects in longitudinal lane bands resting on a
//! ground plane. Every draw comes from a ChaCha stream keyed by
//! `(seed, frame, object)`, so frames are independent and generation is a
//! pure function of the parameters.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    normalize_angle, transform_frame, ClassLabel, Dataset, LabelFrame, OrientedBox, Pose, RoiSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Density {
    Sparse,
    Medium,
    Dense,
    /// Explicit expected objects per frame.
    Explicit(f64),
}

impl Density {
    pub fn expected_per_frame(&self) -> f64 {
        match *self {
            Density::Sparse => 4.0,
            Density::Medium => 8.0,
            Density::Dense => 12.0,
            Density::Explicit(v) => v,
        }
    }
}

impl std::str::FromStr for Density {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sparse" => Ok(Density::Sparse),
            "medium" => Ok(Density::Medium),
            "dense" => Ok(Density::Dense),
            other => other
                .parse::<f64>()
                .map(Density::Explicit)
                .map_err(|_| Error::Argument(format!("density must be sparse, medium, dense or a number, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassShare {
    pub class: ClassLabel,
    pub fraction: f64,
}

/// One mode of a class size distribution: each of (length, width, height)
/// is drawn uniformly within `mean · (1 ± spread)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeMode {
    pub weight: f64,
    pub mean: [f64; 3],
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSizes {
    pub class: ClassLabel,
    pub modes: Vec<SizeMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    pub frame_count: usize,
    pub density: Density,
    pub class_mix: Vec<ClassShare>,
    pub sizes: Vec<ClassSizes>,
    /// Lateral centers of the lane bands (m, internal frame).
    pub lane_offsets: Vec<f64>,
    pub lane_sigma: f64,
    /// Share of objects placed uniformly over the region instead of in a lane.
    pub uniform_fraction: f64,
    /// z of the ground plane; box bottoms rest on it.
    pub ground_z: f64,
    pub yaw_jitter: f64,
    /// Region containing every box center.
    pub region: RoiSpec,
    pub seed: u64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            frame_count: 1000,
            density: Density::Medium,
            class_mix: vec![
                ClassShare {
                    class: ClassLabel::Car,
                    fraction: 0.85,
                },
                ClassShare {
                    class: ClassLabel::VanCyclist,
                    fraction: 0.15,
                },
            ],
            sizes: default_sizes(),
            lane_offsets: vec![-7.0, -3.5, 0.0, 3.5, 7.0],
            lane_sigma: 0.3,
            uniform_fraction: 0.1,
            ground_z: -1.0,
            yaw_jitter: 0.05,
            region: RoiSpec::front_half(crate::geometry::DEFAULT_DELTA).expect("valid default ROI"),
            seed: 0,
        }
    }
}

pub fn default_sizes() -> Vec<ClassSizes> {
    let mode = |weight, mean| SizeMode {
        weight,
        mean,
        spread: 0.1,
    };
    vec![
        ClassSizes {
            class: ClassLabel::Car,
            modes: vec![mode(1.0, [4.5, 1.9, 1.6])],
        },
        ClassSizes {
            class: ClassLabel::VanCyclist,
            modes: vec![mode(0.9, [1.8, 0.6, 1.7]), mode(0.1, [5.2, 2.4, 2.6])],
        },
        ClassSizes {
            class: ClassLabel::Pedestrian,
            modes: vec![mode(1.0, [0.8, 0.6, 1.75])],
        },
        ClassSizes {
            class: ClassLabel::Other,
            modes: vec![mode(1.0, [4.0, 2.0, 2.0])],
        },
    ]
}

impl ScenarioParams {
    pub fn with_density(mut self, density: Density) -> Self {
        self.density = density;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_count < 1 {
            return Err(Error::config("frame_count", "must be >= 1"));
        }
        let lambda = self.density.expected_per_frame();
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::config("density", format!("expected count {lambda} must be >= 0")));
        }
        if self.class_mix.is_empty() {
            return Err(Error::config("class_mix", "empty"));
        }
        let total: f64 = self.class_mix.iter().map(|c| c.fraction).sum();
        if self.class_mix.iter().any(|c| !(c.fraction >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "class_mix",
                format!("fractions must be non-negative and sum to 1, got {total}"),
            ));
        }
        self.region.validate()?;
        if !(self.region.z_min..self.region.z_max).contains(&self.ground_z) {
            return Err(Error::config("ground_z", "must lie inside the region's z range"));
        }
        for share in &self.class_mix {
            let sizes = self.sizes_for(share.class).ok_or_else(|| {
                Error::config("sizes", format!("no size distribution for {}", share.class))
            })?;
            if sizes.modes.is_empty() || sizes.modes.iter().all(|m| m.weight <= 0.0) {
                return Err(Error::config("sizes", format!("{} has no positive-weight mode", share.class)));
            }
            for m in &sizes.modes {
                if m.weight < 0.0 || m.mean.iter().any(|&v| !(v > 0.0)) || !(0.0..1.0).contains(&m.spread) {
                    return Err(Error::config(
                        "sizes",
                        format!("{}: means must be > 0, weights >= 0, spread in [0, 1)", share.class),
                    ));
                }
                let top = self.ground_z + m.mean[2] * (1.0 + m.spread) / 2.0;
                if top >= self.region.z_max {
                    return Err(Error::config(
                        "ground_z",
                        format!("{} box centers would rise above the region", share.class),
                    ));
                }
            }
        }
        if !(self.lane_sigma >= 0.0) || !(0.0..=1.0).contains(&self.uniform_fraction) {
            return Err(Error::config("lane_sigma", "lane_sigma >= 0 and uniform_fraction in [0, 1] required"));
        }
        if self.lane_offsets.is_empty() && self.uniform_fraction < 1.0 {
            return Err(Error::config("lane_offsets", "no lanes and uniform_fraction < 1"));
        }
        if !(self.yaw_jitter >= 0.0) {
            return Err(Error::config("yaw_jitter", "must be >= 0"));
        }
        Ok(())
    }

    fn sizes_for(&self, class: ClassLabel) -> Option<&ClassSizes> {
        self.sizes.iter().find(|s| s.class == class)
    }
}

const COUNT_STREAM: u64 = u64::MAX;

fn keyed_rng(seed: u64, frame: u64, object: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&frame.to_le_bytes());
    key[16..24].copy_from_slice(&object.to_le_bytes());
    key[24..].copy_from_slice(b"lanebox1");
    ChaCha8Rng::from_seed(key)
}

fn pick_weighted<T>(rng: &mut ChaCha8Rng, items: &[T], weight: impl Fn(&T) -> f64) -> usize {
    let total: f64 = items.iter().map(&weight).sum();
    let mut u = rng.random::<f64>() * total;
    for (i, it) in items.iter().enumerate() {
        let w = weight(it);
        if u < w {
            return i;
        }
        u -= w;
    }
    items.iter().rposition(|it| weight(it) > 0.0).unwrap_or(0)
}

fn generate_object(p: &ScenarioParams, frame: u64, object: u64) -> OrientedBox {
    let mut rng = keyed_rng(p.seed, frame, object);
    let class = p.class_mix[pick_weighted(&mut rng, &p.class_mix, |c| c.fraction)].class;
    let sizes = p.sizes_for(class).expect("validated");
    let mode = &sizes.modes[pick_weighted(&mut rng, &sizes.modes, |m| m.weight)];
    let mut size = [0.0; 3];
    for (s, &m) in size.iter_mut().zip(&mode.mean) {
        *s = m * (1.0 + mode.spread * rng.random_range(-1.0..=1.0));
    }
    let r = &p.region;
    let x = rng.random_range(r.x_min..r.x_max);
    let (y, base_yaw) = if p.lane_offsets.is_empty() || rng.random::<f64>() < p.uniform_fraction {
        (
            rng.random_range(r.y_min..r.y_max),
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        )
    } else {
        let lane = p.lane_offsets[rng.random_range(0..p.lane_offsets.len())];
        let jitter = if p.lane_sigma > 0.0 {
            Normal::new(0.0, p.lane_sigma).unwrap().sample(&mut rng)
        } else {
            0.0
        };
        // left lanes carry oncoming traffic
        let yaw = if lane > 0.0 { std::f64::consts::PI } else { 0.0 };
        (lane + jitter, yaw)
    };
    let y = y.clamp(r.y_min, r.y_max - 1e-9);
    let yaw_noise = if p.yaw_jitter > 0.0 {
        Normal::new(0.0, p.yaw_jitter).unwrap().sample(&mut rng)
    } else {
        0.0
    };
    OrientedBox {
        center: [x, y, p.ground_z + size[2] / 2.0],
        size,
        yaw: normalize_angle(base_yaw + yaw_noise),
        class_label: class,
    }
}

fn generate_frame(p: &ScenarioParams, frame: u64) -> LabelFrame {
    let lambda = p.density.expected_per_frame();
    let count = if lambda > 0.0 {
        let mut rng = keyed_rng(p.seed, frame, COUNT_STREAM);
        Poisson::new(lambda).unwrap().sample(&mut rng) as u64
    } else {
        0
    };
    LabelFrame {
        frame_id: format!("{frame:06}"),
        boxes: (0..count).map(|o| generate_object(p, frame, o)).collect(),
    }
}

pub fn generate(params: &ScenarioParams) -> Result<Dataset> {
    params.validate()?;
    let frames: Vec<LabelFrame> = (0..params.frame_count as u64)
        .into_par_iter()
        .map(|f| generate_frame(params, f))
        .collect();
    Dataset::new(frames)
}

fn format_box(b: &OrientedBox) -> String {
    format!(
        "{} {} {} {} {} {} {} {}\n",
        b.class_label, b.center[0], b.center[1], b.center[2], b.size[0], b.size[1], b.size[2], b.yaw
    )
}

/// Writes `dir/labels/<frame_id>.txt`, one `class cx cy cz l w h yaw` line per box.
pub fn export_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<()> {
    let labels = dir.as_ref().join("labels");
    fs::create_dir_all(&labels).map_err(|e| Error::io(&labels, e))?;
    for f in dataset.frames() {
        let path = labels.join(format!("{}.txt", f.frame_id));
        let body: String = f.boxes.iter().map(format_box).collect();
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn label_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let labels = dir.join("labels");
    let root = if labels.is_dir() { labels } else { dir.to_path_buf() };
    let mut files: Vec<PathBuf> = fs::read_dir(&root)
        .map_err(|e| Error::io(&root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    Ok(files)
}

fn frame_id(path: &Path) -> String {
    path.file_stem().unwrap_or_default().to_string_lossy().into_owned()
}

fn parse_fields(path: &Path, line: usize, tokens: &[&str]) -> Result<Vec<f64>> {
    tokens
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(path, line, format!("malformed number {t:?}")))
        })
        .collect()
}

pub fn parse_native_line(path: &Path, line: usize, text: &str) -> Result<OrientedBox> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.len() != 8 {
        return Err(Error::parse(
            path,
            line,
            format!("expected 8 fields `class cx cy cz length width height yaw`, got {}", tokens.len()),
        ));
    }
    let class: ClassLabel = tokens[0]
        .parse()
        .map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
    let v = parse_fields(path, line, &tokens[1..])?;
    OrientedBox::new([v[0], v[1], v[2]], [v[3], v[4], v[5]], v[6], class)
        .map_err(|e| Error::parse(path, line, e.to_string()))
}

/// Reads a directory written by [`export_dataset`] (or a flat directory of label files).
pub fn import_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let mut frames = Vec::new();
    for path in label_files(dir.as_ref())? {
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let boxes = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| parse_native_line(&path, i + 1, l))
            .collect::<Result<Vec<_>>>()?;
        frames.push(LabelFrame::new(frame_id(&path), boxes)?);
    }
    Dataset::new(frames)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnknownTypePolicy {
    Skip,
    #[default]
    Fail,
}

#[derive(Debug, Clone)]
pub struct KittiOptions {
    /// KITTI type string to class; `None` drops the object.
    pub table: Vec<(String, Option<ClassLabel>)>,
    pub unknown: UnknownTypePolicy,
    /// Applied to every box after parsing, for labels not already in the ego frame.
    pub pose: Option<Pose>,
}

impl Default for KittiOptions {
    fn default() -> Self {
        let map = |s: &str, c| (s.to_string(), c);
        KittiOptions {
            table: vec![
                map("Car", Some(ClassLabel::Car)),
                map("Van", Some(ClassLabel::VanCyclist)),
                map("Truck", Some(ClassLabel::VanCyclist)),
                map("Cyclist", Some(ClassLabel::VanCyclist)),
                map("Pedestrian", Some(ClassLabel::Pedestrian)),
                map("Person_sitting", Some(ClassLabel::Pedestrian)),
                map("Tram", Some(ClassLabel::Other)),
                map("Misc", Some(ClassLabel::Other)),
                map("DontCare", None),
            ],
            unknown: UnknownTypePolicy::Fail,
            pose: None,
        }
    }
}

/// Parses one KITTI label line; `Ok(None)` for skipped types.
pub fn parse_kitti_line(
    path: &Path,
    line: usize,
    text: &str,
    opts: &KittiOptions,
) -> Result<Option<OrientedBox>> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.len() != 15 && tokens.len() != 16 {
        return Err(Error::parse(
            path,
            line,
            format!("expected 15 or 16 KITTI fields, got {}", tokens.len()),
        ));
    }
    let class = match opts.table.iter().find(|(k, _)| k == tokens[0]) {
        Some((_, c)) => *c,
        None => match opts.unknown {
            UnknownTypePolicy::Skip => None,
            UnknownTypePolicy::Fail => {
                return Err(Error::parse(path, line, format!("unknown object type {:?}", tokens[0])))
            }
        },
    };
    let v = parse_fields(path, line, &tokens[1..])?;
    let Some(class) = class else {
        return Ok(None);
    };
    // v: trunc occ alpha bbox(4) h w l x y z ry
    let (h, w, l) = (v[7], v[8], v[9]);
    let (x, y, z) = (v[10], v[11], v[12]);
    let b = OrientedBox::new([x, y, z + h / 2.0], [l, w, h], v[13], class)
        .map_err(|e| Error::parse(path, line, e.to_string()))?;
    match &opts.pose {
        Some(p) => transform_frame(&b, p)
            .map(Some)
            .map_err(|e| Error::parse(path, line, e.to_string())),
        None => Ok(Some(b)),
    }
}

/// Reads a directory of KITTI label files; location is the box bottom center.
pub fn import_kitti_labels(dir: impl AsRef<Path>, opts: &KittiOptions) -> Result<Dataset> {
    let mut frames = Vec::new();
    for path in label_files(dir.as_ref())? {
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut boxes = Vec::new();
        for (i, l) in text.lines().enumerate() {
            if l.trim().is_empty() {
                continue;
            }
            if let Some(b) = parse_kitti_line(&path, i + 1, l, opts)? {
                boxes.push(b);
            }
        }
        frames.push(LabelFrame::new(frame_id(&path), boxes)?);
    }
    Dataset::new(frames)
}
