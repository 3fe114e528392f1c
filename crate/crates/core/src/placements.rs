//! Baseline placement catalog and the plain-text placement file format.
//!
//! ```text
//! # comment
//! name: line
//! handedness: left            # left | right
//! ego_pose: 0 0 0 0 0 0       # optional, x y z roll pitch yaw (internal frame)
//! beams: 16
//! fov_deg: -25 5
//! azimuth_steps: 5625
//! max_range: 100              # optional; omitted = unbounded
//! sensor: 0 -0.6 2.2 0 0      # x y z roll pitch [yaw]
//! ```
//!
//! `beams`, `fov_deg`, `azimuth_steps` and `max_range` may be repeated; each
//! `sensor:` line uses the most recent values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::lidar::{Handedness, LidarSpec, PlacementConfig, SensorMount};

pub const BUILTIN_NAMES: [&str; 8] = [
    "line",
    "center",
    "trapezoid",
    "square",
    "line-roll",
    "pyramid",
    "pyramid-roll",
    "pyramid-pitch",
];

/// (x, y, z, roll, pitch) per sensor, ego frame, left-handed source values.
fn builtin_table(name: &str) -> Option<[[f64; 5]; 4]> {
    const PYRAMID: [[f64; 5]; 4] = [
        [-0.2, -0.6, 2.2, 0.0, 0.0],
        [0.4, 0.0, 2.4, 0.0, 0.0],
        [-0.2, 0.0, 2.6, 0.0, 0.0],
        [-0.2, 0.6, 2.2, 0.0, 0.0],
    ];
    let t = match name {
        "line" => [
            [0.0, -0.6, 2.2, 0.0, 0.0],
            [0.0, -0.4, 2.2, 0.0, 0.0],
            [0.0, 0.4, 2.2, 0.0, 0.0],
            [0.0, 0.6, 2.2, 0.0, 0.0],
        ],
        "center" => [
            [0.0, 0.0, 2.4, 0.0, 0.0],
            [0.0, 0.0, 2.6, 0.0, 0.0],
            [0.0, 0.0, 2.8, 0.0, 0.0],
            [0.0, 0.0, 3.0, 0.0, 0.0],
        ],
        "trapezoid" => [
            [-0.4, 0.2, 2.2, 0.0, 0.0],
            [-0.4, -0.2, 2.2, 0.0, 0.0],
            [0.2, 0.5, 2.2, 0.0, 0.0],
            [0.2, -0.5, 2.2, 0.0, 0.0],
        ],
        "square" => [
            [-0.5, 0.5, 2.2, 0.0, 0.0],
            [-0.5, -0.5, 2.2, 0.0, 0.0],
            [0.5, 0.5, 2.2, 0.0, 0.0],
            [0.5, -0.5, 2.2, 0.0, 0.0],
        ],
        "line-roll" => [
            [0.0, -0.6, 2.2, -0.28, 0.0],
            [0.0, -0.4, 2.2, 0.0, 0.0],
            [0.0, 0.4, 2.2, 0.0, 0.0],
            [0.0, 0.6, 2.2, 0.28, 0.0],
        ],
        "pyramid" => PYRAMID,
        "pyramid-roll" => {
            let mut t = PYRAMID;
            t[0][3] = -0.28;
            t[3][3] = 0.28;
            t
        }
        "pyramid-pitch" => {
            let mut t = PYRAMID;
            t[1][4] = -0.09;
            t
        }
        _ => return None,
    };
    Some(t)
}

/// One of the eight baseline rigs, with the shared default LiDAR spec.
pub fn builtin(name: &str) -> Result<PlacementConfig> {
    let key = name.to_ascii_lowercase();
    let table = builtin_table(&key).ok_or_else(|| {
        Error::Argument(format!(
            "unknown builtin placement {name:?}; valid names: {}",
            BUILTIN_NAMES.join(", ")
        ))
    })?;
    let spec = LidarSpec::default();
    Ok(PlacementConfig {
        name: key,
        sensors: table
            .iter()
            .map(|&[x, y, z, roll, pitch]| SensorMount {
                spec,
                mount: Pose {
                    x,
                    y,
                    z,
                    roll,
                    pitch,
                    yaw: 0.0,
                },
            })
            .collect(),
        ego_pose_in_roi: Pose::identity(),
        source_handedness: Handedness::LeftHanded,
    })
}

pub fn all_builtins() -> Vec<PlacementConfig> {
    BUILTIN_NAMES.iter().map(|n| builtin(n).unwrap()).collect()
}

/// Accepts either a builtin name or a path to a placement file.
pub fn resolve_placement(spec: &str) -> Result<PlacementConfig> {
    if builtin_table(&spec.to_ascii_lowercase()).is_some() {
        builtin(spec)
    } else if Path::new(spec).exists() {
        parse_placement(spec)
    } else {
        Err(Error::Argument(format!(
            "{spec:?} is neither a placement file nor a builtin ({})",
            BUILTIN_NAMES.join(", ")
        )))
    }
}

fn fmt_spec_lines(s: &mut String, spec: &LidarSpec) {
    writeln!(s, "beams: {}", spec.beam_count).unwrap();
    writeln!(s, "fov_deg: {} {}", spec.fov_min_deg, spec.fov_max_deg).unwrap();
    writeln!(s, "azimuth_steps: {}", spec.azimuth_steps).unwrap();
    if let Some(r) = spec.max_range {
        writeln!(s, "max_range: {r}").unwrap();
    }
}

/// Serializes a config; output is byte-stable for a given input.
pub fn format_placement(config: &PlacementConfig) -> String {
    let mut s = String::new();
    writeln!(s, "name: {}", config.name).unwrap();
    writeln!(s, "handedness: {}", config.source_handedness.as_str()).unwrap();
    let e = &config.ego_pose_in_roi;
    if *e != Pose::identity() {
        writeln!(
            s,
            "ego_pose: {} {} {} {} {} {}",
            e.x, e.y, e.z, e.roll, e.pitch, e.yaw
        )
        .unwrap();
    }
    let mut current: Option<LidarSpec> = None;
    for sensor in &config.sensors {
        if current != Some(sensor.spec) {
            // max_range has no "unset" keyword, so a change back to unbounded
            // cannot be expressed after a bounded block
            fmt_spec_lines(&mut s, &sensor.spec);
            current = Some(sensor.spec);
        }
        let m = &sensor.mount;
        if m.yaw == 0.0 {
            writeln!(s, "sensor: {} {} {} {} {}", m.x, m.y, m.z, m.roll, m.pitch).unwrap();
        } else {
            writeln!(
                s,
                "sensor: {} {} {} {} {} {}",
                m.x, m.y, m.z, m.roll, m.pitch, m.yaw
            )
            .unwrap();
        }
    }
    s
}

pub fn write_placement(config: &PlacementConfig, path: impl AsRef<Path>) -> Result<()> {
    config.validate()?;
    let path = path.as_ref();
    let has_unsettable_range = config
        .sensors
        .windows(2)
        .any(|w| w[0].spec.max_range.is_some() && w[1].spec.max_range.is_none());
    if has_unsettable_range {
        return Err(Error::Argument(
            "cannot serialize an unbounded sensor after a range-limited one; reorder sensors"
                .into(),
        ));
    }
    fs::write(path, format_placement(config)).map_err(|e| Error::io(path, e))
}

pub fn parse_placement(path: impl AsRef<Path>) -> Result<PlacementConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_placement_str(&text, path)
}

fn parse_nums(path: &Path, line: usize, key: &str, value: &str, min: usize, max: usize) -> Result<Vec<f64>> {
    let nums: Vec<f64> = value
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::parse(path, line, format!("malformed number {t:?} in `{key}`")))
        })
        .collect::<Result<_>>()?;
    if nums.len() < min || nums.len() > max {
        let want = if min == max {
            format!("{min}")
        } else {
            format!("{min}-{max}")
        };
        return Err(Error::parse(
            path,
            line,
            format!("`{key}` expects {want} values, got {}", nums.len()),
        ));
    }
    if let Some(v) = nums.iter().find(|v| !v.is_finite()) {
        return Err(Error::parse(path, line, format!("non-finite value {v} in `{key}`")));
    }
    Ok(nums)
}

fn parse_uint(path: &Path, line: usize, key: &str, value: &str) -> Result<u32> {
    value
        .trim()
        .parse::<u32>()
        .map_err(|_| Error::parse(path, line, format!("`{key}` expects a non-negative integer, got {value:?}")))
}

/// Parses placement text; `path` is used only for error messages.
pub fn parse_placement_str(text: &str, path: &Path) -> Result<PlacementConfig> {
    let mut name: Option<String> = None;
    let mut handedness: Option<Handedness> = None;
    let mut ego = Pose::identity();
    let mut beams: Option<u32> = None;
    let mut fov: Option<(f64, f64)> = None;
    let mut azimuth: Option<u32> = None;
    let mut max_range: Option<f64> = None;
    let mut sensors = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| Error::parse(path, line_no, format!("expected `key: value`, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "name" => {
                if value.is_empty() {
                    return Err(Error::parse(path, line_no, "empty name"));
                }
                name = Some(value.to_string());
            }
            "handedness" => {
                handedness = Some(match value.to_ascii_lowercase().as_str() {
                    "left" | "lefthanded" | "left-handed" => Handedness::LeftHanded,
                    "right" | "righthanded" | "right-handed" => Handedness::RightHanded,
                    other => {
                        return Err(Error::parse(
                            path,
                            line_no,
                            format!("handedness must be `left` or `right`, got {other:?}"),
                        ))
                    }
                })
            }
            "ego_pose" => {
                let v = parse_nums(path, line_no, key, value, 6, 6)?;
                ego = Pose::new(v[0], v[1], v[2], v[3], v[4], v[5])
                    .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
            }
            "beams" => beams = Some(parse_uint(path, line_no, key, value)?),
            "fov_deg" => {
                let v = parse_nums(path, line_no, key, value, 2, 2)?;
                fov = Some((v[0], v[1]));
            }
            "azimuth_steps" => azimuth = Some(parse_uint(path, line_no, key, value)?),
            "max_range" => max_range = Some(parse_nums(path, line_no, key, value, 1, 1)?[0]),
            "sensor" => {
                let missing = [
                    ("beams", beams.is_none()),
                    ("fov_deg", fov.is_none()),
                    ("azimuth_steps", azimuth.is_none()),
                ]
                .into_iter()
                .find(|(_, m)| *m);
                if let Some((field, _)) = missing {
                    return Err(Error::parse(
                        path,
                        line_no,
                        format!("missing `{field}` before first sensor"),
                    ));
                }
                let v = parse_nums(path, line_no, key, value, 5, 6)?;
                let (fov_min_deg, fov_max_deg) = fov.unwrap();
                let spec = LidarSpec {
                    beam_count: beams.unwrap(),
                    fov_min_deg,
                    fov_max_deg,
                    azimuth_steps: azimuth.unwrap(),
                    max_range,
                };
                spec.validate()
                    .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
                let mount = Pose::new(v[0], v[1], v[2], v[3], v[4], v.get(5).copied().unwrap_or(0.0))
                    .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
                sensors.push((line_no, SensorMount { spec, mount }));
            }
            other => {
                return Err(Error::parse(path, line_no, format!("unknown key {other:?}")));
            }
        }
    }

    let name = name.ok_or_else(|| Error::parse(path, 0, "missing `name`"))?;
    let handedness = handedness.ok_or_else(|| Error::parse(path, 0, "missing `handedness`"))?;
    if sensors.is_empty() {
        return Err(Error::parse(path, 0, "no `sensor` lines"));
    }
    let (lo, hi) = crate::lidar::MOUNT_Z_RANGE;
    for (line_no, s) in &sensors {
        if !(lo..=hi).contains(&s.mount.z) {
            return Err(Error::Validation(format!(
                "{}:{line_no}: mount z {} outside roof bound [{lo}, {hi}] m",
                path.display(),
                s.mount.z
            )));
        }
    }
    let config = PlacementConfig {
        name,
        sensors: sensors.into_iter().map(|(_, s)| s).collect(),
        ego_pose_in_roi: ego,
        source_handedness: handedness,
    };
    config.validate()?;
    Ok(config)
}
