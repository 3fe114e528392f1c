//! Poses, oriented boxes and the voxelized region of interest.
//!
//! Internal frame convention: right-handed, x forward, y left, z up.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];

/// Maps an angle into `[-π, π]`. Angles already in range are returned bit-for-bit.
pub fn normalize_angle(a: f64) -> f64 {
    if (-PI..=PI).contains(&a) {
        return a;
    }
    let two_pi = 2.0 * PI;
    let mut r = a - two_pi * (a / two_pi).round();
    if r > PI {
        r -= two_pi;
    } else if r < -PI {
        r += two_pi;
    }
    r
}

/// Row-major 3x3 rotation matrix.
pub type Mat3 = [[f64; 3]; 3];

pub fn mat_vec(m: &Mat3, v: Point3) -> Point3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub const fn identity() -> Self {
        Pose {
            x: 0.0,
            y: 0.0,
            z: 0.0,
            roll: 0.0,
            pitch: 0.0,
            yaw: 0.0,
        }
    }

    /// Validating constructor; angles are normalized into `[-π, π]`.
    pub fn new(x: f64, y: f64, z: f64, roll: f64, pitch: f64, yaw: f64) -> Result<Self> {
        for (name, v) in [
            ("x", x),
            ("y", y),
            ("z", z),
            ("roll", roll),
            ("pitch", pitch),
            ("yaw", yaw),
        ] {
            if !v.is_finite() {
                return Err(Error::config(name, format!("non-finite value {v}")));
            }
        }
        Ok(Pose {
            x,
            y,
            z,
            roll: normalize_angle(roll),
            pitch: normalize_angle(pitch),
            yaw: normalize_angle(yaw),
        })
    }

    pub fn translation(x: f64, y: f64, z: f64) -> Self {
        Pose {
            x,
            y,
            z,
            ..Pose::identity()
        }
    }

    pub fn position(&self) -> Point3 {
        [self.x, self.y, self.z]
    }

    /// Intrinsic Z-Y-X rotation: `Rz(yaw) · Ry(pitch) · Rx(roll)`.
    pub fn rotation(&self) -> Mat3 {
        let (sr, cr) = self.roll.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        let (sy, cy) = self.yaw.sin_cos();
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    }

    /// Maps a point expressed in this pose's local frame into the parent frame.
    pub fn apply_point(&self, p: Point3) -> Point3 {
        let r = mat_vec(&self.rotation(), p);
        [r[0] + self.x, r[1] + self.y, r[2] + self.z]
    }

    pub fn apply_vector(&self, v: Point3) -> Point3 {
        mat_vec(&self.rotation(), v)
    }
}

/// Axis-aligned region of interest and its voxel edge length `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub delta: f64,
}

pub const DEFAULT_DELTA: f64 = 0.2;

impl RoiSpec {
    pub fn new(
        [x_min, y_min, z_min]: Point3,
        [x_max, y_max, z_max]: Point3,
        delta: f64,
    ) -> Result<Self> {
        let roi = RoiSpec {
            x_min,
            x_max,
            y_min,
            y_max,
            z_min,
            z_max,
            delta,
        };
        roi.validate()?;
        Ok(roi)
    }

    /// Ego-frame front half `[0,40]×[-20,20]×[-3,1]` m.
    pub fn front_half(delta: f64) -> Result<Self> {
        Self::new([0.0, -20.0, -3.0], [40.0, 20.0, 1.0], delta)
    }

    /// Full 80×40×4 m ROI in the ROI frame; the ego sits at `(40, 20, 0)`.
    pub fn full(delta: f64) -> Result<Self> {
        Self::new([0.0, 0.0, -3.0], [80.0, 40.0, 1.0], delta)
    }

    /// Parses `x_min,y_min,z_min,x_max,y_max,z_max`.
    pub fn from_bounds_str(s: &str, delta: f64) -> Result<Self> {
        let vals: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::config("roi", format!("{s:?}: {e}")))?;
        if vals.len() != 6 {
            return Err(Error::config(
                "roi",
                format!("expected 6 comma-separated values, got {}", vals.len()),
            ));
        }
        Self::new([vals[0], vals[1], vals[2]], [vals[3], vals[4], vals[5]], delta)
    }

    pub fn min(&self) -> Point3 {
        [self.x_min, self.y_min, self.z_min]
    }

    pub fn max(&self) -> Point3 {
        [self.x_max, self.y_max, self.z_max]
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("x_min", self.x_min),
            ("x_max", self.x_max),
            ("y_min", self.y_min),
            ("y_max", self.y_max),
            ("z_min", self.z_min),
            ("z_max", self.z_max),
            ("delta", self.delta),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::config(name, format!("non-finite value {v}")));
            }
        }
        if self.delta <= 0.0 {
            return Err(Error::config("delta", format!("must be > 0, got {}", self.delta)));
        }
        for (axis, lo, hi) in [
            ("x", self.x_min, self.x_max),
            ("y", self.y_min, self.y_max),
            ("z", self.z_min, self.z_max),
        ] {
            if hi <= lo {
                return Err(Error::config(
                    format!("{axis}_max"),
                    format!("{hi} must exceed {axis}_min {lo}"),
                ));
            }
            let cells = (hi - lo) / self.delta;
            if (cells - cells.round()).abs() > 1e-9 * cells.max(1.0) || cells.round() < 1.0 {
                return Err(Error::config(
                    format!("{axis}_max"),
                    format!(
                        "extent {} is not an integer multiple of delta {}",
                        hi - lo,
                        self.delta
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Dense voxelization of a [`RoiSpec`]. Linear index is x-fastest:
/// `ix + nx * (iy + ny * iz)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid {
    pub roi: RoiSpec,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

pub fn build_grid(roi: RoiSpec) -> Result<VoxelGrid> {
    roi.validate()?;
    let cells = |lo: f64, hi: f64| ((hi - lo) / roi.delta).round() as usize;
    Ok(VoxelGrid {
        roi,
        nx: cells(roi.x_min, roi.x_max),
        ny: cells(roi.y_min, roi.y_max),
        nz: cells(roi.z_min, roi.z_max),
    })
}

impl VoxelGrid {
    /// Total voxel count `M`.
    pub fn len(&self) -> u64 {
        self.nx as u64 * self.ny as u64 * self.nz as u64
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn delta(&self) -> f64 {
        self.roi.delta
    }

    pub fn contains_cell(&self, [ix, iy, iz]: [i64; 3]) -> bool {
        ix >= 0
            && iy >= 0
            && iz >= 0
            && (ix as usize) < self.nx
            && (iy as usize) < self.ny
            && (iz as usize) < self.nz
    }

    /// Linear index of an in-range cell.
    #[inline]
    pub fn linear(&self, ix: usize, iy: usize, iz: usize) -> u64 {
        ix as u64 + self.nx as u64 * (iy as u64 + self.ny as u64 * iz as u64)
    }

    pub fn index_of(&self, cell: [i64; 3]) -> Option<u64> {
        self.contains_cell(cell)
            .then(|| self.linear(cell[0] as usize, cell[1] as usize, cell[2] as usize))
    }

    pub fn cell(&self, index: u64) -> Result<[usize; 3]> {
        if index >= self.len() {
            return Err(Error::Bounds {
                index,
                len: self.len(),
            });
        }
        let nx = self.nx as u64;
        let ny = self.ny as u64;
        Ok([
            (index % nx) as usize,
            ((index / nx) % ny) as usize,
            (index / (nx * ny)) as usize,
        ])
    }

    /// Center coordinate of cell `i` along `axis`.
    #[inline]
    pub fn axis_center(&self, axis: usize, i: usize) -> f64 {
        self.roi.min()[axis] + (i as f64 + 0.5) * self.roi.delta
    }

    pub fn cell_center(&self, [ix, iy, iz]: [usize; 3]) -> Point3 {
        [
            self.axis_center(0, ix),
            self.axis_center(1, iy),
            self.axis_center(2, iz),
        ]
    }

    pub fn voxel_center(&self, index: u64) -> Result<Point3> {
        Ok(self.cell_center(self.cell(index)?))
    }

    /// Integer cell coordinates of a point (may lie outside the grid).
    pub fn cell_of_point(&self, p: Point3) -> [i64; 3] {
        let min = self.roi.min();
        let d = self.roi.delta;
        [
            ((p[0] - min[0]) / d).floor() as i64,
            ((p[1] - min[1]) / d).floor() as i64,
            ((p[2] - min[2]) / d).floor() as i64,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    Car,
    VanCyclist,
    Pedestrian,
    Other,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 4] = [
        ClassLabel::Car,
        ClassLabel::VanCyclist,
        ClassLabel::Pedestrian,
        ClassLabel::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassLabel::Car => "Car",
            ClassLabel::VanCyclist => "VanCyclist",
            ClassLabel::Pedestrian => "Pedestrian",
            ClassLabel::Other => "Other",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "car" => Ok(ClassLabel::Car),
            "vancyclist" => Ok(ClassLabel::VanCyclist),
            "pedestrian" => Ok(ClassLabel::Pedestrian),
            "other" => Ok(ClassLabel::Other),
            _ => Err(Error::Argument(format!(
                "unknown class label {s:?} (expected Car, VanCyclist, Pedestrian or Other)"
            ))),
        }
    }
}

/// A yaw-only 3D bounding box. `size` is (length, width, height).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Point3,
    pub size: Point3,
    pub yaw: f64,
    pub class_label: ClassLabel,
}

impl OrientedBox {
    pub fn new(center: Point3, size: Point3, yaw: f64, class_label: ClassLabel) -> Result<Self> {
        if center.iter().chain(&size).any(|v| !v.is_finite()) || !yaw.is_finite() {
            return Err(Error::Argument("box has non-finite fields".into()));
        }
        if size.iter().any(|&s| s <= 0.0) {
            return Err(Error::Argument(format!(
                "box size components must be positive, got {size:?}"
            )));
        }
        Ok(OrientedBox {
            center,
            size,
            yaw,
            class_label,
        })
    }

    /// Half extents of the axis-aligned bounding box.
    pub fn aabb_half_extents(&self) -> Point3 {
        let (s, c) = self.yaw.sin_cos();
        let (hl, hw) = (self.size[0] / 2.0, self.size[1] / 2.0);
        [
            c.abs() * hl + s.abs() * hw,
            s.abs() * hl + c.abs() * hw,
            self.size[2] / 2.0,
        ]
    }
}

/// Boundary points count as inside.
pub fn point_in_box(p: Point3, b: &OrientedBox) -> bool {
    let dx = p[0] - b.center[0];
    let dy = p[1] - b.center[1];
    let dz = p[2] - b.center[2];
    let (s, c) = b.yaw.sin_cos();
    let lx = c * dx + s * dy;
    let ly = -s * dx + c * dy;
    lx.abs() <= b.size[0] / 2.0 && ly.abs() <= b.size[1] / 2.0 && dz.abs() <= b.size[2] / 2.0
}

/// Voxels whose centers lie inside the box, in ascending linear-index order.
pub fn rasterize_box(b: &OrientedBox, grid: &VoxelGrid) -> Vec<u64> {
    let mut out = Vec::new();
    rasterize_box_into(b, grid, &mut out);
    out
}

/// Appends the voxels of `b` to `out` (unsorted across calls).
pub fn rasterize_box_into(b: &OrientedBox, grid: &VoxelGrid, out: &mut Vec<u64>) {
    let half = b.aabb_half_extents();
    let dims = grid.dims();
    let min = grid.roi.min();
    let d = grid.roi.delta;
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        // one extra cell of slack on each side; point_in_box decides membership
        let first = ((b.center[a] - half[a] - min[a]) / d - 0.5).floor() as i64 - 1;
        let last = ((b.center[a] + half[a] - min[a]) / d - 0.5).ceil() as i64 + 1;
        let first = first.max(0);
        let last = last.min(dims[a] as i64 - 1);
        if first > last {
            return;
        }
        lo[a] = first as usize;
        hi[a] = last as usize;
    }
    for iz in lo[2]..=hi[2] {
        let z = grid.axis_center(2, iz);
        for iy in lo[1]..=hi[1] {
            let y = grid.axis_center(1, iy);
            for ix in lo[0]..=hi[0] {
                let x = grid.axis_center(0, ix);
                if point_in_box([x, y, z], b) {
                    out.push(grid.linear(ix, iy, iz));
                }
            }
        }
    }
}

/// Re-expresses a box in the parent frame of a yaw-only `pose`.
pub fn transform_frame(b: &OrientedBox, pose: &Pose) -> Result<OrientedBox> {
    if pose.roll != 0.0 || pose.pitch != 0.0 {
        return Err(Error::UnsupportedTransform(format!(
            "boxes carry yaw only; pose has roll {} and pitch {}",
            pose.roll, pose.pitch
        )));
    }
    let (s, c) = pose.yaw.sin_cos();
    let [x, y, z] = b.center;
    Ok(OrientedBox {
        center: [c * x - s * y + pose.x, s * x + c * y + pose.y, z + pose.z],
        size: b.size,
        yaw: normalize_angle(b.yaw + pose.yaw),
        class_label: b.class_label,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelFrame {
    pub frame_id: String,
    pub boxes: Vec<OrientedBox>,
}

impl LabelFrame {
    pub fn new(frame_id: impl Into<String>, boxes: Vec<OrientedBox>) -> Result<Self> {
        let frame_id = frame_id.into();
        if frame_id.is_empty() {
            return Err(Error::Argument("frame_id must be nonempty".into()));
        }
        Ok(LabelFrame { frame_id, boxes })
    }
}

/// Ordered collection of labelled frames with unique ids.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    frames: Vec<LabelFrame>,
}

impl Dataset {
    pub fn new(frames: Vec<LabelFrame>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(frames.len());
        for f in &frames {
            if f.frame_id.is_empty() {
                return Err(Error::Argument("frame_id must be nonempty".into()));
            }
            if !seen.insert(f.frame_id.as_str()) {
                return Err(Error::Argument(format!("duplicate frame_id {:?}", f.frame_id)));
            }
        }
        Ok(Dataset { frames })
    }

    pub fn frames(&self) -> &[LabelFrame] {
        &self.frames
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn into_frames(self) -> Vec<LabelFrame> {
        self.frames
    }
}
