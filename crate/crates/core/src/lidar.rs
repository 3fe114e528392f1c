//! Spinning-LiDAR beam fans and voxel traversal of their rays.
//!
//! Occlusion is not modelled: every ray continues until it leaves the ROI or
//! reaches the sensor's maximum range.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, Pose, VoxelGrid};

/// Mount heights outside this band are rejected as implausible roof mounts.
pub const MOUNT_Z_RANGE: (f64, f64) = (0.0, 5.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarSpec {
    pub beam_count: u32,
    pub fov_min_deg: f64,
    pub fov_max_deg: f64,
    /// Samples per full rotation for every beam.
    pub azimuth_steps: u32,
    /// `None` means unbounded: rays stop at the ROI boundary.
    pub max_range: Option<f64>,
}

impl Default for LidarSpec {
    /// 16 beams over [-25°, 5°]; 90,000 points per frame split across 16 beams.
    fn default() -> Self {
        LidarSpec {
            beam_count: 16,
            fov_min_deg: -25.0,
            fov_max_deg: 5.0,
            azimuth_steps: 5_625,
            max_range: None,
        }
    }
}

impl LidarSpec {
    pub fn validate(&self) -> Result<()> {
        if self.beam_count < 1 {
            return Err(Error::config("beam_count", "must be >= 1"));
        }
        if !self.fov_min_deg.is_finite() || !self.fov_max_deg.is_finite() {
            return Err(Error::config("fov_deg", "non-finite field of view"));
        }
        if self.fov_min_deg > self.fov_max_deg {
            return Err(Error::config(
                "fov_deg",
                format!("min {} exceeds max {}", self.fov_min_deg, self.fov_max_deg),
            ));
        }
        if self.azimuth_steps < 1 {
            return Err(Error::config("azimuth_steps", "must be >= 1"));
        }
        if let Some(r) = self.max_range {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::config("max_range", format!("must be > 0, got {r}")));
            }
        }
        Ok(())
    }

    /// Beam elevation angles in degrees, endpoint-inclusive over the FOV.
    pub fn pitch_angles_deg(&self) -> Vec<f64> {
        let n = self.beam_count as usize;
        if n == 1 {
            return vec![(self.fov_min_deg + self.fov_max_deg) / 2.0];
        }
        let step = (self.fov_max_deg - self.fov_min_deg) / (n - 1) as f64;
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.fov_max_deg
                } else {
                    self.fov_min_deg + i as f64 * step
                }
            })
            .collect()
    }

    /// Azimuths `2πk/n`, with the upper half expressed as negative angles so
    /// that the fan is bit-exactly symmetric about the sensor's x-z plane.
    pub fn azimuth_angles(&self) -> Vec<f64> {
        let n = self.azimuth_steps as u64;
        let tau = 2.0 * std::f64::consts::PI;
        (0..n)
            .map(|k| {
                if 2 * k <= n {
                    tau * k as f64 / n as f64
                } else {
                    -(tau * (n - k) as f64 / n as f64)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Handedness {
    RightHanded,
    LeftHanded,
}

impl Handedness {
    pub fn as_str(&self) -> &'static str {
        match self {
            Handedness::RightHanded => "right",
            Handedness::LeftHanded => "left",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorMount {
    pub spec: LidarSpec,
    /// Mount pose relative to the ego frame, in the config's source handedness.
    pub mount: Pose,
}

/// A named multi-LiDAR rig.
///
/// Mount poses are stored exactly as declared in `source_handedness`; use
/// [`PlacementConfig::resolved_mounts`] for the internal right-handed frame.
/// `ego_pose_in_roi` is always expressed in the internal frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementConfig {
    pub name: String,
    pub sensors: Vec<SensorMount>,
    pub ego_pose_in_roi: Pose,
    pub source_handedness: Handedness,
}

fn negate(v: f64) -> f64 {
    // 0.0 - 0.0 is +0.0, which keeps serialized output free of "-0"
    0.0 - v
}

/// Converts a left-handed (y right) pose into the internal right-handed frame.
pub fn left_to_right(p: &Pose) -> Pose {
    Pose {
        y: negate(p.y),
        roll: negate(p.roll),
        yaw: negate(p.yaw),
        ..*p
    }
}

impl PlacementConfig {
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Validation("placement name must be nonempty".into()));
        }
        if self.sensors.is_empty() {
            return Err(Error::Validation(format!(
                "placement {:?} has no sensors",
                self.name
            )));
        }
        for (i, s) in self.sensors.iter().enumerate() {
            s.spec.validate()?;
            let m = &s.mount;
            Pose::new(m.x, m.y, m.z, m.roll, m.pitch, m.yaw)?;
            let (lo, hi) = MOUNT_Z_RANGE;
            if !(lo..=hi).contains(&m.z) {
                return Err(Error::Validation(format!(
                    "sensor {i} of {:?}: mount z {} outside [{lo}, {hi}] m",
                    self.name, m.z
                )));
            }
        }
        Ok(())
    }

    /// Mount poses converted into the internal right-handed frame.
    pub fn resolved_mounts(&self) -> Vec<(LidarSpec, Pose)> {
        self.sensors
            .iter()
            .map(|s| {
                let pose = match self.source_handedness {
                    Handedness::RightHanded => s.mount,
                    Handedness::LeftHanded => left_to_right(&s.mount),
                };
                (s.spec, pose)
            })
            .collect()
    }

    pub fn with_azimuth_steps(&self, steps: u32) -> PlacementConfig {
        let mut c = self.clone();
        for s in &mut c.sensors {
            s.spec.azimuth_steps = steps;
        }
        c
    }
}

/// Negates every mount y, yaw and roll.
pub fn mirror_config(config: &PlacementConfig) -> PlacementConfig {
    let mut out = config.clone();
    out.name = format!("{}-mirrored", config.name);
    for s in &mut out.sensors {
        s.mount.y = negate(s.mount.y);
        s.mount.roll = negate(s.mount.roll);
        s.mount.yaw = negate(s.mount.yaw);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Point3,
    pub direction: Point3,
}

/// All rays of one mounted sensor, beam-major then azimuth, in the ROI frame.
pub fn beam_rays(spec: &LidarSpec, mount: &Pose, ego: &Pose) -> Vec<Ray> {
    let origin = ego.apply_point(mount.position());
    let azimuths: Vec<(f64, f64)> = spec.azimuth_angles().iter().map(|a| a.sin_cos()).collect();
    let mut rays = Vec::with_capacity(spec.beam_count as usize * azimuths.len());
    for pitch in spec.pitch_angles_deg() {
        let (sp, cp) = pitch.to_radians().sin_cos();
        for &(sa, ca) in &azimuths {
            let local = [cp * ca, cp * sa, sp];
            let direction = ego.apply_vector(mount.apply_vector(local));
            rays.push(Ray { origin, direction });
        }
    }
    rays
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Traversal {
    /// Integer 3D Bresenham between the clipped entry and exit cells.
    #[default]
    Bresenham,
    /// Exact parametric grid walk; every cell the segment passes through.
    GridWalk,
}

/// Clips `origin + t·dir` (t in meters along the unit direction) to the ROI.
/// Returns entry and exit cells, or `None` when the segment misses.
fn clip_to_cells(
    grid: &VoxelGrid,
    origin: Point3,
    dir: Point3,
    max_range: Option<f64>,
) -> Option<(Point3, Point3)> {
    let min = grid.roi.min();
    let max = grid.roi.max();
    let mut t0 = 0.0f64;
    let mut t1 = max_range.unwrap_or(f64::INFINITY);
    for a in 0..3 {
        if dir[a] == 0.0 {
            if origin[a] < min[a] || origin[a] > max[a] {
                return None;
            }
            continue;
        }
        let ta = (min[a] - origin[a]) / dir[a];
        let tb = (max[a] - origin[a]) / dir[a];
        let (near, far) = if ta <= tb { (ta, tb) } else { (tb, ta) };
        t0 = t0.max(near);
        t1 = t1.min(far);
        if t0 > t1 {
            return None;
        }
    }
    if !t1.is_finite() {
        return None;
    }
    let eps = 1e-9 * grid.roi.delta;
    let point = |t: f64| -> Point3 {
        let mut p = [0.0; 3];
        for a in 0..3 {
            p[a] = (origin[a] + t * dir[a]).clamp(min[a] + eps, max[a] - eps);
        }
        p
    };
    Some((point(t0), point(t1)))
}

fn clamped_cell(grid: &VoxelGrid, p: Point3) -> [i64; 3] {
    let c = grid.cell_of_point(p);
    let dims = grid.dims();
    [
        c[0].clamp(0, dims[0] as i64 - 1),
        c[1].clamp(0, dims[1] as i64 - 1),
        c[2].clamp(0, dims[2] as i64 - 1),
    ]
}

/// Inclusive 3D Bresenham line between integer cells.
pub fn bresenham_cells(from: [i64; 3], to: [i64; 3], mut visit: impl FnMut([i64; 3])) {
    let d = [
        (to[0] - from[0]).abs(),
        (to[1] - from[1]).abs(),
        (to[2] - from[2]).abs(),
    ];
    let s = [
        (to[0] - from[0]).signum(),
        (to[1] - from[1]).signum(),
        (to[2] - from[2]).signum(),
    ];
    // driving axis: largest delta, lowest axis on ties
    let major = if d[0] >= d[1] && d[0] >= d[2] {
        0
    } else if d[1] >= d[2] {
        1
    } else {
        2
    };
    let (a1, a2) = match major {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let mut p = from;
    let mut e1 = 2 * d[a1] - d[major];
    let mut e2 = 2 * d[a2] - d[major];
    for _ in 0..d[major] {
        visit(p);
        if e1 >= 0 {
            p[a1] += s[a1];
            e1 -= 2 * d[major];
        }
        if e2 >= 0 {
            p[a2] += s[a2];
            e2 -= 2 * d[major];
        }
        e1 += 2 * d[a1];
        e2 += 2 * d[a2];
        p[major] += s[major];
    }
    visit(to);
}

/// Amanatides-Woo traversal of the segment `p0 -> p1` (both inside the grid).
fn grid_walk_cells(grid: &VoxelGrid, p0: Point3, p1: Point3, mut visit: impl FnMut([i64; 3])) {
    let min = grid.roi.min();
    let d = grid.roi.delta;
    let mut cell = clamped_cell(grid, p0);
    let end = clamped_cell(grid, p1);
    let seg = [p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]];
    let mut step = [0i64; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for a in 0..3 {
        if seg[a] > 0.0 {
            step[a] = 1;
            let boundary = min[a] + (cell[a] + 1) as f64 * d;
            t_max[a] = (boundary - p0[a]) / seg[a];
            t_delta[a] = d / seg[a];
        } else if seg[a] < 0.0 {
            step[a] = -1;
            let boundary = min[a] + cell[a] as f64 * d;
            t_max[a] = (boundary - p0[a]) / seg[a];
            t_delta[a] = -d / seg[a];
        }
    }
    let budget = (0..3).map(|a| (end[a] - cell[a]).abs()).sum::<i64>() + 1;
    for _ in 0..budget {
        visit(cell);
        if cell == end {
            return;
        }
        let a = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
            0
        } else if t_max[1] <= t_max[2] {
            1
        } else {
            2
        };
        if t_max[a] > 1.0 {
            return;
        }
        cell[a] += step[a];
        if !grid.contains_cell(cell) {
            return;
        }
        t_max[a] += t_delta[a];
    }
}

fn unit(direction: Point3) -> Result<Point3> {
    let n = (direction[0].powi(2) + direction[1].powi(2) + direction[2].powi(2)).sqrt();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::Argument(format!(
            "ray direction must be nonzero and finite, got {direction:?}"
        )));
    }
    Ok([direction[0] / n, direction[1] / n, direction[2] / n])
}

/// Visits the voxels of one ray without allocating.
pub fn traverse_ray_with(
    grid: &VoxelGrid,
    origin: Point3,
    direction: Point3,
    max_range: Option<f64>,
    method: Traversal,
    mut visit: impl FnMut(u64),
) -> Result<()> {
    let dir = unit(direction)?;
    let Some((p0, p1)) = clip_to_cells(grid, origin, dir, max_range) else {
        return Ok(());
    };
    let nx = grid.nx as i64;
    let ny = grid.ny as i64;
    let emit = |c: [i64; 3]| visit((c[0] + nx * (c[1] + ny * c[2])) as u64);
    match method {
        Traversal::Bresenham => {
            bresenham_cells(clamped_cell(grid, p0), clamped_cell(grid, p1), emit)
        }
        Traversal::GridWalk => grid_walk_cells(grid, p0, p1, emit),
    }
    Ok(())
}

/// Linear indices of the voxels crossed by a ray, ordered from entry to exit.
pub fn traverse_ray(
    grid: &VoxelGrid,
    origin: Point3,
    direction: Point3,
    max_range: Option<f64>,
) -> Result<Vec<u64>> {
    traverse_ray_method(grid, origin, direction, max_range, Traversal::Bresenham)
}

pub fn traverse_ray_method(
    grid: &VoxelGrid,
    origin: Point3,
    direction: Point3,
    max_range: Option<f64>,
    method: Traversal,
) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    traverse_ray_with(grid, origin, direction, max_range, method, |i| out.push(i))?;
    Ok(out)
}

/// Beam-intersected voxel set of a placement, as a bitset over all `M` voxels.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageMask {
    grid: VoxelGrid,
    words: Vec<u64>,
}

impl CoverageMask {
    pub fn empty(grid: &VoxelGrid) -> Self {
        CoverageMask {
            grid: *grid,
            words: vec![0; (grid.len() as usize).div_ceil(64)],
        }
    }

    pub fn full(grid: &VoxelGrid) -> Self {
        let mut m = Self::empty(grid);
        for i in 0..grid.len() {
            m.insert(i);
        }
        m
    }

    pub fn from_indices(grid: &VoxelGrid, indices: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut m = Self::empty(grid);
        for i in indices {
            if i >= grid.len() {
                return Err(Error::Bounds {
                    index: i,
                    len: grid.len(),
                });
            }
            m.insert(i);
        }
        Ok(m)
    }

    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    /// Bitset length in bits (always `M`).
    pub fn len(&self) -> u64 {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    #[inline]
    pub fn insert(&mut self, i: u64) {
        self.words[(i >> 6) as usize] |= 1u64 << (i & 63);
    }

    #[inline]
    pub fn contains(&self, i: u64) -> bool {
        i < self.grid.len() && self.words[(i >> 6) as usize] & (1u64 << (i & 63)) != 0
    }

    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as u64;
                w &= w - 1;
                Some(wi as u64 * 64 + b)
            })
        })
    }

    pub fn union_with(&mut self, other: &CoverageMask) -> Result<()> {
        self.check_grid(other)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        Ok(())
    }

    pub fn is_subset_of(&self, other: &CoverageMask) -> bool {
        self.grid == other.grid
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }

    /// Reflects the mask across the grid's y mid-plane (`iy -> ny-1-iy`).
    pub fn mirror_y(&self) -> CoverageMask {
        let mut out = CoverageMask::empty(&self.grid);
        for i in self.iter() {
            let [ix, iy, iz] = self.grid.cell(i).expect("index in range");
            out.insert(self.grid.linear(ix, self.grid.ny - 1 - iy, iz));
        }
        out
    }

    fn check_grid(&self, other: &CoverageMask) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Argument("coverage masks use different grids".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CoverageOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    pub traversal: Traversal,
}

/// Runs `f` on a dedicated pool when a thread count is given.
pub(crate) fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Argument(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Union of every ray's traversal over all sensors, beams and azimuth steps.
pub fn coverage(config: &PlacementConfig, grid: &VoxelGrid) -> Result<CoverageMask> {
    coverage_with(config, grid, CoverageOptions::default())
}

pub fn coverage_with(
    config: &PlacementConfig,
    grid: &VoxelGrid,
    opts: CoverageOptions,
) -> Result<CoverageMask> {
    config.validate()?;
    let ego = config.ego_pose_in_roi;
    // one task per (sensor, beam); workers OR private bitsets together
    let tasks: Vec<(LidarSpec, Pose, f64)> = config
        .resolved_mounts()
        .into_iter()
        .flat_map(|(spec, mount)| {
            spec.pitch_angles_deg()
                .into_iter()
                .map(move |p| (spec, mount, p))
        })
        .collect();
    let run = || {
        tasks
            .par_iter()
            .fold(
                || CoverageMask::empty(grid),
                |mut mask, (spec, mount, pitch)| {
                    let beam = LidarSpec {
                        beam_count: 1,
                        fov_min_deg: *pitch,
                        fov_max_deg: *pitch,
                        ..*spec
                    };
                    for ray in beam_rays(&beam, mount, &ego) {
                        traverse_ray_with(
                            grid,
                            ray.origin,
                            ray.direction,
                            spec.max_range,
                            opts.traversal,
                            |i| mask.insert(i),
                        )
                        .expect("beam directions are unit vectors");
                    }
                    mask
                },
            )
            .reduce(
                || CoverageMask::empty(grid),
                |mut a, b| {
                    for (x, y) in a.words.iter_mut().zip(&b.words) {
                        *x |= y;
                    }
                    a
                },
            )
    };
    with_threads(opts.threads, run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, RoiSpec};
    use std::f64::consts::PI;

    fn close(a: Point3, b: Point3) -> bool {
        (0..3).all(|i| (a[i] - b[i]).abs() < 1e-12)
    }

    fn single_beam(steps: u32) -> LidarSpec {
        LidarSpec {
            beam_count: 1,
            fov_min_deg: 0.0,
            fov_max_deg: 0.0,
            azimuth_steps: steps,
            max_range: None,
        }
    }

    #[test]
    fn default_pitch_fan() {
        let p = LidarSpec::default().pitch_angles_deg();
        assert_eq!(p.len(), 16);
        for (i, v) in p.iter().enumerate() {
            assert!((v - (-25.0 + 2.0 * i as f64)).abs() < 1e-12, "{i}: {v}");
        }
        let one = LidarSpec {
            beam_count: 1,
            ..LidarSpec::default()
        };
        assert_eq!(one.pitch_angles_deg(), vec![-10.0]);
    }

    #[test]
    fn four_azimuth_directions() {
        let rays = beam_rays(&single_beam(4), &Pose::identity(), &Pose::identity());
        let dirs: Vec<Point3> = rays.iter().map(|r| r.direction).collect();
        let expected = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, -1.0, 0.0],
        ];
        assert_eq!(dirs.len(), 4);
        for (d, e) in dirs.iter().zip(expected) {
            assert!(close(*d, e), "{d:?} vs {e:?}");
        }
    }

    #[test]
    fn roll_rotates_lateral_beam_upward() {
        let mount = Pose::new(0.0, 0.0, 0.0, PI / 2.0, 0.0, 0.0).unwrap();
        let rays = beam_rays(&single_beam(4), &mount, &Pose::identity());
        assert!(close(rays[0].direction, [1.0, 0.0, 0.0]));
        assert!(close(rays[1].direction, [0.0, 0.0, 1.0]));
    }

    #[test]
    fn rays_share_mounted_origin() {
        let mount = Pose::new(1.0, -0.5, 2.0, 0.1, 0.0, 0.0).unwrap();
        let ego = Pose::translation(40.0, 20.0, 0.0);
        let rays = beam_rays(&LidarSpec { azimuth_steps: 8, ..LidarSpec::default() }, &mount, &ego);
        assert_eq!(rays.len(), 16 * 8);
        assert!(rays.iter().all(|r| r.origin == [41.0, 19.5, 2.0]));
    }

    fn strip_grid() -> VoxelGrid {
        build_grid(RoiSpec::new([0.0; 3], [10.0, 10.0, 1.0], 1.0).unwrap()).unwrap()
    }

    #[test]
    fn traverse_axis_aligned() {
        let g = strip_grid();
        let v = traverse_ray(&g, [0.5, 0.5, 0.5], [1.0, 0.0, 0.0], Some(5.0)).unwrap();
        assert_eq!(v, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn traverse_misses() {
        let g = strip_grid();
        assert!(traverse_ray(&g, [-1.0, 0.5, 0.5], [-1.0, 0.0, 0.0], None).unwrap().is_empty());
        assert!(traverse_ray(&g, [5.0, 5.0, 3.0], [0.0, 0.0, 1.0], None).unwrap().is_empty());
        // stops short of the ROI
        assert!(traverse_ray(&g, [-3.0, 0.5, 0.5], [1.0, 0.0, 0.0], Some(2.0)).unwrap().is_empty());
        assert!(matches!(
            traverse_ray(&g, [0.5; 3], [0.0; 3], None),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn traverse_diagonal() {
        let g = strip_grid();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = traverse_ray(&g, [0.5, 0.5, 0.5], [s, s, 0.0], Some(4.0 * 2f64.sqrt())).unwrap();
        let expect: Vec<u64> = (0..5).map(|i| g.linear(i, i, 0)).collect();
        assert_eq!(v, expect);
    }

    #[test]
    fn traverse_enters_from_outside() {
        let g = strip_grid();
        let v = traverse_ray(&g, [-5.0, 2.5, 0.5], [1.0, 0.0, 0.0], None).unwrap();
        let expect: Vec<u64> = (0..10).map(|i| g.linear(i, 2, 0)).collect();
        assert_eq!(v, expect);
    }

    #[test]
    fn grid_walk_superset_of_bresenham_on_axis() {
        let g = strip_grid();
        let a = traverse_ray_method(&g, [0.5, 0.5, 0.5], [1.0, 0.0, 0.0], Some(5.0), Traversal::GridWalk)
            .unwrap();
        assert_eq!(a, vec![0, 1, 2, 3, 4, 5]);
        let d = [1.0, 0.37, 0.0];
        let walk = traverse_ray_method(&g, [0.5, 0.5, 0.5], d, None, Traversal::GridWalk).unwrap();
        let bres = traverse_ray(&g, [0.5, 0.5, 0.5], d, None).unwrap();
        assert!(walk.len() >= bres.len());
        assert_eq!(walk.first(), bres.first());
        assert_eq!(walk.last(), bres.last());
    }

    fn rig(sensors: &[(f64, f64, f64)], spec: LidarSpec) -> PlacementConfig {
        PlacementConfig {
            name: "test".into(),
            sensors: sensors
                .iter()
                .map(|&(x, y, z)| SensorMount {
                    spec,
                    mount: Pose::translation(x, y, z),
                })
                .collect(),
            ego_pose_in_roi: Pose::identity(),
            source_handedness: Handedness::RightHanded,
        }
    }

    #[test]
    fn single_horizontal_beam_covers_axis_rows() {
        let g = build_grid(RoiSpec::new([-5.0, -5.0, 0.0], [5.0, 5.0, 3.0], 1.0).unwrap()).unwrap();
        let m = coverage(&rig(&[(0.5, 0.5, 1.5)], single_beam(4)), &g).unwrap();
        let mut expected = CoverageMask::empty(&g);
        for i in 0..10 {
            expected.insert(g.linear(i, 5, 1));
            expected.insert(g.linear(5, i, 1));
        }
        assert_eq!(m, expected);
    }

    #[test]
    fn upward_beams_above_roi_cover_nothing() {
        let g = strip_grid();
        let spec = LidarSpec {
            beam_count: 4,
            fov_min_deg: 5.0,
            fov_max_deg: 20.0,
            azimuth_steps: 90,
            max_range: None,
        };
        let m = coverage(&rig(&[(5.0, 5.0, 2.0)], spec), &g).unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn two_sensor_union() {
        let g = build_grid(RoiSpec::new([0.0, -4.0, -1.0], [8.0, 4.0, 1.0], 0.25).unwrap()).unwrap();
        let spec = LidarSpec {
            azimuth_steps: 180,
            ..LidarSpec::default()
        };
        let a = coverage(&rig(&[(0.0, 0.5, 1.6)], spec), &g).unwrap();
        let b = coverage(&rig(&[(0.3, -0.5, 1.8)], spec), &g).unwrap();
        let both = coverage(&rig(&[(0.0, 0.5, 1.6), (0.3, -0.5, 1.8)], spec), &g).unwrap();
        let mut u = a.clone();
        u.union_with(&b).unwrap();
        assert_eq!(both, u);
        assert!(a.is_subset_of(&both));
    }

    #[test]
    fn mirror_fixed_point_and_roll_swap() {
        let mut c = rig(&[(0.0, 0.0, 2.4), (0.0, 0.0, 2.6)], LidarSpec::default());
        let m = mirror_config(&c);
        assert_eq!(m.name, "test-mirrored");
        assert_eq!(m.sensors, c.sensors);
        c.sensors[0].mount = Pose::new(0.0, -0.6, 2.2, -0.28, 0.0, 0.0).unwrap();
        let m = mirror_config(&c);
        assert_eq!(m.sensors[0].mount.y, 0.6);
        assert_eq!(m.sensors[0].mount.roll, 0.28);
    }

    #[test]
    fn mask_mirror_is_involution() {
        let g = build_grid(RoiSpec::new([0.0, -2.0, 0.0], [2.0, 2.0, 1.0], 0.5).unwrap()).unwrap();
        let m = CoverageMask::from_indices(&g, [0, 5, 17, 30]).unwrap();
        assert_eq!(m.mirror_y().mirror_y(), m);
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![0, 5, 17, 30]);
        assert!(CoverageMask::from_indices(&g, [g.len()]).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = rig(&[(0.0, 0.0, 9.0)], LidarSpec::default());
        assert!(matches!(c.validate(), Err(Error::Validation(_))));
        c.sensors.clear();
        assert!(c.validate().is_err());
    }
}
