//! Probabilistic occupancy grids estimated from labelled box datasets.
//!
//! Counts are kept as integers together with the frame count `T`; the
//! occupancy probability of a voxel is `k / T`.
//!
//! # Binary layout (little-endian)
//!
//! | field            | type                         |
//! |------------------|------------------------------|
//! | magic            | `b"POG1"`                    |
//! | roi              | 7 × f64 (x/y/z min, x/y/z max, delta) |
//! | class label      | u32 byte length + UTF-8      |
//! | frame count T    | u64                          |
//! | entry count      | u64                          |
//! | entries          | (u64 index, u32 count) × n, ascending index |

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{build_grid, rasterize_box_into, ClassLabel, Dataset, RoiSpec, VoxelGrid};
use crate::lidar::with_threads;

pub const POG_MAGIC: &[u8; 4] = b"POG1";
const MAGIC_PREFIX: &[u8; 3] = b"POG";

#[derive(Debug, Clone, PartialEq)]
pub struct Pog {
    grid: VoxelGrid,
    class_label: ClassLabel,
    frame_count: u64,
    /// Ascending by index; every count in `1..=frame_count`.
    entries: Vec<(u64, u32)>,
}

impl Pog {
    /// Builds a POG from raw entries, validating every invariant.
    pub fn from_entries(
        grid: VoxelGrid,
        class_label: ClassLabel,
        frame_count: u64,
        mut entries: Vec<(u64, u32)>,
    ) -> Result<Self> {
        if frame_count == 0 {
            return Err(Error::Argument("POG frame count must be >= 1".into()));
        }
        entries.sort_unstable_by_key(|e| e.0);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Argument(format!("duplicate voxel index {}", w[0].0)));
            }
        }
        for &(i, k) in &entries {
            if i >= grid.len() {
                return Err(Error::Bounds {
                    index: i,
                    len: grid.len(),
                });
            }
            if k == 0 || k as u64 > frame_count {
                return Err(Error::Argument(format!(
                    "voxel {i} count {k} outside [1, {frame_count}]"
                )));
            }
        }
        Ok(Pog {
            grid,
            class_label,
            frame_count,
            entries,
        })
    }

    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    pub fn class_label(&self) -> ClassLabel {
        self.class_label
    }

    pub fn frame_count(&self) -> u64 {
        self.frame_count
    }

    pub fn entries(&self) -> &[(u64, u32)] {
        &self.entries
    }

    /// Number of voxels with nonzero occupancy.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, index: u64) -> u32 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map(|p| self.entries[p].1)
            .unwrap_or(0)
    }

    pub fn probability(&self, index: u64) -> f64 {
        self.count(index) as f64 / self.frame_count as f64
    }

    /// `(index, p̂)` pairs in ascending index order.
    pub fn probabilities(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        let t = self.frame_count as f64;
        self.entries.iter().map(move |&(i, k)| (i, k as f64 / t))
    }
}

/// Voxel occupancy counts over a contiguous range of dataset frames.
#[derive(Debug, Clone, PartialEq)]
pub struct CountPartial {
    pub frames: Range<usize>,
    pub counts: BTreeMap<u64, u32>,
}

/// Per-frame voxel set: union over the frame's boxes of `class`, deduplicated.
fn frame_voxels(
    boxes: &[crate::geometry::OrientedBox],
    class: ClassLabel,
    grid: &VoxelGrid,
    scratch: &mut Vec<u64>,
) {
    scratch.clear();
    for b in boxes.iter().filter(|b| b.class_label == class) {
        rasterize_box_into(b, grid, scratch);
    }
    scratch.sort_unstable();
    scratch.dedup();
}

/// Counts occupancy over `frames` of the dataset.
pub fn count_frames(
    dataset: &Dataset,
    grid: &VoxelGrid,
    class: ClassLabel,
    frames: Range<usize>,
) -> Result<CountPartial> {
    if frames.start > frames.end || frames.end > dataset.frame_count() {
        return Err(Error::Argument(format!(
            "frame range {frames:?} outside dataset of {} frames",
            dataset.frame_count()
        )));
    }
    let mut counts = BTreeMap::new();
    let mut scratch = Vec::new();
    for frame in &dataset.frames()[frames.clone()] {
        frame_voxels(&frame.boxes, class, grid, &mut scratch);
        for &i in &scratch {
            *counts.entry(i).or_insert(0u32) += 1;
        }
    }
    Ok(CountPartial { frames, counts })
}

/// Sums partial counts over disjoint frame ranges into one POG.
pub fn merge_counts(
    grid: &VoxelGrid,
    class: ClassLabel,
    partials: &[CountPartial],
) -> Result<Pog> {
    let mut ranges: Vec<&Range<usize>> = partials.iter().map(|p| &p.frames).collect();
    ranges.sort_by_key(|r| (r.start, r.end));
    for w in ranges.windows(2) {
        if w[0].end > w[1].start {
            return Err(Error::Argument(format!(
                "overlapping frame ranges {:?} and {:?}",
                w[0], w[1]
            )));
        }
    }
    let frame_count: u64 = ranges.iter().map(|r| r.len() as u64).sum();
    let mut total: BTreeMap<u64, u32> = BTreeMap::new();
    for p in partials {
        for (&i, &k) in &p.counts {
            *total.entry(i).or_insert(0) += k;
        }
    }
    Pog::from_entries(*grid, class, frame_count, total.into_iter().collect())
}

/// Per-voxel occupancy estimate for one class over all frames.
pub fn estimate_pog(dataset: &Dataset, grid: &VoxelGrid, class: ClassLabel) -> Result<Pog> {
    estimate_pog_with(dataset, grid, class, None)
}

/// Parallel over frames; private dense count arrays are summed, so the
/// result does not depend on scheduling.
pub fn estimate_pog_with(
    dataset: &Dataset,
    grid: &VoxelGrid,
    class: ClassLabel,
    threads: Option<usize>,
) -> Result<Pog> {
    if dataset.is_empty() {
        return Err(Error::Argument("cannot estimate a POG from an empty dataset".into()));
    }
    let m = grid.len() as usize;
    let run = || {
        dataset
            .frames()
            .par_iter()
            .fold(
                || (vec![0u32; m], Vec::new()),
                |(mut counts, mut scratch), frame| {
                    frame_voxels(&frame.boxes, class, grid, &mut scratch);
                    for &i in &scratch {
                        counts[i as usize] += 1;
                    }
                    (counts, scratch)
                },
            )
            .map(|(c, _)| c)
            .reduce(
                || vec![0u32; m],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            )
    };
    let counts = with_threads(threads, run)?;
    let entries = counts
        .iter()
        .enumerate()
        .filter(|(_, &k)| k > 0)
        .map(|(i, &k)| (i as u64, k))
        .collect();
    Ok(Pog {
        grid: *grid,
        class_label: class,
        frame_count: dataset.frame_count() as u64,
        entries,
    })
}

/// Serialized size in bytes of a POG under the documented layout.
pub fn encoded_len(pog: &Pog) -> usize {
    4 + 7 * 8 + 4 + pog.class_label.as_str().len() + 8 + 8 + pog.entries.len() * 12
}

pub fn encode_pog(pog: &Pog) -> Vec<u8> {
    let mut buf = Vec::with_capacity(encoded_len(pog));
    buf.extend_from_slice(POG_MAGIC);
    let r = &pog.grid.roi;
    for v in [r.x_min, r.y_min, r.z_min, r.x_max, r.y_max, r.z_max, r.delta] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let label = pog.class_label.as_str().as_bytes();
    buf.extend_from_slice(&(label.len() as u32).to_le_bytes());
    buf.extend_from_slice(label);
    buf.extend_from_slice(&pog.frame_count.to_le_bytes());
    buf.extend_from_slice(&(pog.entries.len() as u64).to_le_bytes());
    for &(i, k) in &pog.entries {
        buf.extend_from_slice(&i.to_le_bytes());
        buf.extend_from_slice(&k.to_le_bytes());
    }
    buf
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format(format!(
                "truncated POG file while reading {what} at byte {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn decode_pog(bytes: &[u8]) -> Result<Pog> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != POG_MAGIC {
        if &magic[..3] == MAGIC_PREFIX {
            return Err(Error::Format(format!(
                "unsupported POG version {:?} (expected {:?})",
                magic[3] as char, POG_MAGIC[3] as char
            )));
        }
        return Err(Error::Format(format!("bad magic header {magic:?}")));
    }
    let mut v = [0.0; 7];
    for (i, slot) in v.iter_mut().enumerate() {
        *slot = r.f64(&format!("roi field {i}"))?;
    }
    let roi = RoiSpec::new([v[0], v[1], v[2]], [v[3], v[4], v[5]], v[6])
        .map_err(|e| Error::Format(format!("invalid ROI in POG header: {e}")))?;
    let grid = build_grid(roi)?;
    let label_len = r.u32("class label length")? as usize;
    let label = std::str::from_utf8(r.take(label_len, "class label")?)
        .map_err(|e| Error::Format(format!("class label is not UTF-8: {e}")))?;
    let class: ClassLabel = label
        .parse()
        .map_err(|e| Error::Format(format!("{e}")))?;
    let frame_count = r.u64("frame count")?;
    let n = r.u64("entry count")?;
    let remaining = (bytes.len() - r.pos) as u64;
    if n.checked_mul(12).is_none_or(|need| need > remaining) {
        return Err(Error::Format(format!(
            "truncated POG file: {n} entries declared, {remaining} bytes remain"
        )));
    }
    let mut entries = Vec::with_capacity(n as usize);
    let mut prev: Option<u64> = None;
    for _ in 0..n {
        let i = r.u64("entry index")?;
        let k = r.u32("entry count")?;
        if prev.is_some_and(|p| p >= i) {
            return Err(Error::Format("POG entries not strictly ascending".into()));
        }
        prev = Some(i);
        entries.push((i, k));
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after POG entries",
            bytes.len() - r.pos
        )));
    }
    Pog::from_entries(grid, class, frame_count, entries).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_pog(pog: &Pog, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_pog(pog)).map_err(|e| Error::io(path, e))
}

pub fn load_pog(path: impl AsRef<Path>) -> Result<Pog> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pog(&bytes)
}

/// Loads a POG and checks that it was built on `grid`.
pub fn load_pog_for_grid(path: impl AsRef<Path>, grid: &VoxelGrid) -> Result<Pog> {
    let pog = load_pog(path.as_ref())?;
    if pog.grid() != grid {
        return Err(Error::Validation(format!(
            "{}: POG grid {:?} does not match expected grid {:?}",
            path.as_ref().display(),
            pog.grid().roi,
            grid.roi
        )));
    }
    Ok(pog)
}

/// Debug export: a `#` header, then one `index count` pair per line.
pub fn export_pog_text(pog: &Pog) -> String {
    let r = &pog.grid.roi;
    let mut s = format!(
        "# POG class={} frames={} roi={},{},{},{},{},{} delta={} entries={}\n",
        pog.class_label,
        pog.frame_count,
        r.x_min,
        r.y_min,
        r.z_min,
        r.x_max,
        r.y_max,
        r.z_max,
        r.delta,
        pog.entries.len()
    );
    for &(i, k) in &pog.entries {
        s.push_str(&format!("{i} {k}\n"));
    }
    s
}
