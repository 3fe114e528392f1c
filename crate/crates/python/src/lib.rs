//! Python bindings: placements, POGs, coverage and S-MIG evaluation.

use std::path::PathBuf;

use lidarplace_core as core;
use lidarplace_core::{ErrorCategory, Handedness};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: core::Error) -> PyErr {
    match e.category() {
        ErrorCategory::Io => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn class_of(s: &str) -> PyResult<core::ClassLabel> {
    s.parse().map_err(err)
}

#[pyclass(name = "Grid", module = "lidarplace", frozen)]
struct Grid {
    inner: core::VoxelGrid,
}

#[pymethods]
impl Grid {
    #[new]
    #[pyo3(signature = (min, max, delta = core::geometry::DEFAULT_DELTA))]
    fn new(min: [f64; 3], max: [f64; 3], delta: f64) -> PyResult<Self> {
        let roi = core::RoiSpec::new(min, max, delta).map_err(err)?;
        Ok(Grid { inner: core::build_grid(roi).map_err(err)? })
    }

    /// The 40 x 40 x 4 m region ahead of the ego vehicle.
    #[staticmethod]
    #[pyo3(signature = (delta = core::geometry::DEFAULT_DELTA))]
    fn front_half(delta: f64) -> PyResult<Self> {
        let roi = core::RoiSpec::front_half(delta).map_err(err)?;
        Ok(Grid { inner: core::build_grid(roi).map_err(err)? })
    }

    #[getter]
    fn dims(&self) -> [usize; 3] {
        self.inner.dims()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta()
    }

    fn __len__(&self) -> usize {
        self.inner.len() as usize
    }

    fn voxel_center(&self, index: u64) -> PyResult<[f64; 3]> {
        self.inner.voxel_center(index).map_err(err)
    }

    fn __repr__(&self) -> String {
        let r = &self.inner.roi;
        format!(
            "Grid(min=[{}, {}, {}], max=[{}, {}, {}], delta={})",
            r.x_min, r.y_min, r.z_min, r.x_max, r.y_max, r.z_max, r.delta
        )
    }
}

#[pyclass(name = "Placement", module = "lidarplace", frozen)]
struct Placement {
    inner: core::PlacementConfig,
}

#[pymethods]
impl Placement {
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        Ok(Placement { inner: core::builtin(name).map_err(err)? })
    }

    /// Builtin name or placement file path.
    #[staticmethod]
    fn load(spec: &str) -> PyResult<Self> {
        Ok(Placement { inner: core::resolve_placement(spec).map_err(err)? })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let inner = core::placements::parse_placement_str(text, std::path::Path::new("<string>")).map_err(err)?;
        Ok(Placement { inner })
    }

    /// Sensor mounts `(x, y, z, roll, pitch, yaw)` as declared.
    #[staticmethod]
    #[pyo3(signature = (name, mounts, left_handed = false, azimuth_steps = None))]
    fn from_mounts(name: String, mounts: Vec<[f64; 6]>, left_handed: bool, azimuth_steps: Option<u32>) -> PyResult<Self> {
        let mut spec = core::LidarSpec::default();
        if let Some(n) = azimuth_steps {
            spec.azimuth_steps = n;
        }
        let sensors = mounts
            .into_iter()
            .map(|[x, y, z, roll, pitch, yaw]| {
                Ok(core::SensorMount {
                    spec,
                    mount: core::Pose::new(x, y, z, roll, pitch, yaw)?,
                })
            })
            .collect::<core::Result<Vec<_>>>()
            .map_err(err)?;
        let inner = core::PlacementConfig {
            name,
            sensors,
            ego_pose_in_roi: core::Pose::identity(),
            source_handedness: if left_handed { Handedness::LeftHanded } else { Handedness::RightHanded },
        };
        inner.validate().map_err(err)?;
        Ok(Placement { inner })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn handedness(&self) -> &'static str {
        self.inner.source_handedness.as_str()
    }

    /// `(x, y, z, roll, pitch, yaw)` per sensor, in the declared frame.
    #[getter]
    fn mounts(&self) -> Vec<[f64; 6]> {
        self.inner
            .sensors
            .iter()
            .map(|s| {
                let m = s.mount;
                [m.x, m.y, m.z, m.roll, m.pitch, m.yaw]
            })
            .collect()
    }

    fn with_azimuth_steps(&self, steps: u32) -> Self {
        Placement { inner: self.inner.with_azimuth_steps(steps) }
    }

    fn mirrored(&self) -> Self {
        Placement { inner: core::lidar::mirror_config(&self.inner) }
    }

    fn to_text(&self) -> String {
        core::placements::format_placement(&self.inner)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        core::placements::write_placement(&self.inner, path).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Placement({:?}, {} sensors)", self.inner.name, self.inner.sensors.len())
    }
}

#[pyclass(name = "Dataset", module = "lidarplace", frozen)]
struct Dataset {
    inner: core::Dataset,
}

#[pymethods]
impl Dataset {
    /// Reads native label files (`class cx cy cz l w h yaw` per line).
    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        Ok(Dataset { inner: core::scenario::import_dataset(dir).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (dir, skip_unknown = false))]
    fn load_kitti(dir: PathBuf, skip_unknown: bool) -> PyResult<Self> {
        let opts = core::scenario::KittiOptions {
            unknown: if skip_unknown {
                core::scenario::UnknownTypePolicy::Skip
            } else {
                core::scenario::UnknownTypePolicy::Fail
            },
            ..Default::default()
        };
        Ok(Dataset { inner: core::scenario::import_kitti_labels(dir, &opts).map_err(err)? })
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        core::scenario::export_dataset(&self.inner, dir).map_err(err)
    }

    #[getter]
    fn frame_count(&self) -> usize {
        self.inner.frame_count()
    }

    fn box_count(&self) -> usize {
        self.inner.frames().iter().map(|f| f.boxes.len()).sum()
    }

    fn __len__(&self) -> usize {
        self.inner.frame_count()
    }
}

/// Synthetic ground-concentrated traffic; density is sparse, medium, dense or a number.
#[pyfunction]
#[pyo3(signature = (frames = 1000, density = "medium", seed = 0))]
fn generate(frames: usize, density: &str, seed: u64) -> PyResult<Dataset> {
    let params = core::ScenarioParams {
        frame_count: frames,
        density: density.parse().map_err(err)?,
        seed,
        ..Default::default()
    };
    Ok(Dataset { inner: core::generate(&params).map_err(err)? })
}

#[pyclass(name = "Pog", module = "lidarplace", frozen)]
struct Pog {
    inner: core::Pog,
}

#[pymethods]
impl Pog {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Pog { inner: core::load_pog(path).map_err(err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        core::save_pog(&self.inner, path).map_err(err)
    }

    #[getter]
    fn class_label(&self) -> &'static str {
        self.inner.class_label().as_str()
    }

    #[getter]
    fn frame_count(&self) -> u64 {
        self.inner.frame_count()
    }

    /// `(voxel index, frames occupied)` for every nonzero voxel, ascending.
    fn entries(&self) -> Vec<(u64, u32)> {
        self.inner.entries().to_vec()
    }

    fn probability(&self, index: u64) -> f64 {
        self.inner.probability(index)
    }

    fn entropy(&self) -> f64 {
        core::metrics::pog_entropy(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Pog({}, frames={}, nonzero={})",
            self.inner.class_label(),
            self.inner.frame_count(),
            self.inner.len()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (dataset, grid, class_label, threads = None))]
fn estimate_pog(dataset: &Dataset, grid: &Grid, class_label: &str, threads: Option<usize>) -> PyResult<Pog> {
    let inner = core::estimate_pog_with(&dataset.inner, &grid.inner, class_of(class_label)?, threads).map_err(err)?;
    Ok(Pog { inner })
}

#[pyclass(name = "Report", module = "lidarplace", frozen)]
struct Report {
    inner: core::MetricsReport,
}

fn row_dict<'py>(py: Python<'py>, r: &core::MetricsRow) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("class", &r.class)?;
    d.set_item("h_pog", r.h_pog)?;
    d.set_item("h_cond", r.h_cond)?;
    d.set_item("info_gain", r.info_gain)?;
    d.set_item("s_mig", r.s_mig)?;
    d.set_item("nonzero_voxels", r.nonzero_voxels)?;
    d.set_item("covered_nonzero_voxels", r.covered_nonzero_voxels)?;
    Ok(d)
}

#[pymethods]
impl Report {
    #[getter]
    fn placement(&self) -> &str {
        &self.inner.config_name
    }

    #[getter]
    fn s_mig(&self) -> f64 {
        self.inner.s_mig()
    }

    #[getter]
    fn h_pog(&self) -> f64 {
        self.inner.total.h_pog
    }

    #[getter]
    fn info_gain(&self) -> f64 {
        self.inner.total.info_gain
    }

    /// Per-class rows followed by the total row.
    fn rows<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .rows
            .iter()
            .chain(std::iter::once(&self.inner.total))
            .map(|r| row_dict(py, r))
            .collect()
    }

    fn in_bits(&self) -> Self {
        Report { inner: self.inner.in_bits() }
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!("Report({:?}, s_mig={})", self.inner.config_name, self.inner.s_mig())
    }
}

fn pog_refs(pogs: &[PyRef<'_, Pog>]) -> Vec<core::Pog> {
    pogs.iter().map(|p| p.inner.clone()).collect()
}

#[pyfunction]
#[pyo3(signature = (placement, pogs, grid, threads = None))]
fn evaluate(placement: &Placement, pogs: Vec<PyRef<'_, Pog>>, grid: &Grid, threads: Option<usize>) -> PyResult<Report> {
    let pogs = pog_refs(&pogs);
    let opts = core::CoverageOptions { threads, ..Default::default() };
    let inner = core::evaluate_with(&placement.inner, &pogs, &grid.inner, opts).map_err(err)?;
    Ok(Report { inner })
}

/// Linear indices of every voxel crossed by at least one beam.
#[pyfunction]
fn coverage(placement: &Placement, grid: &Grid) -> PyResult<Vec<u64>> {
    Ok(core::coverage(&placement.inner, &grid.inner).map_err(err)?.iter().collect())
}

/// Coordinate-descent search over mount poses inside the roof box.
///
/// Returns `(placement, report, trace_csv)`.
#[pyfunction]
#[pyo3(signature = (initial, pogs, grid, max_iterations = 50, max_evaluations = 2000, search_azimuth_steps = Some(720)))]
fn optimize(
    initial: &Placement,
    pogs: Vec<PyRef<'_, Pog>>,
    grid: &Grid,
    max_iterations: usize,
    max_evaluations: usize,
    search_azimuth_steps: Option<u32>,
) -> PyResult<(Placement, Report, String)> {
    let pogs = pog_refs(&pogs);
    let space = core::SearchSpace {
        max_iterations,
        max_evaluations,
        search_azimuth_steps,
        ..Default::default()
    };
    let out = core::optimize(&initial.inner, &space, &pogs, &grid.inner).map_err(err)?;
    Ok((
        Placement { inner: out.config },
        Report { inner: out.report },
        core::search::trace_csv(&out.trace),
    ))
}

/// Binary entropy in nats of an occupancy probability.
#[pyfunction]
fn voxel_entropy(p: f64) -> PyResult<f64> {
    core::metrics::voxel_entropy(p).map_err(err)
}

/// `(pearson_r, spearman_rho)`; `None` where a variable has zero variance.
#[pyfunction]
fn correlation(x: Vec<f64>, y: Vec<f64>) -> PyResult<(Option<f64>, Option<f64>)> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(PyValueError::new_err("need two equally long sequences of at least 3 values"));
    }
    Ok((core::correlate::pearson(&x, &y), core::correlate::spearman(&x, &y)))
}

#[pyfunction]
fn builtin_names() -> Vec<&'static str> {
    core::BUILTIN_NAMES.to_vec()
}

#[pymodule]
fn lidarplace(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Grid>()?;
    m.add_class::<Placement>()?;
    m.add_class::<Dataset>()?;
    m.add_class::<Pog>()?;
    m.add_class::<Report>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_pog, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(coverage, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(voxel_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(correlation, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_names, m)?)?;
    Ok(())
}
