//! Multi-LiDAR placement evaluation: probabilistic occupancy grids, beam
//! coverage, and the entropy-based surrogate metric (S-MIG).

pub mod correlate;
pub mod error;
pub mod geometry;
pub mod lidar;
pub mod metrics;
pub mod placements;
pub mod pog;
pub mod scenario;
pub mod search;

pub use error::{Error, ErrorCategory, Result};
pub use geometry::{
    build_grid, ClassLabel, Dataset, LabelFrame, OrientedBox, Pose, RoiSpec, VoxelGrid,
};
pub use lidar::{
    coverage, coverage_with, CoverageMask, CoverageOptions, Handedness, LidarSpec,
    PlacementConfig, SensorMount, Traversal,
};
pub use metrics::{evaluate, evaluate_with, MetricsReport, MetricsRow};
pub use placements::{builtin, resolve_placement, BUILTIN_NAMES};
pub use pog::{estimate_pog, estimate_pog_with, load_pog, save_pog, Pog};
pub use scenario::{generate, Density, ScenarioParams};
pub use search::{grid_sweep, optimize, Dimension, SearchSpace};
