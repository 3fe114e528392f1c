use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lidarplace_core::correlate::{
    coefficients_csv, correlate, join, metric_names, read_detection_csv, read_report_s_mig,
    scatter_svg,
};
use lidarplace_core::metrics::{evaluate_with, CSV_HEADER};
use lidarplace_core::placements::{all_builtins, format_placement, resolve_placement};
use lidarplace_core::pog::{encode_pog, estimate_pog_with, export_pog_text, load_pog_for_grid};
use lidarplace_core::scenario::{export_dataset, import_dataset, import_kitti_labels, KittiOptions, UnknownTypePolicy};
use lidarplace_core::search::{grid_sweep, optimize, parse_targets, sweep_csv, trace_csv, Dimension, SearchSpace};
use lidarplace_core::{
    build_grid, ClassLabel, CoverageOptions, Density, ErrorCategory, MetricsReport,
    PlacementConfig, Pog, RoiSpec, ScenarioParams, VoxelGrid,
};

mod output;

use output::{commit, stage_dir, Staged};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] lidarplace_core::Error),
    #[error("parse error in {}: {message}", path.display())]
    Toml { path: PathBuf, message: String },
    #[error("usage error: {0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Toml { .. } => 3,
            CliError::Core(e) => match e.category() {
                ErrorCategory::Parse => 3,
                ErrorCategory::Validation => 4,
                ErrorCategory::Io => 5,
            },
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "lidarplace", version, about = "Multi-LiDAR placement evaluation with S-MIG")]
struct Cli {
    /// Region bounds `xmin,ymin,zmin,xmax,ymax,zmax` in meters (default: front half).
    #[arg(long, global = true, allow_hyphen_values = true)]
    roi: Option<String>,
    /// Voxel edge length in meters.
    #[arg(long, global = true, default_value_t = 0.2)]
    delta: f64,
    /// Comma-separated object classes.
    #[arg(long, global = true, value_delimiter = ',')]
    classes: Option<Vec<String>>,
    /// Override the azimuth sampling of every sensor.
    #[arg(long, global = true)]
    azimuth_steps: Option<u32>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for scenario generation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LabelFormat {
    Native,
    Kitti,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build one POG file per class from a label directory.
    PogBuild {
        labels: PathBuf,
        #[arg(long, value_enum, default_value_t = LabelFormat::Native)]
        format: LabelFormat,
        /// Drop KITTI objects of unmapped type instead of failing.
        #[arg(long)]
        skip_unknown: bool,
        /// Also write a text dump next to each POG.
        #[arg(long)]
        text: bool,
    },
    /// Evaluate one placement (builtin name or file).
    Evaluate {
        placement: String,
        #[arg(long = "pog", required = true, num_args = 1..)]
        pogs: Vec<PathBuf>,
        /// Report entropies in bits.
        #[arg(long)]
        bits: bool,
    },
    /// Evaluate several placements and rank them by S-MIG (`all` expands to every builtin).
    Compare {
        #[arg(required = true)]
        placements: Vec<String>,
        #[arg(long = "pog", required = true, num_args = 1..)]
        pogs: Vec<PathBuf>,
        #[arg(long)]
        bits: bool,
    },
    /// Generate a synthetic labelled dataset.
    Generate {
        /// TOML scenario parameters; flags below override it.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long)]
        density: Option<Density>,
    },
    /// Coordinate-descent search over sensor mount poses.
    Optimize {
        initial: String,
        /// TOML search space (default: roof box).
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long = "pog", required = true, num_args = 1..)]
        pogs: Vec<PathBuf>,
    },
    /// Evaluate a placement over a list of values for one pose dimension.
    Sweep {
        template: String,
        #[arg(long)]
        dimension: Dimension,
        #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
        /// Sensors to modify as `index[:scale]`, comma separated (default: all, scale 1).
        #[arg(long, allow_hyphen_values = true)]
        targets: Option<String>,
        #[arg(long = "pog", required = true, num_args = 1..)]
        pogs: Vec<PathBuf>,
    },
    /// Correlate external detection metrics with S-MIG.
    Correlate {
        /// CSV with columns placement,detector,metric,value.
        detections: PathBuf,
        /// Metrics report CSVs supplying each placement's total S-MIG.
        #[arg(long = "report", required = true, num_args = 1..)]
        reports: Vec<PathBuf>,
    },
}

struct Ctx {
    roi: Option<String>,
    delta: f64,
    classes: Option<Vec<String>>,
    azimuth_steps: Option<u32>,
    threads: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

impl Ctx {
    fn grid(&self) -> Result<VoxelGrid> {
        let roi = match &self.roi {
            Some(s) => RoiSpec::from_bounds_str(s, self.delta)?,
            None => RoiSpec::front_half(self.delta)?,
        };
        Ok(build_grid(roi)?)
    }

    fn classes(&self) -> Result<Option<Vec<ClassLabel>>> {
        self.classes
            .as_ref()
            .map(|v| v.iter().map(|s| s.parse().map_err(CliError::from)).collect())
            .transpose()
    }

    fn opts(&self) -> CoverageOptions {
        CoverageOptions {
            threads: self.threads,
            ..CoverageOptions::default()
        }
    }

    fn placement(&self, spec: &str) -> Result<PlacementConfig> {
        let c = resolve_placement(spec)?;
        Ok(match self.azimuth_steps {
            Some(n) => c.with_azimuth_steps(n),
            None => c,
        })
    }

    fn pogs(&self, paths: &[PathBuf], grid: &VoxelGrid) -> Result<Vec<Pog>> {
        let mut pogs = paths
            .iter()
            .map(|p| load_pog_for_grid(p, grid))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if let Some(classes) = self.classes()? {
            pogs.retain(|p| classes.contains(&p.class_label()));
            for c in classes {
                if !pogs.iter().any(|p| p.class_label() == c) {
                    return Err(lidarplace_core::Error::Validation(format!("no POG file for class {c}")).into());
                }
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in &pogs {
            if !seen.insert(p.class_label()) {
                return Err(lidarplace_core::Error::Validation(format!(
                    "more than one POG for class {}",
                    p.class_label()
                ))
                .into());
            }
        }
        Ok(pogs)
    }

    fn out_required(&self, what: &str) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Usage(format!("--out <{what}> is required for this command")))
    }
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| lidarplace_core::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    toml::from_str(&text).map_err(|e| CliError::Toml {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn evaluate_reports(ctx: &Ctx, specs: &[String], pogs: &[Pog], grid: &VoxelGrid, bits: bool) -> Result<Vec<MetricsReport>> {
    let mut configs = Vec::new();
    for s in specs {
        if s == "all" {
            configs.extend(all_builtins().into_iter().map(|c| match ctx.azimuth_steps {
                Some(n) => c.with_azimuth_steps(n),
                None => c,
            }));
        } else {
            configs.push(ctx.placement(s)?);
        }
    }
    configs
        .iter()
        .map(|c| {
            let r = evaluate_with(c, pogs, grid, ctx.opts())?;
            Ok(if bits { r.in_bits() } else { r })
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        roi: cli.roi,
        delta: cli.delta,
        classes: cli.classes,
        azimuth_steps: cli.azimuth_steps,
        threads: cli.threads,
        seed: cli.seed,
        out: cli.out,
    };
    match cli.command {
        Command::PogBuild {
            labels,
            format,
            skip_unknown,
            text,
        } => {
            let out = ctx.out_required("dir")?.to_path_buf();
            let grid = ctx.grid()?;
            let dataset = match format {
                LabelFormat::Native => import_dataset(&labels)?,
                LabelFormat::Kitti => {
                    let opts = KittiOptions {
                        unknown: if skip_unknown {
                            UnknownTypePolicy::Skip
                        } else {
                            UnknownTypePolicy::Fail
                        },
                        ..KittiOptions::default()
                    };
                    import_kitti_labels(&labels, &opts)?
                }
            };
            let classes = ctx
                .classes()?
                .unwrap_or_else(|| vec![ClassLabel::Car, ClassLabel::VanCyclist]);
            let mut files = Vec::new();
            for c in classes {
                let pog = estimate_pog_with(&dataset, &grid, c, ctx.threads)?;
                files.push(Staged::new(out.join(format!("{c}.pog")), encode_pog(&pog)));
                if text {
                    files.push(Staged::new(out.join(format!("{c}.txt")), export_pog_text(&pog).into_bytes()));
                }
                println!(
                    "{c}: {} frames, {} nonzero voxels -> {}",
                    pog.frame_count(),
                    pog.len(),
                    out.join(format!("{c}.pog")).display()
                );
            }
            commit(&files)?;
        }
        Command::Evaluate { placement, pogs, bits } => {
            let grid = ctx.grid()?;
            let pogs = ctx.pogs(&pogs, &grid)?;
            let report = evaluate_reports(&ctx, &[placement], &pogs, &grid, bits)?.remove(0);
            if let Some(out) = &ctx.out {
                commit(&[Staged::new(out, report.to_csv().into_bytes())])?;
            }
            print!("{}", report.to_text());
        }
        Command::Compare { placements, pogs, bits } => {
            let grid = ctx.grid()?;
            let pogs = ctx.pogs(&pogs, &grid)?;
            let mut reports = evaluate_reports(&ctx, &placements, &pogs, &grid, bits)?;
            reports.sort_by(|a, b| {
                b.s_mig()
                    .total_cmp(&a.s_mig())
                    .then_with(|| a.config_name.cmp(&b.config_name))
            });
            let mut csv = format!("{CSV_HEADER}\n");
            for r in &reports {
                csv.push_str(&r.csv_rows());
            }
            if let Some(out) = &ctx.out {
                commit(&[Staged::new(out, csv.into_bytes())])?;
            }
            println!("{:>4}  {:<24} {:>12} {:>12}", "rank", "placement", "S-MIG(e3)", "IG(e3)");
            for (i, r) in reports.iter().enumerate() {
                println!(
                    "{:>4}  {:<24} {:>12} {:>12}",
                    i + 1,
                    r.config_name,
                    lidarplace_core::metrics::format_thousands(r.s_mig()),
                    lidarplace_core::metrics::format_thousands(r.total.info_gain)
                );
            }
        }
        Command::Generate {
            params,
            frames,
            density,
        } => {
            let out = ctx.out_required("dir")?.to_path_buf();
            let mut p: ScenarioParams = match &params {
                Some(path) => read_toml(path)?,
                None => ScenarioParams::default(),
            };
            if let Some(n) = frames {
                p.frame_count = n;
            }
            if let Some(d) = density {
                p.density = d;
            }
            if let Some(s) = ctx.seed {
                p.seed = s;
            }
            if ctx.roi.is_some() {
                p.region = ctx.grid()?.roi;
            }
            let dataset = lidarplace_core::generate(&p)?;
            let used = toml::to_string(&p).map_err(|e| CliError::Usage(e.to_string()))?;
            stage_dir(&out, |tmp| {
                export_dataset(&dataset, tmp)?;
                fs::write(tmp.join("params.toml"), used.as_bytes()).map_err(|e| lidarplace_core::Error::Io {
                    path: tmp.join("params.toml"),
                    source: e,
                })
            })?;
            println!("{} frames -> {}", dataset.frame_count(), out.display());
        }
        Command::Optimize { initial, space, pogs } => {
            let out = ctx.out_required("dir")?.to_path_buf();
            let grid = ctx.grid()?;
            let pogs = ctx.pogs(&pogs, &grid)?;
            let initial = ctx.placement(&initial)?;
            let mut space: SearchSpace = match &space {
                Some(path) => read_toml(path)?,
                None => SearchSpace::default(),
            };
            if ctx.threads.is_some() {
                space.threads = ctx.threads;
            }
            let result = optimize(&initial, &space, &pogs, &grid)?;
            commit(&[
                Staged::new(out.join("optimized.placement"), format_placement(&result.config).into_bytes()),
                Staged::new(out.join("trace.csv"), trace_csv(&result.trace).into_bytes()),
                Staged::new(out.join("report.csv"), result.report.to_csv().into_bytes()),
            ])?;
            println!("{} evaluations", result.evaluations);
            print!("{}", result.report.to_text());
        }
        Command::Sweep {
            template,
            dimension,
            values,
            targets,
            pogs,
        } => {
            let grid = ctx.grid()?;
            let pogs = ctx.pogs(&pogs, &grid)?;
            let template = ctx.placement(&template)?;
            let targets = match targets {
                Some(t) => parse_targets(&t)?,
                None => (0..template.sensors.len()).map(|i| (i, 1.0)).collect(),
            };
            let rows = grid_sweep(&template, &targets, dimension, &values, &pogs, &grid, ctx.opts())?;
            let csv = sweep_csv(dimension, &rows);
            match &ctx.out {
                Some(out) => commit(&[Staged::new(out, csv.into_bytes())])?,
                None => print!("{csv}"),
            }
        }
        Command::Correlate { detections, reports } => {
            let out = ctx.out_required("dir")?.to_path_buf();
            let det = read_detection_csv(&detections)?;
            let mut s_mig = std::collections::BTreeMap::new();
            for r in &reports {
                for (k, v) in read_report_s_mig(r)? {
                    if s_mig.insert(k.clone(), v).is_some() {
                        return Err(lidarplace_core::Error::Validation(format!(
                            "placement {k:?} appears in more than one report"
                        ))
                        .into());
                    }
                }
            }
            let rows = join(&det, &s_mig)?;
            let results = correlate(&rows)?;
            let coeffs = coefficients_csv(&results);
            let mut files = vec![Staged::new(out.join("coefficients.csv"), coeffs.clone().into_bytes())];
            for m in metric_names(&rows) {
                let safe: String = m
                    .chars()
                    .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
                    .collect();
                files.push(Staged::new(out.join(format!("scatter-{safe}.svg")), scatter_svg(&rows, &m).into_bytes()));
            }
            commit(&files)?;
            print!("{coeffs}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lidarplace: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
