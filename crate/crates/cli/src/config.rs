//! Command-line arguments, the optional TOML config file, and their merge.
//!
//! Flags win over config-file values; config-file values win over defaults.
//! All numeric invariants are validated here, before any computation runs.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use glv_surgery::{
    ClassifierThresholds, IntegratorConfig, MorphParams, RangeSpec, Resolution, State, SweepSpec,
    SystemParams, TwistSpec,
};
use serde::Deserialize;
use thiserror::Error;

use crate::io::ProjectionPlane;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("config file {path}: {msg}")]
    File { path: String, msg: String },
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

/// Numerical simulator and topological analysis toolkit for the
/// two-predator/one-prey generalized Lotka-Volterra system, with a mesh
/// generator for the sphere-to-torus surgery its trajectories perform.
#[derive(Debug, Parser)]
#[command(name = "glv-surgery", version, max_term_width = 100)]
pub struct Cli {
    /// Optional TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one trajectory and write it as CSV.
    Simulate(SimulateArgs),
    /// Integrate one trajectory and write its topology report (and
    /// optionally the trajectory CSV).
    Classify(ClassifyArgs),
    /// Write the system's equilibria with eigenvalues and stability classes.
    FixedPoints(FixedPointsArgs),
    /// Scan the (C, B/A) plane, classifying per grid cell, and write the
    /// grid as CSV.
    Sweep(SweepArgs),
    /// Generate surgery morph meshes as OBJ files.
    Morph(MorphArgs),
    /// Regenerate the reference simulation runs (shell nesting, torus
    /// nesting, fractal shell) as CSV plus SVG projections.
    Figures(FiguresArgs),
}

#[derive(Debug, Args, Clone)]
pub struct DynamicsArgs {
    /// Predator-Z coupling A > 0.
    #[arg(long = "A")]
    pub a: Option<f64>,
    /// Predator-Z decay B > 0.
    #[arg(long = "B")]
    pub b: Option<f64>,
    /// Prey self-interaction C > 0.
    #[arg(long = "C")]
    pub c: Option<f64>,
    /// Initial condition as X,Y,Z.
    #[arg(long, value_parser = parse_triple)]
    pub ic: Option<[f64; 3]>,
    /// Integration horizon.
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Uniform output sample spacing.
    #[arg(long)]
    pub sample_dt: Option<f64>,
    /// Relative tolerance.
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Absolute tolerance.
    #[arg(long)]
    pub atol: Option<f64>,
    /// Initial step size.
    #[arg(long)]
    pub h_init: Option<f64>,
    /// Maximum step size.
    #[arg(long)]
    pub h_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
    /// Output CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
    /// Topology report output path (TOML record).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Optional trajectory CSV output path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FixedPointsArgs {
    #[arg(long = "A")]
    pub a: Option<f64>,
    #[arg(long = "B")]
    pub b: Option<f64>,
    #[arg(long = "C")]
    pub c: Option<f64>,
    /// Output path (TOML record list).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub c_lo: Option<f64>,
    #[arg(long)]
    pub c_hi: Option<f64>,
    #[arg(long)]
    pub c_n: Option<usize>,
    #[arg(long)]
    pub ratio_lo: Option<f64>,
    #[arg(long)]
    pub ratio_hi: Option<f64>,
    #[arg(long)]
    pub ratio_n: Option<usize>,
    /// A is held fixed; B = ratio * A per cell.
    #[arg(long)]
    pub fixed_a: Option<f64>,
    /// Initial conditions (repeatable); defaults to the nine reference ICs.
    #[arg(long = "ic", value_parser = parse_triple)]
    pub ics: Vec<[f64; 3]>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Output CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MorphArgs {
    /// Morph parameter in [0, 1] (1/2 is the singular instant).
    #[arg(long)]
    pub s: Option<f64>,
    /// Layer radii, comma separated and strictly decreasing, e.g. 1.0,0.5.
    #[arg(long, value_delimiter = ',')]
    pub layers: Option<Vec<f64>>,
    /// Top disc rotation in radians.
    #[arg(long)]
    pub theta_top: Option<f64>,
    /// Bottom disc rotation in radians.
    #[arg(long)]
    pub theta_bottom: Option<f64>,
    #[arg(long)]
    pub n_theta: Option<usize>,
    #[arg(long)]
    pub n_phi: Option<usize>,
    /// Angular radius of the polar disc neighbourhoods.
    #[arg(long)]
    pub pole_disc_angle: Option<f64>,
    /// Directory receiving morph_s{s}_r{r}.obj files.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FiguresArgs {
    /// Directory receiving the CSV and SVG outputs.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Projection plane for the SVG plots.
    #[arg(long, value_enum)]
    pub plane: Option<ProjectionPlane>,
}

fn parse_triple(text: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected X,Y,Z, got {text:?}"));
    }
    let mut out = [0.0; 3];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|e| format!("{part:?}: {e}"))?;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Config file shape
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub simulate: DynamicsFile,
    #[serde(default)]
    pub classify: ClassifyFile,
    #[serde(default)]
    pub fixed_points: FixedPointsFile,
    #[serde(default)]
    pub sweep: SweepFile,
    #[serde(default)]
    pub morph: MorphFile,
    #[serde(default)]
    pub figures: FiguresFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsFile {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub ic: Option<[f64; 3]>,
    pub t_end: Option<f64>,
    pub sample_dt: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub h_init: Option<f64>,
    pub h_max: Option<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyFile {
    #[serde(flatten)]
    pub dynamics: DynamicsFile,
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub thresholds: ThresholdsFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointsFile {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub c_lo: Option<f64>,
    pub c_hi: Option<f64>,
    pub c_n: Option<usize>,
    pub ratio_lo: Option<f64>,
    pub ratio_hi: Option<f64>,
    pub ratio_n: Option<usize>,
    pub fixed_a: Option<f64>,
    pub ics: Option<Vec<[f64; 3]>>,
    pub t_end: Option<f64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub thresholds: ThresholdsFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphFile {
    pub s: Option<f64>,
    pub layers: Option<Vec<f64>>,
    pub theta_top: Option<f64>,
    pub theta_bottom: Option<f64>,
    pub n_theta: Option<usize>,
    pub n_phi: Option<usize>,
    pub pole_disc_angle: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiguresFile {
    pub out_dir: Option<PathBuf>,
}

/// Partial classifier thresholds: absent fields keep their defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsFile {
    pub fixed_point_diameter: Option<f64>,
    pub core_percentile: Option<f64>,
    pub stall_span_fraction: Option<f64>,
    pub stall_flatness: Option<f64>,
    pub winding_min_count: Option<u32>,
    pub winding_count_slack: Option<f64>,
    pub winding_min_median_step: Option<f64>,
    pub loop_gap_fraction: Option<f64>,
    pub loop_min_points: Option<usize>,
    pub recurrence_fraction: Option<f64>,
    pub settle_fraction: Option<f64>,
    pub recurrence_guard: Option<f64>,
}

impl ThresholdsFile {
    pub fn apply(&self, base: ClassifierThresholds) -> ClassifierThresholds {
        ClassifierThresholds {
            fixed_point_diameter: self.fixed_point_diameter.unwrap_or(base.fixed_point_diameter),
            core_percentile: self.core_percentile.unwrap_or(base.core_percentile),
            stall_span_fraction: self.stall_span_fraction.unwrap_or(base.stall_span_fraction),
            stall_flatness: self.stall_flatness.unwrap_or(base.stall_flatness),
            winding_min_count: self.winding_min_count.unwrap_or(base.winding_min_count),
            winding_count_slack: self.winding_count_slack.unwrap_or(base.winding_count_slack),
            winding_min_median_step: self
                .winding_min_median_step
                .unwrap_or(base.winding_min_median_step),
            loop_gap_fraction: self.loop_gap_fraction.unwrap_or(base.loop_gap_fraction),
            loop_min_points: self.loop_min_points.unwrap_or(base.loop_min_points),
            recurrence_fraction: self.recurrence_fraction.unwrap_or(base.recurrence_fraction),
            settle_fraction: self.settle_fraction.unwrap_or(base.settle_fraction),
            recurrence_guard: self.recurrence_guard.unwrap_or(base.recurrence_guard),
        }
    }
}

pub fn load_file_config(path: Option<&Path>) -> Result<FileConfig, ConfigError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::File {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    toml::from_str(&text).map_err(|e| ConfigError::File {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

// ---------------------------------------------------------------------------
// Resolved run configurations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RunSetup {
    pub params: SystemParams,
    pub ic: State,
    pub integrator: IntegratorConfig,
}

fn resolve_dynamics(args: &DynamicsArgs, file: &DynamicsFile) -> Result<RunSetup, ConfigError> {
    let a = args.a.or(file.a);
    let b = args.b.or(file.b);
    let c = args.c.or(file.c);
    let (Some(a), Some(b), Some(c)) = (a, b, c) else {
        return invalid("system parameters --A, --B, --C are required");
    };
    let params = SystemParams::new(a, b, c).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let Some(ic) = args.ic.or(file.ic) else {
        return invalid("initial condition --ic X,Y,Z is required");
    };
    if ic.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return invalid("initial condition must be finite and nonnegative");
    }
    let defaults = IntegratorConfig::default();
    let integrator = IntegratorConfig {
        rtol: args.rtol.or(file.rtol).unwrap_or(defaults.rtol),
        atol: args.atol.or(file.atol).unwrap_or(defaults.atol),
        h_init: args.h_init.or(file.h_init).unwrap_or(defaults.h_init),
        h_max: args.h_max.or(file.h_max).unwrap_or(defaults.h_max),
        t_end: args.t_end.or(file.t_end).unwrap_or(defaults.t_end),
        sample_dt: args
            .sample_dt
            .or(file.sample_dt)
            .unwrap_or(defaults.sample_dt),
    };
    integrator
        .validate()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(RunSetup {
        params,
        ic: State::at_origin_time(ic[0], ic[1], ic[2]),
        integrator,
    })
}

pub struct SimulatePlan {
    pub setup: RunSetup,
    pub out: PathBuf,
}

pub fn resolve_simulate(args: &SimulateArgs, file: &FileConfig) -> Result<SimulatePlan, ConfigError> {
    Ok(SimulatePlan {
        setup: resolve_dynamics(&args.dynamics, &file.simulate)?,
        out: args
            .out
            .clone()
            .or_else(|| file.simulate.out.clone())
            .unwrap_or_else(|| PathBuf::from("trajectory.csv")),
    })
}

pub struct ClassifyPlan {
    pub setup: RunSetup,
    pub thresholds: ClassifierThresholds,
    pub report: PathBuf,
    pub csv: Option<PathBuf>,
}

pub fn resolve_classify(args: &ClassifyArgs, file: &FileConfig) -> Result<ClassifyPlan, ConfigError> {
    let thresholds = file
        .classify
        .thresholds
        .apply(ClassifierThresholds::default());
    validate_thresholds(&thresholds)?;
    Ok(ClassifyPlan {
        setup: resolve_dynamics(&args.dynamics, &file.classify.dynamics)?,
        thresholds,
        report: args
            .report
            .clone()
            .or_else(|| file.classify.report.clone())
            .unwrap_or_else(|| PathBuf::from("report.toml")),
        csv: args.csv.clone().or_else(|| file.classify.csv.clone()),
    })
}

fn validate_thresholds(th: &ClassifierThresholds) -> Result<(), ConfigError> {
    let pos = [
        ("fixed_point_diameter", th.fixed_point_diameter),
        ("stall_span_fraction", th.stall_span_fraction),
        ("stall_flatness", th.stall_flatness),
        ("loop_gap_fraction", th.loop_gap_fraction),
        ("recurrence_fraction", th.recurrence_fraction),
        ("recurrence_guard", th.recurrence_guard),
    ];
    for (name, v) in pos {
        if !(v > 0.0 && v.is_finite()) {
            return invalid(format!("threshold {name} must be positive"));
        }
    }
    if !(th.core_percentile > 0.0 && th.core_percentile <= 50.0) {
        return invalid("core_percentile must lie in (0, 50]");
    }
    if !(th.settle_fraction >= 0.0 && th.settle_fraction < 1.0) {
        return invalid("settle_fraction must lie in [0, 1)");
    }
    Ok(())
}

pub struct FixedPointsPlan {
    pub params: SystemParams,
    pub out: PathBuf,
}

pub fn resolve_fixed_points(
    args: &FixedPointsArgs,
    file: &FileConfig,
) -> Result<FixedPointsPlan, ConfigError> {
    let a = args.a.or(file.fixed_points.a);
    let b = args.b.or(file.fixed_points.b);
    let c = args.c.or(file.fixed_points.c);
    let (Some(a), Some(b), Some(c)) = (a, b, c) else {
        return invalid("system parameters --A, --B, --C are required");
    };
    Ok(FixedPointsPlan {
        params: SystemParams::new(a, b, c).map_err(|e| ConfigError::Invalid(e.to_string()))?,
        out: args
            .out
            .clone()
            .or_else(|| file.fixed_points.out.clone())
            .unwrap_or_else(|| PathBuf::from("fixed_points.toml")),
    })
}

pub struct SweepPlan {
    pub spec: SweepSpec,
    pub out: PathBuf,
}

pub fn resolve_sweep(args: &SweepArgs, file: &FileConfig) -> Result<SweepPlan, ConfigError> {
    let f = &file.sweep;
    let ics = if !args.ics.is_empty() {
        args.ics.clone()
    } else if let Some(ics) = &f.ics {
        ics.clone()
    } else {
        Vec::new()
    };
    let ics: Vec<State> = if ics.is_empty() {
        SweepSpec::default_ics()
    } else {
        ics.iter()
            .map(|p| State::at_origin_time(p[0], p[1], p[2]))
            .collect()
    };
    let defaults = IntegratorConfig::default();
    let integrator = IntegratorConfig {
        t_end: args.t_end.or(f.t_end).unwrap_or(defaults.t_end),
        ..defaults
    };
    let thresholds = f.thresholds.apply(ClassifierThresholds::default());
    validate_thresholds(&thresholds)?;
    let spec = SweepSpec {
        c_range: RangeSpec::new(
            args.c_lo.or(f.c_lo).unwrap_or(3.0),
            args.c_hi.or(f.c_hi).unwrap_or(3.0),
            args.c_n.or(f.c_n).unwrap_or(1),
        ),
        ratio_range: RangeSpec::new(
            args.ratio_lo.or(f.ratio_lo).unwrap_or(0.95),
            args.ratio_hi.or(f.ratio_hi).unwrap_or(1.05),
            args.ratio_n.or(f.ratio_n).unwrap_or(11),
        ),
        fixed_a: args.fixed_a.or(f.fixed_a).unwrap_or(3.0),
        ics,
        integrator,
        thresholds,
    };
    spec.validate()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(SweepPlan {
        spec,
        out: args
            .out
            .clone()
            .or_else(|| f.out.clone())
            .unwrap_or_else(|| PathBuf::from("sweep.csv")),
    })
}

pub struct MorphPlan {
    pub base: MorphParams,
    pub layers: Vec<f64>,
    pub out_dir: PathBuf,
}

pub fn resolve_morph(args: &MorphArgs, file: &FileConfig) -> Result<MorphPlan, ConfigError> {
    let f = &file.morph;
    let Some(s) = args.s.or(f.s) else {
        return invalid("morph parameter --s is required");
    };
    let defaults = MorphParams::default();
    let twist_defaults = TwistSpec::default();
    let base = MorphParams {
        s,
        r: 1.0,
        twist: TwistSpec {
            theta_top: args
                .theta_top
                .or(f.theta_top)
                .unwrap_or(twist_defaults.theta_top),
            theta_bottom: args
                .theta_bottom
                .or(f.theta_bottom)
                .unwrap_or(twist_defaults.theta_bottom),
        },
        resolution: Resolution {
            n_theta: args
                .n_theta
                .or(f.n_theta)
                .unwrap_or(defaults.resolution.n_theta),
            n_phi: args.n_phi.or(f.n_phi).unwrap_or(defaults.resolution.n_phi),
        },
        pole_disc_angle: args
            .pole_disc_angle
            .or(f.pole_disc_angle)
            .unwrap_or(defaults.pole_disc_angle),
    };
    base.validate()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let layers = args
        .layers
        .clone()
        .or_else(|| f.layers.clone())
        .unwrap_or_else(|| vec![1.0]);
    if layers.is_empty() {
        return invalid("layer list must not be empty");
    }
    Ok(MorphPlan {
        base,
        layers,
        out_dir: args
            .out_dir
            .clone()
            .or_else(|| f.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from(".")),
    })
}

pub struct FiguresPlan {
    pub out_dir: PathBuf,
    pub plane: ProjectionPlane,
}

pub fn resolve_figures(args: &FiguresArgs, file: &FileConfig) -> Result<FiguresPlan, ConfigError> {
    Ok(FiguresPlan {
        out_dir: args
            .out_dir
            .clone()
            .or_else(|| file.figures.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("figures")),
        plane: args.plane.unwrap_or(ProjectionPlane::Xz),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triple_parsing() {
        assert_eq!(parse_triple("1,1.59,0.81").unwrap(), [1.0, 1.59, 0.81]);
        assert_eq!(parse_triple(" 1 , 2 , 3 ").unwrap(), [1.0, 2.0, 3.0]);
        assert!(parse_triple("1,2").is_err());
        assert!(parse_triple("1,2,x").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file: FileConfig = toml::from_str(
            r#"
            [simulate]
            a = 3.0
            b = 3.0
            c = 3.0
            ic = [1.0, 1.0, 1.0]
            t_end = 100.0
            out = "from_file.csv"
            "#,
        )
        .unwrap();
        let args = SimulateArgs {
            dynamics: DynamicsArgs {
                a: Some(2.9851),
                b: None,
                c: None,
                ic: None,
                t_end: Some(50.0),
                sample_dt: None,
                rtol: None,
                atol: None,
                h_init: None,
                h_max: None,
            },
            out: None,
        };
        let plan = resolve_simulate(&args, &file).unwrap();
        assert_eq!(plan.setup.params.a(), 2.9851); // flag wins
        assert_eq!(plan.setup.params.b(), 3.0); // file fills the rest
        assert_eq!(plan.setup.integrator.t_end, 50.0);
        assert_eq!(plan.out, PathBuf::from("from_file.csv"));
    }

    #[test]
    fn missing_required_params_rejected() {
        let args = SimulateArgs {
            dynamics: DynamicsArgs {
                a: Some(3.0),
                b: Some(3.0),
                c: None,
                ic: Some([1.0, 1.0, 1.0]),
                t_end: None,
                sample_dt: None,
                rtol: None,
                atol: None,
                h_init: None,
                h_max: None,
            },
            out: None,
        };
        assert!(resolve_simulate(&args, &FileConfig::default()).is_err());
    }

    #[test]
    fn threshold_overlay() {
        let file: ThresholdsFile = toml::from_str("loop_gap_fraction = 0.2").unwrap();
        let th = file.apply(ClassifierThresholds::default());
        assert_eq!(th.loop_gap_fraction, 0.2);
        assert_eq!(
            th.recurrence_fraction,
            ClassifierThresholds::default().recurrence_fraction
        );
    }

    #[test]
    fn unknown_config_keys_rejected() {
        assert!(toml::from_str::<FileConfig>("[simulate]\nbogus = 1\n").is_err());
        // The flattened dynamics keys inside [classify] still deny unknowns.
        assert!(toml::from_str::<FileConfig>("[classify]\nbogus = 1\n").is_err());
        assert!(toml::from_str::<FileConfig>(
            "[classify]\na = 3.0\nb = 3.0\nc = 3.0\nic = [1.0,1.0,1.0]\n"
        )
        .is_ok());
    }
}
