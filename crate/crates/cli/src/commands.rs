//! Command execution. Data goes to files only; diagnostics go to stderr.
//! Partially written outputs are removed when a command fails.

use std::path::{Path, PathBuf};

use glv_surgery::{
    classify_with, fixed_points, integrate, morph_surface, run_sweep, IntegrateError, MorphParams,
};
use thiserror::Error;

use crate::config::{
    ClassifyPlan, FiguresPlan, FixedPointsPlan, MorphPlan, SimulatePlan, SweepPlan,
};
use crate::io::{self, IoError, ProjectionPlane};

#[derive(Debug, Error)]
pub enum CmdError {
    /// Bad flags, invalid configuration, or file-system trouble. Exit 1.
    #[error("{0}")]
    Validation(String),
    /// The computation itself failed (blow-up, step underflow). Exit 2.
    #[error("{0}")]
    Numerical(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Validation(_) => 1,
            CmdError::Numerical(_) => 2,
        }
    }
}

impl From<IoError> for CmdError {
    fn from(e: IoError) -> Self {
        CmdError::Validation(e.to_string())
    }
}

impl From<IntegrateError> for CmdError {
    fn from(e: IntegrateError) -> Self {
        match e {
            IntegrateError::StepSizeUnderflow { .. } | IntegrateError::NonFiniteState { .. } => {
                CmdError::Numerical(e.to_string())
            }
            other => CmdError::Validation(other.to_string()),
        }
    }
}

/// Tracks files written by one command so a failure leaves nothing behind.
#[derive(Default)]
struct Outputs {
    created: Vec<PathBuf>,
}

impl Outputs {
    fn note(&mut self, path: &Path) {
        self.created.push(path.to_path_buf());
    }

    fn discard(&self) {
        for path in &self.created {
            let _ = std::fs::remove_file(path);
        }
    }
}

fn guarded<F>(body: F) -> Result<Vec<PathBuf>, CmdError>
where
    F: FnOnce(&mut Outputs) -> Result<(), CmdError>,
{
    let mut outputs = Outputs::default();
    match body(&mut outputs) {
        Ok(()) => Ok(outputs.created),
        Err(e) => {
            outputs.discard();
            Err(e)
        }
    }
}

pub fn simulate(plan: &SimulatePlan) -> Result<Vec<PathBuf>, CmdError> {
    guarded(|outputs| {
        let traj = integrate(plan.setup.params, plan.setup.ic, &plan.setup.integrator)?;
        io::export_trajectory_csv(&traj, &plan.out)?;
        outputs.note(&plan.out);
        Ok(())
    })
}

pub fn classify_cmd(plan: &ClassifyPlan) -> Result<Vec<PathBuf>, CmdError> {
    guarded(|outputs| {
        let traj = integrate(plan.setup.params, plan.setup.ic, &plan.setup.integrator)?;
        let report = classify_with(&traj, &plan.thresholds);
        io::export_report(&report, &plan.report)?;
        outputs.note(&plan.report);
        if let Some(csv) = &plan.csv {
            io::export_trajectory_csv(&traj, csv)?;
            outputs.note(csv);
        }
        eprintln!("verdict: {:?}", report.verdict);
        Ok(())
    })
}

pub fn fixed_points_cmd(plan: &FixedPointsPlan) -> Result<Vec<PathBuf>, CmdError> {
    guarded(|outputs| {
        let points = fixed_points(plan.params);
        io::export_fixed_points(&points, &plan.out)?;
        outputs.note(&plan.out);
        Ok(())
    })
}

pub fn sweep_cmd(plan: &SweepPlan) -> Result<Vec<PathBuf>, CmdError> {
    guarded(|outputs| {
        let result = run_sweep(&plan.spec).map_err(|e| CmdError::Validation(e.to_string()))?;
        io::export_sweep_csv(&result, &plan.out)?;
        outputs.note(&plan.out);
        Ok(())
    })
}

pub fn morph_cmd(plan: &MorphPlan) -> Result<Vec<PathBuf>, CmdError> {
    guarded(|outputs| {
        ensure_dir(&plan.out_dir)?;
        for &r in &plan.layers {
            let mp = MorphParams { r, ..plan.base };
            let mesh = morph_surface(&mp).map_err(|e| match e {
                glv_surgery::SurgeryError::NonManifoldMesh { .. } => {
                    CmdError::Numerical(e.to_string())
                }
                other => CmdError::Validation(other.to_string()),
            })?;
            let path = plan.out_dir.join(io::morph_filename(mp.s, r));
            io::export_mesh_obj(&mesh, &path)?;
            outputs.note(&path);
        }
        Ok(())
    })
}

/// The reference simulation runs: the five shell starters at A = B = C = 3,
/// the four torus starters at A = 2.9851, B = C = 3, and the outermost
/// (fractal) shell starter. Byte-identical on rerun.
pub fn figures_cmd(plan: &FiguresPlan) -> Result<Vec<PathBuf>, CmdError> {
    guarded(|outputs| {
        ensure_dir(&plan.out_dir)?;
        let runs: Vec<(String, [f64; 3], [f64; 3])> = {
            let spherical: [[f64; 3]; 5] = [
                [1.0, 1.59, 0.81],
                [1.0, 1.3, 0.89],
                [1.0, 1.18, 0.95],
                [1.0, 1.08, 0.98],
                [1.0, 1.0, 1.0],
            ];
            let toroidal: [[f64; 3]; 4] = [
                [1.1075, 1.0, 1.0],
                [1.0, 1.0, 0.95],
                [1.0, 1.0, 0.9],
                [1.0, 1.0, 1.0],
            ];
            let mut runs = Vec::new();
            for (i, ic) in spherical.iter().enumerate() {
                runs.push((format!("shell_{i}"), [3.0, 3.0, 3.0], *ic));
            }
            for (i, ic) in toroidal.iter().enumerate() {
                runs.push((format!("torus_{i}"), [2.9851, 3.0, 3.0], *ic));
            }
            runs.push(("fractal".to_string(), [2.9851, 3.0, 3.0], [1.45, 1.0, 1.45]));
            runs
        };
        for (name, [a, b, c], ic) in runs {
            let params = glv_surgery::SystemParams::new(a, b, c)
                .map_err(|e| CmdError::Validation(e.to_string()))?;
            let traj = integrate(
                params,
                glv_surgery::State::at_origin_time(ic[0], ic[1], ic[2]),
                &glv_surgery::IntegratorConfig::default(),
            )?;
            let csv = plan.out_dir.join(format!("{name}.csv"));
            io::export_trajectory_csv(&traj, &csv)?;
            outputs.note(&csv);
            let svg = plan.out_dir.join(format!("{name}.svg"));
            io::export_projection_svg(&traj, plan.plane, &svg)?;
            outputs.note(&svg);
        }
        Ok(())
    })
}

fn ensure_dir(dir: &Path) -> Result<(), CmdError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CmdError::Validation(format!("{}: {e}", dir.display())))
}

/// Re-export for tests: render figures in-memory keyed by file name.
pub fn figure_plane_default() -> ProjectionPlane {
    ProjectionPlane::Xz
}
