//! File formats: trajectory CSV, SVG projections, OBJ meshes, TOML records,
//! and the sweep grid CSV.
//!
//! Floating-point values in CSV files carry 17 significant digits, so a
//! parse of an export reproduces the binary values bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use glv_surgery::{
    FixedPoint, State, SurgeryMesh, SweepResult, TopologyReport, Trajectory, Verdict,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("serialization failed: {0}")]
    Serialize(String),
}

fn write_file(path: &Path, content: &str) -> Result<(), IoError> {
    std::fs::write(path, content).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

/// Full-precision decimal: 17 significant digits round-trips f64 exactly.
fn full(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.samples().len() * 80);
    out.push_str("t,X,Y,Z\n");
    for s in traj.samples() {
        let _ = writeln!(out, "{},{},{},{}", full(s.t), full(s.x), full(s.y), full(s.z));
    }
    out
}

pub fn export_trajectory_csv(traj: &Trajectory, path: &Path) -> Result<(), IoError> {
    write_file(path, &trajectory_csv(traj))
}

pub fn parse_trajectory_csv(path: &Path) -> Result<Vec<State>, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    parse_trajectory_csv_str(&text, &path.display().to_string())
}

pub fn parse_trajectory_csv_str(text: &str, origin: &str) -> Result<Vec<State>, IoError> {
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != "t,X,Y,Z" {
                return Err(IoError::Parse {
                    path: origin.to_string(),
                    line: 1,
                    msg: format!("expected header t,X,Y,Z, got {line:?}"),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(IoError::Parse {
                path: origin.to_string(),
                line: i + 1,
                msg: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let mut vals = [0.0; 4];
        for (slot, field) in vals.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|e| IoError::Parse {
                path: origin.to_string(),
                line: i + 1,
                msg: format!("{field:?}: {e}"),
            })?;
        }
        samples.push(State::new(vals[1], vals[2], vals[3], vals[0]));
    }
    Ok(samples)
}

/// Projection plane for SVG exports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ProjectionPlane {
    Xy,
    Xz,
    Yz,
}

impl ProjectionPlane {
    fn project(&self, s: &State) -> (f64, f64) {
        match self {
            ProjectionPlane::Xy => (s.x, s.y),
            ProjectionPlane::Xz => (s.x, s.z),
            ProjectionPlane::Yz => (s.y, s.z),
        }
    }

    fn label(&self) -> &'static str {
        match self {
            ProjectionPlane::Xy => "XY",
            ProjectionPlane::Xz => "XZ",
            ProjectionPlane::Yz => "YZ",
        }
    }
}

/// Standalone SVG with one polyline of the chosen 2D projection.
pub fn projection_svg(traj: &Trajectory, plane: ProjectionPlane) -> String {
    let pts: Vec<(f64, f64)> = traj.samples().iter().map(|s| plane.project(s)).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let w = (x1 - x0).max(1e-9);
    let h = (y1 - y0).max(1e-9);
    let margin = 0.05 * w.max(h);
    let mut out = String::with_capacity(pts.len() * 24 + 256);
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\">",
        x0 - margin,
        -(y1 + margin),
        w + 2.0 * margin,
        h + 2.0 * margin,
    );
    let _ = writeln!(out, "<!-- {} projection -->", plane.label());
    let _ = write!(
        out,
        "<polyline fill=\"none\" stroke=\"#1a1a1a\" stroke-width=\"{:.6}\" points=\"",
        0.002 * w.max(h)
    );
    // SVG y grows downward; negate to keep the usual orientation.
    for (i, &(x, y)) in pts.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{x:.6},{:.6}", -y);
    }
    out.push_str("\"/>\n</svg>\n");
    out
}

pub fn export_projection_svg(
    traj: &Trajectory,
    plane: ProjectionPlane,
    path: &Path,
) -> Result<(), IoError> {
    write_file(path, &projection_svg(traj, plane))
}

/// ASCII OBJ: `v x y z` lines then `f i j k` lines with 1-based indices.
pub fn mesh_obj(mesh: &SurgeryMesh) -> String {
    let mut out = String::with_capacity(mesh.vertices.len() * 48 + mesh.faces.len() * 16);
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {:.9} {:.9} {:.9}", v[0], v[1], v[2]);
    }
    for f in &mesh.faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

pub fn export_mesh_obj(mesh: &SurgeryMesh, path: &Path) -> Result<(), IoError> {
    write_file(path, &mesh_obj(mesh))
}

/// Filename for one morph family member: `morph_s{s}_r{r}.obj`.
pub fn morph_filename(s: f64, r: f64) -> String {
    format!("morph_s{s}_r{r}.obj")
}

pub type ObjData = (Vec<[f64; 3]>, Vec<[usize; 3]>);

pub fn parse_obj(text: &str, origin: &str) -> Result<ObjData, IoError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut v = [0.0; 3];
                for slot in &mut v {
                    *slot = parts
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| IoError::Parse {
                            path: origin.to_string(),
                            line: i + 1,
                            msg: "malformed vertex".to_string(),
                        })?;
                }
                vertices.push(v);
            }
            Some("f") => {
                let mut f = [0usize; 3];
                for slot in &mut f {
                    let idx: usize = parts
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| IoError::Parse {
                            path: origin.to_string(),
                            line: i + 1,
                            msg: "malformed face".to_string(),
                        })?;
                    *slot = idx - 1;
                }
                faces.push(f);
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

pub fn report_toml(report: &TopologyReport) -> Result<String, IoError> {
    toml::to_string_pretty(report).map_err(|e| IoError::Serialize(e.to_string()))
}

pub fn export_report(report: &TopologyReport, path: &Path) -> Result<(), IoError> {
    write_file(path, &report_toml(report)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct FixedPointRecord {
    state: [f64; 3],
    eigenvalues_re: [f64; 3],
    eigenvalues_im: [f64; 3],
    classification: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct FixedPointFile {
    fixed_point: Vec<FixedPointRecord>,
}

pub fn fixed_points_toml(points: &[FixedPoint]) -> Result<String, IoError> {
    let records = FixedPointFile {
        fixed_point: points
            .iter()
            .map(|f| FixedPointRecord {
                state: [f.state.x, f.state.y, f.state.z],
                eigenvalues_re: [
                    f.eigenvalues[0].re,
                    f.eigenvalues[1].re,
                    f.eigenvalues[2].re,
                ],
                eigenvalues_im: [
                    f.eigenvalues[0].im,
                    f.eigenvalues[1].im,
                    f.eigenvalues[2].im,
                ],
                classification: format!("{:?}", f.classification),
            })
            .collect(),
    };
    toml::to_string_pretty(&records).map_err(|e| IoError::Serialize(e.to_string()))
}

pub fn export_fixed_points(points: &[FixedPoint], path: &Path) -> Result<(), IoError> {
    write_file(path, &fixed_points_toml(points)?)
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::FixedPoint => "FixedPoint",
        Verdict::Spherical => "Spherical",
        Verdict::Toroidal => "Toroidal",
        Verdict::Chaotic => "Chaotic",
        Verdict::Unresolved => "Unresolved",
    }
}

/// Sweep grid CSV: one row per `(cell, IC)` run.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    out.push_str("C,ratio,ic_index,verdict,winding,recurrence\n");
    for cell in &result.cells {
        for run in &cell.runs {
            match &run.outcome {
                Ok(report) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        full(cell.c),
                        full(cell.ratio),
                        run.ic_index,
                        verdict_str(report.verdict),
                        report.winding_count,
                        full(report.recurrence_distance),
                    );
                }
                Err(msg) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},Error({}),0,nan",
                        full(cell.c),
                        full(cell.ratio),
                        run.ic_index,
                        msg.replace(',', ";"),
                    );
                }
            }
        }
    }
    out
}

pub fn export_sweep_csv(result: &SweepResult, path: &Path) -> Result<(), IoError> {
    write_file(path, &sweep_csv(result))
}
