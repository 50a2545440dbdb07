//! Parameter-plane scan over `(C, B/A)`, classifying trajectory topology per
//! grid cell to map the stability geography around the `B/A = 1` boundary.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{State, SystemParams};
use crate::integrator::{integrate, IntegratorConfig};
use crate::topology::{classify_with, ClassifierThresholds, TopologyReport, Verdict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),
}

/// Inclusive linear range with `n` grid points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl RangeSpec {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        Self { lo, hi, n }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.n == 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64
        }
    }

    pub fn step(&self) -> f64 {
        if self.n <= 1 {
            0.0
        } else {
            (self.hi - self.lo) / (self.n - 1) as f64
        }
    }

    fn validate(&self, what: &str) -> Result<(), SweepError> {
        if !(self.lo > 0.0 && self.hi >= self.lo && self.lo.is_finite() && self.hi.is_finite()) {
            return Err(SweepError::InvalidSpec(format!(
                "{what} range must be positive and ordered"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub c_range: RangeSpec,
    pub ratio_range: RangeSpec,
    /// `A` is held fixed; `B = ratio * A` per cell.
    pub fixed_a: f64,
    pub ics: Vec<State>,
    pub integrator: IntegratorConfig,
    pub thresholds: ClassifierThresholds,
}

impl SweepSpec {
    /// The nine initial conditions of the reference simulations: the five
    /// shell starters and the four torus starters (their shared point listed
    /// in both groups, as published).
    pub fn default_ics() -> Vec<State> {
        [
            [1.0, 1.59, 0.81],
            [1.0, 1.3, 0.89],
            [1.0, 1.18, 0.95],
            [1.0, 1.08, 0.98],
            [1.0, 1.0, 1.0],
            [1.1075, 1.0, 1.0],
            [1.0, 1.0, 0.95],
            [1.0, 1.0, 0.9],
            [1.0, 1.0, 1.0],
        ]
        .iter()
        .map(|p| State::at_origin_time(p[0], p[1], p[2]))
        .collect()
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        self.c_range.validate("C")?;
        self.ratio_range.validate("ratio")?;
        if self.c_range.n < 1 || self.ratio_range.n < 2 {
            return Err(SweepError::InvalidSpec(
                "grid needs at least one C row and two ratio columns".into(),
            ));
        }
        if !(self.fixed_a > 0.0 && self.fixed_a.is_finite()) {
            return Err(SweepError::InvalidSpec("fixed_a must be positive".into()));
        }
        if self.ics.is_empty() {
            return Err(SweepError::InvalidSpec("IC list is empty".into()));
        }
        self.integrator
            .validate()
            .map_err(|e| SweepError::InvalidSpec(e.to_string()))?;
        Ok(())
    }
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            c_range: RangeSpec::new(3.0, 3.0, 1),
            ratio_range: RangeSpec::new(0.95, 1.05, 11),
            fixed_a: 3.0,
            ics: Self::default_ics(),
            integrator: IntegratorConfig::default(),
            thresholds: ClassifierThresholds::default(),
        }
    }
}

/// Outcome for one `(cell, IC)` run; integrator failures are recorded, not
/// propagated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellRun {
    pub ic_index: usize,
    pub outcome: Result<TopologyReport, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCell {
    pub c: f64,
    pub ratio: f64,
    pub runs: Vec<CellRun>,
    pub majority: Verdict,
}

/// Row-major grid (C rows, ratio columns) of per-cell verdicts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub c_range: RangeSpec,
    pub ratio_range: RangeSpec,
    pub fixed_a: f64,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, ci: usize, ri: usize) -> &SweepCell {
        &self.cells[ci * self.ratio_range.n + ri]
    }
}

/// Tie rank: less stable wins a tie.
fn instability_rank(v: Verdict) -> u8 {
    match v {
        Verdict::Chaotic => 4,
        Verdict::Toroidal => 3,
        Verdict::Spherical => 2,
        Verdict::FixedPoint => 1,
        Verdict::Unresolved => 0,
    }
}

fn majority_verdict(runs: &[CellRun]) -> Verdict {
    let mut counts: Vec<(Verdict, usize)> = Vec::new();
    for run in runs {
        if let Ok(report) = &run.outcome {
            match counts.iter_mut().find(|(v, _)| *v == report.verdict) {
                Some((_, n)) => *n += 1,
                None => counts.push((report.verdict, 1)),
            }
        }
    }
    counts
        .into_iter()
        .max_by_key(|&(v, n)| (n, instability_rank(v)))
        .map(|(v, _)| v)
        .unwrap_or(Verdict::Unresolved)
}

/// Classify every `(C, ratio, IC)` combination. Cells are independent tasks
/// executed in parallel; assembly is keyed by cell index, so the result is
/// identical regardless of execution order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    spec.validate()?;
    let n_cells = spec.c_range.n * spec.ratio_range.n;
    let cells: Vec<SweepCell> = (0..n_cells)
        .into_par_iter()
        .map(|idx| {
            let ci = idx / spec.ratio_range.n;
            let ri = idx % spec.ratio_range.n;
            let c = spec.c_range.value(ci);
            let ratio = spec.ratio_range.value(ri);
            let runs: Vec<CellRun> = spec
                .ics
                .iter()
                .enumerate()
                .map(|(ic_index, &ic)| {
                    let outcome = SystemParams::new(spec.fixed_a, ratio * spec.fixed_a, c)
                        .map_err(|e| e.to_string())
                        .and_then(|p| {
                            integrate(p, ic, &spec.integrator).map_err(|e| e.to_string()).map(
                                |traj| classify_with(&traj, &spec.thresholds),
                            )
                        });
                    CellRun { ic_index, outcome }
                })
                .collect();
            let majority = majority_verdict(&runs);
            SweepCell {
                c,
                ratio,
                runs,
                majority,
            }
        })
        .collect();
    Ok(SweepResult {
        c_range: spec.c_range,
        ratio_range: spec.ratio_range,
        fixed_a: spec.fixed_a,
        cells,
    })
}

/// Cells flanking every majority-verdict change along the ratio axis.
pub fn boundary_estimate(result: &SweepResult) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for ci in 0..result.c_range.n {
        for ri in 0..result.ratio_range.n.saturating_sub(1) {
            let left = result.cell(ci, ri);
            let right = result.cell(ci, ri + 1);
            if left.majority != right.majority {
                out.push((left.c, left.ratio));
                out.push((right.c, right.ratio));
            }
        }
    }
    out.dedup_by(|a, b| a == b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_integrator() -> IntegratorConfig {
        IntegratorConfig {
            rtol: 1e-8,
            atol: 1e-11,
            t_end: 250.0,
            ..Default::default()
        }
    }

    #[test]
    fn empty_ics_rejected() {
        let spec = SweepSpec {
            ics: vec![],
            ..Default::default()
        };
        assert!(matches!(run_sweep(&spec), Err(SweepError::InvalidSpec(_))));
    }

    #[test]
    fn tiny_grid_rejected() {
        let spec = SweepSpec {
            c_range: RangeSpec::new(3.0, 3.0, 1),
            ratio_range: RangeSpec::new(1.0, 1.0, 1),
            ..Default::default()
        };
        assert!(run_sweep(&spec).is_err());
    }

    #[test]
    fn all_fixed_point_grid() {
        let spec = SweepSpec {
            c_range: RangeSpec::new(3.0, 3.0, 1),
            ratio_range: RangeSpec::new(1.0, 1.0, 2),
            fixed_a: 3.0,
            ics: vec![State::at_origin_time(1.0, 1.0, 1.0)],
            integrator: quick_integrator(),
            thresholds: ClassifierThresholds::default(),
        };
        let result = run_sweep(&spec).unwrap();
        assert!(result
            .cells
            .iter()
            .all(|cell| cell.majority == Verdict::FixedPoint));
        assert!(boundary_estimate(&result).is_empty());
    }

    #[test]
    fn two_cell_sweep_straddles_boundary() {
        // ratio 1.0 vs the published toroidal ratio 3/2.9851.
        let spec = SweepSpec {
            c_range: RangeSpec::new(3.0, 3.0, 1),
            ratio_range: RangeSpec::new(1.0, 3.0 / 2.9851, 2),
            fixed_a: 3.0,
            ics: SweepSpec::default_ics(),
            integrator: IntegratorConfig {
                t_end: 500.0,
                ..Default::default()
            },
            thresholds: ClassifierThresholds::default(),
        };
        let result = run_sweep(&spec).unwrap();
        let left = result.cell(0, 0);
        let right = result.cell(0, 1);
        for run in &left.runs {
            let verdict = run.outcome.as_ref().unwrap().verdict;
            assert!(
                matches!(verdict, Verdict::Spherical | Verdict::FixedPoint),
                "IC {} at ratio 1.0 gave {verdict:?}",
                run.ic_index
            );
        }
        assert!(matches!(
            right.majority,
            Verdict::Toroidal | Verdict::Chaotic
        ));
        let boundary = boundary_estimate(&result);
        assert_eq!(boundary.len(), 2);
    }

    #[test]
    fn rerun_is_bit_identical() {
        let spec = SweepSpec {
            c_range: RangeSpec::new(3.0, 3.0, 1),
            ratio_range: RangeSpec::new(0.99, 1.01, 2),
            fixed_a: 3.0,
            ics: vec![
                State::at_origin_time(1.0, 1.3, 0.89),
                State::at_origin_time(1.0, 1.0, 0.9),
            ],
            integrator: quick_integrator(),
            thresholds: ClassifierThresholds::default(),
        };
        let a = run_sweep(&spec).unwrap();
        let b = run_sweep(&spec).unwrap();
        for (ca, cb) in a.cells.iter().zip(&b.cells) {
            assert_eq!(ca.majority, cb.majority);
            for (ra, rb) in ca.runs.iter().zip(&cb.runs) {
                match (&ra.outcome, &rb.outcome) {
                    (Ok(x), Ok(y)) => {
                        assert_eq!(x.verdict, y.verdict);
                        assert_eq!(
                            x.recurrence_distance.to_bits(),
                            y.recurrence_distance.to_bits()
                        );
                        assert_eq!(x.total_angle.to_bits(), y.total_angle.to_bits());
                    }
                    (Err(x), Err(y)) => assert_eq!(x, y),
                    _ => panic!("outcome mismatch between identical sweeps"),
                }
            }
        }
    }
}
