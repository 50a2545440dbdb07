//! Trajectory topology classification.
//!
//! Decides whether a sampled orbit traces a sphere-like shell, an invariant
//! torus, or a chaotic shell. The decision uses three measurements:
//!
//! * the low-speed point cloud (the orbit near the slow manifold) and the
//!   line segment fitted through it by total least squares;
//! * the winding of the orbit around that segment's axis;
//! * the Poincare section on the plane orthogonal to the segment through its
//!   midpoint, tested for closing into a loop.
//!
//! Two empirical regimes matter. On the stable side (B/A <= 1) orbits
//! collapse onto the slow manifold: the low-speed cloud degenerates to a
//! point or a straight crawl of negligible thickness. That stall is the
//! sphere-shell signature. On the unstable side the orbit keeps drilling
//! through: a genuine core segment exists, the orbit winds around it, and
//! the section either closes into a thin loop (torus) or scatters (chaos).

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrator::{section_crossings, CrossingDirection, Plane, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("low-speed cloud spans {span:e} < 1e-6; cannot fit a core line")]
    DegenerateCloud { span: f64 },
    #[error("sample {index} lies within {distance:e} of the core axis; winding angle undefined")]
    AxisPuncture { index: usize, distance: f64 },
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
}

/// Estimated slow-manifold segment: a total-least-squares line through the
/// low-speed cloud, clipped to the cloud's extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreSegment {
    pub endpoint_a: [f64; 3],
    pub endpoint_b: [f64; 3],
    pub fit_rms: f64,
    pub speed_percentile_used: f64,
}

impl CoreSegment {
    pub fn a(&self) -> Vector3<f64> {
        Vector3::from(self.endpoint_a)
    }

    pub fn b(&self) -> Vector3<f64> {
        Vector3::from(self.endpoint_b)
    }

    pub fn length(&self) -> f64 {
        (self.b() - self.a()).norm()
    }

    pub fn midpoint(&self) -> Vector3<f64> {
        0.5 * (self.a() + self.b())
    }

    pub fn axis(&self) -> Vector3<f64> {
        (self.b() - self.a()).normalize()
    }
}

/// Accumulated rotation of an orbit around an axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindingMeasure {
    /// Whole revolutions: `floor(|total_angle| / 2 pi)`.
    pub count: u32,
    /// Signed total swept angle in radians.
    pub total_angle: f64,
    /// Largest single-sample angle increment.
    pub max_step: f64,
    /// Median absolute angle increment per sample. A median at the numeric
    /// noise floor means the azimuth is locked (the axis lies in the orbit
    /// plane) and the total is an artifact of axis flybys, not rotation.
    pub median_step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    FixedPoint,
    Spherical,
    Toroidal,
    Chaotic,
    Unresolved,
}

/// Classifier decision thresholds. Every verdict records the values used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierThresholds {
    /// Orbit diameter at or below this is a fixed point.
    pub fixed_point_diameter: f64,
    /// Speed percentile selecting the slow cloud.
    pub core_percentile: f64,
    /// Stall test: slow cloud spans at most this fraction of the diameter.
    pub stall_span_fraction: f64,
    /// Stall test: cloud line-fit RMS at most this fraction of the cloud span.
    pub stall_flatness: f64,
    /// Toroidal test: minimum whole revolutions around the core.
    pub winding_min_count: u32,
    /// Tolerance (in turns) granted before flooring the winding count.
    pub winding_count_slack: f64,
    /// Winding is unreliable when the median absolute angle step per sample
    /// falls below this (radians): the orbit does not actually revolve.
    pub winding_min_median_step: f64,
    /// Loop test: largest angular gap as a fraction of the loop perimeter.
    pub loop_gap_fraction: f64,
    /// Loop test: minimum number of section points.
    pub loop_min_points: usize,
    /// Spherical test: recurrence at most this fraction of the diameter.
    pub recurrence_fraction: f64,
    /// Fraction of the horizon discarded before recurrence measurement.
    pub settle_fraction: f64,
    /// Time units around the reference excluded from recurrence search.
    pub recurrence_guard: f64,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        Self {
            fixed_point_diameter: 1e-5,
            core_percentile: 5.0,
            stall_span_fraction: 1e-2,
            stall_flatness: 1e-4,
            winding_min_count: 2,
            winding_count_slack: 0.05,
            winding_min_median_step: 1e-4,
            loop_gap_fraction: 0.10,
            loop_min_points: 8,
            recurrence_fraction: 1e-3,
            settle_fraction: 0.1,
            recurrence_guard: 5.0,
        }
    }
}

/// Classification verdict with the evidence that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopologyReport {
    pub verdict: Verdict,
    pub winding_count: u32,
    pub total_angle: f64,
    pub recurrence_distance: f64,
    pub min_speed: f64,
    pub diameter: f64,
    pub loop_gap: Option<f64>,
    pub core: Option<CoreSegment>,
    pub evidence_notes: String,
    pub thresholds: ClassifierThresholds,
}

/// Fit the slow-manifold segment from a trajectory's low-speed samples.
///
/// Selects samples whose field speed sits below the given percentile and
/// fits the principal axis of that cloud; endpoints are the extreme
/// projections of the cloud onto the axis.
pub fn estimate_core(traj: &Trajectory, percentile: f64) -> Result<CoreSegment, TopologyError> {
    let points: Vec<Vector3<f64>> = traj.samples().iter().map(|s| s.position()).collect();
    core_segment_of_cloud(&points, traj.speeds(), percentile)
}

/// Core-segment fit on an explicit point cloud with per-point speeds.
pub fn core_segment_of_cloud(
    points: &[Vector3<f64>],
    speeds: &[f64],
    percentile: f64,
) -> Result<CoreSegment, TopologyError> {
    let cloud = slow_cloud(points, speeds, percentile)?;
    let fit = fit_segment(&cloud);
    if (fit.b - fit.a).norm() < 1e-6 {
        return Err(TopologyError::DegenerateCloud { span: fit.span });
    }
    Ok(CoreSegment {
        endpoint_a: fit.a.into(),
        endpoint_b: fit.b.into(),
        fit_rms: fit.rms,
        speed_percentile_used: percentile,
    })
}

fn slow_cloud(
    points: &[Vector3<f64>],
    speeds: &[f64],
    percentile: f64,
) -> Result<Vec<Vector3<f64>>, TopologyError> {
    if points.len() < 16 || points.len() != speeds.len() {
        return Err(TopologyError::InsufficientSamples {
            needed: 16,
            got: points.len(),
        });
    }
    let mut sorted = speeds.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite speeds"));
    let idx = ((percentile / 100.0) * (sorted.len() - 1) as f64).round() as usize;
    let threshold = sorted[idx.min(sorted.len() - 1)];
    Ok(points
        .iter()
        .zip(speeds)
        .filter(|(_, &sp)| sp <= threshold)
        .map(|(p, _)| *p)
        .collect())
}

struct SegmentFit {
    a: Vector3<f64>,
    b: Vector3<f64>,
    rms: f64,
    /// Bounding-box diagonal of the cloud.
    span: f64,
}

/// Total least squares: principal covariance axis through the centroid.
fn fit_segment(cloud: &[Vector3<f64>]) -> SegmentFit {
    let n = cloud.len() as f64;
    let centroid: Vector3<f64> = cloud.iter().sum::<Vector3<f64>>() / n;
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    let mut cov = Matrix3::zeros();
    for p in cloud {
        lo = lo.inf(p);
        hi = hi.sup(p);
        let d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= n;
    let span = (hi - lo).norm();

    let eig = cov.symmetric_eigen();
    let mut dominant = 0;
    for i in 1..3 {
        if eig.eigenvalues[i] > eig.eigenvalues[dominant] {
            dominant = i;
        }
    }
    let axis: Vector3<f64> = eig.eigenvectors.column(dominant).into();
    let mut t_min = f64::INFINITY;
    let mut t_max = f64::NEG_INFINITY;
    let mut sq = 0.0;
    for p in cloud {
        let d = p - centroid;
        let t = d.dot(&axis);
        t_min = t_min.min(t);
        t_max = t_max.max(t);
        sq += (d - axis * t).norm_squared();
    }
    SegmentFit {
        a: centroid + axis * t_min,
        b: centroid + axis * t_max,
        rms: (sq / n).sqrt(),
        span,
    }
}

/// Signed rotation of a trajectory around the core axis through its midpoint.
pub fn winding_number(traj: &Trajectory, core: &CoreSegment) -> Result<WindingMeasure, TopologyError> {
    let points: Vec<Vector3<f64>> = traj.samples().iter().map(|s| s.position()).collect();
    winding_of_points(&points, core)
}

/// Winding of an explicit polyline around the core axis.
pub fn winding_of_points(
    points: &[Vector3<f64>],
    core: &CoreSegment,
) -> Result<WindingMeasure, TopologyError> {
    if points.len() < 2 {
        return Err(TopologyError::InsufficientSamples {
            needed: 2,
            got: points.len(),
        });
    }
    let axis = core.axis();
    let mid = core.midpoint();
    let (u, v) = orthonormal_frame(&axis);
    let mut total = 0.0;
    let mut max_step: f64 = 0.0;
    let mut steps = Vec::with_capacity(points.len());
    let mut prev: Option<f64> = None;
    for (i, p) in points.iter().enumerate() {
        let d = p - mid;
        let (x, y) = (d.dot(&u), d.dot(&v));
        let radial = (x * x + y * y).sqrt();
        if radial < 1e-9 {
            return Err(TopologyError::AxisPuncture {
                index: i,
                distance: radial,
            });
        }
        let phi = y.atan2(x);
        if let Some(prev_phi) = prev {
            let step = wrap_angle(phi - prev_phi);
            total += step;
            max_step = max_step.max(step.abs());
            steps.push(step.abs());
        }
        prev = Some(phi);
    }
    steps.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite angles"));
    let median_step = steps.get(steps.len() / 2).copied().unwrap_or(0.0);
    Ok(WindingMeasure {
        count: (total.abs() / std::f64::consts::TAU).floor() as u32,
        total_angle: total,
        max_step,
        median_step,
    })
}

fn wrap_angle(d: f64) -> f64 {
    let mut d = d % std::f64::consts::TAU;
    if d > std::f64::consts::PI {
        d -= std::f64::consts::TAU;
    } else if d <= -std::f64::consts::PI {
        d += std::f64::consts::TAU;
    }
    d
}

fn orthonormal_frame(axis: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let seed = if axis.x.abs() < 0.9 {
        Vector3::new(1.0, 0.0, 0.0)
    } else {
        Vector3::new(0.0, 1.0, 0.0)
    };
    let u = axis.cross(&seed).normalize();
    let v = axis.cross(&u);
    (u, v)
}

/// Minimum post-settle distance back to the post-settle reference point,
/// excluding a temporal guard window around the reference.
pub fn recurrence_distance(traj: &Trajectory, settle_fraction: f64) -> f64 {
    recurrence_with_guard(traj, settle_fraction, ClassifierThresholds::default().recurrence_guard)
}

pub fn recurrence_with_guard(traj: &Trajectory, settle_fraction: f64, guard: f64) -> f64 {
    let samples = traj.samples();
    if samples.is_empty() {
        return f64::INFINITY;
    }
    let t0 = samples[0].t;
    let t_end = samples[samples.len() - 1].t;
    let t_settle = t0 + settle_fraction * (t_end - t0);
    let start = samples.partition_point(|s| s.t < t_settle);
    if start >= samples.len() {
        return f64::INFINITY;
    }
    let reference = samples[start];
    let mut best = f64::INFINITY;
    for s in &samples[start..] {
        if (s.t - reference.t).abs() < guard {
            continue;
        }
        best = best.min((s.position() - reference.position()).norm());
    }
    best
}

/// Classify a trajectory with default thresholds.
pub fn classify(traj: &Trajectory) -> TopologyReport {
    classify_with(traj, &ClassifierThresholds::default())
}

/// Classify a trajectory.
///
/// Decision cascade:
/// 1. diameter at most `fixed_point_diameter` -> FixedPoint;
/// 2. slow cloud collapsed (span or flatness stall test) -> Spherical;
/// 3. winding >= `winding_min_count` and the one-direction Poincare section
///    closes into a loop -> Toroidal;
/// 4. winding >= `winding_min_count` without loop closure -> Chaotic;
/// 5. winding below the minimum and near-recurrent -> Spherical;
/// 6. otherwise Unresolved.
pub fn classify_with(traj: &Trajectory, thresholds: &ClassifierThresholds) -> TopologyReport {
    let th = *thresholds;
    let diameter = traj.diameter();
    let min_speed = traj.speeds().iter().copied().fold(f64::INFINITY, f64::min);
    let recurrence = recurrence_with_guard(traj, th.settle_fraction, th.recurrence_guard);
    let mut notes = Vec::new();
    if traj.t_end() - traj.samples().first().map(|s| s.t).unwrap_or(0.0) < 200.0 {
        notes.push("horizon below 200 time units; verdict may be premature".to_string());
    }

    let base = |verdict, winding: Option<WindingMeasure>, loop_gap, core, notes: Vec<String>| {
        TopologyReport {
            verdict,
            winding_count: winding.map(|w| w.count).unwrap_or(0),
            total_angle: winding.map(|w| w.total_angle).unwrap_or(0.0),
            recurrence_distance: recurrence,
            min_speed,
            diameter,
            loop_gap,
            core,
            evidence_notes: notes.join("; "),
            thresholds: th,
        }
    };

    if diameter <= th.fixed_point_diameter {
        notes.push(format!("diameter {diameter:.3e} within fixed-point bound"));
        return base(Verdict::FixedPoint, None, None, None, notes);
    }

    let points: Vec<Vector3<f64>> = traj.samples().iter().map(|s| s.position()).collect();
    let cloud = match slow_cloud(&points, traj.speeds(), th.core_percentile) {
        Ok(c) => c,
        Err(e) => {
            notes.push(format!("slow-cloud selection failed: {e}"));
            return base(Verdict::Unresolved, None, None, None, notes);
        }
    };
    let fit = fit_segment(&cloud);

    // Stall: the orbit parks on (or crawls along) the slow manifold. The
    // cloud collapses to a point or to a line of negligible thickness: the
    // stable-regime sphere-shell signature.
    let point_stall = fit.span <= th.stall_span_fraction * diameter;
    let line_stall = fit.span > 0.0 && fit.rms <= th.stall_flatness * fit.span;
    if point_stall || line_stall {
        notes.push(format!(
            "slow-manifold stall: cloud span {:.3e} ({:.3e} of diameter), fit rms {:.3e}",
            fit.span,
            fit.span / diameter,
            fit.rms
        ));
        return base(Verdict::Spherical, None, None, None, notes);
    }

    let core = CoreSegment {
        endpoint_a: fit.a.into(),
        endpoint_b: fit.b.into(),
        fit_rms: fit.rms,
        speed_percentile_used: th.core_percentile,
    };

    let winding = match winding_of_points(&points, &core) {
        Ok(mut w) => {
            w.count = (w.total_angle.abs() / std::f64::consts::TAU + th.winding_count_slack).floor()
                as u32;
            if w.median_step < th.winding_min_median_step {
                notes.push(format!(
                    "winding unreliable: median angle step {:.2e} rad at the noise floor",
                    w.median_step
                ));
                None
            } else {
                Some(w)
            }
        }
        Err(e) => {
            notes.push(format!("winding unavailable: {e}"));
            None
        }
    };

    let section = section_loop(traj, &core, &th);
    let loop_gap = section.as_ref().map(|s| s.gap_fraction);
    if let Some(sec) = &section {
        notes.push(format!(
            "section loop: {} points, gap {:.4} of perimeter ({})",
            sec.n_points,
            sec.gap_fraction,
            match sec.direction {
                CrossingDirection::Up => "up-crossings",
                CrossingDirection::Down => "down-crossings",
            }
        ));
    } else {
        notes.push("section loop: too few crossings".to_string());
    }

    if let Some(w) = winding {
        notes.push(format!(
            "winding {:+.3} turns around core (length {:.3e})",
            w.total_angle / std::f64::consts::TAU,
            core.length()
        ));
        if w.count >= th.winding_min_count {
            let loop_closed = section
                .as_ref()
                .map(|s| s.gap_fraction <= th.loop_gap_fraction)
                .unwrap_or(false);
            if loop_closed {
                return base(Verdict::Toroidal, winding, loop_gap, Some(core), notes);
            }
            notes.push("winding present but section does not close".to_string());
            return base(Verdict::Chaotic, winding, loop_gap, Some(core), notes);
        }
    }

    if recurrence <= th.recurrence_fraction * diameter {
        notes.push(format!(
            "near-recurrent: {:.3e} within {:.1e} of diameter",
            recurrence, th.recurrence_fraction
        ));
        return base(Verdict::Spherical, winding, loop_gap, Some(core), notes);
    }

    base(Verdict::Unresolved, winding, loop_gap, Some(core), notes)
}

struct SectionLoop {
    n_points: usize,
    gap_fraction: f64,
    direction: CrossingDirection,
}

/// One-direction Poincare section on the plane orthogonal to the core axis
/// through its midpoint, reduced to loop-closure evidence. Of the two
/// crossing directions, the one farther from the axis is used (the outer
/// return flow; the near-axis direction is the drill passage).
fn section_loop(
    traj: &Trajectory,
    core: &CoreSegment,
    th: &ClassifierThresholds,
) -> Option<SectionLoop> {
    let axis = core.axis();
    let mid = core.midpoint();
    let plane = Plane::new(axis, axis.dot(&mid));
    let crossings = section_crossings(traj, &plane);
    let (u, v) = orthonormal_frame(&axis);
    [CrossingDirection::Up, CrossingDirection::Down]
        .into_iter()
        .filter_map(|direction| {
            let pts: Vec<(f64, f64)> = crossings
                .iter()
                .filter(|c| c.direction == direction)
                .map(|c| {
                    let d = c.state.position() - mid;
                    (d.dot(&u), d.dot(&v))
                })
                .collect();
            if pts.len() < th.loop_min_points {
                return None;
            }
            let mean_radius = pts
                .iter()
                .map(|(x, y)| (x * x + y * y).sqrt())
                .sum::<f64>()
                / pts.len() as f64;
            Some((
                mean_radius,
                SectionLoop {
                    n_points: pts.len(),
                    gap_fraction: loop_gap_fraction(&pts),
                    direction,
                },
            ))
        })
        // The far set is the outer return flow; the near-axis set is the
        // drill passage.
        .max_by(|a, b| a.0.partial_cmp(&b.0).expect("finite radii"))
        .map(|(_, sec)| sec)
}

/// Largest gap between angularly consecutive points, as a fraction of the
/// closed polygon perimeter through the angularly ordered points.
fn loop_gap_fraction(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (cx, cy) = pts
        .iter()
        .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let (cx, cy) = (cx / n, cy / n);
    let mut ordered: Vec<(f64, f64)> = pts.to_vec();
    ordered.sort_by(|a, b| {
        let aa = (a.1 - cy).atan2(a.0 - cx);
        let bb = (b.1 - cy).atan2(b.0 - cx);
        aa.partial_cmp(&bb).expect("finite angles")
    });
    let mut perimeter = 0.0;
    let mut max_gap: f64 = 0.0;
    for i in 0..ordered.len() {
        let a = ordered[i];
        let b = ordered[(i + 1) % ordered.len()];
        let d = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        perimeter += d;
        max_gap = max_gap.max(d);
    }
    if perimeter == 0.0 {
        1.0
    } else {
        max_gap / perimeter
    }
}
