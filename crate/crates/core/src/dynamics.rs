//! Vector field, Jacobian, and equilibria of the two-predator/one-prey system
//!
//! ```text
//! dX/dt = X - X*Y + C*X^2 - A*Z*X^2
//! dY/dt = -Y + X*Y
//! dZ/dt = -B*Z + A*Z*X^2          A, B, C > 0
//! ```
//!
//! Prey `X` is hunted by two non-interacting predators `Y` and `Z`. The
//! ratio `B/A` is the control that moves the system between the stable
//! (nested-shell) regime and the toroidal/chaotic regime.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cubic;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("system parameters must be positive and finite: A={a}, B={b}, C={c}")]
    NonPositiveParams { a: f64, b: f64, c: f64 },
}

/// The positive triple `(A, B, C)` of Eq. (1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    a: f64,
    b: f64,
    c: f64,
}

impl SystemParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, DynamicsError> {
        let ok = a > 0.0 && b > 0.0 && c > 0.0 && a.is_finite() && b.is_finite() && c.is_finite();
        if !ok {
            return Err(DynamicsError::NonPositiveParams { a, b, c });
        }
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// The stability control `B/A`; finite and positive by construction.
    pub fn ratio(&self) -> f64 {
        self.b / self.a
    }
}

/// A phase-space point with its time stamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub t: f64,
}

impl State {
    pub fn new(x: f64, y: f64, z: f64, t: f64) -> Self {
        Self { x, y, z, t }
    }

    pub fn at_origin_time(x: f64, y: f64, z: f64) -> Self {
        Self::new(x, y, z, 0.0)
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.t.is_finite()
    }
}

/// Right-hand side of Eq. (1) at position `v`. Pure and total.
pub fn field(p: SystemParams, v: &Vector3<f64>) -> Vector3<f64> {
    let (x, y, z) = (v.x, v.y, v.z);
    let xx = x * x;
    Vector3::new(
        x - x * y + p.c * xx - p.a * z * xx,
        -y + x * y,
        -p.b * z + p.a * z * xx,
    )
}

/// Right-hand side of Eq. (1) at a stamped state.
pub fn rhs(p: SystemParams, s: State) -> Vector3<f64> {
    field(p, &s.position())
}

/// Jacobian matrix of `rhs` with respect to `(X, Y, Z)`.
pub fn jacobian(p: SystemParams, s: State) -> Matrix3<f64> {
    let (x, y, z) = (s.x, s.y, s.z);
    Matrix3::new(
        1.0 - y + 2.0 * p.c * x - 2.0 * p.a * z * x,
        -x,
        -p.a * x * x,
        y,
        x - 1.0,
        0.0,
        2.0 * p.a * z * x,
        0.0,
        p.a * x * x - p.b,
    )
}

/// Linear-stability class of an equilibrium, read off its spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    StableNode,
    SaddleFocus,
    CenterLike,
    Source,
    Degenerate,
}

/// An equilibrium of Eq. (1) with its spectrum.
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub state: State,
    pub eigenvalues: [Complex64; 3],
    pub classification: Stability,
}

/// All equilibria with nonnegative coordinates.
///
/// Closed-form branches, each polished by Newton iteration:
/// the origin; `(1, 1+C, 0)`; the Y-extinct branch
/// `(sqrt(B/A), 0, (1 + C x*)/(A x*))`; and, exactly at `B = A`, one
/// representative `(1, w, w)` with `w = (1+C)/(1+A)` of the interior
/// fixed-point segment `{X = 1, Y + A Z = 1 + C}`.
pub fn fixed_points(p: SystemParams) -> Vec<FixedPoint> {
    let mut candidates = vec![
        Vector3::new(0.0, 0.0, 0.0),
        Vector3::new(1.0, 1.0 + p.c, 0.0),
    ];
    let xs = (p.b / p.a).sqrt();
    candidates.push(Vector3::new(xs, 0.0, (1.0 + p.c * xs) / (p.a * xs)));
    if p.b == p.a {
        let w = (1.0 + p.c) / (1.0 + p.a);
        candidates.push(Vector3::new(1.0, w, w));
    }

    candidates
        .into_iter()
        .map(|v| {
            let v = newton_polish(p, v);
            let state = State::new(v.x, v.y, v.z, 0.0);
            let eigenvalues = eigenvalues_at(p, state);
            let classification = classify_spectrum(&eigenvalues);
            FixedPoint {
                state,
                eigenvalues,
                classification,
            }
        })
        .collect()
}

/// Newton refinement of an approximate equilibrium; used both to polish the
/// closed forms and by tests to confirm they are already converged.
pub fn newton_polish(p: SystemParams, mut v: Vector3<f64>) -> Vector3<f64> {
    for _ in 0..8 {
        let f = field(p, &v);
        if f.norm() <= 1e-15 {
            break;
        }
        let j = jacobian(p, State::new(v.x, v.y, v.z, 0.0));
        match j.lu().solve(&f) {
            Some(step) => v -= step,
            None => break,
        }
    }
    v
}

/// Spectrum of the Jacobian at `s`, via the characteristic cubic.
pub fn eigenvalues_at(p: SystemParams, s: State) -> [Complex64; 3] {
    let j = jacobian(p, s);
    // det(J - xI) = -(x^3 + a2 x^2 + a1 x + a0)
    let tr = j.trace();
    let minors = j.m11 * j.m22 - j.m12 * j.m21 + j.m11 * j.m33 - j.m13 * j.m31
        + j.m22 * j.m33
        - j.m23 * j.m32;
    let det = j.determinant();
    cubic::solve_cubic(-tr, minors, -det)
}

fn classify_spectrum(eigs: &[Complex64; 3]) -> Stability {
    let scale = eigs.iter().map(|e| e.norm()).fold(1.0, f64::max);
    let eps = 1e-8 * scale;
    if eigs.iter().any(|e| e.norm() <= eps) {
        return Stability::Degenerate;
    }
    if eigs.iter().any(|e| e.re.abs() <= eps && e.im.abs() > eps) {
        return Stability::CenterLike;
    }
    if eigs.iter().all(|e| e.re < 0.0) {
        return Stability::StableNode;
    }
    if eigs.iter().all(|e| e.re > 0.0) {
        return Stability::Source;
    }
    Stability::SaddleFocus
}
