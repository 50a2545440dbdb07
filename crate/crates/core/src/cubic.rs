//! Cubic root solver for 3x3 characteristic polynomials.
//!
//! Solves monic cubics with real coefficients by the trigonometric method
//! (three real roots) or a cancellation-safe Cardano form (one real root
//! plus a conjugate pair), then polishes every root with Newton steps on
//! the original polynomial in complex arithmetic.

use num_complex::Complex64;

/// Roots of `x^3 + a2*x^2 + a1*x + a0`, Newton-polished.
///
/// Real roots come out with an exactly zero imaginary part; complex roots
/// appear as a conjugate pair.
pub fn solve_cubic(a2: f64, a1: f64, a0: f64) -> [Complex64; 3] {
    // Depressed form: x = t - a2/3, t^3 + p t + q = 0.
    let shift = a2 / 3.0;
    let p = a1 - a2 * a2 / 3.0;
    let q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;

    let disc = -4.0 * p * p * p - 27.0 * q * q;
    let mut roots = if disc >= 0.0 && p <= 0.0 {
        // Three real roots (possibly repeated).
        if p == 0.0 {
            let t = -cbrt(q);
            [t, t, t].map(|t| Complex64::new(t - shift, 0.0))
        } else {
            let m = 2.0 * (-p / 3.0).sqrt();
            // 3q/(p*m) equals (3q)/(2p) * sqrt(-3/p)
            let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
            let theta = arg.acos() / 3.0;
            let mut out = [Complex64::new(0.0, 0.0); 3];
            for (k, slot) in out.iter_mut().enumerate() {
                let t = m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
                *slot = Complex64::new(t - shift, 0.0);
            }
            out
        }
    } else {
        // One real root; pick the cube root branch that avoids cancellation.
        let half_q = q / 2.0;
        let rad = (half_q * half_q + p * p * p / 27.0).sqrt();
        let u = if half_q >= 0.0 {
            cbrt(-half_q - rad)
        } else {
            cbrt(-half_q + rad)
        };
        let t1 = if u == 0.0 { 0.0 } else { u - p / (3.0 * u) };
        // Deflate: t^2 + t1*t + (t1^2 + p) = 0 for the remaining pair.
        let b = t1;
        let c = t1 * t1 + p;
        let disc2 = b * b - 4.0 * c;
        let (r2, r3) = if disc2 >= 0.0 {
            let s = disc2.sqrt();
            (
                Complex64::new((-b + s) / 2.0 - shift, 0.0),
                Complex64::new((-b - s) / 2.0 - shift, 0.0),
            )
        } else {
            let s = (-disc2).sqrt() / 2.0;
            (
                Complex64::new(-b / 2.0 - shift, s),
                Complex64::new(-b / 2.0 - shift, -s),
            )
        };
        [Complex64::new(t1 - shift, 0.0), r2, r3]
    };

    for r in &mut roots {
        *r = polish(*r, a2, a1, a0);
    }
    roots
}

/// Largest characteristic-polynomial residual `|p(root)|` over all roots,
/// scaled by the coefficient magnitude. Used to verify solver output.
pub fn residual(roots: &[Complex64; 3], a2: f64, a1: f64, a0: f64) -> f64 {
    let scale = 1.0_f64.max(a2.abs()).max(a1.abs()).max(a0.abs());
    roots
        .iter()
        .map(|&r| eval(r, a2, a1, a0).norm() / scale)
        .fold(0.0, f64::max)
}

fn eval(x: Complex64, a2: f64, a1: f64, a0: f64) -> Complex64 {
    ((x + a2) * x + a1) * x + a0
}

fn polish(mut x: Complex64, a2: f64, a1: f64, a0: f64) -> Complex64 {
    let scale = 1.0_f64.max(a2.abs()).max(a1.abs()).max(a0.abs());
    for _ in 0..3 {
        let f = eval(x, a2, a1, a0);
        if f.norm() <= 1e-14 * scale {
            break;
        }
        let df = (3.0 * x + 2.0 * a2) * x + a1;
        if df.norm() < 1e-300 {
            break;
        }
        let step = f / df;
        x -= step;
        if step.norm() <= 1e-16 * (1.0 + x.norm()) {
            break;
        }
    }
    // Snap near-real roots so conjugate pairing stays exact downstream.
    if x.im.abs() <= 1e-12 * (1.0 + x.re.abs()) {
        x.im = 0.0;
    }
    x
}

fn cbrt(x: f64) -> f64 {
    x.cbrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sorted_re(mut rs: Vec<f64>) -> Vec<f64> {
        rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rs
    }

    #[test]
    fn three_distinct_real_roots() {
        // (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
        let roots = solve_cubic(-6.0, 11.0, -6.0);
        assert!(roots.iter().all(|r| r.im == 0.0));
        let re = sorted_re(roots.iter().map(|r| r.re).collect());
        assert_relative_eq!(re[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(re[1], 2.0, max_relative = 1e-12);
        assert_relative_eq!(re[2], 3.0, max_relative = 1e-12);
    }

    #[test]
    fn complex_pair() {
        // (x+2)(x^2+1) = x^3 + 2x^2 + x + 2
        let roots = solve_cubic(2.0, 1.0, 2.0);
        let mut reals: Vec<_> = roots.iter().filter(|r| r.im == 0.0).collect();
        assert_eq!(reals.len(), 1);
        assert_relative_eq!(reals.pop().unwrap().re, -2.0, max_relative = 1e-12);
        let pair: Vec<_> = roots.iter().filter(|r| r.im != 0.0).collect();
        assert_eq!(pair.len(), 2);
        assert_relative_eq!(pair[0].im.abs(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(pair[0].re, 0.0, epsilon = 1e-12);
        assert_eq!(pair[0].re, pair[1].re);
        assert_eq!(pair[0].im, -pair[1].im);
    }

    #[test]
    fn zero_root_and_imaginary_pair() {
        // x(x^2 + 19) = x^3 + 19x  — the interior-line spectrum shape
        let roots = solve_cubic(0.0, 19.0, 0.0);
        assert!(residual(&roots, 0.0, 19.0, 0.0) <= 1e-12);
        let zero = roots.iter().find(|r| r.norm() < 1e-12);
        assert!(zero.is_some());
        let imag: Vec<_> = roots.iter().filter(|r| r.norm() >= 1e-12).collect();
        assert_relative_eq!(imag[0].im.abs(), 19f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn repeated_roots() {
        // (x-1)^2 (x+3) = x^3 + x^2 - 5x + 3
        let roots = solve_cubic(1.0, -5.0, 3.0);
        assert!(residual(&roots, 1.0, -5.0, 3.0) <= 1e-9);
        let near_one = roots.iter().filter(|r| (r.re - 1.0).abs() < 1e-5).count();
        assert_eq!(near_one, 2);
    }

    #[test]
    fn residual_small_on_random_cubics() {
        let mut state = 0x2545f4914f6cdd1d_u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state as f64 / u64::MAX as f64 - 0.5) * 20.0
        };
        for _ in 0..500 {
            let (a2, a1, a0) = (next(), next(), next());
            let roots = solve_cubic(a2, a1, a0);
            assert!(
                residual(&roots, a2, a1, a0) <= 1e-9,
                "residual too large for ({a2}, {a1}, {a0})"
            );
        }
    }
}
