//! Scalar special functions and quadrature shared by every other module.

mod lambert;
mod quadrature;

pub(crate) use lambert::w_exp_unchecked;
pub use lambert::{lambert_w, lambert_w_exp};
pub use quadrature::{QuadratureKind, QuadratureRule, GAUSSIAN_CUTOFF, MAX_ORDER};

use crate::{Error, Result};

/// Default order for every `Dy`/`Dz` integral.
pub const DEFAULT_ORDER: usize = 60;

/// Convenience wrapper for [`QuadratureRule::new`].
pub fn make_quadrature(kind: QuadratureKind, order: usize) -> Result<QuadratureRule> {
    QuadratureRule::new(kind, order)
}

fn check_phi_args(x: f64, s: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("phi_delta requires finite x >= 0, got {x}")));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("phi_delta requires finite s >= 0, got {s}")));
    }
    Ok(())
}

/// `ln φ_Δ(x, s)` with `φ_Δ(x, s) = ∫Dy exp(Δ s y − x e^{s y})`, evaluated by
/// log-sum-exp over the rule's nodes so that large `x` does not underflow.
pub fn log_phi_delta(x: f64, s: f64, delta: u32, rule: &QuadratureRule) -> Result<f64> {
    check_phi_args(x, s)?;
    Ok(log_phi_unchecked(x, s, delta as f64, rule))
}

pub(crate) fn log_phi_unchecked(x: f64, s: f64, delta: f64, rule: &QuadratureRule) -> f64 {
    // Recentre the rule on the mode of the integrand, y* = Δs − W(x s² e^{Δs²})/s, and
    // rescale by its curvature 1 + W. Plain Gauss–Hermite in y converges slowly
    // once s ≳ 1 because e^{−x e^{sy}} cuts off sharply.
    if s == 0.0 {
        return -x;
    }
    let w = if x > 0.0 {
        w_exp_unchecked((x * s * s).ln() + delta * s * s, None)
    } else {
        0.0
    };
    let mode = delta * s - w / s;
    let sigma = 1.0 / (1.0 + w).sqrt();
    let (nodes, weights) = rule.gaussian_nodes();
    let log_g = |t: f64| {
        let y = mode + sigma * t;
        let sy = s * y;
        -0.5 * y * y + delta * sy - x * sy.exp() + 0.5 * t * t
    };
    let mut max = f64::NEG_INFINITY;
    let terms: Vec<f64> = nodes
        .iter()
        .zip(weights)
        .map(|(&t, &wt)| {
            let v = wt.ln() + log_g(t);
            max = max.max(v);
            v
        })
        .collect();
    let sum: f64 = terms.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln() + sigma.ln()
}

/// `φ_Δ(x, s) = ∫Dy exp(Δ s y − x e^{s y})`.
///
/// `delta` is usually 0 or 1; 2 is needed for the ratio `φ_{Δ+1}/φ_Δ`.
pub fn phi_delta(x: f64, s: f64, delta: u32, rule: &QuadratureRule) -> Result<f64> {
    log_phi_delta(x, s, delta, rule).map(f64::exp)
}

/// `φ_{Δ+1}(x, s) / φ_Δ(x, s)`: the posterior mean of the frailty `e^{s y}`
/// given survival to cumulative hazard `x` and `Δ` observed events.
pub fn phi_ratio(x: f64, s: f64, delta: u32, rule: &QuadratureRule) -> Result<f64> {
    check_phi_args(x, s)?;
    Ok(phi_ratio_unchecked(x, s, delta as f64, rule))
}

pub(crate) fn phi_ratio_unchecked(x: f64, s: f64, delta: f64, rule: &QuadratureRule) -> f64 {
    if s == 0.0 {
        return 1.0;
    }
    (log_phi_unchecked(x, s, delta + 1.0, rule) - log_phi_unchecked(x, s, delta, rule)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Adaptive Simpson on a truncated line, independent of the Gaussian rules.
    fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec<F: Fn(f64) -> f64>(
            f: &F,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    fn phi_oracle(x: f64, s: f64, delta: f64) -> f64 {
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        let f = |y: f64| (-0.5 * y * y + delta * s * y - x * (s * y).exp()).exp() / norm;
        adaptive_simpson(&f, -14.0, 14.0, 1e-13)
    }

    #[test]
    fn zero_signal_collapses() {
        let r = QuadratureRule::hermite(DEFAULT_ORDER).unwrap();
        for &x in &[0.0, 0.3, 2.0, 7.5] {
            for d in 0..=2 {
                assert_relative_eq!(phi_delta(x, 0.0, d, &r).unwrap(), (-x).exp(), max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn zero_hazard_is_gaussian_mgf() {
        let r = QuadratureRule::hermite(DEFAULT_ORDER).unwrap();
        for &s in &[0.1, 0.5, 1.0, 2.0] {
            assert_relative_eq!(
                phi_delta(0.0, s, 1, &r).unwrap(),
                (0.5 * s * s).exp(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn matches_adaptive_oracle() {
        let r = QuadratureRule::hermite(DEFAULT_ORDER).unwrap();
        let oracle = phi_oracle(1.0, 1.0, 1.0);
        assert_relative_eq!(phi_delta(1.0, 1.0, 1, &r).unwrap(), oracle, epsilon = 1e-10);
        for &(x, s, d) in &[(0.2, 0.5, 0u32), (3.0, 1.5, 1), (0.7, 2.0, 2), (5.0, 1.0, 0)] {
            assert_relative_eq!(
                phi_delta(x, s, d, &r).unwrap(),
                phi_oracle(x, s, d as f64),
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn domain_errors() {
        let r = QuadratureRule::hermite(10).unwrap();
        assert!(phi_delta(-0.1, 1.0, 0, &r).is_err());
        assert!(phi_ratio(1.0, -1.0, 0, &r).is_err());
    }

    #[test]
    fn convergence_in_order() {
        let rules: Vec<_> = [10, 20, 40, 80]
            .iter()
            .map(|&n| QuadratureRule::hermite(n).unwrap())
            .collect();
        for &x in &[0.1, 1.0, 4.0] {
            for &s in &[0.5, 1.0, 1.5] {
                let vals: Vec<f64> = rules.iter().map(|r| phi_delta(x, s, 1, r).unwrap()).collect();
                let d: Vec<f64> = vals.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
                assert!(d[1] <= d[0].max(1e-14) && d[2] <= d[1].max(1e-14), "x={x} s={s}: {d:?}");
            }
        }
    }

    #[test]
    fn decreasing_in_x() {
        let r = QuadratureRule::hermite(DEFAULT_ORDER).unwrap();
        for d in 0..=1 {
            let mut last = f64::INFINITY;
            for k in 0..50 {
                let v = phi_delta(k as f64 * 0.2, 1.2, d, &r).unwrap();
                assert!(v < last);
                last = v;
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn ratio_positive_finite(x in 0.0f64..20.0, s in 0.0f64..3.0, d in 0u32..2) {
            let r = QuadratureRule::hermite(DEFAULT_ORDER).unwrap();
            let q = phi_ratio(x, s, d, &r).unwrap();
            proptest::prop_assert!(q.is_finite() && q > 0.0);
            let v = phi_delta(x, s, 1, &r).unwrap();
            proptest::prop_assert!(v > 0.0 && v <= (0.5 * s * s).exp() * (1.0 + 1e-12));
        }
    }
}
