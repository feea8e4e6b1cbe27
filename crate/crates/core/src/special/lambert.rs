//! Principal branch of the Lambert W function on `[0, ∞)`.
//!
//! `W(x)` solves `w e^w = x`. Halley iteration from a branch-appropriate
//! starting point: a short series for small `x`, the Winitzki approximation in
//! the middle range and the `log - log log` asymptote for large `x`. Arguments
//! far beyond `f64` range are handled through [`lambert_w_exp`], which takes
//! `ln x` instead of `x`.

use crate::{Error, Result};

const MAX_ITER: usize = 64;
/// Above this value of `ln x` the iteration runs on `w + ln w = ln x`.
const LOG_FORM_THRESHOLD: f64 = 40.0;

/// `W(x)` for `x >= 0`.
pub fn lambert_w(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!(
            "lambert_w requires a finite non-negative argument, got {x}"
        )));
    }
    Ok(w_direct(x, initial_guess(x)))
}

/// `W(e^log_x)`, usable when `x` itself would overflow or underflow.
///
/// `log_x = -inf` maps to `W(0) = 0`.
pub fn lambert_w_exp(log_x: f64) -> Result<f64> {
    if log_x.is_nan() || log_x == f64::INFINITY {
        return Err(Error::Domain(format!(
            "lambert_w_exp requires log_x < +inf, got {log_x}"
        )));
    }
    Ok(w_exp_unchecked(log_x, None))
}

/// As [`lambert_w_exp`] without the argument check, optionally warm-started
/// from a previous value. Used in the inner loops of the solvers.
#[inline]
pub(crate) fn w_exp_unchecked(log_x: f64, guess: Option<f64>) -> f64 {
    if log_x == f64::NEG_INFINITY {
        return 0.0;
    }
    if log_x > LOG_FORM_THRESHOLD {
        return w_log_form(log_x, guess);
    }
    let x = log_x.exp();
    let start = match guess {
        Some(g) if g.is_finite() && g > 0.0 && x > 1e-10 => g,
        _ => initial_guess(x),
    };
    w_direct(x, start)
}

#[inline]
fn initial_guess(x: f64) -> f64 {
    if x < 0.25 {
        x * (1.0 - x * (1.0 - 1.5 * x))
    } else if x < 20.0 {
        let l = x.ln_1p();
        l * (1.0 - l.ln_1p() / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}

#[inline]
fn w_direct(x: f64, start: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x < 1e-10 {
        // W(x) = x - x^2 + 3/2 x^3 - ..., truncation error below 1e-30 relative
        return x * (1.0 - x);
    }
    let mut w = start;
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= dw;
        if dw.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    w
}

/// Halley on `g(w) = w + ln w - L`, for `L = ln x` large.
fn w_log_form(log_x: f64, guess: Option<f64>) -> f64 {
    let mut w = match guess {
        Some(g) if g.is_finite() && g > 1.0 => g,
        _ => {
            let l2 = log_x.ln();
            log_x - l2 + l2 / log_x
        }
    };
    for _ in 0..MAX_ITER {
        let g = w + w.ln() - log_x;
        let g1 = 1.0 + 1.0 / w;
        let g2 = -1.0 / (w * w);
        let dw = g / (g1 - 0.5 * g * g2 / g1);
        w -= dw;
        if dw.abs() <= 4.0 * f64::EPSILON * w {
            break;
        }
    }
    w
}
