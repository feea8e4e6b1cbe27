use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Observable overfitting diagnostics of a fitted association vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverfitMarkers {
    /// `β₀·Aβ̂ / β₀·Aβ₀`: multiplicative bias along the true direction.
    pub kappa_hat: f64,
    /// `sqrt(β̂·Aβ̂ − κ̂² β₀·Aβ₀)`: size of the component orthogonal to `β₀`.
    pub v_hat: f64,
    /// `(1/n) Σ_i (β̂·z_i)²`, computable without knowing `β₀`.
    pub second_moment: f64,
}

/// Markers for covariate covariance `a` (usually the identity).
pub fn overfit_markers(
    beta_hat: &[f64],
    beta0: &[f64],
    a: &DMatrix<f64>,
    covariates: &DMatrix<f64>,
) -> Result<OverfitMarkers> {
    let p = beta_hat.len();
    if beta0.len() != p || a.nrows() != p || a.ncols() != p || covariates.ncols() != p {
        return Err(Error::Argument(format!(
            "dimension mismatch: beta_hat {p}, beta0 {}, A {}×{}, covariates with {} columns",
            beta0.len(),
            a.nrows(),
            a.ncols(),
            covariates.ncols()
        )));
    }
    let bh = DVector::from_column_slice(beta_hat);
    let b0 = DVector::from_column_slice(beta0);
    let ab0 = a * &b0;
    let s2 = b0.dot(&ab0);
    if !(s2 > 0.0) {
        return Err(Error::Domain("kappa is undefined for a zero-signal beta0".into()));
    }
    let kappa_hat = bh.dot(&ab0) / s2;
    let v2 = bh.dot(&(a * &bh)) - kappa_hat * kappa_hat * s2;
    let lp = covariates * &bh;
    Ok(OverfitMarkers {
        kappa_hat,
        v_hat: v2.max(0.0).sqrt(),
        second_moment: lp.norm_squared() / covariates.nrows().max(1) as f64,
    })
}

/// [`overfit_markers`] with `A = I`.
pub fn overfit_markers_identity(beta_hat: &[f64], beta0: &[f64], covariates: &DMatrix<f64>) -> Result<OverfitMarkers> {
    let p = beta_hat.len();
    overfit_markers(beta_hat, beta0, &DMatrix::identity(p, p), covariates)
}
