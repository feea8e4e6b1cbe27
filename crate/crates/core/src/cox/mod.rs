//! Maximum partial-likelihood estimation, the Breslow baseline estimator and
//! the observable overfitting markers.

mod fit;
mod likelihood;
mod markers;

pub use fit::{breslow, fit_cox, CoxFit, FitOptions};
pub use likelihood::{partial_log_likelihood, plik_gradient_hessian, CoxProblem};
pub use markers::{overfit_markers, overfit_markers_identity, OverfitMarkers};
