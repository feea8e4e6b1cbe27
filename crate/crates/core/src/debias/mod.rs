//! Data-only removal of overfitting bias: estimate the censoring and base
//! hazards, identify the signal strength `S` from an observable moment of the
//! fitted linear predictors, and rescale the ML estimators.

mod frailty;
mod solve;

pub use frailty::{censoring_cumhaz, frailty_cumhaz_fixed_point, frailty_cumhaz_from, FrailtyFit, FrailtyOptions};
pub use solve::{
    debias_solve, debiased_cumhaz, DebiasDiagnostics, DebiasOptions, DebiasResult, InnerSolver, MomentIdentity,
    SearchStep, SignalEquation,
};
