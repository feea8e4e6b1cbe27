use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::CoxProblem;
use crate::survival::{StepFunction, SurvivalDataset};
use crate::{Error, Result};

/// Newton-ascent settings for [`fit_cox`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Convergence threshold on the gradient sup-norm.
    pub grad_tol: f64,
    /// Factor applied to the step on each backtracking retry.
    pub step_damping: f64,
    /// Maximum number of backtracking retries per iteration.
    pub max_halvings: usize,
    /// `|β|` beyond which the maximiser is declared not to exist.
    pub divergence_radius: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            grad_tol: 1e-8,
            step_damping: 0.5,
            max_halvings: 30,
            divergence_radius: 50.0,
        }
    }
}

/// Result of a maximum partial-likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxFit {
    pub beta_hat: Vec<f64>,
    /// Breslow estimate of the base cumulative hazard at `beta_hat`.
    pub breslow: StepFunction,
    pub converged: bool,
    pub iterations: usize,
    /// Gradient sup-norm at `beta_hat`.
    pub final_gradient_norm: f64,
    pub log_likelihood: f64,
    /// The iterate left the divergence radius, or the likelihood kept rising
    /// without a stationary point: the maximiser does not exist.
    pub separation_detected: bool,
}

impl CoxFit {
    /// Usable as a point estimate: converged and not separated.
    pub fn is_valid(&self) -> bool {
        self.converged && !self.separation_detected
    }
}

/// Maximises the partial likelihood by damped Newton ascent from `β = 0`.
pub fn fit_cox(data: &SurvivalDataset, options: &FitOptions) -> Result<CoxFit> {
    if data.n_events() == 0 {
        return Err(Error::Fit("no uncensored events".into()));
    }
    if !(options.step_damping > 0.0 && options.step_damping < 1.0) {
        return Err(Error::Argument(format!(
            "step_damping must lie in (0, 1), got {}",
            options.step_damping
        )));
    }
    let z = data.covariates();
    for k in 0..data.p() {
        let col = z.column(k);
        if col.iter().all(|&x| x == col[0]) {
            return Err(Error::Fit(format!(
                "non-identifiable: covariate {} is constant, so the partial likelihood does not depend on beta_{}",
                k + 1,
                k + 1
            )));
        }
    }
    let problem = CoxProblem::new(data)?;
    let p = data.p();
    let mut beta = vec![0.0; p];
    let mut rs = problem.risk_sums(&beta)?;
    let mut ll = problem.log_likelihood_from(&rs);
    let mut trace: Vec<(usize, f64, f64)> = Vec::new();
    let mut separation = false;
    let mut converged = false;
    let mut iterations = 0;
    let mut grad_norm;
    loop {
        let (grad, hess) = problem.gradient_hessian_from(&rs);
        grad_norm = grad.amax();
        trace.push((iterations, ll, grad_norm));
        if !ll.is_finite() || !grad_norm.is_finite() {
            return Err(Error::NonFinite {
                iteration: iterations,
                trace,
            });
        }
        if grad_norm <= options.grad_tol {
            converged = true;
            break;
        }
        if iterations >= options.max_iter {
            break;
        }
        iterations += 1;
        let step = newton_direction(&hess, &grad);
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=options.max_halvings {
            let trial: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b + scale * s).collect();
            let trial_rs = problem.risk_sums(&trial)?;
            let trial_ll = problem.log_likelihood_from(&trial_rs);
            // near the optimum the ascent is below rounding noise of `ll`
            if trial_ll.is_finite() && trial_ll >= ll - 1e-12 * ll.abs().max(1.0) {
                beta = trial;
                rs = trial_rs;
                ll = trial_ll;
                accepted = true;
                break;
            }
            scale *= options.step_damping;
        }
        if !accepted {
            // no ascent along the Newton direction at any tested length: we
            // are at the numerical optimum, judged by the gradient next round
            let (g, _) = problem.gradient_hessian_from(&rs);
            grad_norm = g.amax();
            converged = grad_norm <= options.grad_tol.max(1e-6);
            log::debug!("backtracking exhausted at iteration {iterations}, gradient {grad_norm:e}");
            break;
        }
        let norm = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
        if norm > options.divergence_radius {
            separation = true;
            grad_norm = problem.gradient_from(&rs).amax();
            break;
        }
    }
    if converged && rises_along_ray(&problem, &beta, ll)? {
        // a vanishing gradient reached by sliding off to infinity
        separation = true;
    }
    if !converged && !separation {
        log::warn!("Cox fit stopped after {iterations} iterations with gradient {grad_norm:e}");
    }
    let (t, dl) = problem.breslow_jumps(&rs);
    Ok(CoxFit {
        beta_hat: beta,
        breslow: StepFunction::from_increments(&t, &dl)?,
        converged: converged && !separation,
        iterations,
        final_gradient_norm: grad_norm,
        log_likelihood: ll,
        separation_detected: separation,
    })
}

/// At a genuine maximiser the likelihood drops when `β` is doubled; under
/// monotone likelihood it keeps rising towards its supremum.
fn rises_along_ray(problem: &CoxProblem<'_>, beta: &[f64], ll: f64) -> Result<bool> {
    if beta.iter().all(|&b| b == 0.0) {
        return Ok(false);
    }
    let doubled: Vec<f64> = beta.iter().map(|b| 2.0 * b).collect();
    let ll2 = problem.log_likelihood(&doubled)?;
    Ok(ll2 >= ll - 1e-9 * ll.abs().max(1.0))
}

/// Solves `(−H) d = g` by Cholesky, adding jitter `ε I` (ε from 1e-10 up) if
/// `−H` is numerically singular. Falls back to gradient ascent.
fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
    let neg = -hess;
    let p = neg.nrows();
    let scale = neg.diagonal().amax().max(1.0);
    let mut jitter = 0.0;
    for _ in 0..12 {
        let m = &neg + DMatrix::identity(p, p) * (jitter * scale);
        if let Some(ch) = m.cholesky() {
            let d = ch.solve(grad);
            if d.iter().all(|x| x.is_finite()) {
                return d;
            }
        }
        jitter = if jitter == 0.0 { 1e-10 } else { jitter * 100.0 };
    }
    grad / scale
}

/// Breslow estimator `Λ̂(t) = Σ_{t_i ≤ t} Δ_i / Σ_{t_j ≥ t_i} e^{β·z_j}`.
pub fn breslow(data: &SurvivalDataset, beta: &[f64]) -> Result<StepFunction> {
    let problem = CoxProblem::new(data)?;
    let rs = problem.risk_sums(beta)?;
    let (t, dl) = problem.breslow_jumps(&rs);
    StepFunction::from_increments(&t, &dl)
}
