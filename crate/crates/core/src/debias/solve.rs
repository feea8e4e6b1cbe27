use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::frailty::{censoring_cumhaz, frailty_cumhaz_from, FrailtyOptions};
use crate::cox::CoxFit;
use crate::rs::{
    build_atom_population, build_population, solve_rs_population, AtomOptions, RsOptions, RsSolution, RsStart, WUpdate,
};
use crate::survival::{CensoringSpec, HazardSpec, StepFunction, SurvivalDataset};
use crate::{rng_stream, Error, Result};

/// How the order-parameter equations are integrated for a candidate `S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InnerSolver {
    /// Sum over the atoms of the estimated step hazards crossed with
    /// Gauss–Hermite nodes: deterministic in `S`.
    Quadrature(AtomOptions),
    /// Monte-Carlo population drawn from the estimated step hazards, with the
    /// same seed for every candidate.
    Population { m: usize, seed: u64 },
}

impl Default for InnerSolver {
    fn default() -> Self {
        InnerSolver::Quadrature(AtomOptions::default())
    }
}

/// The extra scalar equation that pins down `S`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum SignalEquation {
    /// Matches the observable `(1/n) Σ_i (β̂·z_i)²`.
    #[default]
    SecondMoment,
    /// Matches `β̂·Aβ̂ = w² + v²` for a known covariate covariance `A`.
    KnownCovariance(DMatrix<f64>),
}

/// Form of the second-moment identity used by [`SignalEquation::SecondMoment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentIdentity {
    /// `⟨ξ²⟩ = w² + (1 − ζ) v²`, which follows from the order-parameter
    /// equations.
    #[default]
    Derived,
    /// `w² + (ζ − 1) v²`, the sign as commonly printed. Provided for
    /// comparison only.
    AsPrinted,
}

/// Settings for [`debias_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct DebiasOptions {
    /// Search interval for `S`.
    pub bracket: (f64, f64),
    /// Width at which the `S` bracket is accepted.
    pub s_tol: f64,
    pub max_evaluations: usize,
    pub inner: InnerSolver,
    pub rs: RsOptions,
    pub frailty: FrailtyOptions,
    pub equation: SignalEquation,
    pub identity: MomentIdentity,
}

impl Default for DebiasOptions {
    fn default() -> Self {
        Self {
            bracket: (0.05, 5.0),
            s_tol: 1e-3,
            max_evaluations: 40,
            inner: InnerSolver::default(),
            // the quadrature path is deterministic and stable without damping
            rs: RsOptions {
                w_update: WUpdate::ScaledMeanYXi,
                damping: 1.0,
                ..RsOptions::default()
            },
            frailty: FrailtyOptions::default(),
            equation: SignalEquation::SecondMoment,
            identity: MomentIdentity::Derived,
        }
    }
}

/// One evaluation of the `S` residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchStep {
    pub signal: f64,
    /// `r(S)`; `+inf` when the inner solve found no solution.
    pub residual: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub rs_sweeps: usize,
}

/// Diagnostics of the outer search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebiasDiagnostics {
    /// Every evaluation in the order performed.
    pub trace: Vec<SearchStep>,
    /// Sign changes of `r` along the evaluated `S` values, sorted; more than
    /// one means several roots may exist.
    pub sign_changes: usize,
    /// `S★` lies within `s_tol` of the lower end of the bracket, where the
    /// trivial solution `S = 0` may be attracting the search.
    pub at_lower_edge: bool,
    /// The observable the residual is matched to.
    pub target: f64,
    /// `r(S★)`.
    pub final_residual: f64,
    pub rs_residual_history: Vec<f64>,
}

/// De-biased estimators and the inferred signal strength.
#[derive(Debug, Clone, PartialEq)]
pub struct DebiasResult {
    pub s_star: f64,
    pub u_star: f64,
    pub v_star: f64,
    pub w_star: f64,
    /// `w★ / S★`.
    pub kappa_star: f64,
    /// `β̂ / κ★`.
    pub beta_tilde: Vec<f64>,
    /// Frailty fixed point at `S★`.
    pub lambda_tilde: StepFunction,
    pub lambda_c_tilde: StepFunction,
    /// Asymptotic standard deviation of each component of `β̃`,
    /// `v★ / (κ★ √p)`.
    pub predicted_sd: f64,
    pub diagnostics: DebiasDiagnostics,
}

struct Candidate {
    step: SearchStep,
    solution: Option<RsSolution>,
    lambda0: StepFunction,
}

struct Search<'a> {
    data: &'a SurvivalDataset,
    zeta: f64,
    target: f64,
    lambda_c: StepFunction,
    options: &'a DebiasOptions,
    evaluated: Vec<Candidate>,
}

impl Search<'_> {
    fn nearest(&self, s: f64) -> Option<&Candidate> {
        self.evaluated
            .iter()
            .min_by(|a, b| (a.step.signal - s).abs().total_cmp(&(b.step.signal - s).abs()))
    }

    fn residual(&self, sol: &RsSolution) -> f64 {
        let (v2, w2) = (sol.v * sol.v, sol.w * sol.w);
        match (&self.options.equation, self.options.identity) {
            (SignalEquation::KnownCovariance(_), _) => w2 + v2 - self.target,
            (SignalEquation::SecondMoment, MomentIdentity::Derived) => w2 + (1.0 - self.zeta) * v2 - self.target,
            (SignalEquation::SecondMoment, MomentIdentity::AsPrinted) => w2 + (self.zeta - 1.0) * v2 - self.target,
        }
    }

    fn evaluate(&mut self, s: f64) -> Result<SearchStep> {
        if self.evaluated.len() >= self.options.max_evaluations {
            return Err(Error::Identification(format!(
                "no root within {} evaluations of r(S)",
                self.options.max_evaluations
            )));
        }
        let near = self.nearest(s);
        let lambda_start = near.map(|c| c.lambda0.clone());
        let rs_start = near
            .and_then(|c| c.solution.as_ref())
            .map(|sol| sol.as_start())
            .unwrap_or_else(|| RsStart::classical(s));
        let frailty =
            frailty_cumhaz_from(self.data, s, &self.options.frailty, lambda_start.as_ref()).map_err(|e| at(s, e))?;
        let lambda0 = frailty.lambda;
        let pop = match self.options.inner {
            InnerSolver::Quadrature(atoms) => build_atom_population(s, &lambda0, &self.lambda_c, &atoms),
            InnerSolver::Population { m, seed } => build_population(
                m,
                s,
                &HazardSpec::empirical(lambda0.clone()),
                &CensoringSpec::EmpiricalStep {
                    step: self.lambda_c.clone(),
                },
                &mut rng_stream(seed, 0),
            ),
        }
        .map_err(|e| at(s, e))?;
        let step = match solve_rs_population(pop, self.zeta, &self.options.rs, &rs_start) {
            Ok(sol) => {
                let step = SearchStep {
                    signal: s,
                    residual: self.residual(&sol),
                    u: sol.u,
                    v: sol.v,
                    w: sol.w,
                    rs_sweeps: sol.sweeps,
                };
                self.evaluated.push(Candidate {
                    step,
                    solution: Some(sol),
                    lambda0,
                });
                step
            }
            // too much signal for this ζ: the maximiser would not exist
            Err(Error::NoBracket(_)) | Err(Error::NonConvergence { .. }) => {
                let step = SearchStep {
                    signal: s,
                    residual: f64::INFINITY,
                    u: f64::NAN,
                    v: f64::NAN,
                    w: f64::NAN,
                    rs_sweeps: 0,
                };
                self.evaluated.push(Candidate {
                    step,
                    solution: None,
                    lambda0,
                });
                step
            }
            Err(e) => return Err(at(s, e)),
        };
        log::debug!("S = {s:.6}: r = {:.6e}", step.residual);
        Ok(step)
    }

    fn sign_changes(&self) -> usize {
        let mut steps: Vec<&SearchStep> = self.evaluated.iter().map(|c| &c.step).collect();
        steps.sort_by(|a, b| a.signal.total_cmp(&b.signal));
        steps
            .windows(2)
            .filter(|w| (w[0].residual > 0.0) != (w[1].residual > 0.0))
            .count()
    }
}

fn at(signal: f64, source: Error) -> Error {
    Error::AtCandidate {
        signal,
        source: Box::new(source),
    }
}

/// Infers `S` from the data and the ML fit alone and returns the de-biased
/// association vector and cumulative hazard.
///
/// For each candidate `S`: `Λ_c` is the Nelson–Aalen estimator of the
/// censoring times, `Λ₀` the frailty fixed point, and the order-parameter
/// equations are solved with these step hazards. `S★` is the root of
/// `r(S) = w² + (1 − ζ) v² − (1/n) Σ_i (β̂·z_i)²`, found by expanding
/// geometrically from an initial guess until `r` changes sign and then
/// shrinking the bracket by regula falsi with bisection safeguards.
pub fn debias_solve(data: &SurvivalDataset, fit: &CoxFit, options: &DebiasOptions) -> Result<DebiasResult> {
    if !fit.converged || fit.separation_detected {
        return Err(Error::Argument(
            "debias needs a converged fit without separation".into(),
        ));
    }
    let (n, p) = (data.n(), data.p());
    if fit.beta_hat.len() != p {
        return Err(Error::Argument("fit and dataset dimensions differ".into()));
    }
    let zeta = data.zeta();
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(Error::Argument(format!("zeta = p/n must lie in (0, 1), got {zeta}")));
    }
    let (s_lo, s_hi) = options.bracket;
    if !(s_lo > 0.0 && s_hi > s_lo && s_hi.is_finite()) {
        return Err(Error::Argument(format!("invalid S bracket [{s_lo}, {s_hi}]")));
    }
    let beta = DVector::from_column_slice(&fit.beta_hat);
    let target = match &options.equation {
        SignalEquation::SecondMoment => (data.covariates() * &beta).norm_squared() / n as f64,
        SignalEquation::KnownCovariance(a) => {
            if a.nrows() != p || a.ncols() != p {
                return Err(Error::Argument("known covariance has the wrong shape".into()));
            }
            beta.dot(&(a * &beta))
        }
    };
    let mut search = Search {
        data,
        zeta,
        target,
        lambda_c: censoring_cumhaz(data),
        options,
        evaluated: Vec::new(),
    };

    // r(S) ≈ κ²S² + (1−ζ)v² − target with κ ≥ 1: start below √target
    let mut s = (target.sqrt() * (1.0 - zeta)).clamp(s_lo, s_hi);
    let mut r = search.evaluate(s)?.residual;
    let (mut a, mut ra, mut b, mut rb);
    loop {
        let next = if r > 0.0 {
            (s / 1.5).max(s_lo)
        } else {
            (s * 1.5).min(s_hi)
        };
        if next == s {
            return Err(Error::Identification(format!(
                "r(S) does not change sign on [{s_lo}, {s_hi}] (r = {r:e} at S = {s})"
            )));
        }
        let rn = search.evaluate(next)?.residual;
        if (rn > 0.0) != (r > 0.0) {
            if next < s {
                (a, ra, b, rb) = (next, rn, s, r);
            } else {
                (a, ra, b, rb) = (s, r, next, rn);
            }
            break;
        }
        s = next;
        r = rn;
    }
    // Illinois regula falsi on [a, b] with r(a) ≤ 0 < r(b)
    let mut side = 0i8;
    while b - a > options.s_tol {
        let mut c = if rb.is_finite() {
            a - ra * (b - a) / (rb - ra)
        } else {
            0.5 * (a + b)
        };
        // keep every step at least a quarter-bracket from the ends
        let (lo, hi) = (a + 0.1 * (b - a), b - 0.1 * (b - a));
        if !(c > lo && c < hi) {
            c = c.clamp(lo, hi);
        }
        let rc = search.evaluate(c)?.residual;
        if rc == 0.0 {
            a = c;
            b = c;
            break;
        }
        if rc > 0.0 {
            b = c;
            rb = rc;
            if side == 1 {
                ra *= 0.5;
            }
            side = 1;
        } else {
            a = c;
            ra = rc;
            if side == -1 && rb.is_finite() {
                rb *= 0.5;
            }
            side = -1;
        }
    }
    // pick the evaluated point with the smallest |r| inside the final bracket
    let best = search
        .evaluated
        .iter()
        .filter(|c| c.solution.is_some() && c.step.signal >= a && c.step.signal <= b)
        .min_by(|x, y| x.step.residual.abs().total_cmp(&y.step.residual.abs()))
        .ok_or_else(|| Error::Identification("no converged inner solve inside the final bracket".into()))?;
    let sol = best.solution.as_ref().expect("filtered on solution");
    let s_star = best.step.signal;
    let kappa = sol.w / s_star;
    let diagnostics = DebiasDiagnostics {
        trace: search.evaluated.iter().map(|c| c.step).collect(),
        sign_changes: search.sign_changes(),
        at_lower_edge: s_star - s_lo <= options.s_tol,
        target,
        final_residual: best.step.residual,
        rs_residual_history: sol.history.clone(),
    };
    if diagnostics.at_lower_edge {
        log::warn!("S* = {s_star} sits at the lower edge of the bracket");
    }
    if diagnostics.sign_changes > 1 {
        log::warn!(
            "r(S) changed sign {} times; reporting the bracketed root",
            diagnostics.sign_changes
        );
    }
    Ok(DebiasResult {
        s_star,
        u_star: sol.u,
        v_star: sol.v,
        w_star: sol.w,
        kappa_star: kappa,
        beta_tilde: fit.beta_hat.iter().map(|b| b / kappa).collect(),
        lambda_tilde: best.lambda0.clone(),
        lambda_c_tilde: search.lambda_c.clone(),
        predicted_sd: sol.v / (kappa * (p as f64).sqrt()),
        diagnostics,
    })
}

/// The two de-biased cumulative hazards: (a) the frailty fixed point at
/// `S★`, (b) the Breslow estimator divided by `κ★`.
pub fn debiased_cumhaz(result: &DebiasResult, fit: &CoxFit) -> (StepFunction, StepFunction) {
    (result.lambda_tilde.clone(), fit.breslow.scaled(1.0 / result.kappa_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cox::{fit_cox, FitOptions};
    use crate::survival::{first_axis_beta, generate_dataset};

    fn fitted(n: usize, p: usize, seed: u64) -> (SurvivalDataset, CoxFit) {
        let data = generate_dataset(
            n,
            p,
            &first_axis_beta(p, 1.0),
            &HazardSpec::log_logistic(),
            &CensoringSpec::uniform(4.0),
            &mut rng_stream(seed, 0),
        )
        .unwrap();
        let fit = fit_cox(&data, &FitOptions::default()).unwrap();
        (data, fit)
    }

    #[test]
    fn rescales_without_turning() {
        let (data, fit) = fitted(400, 120, 7);
        let res = debias_solve(&data, &fit, &DebiasOptions::default()).unwrap();
        assert!(res.s_star > 0.5 && res.s_star < 1.6, "S* = {}", res.s_star);
        assert!((res.kappa_star - res.w_star / res.s_star).abs() < 1e-15);
        assert!(res.kappa_star > 1.0);
        for (t, b) in res.beta_tilde.iter().zip(&fit.beta_hat) {
            assert!((t * res.kappa_star - b).abs() <= 1e-14 * b.abs().max(1e-300));
        }
        let d = &res.diagnostics;
        assert!(!d.at_lower_edge);
        assert!(d.final_residual.abs() <= 0.01 * d.target, "r = {}", d.final_residual);
        assert!(res.w_star.powi(2) >= (1.0 - data.zeta()) * res.v_star.powi(2));
        let (a, b) = debiased_cumhaz(&res, &fit);
        for f in [&a, &b, &res.lambda_c_tilde] {
            assert!(f.values().windows(2).all(|w| w[0] <= w[1]));
        }
        assert!((res.predicted_sd - res.v_star / (res.kappa_star * (120f64).sqrt())).abs() < 1e-15);
    }

    #[test]
    fn classical_regime_leaves_estimators_alone() {
        let (data, fit) = fitted(2000, 10, 3);
        let res = debias_solve(&data, &fit, &DebiasOptions::default()).unwrap();
        assert!((res.kappa_star - 1.0).abs() < 0.02, "kappa* = {}", res.kappa_star);
        let (frailty, rescaled) = debiased_cumhaz(&res, &fit);
        let times = fit.breslow.jump_times();
        let k = times.len();
        for &t in &times[k / 10..k - k / 10] {
            let b = fit.breslow.eval(t);
            assert!((rescaled.eval(t) - b).abs() <= 0.02 * b);
            assert!(
                (frailty.eval(t) - b).abs() <= 0.05 * b,
                "t = {t}: {} vs {b}",
                frailty.eval(t)
            );
        }
    }

    #[test]
    fn known_identity_covariance_agrees_with_moment_route() {
        let (data, fit) = fitted(400, 120, 11);
        let moment = debias_solve(&data, &fit, &DebiasOptions::default()).unwrap();
        let known = debias_solve(
            &data,
            &fit,
            &DebiasOptions {
                equation: SignalEquation::KnownCovariance(DMatrix::identity(120, 120)),
                ..DebiasOptions::default()
            },
        )
        .unwrap();
        // both targets estimate the same population quantity
        assert!(
            (moment.s_star - known.s_star).abs() < 0.25,
            "{} vs {}",
            moment.s_star,
            known.s_star
        );
    }

    #[test]
    fn refuses_unusable_fits() {
        let (data, mut fit) = fitted(200, 20, 1);
        fit.separation_detected = true;
        assert!(matches!(
            debias_solve(&data, &fit, &DebiasOptions::default()),
            Err(Error::Argument(_))
        ));
        fit.separation_detected = false;
        let bad = DebiasOptions {
            bracket: (1.0, 0.5),
            ..DebiasOptions::default()
        };
        assert!(debias_solve(&data, &fit, &bad).is_err());
    }
}
