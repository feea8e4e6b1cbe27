use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::stats::Summary;
use crate::cox::{fit_cox, overfit_markers_identity, FitOptions, OverfitMarkers};
use crate::debias::{debias_solve, debiased_cumhaz, DebiasOptions, InnerSolver};
use crate::rs::{rs_predicted_curve, solve_rs, RsOptions};
use crate::survival::{first_axis_beta, generate_dataset, StepFunction};
use crate::{rng_stream, Error, Result};

/// De-biasing output kept per replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebiasRecord {
    pub s_star: f64,
    pub u_star: f64,
    pub v_star: f64,
    pub w_star: f64,
    pub kappa_star: f64,
    pub predicted_sd: f64,
    /// `β̃₁`, the component along `β₀`.
    pub beta_tilde_1: f64,
    /// `β̃₂`, a component with `β₀₂ = 0`; NaN when `p = 1`.
    pub beta_tilde_2: f64,
    /// Standard deviation of the `β̃` components with `β₀ⱼ = 0`.
    pub zero_sd_tilde: f64,
    pub evaluations: usize,
    pub sign_changes: usize,
    /// Frailty fixed point at `S★` (kept when curves are requested).
    pub lambda_frailty: Option<StepFunction>,
    /// Breslow estimator divided by `κ★` (kept when curves are requested).
    pub lambda_rescaled: Option<StepFunction>,
}

/// Everything one successful replicate produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateData {
    pub markers: OverfitMarkers,
    pub event_fraction: f64,
    pub fit_iterations: usize,
    pub beta_hat_1: f64,
    pub beta_hat_2: f64,
    /// Standard deviation of the `β̂` components with `β₀ⱼ = 0`.
    pub zero_sd_hat: f64,
    pub breslow: Option<StepFunction>,
    pub debias: Option<DebiasRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    /// The data, or the error message of the first stage that failed.
    pub outcome: std::result::Result<ReplicateData, String>,
}

/// One converged RS solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsPoint {
    pub seed: u64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub kappa: f64,
    pub sweeps: usize,
    pub residual: f64,
    /// Population mean of `ξ²`.
    pub mean_xi_sq: f64,
}

/// RS prediction for one grid point: the average over reseeded populations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsRecord {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub kappa: f64,
    /// Monte-Carlo standard errors of the averages (NaN for one repeat).
    pub v_se: f64,
    pub kappa_se: f64,
    /// Every solution entering the average.
    pub solutions: Vec<RsPoint>,
    /// `Λ` of the first solution.
    pub lambda_rs: StepFunction,
    /// `(Λ₀(t), Λ(t))` of the first solution, when curves are requested.
    pub curve: Vec<(f64, f64)>,
}

/// All replicates and the RS prediction at one `ζ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaBlock {
    pub zeta: f64,
    pub p: usize,
    pub replicates: Vec<ReplicateRecord>,
    pub rs: Option<std::result::Result<RsRecord, String>>,
}

impl ZetaBlock {
    pub fn ok(&self) -> impl Iterator<Item = &ReplicateData> {
        self.replicates.iter().filter_map(|r| r.outcome.as_ref().ok())
    }

    pub fn failed(&self) -> usize {
        self.replicates.iter().filter(|r| r.outcome.is_err()).count()
    }

    /// Summary of `f` over the successful replicates where it is defined.
    pub fn summary<F: Fn(&ReplicateData) -> Option<f64>>(&self, f: F) -> Summary {
        let v: Vec<f64> = self.ok().filter_map(f).collect();
        Summary::of(&v)
    }

    /// Successful replicates that also carry a de-biasing record.
    pub fn debiased(&self) -> impl Iterator<Item = &DebiasRecord> {
        self.ok().filter_map(|d| d.debias.as_ref())
    }
}

/// Result of [`run_experiment`]. The default value is the empty bundle.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportBundle {
    pub config: Option<ExperimentConfig>,
    pub blocks: Vec<ZetaBlock>,
}

impl ReportBundle {
    /// Failed replicates plus failed RS solves.
    pub fn failures(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| b.failed() + usize::from(matches!(b.rs, Some(Err(_)))))
            .sum()
    }
}

fn sd_of(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    Summary::of(&v).sd
}

fn debias_options(cfg: &ExperimentConfig) -> DebiasOptions {
    DebiasOptions {
        inner: InnerSolver::Quadrature(cfg.atoms),
        bracket: cfg.s_bracket,
        s_tol: cfg.s_tol,
        ..DebiasOptions::default()
    }
}

/// Generate → fit → markers, then de-bias if requested.
fn run_replicate(cfg: &ExperimentConfig, zi: usize, p: usize, r: usize) -> Result<ReplicateData> {
    let beta0 = first_axis_beta(p, cfg.signal);
    let mut rng = rng_stream(cfg.seed, ((zi as u64) << 32) | r as u64);
    let data = generate_dataset(cfg.n, p, &beta0, &cfg.hazard, &cfg.censoring(), &mut rng)?;
    let fit = fit_cox(&data, &FitOptions::default())?;
    if fit.separation_detected {
        return Err(Error::Fit(
            "separation detected: the ML estimator does not exist".into(),
        ));
    }
    if !fit.converged {
        return Err(Error::Fit(format!(
            "no convergence after {} iterations",
            fit.iterations
        )));
    }
    let markers = overfit_markers_identity(&fit.beta_hat, &beta0, data.covariates())?;
    let debias = if cfg.stages.debias {
        let res = debias_solve(&data, &fit, &debias_options(cfg))?;
        let (frailty, rescaled) = debiased_cumhaz(&res, &fit);
        Some(DebiasRecord {
            s_star: res.s_star,
            u_star: res.u_star,
            v_star: res.v_star,
            w_star: res.w_star,
            kappa_star: res.kappa_star,
            predicted_sd: res.predicted_sd,
            beta_tilde_1: res.beta_tilde[0],
            beta_tilde_2: res.beta_tilde.get(1).copied().unwrap_or(f64::NAN),
            zero_sd_tilde: sd_of(res.beta_tilde.iter().skip(1).copied()),
            evaluations: res.diagnostics.trace.len(),
            sign_changes: res.diagnostics.sign_changes,
            lambda_frailty: cfg.stages.curves.then_some(frailty),
            lambda_rescaled: cfg.stages.curves.then_some(rescaled),
        })
    } else {
        None
    };
    Ok(ReplicateData {
        markers,
        event_fraction: data.event_fraction(),
        fit_iterations: fit.iterations,
        beta_hat_1: fit.beta_hat[0],
        beta_hat_2: fit.beta_hat.get(1).copied().unwrap_or(f64::NAN),
        zero_sd_hat: sd_of(fit.beta_hat.iter().skip(1).copied()),
        breslow: cfg.stages.curves.then_some(fit.breslow),
        debias,
    })
}

fn run_rs(cfg: &ExperimentConfig, zeta: f64) -> Result<RsRecord> {
    let mut solutions = Vec::with_capacity(cfg.rs_repeats);
    let mut first = None;
    for k in 0..cfg.rs_repeats as u64 {
        let seed = cfg.seed.wrapping_add(k);
        let opts = RsOptions { seed, ..cfg.rs };
        let sol = solve_rs(zeta, cfg.signal, &cfg.hazard, &cfg.censoring(), cfg.m, &opts)?;
        solutions.push(RsPoint {
            seed,
            u: sol.u,
            v: sol.v,
            w: sol.w,
            kappa: sol.kappa,
            sweeps: sol.sweeps,
            residual: sol.residuals.max(),
            mean_xi_sq: sol.mean_xi_sq(),
        });
        if first.is_none() {
            first = Some(sol);
        }
    }
    let sol = first.ok_or_else(|| Error::Argument("rs_repeats must be at least 1".into()))?;
    let avg = |f: fn(&RsPoint) -> f64| Summary::of(&solutions.iter().map(f).collect::<Vec<_>>());
    let (v, kappa) = (avg(|s| s.v), avg(|s| s.kappa));
    Ok(RsRecord {
        u: avg(|s| s.u).mean,
        v: v.mean,
        w: avg(|s| s.w).mean,
        kappa: kappa.mean,
        v_se: v.se,
        kappa_se: kappa.se,
        curve: if cfg.stages.curves {
            rs_predicted_curve(&sol, &cfg.hazard)
        } else {
            Vec::new()
        },
        lambda_rs: sol.lambda_rs,
        solutions,
    })
}

/// Runs every replicate at every grid point (in parallel on the current
/// rayon pool) and the per-`ζ` RS solves. Errors inside a replicate or an RS
/// solve are recorded and the run continues; only an invalid configuration
/// fails the call. Output is ordered by grid point and replicate index, and
/// replicate `r` at grid point `k` draws from the random substream
/// `(k << 32) | r` of `seed`, so results do not depend on the thread count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ReportBundle> {
    config.validate()?;
    let mut blocks = Vec::with_capacity(config.zetas.len());
    for (zi, &zeta) in config.zetas.iter().enumerate() {
        let p = config.p_for(zeta);
        log::info!("{}: zeta = {zeta}, n = {}, p = {p}", config.scenario.name(), config.n);
        let replicates: Vec<ReplicateRecord> = (0..config.replicates)
            .into_par_iter()
            .map(|r| ReplicateRecord {
                replicate: r,
                outcome: run_replicate(config, zi, p, r).map_err(|e| e.to_string()),
            })
            .collect();
        let failed = replicates.iter().filter(|r| r.outcome.is_err()).count();
        if failed > 0 {
            log::warn!("zeta = {zeta}: {failed} of {} replicates failed", config.replicates);
        }
        // the RS equations use the realised ratio p/n
        let rs = config
            .stages
            .rs
            .then(|| run_rs(config, p as f64 / config.n as f64).map_err(|e| e.to_string()));
        blocks.push(ZetaBlock {
            zeta,
            p,
            replicates,
            rs,
        });
    }
    Ok(ReportBundle {
        config: Some(config.clone()),
        blocks,
    })
}
