use serde::{Deserialize, Serialize};

use super::population::{build_population, RsPopulation};
use crate::special::w_exp_unchecked;
use crate::survival::{CensoringSpec, HazardSpec, StepFunction};
use crate::{rng_stream, Error, Result};

/// Which form of the `w` equation drives the `w` update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WUpdate {
    /// `w ← (S/ζ)⟨(u²Δ − W)(Δ − Λ₀(t) e^{S y})⟩`, obtained by Gaussian
    /// integration by parts in `y`. Needs the true hazard; converges fastest.
    #[default]
    IntegrationByParts,
    /// `w ← ⟨y ξ⟩`, usable without the true hazard.
    MeanYXi,
    /// `w ← w + ⟨y (u²Δ − W)⟩ / ζ`: the same fixed point as [`WUpdate::MeanYXi`],
    /// rescaled so that one step moves like the integration-by-parts form.
    /// Exact for discrete (atom) populations, where the density derivative
    /// used by the integration-by-parts form is not available.
    ScaledMeanYXi,
}

impl std::str::FromStr for WUpdate {
    type Err = Error;

    /// Accepts the snake-case names used in configuration files.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "integration_by_parts" => Ok(WUpdate::IntegrationByParts),
            "mean_y_xi" => Ok(WUpdate::MeanYXi),
            "scaled_mean_y_xi" => Ok(WUpdate::ScaledMeanYXi),
            other => Err(Error::Parse(format!("unknown w update `{other}`"))),
        }
    }
}

/// Settings for the damped fixed-point sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsOptions {
    /// Weight `η` of the new value in the `v` and `w` updates.
    pub damping: f64,
    /// Relative tolerance on every order parameter and on `Λ`.
    pub tol: f64,
    pub max_sweeps: usize,
    pub w_update: WUpdate,
    /// Seed for the population draw in [`solve_rs`].
    pub seed: u64,
}

impl Default for RsOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tol: 1e-6,
            max_sweeps: 500,
            w_update: WUpdate::IntegrationByParts,
            seed: 0,
        }
    }
}

/// Final relative residuals of each equation (undamped map minus current state).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RsResiduals {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    /// `sup|Λ' − Λ| / sup Λ'` over member times.
    pub lambda: f64,
}

impl RsResiduals {
    pub fn max(&self) -> f64 {
        self.u.max(self.v).max(self.w).max(self.lambda)
    }
}

/// Initial order parameters and inferred hazard for a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsStart {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    /// `None` starts from the population's Nelson–Aalen estimator.
    pub lambda: Option<StepFunction>,
}

impl RsStart {
    /// `u = v = 0.1`, `w = S` (no bias), `Λ` = Nelson–Aalen.
    pub fn classical(signal: f64) -> Self {
        Self {
            u: 0.1,
            v: 0.1,
            w: signal,
            lambda: None,
        }
    }
}

/// Converged solution of the order-parameter equations.
#[derive(Debug, Clone, PartialEq)]
pub struct RsSolution {
    pub zeta: f64,
    pub signal: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
    /// `w / S`; NaN when `S = 0`.
    pub kappa: f64,
    /// Predicted typical Breslow estimator, on the population's event times.
    pub lambda_rs: StepFunction,
    pub residuals: RsResiduals,
    pub sweeps: usize,
    /// Largest residual after each sweep.
    pub history: Vec<f64>,
    /// Weight of Breslow jumps dropped for an empty or non-finite risk set.
    pub dropped_jumps: usize,
    pub population: RsPopulation,
}

impl RsSolution {
    /// Observable second moment implied by the solution, `⟨ξ²⟩`.
    pub fn mean_xi_sq(&self) -> f64 {
        self.population.mean(|m| m.xi * m.xi)
    }

    /// Starting point for a nearby solve.
    pub fn as_start(&self) -> RsStart {
        RsStart {
            u: self.u,
            v: self.v,
            w: self.w,
            lambda: Some(self.lambda_rs.clone()),
        }
    }
}

/// Result of [`lambda_update`].
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaUpdate {
    pub lambda: StepFunction,
    /// Event times whose risk set was empty (jump dropped).
    pub dropped: usize,
}

fn check_zeta(zeta: f64) -> Result<()> {
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(Error::Argument(format!("zeta must lie in (0, 1), got {zeta}")));
    }
    Ok(())
}

/// `Λ` evaluated on each member group.
fn lambda_on_groups(pop: &RsPopulation, lambda: &StepFunction) -> Vec<f64> {
    (0..pop.n_groups()).map(|g| lambda.eval(pop.group_time(g))).collect()
}

/// Recomputes `W_ℓ` and `ξ_ℓ` for all members. `lam` is indexed by group.
fn compute_xi(pop: &mut RsPopulation, u: f64, v: f64, w: f64, lam: &[f64]) {
    let u2 = u * u;
    let log_u2 = u2.ln();
    for i in 0..pop.m() {
        let base = u2 * pop.delta[i] + v * pop.z[i] + w * pop.y[i];
        let l = lam[pop.group_of[i] as usize];
        let wv = if u2 > 0.0 && l > 0.0 {
            w_exp_unchecked(log_u2 + l.ln() + base, Some(pop.w_cache[i]))
        } else {
            0.0
        };
        pop.w_cache[i] = wv;
        pop.xi[i] = base - wv;
    }
}

/// `ξ_ℓ = u²Δ_ℓ + v z_ℓ + w y_ℓ − W(u² Λ(t_ℓ) e^{u²Δ_ℓ + v z_ℓ + w y_ℓ})` for
/// every member.
pub fn xi_update(pop: &mut RsPopulation, u: f64, v: f64, w: f64, lambda: &StepFunction) -> Result<()> {
    if !(u >= 0.0) || !u.is_finite() || !v.is_finite() || !w.is_finite() {
        return Err(Error::Domain(format!(
            "order parameters must be finite with u >= 0, got ({u}, {v}, {w})"
        )));
    }
    let lam = lambda_on_groups(pop, lambda);
    compute_xi(pop, u, v, w, &lam);
    if let Some(i) = pop.xi.iter().position(|x| !x.is_finite()) {
        return Err(Error::Domain(format!(
            "Lambert W argument is not finite for member {i}"
        )));
    }
    Ok(())
}

/// Population Breslow estimator per group, plus the count of dropped jumps.
fn breslow_groups(pop: &RsPopulation) -> (Vec<f64>, usize) {
    let ng = pop.n_groups();
    let mut jump = vec![0.0; ng];
    let mut risk = 0.0;
    let mut dropped = 0;
    for g in (0..ng).rev() {
        let (a, b) = pop.groups[g];
        let mut events = 0.0;
        for i in a..b {
            risk += pop.weight[i] * pop.xi[i].exp();
            events += pop.weight[i] * pop.delta[i];
        }
        if events > 0.0 {
            if risk > 0.0 && risk.is_finite() {
                jump[g] = events / risk;
            } else {
                dropped += 1;
            }
        }
    }
    let mut acc = 0.0;
    for j in jump.iter_mut() {
        acc += *j;
        *j = acc;
    }
    (jump, dropped)
}

fn groups_to_step(pop: &RsPopulation, lam: &[f64]) -> StepFunction {
    let (t, v): (Vec<f64>, Vec<f64>) = pop
        .event_group_times()
        .into_iter()
        .filter(|&(_, t)| t > 0.0)
        .map(|(g, t)| (t, lam[g]))
        .unzip();
    StepFunction::new(t, v).expect("group times are increasing and values cumulative")
}

/// `Λ̃(t) = Σ_ℓ θ(t − t_ℓ) Δ_ℓ / Σ_j θ(t_j − t_ℓ) e^{ξ_j}` (weighted by the
/// member masses) on the population's current `ξ`.
pub fn lambda_update(pop: &RsPopulation) -> LambdaUpdate {
    let (lam, dropped) = breslow_groups(pop);
    if dropped > 0 {
        log::warn!("dropped {dropped} Breslow jumps with empty risk sets");
    }
    LambdaUpdate {
        lambda: groups_to_step(pop, &lam),
        dropped,
    }
}

/// `⟨1/(1+W)⟩ − (1 − ζ)` and its derivative in `u`, after refreshing `ξ`.
fn u_equation(pop: &mut RsPopulation, zeta: f64, u: f64, v: f64, w: f64, lam: &[f64]) -> (f64, f64) {
    compute_xi(pop, u, v, w, lam);
    let mut f = 0.0;
    let mut df = 0.0;
    for i in 0..pop.m() {
        let wv = pop.w_cache[i];
        let q = 1.0 / (1.0 + wv);
        f += pop.weight[i] * q;
        if u > 0.0 {
            // dW/du = W/(1+W) · (2/u + 2uΔ)
            let dw = wv * q * (2.0 / u + 2.0 * u * pop.delta[i]);
            df -= pop.weight[i] * q * q * dw;
        }
    }
    (f - (1.0 - zeta), df)
}

const U_RESIDUAL: f64 = 1e-10;

/// Solves `1 − ζ = ⟨1/(1 + u² Λ(t) e^{ξ})⟩` for `u` at fixed `(v, w, Λ)` by
/// Newton steps safeguarded with a bisection bracket; on return `ξ` is
/// consistent with the returned `u`.
fn solve_u_groups(pop: &mut RsPopulation, zeta: f64, v: f64, w: f64, lam: &[f64], u0: f64) -> Result<f64> {
    // f(0) = ζ > 0 and f decreases in u
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut u = if u0 > 0.0 && u0.is_finite() { u0 } else { 0.1 };
    for _ in 0..200 {
        let (f, df) = u_equation(pop, zeta, u, v, w, lam);
        if f.abs() <= U_RESIDUAL {
            return Ok(u);
        }
        if f > 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let newton = u - f / df;
        u = if hi.is_infinite() {
            if u > 1e6 {
                return Err(Error::NoBracket(format!(
                    "1 - zeta = {} is not reached for u up to 1e6 (last residual {f:e}); zeta is beyond the attainable range",
                    1.0 - zeta
                )));
            }
            if newton.is_finite() && newton > lo {
                newton.min(4.0 * u)
            } else {
                2.0 * u
            }
        } else if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi.is_finite() && hi - lo <= 1e-15 * hi {
            return Ok(u);
        }
    }
    Err(Error::NonConvergence {
        what: "u equation".into(),
        iterations: 200,
        last_residual: f64::NAN,
        history: Vec::new(),
    })
}

/// Public form of the `u` solve; leaves `ξ` consistent with the returned `u`.
pub fn solve_u(zeta: f64, v: f64, w: f64, lambda: &StepFunction, pop: &mut RsPopulation) -> Result<f64> {
    check_zeta(zeta)?;
    let lam = lambda_on_groups(pop, lambda);
    solve_u_groups(pop, zeta, v, w, &lam, 0.1)
}

/// Undamped targets of the `v` and `w` equations on the current `ξ`.
fn vw_targets(pop: &RsPopulation, zeta: f64, u: f64, w: f64, form: WUpdate) -> (f64, f64) {
    let u2 = u * u;
    let mut g2 = 0.0;
    let mut wt = 0.0;
    for i in 0..pop.m() {
        let g = u2 * pop.delta[i] - pop.w_cache[i];
        let om = pop.weight[i];
        g2 += om * g * g;
        wt += om
            * match form {
                WUpdate::IntegrationByParts => g * (pop.delta[i] - pop.true_hazard[i]),
                WUpdate::MeanYXi => pop.y[i] * pop.xi[i],
                WUpdate::ScaledMeanYXi => pop.y[i] * g,
            };
    }
    let v_new = (g2 / zeta).max(0.0).sqrt();
    let w_new = match form {
        WUpdate::IntegrationByParts => pop.signal * wt / zeta,
        WUpdate::MeanYXi => wt,
        WUpdate::ScaledMeanYXi => w + wt / zeta,
    };
    (v_new, w_new)
}

fn rel(new: f64, old: f64) -> f64 {
    (new - old).abs() / new.abs().max(1e-10)
}

/// Runs the damped sweep `ξ → Λ → v → w → u` on a given population.
pub fn solve_rs_population(
    mut pop: RsPopulation,
    zeta: f64,
    options: &RsOptions,
    start: &RsStart,
) -> Result<RsSolution> {
    check_zeta(zeta)?;
    if !(options.damping > 0.0 && options.damping <= 1.0) {
        return Err(Error::Argument(format!(
            "damping must lie in (0, 1], got {}",
            options.damping
        )));
    }
    let signal = pop.signal;
    if options.w_update == WUpdate::IntegrationByParts && pop.true_hazard.iter().any(|h| h.is_nan()) {
        return Err(Error::Unsupported(
            "integration-by-parts w update needs the true hazard; use mean_y_xi".into(),
        ));
    }
    let (mut u, mut v, mut w) = (start.u, start.v, start.w);
    let mut lam = match &start.lambda {
        Some(l) => lambda_on_groups(&pop, l),
        None => {
            pop.xi.iter_mut().for_each(|x| *x = 0.0);
            breslow_groups(&pop).0
        }
    };
    compute_xi(&mut pop, u, v, w, &lam);
    let eta = options.damping;
    let mut history = Vec::new();
    for sweep in 1..=options.max_sweeps {
        let (lam_new, dropped) = breslow_groups(&pop);
        let scale = lam_new.iter().copied().fold(0.0, f64::max).max(1e-300);
        let r_lambda = lam_new.iter().zip(&lam).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
        let (v_t, w_t) = vw_targets(&pop, zeta, u, w, options.w_update);
        let residuals = RsResiduals {
            u: 0.0,
            v: rel(v_t, v),
            w: rel(w_t, w),
            lambda: r_lambda,
        };
        lam = lam_new;
        v = (1.0 - eta) * v + eta * v_t;
        w = (1.0 - eta) * w + eta * w_t;
        let u_new = solve_u_groups(&mut pop, zeta, v, w, &lam, u)?;
        let residuals = RsResiduals {
            u: rel(u_new, u),
            ..residuals
        };
        u = u_new;
        let worst = residuals.max();
        history.push(worst);
        if !worst.is_finite() {
            return Err(Error::NonConvergence {
                what: "rs sweep (non-finite residual)".into(),
                iterations: sweep,
                last_residual: worst,
                history,
            });
        }
        if worst <= options.tol {
            return Ok(RsSolution {
                zeta,
                signal,
                u,
                v,
                w,
                kappa: if signal > 0.0 { w / signal } else { f64::NAN },
                lambda_rs: groups_to_step(&pop, &lam),
                residuals,
                sweeps: sweep,
                history,
                dropped_jumps: dropped,
                population: pop,
            });
        }
    }
    let last = history.last().copied().unwrap_or(f64::NAN);
    Err(Error::NonConvergence {
        what: "rs sweep".into(),
        iterations: options.max_sweeps,
        last_residual: last,
        history,
    })
}

/// Draws a population of size `m` and solves the order-parameter equations
/// for `(ζ, S, Λ₀, Λ_c)`.
pub fn solve_rs(
    zeta: f64,
    signal: f64,
    hazard: &HazardSpec,
    censoring: &CensoringSpec,
    m: usize,
    options: &RsOptions,
) -> Result<RsSolution> {
    check_zeta(zeta)?;
    let pop = build_population(m, signal, hazard, censoring, &mut rng_stream(options.seed, 0))?;
    solve_rs_population(pop, zeta, options, &RsStart::classical(signal))
}

/// `(Λ₀(t), Λ(t))` at the population's event times, sorted by `Λ₀`.
pub fn rs_predicted_curve(solution: &RsSolution, hazard: &HazardSpec) -> Vec<(f64, f64)> {
    let l = &solution.lambda_rs;
    let mut out: Vec<(f64, f64)> = l
        .jump_times()
        .iter()
        .zip(l.values())
        .map(|(&t, &v)| (hazard.cumulative(t), v))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    out
}
