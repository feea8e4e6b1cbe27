use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::{CensoringSpec, GenerationMeta, HazardSpec, SurvivalDataset};
use crate::special::QuadratureRule;
use crate::{Error, Result};

/// What to do when an empirical event hazard is not invertible at a draw
/// (the draw exceeds the hazard's final value).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TailPolicy {
    /// Fail with a generation error naming the draw.
    #[default]
    Error,
    /// Treat the hazard as flat beyond its last jump: the event never fires.
    /// If censoring never fires either, the subject is censored at the last
    /// jump time of the two hazards.
    Flatten,
}

/// `n × p` matrix of i.i.d. standard normals.
pub fn sample_covariates<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if n == 0 || p == 0 {
        return Err(Error::Argument(format!(
            "covariate dimensions must be positive, got {n}×{p}"
        )));
    }
    // row-major draw order so that a fixed seed gives the same rows regardless of p layout
    let mut z = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            z[(i, j)] = StandardNormal.sample(rng);
        }
    }
    Ok(z)
}

/// One `(t, Δ)` draw from the proportional-hazards model with linear
/// predictor `h`: `T = Λ₀⁻¹(E e^{-h})` with `E ~ Exp(1)`, `C` from the
/// censoring mechanism, `t = min(T, C)`, `Δ = 1[T < C]`.
pub fn draw_outcome<R: Rng + ?Sized>(
    h: f64,
    hazard: &HazardSpec,
    censoring: &CensoringSpec,
    policy: TailPolicy,
    rng: &mut R,
) -> Result<(f64, bool)> {
    let e: f64 = Exp1.sample(rng);
    let target = e * (-h).exp();
    let event = hazard.inverse(target);
    let cens = censoring.sample(rng);
    match (event, cens) {
        (Some(t), Some(c)) => Ok(if t < c { (t, true) } else { (c, false) }),
        (Some(t), None) => Ok((t, true)),
        (None, _) if policy == TailPolicy::Error => Err(Error::Generation(format!(
            "event-hazard draw {target:e} (E = {e:e}, h = {h:.4}) lies beyond the last jump of the empirical hazard (final value {:e})",
            hazard.cumulative(f64::MAX)
        ))),
        (None, Some(c)) => Ok((c, false)),
        (None, None) => {
            let last = hazard
                .last_jump()
                .into_iter()
                .chain(censoring.last_jump())
                .fold(f64::NAN, f64::max);
            if last.is_finite() {
                Ok((last, false))
            } else {
                Err(Error::Generation("neither hazard has a finite last jump".into()))
            }
        }
    }
}

/// Simulates `n` subjects with standard-normal covariates and association
/// vector `beta0`.
pub fn generate_dataset<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    beta0: &[f64],
    hazard: &HazardSpec,
    censoring: &CensoringSpec,
    rng: &mut R,
) -> Result<SurvivalDataset> {
    generate_dataset_with(n, p, beta0, hazard, censoring, TailPolicy::Error, rng)
}

pub fn generate_dataset_with<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    beta0: &[f64],
    hazard: &HazardSpec,
    censoring: &CensoringSpec,
    policy: TailPolicy,
    rng: &mut R,
) -> Result<SurvivalDataset> {
    if beta0.len() != p {
        return Err(Error::Argument(format!(
            "beta0 has length {}, expected p = {p}",
            beta0.len()
        )));
    }
    hazard.validate()?;
    censoring.validate()?;
    let z = sample_covariates(n, p, rng)?;
    let beta = nalgebra::DVector::from_column_slice(beta0);
    let lp = &z * &beta;
    let mut times = Vec::with_capacity(n);
    let mut events = Vec::with_capacity(n);
    for (i, &h) in lp.iter().enumerate() {
        let (t, d) = draw_outcome(h, hazard, censoring, policy, rng)
            .map_err(|e| Error::Generation(format!("subject {i}: {e}")))?;
        times.push(t);
        events.push(d);
    }
    let meta = GenerationMeta {
        n,
        p,
        seed: None,
        signal: beta.norm(),
        hazard: hazard.clone(),
        censoring: censoring.clone(),
        beta0: beta0.to_vec(),
    };
    Ok(SurvivalDataset::new(times, events, z)?.with_meta(meta))
}

/// `β₀ = S ê₁`.
pub fn first_axis_beta(p: usize, signal: f64) -> Vec<f64> {
    let mut b = vec![0.0; p];
    if p > 0 {
        b[0] = signal;
    }
    b
}

/// Expected fraction of uncensored events,
/// `1 − ∫₀^{t_max} (dt/t_max) ∫Dy exp(−Λ₀(t) e^{S y})` for uniform censoring
/// and 1 without censoring.
pub fn expected_event_fraction(
    signal: f64,
    hazard: &HazardSpec,
    censoring: &CensoringSpec,
    rule: &QuadratureRule,
) -> Result<f64> {
    if !hazard.is_closed_form() {
        return Err(Error::Unsupported(
            "expected_event_fraction needs a closed-form hazard".into(),
        ));
    }
    if !(signal >= 0.0) {
        return Err(Error::Argument(format!("signal must be non-negative, got {signal}")));
    }
    match censoring {
        CensoringSpec::None => Ok(1.0),
        CensoringSpec::UniformInterval { t_max } => {
            let t_rule = QuadratureRule::legendre(96)?;
            let survive = t_rule.integrate(0.0, *t_max, |t| {
                let lam = hazard.cumulative(t);
                rule.expect(|y| (-lam * (signal * y).exp()).exp())
            })?;
            Ok((1.0 - survive / t_max).clamp(0.0, 1.0))
        }
        CensoringSpec::EmpiricalStep { .. } => Err(Error::Unsupported(
            "expected_event_fraction supports uniform or no censoring".into(),
        )),
    }
}
