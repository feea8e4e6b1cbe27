use serde::{Deserialize, Serialize};

use crate::special::{phi_ratio_unchecked, QuadratureRule, DEFAULT_ORDER};
use crate::survival::{
    nelson_aalen, step_on_event_groups, time_groups, weighted_cumhaz_on_groups, StepFunction, SurvivalDataset,
};
use crate::{Error, Result};

/// Settings for the frailty fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrailtyOptions {
    /// Weight of the new iterate; 1 means undamped.
    pub damping: f64,
    /// Sup-norm relative change at event times.
    pub tol: f64,
    pub max_iter: usize,
    /// Gauss–Hermite order for `φ_Δ`.
    pub order: usize,
}

impl Default for FrailtyOptions {
    fn default() -> Self {
        Self {
            damping: 1.0,
            tol: 1e-8,
            max_iter: 5000,
            order: DEFAULT_ORDER,
        }
    }
}

/// Fixed point and its convergence record.
#[derive(Debug, Clone, PartialEq)]
pub struct FrailtyFit {
    pub lambda: StepFunction,
    pub iterations: usize,
    /// Relative sup-norm change per iteration.
    pub history: Vec<f64>,
}

/// Censoring cumulative hazard `Λ̃_c(t) = Σ_{t_i ≤ t} (1 − Δ_i) / |{j : t_j ≥ t_i}|`.
pub fn censoring_cumhaz(data: &SurvivalDataset) -> StepFunction {
    nelson_aalen(&data.with_swapped_events())
}

/// Base cumulative hazard under a log-normal frailty of scale `S`:
/// the fixed point of
/// `Λ̃(t) = Σ_{t_i ≤ t} Δ_i / Σ_{t_j ≥ t_i} φ_{Δ_j+1}(Λ̃(t_j), S) / φ_{Δ_j}(Λ̃(t_j), S)`,
/// iterated from the Nelson–Aalen estimator.
pub fn frailty_cumhaz_fixed_point(
    data: &SurvivalDataset,
    signal: f64,
    options: &FrailtyOptions,
) -> Result<StepFunction> {
    frailty_cumhaz_from(data, signal, options, None).map(|f| f.lambda)
}

/// As [`frailty_cumhaz_fixed_point`], optionally starting from `start`, and
/// returning the iteration record.
pub fn frailty_cumhaz_from(
    data: &SurvivalDataset,
    signal: f64,
    options: &FrailtyOptions,
    start: Option<&StepFunction>,
) -> Result<FrailtyFit> {
    if !(signal >= 0.0 && signal.is_finite()) {
        return Err(Error::Argument(format!(
            "signal must be finite and non-negative, got {signal}"
        )));
    }
    if data.n_events() == 0 {
        return Err(Error::Argument("frailty fixed point needs at least one event".into()));
    }
    if !(options.damping > 0.0 && options.damping <= 1.0) {
        return Err(Error::Argument(format!(
            "damping must lie in (0, 1], got {}",
            options.damping
        )));
    }
    let rule = QuadratureRule::hermite(options.order)?;
    let groups = time_groups(data);
    let n = data.n();
    let mut lam = match start {
        Some(s) => groups.iter().map(|(t, _, _)| s.eval(*t)).collect(),
        None => weighted_cumhaz_on_groups(&groups, &vec![1.0; n]),
    };
    let mut r = vec![1.0; n];
    let mut history = Vec::new();
    for it in 1..=options.max_iter {
        if signal > 0.0 {
            for (g, (_, members, _)) in groups.iter().enumerate() {
                for &j in members {
                    let d = if data.events()[j] { 1.0 } else { 0.0 };
                    r[j] = phi_ratio_unchecked(lam[g], signal, d, &rule);
                }
            }
        }
        let next = weighted_cumhaz_on_groups(&groups, &r);
        let change = next
            .iter()
            .zip(&lam)
            .filter(|(a, _)| **a > 0.0)
            .map(|(a, b)| (a - b).abs() / a)
            .fold(0.0, f64::max);
        history.push(change);
        if !change.is_finite() {
            return Err(Error::NonConvergence {
                what: "frailty fixed point (non-finite iterate)".into(),
                iterations: it,
                last_residual: change,
                history,
            });
        }
        if options.damping == 1.0 {
            lam = next;
        } else {
            for (l, x) in lam.iter_mut().zip(&next) {
                *l = (1.0 - options.damping) * *l + options.damping * x;
            }
        }
        if change <= options.tol {
            return Ok(FrailtyFit {
                lambda: step_on_event_groups(&groups, &lam),
                iterations: it,
                history,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "frailty fixed point".into(),
        iterations: options.max_iter,
        last_residual: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_stream;
    use crate::survival::{generate_dataset, CensoringSpec, HazardSpec};
    use nalgebra::DMatrix;

    fn sim(seed: u64, s: f64) -> SurvivalDataset {
        generate_dataset(
            400,
            1,
            &[s],
            &HazardSpec::log_logistic(),
            &CensoringSpec::uniform(4.0),
            &mut rng_stream(seed, 0),
        )
        .unwrap()
    }

    #[test]
    fn censoring_hand_values() {
        let d = SurvivalDataset::new(vec![1.0, 2.0], vec![false, true], DMatrix::zeros(2, 1)).unwrap();
        let c = censoring_cumhaz(&d);
        assert_eq!(c.jump_times(), &[1.0]);
        assert_eq!(c.values(), &[0.5]);
        let all = SurvivalDataset::new(vec![1.0, 2.0], vec![true, true], DMatrix::zeros(2, 1)).unwrap();
        assert!(censoring_cumhaz(&all).is_empty());
        assert_eq!(censoring_cumhaz(&d.with_swapped_events()), nelson_aalen(&d));
    }

    #[test]
    fn zero_signal_is_nelson_aalen_exactly() {
        let d = sim(1, 1.0);
        assert_eq!(
            frailty_cumhaz_fixed_point(&d, 0.0, &FrailtyOptions::default()).unwrap(),
            nelson_aalen(&d)
        );
    }

    #[test]
    fn tracks_true_hazard() {
        let d = sim(2, 1.0);
        let lam = frailty_cumhaz_fixed_point(&d, 1.0, &FrailtyOptions::default()).unwrap();
        let t = lam.jump_times();
        let (lo, hi) = (t.len() / 10, t.len() * 9 / 10);
        let err: f64 = (lo..hi)
            .map(|k| {
                let truth = HazardSpec::log_logistic().cumulative(t[k]);
                (lam.values()[k] - truth).abs() / truth
            })
            .sum::<f64>()
            / (hi - lo) as f64;
        assert!(err <= 0.10, "mean relative error {err}");
    }

    #[test]
    fn contraction_after_three_sweeps() {
        for seed in 0..20 {
            let d = sim(100 + seed, 1.0);
            let fit = frailty_cumhaz_from(&d, 1.0, &FrailtyOptions::default(), None).unwrap();
            for w in fit.history[3..].windows(2) {
                assert!(
                    w[1] <= w[0] * (1.0 + 1e-9) + 1e-15,
                    "seed {seed}: {:?}",
                    &fit.history[..10.min(fit.history.len())]
                );
            }
        }
    }
}
