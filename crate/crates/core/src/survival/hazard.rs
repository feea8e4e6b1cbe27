use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::StepFunction;
use crate::{Error, Result};

/// Cumulative base hazard `Λ₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HazardSpec {
    /// `Λ₀(t) = ln(1 + (t/scale)^shape)`.
    LogLogistic { shape: f64, scale: f64 },
    /// `Λ₀(t) = (t/scale)^shape`.
    WeibullLike { shape: f64, scale: f64 },
    /// A step cumulative hazard, e.g. an estimate from data.
    EmpiricalStep { step: StepFunction },
}

impl HazardSpec {
    /// `ln(1 + t²)`.
    pub fn log_logistic() -> Self {
        HazardSpec::LogLogistic { shape: 2.0, scale: 1.0 }
    }

    /// `t²/2`.
    pub fn weibull_like() -> Self {
        HazardSpec::WeibullLike {
            shape: 2.0,
            scale: std::f64::consts::SQRT_2,
        }
    }

    pub fn empirical(step: StepFunction) -> Self {
        HazardSpec::EmpiricalStep { step }
    }

    /// Parses `log_logistic` / `weibull_like`.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "log_logistic" | "log-logistic" | "loglogistic" => Ok(Self::log_logistic()),
            "weibull_like" | "weibull-like" | "weibull" => Ok(Self::weibull_like()),
            other => Err(Error::Parse(format!("unknown hazard kind `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            HazardSpec::LogLogistic { .. } => "log_logistic",
            HazardSpec::WeibullLike { .. } => "weibull_like",
            HazardSpec::EmpiricalStep { .. } => "empirical_step",
        }
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self, HazardSpec::EmpiricalStep { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            HazardSpec::LogLogistic { shape, scale } | HazardSpec::WeibullLike { shape, scale } => {
                if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
                    return Err(Error::Argument(format!(
                        "hazard shape and scale must be positive, got shape={shape} scale={scale}"
                    )));
                }
                Ok(())
            }
            HazardSpec::EmpiricalStep { .. } => Ok(()),
        }
    }

    /// `Λ₀(t)`.
    pub fn cumulative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            HazardSpec::LogLogistic { shape, scale } => (t / scale).powf(*shape).ln_1p(),
            HazardSpec::WeibullLike { shape, scale } => (t / scale).powf(*shape),
            HazardSpec::EmpiricalStep { step } => step.eval(t),
        }
    }

    /// Smallest `t` with `Λ₀(t) >= x`; `None` when an empirical hazard never
    /// reaches `x`.
    pub fn inverse(&self, x: f64) -> Option<f64> {
        if x <= 0.0 {
            return Some(0.0);
        }
        match self {
            HazardSpec::LogLogistic { shape, scale } => Some(scale * x.exp_m1().powf(1.0 / shape)),
            HazardSpec::WeibullLike { shape, scale } => Some(scale * x.powf(1.0 / shape)),
            HazardSpec::EmpiricalStep { step } => step.inverse(x),
        }
    }

    /// Last jump of an empirical hazard.
    pub fn last_jump(&self) -> Option<f64> {
        match self {
            HazardSpec::EmpiricalStep { step } => step.last_time(),
            _ => None,
        }
    }
}

/// Non-informative right-censoring mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CensoringSpec {
    /// Censoring time uniform on `[0, t_max]`: `Λ_c(t) = -ln(1 - t/t_max)`.
    UniformInterval { t_max: f64 },
    /// No censoring, `Λ_c ≡ 0`.
    None,
    /// Step cumulative censoring hazard.
    EmpiricalStep { step: StepFunction },
}

impl CensoringSpec {
    pub fn uniform(t_max: f64) -> Self {
        CensoringSpec::UniformInterval { t_max }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CensoringSpec::UniformInterval { .. } => "uniform_interval",
            CensoringSpec::None => "none",
            CensoringSpec::EmpiricalStep { .. } => "empirical_step",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let CensoringSpec::UniformInterval { t_max } = *self {
            if !(t_max > 0.0 && t_max.is_finite()) {
                return Err(Error::Argument(format!("t_max must be positive, got {t_max}")));
            }
        }
        Ok(())
    }

    /// `Λ_c(t)`; `+inf` at and beyond `t_max` for the uniform mechanism.
    pub fn cumulative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            CensoringSpec::UniformInterval { t_max } => {
                if t >= *t_max {
                    f64::INFINITY
                } else {
                    -(-t / t_max).ln_1p()
                }
            }
            CensoringSpec::None => 0.0,
            CensoringSpec::EmpiricalStep { step } => step.eval(t),
        }
    }

    /// Draws a censoring time; `None` means the subject is never censored.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        match self {
            CensoringSpec::UniformInterval { t_max } => {
                // (0, 1]
                let u = 1.0 - rng.random::<f64>();
                Some(t_max * u)
            }
            CensoringSpec::None => None,
            CensoringSpec::EmpiricalStep { step } => {
                let e: f64 = Exp1.sample(rng);
                step.inverse(e)
            }
        }
    }

    pub fn last_jump(&self) -> Option<f64> {
        match self {
            CensoringSpec::EmpiricalStep { step } => step.last_time(),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn closed_forms_match_known_shapes() {
        let ll = HazardSpec::log_logistic();
        let wb = HazardSpec::weibull_like();
        for &t in &[0.0, 0.3, 1.0, 2.5, 4.0] {
            assert_abs_diff_eq!(ll.cumulative(t), (1.0 + t * t).ln(), epsilon = 1e-14);
            assert_abs_diff_eq!(wb.cumulative(t), t * t / 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn inverse_transform_correctness() {
        for h in [HazardSpec::log_logistic(), HazardSpec::weibull_like()] {
            for k in 0..=2000 {
                let x = 20.0 * k as f64 / 2000.0;
                let t = h.inverse(x).unwrap();
                assert_abs_diff_eq!(h.cumulative(t), x, epsilon = 1e-12 * x.max(1.0));
            }
        }
    }

    #[test]
    fn uniform_censoring_hazard() {
        let c = CensoringSpec::uniform(4.0);
        assert_abs_diff_eq!(c.cumulative(2.0), 2f64.ln(), epsilon = 1e-15);
        assert_eq!(c.cumulative(4.0), f64::INFINITY);
        assert_eq!(CensoringSpec::None.cumulative(3.0), 0.0);
    }

    #[test]
    fn serde_shape() {
        let s = serde_json::to_string(&HazardSpec::log_logistic()).unwrap();
        assert_eq!(s, r#"{"kind":"log_logistic","shape":2.0,"scale":1.0}"#);
        let back: HazardSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, HazardSpec::log_logistic());
    }
}
