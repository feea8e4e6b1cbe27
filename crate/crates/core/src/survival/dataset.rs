use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{CensoringSpec, HazardSpec};
use crate::{Error, Result};

/// How a dataset was generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationMeta {
    pub n: usize,
    pub p: usize,
    pub seed: Option<u64>,
    /// `|A^{1/2} β₀|`, here `|β₀|` since covariates have identity covariance.
    pub signal: f64,
    pub hazard: HazardSpec,
    pub censoring: CensoringSpec,
    pub beta0: Vec<f64>,
}

/// `n` right-censored observations `(t_i, Δ_i, z_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    times: Vec<f64>,
    events: Vec<bool>,
    /// `n × p`, row `i` is `z_i`.
    covariates: DMatrix<f64>,
    meta: Option<GenerationMeta>,
}

impl SurvivalDataset {
    pub fn new(times: Vec<f64>, events: Vec<bool>, covariates: DMatrix<f64>) -> Result<Self> {
        let n = times.len();
        if n == 0 {
            return Err(Error::Argument("dataset must contain at least one subject".into()));
        }
        if events.len() != n || covariates.nrows() != n {
            return Err(Error::Argument(format!(
                "inconsistent dimensions: {} times, {} events, {} covariate rows",
                n,
                events.len(),
                covariates.nrows()
            )));
        }
        if let Some((i, t)) = times.iter().enumerate().find(|(_, t)| !t.is_finite() || **t <= 0.0) {
            return Err(Error::Argument(format!(
                "time {t} of subject {i} is not finite and positive"
            )));
        }
        if covariates.iter().any(|z| !z.is_finite()) {
            return Err(Error::Argument("covariates must be finite".into()));
        }
        Ok(Self {
            times,
            events,
            covariates,
            meta: None,
        })
    }

    pub fn with_meta(mut self, meta: GenerationMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn p(&self) -> usize {
        self.covariates.ncols()
    }

    /// `p / n`.
    pub fn zeta(&self) -> f64 {
        self.p() as f64 / self.n() as f64
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn covariates(&self) -> &DMatrix<f64> {
        &self.covariates
    }

    pub fn meta(&self) -> Option<&GenerationMeta> {
        self.meta.as_ref()
    }

    pub fn meta_mut(&mut self) -> Option<&mut GenerationMeta> {
        self.meta.as_mut()
    }

    pub fn n_events(&self) -> usize {
        self.events.iter().filter(|&&e| e).count()
    }

    pub fn event_fraction(&self) -> f64 {
        self.n_events() as f64 / self.n() as f64
    }

    /// Dataset with event indicators flipped (events become censorings).
    pub fn with_swapped_events(&self) -> Self {
        Self {
            times: self.times.clone(),
            events: self.events.iter().map(|e| !e).collect(),
            covariates: self.covariates.clone(),
            meta: None,
        }
    }

    /// Subject indices in ascending time order; at equal times events come first.
    pub fn time_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.n()).collect();
        idx.sort_by(|&a, &b| {
            self.times[a]
                .total_cmp(&self.times[b])
                .then_with(|| self.events[b].cmp(&self.events[a]))
        });
        idx
    }
}
