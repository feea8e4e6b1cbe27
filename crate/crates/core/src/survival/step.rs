use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Right-continuous, non-decreasing, piecewise-constant function on `t >= 0`,
/// zero before its first jump.
///
/// Stores cumulative values rather than increments; evaluation is a binary
/// search.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StepFunction {
    jump_times: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    /// Builds from strictly increasing positive jump times and the
    /// non-decreasing, non-negative value reached at each.
    pub fn new(jump_times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if jump_times.len() != values.len() {
            return Err(Error::Argument(format!(
                "step function needs as many values ({}) as jump times ({})",
                values.len(),
                jump_times.len()
            )));
        }
        if jump_times.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(Error::Argument("jump times must be finite and positive".into()));
        }
        if jump_times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument("jump times must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Argument("values must be finite and non-negative".into()));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Argument("values must be non-decreasing".into()));
        }
        Ok(Self { jump_times, values })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Accumulates `(time, increment)` pairs given in non-decreasing time
    /// order; equal times are merged.
    pub fn from_increments(times: &[f64], increments: &[f64]) -> Result<Self> {
        if times.len() != increments.len() {
            return Err(Error::Argument("times and increments differ in length".into()));
        }
        if times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Argument("increment times must be sorted".into()));
        }
        let mut jump_times: Vec<f64> = Vec::with_capacity(times.len());
        let mut values: Vec<f64> = Vec::with_capacity(times.len());
        let mut acc = 0.0;
        for (&t, &d) in times.iter().zip(increments) {
            if !(d >= 0.0) {
                return Err(Error::Argument(format!("negative increment {d} at t = {t}")));
            }
            acc += d;
            match jump_times.last() {
                Some(&last) if last == t => *values.last_mut().unwrap() = acc,
                _ => {
                    jump_times.push(t);
                    values.push(acc);
                }
            }
        }
        Self::new(jump_times, values)
    }

    /// Value at `t`: the value at the largest jump time `<= t`, 0 before the first.
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&s| s <= t);
        if k == 0 {
            0.0
        } else {
            self.values[k - 1]
        }
    }

    /// Generalized inverse: the smallest `t` with `eval(t) >= x`. `None` if
    /// the function never reaches `x`.
    pub fn inverse(&self, x: f64) -> Option<f64> {
        if x <= 0.0 {
            return Some(0.0);
        }
        let k = self.values.partition_point(|&v| v < x);
        self.jump_times.get(k).copied()
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn increments(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.values
            .iter()
            .map(|&v| {
                let d = v - prev;
                prev = v;
                d
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.jump_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jump_times.is_empty()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.jump_times.last().copied()
    }

    pub fn last_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Same jump times, values multiplied by `factor >= 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            jump_times: self.jump_times.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eval_is_right_continuous() {
        let f = StepFunction::new(vec![1.0, 2.0], vec![0.5, 1.5]).unwrap();
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(0.999), 0.0);
        assert_eq!(f.eval(1.0), 0.5);
        assert_eq!(f.eval(1.5), 0.5);
        assert_eq!(f.eval(2.0), 1.5);
        assert_eq!(f.eval(1e9), 1.5);
        assert_eq!(f.inverse(0.5), Some(1.0));
        assert_eq!(f.inverse(0.6), Some(2.0));
        assert_eq!(f.inverse(1.6), None);
        assert_eq!(f.inverse(0.0), Some(0.0));
    }

    #[test]
    fn validation() {
        assert!(StepFunction::new(vec![1.0, 1.0], vec![0.1, 0.2]).is_err());
        assert!(StepFunction::new(vec![0.0], vec![0.1]).is_err());
        assert!(StepFunction::new(vec![1.0, 2.0], vec![0.3, 0.2]).is_err());
        assert!(StepFunction::from_increments(&[1.0], &[-0.1]).is_err());
    }

    #[test]
    fn merges_tied_increments() {
        let f = StepFunction::from_increments(&[1.0, 1.0, 3.0], &[0.25, 0.25, 1.0]).unwrap();
        assert_eq!(f.jump_times(), &[1.0, 3.0]);
        assert_eq!(f.values(), &[0.5, 1.5]);
        assert_eq!(f.increments(), vec![0.5, 1.0]);
    }

    proptest! {
        #[test]
        fn inverse_round_trip(incs in proptest::collection::vec(0.0f64..2.0, 1..40)) {
            let times: Vec<f64> = (1..=incs.len()).map(|k| k as f64 * 0.37).collect();
            let f = StepFunction::from_increments(&times, &incs).unwrap();
            for &t in f.jump_times() {
                let v = f.eval(t);
                let back = f.inverse(v).unwrap();
                prop_assert!(back <= t);
                prop_assert_eq!(f.eval(back), v);
            }
        }
    }
}
