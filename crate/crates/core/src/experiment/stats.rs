use serde::{Deserialize, Serialize};

/// Sample mean, standard deviation and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (divisor `count − 1`); NaN for fewer than two values.
    pub sd: f64,
    pub se: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Self {
                count,
                mean: f64::NAN,
                sd: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let sd = if count > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            f64::NAN
        };
        Self {
            count,
            mean,
            sd,
            se: sd / (count as f64).sqrt(),
        }
    }
}

/// Linear-interpolation quantile (the usual "type 7" rule) of unsorted data.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// `count` levels evenly spread over `[lo, hi]`, endpoints included.
pub fn levels(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count)
            .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// One histogram bin, `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Histogram with bins of `width` centred on integer multiples of `width`,
/// so that a value such as `1.0` sits in the middle of its bin. Non-finite
/// values are skipped. Bins run from the lowest to the highest occupied one.
pub fn histogram(values: &[f64], width: f64) -> Vec<Bin> {
    let idx: Vec<i64> = values
        .iter()
        .filter(|v| v.is_finite())
        .map(|v| (v / width).round() as i64)
        .collect();
    let (Some(&lo), Some(&hi)) = (idx.iter().min(), idx.iter().max()) else {
        return Vec::new();
    };
    let mut bins: Vec<Bin> = (lo..=hi)
        .map(|k| Bin {
            lo: (k as f64 - 0.5) * width,
            hi: (k as f64 + 0.5) * width,
            count: 0,
        })
        .collect();
    for k in idx {
        bins[(k - lo) as usize].count += 1;
    }
    bins
}

/// The most populated bin (the first one on ties).
pub fn mode_bin(bins: &[Bin]) -> Option<Bin> {
    bins.iter().copied().fold(None, |best: Option<Bin>, b| match best {
        Some(x) if x.count >= b.count => Some(x),
        _ => Some(b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_values() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.se - s.sd / 2.0).abs() < 1e-15);
        assert!(Summary::of(&[]).mean.is_nan());
        assert!(Summary::of(&[1.0]).sd.is_nan());
    }

    #[test]
    fn quantiles() {
        let v = [3.0, 1.0, 2.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert!((quantile(&v, 0.1) - 1.4).abs() < 1e-15);
        assert_eq!(levels(0.1, 0.9, 3), vec![0.1, 0.5, 0.9]);
    }

    #[test]
    fn centred_bins() {
        let bins = histogram(&[0.96, 1.0, 1.04, 1.06, 0.8, f64::NAN], 0.1);
        assert_eq!(bins.len(), 4);
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 5);
        let mode = mode_bin(&bins).unwrap();
        assert_eq!(mode.count, 3);
        assert!(mode.lo < 1.0 && 1.0 < mode.hi);
        assert!(histogram(&[], 0.1).is_empty());
    }
}
