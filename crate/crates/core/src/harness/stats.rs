use serde::{Deserialize, Serialize};

/// Order statistics plus mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator); zero for one value.
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Stats {
    /// `None` for an empty sample. Quantiles interpolate linearly between
    /// order statistics.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self {
            count: n,
            mean,
            std,
            min: v[0],
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
            max: v[n - 1],
        })
    }
}

pub(crate) fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    let pos = p * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Pooled discrepancy samples over all steps of all completed runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyStats {
    pub stats: Stats,
    pub fraction_below_5pct: f64,
    pub fraction_below_10pct: f64,
}

impl DiscrepancyStats {
    pub fn of(values: &[f64]) -> Option<Self> {
        let stats = Stats::of(values)?;
        let frac = |thr: f64| values.iter().filter(|&&e| e < thr).count() as f64 / values.len() as f64;
        Some(Self {
            stats,
            fraction_below_5pct: frac(0.05),
            fraction_below_10pct: frac(0.10),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles_interpolate() {
        let s = Stats::of(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        assert_eq!(s.mean, 3.0);
        assert!((s.std - 2.5f64.sqrt()).abs() < 1e-15);
        let s = Stats::of(&[1.0, 2.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (1.25, 1.5, 1.75));
    }

    #[test]
    fn single_value_and_empty() {
        let s = Stats::of(&[2.5]).unwrap();
        assert_eq!((s.mean, s.std, s.median, s.q1, s.q3), (2.5, 0.0, 2.5, 2.5, 2.5));
        assert!(Stats::of(&[]).is_none());
    }

    #[test]
    fn discrepancy_fractions() {
        let d = DiscrepancyStats::of(&[0.01, 0.06, 0.2, 0.04]).unwrap();
        assert_eq!(d.fraction_below_5pct, 0.5);
        assert_eq!(d.fraction_below_10pct, 0.75);
    }
}
