//! Window-level summary statistics and training-set imputation.

use super::{FEATURE_COUNT, STAT_COUNT, VECTOR_LEN};
use crate::dataset::WindowKey;

/// Minimum valid frames per feature (10% of a 125-frame window).
pub const MIN_VALID_FRAMES: usize = 13;

/// Quantile with linear interpolation between order statistics of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// mean, sd, skewness, excess kurtosis, min, p25, median, p75, max.
///
/// Moments are population moments. A constant series has zero skewness and
/// kurtosis. Panics on empty input.
pub fn nine_statistics(values: &[f64]) -> [f64; STAT_COUNT] {
    assert!(!values.is_empty(), "statistics of an empty series");
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (skew, kurt) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    [
        mean,
        m2.sqrt(),
        skew,
        kurt,
        sorted[0],
        quantile_sorted(&sorted, 0.25),
        quantile_sorted(&sorted, 0.5),
        quantile_sorted(&sorted, 0.75),
        sorted[sorted.len() - 1],
    ]
}

/// The 171-value descriptor of one window, feature-major / statistic-minor.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFeatureVector {
    pub key: WindowKey,
    /// NaN marks a feature block that lacked coverage and awaits imputation.
    pub values: Vec<f64>,
    pub low_coverage: bool,
}

impl WindowFeatureVector {
    pub fn block(&self, feature: usize) -> &[f64] {
        &self.values[feature * STAT_COUNT..(feature + 1) * STAT_COUNT]
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Summarises a `frames x 19` series with missing markers.
pub fn summarize_window(
    key: WindowKey,
    series: &[[Option<f64>; FEATURE_COUNT]],
) -> WindowFeatureVector {
    let mut values = Vec::with_capacity(VECTOR_LEN);
    let mut low_coverage = false;
    for f in 0..FEATURE_COUNT {
        let valid: Vec<f64> = series
            .iter()
            .filter_map(|row| row[f])
            .filter(|v| v.is_finite())
            .collect();
        if valid.len() < MIN_VALID_FRAMES {
            low_coverage = true;
            values.extend([f64::NAN; STAT_COUNT]);
        } else {
            values.extend(nine_statistics(&valid));
        }
    }
    WindowFeatureVector {
        key,
        values,
        low_coverage,
    }
}

/// Per-dimension medians of the training windows, used to fill blocks that
/// lacked coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImputer {
    pub medians: Vec<f64>,
}

impl FeatureImputer {
    /// Medians over finite training values; 0 for a dimension never observed.
    pub fn fit(train: &[&WindowFeatureVector]) -> Self {
        let medians = (0..VECTOR_LEN)
            .map(|d| {
                let mut col: Vec<f64> = train
                    .iter()
                    .map(|w| w.values[d])
                    .filter(|v| v.is_finite())
                    .collect();
                if col.is_empty() {
                    return 0.0;
                }
                col.sort_by(|a, b| a.partial_cmp(b).unwrap());
                quantile_sorted(&col, 0.5)
            })
            .collect();
        FeatureImputer { medians }
    }

    pub fn apply(&self, w: &WindowFeatureVector) -> Vec<f64> {
        w.values
            .iter()
            .zip(&self.medians)
            .map(|(&v, &m)| if v.is_finite() { v } else { m })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn key() -> WindowKey {
        WindowKey::new("v", 1, 0)
    }

    #[test]
    fn constant_series() {
        assert_eq!(
            nine_statistics(&[5.0; 30]),
            [5.0, 0.0, 0.0, 0.0, 5.0, 5.0, 5.0, 5.0, 5.0]
        );
    }

    /// Quantile oracle: sort, then interpolate by hand between ranks.
    fn oracle_quantile(values: &[f64], q: f64) -> f64 {
        let mut s = values.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let h = (s.len() as f64 - 1.0) * q;
        let below = h as usize;
        if below + 1 >= s.len() {
            return s[s.len() - 1];
        }
        s[below] * (1.0 - (h - below as f64)) + s[below + 1] * (h - below as f64)
    }

    #[test]
    fn one_to_125() {
        let v: Vec<f64> = (1..=125).map(|i| i as f64).collect();
        let s = nine_statistics(&v);
        assert_eq!(s[0], 63.0);
        assert_eq!(s[4], 1.0);
        assert_eq!(s[8], 125.0);
        assert_eq!(s[5], oracle_quantile(&v, 0.25));
        assert_eq!(s[6], oracle_quantile(&v, 0.5));
        assert_eq!(s[7], oracle_quantile(&v, 0.75));
        assert_eq!((s[5], s[6], s[7]), (32.0, 63.0, 94.0));
        assert!(s[2].abs() < 1e-12);
    }

    #[test]
    fn nineteen_constant_features_give_171_values() {
        let series = vec![[Some(2.0); FEATURE_COUNT]; 125];
        let w = summarize_window(key(), &series);
        assert_eq!(w.values.len(), 171);
        assert!(!w.low_coverage);
        assert!(w.is_complete());
    }

    #[test]
    fn low_coverage_is_flagged_and_imputed() {
        let mut series = vec![[Some(1.0); FEATURE_COUNT]; 125];
        for (i, row) in series.iter_mut().enumerate() {
            if i >= 12 {
                row[4] = None;
            }
        }
        let w = summarize_window(key(), &series);
        assert!(w.low_coverage);
        assert!(w.block(4).iter().all(|v| v.is_nan()));
        let mut train = summarize_window(key(), &vec![[Some(3.0); FEATURE_COUNT]; 125]);
        train.values[4 * STAT_COUNT] = 7.0;
        let imp = FeatureImputer::fit(&[&train]);
        let filled = imp.apply(&w);
        assert_eq!(filled[4 * STAT_COUNT], 7.0);
        assert!(filled.iter().all(|v| v.is_finite()));
        assert_eq!(filled[0], 1.0);
    }

    proptest! {
        #[test]
        fn five_number_summary_is_ordered(v in proptest::collection::vec(-1e3f64..1e3, 1..200)) {
            let s = nine_statistics(&v);
            prop_assert!(s[4] <= s[5] && s[5] <= s[6] && s[6] <= s[7] && s[7] <= s[8]);
            for (q, i) in [(0.25, 5), (0.5, 6), (0.75, 7)] {
                prop_assert!((s[i] - oracle_quantile(&v, q)).abs() <= 1e-9 * (1.0 + s[i].abs()));
            }
        }
    }
}
