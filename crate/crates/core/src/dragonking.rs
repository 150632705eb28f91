//! Order-statistic U-test and DK / nDK / pDK labelling.
//!
//! Under a continuous CDF `F`, the k-th smallest of `m` observations has
//! `F(X_(k)) ~ Beta(k, m - k + 1)`, so the probability of exceeding the
//! observed value is `p_k = 1 - I(F(x_k); k, m - k + 1)`. Small `p` at the
//! tail end marks a Dragon King (an observation too large for the model);
//! large `p` marks a negative Dragon King (too small, as from a bounded tail).

use alloc::vec::Vec;
use core::ops::RangeInclusive;

use crate::empirical::SortedSample;
use crate::error::{Error, Result};
use crate::fitting::PowerLawTail;
use crate::specfun::inc_beta_pair;
use crate::Cdf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Classification {
    #[default]
    #[cfg_attr(feature = "serde", serde(rename = "none"))]
    None,
    #[cfg_attr(feature = "serde", serde(rename = "DK"))]
    Dk,
    #[cfg_attr(feature = "serde", serde(rename = "nDK"))]
    Ndk,
    /// Extreme p-value earlier in the tail: a sign of misfit rather than an outlier.
    #[cfg_attr(feature = "serde", serde(rename = "pDK"))]
    Pdk,
}

impl Classification {
    pub fn label(self) -> &'static str {
        match self {
            Classification::None => "none",
            Classification::Dk => "DK",
            Classification::Ndk => "nDK",
            Classification::Pdk => "pDK",
        }
    }
}

/// Two-sided p-value thresholds, `0 < low < high < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Thresholds {
    pub low: f64,
    pub high: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            low: 0.05,
            high: 0.95,
        }
    }
}

impl Thresholds {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        let t = Self { low, high };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.low > 0.0 && self.low < self.high && self.high < 1.0) {
            return Err(Error::Config("thresholds must satisfy 0 < low < high < 1"));
        }
        Ok(())
    }
}

/// Per-rank p-values and labels, aligned with ascending ranks.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct UTestReport {
    pub pvalues: Vec<f64>,
    pub classifications: Vec<Classification>,
    /// How many of the top ranks count as tail ends.
    pub tail_end_window: usize,
    /// First and last 1-based rank of the tail region.
    pub tail_region: (usize, usize),
    pub thresholds: Thresholds,
}

impl UTestReport {
    /// 1-based ranks carrying `label`.
    pub fn ranks_with(&self, label: Classification) -> impl Iterator<Item = usize> + '_ {
        self.classifications
            .iter()
            .enumerate()
            .filter(move |(_, c)| **c == label)
            .map(|(i, _)| i + 1)
    }

    pub fn count(&self, label: Classification) -> usize {
        self.ranks_with(label).count()
    }
}

/// `max(5, ceil(m / 200))` top ranks.
pub fn default_tail_end_window(m: usize) -> usize {
    m.div_ceil(200).max(5).min(m)
}

/// Exceedance probability of every order statistic of `sample` under `cdf`.
pub fn u_test_pvalues<C: Cdf + ?Sized>(sample: &SortedSample, cdf: &C) -> Result<Vec<f64>> {
    let m = sample.len();
    let mut out = Vec::with_capacity(m);
    for (i, &x) in sample.values().iter().enumerate() {
        let f = cdf.cdf(x);
        let s = cdf.ccdf(x);
        for v in [f, s] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain {
                    what: "CDF value outside [0, 1]",
                    value: v,
                });
            }
        }
        let k = (i + 1) as f64;
        // 1 - I(F; k, m-k+1) = I(1-F; m-k+1, k)
        let (p, _) = inc_beta_pair(s, f, m as f64 - k + 1.0, k);
        out.push(p);
    }
    Ok(out)
}

/// Labels each rank from its p-value. Ranks in the top `tail_end_window`
/// become DK or nDK; other ranks inside `tail_region` with extreme p-values
/// become pDK.
pub fn classify(
    pvalues: &[f64],
    tail_region: RangeInclusive<usize>,
    tail_end_window: usize,
    thresholds: Thresholds,
) -> Result<UTestReport> {
    thresholds.validate()?;
    let m = pvalues.len();
    let (a, b) = (*tail_region.start(), *tail_region.end());
    if a == 0 || a > b || b > m {
        return Err(Error::Empty("tail region"));
    }
    let window_start = m + 1 - tail_end_window.min(m);
    let classifications = pvalues
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let rank = i + 1;
            let low = p <= thresholds.low;
            let high = p >= thresholds.high;
            if tail_end_window > 0 && rank >= window_start {
                if low {
                    Classification::Dk
                } else if high {
                    Classification::Ndk
                } else {
                    Classification::None
                }
            } else if (a..=b).contains(&rank) && (low || high) {
                Classification::Pdk
            } else {
                Classification::None
            }
        })
        .collect();
    Ok(UTestReport {
        pvalues: pvalues.to_vec(),
        classifications,
        tail_end_window,
        tail_region: (a, b),
        thresholds,
    })
}

/// p-values and labels in one step.
pub fn u_test<C: Cdf + ?Sized>(
    sample: &SortedSample,
    cdf: &C,
    tail_region: RangeInclusive<usize>,
    tail_end_window: usize,
    thresholds: Thresholds,
) -> Result<UTestReport> {
    let p = u_test_pvalues(sample, cdf)?;
    classify(&p, tail_region, tail_end_window, thresholds)
}

/// The observations at or above the start of a power-law tail, i.e. the
/// sample on which the conditional tail CDF is tested.
pub fn tail_subsample(sample: &SortedSample, tail: &PowerLawTail) -> Result<SortedSample> {
    let v = sample.values();
    let first = v.partition_point(|&x| x < tail.x_min());
    if first == v.len() {
        return Err(Error::Empty("tail subsample"));
    }
    Ok(SortedSample::from_sorted_unchecked(
        v[first..].to_vec(),
        sample.label(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{sample_gb2, Gb2Params};
    use alloc::vec;

    #[test]
    fn single_observation() {
        let s = SortedSample::new(vec![0.3], "one").unwrap();
        let p = u_test_pvalues(&s, &|x: f64| x).unwrap();
        assert!((p[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn maximum_closed_form() {
        // F(x_m) = 0.99 at the top of m = 100 points: p = 1 - 0.99^100
        let v: Vec<f64> = (1..=100)
            .map(|i| if i == 100 { 0.99 } else { i as f64 / 200.0 })
            .collect();
        let s = SortedSample::new(v, "t").unwrap();
        let p = u_test_pvalues(&s, &|x: f64| x).unwrap();
        assert!((p[99] - 0.6339676587267709).abs() < 1e-12, "{}", p[99]);
    }

    #[test]
    fn cdf_outside_unit_interval() {
        let s = SortedSample::new(vec![1.0, 2.0], "t").unwrap();
        assert!(u_test_pvalues(&s, &|x: f64| x).is_err());
    }

    #[test]
    fn pvalue_decreases_with_cdf() {
        let m = 50;
        let v: Vec<f64> = (1..=m).map(|i| i as f64 / (m + 1) as f64).collect();
        let s = SortedSample::new(v, "u").unwrap();
        let base = u_test_pvalues(&s, &|x: f64| x).unwrap();
        let shifted = u_test_pvalues(&s, &|x: f64| (x + 0.01).min(1.0)).unwrap();
        for (a, b) in base.iter().zip(&shifted) {
            assert!(b <= a);
        }
    }

    #[test]
    fn monotone_transform_invariance() {
        let g = Gb2Params::new(2.0, 3.0, 1.5, 2.0).unwrap();
        let s = sample_gb2(&g, 300, 8);
        let t = SortedSample::new(s.values().iter().map(|x| x.ln() + 10.0).collect(), "t").unwrap();
        let a = u_test_pvalues(&s, &g).unwrap();
        let b = u_test_pvalues(&t, &|y: f64| g.cdf((y - 10.0).exp())).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn labels() {
        let p = vec![0.5, 0.01, 0.5, 0.97, 0.5, 0.2, 0.99];
        let r = classify(&p, 2..=7, 2, Thresholds::default()).unwrap();
        use Classification::*;
        assert_eq!(r.classifications, [None, Pdk, None, Pdk, None, None, Ndk]);
        assert_eq!(r.ranks_with(Ndk).collect::<Vec<_>>(), [7]);
        let r = classify(&[0.3, 0.01], 1..=2, 1, Thresholds::default()).unwrap();
        assert_eq!(r.classifications, [None, Dk]);
    }

    #[test]
    fn mid_range_pvalues_are_unlabelled() {
        let p = vec![0.2, 0.5, 0.9, 0.06, 0.94];
        let r = classify(&p, 1..=5, 5, Thresholds::default()).unwrap();
        assert!(r.classifications.iter().all(|c| *c == Classification::None));
    }

    #[test]
    fn bad_region_or_thresholds() {
        let p = vec![0.5; 4];
        assert!(classify(
            &p,
            core::ops::RangeInclusive::new(3, 2),
            1,
            Thresholds::default()
        )
        .is_err());
        assert!(classify(&p, 1..=5, 1, Thresholds::default()).is_err());
        assert!(Thresholds::new(0.9, 0.1).is_err());
    }

    #[test]
    fn window_default() {
        assert_eq!(default_tail_end_window(100), 5);
        assert_eq!(default_tail_end_window(100_000), 500);
        assert_eq!(default_tail_end_window(1_001), 6);
        assert_eq!(default_tail_end_window(3), 3);
    }

    #[test]
    fn tail_subsample_starts_at_x_min() {
        let s = SortedSample::new((1..=10).map(f64::from).collect(), "t").unwrap();
        let t = tail_subsample(&s, &PowerLawTail::new(7.0, -2.0).unwrap()).unwrap();
        assert_eq!(t.values(), [7.0, 8.0, 9.0, 10.0]);
    }
}
