//! Sorted samples, rank-based CCDFs, binomial-inversion confidence bands and
//! log-binned densities.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use libm::{floor, log10, pow};

use crate::error::{Error, Result};
use crate::specfun::binom_quantile;
use crate::Cdf;

/// Ascending, finite, strictly positive observations with a provenance label.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSample {
    values: Vec<f64>,
    label: String,
}

impl SortedSample {
    /// Validates and sorts `values`. Ties are kept.
    pub fn new(mut values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("sample"));
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::InvalidSample { index, value });
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self {
            values,
            label: label.into(),
        })
    }

    pub(crate) fn from_sorted_unchecked(values: Vec<f64>, label: &str) -> Self {
        debug_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        Self {
            values,
            label: label.to_string(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of observations `m`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Lower median (element `⌊(m-1)/2⌋`).
    pub fn median(&self) -> f64 {
        self.values[(self.values.len() - 1) / 2]
    }

    /// Sample quantile by the nearest-rank rule.
    pub fn quantile(&self, level: f64) -> f64 {
        let m = self.values.len();
        let idx = libm::ceil(level.clamp(0.0, 1.0) * m as f64) as usize;
        self.values[idx.clamp(1, m) - 1]
    }
}

/// How the `s` values of a [`CcdfCurve`] were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CcdfConvention {
    /// `s = #{obs >= x} / m`; the maximum gets `1/m`.
    EmpiricalRank,
    /// `s` is a model CCDF evaluated at the sample's distinct values.
    Model,
}

/// Points `(x, s)` of a CCDF, `x` ascending and `s` non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CcdfCurve {
    points: Vec<(f64, f64)>,
    convention: CcdfConvention,
}

impl CcdfCurve {
    /// Builds a curve from raw points, checking the ordering invariants.
    pub fn from_points(points: Vec<(f64, f64)>, convention: CcdfConvention) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("curve"));
        }
        for w in points.windows(2) {
            if w[0].0.partial_cmp(&w[1].0) != Some(core::cmp::Ordering::Less) {
                return Err(Error::Config("curve x values must be strictly ascending"));
            }
            if w[1].1 > w[0].1 {
                return Err(Error::Config("curve s values must not increase"));
            }
        }
        if points.iter().any(|&(_, s)| !(0.0..=1.0).contains(&s)) {
            return Err(Error::Config("curve s values must lie in [0, 1]"));
        }
        Ok(Self { points, convention })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn convention(&self) -> CcdfConvention {
        self.convention
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn max_x(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }
}

/// Empirical CCDF with one point per distinct value; ties carry the upper count.
pub fn build_ccdf(sample: &SortedSample) -> CcdfCurve {
    let v = sample.values();
    let m = v.len() as f64;
    let mut points = Vec::new();
    let mut i = 0;
    while i < v.len() {
        let x = v[i];
        points.push((x, (v.len() - i) as f64 / m));
        while i < v.len() && v[i] == x {
            i += 1;
        }
    }
    CcdfCurve {
        points,
        convention: CcdfConvention::EmpiricalRank,
    }
}

/// A model CCDF evaluated at the distinct values of `sample`.
pub fn model_curve<C: Cdf + ?Sized>(sample: &SortedSample, model: &C) -> CcdfCurve {
    let mut points: Vec<(f64, f64)> = Vec::new();
    for &x in sample.values() {
        if points.last().is_some_and(|&(px, _)| px == x) {
            continue;
        }
        let s = model.ccdf(x).clamp(0.0, 1.0);
        // keep s non-increasing despite rounding
        let s = points.last().map_or(s, |&(_, ps)| s.min(ps));
        points.push((x, s));
    }
    CcdfCurve {
        points,
        convention: CcdfConvention::Model,
    }
}

/// Which curve a confidence band is centred on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BandCenter {
    /// Around the fitted model CCDF.
    #[default]
    Model,
    /// Around the empirical CCDF.
    Empirical,
}

/// Pointwise two-sided equal-tail binomial band aligned with a [`CcdfCurve`].
#[derive(Debug, Clone, PartialEq)]
pub struct CiBand {
    pub level: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Inverts the binomial law at every curve point: with `S ~ Binomial(m, s)`,
/// the band is `[q_{(1-level)/2}(S), q_{(1+level)/2}(S)] / m`.
pub fn ci_band(curve: &CcdfCurve, m: u64, level: f64) -> Result<CiBand> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain {
            what: "confidence level must lie in (0, 1)",
            value: level,
        });
    }
    if m == 0 {
        return Err(Error::Empty("sample"));
    }
    let lo_q = 0.5 * (1.0 - level);
    let hi_q = 0.5 * (1.0 + level);
    let mf = m as f64;
    let mut lower = Vec::with_capacity(curve.len());
    let mut upper = Vec::with_capacity(curve.len());
    for &(_, s) in curve.points() {
        if s <= 0.0 || s >= 1.0 {
            lower.push(s);
            upper.push(s);
            continue;
        }
        lower.push(binom_quantile(lo_q, m, s)? as f64 / mf);
        upper.push(binom_quantile(hi_q, m, s)? as f64 / mf);
    }
    Ok(CiBand {
        level,
        lower,
        upper,
    })
}

/// One geometric histogram bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogBin {
    pub lower: f64,
    pub upper: f64,
    /// Geometric centre `√(lower · upper)`.
    pub center: f64,
    pub count: usize,
    /// `count / (m · (upper - lower))`.
    pub density: f64,
}

/// Histogram on logarithmically spaced bins; empty bins are omitted.
pub fn log_binned_pdf(sample: &SortedSample, bins_per_decade: u32) -> Result<Vec<LogBin>> {
    if bins_per_decade == 0 {
        return Err(Error::Config("bins_per_decade must be at least 1"));
    }
    if let Some(&bad) = sample.values().iter().find(|v| **v <= 0.0) {
        return Err(Error::Domain {
            what: "log binning needs positive values",
            value: bad,
        });
    }
    let bpd = bins_per_decade as f64;
    let m = sample.len() as f64;
    let edge = |k: i64| pow(10.0, k as f64 / bpd);
    let bin_of = |x: f64| {
        let mut k = floor(log10(x) * bpd) as i64;
        // correct for rounding in log10 at bin edges
        if x < edge(k) {
            k -= 1;
        } else if x >= edge(k + 1) {
            k += 1;
        }
        k
    };
    let mut bins: Vec<LogBin> = Vec::new();
    let mut current: Option<(i64, usize)> = None;
    let flush = |k: i64, count: usize, bins: &mut Vec<LogBin>| {
        let lower = edge(k);
        let upper = edge(k + 1);
        bins.push(LogBin {
            lower,
            upper,
            center: libm::sqrt(lower * upper),
            count,
            density: count as f64 / (m * (upper - lower)),
        });
    };
    for &x in sample.values() {
        let k = bin_of(x);
        match current {
            Some((ck, c)) if ck == k => current = Some((ck, c + 1)),
            Some((ck, c)) => {
                flush(ck, c, &mut bins);
                current = Some((k, 1));
            }
            None => current = Some((k, 1)),
        }
    }
    if let Some((ck, c)) = current {
        flush(ck, c, &mut bins);
    }
    Ok(bins)
}
