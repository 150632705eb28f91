use alloc::vec::Vec;

use libm::{log, pow, sqrt};

use crate::empirical::CcdfCurve;
use crate::error::{Error, Result};
use crate::Cdf;

const MIN_TAIL_POINTS: usize = 5;

/// Which points at the top of the tail are left out of a line fit.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TailPolicy {
    /// Drop the `n` largest points.
    ManualExclude(usize),
    /// Drop every point with `x > fraction * max(x)`.
    FractionOfMax(f64),
}

/// Ordinary least-squares line through `(ln x, ln s)` over a tail segment.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    pub policy: TailPolicy,
    /// 1-based ascending rank of the first curve point in the tail.
    pub tail_start_rank: usize,
    /// Ranks removed by the policy, ascending.
    pub excluded: Vec<usize>,
    pub slope_stderr: f64,
    /// Points that entered the regression.
    pub n_points: usize,
    /// Abscissa of the tail-start point.
    pub tail_start_x: f64,
}

impl TailFit {
    /// The fitted line read as a CCDF, `s = exp(intercept) * x^slope`.
    pub fn line_ccdf(&self, x: f64) -> f64 {
        libm::exp(self.intercept + self.slope * log(x))
    }

    /// The line as a distribution of the tail conditional on `x >= tail_start_x`.
    pub fn conditional_tail(&self) -> Result<PowerLawTail> {
        PowerLawTail::new(self.tail_start_x, self.slope)
    }
}

/// Pareto tail `P(X > x | X >= x_min) = (x / x_min)^slope` with `slope < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawTail {
    x_min: f64,
    slope: f64,
}

impl PowerLawTail {
    pub fn new(x_min: f64, slope: f64) -> Result<Self> {
        if !(x_min.is_finite() && x_min > 0.0) {
            return Err(Error::InvalidParameter {
                name: "x_min",
                value: x_min,
            });
        }
        if !(slope.is_finite() && slope < 0.0) {
            return Err(Error::Domain {
                what: "power-law tail needs a negative slope",
                value: slope,
            });
        }
        Ok(Self { x_min, slope })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }
}

impl Cdf for PowerLawTail {
    fn cdf(&self, x: f64) -> f64 {
        1.0 - self.ccdf(x)
    }

    fn ccdf(&self, x: f64) -> f64 {
        if x <= self.x_min {
            1.0
        } else {
            pow(x / self.x_min, self.slope)
        }
    }
}

/// First rank whose CCDF value is at most 0.1, i.e. the top decile of the sample.
pub fn default_tail_start_rank(curve: &CcdfCurve) -> usize {
    curve
        .points()
        .iter()
        .position(|&(_, s)| s <= 0.1)
        .map_or(curve.len(), |i| i + 1)
        .max(1)
}

/// Fits a straight line to the log-log CCDF from `tail_start_rank` to the
/// top, after removing the points selected by `policy`.
pub fn tail_linear_fit(
    curve: &CcdfCurve,
    tail_start_rank: usize,
    policy: TailPolicy,
) -> Result<TailFit> {
    let pts = curve.points();
    let len = pts.len();
    if len == 0 {
        return Err(Error::Empty("curve"));
    }
    if tail_start_rank == 0 || tail_start_rank > len {
        return Err(Error::Domain {
            what: "tail start rank outside the curve",
            value: tail_start_rank as f64,
        });
    }
    let excluded: Vec<usize> = match policy {
        TailPolicy::ManualExclude(n) => (tail_start_rank.max((len + 1).saturating_sub(n))..=len)
            .filter(|_| n > 0)
            .collect(),
        TailPolicy::FractionOfMax(f) => {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::Domain {
                    what: "fraction of maximum must be positive",
                    value: f,
                });
            }
            let cut = f * curve.max_x();
            (tail_start_rank..=len)
                .filter(|&k| pts[k - 1].0 > cut)
                .collect()
        }
    };
    let kept = len + 1 - tail_start_rank - excluded.len();
    if kept < MIN_TAIL_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_TAIL_POINTS,
            got: kept,
        });
    }

    let mut xs = Vec::with_capacity(kept);
    let mut ys = Vec::with_capacity(kept);
    let mut skip = excluded.iter().peekable();
    for k in tail_start_rank..=len {
        if skip.peek() == Some(&&k) {
            skip.next();
            continue;
        }
        let (x, s) = pts[k - 1];
        if s <= 0.0 {
            return Err(Error::Domain {
                what: "zero CCDF value inside the tail",
                value: x,
            });
        }
        xs.push(log(x));
        ys.push(log(s));
    }

    let n = kept as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 {
        return Err(Error::Domain {
            what: "tail points share one abscissa",
            value: pts[len - 1].0,
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    Ok(TailFit {
        slope,
        intercept,
        policy,
        tail_start_rank,
        excluded,
        slope_stderr: sqrt(ssr / (n - 2.0) / sxx),
        n_points: kept,
        tail_start_x: pts[tail_start_rank - 1].0,
    })
}
