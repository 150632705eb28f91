//! Fit, tail-fit and U-test steps on an in-memory sample.

use gbtail_core::dragonking::{classify, default_tail_end_window, tail_subsample, u_test_pvalues};
use gbtail_core::empirical::build_ccdf;
use gbtail_core::fitting::{
    default_tail_start_rank, fit_mle, tail_linear_fit, FitResult, FittedParams,
};
use gbtail_core::{Cdf, Family, FitConfig, SortedSample, TailFit, TailPolicy, Thresholds};

use crate::error::{Error, Result};
use crate::report::{AnalysisReport, NamedTailFit, UTestEntry};

pub const LF_MANUAL: &str = "LF-1";
pub const LF_FRACTION: &str = "LF-2";
pub const DEFAULT_FRACTION_OF_MAX: f64 = 0.9;

/// A CDF to test the sample against.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Fitted(FittedParams),
    /// A tail line, tested as a conditional power law above its start.
    Line {
        name: String,
        fit: TailFit,
    },
}

impl ModelSource {
    pub fn name(&self) -> String {
        match self {
            ModelSource::Fitted(p) => p.family().name().to_string(),
            ModelSource::Line { name, .. } => name.clone(),
        }
    }

    /// Looks up `name` (`mgb`, `gb2`, `lf-1`, `lf-2`, any case) in a report.
    pub fn from_report(report: &AnalysisReport, name: &str) -> Result<Self> {
        let missing = || Error::Usage(format!("model {name:?} is not in the supplied report"));
        match name.to_ascii_lowercase().as_str() {
            "mgb" => Ok(ModelSource::Fitted(
                report.params(Family::Mgb).ok_or_else(missing)?,
            )),
            "gb2" => Ok(ModelSource::Fitted(
                report.params(Family::Gb2).ok_or_else(missing)?,
            )),
            _ => {
                let t = report.tail_fit(name).ok_or_else(missing)?;
                Ok(ModelSource::Line {
                    name: t.name.clone(),
                    fit: t.fit.clone(),
                })
            }
        }
    }

    /// CCDF as drawn in tail plots; a line is shown unconditionally, as fitted.
    pub fn plot_ccdf(&self, x: f64) -> f64 {
        match self {
            ModelSource::Fitted(p) => p.ccdf(x),
            ModelSource::Line { fit, .. } => fit.line_ccdf(x),
        }
    }
}

impl Cdf for ModelSource {
    fn cdf(&self, x: f64) -> f64 {
        1.0 - self.plot_ccdf(x)
    }

    fn ccdf(&self, x: f64) -> f64 {
        self.plot_ccdf(x)
    }
}

pub fn run_fits(
    sample: &SortedSample,
    families: &[Family],
    config: &FitConfig,
) -> Result<Vec<FitResult>> {
    families
        .iter()
        .map(|&f| {
            let r = fit_mle(sample, f, config)?;
            log::info!(
                "{f}: log-likelihood {:.6}, KS {:.5}, {} iterations, converged {}",
                r.log_likelihood,
                r.ks_stat,
                r.iterations,
                r.converged
            );
            for w in &r.warnings {
                log::warn!("{f}: {w:?}");
            }
            Ok(r)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TailOptions {
    /// Curve rank where the tail starts; top decile when `None`.
    pub start_rank: Option<usize>,
    /// LF-1: drop this many top points.
    pub manual_exclude: Option<usize>,
    /// LF-2: drop points above this fraction of the maximum.
    pub fraction_of_max: Option<f64>,
}

pub fn run_tail(
    sample: &SortedSample,
    opts: &TailOptions,
    gb2_slope: Option<f64>,
) -> Result<Vec<NamedTailFit>> {
    let curve = build_ccdf(sample);
    let start = opts
        .start_rank
        .unwrap_or_else(|| default_tail_start_rank(&curve));
    let mut policies = Vec::new();
    if let Some(n) = opts.manual_exclude {
        policies.push((LF_MANUAL, TailPolicy::ManualExclude(n)));
    }
    if let Some(f) = opts.fraction_of_max {
        policies.push((LF_FRACTION, TailPolicy::FractionOfMax(f)));
    }
    if policies.is_empty() {
        return Err(Error::Usage("no tail policy selected".into()));
    }
    policies
        .into_iter()
        .map(|(name, policy)| {
            let fit = tail_linear_fit(&curve, start, policy)?;
            log::info!(
                "{name}: slope {:.4} ± {:.4} over {} points",
                fit.slope,
                fit.slope_stderr,
                fit.n_points
            );
            Ok(NamedTailFit {
                name: name.to_string(),
                fit,
                gb2_slope,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UTestOptions {
    /// Top ranks treated as tail ends; `max(5, ⌈m/200⌉)` when `None`.
    pub window: Option<usize>,
    pub thresholds: Thresholds,
    /// Curve rank where the tail region starts; top decile when `None`.
    pub tail_start_rank: Option<usize>,
}

pub fn run_utest(
    sample: &SortedSample,
    model: &ModelSource,
    opts: &UTestOptions,
) -> Result<UTestEntry> {
    let m = sample.len();
    let window = opts.window.unwrap_or_else(|| default_tail_end_window(m));
    if window == 0 {
        return Err(Error::Usage(
            "the tail-end window must hold at least one rank".into(),
        ));
    }
    let entry = match model {
        ModelSource::Fitted(params) => {
            let curve = build_ccdf(sample);
            let start = opts
                .tail_start_rank
                .unwrap_or_else(|| default_tail_start_rank(&curve));
            if start == 0 || start > curve.len() {
                return Err(Error::Usage(format!(
                    "tail start rank {start} outside 1..={}",
                    curve.len()
                )));
            }
            let x_t = curve.points()[start - 1].0;
            let first = sample.values().partition_point(|&x| x < x_t) + 1;
            let p = u_test_pvalues(sample, params)?;
            let report = classify(&p, first..=m, window, opts.thresholds)?;
            UTestEntry {
                model: model.name(),
                tested_size: m,
                rank_offset: 0,
                report,
            }
        }
        ModelSource::Line { fit, .. } => {
            let tail = fit.conditional_tail()?;
            let sub = tail_subsample(sample, &tail)?;
            let p = u_test_pvalues(&sub, &tail)?;
            let report = classify(&p, 1..=sub.len(), window.min(sub.len()), opts.thresholds)?;
            UTestEntry {
                model: model.name(),
                tested_size: sub.len(),
                rank_offset: m - sub.len(),
                report,
            }
        }
    };
    log::info!(
        "U-test vs {}: {} DK, {} nDK, {} pDK",
        entry.model,
        entry.report.count(gbtail_core::Classification::Dk),
        entry.report.count(gbtail_core::Classification::Ndk),
        entry.report.count(gbtail_core::Classification::Pdk)
    );
    Ok(entry)
}
