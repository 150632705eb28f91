//! Maximum-likelihood fits of the mGB and GB2 families, log-log tail fits
//! and the Kolmogorov-Smirnov distance.

mod ks;
mod mle;
pub mod simplex;
mod tail;

pub use ks::ks_statistic;
pub use mle::{
    fit_mle, FitConfig, FitResult, FitWarning, FittedParams, LogUniformPrior, StartSummary,
};
pub use tail::{default_tail_start_rank, tail_linear_fit, PowerLawTail, TailFit, TailPolicy};

/// Which family a maximum-likelihood fit targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Family {
    #[cfg_attr(feature = "serde", serde(rename = "mGB"))]
    Mgb,
    #[cfg_attr(feature = "serde", serde(rename = "GB2"))]
    Gb2,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Mgb => "mGB",
            Family::Gb2 => "GB2",
        }
    }

    /// Number of free parameters.
    pub fn dimension(self) -> usize {
        match self {
            Family::Mgb => 5,
            Family::Gb2 => 4,
        }
    }
}

impl core::fmt::Display for Family {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}
