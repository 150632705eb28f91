//! Generalized-beta tail analysis kernel.
//!
//! Densities, distribution functions and samplers for the GB, mGB, GB2 and
//! mGB2 families; empirical CCDFs with binomial-inversion confidence bands;
//! maximum-likelihood and log-log tail fitting; and the order-statistic
//! U-test used to flag Dragon-King (DK) and negative Dragon-King (nDK)
//! observations at the end of a tail.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, ingestion and
//! the command-line front end live in the `gbtail` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod distributions;
pub mod dragonking;
pub mod empirical;
pub mod error;
pub mod fitting;
pub mod specfun;

#[cfg(test)]
pub(crate) mod testutil;

pub use distributions::{Gb2Params, GbParams};
pub use dragonking::{Classification, Thresholds, UTestReport};
pub use empirical::{CcdfCurve, CiBand, SortedSample};
pub use error::{Error, Result};
pub use fitting::{Family, FitConfig, FitResult, TailFit, TailPolicy};

/// A cumulative distribution function that can be evaluated pointwise.
///
/// `ccdf` defaults to `1 - cdf`; implementations override it when the upper
/// tail can be computed without cancellation.
pub trait Cdf {
    fn cdf(&self, x: f64) -> f64;

    fn ccdf(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }
}

impl<F: Fn(f64) -> f64> Cdf for F {
    fn cdf(&self, x: f64) -> f64 {
        self(x)
    }
}
