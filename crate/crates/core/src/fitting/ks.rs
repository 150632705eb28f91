use libm::fabs;

use crate::empirical::SortedSample;
use crate::Cdf;

/// Sup-norm distance between the right-continuous empirical CDF of `sample`
/// and `cdf`, checked on both sides of every step.
pub fn ks_statistic<C: Cdf + ?Sized>(sample: &SortedSample, cdf: &C) -> f64 {
    let v = sample.values();
    let m = v.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < v.len() {
        let x = v[i];
        let below = i as f64 / m;
        while i < v.len() && v[i] == x {
            i += 1;
        }
        let at = i as f64 / m;
        let f = cdf.cdf(x).clamp(0.0, 1.0);
        d = d.max(fabs(f - below)).max(fabs(f - at));
    }
    d.min(1.0)
}
