use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, expm1, fabs, log, log1p};

use super::ks::ks_statistic;
use super::simplex::{minimize, SimplexOptions};
use super::Family;
use crate::distributions::{softplus, Gb2Params, GbParams, Mgb};
use crate::empirical::SortedSample;
use crate::error::{Error, Result};
use crate::specfun::log_beta_unchecked;
use crate::Cdf;

/// Fits below this size still run but carry a [`FitWarning::SmallSample`].
pub const MIN_RECOMMENDED_SAMPLE: usize = 50;

/// Any log-parameter drifting past this magnitude marks the fit as unconverged.
const LN_PARAM_LIMIT: f64 = 25.0;

/// Box prior that is uniform in every log-parameter.
///
/// Because the search already runs on log-parameters, the posterior mode
/// under this prior is the likelihood maximum restricted to the box.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct LogUniformPrior {
    pub lower: f64,
    pub upper: f64,
}

/// Optimizer settings for [`fit_mle`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FitConfig {
    /// Simplex iterations allowed per run.
    pub max_iterations: usize,
    /// Convergence threshold on the mean log-likelihood per observation.
    pub tolerance: f64,
    /// Extra simplex restarts from the incumbent during the final polish.
    pub restarts: usize,
    pub alpha_starts: Vec<f64>,
    /// β₂ starting values as multiples of the sample median.
    pub beta2_start_factors: Vec<f64>,
    /// Starts are screened on this many evenly spaced order statistics
    /// before the winner is polished on the full sample. `None` screens on
    /// the full sample.
    pub screening_size: Option<usize>,
    pub prior: Option<LogUniformPrior>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iterations: 5_000,
            tolerance: 1e-9,
            restarts: 3,
            alpha_starts: vec![0.5, 1.0, 2.0, 4.0],
            beta2_start_factors: vec![0.25, 1.0],
            screening_size: Some(5_000),
            prior: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1"));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be finite and positive"));
        }
        if self.alpha_starts.is_empty() || self.beta2_start_factors.is_empty() {
            return Err(Error::Config("at least one starting point is required"));
        }
        if self
            .alpha_starts
            .iter()
            .chain(&self.beta2_start_factors)
            .any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(Error::Config("starting values must be finite and positive"));
        }
        if self.screening_size.is_some_and(|k| k < 2) {
            return Err(Error::Config("screening_size must be at least 2"));
        }
        if let Some(p) = self.prior {
            if !(p.lower > 0.0 && p.upper > p.lower && p.upper.is_finite()) {
                return Err(Error::Config(
                    "prior bounds must satisfy 0 < lower < upper < inf",
                ));
            }
        }
        Ok(())
    }
}

/// Estimated parameters of either family.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FittedParams {
    #[cfg_attr(feature = "serde", serde(rename = "mGB"))]
    Mgb(GbParams),
    #[cfg_attr(feature = "serde", serde(rename = "GB2"))]
    Gb2(Gb2Params),
}

impl FittedParams {
    pub fn family(&self) -> Family {
        match self {
            FittedParams::Mgb(_) => Family::Mgb,
            FittedParams::Gb2(_) => Family::Gb2,
        }
    }

    /// Asymptotic log-log CCDF slope `-αq`; only GB2 has one.
    pub fn ccdf_tail_slope(&self) -> Option<f64> {
        match self {
            FittedParams::Gb2(g) => Some(g.ccdf_tail_slope()),
            FittedParams::Mgb(_) => None,
        }
    }

    pub fn upper_bound(&self) -> Option<f64> {
        match self {
            FittedParams::Mgb(g) => Some(g.beta1()),
            FittedParams::Gb2(_) => None,
        }
    }
}

impl Cdf for FittedParams {
    fn cdf(&self, x: f64) -> f64 {
        match self {
            FittedParams::Mgb(g) => Mgb(*g).cdf(x),
            FittedParams::Gb2(g) => g.cdf(x),
        }
    }

    fn ccdf(&self, x: f64) -> f64 {
        match self {
            FittedParams::Mgb(g) => Mgb(*g).ccdf(x),
            FittedParams::Gb2(g) => g.ccdf(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FitWarning {
    SmallSample {
        size: usize,
    },
    /// All observations are equal; no density maximizes the likelihood.
    DegenerateSample,
    /// A parameter ran off towards zero or infinity.
    ParameterAtBound,
    IterationLimit,
}

/// Where one multi-start began and how well it scored on the full sample.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct StartSummary {
    pub alpha: f64,
    pub beta2: f64,
    /// `None` when the start scores zero likelihood or lies outside the prior box.
    pub initial_log_likelihood: Option<f64>,
    /// Mean log-likelihood reached from this start during screening.
    pub screened_mean_log_likelihood: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct FitResult {
    pub family: Family,
    pub params: FittedParams,
    /// Total log-likelihood of the full sample at `params`.
    pub log_likelihood: f64,
    pub ks_stat: f64,
    pub converged: bool,
    /// Simplex iterations over all starts and restarts.
    pub iterations: usize,
    pub evaluations: usize,
    pub starts: Vec<StartSummary>,
    pub warnings: Vec<FitWarning>,
}

/// Negative mean log-likelihood on log-parameters `[ln α, ln β₂, ln p, ln q, θ]`,
/// with `β₁ = max · (1 + 1/m + softplus(θ))` for mGB.
struct Objective<'a> {
    family: Family,
    ln_x: &'a [f64],
    mean_ln_x: f64,
    max: f64,
    beta1_offset: f64,
    prior: Option<LogUniformPrior>,
}

impl<'a> Objective<'a> {
    fn new(
        family: Family,
        ln_x: &'a [f64],
        max: f64,
        m_full: usize,
        prior: Option<LogUniformPrior>,
    ) -> Self {
        let mean_ln_x = ln_x.iter().sum::<f64>() / ln_x.len() as f64;
        Self {
            family,
            ln_x,
            mean_ln_x,
            max,
            beta1_offset: 1.0 / m_full as f64,
            prior,
        }
    }

    fn beta1(&self, theta: f64) -> f64 {
        self.max * (1.0 + self.beta1_offset + softplus(theta))
    }

    fn params(&self, t: &[f64]) -> Option<FittedParams> {
        let (a, b2, p, q) = (exp(t[0]), exp(t[1]), exp(t[2]), exp(t[3]));
        let fp = match self.family {
            Family::Gb2 => FittedParams::Gb2(Gb2Params::new(a, b2, p, q).ok()?),
            Family::Mgb => FittedParams::Mgb(GbParams::new(a, self.beta1(t[4]), b2, p, q).ok()?),
        };
        Some(fp)
    }

    fn outside_prior(&self, t: &[f64]) -> bool {
        let Some(prior) = self.prior else {
            return false;
        };
        let (lo, hi) = (log(prior.lower), log(prior.upper));
        let outside = |v: f64| v < lo || v > hi;
        t[..4].iter().any(|&v| outside(v))
            || (self.family == Family::Mgb && outside(log(self.beta1(t[4]))))
    }

    fn eval(&self, t: &[f64]) -> f64 {
        if t.iter()
            .any(|v| !v.is_finite() || fabs(*v) > 2.0 * LN_PARAM_LIMIT)
            || self.outside_prior(t)
        {
            return f64::INFINITY;
        }
        let (ln_a, ln_b2, ln_p, ln_q) = (t[0], t[1], t[2], t[3]);
        let (a, p, q) = (exp(ln_a), exp(ln_p), exp(ln_q));
        let k = a * p - 1.0;
        let lb = log_beta_unchecked(p, q);
        let ll = match self.family {
            Family::Gb2 => {
                let sp: f64 = self.ln_x.iter().map(|&l| softplus(a * (l - ln_b2))).sum();
                ln_a - ln_b2 - lb + k * (self.mean_ln_x - ln_b2)
                    - (p + q) * sp / self.ln_x.len() as f64
            }
            Family::Mgb => {
                let ln_b1 = log(self.beta1(t[4]));
                let r = exp(a * (ln_b2 - ln_b1));
                let (mut sp, mut upper) = (0.0, 0.0);
                for &l in self.ln_x {
                    sp += softplus(a * (l - ln_b2));
                    upper += log(-expm1(a * (l - ln_b1)));
                }
                let n = self.ln_x.len() as f64;
                ln_a + log(p + q) + (p + 1.0) * log1p(r) - ln_b2 - lb - log(q + r * (p + q))
                    + k * (self.mean_ln_x - ln_b2)
                    - (p + q + 1.0) * sp / n
                    + (q - 1.0) * upper / n
            }
        };
        if ll.is_nan() {
            f64::INFINITY
        } else {
            -ll
        }
    }
}

fn starting_points(family: Family, sample: &SortedSample, config: &FitConfig) -> Vec<Vec<f64>> {
    let med = sample.median();
    let mut out = Vec::new();
    for &a in &config.alpha_starts {
        for &f in &config.beta2_start_factors {
            let t = vec![log(a), log(f * med), 0.0, 0.0];
            if family == Family::Gb2 {
                out.push(t);
                continue;
            }
            // β₁ ≈ 1.1·max for a visible bound, β₁ ≈ 10·max for the GB2(q+1)-like limit.
            // A single start far above the maximum stalls where the likelihood is flat in θ.
            for gap in [0.1, 9.0] {
                let mut t = t.clone();
                t.push(log(expm1(gap)));
                out.push(t);
            }
        }
    }
    out
}

fn screening_subset(ln_x: &[f64], k: usize) -> Vec<f64> {
    let m = ln_x.len();
    (0..k)
        .map(|i| ln_x[((i as u128 * (m - 1) as u128) / (k - 1) as u128) as usize])
        .collect()
}

/// Maximum-likelihood fit of `family` to `sample`.
///
/// Each multi-start runs a simplex search on log-parameters; the best
/// screened point (or any raw start that scores better on the full data) is
/// then polished on the full sample with restarts until the mean
/// log-likelihood stops improving by more than `config.tolerance`. The
/// returned likelihood is therefore never below that of any starting point.
pub fn fit_mle(sample: &SortedSample, family: Family, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let m = sample.len();
    let mut warnings = Vec::new();
    if m < MIN_RECOMMENDED_SAMPLE {
        warnings.push(FitWarning::SmallSample { size: m });
    }
    let ln_x: Vec<f64> = sample.values().iter().map(|&x| log(x)).collect();
    let full = Objective::new(family, &ln_x, sample.max(), m, config.prior);
    let starts = starting_points(family, sample, config);
    let start_f: Vec<f64> = starts.iter().map(|t| full.eval(t)).collect();
    if start_f.iter().all(|f| !f.is_finite()) {
        return Err(Error::Config("no starting point lies inside the prior box"));
    }

    if sample.min() == sample.max() {
        warnings.push(FitWarning::DegenerateSample);
        let (i, f) = argmin(&start_f);
        let screened: Vec<f64> = start_f.iter().map(|f| -f).collect();
        let summary = starts_summary(&starts, &start_f, &screened, m);
        return finish(
            &full,
            sample,
            &starts[i],
            f,
            false,
            0,
            starts.len(),
            summary,
            warnings,
        );
    }

    let opts = SimplexOptions {
        max_iterations: config.max_iterations,
        f_tol: config.tolerance,
        ..Default::default()
    };
    let subset;
    let screen = match config.screening_size {
        Some(k) if k < m => {
            subset = screening_subset(&ln_x, k);
            Objective::new(family, &subset, sample.max(), m, config.prior)
        }
        _ => Objective::new(family, &ln_x, sample.max(), m, config.prior),
    };

    let mut iterations = 0;
    let mut evaluations = starts.len();
    let mut candidates: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut screened = Vec::with_capacity(starts.len());
    for t in &starts {
        let r = minimize(|v| screen.eval(v), t, &opts);
        iterations += r.iterations;
        evaluations += r.evaluations;
        screened.push(-r.f);
        let f = full.eval(&r.x);
        evaluations += 1;
        candidates.push((r.x, f));
    }
    candidates.extend(starts.iter().cloned().zip(start_f.iter().copied()));
    let (mut x, mut f) = candidates
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();

    let mut converged = false;
    for _ in 0..=config.restarts {
        let r = minimize(|v| full.eval(v), &x, &opts);
        iterations += r.iterations;
        evaluations += r.evaluations;
        let gain = f - r.f;
        let done = r.converged && gain <= config.tolerance;
        if r.f <= f {
            x = r.x;
            f = r.f;
        }
        converged = done;
        if done {
            break;
        }
        if !r.converged {
            warnings.push(FitWarning::IterationLimit);
        }
    }
    if x[..4].iter().any(|v| fabs(*v) > LN_PARAM_LIMIT) {
        warnings.push(FitWarning::ParameterAtBound);
        converged = false;
    }
    let summary = starts_summary(&starts, &start_f, &screened, m);
    finish(
        &full,
        sample,
        &x,
        f,
        converged,
        iterations,
        evaluations,
        summary,
        warnings,
    )
}

fn argmin(v: &[f64]) -> (usize, f64) {
    v.iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}

fn starts_summary(
    starts: &[Vec<f64>],
    start_f: &[f64],
    screened: &[f64],
    m: usize,
) -> Vec<StartSummary> {
    starts
        .iter()
        .zip(start_f)
        .zip(screened)
        .map(|((t, &f), &s)| StartSummary {
            alpha: exp(t[0]),
            beta2: exp(t[1]),
            initial_log_likelihood: Some(-f * m as f64).filter(|v| v.is_finite()),
            screened_mean_log_likelihood: Some(s).filter(|v| v.is_finite()),
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn finish(
    obj: &Objective<'_>,
    sample: &SortedSample,
    x: &[f64],
    f: f64,
    converged: bool,
    iterations: usize,
    evaluations: usize,
    starts: Vec<StartSummary>,
    warnings: Vec<FitWarning>,
) -> Result<FitResult> {
    let params = obj
        .params(x)
        .ok_or(Error::Config("optimizer left the parameter space"))?;
    let m = sample.len() as f64;
    Ok(FitResult {
        family: obj.family,
        params,
        log_likelihood: -f * m,
        ks_stat: ks_statistic(sample, &params),
        converged: converged && f.is_finite(),
        iterations,
        evaluations,
        starts,
        warnings,
    })
}
