//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Seeds are fixed so every run is reproducible. Criterion 9 needs the FHFA
//! annual ZIP5 HPI file as CSV; point `GBTAIL_FHFA_ZIP5` at it, otherwise the
//! criterion is reported as SKIPPED.

mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gbtail::core::distributions::{
    gb2_ccdf, gb2_pdf, mgb_ccdf, mgb_cdf, mgb_pdf, sample_gb2, sample_mgb,
};
use gbtail::core::dragonking::{default_tail_end_window, u_test_pvalues};
use gbtail::core::empirical::{build_ccdf, ci_band, CcdfConvention};
use gbtail::core::fitting::{fit_mle, tail_linear_fit};
use gbtail::core::{CcdfCurve, Family, FitConfig, Gb2Params, GbParams, SortedSample, TailPolicy};
use gbtail::ingest::{parse_year_set, read_hpi, select_hpi, HpiSchema};

enum Outcome {
    Pass(String),
    Fail(String),
    Skipped(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn within_budget(outcome: Outcome, elapsed: Duration, budget: Duration) -> Outcome {
    let secs = format!("{:.2} s of {} s", elapsed.as_secs_f64(), budget.as_secs());
    match outcome {
        Outcome::Pass(d) if elapsed <= budget => Outcome::Pass(format!("{d}; {secs}")),
        Outcome::Pass(d) => Outcome::Fail(format!("{d}; over budget, {secs}")),
        Outcome::Fail(d) => Outcome::Fail(format!("{d}; {secs}")),
        s => s,
    }
}

fn mgb_sets() -> [(&'static str, GbParams); 3] {
    [
        (
            "houses",
            GbParams::new(2.3717, 4209.7557, 187.7393, 0.8597, 0.3891).unwrap(),
        ),
        (
            "HPI 2019",
            GbParams::new(2.2532, 914.3328, 54.0456, 71.5687, 1.7586).unwrap(),
        ),
        (
            "HPI 2000-2022",
            GbParams::new(3.3038, 1342.3155, 163.8916, 3.6162, 1.0004).unwrap(),
        ),
    ]
}

fn gb2_sets() -> [(&'static str, Gb2Params); 3] {
    [
        (
            "houses",
            Gb2Params::new(2.8732, 178.0461, 0.6692, 1.0289).unwrap(),
        ),
        (
            "HPI 2019",
            Gb2Params::new(1.6063, 58.029, 52.5168, 5.6728).unwrap(),
        ),
        (
            "HPI 2000-2022",
            Gb2Params::new(2.1786, 42.1151, 75.7226, 2.8667).unwrap(),
        ),
    ]
}

fn criterion_1() -> Outcome {
    let g = gb2_sets()[2].1;
    let x = 1e4 * g.beta2();
    let h = 1e-4;
    let up = gb2_ccdf(x * (1.0 + h), &g).unwrap().ln();
    let down = gb2_ccdf(x * (1.0 - h), &g).unwrap().ln();
    let slope = (up - down) / ((1.0 + h).ln() - (1.0 - h).ln());
    let rel = (slope / -6.2454 - 1.0).abs();
    verdict(
        rel <= 5e-3,
        format!("slope {slope:.5} vs -6.2454, rel err {rel:.2e}"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0_f64;
    for (_, g) in mgb_sets() {
        for i in 1..=1000 {
            let x = g.beta1() * i as f64 / 1000.0;
            let sum = mgb_cdf(x, &g).unwrap() + mgb_ccdf(x, &g).unwrap();
            worst = worst.max((sum - 1.0).abs());
        }
    }
    verdict(
        worst <= 1e-12,
        format!("max |cdf + ccdf - 1| = {worst:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0_f64;
    let mut parts = Vec::new();
    for (name, g) in mgb_sets() {
        let f = |x: f64| mgb_pdf(x, &g).unwrap();
        let total = common::integrate_bounded(&f, g.beta1(), 1e-10);
        worst = worst.max((total - 1.0).abs());
        parts.push(format!("mGB {name} {total:.9}"));
    }
    for (name, g) in gb2_sets() {
        let f = |x: f64| gb2_pdf(x, &g).unwrap();
        let total = common::integrate_half_line(&f, g.beta2(), 1e-10);
        worst = worst.max((total - 1.0).abs());
        parts.push(format!("GB2 {name} {total:.9}"));
    }
    verdict(
        worst <= 1e-6,
        format!("max |integral - 1| = {worst:.2e} ({})", parts.join(", ")),
    )
}

fn criterion_4() -> Outcome {
    let mut worst = 0.0_f64;
    for (_, g) in mgb_sets() {
        let wide = GbParams::new(g.alpha(), 1e8 * g.beta2(), g.beta2(), g.p(), g.q()).unwrap();
        let shifted = Gb2Params::new(g.alpha(), g.beta2(), g.p(), g.q() + 1.0).unwrap();
        for i in 0..=400 {
            let x = g.beta2() * 10f64.powf(-1.0 + 4.0 * i as f64 / 400.0);
            let a = mgb_ccdf(x, &wide).unwrap();
            let b = gb2_ccdf(x, &shifted).unwrap();
            worst = worst.max((a / b - 1.0).abs());
        }
    }
    verdict(
        worst <= 1e-4,
        format!("max relative gap {worst:.2e} over three parameter sets"),
    )
}

fn ks_uniform(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, &u)| (u - i as f64 / n).max((i + 1) as f64 / n - u))
        .fold(0.0, f64::max)
}

fn criterion_5() -> Outcome {
    const REPLICATES: usize = 10_000;
    const M: usize = 200;
    let g = gb2_sets()[2].1;
    let ranks = [M, M - 1, M / 2];
    let mut pvals: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(REPLICATES)).collect();
    for rep in 0..REPLICATES {
        let sample = sample_gb2(&g, M, 50_000 + rep as u64);
        let p = u_test_pvalues(&sample, &g).unwrap();
        for (j, &k) in ranks.iter().enumerate() {
            pvals[j].push(p[k - 1]);
        }
    }
    // Asymptotic Kolmogorov critical value at the 1% level.
    let critical = 1.6276 / (REPLICATES as f64).sqrt();
    let mut ok = true;
    let mut parts = Vec::new();
    for (j, &k) in ranks.iter().enumerate() {
        let below = pvals[j].iter().filter(|&&p| p < 0.05).count() as f64 / REPLICATES as f64;
        let d = ks_uniform(&mut pvals[j]);
        ok &= d <= critical && (below - 0.05).abs() <= 0.01;
        parts.push(format!("rank {k}: D {d:.4}, P(p<0.05) {below:.4}"));
    }
    verdict(
        ok,
        format!("{} (D critical {critical:.4})", parts.join("; ")),
    )
}

fn criterion_6() -> Outcome {
    const REPLICATES: usize = 50;
    const N: usize = 100_000;
    let g = mgb_sets()[2].1;
    let window = default_tail_end_window(N);
    let config = FitConfig::default();
    let published = gb2_sets()[2].1;
    let mut with_ndk = 0;
    let mut top_ndk = 0;
    let mut published_ndk = 0;
    for rep in 0..REPLICATES {
        let sample = sample_mgb(&g, N, 60_000 + rep as u64);
        let fit = fit_mle(&sample, Family::Gb2, &config).unwrap();
        let p = u_test_pvalues(&sample, &fit.params).unwrap();
        if p[N - window..].iter().any(|&v| v > 0.95) {
            with_ndk += 1;
        }
        if p[N - 1] > 0.95 {
            top_ndk += 1;
        }
        // Diagnostic only: the same samples against the published GB2 fit.
        let q = u_test_pvalues(&sample, &published).unwrap();
        if q[N - window..].iter().any(|&v| v > 0.95) {
            published_ndk += 1;
        }
    }
    let frac = with_ndk as f64 / REPLICATES as f64;
    verdict(
        frac >= 0.9,
        format!(
            "{with_ndk}/{REPLICATES} replicates with p > 0.95 in the top {window} ranks \
             ({top_ndk}/{REPLICATES} at the maximum; {published_ndk}/{REPLICATES} against the published GB2)"
        ),
    )
}

fn criterion_7() -> Outcome {
    const N: usize = 200_000;
    let config = FitConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, g) in &gb2_sets()[1..] {
        let sample = sample_gb2(g, N, 1);
        let fit = fit_mle(&sample, Family::Gb2, &config).unwrap();
        let est = -fit.params.ccdf_tail_slope().unwrap();
        let truth = g.alpha() * g.q();
        let rel = (est / truth - 1.0).abs();
        ok &= rel <= 0.05 && fit.converged;
        parts.push(format!(
            "GB2 {name}: aq {est:.4} vs {truth:.4} ({:.2}%)",
            100.0 * rel
        ));
    }
    let g = mgb_sets()[2].1;
    let sample = sample_mgb(&g, N, 1);
    let fit = fit_mle(&sample, Family::Mgb, &config).unwrap();
    let est = fit.params.upper_bound().unwrap();
    let rel = (est / g.beta1() - 1.0).abs();
    ok &= rel <= 0.05 && fit.converged;
    parts.push(format!(
        "mGB beta1 {est:.2} vs {:.4} ({:.2}%, sample max {:.2})",
        g.beta1(),
        100.0 * rel,
        sample.max()
    ));
    verdict(ok, parts.join("; "))
}

fn criterion_8() -> Outcome {
    const REPLICATES: usize = 1_000;
    const M: usize = 2_000;
    let g = gb2_sets()[2].1;
    // Probe at the true 90% quantile, found by bisection on the model CCDF.
    let (mut lo, mut hi) = (g.beta2() * 1e-3, g.beta2() * 1e3);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if gb2_ccdf(mid, &g).unwrap() > 0.1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let probe = (lo * hi).sqrt();
    let truth = gb2_ccdf(probe, &g).unwrap();
    let mut covered = 0;
    for rep in 0..REPLICATES {
        let sample = sample_gb2(&g, M, 70_000 + rep as u64);
        let above = sample.values().iter().filter(|&&x| x >= probe).count();
        let curve = CcdfCurve::from_points(
            vec![(probe, above as f64 / M as f64)],
            CcdfConvention::EmpiricalRank,
        )
        .unwrap();
        let band = ci_band(&curve, M as u64, 0.95).unwrap();
        if band.lower[0] <= truth && truth <= band.upper[0] {
            covered += 1;
        }
    }
    let coverage = covered as f64 / REPLICATES as f64;
    verdict(
        (coverage - 0.95).abs() <= 0.02,
        format!("coverage {coverage:.3} at x = {probe:.3} (true CCDF {truth:.4}, m = {M})"),
    )
}

fn criterion_9() -> Outcome {
    let Some(path) = std::env::var_os("GBTAIL_FHFA_ZIP5").map(PathBuf::from) else {
        return Outcome::Skipped("set GBTAIL_FHFA_ZIP5 to the FHFA annual ZIP5 HPI csv".into());
    };
    let (records, _) = match read_hpi(&path, &HpiSchema::default()) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(format!("cannot read {}: {e}", path.display())),
    };
    let select = |years_text: &str| -> SortedSample {
        let years: BTreeSet<i32> = parse_year_set(years_text).unwrap();
        select_hpi(&records, &years).unwrap()
    };
    let cross = select("2019");
    let pool = select("2000-2022");
    let fit = fit_mle(&cross, Family::Gb2, &FitConfig::default()).unwrap();
    let aq = -fit.params.ccdf_tail_slope().unwrap();
    let rel = (aq / 9.112 - 1.0).abs();
    verdict(
        cross.len() == 9033 && pool.len() == 201_040 && rel <= 0.15,
        format!(
            "2019: {} records, 2000-2022: {} records, 2019 GB2 aq {aq:.4} ({:.1}% from 9.112)",
            cross.len(),
            pool.len(),
            100.0 * rel
        ),
    )
}

fn criterion_10() -> Outcome {
    const M: usize = 1_000;
    let exponent = 3.0;
    // Rank k from the bottom has CCDF (M - k + 1) / M, placed exactly on s = x^-3.
    let xs: Vec<f64> = (1..=M)
        .map(|k| (M as f64 / (M - k + 1) as f64).powf(1.0 / exponent))
        .collect();
    let sample = SortedSample::new(xs.clone(), "power law").unwrap();
    let curve = build_ccdf(&sample);
    let line = tail_linear_fit(&curve, 1, TailPolicy::ManualExclude(0)).unwrap();
    let slope_err = (line.slope + exponent).abs() / exponent;

    let max = xs[M - 1];
    let expected: Vec<usize> = (1..=M).filter(|&k| xs[k - 1] > 0.9 * max).collect();
    let frac = tail_linear_fit(&curve, 1, TailPolicy::FractionOfMax(0.9)).unwrap();
    let frac_err = (frac.slope + exponent).abs() / exponent;
    verdict(
        slope_err <= 1e-12 && frac_err <= 1e-12 && frac.excluded == expected,
        format!(
            "slope {:.15} (rel err {slope_err:.1e}); 90%-of-max excluded {} points, expected {}",
            line.slope,
            frac.excluded.len(),
            expected.len()
        ),
    )
}

/// Name, check and runtime budget in seconds.
type Criterion = (&'static str, fn() -> Outcome, u64);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("slope identity", criterion_1, 1),
        ("cdf/ccdf consistency", criterion_2, 1),
        ("normalization", criterion_3, 10),
        ("mGB to GB2 q-shift limit", criterion_4, 1),
        ("U-test null calibration", criterion_5, 120),
        ("nDK reproduction", criterion_6, 600),
        ("parameter recovery", criterion_7, 300),
        ("CI coverage", criterion_8, 60),
        ("FHFA HPI counts and fit", criterion_9, 600),
        ("tail-fit exactness", criterion_10, 1),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let outcome = within_budget(outcome, start.elapsed(), Duration::from_secs(*budget));
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skipped(d) => ("SKIPPED", d),
        };
        println!("criterion {:>2} {tag:<7} {name}: {detail}", i + 1);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
