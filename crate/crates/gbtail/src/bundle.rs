//! CSV plot data: log-binned PDF, CCDF, p-values and per-model tail panels.

use std::fs;
use std::path::{Path, PathBuf};

use gbtail_core::distributions::{gb2_pdf, mgb_pdf};
use gbtail_core::empirical::{
    build_ccdf, ci_band, log_binned_pdf, model_curve, BandCenter, CcdfConvention,
};
use gbtail_core::fitting::FittedParams;
use gbtail_core::{CcdfCurve, Cdf, SortedSample};

use crate::analysis::ModelSource;
use crate::error::{Error, Result};
use crate::report::{AnalysisReport, DatasetDescriptor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BundleOptions {
    pub bins_per_decade: u32,
    pub ci_level: f64,
    pub band_center: BandCenter,
}

impl Default for BundleOptions {
    fn default() -> Self {
        Self {
            bins_per_decade: 10,
            ci_level: 0.95,
            band_center: BandCenter::Model,
        }
    }
}

struct Csv {
    path: PathBuf,
    w: csv::Writer<fs::File>,
}

impl Csv {
    fn create(dir: &Path, name: &str, header: &[String]) -> Result<Self> {
        let path = dir.join(name);
        let w = csv::Writer::from_path(&path).map_err(|e| Error::parse(&path, e.to_string()))?;
        let mut c = Self { path, w };
        c.row(header)?;
        Ok(c)
    }

    fn row<S: AsRef<[u8]>>(&mut self, fields: &[S]) -> Result<()> {
        self.w
            .write_record(fields)
            .map_err(|e| Error::parse(&self.path, e.to_string()))
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.w.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.path)
    }
}

fn num(v: f64) -> String {
    v.to_string()
}

fn pdf_of(params: &FittedParams, x: f64) -> f64 {
    match params {
        FittedParams::Mgb(g) => mgb_pdf(x, g).unwrap_or(0.0),
        FittedParams::Gb2(g) => gb2_pdf(x, g).unwrap_or(0.0),
    }
}

/// Writes the bundle for `report` into `dir` and returns the files written.
pub fn write_bundle(
    dir: &Path,
    sample: &SortedSample,
    report: &AnalysisReport,
    opts: &BundleOptions,
) -> Result<Vec<PathBuf>> {
    if !DatasetDescriptor::of(sample).same_data(&report.dataset) {
        return Err(Error::Domain(
            "the sample does not match the report's dataset".into(),
        ));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let fits: Vec<(String, FittedParams)> = report
        .fits
        .iter()
        .map(|f| (f.family.name().to_string(), f.params))
        .collect();

    let mut header: Vec<String> = ["bin_lower", "bin_upper", "bin_center", "count", "density"]
        .map(String::from)
        .to_vec();
    header.extend(fits.iter().map(|(n, _)| format!("{n}_pdf")));
    let mut pdf = Csv::create(dir, "pdf.csv", &header)?;
    for b in log_binned_pdf(sample, opts.bins_per_decade)? {
        let mut row = vec![
            num(b.lower),
            num(b.upper),
            num(b.center),
            b.count.to_string(),
            num(b.density),
        ];
        row.extend(fits.iter().map(|(_, p)| num(pdf_of(p, b.center))));
        pdf.row(&row)?;
    }
    written.push(pdf.finish()?);

    let curve = build_ccdf(sample);
    let mut header: Vec<String> = vec!["x".into(), "empirical_ccdf".into()];
    header.extend(fits.iter().map(|(n, _)| format!("{n}_ccdf")));
    let mut ccdf = Csv::create(dir, "ccdf.csv", &header)?;
    for &(x, s) in curve.points() {
        let mut row = vec![num(x), num(s)];
        row.extend(fits.iter().map(|(_, p)| num(p.ccdf(x))));
        ccdf.row(&row)?;
    }
    written.push(ccdf.finish()?);

    if !report.utests.is_empty() {
        let header = ["model", "rank", "x", "pvalue", "classification"].map(String::from);
        let mut pv = Csv::create(dir, "pvalues.csv", &header)?;
        for u in &report.utests {
            let (a, b) = u.report.tail_region;
            for k in a..=b {
                let rank = u.rank_offset + k;
                let row = [
                    u.model.clone(),
                    rank.to_string(),
                    num(sample.values()[rank - 1]),
                    num(u.report.pvalues[k - 1]),
                    u.report.classifications[k - 1].label().to_string(),
                ];
                pv.row(&row)?;
            }
        }
        written.push(pv.finish()?);
    }

    let m = sample.len();
    for u in &report.utests {
        let model = ModelSource::from_report(report, &u.model)?;
        let (a, b) = u.report.tail_region;
        let first = u.rank_offset + a;
        let tail = SortedSample::new(
            sample.values()[first - 1..u.rank_offset + b].to_vec(),
            sample.label(),
        )?;
        let center: CcdfCurve = match opts.band_center {
            BandCenter::Model => model_curve(&tail, &model),
            BandCenter::Empirical => {
                let pts = curve
                    .points()
                    .iter()
                    .copied()
                    .filter(|&(x, _)| x >= tail.min())
                    .collect();
                CcdfCurve::from_points(pts, CcdfConvention::EmpiricalRank)?
            }
        };
        let band = ci_band(&center, m as u64, opts.ci_level)?;
        let name = format!("tail_{}.csv", u.model.to_ascii_lowercase());
        let header = [
            "x",
            "empirical_ccdf",
            "model_ccdf",
            "ci_lower",
            "ci_upper",
            "pvalue",
            "classification",
        ]
        .map(String::from);
        let mut out = Csv::create(dir, &name, &header)?;
        let mut j = 0;
        for k in a..=b {
            let rank = u.rank_offset + k;
            let x = sample.values()[rank - 1];
            while center.points()[j].0 < x {
                j += 1;
            }
            let row = [
                num(x),
                num((m - rank + 1) as f64 / m as f64),
                num(model.plot_ccdf(x)),
                num(band.lower[j]),
                num(band.upper[j]),
                num(u.report.pvalues[k - 1]),
                u.report.classifications[k - 1].label().to_string(),
            ];
            out.row(&row)?;
        }
        written.push(out.finish()?);
    }
    Ok(written)
}
