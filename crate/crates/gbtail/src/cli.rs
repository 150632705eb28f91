//! Argument parsing and subcommand drivers for the `gbtail` binary.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gbtail_core::distributions::{sample_gb2, sample_mgb};
use gbtail_core::empirical::BandCenter;
use gbtail_core::fitting::{FittedParams, LogUniformPrior};
use gbtail_core::{Family, FitConfig, Gb2Params, GbParams, SortedSample, Thresholds};
use serde::Deserialize;

use crate::analysis::{self, ModelSource, TailOptions, UTestOptions, DEFAULT_FRACTION_OF_MAX};
use crate::bundle::{write_bundle, BundleOptions};
use crate::config::{Config, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::ingest::{self, HpiSchema, PriceSchema};
use crate::report::{merge_all, AnalysisReport};
use crate::samplefile::{read_sample, write_sample};

/// Generalized-beta tail analysis: fits mGB and GB2 distributions, fits
/// log-log tail lines and flags Dragon-King outliers with the U-test.
///
/// Every command is deterministic. The default seed is 42.
#[derive(Debug, Parser)]
#[command(name = "gbtail", version)]
pub struct Cli {
    /// TOML configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic sample from GB2 or mGB.
    Synth(SynthArgs),
    /// Maximum-likelihood fits of mGB and/or GB2.
    Fit(FitArgs),
    /// Log-log line fits of the upper tail (LF-1, LF-2).
    Tail(TailArgs),
    /// Order-statistic U-test against a fitted model or tail line.
    Utest(UTestArgs),
    /// Merge report fragments and write the plot-data bundle.
    Report(ReportArgs),
    /// Read a house-price file into a sample, optionally deflated.
    IngestHp(IngestHpArgs),
    /// Read an HPI file and pool the selected years into a sample.
    IngestHpi(IngestHpiArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Gb2,
    Mgb,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Gb2 => Family::Gb2,
            FamilyArg::Mgb => Family::Mgb,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BandCenterArg {
    Model,
    Empirical,
}

impl From<BandCenterArg> for BandCenter {
    fn from(b: BandCenterArg) -> Self {
        match b {
            BandCenterArg::Model => BandCenter::Model,
            BandCenterArg::Empirical => BandCenter::Empirical,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long)]
    pub alpha: f64,
    /// Upper bound; mGB only.
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: f64,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Sample file (one value per line) or CSV with `--column`.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Read this named column of a delimited file.
    #[arg(long)]
    pub column: Option<String>,
}

impl InputArgs {
    fn load(&self) -> Result<SortedSample> {
        match &self.column {
            Some(c) => Ok(ingest::read_column(&self.input, c)?.0),
            None => read_sample(&self.input),
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Families to fit; both when omitted.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub family: Vec<FamilyArg>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Stop when the mean log-likelihood improves by less than this.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Screen starts on this many order statistics; 0 screens on all data.
    #[arg(long)]
    pub screening_size: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub alpha_starts: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub beta2_start_factors: Option<Vec<f64>>,
    /// Lower bound of a log-uniform prior on every parameter.
    #[arg(long, requires = "prior_upper")]
    pub prior_lower: Option<f64>,
    #[arg(long, requires = "prior_lower")]
    pub prior_upper: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report path; standard output when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TailArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// First CCDF rank of the tail; top decile when omitted.
    #[arg(long)]
    pub tail_start_rank: Option<usize>,
    /// LF-1: drop this many of the largest points.
    #[arg(long)]
    pub manual_exclude: Option<usize>,
    /// LF-2: drop points above this fraction of the maximum.
    #[arg(long)]
    pub fraction_of_max: Option<f64>,
    /// Skip LF-2.
    #[arg(long)]
    pub no_fraction: bool,
    /// Fit report whose GB2 slope is quoted next to the lines.
    #[arg(long)]
    pub from: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UTestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Report holding the model (from `fit` or `tail`).
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// TOML file with a `[gb2]` or `[mgb]` parameter table.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// mgb, gb2, LF-1 or LF-2.
    #[arg(long)]
    pub model: String,
    /// Top ranks treated as tail ends; max(5, ceil(m/200)) when omitted.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub low: Option<f64>,
    #[arg(long)]
    pub high: Option<f64>,
    #[arg(long)]
    pub tail_start_rank: Option<usize>,
    #[arg(long)]
    pub ci_level: Option<f64>,
    #[arg(long, value_enum)]
    pub band_center: Option<BandCenterArg>,
    /// Also write plot data here.
    #[arg(long)]
    pub plot_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report fragments, merged in order.
    #[arg(required = true)]
    pub fragments: Vec<PathBuf>,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub plot_dir: Option<PathBuf>,
    #[arg(long)]
    pub bins_per_decade: Option<u32>,
    #[arg(long)]
    pub ci_level: Option<f64>,
    #[arg(long, value_enum)]
    pub band_center: Option<BandCenterArg>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestHpArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long)]
    pub price_column: Option<String>,
    #[arg(long)]
    pub year_column: Option<String>,
    #[arg(long)]
    pub class_column: Option<String>,
    /// Keep only rows whose class column equals this.
    #[arg(long)]
    pub class_value: Option<String>,
    /// `year,factor` file; prices stay nominal without it.
    #[arg(long, requires = "base_year")]
    pub deflator: Option<PathBuf>,
    #[arg(long)]
    pub base_year: Option<i32>,
    #[arg(long)]
    pub year_min: Option<i32>,
    #[arg(long)]
    pub year_max: Option<i32>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestHpiArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long)]
    pub zip_column: Option<String>,
    #[arg(long)]
    pub year_column: Option<String>,
    #[arg(long)]
    pub hpi_column: Option<String>,
    /// e.g. `2019` or `2000-2022`.
    #[arg(long)]
    pub years: Option<String>,
    #[arg(long, short)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let seed = |flag: Option<u64>| flag.or(config.seed).unwrap_or(DEFAULT_SEED);
    match cli.command {
        Command::Synth(a) => synth(&a, seed(a.seed)),
        Command::Fit(a) => fit(&a, &config, seed(a.seed)),
        Command::Tail(a) => tail(&a, &config, seed(a.seed)),
        Command::Utest(a) => utest(&a, &config, seed(a.seed)),
        Command::Report(a) => report(&a, &config),
        Command::IngestHp(a) => ingest_hp(&a, &config),
        Command::IngestHpi(a) => ingest_hpi(&a, &config),
    }
}

fn emit(report: &AnalysisReport, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => report.write(p),
        None => {
            let json = report.to_json()?;
            std::io::stdout()
                .write_all(json.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn synth(a: &SynthArgs, seed: u64) -> Result<()> {
    let usage = |e: gbtail_core::Error| Error::Usage(e.to_string());
    if a.n == 0 {
        return Err(Error::Usage("--n must be at least 1".into()));
    }
    let mut header = vec!["gbtail synth".to_string()];
    let sample = match a.family {
        FamilyArg::Gb2 => {
            if a.beta1.is_some() {
                return Err(Error::Usage("--beta1 applies to mgb only".into()));
            }
            let g = Gb2Params::new(a.alpha, a.beta2, a.p, a.q).map_err(usage)?;
            header.push("family = GB2".into());
            sample_gb2(&g, a.n, seed)
        }
        FamilyArg::Mgb => {
            let b1 = a
                .beta1
                .ok_or_else(|| Error::Usage("mgb needs --beta1".into()))?;
            let g = GbParams::new(a.alpha, b1, a.beta2, a.p, a.q).map_err(usage)?;
            header.push("family = mGB".into());
            header.push(format!("beta1 = {b1}"));
            sample_mgb(&g, a.n, seed)
        }
    };
    header.extend([
        format!("alpha = {}", a.alpha),
        format!("beta2 = {}", a.beta2),
        format!("p = {}", a.p),
        format!("q = {}", a.q),
        format!("n = {}", a.n),
        format!("seed = {seed}"),
    ]);
    write_sample(&a.out, &header, &sample)
}

fn fit_config(a: &FitArgs, c: &Config) -> Result<FitConfig> {
    let d = FitConfig::default();
    let f = &c.fit;
    let screening = a.screening_size.or(f.screening_size);
    let prior = match (
        a.prior_lower.or(f.prior_lower),
        a.prior_upper.or(f.prior_upper),
    ) {
        (Some(lower), Some(upper)) => Some(LogUniformPrior { lower, upper }),
        (None, None) => None,
        _ => {
            return Err(Error::Usage(
                "a prior needs both lower and upper bounds".into(),
            ))
        }
    };
    let cfg = FitConfig {
        max_iterations: a
            .max_iterations
            .or(f.max_iterations)
            .unwrap_or(d.max_iterations),
        tolerance: a.tolerance.or(f.tolerance).unwrap_or(d.tolerance),
        restarts: a.restarts.or(f.restarts).unwrap_or(d.restarts),
        alpha_starts: a
            .alpha_starts
            .clone()
            .or(f.alpha_starts.clone())
            .unwrap_or(d.alpha_starts),
        beta2_start_factors: a
            .beta2_start_factors
            .clone()
            .or(f.beta2_start_factors.clone())
            .unwrap_or(d.beta2_start_factors),
        screening_size: match screening {
            Some(0) => None,
            Some(k) => Some(k),
            None => d.screening_size,
        },
        prior,
    };
    cfg.validate().map_err(|e| Error::Usage(e.to_string()))?;
    Ok(cfg)
}

fn families(flags: &[FamilyArg], c: &Config) -> Result<Vec<Family>> {
    if !flags.is_empty() {
        return Ok(flags.iter().map(|&f| f.into()).collect());
    }
    match &c.fit.families {
        Some(names) => names
            .iter()
            .map(|n| match n.to_ascii_lowercase().as_str() {
                "gb2" => Ok(Family::Gb2),
                "mgb" => Ok(Family::Mgb),
                other => Err(Error::Usage(format!(
                    "unknown family {other:?} in configuration"
                ))),
            })
            .collect(),
        None => Ok(vec![Family::Mgb, Family::Gb2]),
    }
}

fn fit(a: &FitArgs, c: &Config, seed: u64) -> Result<()> {
    let cfg = fit_config(a, c)?;
    let fams = families(&a.family, c)?;
    let sample = a.input.load()?;
    let mut report = AnalysisReport::new(&sample, seed);
    report.fits = analysis::run_fits(&sample, &fams, &cfg)?;
    emit(&report, a.out.as_deref())?;
    let failed: Vec<String> = report
        .fits
        .iter()
        .filter(|f| !f.converged)
        .map(|f| f.family.to_string())
        .collect();
    if !failed.is_empty() {
        return Err(Error::Convergence(format!(
            "{} fit did not converge (report written; see warnings)",
            failed.join(" and ")
        )));
    }
    Ok(())
}

fn tail(a: &TailArgs, c: &Config, seed: u64) -> Result<()> {
    let t = &c.tail;
    let fraction = if a.no_fraction {
        None
    } else {
        Some(
            a.fraction_of_max
                .or(t.fraction_of_max)
                .unwrap_or(DEFAULT_FRACTION_OF_MAX),
        )
    };
    let opts = TailOptions {
        start_rank: a.tail_start_rank.or(t.start_rank),
        manual_exclude: a.manual_exclude.or(t.manual_exclude),
        fraction_of_max: fraction,
    };
    let sample = a.input.load()?;
    let gb2_slope = match &a.from {
        Some(p) => {
            let r = AnalysisReport::read(p)?;
            r.fit(Family::Gb2).and_then(|f| f.params.ccdf_tail_slope())
        }
        None => None,
    };
    let mut report = AnalysisReport::new(&sample, seed);
    report.tail_fits = analysis::run_tail(&sample, &opts, gb2_slope)?;
    emit(&report, a.out.as_deref())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    gb2: Option<Gb2Params>,
    mgb: Option<GbParams>,
}

fn read_params(path: &Path) -> Result<Vec<FittedParams>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let f: ParamsFile = toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
    let mut out = Vec::new();
    out.extend(f.mgb.map(FittedParams::Mgb));
    out.extend(f.gb2.map(FittedParams::Gb2));
    if out.is_empty() {
        return Err(Error::parse(path, "no [gb2] or [mgb] table"));
    }
    Ok(out)
}

fn band_center(flag: Option<BandCenterArg>, config: Option<&String>) -> Result<BandCenter> {
    if let Some(b) = flag {
        return Ok(b.into());
    }
    match config.map(|s| s.to_ascii_lowercase()).as_deref() {
        None | Some("model") => Ok(BandCenter::Model),
        Some("empirical") => Ok(BandCenter::Empirical),
        Some(other) => Err(Error::Usage(format!("unknown band centre {other:?}"))),
    }
}

fn utest(a: &UTestArgs, c: &Config, seed: u64) -> Result<()> {
    let u = &c.utest;
    let thresholds = Thresholds::new(
        a.low.or(u.low).unwrap_or(Thresholds::default().low),
        a.high.or(u.high).unwrap_or(Thresholds::default().high),
    )
    .map_err(|e| Error::Usage(e.to_string()))?;
    let opts = UTestOptions {
        window: a.window.or(u.window),
        thresholds,
        tail_start_rank: a.tail_start_rank.or(u.tail_start_rank),
    };
    let ci_level = a.ci_level.or(u.ci_level).unwrap_or(0.95);
    let center = band_center(a.band_center, u.band_center.as_ref())?;
    let sample = a.input.load()?;

    let mut fragment = AnalysisReport::new(&sample, seed);
    match (&a.from, &a.params) {
        (Some(p), None) => {
            let source = AnalysisReport::read(p)?;
            if !source.dataset.same_data(&fragment.dataset) {
                log::warn!("{} was produced from different data", p.display());
            }
            fragment.fits = source.fits.clone();
            fragment.reference_params = source.reference_params.clone();
            fragment.tail_fits = source.tail_fits.clone();
        }
        (None, Some(p)) => fragment.reference_params = read_params(p)?,
        (None, None) => {
            return Err(Error::Usage(
                "utest needs a model: pass --from REPORT or --params FILE".into(),
            ))
        }
        (Some(_), Some(_)) => {
            return Err(Error::Usage(
                "--from and --params are mutually exclusive".into(),
            ))
        }
    }
    let model = ModelSource::from_report(&fragment, &a.model)?;
    let entry = analysis::run_utest(&sample, &model, &opts)?;
    // keep only what the test used
    let name = model.name();
    fragment.fits.retain(|f| f.family.name() == name);
    fragment
        .reference_params
        .retain(|p| p.family().name() == name);
    fragment.tail_fits.retain(|t| t.name == name);
    fragment.utests.push(entry);
    fragment.ci_level = Some(ci_level);
    if let Some(dir) = &a.plot_dir {
        let b = BundleOptions {
            ci_level,
            band_center: center,
            ..Default::default()
        };
        write_bundle(dir, &sample, &fragment, &b)?;
    }
    emit(&fragment, a.out.as_deref())
}

fn report(a: &ReportArgs, c: &Config) -> Result<()> {
    let fragments = a
        .fragments
        .iter()
        .map(|p| AnalysisReport::read(p))
        .collect::<Result<Vec<_>>>()?;
    let mut merged = merge_all(fragments)?;
    let sample = a.input.load()?;
    if !merged
        .dataset
        .same_data(&crate::report::DatasetDescriptor::of(&sample))
    {
        return Err(Error::Domain(format!(
            "{} is not the dataset the fragments describe",
            a.input.input.display()
        )));
    }
    let ci_level = a
        .ci_level
        .or(c.report.ci_level)
        .or(merged.ci_level)
        .unwrap_or(0.95);
    merged.ci_level = Some(ci_level);
    if let Some(dir) = &a.plot_dir {
        let b = BundleOptions {
            bins_per_decade: a.bins_per_decade.or(c.report.bins_per_decade).unwrap_or(10),
            ci_level,
            band_center: band_center(a.band_center, c.report.band_center.as_ref())?,
        };
        for p in write_bundle(dir, &sample, &merged, &b)? {
            log::info!("wrote {}", p.display());
        }
    }
    emit(&merged, a.out.as_deref())
}

fn ingest_hp(a: &IngestHpArgs, c: &Config) -> Result<()> {
    let h = &c.ingest_hp;
    let d = PriceSchema::default();
    let schema = PriceSchema {
        price: a
            .price_column
            .clone()
            .or(h.price_column.clone())
            .unwrap_or(d.price),
        year: a
            .year_column
            .clone()
            .or(h.year_column.clone())
            .unwrap_or(d.year),
        property_class: a.class_column.clone().or(h.class_column.clone()),
        class_filter: a.class_value.clone().or(h.class_value.clone()),
        year_min: a.year_min.or(h.year_min).unwrap_or(d.year_min),
        year_max: a.year_max.or(h.year_max).unwrap_or(d.year_max),
    };
    let (records, summary) = ingest::read_prices(&a.input, &schema)?;
    let deflator = a.deflator.clone().or(h.deflator.clone());
    let base_year = a.base_year.or(h.base_year);
    let mut header = vec![format!("gbtail ingest-hp {}", a.input.display())];
    let sample = match (deflator, base_year) {
        (Some(path), Some(base)) => {
            header.push(format!(
                "deflated to {base} currency with {}",
                path.display()
            ));
            ingest::deflate(&records, &ingest::read_deflator(&path, base)?)?
        }
        (Some(_), None) => return Err(Error::Usage("a deflator needs --base-year".into())),
        _ => ingest::nominal_sample(&records)?,
    };
    header.push(format!(
        "rows = {}, accepted = {}, filtered = {}, skipped = {}",
        summary.total_rows,
        summary.accepted,
        summary.filtered,
        summary.skipped.len()
    ));
    write_sample(&a.out, &header, &sample)
}

fn ingest_hpi(a: &IngestHpiArgs, c: &Config) -> Result<()> {
    let h = &c.ingest_hpi;
    let d = HpiSchema::default();
    let schema = HpiSchema {
        zip: a
            .zip_column
            .clone()
            .or(h.zip_column.clone())
            .unwrap_or(d.zip),
        year: a
            .year_column
            .clone()
            .or(h.year_column.clone())
            .unwrap_or(d.year),
        hpi: a
            .hpi_column
            .clone()
            .or(h.hpi_column.clone())
            .unwrap_or(d.hpi),
        ..d
    };
    let years = a
        .years
        .clone()
        .or(h.years.clone())
        .ok_or_else(|| Error::Usage("ingest-hpi needs --years".into()))?;
    let years = ingest::parse_year_set(&years)?;
    let (records, summary) = ingest::read_hpi(&a.input, &schema)?;
    let sample = ingest::select_hpi(&records, &years)?;
    let header = vec![
        format!("gbtail ingest-hpi {}", a.input.display()),
        format!("{}: {} values", sample.label(), sample.len()),
        format!(
            "rows = {}, accepted = {}, skipped = {}, duplicates replaced = {}",
            summary.total_rows,
            summary.accepted,
            summary.skipped.len(),
            summary.duplicates_replaced
        ),
    ];
    write_sample(&a.out, &header, &sample)
}
