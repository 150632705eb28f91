//! Delimited-text readers for house prices, house-price indices and
//! deflator tables.
//!
//! Columns are located by header name, never by position. Rows that fail
//! validation are skipped and reported; a file is rejected outright only if
//! more than half of its rows fail.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord};
use gbtail_core::SortedSample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_YEAR_RANGE: (i32, i32) = (1900, 2100);

/// Column names of a price file, plus an optional property-class filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriceSchema {
    pub price: String,
    pub year: String,
    pub property_class: Option<String>,
    /// Keep only rows whose class column equals this value.
    pub class_filter: Option<String>,
    pub year_min: i32,
    pub year_max: i32,
}

impl Default for PriceSchema {
    fn default() -> Self {
        Self {
            price: "price".into(),
            year: "year".into(),
            property_class: None,
            class_filter: None,
            year_min: DEFAULT_YEAR_RANGE.0,
            year_max: DEFAULT_YEAR_RANGE.1,
        }
    }
}

/// Column names of an HPI file. Defaults follow the FHFA annual ZIP5 release.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HpiSchema {
    pub zip: String,
    pub year: String,
    pub hpi: String,
    pub year_min: i32,
    pub year_max: i32,
}

impl Default for HpiSchema {
    fn default() -> Self {
        Self {
            zip: "Five-Digit ZIP Code".into(),
            year: "Year".into(),
            hpi: "HPI".into(),
            year_min: DEFAULT_YEAR_RANGE.0,
            year_max: DEFAULT_YEAR_RANGE.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceRecord {
    pub price: f64,
    pub year: i32,
    pub property_class: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HpiRecord {
    pub zip: String,
    pub year: i32,
    pub hpi: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedRow {
    /// 1-based line number in the file.
    pub line: u64,
    pub reason: String,
}

/// Row accounting for one file: `total_rows = accepted + filtered + skipped.len()`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestSummary {
    pub total_rows: usize,
    pub accepted: usize,
    /// Valid rows dropped by a selection filter.
    pub filtered: usize,
    pub skipped: Vec<SkippedRow>,
    /// Accepted rows that overwrote an earlier row with the same key.
    pub duplicates_replaced: usize,
}

impl IngestSummary {
    fn skip(&mut self, line: u64, reason: impl Into<String>) {
        let reason = reason.into();
        log::debug!("line {line}: skipped ({reason})");
        self.skipped.push(SkippedRow { line, reason });
    }

    fn check_failure_rate(&self, path: &Path) -> Result<()> {
        if self.total_rows > 0 && 2 * self.skipped.len() > self.total_rows {
            let first = self
                .skipped
                .first()
                .map(|s| format!("; first: line {}: {}", s.line, s.reason))
                .unwrap_or_default();
            return Err(Error::parse(
                path,
                format!(
                    "{} of {} rows failed validation{first}",
                    self.skipped.len(),
                    self.total_rows
                ),
            ));
        }
        Ok(())
    }

    fn log(&self, path: &Path) {
        log::info!(
            "{}: {} rows, {} accepted, {} filtered, {} skipped",
            path.display(),
            self.total_rows,
            self.accepted,
            self.filtered,
            self.skipped.len()
        );
    }
}

/// Tab if the header line has tabs but no commas, comma otherwise.
pub fn detect_delimiter(path: &Path) -> Result<u8> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut first = String::new();
    BufReader::new(file)
        .read_line(&mut first)
        .map_err(|e| Error::io(path, e))?;
    Ok(if first.contains('\t') && !first.contains(',') {
        b'\t'
    } else {
        b','
    })
}

struct Table {
    header: Vec<String>,
    reader: csv::Reader<File>,
}

impl Table {
    fn open(path: &Path) -> Result<Self> {
        let delimiter = detect_delimiter(path)?;
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = ReaderBuilder::new()
            .delimiter(delimiter)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(file);
        let header = reader
            .headers()
            .map_err(|e| Error::parse(path, format!("unreadable header: {e}")))?
            .iter()
            .map(|h| h.trim_start_matches('\u{feff}').to_string())
            .collect();
        Ok(Self { header, reader })
    }

    fn columns(&self, path: &Path, names: &[&str]) -> Result<Vec<usize>> {
        let missing: Vec<String> = names
            .iter()
            .filter(|n| !self.header.iter().any(|h| h == *n))
            .map(|n| n.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Schema {
                path: path.into(),
                missing,
                found: self.header.clone(),
            });
        }
        Ok(names
            .iter()
            .map(|n| self.header.iter().position(|h| h == n).unwrap())
            .collect())
    }

    /// Calls `row` on every data record; read errors become skipped rows.
    fn for_each(
        mut self,
        summary: &mut IngestSummary,
        mut row: impl FnMut(u64, &StringRecord, &mut IngestSummary),
    ) {
        let mut record = StringRecord::new();
        loop {
            match self.reader.read_record(&mut record) {
                Ok(false) => break,
                Ok(true) => {
                    summary.total_rows += 1;
                    let line = record.position().map_or(0, |p| p.line());
                    row(line, &record, summary);
                }
                Err(e) => {
                    summary.total_rows += 1;
                    let line = e.position().map_or(0, |p| p.line());
                    summary.skip(line, format!("unreadable row: {e}"));
                    if !matches!(e.kind(), csv::ErrorKind::Utf8 { .. }) {
                        break;
                    }
                }
            }
        }
    }
}

fn field<'a>(record: &'a StringRecord, index: usize, name: &str) -> Result<&'a str, String> {
    match record.get(index) {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(format!("missing {name}")),
    }
}

fn parse_positive(record: &StringRecord, index: usize, name: &str) -> Result<f64, String> {
    let raw = field(record, index, name)?;
    let v: f64 = raw
        .parse()
        .map_err(|_| format!("{name} {raw:?} is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{name} {raw} is not positive"))
    }
}

fn parse_year(
    record: &StringRecord,
    index: usize,
    name: &str,
    range: (i32, i32),
) -> Result<i32, String> {
    let raw = field(record, index, name)?;
    let y: i32 = raw
        .parse()
        .map_err(|_| format!("{name} {raw:?} is not an integer"))?;
    if y < range.0 || y > range.1 {
        return Err(format!("{name} {y} outside {}..={}", range.0, range.1));
    }
    Ok(y)
}

fn normalize_zip(raw: &str) -> Result<String, String> {
    // spreadsheets drop leading zeros
    if raw.is_empty() || raw.len() > 5 || !raw.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("zip {raw:?} is not a 5-digit code"));
    }
    Ok(format!("{raw:0>5}"))
}

pub fn read_prices(path: &Path, schema: &PriceSchema) -> Result<(Vec<PriceRecord>, IngestSummary)> {
    let table = Table::open(path)?;
    let mut names = vec![schema.price.as_str(), schema.year.as_str()];
    if let Some(c) = &schema.property_class {
        names.push(c);
    } else if schema.class_filter.is_some() {
        return Err(Error::Usage(
            "a class filter needs a property-class column".into(),
        ));
    }
    let cols = table.columns(path, &names)?;
    let mut out = Vec::new();
    let mut summary = IngestSummary::default();
    let range = (schema.year_min, schema.year_max);
    table.for_each(&mut summary, |line, rec, summary| {
        let parsed = (|| {
            let price = parse_positive(rec, cols[0], &schema.price)?;
            let year = parse_year(rec, cols[1], &schema.year, range)?;
            let property_class = cols
                .get(2)
                .and_then(|&i| rec.get(i))
                .unwrap_or("")
                .to_string();
            Ok::<_, String>(PriceRecord {
                price,
                year,
                property_class,
            })
        })();
        match parsed {
            Ok(r)
                if schema
                    .class_filter
                    .as_ref()
                    .is_some_and(|f| *f != r.property_class) =>
            {
                summary.filtered += 1
            }
            Ok(r) => {
                summary.accepted += 1;
                out.push(r);
            }
            Err(reason) => summary.skip(line, reason),
        }
    });
    summary.check_failure_rate(path)?;
    summary.log(path);
    Ok((out, summary))
}

/// Writes records under the schema's column names; `read_prices` reads them back unchanged.
pub fn write_prices(path: &Path, records: &[PriceRecord], schema: &PriceSchema) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e.to_string()))?;
    let class = schema.property_class.as_deref().unwrap_or("property_class");
    let io = |e: csv::Error| Error::parse(path, e.to_string());
    w.write_record([schema.price.as_str(), schema.year.as_str(), class])
        .map_err(io)?;
    for r in records {
        w.write_record([
            r.price.to_string(),
            r.year.to_string(),
            r.property_class.clone(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads an HPI file. A later row with the same `(zip, year)` replaces an earlier one.
pub fn read_hpi(path: &Path, schema: &HpiSchema) -> Result<(Vec<HpiRecord>, IngestSummary)> {
    let table = Table::open(path)?;
    let cols = table.columns(path, &[&schema.zip, &schema.year, &schema.hpi])?;
    let mut out: Vec<HpiRecord> = Vec::new();
    let mut seen: HashMap<(String, i32), usize> = HashMap::new();
    let mut summary = IngestSummary::default();
    let range = (schema.year_min, schema.year_max);
    table.for_each(&mut summary, |line, rec, summary| {
        let parsed = (|| {
            let zip = normalize_zip(field(rec, cols[0], &schema.zip)?)?;
            let year = parse_year(rec, cols[1], &schema.year, range)?;
            let hpi = parse_positive(rec, cols[2], &schema.hpi)?;
            Ok::<_, String>(HpiRecord { zip, year, hpi })
        })();
        match parsed {
            Ok(r) => {
                summary.accepted += 1;
                match seen.get(&(r.zip.clone(), r.year)) {
                    Some(&i) => {
                        log::warn!(
                            "line {line}: duplicate ZIP {} year {}; keeping the later row",
                            r.zip,
                            r.year
                        );
                        summary.duplicates_replaced += 1;
                        out[i] = r;
                    }
                    None => {
                        seen.insert((r.zip.clone(), r.year), out.len());
                        out.push(r);
                    }
                }
            }
            Err(reason) => summary.skip(line, reason),
        }
    });
    summary.check_failure_rate(path)?;
    summary.log(path);
    Ok((out, summary))
}

/// Pools the index values of every record whose year is in `years`.
pub fn select_hpi(records: &[HpiRecord], years: &BTreeSet<i32>) -> Result<SortedSample> {
    if years.is_empty() {
        return Err(Error::Usage("no years selected".into()));
    }
    let values: Vec<f64> = records
        .iter()
        .filter(|r| years.contains(&r.year))
        .map(|r| r.hpi)
        .collect();
    if values.is_empty() {
        return Err(Error::Domain(format!(
            "no HPI records for years {}",
            format_years(years)
        )));
    }
    let first = years.first().unwrap();
    let last = years.last().unwrap();
    let label = if first == last {
        format!("HPI {first}")
    } else {
        format!("HPI {first}-{last}")
    };
    Ok(SortedSample::new(values, label)?)
}

fn format_years(years: &BTreeSet<i32>) -> String {
    years
        .iter()
        .map(i32::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Parses `2019`, `2000-2022` or comma-separated mixtures of both.
pub fn parse_year_set(text: &str) -> Result<BTreeSet<i32>> {
    let mut out = BTreeSet::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || Error::Usage(format!("bad year selection {part:?}"));
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (i32, i32) = (
                    a.trim().parse().map_err(|_| bad())?,
                    b.trim().parse().map_err(|_| bad())?,
                );
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => {
                out.insert(part.parse().map_err(|_| bad())?);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Usage("empty year selection".into()));
    }
    Ok(out)
}

/// Year → price-level factor, with the year whose currency is the target.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflatorTable {
    factors: BTreeMap<i32, f64>,
    base_year: i32,
}

impl DeflatorTable {
    pub fn new(factors: BTreeMap<i32, f64>, base_year: i32) -> Result<Self> {
        if let Some((y, f)) = factors.iter().find(|(_, f)| !(f.is_finite() && **f > 0.0)) {
            return Err(Error::Domain(format!(
                "deflator factor for {y} is {f}; factors must be positive"
            )));
        }
        if !factors.contains_key(&base_year) {
            return Err(Error::Domain(format!(
                "base year {base_year} missing from deflator table"
            )));
        }
        Ok(Self { factors, base_year })
    }

    pub fn base_year(&self) -> i32 {
        self.base_year
    }

    pub fn factor(&self, year: i32) -> Option<f64> {
        self.factors.get(&year).copied()
    }

    /// `price · factor(base) / factor(year)`.
    pub fn to_constant(&self, price: f64, year: i32) -> Option<f64> {
        Some(price * self.factors[&self.base_year] / self.factor(year)?)
    }

    pub fn to_nominal(&self, price: f64, year: i32) -> Option<f64> {
        Some(price * self.factor(year)? / self.factors[&self.base_year])
    }
}

/// Reads a two-column `year,factor` file.
pub fn read_deflator(path: &Path, base_year: i32) -> Result<DeflatorTable> {
    let table = Table::open(path)?;
    let cols = table.columns(path, &["year", "factor"])?;
    let mut factors = BTreeMap::new();
    let mut summary = IngestSummary::default();
    table.for_each(&mut summary, |line, rec, summary| {
        let parsed = (|| {
            let year = parse_year(rec, cols[0], "year", (i32::MIN, i32::MAX))?;
            Ok::<_, String>((year, parse_positive(rec, cols[1], "factor")?))
        })();
        match parsed {
            Ok((y, f)) => {
                summary.accepted += 1;
                factors.insert(y, f);
            }
            Err(reason) => summary.skip(line, reason),
        }
    });
    if let Some(s) = summary.skipped.first() {
        return Err(Error::parse(path, format!("line {}: {}", s.line, s.reason)));
    }
    DeflatorTable::new(factors, base_year)
}

/// Converts every price to base-year currency and sorts the result.
pub fn deflate(records: &[PriceRecord], table: &DeflatorTable) -> Result<SortedSample> {
    let missing: BTreeSet<i32> = records
        .iter()
        .filter(|r| table.factor(r.year).is_none())
        .map(|r| r.year)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Domain(format!(
            "deflator table lacks years {}",
            format_years(&missing)
        )));
    }
    let values = records
        .iter()
        .map(|r| table.to_constant(r.price, r.year).unwrap())
        .collect();
    Ok(SortedSample::new(
        values,
        format!("prices in {} currency", table.base_year),
    )?)
}

/// Prices as they are, without deflation.
pub fn nominal_sample(records: &[PriceRecord]) -> Result<SortedSample> {
    Ok(SortedSample::new(
        records.iter().map(|r| r.price).collect(),
        "nominal prices",
    )?)
}

/// Reads one named numeric column, skipping rows that are missing or not positive.
pub fn read_column(path: &Path, column: &str) -> Result<(SortedSample, IngestSummary)> {
    let table = Table::open(path)?;
    let col = table.columns(path, &[column])?[0];
    let mut values = Vec::new();
    let mut summary = IngestSummary::default();
    table.for_each(&mut summary, |line, rec, summary| {
        match parse_positive(rec, col, column) {
            Ok(v) => {
                summary.accepted += 1;
                values.push(v);
            }
            Err(reason) => summary.skip(line, reason),
        }
    });
    summary.check_failure_rate(path)?;
    summary.log(path);
    if values.is_empty() {
        return Err(Error::parse(
            path,
            format!("column {column:?} has no usable values"),
        ));
    }
    Ok((SortedSample::new(values, column)?, summary))
}
