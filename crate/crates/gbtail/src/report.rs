//! The JSON analysis report and its fragments.

use std::fs;
use std::path::Path;

use gbtail_core::fitting::{FitResult, FittedParams, TailFit};
use gbtail_core::{SortedSample, UTestReport};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Bumped whenever a field changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Software {
    pub name: String,
    pub version: String,
}

impl Default for Software {
    fn default() -> Self {
        Self {
            name: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

/// Identifies the analysed sample; `fingerprint` is the SHA-256 of the sorted
/// values as little-endian `f64` bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetDescriptor {
    pub label: String,
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub fingerprint: String,
}

impl DatasetDescriptor {
    pub fn of(sample: &SortedSample) -> Self {
        let mut h = Sha256::new();
        for v in sample.values() {
            h.update(v.to_le_bytes());
        }
        let fingerprint = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Self {
            label: sample.label().to_string(),
            n: sample.len(),
            min: sample.min(),
            max: sample.max(),
            median: sample.median(),
            fingerprint,
        }
    }

    /// Same data, regardless of label.
    pub fn same_data(&self, other: &Self) -> bool {
        self.n == other.n && self.fingerprint == other.fingerprint
    }
}

/// A line fit under a name such as `LF-1` or `LF-2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedTailFit {
    pub name: String,
    pub fit: TailFit,
    /// `-α̂q̂` of the GB2 fit on the same data, when one exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gb2_slope: Option<f64>,
}

/// U-test of one model. For line fits only the tail subsample is tested;
/// its rank `k` is rank `rank_offset + k` of the full sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UTestEntry {
    pub model: String,
    pub tested_size: usize,
    pub rank_offset: usize,
    pub report: UTestReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub software: Software,
    pub seed: u64,
    pub dataset: DatasetDescriptor,
    #[serde(default)]
    pub fits: Vec<FitResult>,
    /// User-supplied parameters tested without fitting.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reference_params: Vec<FittedParams>,
    #[serde(default)]
    pub tail_fits: Vec<NamedTailFit>,
    #[serde(default)]
    pub utests: Vec<UTestEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_level: Option<f64>,
}

impl AnalysisReport {
    pub fn new(sample: &SortedSample, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            software: Software::default(),
            seed,
            dataset: DatasetDescriptor::of(sample),
            fits: Vec::new(),
            reference_params: Vec::new(),
            tail_fits: Vec::new(),
            utests: Vec::new(),
            ci_level: None,
        }
    }

    pub fn fit(&self, family: gbtail_core::Family) -> Option<&FitResult> {
        self.fits.iter().find(|f| f.family == family)
    }

    /// Fitted parameters of `family`, else user-supplied ones.
    pub fn params(&self, family: gbtail_core::Family) -> Option<FittedParams> {
        self.fit(family).map(|f| f.params).or_else(|| {
            self.reference_params
                .iter()
                .find(|p| p.family() == family)
                .copied()
        })
    }

    pub fn tail_fit(&self, name: &str) -> Option<&NamedTailFit> {
        self.tail_fits
            .iter()
            .find(|t| t.name.eq_ignore_ascii_case(name))
    }

    /// Every number in the report must be finite.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::Domain(format!("report field {what} is not finite")));
        let d = &self.dataset;
        if ![d.min, d.max, d.median].iter().all(|v| v.is_finite()) {
            return bad("dataset".into());
        }
        for f in &self.fits {
            if !(f.log_likelihood.is_finite() && f.ks_stat.is_finite()) {
                return bad(format!("fits[{}]", f.family));
            }
        }
        for t in &self.tail_fits {
            let f = &t.fit;
            if ![f.slope, f.intercept, f.slope_stderr, f.tail_start_x]
                .iter()
                .all(|v| v.is_finite())
            {
                return bad(format!("tail_fits[{}]", t.name));
            }
        }
        for u in &self.utests {
            if !u.report.pvalues.iter().all(|p| p.is_finite()) {
                return bad(format!("utests[{}]", u.model));
            }
        }
        if self.ci_level.is_some_and(|c| !c.is_finite()) {
            return bad("ci_level".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Domain(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let r: Self = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::parse(
                path,
                format!(
                    "schema version {} not supported (expected {SCHEMA_VERSION})",
                    r.schema_version
                ),
            ));
        }
        r.validate()?;
        Ok(r)
    }

    /// Folds `other` into `self`; entries of `other` replace same-named ones.
    pub fn merge(&mut self, other: AnalysisReport) -> Result<()> {
        if !self.dataset.same_data(&other.dataset) {
            return Err(Error::Domain(format!(
                "conflicting datasets: {:?} (n={}) vs {:?} (n={})",
                self.dataset.label, self.dataset.n, other.dataset.label, other.dataset.n
            )));
        }
        if self.seed != other.seed {
            return Err(Error::Domain(format!(
                "conflicting seeds {} and {}",
                self.seed, other.seed
            )));
        }
        match (self.ci_level, other.ci_level) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Domain(format!("conflicting CI levels {a} and {b}")));
            }
            (None, b) => self.ci_level = b,
            _ => {}
        }
        for f in other.fits {
            self.fits.retain(|g| g.family != f.family);
            self.fits.push(f);
        }
        for p in other.reference_params {
            self.reference_params.retain(|g| g.family() != p.family());
            self.reference_params.push(p);
        }
        for t in other.tail_fits {
            self.tail_fits.retain(|g| g.name != t.name);
            self.tail_fits.push(t);
        }
        for u in other.utests {
            self.utests.retain(|g| g.model != u.model);
            self.utests.push(u);
        }
        Ok(())
    }
}

/// Merges fragments in order. The first fragment fixes the dataset.
pub fn merge_all(fragments: Vec<AnalysisReport>) -> Result<AnalysisReport> {
    let mut it = fragments.into_iter();
    let mut out = it
        .next()
        .ok_or_else(|| Error::Usage("no report fragments given".into()))?;
    for f in it {
        out.merge(f)?;
    }
    Ok(out)
}
