//! Expression matrices, design matrices, variable filtering and artefact controls.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::math::{median, sqrt};

pub const DEFAULT_CONTROL_PREFIX: &str = "AFFX";

/// Variables x samples expression values (log2 scale) with identifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionDataset {
    values: Matrix,
    variable_ids: Vec<String>,
    sample_ids: Vec<String>,
    control_flags: Vec<bool>,
    founder_candidates: Vec<bool>,
}

fn check_unique(ids: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    Ok(())
}

impl ExpressionDataset {
    pub fn new(
        values: Matrix,
        variable_ids: Vec<String>,
        sample_ids: Vec<String>,
        control_flags: Vec<bool>,
    ) -> Result<Self> {
        let p = variable_ids.len();
        Self::with_flags(values, variable_ids, sample_ids, control_flags, alloc::vec![false; p])
    }

    pub fn with_flags(
        values: Matrix,
        variable_ids: Vec<String>,
        sample_ids: Vec<String>,
        control_flags: Vec<bool>,
        founder_candidates: Vec<bool>,
    ) -> Result<Self> {
        if values.rows() != variable_ids.len() || values.cols() != sample_ids.len() {
            return Err(Error::Shape(format!(
                "{}x{} values for {} variables and {} samples",
                values.rows(),
                values.cols(),
                variable_ids.len(),
                sample_ids.len()
            )));
        }
        if control_flags.len() != variable_ids.len() || founder_candidates.len() != variable_ids.len() {
            return Err(Error::Shape("flag vectors must have one entry per variable".into()));
        }
        check_unique(&variable_ids)?;
        check_unique(&sample_ids)?;
        for i in 0..values.rows() {
            if let Some(j) = values.row(i).iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
        Ok(Self { values, variable_ids, sample_ids, control_flags, founder_candidates })
    }

    /// Flags every variable whose id starts with `prefix` as an artefact control.
    pub fn with_control_prefix(
        values: Matrix,
        variable_ids: Vec<String>,
        sample_ids: Vec<String>,
        prefix: &str,
    ) -> Result<Self> {
        let flags = variable_ids.iter().map(|id| !prefix.is_empty() && id.starts_with(prefix)).collect();
        Self::new(values, variable_ids, sample_ids, flags)
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn variable_ids(&self) -> &[String] {
        &self.variable_ids
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn control_flags(&self) -> &[bool] {
        &self.control_flags
    }

    pub fn founder_candidates(&self) -> &[bool] {
        &self.founder_candidates
    }

    pub fn n_variables(&self) -> usize {
        self.variable_ids.len()
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn variable_index(&self) -> BTreeMap<&str, usize> {
        self.variable_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.variable_ids.iter().position(|v| v == id)
    }

    /// Rows at `idx`, in that order, keeping flags.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            values: self.values.select_rows(idx),
            variable_ids: idx.iter().map(|&i| self.variable_ids[i].clone()).collect(),
            sample_ids: self.sample_ids.clone(),
            control_flags: idx.iter().map(|&i| self.control_flags[i]).collect(),
            founder_candidates: idx.iter().map(|&i| self.founder_candidates[i]).collect(),
        }
    }

    /// Columns at `idx`, in that order.
    pub fn select_samples(&self, idx: &[usize]) -> Self {
        Self {
            values: self.values.select_cols(idx),
            variable_ids: self.variable_ids.clone(),
            sample_ids: idx.iter().map(|&j| self.sample_ids[j].clone()).collect(),
            control_flags: self.control_flags.clone(),
            founder_candidates: self.founder_candidates.clone(),
        }
    }

    /// Rows for the given ids, in the given order.
    pub fn select_ids(&self, ids: &[String]) -> Result<Self> {
        let index = self.variable_index();
        let idx = ids
            .iter()
            .map(|id| {
                index.get(id.as_str()).copied().ok_or_else(|| Error::Config(format!("variable `{id}` not in dataset")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_rows(&idx))
    }

    pub fn control_rows(&self) -> Vec<usize> {
        (0..self.n_variables()).filter(|&i| self.control_flags[i]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectKind {
    Treatment,
    ArtefactControl,
}

impl EffectKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EffectKind::Treatment => "treatment",
            EffectKind::ArtefactControl => "artefact_control",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "treatment" => Some(EffectKind::Treatment),
            "artefact_control" => Some(EffectKind::ArtefactControl),
            _ => None,
        }
    }
}

/// Effects x samples design matrix. Treatment rows are 0/1 indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    values: Matrix,
    effect_names: Vec<String>,
    kinds: Vec<EffectKind>,
}

impl DesignMatrix {
    pub fn new(values: Matrix, effect_names: Vec<String>, kinds: Vec<EffectKind>) -> Result<Self> {
        if values.rows() != effect_names.len() || kinds.len() != effect_names.len() {
            return Err(Error::Shape(format!(
                "{} design rows for {} names and {} kinds",
                values.rows(),
                effect_names.len(),
                kinds.len()
            )));
        }
        check_unique(&effect_names)?;
        for (k, kind) in kinds.iter().enumerate() {
            let row = values.row(k);
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row: k, col: j });
            }
            if *kind == EffectKind::Treatment && row.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(Error::Invalid(format!("treatment row `{}` is not binary", effect_names[k])));
            }
        }
        Ok(Self { values, effect_names, kinds })
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn effect_names(&self) -> &[String] {
        &self.effect_names
    }

    pub fn kinds(&self) -> &[EffectKind] {
        &self.kinds
    }

    pub fn n_effects(&self) -> usize {
        self.effect_names.len()
    }

    pub fn n_samples(&self) -> usize {
        self.values.cols()
    }

    /// Appends artefact-control rows (e.g. from [`artefact_controls`]).
    pub fn with_controls(&self, controls: &Matrix, prefix: &str) -> Result<Self> {
        let values = self.values.vstack(controls)?;
        let mut names = self.effect_names.clone();
        let mut kinds = self.kinds.clone();
        for k in 0..controls.rows() {
            names.push(format!("{prefix}{}", k + 1));
            kinds.push(EffectKind::ArtefactControl);
        }
        Self::new(values, names, kinds)
    }
}

/// Median / range thresholds on the log2 scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub min_median: f64,
    pub min_range: f64,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        Self { min_median: 5.5, min_range: 0.5 }
    }
}

impl FilterPolicy {
    pub fn new(min_median: f64, min_range: f64) -> Result<Self> {
        if !(min_median >= 0.0) || !(min_range >= 0.0) {
            return Err(Error::Invalid("filter thresholds must be nonnegative".into()));
        }
        Ok(Self { min_median, min_range })
    }

    /// Median is inclusive, range is strict; control probes never pass.
    pub fn keeps(&self, row: &[f64], is_control: bool) -> bool {
        if is_control || row.is_empty() {
            return false;
        }
        let (lo, hi) = row.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        median(row) >= self.min_median && hi - lo > self.min_range
    }
}

pub fn filter_variables(ds: &ExpressionDataset, policy: &FilterPolicy) -> Result<ExpressionDataset> {
    if ds.n_variables() == 0 || ds.n_samples() == 0 {
        return Err(Error::InsufficientData("empty dataset".into()));
    }
    let keep: Vec<usize> = (0..ds.n_variables()).filter(|&i| policy.keeps(ds.row(i), ds.control_flags[i])).collect();
    if keep.is_empty() {
        return Err(Error::EmptyResult);
    }
    Ok(ds.select_rows(&keep))
}

/// First `k` principal-component score vectors of the control-probe rows.
///
/// Each control variable is centered across samples; the returned `k x n`
/// rows have zero mean and unit sample variance. A component's sign is
/// chosen so its largest-magnitude loading is positive.
pub fn artefact_controls(ds: &ExpressionDataset, k: usize) -> Result<Matrix> {
    if k == 0 {
        return Err(Error::Invalid("need at least one control component".into()));
    }
    let rows = ds.control_rows();
    if rows.len() < k {
        return Err(Error::InsufficientData(format!("{} control rows for {k} components", rows.len())));
    }
    let n = ds.n_samples();
    if n < 2 {
        return Err(Error::InsufficientData("need at least two samples".into()));
    }
    let mut c = ds.values.select_rows(&rows);
    for i in 0..c.rows() {
        let r = c.row_mut(i);
        let m = r.iter().sum::<f64>() / n as f64;
        r.iter_mut().for_each(|v| *v -= m);
    }
    // Gram matrix over samples: its eigenvectors are the normalized scores.
    let gram = c.transpose().matmul(&c)?;
    let (vals, vecs) = symmetric_eigen(&gram)?;
    let top = vals.first().copied().unwrap_or(0.0);
    let mut out = Matrix::zeros(k, n);
    for comp in 0..k {
        let ev = vals[comp];
        if !(ev > 1e-10 * top.max(0.0)) || !(top > 1e-300) {
            return Err(Error::RankDeficient(format!("control block has rank {comp}, {k} components requested")));
        }
        let u = vecs.col(comp);
        let loadings = c.mul_vec(&u);
        let lead = loadings.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        let scale = sign * sqrt((n - 1) as f64);
        for (j, &uj) in u.iter().enumerate() {
            out[(comp, j)] = uj * scale;
        }
    }
    Ok(out)
}

pub fn numbered_ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{}", i + 1)).collect()
}
