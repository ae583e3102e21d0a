//! Signature scores and their use as metagene rows in a second dataset.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::ExpressionDataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math::{mean, sample_variance, sqrt};
use crate::regression::SparseRegressionPosterior;

/// Effects x samples score matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureScores {
    pub values: Matrix,
    pub effect_names: Vec<String>,
    pub sample_ids: Vec<String>,
}

impl SignatureScores {
    pub fn new(values: Matrix, effect_names: Vec<String>, sample_ids: Vec<String>) -> Result<Self> {
        if values.rows() != effect_names.len() || values.cols() != sample_ids.len() {
            return Err(Error::Shape(format!(
                "{}x{} scores for {} effects and {} samples",
                values.rows(),
                values.cols(),
                effect_names.len(),
                sample_ids.len()
            )));
        }
        if !values.is_finite() {
            return Err(Error::Invalid("scores must be finite".into()));
        }
        Ok(Self { values, effect_names, sample_ids })
    }
}

/// How many posterior variables were found in the scored dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub matched: usize,
    pub missing: usize,
}

/// `s[k, i] = sum_g beta*[g, k] x[g, i] / psi*[g]`, matching variables by id.
pub fn score_samples(post: &SparseRegressionPosterior, ds: &ExpressionDataset) -> Result<(SignatureScores, Coverage)> {
    let index = ds.variable_index();
    let m = post.effect_names.len();
    let n = ds.n_samples();
    let mut values = Matrix::zeros(m, n);
    let mut matched = 0;
    for (g, id) in post.variable_ids.iter().enumerate() {
        let Some(&row) = index.get(id.as_str()) else { continue };
        matched += 1;
        let x = ds.row(row);
        let inv_psi = 1.0 / post.noise_var_mean[g];
        for k in 0..m {
            let w = post.effect_mean[(g, k)] * inv_psi;
            if w == 0.0 {
                continue;
            }
            for (s, &xi) in values.row_mut(k).iter_mut().zip(x) {
                *s += w * xi;
            }
        }
    }
    if matched == 0 {
        return Err(Error::Coverage);
    }
    let coverage = Coverage { matched, missing: post.variable_ids.len() - matched };
    let scores = SignatureScores::new(values, post.effect_names.clone(), ds.sample_ids().to_vec())?;
    Ok((scores, coverage))
}

/// Mean of row means and mean of row variances of `reference`.
pub fn reference_moments(reference: &ExpressionDataset) -> (f64, f64) {
    let p = reference.n_variables() as f64;
    let (mut m, mut v) = (0.0, 0.0);
    for g in 0..reference.n_variables() {
        let row = reference.row(g);
        m += mean(row);
        v += sample_variance(row);
    }
    (m / p, v / p)
}

/// Rescales each score row to the reference's average gene mean and
/// variance. Returns the indices of rows with no spread, which are set to
/// the target mean.
pub fn standardize_scores(
    scores: &SignatureScores,
    reference: &ExpressionDataset,
) -> Result<(SignatureScores, Vec<usize>)> {
    if reference.n_variables() == 0 || reference.n_samples() < 2 {
        return Err(Error::InsufficientData("reference dataset is empty".into()));
    }
    let (target_mean, target_var) = reference_moments(reference);
    let target_sd = sqrt(target_var);
    let mut values = scores.values.clone();
    let mut flagged = Vec::new();
    for k in 0..values.rows() {
        let row = values.row_mut(k);
        let m = mean(row);
        let v = sample_variance(row);
        if !(v > 0.0) {
            row.iter_mut().for_each(|s| *s = target_mean);
            flagged.push(k);
            continue;
        }
        let f = target_sd / sqrt(v);
        row.iter_mut().for_each(|s| *s = target_mean + (*s - m) * f);
    }
    let out = SignatureScores::new(values, scores.effect_names.clone(), scores.sample_ids.clone())?;
    Ok((out, flagged))
}

/// Prepends score rows to `ds` as metagenes flagged as founder candidates.
pub fn augment_dataset(ds: &ExpressionDataset, scores: &SignatureScores) -> Result<ExpressionDataset> {
    if scores.effect_names.is_empty() {
        return Ok(ds.clone());
    }
    let pos: BTreeMap<&str, usize> = scores.sample_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut missing: Vec<String> = ds.sample_ids().iter().filter(|s| !pos.contains_key(s.as_str())).cloned().collect();
    let ds_ids: BTreeMap<&str, ()> = ds.sample_ids().iter().map(|s| (s.as_str(), ())).collect();
    missing.extend(scores.sample_ids.iter().filter(|s| !ds_ids.contains_key(s.as_str())).cloned());
    if !missing.is_empty() {
        return Err(Error::Alignment(missing));
    }
    let order: Vec<usize> = ds.sample_ids().iter().map(|s| pos[s.as_str()]).collect();
    let aligned = scores.values.select_cols(&order);
    let values = aligned.vstack(ds.values())?;
    let m = scores.effect_names.len();
    let mut ids = scores.effect_names.clone();
    ids.extend_from_slice(ds.variable_ids());
    let mut controls = vec![false; m];
    controls.extend_from_slice(ds.control_flags());
    let mut founders = vec![true; m];
    founders.extend_from_slice(ds.founder_candidates());
    ExpressionDataset::with_flags(values, ids, ds.sample_ids().to_vec(), controls, founders)
}
