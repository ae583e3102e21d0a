//! Out-of-sample latent factor scores with model parameters fixed at their
//! posterior means.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::ExpressionDataset;
use crate::error::{Error, Result};
use crate::factor::FactorPosterior;
use crate::linalg::{Cholesky, Matrix};

/// Ridge added to the normal matrix when it is not positive definite.
pub const PROJECTION_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedScores {
    /// `L x n_new`.
    pub values: Matrix,
    pub sample_ids: Vec<String>,
    /// Fraction of model variables found in the new dataset.
    pub coverage: f64,
    pub matched: usize,
    pub warnings: Vec<String>,
}

/// Score prior precision implied by the fitted model's base measure.
pub fn default_precision(post: &FactorPosterior) -> Vec<f64> {
    post.spec.base_var().iter().map(|v| 1.0 / v).collect()
}

/// `(A' Psi^-1 A + V^-1)^-1 A' Psi^-1 (x - mu)` over the matched variables.
///
/// With `controls_new`, the control columns enter through their known scores;
/// without them they are dropped. `score_precision` is the diagonal of `V^-1`;
/// zeros give the generalized least squares estimate.
pub fn project_factors(
    post: &FactorPosterior,
    ds_new: &ExpressionDataset,
    controls_new: Option<&Matrix>,
    score_precision: &[f64],
) -> Result<ProjectedScores> {
    let (k, l) = (post.k(), post.l());
    let n = ds_new.n_samples();
    if score_precision.len() != l {
        return Err(Error::Shape(format!("{} precisions for {l} factors", score_precision.len())));
    }
    if let Some(c) = controls_new {
        if c.rows() != k || c.cols() != n {
            return Err(Error::Shape(format!("controls are {}x{}, expected {k}x{n}", c.rows(), c.cols())));
        }
    }
    let mut warnings = Vec::new();
    if controls_new.is_none() && k > 0 {
        warnings.push(format!("{k} control columns dropped"));
    }
    let index = ds_new.variable_index();
    let matched: Vec<(usize, usize)> =
        post.variable_ids.iter().enumerate().filter_map(|(g, id)| index.get(id.as_str()).map(|&r| (g, r))).collect();
    if matched.is_empty() {
        return Err(Error::Coverage);
    }
    let a = &post.loading_overall_mean;
    let mut normal = Matrix::zeros(l, l);
    for &(g, _) in &matched {
        let w = 1.0 / post.noise_var_mean[g];
        let row = &a.row(g)[k..];
        for r in 0..l {
            for c in 0..l {
                normal[(r, c)] += w * row[r] * row[c];
            }
        }
    }
    for f in 0..l {
        normal[(f, f)] += score_precision[f];
    }
    let chol = match Cholesky::new(&normal) {
        Ok(c) => c,
        Err(_) => {
            warnings.push(format!("normal matrix singular; ridge {PROJECTION_RIDGE} applied"));
            for f in 0..l {
                normal[(f, f)] += PROJECTION_RIDGE;
            }
            Cholesky::new(&normal)?
        }
    };
    let mut values = Matrix::zeros(l, n);
    let mut rhs = vec![0.0; l];
    for i in 0..n {
        rhs.iter_mut().for_each(|v| *v = 0.0);
        for &(g, r) in &matched {
            let row = a.row(g);
            let mut resid = ds_new.values()[(r, i)] - post.intercept_mean[g];
            if let Some(c) = controls_new {
                for j in 0..k {
                    resid -= row[j] * c[(j, i)];
                }
            }
            let w = resid / post.noise_var_mean[g];
            for f in 0..l {
                rhs[f] += row[k + f] * w;
            }
        }
        let lam = chol.solve(&rhs);
        for f in 0..l {
            values[(f, i)] = lam[f];
        }
    }
    Ok(ProjectedScores {
        values,
        sample_ids: ds_new.sample_ids().to_vec(),
        coverage: matched.len() as f64 / post.variable_ids.len() as f64,
        matched: matched.len(),
        warnings,
    })
}
