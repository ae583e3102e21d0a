//! Targeted evolutionary growth of a factor model.
//!
//! Each iteration fits the current model, imputes inclusion probabilities for
//! every outside variable and adds the strongest candidates. A new factor is
//! added when the residuals of the modeled variables still share structure.
//! The expansion and factor-addition controls below are a reconstruction;
//! their defaults are declared rather than published values.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dataset::ExpressionDataset;
use crate::error::{Error, Result};
use crate::factor::{fit_factor_model, impute_external_inclusion, FactorModelSpec, FactorPosterior, ImputeConfig};
use crate::linalg::{top_singular, Matrix};
use crate::math::{correlation, mean};
use crate::regression::McmcConfig;
use crate::rng::derive_seed;

/// Absolute residual correlation that counts as shared structure.
pub const RESIDUAL_CORRELATION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub max_variables: usize,
    pub max_factors: usize,
    pub genes_per_iteration: usize,
    pub inclusion_threshold: f64,
    /// Minimum fraction of modeled variables flagged by the residual screen.
    pub factor_add_threshold: f64,
    pub max_iterations: usize,
    pub impute: ImputeConfig,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            max_variables: 500,
            max_factors: 30,
            genes_per_iteration: 25,
            inclusion_threshold: 0.75,
            factor_add_threshold: 0.15,
            max_iterations: 40,
            impute: ImputeConfig::default(),
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self, n_founders: usize) -> Result<()> {
        if n_founders == 0 {
            return Err(Error::Config("at least one founder is required".into()));
        }
        if self.max_variables < n_founders {
            return Err(Error::Config(format!("max_variables {} is below {n_founders} founders", self.max_variables)));
        }
        if self.max_factors < n_founders {
            return Err(Error::Config(format!("max_factors {} is below {n_founders} founders", self.max_factors)));
        }
        for (name, v) in
            [("inclusion_threshold", self.inclusion_threshold), ("factor_add_threshold", self.factor_add_threshold)]
        {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if self.genes_per_iteration == 0 || self.max_iterations == 0 {
            return Err(Error::Config("genes_per_iteration and max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    NoAdditions,
    SizeLimit,
    FactorLimit,
    IterationLimit,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::NoAdditions => "no_additions",
            StopReason::SizeLimit => "size_limit",
            StopReason::FactorLimit => "factor_limit",
            StopReason::IterationLimit => "iteration_limit",
        }
    }
}

/// One fitted model and the additions chosen from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionStep {
    pub iteration: usize,
    pub seed: u64,
    pub model_size: usize,
    pub factor_count: usize,
    pub variables_added: Vec<String>,
    pub factor_founder_added: Option<String>,
    /// Fraction of modeled variables flagged by the residual screen.
    pub residual_flagged: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub steps: Vec<EvolutionStep>,
    pub stop_reason: StopReason,
    pub founders: Vec<String>,
    pub variables: Vec<String>,
}

struct Additions {
    genes: Vec<String>,
    founder: Option<String>,
    flagged: f64,
    factor_blocked: bool,
}

/// Grows the model from `founders` until no candidate passes or a limit is hit.
pub fn evolve(
    ds: &ExpressionDataset,
    controls: &Matrix,
    founders: &[String],
    spec: &FactorModelSpec,
    cfg: &EvolutionConfig,
    mcmc: &McmcConfig,
) -> Result<(FactorPosterior, EvolutionTrace)> {
    cfg.validate(founders.len())?;
    mcmc.validate()?;
    let index = ds.variable_index();
    for f in founders {
        if !index.contains_key(f.as_str()) {
            return Err(Error::Config(format!("founder `{f}` not in dataset")));
        }
    }
    let mut founders = founders.to_vec();
    let mut modeled = founders.clone();
    let mut steps = Vec::new();
    let mut iteration = 0;
    loop {
        let seed = derive_seed(mcmc.seed, iteration as u64);
        let sub = ds.select_ids(&modeled)?;
        let spec_now = spec.with_factors(founders.len());
        let post = fit_factor_model(&sub, controls, &spec_now, &founders, &McmcConfig { seed, ..*mcmc })?;
        let mut step = EvolutionStep {
            iteration,
            seed,
            model_size: modeled.len(),
            factor_count: founders.len(),
            variables_added: Vec::new(),
            factor_founder_added: None,
            residual_flagged: 0.0,
        };
        let stop = if modeled.len() >= cfg.max_variables {
            Some(StopReason::SizeLimit)
        } else if iteration + 1 >= cfg.max_iterations {
            Some(StopReason::IterationLimit)
        } else {
            None
        };
        if let Some(stop_reason) = stop {
            steps.push(step);
            return Ok((post, EvolutionTrace { steps, stop_reason, founders, variables: modeled }));
        }
        let impute = ImputeConfig { seed: derive_seed(cfg.impute.seed, iteration as u64), ..cfg.impute };
        let add = propose(ds, &post, &modeled, &founders, cfg, &impute)?;
        step.residual_flagged = add.flagged;
        if add.genes.is_empty() && add.founder.is_none() {
            steps.push(step);
            let stop_reason = if add.factor_blocked { StopReason::FactorLimit } else { StopReason::NoAdditions };
            return Ok((post, EvolutionTrace { steps, stop_reason, founders, variables: modeled }));
        }
        modeled.extend(add.genes.iter().cloned());
        if let Some(f) = &add.founder {
            founders.push(f.clone());
        }
        step.variables_added = add.genes;
        step.factor_founder_added = add.founder;
        steps.push(step);
        iteration += 1;
    }
}

fn propose(
    ds: &ExpressionDataset,
    post: &FactorPosterior,
    modeled: &[String],
    founders: &[String],
    cfg: &EvolutionConfig,
    impute: &ImputeConfig,
) -> Result<Additions> {
    let inside: BTreeSet<&str> = modeled.iter().map(String::as_str).collect();
    let outside: Vec<String> = ds
        .variable_ids()
        .iter()
        .zip(ds.control_flags())
        .filter(|(id, &ctrl)| !ctrl && !inside.contains(id.as_str()))
        .map(|(id, _)| id.clone())
        .collect();
    let probs = impute_external_inclusion(post, ds, &outside, impute)?;
    let k = post.k();
    let mut ranked: Vec<(f64, &String)> = outside
        .iter()
        .enumerate()
        .map(|(r, id)| (probs.row(r)[k..].iter().copied().fold(0.0, f64::max), id))
        .filter(|(p, _)| *p > cfg.inclusion_threshold)
        .collect();
    ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then_with(|| a.1.cmp(b.1)));
    let room = cfg.max_variables - modeled.len();
    let genes: Vec<String> =
        ranked.into_iter().take(cfg.genes_per_iteration.min(room)).map(|(_, id)| id.clone()).collect();

    let residuals = residual_matrix(post, ds)?;
    let flagged = residual_flagged_fraction(&residuals);
    let mut founder = None;
    let mut factor_blocked = false;
    if flagged > cfg.factor_add_threshold {
        if founders.len() >= cfg.max_factors {
            factor_blocked = true;
        } else {
            founder = rank1_founder(&residuals, &post.variable_ids, founders);
        }
    }
    Ok(Additions { genes, founder, flagged, factor_blocked })
}

/// Data minus fitted mean for the modeled variables, in model order.
pub fn residual_matrix(post: &FactorPosterior, ds: &ExpressionDataset) -> Result<Matrix> {
    let x = ds.select_ids(&post.variable_ids)?;
    let x = crate::factor::align_samples(&x, &post.sample_ids)?;
    let fitted = post.fitted();
    let x = x.values();
    Ok(Matrix::from_fn(x.rows(), x.cols(), |g, i| x[(g, i)] - fitted[(g, i)]))
}

/// Fraction of rows whose absolute correlation with some other row exceeds
/// [`RESIDUAL_CORRELATION`]. Constant rows are never flagged.
pub fn residual_flagged_fraction(residuals: &Matrix) -> f64 {
    let p = residuals.rows();
    if p < 2 {
        return 0.0;
    }
    let mut flagged = alloc::vec![false; p];
    for a in 0..p {
        for b in a + 1..p {
            let r = correlation(residuals.row(a), residuals.row(b));
            if r.is_finite() && r.abs() > RESIDUAL_CORRELATION {
                flagged[a] = true;
                flagged[b] = true;
            }
        }
    }
    flagged.iter().filter(|&&f| f).count() as f64 / p as f64
}

/// Non-founder with the largest sum of squares explained by the leading
/// rank-1 component of the centered residuals.
fn rank1_founder(residuals: &Matrix, ids: &[String], founders: &[String]) -> Option<String> {
    let centered =
        Matrix::from_fn(residuals.rows(), residuals.cols(), |g, i| residuals[(g, i)] - mean(residuals.row(g)));
    let (u, sv) = top_singular(&centered, 1, 300);
    if sv.is_empty() || !(sv[0] > 0.0) {
        return None;
    }
    let taken: BTreeSet<&str> = founders.iter().map(String::as_str).collect();
    (0..ids.len())
        .filter(|&g| !taken.contains(ids[g].as_str()))
        .map(|g| (u[(g, 0)] * u[(g, 0)], g))
        .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then_with(|| b.1.cmp(&a.1)))
        .map(|(_, g)| ids[g].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::numbered_ids;
    use crate::rng::{seeded, std_normal};

    #[test]
    fn config_validation() {
        let cfg = EvolutionConfig::default();
        assert_eq!(cfg.max_variables, 500);
        assert_eq!(cfg.max_factors, 30);
        assert!(cfg.validate(0).is_err());
        assert!(EvolutionConfig { max_variables: 2, ..cfg }.validate(3).is_err());
        assert!(EvolutionConfig { inclusion_threshold: 1.0, ..cfg }.validate(1).is_err());
    }

    #[test]
    fn size_limit_at_founder_count() {
        let mut rng = seeded(5);
        let x = Matrix::from_fn(10, 12, |_, _| std_normal(&mut rng));
        let ds =
            ExpressionDataset::new(x, numbered_ids("g", 10), numbered_ids("s", 12), alloc::vec![false; 10]).unwrap();
        let founders: Vec<String> = numbered_ids("g", 2);
        let cfg = EvolutionConfig { max_variables: 2, ..EvolutionConfig::default() };
        let (post, trace) = evolve(
            &ds,
            &Matrix::zeros(0, 12),
            &founders,
            &FactorModelSpec::new(0, 2),
            &cfg,
            &McmcConfig::new(20, 5, 1),
        )
        .unwrap();
        assert_eq!(trace.stop_reason, StopReason::SizeLimit);
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(post.variable_ids.len(), 2);
    }

    #[test]
    fn residual_screen() {
        let mut rng = seeded(2);
        let z: Vec<f64> = (0..40).map(|_| std_normal(&mut rng)).collect();
        let r =
            Matrix::from_fn(5, 40, |g, i| if g < 2 { z[i] + 0.1 * std_normal(&mut rng) } else { std_normal(&mut rng) });
        let f = residual_flagged_fraction(&r);
        assert!((f - 0.4).abs() < 1e-12, "{f}");
        assert_eq!(residual_flagged_fraction(&Matrix::zeros(3, 5)), 0.0);
    }
}
