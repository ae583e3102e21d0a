//! Sparse multivariate regression `X = mu 1 + B H + N` with point-mass
//! mixture priors on every coefficient, fitted by Gibbs sampling.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::{DesignMatrix, ExpressionDataset};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::math::{ln, log_sigmoid, mean, powf, sample_variance, sigmoid};
use crate::rng::{self, SeededRng};

/// Prior on the per-effect inclusion base rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InclusionPrior {
    Beta { shape1: f64, shape2: f64 },
    Fixed { rate: f64 },
}

impl InclusionPrior {
    pub(crate) fn initial(&self) -> f64 {
        match *self {
            InclusionPrior::Beta { shape1, shape2 } => shape1 / (shape1 + shape2),
            InclusionPrior::Fixed { rate } => rate,
        }
    }

    pub(crate) fn draw(&self, rng: &mut SeededRng, included: usize, eligible: usize) -> f64 {
        match *self {
            InclusionPrior::Beta { shape1, shape2 } => {
                let excluded = eligible.saturating_sub(included);
                rng::beta(rng, shape1 + included as f64, shape2 + excluded as f64).clamp(1e-300, 1.0 - 1e-16)
            }
            InclusionPrior::Fixed { rate } => rate,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            InclusionPrior::Beta { shape1, shape2 } if shape1 > 0.0 && shape2 > 0.0 => Ok(()),
            InclusionPrior::Fixed { rate } if rate > 0.0 && rate < 1.0 => Ok(()),
            other => Err(Error::Config(format!("invalid inclusion prior {other:?}"))),
        }
    }
}

/// Inverse-gamma prior on a variance, or a known value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VariancePrior {
    InverseGamma { shape: f64, scale: f64 },
    Fixed { value: f64 },
}

impl VariancePrior {
    pub(crate) fn initial(&self) -> f64 {
        match *self {
            VariancePrior::InverseGamma { shape, scale } if shape > 1.0 => scale / (shape - 1.0),
            VariancePrior::InverseGamma { scale, .. } => scale,
            VariancePrior::Fixed { value } => value,
        }
    }

    /// Conditional draw given `count` normal terms with sum of squares `ss`.
    pub(crate) fn draw(&self, rng: &mut SeededRng, count: usize, ss: f64) -> f64 {
        match *self {
            VariancePrior::InverseGamma { shape, scale } => {
                rng::inv_gamma(rng, shape + 0.5 * count as f64, scale + 0.5 * ss).max(1e-300)
            }
            VariancePrior::Fixed { value } => value,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            VariancePrior::InverseGamma { shape, scale } if shape > 0.0 && scale > 0.0 => Ok(()),
            VariancePrior::Fixed { value } if value > 0.0 => Ok(()),
            other => Err(Error::Config(format!("invalid variance prior {other:?}"))),
        }
    }
}

/// Normal prior on a row intercept; `mean = None` centres it on the row's sample mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterceptPrior {
    pub mean: Option<f64>,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseRegressionPrior {
    pub inclusion: InclusionPrior,
    pub slab_variance: VariancePrior,
    pub noise: VariancePrior,
    pub intercept: InterceptPrior,
}

impl Default for SparseRegressionPrior {
    fn default() -> Self {
        Self {
            inclusion: InclusionPrior::Beta { shape1: 1.0, shape2: 99.0 },
            slab_variance: VariancePrior::InverseGamma { shape: 2.0, scale: 1.0 },
            noise: VariancePrior::InverseGamma { shape: 2.0, scale: 0.2 },
            intercept: InterceptPrior { mean: None, variance: 100.0 },
        }
    }
}

impl SparseRegressionPrior {
    pub fn validate(&self) -> Result<()> {
        self.inclusion.validate()?;
        self.slab_variance.validate()?;
        self.noise.validate()?;
        if !(self.intercept.variance > 0.0) {
            return Err(Error::Config("intercept prior variance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burnin: usize,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self { iterations: 5000, burnin: 2000, seed: 1 }
    }
}

impl McmcConfig {
    pub fn new(iterations: usize, burnin: usize, seed: u64) -> Self {
        Self { iterations, burnin, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burnin {
            return Err(Error::Config(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burnin
            )));
        }
        Ok(())
    }

    pub fn retained(&self) -> usize {
        self.iterations - self.burnin
    }
}

/// Slab-conditional moments and the log Bayes factor of slab versus spike for
/// one coefficient with regressor `h` against partial residual `r`.
///
/// `ss = h'h`, `cross = h'r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabConditional {
    pub mean: f64,
    pub var: f64,
    pub log_bayes_factor: f64,
}

pub fn slab_conditional(ss: f64, cross: f64, noise_var: f64, slab_var: f64) -> SlabConditional {
    let precision = ss / noise_var + 1.0 / slab_var;
    let var = 1.0 / precision;
    let mean = var * cross / noise_var;
    let log_bayes_factor = 0.5 * ln(var / slab_var) + 0.5 * mean * mean / var;
    SlabConditional { mean, var, log_bayes_factor }
}

/// Conditional probability that the coefficient is nonzero.
pub fn inclusion_probability(prior_rate: f64, ss: f64, cross: f64, noise_var: f64, slab_var: f64) -> f64 {
    if ss <= 0.0 {
        return prior_rate;
    }
    let c = slab_conditional(ss, cross, noise_var, slab_var);
    sigmoid(c.log_bayes_factor + ln(prior_rate) - ln(1.0 - prior_rate))
}

/// Log-odds form, useful when rates are extreme.
pub fn inclusion_log_odds(prior_rate: f64, ss: f64, cross: f64, noise_var: f64, slab_var: f64) -> f64 {
    let c = slab_conditional(ss, cross, noise_var, slab_var);
    c.log_bayes_factor + ln(prior_rate) - ln(1.0 - prior_rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McmcMeta {
    pub iterations: usize,
    pub burnin: usize,
    pub seed: u64,
}

impl From<McmcConfig> for McmcMeta {
    fn from(c: McmcConfig) -> Self {
        Self { iterations: c.iterations, burnin: c.burnin, seed: c.seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseRegressionPosterior {
    pub variable_ids: Vec<String>,
    pub effect_names: Vec<String>,
    /// `Pr(beta != 0 | X)`, variables x effects.
    pub inclusion_prob: Matrix,
    /// `E(beta | beta != 0, X)`; zero where the coefficient was never drawn nonzero.
    pub effect_mean: Matrix,
    pub noise_var_mean: Vec<f64>,
    pub intercept_mean: Vec<f64>,
    pub inclusion_rate_mean: Vec<f64>,
    pub slab_var_mean: Vec<f64>,
    pub prior: SparseRegressionPrior,
    pub mcmc_meta: McmcMeta,
}

/// Per-coefficient restriction used by the factor model's founder rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Constraint {
    Free,
    Zero,
    Positive,
}

/// Single-row sparse regression of `x` on the rows of `design`.
///
/// Shared by the multivariate fit (one instance per variable) and by
/// out-of-model imputation in the factor search.
#[derive(Debug, Clone)]
pub(crate) struct RowSampler<'a> {
    x: &'a [f64],
    design: &'a Matrix,
    ss: &'a [f64],
    prior_mean: f64,
    prior_var: f64,
    pub mu: f64,
    pub beta: Vec<f64>,
    pub psi: f64,
    resid: Vec<f64>,
}

impl<'a> RowSampler<'a> {
    pub fn new(x: &'a [f64], design: &'a Matrix, ss: &'a [f64], intercept: InterceptPrior, psi0: f64) -> Self {
        let m = mean(x);
        let mut s = Self {
            x,
            design,
            ss,
            prior_mean: intercept.mean.unwrap_or(m),
            prior_var: intercept.variance,
            mu: m,
            beta: vec![0.0; design.rows()],
            psi: psi0,
            resid: x.iter().map(|v| v - m).collect(),
        };
        s.refresh_residual();
        s
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_state(
        x: &'a [f64],
        design: &'a Matrix,
        ss: &'a [f64],
        intercept: InterceptPrior,
        mu: f64,
        beta: Vec<f64>,
        psi: f64,
    ) -> Self {
        let mut s = Self {
            x,
            design,
            ss,
            prior_mean: intercept.mean.unwrap_or_else(|| mean(x)),
            prior_var: intercept.variance,
            mu,
            beta,
            psi,
            resid: vec![0.0; x.len()],
        };
        s.refresh_residual();
        s
    }

    fn refresh_residual(&mut self) {
        for (i, r) in self.resid.iter_mut().enumerate() {
            *r = self.x[i] - self.mu;
        }
        for (k, &b) in self.beta.iter().enumerate() {
            if b != 0.0 {
                for (r, &h) in self.resid.iter_mut().zip(self.design.row(k)) {
                    *r -= b * h;
                }
            }
        }
    }

    pub fn update_intercept(&mut self, rng: &mut SeededRng) {
        let n = self.x.len() as f64;
        let partial: f64 = self.resid.iter().sum::<f64>() + n * self.mu;
        let var = 1.0 / (n / self.psi + 1.0 / self.prior_var);
        let m = var * (partial / self.psi + self.prior_mean / self.prior_var);
        let new_mu = rng::normal(rng, m, var);
        let delta = new_mu - self.mu;
        self.resid.iter_mut().for_each(|r| *r -= delta);
        self.mu = new_mu;
    }

    /// One pass over coefficients; writes conditional inclusion probabilities into `probs`.
    pub fn update_coefficients(
        &mut self,
        rng: &mut SeededRng,
        rates: &[f64],
        slab_vars: &[f64],
        probs: &mut [f64],
        constraints: Option<&[Constraint]>,
    ) {
        for k in 0..self.beta.len() {
            let rule = constraints.map_or(Constraint::Free, |c| c[k]);
            let h = self.design.row(k);
            let old = self.beta[k];
            if old != 0.0 {
                for (r, &hk) in self.resid.iter_mut().zip(h) {
                    *r += old * hk;
                }
            }
            let ss = self.ss[k];
            if rule == Constraint::Zero || (ss <= 0.0 && rule == Constraint::Free) {
                self.beta[k] = 0.0;
                probs[k] = 0.0;
                continue;
            }
            let cross = dot(h, &self.resid);
            let c = slab_conditional(ss, cross, self.psi, slab_vars[k]);
            let new = if rule == Constraint::Positive {
                probs[k] = 1.0;
                rng::positive_normal(rng, c.mean, c.var)
            } else {
                let log_odds = c.log_bayes_factor + ln(rates[k]) - ln(1.0 - rates[k]);
                probs[k] = sigmoid(log_odds);
                let u: f64 = rng::open_unit(rng);
                if ln(u) < log_sigmoid(log_odds) {
                    rng::normal(rng, c.mean, c.var)
                } else {
                    0.0
                }
            };
            if new != 0.0 {
                for (r, &hk) in self.resid.iter_mut().zip(h) {
                    *r -= new * hk;
                }
            }
            self.beta[k] = new;
        }
    }

    pub fn update_noise(&mut self, rng: &mut SeededRng, prior: &VariancePrior) {
        let ss: f64 = self.resid.iter().map(|r| r * r).sum();
        self.psi = prior.draw(rng, self.x.len(), ss);
    }

    pub fn is_finite(&self) -> bool {
        self.mu.is_finite() && self.psi.is_finite() && self.psi > 0.0 && self.beta.iter().all(|b| b.is_finite())
    }
}

pub(crate) fn row_sums_of_squares(design: &Matrix) -> Vec<f64> {
    (0..design.rows()).map(|k| dot(design.row(k), design.row(k))).collect()
}

pub(crate) fn initial_noise(x: &[f64], prior: &VariancePrior) -> f64 {
    match prior {
        VariancePrior::Fixed { value } => *value,
        _ => {
            let v = sample_variance(x);
            if v > 0.0 {
                v
            } else {
                prior.initial()
            }
        }
    }
}

/// Fits the sparse regression by Gibbs sampling.
pub fn fit_sparse_regression(
    ds: &ExpressionDataset,
    design: &DesignMatrix,
    prior: &SparseRegressionPrior,
    mcmc: &McmcConfig,
) -> Result<SparseRegressionPosterior> {
    prior.validate()?;
    mcmc.validate()?;
    if design.n_samples() != ds.n_samples() {
        return Err(Error::Shape(format!("design has {} samples, dataset has {}", design.n_samples(), ds.n_samples())));
    }
    let (p, m) = (ds.n_variables(), design.n_effects());
    let h = design.values();
    let ss = row_sums_of_squares(h);
    let mut rng = rng::seeded(mcmc.seed);

    let mut rows: Vec<RowSampler<'_>> = (0..p)
        .map(|g| {
            let x = ds.row(g);
            RowSampler::new(x, h, &ss, prior.intercept, initial_noise(x, &prior.noise))
        })
        .collect();
    let mut rates = vec![prior.inclusion.initial(); m];
    let mut slab = vec![prior.slab_variance.initial(); m];

    let mut prob_sum = Matrix::zeros(p, m);
    let mut beta_sum = Matrix::zeros(p, m);
    let mut nz_count = Matrix::zeros(p, m);
    let mut psi_sum = vec![0.0; p];
    let mut mu_sum = vec![0.0; p];
    let mut rate_sum = vec![0.0; m];
    let mut slab_sum = vec![0.0; m];
    let mut probs = vec![0.0; m];

    for sweep in 0..mcmc.iterations {
        let keep = sweep >= mcmc.burnin;
        for (g, row) in rows.iter_mut().enumerate() {
            row.update_intercept(&mut rng);
            row.update_coefficients(&mut rng, &rates, &slab, &mut probs, None);
            row.update_noise(&mut rng, &prior.noise);
            if !row.is_finite() {
                return Err(Error::Numeric { sweep });
            }
            if keep {
                for k in 0..m {
                    prob_sum[(g, k)] += probs[k];
                    if row.beta[k] != 0.0 {
                        beta_sum[(g, k)] += row.beta[k];
                        nz_count[(g, k)] += 1.0;
                    }
                }
                psi_sum[g] += row.psi;
                mu_sum[g] += row.mu;
            }
        }
        for k in 0..m {
            let mut nz = 0usize;
            let mut sq = 0.0;
            for row in &rows {
                let b = row.beta[k];
                if b != 0.0 {
                    nz += 1;
                    sq += b * b;
                }
            }
            slab[k] = prior.slab_variance.draw(&mut rng, nz, sq);
            let eligible = if ss[k] > 0.0 { p } else { 0 };
            rates[k] = prior.inclusion.draw(&mut rng, nz, eligible);
            if !slab[k].is_finite() || !rates[k].is_finite() {
                return Err(Error::Numeric { sweep });
            }
            if keep {
                rate_sum[k] += rates[k];
                slab_sum[k] += slab[k];
            }
        }
    }

    let kept = mcmc.retained() as f64;
    let inclusion_prob = prob_sum.map(|v| (v / kept).clamp(0.0, 1.0));
    let effect_mean = Matrix::from_fn(p, m, |g, k| {
        let c = nz_count[(g, k)];
        if c > 0.0 {
            beta_sum[(g, k)] / c
        } else {
            0.0
        }
    });
    Ok(SparseRegressionPosterior {
        variable_ids: ds.variable_ids().to_vec(),
        effect_names: design.effect_names().to_vec(),
        inclusion_prob,
        effect_mean,
        noise_var_mean: psi_sum.iter().map(|v| v / kept).collect(),
        intercept_mean: mu_sum.iter().map(|v| v / kept).collect(),
        inclusion_rate_mean: rate_sum.iter().map(|v| v / kept).collect(),
        slab_var_mean: slab_sum.iter().map(|v| v / kept).collect(),
        prior: *prior,
        mcmc_meta: (*mcmc).into(),
    })
}

/// Boolean variables x effects matrix of strict threshold exceedances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skeleton {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl Skeleton {
    pub fn from_probabilities(probs: &Matrix, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::Invalid(format!("threshold {threshold} outside (0, 1)")));
        }
        Ok(Self {
            rows: probs.rows(),
            cols: probs.cols(),
            data: probs.as_slice().iter().map(|&p| p > threshold).collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.cols + j]
    }

    pub fn column_counts(&self) -> Vec<usize> {
        (0..self.cols).map(|j| (0..self.rows).filter(|&i| self.get(i, j)).count()).collect()
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

pub fn signature_skeleton(post: &SparseRegressionPosterior, threshold: f64) -> Result<Skeleton> {
    Skeleton::from_probabilities(&post.inclusion_prob, threshold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSparsity {
    pub effect: String,
    pub included_fraction: f64,
    pub fold_change_min: Option<f64>,
    pub fold_change_mean: Option<f64>,
    pub fold_change_max: Option<f64>,
}

/// Per-effect share of included variables and the `2^|beta*|` fold changes among them.
pub fn sparsity_summary(post: &SparseRegressionPosterior, threshold: f64) -> Result<Vec<EffectSparsity>> {
    let sk = signature_skeleton(post, threshold)?;
    let p = sk.rows();
    Ok((0..sk.cols())
        .map(|k| {
            let folds: Vec<f64> =
                (0..p).filter(|&g| sk.get(g, k)).map(|g| powf(2.0, post.effect_mean[(g, k)].abs())).collect();
            let (lo, hi, avg) = if folds.is_empty() {
                (None, None, None)
            } else {
                (
                    Some(folds.iter().copied().fold(f64::INFINITY, f64::min)),
                    Some(folds.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
                    Some(mean(&folds)),
                )
            };
            EffectSparsity {
                effect: post.effect_names[k].clone(),
                included_fraction: if p == 0 { 0.0 } else { folds.len() as f64 / p as f64 },
                fold_change_min: lo,
                fold_change_mean: avg,
                fold_change_max: hi,
            }
        })
        .collect())
}
