//! Sparse latent factor model `X = mu 1 + A Lambda + N`.
//!
//! The first `K` rows of `Lambda` are known artefact controls. The remaining
//! `L` rows are latent scores whose per-sample vectors follow a Dirichlet
//! process with a normal base measure. Loadings carry point-mass mixture
//! priors per column. The first `L` modeled variables are founders: founder
//! `g` has no loading on latent factors after its own and a strictly positive
//! loading on its own factor.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::ExpressionDataset;
use crate::error::{Error, Result};
use crate::linalg::{dot, qr_in_place, top_singular, Cholesky, Matrix};
use crate::math::{ln, mean, sample_variance, sqrt};
use crate::regression::{
    initial_noise, row_sums_of_squares, Constraint, McmcConfig, McmcMeta, RowSampler, Skeleton, SparseRegressionPrior,
};
use crate::rng::{self, SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorModelSpec {
    pub k_controls: usize,
    pub l_factors: usize,
    pub loading_prior: SparseRegressionPrior,
    pub dp_concentration: f64,
    /// Base-measure mean; missing trailing entries are 0.
    pub dp_base_mean: Vec<f64>,
    /// Base-measure diagonal covariance; missing trailing entries are 1.
    pub dp_base_var: Vec<f64>,
}

impl FactorModelSpec {
    pub fn new(k_controls: usize, l_factors: usize) -> Self {
        Self {
            k_controls,
            l_factors,
            loading_prior: SparseRegressionPrior::default(),
            dp_concentration: 1.0,
            dp_base_mean: Vec::new(),
            dp_base_var: Vec::new(),
        }
    }

    pub fn with_factors(&self, l_factors: usize) -> Self {
        Self { l_factors, ..self.clone() }
    }

    pub fn base_mean(&self) -> Vec<f64> {
        (0..self.l_factors).map(|l| self.dp_base_mean.get(l).copied().unwrap_or(0.0)).collect()
    }

    pub fn base_var(&self) -> Vec<f64> {
        (0..self.l_factors).map(|l| self.dp_base_var.get(l).copied().unwrap_or(1.0)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.loading_prior.validate()?;
        if self.l_factors == 0 {
            return Err(Error::Config("at least one latent factor is required".into()));
        }
        if !(self.dp_concentration > 0.0) {
            return Err(Error::Config("DP concentration must be positive".into()));
        }
        if self.base_var().iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Config("DP base variances must be positive".into()));
        }
        Ok(())
    }
}

/// Whether loading `(g, j)` may be nonzero, is pinned at zero, or is a founder
/// diagonal constrained positive.
pub fn loading_constraint(g: usize, j: usize, k: usize, l: usize) -> LoadingRule {
    if g < l && j >= k {
        let f = j - k;
        if f > g {
            return LoadingRule::Forbidden;
        }
        if f == g {
            return LoadingRule::PositiveDiagonal;
        }
    }
    LoadingRule::Sparse
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadingRule {
    Sparse,
    Forbidden,
    PositiveDiagonal,
}

impl From<LoadingRule> for Constraint {
    fn from(r: LoadingRule) -> Self {
        match r {
            LoadingRule::Sparse => Constraint::Free,
            LoadingRule::Forbidden => Constraint::Zero,
            LoadingRule::PositiveDiagonal => Constraint::Positive,
        }
    }
}

#[derive(Debug, Clone)]
struct Cluster {
    size: usize,
    theta: Vec<f64>,
    /// `theta' M theta` for the current sweep's `M`.
    quad: f64,
}

/// Gibbs sampler state. Drive it with [`FactorSampler::step`].
#[derive(Debug, Clone)]
pub struct FactorSampler<'a> {
    x: &'a Matrix,
    spec: FactorModelSpec,
    k: usize,
    l: usize,
    rules: Vec<Vec<Constraint>>,
    loadings: Matrix,
    scores: Matrix,
    mu: Vec<f64>,
    psi: Vec<f64>,
    rates: Vec<f64>,
    slab: Vec<f64>,
    probs: Matrix,
    assignments: Vec<usize>,
    clusters: Vec<Cluster>,
    base_mean: Vec<f64>,
    base_var: Vec<f64>,
    rng: SeededRng,
    sweep: usize,
    pub(crate) warnings: Vec<String>,
}

impl<'a> FactorSampler<'a> {
    /// `x` is the `p x n` modeled matrix with founders in its first `L` rows.
    pub fn new(x: &'a Matrix, controls: &Matrix, spec: &FactorModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let (p, n) = (x.rows(), x.cols());
        let (k, l) = (spec.k_controls, spec.l_factors);
        if controls.rows() != k || (k > 0 && controls.cols() != n) {
            return Err(Error::Shape(format!(
                "controls are {}x{}, expected {k}x{n}",
                controls.rows(),
                controls.cols()
            )));
        }
        if p < l {
            return Err(Error::Config(format!("{p} variables cannot found {l} factors")));
        }
        if n < 2 {
            return Err(Error::InsufficientData("need at least two samples".into()));
        }
        let cols = k + l;
        let rules = (0..p).map(|g| (0..cols).map(|j| loading_constraint(g, j, k, l).into()).collect()).collect();
        let mut warnings = Vec::new();

        let mu: Vec<f64> = (0..p).map(|g| mean(x.row(g))).collect();
        let mut resid = Matrix::from_fn(p, n, |g, i| x[(g, i)] - mu[g]);
        let mut loadings = Matrix::zeros(p, cols);
        if k > 0 {
            let cct = controls.matmul(&controls.transpose())?;
            let chol = match Cholesky::new(&cct) {
                Ok(c) => c,
                Err(_) => {
                    warnings.push("artefact controls are rank deficient; ridge applied".into());
                    let mut r = cct.clone();
                    let tr = (0..k).map(|i| cct[(i, i)]).sum::<f64>() / k as f64;
                    for i in 0..k {
                        r[(i, i)] += 1e-6 * tr.max(1e-12);
                    }
                    Cholesky::new(&r)?
                }
            };
            for g in 0..p {
                let rhs = controls.mul_vec(resid.row(g));
                let coef = chol.solve(&rhs);
                for j in 0..k {
                    loadings[(g, j)] = coef[j];
                }
                let row = resid.row_mut(g);
                for j in 0..k {
                    for (r, &c) in row.iter_mut().zip(controls.row(j)) {
                        *r -= coef[j] * c;
                    }
                }
            }
        }
        let (latent_loadings, latent_scores) = initial_latent(&resid, l);
        for g in 0..p {
            for f in 0..l {
                loadings[(g, k + f)] = latent_loadings[(g, f)];
            }
        }
        let mut scores = Matrix::zeros(cols, n);
        for j in 0..k {
            scores.row_mut(j).copy_from_slice(controls.row(j));
        }
        for f in 0..l {
            scores.row_mut(k + f).copy_from_slice(latent_scores.row(f));
        }
        // remaining residual variance seeds psi
        let fitted_latent = latent_loadings.matmul(&latent_scores)?;
        for g in 0..p {
            let row = resid.row_mut(g);
            for (r, &f) in row.iter_mut().zip(fitted_latent.row(g)) {
                *r -= f;
            }
        }
        let psi: Vec<f64> = (0..p)
            .map(|g| {
                let v = sample_variance(resid.row(g));
                let floor = 0.01 * initial_noise(x.row(g), &spec.loading_prior.noise);
                v.max(floor).max(1e-8)
            })
            .collect();

        let assignments: Vec<usize> = (0..n).collect();
        let clusters = (0..n)
            .map(|i| Cluster { size: 1, theta: (0..l).map(|f| scores[(k + f, i)]).collect(), quad: 0.0 })
            .collect();
        let init_rate = spec.loading_prior.inclusion.initial();
        Ok(Self {
            x,
            k,
            l,
            rules,
            loadings,
            scores,
            mu,
            psi,
            rates: vec![init_rate; cols],
            slab: vec![spec.loading_prior.slab_variance.initial(); cols],
            probs: Matrix::zeros(p, cols),
            assignments,
            clusters,
            base_mean: spec.base_mean(),
            base_var: spec.base_var(),
            spec: spec.clone(),
            rng: rng::seeded(seed),
            sweep: 0,
            warnings,
        })
    }

    pub fn loadings(&self) -> &Matrix {
        &self.loadings
    }

    pub fn scores(&self) -> &Matrix {
        &self.scores
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.mu
    }

    pub fn noise_vars(&self) -> &[f64] {
        &self.psi
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn sweeps_done(&self) -> usize {
        self.sweep
    }

    /// Conditional inclusion probabilities from the last sweep.
    pub fn inclusion_probs(&self) -> &Matrix {
        &self.probs
    }

    pub fn inclusion_rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn slab_vars(&self) -> &[f64] {
        &self.slab
    }

    /// One full Gibbs sweep.
    pub fn step(&mut self) -> Result<()> {
        self.update_rows();
        self.update_scores()?;
        self.update_hyper();
        let sweep = self.sweep;
        if !self.loadings.is_finite()
            || !self.scores.is_finite()
            || self.psi.iter().any(|v| !v.is_finite() || *v <= 0.0)
        {
            return Err(Error::Numeric { sweep });
        }
        self.sweep += 1;
        Ok(())
    }

    fn update_rows(&mut self) {
        let (p, cols) = (self.x.rows(), self.k + self.l);
        let ss = row_sums_of_squares(&self.scores);
        let prior = self.spec.loading_prior;
        let mut probs = vec![0.0; cols];
        for g in 0..p {
            let beta = self.loadings.row(g).to_vec();
            let mut row = RowSampler::from_state(
                self.x.row(g),
                &self.scores,
                &ss,
                prior.intercept,
                self.mu[g],
                beta,
                self.psi[g],
            );
            row.update_intercept(&mut self.rng);
            row.update_coefficients(&mut self.rng, &self.rates, &self.slab, &mut probs, Some(&self.rules[g]));
            row.update_noise(&mut self.rng, &prior.noise);
            self.mu[g] = row.mu;
            self.psi[g] = row.psi;
            self.loadings.row_mut(g).copy_from_slice(&row.beta);
            self.probs.row_mut(g).copy_from_slice(&probs);
        }
    }

    fn update_scores(&mut self) -> Result<()> {
        let (p, n, k, l) = (self.x.rows(), self.x.cols(), self.k, self.l);
        // M = A_L' Psi^-1 A_L and b_i = A_L' Psi^-1 y_i
        let mut m = Matrix::zeros(l, l);
        for g in 0..p {
            let w = 1.0 / self.psi[g];
            let a = &self.loadings.row(g)[k..];
            for r in 0..l {
                if a[r] == 0.0 {
                    continue;
                }
                for c in 0..=r {
                    m[(r, c)] += w * a[r] * a[c];
                }
            }
        }
        for r in 0..l {
            for c in 0..r {
                m[(c, r)] = m[(r, c)];
            }
        }
        let mut b = Matrix::zeros(n, l);
        let mut y = vec![0.0; n];
        for g in 0..p {
            let w = 1.0 / self.psi[g];
            let arow = self.loadings.row(g);
            let xrow = self.x.row(g);
            for i in 0..n {
                let mut v = xrow[i] - self.mu[g];
                for j in 0..k {
                    v -= arow[j] * self.scores[(j, i)];
                }
                y[i] = v * w;
            }
            for f in 0..l {
                let a = arow[k + f];
                if a == 0.0 {
                    continue;
                }
                for i in 0..n {
                    b[(i, f)] += a * y[i];
                }
            }
        }
        let prior_prec: Vec<f64> = self.base_var.iter().map(|v| 1.0 / v).collect();
        let prior_shift: Vec<f64> = self.base_mean.iter().zip(&prior_prec).map(|(m0, pp)| m0 * pp).collect();
        let base_quad: f64 = self.base_mean.iter().zip(&prior_prec).map(|(m0, pp)| m0 * m0 * pp).sum();
        let log_det_base: f64 = self.base_var.iter().map(|&v| ln(v)).sum();
        let mut single = m.clone();
        for f in 0..l {
            single[(f, f)] += prior_prec[f];
        }
        let single_chol = Cholesky::new(&single)?;
        let new_const =
            ln(self.spec.dp_concentration) - 0.5 * single_chol.log_det() - 0.5 * log_det_base - 0.5 * base_quad;

        for c in self.clusters.iter_mut() {
            c.quad = quad_form(&m, &c.theta);
        }
        let mut logw = Vec::with_capacity(self.clusters.len() + 1);
        for i in 0..n {
            let bi = b.row(i).to_vec();
            let old = self.assignments[i];
            self.clusters[old].size -= 1;
            if self.clusters[old].size == 0 {
                let last = self.clusters.len() - 1;
                self.clusters.swap_remove(old);
                if old != last {
                    for a in self.assignments.iter_mut() {
                        if *a == last {
                            *a = old;
                        }
                    }
                }
            }
            let h: Vec<f64> = bi.iter().zip(&prior_shift).map(|(x, s)| x + s).collect();
            let hz = single_chol.solve_lower(&h);
            logw.clear();
            for c in &self.clusters {
                logw.push(ln(c.size as f64) + dot(&c.theta, &bi) - 0.5 * c.quad);
            }
            logw.push(new_const + 0.5 * dot(&hz, &hz));
            let pick = rng::categorical_log(&mut self.rng, &logw);
            if pick == self.clusters.len() {
                let theta = rng::mvn_from_precision(&mut self.rng, &single_chol, &h);
                let quad = quad_form(&m, &theta);
                self.clusters.push(Cluster { size: 1, theta, quad });
            } else {
                self.clusters[pick].size += 1;
            }
            self.assignments[i] = pick;
        }

        // cluster values given members
        let mut sum_b = vec![vec![0.0; l]; self.clusters.len()];
        for i in 0..n {
            let c = self.assignments[i];
            for f in 0..l {
                sum_b[c][f] += b[(i, f)];
            }
        }
        for (c, cl) in self.clusters.iter_mut().enumerate() {
            let mut prec = m.clone();
            prec.scale(cl.size as f64);
            for f in 0..l {
                prec[(f, f)] += prior_prec[f];
            }
            let chol = Cholesky::new(&prec)?;
            let h: Vec<f64> = sum_b[c].iter().zip(&prior_shift).map(|(x, s)| x + s).collect();
            cl.theta = rng::mvn_from_precision(&mut self.rng, &chol, &h);
        }
        for i in 0..n {
            let theta = &self.clusters[self.assignments[i]].theta;
            for f in 0..l {
                self.scores[(k + f, i)] = theta[f];
            }
        }
        Ok(())
    }

    fn update_hyper(&mut self) {
        let (p, cols) = (self.x.rows(), self.k + self.l);
        let prior = self.spec.loading_prior;
        for j in 0..cols {
            let mut nz_free = 0;
            let mut eligible = 0;
            let mut nz = 0;
            let mut sq = 0.0;
            for g in 0..p {
                let a = self.loadings[(g, j)];
                let rule = self.rules[g][j];
                if a != 0.0 {
                    nz += 1;
                    sq += a * a;
                }
                if rule == Constraint::Free {
                    eligible += 1;
                    if a != 0.0 {
                        nz_free += 1;
                    }
                }
            }
            self.slab[j] = prior.slab_variance.draw(&mut self.rng, nz, sq);
            self.rates[j] = prior.inclusion.draw(&mut self.rng, nz_free, eligible);
        }
    }
}

fn quad_form(m: &Matrix, v: &[f64]) -> f64 {
    dot(v, &m.mul_vec(v))
}

/// Leading-subspace start rotated so the founder block is lower triangular
/// with a positive diagonal. Returns `(p x L loadings, L x n scores)`.
fn initial_latent(resid: &Matrix, l: usize) -> (Matrix, Matrix) {
    let (p, n) = (resid.rows(), resid.cols());
    let (u, sv) = top_singular(resid, l, 200);
    let r = u.cols();
    let mut loadings = Matrix::zeros(p, l);
    let mut scores = Matrix::zeros(l, n);
    let ut = u.transpose();
    let proj = ut.matmul(resid).expect("conformable");
    for f in 0..r {
        let sd = sqrt(sample_variance(proj.row(f)));
        if !(sd > 1e-12 * sv[0].max(1e-300)) {
            continue;
        }
        for i in 0..n {
            scores[(f, i)] = proj[(f, i)] / sd;
        }
        for g in 0..p {
            loadings[(g, f)] = u[(g, f)] * sd;
        }
    }
    // founder block F = A[0..l, :]; with F' = Q R, A Q has lower-triangular F Q = R'
    let mut ft = Matrix::from_fn(l, l, |i, j| loadings[(j, i)]);
    let rfac = qr_in_place(&mut ft);
    let full_rank = (0..l).all(|i| rfac[(i, i)] > 1e-10 * rfac[(0, 0)].abs().max(1e-300));
    if full_rank {
        loadings = loadings.matmul(&ft).expect("conformable");
        scores = ft.transpose().matmul(&scores).expect("conformable");
    } else {
        // anchor each factor on its founder's standardized residual
        loadings = Matrix::zeros(p, l);
        for f in 0..l {
            let row = resid.row(f);
            let sd = sqrt(sample_variance(row));
            let sd = if sd > 0.0 { sd } else { 1.0 };
            for i in 0..n {
                scores[(f, i)] = row[i] / sd;
            }
            loadings[(f, f)] = sd;
        }
    }
    for f in 0..l {
        if loadings[(f, f)] < 0.0 {
            for g in 0..p {
                loadings[(g, f)] = -loadings[(g, f)];
            }
            for i in 0..n {
                scores[(f, i)] = -scores[(f, i)];
            }
        }
        if !(loadings[(f, f)] > 0.0) {
            loadings[(f, f)] = 1e-3;
        }
        for later in f + 1..l {
            loadings[(f, later)] = 0.0;
        }
    }
    (loadings, scores)
}

/// Posterior summaries of a factor model fit. Variables are in model order
/// (founders first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorPosterior {
    pub variable_ids: Vec<String>,
    pub sample_ids: Vec<String>,
    pub founders: Vec<String>,
    pub spec: FactorModelSpec,
    pub controls: Matrix,
    /// `Pr(alpha != 0 | X)`, `p x (K+L)`.
    pub loading_incl_prob: Matrix,
    /// `E(alpha | alpha != 0, X)`.
    pub loading_mean: Matrix,
    /// Unconditional `E(alpha | X)`.
    pub loading_overall_mean: Matrix,
    /// `(K+L) x n`; the first `K` rows are the controls.
    pub score_mean: Matrix,
    pub noise_var_mean: Vec<f64>,
    pub intercept_mean: Vec<f64>,
    pub inclusion_rate_mean: Vec<f64>,
    pub slab_var_mean: Vec<f64>,
    pub mean_clusters: f64,
    pub mcmc_meta: McmcMeta,
    pub warnings: Vec<String>,
}

impl FactorPosterior {
    pub fn k(&self) -> usize {
        self.spec.k_controls
    }

    pub fn l(&self) -> usize {
        self.spec.l_factors
    }

    /// `mu* + E(A) Lambda*` for the modeled variables.
    pub fn fitted(&self) -> Matrix {
        let mut f = self.loading_overall_mean.matmul(&self.score_mean).expect("conformable");
        for g in 0..f.rows() {
            let m = self.intercept_mean[g];
            f.row_mut(g).iter_mut().for_each(|v| *v += m);
        }
        f
    }
}

/// Orders `ds` with founders first, then the remaining variables in their original order.
pub fn founder_order(ds: &ExpressionDataset, founders: &[String]) -> Result<Vec<usize>> {
    let index = ds.variable_index();
    let mut taken = vec![false; ds.n_variables()];
    let mut order = Vec::with_capacity(ds.n_variables());
    for f in founders {
        let &i = index.get(f.as_str()).ok_or_else(|| Error::Config(format!("founder `{f}` not in dataset")))?;
        if taken[i] {
            return Err(Error::Config(format!("founder `{f}` listed twice")));
        }
        taken[i] = true;
        order.push(i);
    }
    order.extend((0..ds.n_variables()).filter(|&i| !taken[i]));
    Ok(order)
}

/// Fits the factor model on every variable of `ds`, with `founders` placed first.
pub fn fit_factor_model(
    ds: &ExpressionDataset,
    controls: &Matrix,
    spec: &FactorModelSpec,
    founders: &[String],
    mcmc: &McmcConfig,
) -> Result<FactorPosterior> {
    mcmc.validate()?;
    if founders.len() != spec.l_factors {
        return Err(Error::Config(format!("{} founders for {} latent factors", founders.len(), spec.l_factors)));
    }
    let order = founder_order(ds, founders)?;
    let model = ds.select_rows(&order);
    let x = model.values();
    let mut sampler = FactorSampler::new(x, controls, spec, mcmc.seed)?;
    let (p, n) = (x.rows(), x.cols());
    let cols = spec.k_controls + spec.l_factors;
    let mut prob_sum = Matrix::zeros(p, cols);
    let mut nz_sum = Matrix::zeros(p, cols);
    let mut nz_count = Matrix::zeros(p, cols);
    let mut all_sum = Matrix::zeros(p, cols);
    let mut score_sum = Matrix::zeros(cols, n);
    let mut psi_sum = vec![0.0; p];
    let mut mu_sum = vec![0.0; p];
    let mut rate_sum = vec![0.0; cols];
    let mut slab_sum = vec![0.0; cols];
    let mut cluster_sum = 0.0;
    for s in 0..mcmc.iterations {
        sampler.step()?;
        if s < mcmc.burnin {
            continue;
        }
        for g in 0..p {
            for j in 0..cols {
                let a = sampler.loadings[(g, j)];
                prob_sum[(g, j)] += sampler.probs[(g, j)];
                all_sum[(g, j)] += a;
                if a != 0.0 {
                    nz_sum[(g, j)] += a;
                    nz_count[(g, j)] += 1.0;
                }
            }
            psi_sum[g] += sampler.psi[g];
            mu_sum[g] += sampler.mu[g];
        }
        for j in 0..cols {
            for i in 0..n {
                score_sum[(j, i)] += sampler.scores[(j, i)];
            }
            rate_sum[j] += sampler.rates[j];
            slab_sum[j] += sampler.slab[j];
        }
        cluster_sum += sampler.clusters.len() as f64;
    }
    let kept = mcmc.retained() as f64;
    let mut score_mean = score_sum.map(|v| v / kept);
    for j in 0..spec.k_controls {
        score_mean.row_mut(j).copy_from_slice(controls.row(j));
    }
    Ok(FactorPosterior {
        variable_ids: model.variable_ids().to_vec(),
        sample_ids: model.sample_ids().to_vec(),
        founders: founders.to_vec(),
        spec: spec.clone(),
        controls: controls.clone(),
        loading_incl_prob: prob_sum.map(|v| (v / kept).clamp(0.0, 1.0)),
        loading_mean: Matrix::from_fn(p, cols, |g, j| {
            let c = nz_count[(g, j)];
            if c > 0.0 {
                nz_sum[(g, j)] / c
            } else {
                0.0
            }
        }),
        loading_overall_mean: all_sum.map(|v| v / kept),
        score_mean,
        noise_var_mean: psi_sum.iter().map(|v| v / kept).collect(),
        intercept_mean: mu_sum.iter().map(|v| v / kept).collect(),
        inclusion_rate_mean: rate_sum.iter().map(|v| v / kept).collect(),
        slab_var_mean: slab_sum.iter().map(|v| v / kept).collect(),
        mean_clusters: cluster_sum / kept,
        mcmc_meta: (*mcmc).into(),
        warnings: sampler.warnings,
    })
}

/// Sweeps used by the out-of-model sparse regressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImputeConfig {
    pub sweeps: usize,
    pub burnin: usize,
    pub seed: u64,
}

impl Default for ImputeConfig {
    fn default() -> Self {
        Self { sweeps: 300, burnin: 100, seed: 1 }
    }
}

/// Inclusion probabilities for one variable regressed on the fixed posterior
/// mean score matrix.
pub fn impute_row(post: &FactorPosterior, x: &[f64], cfg: &ImputeConfig, seed: u64) -> Vec<f64> {
    let cols = post.score_mean.rows();
    if !(sample_variance(x) > 0.0) {
        return vec![0.0; cols];
    }
    let design = &post.score_mean;
    let ss = row_sums_of_squares(design);
    let prior = post.spec.loading_prior;
    let mut rng = rng::seeded(seed);
    let mut row = RowSampler::new(x, design, &ss, prior.intercept, initial_noise(x, &prior.noise));
    let rates: Vec<f64> = post.inclusion_rate_mean.iter().map(|r| r.clamp(1e-12, 1.0 - 1e-12)).collect();
    let mut probs = vec![0.0; cols];
    let mut sum = vec![0.0; cols];
    let kept = cfg.sweeps.saturating_sub(cfg.burnin).max(1);
    for s in 0..cfg.sweeps.max(cfg.burnin + 1) {
        row.update_intercept(&mut rng);
        row.update_coefficients(&mut rng, &rates, &post.slab_var_mean, &mut probs, None);
        row.update_noise(&mut rng, &prior.noise);
        if s >= cfg.burnin {
            for (a, p) in sum.iter_mut().zip(&probs) {
                *a += p;
            }
        }
    }
    sum.iter().map(|v| (v / kept as f64).clamp(0.0, 1.0)).collect()
}

/// Approximate `Pr(alpha[g, l] != 0)` for variables outside the model.
///
/// Rows are independent: each uses its own stream derived from `cfg.seed`
/// and the row's position in `outside_ids`.
pub fn impute_external_inclusion(
    post: &FactorPosterior,
    ds: &ExpressionDataset,
    outside_ids: &[String],
    cfg: &ImputeConfig,
) -> Result<Matrix> {
    let cols = post.score_mean.rows();
    if outside_ids.is_empty() {
        return Ok(Matrix::zeros(0, cols));
    }
    let modeled: alloc::collections::BTreeSet<&str> = post.variable_ids.iter().map(String::as_str).collect();
    if let Some(id) = outside_ids.iter().find(|id| modeled.contains(id.as_str())) {
        return Err(Error::Config(format!("`{id}` is already modeled")));
    }
    let aligned = align_samples(ds, &post.sample_ids)?;
    let sub = aligned.select_ids(outside_ids)?;
    let rows: Vec<Vec<f64>> = impute_rows(post, &sub, cfg);
    Matrix::from_rows(&rows)
}

fn impute_rows(post: &FactorPosterior, sub: &ExpressionDataset, cfg: &ImputeConfig) -> Vec<Vec<f64>> {
    let run = |r: usize| impute_row(post, sub.row(r), cfg, rng::derive_seed(cfg.seed, r as u64));
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..sub.n_variables()).into_par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..sub.n_variables()).map(run).collect()
    }
}

/// Reorders the samples of `ds` to `sample_ids`.
pub fn align_samples(ds: &ExpressionDataset, sample_ids: &[String]) -> Result<ExpressionDataset> {
    if ds.sample_ids() == sample_ids {
        return Ok(ds.clone());
    }
    let pos: alloc::collections::BTreeMap<&str, usize> =
        ds.sample_ids().iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let missing: Vec<String> = sample_ids.iter().filter(|s| !pos.contains_key(s.as_str())).cloned().collect();
    if !missing.is_empty() || sample_ids.len() != ds.n_samples() {
        let mut missing = missing;
        let want: alloc::collections::BTreeSet<&str> = sample_ids.iter().map(String::as_str).collect();
        missing.extend(ds.sample_ids().iter().filter(|s| !want.contains(s.as_str())).cloned());
        return Err(Error::Alignment(missing));
    }
    let idx: Vec<usize> = sample_ids.iter().map(|s| pos[s.as_str()]).collect();
    Ok(ds.select_samples(&idx))
}

pub fn loading_skeleton(post: &FactorPosterior, threshold: f64) -> Result<Skeleton> {
    Skeleton::from_probabilities(&post.loading_incl_prob, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::numbered_ids;
    use crate::rng::{seeded, std_normal};

    #[test]
    fn constraint_pattern() {
        // K = 1, L = 3
        assert_eq!(loading_constraint(0, 0, 1, 3), LoadingRule::Sparse);
        assert_eq!(loading_constraint(0, 1, 1, 3), LoadingRule::PositiveDiagonal);
        assert_eq!(loading_constraint(0, 2, 1, 3), LoadingRule::Forbidden);
        assert_eq!(loading_constraint(1, 2, 1, 3), LoadingRule::PositiveDiagonal);
        assert_eq!(loading_constraint(1, 3, 1, 3), LoadingRule::Forbidden);
        assert_eq!(loading_constraint(2, 1, 1, 3), LoadingRule::Sparse);
        assert_eq!(loading_constraint(5, 3, 1, 3), LoadingRule::Sparse);
    }

    #[test]
    fn initial_state_satisfies_constraints() {
        let mut rng = seeded(9);
        let x = Matrix::from_fn(12, 20, |_, _| std_normal(&mut rng));
        let s = FactorSampler::new(&x, &Matrix::zeros(0, 0), &FactorModelSpec::new(0, 3), 1).unwrap();
        for g in 0..3 {
            assert!(s.loadings()[(g, g)] > 0.0);
            for f in g + 1..3 {
                assert_eq!(s.loadings()[(g, f)], 0.0);
            }
        }
    }

    #[test]
    fn founder_errors() {
        let mut rng = seeded(1);
        let x = Matrix::from_fn(4, 6, |_, _| std_normal(&mut rng));
        let ds = ExpressionDataset::new(x, numbered_ids("g", 4), numbered_ids("s", 6), vec![false; 4]).unwrap();
        let mc = McmcConfig::new(4, 1, 1);
        let spec = FactorModelSpec::new(0, 1);
        assert!(matches!(
            fit_factor_model(&ds, &Matrix::zeros(0, 6), &spec, &["nope".into()], &mc),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            fit_factor_model(&ds, &Matrix::zeros(0, 6), &spec, &["g1".into(), "g2".into()], &mc),
            Err(Error::Config(_))
        ));
        let post = fit_factor_model(&ds, &Matrix::zeros(0, 6), &spec, &["g3".into()], &mc).unwrap();
        assert_eq!(post.variable_ids[0], "g3");
    }

    #[test]
    fn constant_outside_row_has_zero_inclusion() {
        let mut rng = seeded(2);
        let x = Matrix::from_fn(6, 10, |_, _| std_normal(&mut rng));
        let mut rows: Vec<Vec<f64>> = (0..6).map(|g| x.row(g).to_vec()).collect();
        rows.push(vec![4.0; 10]);
        let ds = ExpressionDataset::new(
            Matrix::from_rows(&rows).unwrap(),
            numbered_ids("g", 7),
            numbered_ids("s", 10),
            vec![false; 7],
        )
        .unwrap();
        let model = ds.select_rows(&[0, 1, 2, 3, 4, 5]);
        let post = fit_factor_model(
            &model,
            &Matrix::zeros(0, 10),
            &FactorModelSpec::new(0, 1),
            &["g1".into()],
            &McmcConfig::new(50, 10, 3),
        )
        .unwrap();
        let imp = impute_external_inclusion(&post, &ds, &["g7".into()], &ImputeConfig::default()).unwrap();
        assert!(imp.row(0).iter().all(|&v| v == 0.0));
        let empty = impute_external_inclusion(&post, &ds, &[], &ImputeConfig::default()).unwrap();
        assert_eq!(empty.rows(), 0);
        assert!(impute_external_inclusion(&post, &ds, &["g2".into()], &ImputeConfig::default()).is_err());
    }
}
