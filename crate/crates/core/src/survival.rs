//! Weibull regression with right-censoring, shotgun stochastic search over
//! covariate subsets, model-averaged median survival and Kaplan-Meier curves.
//!
//! The density is `p(t | a, gamma) = a t^(a-1) exp(eta - t^a e^eta)` with
//! `eta = gamma' y`. A censored record contributes its survival function
//! `exp(-t^a e^eta)`. Models are fitted at the posterior mode in
//! `(log a, intercept, gamma)` and scored by a Laplace approximation.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::math::{exp, ln, log_sum_exp, mean, median, sample_variance, sqrt, LN_2PI};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRecord {
    pub id: String,
    pub time: f64,
    /// `true` when death was observed, `false` when right-censored.
    pub event: bool,
    pub covariates: Vec<f64>,
}

/// Records sharing one covariate naming.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalData {
    covariate_names: Vec<String>,
    records: Vec<SurvivalRecord>,
}

impl SurvivalData {
    pub fn new(covariate_names: Vec<String>, records: Vec<SurvivalRecord>) -> Result<Self> {
        for r in &records {
            if !(r.time > 0.0) || !r.time.is_finite() {
                return Err(Error::Domain(format!("record `{}` has non-positive time {}", r.id, r.time)));
            }
            if r.covariates.len() != covariate_names.len() {
                return Err(Error::Shape(format!(
                    "record `{}` has {} covariates, expected {}",
                    r.id,
                    r.covariates.len(),
                    covariate_names.len()
                )));
            }
            if r.covariates.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!("record `{}` has a non-finite covariate", r.id)));
            }
        }
        Ok(Self { covariate_names, records })
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn records(&self) -> &[SurvivalRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn events(&self) -> usize {
        self.records.iter().filter(|r| r.event).count()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.covariate_names.iter().position(|c| c == name)
    }

    /// Same records with every time multiplied by `c`.
    pub fn scale_times(&self, c: f64) -> Result<Self> {
        let records = self.records.iter().map(|r| SurvivalRecord { time: r.time * c, ..r.clone() }).collect();
        Self::new(self.covariate_names.clone(), records)
    }
}

/// Candidate covariates laid out as a dense, optionally standardized matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDesign {
    names: Vec<String>,
    center: Vec<f64>,
    scale: Vec<f64>,
    constant: Vec<bool>,
    z: Matrix,
    log_times: Vec<f64>,
    events: Vec<bool>,
}

impl SurvivalDesign {
    /// `candidates` select covariates by name. With `standardize`, columns get
    /// zero mean and unit variance; constant columns are kept but marked.
    pub fn new(data: &SurvivalData, candidates: &[String], standardize: bool) -> Result<Self> {
        let cols = candidates
            .iter()
            .map(|c| data.column_index(c).ok_or_else(|| Error::Config(format!("unknown covariate `{c}`"))))
            .collect::<Result<Vec<_>>>()?;
        let n = data.len();
        let mut z = Matrix::from_fn(n, cols.len(), |i, j| data.records[i].covariates[cols[j]]);
        let mut center = vec![0.0; cols.len()];
        let mut scale = vec![1.0; cols.len()];
        let mut constant = vec![false; cols.len()];
        for j in 0..cols.len() {
            let col = z.col(j);
            let first = col.first().copied().unwrap_or(0.0);
            constant[j] = col.iter().all(|&v| v == first);
            if standardize {
                center[j] = mean(&col);
                let sd = sqrt(sample_variance(&col));
                scale[j] = if sd > 0.0 { sd } else { 1.0 };
                for i in 0..n {
                    z[(i, j)] = (z[(i, j)] - center[j]) / scale[j];
                }
            }
        }
        Ok(Self {
            names: candidates.to_vec(),
            center,
            scale,
            constant,
            z,
            log_times: data.records.iter().map(|r| ln(r.time)).collect(),
            events: data.records.iter().map(|r| r.event).collect(),
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_records(&self) -> usize {
        self.events.len()
    }

    pub fn n_events(&self) -> usize {
        self.events.iter().filter(|&&e| e).count()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn standardized(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().zip(&self.center).zip(&self.scale).map(|((v, c), s)| (v - c) / s).collect()
    }
}

/// Prior on `(log a, intercept, gamma)`: `log a ~ N(mean, sd^2)`, each
/// selected coefficient `~ N(0, coef_var)`, intercept `~ N(0, intercept_var)`
/// or flat when `None`. `coef_var = None` makes the slopes flat as well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullPrior {
    pub log_index_mean: f64,
    pub log_index_sd: f64,
    pub coef_var: Option<f64>,
    pub intercept_var: Option<f64>,
}

impl Default for WeibullPrior {
    fn default() -> Self {
        Self { log_index_mean: 0.0, log_index_sd: 1.0, coef_var: Some(4.0), intercept_var: None }
    }
}

impl WeibullPrior {
    /// Improper flat prior; the mode is then the maximum-likelihood estimate.
    pub fn flat() -> Self {
        Self { log_index_mean: 0.0, log_index_sd: f64::INFINITY, coef_var: None, intercept_var: None }
    }

    fn log_density(&self, theta: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        // returns value, gradient, diagonal Hessian
        let d = theta.len();
        let mut lp = 0.0;
        let mut g = vec![0.0; d];
        let mut h = vec![0.0; d];
        if self.log_index_sd.is_finite() {
            let v = self.log_index_sd * self.log_index_sd;
            let dv = theta[0] - self.log_index_mean;
            lp += -0.5 * (LN_2PI + ln(v)) - 0.5 * dv * dv / v;
            g[0] = -dv / v;
            h[0] = -1.0 / v;
        }
        if let Some(v) = self.intercept_var {
            lp += -0.5 * (LN_2PI + ln(v)) - 0.5 * theta[1] * theta[1] / v;
            g[1] = -theta[1] / v;
            h[1] = -1.0 / v;
        }
        if let Some(v) = self.coef_var {
            for j in 2..d {
                lp += -0.5 * (LN_2PI + ln(v)) - 0.5 * theta[j] * theta[j] / v;
                g[j] = -theta[j] / v;
                h[j] = -1.0 / v;
            }
        }
        (lp, g, h)
    }
}

/// A fitted Weibull regression on a covariate subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeibullModel {
    /// Index (shape) parameter `a > 0`.
    pub index: f64,
    pub intercept: f64,
    /// Coefficients aligned with `subset`.
    pub coefficients: Vec<f64>,
    /// Column indices into the design's candidate list, ascending.
    pub subset: Vec<usize>,
    pub subset_names: Vec<String>,
    pub log_marginal: f64,
    pub log_posterior_mode: f64,
    /// Inverse negative Hessian of the log posterior over `(log a, intercept, gamma)`.
    pub covariance: Matrix,
}

impl WeibullModel {
    /// A model with given parameters and no fit diagnostics.
    pub fn with_parameters(index: f64, intercept: f64, subset: Vec<usize>, coefficients: Vec<f64>) -> Self {
        let d = 2 + subset.len();
        Self {
            index,
            intercept,
            coefficients,
            subset,
            subset_names: Vec::new(),
            log_marginal: 0.0,
            log_posterior_mode: 0.0,
            covariance: Matrix::zeros(d, d),
        }
    }

    /// Linear predictor for a full candidate vector (already on the design's scale).
    pub fn linear_predictor(&self, y: &[f64]) -> f64 {
        self.intercept + self.subset.iter().zip(&self.coefficients).map(|(&j, &c)| c * y[j]).sum::<f64>()
    }

    pub fn survival(&self, t: f64, eta: f64) -> f64 {
        exp(-crate::math::powf(t, self.index) * exp(eta))
    }

    fn param_vector(&self) -> Vec<f64> {
        let mut th = vec![ln(self.index), self.intercept];
        th.extend_from_slice(&self.coefficients);
        th
    }
}

/// Log-likelihood, gradient and Hessian over `theta = (log a, intercept, gamma)`.
pub fn weibull_loglik_derivatives(design: &SurvivalDesign, subset: &[usize], theta: &[f64]) -> (f64, Vec<f64>, Matrix) {
    let d = theta.len();
    let a = exp(theta[0]);
    let mut ll = 0.0;
    let mut g = vec![0.0; d];
    let mut h = Matrix::zeros(d, d);
    let mut y = vec![0.0; d];
    for i in 0..design.n_records() {
        let zi = design.z.row(i);
        y[1] = 1.0;
        for (k, &j) in subset.iter().enumerate() {
            y[2 + k] = zi[j];
        }
        let eta: f64 = (1..d).map(|k| theta[k] * y[k]).sum();
        let lt = design.log_times[i];
        // u = t^a e^eta
        let u = exp(a * lt + eta);
        let alt = a * lt;
        if design.events[i] {
            ll += theta[0] + (a - 1.0) * lt + eta;
            g[0] += 1.0 + alt;
            for k in 1..d {
                g[k] += y[k];
            }
            h[(0, 0)] += alt;
        }
        ll -= u;
        g[0] -= alt * u;
        h[(0, 0)] -= (alt + alt * alt) * u;
        for k in 1..d {
            g[k] -= u * y[k];
            h[(0, k)] -= alt * u * y[k];
            for l in 1..=k {
                h[(k, l)] -= u * y[k] * y[l];
            }
        }
    }
    for k in 1..d {
        h[(k, 0)] = h[(0, k)];
        for l in 1..k {
            h[(l, k)] = h[(k, l)];
        }
    }
    (ll, g, h)
}

/// Log-likelihood of `model` on `design`, with censored records contributing
/// `-t^a e^eta`.
pub fn weibull_loglik(model: &WeibullModel, design: &SurvivalDesign) -> Result<f64> {
    if !(model.index > 0.0) {
        return Err(Error::Domain(format!("index {} must be positive", model.index)));
    }
    if model.subset.iter().any(|&j| j >= design.names.len()) || model.subset.len() != model.coefficients.len() {
        return Err(Error::Shape("model subset does not fit the design".into()));
    }
    let (ll, _, _) = weibull_loglik_derivatives(design, &model.subset, &model.param_vector());
    Ok(ll)
}

fn log_posterior(
    design: &SurvivalDesign,
    subset: &[usize],
    prior: &WeibullPrior,
    theta: &[f64],
) -> (f64, Vec<f64>, Matrix) {
    let (ll, mut g, mut h) = weibull_loglik_derivatives(design, subset, theta);
    let (lp, pg, ph) = prior.log_density(theta);
    for k in 0..theta.len() {
        g[k] += pg[k];
        h[(k, k)] += ph[k];
    }
    (ll + lp, g, h)
}

fn negated(h: &Matrix) -> Matrix {
    h.map(|v| -v)
}

fn with_ridge(m: &Matrix, ridge: f64) -> Matrix {
    let mut r = m.clone();
    for i in 0..r.rows() {
        r[(i, i)] += ridge;
    }
    r
}

const MAX_NEWTON: usize = 200;

/// Posterior mode and Laplace log marginal likelihood for one subset.
pub fn fit_weibull(design: &SurvivalDesign, subset: &[usize], prior: &WeibullPrior) -> Result<WeibullModel> {
    let events = design.n_events();
    if events < 2 {
        return Err(Error::InsufficientData(format!("{events} events, need at least 2")));
    }
    if subset.len() >= events {
        return Err(Error::InsufficientData(format!("{} covariates for {events} events", subset.len())));
    }
    let mut subset = subset.to_vec();
    subset.sort_unstable();
    subset.dedup();
    for &j in &subset {
        if j >= design.names.len() {
            return Err(Error::Config(format!("covariate index {j} out of range")));
        }
        if design.constant[j] {
            return Err(Error::Singular(format!("covariate `{}` is constant", design.names[j])));
        }
    }
    let d = 2 + subset.len();
    let total_time: f64 = design.log_times.iter().map(|&lt| exp(lt)).sum();
    let mut theta = vec![0.0; d];
    theta[1] = ln(events as f64 / total_time);
    let (mut lp, mut g, mut h) = log_posterior(design, &subset, prior, &theta);
    let mut converged = false;
    for _ in 0..MAX_NEWTON {
        let gnorm = sqrt(g.iter().map(|x| x * x).sum::<f64>());
        if gnorm < 1e-9 * (1.0 + lp.abs()).min(1e3) {
            converged = true;
            break;
        }
        let neg = negated(&h);
        let trace = (0..d).map(|i| neg[(i, i)].abs()).sum::<f64>() / d as f64;
        let mut ridge = 0.0;
        let step = loop {
            match Cholesky::new(&with_ridge(&neg, ridge)) {
                Ok(c) => break c.solve(&g),
                Err(_) => {
                    ridge = if ridge == 0.0 { 1e-8 * trace.max(1.0) } else { ridge * 10.0 };
                    if ridge > 1e8 * trace.max(1.0) {
                        // gradient ascent fallback
                        break g.iter().map(|x| x / trace.max(1.0)).collect();
                    }
                }
            }
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            let (clp, cg, ch) = log_posterior(design, &subset, prior, &cand);
            if clp.is_finite() && clp >= lp - 1e-12 * lp.abs() {
                theta = cand;
                lp = clp;
                g = cg;
                h = ch;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            let gnorm = sqrt(g.iter().map(|x| x * x).sum::<f64>());
            if gnorm < 1e-6 * (1.0 + lp.abs()) {
                converged = true;
                break;
            }
            return Err(Error::Optimization { grad_norm: gnorm });
        }
    }
    if !converged {
        let gnorm = sqrt(g.iter().map(|x| x * x).sum::<f64>());
        if gnorm > 1e-6 * (1.0 + lp.abs()) {
            return Err(Error::Optimization { grad_norm: gnorm });
        }
    }
    let neg = negated(&h);
    let chol = match Cholesky::new(&neg) {
        Ok(c) => c,
        Err(_) => {
            let trace = (0..d).map(|i| neg[(i, i)].abs()).sum::<f64>() / d as f64;
            Cholesky::new(&with_ridge(&neg, 1e-8 * trace.max(1.0)))
                .map_err(|_| Error::Singular("Hessian at the mode is not negative definite".into()))?
        }
    };
    let log_marginal = lp + 0.5 * d as f64 * LN_2PI - 0.5 * chol.log_det();
    Ok(WeibullModel {
        index: exp(theta[0]),
        intercept: theta[1],
        coefficients: theta[2..].to_vec(),
        subset_names: subset.iter().map(|&j| design.names[j].clone()).collect(),
        subset,
        log_marginal,
        log_posterior_mode: lp,
        covariance: chol.inverse(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub max_subset_size: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { max_subset_size: 12, iterations: 2000, seed: 1 }
    }
}

/// Distinct models visited by the search with normalized probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSearchLedger {
    pub candidate_names: Vec<String>,
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
    /// Sorted by decreasing log marginal likelihood.
    pub models: Vec<WeibullModel>,
    pub posterior_model_prob: Vec<f64>,
    pub marginal_inclusion: Vec<f64>,
    /// Symmetric; the diagonal equals `marginal_inclusion`.
    pub pairwise_inclusion: Matrix,
    /// Subsets whose fit failed; they carry no probability.
    pub failed: Vec<Vec<usize>>,
    pub prior: WeibullPrior,
    pub config: SearchConfig,
}

impl ModelSearchLedger {
    /// Builds a ledger from fitted models (duplicates by subset are dropped).
    pub fn from_models(
        design: &SurvivalDesign,
        mut models: Vec<WeibullModel>,
        failed: Vec<Vec<usize>>,
        prior: WeibullPrior,
        config: SearchConfig,
    ) -> Self {
        models.sort_by(|a, b| b.log_marginal.total_cmp(&a.log_marginal).then_with(|| a.subset.cmp(&b.subset)));
        models.dedup_by(|a, b| a.subset == b.subset);
        let lms: Vec<f64> = models.iter().map(|m| m.log_marginal).collect();
        let z = log_sum_exp(&lms);
        let probs: Vec<f64> = lms.iter().map(|&l| exp(l - z)).collect();
        let c = design.names.len();
        let mut marginal = vec![0.0; c];
        let mut pairwise = Matrix::zeros(c, c);
        for (m, &w) in models.iter().zip(&probs) {
            for &j in &m.subset {
                marginal[j] += w;
                for &k in &m.subset {
                    pairwise[(j, k)] += w;
                }
            }
        }
        Self {
            candidate_names: design.names.clone(),
            center: design.center.clone(),
            scale: design.scale.clone(),
            models,
            posterior_model_prob: probs,
            marginal_inclusion: marginal,
            pairwise_inclusion: pairwise,
            failed,
            prior,
            config,
        }
    }

    pub fn standardized(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().zip(&self.center).zip(&self.scale).map(|((v, c), s)| (v - c) / s).collect()
    }
}

fn neighbors(current: &[usize], n_candidates: usize, max_size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let inside = |j: usize| current.binary_search(&j).is_ok();
    if current.len() < max_size {
        for j in (0..n_candidates).filter(|&j| !inside(j)) {
            let mut s = current.to_vec();
            s.push(j);
            s.sort_unstable();
            out.push(s);
        }
    }
    for (pos, _) in current.iter().enumerate() {
        let mut s = current.to_vec();
        s.remove(pos);
        out.push(s);
    }
    for (pos, _) in current.iter().enumerate() {
        for k in (0..n_candidates).filter(|&k| !inside(k)) {
            let mut s = current.to_vec();
            s[pos] = k;
            s.sort_unstable();
            out.push(s);
        }
    }
    out
}

fn fit_all(design: &SurvivalDesign, subsets: &[Vec<usize>], prior: &WeibullPrior) -> Vec<Option<WeibullModel>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        subsets.par_iter().map(|s| fit_weibull(design, s, prior).ok()).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        subsets.iter().map(|s| fit_weibull(design, s, prior).ok()).collect()
    }
}

/// Shotgun stochastic search over subsets of `candidates`, starting from the
/// intercept-only model. Every step scores the full add/delete/swap
/// neighbourhood and moves to a neighbour drawn proportionally to its
/// marginal likelihood. Covariates are standardized first.
pub fn shotgun_search(
    data: &SurvivalData,
    candidates: &[String],
    cfg: &SearchConfig,
    prior: &WeibullPrior,
) -> Result<ModelSearchLedger> {
    if candidates.is_empty() {
        return Err(Error::Config("no candidate covariates".into()));
    }
    let design = SurvivalDesign::new(data, candidates, true)?;
    let c = candidates.len();
    let max_size = cfg.max_subset_size.min(c);
    let mut rng = rng::seeded(cfg.seed);
    let mut visited: BTreeMap<Vec<usize>, Option<WeibullModel>> = BTreeMap::new();
    visited.insert(Vec::new(), Some(fit_weibull(&design, &[], prior)?));
    let mut current: Vec<usize> = Vec::new();
    for _ in 0..cfg.iterations {
        let nb = neighbors(&current, c, max_size);
        let fresh: Vec<Vec<usize>> = nb.iter().filter(|s| !visited.contains_key(*s)).cloned().collect();
        for (s, m) in fresh.iter().zip(fit_all(&design, &fresh, prior)) {
            visited.insert(s.clone(), m);
        }
        let scored: Vec<(&Vec<usize>, f64)> =
            nb.iter().filter_map(|s| visited[s].as_ref().map(|m| (s, m.log_marginal))).collect();
        if scored.is_empty() {
            break;
        }
        let lw: Vec<f64> = scored.iter().map(|(_, l)| *l).collect();
        let pick = rng::categorical_log(&mut rng, &lw);
        current = scored[pick].0.clone();
    }
    let mut models = Vec::new();
    let mut failed = Vec::new();
    for (s, m) in visited {
        match m {
            Some(m) => models.push(m),
            None => failed.push(s),
        }
    }
    Ok(ModelSearchLedger::from_models(&design, models, failed, *prior, *cfg))
}

/// Median of the model-averaged survival curve over the `top_m` most probable
/// models for a raw (unstandardized) candidate vector `y`.
pub fn predict_median_survival(ledger: &ModelSearchLedger, y: &[f64], top_m: usize) -> Result<f64> {
    if ledger.models.is_empty() || top_m == 0 {
        return Err(Error::Invalid("empty ledger or top_m = 0".into()));
    }
    if y.len() != ledger.candidate_names.len() {
        return Err(Error::Shape(format!("{} covariates, ledger has {}", y.len(), ledger.candidate_names.len())));
    }
    let z = ledger.standardized(y);
    let m = top_m.min(ledger.models.len());
    let total: f64 = ledger.posterior_model_prob[..m].iter().sum();
    let comps: Vec<(f64, f64, f64)> = ledger.models[..m]
        .iter()
        .zip(&ledger.posterior_model_prob)
        .map(|(md, &w)| (w / total, md.index, md.linear_predictor(&z)))
        .collect();
    Ok(mixture_median(&comps))
}

/// Median of `sum_m w_m exp(-t^a_m e^eta_m)` for `(w, a, eta)` components.
pub fn mixture_median(components: &[(f64, f64, f64)]) -> f64 {
    let surv = |log_t: f64| -> f64 { components.iter().map(|&(w, a, eta)| w * exp(-exp(a * log_t + eta))).sum() };
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    while surv(lo) <= 0.5 {
        lo -= 1.0;
    }
    while surv(hi) > 0.5 {
        hi += 1.0;
    }
    // relative tolerance on t is a width in log t
    while hi - lo > 1e-11 {
        let mid = 0.5 * (lo + hi);
        if surv(mid) > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    exp(0.5 * (lo + hi))
}

/// Product-limit estimate at each distinct event time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KaplanMeierCurve {
    pub event_times: Vec<f64>,
    pub survival_probs: Vec<f64>,
    pub at_risk: Vec<usize>,
    pub deaths: Vec<usize>,
}

impl KaplanMeierCurve {
    /// Right-continuous step function value at `t`.
    pub fn survival_at(&self, t: f64) -> f64 {
        match self.event_times.iter().rposition(|&e| e <= t) {
            Some(i) => self.survival_probs[i],
            None => 1.0,
        }
    }
}

pub fn kaplan_meier(records: &[SurvivalRecord]) -> Result<KaplanMeierCurve> {
    if records.is_empty() {
        return Err(Error::InsufficientData("no records".into()));
    }
    let mut order: Vec<(f64, bool)> = records.iter().map(|r| (r.time, r.event)).collect();
    // events before censorings at equal times
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut curve = KaplanMeierCurve { event_times: vec![], survival_probs: vec![], at_risk: vec![], deaths: vec![] };
    let mut s = 1.0;
    let mut remaining = order.len();
    let mut i = 0;
    while i < order.len() {
        let t = order[i].0;
        let mut d = 0;
        let mut j = i;
        while j < order.len() && order[j].0 == t {
            if order[j].1 {
                d += 1;
            }
            j += 1;
        }
        if d > 0 {
            s *= (remaining - d) as f64 / remaining as f64;
            curve.event_times.push(t);
            curve.survival_probs.push(s);
            curve.at_risk.push(remaining);
            curve.deaths.push(d);
        }
        remaining -= j - i;
        i = j;
    }
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskGroup {
    Low,
    High,
}

impl RiskGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            RiskGroup::Low => "low",
            RiskGroup::High => "high",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strata {
    pub threshold: f64,
    pub labels: Vec<RiskGroup>,
    pub low: Vec<SurvivalRecord>,
    pub high: Vec<SurvivalRecord>,
}

/// Median split: values at or below the median go to the low group.
pub fn stratify(records: &[SurvivalRecord], values: &[f64]) -> Result<Strata> {
    if records.len() != values.len() {
        return Err(Error::Shape(format!("{} values for {} records", values.len(), records.len())));
    }
    if values.is_empty() || values.iter().all(|&v| v == values[0]) {
        return Err(Error::DegenerateSplit);
    }
    let threshold = median(values);
    let labels: Vec<RiskGroup> =
        values.iter().map(|&v| if v <= threshold { RiskGroup::Low } else { RiskGroup::High }).collect();
    if labels.iter().all(|&l| l == RiskGroup::Low) {
        return Err(Error::DegenerateSplit);
    }
    let pick = |g: RiskGroup| records.iter().zip(&labels).filter(|(_, &l)| l == g).map(|(r, _)| r.clone()).collect();
    Ok(Strata { threshold, low: pick(RiskGroup::Low), high: pick(RiskGroup::High), labels })
}
