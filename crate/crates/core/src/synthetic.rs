//! Generators with planted ground truth.
//!
//! Every generator is a pure function of its truth record; randomness comes
//! from the record's seed.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{numbered_ids, DesignMatrix, EffectKind, ExpressionDataset};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math::{exp, powf, sqrt};
use crate::rng::{self, open_unit, std_normal};
use crate::survival::{SurvivalData, SurvivalRecord};

/// Effect names of the nine-group, 27-sample acidosis design.
pub const TABLE1_EFFECTS: [&str; 8] =
    ["la_1h", "neut_1h", "acid_1h", "ctrl_4h", "la_4h", "neut_4h", "acid_4h", "strong_la_4h"];

/// Nine groups of three replicates, effects relative to the 1 hour control.
pub fn table1_design() -> DesignMatrix {
    // group order: ctrl 1h, ctrl 4h, la 1h, la 4h, neut 1h, neut 4h, acid 1h, acid 4h, strong 4h
    let groups: [&[usize]; 8] = [&[2], &[4], &[6], &[1, 3, 5, 7, 8], &[3], &[5], &[7], &[8]];
    let values = Matrix::from_fn(8, 27, |e, i| if groups[e].contains(&(i / 3)) { 1.0 } else { 0.0 });
    DesignMatrix::new(values, TABLE1_EFFECTS.iter().map(|s| String::from(*s)).collect(), vec![EffectKind::Treatment; 8])
        .expect("valid design")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedRegressionTruth {
    pub design: DesignMatrix,
    /// `p x m`.
    pub true_beta: Matrix,
    pub true_psi: Vec<f64>,
    pub intercepts: Vec<f64>,
    pub seed: u64,
}

impl PlantedRegressionTruth {
    /// Plants `n_planted` coefficients of value `beta` at distinct uniformly
    /// chosen positions; every variable has noise variance `psi` and intercept 8.
    pub fn sparse(design: DesignMatrix, p: usize, n_planted: usize, beta: f64, psi: f64, seed: u64) -> Result<Self> {
        let m = design.n_effects();
        if n_planted > p * m {
            return Err(Error::Config(format!("cannot plant {n_planted} of {} entries", p * m)));
        }
        let mut rng = rng::seeded(rng::derive_seed(seed, 0));
        let mut cells: Vec<usize> = (0..p * m).collect();
        cells.shuffle(&mut rng);
        let mut true_beta = Matrix::zeros(p, m);
        for &c in &cells[..n_planted] {
            true_beta[(c / m, c % m)] = beta;
        }
        Ok(Self { design, true_beta, true_psi: vec![psi; p], intercepts: vec![8.0; p], seed })
    }

    pub fn planted(&self) -> Vec<(usize, usize)> {
        let b = &self.true_beta;
        let mut out = Vec::new();
        for g in 0..b.rows() {
            for j in 0..b.cols() {
                if b[(g, j)] != 0.0 {
                    out.push((g, j));
                }
            }
        }
        out
    }
}

/// `X = mu 1 + B H + N` with `N` independent normal noise.
pub fn gen_regression(truth: &PlantedRegressionTruth) -> Result<ExpressionDataset> {
    let h = truth.design.values();
    let b = &truth.true_beta;
    let p = b.rows();
    if b.cols() != h.rows() || truth.true_psi.len() != p || truth.intercepts.len() != p {
        return Err(Error::Shape("planted regression truth is not conformable".into()));
    }
    let mut x = b.matmul(h)?;
    let mut rng = rng::seeded(rng::derive_seed(truth.seed, 1));
    for g in 0..p {
        let sd = sqrt(truth.true_psi[g]);
        let mu = truth.intercepts[g];
        for v in x.row_mut(g) {
            *v += mu + sd * std_normal(&mut rng);
        }
    }
    ExpressionDataset::new(x, numbered_ids("g", p), numbered_ids("s", h.cols()), vec![false; p])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedFactorTruth {
    /// `p x (K+L)`; the first `K` columns load on the controls.
    pub true_loadings: Matrix,
    /// `L x n`.
    pub true_scores: Matrix,
    /// `K x n`.
    pub controls: Matrix,
    pub noise_vars: Vec<f64>,
    pub intercepts: Vec<f64>,
    /// Variables loading on each latent factor, anchors included.
    pub membership: Vec<Vec<usize>>,
    pub seed: u64,
}

/// Shape of a planted sparse factor model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorPlan {
    pub p: usize,
    pub n: usize,
    pub l: usize,
    pub k: usize,
    /// Non-anchor members per factor; member sets are disjoint.
    pub members: usize,
    /// Loading magnitudes are uniform on `[0.5, 1.5] * scale`.
    pub loading_scale: f64,
    pub noise_var: f64,
    pub seed: u64,
}

impl PlantedFactorTruth {
    /// Variable `f < L` anchors factor `f` with a positive loading; anchors
    /// never load on later factors. Scores are standard normal.
    pub fn sparse(plan: &FactorPlan) -> Result<Self> {
        let FactorPlan { p, n, l, k, members, loading_scale, noise_var, seed } = *plan;
        if l == 0 || p < l + l * members {
            return Err(Error::Config(format!("{p} variables cannot hold {l} factors of {members} members")));
        }
        let mut rng = rng::seeded(rng::derive_seed(seed, 0));
        let magnitude = |rng: &mut rng::SeededRng| loading_scale * (0.5 + open_unit(rng));
        let mut pool: Vec<usize> = (l..p).collect();
        pool.shuffle(&mut rng);
        let mut loadings = Matrix::zeros(p, k + l);
        let mut membership = Vec::with_capacity(l);
        for f in 0..l {
            loadings[(f, k + f)] = magnitude(&mut rng);
            let mut set = vec![f];
            for &g in &pool[f * members..(f + 1) * members] {
                let sign = if rng::bernoulli(&mut rng, 0.5) { 1.0 } else { -1.0 };
                loadings[(g, k + f)] = sign * magnitude(&mut rng);
                set.push(g);
            }
            set.sort_unstable();
            membership.push(set);
        }
        let controls = Matrix::from_fn(k, n, |_, _| std_normal(&mut rng));
        for g in 0..p {
            for j in 0..k {
                loadings[(g, j)] = 0.3 * std_normal(&mut rng);
            }
        }
        let true_scores = Matrix::from_fn(l, n, |_, _| std_normal(&mut rng));
        let intercepts = (0..p).map(|_| 7.0 + std_normal(&mut rng)).collect();
        Ok(Self {
            true_loadings: loadings,
            true_scores,
            controls,
            noise_vars: vec![noise_var; p],
            intercepts,
            membership,
            seed,
        })
    }

    pub fn k(&self) -> usize {
        self.controls.rows()
    }

    pub fn l(&self) -> usize {
        self.true_scores.rows()
    }

    /// `(K+L) x n` stacked controls and scores.
    pub fn full_scores(&self) -> Matrix {
        self.controls.vstack(&self.true_scores).expect("same sample count")
    }
}

/// `X = mu 1 + A Lambda + N`.
pub fn gen_factor(truth: &PlantedFactorTruth) -> Result<ExpressionDataset> {
    let lambda = if truth.k() == 0 { truth.true_scores.clone() } else { truth.full_scores() };
    let p = truth.true_loadings.rows();
    if truth.true_loadings.cols() != lambda.rows() || truth.noise_vars.len() != p || truth.intercepts.len() != p {
        return Err(Error::Shape("planted factor truth is not conformable".into()));
    }
    let mut x = truth.true_loadings.matmul(&lambda)?;
    let mut rng = rng::seeded(rng::derive_seed(truth.seed, 1));
    for g in 0..p {
        let sd = sqrt(truth.noise_vars[g]);
        let mu = truth.intercepts[g];
        for v in x.row_mut(g) {
            *v += mu + sd * std_normal(&mut rng);
        }
    }
    ExpressionDataset::new(x, numbered_ids("g", p), numbered_ids("s", lambda.cols()), vec![false; p])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSurvivalTruth {
    pub true_a: f64,
    pub intercept: f64,
    pub true_gamma: Vec<f64>,
    pub censoring_rate: f64,
    pub seed: u64,
}

/// Probability that a uniform `(0, c_max)` censoring time precedes a
/// Weibull time with survival `exp(-t^a e^eta)`, averaged over `etas`.
pub fn expected_censoring(a: f64, etas: &[f64], c_max: f64) -> f64 {
    const STEPS: usize = 400;
    let h = c_max / STEPS as f64;
    // Simpson weights and a ln t on the grid, shared by every eta
    let nodes: Vec<(f64, f64)> =
        (1..STEPS).map(|j| (if j % 2 == 1 { 4.0 } else { 2.0 }, a * crate::math::ln(j as f64 * h))).collect();
    let end = a * crate::math::ln(c_max);
    let mut total = 0.0;
    for &eta in etas {
        let mut acc = 1.0 + exp(-exp(end + eta));
        for &(w, alt) in &nodes {
            acc += w * exp(-exp(alt + eta));
        }
        total += acc * h / 3.0 / c_max;
    }
    total / etas.len() as f64
}

/// Times by inverse CDF of the Weibull; censoring is uniform on `(0, c_max)`
/// with `c_max` calibrated so the expected censoring fraction is the requested rate.
/// `covariates` is `n x c`.
pub fn gen_survival(truth: &PlantedSurvivalTruth, covariates: &Matrix, names: &[String]) -> Result<SurvivalData> {
    if !(truth.true_a > 0.0) || !(0.0..1.0).contains(&truth.censoring_rate) {
        return Err(Error::Config("survival truth needs a > 0 and censoring rate in [0, 1)".into()));
    }
    let (n, c) = (covariates.rows(), covariates.cols());
    if truth.true_gamma.len() != c || names.len() != c {
        return Err(Error::Shape(format!(
            "{c} covariates, {} coefficients, {} names",
            truth.true_gamma.len(),
            names.len()
        )));
    }
    let etas: Vec<f64> =
        (0..n).map(|i| truth.intercept + crate::linalg::dot(covariates.row(i), &truth.true_gamma)).collect();
    let c_max = if truth.censoring_rate > 0.0 && n > 0 {
        Some(calibrate_censoring(truth.true_a, &etas, truth.censoring_rate))
    } else {
        None
    };
    let mut rng = rng::seeded(truth.seed);
    let records = (0..n)
        .map(|i| {
            let e = -crate::math::ln(open_unit(&mut rng));
            let t = powf(e * exp(-etas[i]), 1.0 / truth.true_a);
            let (time, event) = match c_max {
                Some(cm) => {
                    let cens = cm * open_unit(&mut rng);
                    if cens < t {
                        (cens, false)
                    } else {
                        (t, true)
                    }
                }
                None => (t, true),
            };
            SurvivalRecord { id: format!("p{}", i + 1), time, event, covariates: covariates.row(i).to_vec() }
        })
        .collect();
    SurvivalData::new(names.to_vec(), records)
}

fn calibrate_censoring(a: f64, etas: &[f64], rate: f64) -> f64 {
    let mut lo = 1e-12;
    let mut hi = 1.0;
    while expected_censoring(a, etas, hi) > rate {
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if expected_censoring(a, etas, mid) > rate {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-9 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}
