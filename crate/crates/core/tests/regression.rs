mod common;

use proptest::prelude::*;
use sigfactor_core::dataset::{numbered_ids, DesignMatrix, EffectKind, ExpressionDataset};
use sigfactor_core::linalg::Matrix;
use sigfactor_core::regression::*;
use sigfactor_core::rng::{seeded, std_normal};
use sigfactor_core::synthetic::{gen_regression, table1_design, PlantedRegressionTruth};

const RATE: f64 = 0.3;
const SLAB: f64 = 1.5;
const NOISE: f64 = 0.4;
const MU0: f64 = 5.0;
const MU_VAR: f64 = 4.0;

fn fixed_prior() -> SparseRegressionPrior {
    SparseRegressionPrior {
        inclusion: InclusionPrior::Fixed { rate: RATE },
        slab_variance: VariancePrior::Fixed { value: SLAB },
        noise: VariancePrior::Fixed { value: NOISE },
        intercept: InterceptPrior { mean: Some(MU0), variance: MU_VAR },
    }
}

/// Two-hypothesis posterior with the intercept and coefficient integrated out.
fn analytic_inclusion(x: &[f64], h: &[f64]) -> f64 {
    let n = x.len();
    let cov = |with: bool| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut v = MU_VAR;
                        if i == j {
                            v += NOISE;
                        }
                        if with {
                            v += SLAB * h[i] * h[j];
                        }
                        v
                    })
                    .collect()
            })
            .collect()
    };
    let mean = vec![MU0; n];
    let l1 = common::mvn_logpdf(x, &mean, &cov(true)) + RATE.ln();
    let l0 = common::mvn_logpdf(x, &mean, &cov(false)) + (1.0 - RATE).ln();
    1.0 / (1.0 + (l0 - l1).exp())
}

fn single_effect_case(effect: f64, seed: u64) -> (ExpressionDataset, DesignMatrix) {
    let n = 12;
    let h: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 1.0 } else { 0.0 }).collect();
    let mut rng = seeded(seed);
    let x: Vec<f64> = (0..n).map(|i| MU0 + effect * h[i] + NOISE.sqrt() * std_normal(&mut rng)).collect();
    let ds = ExpressionDataset::new(
        Matrix::from_rows(&[x]).unwrap(),
        numbered_ids("g", 1),
        numbered_ids("s", n),
        vec![false],
    )
    .unwrap();
    let design =
        DesignMatrix::new(Matrix::from_rows(&[h]).unwrap(), vec!["e".into()], vec![EffectKind::Treatment]).unwrap();
    (ds, design)
}

#[test]
fn single_coordinate_matches_closed_form() {
    for (effect, data_seed) in [(0.0, 11), (0.45, 12), (0.7, 13), (1.5, 14)] {
        let (ds, design) = single_effect_case(effect, data_seed);
        let oracle = analytic_inclusion(ds.row(0), design.values().row(0));
        for seed in 1..=5 {
            let post = fit_sparse_regression(&ds, &design, &fixed_prior(), &McmcConfig::new(6000, 1000, seed)).unwrap();
            let est = post.inclusion_prob[(0, 0)];
            assert!((est - oracle).abs() < 0.02, "effect {effect} seed {seed}: {est} vs {oracle}");
        }
    }
}

#[test]
fn planted_recovery_small() {
    let truth = PlantedRegressionTruth::sparse(table1_design(), 60, 15, 2.0, 0.1, 21).unwrap();
    let ds = gen_regression(&truth).unwrap();
    let post =
        fit_sparse_regression(&ds, &truth.design, &SparseRegressionPrior::default(), &McmcConfig::new(1500, 500, 4))
            .unwrap();
    let planted = truth.planted();
    let hits = planted.iter().filter(|&&(g, j)| post.inclusion_prob[(g, j)] > 0.99).count();
    assert!(hits as f64 >= 0.95 * planted.len() as f64, "{hits}/{}", planted.len());
    // sampling sd of a three-replicate contrast at psi = 0.1 is about 0.19
    let errs: Vec<f64> = planted
        .iter()
        .filter(|&&(g, j)| post.inclusion_prob[(g, j)] > 0.99)
        .map(|&(g, j)| (post.effect_mean[(g, j)] - 2.0).abs())
        .collect();
    assert!(errs.iter().all(|&e| e < 0.8), "{errs:?}");
    assert!(errs.iter().sum::<f64>() / (errs.len() as f64) < 0.25);
    let nulls = (0..60).flat_map(|g| (0..8).map(move |j| (g, j))).filter(|&(g, j)| truth.true_beta[(g, j)] == 0.0);
    let false_hits = nulls.clone().filter(|&(g, j)| post.inclusion_prob[(g, j)] > 0.99).count();
    assert!((false_hits as f64) < 0.02 * nulls.count() as f64);
}

#[test]
fn deterministic_by_seed() {
    let truth = PlantedRegressionTruth::sparse(table1_design(), 10, 4, 2.0, 0.1, 2).unwrap();
    let ds = gen_regression(&truth).unwrap();
    let mc = McmcConfig::new(200, 50, 9);
    let a = fit_sparse_regression(&ds, &truth.design, &SparseRegressionPrior::default(), &mc).unwrap();
    let b = fit_sparse_regression(&ds, &truth.design, &SparseRegressionPrior::default(), &mc).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #[test]
    fn slab_conditional_matches_direct_formula(ss in 0.1f64..50.0, cross in -20.0f64..20.0, psi in 0.01f64..5.0, tau in 0.01f64..10.0) {
        let c = slab_conditional(ss, cross, psi, tau);
        let var = 1.0 / (ss / psi + 1.0 / tau);
        let mean = var * cross / psi;
        // ratio of N(cross; 0, ss psi + ss^2 tau) to N(cross; 0, ss psi)
        let v1 = ss * psi + ss * ss * tau;
        let v0 = ss * psi;
        let lbf = -0.5 * (v1 / v0).ln() - 0.5 * cross * cross / v1 + 0.5 * cross * cross / v0;
        prop_assert!((c.var - var).abs() <= 1e-12 * var);
        prop_assert!((c.mean - mean).abs() <= 1e-10 * (1.0 + mean.abs()));
        prop_assert!((c.log_bayes_factor - lbf).abs() <= 1e-8 * (1.0 + lbf.abs()));
    }

    #[test]
    fn inclusion_probability_bounded_and_monotone(rate in 0.001f64..0.999, ss in 0.1f64..50.0, cross in 0.0f64..20.0, psi in 0.01f64..5.0, tau in 0.01f64..10.0) {
        let p = inclusion_probability(rate, ss, cross, psi, tau);
        prop_assert!((0.0..=1.0).contains(&p));
        let q = inclusion_probability(rate, ss, cross + 1.0, psi, tau);
        prop_assert!(q >= p);
        let r = inclusion_probability((rate * 1.5).min(0.9999), ss, cross, psi, tau);
        prop_assert!(r >= p);
    }

    #[test]
    fn skeleton_monotone_in_threshold(vals in proptest::collection::vec(0.0f64..1.0, 12), t1 in 0.01f64..0.98, dt in 0.0f64..0.01) {
        let m = Matrix::from_vec(3, 4, vals).unwrap();
        let lo = Skeleton::from_probabilities(&m, t1).unwrap();
        let hi = Skeleton::from_probabilities(&m, t1 + dt).unwrap();
        for i in 0..3 {
            for j in 0..4 {
                prop_assert!(!hi.get(i, j) || lo.get(i, j));
            }
        }
    }
}
