mod common;

use proptest::prelude::*;
use sigfactor_core::dataset::ExpressionDataset;
use sigfactor_core::factor::{fit_factor_model, FactorModelSpec, FactorPosterior};
use sigfactor_core::linalg::Matrix;
use sigfactor_core::projection::*;
use sigfactor_core::regression::McmcConfig;
use sigfactor_core::rng::{seeded, std_normal};
use sigfactor_core::synthetic::{gen_factor, FactorPlan, PlantedFactorTruth};
use std::sync::OnceLock;

fn fitted() -> &'static (ExpressionDataset, FactorPosterior, PlantedFactorTruth) {
    static CELL: OnceLock<(ExpressionDataset, FactorPosterior, PlantedFactorTruth)> = OnceLock::new();
    CELL.get_or_init(|| {
        let plan = FactorPlan { p: 120, n: 80, l: 3, k: 2, members: 30, loading_scale: 1.0, noise_var: 0.4, seed: 31 };
        let truth = PlantedFactorTruth::sparse(&plan).unwrap();
        let ds = gen_factor(&truth).unwrap();
        let founders = ds.variable_ids()[..3].to_vec();
        let post = fit_factor_model(
            &ds,
            &truth.controls,
            &FactorModelSpec::new(2, 3),
            &founders,
            &McmcConfig::new(500, 150, 2),
        )
        .unwrap();
        (ds, post, truth)
    })
}

fn dataset(cols: Vec<Vec<f64>>, post: &FactorPosterior) -> ExpressionDataset {
    let p = cols[0].len();
    let x = Matrix::from_fn(p, cols.len(), |g, i| cols[i][g]);
    let ids = (0..cols.len()).map(|i| format!("n{i}")).collect();
    ExpressionDataset::new(x, post.variable_ids.clone(), ids, vec![false; p]).unwrap()
}

#[test]
fn self_projection_tracks_fitted_scores() {
    let (ds, post, truth) = fitted();
    let proj = project_factors(post, ds, Some(&truth.controls), &default_precision(post)).unwrap();
    assert_eq!(proj.coverage, 1.0);
    for f in 0..3 {
        let c = common::pearson(proj.values.row(f), post.score_mean.row(2 + f));
        assert!(c > 0.95, "factor {f}: {c}");
    }
    let dropped = project_factors(post, ds, None, &default_precision(post)).unwrap();
    assert_eq!(dropped.warnings.len(), 1);
}

#[test]
fn missing_variables_still_track_full_projection() {
    let (ds, post, _) = fitted();
    let prec = default_precision(post);
    let full = project_factors(post, ds, None, &prec).unwrap();
    let mut rng = seeded(4);
    let keep: Vec<usize> = (0..ds.n_variables()).filter(|_| sigfactor_core::rng::open_unit(&mut rng) > 0.3).collect();
    let part = project_factors(post, &ds.select_rows(&keep), None, &prec).unwrap();
    assert!((part.coverage - keep.len() as f64 / 120.0).abs() < 1e-15);
    for f in 0..3 {
        assert!(common::pearson(part.values.row(f), full.values.row(f)) > 0.9);
    }
}

#[test]
fn intercept_projects_to_zero() {
    let (_, post, _) = fitted();
    let ds = dataset(vec![post.intercept_mean.clone()], post);
    let proj = project_factors(post, &ds, None, &default_precision(post)).unwrap();
    assert!(proj.values.as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn flat_prior_matches_generalized_least_squares() {
    let (ds, post, _) = fitted();
    let proj = project_factors(post, ds, None, &[0.0; 3]).unwrap();
    let a: Vec<Vec<f64>> = (0..120).map(|g| post.loading_overall_mean.row(g)[2..].to_vec()).collect();
    for i in [0usize, 17, 79] {
        // brute-force normal equations
        let mut n = vec![vec![0.0; 3]; 3];
        let mut b = vec![0.0; 3];
        for g in 0..120 {
            let w = 1.0 / post.noise_var_mean[g];
            let r = ds.values()[(g, i)] - post.intercept_mean[g];
            for u in 0..3 {
                b[u] += w * a[g][u] * r;
                for v in 0..3 {
                    n[u][v] += w * a[g][u] * a[g][v];
                }
            }
        }
        let (_, sol) = common::logdet_solve(&n, &b);
        for f in 0..3 {
            assert!((proj.values[(f, i)] - sol[f]).abs() < 1e-8 * (1.0 + sol[f].abs()));
        }
    }
}

#[test]
fn no_matched_variables_is_coverage_error() {
    let (_, post, _) = fitted();
    let ds =
        ExpressionDataset::new(Matrix::zeros(1, 2), vec!["other".into()], vec!["a".into(), "b".into()], vec![false])
            .unwrap();
    assert!(matches!(project_factors(post, &ds, None, &default_precision(post)), Err(sigfactor_core::Error::Coverage)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_and_order_invariant(seed in 0u64..1000) {
        let (_, post, _) = fitted();
        let mut rng = seeded(seed);
        let x1: Vec<f64> = post.intercept_mean.iter().map(|m| m + std_normal(&mut rng)).collect();
        let x2: Vec<f64> = post.intercept_mean.iter().map(|m| m + std_normal(&mut rng)).collect();
        let sum: Vec<f64> = (0..x1.len()).map(|g| x1[g] + x2[g] - post.intercept_mean[g]).collect();
        let ds = dataset(vec![x1.clone(), x2.clone(), sum, post.intercept_mean.clone()], post);
        let prec = default_precision(post);
        let p = project_factors(post, &ds, None, &prec).unwrap();
        for f in 0..3 {
            let lhs = p.values[(f, 2)];
            let rhs = p.values[(f, 0)] + p.values[(f, 1)] - p.values[(f, 3)];
            prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
        }
        let swapped = dataset(vec![x2, x1], post);
        let q = project_factors(post, &swapped, None, &prec).unwrap();
        for f in 0..3 {
            prop_assert_eq!(q.values[(f, 0)], p.values[(f, 1)]);
            prop_assert_eq!(q.values[(f, 1)], p.values[(f, 0)]);
        }
    }
}
