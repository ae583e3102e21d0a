mod common;

use sigfactor_core::dataset::{numbered_ids, ExpressionDataset};
use sigfactor_core::factor::*;
use sigfactor_core::linalg::Matrix;
use sigfactor_core::regression::McmcConfig;
use sigfactor_core::rng::{seeded, std_normal};
use sigfactor_core::synthetic::{gen_factor, FactorPlan, PlantedFactorTruth};

fn plan(seed: u64) -> FactorPlan {
    FactorPlan { p: 150, n: 100, l: 3, k: 0, members: 30, loading_scale: 1.0, noise_var: 0.5, seed }
}

fn anchors(ds: &ExpressionDataset, l: usize) -> Vec<String> {
    ds.variable_ids()[..l].to_vec()
}

fn rows(m: &Matrix, range: std::ops::Range<usize>) -> Vec<Vec<f64>> {
    range.map(|r| m.row(r).to_vec()).collect()
}

#[test]
fn every_sweep_respects_identifiability_and_controls() {
    let p = FactorPlan { p: 40, n: 30, l: 3, k: 2, members: 8, loading_scale: 1.0, noise_var: 0.3, seed: 5 };
    let truth = PlantedFactorTruth::sparse(&p).unwrap();
    let ds = gen_factor(&truth).unwrap();
    let spec = FactorModelSpec::new(2, 3);
    let mut s = FactorSampler::new(ds.values(), &truth.controls, &spec, 17).unwrap();
    let mut violations = 0;
    for _ in 0..1500 {
        s.step().unwrap();
        let a = s.loadings();
        for g in 0..3 {
            if !(a[(g, 2 + g)] > 0.0) {
                violations += 1;
            }
            for f in g + 1..3 {
                if a[(g, 2 + f)] != 0.0 || s.inclusion_probs()[(g, 2 + f)] != 0.0 {
                    violations += 1;
                }
            }
        }
        for j in 0..2 {
            assert_eq!(s.scores().row(j), truth.controls.row(j));
        }
        assert!(s.noise_vars().iter().all(|&v| v > 0.0));
    }
    assert_eq!(violations, 0);
}

#[test]
fn planted_three_factor_recovery() {
    let mut total = 0.0;
    for seed in 0..3 {
        let truth = PlantedFactorTruth::sparse(&plan(seed)).unwrap();
        let ds = gen_factor(&truth).unwrap();
        let post = fit_factor_model(
            &ds,
            &Matrix::zeros(0, 100),
            &FactorModelSpec::new(0, 3),
            &anchors(&ds, 3),
            &McmcConfig::new(600, 200, seed + 1),
        )
        .unwrap();
        let c = common::aligned_mean_abs_correlation(&rows(&post.score_mean, 0..3), &rows(&truth.true_scores, 0..3));
        total += c;
        // posterior means keep the pattern
        for g in 0..3 {
            assert!(post.loading_mean[(g, g)] > 0.0);
            for f in g + 1..3 {
                assert_eq!(post.loading_overall_mean[(g, f)], 0.0);
                assert_eq!(post.loading_incl_prob[(g, f)], 0.0);
            }
        }
        // reconstruction against the data
        let fit = post.fitted();
        let x = ds.values();
        let mse: f64 = (0..150)
            .flat_map(|g| (0..100).map(move |i| (g, i)))
            .map(|(g, i)| (x[(g, i)] - fit[(g, i)]).powi(2))
            .sum::<f64>()
            / 15000.0;
        assert!(mse < 1.5 * 0.5, "{mse}");
    }
    assert!(total / 3.0 > 0.9);
}

#[test]
fn rank_one_oracle() {
    let mut rng = seeded(3);
    let z: Vec<f64> = (0..40).map(|_| std_normal(&mut rng)).collect();
    let a: Vec<f64> = (0..25).map(|g| if g == 0 { 1.3 } else { std_normal(&mut rng) }).collect();
    let x = Matrix::from_fn(25, 40, |g, i| 4.0 + a[g] * z[i] + 1e-3 * std_normal(&mut rng));
    let ds = ExpressionDataset::new(x, numbered_ids("g", 25), numbered_ids("s", 40), vec![false; 25]).unwrap();
    let post = fit_factor_model(
        &ds,
        &Matrix::zeros(0, 40),
        &FactorModelSpec::new(0, 1),
        &["g1".into()],
        &McmcConfig::new(400, 100, 2),
    )
    .unwrap();
    assert!(post.loading_mean[(0, 0)] > 0.0);
    assert!(common::pearson(post.score_mean.row(0), &z) > 0.99);
}

#[test]
fn null_data_rarely_includes() {
    let mut hits = 0;
    let mut total = 0;
    for seed in 0..10 {
        let mut rng = seeded(100 + seed);
        let x = Matrix::from_fn(60, 40, |_, _| std_normal(&mut rng));
        let ds = ExpressionDataset::new(x, numbered_ids("g", 60), numbered_ids("s", 40), vec![false; 60]).unwrap();
        let post = fit_factor_model(
            &ds,
            &Matrix::zeros(0, 40),
            &FactorModelSpec::new(0, 2),
            &anchors(&ds, 2),
            &McmcConfig::new(300, 100, seed),
        )
        .unwrap();
        for g in 2..60 {
            for f in 0..2 {
                total += 1;
                if post.loading_incl_prob[(g, f)] > 0.99 {
                    hits += 1;
                }
            }
        }
    }
    assert!((hits as f64) < 0.02 * total as f64, "{hits}/{total}");
}

#[test]
fn tiny_concentration_single_cluster() {
    let mut rng = seeded(8);
    let a: Vec<f64> = (0..30).map(|_| std_normal(&mut rng)).collect();
    // every sample shares one latent score
    let x = Matrix::from_fn(30, 25, |g, _| 2.0 + a[g] * 0.7 + 0.3 * std_normal(&mut rng));
    let mut spec = FactorModelSpec::new(0, 1);
    spec.dp_concentration = 1e-6;
    let mut s = FactorSampler::new(&x, &Matrix::zeros(0, 25), &spec, 4).unwrap();
    for _ in 0..20 {
        s.step().unwrap();
    }
    let mut single = 0;
    for _ in 0..500 {
        s.step().unwrap();
        if s.n_clusters() == 1 {
            single += 1;
        }
    }
    assert!(single as f64 > 0.99 * 500.0, "{single}");
}

#[test]
fn imputation_oracles() {
    let truth = PlantedFactorTruth::sparse(&plan(7)).unwrap();
    let full = gen_factor(&truth).unwrap();
    let model_idx: Vec<usize> = (0..120).collect();
    let model = full.select_rows(&model_idx);
    let post = fit_factor_model(
        &model,
        &Matrix::zeros(0, 100),
        &FactorModelSpec::new(0, 3),
        &anchors(&model, 3),
        &McmcConfig::new(500, 150, 3),
    )
    .unwrap();

    // outside copy of founder 2 and pure-noise rows
    let mut extra = vec![full.row(1).to_vec()];
    let mut noise_max = 0.0;
    for seed in 0..10 {
        let mut rng = seeded(500 + seed);
        extra.push((0..100).map(|_| 7.0 + std_normal(&mut rng)).collect());
    }
    let mut ids = full.variable_ids()[..120].to_vec();
    let outside: Vec<String> = (0..extra.len()).map(|i| format!("x{i}")).collect();
    ids.extend(outside.iter().cloned());
    let mut data: Vec<Vec<f64>> = (0..120).map(|g| full.row(g).to_vec()).collect();
    data.extend(extra);
    let ds =
        ExpressionDataset::new(Matrix::from_rows(&data).unwrap(), ids, full.sample_ids().to_vec(), vec![false; 131])
            .unwrap();
    let imp = impute_external_inclusion(&post, &ds, &outside, &ImputeConfig::default()).unwrap();
    assert!(imp[(0, 1)] > 0.99, "{:?}", imp.row(0));
    for r in 1..11 {
        noise_max += imp.row(r).iter().copied().fold(0.0, f64::max);
    }
    assert!(noise_max / 10.0 < 0.5, "{noise_max}");

    // rows are independent of the rest of the batch
    let single = impute_external_inclusion(&post, &ds, &outside[..1], &ImputeConfig::default()).unwrap();
    assert_eq!(single.row(0), imp.row(0));
}
