use sigfactor_core::dataset::{numbered_ids, ExpressionDataset};
use sigfactor_core::evolution::*;
use sigfactor_core::factor::FactorModelSpec;
use sigfactor_core::linalg::Matrix;
use sigfactor_core::regression::McmcConfig;
use sigfactor_core::rng::{seeded, std_normal};
use sigfactor_core::synthetic::{gen_factor, FactorPlan, PlantedFactorTruth};
use std::collections::BTreeSet;

fn planted() -> (ExpressionDataset, PlantedFactorTruth) {
    let plan = FactorPlan { p: 300, n: 80, l: 2, k: 0, members: 19, loading_scale: 1.0, noise_var: 0.5, seed: 12 };
    let truth = PlantedFactorTruth::sparse(&plan).unwrap();
    (gen_factor(&truth).unwrap(), truth)
}

#[test]
fn planted_members_are_recovered() {
    let (ds, truth) = planted();
    let founders = ds.variable_ids()[..2].to_vec();
    let cfg = EvolutionConfig { max_variables: 60, ..EvolutionConfig::default() };
    let mc = McmcConfig::new(500, 150, 3);
    let (post, trace) = evolve(&ds, &Matrix::zeros(0, 80), &founders, &FactorModelSpec::new(0, 2), &cfg, &mc).unwrap();
    let members: BTreeSet<&String> = truth.membership.iter().flatten().map(|&g| &ds.variable_ids()[g]).collect();
    let hit = post.variable_ids.iter().filter(|v| members.contains(v)).count();
    assert!(hit as f64 >= 0.8 * members.len() as f64, "{hit}/{}", members.len());
    assert_eq!(post.l(), 2);
    assert_eq!(post.founders, founders);

    // monotone growth and founder primacy
    let mut size = 0;
    let mut seen: Vec<String> = founders.clone();
    for step in &trace.steps {
        assert!(step.model_size >= size);
        assert_eq!(step.model_size, seen.len());
        size = step.model_size;
        seen.extend(step.variables_added.iter().cloned());
    }
    assert_eq!(seen, trace.variables);
    assert_eq!(&trace.founders[..2], &founders[..]);

    let (_, again) = evolve(&ds, &Matrix::zeros(0, 80), &founders, &FactorModelSpec::new(0, 2), &cfg, &mc).unwrap();
    assert_eq!(trace, again);
}

#[test]
fn null_data_adds_nothing() {
    let mut rng = seeded(77);
    let x = Matrix::from_fn(300, 80, |_, _| std_normal(&mut rng));
    let ds = ExpressionDataset::new(x, numbered_ids("g", 300), numbered_ids("s", 80), vec![false; 300]).unwrap();
    let (_, trace) = evolve(
        &ds,
        &Matrix::zeros(0, 80),
        &numbered_ids("g", 3),
        &FactorModelSpec::new(0, 3),
        &EvolutionConfig::default(),
        &McmcConfig::new(400, 100, 5),
    )
    .unwrap();
    assert_eq!(trace.stop_reason, StopReason::NoAdditions);
    assert!(trace.steps.iter().all(|s| s.variables_added.is_empty()));
}

#[test]
fn limits_are_structural() {
    let (ds, _) = planted();
    let founders = ds.variable_ids()[..2].to_vec();
    let mc = McmcConfig::new(200, 50, 1);
    let spec = FactorModelSpec::new(0, 2);
    let cfg = EvolutionConfig { max_variables: 10, genes_per_iteration: 3, ..EvolutionConfig::default() };
    let (post, trace) = evolve(&ds, &Matrix::zeros(0, 80), &founders, &spec, &cfg, &mc).unwrap();
    assert_eq!(trace.stop_reason, StopReason::SizeLimit);
    assert_eq!(post.variable_ids.len(), 10);
    assert!(trace.steps.iter().all(|s| s.variables_added.len() <= 3));

    let cfg = EvolutionConfig { max_iterations: 2, ..EvolutionConfig::default() };
    let (_, trace) = evolve(&ds, &Matrix::zeros(0, 80), &founders, &spec, &cfg, &mc).unwrap();
    assert_eq!(trace.stop_reason, StopReason::IterationLimit);
    assert_eq!(trace.steps.len(), 2);
}

#[test]
fn shared_residual_structure_adds_a_factor() {
    // one founder, but two planted factors among variables that load on both
    let mut rng = seeded(9);
    let (n, p) = (60, 50);
    let z1: Vec<f64> = (0..n).map(|_| std_normal(&mut rng)).collect();
    let z2: Vec<f64> = (0..n).map(|_| std_normal(&mut rng)).collect();
    let x = Matrix::from_fn(p, n, |g, i| {
        let a1 = if g < 30 { 1.0 } else { 0.0 };
        let a2 = if (20..30).contains(&g) { 1.0 } else { 0.0 };
        a1 * z1[i] + a2 * z2[i] + 0.3 * std_normal(&mut rng)
    });
    let ds = ExpressionDataset::new(x, numbered_ids("g", p), numbered_ids("s", n), vec![false; p]).unwrap();
    let mut founders = vec!["g1".to_string()];
    let cfg = EvolutionConfig { max_variables: 40, max_factors: 2, ..EvolutionConfig::default() };
    let mc = McmcConfig::new(300, 100, 2);
    let (post, trace) = evolve(&ds, &Matrix::zeros(0, n), &founders, &FactorModelSpec::new(0, 1), &cfg, &mc).unwrap();
    assert!(trace.steps.iter().any(|s| s.factor_founder_added.is_some()), "{trace:?}");
    assert!(post.l() <= 2);
    founders.push(trace.founders[1].clone());
    assert_eq!(post.founders, founders);
}
