use std::path::{Path, PathBuf};

use serde::Serialize;
use sigfactor_core::dataset::{artefact_controls, filter_variables, numbered_ids, ExpressionDataset, FilterPolicy};
use sigfactor_core::evolution::{evolve, EvolutionConfig};
use sigfactor_core::factor::{fit_factor_model, FactorModelSpec, FactorPosterior, ImputeConfig};
use sigfactor_core::linalg::Matrix;
use sigfactor_core::projection::{default_precision, project_factors};
use sigfactor_core::regression::{
    fit_sparse_regression, sparsity_summary, InclusionPrior, InterceptPrior, McmcConfig, SparseRegressionPosterior,
    SparseRegressionPrior, VariancePrior,
};
use sigfactor_core::rng::{derive_seed, seeded, std_normal};
use sigfactor_core::signature::{augment_dataset, score_samples, standardize_scores, SignatureScores};
use sigfactor_core::survival::{
    kaplan_meier, predict_median_survival, shotgun_search, stratify, KaplanMeierCurve, ModelSearchLedger, SearchConfig,
    SurvivalData, SurvivalRecord, WeibullPrior,
};
use sigfactor_core::synthetic::{
    gen_factor, gen_regression, gen_survival, table1_design, FactorPlan, PlantedFactorTruth, PlantedRegressionTruth,
    PlantedSurvivalTruth,
};

use crate::cli::*;
use crate::error::{CliError, Result};
use crate::io::*;
use crate::manifest::Manifest;

/// Output directory plus the manifest that records what was written into it.
struct Run {
    dir: PathBuf,
    manifest: Manifest,
}

impl Run {
    fn start(dir: &Path, subcommand: &str, config: &impl Serialize, seed: Option<u64>) -> Result<Self> {
        create_dir(dir)?;
        Ok(Self { dir: dir.to_path_buf(), manifest: Manifest::new(subcommand, config, seed) })
    }

    fn file(&mut self, name: &str) -> PathBuf {
        self.manifest.output(name);
        self.dir.join(name)
    }

    fn note(&mut self, note: impl Into<String>) {
        self.manifest.notes.push(note.into());
    }

    fn finish(self) -> Result<()> {
        self.manifest.write(&self.dir)
    }
}

fn mcmc(a: &McmcArgs) -> McmcConfig {
    McmcConfig::new(a.iterations, a.burnin, a.seed)
}

fn prior(a: &PriorArgs) -> SparseRegressionPrior {
    SparseRegressionPrior {
        inclusion: InclusionPrior::Beta { shape1: a.inclusion_a, shape2: a.inclusion_b },
        slab_variance: VariancePrior::InverseGamma { shape: a.slab_shape, scale: a.slab_scale },
        noise: VariancePrior::InverseGamma { shape: a.noise_shape, scale: a.noise_scale },
        intercept: InterceptPrior { mean: None, variance: a.intercept_var },
    }
}

fn control_scores(ds: &ExpressionDataset, k: usize) -> Result<Matrix> {
    if k == 0 {
        return Ok(Matrix::zeros(0, ds.n_samples()));
    }
    Ok(artefact_controls(ds, k)?)
}

fn non_control(ds: &ExpressionDataset) -> ExpressionDataset {
    let keep: Vec<usize> = (0..ds.n_variables()).filter(|&i| !ds.control_flags()[i]).collect();
    ds.select_rows(&keep)
}

fn factor_columns(k: usize, l: usize) -> Vec<String> {
    let mut cols = numbered_ids("control", k);
    cols.extend(numbered_ids("factor", l));
    cols
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

pub fn fit_signatures(a: &FitSignaturesArgs) -> Result<()> {
    let mut run = Run::start(&a.out, "fit-signatures", a, Some(a.mcmc.seed))?;
    run.manifest.input(&a.expression)?;
    run.manifest.input(&a.design)?;
    let ds = read_expression(&a.expression, &a.control.control_prefix)?;
    let mut design = read_design(&a.design, ds.sample_ids())?;
    if a.control.controls > 0 {
        let c = artefact_controls(&ds, a.control.controls)?;
        design = design.with_controls(&c, &a.control.control_prefix)?;
    }
    let model = if a.no_filter {
        non_control(&ds)
    } else {
        filter_variables(&ds, &FilterPolicy::new(a.min_median, a.min_range)?)?
    };
    run.note(format!("{} of {} variables modeled", model.n_variables(), ds.n_variables()));
    let post = fit_sparse_regression(&model, &design, &prior(&a.prior), &mcmc(&a.mcmc))?;
    write_signature_outputs(&mut run, &post, design.kinds(), a.threshold)?;
    run.finish()
}

fn write_signature_outputs(
    run: &mut Run,
    post: &SparseRegressionPosterior,
    kinds: &[sigfactor_core::dataset::EffectKind],
    threshold: f64,
) -> Result<()> {
    write_json(&run.file("posterior.json"), post)?;
    write_table(&run.file("inclusion_prob.tsv"), "id", &post.variable_ids, &post.effect_names, &post.inclusion_prob)?;
    write_table(&run.file("effect_mean.tsv"), "id", &post.variable_ids, &post.effect_names, &post.effect_mean)?;
    let vars: Vec<Vec<String>> = post
        .variable_ids
        .iter()
        .enumerate()
        .map(|(g, id)| vec![id.clone(), post.intercept_mean[g].to_string(), post.noise_var_mean[g].to_string()])
        .collect();
    write_rows(&run.file("variables.tsv"), &["id", "intercept", "noise_var"], &vars, '\t')?;
    let effects: Vec<Vec<String>> = sparsity_summary(post, threshold)?
        .into_iter()
        .enumerate()
        .map(|(k, s)| {
            vec![
                s.effect,
                kinds[k].as_str().to_string(),
                post.inclusion_rate_mean[k].to_string(),
                post.slab_var_mean[k].to_string(),
                s.included_fraction.to_string(),
                fmt_opt(s.fold_change_min),
                fmt_opt(s.fold_change_mean),
                fmt_opt(s.fold_change_max),
            ]
        })
        .collect();
    let header = [
        "effect",
        "kind",
        "inclusion_rate",
        "slab_var",
        "included_fraction",
        "fold_change_min",
        "fold_change_mean",
        "fold_change_max",
    ];
    write_rows(&run.file("effects.tsv"), &header, &effects, '\t')
}

pub fn score(a: &ScoreArgs) -> Result<()> {
    if a.standardize && a.reference.is_some() {
        return Err(CliError::Config("--standardize and --reference are exclusive".into()));
    }
    let mut run = Run::start(&a.out, "score", a, None)?;
    let post_path = a.signatures.join("posterior.json");
    run.manifest.input(&post_path)?;
    run.manifest.input(&a.expression)?;
    let post: SparseRegressionPosterior = read_json(&post_path)?;
    let ds = read_expression(&a.expression, &a.control_prefix)?;
    let (mut scores, coverage) = score_samples(&post, &ds)?;
    run.note(format!("coverage matched={} missing={}", coverage.matched, coverage.missing));
    let reference = match &a.reference {
        Some(p) => {
            run.manifest.input(p)?;
            Some(non_control(&read_expression(p, &a.control_prefix)?))
        }
        None if a.standardize => Some(non_control(&ds)),
        None => None,
    };
    if let Some(r) = reference {
        let (s, flat) = standardize_scores(&scores, &r)?;
        for k in flat {
            run.note(format!("score row `{}` has no spread", s.effect_names[k]));
        }
        scores = s;
    }
    write_table(&run.file("scores.tsv"), "effect", &scores.effect_names, &scores.sample_ids, &scores.values)?;
    write_json(&run.file("coverage.json"), &coverage)?;
    run.finish()
}

pub fn augment(a: &AugmentArgs) -> Result<()> {
    let mut run = Run::start(&a.out, "augment", a, None)?;
    run.manifest.input(&a.expression)?;
    run.manifest.input(&a.scores)?;
    let ds = read_expression(&a.expression, &a.control_prefix)?;
    let t = read_table(&a.scores)?;
    let scores = SignatureScores::new(t.values, t.row_ids, t.col_ids)?;
    let out = augment_dataset(&ds, &scores)?;
    write_expression(&run.file("expression.tsv"), &out)?;
    let mut names = scores.effect_names.join("\n");
    names.push('\n');
    let p = run.file("metagenes.txt");
    std::fs::write(&p, names).map_err(|e| CliError::io(&p, e))?;
    run.finish()
}

fn founders(a: &FactorArgs, m: &mut Manifest) -> Result<Vec<String>> {
    let mut out: Vec<String> = a.founders.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    if let Some(p) = &a.founders_file {
        m.input(p)?;
        out.extend(read_id_list(p)?);
    }
    if out.is_empty() {
        return Err(CliError::Config("no founders given (use --founders or --founders-file)".into()));
    }
    Ok(out)
}

fn factor_spec(k: usize, l: usize, a: &FactorArgs, p: &PriorArgs) -> FactorModelSpec {
    let mut spec = FactorModelSpec::new(k, l);
    spec.loading_prior = prior(p);
    spec.dp_concentration = a.dp_concentration;
    spec
}

fn write_factor_outputs(run: &mut Run, post: &FactorPosterior) -> Result<()> {
    let (k, l) = (post.k(), post.l());
    let cols = factor_columns(k, l);
    write_json(&run.file("posterior.json"), post)?;
    write_table(&run.file("loading_incl_prob.tsv"), "id", &post.variable_ids, &cols, &post.loading_incl_prob)?;
    write_table(&run.file("loading_mean.tsv"), "id", &post.variable_ids, &cols, &post.loading_mean)?;
    write_table(&run.file("score_mean.tsv"), "column", &cols, &post.sample_ids, &post.score_mean)?;
    let mut heat = vec![];
    for (g, id) in post.variable_ids.iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend((k..k + l).map(|j| post.loading_overall_mean[(g, j)].abs().to_string()));
        heat.push(row);
    }
    let mut header = vec!["id"];
    header.extend(cols[k..].iter().map(String::as_str));
    write_rows(&run.file("heatmap.csv"), &header, &heat, ',')?;
    let vars: Vec<Vec<String>> = post
        .variable_ids
        .iter()
        .enumerate()
        .map(|(g, id)| {
            let founder = post.founders.iter().position(|f| f == id).map_or_else(String::new, |f| cols[k + f].clone());
            vec![id.clone(), post.intercept_mean[g].to_string(), post.noise_var_mean[g].to_string(), founder]
        })
        .collect();
    write_rows(&run.file("variables.tsv"), &["id", "intercept", "noise_var", "founds"], &vars, '\t')?;
    run.note(format!("mean_clusters={}", post.mean_clusters));
    for w in &post.warnings {
        run.note(w.clone());
    }
    Ok(())
}

pub fn fit_factors(a: &FitFactorsArgs) -> Result<()> {
    let mut run = Run::start(&a.out, "fit-factors", a, Some(a.mcmc.seed))?;
    run.manifest.input(&a.expression)?;
    let f = founders(&a.factor, &mut run.manifest)?;
    let ds = read_expression(&a.expression, &a.control.control_prefix)?;
    let controls = control_scores(&ds, a.control.controls)?;
    let ids: Vec<String> = match &a.variables {
        Some(p) => {
            run.manifest.input(p)?;
            let mut ids = f.clone();
            ids.extend(read_id_list(p)?.into_iter().filter(|v| !f.contains(v)));
            ids
        }
        None => {
            let mut ids = f.clone();
            ids.extend(non_control(&ds).variable_ids().iter().filter(|v| !f.contains(v)).cloned());
            ids
        }
    };
    let model = ds.select_ids(&ids)?;
    let spec = factor_spec(a.control.controls, f.len(), &a.factor, &a.prior);
    let post = fit_factor_model(&model, &controls, &spec, &f, &mcmc(&a.mcmc))?;
    write_factor_outputs(&mut run, &post)?;
    run.finish()
}

pub fn evolve_cmd(a: &EvolveArgs) -> Result<()> {
    let mut run = Run::start(&a.out, "evolve", a, Some(a.mcmc.seed))?;
    run.manifest.input(&a.expression)?;
    let f = founders(&a.factor, &mut run.manifest)?;
    let ds = read_expression(&a.expression, &a.control.control_prefix)?;
    let controls = control_scores(&ds, a.control.controls)?;
    let spec = factor_spec(a.control.controls, f.len(), &a.factor, &a.prior);
    let cfg = EvolutionConfig {
        max_variables: a.max_variables,
        max_factors: a.max_factors,
        genes_per_iteration: a.genes_per_iteration,
        inclusion_threshold: a.inclusion_threshold,
        factor_add_threshold: a.factor_add_threshold,
        max_iterations: a.max_iterations,
        impute: ImputeConfig {
            sweeps: a.impute_sweeps,
            burnin: a.impute_burnin,
            seed: derive_seed(a.mcmc.seed, u64::MAX),
        },
    };
    let (post, trace) = evolve(&ds, &controls, &f, &spec, &cfg, &mcmc(&a.mcmc))?;
    write_factor_outputs(&mut run, &post)?;
    let mut lines = String::new();
    for s in &trace.steps {
        lines.push_str(&serde_json::to_string(s).expect("trace step serializes"));
        lines.push('\n');
    }
    let p = run.file("trace.jsonl");
    std::fs::write(&p, lines).map_err(|e| CliError::io(&p, e))?;
    write_json(&run.file("evolution.json"), &trace)?;
    run.note(format!("stop_reason={}", trace.stop_reason.as_str()));
    run.finish()
}

pub fn project(a: &ProjectArgs) -> Result<()> {
    let mut run = Run::start(&a.out, "project", a, None)?;
    let model_path = a.model.join("posterior.json");
    run.manifest.input(&model_path)?;
    run.manifest.input(&a.expression)?;
    let post: FactorPosterior = read_json(&model_path)?;
    let ds = read_expression(&a.expression, &a.control_prefix)?;
    let controls = if a.with_controls && post.k() > 0 { Some(artefact_controls(&ds, post.k())?) } else { None };
    let precision = if a.gls { vec![0.0; post.l()] } else { default_precision(&post) };
    let proj = project_factors(&post, &ds, controls.as_ref(), &precision)?;
    let names = numbered_ids("factor", post.l());
    write_table(&run.file("scores.tsv"), "factor", &names, &proj.sample_ids, &proj.values)?;
    run.note(format!("coverage={} matched={}", proj.coverage, proj.matched));
    for w in &proj.warnings {
        run.note(w.clone());
    }
    run.finish()
}

fn read_survival_input(a: &SurvivalInput, m: &mut Manifest) -> Result<SurvivalData> {
    m.input(&a.survival)?;
    let data = read_survival(&a.survival)?;
    match &a.covariates {
        Some(p) => {
            m.input(p)?;
            join_covariates(&data, &read_table(p)?, p)
        }
        None => Ok(data),
    }
}

pub fn surv_search(a: &SurvSearchArgs) -> Result<()> {
    let mut run = Run::start(&a.out, "surv-search", a, Some(a.seed))?;
    let data = read_survival_input(&a.input, &mut run.manifest)?;
    let candidates = if a.candidates.is_empty() { data.covariate_names().to_vec() } else { a.candidates.clone() };
    let cfg = SearchConfig { max_subset_size: a.max_subset_size, iterations: a.iterations, seed: a.seed };
    let prior = WeibullPrior {
        log_index_mean: a.log_index_mean,
        log_index_sd: a.log_index_sd,
        coef_var: Some(a.coef_var),
        intercept_var: a.intercept_var,
    };
    let ledger = shotgun_search(&data, &candidates, &cfg, &prior)?;
    write_json(&run.file("ledger.json"), &ledger)?;
    let models: Vec<Vec<String>> = ledger
        .models
        .iter()
        .zip(&ledger.posterior_model_prob)
        .enumerate()
        .map(|(r, (m, p))| {
            let coefs: Vec<String> = m.coefficients.iter().map(|c| c.to_string()).collect();
            vec![
                (r + 1).to_string(),
                p.to_string(),
                m.log_marginal.to_string(),
                m.index.to_string(),
                m.intercept.to_string(),
                m.subset_names.join(","),
                coefs.join(","),
            ]
        })
        .collect();
    let header = ["rank", "probability", "log_marginal", "index", "intercept", "covariates", "coefficients"];
    write_rows(&run.file("models.tsv"), &header, &models, '\t')?;
    let incl: Vec<Vec<String>> = ledger
        .candidate_names
        .iter()
        .zip(&ledger.marginal_inclusion)
        .map(|(n, p)| vec![n.clone(), p.to_string()])
        .collect();
    write_rows(&run.file("inclusion.tsv"), &["covariate", "inclusion"], &incl, '\t')?;
    let names = &ledger.candidate_names;
    write_table(&run.file("pairwise.tsv"), "covariate", names, names, &ledger.pairwise_inclusion)?;
    run.note(format!("{} models visited, {} failed", ledger.models.len(), ledger.failed.len()));
    run.finish()
}

pub fn surv_predict(a: &SurvPredictArgs) -> Result<()> {
    let mut run = Run::start(&a.out, "surv-predict", a, None)?;
    let ledger_path = a.ledger.join("ledger.json");
    run.manifest.input(&ledger_path)?;
    let ledger: ModelSearchLedger = read_json(&ledger_path)?;
    let data = read_survival_input(&a.input, &mut run.manifest)?;
    let cols = ledger
        .candidate_names
        .iter()
        .map(|n| data.column_index(n).ok_or_else(|| CliError::Config(format!("covariate `{n}` missing from input"))))
        .collect::<Result<Vec<_>>>()?;
    let rows = data
        .records()
        .iter()
        .map(|r| {
            let y: Vec<f64> = cols.iter().map(|&c| r.covariates[c]).collect();
            let med = predict_median_survival(&ledger, &y, a.top_m)?;
            Ok(vec![r.id.clone(), r.time.to_string(), u8::from(r.event).to_string(), med.to_string()])
        })
        .collect::<Result<Vec<_>>>()?;
    write_rows(&run.file("predictions.tsv"), &["id", "time", "event", "median_survival"], &rows, '\t')?;
    run.finish()
}

fn km_rows(group: &str, curve: &KaplanMeierCurve, out: &mut Vec<Vec<String>>) {
    out.push(vec![group.to_string(), "0".into(), "1".into(), String::new(), "0".into()]);
    for i in 0..curve.event_times.len() {
        out.push(vec![
            group.to_string(),
            curve.event_times[i].to_string(),
            curve.survival_probs[i].to_string(),
            curve.at_risk[i].to_string(),
            curve.deaths[i].to_string(),
        ]);
    }
}

pub fn km(a: &KmArgs) -> Result<()> {
    let mut run = Run::start(&a.out, "km", a, None)?;
    let data = read_survival_input(&a.input, &mut run.manifest)?;
    let mut rows = Vec::new();
    match &a.stratify_by {
        None => km_rows("all", &kaplan_meier(data.records())?, &mut rows),
        Some(name) => {
            let c = data.column_index(name).ok_or_else(|| CliError::Config(format!("covariate `{name}` not found")))?;
            let values: Vec<f64> = data.records().iter().map(|r| r.covariates[c]).collect();
            let strata = stratify(data.records(), &values)?;
            km_rows("low", &kaplan_meier(&strata.low)?, &mut rows);
            km_rows("high", &kaplan_meier(&strata.high)?, &mut rows);
            let groups: Vec<Vec<String>> = data
                .records()
                .iter()
                .zip(&values)
                .zip(&strata.labels)
                .map(|((r, v), g)| vec![r.id.clone(), v.to_string(), g.as_str().to_string()])
                .collect();
            write_rows(&run.file("groups.tsv"), &["id", name.as_str(), "group"], &groups, '\t')?;
            run.note(format!("threshold={}", strata.threshold));
        }
    }
    write_rows(&run.file("km.csv"), &["group", "time", "survival", "at_risk", "deaths"], &rows, ',')?;
    run.finish()
}

/// Appends `count` flat control probes (`AFFX-1`, ...) with small noise.
fn with_control_probes(ds: &ExpressionDataset, count: usize, seed: u64) -> Result<ExpressionDataset> {
    if count == 0 {
        return Ok(ds.clone());
    }
    let n = ds.n_samples();
    let mut rng = seeded(seed);
    let probes = Matrix::from_fn(count, n, |_, _| 8.0 + 0.2 * std_normal(&mut rng));
    let values = ds.values().vstack(&probes)?;
    let mut ids = ds.variable_ids().to_vec();
    ids.extend(numbered_ids("AFFX-", count));
    let mut flags = ds.control_flags().to_vec();
    flags.extend(std::iter::repeat_n(true, count));
    Ok(ExpressionDataset::new(values, ids, ds.sample_ids().to_vec(), flags)?)
}

fn renamed_samples(ds: &ExpressionDataset, prefix: &str) -> Result<ExpressionDataset> {
    Ok(ExpressionDataset::new(
        ds.values().clone(),
        ds.variable_ids().to_vec(),
        numbered_ids(prefix, ds.n_samples()),
        ds.control_flags().to_vec(),
    )?)
}

fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut s = lines.join("\n");
    s.push('\n');
    std::fs::write(path, s).map_err(|e| CliError::io(path, e))
}

#[derive(Serialize)]
struct PipelineTruth<'a> {
    regression: &'a PlantedRegressionTruth,
    factor: &'a PlantedFactorTruth,
    validation_scores: &'a Matrix,
    survival: &'a PlantedSurvivalTruth,
}

fn factor_truth(a: &SimulateArgs, seed: u64) -> Result<PlantedFactorTruth> {
    let plan = FactorPlan {
        p: a.variables,
        n: a.samples,
        l: a.factors,
        k: 0,
        members: a.members,
        loading_scale: a.loading_scale,
        noise_var: a.noise_var,
        seed,
    };
    Ok(PlantedFactorTruth::sparse(&plan)?)
}

fn survival_truth(a: &SimulateArgs, gamma: Vec<f64>, seed: u64) -> PlantedSurvivalTruth {
    PlantedSurvivalTruth {
        true_a: a.weibull_index,
        intercept: -1.5 * a.weibull_index,
        true_gamma: gamma,
        censoring_rate: a.censoring_rate,
        seed,
    }
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let mut run = Run::start(&a.out, "simulate", a, Some(a.seed))?;
    let probes_seed = derive_seed(a.seed, 90);
    match a.kind {
        SimulateKind::Regression => {
            let truth =
                PlantedRegressionTruth::sparse(table1_design(), a.variables, a.planted, a.beta, a.noise_var, a.seed)?;
            let ds = with_control_probes(&gen_regression(&truth)?, a.control_probes, probes_seed)?;
            write_expression(&run.file("expression.tsv"), &ds)?;
            write_design(&run.file("design.tsv"), &truth.design, ds.sample_ids())?;
            write_json(&run.file("truth.json"), &truth)?;
        }
        SimulateKind::Factor => {
            let truth = factor_truth(a, a.seed)?;
            let ds = with_control_probes(&gen_factor(&truth)?, a.control_probes, probes_seed)?;
            write_expression(&run.file("expression.tsv"), &ds)?;
            write_lines(&run.file("founders.txt"), &numbered_ids("g", a.factors))?;
            write_json(&run.file("truth.json"), &truth)?;
        }
        SimulateKind::Survival => {
            let c = a.covariates;
            let mut rng = seeded(derive_seed(a.seed, 1));
            let z = Matrix::from_fn(a.samples, c, |_, _| std_normal(&mut rng));
            let gamma: Vec<f64> = (0..c).map(|j| [1.0, -0.7].get(j).copied().unwrap_or(0.0)).collect();
            let truth = survival_truth(a, gamma, derive_seed(a.seed, 2));
            let data = gen_survival(&truth, &z, &numbered_ids("x", c))?;
            write_survival(&run.file("survival.tsv"), &data)?;
            write_json(&run.file("truth.json"), &truth)?;
        }
        SimulateKind::Pipeline => simulate_pipeline(a, &mut run, probes_seed)?,
    }
    run.finish()
}

/// An experiment with a planted signature, a cohort and a validation set
/// sharing planted factor loadings, and cohort survival driven by factor 1.
fn simulate_pipeline(a: &SimulateArgs, run: &mut Run, probes_seed: u64) -> Result<()> {
    let reg = PlantedRegressionTruth::sparse(
        table1_design(),
        a.variables,
        a.planted,
        a.beta,
        a.noise_var,
        derive_seed(a.seed, 10),
    )?;
    let exp = renamed_samples(&gen_regression(&reg)?, "e")?;
    let exp = with_control_probes(&exp, a.control_probes, derive_seed(probes_seed, 0))?;
    write_expression(&run.file("experiment.tsv"), &exp)?;
    write_design(&run.file("design.tsv"), &reg.design, exp.sample_ids())?;

    let fac = factor_truth(a, derive_seed(a.seed, 11))?;
    let cohort = with_control_probes(&gen_factor(&fac)?, a.control_probes, derive_seed(probes_seed, 1))?;
    write_expression(&run.file("cohort.tsv"), &cohort)?;

    let mut val = fac.clone();
    val.seed = derive_seed(a.seed, 12);
    let mut rng = seeded(derive_seed(a.seed, 13));
    val.true_scores = Matrix::from_fn(fac.l(), a.samples, |_, _| std_normal(&mut rng));
    let validation = renamed_samples(&gen_factor(&val)?, "v")?;
    let validation = with_control_probes(&validation, a.control_probes, derive_seed(probes_seed, 2))?;
    write_expression(&run.file("validation.tsv"), &validation)?;

    let driver = Matrix::from_fn(a.samples, 1, |i, _| fac.true_scores[(0, i)]);
    let surv = survival_truth(a, vec![1.0], derive_seed(a.seed, 14));
    let planted = gen_survival(&surv, &driver, &["factor1".to_string()])?;
    let mut rng = seeded(derive_seed(a.seed, 15));
    let records: Vec<SurvivalRecord> = planted
        .records()
        .iter()
        .zip(cohort.sample_ids())
        .map(|(r, id)| SurvivalRecord {
            id: id.clone(),
            time: r.time,
            event: r.event,
            covariates: vec![60.0 + 8.0 * std_normal(&mut rng)],
        })
        .collect();
    let data = SurvivalData::new(vec!["age".to_string()], records)?;
    write_survival(&run.file("survival.tsv"), &data)?;
    write_lines(&run.file("founders.txt"), &numbered_ids("g", a.factors))?;
    let truth = PipelineTruth { regression: &reg, factor: &fac, validation_scores: &val.true_scores, survival: &surv };
    write_json(&run.file("truth.json"), &truth)
}
