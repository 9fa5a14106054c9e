//! Experiment runner: loads a model and datasets, builds the attack
//! subspace once, runs the configured attack over every correctly
//! classified evaluation instance with per-instance derived seeds, and
//! aggregates success-rate and query statistics.
//!
//! Reports are deterministic: no timestamps, per-instance seeds derive from
//! the master seed and the instance index, and results are merged in
//! instance order regardless of worker count.

pub mod synth;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::attack::{
    boundary_attack, signopt_attack, soft_label_attack, AttackConfig, AttackResult,
    BoundaryConfig, Estimator, FailureReason, SignOptConfig,
};
use crate::error::{Error, Result};
use crate::model::{
    load_labeled_dataset, load_model, load_unlabeled_dataset, LabeledInstance, Model, ModelSpec,
    QueryOracle,
};
use crate::rng::derive_seed;
use crate::subspace::{
    build_basis, select_singular_vectors, BasisMethod, SelectMode, SubspaceBasis,
};

/// Which attack the experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    Rgf,
    Spsa,
    Boundary,
    Signopt,
}

/// How the attack subspace is derived from the subspace dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpanningMode {
    /// No subspace: the baseline attack in the full input space.
    Off,
    /// Span of the subspace dataset (SVD basis, all positive singular values).
    Full,
    /// The k largest-singular-value directions.
    TopK,
    /// The k smallest positive-singular-value directions.
    BottomK,
}

/// Perturbation radius rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "value")]
pub enum EpsilonRule {
    Absolute(f64),
    /// epsilon = sqrt(0.001 * D).
    SqrtDim,
}

pub fn resolve_epsilon(rule: EpsilonRule, dim: usize) -> f64 {
    match rule {
        EpsilonRule::Absolute(v) => v,
        EpsilonRule::SqrtDim => (0.001 * dim as f64).sqrt(),
    }
}

/// Soft-attack knobs; `None` resolves to the documented defaults
/// (sigma = 1e-4 sqrt(D), step = epsilon / 10).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SoftSettings {
    pub q: Option<usize>,
    pub sigma: Option<f64>,
    pub step_size: Option<f64>,
    pub random_init: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct HardSettings {
    pub orth_step: Option<f64>,
    pub toward_step: Option<f64>,
    pub adapt_window: Option<usize>,
    pub init_max_tries: Option<usize>,
    pub q: Option<usize>,
    pub search_tol: Option<f64>,
    pub step_size: Option<f64>,
    pub init_directions: Option<usize>,
    pub smoothing: Option<f64>,
}

/// Full experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model_path: PathBuf,
    pub eval_dataset_path: PathBuf,
    pub subspace_dataset_path: Option<PathBuf>,
    pub csv_has_headers: bool,
    pub attack: AttackKind,
    pub spanning_mode: SpanningMode,
    pub k: Option<usize>,
    pub epsilon_rule: EpsilonRule,
    pub budget: u64,
    pub master_seed: u64,
    pub parallelism: usize,
    pub report_path: Option<PathBuf>,
    pub per_instance_csv_path: Option<PathBuf>,
    pub soft: SoftSettings,
    pub hard: HardSettings,
}

impl ExperimentConfig {
    pub fn new(
        model_path: impl Into<PathBuf>,
        eval_dataset_path: impl Into<PathBuf>,
        attack: AttackKind,
        budget: u64,
        master_seed: u64,
    ) -> Self {
        Self {
            model_path: model_path.into(),
            eval_dataset_path: eval_dataset_path.into(),
            subspace_dataset_path: None,
            csv_has_headers: false,
            attack,
            spanning_mode: SpanningMode::Off,
            k: None,
            epsilon_rule: EpsilonRule::SqrtDim,
            budget,
            master_seed,
            parallelism: 1,
            report_path: None,
            per_instance_csv_path: None,
            soft: SoftSettings::default(),
            hard: HardSettings::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::InvalidExperiment("budget must be >= 1".into()));
        }
        if self.parallelism == 0 {
            return Err(Error::InvalidExperiment("parallelism must be >= 1".into()));
        }
        match self.spanning_mode {
            SpanningMode::Off => {}
            SpanningMode::Full => {
                if self.subspace_dataset_path.is_none() {
                    return Err(Error::InvalidExperiment(
                        "spanning mode requires a subspace dataset".into(),
                    ));
                }
            }
            SpanningMode::TopK | SpanningMode::BottomK => {
                if self.subspace_dataset_path.is_none() {
                    return Err(Error::InvalidExperiment(
                        "spanning mode requires a subspace dataset".into(),
                    ));
                }
                if self.k.is_none() {
                    return Err(Error::InvalidExperiment(
                        "top-k/bottom-k spanning requires k".into(),
                    ));
                }
            }
        }
        if self.k.is_some()
            && !matches!(self.spanning_mode, SpanningMode::TopK | SpanningMode::BottomK)
        {
            return Err(Error::InvalidExperiment(
                "k is only meaningful with top-k/bottom-k spanning".into(),
            ));
        }
        Ok(())
    }
}

/// Per-instance outcome in the report and CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceStatus {
    Success,
    Failure,
    /// The model misclassifies the instance; no attack was run.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub index: usize,
    pub status: InstanceStatus,
    pub queries_used: u64,
    pub iterations: u64,
    pub perturbation_norm: Option<f64>,
    /// Residual of the perturbation off the configured subspace (spanning
    /// runs only).
    pub subspace_residual: Option<f64>,
    pub failure_reason: Option<FailureReason>,
}

/// Resolved configuration echoed into the report; comparison keys for
/// [`compare_runs`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub model_path: String,
    pub eval_dataset_path: String,
    pub subspace_dataset_path: Option<String>,
    pub attack: AttackKind,
    pub spanning_mode: SpanningMode,
    pub k: Option<usize>,
    pub epsilon: f64,
    pub budget: u64,
    pub master_seed: u64,
    pub basis_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config: ConfigEcho,
    pub evaluated: usize,
    pub skipped: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Mean queries over successful runs only; absent without successes.
    pub query_mean: Option<f64>,
    /// Median queries over successful runs only; absent without successes.
    pub query_median: Option<f64>,
    pub per_instance: Vec<InstanceRecord>,
    /// Statistical caveat shown with every report.
    pub note: String,
}

const REPORT_NOTE: &str = "query_mean and query_median count successful runs only; \
a method with a lower success rate can post lower query statistics, so read them \
jointly with success_rate";

fn build_attack_result(
    model: &ModelSpec,
    basis: Option<&Arc<SubspaceBasis>>,
    config: &ExperimentConfig,
    epsilon: f64,
    instance: &LabeledInstance,
    seed: u64,
) -> Result<AttackResult> {
    let mut oracle = QueryOracle::with_budget(model, config.budget);
    let dim = model.dim();
    match config.attack {
        AttackKind::Rgf | AttackKind::Spsa => {
            let mut attack_config = AttackConfig::for_dim(dim, epsilon, config.budget, seed);
            attack_config.estimator = if config.attack == AttackKind::Rgf {
                Estimator::Rgf
            } else {
                Estimator::Spsa
            };
            if let Some(q) = config.soft.q {
                attack_config.q = q;
            }
            if let Some(sigma) = config.soft.sigma {
                attack_config.sigma = sigma;
            }
            if let Some(step) = config.soft.step_size {
                attack_config.step_size = step;
            }
            attack_config.random_init = config.soft.random_init;
            attack_config.subspace = basis.cloned();
            soft_label_attack(&mut oracle, instance, &attack_config)
        }
        AttackKind::Boundary => {
            let mut attack_config = BoundaryConfig::new(epsilon, config.budget, seed);
            if let Some(v) = config.hard.orth_step {
                attack_config.orth_step = v;
            }
            if let Some(v) = config.hard.toward_step {
                attack_config.toward_step = v;
            }
            if let Some(v) = config.hard.adapt_window {
                attack_config.adapt_window = v;
            }
            if let Some(v) = config.hard.init_max_tries {
                attack_config.init_max_tries = v;
            }
            attack_config.subspace = basis.cloned();
            boundary_attack(&mut oracle, instance, &attack_config)
        }
        AttackKind::Signopt => {
            let mut attack_config = SignOptConfig::new(epsilon, config.budget, seed);
            if let Some(v) = config.hard.q {
                attack_config.q = v;
            }
            if let Some(v) = config.hard.search_tol {
                attack_config.search_tol = v;
            }
            if let Some(v) = config.hard.step_size {
                attack_config.step_size = v;
            }
            if let Some(v) = config.hard.init_directions {
                attack_config.init_directions = v;
            }
            if let Some(v) = config.hard.smoothing {
                attack_config.smoothing = v;
            }
            attack_config.subspace = basis.cloned();
            signopt_attack(&mut oracle, instance, &attack_config)
        }
    }
}

/// Builds the spanning basis once, per the configured mode.
fn build_spanning_basis(
    config: &ExperimentConfig,
    model_dim: usize,
) -> Result<Option<Arc<SubspaceBasis>>> {
    let Some(path) = &config.subspace_dataset_path else {
        return Ok(None);
    };
    if config.spanning_mode == SpanningMode::Off {
        return Ok(None);
    }
    let dataset = load_unlabeled_dataset(path, config.csv_has_headers)?;
    if dataset.dim() != model_dim {
        return Err(Error::DimensionMismatch {
            context: "subspace dataset vs model",
            expected: model_dim,
            got: dataset.dim(),
        });
    }
    let full = build_basis(&dataset, BasisMethod::Svd)?;
    let basis = match config.spanning_mode {
        SpanningMode::Off => unreachable!(),
        SpanningMode::Full => full,
        SpanningMode::TopK => {
            select_singular_vectors(&full, SelectMode::Top, config.k.unwrap())?
        }
        SpanningMode::BottomK => {
            select_singular_vectors(&full, SelectMode::Bottom, config.k.unwrap())?
        }
    };
    Ok(Some(Arc::new(basis)))
}

/// Checks that no evaluation instance also appears in the subspace dataset
/// (exact vector identity).
fn check_exclusivity(config: &ExperimentConfig, eval: &[LabeledInstance]) -> Result<()> {
    let Some(path) = &config.subspace_dataset_path else {
        return Ok(());
    };
    let subspace = load_unlabeled_dataset(path, config.csv_has_headers)?;
    for (i, inst) in eval.iter().enumerate() {
        for (j, s) in subspace.instances().iter().enumerate() {
            if inst.x == *s {
                return Err(Error::InvalidExperiment(format!(
                    "eval instance {i} is identical to subspace instance {j}; \
                     the datasets must be mutually exclusive"
                )));
            }
        }
    }
    Ok(())
}

/// Runs the full experiment and returns (and optionally writes) the report.
pub fn run_experiment(config: &ExperimentConfig) -> Result<MetricsReport> {
    config.validate()?;
    let model = load_model(&config.model_path)?;
    let eval = load_labeled_dataset(&config.eval_dataset_path, config.csv_has_headers)?;
    let dim = model.dim();
    for (i, inst) in eval.iter().enumerate() {
        if inst.x.len() != dim {
            return Err(Error::InvalidDataset(format!(
                "eval instance {i} has dimension {} but the model expects {dim}",
                inst.x.len()
            )));
        }
        if inst.y >= model.classes() {
            return Err(Error::InvalidDataset(format!(
                "eval instance {i} has label {} but the model has {} classes",
                inst.y,
                model.classes()
            )));
        }
    }
    check_exclusivity(config, &eval)?;
    let basis = build_spanning_basis(config, dim)?;
    let epsilon = resolve_epsilon(config.epsilon_rule, dim);

    let correctly_classified: Vec<bool> =
        eval.iter().map(|inst| model.predict(&inst.x) == inst.y).collect();
    if !correctly_classified.iter().any(|&c| c) {
        return Err(Error::InvalidExperiment(
            "no evaluation instance is correctly classified".into(),
        ));
    }

    let run_one = |(index, instance): (usize, &LabeledInstance)| -> Result<InstanceRecord> {
        if !correctly_classified[index] {
            return Ok(InstanceRecord {
                index,
                status: InstanceStatus::Skipped,
                queries_used: 0,
                iterations: 0,
                perturbation_norm: None,
                subspace_residual: None,
                failure_reason: None,
            });
        }
        let seed = derive_seed(config.master_seed, index as u64);
        let result = build_attack_result(&model, basis.as_ref(), config, epsilon, instance, seed)?;
        let subspace_residual = match (&basis, &result.perturbation) {
            (Some(b), Some(delta)) => Some(b.residual_norm(delta)?),
            _ => None,
        };
        Ok(InstanceRecord {
            index,
            status: if result.success { InstanceStatus::Success } else { InstanceStatus::Failure },
            queries_used: result.queries_used,
            iterations: result.iterations,
            perturbation_norm: result.perturbation_norm(),
            subspace_residual,
            failure_reason: result.failure_reason,
        })
    };

    let per_instance: Vec<InstanceRecord> = if config.parallelism == 1 {
        eval.iter().enumerate().map(run_one).collect::<Result<_>>()?
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.parallelism)
            .build()
            .map_err(|e| Error::InvalidExperiment(format!("worker pool: {e}")))?;
        pool.install(|| {
            eval.par_iter().enumerate().map(run_one).collect::<Result<Vec<_>>>()
        })?
    };

    let skipped = per_instance.iter().filter(|r| r.status == InstanceStatus::Skipped).count();
    let evaluated = per_instance.len() - skipped;
    let mut success_queries: Vec<u64> = per_instance
        .iter()
        .filter(|r| r.status == InstanceStatus::Success)
        .map(|r| r.queries_used)
        .collect();
    success_queries.sort_unstable();
    let successes = success_queries.len();
    let (query_mean, query_median) = if successes == 0 {
        (None, None)
    } else {
        let mean = success_queries.iter().sum::<u64>() as f64 / successes as f64;
        let median = if successes % 2 == 1 {
            success_queries[successes / 2] as f64
        } else {
            (success_queries[successes / 2 - 1] + success_queries[successes / 2]) as f64 / 2.0
        };
        (Some(mean), Some(median))
    };

    let report = MetricsReport {
        config: ConfigEcho {
            model_path: config.model_path.display().to_string(),
            eval_dataset_path: config.eval_dataset_path.display().to_string(),
            subspace_dataset_path: config
                .subspace_dataset_path
                .as_ref()
                .map(|p| p.display().to_string()),
            attack: config.attack,
            spanning_mode: config.spanning_mode,
            k: config.k,
            epsilon,
            budget: config.budget,
            master_seed: config.master_seed,
            basis_size: basis.as_ref().map(|b| b.len()),
        },
        evaluated,
        skipped,
        successes,
        success_rate: successes as f64 / evaluated as f64,
        query_mean,
        query_median,
        per_instance,
        note: REPORT_NOTE.to_string(),
    };

    if let Some(path) = &config.report_path {
        save_report(&report, path)?;
    }
    if let Some(path) = &config.per_instance_csv_path {
        save_instance_csv(&report.per_instance, path)?;
    }
    Ok(report)
}

pub fn save_report(report: &MetricsReport, path: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut file, report)?;
    use std::io::Write;
    file.write_all(b"\n")?;
    Ok(())
}

pub fn load_report(path: &Path) -> Result<MetricsReport> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    Ok(serde_json::from_reader(file)?)
}

/// Per-instance CSV columns:
/// `index,status,queries_used,iterations,perturbation_norm,subspace_residual,failure_reason`
/// with empty fields for absent values.
pub fn save_instance_csv(records: &[InstanceRecord], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "index",
        "status",
        "queries_used",
        "iterations",
        "perturbation_norm",
        "subspace_residual",
        "failure_reason",
    ])?;
    for r in records {
        let status = match r.status {
            InstanceStatus::Success => "success",
            InstanceStatus::Failure => "failure",
            InstanceStatus::Skipped => "skipped",
        };
        let reason = match r.failure_reason {
            Some(FailureReason::BudgetExhausted) => "budget-exhausted",
            Some(FailureReason::InitFailed) => "init-failed",
            Some(FailureReason::NoAdversarialDirection) => "no-adversarial-direction",
            None => "",
        };
        writer.write_record([
            r.index.to_string(),
            status.to_string(),
            r.queries_used.to_string(),
            r.iterations.to_string(),
            r.perturbation_norm.map(|v| v.to_string()).unwrap_or_default(),
            r.subspace_residual.map(|v| v.to_string()).unwrap_or_default(),
            reason.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Side-by-side comparison of two runs of the same experiment shape.
#[derive(Debug, Clone, Serialize)]
pub struct RunComparison {
    pub success_rate: (f64, f64),
    pub success_rate_ratio: Option<f64>,
    pub query_mean: (Option<f64>, Option<f64>),
    pub query_mean_ratio: Option<f64>,
    pub query_median: (Option<f64>, Option<f64>),
    pub query_median_ratio: Option<f64>,
}

fn ratio(a: f64, b: f64) -> Option<f64> {
    if a == 0.0 {
        None
    } else {
        Some(b / a)
    }
}

/// Compares two reports; their model, eval set, attack, epsilon, and budget
/// must match. Ratios are `b / a`.
pub fn compare_runs(a: &MetricsReport, b: &MetricsReport) -> Result<RunComparison> {
    let ca = &a.config;
    let cb = &b.config;
    if ca.model_path != cb.model_path {
        return Err(Error::ReportMismatch("different model paths".into()));
    }
    if ca.eval_dataset_path != cb.eval_dataset_path {
        return Err(Error::ReportMismatch("different eval datasets".into()));
    }
    if ca.attack != cb.attack {
        return Err(Error::ReportMismatch("different attack kinds".into()));
    }
    if ca.epsilon != cb.epsilon {
        return Err(Error::ReportMismatch("different epsilon".into()));
    }
    if ca.budget != cb.budget {
        return Err(Error::ReportMismatch("different budgets".into()));
    }
    let mean_ratio = match (a.query_mean, b.query_mean) {
        (Some(x), Some(y)) => ratio(x, y),
        _ => None,
    };
    let median_ratio = match (a.query_median, b.query_median) {
        (Some(x), Some(y)) => ratio(x, y),
        _ => None,
    };
    Ok(RunComparison {
        success_rate: (a.success_rate, b.success_rate),
        success_rate_ratio: ratio(a.success_rate, b.success_rate),
        query_mean: (a.query_mean, b.query_mean),
        query_mean_ratio: mean_ratio,
        query_median: (a.query_median, b.query_median),
        query_median_ratio: median_ratio,
    })
}
