//! `sbx` — subspace-constrained black-box attack toolkit.
//!
//! Subcommands: `gen` (synthetic data), `basis` (build/inspect bases),
//! `attack` (single instance), `eval` (full experiment), `minperturb`
//! (exact minimum-perturbation oracles), `compare` (two reports).
//!
//! Exit codes: 0 success, 1 usage error, 2 data/model error, 3 internal
//! invariant violation.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sbx_core::attack::{
    boundary_attack, signopt_attack, soft_label_attack, AttackConfig, BoundaryConfig, Estimator,
    SignOptConfig,
};
use sbx_core::harness::synth::{generate_synthetic, write_synthetic, SynthConfig};
use sbx_core::harness::{
    compare_runs, load_report, resolve_epsilon, run_experiment, AttackKind, EpsilonRule,
    ExperimentConfig, HardSettings, SoftSettings, SpanningMode,
};
use sbx_core::linalg;
use sbx_core::minperturb::{knn_min_perturbation, span_membership, svm_min_perturbation};
use sbx_core::model::{
    load_labeled_dataset, load_model, load_unlabeled_dataset, Model, ModelSpec, QueryOracle,
};
use sbx_core::subspace::{
    build_basis, load_basis, save_basis, select_singular_vectors, BasisMethod, SelectMode,
};
use sbx_core::Error;

#[derive(Parser)]
#[command(name = "sbx", version, about = "Subspace-constrained black-box attacks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic low-intrinsic-dimension datasets (and optionally a K-NN model).
    Gen(GenArgs),
    /// Build, inspect, or export a subspace basis.
    Basis(BasisArgs),
    /// Attack a single instance and print the detailed result.
    Attack(AttackArgs),
    /// Run a full experiment over an evaluation dataset.
    Eval(EvalArgs),
    /// Exact minimum adversarial perturbation oracles.
    Minperturb(MinperturbArgs),
    /// Compare two experiment reports (ratios are candidate / baseline).
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    intrinsic_dim: usize,
    #[arg(long, default_value_t = 200)]
    n_train: usize,
    #[arg(long, default_value_t = 50)]
    n_eval: usize,
    #[arg(long, default_value_t = 100)]
    n_subspace: usize,
    #[arg(long, default_value_t = 2)]
    classes: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.12)]
    cluster_std: f64,
    #[arg(long, default_value_t = 0.5)]
    mean_radius: f64,
    /// Output directory (train.csv, eval.csv, subspace.csv, frame.basis).
    #[arg(long)]
    out_dir: PathBuf,
    /// Also write a K-NN model built on the train split.
    #[arg(long)]
    knn_model: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    knn_k: usize,
}

#[derive(Args)]
struct BasisArgs {
    #[command(subcommand)]
    action: BasisAction,
}

#[derive(Subcommand)]
enum BasisAction {
    /// Build a basis from an unlabeled CSV dataset and write it to a file.
    Build {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Svd)]
        method: MethodArg,
        /// Keep only k singular vectors from the chosen end of the spectrum.
        #[arg(long, value_enum)]
        select: Option<SelectArg>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        headers: bool,
    },
    /// Print header information of a stored basis.
    Info {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    GramSchmidt,
    Svd,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectArg {
    Top,
    Bottom,
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackArg {
    Rgf,
    Spsa,
    Boundary,
    Signopt,
}

impl From<AttackArg> for AttackKind {
    fn from(a: AttackArg) -> Self {
        match a {
            AttackArg::Rgf => AttackKind::Rgf,
            AttackArg::Spsa => AttackKind::Spsa,
            AttackArg::Boundary => AttackKind::Boundary,
            AttackArg::Signopt => AttackKind::Signopt,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SpanningArg {
    Off,
    Full,
    TopK,
    BottomK,
}

impl From<SpanningArg> for SpanningMode {
    fn from(s: SpanningArg) -> Self {
        match s {
            SpanningArg::Off => SpanningMode::Off,
            SpanningArg::Full => SpanningMode::Full,
            SpanningArg::TopK => SpanningMode::TopK,
            SpanningArg::BottomK => SpanningMode::BottomK,
        }
    }
}

/// Attack hyperparameters shared by `attack` and `eval`.
#[derive(Args)]
struct KnobArgs {
    /// Directions per gradient or sign estimate.
    #[arg(long)]
    q: Option<usize>,
    /// Finite-difference smoothing (soft attacks).
    #[arg(long)]
    sigma: Option<f64>,
    /// Optimizer or direction-update step size.
    #[arg(long)]
    step_size: Option<f64>,
    /// Random perturbation initializer (soft attacks).
    #[arg(long)]
    random_init: bool,
    /// Boundary walk: initial orthogonal step.
    #[arg(long)]
    orth_step: Option<f64>,
    /// Boundary walk: initial contraction step.
    #[arg(long)]
    toward_step: Option<f64>,
    /// Boundary walk: proposals per adaptation window.
    #[arg(long)]
    adapt_window: Option<usize>,
    /// Boundary walk: max initialization probes.
    #[arg(long)]
    init_max_tries: Option<usize>,
    /// Sign-based descent: bisection tolerance.
    #[arg(long)]
    search_tol: Option<f64>,
    /// Sign-based descent: initial random directions.
    #[arg(long)]
    init_directions: Option<usize>,
    /// Sign-based descent: probe smoothing.
    #[arg(long)]
    smoothing: Option<f64>,
}

impl KnobArgs {
    fn soft(&self) -> SoftSettings {
        SoftSettings {
            q: self.q,
            sigma: self.sigma,
            step_size: self.step_size,
            random_init: self.random_init,
        }
    }

    fn hard(&self) -> HardSettings {
        HardSettings {
            orth_step: self.orth_step,
            toward_step: self.toward_step,
            adapt_window: self.adapt_window,
            init_max_tries: self.init_max_tries,
            q: self.q,
            search_tol: self.search_tol,
            step_size: self.step_size,
            init_directions: self.init_directions,
            smoothing: self.smoothing,
        }
    }
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    model: PathBuf,
    /// Labeled CSV dataset holding the instance to attack.
    #[arg(long)]
    dataset: PathBuf,
    /// Row index of the instance.
    #[arg(long)]
    index: usize,
    #[arg(long, value_enum)]
    attack: AttackArg,
    /// Absolute perturbation radius; omit to use sqrt(0.001 D).
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    budget: u64,
    #[arg(long)]
    seed: u64,
    /// Stored basis file constraining the attack subspace.
    #[arg(long)]
    basis: Option<PathBuf>,
    #[arg(long)]
    headers: bool,
    #[command(flatten)]
    knobs: KnobArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    eval: PathBuf,
    #[arg(long)]
    subspace: Option<PathBuf>,
    #[arg(long, value_enum)]
    attack: AttackArg,
    #[arg(long, value_enum, default_value_t = SpanningArg::Off)]
    spanning_mode: SpanningArg,
    #[arg(long)]
    k: Option<usize>,
    /// Absolute perturbation radius; omit to use sqrt(0.001 D).
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    budget: u64,
    /// Master seed (mandatory: experiments are never silently nondeterministic).
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    per_instance_csv: Option<PathBuf>,
    #[arg(long)]
    headers: bool,
    #[command(flatten)]
    knobs: KnobArgs,
}

#[derive(Args)]
struct MinperturbArgs {
    #[command(subcommand)]
    oracle: MinperturbOracle,
}

#[derive(Subcommand)]
enum MinperturbOracle {
    /// Exact K-NN minimum perturbation by neighbor-set enumeration.
    Knn {
        /// Labeled training CSV (also defines the span for the residual check).
        #[arg(long)]
        train: PathBuf,
        /// Labeled CSV holding the instance to perturb.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        index: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        headers: bool,
    },
    /// Closed-form binary SVM minimum perturbation.
    Svm {
        /// SVM model JSON (binary, single weight vector).
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        index: usize,
        /// Optional unlabeled CSV whose span the residual is measured against.
        #[arg(long)]
        span_data: Option<PathBuf>,
        #[arg(long)]
        headers: bool,
    },
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    baseline: PathBuf,
    #[arg(long)]
    candidate: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}

/// Maps errors to the documented exit codes.
fn classify(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::InvalidArgument(_)) | Some(Error::InvalidExperiment(_)) => 1,
        Some(Error::NotConverged(_)) | Some(Error::BudgetExhausted) => 3,
        Some(_) => 2,
        None => 2,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Gen(args) => gen(args),
        Command::Basis(args) => basis(args),
        Command::Attack(args) => attack(args),
        Command::Eval(args) => eval(args),
        Command::Minperturb(args) => minperturb(args),
        Command::Compare(args) => compare(args),
    }
}

fn gen(args: GenArgs) -> anyhow::Result<()> {
    let mut config = SynthConfig::new(args.dim, args.intrinsic_dim, args.seed);
    config.n_train = args.n_train;
    config.n_eval = args.n_eval;
    config.n_subspace = args.n_subspace;
    config.classes = args.classes;
    config.cluster_std = args.cluster_std;
    config.mean_radius = args.mean_radius;
    let output = generate_synthetic(&config)?;
    let paths = write_synthetic(&output, &args.out_dir)?;
    println!("train:    {}", paths.train.display());
    println!("eval:     {}", paths.eval.display());
    println!("subspace: {}", paths.subspace.display());
    println!("frame:    {}", paths.frame.display());
    if let Some(model_path) = args.knn_model {
        let model = ModelSpec::Knn {
            k: args.knn_k,
            classes: args.classes,
            train: output.train.clone(),
        };
        sbx_core::model::save_model(&model, &model_path)?;
        println!("model:    {}", model_path.display());
    }
    Ok(())
}

fn basis(args: BasisArgs) -> anyhow::Result<()> {
    match args.action {
        BasisAction::Build { input, output, method, select, k, headers } => {
            let dataset = load_unlabeled_dataset(&input, headers)?;
            let method = match method {
                MethodArg::GramSchmidt => BasisMethod::GramSchmidt,
                MethodArg::Svd => BasisMethod::Svd,
            };
            let mut basis = build_basis(&dataset, method)?;
            if let Some(select) = select {
                let k = k.ok_or_else(|| {
                    Error::InvalidArgument("--select requires --k".into())
                })?;
                let mode = match select {
                    SelectArg::Top => SelectMode::Top,
                    SelectArg::Bottom => SelectMode::Bottom,
                };
                basis = select_singular_vectors(&basis, mode, k)?;
            }
            save_basis(&basis, &output)?;
            println!(
                "wrote basis: dim {}, vectors {}, provenance {:?}",
                basis.dim(),
                basis.len(),
                basis.provenance()
            );
            Ok(())
        }
        BasisAction::Info { input } => {
            let basis = load_basis(&input)?;
            println!("dim:        {}", basis.dim());
            println!("vectors:    {}", basis.len());
            println!("provenance: {:?}", basis.provenance());
            match basis.singular_values() {
                Some(sv) => println!(
                    "singular values: {} stored, largest {:.6e}, smallest {:.6e}",
                    sv.len(),
                    sv.first().unwrap(),
                    sv.last().unwrap()
                ),
                None => println!("singular values: none"),
            }
            Ok(())
        }
    }
}

fn attack(args: AttackArgs) -> anyhow::Result<()> {
    let model = load_model(&args.model)?;
    let instances = load_labeled_dataset(&args.dataset, args.headers)?;
    let instance = instances
        .get(args.index)
        .ok_or_else(|| {
            Error::InvalidDataset(format!(
                "index {} out of range ({} rows)",
                args.index,
                instances.len()
            ))
        })?
        .clone();
    let dim = model.dim();
    let epsilon = args
        .epsilon
        .unwrap_or_else(|| resolve_epsilon(EpsilonRule::SqrtDim, dim));
    let basis = args.basis.as_deref().map(load_basis).transpose()?.map(Arc::new);

    let mut oracle = QueryOracle::with_budget(&model, args.budget);
    let result = match args.attack {
        AttackArg::Rgf | AttackArg::Spsa => {
            let mut config = AttackConfig::for_dim(dim, epsilon, args.budget, args.seed);
            config.estimator =
                if matches!(args.attack, AttackArg::Rgf) { Estimator::Rgf } else { Estimator::Spsa };
            if let Some(q) = args.knobs.q {
                config.q = q;
            }
            if let Some(sigma) = args.knobs.sigma {
                config.sigma = sigma;
            }
            if let Some(step) = args.knobs.step_size {
                config.step_size = step;
            }
            config.random_init = args.knobs.random_init;
            config.subspace = basis.clone();
            soft_label_attack(&mut oracle, &instance, &config)?
        }
        AttackArg::Boundary => {
            let mut config = BoundaryConfig::new(epsilon, args.budget, args.seed);
            if let Some(v) = args.knobs.orth_step {
                config.orth_step = v;
            }
            if let Some(v) = args.knobs.toward_step {
                config.toward_step = v;
            }
            if let Some(v) = args.knobs.adapt_window {
                config.adapt_window = v;
            }
            if let Some(v) = args.knobs.init_max_tries {
                config.init_max_tries = v;
            }
            config.subspace = basis.clone();
            boundary_attack(&mut oracle, &instance, &config)?
        }
        AttackArg::Signopt => {
            let mut config = SignOptConfig::new(epsilon, args.budget, args.seed);
            if let Some(v) = args.knobs.q {
                config.q = v;
            }
            if let Some(v) = args.knobs.search_tol {
                config.search_tol = v;
            }
            if let Some(v) = args.knobs.step_size {
                config.step_size = v;
            }
            if let Some(v) = args.knobs.init_directions {
                config.init_directions = v;
            }
            if let Some(v) = args.knobs.smoothing {
                config.smoothing = v;
            }
            config.subspace = basis.clone();
            signopt_attack(&mut oracle, &instance, &config)?
        }
    };

    println!("epsilon:       {epsilon}");
    println!("success:       {}", result.success);
    println!("queries_used:  {}", result.queries_used);
    println!("  soft: {}, hard: {}", oracle.counter().soft_queries, oracle.counter().hard_queries);
    println!("iterations:    {}", result.iterations);
    match result.perturbation_norm() {
        Some(n) => println!("|delta|:       {n}"),
        None => println!("|delta|:       none"),
    }
    if let (Some(basis), Some(delta)) = (&basis, &result.perturbation) {
        println!("span residual: {}", basis.residual_norm(delta)?);
    }
    if let Some(reason) = result.failure_reason {
        println!("failure:       {reason:?}");
    }
    if result.success {
        let delta = result.perturbation.as_ref().unwrap();
        let adversarial = model.predict(&linalg::add(&instance.x, delta)) != instance.y;
        println!("verified:      {adversarial}");
    }
    Ok(())
}

fn eval(args: EvalArgs) -> anyhow::Result<()> {
    let mut config = ExperimentConfig::new(
        &args.model,
        &args.eval,
        args.attack.into(),
        args.budget,
        args.seed,
    );
    config.subspace_dataset_path = args.subspace;
    config.spanning_mode = args.spanning_mode.into();
    config.k = args.k;
    config.epsilon_rule = match args.epsilon {
        Some(v) => EpsilonRule::Absolute(v),
        None => EpsilonRule::SqrtDim,
    };
    config.parallelism = args.parallelism;
    config.csv_has_headers = args.headers;
    config.report_path = args.report.clone();
    config.per_instance_csv_path = args.per_instance_csv.clone();
    config.soft = args.knobs.soft();
    config.hard = args.knobs.hard();

    let report = run_experiment(&config)?;
    println!(
        "evaluated {} (skipped {}), success rate {:.3}",
        report.evaluated, report.skipped, report.success_rate
    );
    match (report.query_mean, report.query_median) {
        (Some(mean), Some(median)) => println!("query mean {mean:.1}, median {median:.1}"),
        _ => println!("query mean n/a, median n/a (no successes)"),
    }
    if let Some(path) = &args.report {
        println!("report: {}", path.display());
    }
    if let Some(path) = &args.per_instance_csv {
        println!("per-instance CSV: {}", path.display());
    }
    Ok(())
}

fn minperturb(args: MinperturbArgs) -> anyhow::Result<()> {
    match args.oracle {
        MinperturbOracle::Knn { train, dataset, index, k, headers } => {
            let train_set = load_labeled_dataset(&train, headers)?;
            let instances = load_labeled_dataset(&dataset, headers)?;
            let instance = instances
                .get(index)
                .ok_or_else(|| {
                    Error::InvalidDataset(format!(
                        "index {index} out of range ({} rows)",
                        instances.len()
                    ))
                })?
                .clone();
            let result = knn_min_perturbation(&train_set, &instance, k)?;
            let span_dataset = sbx_core::subspace::SubspaceDataset::new(
                train_set[0].x.len(),
                train_set.iter().map(|t| t.x.clone()).collect(),
            )?;
            let basis = build_basis(&span_dataset, BasisMethod::Svd)?;
            let (_, residual) = span_membership(&basis, &result.delta, 1e-6)?;
            let report = serde_json::json!({
                "kind": "knn",
                "k": k,
                "delta": result.delta,
                "norm": result.norm(),
                "witness": result.witness,
                "span_residual": residual,
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        MinperturbOracle::Svm { model, dataset, index, span_data, headers } => {
            let model = load_model(&model)?;
            let ModelSpec::Svm { weights, biases, .. } = &model else {
                return Err(Error::InvalidModel("minperturb svm needs an svm model".into()).into());
            };
            if weights.len() != 1 {
                return Err(Error::InvalidModel(
                    "minperturb svm needs the binary single-weight-vector form".into(),
                )
                .into());
            }
            let instances = load_labeled_dataset(&dataset, headers)?;
            let instance = instances
                .get(index)
                .ok_or_else(|| {
                    Error::InvalidDataset(format!(
                        "index {index} out of range ({} rows)",
                        instances.len()
                    ))
                })?
                .clone();
            let delta = svm_min_perturbation(&weights[0], biases[0], &instance.x)?;
            let span_residual = match span_data {
                Some(path) => {
                    let ds = load_unlabeled_dataset(&path, headers)?;
                    let basis = build_basis(&ds, BasisMethod::Svd)?;
                    Some(span_membership(&basis, &delta, 1e-6)?.1)
                }
                None => None,
            };
            let report = serde_json::json!({
                "kind": "svm",
                "delta": delta,
                "norm": linalg::norm(&delta),
                "witness": [],
                "span_residual": span_residual,
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

fn compare(args: CompareArgs) -> anyhow::Result<()> {
    let baseline = load_report(&args.baseline)?;
    let candidate = load_report(&args.candidate)?;
    let cmp = compare_runs(&baseline, &candidate)?;
    let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "n/a".into());
    println!("{:<14} {:>12} {:>12} {:>8}", "metric", "baseline", "candidate", "ratio");
    println!(
        "{:<14} {:>12.3} {:>12.3} {:>8}",
        "success_rate",
        cmp.success_rate.0,
        cmp.success_rate.1,
        fmt_opt(cmp.success_rate_ratio)
    );
    println!(
        "{:<14} {:>12} {:>12} {:>8}",
        "query_mean",
        fmt_opt(cmp.query_mean.0),
        fmt_opt(cmp.query_mean.1),
        fmt_opt(cmp.query_mean_ratio)
    );
    println!(
        "{:<14} {:>12} {:>12} {:>8}",
        "query_median",
        fmt_opt(cmp.query_median.0),
        fmt_opt(cmp.query_median.1),
        fmt_opt(cmp.query_median_ratio)
    );
    Ok(())
}
