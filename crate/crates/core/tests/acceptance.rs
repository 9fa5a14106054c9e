//! Acceptance suite: one test per criterion, each printing one PASS/FAIL
//! line (run with `--nocapture` to see the lines for passing tests).
//!
//! The heavy experiment-level criteria use the synthetic K-NN setup:
//! D = 256 with a 16-dimensional data frame, 200 training points, 50
//! evaluation instances, epsilon = sqrt(0.001 D), budget 10,000, and a
//! finite-difference smoothing of 2.0 (vote-count losses are piecewise
//! constant, so probes must be long enough to cross decision boundaries).

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use sbx_core::attack::{
    boundary_attack, signopt_attack, soft_label_attack, AttackConfig, BoundaryConfig, Estimator,
    SignOptConfig,
};
use sbx_core::harness::synth::{generate_synthetic, write_synthetic, SynthConfig, SynthPaths};
use sbx_core::harness::{
    run_experiment, AttackKind, EpsilonRule, ExperimentConfig, MetricsReport, SpanningMode,
};
use sbx_core::linalg::{
    axpy, dot, gram_schmidt_orthonormalize, norm, project_onto_span, DenseMatrix,
    DEFAULT_DROP_TOL,
};
use sbx_core::minperturb::{
    kkt_residuals, knn_min_perturbation, solve_qp, span_membership, svm_min_perturbation,
    QpProblem, QpStatus,
};
use sbx_core::model::{
    save_model, LabeledInstance, Model, ModelSpec, QueryOracle,
};
use sbx_core::subspace::{
    build_basis, sample_in_subspace, BasisMethod, IsometricSampler, Provenance, SamplerKind,
    SubspaceBasis, SubspaceDataset,
};

fn random_vec(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(lo..hi)).collect()
}

fn gaussian_frame(rng_seed: u64, dim: usize, m: usize) -> SubspaceBasis {
    let mut sampler = IsometricSampler::new(SamplerKind::Gaussian, rng_seed);
    let raw: Vec<Vec<f64>> = (0..m).map(|_| sampler.sample(dim)).collect();
    let set = gram_schmidt_orthonormalize(&raw, DEFAULT_DROP_TOL).unwrap();
    assert_eq!(set.len(), m);
    SubspaceBasis::from_parts(set, None, Provenance::GramSchmidt).unwrap()
}

/// Criterion 1: K-NN minimum perturbations stay in the training span.
#[test]
fn criterion_01_knn_span_property() {
    let start = Instant::now();
    let dim = 12;
    let frame_dim = 5;
    let n_train = 20;
    let mut worst_residual: f64 = 0.0;
    let mut checked = 0;

    for rep in 0..50u64 {
        let k = if rep < 25 { 1 } else { 3 };
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + rep);
        let frame = gaussian_frame(5000 + rep, dim, frame_dim);
        let train: Vec<LabeledInstance> = (0..n_train)
            .map(|i| {
                let coeffs = random_vec(&mut rng, frame_dim, -1.0, 1.0);
                let mut x = vec![0.0; dim];
                for (c, e) in coeffs.iter().zip(frame.orthonormal_set().vectors()) {
                    axpy(*c, e, &mut x);
                }
                LabeledInstance::new(x, i % 2).unwrap()
            })
            .collect();
        let model = ModelSpec::Knn { k, classes: 2, train: train.clone() };
        // The attacked instance may sit anywhere in the ambient space; its
        // label is whatever the model predicts, so it is correctly
        // classified by construction.
        let x = random_vec(&mut rng, dim, -1.5, 1.5);
        let y = model.predict(&x);
        let instance = LabeledInstance::new(x, y).unwrap();
        let result = knn_min_perturbation(&train, &instance, k).unwrap();

        let span_dataset =
            SubspaceDataset::new(dim, train.iter().map(|t| t.x.clone()).collect()).unwrap();
        let span = build_basis(&span_dataset, BasisMethod::Svd).unwrap();
        let (member, residual) = span_membership(&span, &result.delta, 1e-6).unwrap();
        let rel = residual / result.norm().max(1.0);
        worst_residual = worst_residual.max(rel);
        assert!(member, "rep {rep}: span residual {rel:e}");
        checked += 1;
    }

    let elapsed = start.elapsed();
    let pass = checked == 50 && elapsed.as_secs() < 60;
    println!(
        "criterion 1: {} — {checked}/50 deltas in span(train), worst relative residual {:.2e}, {:.1?}",
        if pass { "PASS" } else { "FAIL" },
        worst_residual,
        elapsed
    );
    assert!(pass);
}

/// Criterion 2: the SVM closed form lands on the hyperplane, parallel to w.
#[test]
fn criterion_02_svm_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_plane: f64 = 0.0;
    let mut worst_cross: f64 = 0.0;
    for i in 0..1000 {
        let d = 2 + (i % 15);
        let w = loop {
            let w = random_vec(&mut rng, d, -2.0, 2.0);
            if norm(&w) > 0.1 {
                break w;
            }
        };
        let b = rng.gen_range(-1.0..1.0);
        let x = random_vec(&mut rng, d, -2.0, 2.0);
        let delta = svm_min_perturbation(&w, b, &x).unwrap();

        let plane = (dot(&w, &x) + dot(&w, &delta) + b).abs();
        let w_unit: Vec<f64> = w.iter().map(|v| v / norm(&w)).collect();
        let along = dot(&delta, &w_unit);
        let cross: Vec<f64> = delta.iter().zip(&w_unit).map(|(d, u)| d - along * u).collect();
        worst_plane = worst_plane.max(plane);
        worst_cross = worst_cross.max(norm(&cross));
    }
    let pass = worst_plane < 1e-10 && worst_cross < 1e-10;
    println!(
        "criterion 2: {} — 1000 triples, worst hyperplane residual {:.2e}, worst cross residual {:.2e}",
        if pass { "PASS" } else { "FAIL" },
        worst_plane,
        worst_cross
    );
    assert!(pass);
}

/// Exact lattice minimum of 1/2 ||p||^2 over feasible grid points of
/// [-5, 5]^2 at the given resolution; feasibility is tested directly
/// against A p <= b, independent of the QP solver.
fn lattice_min_objective(p: &QpProblem, h: f64) -> Option<f64> {
    let n = (10.0 / h).round() as i64;
    let feasible = |x: f64, y: f64| {
        (0..p.constraints()).all(|i| {
            let row = p.matrix().row(i);
            row[0] * x + row[1] * y <= p.bound()[i]
        })
    };
    let mut best: Option<f64> = None;
    for ix in 0..=n {
        let x = -5.0 + ix as f64 * h;
        let (mut lo, mut hi) = (-5.0f64, 5.0f64);
        let mut empty = false;
        for i in 0..p.constraints() {
            let row = p.matrix().row(i);
            let c = p.bound()[i] - row[0] * x;
            if row[1].abs() < 1e-300 {
                if c < 0.0 {
                    empty = true;
                    break;
                }
            } else if row[1] > 0.0 {
                hi = hi.min(c / row[1]);
            } else {
                lo = lo.max(c / row[1]);
            }
        }
        if empty || lo > hi {
            continue;
        }
        let lo_idx = (((lo + 5.0) / h).ceil() as i64).clamp(0, n);
        let hi_idx = (((hi + 5.0) / h).floor() as i64).clamp(0, n);
        if lo_idx > hi_idx {
            continue;
        }
        let zero_idx = ((5.0 / h).round() as i64).clamp(lo_idx, hi_idx);
        let mut candidates = vec![lo_idx, hi_idx];
        for off in -5..=5 {
            candidates.push((zero_idx + off).clamp(lo_idx, hi_idx));
        }
        for iy in candidates {
            let y = -5.0 + iy as f64 * h;
            if feasible(x, y) {
                let obj = 0.5 * (x * x + y * y);
                if best.map_or(true, |c| obj < c) {
                    best = Some(obj);
                }
            }
        }
    }
    best
}

/// Random 2D/3-constraint problem, feasible by construction with margins
/// wide enough for the lattice oracle to resolve.
fn random_grid_problem(rng: &mut ChaCha8Rng) -> QpProblem {
    loop {
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|_| loop {
                let r = random_vec(rng, 2, -1.0, 1.0);
                if norm(&r) > 0.2 {
                    break r;
                }
            })
            .collect();
        let parallel = (0..3).any(|i| {
            (i + 1..3).any(|j| {
                (dot(&rows[i], &rows[j]) / (norm(&rows[i]) * norm(&rows[j]))).abs() > 0.85
            })
        });
        if parallel {
            continue;
        }
        let interior = random_vec(rng, 2, -2.0, 2.0);
        let b: Vec<f64> =
            rows.iter().map(|r| dot(r, &interior) + rng.gen_range(0.1..1.2)).collect();
        return QpProblem::new(DenseMatrix::from_rows(&rows).unwrap(), b).unwrap();
    }
}

/// Criterion 3: KKT certificates and lattice-oracle objective agreement.
#[test]
fn criterion_03_qp_certificate() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_gap: f64 = 0.0;
    for _ in 0..100 {
        let problem = random_grid_problem(&mut rng);
        let solution = solve_qp(&problem).unwrap();
        assert_eq!(solution.status, QpStatus::Optimal);
        let residuals = kkt_residuals(&problem, &solution.delta, &solution.lambda);
        assert!(
            residuals.primal <= 1e-8
                && residuals.dual <= 1e-10
                && residuals.stationarity <= 1e-8 * norm(&solution.delta).max(1.0)
                && residuals.complementarity <= 1e-8,
            "KKT residuals out of tolerance: {residuals:?}"
        );
        let reference = lattice_min_objective(&problem, 1e-3).expect("feasible by construction");
        worst_gap = worst_gap.max((solution.objective - reference).abs());
    }
    let pass = worst_gap < 1e-2;
    println!(
        "criterion 3: {} — 100 problems KKT-certified at 1e-8, worst lattice-objective gap {:.2e}",
        if pass { "PASS" } else { "FAIL" },
        worst_gap
    );
    assert!(pass);
}

/// Criterion 4: Gram-Schmidt and sigma>0 SVD projectors agree.
#[test]
fn criterion_04_projector_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let dim = rng.gen_range(2..=20);
        let rank = rng.gen_range(1..=dim.min(8));
        let n_rows = rng.gen_range(rank..=rank + 12);
        let generators: Vec<Vec<f64>> =
            (0..rank).map(|_| random_vec(&mut rng, dim, -1.0, 1.0)).collect();
        let mut instances: Vec<Vec<f64>> = (0..n_rows)
            .map(|_| {
                let mut x = vec![0.0; dim];
                for g in &generators {
                    axpy(rng.gen_range(-1.0..1.0), g, &mut x);
                }
                x
            })
            .collect();
        // Inject duplicates and zero rows in a third of the cases each.
        if case % 3 == 0 {
            let copy = instances[rng.gen_range(0..instances.len())].clone();
            instances.push(copy);
        }
        if case % 3 == 1 {
            instances.push(vec![0.0; dim]);
        }
        if instances.iter().all(|r| norm(r) == 0.0) {
            instances.push(generators[0].clone());
        }

        let dataset = SubspaceDataset::new(dim, instances).unwrap();
        let gs = build_basis(&dataset, BasisMethod::GramSchmidt).unwrap();
        let svd = build_basis(&dataset, BasisMethod::Svd).unwrap();
        assert_eq!(gs.len(), svd.len(), "case {case}: rank disagreement");
        let diff = gs
            .orthonormal_set()
            .projector()
            .max_abs_diff(&svd.orthonormal_set().projector());
        worst = worst.max(diff);
        assert!(diff < 1e-8, "case {case}: projector difference {diff:e}");
    }
    println!("criterion 4: PASS — 100 datasets, worst projector difference {worst:.2e}");
}

/// Criterion 5: in-subspace draws have E||.||^2 = D and stay in the span.
#[test]
fn criterion_05_sampling_scaling_law() {
    let dim = 256;
    let m = 16;
    let draws = 100_000;
    let basis = gaussian_frame(55, dim, m);
    let mut summaries = Vec::new();
    let mut pass = true;
    for kind in [SamplerKind::Gaussian, SamplerKind::Rademacher] {
        let mut sampler = IsometricSampler::new(kind, 555);
        let mut sum_sq = 0.0;
        let mut worst_residual: f64 = 0.0;
        for _ in 0..draws {
            let v = sample_in_subspace(&basis, &mut sampler, dim).unwrap();
            sum_sq += dot(&v, &v);
            let (_, residual) = project_onto_span(basis.orthonormal_set(), &v).unwrap();
            worst_residual = worst_residual.max(residual);
        }
        let mean_sq = sum_sq / draws as f64;
        let rel_err = (mean_sq - dim as f64).abs() / dim as f64;
        pass &= rel_err < 0.05 && worst_residual < 1e-10;
        summaries.push(format!(
            "{kind:?}: mean ||.||^2 = {mean_sq:.2} (rel err {rel_err:.4}), worst residual {worst_residual:.2e}"
        ));
    }
    println!(
        "criterion 5: {} — {draws} draws, {}",
        if pass { "PASS" } else { "FAIL" },
        summaries.join("; ")
    );
    assert!(pass);
}

const SYNTH_SEED: u64 = 2024;
const EXPERIMENT_SIGMA: f64 = 2.0;

fn synth_fixture(dir: &std::path::Path) -> (SynthPaths, std::path::PathBuf) {
    let synth = SynthConfig::new(256, 16, SYNTH_SEED);
    let out = generate_synthetic(&synth).unwrap();
    let paths = write_synthetic(&out, dir).unwrap();
    let model = ModelSpec::Knn { k: 1, classes: 2, train: out.train.clone() };
    let model_path = dir.join("model.json");
    save_model(&model, &model_path).unwrap();
    (paths, model_path)
}

fn experiment(
    model_path: &std::path::Path,
    eval_path: &std::path::Path,
    subspace_path: Option<&std::path::Path>,
    attack: AttackKind,
    master_seed: u64,
    csv_path: Option<&std::path::Path>,
) -> MetricsReport {
    let mut config = ExperimentConfig::new(model_path, eval_path, attack, 10_000, master_seed);
    config.epsilon_rule = EpsilonRule::SqrtDim;
    config.soft.sigma = Some(EXPERIMENT_SIGMA);
    config.parallelism = 2;
    if let Some(path) = subspace_path {
        config.subspace_dataset_path = Some(path.to_path_buf());
        config.spanning_mode = SpanningMode::Full;
    }
    config.per_instance_csv_path = csv_path.map(|p| p.to_path_buf());
    run_experiment(&config).unwrap()
}

/// Criterion 6: spanning RGF and SPSA beat their baselines on query median
/// (ratio <= 0.7) without losing success rate.
#[test]
fn criterion_06_spanning_beats_baseline() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let (paths, model_path) = synth_fixture(dir.path());

    let mut pass = true;
    let mut lines = Vec::new();
    for attack in [AttackKind::Rgf, AttackKind::Spsa] {
        let baseline = experiment(&model_path, &paths.eval, None, attack, 7, None);
        let spanning =
            experiment(&model_path, &paths.eval, Some(&paths.subspace), attack, 7, None);
        let base_median = baseline.query_median.expect("baseline produced successes");
        let span_median = spanning.query_median.expect("spanning produced successes");
        let ratio = span_median / base_median;
        let ok = ratio <= 0.7 && spanning.success_rate >= baseline.success_rate;
        pass &= ok;
        lines.push(format!(
            "{attack:?}: median {span_median:.0}/{base_median:.0} = {ratio:.3}, success {:.3} vs {:.3}",
            spanning.success_rate, baseline.success_rate
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed.as_secs() < 600;
    println!(
        "criterion 6: {} — {}; {:.1?}",
        if pass { "PASS" } else { "FAIL" },
        lines.join("; "),
        elapsed
    );
    assert!(pass);
}

/// Criterion 7: hard-label attacks close in on the exact SVM minimum.
#[test]
fn criterion_07_hard_label_optimality_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut signopt_hits = 0;
    let mut boundary_hits = 0;
    let total = 20;
    for case in 0..total {
        let d = rng.gen_range(8..=16);
        let w = loop {
            let w = random_vec(&mut rng, d, -1.0, 1.0);
            if norm(&w) > 0.5 {
                break w;
            }
        };
        let b = rng.gen_range(-0.5..0.5);
        let model =
            ModelSpec::Svm { dim: d, classes: 2, weights: vec![w.clone()], biases: vec![b] };
        let (x, min_norm) = loop {
            let x = random_vec(&mut rng, d, -1.5, 1.5);
            let min_norm = norm(&svm_min_perturbation(&w, b, &x).unwrap());
            if (0.05..5.0).contains(&min_norm) {
                break (x, min_norm);
            }
        };
        let y = model.predict(&x);
        let instance = LabeledInstance::new(x, y).unwrap();

        let config = SignOptConfig::new(1.1 * min_norm, 10_000, 700 + case);
        let mut oracle = QueryOracle::with_budget(&model, 10_000);
        let result = signopt_attack(&mut oracle, &instance, &config).unwrap();
        if result.success {
            let achieved = result.perturbation_norm().unwrap();
            assert!(achieved >= min_norm * (1.0 - 1e-6), "beat the oracle: {achieved} < {min_norm}");
            signopt_hits += 1;
        }

        let config = BoundaryConfig::new(1.2 * min_norm, 10_000, 900 + case);
        let mut oracle = QueryOracle::with_budget(&model, 10_000);
        let result = boundary_attack(&mut oracle, &instance, &config).unwrap();
        if result.success {
            let achieved = result.perturbation_norm().unwrap();
            assert!(achieved >= min_norm * (1.0 - 1e-6), "beat the oracle: {achieved} < {min_norm}");
            boundary_hits += 1;
        }
    }
    let pass = signopt_hits * 10 >= total * 9 && boundary_hits * 10 >= total * 9;
    println!(
        "criterion 7: {} — sign-based descent within 10% on {signopt_hits}/{total}, boundary walk within 20% on {boundary_hits}/{total}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

/// Criterion 8: a subspace unrelated to the data frame degrades the attack.
#[test]
fn criterion_08_random_subspace_degrades() {
    let dir = tempfile::tempdir().unwrap();
    let (paths, model_path) = synth_fixture(dir.path());

    // Totally random subspace: 16 Gaussian directions with no relation to
    // the data frame, written as an unlabeled dataset whose span they are.
    let mut sampler = IsometricSampler::new(SamplerKind::Gaussian, 0xDEAD_BEEF);
    let trs_rows: Vec<Vec<f64>> = (0..16).map(|_| sampler.sample(256)).collect();
    let trs_path = dir.path().join("trs.csv");
    sbx_core::model::save_unlabeled_dataset(
        &SubspaceDataset::new(256, trs_rows).unwrap(),
        &trs_path,
    )
    .unwrap();

    let baseline = experiment(&model_path, &paths.eval, None, AttackKind::Rgf, 7, None);
    let trs = experiment(&model_path, &paths.eval, Some(&trs_path), AttackKind::Rgf, 7, None);
    let pass = trs.success_rate <= baseline.success_rate;
    println!(
        "criterion 8: {} — totally-random-subspace success {:.3} <= baseline {:.3}",
        if pass { "PASS" } else { "FAIL" },
        trs.success_rate,
        baseline.success_rate
    );
    assert!(pass);
}

/// Model wrapper counting every score evaluation, independent of the
/// oracle's own counter.
struct CountingModel<'a> {
    inner: &'a ModelSpec,
    calls: AtomicU64,
}

impl<'a> CountingModel<'a> {
    fn new(inner: &'a ModelSpec) -> Self {
        Self { inner, calls: AtomicU64::new(0) }
    }
}

impl Model for CountingModel<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn classes(&self) -> usize {
        self.inner.classes()
    }
    fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.scores(x)
    }
}

/// Criterion 9: reported query counts equal instrumented model invocations.
#[test]
fn criterion_09_query_accounting() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut runs = 0;
    for rep in 0..250u64 {
        let d = rng.gen_range(2..=8);
        let w = loop {
            let w = random_vec(&mut rng, d, -1.0, 1.0);
            if norm(&w) > 0.2 {
                break w;
            }
        };
        let b = rng.gen_range(-0.3..0.3);
        let model =
            ModelSpec::Svm { dim: d, classes: 2, weights: vec![w.clone()], biases: vec![b] };
        let x = random_vec(&mut rng, d, -1.0, 1.0);
        let y = model.predict(&x);
        let instance = LabeledInstance::new(x, y).unwrap();
        let budget = rng.gen_range(1..=400);
        let epsilon = rng.gen_range(0.05..1.0);
        let seed = rng.gen();

        for attack_idx in 0..4 {
            let counting = CountingModel::new(&model);
            let mut oracle = QueryOracle::with_budget(&counting, budget);
            let result = match attack_idx {
                0 | 1 => {
                    let mut config = AttackConfig::for_dim(d, epsilon, budget, seed);
                    config.estimator =
                        if attack_idx == 0 { Estimator::Rgf } else { Estimator::Spsa };
                    config.q = rng.gen_range(1..=12);
                    config.sigma = rng.gen_range(1e-4..0.5);
                    soft_label_attack(&mut oracle, &instance, &config)
                }
                2 => {
                    let mut config = BoundaryConfig::new(epsilon, budget, seed);
                    config.init_max_tries = rng.gen_range(1..=50);
                    boundary_attack(&mut oracle, &instance, &config)
                }
                _ => {
                    let mut config = SignOptConfig::new(epsilon, budget, seed);
                    config.q = rng.gen_range(1..=12);
                    config.init_directions = rng.gen_range(1..=10);
                    signopt_attack(&mut oracle, &instance, &config)
                }
            }
            .unwrap();
            let instrumented = counting.calls.load(Ordering::Relaxed);
            assert_eq!(
                instrumented, result.queries_used,
                "rep {rep} attack {attack_idx}: instrumented {instrumented} != reported {}",
                result.queries_used
            );
            assert_eq!(oracle.queries_used(), result.queries_used);
            assert!(result.queries_used <= budget);
            runs += 1;
        }
    }
    println!("criterion 9: PASS — {runs} randomized runs with exact query accounting");
    assert_eq!(runs, 1000);
}

/// Criterion 10: the criterion-6 experiment is bit-deterministic.
#[test]
fn criterion_10_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let (paths, model_path) = synth_fixture(dir.path());

    let mut identical = true;
    let mut compared = 0;
    for (label, attack) in [("rgf", AttackKind::Rgf), ("spsa", AttackKind::Spsa)] {
        for (arm, subspace) in [("baseline", None), ("spanning", Some(paths.subspace.as_path()))] {
            let csv_a = dir.path().join(format!("{label}_{arm}_a.csv"));
            let csv_b = dir.path().join(format!("{label}_{arm}_b.csv"));
            experiment(&model_path, &paths.eval, subspace, attack, 7, Some(&csv_a));
            experiment(&model_path, &paths.eval, subspace, attack, 7, Some(&csv_b));
            let a = std::fs::read(&csv_a).unwrap();
            let b = std::fs::read(&csv_b).unwrap();
            identical &= a == b;
            compared += 1;
        }
    }
    let pass = identical && compared == 4;
    println!(
        "criterion 10: {} — {compared} experiment arms re-run with identical per-instance CSVs",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

/// Oracle dominance spot check shared by the attack criteria: no attack
/// reports a perturbation strictly smaller than the exact minimum.
#[test]
fn oracle_dominance_cross_check() {
    let w = vec![0.9, -0.4, 0.3, 0.7];
    let b = -0.2;
    let model = ModelSpec::Svm { dim: 4, classes: 2, weights: vec![w.clone()], biases: vec![b] };
    let x = vec![0.8, 0.3, -0.5, 0.4];
    let y = model.predict(&x);
    let min_norm = norm(&svm_min_perturbation(&w, b, &x).unwrap());
    let instance = LabeledInstance::new(x, y).unwrap();

    let mut config = AttackConfig::for_dim(4, 2.0 * min_norm, 5_000, 42);
    config.sigma = 1e-3;
    let mut oracle = QueryOracle::with_budget(&model, 5_000);
    let soft = soft_label_attack(&mut oracle, &instance, &config).unwrap();
    let mut oracle = QueryOracle::with_budget(&model, 5_000);
    let hard = signopt_attack(&mut oracle, &instance, &SignOptConfig::new(2.0 * min_norm, 5_000, 42))
        .unwrap();
    for result in [soft, hard] {
        if let Some(n) = result.perturbation_norm() {
            assert!(n >= min_norm * (1.0 - 1e-6), "{n} < oracle minimum {min_norm}");
        }
    }
    println!("oracle dominance: PASS — no attack beat the exact minimum");
}
