//! Ground-truth minimum adversarial perturbations.
//!
//! For K-NN the minimum perturbation is found by enumerating every
//! candidate neighbor set T with an adversarial majority and solving the
//! convex QP "make T the K nearest neighbors of x + delta" for each; the
//! smallest feasible optimum wins. For a binary linear SVM the minimum is
//! the closed-form boundary-reaching step along the weight vector. Both
//! return boundary points and are read as infima: hard-label ties sit
//! exactly on the returned perturbation.

mod qp;

pub use qp::{
    kkt_residuals, solve_qp, KktResiduals, QpProblem, QpSolution, QpStatus, KKT_COMPLEMENTARITY_TOL,
    KKT_DUAL_TOL, KKT_PRIMAL_TOL, KKT_STATIONARITY_TOL,
};

use std::collections::HashSet;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, dot, norm, sub, DenseMatrix};
use crate::model::{LabeledInstance, Model, ModelSpec};
use crate::subspace::SubspaceBasis;

/// Maximum number of candidate neighbor sets the exhaustive enumeration
/// will visit.
pub const ENUMERATION_GUARD: u128 = 1_000_000;

/// Minimum perturbation for K-NN with the winning neighbor set.
#[derive(Debug, Clone)]
pub struct KnnMinPerturbation {
    pub delta: Vec<f64>,
    /// Training-set indices of the neighbor set realizing the minimum.
    pub witness: Vec<usize>,
}

impl KnnMinPerturbation {
    pub fn norm(&self) -> f64 {
        norm(&self.delta)
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        result = result.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if result > ENUMERATION_GUARD * 2 {
            return result;
        }
    }
    result
}

/// Majority label of a candidate set, ties broken toward the lowest index
/// (matching the hard-label decision rule).
fn majority_label(labels: &[usize], classes: usize) -> usize {
    let mut votes = vec![0usize; classes];
    for &l in labels {
        votes[l] += 1;
    }
    let mut best = 0;
    for (c, &v) in votes.iter().enumerate().skip(1) {
        if v > votes[best] {
            best = c;
        }
    }
    best
}

/// Exact minimum adversarial perturbation of K-NN by exhaustive enumeration
/// of candidate neighbor sets, one convex QP per candidate.
pub fn knn_min_perturbation(
    train: &[LabeledInstance],
    instance: &LabeledInstance,
    k: usize,
) -> Result<KnnMinPerturbation> {
    let n = train.len();
    if n == 0 {
        return Err(Error::InvalidArgument("knn_min_perturbation: empty training set".into()));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("knn_min_perturbation: K = {k} out of range")));
    }
    let dim = train[0].x.len();
    if instance.x.len() != dim {
        return Err(Error::DimensionMismatch {
            context: "knn_min_perturbation",
            expected: dim,
            got: instance.x.len(),
        });
    }
    if train.iter().any(|t| t.x.len() != dim) {
        return Err(Error::InvalidArgument("knn_min_perturbation: ragged training set".into()));
    }
    let classes = train.iter().map(|t| t.y).max().unwrap() + 1;
    if train.iter().all(|t| t.y == instance.y) {
        return Err(Error::NoAdversary("all training labels equal the instance label".into()));
    }

    let combos = binomial(n, k);
    if combos > ENUMERATION_GUARD {
        return Err(Error::EnumerationGuard { combinations: combos, limit: ENUMERATION_GUARD });
    }

    // Precondition: the instance must be correctly classified.
    let model = ModelSpec::Knn { k, classes: classes.max(2), train: train.to_vec() };
    model.validate()?;
    if model.predict(&instance.x) != instance.y {
        return Err(Error::MisclassifiedInstance);
    }

    let dist2: Vec<f64> = train
        .iter()
        .map(|t| {
            let d = sub(&t.x, &instance.x);
            dot(&d, &d)
        })
        .collect();

    let mut best: Option<(f64, KnnMinPerturbation)> = None;
    for combo in (0..n).combinations(k) {
        let labels: Vec<usize> = combo.iter().map(|&i| train[i].y).collect();
        if majority_label(&labels, classes.max(2)) == instance.y {
            continue;
        }
        let in_t: HashSet<usize> = combo.iter().copied().collect();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut bound: Vec<f64> = Vec::new();
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        let mut infeasible = false;
        for &t_idx in &combo {
            for o_idx in 0..n {
                if in_t.contains(&o_idx) {
                    continue;
                }
                // (x_out - x_in)^T delta <= (||x - x_out||^2 - ||x - x_in||^2) / 2
                let row = sub(&train[o_idx].x, &train[t_idx].x);
                let b = 0.5 * (dist2[o_idx] - dist2[t_idx]);
                if dot(&row, &row) == 0.0 {
                    // Coincident training points: the constraint is 0 <= b.
                    if b < 0.0 {
                        infeasible = true;
                        break;
                    }
                    continue;
                }
                let key: Vec<u64> =
                    row.iter().map(|v| v.to_bits()).chain([b.to_bits()]).collect();
                if seen.insert(key) {
                    rows.push(row);
                    bound.push(b);
                }
            }
            if infeasible {
                break;
            }
        }
        if infeasible {
            continue;
        }
        if rows.is_empty() {
            // No competitors outside T: delta = 0 already realizes T.
            let candidate = KnnMinPerturbation { delta: vec![0.0; dim], witness: combo };
            if best.as_ref().map_or(true, |(obj, _)| 0.0 < *obj) {
                best = Some((0.0, candidate));
            }
            continue;
        }
        let problem = QpProblem::new(DenseMatrix::from_rows(&rows)?, bound)?;
        let solution = solve_qp(&problem)?;
        if solution.status != QpStatus::Optimal {
            continue;
        }
        if best.as_ref().map_or(true, |(obj, _)| solution.objective < *obj) {
            best = Some((
                solution.objective,
                KnnMinPerturbation { delta: solution.delta, witness: combo },
            ));
        }
    }

    best.map(|(_, result)| result)
        .ok_or_else(|| Error::NoAdversary("no feasible adversarial neighbor set".into()))
}

/// Closed-form minimum adversarial perturbation of a binary linear SVM with
/// score `s = w.x + b`: the boundary-reaching step along the weight
/// direction, `delta = -((w.x + b) / ||w||^2) w`.
pub fn svm_min_perturbation(w: &[f64], b: f64, x: &[f64]) -> Result<Vec<f64>> {
    if !all_finite(w) || !b.is_finite() || !all_finite(x) {
        return Err(Error::NonFinite("svm_min_perturbation input"));
    }
    if x.len() != w.len() {
        return Err(Error::DimensionMismatch {
            context: "svm_min_perturbation",
            expected: w.len(),
            got: x.len(),
        });
    }
    let w_norm2 = dot(w, w);
    if w_norm2 == 0.0 {
        return Err(Error::InvalidArgument("svm weight vector is zero".into()));
    }
    let margin = dot(w, x) + b;
    let scale = -margin / w_norm2;
    Ok(w.iter().map(|wi| wi * scale).collect())
}

/// Whether `v` lies in the basis span within `tol * max(1, ||v||)`.
pub fn span_membership(basis: &SubspaceBasis, v: &[f64], tol: f64) -> Result<(bool, f64)> {
    let residual = basis.residual_norm(v)?;
    Ok((residual <= tol * norm(v).max(1.0), residual))
}
