//! Natively implemented target classifiers behind a query-counting oracle.
//!
//! Three model kinds are supported: K-NN (soft scores are per-class vote
//! counts), linear SVM (per-class margins, or the `(-s, +s)` convention for
//! a single binary weight vector), and feed-forward MLPs (raw final-layer
//! logits). Attacks never touch a model directly; they go through
//! [`QueryOracle`], which validates inputs, enforces an optional query
//! budget, and counts every call exactly once.

mod io;

pub use io::{
    load_labeled_dataset, load_model, load_unlabeled_dataset, save_labeled_dataset, save_model,
    save_unlabeled_dataset,
};

use crate::error::{Error, Result};
use crate::linalg::all_finite;
use serde::{Deserialize, Serialize};

/// An input vector with its ground-truth label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInstance {
    pub x: Vec<f64>,
    pub y: usize,
}

impl LabeledInstance {
    pub fn new(x: Vec<f64>, y: usize) -> Result<Self> {
        if !all_finite(&x) {
            return Err(Error::NonFinite("labeled instance"));
        }
        Ok(Self { x, y })
    }
}

/// Exact counts of oracle calls, incremented by exactly one per call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCounter {
    pub soft_queries: u64,
    pub hard_queries: u64,
}

impl QueryCounter {
    pub fn total(&self) -> u64 {
        self.soft_queries + self.hard_queries
    }
}

/// Activation functions available to MLP layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::InvalidModel(format!("unknown activation tag {other:?}"))),
        }
    }
}

/// One dense MLP layer: `out = activation(W x + b)`, with `W` stored as
/// `output_width` rows of `input_width` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpLayer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// A loaded target classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Knn { k: usize, classes: usize, train: Vec<LabeledInstance> },
    Svm { dim: usize, classes: usize, weights: Vec<Vec<f64>>, biases: Vec<f64> },
    Mlp { dim: usize, classes: usize, layers: Vec<MlpLayer> },
}

impl ModelSpec {
    /// Validates all structural invariants, naming the offending field in
    /// the diagnostic.
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Knn { k, classes, train } => {
                if train.is_empty() {
                    return Err(Error::InvalidModel("knn: train is empty".into()));
                }
                if *k == 0 || *k > train.len() {
                    return Err(Error::InvalidModel(format!(
                        "knn: k = {k} out of range for {} training instances",
                        train.len()
                    )));
                }
                if *classes < 2 {
                    return Err(Error::InvalidModel("knn: classes must be >= 2".into()));
                }
                let dim = train[0].x.len();
                for (i, inst) in train.iter().enumerate() {
                    if inst.x.len() != dim {
                        return Err(Error::InvalidModel(format!(
                            "knn: train[{i}] has dimension {} (expected {dim})",
                            inst.x.len()
                        )));
                    }
                    if !all_finite(&inst.x) {
                        return Err(Error::InvalidModel(format!("knn: train[{i}] is non-finite")));
                    }
                    if inst.y >= *classes {
                        return Err(Error::InvalidModel(format!(
                            "knn: train[{i}] label {} >= classes {classes}",
                            inst.y
                        )));
                    }
                }
            }
            ModelSpec::Svm { dim, classes, weights, biases } => {
                if *classes < 2 {
                    return Err(Error::InvalidModel("svm: classes must be >= 2".into()));
                }
                let expected = if weights.len() == 1 && *classes == 2 { 1 } else { *classes };
                if weights.len() != expected {
                    return Err(Error::InvalidModel(format!(
                        "svm: {} weight vectors for {classes} classes",
                        weights.len()
                    )));
                }
                if biases.len() != weights.len() {
                    return Err(Error::InvalidModel(format!(
                        "svm: biases has length {} (expected {})",
                        biases.len(),
                        weights.len()
                    )));
                }
                for (c, w) in weights.iter().enumerate() {
                    if w.len() != *dim {
                        return Err(Error::InvalidModel(format!(
                            "svm: weights[{c}] has dimension {} (expected {dim})",
                            w.len()
                        )));
                    }
                    if !all_finite(w) {
                        return Err(Error::InvalidModel(format!("svm: weights[{c}] is non-finite")));
                    }
                }
                if !all_finite(biases) {
                    return Err(Error::InvalidModel("svm: biases are non-finite".into()));
                }
            }
            ModelSpec::Mlp { dim, classes, layers } => {
                if layers.is_empty() {
                    return Err(Error::InvalidModel("mlp: layers is empty".into()));
                }
                if *classes < 2 {
                    return Err(Error::InvalidModel("mlp: classes must be >= 2".into()));
                }
                let mut width = *dim;
                for (l, layer) in layers.iter().enumerate() {
                    if layer.weights.is_empty() {
                        return Err(Error::InvalidModel(format!("mlp: layers[{l}].weights is empty")));
                    }
                    for (r, row) in layer.weights.iter().enumerate() {
                        if row.len() != width {
                            return Err(Error::InvalidModel(format!(
                                "mlp: layers[{l}].weights[{r}] has width {} (expected {width})",
                                row.len()
                            )));
                        }
                        if !all_finite(row) {
                            return Err(Error::InvalidModel(format!(
                                "mlp: layers[{l}].weights[{r}] is non-finite"
                            )));
                        }
                    }
                    if layer.bias.len() != layer.weights.len() {
                        return Err(Error::InvalidModel(format!(
                            "mlp: layers[{l}].bias has length {} (expected {})",
                            layer.bias.len(),
                            layer.weights.len()
                        )));
                    }
                    if !all_finite(&layer.bias) {
                        return Err(Error::InvalidModel(format!("mlp: layers[{l}].bias is non-finite")));
                    }
                    width = layer.weights.len();
                }
                if width != *classes {
                    return Err(Error::InvalidModel(format!(
                        "mlp: final layer width {width} != classes {classes}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Score-function interface shared by real models and test instrumentation.
pub trait Model: Sync {
    fn dim(&self) -> usize;
    fn classes(&self) -> usize;
    /// Raw per-class scores. Callers guarantee `x` is finite with length
    /// `dim()`.
    fn scores(&self, x: &[f64]) -> Vec<f64>;

    /// Uncounted prediction; for harness bookkeeping and out-of-band
    /// verification, never for attack logic.
    fn predict(&self, x: &[f64]) -> usize {
        predicted_label(&self.scores(x))
    }
}

/// Argmax with the deterministic tie-break: lowest label index wins.
pub fn predicted_label(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

impl Model for ModelSpec {
    fn dim(&self) -> usize {
        match self {
            ModelSpec::Knn { train, .. } => train[0].x.len(),
            ModelSpec::Svm { dim, .. } => *dim,
            ModelSpec::Mlp { dim, .. } => *dim,
        }
    }

    fn classes(&self) -> usize {
        match self {
            ModelSpec::Knn { classes, .. } => *classes,
            ModelSpec::Svm { classes, .. } => *classes,
            ModelSpec::Mlp { classes, .. } => *classes,
        }
    }

    fn scores(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ModelSpec::Knn { k, classes, train } => {
                // Distance ties break by training-set index: the sort key is
                // (distance^2, index), and the sort below is stable anyway.
                let mut order: Vec<(f64, usize)> = train
                    .iter()
                    .enumerate()
                    .map(|(i, inst)| {
                        let d2: f64 =
                            inst.x.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                        (d2, i)
                    })
                    .collect();
                order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                let mut votes = vec![0.0; *classes];
                for (_, idx) in order.iter().take(*k) {
                    votes[train[*idx].y] += 1.0;
                }
                votes
            }
            ModelSpec::Svm { weights, biases, classes, .. } => {
                if weights.len() == 1 {
                    // Binary convention: one separating hyperplane, scores
                    // (-s, +s) with s = w.x + b.
                    let s = crate::linalg::dot(&weights[0], x) + biases[0];
                    vec![-s, s]
                } else {
                    let mut scores = Vec::with_capacity(*classes);
                    for (w, b) in weights.iter().zip(biases) {
                        scores.push(crate::linalg::dot(w, x) + b);
                    }
                    scores
                }
            }
            ModelSpec::Mlp { layers, .. } => {
                let mut h = x.to_vec();
                for layer in layers {
                    let mut next = Vec::with_capacity(layer.weights.len());
                    for (row, b) in layer.weights.iter().zip(&layer.bias) {
                        next.push(layer.activation.apply(crate::linalg::dot(row, &h) + b));
                    }
                    h = next;
                }
                h
            }
        }
    }
}

/// The target model behind counted soft-label and hard-label endpoints.
///
/// When constructed with a budget, any call that would exceed it fails with
/// [`Error::BudgetExhausted`] before touching the model or the counter, so
/// `queries_used() <= budget` holds unconditionally.
pub struct QueryOracle<'a> {
    model: &'a dyn Model,
    counter: QueryCounter,
    budget: Option<u64>,
}

impl<'a> QueryOracle<'a> {
    pub fn new(model: &'a dyn Model) -> Self {
        Self { model, counter: QueryCounter::default(), budget: None }
    }

    pub fn with_budget(model: &'a dyn Model, budget: u64) -> Self {
        Self { model, counter: QueryCounter::default(), budget: Some(budget) }
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn classes(&self) -> usize {
        self.model.classes()
    }

    pub fn counter(&self) -> QueryCounter {
        self.counter
    }

    pub fn queries_used(&self) -> u64 {
        self.counter.total()
    }

    /// Queries still affordable under the budget (u64::MAX when unbudgeted).
    pub fn remaining(&self) -> u64 {
        match self.budget {
            Some(b) => b.saturating_sub(self.queries_used()),
            None => u64::MAX,
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.model.dim() {
            return Err(Error::DimensionMismatch {
                context: "oracle query",
                expected: self.model.dim(),
                got: x.len(),
            });
        }
        if !all_finite(x) {
            return Err(Error::NonFinite("oracle query input"));
        }
        if self.remaining() == 0 {
            return Err(Error::BudgetExhausted);
        }
        Ok(())
    }

    /// Soft-label query: the full score vector. Costs one query.
    pub fn soft(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        self.counter.soft_queries += 1;
        Ok(self.model.scores(x))
    }

    /// Hard-label query: the predicted label only. Costs one query.
    pub fn hard(&mut self, x: &[f64]) -> Result<usize> {
        self.check(x)?;
        self.counter.hard_queries += 1;
        Ok(predicted_label(&self.model.scores(x)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn knn_two_points() -> ModelSpec {
        ModelSpec::Knn {
            k: 1,
            classes: 2,
            train: vec![
                LabeledInstance::new(vec![0.0, 0.0], 0).unwrap(),
                LabeledInstance::new(vec![2.0, 0.0], 1).unwrap(),
            ],
        }
    }

    #[test]
    fn knn_vote_scores() {
        let model = knn_two_points();
        model.validate().unwrap();
        assert_eq!(model.scores(&[0.5, 0.0]), vec![1.0, 0.0]);
    }

    #[test]
    fn knn_majority_vote() {
        let model = ModelSpec::Knn {
            k: 3,
            classes: 2,
            train: vec![
                LabeledInstance::new(vec![0.0], 0).unwrap(),
                LabeledInstance::new(vec![0.1], 0).unwrap(),
                LabeledInstance::new(vec![0.2], 1).unwrap(),
            ],
        };
        assert_eq!(model.predict(&[0.0]), 0);
    }

    #[test]
    fn knn_distance_tie_breaks_by_index() {
        let model = ModelSpec::Knn {
            k: 1,
            classes: 2,
            train: vec![
                LabeledInstance::new(vec![-1.0, 0.0], 1).unwrap(),
                LabeledInstance::new(vec![1.0, 0.0], 0).unwrap(),
            ],
        };
        // Equidistant from both training points: index 0 wins.
        assert_eq!(model.scores(&[0.0, 0.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn svm_binary_convention() {
        let model = ModelSpec::Svm {
            dim: 2,
            classes: 2,
            weights: vec![vec![1.0, 0.0]],
            biases: vec![-1.0],
        };
        model.validate().unwrap();
        assert_eq!(model.scores(&[2.0, 0.0]), vec![-1.0, 1.0]);
        assert_eq!(model.predict(&[2.0, 0.0]), 1);
    }

    #[test]
    fn tie_breaks_to_lowest_index() {
        assert_eq!(predicted_label(&[1.0, 1.0]), 0);
        assert_eq!(predicted_label(&[0.0, 2.0, 2.0]), 1);
    }

    #[test]
    fn mlp_identity_passthrough() {
        let model = ModelSpec::Mlp {
            dim: 2,
            classes: 2,
            layers: vec![MlpLayer {
                weights: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                bias: vec![0.0, 0.0],
                activation: Activation::Identity,
            }],
        };
        model.validate().unwrap();
        assert_eq!(model.scores(&[0.3, -0.7]), vec![0.3, -0.7]);
    }

    #[test]
    fn mlp_width_mismatch_rejected() {
        let model = ModelSpec::Mlp {
            dim: 3,
            classes: 2,
            layers: vec![MlpLayer {
                weights: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                bias: vec![0.0, 0.0],
                activation: Activation::Identity,
            }],
        };
        assert!(model.validate().is_err());
    }

    #[test]
    fn oracle_counts_exactly_once() {
        let model = knn_two_points();
        let mut oracle = QueryOracle::new(&model);
        oracle.soft(&[0.1, 0.0]).unwrap();
        oracle.soft(&[0.1, 0.0]).unwrap();
        oracle.hard(&[0.1, 0.0]).unwrap();
        assert_eq!(oracle.counter().soft_queries, 2);
        assert_eq!(oracle.counter().hard_queries, 1);
        assert_eq!(oracle.queries_used(), 3);
    }

    #[test]
    fn oracle_budget_is_hard_cap() {
        let model = knn_two_points();
        let mut oracle = QueryOracle::with_budget(&model, 2);
        oracle.hard(&[0.0, 0.0]).unwrap();
        oracle.hard(&[0.0, 0.0]).unwrap();
        assert!(matches!(oracle.hard(&[0.0, 0.0]), Err(Error::BudgetExhausted)));
        assert_eq!(oracle.queries_used(), 2);
    }

    #[test]
    fn oracle_rejects_bad_input() {
        let model = knn_two_points();
        let mut oracle = QueryOracle::new(&model);
        assert!(oracle.soft(&[1.0]).is_err());
        assert!(oracle.soft(&[f64::NAN, 0.0]).is_err());
        assert_eq!(oracle.queries_used(), 0);
    }

    #[test]
    fn hard_label_consistent_with_soft_argmax() {
        let model = knn_two_points();
        let mut oracle = QueryOracle::new(&model);
        for x in [[0.3, 0.4], [1.7, -0.2], [1.0, 0.0]] {
            let scores = oracle.soft(&x).unwrap();
            let hard = oracle.hard(&x).unwrap();
            assert_eq!(hard, predicted_label(&scores));
        }
    }
}
