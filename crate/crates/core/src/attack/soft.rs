//! Soft-label black-box attack: gradient estimation from score queries
//! inside a budgeted optimization loop.
//!
//! The loop structure is: check success with one hard query, estimate the
//! loss gradient at the current point with q + 1 soft queries, take a
//! normalized gradient step projected onto the epsilon ball, repeat until
//! the budget cannot cover the next step. RGF uses Gaussian directions,
//! SPSA is the identical estimator with Rademacher directions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::attack::{project_into_ball, AttackResult, BudgetWindow, DirectionSampler, FailureReason};
use crate::error::{Error, Result};
use crate::linalg::{add, axpy, norm};
use crate::model::{LabeledInstance, QueryOracle};
use crate::subspace::{SamplerKind, SubspaceBasis};

/// Gradient estimator backend: identical finite-difference machinery, only
/// the direction distribution differs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    Rgf,
    Spsa,
}

impl Estimator {
    pub fn sampler_kind(self) -> SamplerKind {
        match self {
            Estimator::Rgf => SamplerKind::Gaussian,
            Estimator::Spsa => SamplerKind::Rademacher,
        }
    }
}

/// Soft-label attack configuration.
#[derive(Debug, Clone)]
pub struct AttackConfig {
    /// l2 radius of the perturbation ball.
    pub epsilon: f64,
    /// Maximum total oracle queries (hard and soft combined).
    pub budget: u64,
    pub estimator: Estimator,
    /// Random directions per gradient estimate.
    pub q: usize,
    /// Finite-difference smoothing radius.
    pub sigma: f64,
    /// Optimizer step size (the gradient is normalized before stepping).
    pub step_size: f64,
    pub subspace: Option<Arc<SubspaceBasis>>,
    pub seed: u64,
    /// Start from a random point on the epsilon sphere instead of zero.
    pub random_init: bool,
}

impl AttackConfig {
    /// Defaults: q = 10, sigma = 1e-4 * sqrt(D), step = epsilon / 10,
    /// deterministic zero initializer.
    pub fn for_dim(dim: usize, epsilon: f64, budget: u64, seed: u64) -> Self {
        Self {
            epsilon,
            budget,
            estimator: Estimator::Rgf,
            q: 10,
            sigma: 1e-4 * (dim as f64).sqrt(),
            step_size: epsilon / 10.0,
            subspace: None,
            seed,
            random_init: false,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!("epsilon {} must be > 0", self.epsilon)));
        }
        if self.budget == 0 {
            return Err(Error::InvalidArgument("budget must be >= 1".into()));
        }
        if self.q == 0 {
            return Err(Error::InvalidArgument("q must be >= 1".into()));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma {} must be > 0", self.sigma)));
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "step_size {} must be > 0",
                self.step_size
            )));
        }
        if let Some(basis) = &self.subspace {
            if basis.dim() != dim {
                return Err(Error::DimensionMismatch {
                    context: "AttackConfig::validate",
                    expected: dim,
                    got: basis.dim(),
                });
            }
        }
        Ok(())
    }
}

/// Margin loss on raw scores: `scores[y] - max_{i != y} scores[i]`.
///
/// Nonpositive exactly when the point is (weakly) misclassified; attacks
/// minimize it.
pub fn margin_loss(scores: &[f64], y: usize) -> Result<f64> {
    if scores.len() < 2 {
        return Err(Error::InvalidArgument("margin loss needs at least two classes".into()));
    }
    if y >= scores.len() {
        return Err(Error::InvalidArgument(format!(
            "label {y} out of range for {} classes",
            scores.len()
        )));
    }
    let other = scores
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != y)
        .map(|(_, &s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(scores[y] - other)
}

/// Finite-difference gradient estimate at `x`:
/// `(1/q) sum_i (loss(x + sigma u_i) - loss(x)) / sigma * u_i`
/// with unit directions from the sampler. Consumes exactly q + 1 soft
/// queries; the 1/q averaging is a recorded convention (the normalized
/// optimizer step makes the attack invariant to it).
pub fn estimate_gradient(
    oracle: &mut QueryOracle,
    directions: &mut DirectionSampler,
    x: &[f64],
    y: usize,
    q: usize,
    sigma: f64,
) -> Result<Vec<f64>> {
    let base = margin_loss(&oracle.soft(x)?, y)?;
    let mut gradient = vec![0.0; x.len()];
    for _ in 0..q {
        let u = directions.unit()?;
        let probe: Vec<f64> = x.iter().zip(&u).map(|(xi, ui)| xi + sigma * ui).collect();
        let loss = margin_loss(&oracle.soft(&probe)?, y)?;
        axpy((loss - base) / (sigma * q as f64), &u, &mut gradient);
    }
    Ok(gradient)
}

/// Standalone RGF estimate with a fresh Gaussian direction stream seeded
/// from the config. Requires remaining budget for q + 1 soft queries.
pub fn rgf_estimate(
    oracle: &mut QueryOracle,
    x_cur: &[f64],
    y: usize,
    config: &AttackConfig,
) -> Result<Vec<f64>> {
    estimate_with_kind(oracle, x_cur, y, config, SamplerKind::Gaussian)
}

/// Standalone SPSA estimate: identical to [`rgf_estimate`] with Rademacher
/// directions.
pub fn spsa_estimate(
    oracle: &mut QueryOracle,
    x_cur: &[f64],
    y: usize,
    config: &AttackConfig,
) -> Result<Vec<f64>> {
    estimate_with_kind(oracle, x_cur, y, config, SamplerKind::Rademacher)
}

fn estimate_with_kind(
    oracle: &mut QueryOracle,
    x_cur: &[f64],
    y: usize,
    config: &AttackConfig,
    kind: SamplerKind,
) -> Result<Vec<f64>> {
    config.validate(oracle.dim())?;
    if oracle.remaining() < config.q as u64 + 1 {
        return Err(Error::BudgetExhausted);
    }
    let mut directions =
        DirectionSampler::new(config.subspace.as_deref(), kind, config.seed, oracle.dim())?;
    estimate_gradient(oracle, &mut directions, x_cur, y, config.q, config.sigma)
}

/// Runs the soft-label attack loop against a correctly classified instance.
///
/// Query accounting: the initial correctness check and the per-iteration
/// success check each cost one hard query and are charged against the
/// budget; a gradient estimate costs q + 1 soft queries and only starts
/// when fully affordable. A zero gradient estimate is resampled once, then
/// the iteration passes without moving.
pub fn soft_label_attack(
    oracle: &mut QueryOracle,
    instance: &LabeledInstance,
    config: &AttackConfig,
) -> Result<AttackResult> {
    let dim = oracle.dim();
    config.validate(dim)?;
    if instance.x.len() != dim {
        return Err(Error::DimensionMismatch {
            context: "soft_label_attack",
            expected: dim,
            got: instance.x.len(),
        });
    }

    let window = BudgetWindow::open(oracle.queries_used(), config.budget);
    let mut directions = DirectionSampler::new(
        config.subspace.as_deref(),
        config.estimator.sampler_kind(),
        config.seed,
        dim,
    )?;

    // Precondition: one counted hard query must confirm the original label.
    if oracle.hard(&instance.x)? != instance.y {
        return Err(Error::MisclassifiedInstance);
    }

    let mut delta = if config.random_init {
        let mut d = directions.unit()?;
        crate::linalg::scale(config.epsilon, &mut d);
        d
    } else {
        vec![0.0; dim]
    };

    let mut iterations = 0u64;
    loop {
        if window.remaining(oracle.queries_used()) == 0 {
            return Ok(AttackResult::failed(
                FailureReason::BudgetExhausted,
                None,
                window.spent(oracle.queries_used()),
                iterations,
            ));
        }
        let x_adv = add(&instance.x, &delta);
        if oracle.hard(&x_adv)? != instance.y {
            return Ok(AttackResult::succeeded(
                delta,
                window.spent(oracle.queries_used()),
                iterations,
            ));
        }

        let cost = config.q as u64 + 1;
        if window.remaining(oracle.queries_used()) < cost {
            return Ok(AttackResult::failed(
                FailureReason::BudgetExhausted,
                None,
                window.spent(oracle.queries_used()),
                iterations,
            ));
        }
        let mut gradient =
            estimate_gradient(oracle, &mut directions, &x_adv, instance.y, config.q, config.sigma)?;
        if norm(&gradient) == 0.0 && window.remaining(oracle.queries_used()) >= cost {
            gradient = estimate_gradient(
                oracle,
                &mut directions,
                &x_adv,
                instance.y,
                config.q,
                config.sigma,
            )?;
        }
        iterations += 1;
        let g_norm = norm(&gradient);
        if g_norm > 0.0 {
            axpy(-config.step_size / g_norm, &gradient, &mut delta);
            project_into_ball(&mut delta, config.epsilon);
        }
        // else: null iteration, the budget decrement is the only progress.
    }
}
