//! Query-budgeted black-box attacks.
//!
//! All attacks draw their randomness through a [`DirectionSampler`], which
//! either samples ambient isometric vectors or, when a subspace basis is
//! configured, vectors constrained to its span. Since every attack output
//! is a linear combination of sampled vectors, configuring a basis confines
//! the returned perturbation to the subspace without any explicit
//! projection step.

pub mod hard;
pub mod soft;

pub use hard::{boundary_attack, signopt_attack, signopt_g_eval, BoundaryConfig, RayDistance, SignOptConfig};
pub use soft::{margin_loss, rgf_estimate, soft_label_attack, spsa_estimate, AttackConfig, Estimator};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm, scale};
use crate::subspace::{
    sample_in_subspace, unit_direction_in_subspace, IsometricSampler, SamplerKind, SubspaceBasis,
};

/// Why an attack run ended without success.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    BudgetExhausted,
    InitFailed,
    NoAdversarialDirection,
}

/// Outcome of one attack run.
///
/// On success the perturbation is present, within the epsilon ball, and a
/// hard-label query confirmed the misclassification. Hard-label attacks
/// also report their best adversarial perturbation on failure (its norm
/// exceeds epsilon, otherwise the run would have succeeded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub success: bool,
    pub perturbation: Option<Vec<f64>>,
    pub queries_used: u64,
    pub iterations: u64,
    pub failure_reason: Option<FailureReason>,
}

impl AttackResult {
    pub(crate) fn succeeded(perturbation: Vec<f64>, queries_used: u64, iterations: u64) -> Self {
        Self {
            success: true,
            perturbation: Some(perturbation),
            queries_used,
            iterations,
            failure_reason: None,
        }
    }

    pub(crate) fn failed(
        reason: FailureReason,
        perturbation: Option<Vec<f64>>,
        queries_used: u64,
        iterations: u64,
    ) -> Self {
        Self {
            success: false,
            perturbation,
            queries_used,
            iterations,
            failure_reason: Some(reason),
        }
    }

    pub fn perturbation_norm(&self) -> Option<f64> {
        self.perturbation.as_deref().map(norm)
    }
}

/// Source of isometric random directions, ambient or subspace-constrained.
pub struct DirectionSampler<'a> {
    basis: Option<&'a SubspaceBasis>,
    sampler: IsometricSampler,
    dim: usize,
}

impl<'a> DirectionSampler<'a> {
    pub fn new(
        basis: Option<&'a SubspaceBasis>,
        kind: SamplerKind,
        seed: u64,
        dim: usize,
    ) -> Result<Self> {
        if let Some(b) = basis {
            if b.dim() != dim {
                return Err(Error::DimensionMismatch {
                    context: "DirectionSampler::new",
                    expected: dim,
                    got: b.dim(),
                });
            }
        }
        Ok(Self { basis, sampler: IsometricSampler::new(kind, seed), dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// A raw isometric draw with E||.||^2 = dim.
    pub fn raw(&mut self) -> Vec<f64> {
        match self.basis {
            Some(b) => sample_in_subspace(b, &mut self.sampler, self.dim)
                .expect("dimensions validated at construction"),
            None => self.sampler.sample(self.dim),
        }
    }

    /// A unit-norm direction; a zero draw is resampled once, then reported
    /// as an error.
    pub fn unit(&mut self) -> Result<Vec<f64>> {
        match self.basis {
            Some(b) => unit_direction_in_subspace(b, &mut self.sampler, self.dim),
            None => {
                for _ in 0..2 {
                    let mut v = self.sampler.sample(self.dim);
                    let n = norm(&v);
                    if n > 0.0 {
                        scale(1.0 / n, &mut v);
                        return Ok(v);
                    }
                }
                Err(Error::InvalidArgument("sampled the zero vector twice in a row".into()))
            }
        }
    }
}

/// Radial projection onto the closed l2 ball of the given radius centered
/// at the origin.
pub(crate) fn project_into_ball(delta: &mut [f64], epsilon: f64) {
    let n = norm(delta);
    if n > epsilon {
        scale(epsilon / n, delta);
    }
}

/// Tracks the attack-local query budget on top of a possibly shared oracle.
pub(crate) struct BudgetWindow {
    start: u64,
    budget: u64,
}

impl BudgetWindow {
    pub fn open(used_so_far: u64, budget: u64) -> Self {
        Self { start: used_so_far, budget }
    }

    pub fn spent(&self, used_now: u64) -> u64 {
        used_now - self.start
    }

    pub fn remaining(&self, used_now: u64) -> u64 {
        self.budget.saturating_sub(self.spent(used_now))
    }
}
