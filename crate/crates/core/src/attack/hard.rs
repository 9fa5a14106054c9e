//! Hard-label attacks: decision-only queries.
//!
//! Two families: a rejection-sampled random walk along the decision
//! boundary (orthogonal move on the sphere around the original input, then
//! a contraction toward it), and direction optimization driven by
//! sign-based gradient estimates of the boundary-distance function
//! `g(theta) = min { t > 0 : c(x + t theta) != y }`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::attack::{AttackResult, BudgetWindow, DirectionSampler, FailureReason};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, scale, sub};
use crate::model::{LabeledInstance, QueryOracle};
use crate::subspace::{SamplerKind, SubspaceBasis};

/// Boundary-walk configuration. Step sizes are relative to the current
/// distance from the original input and adapt toward a 0.25 acceptance
/// rate (multiply or divide by 1.5 per window).
#[derive(Debug, Clone)]
pub struct BoundaryConfig {
    pub epsilon: f64,
    pub budget: u64,
    pub seed: u64,
    pub subspace: Option<Arc<SubspaceBasis>>,
    /// Initial relative size of the orthogonal move.
    pub orth_step: f64,
    /// Initial relative size of the contraction toward the original input.
    pub toward_step: f64,
    /// Proposals per step-size adaptation window.
    pub adapt_window: usize,
    /// Maximum queries spent searching for an adversarial starting point.
    pub init_max_tries: usize,
}

impl BoundaryConfig {
    pub fn new(epsilon: f64, budget: u64, seed: u64) -> Self {
        Self {
            epsilon,
            budget,
            seed,
            subspace: None,
            orth_step: 0.01,
            toward_step: 0.01,
            adapt_window: 30,
            init_max_tries: 200,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!("epsilon {} must be > 0", self.epsilon)));
        }
        if self.budget == 0 {
            return Err(Error::InvalidArgument("budget must be >= 1".into()));
        }
        for (name, v) in [("orth_step", self.orth_step), ("toward_step", self.toward_step)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidArgument(format!("{name} {v} must lie in (0, 1)")));
            }
        }
        if self.adapt_window == 0 || self.init_max_tries == 0 {
            return Err(Error::InvalidArgument("adapt_window and init_max_tries must be >= 1".into()));
        }
        if let Some(basis) = &self.subspace {
            if basis.dim() != dim {
                return Err(Error::DimensionMismatch {
                    context: "BoundaryConfig::validate",
                    expected: dim,
                    got: basis.dim(),
                });
            }
        }
        Ok(())
    }
}

const STEP_ADAPT_FACTOR: f64 = 1.5;
const STEP_ADAPT_TARGET: f64 = 0.25;
const STEP_MIN: f64 = 1e-9;
const STEP_MAX: f64 = 0.99;
const INIT_NORM_GROWTH: f64 = 1.2;

struct AcceptanceWindow {
    tries: usize,
    accepts: usize,
}

impl AcceptanceWindow {
    fn new() -> Self {
        Self { tries: 0, accepts: 0 }
    }

    /// Records one proposal; returns the acceptance rate when the window
    /// fills and resets.
    fn record(&mut self, accepted: bool, window: usize) -> Option<f64> {
        self.tries += 1;
        if accepted {
            self.accepts += 1;
        }
        if self.tries == window {
            let rate = self.accepts as f64 / self.tries as f64;
            self.tries = 0;
            self.accepts = 0;
            Some(rate)
        } else {
            None
        }
    }
}

fn adapt(step: &mut f64, rate: f64) {
    if rate > STEP_ADAPT_TARGET {
        *step *= STEP_ADAPT_FACTOR;
    } else {
        *step /= STEP_ADAPT_FACTOR;
    }
    *step = step.clamp(STEP_MIN, STEP_MAX);
}

/// Random-walk hard-label attack.
///
/// Initialization draws candidate starting points `x + r` with the norm of
/// `r` growing geometrically from epsilon until one is adversarial. The
/// walk alternates an orthogonal proposal on the sphere around the
/// original input with a contraction toward it; each proposal costs one
/// hard query and is rejected unless adversarial.
pub fn boundary_attack(
    oracle: &mut QueryOracle,
    instance: &LabeledInstance,
    config: &BoundaryConfig,
) -> Result<AttackResult> {
    let dim = oracle.dim();
    config.validate(dim)?;
    if instance.x.len() != dim {
        return Err(Error::DimensionMismatch {
            context: "boundary_attack",
            expected: dim,
            got: instance.x.len(),
        });
    }
    let window = BudgetWindow::open(oracle.queries_used(), config.budget);
    let mut directions = DirectionSampler::new(
        config.subspace.as_deref(),
        SamplerKind::Gaussian,
        config.seed,
        dim,
    )?;

    if oracle.hard(&instance.x)? != instance.y {
        return Err(Error::MisclassifiedInstance);
    }

    let spent = |oracle: &QueryOracle| window.spent(oracle.queries_used());

    // Initialization at growing norm scales.
    let mut current: Option<Vec<f64>> = None;
    let mut init_scale = config.epsilon;
    for _ in 0..config.init_max_tries {
        if window.remaining(oracle.queries_used()) == 0 {
            return Ok(AttackResult::failed(FailureReason::BudgetExhausted, None, spent(oracle), 0));
        }
        let mut r = directions.unit()?;
        scale(init_scale, &mut r);
        let candidate = crate::linalg::add(&instance.x, &r);
        if oracle.hard(&candidate)? != instance.y {
            current = Some(candidate);
            break;
        }
        init_scale = (init_scale * INIT_NORM_GROWTH).min(config.epsilon * 1e9);
    }
    let Some(mut current) = current else {
        return Ok(AttackResult::failed(FailureReason::InitFailed, None, spent(oracle), 0));
    };

    let mut best = sub(&current, &instance.x);
    let mut best_dist = norm(&best);
    if best_dist <= config.epsilon {
        return Ok(AttackResult::succeeded(best, spent(oracle), 0));
    }

    let mut orth_step = config.orth_step;
    let mut toward_step = config.toward_step;
    let mut orth_window = AcceptanceWindow::new();
    let mut toward_window = AcceptanceWindow::new();
    let mut iterations = 0u64;

    loop {
        if window.remaining(oracle.queries_used()) == 0 {
            return Ok(AttackResult::failed(
                FailureReason::BudgetExhausted,
                Some(best),
                spent(oracle),
                iterations,
            ));
        }
        iterations += 1;

        // Orthogonal proposal on the sphere of the current distance.
        let offset = sub(&current, &instance.x);
        let dist = norm(&offset);
        let direction: Vec<f64> = offset.iter().map(|v| v / dist).collect();
        let mut eta = directions.raw();
        let along = dot(&eta, &direction);
        axpy(-along, &direction, &mut eta);
        let eta_norm = norm(&eta);
        let mut orth_accepted = false;
        if eta_norm > 0.0 {
            scale(orth_step * dist / eta_norm, &mut eta);
            let mut moved = crate::linalg::add(&offset, &eta);
            let moved_norm = norm(&moved);
            scale(dist / moved_norm, &mut moved);
            let candidate = crate::linalg::add(&instance.x, &moved);
            if oracle.hard(&candidate)? != instance.y {
                orth_accepted = true;
                current = candidate;
            }
        }
        if let Some(rate) = orth_window.record(orth_accepted, config.adapt_window) {
            adapt(&mut orth_step, rate);
        }

        // Contraction toward the original input, only from a fresh
        // adversarial point.
        if orth_accepted && window.remaining(oracle.queries_used()) > 0 {
            let offset = sub(&current, &instance.x);
            let mut contracted = offset.clone();
            scale(1.0 - toward_step, &mut contracted);
            let candidate = crate::linalg::add(&instance.x, &contracted);
            let accepted = oracle.hard(&candidate)? != instance.y;
            if accepted {
                current = candidate;
            }
            if let Some(rate) = toward_window.record(accepted, config.adapt_window) {
                adapt(&mut toward_step, rate);
            }
        }

        let offset = sub(&current, &instance.x);
        let dist = norm(&offset);
        if dist < best_dist {
            best = offset;
            best_dist = dist;
        }
        if best_dist <= config.epsilon {
            return Ok(AttackResult::succeeded(best, spent(oracle), iterations));
        }
    }
}

/// Distance to the decision boundary along a ray, or a tagged sentinel when
/// the ray never leaves the original class within `100 * epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "distance")]
pub enum RayDistance {
    Finite(f64),
    Unreachable,
}

impl RayDistance {
    pub fn finite(self) -> Option<f64> {
        match self {
            RayDistance::Finite(t) => Some(t),
            RayDistance::Unreachable => None,
        }
    }
}

/// Sign-based direction-optimization configuration.
#[derive(Debug, Clone)]
pub struct SignOptConfig {
    pub epsilon: f64,
    pub budget: u64,
    pub seed: u64,
    pub subspace: Option<Arc<SubspaceBasis>>,
    /// Directions per sign-gradient estimate.
    pub q: usize,
    /// Relative tolerance of the boundary-distance bisection.
    pub search_tol: f64,
    /// Direction update step (halved when an update does not improve).
    pub step_size: f64,
    /// Random directions scanned for the best starting direction.
    pub init_directions: usize,
    /// Perturbation size of the sign probes.
    pub smoothing: f64,
}

impl SignOptConfig {
    pub fn new(epsilon: f64, budget: u64, seed: u64) -> Self {
        Self {
            epsilon,
            budget,
            seed,
            subspace: None,
            q: 10,
            search_tol: 1e-3,
            step_size: 0.2,
            init_directions: 20,
            smoothing: 1e-2,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!("epsilon {} must be > 0", self.epsilon)));
        }
        if self.budget == 0 {
            return Err(Error::InvalidArgument("budget must be >= 1".into()));
        }
        if self.q == 0 || self.init_directions == 0 {
            return Err(Error::InvalidArgument("q and init_directions must be >= 1".into()));
        }
        if !(self.search_tol > 0.0) {
            return Err(Error::InvalidArgument("search_tol must be > 0".into()));
        }
        if !(self.step_size > 0.0) || !(self.smoothing > 0.0) {
            return Err(Error::InvalidArgument("step_size and smoothing must be > 0".into()));
        }
        if let Some(basis) = &self.subspace {
            if basis.dim() != dim {
                return Err(Error::DimensionMismatch {
                    context: "SignOptConfig::validate",
                    expected: dim,
                    got: basis.dim(),
                });
            }
        }
        Ok(())
    }
}

const G_EVAL_RANGE: f64 = 100.0;

fn ray_point(x: &[f64], theta_unit: &[f64], t: f64) -> Vec<f64> {
    x.iter().zip(theta_unit).map(|(xi, ti)| xi + t * ti).collect()
}

/// Boundary distance `g(theta)` along a nonzero direction: doubling search
/// from `t = epsilon`, then bisection to relative tolerance `search_tol`.
/// The returned distance is the adversarial end of the final bracket, so
/// `x + g * theta_hat` has been queried and seen adversarial.
pub fn signopt_g_eval(
    oracle: &mut QueryOracle,
    instance: &LabeledInstance,
    theta: &[f64],
    config: &SignOptConfig,
) -> Result<RayDistance> {
    let theta_norm = norm(theta);
    if theta_norm == 0.0 {
        return Err(Error::InvalidArgument("g eval needs a nonzero direction".into()));
    }
    let theta_unit: Vec<f64> = theta.iter().map(|v| v / theta_norm).collect();
    let t_max = G_EVAL_RANGE * config.epsilon;

    let mut lo = 0.0;
    let mut hi = None;
    let mut t = config.epsilon;
    while t <= t_max {
        if oracle.hard(&ray_point(&instance.x, &theta_unit, t))? != instance.y {
            hi = Some(t);
            break;
        }
        lo = t;
        t *= 2.0;
    }
    let Some(mut hi) = hi else {
        return Ok(RayDistance::Unreachable);
    };
    while hi - lo > config.search_tol * hi {
        let mid = 0.5 * (lo + hi);
        if oracle.hard(&ray_point(&instance.x, &theta_unit, mid))? != instance.y {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(RayDistance::Finite(hi))
}

/// Converts a budget-exhaustion error into `None`, propagating others.
fn absorb_budget<T>(result: Result<T>) -> Result<Option<T>> {
    match result {
        Ok(v) => Ok(Some(v)),
        Err(Error::BudgetExhausted) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Direction-optimization hard-label attack.
///
/// The starting direction is the best of `init_directions` random
/// directions by boundary distance; each iteration estimates the sign
/// gradient of g with q probes, steps the direction, and re-evaluates g.
/// Updates that do not improve g are reverted with the step halved. The
/// best (distance, direction) pair seen is tracked throughout and reported
/// even on failure.
pub fn signopt_attack(
    oracle: &mut QueryOracle,
    instance: &LabeledInstance,
    config: &SignOptConfig,
) -> Result<AttackResult> {
    let dim = oracle.dim();
    config.validate(dim)?;
    if instance.x.len() != dim {
        return Err(Error::DimensionMismatch {
            context: "signopt_attack",
            expected: dim,
            got: instance.x.len(),
        });
    }
    let window = BudgetWindow::open(oracle.queries_used(), config.budget);
    let mut directions = DirectionSampler::new(
        config.subspace.as_deref(),
        SamplerKind::Gaussian,
        config.seed,
        dim,
    )?;

    if oracle.hard(&instance.x)? != instance.y {
        return Err(Error::MisclassifiedInstance);
    }
    let spent = |oracle: &QueryOracle| window.spent(oracle.queries_used());

    // Initialization: best of init_directions by g.
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut exhausted = false;
    for _ in 0..config.init_directions {
        let theta = directions.raw();
        if norm(&theta) == 0.0 {
            continue;
        }
        let theta_unit: Vec<f64> = {
            let n = norm(&theta);
            theta.iter().map(|v| v / n).collect()
        };
        match eval_with_window(oracle, &window, instance, &theta_unit, config)? {
            Some(RayDistance::Finite(g)) => {
                if best.as_ref().map_or(true, |(b, _)| g < *b) {
                    best = Some((g, theta_unit));
                }
            }
            Some(RayDistance::Unreachable) => {}
            None => {
                exhausted = true;
                break;
            }
        }
    }
    let Some((mut g_cur, mut theta)) = best else {
        let reason = if exhausted {
            FailureReason::BudgetExhausted
        } else {
            FailureReason::NoAdversarialDirection
        };
        return Ok(AttackResult::failed(reason, None, spent(oracle), 0));
    };

    let mut best_g = g_cur;
    let mut best_theta = theta.clone();
    let mut step = config.step_size;
    let mut iterations = 0u64;

    loop {
        if best_g <= config.epsilon {
            let delta: Vec<f64> = best_theta.iter().map(|v| v * best_g).collect();
            return Ok(AttackResult::succeeded(delta, spent(oracle), iterations));
        }
        // One iteration needs q sign probes plus at least one g probe.
        if window.remaining(oracle.queries_used()) < config.q as u64 + 1 {
            let delta: Vec<f64> = best_theta.iter().map(|v| v * best_g).collect();
            return Ok(AttackResult::failed(
                FailureReason::BudgetExhausted,
                Some(delta),
                spent(oracle),
                iterations,
            ));
        }
        iterations += 1;

        // Sign gradient of g at theta.
        let mut sign_gradient = vec![0.0; dim];
        let mut aborted = false;
        for _ in 0..config.q {
            let u = directions.unit()?;
            let mut probe_dir = theta.clone();
            axpy(config.smoothing, &u, &mut probe_dir);
            let n = norm(&probe_dir);
            if n == 0.0 {
                continue;
            }
            scale(1.0 / n, &mut probe_dir);
            let point = ray_point(&instance.x, &probe_dir, g_cur);
            if window.remaining(oracle.queries_used()) == 0 {
                aborted = true;
                break;
            }
            let sign = if oracle.hard(&point)? == instance.y { 1.0 } else { -1.0 };
            axpy(sign / config.q as f64, &u, &mut sign_gradient);
        }
        if aborted {
            let delta: Vec<f64> = best_theta.iter().map(|v| v * best_g).collect();
            return Ok(AttackResult::failed(
                FailureReason::BudgetExhausted,
                Some(delta),
                spent(oracle),
                iterations,
            ));
        }

        // Candidate direction update.
        let mut candidate = theta.clone();
        axpy(-step, &sign_gradient, &mut candidate);
        let n = norm(&candidate);
        if n == 0.0 {
            step = (step * 0.5).max(1e-6);
            continue;
        }
        scale(1.0 / n, &mut candidate);
        match eval_with_window(oracle, &window, instance, &candidate, config)? {
            Some(RayDistance::Finite(g_new)) if g_new < g_cur => {
                theta = candidate;
                g_cur = g_new;
                if g_cur < best_g {
                    best_g = g_cur;
                    best_theta = theta.clone();
                }
            }
            Some(_) => {
                step = (step * 0.5).max(1e-6);
            }
            None => {
                let delta: Vec<f64> = best_theta.iter().map(|v| v * best_g).collect();
                return Ok(AttackResult::failed(
                    FailureReason::BudgetExhausted,
                    Some(delta),
                    spent(oracle),
                    iterations,
                ));
            }
        }
    }
}

/// Runs a g evaluation while respecting the attack's budget window; `None`
/// means the window was exhausted mid-search.
fn eval_with_window(
    oracle: &mut QueryOracle,
    window: &BudgetWindow,
    instance: &LabeledInstance,
    theta_unit: &[f64],
    config: &SignOptConfig,
) -> Result<Option<RayDistance>> {
    // signopt_g_eval queries one point at a time; intercept exhaustion by
    // checking before each query through a capped sub-eval.
    let theta_norm = norm(theta_unit);
    if theta_norm == 0.0 {
        return Err(Error::InvalidArgument("g eval needs a nonzero direction".into()));
    }
    let unit: Vec<f64> = theta_unit.iter().map(|v| v / theta_norm).collect();
    let t_max = G_EVAL_RANGE * config.epsilon;

    let query = |oracle: &mut QueryOracle, t: f64| -> Result<Option<bool>> {
        if window.remaining(oracle.queries_used()) == 0 {
            return Ok(None);
        }
        let adversarial =
            absorb_budget(oracle.hard(&ray_point(&instance.x, &unit, t)))?.map(|l| l != instance.y);
        Ok(adversarial)
    };

    let mut lo = 0.0;
    let mut hi = None;
    let mut t = config.epsilon;
    while t <= t_max {
        match query(oracle, t)? {
            Some(true) => {
                hi = Some(t);
                break;
            }
            Some(false) => {
                lo = t;
                t *= 2.0;
            }
            None => return Ok(None),
        }
    }
    let Some(mut hi) = hi else {
        return Ok(Some(RayDistance::Unreachable));
    };
    while hi - lo > config.search_tol * hi {
        let mid = 0.5 * (lo + hi);
        match query(oracle, mid)? {
            Some(true) => hi = mid,
            Some(false) => lo = mid,
            None => return Ok(None),
        }
    }
    Ok(Some(RayDistance::Finite(hi)))
}
