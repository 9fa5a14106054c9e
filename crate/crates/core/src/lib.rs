//! Subspace-constrained black-box adversarial attacks against natively
//! implemented classifiers, plus ground-truth minimum-perturbation oracles.
//!
//! The crate is organized around a simple pipeline:
//!
//! 1. [`subspace`] builds an orthonormal basis from an unlabeled dataset
//!    and draws isometric random vectors constrained to its span.
//! 2. [`model`] hosts the target classifiers (K-NN, linear SVM, MLP) behind
//!    a query-counting oracle with both soft-label and hard-label endpoints.
//! 3. [`attack`] implements the query-budgeted black-box attacks: RGF and
//!    SPSA (soft-label), boundary walk and sign-based direction descent
//!    (hard-label). Each accepts an optional basis that confines every
//!    sampled direction, and therefore the output perturbation, to the
//!    subspace.
//! 4. [`minperturb`] computes exact minimum adversarial perturbations for
//!    K-NN (via a small convex QP per candidate neighbor set) and linear
//!    SVM (closed form), used as ground truth in tests and experiments.
//! 5. [`harness`] runs experiments over evaluation sets, producing success
//!    rate and query statistics, with deterministic per-instance seeding.

pub mod attack;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod minperturb;
pub mod model;
pub mod rng;
pub mod subspace;

pub use error::{Error, Result};
