//! Numerical laboratory for over-parametrized sigmoid networks.
//!
//! The crate implements a network built as a linear combination of many
//! parallel fully connected subnetworks with the logistic squasher, trains it
//! by full-batch gradient descent, and provides the quantitative machinery
//! needed to study when such a network interpolates its training data and how
//! badly it can generalize:
//!
//! - [`net`] — topology, forward evaluation, weight-vector layout and
//!   serialization,
//! - [`risk`] / [`grad`] — empirical L2 risk, its exact gradient, a
//!   finite-difference oracle, and the interpolation optimum,
//! - [`descent`] — initialization, the gradient-descent loop with runtime
//!   monitors, the theoretical step-size/step-count schedule, and the
//!   training-event validator,
//! - [`indicator`] — constructive weights that turn one subnetwork into a
//!   sharp indicator of a hyperrectangle, with a perturbation-robust variant,
//! - [`bounds`] — computable smoothness and saturation constants together
//!   with empirical checkers for the inequalities they promise,
//! - [`lowerbound`] — an adversarial discrete design distribution under which
//!   every near-interpolating estimator incurs constant generalization risk.

pub mod bounds;
pub mod data;
pub mod descent;
pub mod grad;
pub mod indicator;
pub mod lowerbound;
pub mod net;
pub mod rng;
pub mod risk;

mod sum;

/// Errors reported by the laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("weight vector has {got} values, architecture needs {expected}")]
    WeightLength { expected: usize, got: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("finite-difference step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("invalid rectangle: {0}")]
    InvalidRectangle(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("risk or gradient became non-finite at step {0}")]
    NonFiniteAtStep(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
