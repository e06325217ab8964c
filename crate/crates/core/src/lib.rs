//! Regularized data programming.
//!
//! Fits a generative model of labeling-function votes by maximum a posteriori
//! estimation, with beta priors over LF accuracies and a Bernoulli prior over
//! the latent labels, both derivable automatically from a majority vote. The
//! fitted model denoises LF votes into labels and may abstain.
//!
//! Modules, bottom-up:
//! - [`model`]: likelihood factors, joints, posteriors and the log objective
//! - [`priors`]: majority vote and prior construction
//! - [`training`]: projected SGD with early stopping
//! - [`inference`]: label assignment with abstention
//! - [`evaluation`]: abstention-aware metrics
//! - [`experiments`]: splits, grid search, sweeps, synthetic data
//! - [`io`] and [`cli`]: file formats and the command line

pub mod cli;
pub mod error;
pub mod evaluation;
pub mod experiments;
pub mod inference;
pub mod io;
pub mod model;
pub mod priors;
pub mod training;

pub use error::{Error, Result};
pub use evaluation::{score, MetricsReport};
pub use inference::{predict, Prediction};
pub use model::{AlphaPrior, BetaPriors, LabelVector, LfMatrix, ModelParams, YPrior};
pub use priors::{majority_vote, PriorSpec};
pub use training::{fit, FitResult, TrainConfig};
