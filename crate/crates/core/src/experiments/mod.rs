//! Experiment protocols: splitting, grid search, low-data and stability
//! sweeps, prior-quality comparison, and a synthetic data generator whose
//! parameters are known.
//!
//! Every protocol is a pure function of its inputs and seeds.

mod grid;
mod split;
mod study;
mod sweeps;
mod synthetic;

use std::fmt;
use std::str::FromStr;

pub use grid::{grid_search, CellOutcome, GridCell, GridOutcome, GridSpec};
pub use split::{holdout_indices, split, split_indices, SplitIndices, SplitSpec};
pub use study::{prior_quality_study, StudyRow};
pub use sweeps::{
    low_data_sweep, stability_sweep, LowDataCell, LowDataSpec, MetricSummary, StabilityPoint,
};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use crate::error::{Error, Result};
use crate::evaluation::{score, MetricsReport};
use crate::inference::{majority_vote_predictions, predict_with, Prediction};
use crate::model::{LabelVector, LfMatrix};
use crate::priors::{build_empirical_priors, build_mv_priors, build_random_priors, PriorSpec};
use crate::training::{fit, FitResult, TrainConfig};

/// LF matrix with ground truth for every row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub matrix: LfMatrix,
    pub truth: LabelVector,
}

impl LabeledDataset {
    pub fn new(matrix: LfMatrix, truth: LabelVector) -> Result<Self> {
        if truth.len() != matrix.n_rows() {
            return Err(Error::DimensionMismatch {
                what: "truth labels",
                expected: matrix.n_rows(),
                found: truth.len(),
            });
        }
        LabelVector::truth(truth.as_slice().to_vec())?;
        Ok(Self { matrix, truth })
    }

    pub fn len(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Ok(Self {
            matrix: self.matrix.select_rows(indices)?,
            truth: self.truth.select(indices),
        })
    }
}

/// Labeling model variants compared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Mle,
    MapMv,
    MapEmpirical,
    MapRandom,
    /// Unweighted majority vote; nothing is trained.
    Mv,
}

impl Mode {
    pub fn is_trained(self) -> bool {
        self != Mode::Mv
    }

    pub fn is_map(self) -> bool {
        matches!(self, Mode::MapMv | Mode::MapEmpirical | Mode::MapRandom)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Mle => "mle",
            Mode::MapMv => "map-mv",
            Mode::MapEmpirical => "map-emp",
            Mode::MapRandom => "map-rand",
            Mode::Mv => "mv",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "mle" => Mode::Mle,
            "map-mv" => Mode::MapMv,
            "map-emp" => Mode::MapEmpirical,
            "map-rand" => Mode::MapRandom,
            "mv" => Mode::Mv,
            other => return Err(format!("unknown mode '{other}'")),
        })
    }
}

/// Prior hyperparameters plus optimizer settings for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSettings {
    pub strength: f64,
    pub p: f64,
    pub force_abstain: bool,
    pub train: TrainConfig,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            strength: 10.0,
            p: 0.5,
            force_abstain: false,
            train: TrainConfig::default(),
        }
    }
}

/// Prior spec for `mode` built from the training data (`None` for MLE and MV).
pub fn build_prior(
    mode: Mode,
    train: &LabeledDataset,
    settings: &ModelSettings,
    seed: u64,
) -> Result<Option<PriorSpec>> {
    let ModelSettings {
        strength,
        p,
        force_abstain,
        ..
    } = *settings;
    Ok(match mode {
        Mode::Mle | Mode::Mv => None,
        Mode::MapMv => Some(build_mv_priors(&train.matrix, strength, p, force_abstain)?),
        Mode::MapEmpirical => Some(build_empirical_priors(
            &train.matrix,
            &train.truth,
            strength,
            p,
            force_abstain,
        )?),
        Mode::MapRandom => Some(build_random_priors(
            &train.matrix,
            strength,
            p,
            force_abstain,
            seed,
        )?),
    })
}

/// A trained (or majority-vote) model ready to label new matrices.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub mode: Mode,
    pub prior: Option<PriorSpec>,
    pub fit: Option<FitResult>,
}

impl TrainedModel {
    pub fn predict(&self, matrix: &LfMatrix) -> Result<Vec<Prediction>> {
        match &self.fit {
            Some(fit) => predict_with(matrix, &fit.params, self.prior.as_ref()),
            None => Ok(majority_vote_predictions(matrix)),
        }
    }

    pub fn evaluate(&self, data: &LabeledDataset) -> Result<MetricsReport> {
        score(&self.predict(&data.matrix)?, &data.truth)
    }
}

/// Build the prior for `mode` and fit it on `train`, early-stopping on `val`.
pub fn train_mode(
    mode: Mode,
    train: &LabeledDataset,
    val: Option<&LabeledDataset>,
    settings: &ModelSettings,
) -> Result<TrainedModel> {
    let prior = build_prior(mode, train, settings, settings.train.seed)?;
    let fit = if mode.is_trained() {
        Some(fit(
            &train.matrix,
            val.map(|v| &v.matrix),
            prior.as_ref(),
            &settings.train,
        )?)
    } else {
        None
    };
    Ok(TrainedModel { mode, prior, fit })
}

/// One line of a machine-readable results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub mode: String,
    pub size: String,
    pub replicate: String,
    pub metric: String,
    pub value: Option<f64>,
}

impl ResultRow {
    pub fn new(
        experiment: &str,
        mode: impl ToString,
        size: impl ToString,
        replicate: impl ToString,
        metric: &str,
        value: Option<f64>,
    ) -> Self {
        Self {
            experiment: experiment.to_string(),
            mode: mode.to_string(),
            size: size.to_string(),
            replicate: replicate.to_string(),
            metric: metric.to_string(),
            value,
        }
    }
}
