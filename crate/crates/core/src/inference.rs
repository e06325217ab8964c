//! Label assignment under a fitted model.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{
    posterior_from_log_joints, LfMatrix, LogFactors, ModelParams, YPrior, TIE_TOLERANCE,
};
use crate::priors::{majority_vote, PriorSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AbstainReason {
    None,
    Tie,
    Forced,
    Degenerate,
}

impl fmt::Display for AbstainReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AbstainReason::None => "none",
            AbstainReason::Tie => "tie",
            AbstainReason::Forced => "forced",
            AbstainReason::Degenerate => "degenerate",
        })
    }
}

impl FromStr for AbstainReason {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "none" => AbstainReason::None,
            "tie" => AbstainReason::Tie,
            "forced" => AbstainReason::Forced,
            "degenerate" => AbstainReason::Degenerate,
            other => return Err(format!("unknown abstain reason '{other}'")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: i8,
    /// Posterior probability of the positive class.
    pub score_pos: f64,
    pub abstain_reason: AbstainReason,
}

impl Prediction {
    pub fn vote(label: i8, score_pos: f64) -> Self {
        Self {
            label,
            score_pos,
            abstain_reason: AbstainReason::None,
        }
    }

    pub fn abstain(reason: AbstainReason, score_pos: f64) -> Self {
        Self {
            label: 0,
            score_pos,
            abstain_reason: reason,
        }
    }

    pub fn is_abstain(&self) -> bool {
        self.label == 0
    }
}

/// Most probable label per row.
///
/// Rows where the posteriors tie abstain. With `force_abstain`, rows where
/// the anchoring majority vote abstains are forced to abstain regardless of
/// the model's posterior.
pub fn predict(
    matrix: &LfMatrix,
    params: &ModelParams,
    y_prior: &YPrior,
) -> Result<Vec<Prediction>> {
    if params.n_lfs() != matrix.n_lfs() {
        return Err(Error::DimensionMismatch {
            what: "model parameters",
            expected: matrix.n_lfs(),
            found: params.n_lfs(),
        });
    }
    if y_prior.len() != matrix.n_rows() {
        return Err(Error::DimensionMismatch {
            what: "label prior",
            expected: matrix.n_rows(),
            found: y_prior.len(),
        });
    }
    let factors = LogFactors::new(params);
    let predictions = matrix
        .rows()
        .enumerate()
        .map(|(i, row)| {
            let prior = y_prior.class_prior(i);
            let (lp, ln) = factors.row_log_joints(row, (prior.pos.ln(), prior.neg.ln()));
            let Ok((pp, pn)) = posterior_from_log_joints(lp, ln) else {
                return Prediction::abstain(AbstainReason::Degenerate, 0.5);
            };
            if y_prior.force_abstain && y_prior.mv_votes[i] == 0 {
                Prediction::abstain(AbstainReason::Forced, pp)
            } else if (pp - pn).abs() <= TIE_TOLERANCE {
                Prediction::abstain(AbstainReason::Tie, pp)
            } else if pp > pn {
                Prediction::vote(1, pp)
            } else {
                Prediction::vote(-1, pp)
            }
        })
        .collect();
    Ok(predictions)
}

/// Label prior for predicting on `matrix`: majority vote recomputed on the
/// matrix itself, `p` and the abstention policy taken from `prior`.
/// Symmetric without a prior spec.
pub fn prediction_prior(matrix: &LfMatrix, prior: Option<&PriorSpec>) -> YPrior {
    match prior {
        Some(spec) => spec.y_prior.with_votes(majority_vote(matrix)),
        None => YPrior::uninformative(matrix.n_rows()),
    }
}

/// [`predict`] with the label prior rebuilt from `matrix`.
pub fn predict_with(
    matrix: &LfMatrix,
    params: &ModelParams,
    prior: Option<&PriorSpec>,
) -> Result<Vec<Prediction>> {
    predict(matrix, params, &prediction_prior(matrix, prior))
}

/// Majority vote as a labeling model; its score is the fraction of
/// non-abstaining votes that are positive (0.5 when nobody votes).
pub fn majority_vote_predictions(matrix: &LfMatrix) -> Vec<Prediction> {
    matrix
        .rows()
        .map(|row| {
            let pos = row.iter().filter(|&&v| v == 1).count();
            let neg = row.iter().filter(|&&v| v == -1).count();
            let score = if pos + neg == 0 {
                0.5
            } else {
                pos as f64 / (pos + neg) as f64
            };
            match pos.cmp(&neg) {
                std::cmp::Ordering::Greater => Prediction::vote(1, score),
                std::cmp::Ordering::Less => Prediction::vote(-1, score),
                std::cmp::Ordering::Equal => Prediction::abstain(AbstainReason::Tie, score),
            }
        })
        .collect()
}

/// Fraction of non-abstaining predictions (0 for an empty slice).
pub fn coverage(predictions: &[Prediction]) -> f64 {
    if predictions.is_empty() {
        return 0.0;
    }
    predictions.iter().filter(|p| !p.is_abstain()).count() as f64 / predictions.len() as f64
}
