//! Automatic prior construction.
//!
//! Beta priors over accuracies take their means from how often each LF agrees
//! with a reference labeling (the majority vote, or ground truth for the
//! oracle control) and their mass from a strength `s = u + v`. The label prior
//! is anchored on the majority vote.

use std::fmt;
use std::str::FromStr;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{BetaPriors, LabelVector, LfMatrix, YPrior};

/// Prior mean substituted when an LF never overlaps the reference.
pub const NO_OVERLAP_MEAN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorSource {
    /// Means from agreement with the majority vote.
    Mv,
    /// Means from agreement with ground truth.
    Empirical,
    /// Means drawn uniformly at random.
    Random,
    /// `Beta(1, 1)` everywhere and `p = 0.5`.
    Uniform,
    /// Explicit `(u, v, p)` supplied by the caller.
    User,
}

impl fmt::Display for PriorSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PriorSource::Mv => "mv",
            PriorSource::Empirical => "empirical",
            PriorSource::Random => "random",
            PriorSource::Uniform => "uniform",
            PriorSource::User => "user",
        })
    }
}

impl FromStr for PriorSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "mv" => PriorSource::Mv,
            "empirical" => PriorSource::Empirical,
            "random" => PriorSource::Random,
            "uniform" => PriorSource::Uniform,
            "user" => PriorSource::User,
            other => return Err(format!("unknown prior source '{other}'")),
        })
    }
}

/// Everything a MAP fit needs beyond the data.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub alpha_prior: BetaPriors,
    pub y_prior: YPrior,
    pub strength: f64,
    pub source: PriorSource,
}

impl PriorSpec {
    /// Uninformative priors: fitting with these reproduces maximum likelihood.
    pub fn uniform(matrix: &LfMatrix) -> Self {
        Self {
            alpha_prior: BetaPriors::uniform(matrix.n_lfs()),
            y_prior: YPrior {
                p: 0.5,
                mv_votes: majority_vote(matrix),
                force_abstain: false,
            },
            strength: 2.0,
            source: PriorSource::Uniform,
        }
    }

    /// Caller-supplied beta shapes. `strength` records the mean of `u + v`.
    pub fn user(
        matrix: &LfMatrix,
        u: Vec<f64>,
        v: Vec<f64>,
        p: f64,
        force_abstain: bool,
    ) -> Result<Self> {
        let alpha_prior = BetaPriors::new(u, v)?;
        if alpha_prior.len() != matrix.n_lfs() {
            return Err(Error::DimensionMismatch {
                what: "user prior",
                expected: matrix.n_lfs(),
                found: alpha_prior.len(),
            });
        }
        let strength = alpha_prior
            .u
            .iter()
            .zip(&alpha_prior.v)
            .map(|(u, v)| u + v)
            .sum::<f64>()
            / alpha_prior.len() as f64;
        Ok(Self {
            alpha_prior,
            y_prior: YPrior::new(p, majority_vote(matrix), force_abstain)?,
            strength,
            source: PriorSource::User,
        })
    }

    pub fn means(&self) -> Vec<f64> {
        self.alpha_prior.means()
    }
}

/// Unweighted majority vote per row; ties and all-abstain rows give 0.
pub fn majority_vote(matrix: &LfMatrix) -> LabelVector {
    let votes = matrix
        .rows()
        .map(|row| {
            let net: i32 = row.iter().map(|&v| v as i32).sum();
            net.signum() as i8
        })
        .collect();
    LabelVector::new(votes).expect("signum is ternary")
}

/// Fraction of agreements over indices where both the LF and the reference vote.
pub fn accuracy_vs_reference(column: &[i8], reference: &LabelVector) -> Result<f64> {
    if column.len() != reference.len() {
        return Err(Error::DimensionMismatch {
            what: "reference labels",
            expected: column.len(),
            found: reference.len(),
        });
    }
    let (mut scored, mut correct) = (0usize, 0usize);
    for (&vote, &truth) in column.iter().zip(reference.as_slice()) {
        if vote != 0 && truth != 0 {
            scored += 1;
            if vote == truth {
                correct += 1;
            }
        }
    }
    if scored == 0 {
        return Err(Error::EmptyOverlap);
    }
    Ok(correct as f64 / scored as f64)
}

/// Per-LF accuracy against `reference`, substituting [`NO_OVERLAP_MEAN`] for empty overlaps.
pub fn accuracies_vs_reference(matrix: &LfMatrix, reference: &LabelVector) -> Result<Vec<f64>> {
    (0..matrix.n_lfs())
        .map(
            |j| match accuracy_vs_reference(&matrix.column(j), reference) {
                Err(Error::EmptyOverlap) => Ok(NO_OVERLAP_MEAN),
                other => other,
            },
        )
        .collect()
}

/// Clamp a prior mean into `[1/(s+2), 1 - 1/(s+2)]`.
pub fn shrink_mean(mu: f64, strength: f64) -> f64 {
    let edge = 1.0 / (strength + 2.0);
    mu.clamp(edge, 1.0 - edge)
}

/// Beta shapes `(s * mu, s - s * mu)` after shrinking `mu` away from 0 and 1.
pub fn beta_from_mean(mu: f64, strength: f64) -> Result<(f64, f64)> {
    if !(strength > 0.0 && strength.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "strength",
            value: strength,
            reason: "must be positive and finite",
        });
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidParameter {
            name: "prior mean",
            value: mu,
            reason: "must lie in [0, 1]",
        });
    }
    let u = strength * shrink_mean(mu, strength);
    Ok((u, strength - u))
}

fn beta_priors_from_means(means: &[f64], strength: f64) -> Result<BetaPriors> {
    let (u, v) = means
        .iter()
        .map(|&mu| beta_from_mean(mu, strength))
        .collect::<Result<(Vec<_>, Vec<_>)>>()?;
    BetaPriors::new(u, v)
}

fn build_from_reference(
    matrix: &LfMatrix,
    reference: &LabelVector,
    strength: f64,
    p: f64,
    force_abstain: bool,
    source: PriorSource,
) -> Result<PriorSpec> {
    let means = accuracies_vs_reference(matrix, reference)?;
    Ok(PriorSpec {
        alpha_prior: beta_priors_from_means(&means, strength)?,
        y_prior: YPrior::new(p, majority_vote(matrix), force_abstain)?,
        strength,
        source,
    })
}

/// Priors whose accuracy means come from agreement with the majority vote.
pub fn build_mv_priors(
    matrix: &LfMatrix,
    strength: f64,
    p: f64,
    force_abstain: bool,
) -> Result<PriorSpec> {
    let mv = majority_vote(matrix);
    build_from_reference(matrix, &mv, strength, p, force_abstain, PriorSource::Mv)
}

/// Priors whose accuracy means are the empirical accuracies against `truth`.
pub fn build_empirical_priors(
    matrix: &LfMatrix,
    truth: &LabelVector,
    strength: f64,
    p: f64,
    force_abstain: bool,
) -> Result<PriorSpec> {
    build_from_reference(
        matrix,
        truth,
        strength,
        p,
        force_abstain,
        PriorSource::Empirical,
    )
}

/// Priors with accuracy means drawn from `Uniform(0, 1)`, seeded.
///
/// The label prior is still anchored on the majority vote of `matrix`.
pub fn build_random_priors(
    matrix: &LfMatrix,
    strength: f64,
    p: f64,
    force_abstain: bool,
    seed: u64,
) -> Result<PriorSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<f64> = (0..matrix.n_lfs()).map(|_| rng.sample(Open01)).collect();
    Ok(PriorSpec {
        alpha_prior: beta_priors_from_means(&means, strength)?,
        y_prior: YPrior::new(p, majority_vote(matrix), force_abstain)?,
        strength,
        source: PriorSource::Random,
    })
}
