use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::{LabelVector, LfMatrix};

/// Parameters of the generative process to sample from.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Probability that a latent label is +1.
    pub class_balance: f64,
    pub seed: u64,
}

/// Sample labels and LF votes from the model's own generative process.
///
/// Each label is +1 with probability `class_balance`; each LF abstains with
/// probability `1 - beta_j` and otherwise votes the true label with
/// probability `alpha_j`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    let m = spec.alpha.len();
    if spec.beta.len() != m {
        return Err(Error::DimensionMismatch {
            what: "synthetic beta",
            expected: m,
            found: spec.beta.len(),
        });
    }
    for (name, values) in [("alpha", &spec.alpha), ("beta", &spec.beta)] {
        if let Some(&bad) = values.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidParameter {
                name,
                value: bad,
                reason: "must lie in [0, 1]",
            });
        }
    }
    if !(0.0..=1.0).contains(&spec.class_balance) {
        return Err(Error::InvalidParameter {
            name: "class_balance",
            value: spec.class_balance,
            reason: "must lie in [0, 1]",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut votes = Vec::with_capacity(spec.n * m);
    let mut truth = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let y: i8 = if rng.gen::<f64>() < spec.class_balance {
            1
        } else {
            -1
        };
        truth.push(y);
        for j in 0..m {
            let vote = if rng.gen::<f64>() >= spec.beta[j] {
                0
            } else if rng.gen::<f64>() < spec.alpha[j] {
                y
            } else {
                -y
            };
            votes.push(vote);
        }
    }
    LabeledDataset::new(LfMatrix::new(spec.n, m, votes)?, LabelVector::truth(truth)?)
}
