use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::LabeledDataset;
use crate::error::{Error, Result};

/// Train/validation/test partition parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    /// Fraction of all rows used for training (validation included).
    pub train_frac: f64,
    /// Fraction of the training rows held out for validation.
    pub val_frac_of_train: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.8,
            val_frac_of_train: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle of `0..n`, cut into contiguous train, validation and test blocks.
///
/// `test = round(n * (1 - train_frac))` and `val = max(1, round(rest * val_frac))`;
/// the remainder trains.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<SplitIndices> {
    for (name, value) in [
        ("train_frac", spec.train_frac),
        ("val_frac_of_train", spec.val_frac_of_train),
    ] {
        if !(value > 0.0 && value < 1.0) {
            return Err(Error::InvalidParameter {
                name,
                value,
                reason: "must lie in (0, 1)",
            });
        }
    }
    if n < 3 {
        return Err(Error::TooSmall { n, min: 3 });
    }
    let n_test = ((n as f64 * (1.0 - spec.train_frac)).round() as usize).clamp(1, n - 2);
    let n_rest = n - n_test;
    let n_val = ((n_rest as f64 * spec.val_frac_of_train).round() as usize).clamp(1, n_rest - 1);
    let n_train = n_rest - n_val;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    Ok(SplitIndices {
        train: order[..n_train].to_vec(),
        val: order[n_train..n_rest].to_vec(),
        test: order[n_rest..].to_vec(),
    })
}

/// Seeded two-way split of `0..n` into `(fit, holdout)` index lists, both sorted.
/// The holdout has `max(1, round(n * frac))` rows and the fit part keeps at least one.
pub fn holdout_indices(n: usize, frac: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(frac > 0.0 && frac < 1.0) {
        return Err(Error::InvalidParameter {
            name: "holdout fraction",
            value: frac,
            reason: "must lie in (0, 1)",
        });
    }
    if n < 2 {
        return Err(Error::TooSmall { n, min: 2 });
    }
    let n_hold = ((n as f64 * frac).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fit = order[n_hold..].to_vec();
    let mut hold = order[..n_hold].to_vec();
    fit.sort_unstable();
    hold.sort_unstable();
    Ok((fit, hold))
}

/// Split a labeled dataset into `(train, val, test)`.
pub fn split(
    data: &LabeledDataset,
    spec: &SplitSpec,
) -> Result<(LabeledDataset, LabeledDataset, LabeledDataset)> {
    let idx = split_indices(data.len(), spec)?;
    Ok((
        data.select(&idx.train)?,
        data.select(&idx.val)?,
        data.select(&idx.test)?,
    ))
}
