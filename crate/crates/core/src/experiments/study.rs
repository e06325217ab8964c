use super::{train_mode, LabeledDataset, Mode, ModelSettings};
use crate::error::Result;
use crate::evaluation::l2_convergence;
use crate::priors::accuracies_vs_reference;

/// Distances of one model's prior means and fitted accuracies from the
/// empirical accuracies on the training set.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub mode: Mode,
    /// `None` for maximum likelihood, which has no prior.
    pub prior_distance: Option<f64>,
    pub fit_distance: f64,
    pub alpha_hat: Vec<f64>,
}

/// Compare MV-derived, random and oracle priors against maximum likelihood by
/// how close each fit lands to the true empirical LF accuracies.
pub fn prior_quality_study(
    train: &LabeledDataset,
    val: Option<&LabeledDataset>,
    settings: &ModelSettings,
) -> Result<Vec<StudyRow>> {
    let alpha_star = accuracies_vs_reference(&train.matrix, &train.truth)?;
    [Mode::MapMv, Mode::MapRandom, Mode::MapEmpirical, Mode::Mle]
        .into_iter()
        .map(|mode| {
            let model = train_mode(mode, train, val, settings)?;
            let prior_distance = model
                .prior
                .as_ref()
                .map(|p| l2_convergence(&alpha_star, &p.means()))
                .transpose()?;
            let alpha_hat = model.fit.expect("trained mode").params.alpha;
            Ok(StudyRow {
                mode,
                prior_distance,
                fit_distance: l2_convergence(&alpha_star, &alpha_hat)?,
                alpha_hat,
            })
        })
        .collect()
}
