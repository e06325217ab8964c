use rayon::prelude::*;
use serde::Deserialize;

use super::{train_mode, LabeledDataset, Mode, ModelSettings};
use crate::error::Result;
use crate::evaluation::MetricsReport;
use crate::training::TrainConfig;

/// Candidate values per hyperparameter; the search covers their product.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub strength: Vec<f64>,
    pub learning_rate: Vec<f64>,
    pub alpha_init: Vec<f64>,
    /// Values below 0.5 are skipped for MAP modes.
    pub p: Vec<f64>,
    pub force_abstain: Vec<bool>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            strength: vec![10.0, 100.0],
            learning_rate: vec![0.001, 0.01],
            alpha_init: vec![0.8, 0.9, 1.0],
            p: (0..=10).map(|k| k as f64 / 10.0).collect(),
            force_abstain: vec![true, false],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub index: usize,
    pub strength: f64,
    pub learning_rate: f64,
    pub alpha_init: f64,
    pub p: f64,
    pub force_abstain: bool,
}

impl GridCell {
    pub fn settings(&self, base: &TrainConfig) -> ModelSettings {
        ModelSettings {
            strength: self.strength,
            p: self.p,
            force_abstain: self.force_abstain,
            train: TrainConfig {
                learning_rate: self.learning_rate,
                alpha_init: self.alpha_init,
                seed: base.seed.wrapping_add(self.index as u64),
                ..base.clone()
            },
        }
    }
}

impl GridSpec {
    /// Cells searched for `mode`. Prior hyperparameters only vary for MAP modes;
    /// majority vote has a single cell.
    pub fn cells(&self, mode: Mode) -> Vec<GridCell> {
        let fixed = ModelSettings::default();
        let (strengths, ps, forces, lrs, inits) = match mode {
            Mode::Mv => (
                vec![fixed.strength],
                vec![fixed.p],
                vec![false],
                vec![fixed.train.learning_rate],
                vec![fixed.train.alpha_init],
            ),
            Mode::Mle => (
                vec![fixed.strength],
                vec![fixed.p],
                vec![false],
                self.learning_rate.clone(),
                self.alpha_init.clone(),
            ),
            _ => (
                self.strength.clone(),
                self.p.iter().copied().filter(|&p| p >= 0.5).collect(),
                self.force_abstain.clone(),
                self.learning_rate.clone(),
                self.alpha_init.clone(),
            ),
        };
        let mut cells = Vec::new();
        for &strength in &strengths {
            for &learning_rate in &lrs {
                for &alpha_init in &inits {
                    for &p in &ps {
                        for &force_abstain in &forces {
                            cells.push(GridCell {
                                index: cells.len(),
                                strength,
                                learning_rate,
                                alpha_init,
                                p,
                                force_abstain,
                            });
                        }
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub cell: GridCell,
    /// Validation metrics, or the error message of a failed fit.
    pub report: std::result::Result<MetricsReport, String>,
    pub best_epoch: usize,
    pub wins: usize,
}

#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub mode: Mode,
    pub cells: Vec<CellOutcome>,
    /// Index into `cells` of the selected configuration.
    pub best: usize,
}

impl GridOutcome {
    pub fn best_cell(&self) -> &CellOutcome {
        &self.cells[self.best]
    }
}

/// Fit every cell on `train`, score it on `val`, and select the cell that is
/// best on the most of accuracy, F1, precision, recall and AUC.
///
/// Ties in win count go to the fewest epochs to the best validation loss, then
/// the lowest cell index. A failing cell is recorded and scores no wins.
pub fn grid_search(
    train: &LabeledDataset,
    val: &LabeledDataset,
    grid: &GridSpec,
    mode: Mode,
    base: &TrainConfig,
) -> Result<GridOutcome> {
    let cells = grid.cells(mode);
    let mut outcomes: Vec<CellOutcome> = cells
        .into_par_iter()
        .map(|cell| {
            let settings = cell.settings(base);
            let result = train_mode(mode, train, Some(val), &settings)
                .and_then(|model| Ok((model.evaluate(val)?, model)));
            match result {
                Ok((report, model)) => CellOutcome {
                    best_epoch: model.fit.map_or(0, |f| f.best_epoch),
                    cell,
                    report: Ok(report),
                    wins: 0,
                },
                Err(e) => CellOutcome {
                    cell,
                    report: Err(e.to_string()),
                    best_epoch: usize::MAX,
                    wins: 0,
                },
            }
        })
        .collect();

    for k in 0..5 {
        let value = |o: &CellOutcome| {
            o.report
                .as_ref()
                .ok()
                .and_then(|r| r.selection_metrics()[k])
        };
        let top = outcomes
            .iter()
            .filter_map(value)
            .fold(f64::NEG_INFINITY, f64::max);
        for o in outcomes.iter_mut() {
            if value(o) == Some(top) {
                o.wins += 1;
            }
        }
    }
    let best = outcomes
        .iter()
        .enumerate()
        .min_by_key(|(i, o)| (std::cmp::Reverse(o.wins), o.best_epoch, *i))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(GridOutcome {
        mode,
        cells: outcomes,
        best,
    })
}
