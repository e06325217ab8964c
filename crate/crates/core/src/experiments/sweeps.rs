use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{train_mode, LabeledDataset, Mode, ModelSettings, ResultRow};
use crate::error::Result;
use crate::evaluation::{MetricsReport, METRIC_NAMES};
use crate::training::TrainConfig;

/// Mean and population standard deviation over the replicates where a metric was defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n_defined: usize,
}

impl MetricSummary {
    pub fn from_values(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let defined: Vec<f64> = values.into_iter().flatten().collect();
        if defined.is_empty() {
            return Self {
                mean: None,
                std: None,
                n_defined: 0,
            };
        }
        let k = defined.len() as f64;
        let mean = defined.iter().sum::<f64>() / k;
        let var = defined.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / k;
        Self {
            mean: Some(mean),
            std: Some(var.sqrt()),
            n_defined: defined.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowDataSpec {
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub modes: Vec<Mode>,
    pub settings: ModelSettings,
    /// Replicate `r` uses seed `seed + r` for subsampling, priors and training.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowDataCell {
    pub size: usize,
    pub mode: Mode,
    pub replicates: Vec<MetricsReport>,
}

impl LowDataCell {
    pub fn summary(&self, metric: &str) -> MetricSummary {
        MetricSummary::from_values(self.replicates.iter().map(|r| r.get(metric)))
    }

    pub fn rows(&self) -> Vec<ResultRow> {
        let mut rows = Vec::new();
        for (r, report) in self.replicates.iter().enumerate() {
            for metric in METRIC_NAMES {
                rows.push(ResultRow::new(
                    "lowdata",
                    self.mode,
                    self.size,
                    r,
                    metric,
                    report.get(metric),
                ));
            }
        }
        for metric in METRIC_NAMES {
            let s = self.summary(metric);
            rows.push(ResultRow::new(
                "lowdata", self.mode, self.size, "mean", metric, s.mean,
            ));
            rows.push(ResultRow::new(
                "lowdata", self.mode, self.size, "std", metric, s.std,
            ));
        }
        rows
    }
}

/// First `size` rows of a seeded shuffle of `0..pool`, returned in ascending order.
///
/// For a fixed seed, smaller subsets are contained in larger ones.
fn subsample(pool: usize, size: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pool).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut chosen = order[..size].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Validation rows kept alongside `size` training rows: proportional to the pool ratio.
fn val_size(size: usize, train_pool: usize, val_pool: usize) -> usize {
    if size == train_pool {
        return val_pool;
    }
    ((size as f64 * val_pool as f64 / train_pool as f64).round() as usize).clamp(1, val_pool)
}

/// Train on nested random subsets of the training pool and score on the full test set.
///
/// Priors are rebuilt from each subset. Sizes larger than the training pool are
/// skipped with a warning.
pub fn low_data_sweep(
    train: &LabeledDataset,
    val: &LabeledDataset,
    test: &LabeledDataset,
    spec: &LowDataSpec,
) -> Result<Vec<LowDataCell>> {
    let sizes: Vec<usize> = spec
        .sizes
        .iter()
        .copied()
        .filter(|&s| {
            let ok = s >= 1 && s <= train.len();
            if !ok {
                log::warn!("skipping training size {s}: pool has {} rows", train.len());
            }
            ok
        })
        .collect();

    let jobs: Vec<(usize, Mode, usize)> = sizes
        .iter()
        .flat_map(|&s| {
            spec.modes
                .iter()
                .flat_map(move |&m| (0..spec.replicates).map(move |r| (s, m, r)))
        })
        .collect();

    let reports: Vec<MetricsReport> = jobs
        .par_iter()
        .map(|&(size, mode, r)| {
            let seed = spec.seed.wrapping_add(r as u64);
            let train_sub = train.select(&subsample(train.len(), size, seed))?;
            let val_sub = val.select(&subsample(
                val.len(),
                val_size(size, train.len(), val.len()),
                seed,
            ))?;
            let settings = ModelSettings {
                train: TrainConfig {
                    seed,
                    ..spec.settings.train.clone()
                },
                ..spec.settings.clone()
            };
            train_mode(mode, &train_sub, Some(&val_sub), &settings)?.evaluate(test)
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    let mut it = reports.into_iter();
    for &size in &sizes {
        for &mode in &spec.modes {
            cells.push(LowDataCell {
                size,
                mode,
                replicates: it.by_ref().take(spec.replicates).collect(),
            });
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityPoint {
    pub epochs: usize,
    pub mode: Mode,
    pub report: MetricsReport,
}

impl StabilityPoint {
    pub fn rows(&self) -> Vec<ResultRow> {
        METRIC_NAMES
            .iter()
            .map(|m| {
                ResultRow::new(
                    "stability",
                    self.mode,
                    self.epochs,
                    0,
                    m,
                    self.report.get(m),
                )
            })
            .collect()
    }
}

/// Test metrics after training for exactly each epoch budget, without early stopping.
pub fn stability_sweep(
    train: &LabeledDataset,
    test: &LabeledDataset,
    epoch_grid: &[usize],
    modes: &[Mode],
    settings: &ModelSettings,
) -> Result<Vec<StabilityPoint>> {
    let jobs: Vec<(usize, Mode)> = modes
        .iter()
        .flat_map(|&m| epoch_grid.iter().map(move |&e| (e, m)))
        .collect();
    jobs.par_iter()
        .map(|&(epochs, mode)| {
            let s = ModelSettings {
                train: TrainConfig {
                    max_epochs: epochs,
                    ..settings.train.clone()
                },
                ..settings.clone()
            };
            let report = train_mode(mode, train, None, &s)?.evaluate(test)?;
            Ok(StabilityPoint {
                epochs,
                mode,
                report,
            })
        })
        .collect()
}
