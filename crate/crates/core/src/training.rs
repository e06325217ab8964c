//! Parameter fitting by projected stochastic gradient ascent.
//!
//! Coverages are fixed to their observed rates unless `learn_beta` is set.
//! Accuracies start at `alpha_init` and follow plain SGD on minibatches drawn
//! from a per-epoch shuffle. Each step moves by `learning_rate` times the
//! batch-averaged gradient and is projected back onto `[clamp_eps, 1 - clamp_eps]`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{
    clamp_param, posterior_from_log_joints, BetaPriors, LfMatrix, LogFactors, ModelParams,
    Objective,
};
use crate::priors::{beta_from_mean, majority_vote, PriorSource, PriorSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Rows per minibatch; `None` means full batch.
    pub batch_size: Option<usize>,
    /// Epochs without validation improvement tolerated before stopping.
    pub patience: usize,
    pub alpha_init: f64,
    pub seed: u64,
    pub learn_beta: bool,
    pub clamp_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            max_epochs: 100,
            batch_size: None,
            patience: 5,
            alpha_init: 0.9,
            seed: 0,
            learn_beta: false,
            clamp_eps: 1e-6,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "learning_rate",
                value: self.learning_rate,
                reason: "must be positive and finite",
            });
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidParameter {
                name: "batch_size",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        if !(0.0..=1.0).contains(&self.alpha_init) {
            return Err(Error::InvalidParameter {
                name: "alpha_init",
                value: self.alpha_init,
                reason: "must lie in [0, 1]",
            });
        }
        if !(self.clamp_eps > 0.0 && self.clamp_eps < 0.5) {
            return Err(Error::InvalidParameter {
                name: "clamp_eps",
                value: self.clamp_eps,
                reason: "must lie in (0, 0.5)",
            });
        }
        Ok(())
    }

    /// Stable textual rendering, used for digests and model files.
    pub fn canonical(&self) -> String {
        format!(
            "lr={};epochs={};batch={};patience={};alpha_init={};seed={};learn_beta={};clamp_eps={}",
            self.learning_rate,
            self.max_epochs,
            self.batch_size
                .map_or_else(|| "full".to_string(), |b| b.to_string()),
            self.patience,
            self.alpha_init,
            self.seed,
            self.learn_beta,
            self.clamp_eps
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: ModelParams,
    /// Negative training objective after each epoch.
    pub train_loss_history: Vec<f64>,
    /// Negative validation objective after each epoch; empty without validation data.
    pub val_loss_history: Vec<f64>,
    /// Last epoch that ran.
    pub stopped_epoch: usize,
    /// Epoch whose parameters were returned (0 means the initial parameters).
    pub best_epoch: usize,
}

/// Observed fraction of non-abstaining votes per column.
pub fn coverage_from_data(matrix: &LfMatrix) -> Vec<f64> {
    let mut counts = vec![0usize; matrix.n_lfs()];
    for row in matrix.rows() {
        for (c, &v) in counts.iter_mut().zip(row) {
            if v != 0 {
                *c += 1;
            }
        }
    }
    let n = matrix.n_rows() as f64;
    counts.into_iter().map(|c| c as f64 / n).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl Objective<'_> {
    /// Gradient of `sum_{i in rows} ln P(row_i) + prior_weight * ln prior(params)`.
    ///
    /// With `prior_weight = |rows| / n` the minibatch gradients of one epoch sum
    /// to the full-objective gradient. Rows are accumulated in the given order.
    pub fn gradient(
        &self,
        params: &ModelParams,
        rows: &[usize],
        prior_weight: f64,
    ) -> Result<Gradient> {
        let m = self.matrix.n_lfs();
        if params.n_lfs() != m {
            return Err(Error::DimensionMismatch {
                what: "model parameters",
                expected: m,
                found: params.n_lfs(),
            });
        }
        let alpha: Vec<f64> = params.alpha.iter().map(|&a| clamp_param(a)).collect();
        let beta: Vec<f64> = params.beta.iter().map(|&b| clamp_param(b)).collect();
        let factors = LogFactors::new(params);
        let mut ga = vec![0.0; m];
        let mut gb = vec![0.0; m];
        for &i in rows {
            let row = self.matrix.row(i);
            let (lp, ln) = factors.row_log_joints(row, self.ln_priors[i]);
            let (pp, pn) = posterior_from_log_joints(lp, ln)?;
            for (j, &vote) in row.iter().enumerate() {
                match vote {
                    0 => gb[j] -= 1.0 / (1.0 - beta[j]),
                    _ => {
                        let agree = if vote == 1 { pp } else { pn };
                        ga[j] += agree / alpha[j] - (1.0 - agree) / (1.0 - alpha[j]);
                        gb[j] += 1.0 / beta[j];
                    }
                }
            }
        }
        if let Some(prior) = self.alpha_prior {
            for (j, g) in ga.iter_mut().enumerate() {
                *g += prior_weight * prior.d_ln_density(j, params.alpha[j]);
            }
        }
        if let Some(prior) = self.beta_prior {
            for (j, g) in gb.iter_mut().enumerate() {
                *g += prior_weight * prior.d_ln_density(j, params.beta[j]);
            }
        }
        Ok(Gradient {
            alpha: ga,
            beta: gb,
        })
    }
}

/// Accuracy gradient over a batch of rows of the objective's matrix.
pub fn grad_alpha(
    objective: &Objective<'_>,
    params: &ModelParams,
    rows: &[usize],
    prior_weight: f64,
) -> Result<Vec<f64>> {
    Ok(objective.gradient(params, rows, prior_weight)?.alpha)
}

/// Coverage gradient over a batch of rows of the objective's matrix.
pub fn grad_beta(
    objective: &Objective<'_>,
    params: &ModelParams,
    rows: &[usize],
    prior_weight: f64,
) -> Result<Vec<f64>> {
    Ok(objective.gradient(params, rows, prior_weight)?.beta)
}

/// Beta priors over coverages centred on the empirical coverage, with the
/// accuracy prior's strength. Uninformative for the uniform source.
pub fn coverage_prior(coverage: &[f64], prior: &PriorSpec) -> Result<BetaPriors> {
    if prior.source == PriorSource::Uniform {
        return Ok(BetaPriors::uniform(coverage.len()));
    }
    let (u, v) = coverage
        .iter()
        .map(|&c| beta_from_mean(c, prior.strength))
        .collect::<Result<(Vec<_>, Vec<_>)>>()?;
    BetaPriors::new(u, v)
}

/// Fit accuracies (and optionally coverages).
///
/// `prior = None` is maximum likelihood with symmetric class priors. With
/// validation data, training stops after `patience` consecutive epochs without
/// improvement of the validation loss and the best epoch's parameters are
/// returned; without it, all `max_epochs` run and the final parameters are
/// returned.
pub fn fit(
    train: &LfMatrix,
    val: Option<&LfMatrix>,
    prior: Option<&PriorSpec>,
    config: &TrainConfig,
) -> Result<FitResult> {
    config.validate()?;
    let m = train.n_lfs();
    let n = train.n_rows();
    if let Some(val) = val {
        if val.n_lfs() != m {
            return Err(Error::DimensionMismatch {
                what: "validation matrix width",
                expected: m,
                found: val.n_lfs(),
            });
        }
    }

    let coverage = coverage_from_data(train);
    let beta_prior = match (config.learn_beta, prior) {
        (true, Some(spec)) => Some(coverage_prior(&coverage, spec)?),
        _ => None,
    };
    let alpha_prior = prior.map(|p| &p.alpha_prior);

    let objective = match prior {
        Some(spec) => Objective::new(train, &spec.y_prior, alpha_prior, beta_prior.as_ref())?,
        None => Objective::mle(train),
    };
    let val_objective = match (val, prior) {
        (Some(v), Some(spec)) => Some(Objective::new(
            v,
            &spec.y_prior.with_votes(majority_vote(v)),
            alpha_prior,
            beta_prior.as_ref(),
        )?),
        (Some(v), None) => Some(Objective::mle(v)),
        (None, _) => None,
    };

    let eps = config.clamp_eps;
    let project = |x: f64| x.clamp(eps, 1.0 - eps);
    let beta = if config.learn_beta {
        coverage.iter().map(|&c| project(c)).collect()
    } else {
        coverage
    };
    let mut params = ModelParams::new(vec![project(config.alpha_init); m], beta)?;

    let batch = config.batch_size.unwrap_or(n).min(n);
    let lr = config.learning_rate;
    let mut order: Vec<usize> = (0..n).collect();
    let mut train_hist = Vec::new();
    let mut val_hist = Vec::new();
    let mut best: Option<(f64, ModelParams, usize)> = None;
    let mut stale = 0usize;
    let mut stopped = 0usize;

    for epoch in 1..=config.max_epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(epoch as u64);
        order.sort_unstable();
        order.shuffle(&mut rng);

        for chunk in order.chunks(batch) {
            let weight = chunk.len() as f64 / n as f64;
            let grad = objective.gradient(&params, chunk, weight)?;
            if grad.alpha.iter().chain(&grad.beta).any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteGradient { epoch });
            }
            let scale = lr / chunk.len() as f64;
            for (a, g) in params.alpha.iter_mut().zip(&grad.alpha) {
                *a = project(*a + scale * g);
            }
            if config.learn_beta {
                for (b, g) in params.beta.iter_mut().zip(&grad.beta) {
                    *b = project(*b + scale * g);
                }
            }
        }

        let train_loss = -objective.value(&params)?;
        if !train_loss.is_finite() {
            return Err(Error::NonFiniteObjective { epoch });
        }
        train_hist.push(train_loss);
        stopped = epoch;

        if let Some(vo) = &val_objective {
            let val_loss = -vo.value(&params)?;
            if !val_loss.is_finite() {
                return Err(Error::NonFiniteObjective { epoch });
            }
            val_hist.push(val_loss);
            match &best {
                Some((b, _, _)) if val_loss >= *b => {
                    stale += 1;
                    if stale >= config.patience {
                        break;
                    }
                }
                _ => {
                    best = Some((val_loss, params.clone(), epoch));
                    stale = 0;
                }
            }
        }
    }

    let (params, best_epoch) = match best {
        Some((_, p, e)) => (p, e),
        None => (params, stopped),
    };
    Ok(FitResult {
        params,
        train_loss_history: train_hist,
        val_loss_history: val_hist,
        stopped_epoch: stopped,
        best_epoch,
    })
}

/// [`fit`] with coverages learned under beta priors centred on the empirical coverage.
pub fn learn_beta_fit(
    train: &LfMatrix,
    val: Option<&LfMatrix>,
    prior: Option<&PriorSpec>,
    config: &TrainConfig,
) -> Result<FitResult> {
    let config = TrainConfig {
        learn_beta: true,
        ..config.clone()
    };
    fit(train, val, prior, &config)
}
