//! Generative model of labeling-function votes.
//!
//! Each labeling function (LF) `j` abstains with probability `1 - beta_j`;
//! when it votes it agrees with the latent class with probability `alpha_j`.
//! Per observation the two class-conditional joints are
//!
//! ```text
//! P(row, y) = P(y) * prod_j P(vote_j | y, alpha_j, beta_j)
//! ```
//!
//! and the marginal sums them over `y in {-1, +1}`. The training objective is
//! the sum of log marginals plus, for MAP fits, one beta log-density per
//! parameter. All log-domain evaluation clamps parameters to
//! `[PARAM_EPS, 1 - PARAM_EPS]`.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Clamp applied to accuracies and coverages before taking logs.
pub const PARAM_EPS: f64 = 1e-6;

/// `|p_pos - p_neg|` at or below this counts as a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

fn check_vote(value: i8, row: usize, col: usize) -> Result<()> {
    if (-1..=1).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidVote {
            row,
            col,
            value: value as i64,
        })
    }
}

/// Dense `n x m` matrix of ternary LF votes, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LfMatrix {
    n: usize,
    m: usize,
    votes: Vec<i8>,
}

impl LfMatrix {
    pub fn new(n: usize, m: usize, votes: Vec<i8>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("LF matrix has no rows"));
        }
        if m == 0 {
            return Err(Error::Empty("LF matrix has no columns"));
        }
        if votes.len() != n * m {
            return Err(Error::DimensionMismatch {
                what: "vote buffer",
                expected: n * m,
                found: votes.len(),
            });
        }
        for (k, &v) in votes.iter().enumerate() {
            check_vote(v, k / m, k % m)?;
        }
        Ok(Self { n, m, votes })
    }

    pub fn from_rows<R: AsRef<[i8]>>(rows: &[R]) -> Result<Self> {
        let m = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut votes = Vec::with_capacity(rows.len() * m);
        for row in rows {
            let row = row.as_ref();
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    what: "matrix row",
                    expected: m,
                    found: row.len(),
                });
            }
            votes.extend_from_slice(row);
        }
        Self::new(rows.len(), m, votes)
    }

    /// Number of observations.
    pub fn n_rows(&self) -> usize {
        self.n
    }

    /// Number of labeling functions.
    pub fn n_lfs(&self) -> usize {
        self.m
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.votes[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i8]> {
        self.votes.chunks_exact(self.m)
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.votes[i * self.m + j]
    }

    pub fn column(&self, j: usize) -> Vec<i8> {
        self.rows().map(|r| r[j]).collect()
    }

    /// New matrix holding the given rows in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut votes = Vec::with_capacity(indices.len() * self.m);
        for &i in indices {
            votes.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), self.m, votes)
    }

    /// Matrix with every vote negated.
    pub fn negated(&self) -> Self {
        Self {
            n: self.n,
            m: self.m,
            votes: self.votes.iter().map(|v| -v).collect(),
        }
    }
}

/// Per-observation labels in `{-1, 0, +1}`; 0 marks an abstention.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelVector(Vec<i8>);

impl LabelVector {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        for (index, &v) in values.iter().enumerate() {
            if !(-1..=1).contains(&v) {
                return Err(Error::InvalidLabel {
                    index,
                    value: v as i64,
                });
            }
        }
        Ok(Self(values))
    }

    /// Ground-truth labels: entries restricted to `{-1, +1}`.
    pub fn truth(values: Vec<i8>) -> Result<Self> {
        for (index, &v) in values.iter().enumerate() {
            if v != 1 && v != -1 {
                return Err(Error::InvalidLabel {
                    index,
                    value: v as i64,
                });
            }
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self(indices.iter().map(|&i| self.0[i]).collect())
    }
}

impl std::ops::Index<usize> for LabelVector {
    type Output = i8;

    fn index(&self, i: usize) -> &i8 {
        &self.0[i]
    }
}

/// Per-LF accuracies `alpha` and coverages `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl ModelParams {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::DimensionMismatch {
                what: "beta",
                expected: alpha.len(),
                found: beta.len(),
            });
        }
        for &a in &alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::InvalidParameter {
                    name: "alpha",
                    value: a,
                    reason: "must lie in [0, 1]",
                });
            }
        }
        for &b in &beta {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::InvalidParameter {
                    name: "beta",
                    value: b,
                    reason: "must lie in [0, 1]",
                });
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn n_lfs(&self) -> usize {
        self.alpha.len()
    }

    fn check_width(&self, m: usize) -> Result<()> {
        if self.alpha.len() != m {
            return Err(Error::DimensionMismatch {
                what: "model parameters",
                expected: m,
                found: self.alpha.len(),
            });
        }
        Ok(())
    }
}

/// Prior probabilities of the two classes for one observation.
///
/// The pair need not sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassPrior {
    pub pos: f64,
    pub neg: f64,
}

impl ClassPrior {
    pub const SYMMETRIC: ClassPrior = ClassPrior { pos: 0.5, neg: 0.5 };

    pub fn new(pos: f64, neg: f64) -> Self {
        Self { pos, neg }
    }

    fn ln(self) -> (f64, f64) {
        (self.pos.ln(), self.neg.ln())
    }
}

/// Bernoulli prior over the latent labels, anchored on majority-vote labels.
///
/// Where the anchor votes `c` the class pair gives `p` to `c` and `1 - p` to
/// `-c`; where it abstains the pair is `(0.5, 0.5)`.
#[derive(Debug, Clone, PartialEq)]
pub struct YPrior {
    pub p: f64,
    pub mv_votes: LabelVector,
    pub force_abstain: bool,
}

impl YPrior {
    pub fn new(p: f64, mv_votes: LabelVector, force_abstain: bool) -> Result<Self> {
        if !(0.5..=1.0).contains(&p) {
            return Err(Error::InvalidParameter {
                name: "p",
                value: p,
                reason: "must lie in [0.5, 1]",
            });
        }
        Ok(Self {
            p,
            mv_votes,
            force_abstain,
        })
    }

    /// Symmetric class priors on every row, no forced abstention.
    pub fn uninformative(n: usize) -> Self {
        Self {
            p: 0.5,
            mv_votes: LabelVector::zeros(n),
            force_abstain: false,
        }
    }

    /// Same `p` and abstention policy, anchored on different votes.
    pub fn with_votes(&self, mv_votes: LabelVector) -> Self {
        Self {
            p: self.p,
            mv_votes,
            force_abstain: self.force_abstain,
        }
    }

    pub fn class_prior(&self, i: usize) -> ClassPrior {
        match self.mv_votes[i] {
            1 => ClassPrior::new(self.p, 1.0 - self.p),
            -1 => ClassPrior::new(1.0 - self.p, self.p),
            _ => ClassPrior::SYMMETRIC,
        }
    }

    pub fn len(&self) -> usize {
        self.mv_votes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mv_votes.is_empty()
    }
}

/// Independent beta priors, one `(u_j, v_j)` pair per labeling function.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaPriors {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Beta priors over LF accuracies.
pub type AlphaPrior = BetaPriors;

impl BetaPriors {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch {
                what: "beta prior v",
                expected: u.len(),
                found: v.len(),
            });
        }
        for &x in u.iter().chain(&v) {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "beta prior shape",
                    value: x,
                    reason: "must be positive and finite",
                });
            }
        }
        Ok(Self { u, v })
    }

    /// `Beta(1, 1)` on every coordinate.
    pub fn uniform(m: usize) -> Self {
        Self {
            u: vec![1.0; m],
            v: vec![1.0; m],
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn means(&self) -> Vec<f64> {
        self.u
            .iter()
            .zip(&self.v)
            .map(|(u, v)| u / (u + v))
            .collect()
    }

    /// Log-density of coordinate `j` at `x`, with `x` clamped into the interior.
    pub fn ln_density(&self, j: usize, x: f64) -> f64 {
        let (u, v) = (self.u[j], self.v[j]);
        let x = clamp_param(x);
        (u - 1.0) * x.ln() + (v - 1.0) * (1.0 - x).ln() - ln_beta_fn(u, v)
    }

    /// Derivative of [`Self::ln_density`] with respect to `x` (interior points).
    pub fn d_ln_density(&self, j: usize, x: f64) -> f64 {
        let (u, v) = (self.u[j], self.v[j]);
        let x = clamp_param(x);
        (u - 1.0) / x - (v - 1.0) / (1.0 - x)
    }

    pub fn ln_density_sum(&self, xs: &[f64]) -> f64 {
        xs.iter()
            .enumerate()
            .map(|(j, &x)| self.ln_density(j, x))
            .sum()
    }

    fn check_width(&self, m: usize) -> Result<()> {
        if self.len() != m {
            return Err(Error::DimensionMismatch {
                what: "beta prior",
                expected: m,
                found: self.len(),
            });
        }
        Ok(())
    }
}

/// `ln B(u, v)`. Exact when either shape is 1, so `Beta(1, 1)` has log-density 0.
fn ln_beta_fn(u: f64, v: f64) -> f64 {
    if u == 1.0 {
        -v.ln()
    } else if v == 1.0 {
        -u.ln()
    } else {
        ln_gamma(u) + ln_gamma(v) - ln_gamma(u + v)
    }
}

pub(crate) fn clamp_param(x: f64) -> f64 {
    x.clamp(PARAM_EPS, 1.0 - PARAM_EPS)
}

fn check_class(y: i8) -> Result<()> {
    if y == 1 || y == -1 {
        Ok(())
    } else {
        Err(Error::NotAClass(y))
    }
}

/// Probability of one vote given the class, accuracy and coverage.
pub fn lf_factor(vote: i8, y: i8, alpha: f64, beta: f64) -> Result<f64> {
    check_class(y)?;
    check_vote(vote, 0, 0)?;
    Ok(if vote == 0 {
        1.0 - beta
    } else if vote == y {
        alpha * beta
    } else {
        (1.0 - alpha) * beta
    })
}

/// `prior * prod_j lf_factor(row_j, y, alpha_j, beta_j)`, in linear space.
pub fn class_joint(row: &[i8], y: i8, params: &ModelParams, prior: f64) -> Result<f64> {
    check_class(y)?;
    params.check_width(row.len())?;
    row.iter()
        .zip(params.alpha.iter().zip(&params.beta))
        .try_fold(prior, |acc, (&vote, (&a, &b))| {
            Ok(acc * lf_factor(vote, y, a, b)?)
        })
}

/// Sum of the two class joints.
pub fn marginal(row: &[i8], params: &ModelParams, prior: ClassPrior) -> Result<f64> {
    Ok(class_joint(row, 1, params, prior.pos)? + class_joint(row, -1, params, prior.neg)?)
}

/// Posterior class probabilities `(P(+1 | row), P(-1 | row))`.
///
/// Computed in the log domain on clamped parameters. Fails with
/// [`Error::DegenerateMarginal`] when both class joints are zero.
pub fn posterior_class_probs(
    row: &[i8],
    params: &ModelParams,
    prior: ClassPrior,
) -> Result<(f64, f64)> {
    params.check_width(row.len())?;
    let factors = LogFactors::new(params);
    let (lp, ln) = factors.row_log_joints(row, prior.ln());
    posterior_from_log_joints(lp, ln)
}

pub(crate) fn posterior_from_log_joints(lp: f64, ln: f64) -> Result<(f64, f64)> {
    let d = lp - ln;
    if d.is_nan() {
        return Err(Error::DegenerateMarginal);
    }
    Ok((1.0 / (1.0 + (-d).exp()), 1.0 / (1.0 + d.exp())))
}

pub(crate) fn log_sum_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (-(a - b).abs()).exp().ln_1p()
}

/// Per-LF log factors for one parameter setting.
pub(crate) struct LogFactors {
    agree: Vec<f64>,
    disagree: Vec<f64>,
    abstain: Vec<f64>,
}

impl LogFactors {
    pub(crate) fn new(params: &ModelParams) -> Self {
        let m = params.n_lfs();
        let mut agree = Vec::with_capacity(m);
        let mut disagree = Vec::with_capacity(m);
        let mut abstain = Vec::with_capacity(m);
        for (&a, &b) in params.alpha.iter().zip(&params.beta) {
            let (a, b) = (clamp_param(a), clamp_param(b));
            agree.push(a.ln() + b.ln());
            disagree.push((1.0 - a).ln() + b.ln());
            abstain.push((1.0 - b).ln());
        }
        Self {
            agree,
            disagree,
            abstain,
        }
    }

    /// `(ln P(row, +1), ln P(row, -1))` given log class priors.
    pub(crate) fn row_log_joints(&self, row: &[i8], ln_prior: (f64, f64)) -> (f64, f64) {
        let (mut lp, mut ln) = ln_prior;
        for (j, &vote) in row.iter().enumerate() {
            match vote {
                1 => {
                    lp += self.agree[j];
                    ln += self.disagree[j];
                }
                -1 => {
                    lp += self.disagree[j];
                    ln += self.agree[j];
                }
                _ => {
                    lp += self.abstain[j];
                    ln += self.abstain[j];
                }
            }
        }
        (lp, ln)
    }
}

/// Log objective over a fixed matrix, label prior and optional beta priors.
///
/// Without parameter priors this is the maximum-likelihood objective.
/// Parameter priors enter once, not once per observation.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    pub(crate) matrix: &'a LfMatrix,
    pub(crate) ln_priors: Vec<(f64, f64)>,
    pub(crate) alpha_prior: Option<&'a BetaPriors>,
    pub(crate) beta_prior: Option<&'a BetaPriors>,
}

impl<'a> Objective<'a> {
    pub fn new(
        matrix: &'a LfMatrix,
        y_prior: &YPrior,
        alpha_prior: Option<&'a BetaPriors>,
        beta_prior: Option<&'a BetaPriors>,
    ) -> Result<Self> {
        if y_prior.len() != matrix.n_rows() {
            return Err(Error::DimensionMismatch {
                what: "label prior",
                expected: matrix.n_rows(),
                found: y_prior.len(),
            });
        }
        for prior in alpha_prior.iter().chain(beta_prior.iter()) {
            prior.check_width(matrix.n_lfs())?;
        }
        let ln_priors = (0..matrix.n_rows())
            .map(|i| y_prior.class_prior(i).ln())
            .collect();
        Ok(Self {
            matrix,
            ln_priors,
            alpha_prior,
            beta_prior,
        })
    }

    /// Maximum-likelihood objective with symmetric class priors.
    pub fn mle(matrix: &'a LfMatrix) -> Self {
        Self {
            matrix,
            ln_priors: vec![ClassPrior::SYMMETRIC.ln(); matrix.n_rows()],
            alpha_prior: None,
            beta_prior: None,
        }
    }

    pub fn matrix(&self) -> &LfMatrix {
        self.matrix
    }

    /// `sum_i ln P(row_i)` over all rows.
    pub fn data_term(&self, params: &ModelParams) -> Result<f64> {
        params.check_width(self.matrix.n_lfs())?;
        let factors = LogFactors::new(params);
        Ok(self
            .matrix
            .rows()
            .zip(&self.ln_priors)
            .map(|(row, &lnp)| {
                let (lp, ln) = factors.row_log_joints(row, lnp);
                log_sum_exp(lp, ln)
            })
            .sum())
    }

    /// Sum of parameter log-prior densities (0 when there are none).
    pub fn prior_term(&self, params: &ModelParams) -> f64 {
        let mut total = 0.0;
        if let Some(prior) = self.alpha_prior {
            total += prior.ln_density_sum(&params.alpha);
        }
        if let Some(prior) = self.beta_prior {
            total += prior.ln_density_sum(&params.beta);
        }
        total
    }

    pub fn value(&self, params: &ModelParams) -> Result<f64> {
        let data = self.data_term(params)?;
        if self.alpha_prior.is_none() && self.beta_prior.is_none() {
            return Ok(data);
        }
        Ok(data + self.prior_term(params))
    }
}

/// Sum of log marginals, plus the accuracy log-prior when `include_priors`.
pub fn log_objective(
    matrix: &LfMatrix,
    params: &ModelParams,
    alpha_prior: &AlphaPrior,
    y_prior: &YPrior,
    include_priors: bool,
) -> Result<f64> {
    let prior = include_priors.then_some(alpha_prior);
    Objective::new(matrix, y_prior, prior, None)?.value(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params(alpha: &[f64], beta: &[f64]) -> ModelParams {
        ModelParams::new(alpha.to_vec(), beta.to_vec()).unwrap()
    }

    #[test]
    fn lf_factor_branches() {
        assert_abs_diff_eq!(lf_factor(0, 1, 0.9, 0.4).unwrap(), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(lf_factor(1, 1, 0.9, 0.4).unwrap(), 0.36, epsilon = 1e-15);
        assert_abs_diff_eq!(lf_factor(-1, 1, 0.9, 0.4).unwrap(), 0.04, epsilon = 1e-15);
        assert!(matches!(
            lf_factor(1, 0, 0.9, 0.4),
            Err(Error::NotAClass(0))
        ));
    }

    #[test]
    fn class_joint_examples() {
        let p = params(&[0.3, 0.8], &[0.4, 0.4]);
        assert_abs_diff_eq!(
            class_joint(&[0, 0], 1, &p, 0.5).unwrap(),
            0.18,
            epsilon = 1e-15
        );

        let p = params(&[0.9, 0.8], &[1.0, 1.0]);
        assert_abs_diff_eq!(
            class_joint(&[1, -1], 1, &p, 0.5).unwrap(),
            0.09,
            epsilon = 1e-15
        );

        let p = params(&[0.7], &[0.5]);
        assert_abs_diff_eq!(
            class_joint(&[1], -1, &p, 1.0).unwrap(),
            0.15,
            epsilon = 1e-15
        );

        assert!(matches!(
            class_joint(&[1, 1, 1], 1, &p, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn marginal_examples() {
        let p = params(&[0.2, 0.6, 0.9], &[0.1, 0.4, 0.7]);
        let m = marginal(&[0, 0, 0], &p, ClassPrior::SYMMETRIC).unwrap();
        assert_abs_diff_eq!(m, 0.9 * 0.6 * 0.3, epsilon = 1e-15);

        let p = params(&[0.7], &[0.5]);
        assert_abs_diff_eq!(
            marginal(&[1], &p, ClassPrior::SYMMETRIC).unwrap(),
            0.25,
            epsilon = 1e-15
        );

        let p = params(&[0.7, 0.4], &[0.5, 0.9]);
        let row = [1, -1];
        assert_eq!(
            marginal(&row, &p, ClassPrior::new(1.0, 0.0)).unwrap(),
            class_joint(&row, 1, &p, 1.0).unwrap()
        );
    }

    #[test]
    fn posterior_examples() {
        let p = params(&[0.7, 0.2], &[0.5, 0.5]);
        let (pos, neg) = posterior_class_probs(&[0, 0], &p, ClassPrior::SYMMETRIC).unwrap();
        assert_eq!((pos, neg), (0.5, 0.5));

        let p = params(&[0.7], &[0.5]);
        let (pos, neg) = posterior_class_probs(&[1], &p, ClassPrior::SYMMETRIC).unwrap();
        assert_abs_diff_eq!(pos, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(neg, 0.3, epsilon = 1e-12);

        let (pos, neg) = posterior_class_probs(&[-1], &p, ClassPrior::new(1.0, 0.0)).unwrap();
        assert_eq!((pos, neg), (1.0, 0.0));
    }

    #[test]
    fn degenerate_marginal_is_signalled() {
        let p = params(&[0.7], &[0.5]);
        let err = posterior_class_probs(&[1], &p, ClassPrior::new(0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::DegenerateMarginal));
    }

    #[test]
    fn log_objective_examples() {
        let lambda = LfMatrix::from_rows(&[[0i8]]).unwrap();
        let p = params(&[0.8], &[0.4]);
        let uniform = BetaPriors::uniform(1);
        let y = YPrior::uninformative(1);
        let mle = log_objective(&lambda, &p, &uniform, &y, false).unwrap();
        // The symmetric class priors sum to one, so only the abstention factor remains.
        assert_abs_diff_eq!(mle, 0.6f64.ln(), epsilon = 1e-12);
        let map = log_objective(&lambda, &p, &uniform, &y, true).unwrap();
        assert_eq!(mle.to_bits(), map.to_bits());

        let lambda = LfMatrix::from_rows(&[[1i8], [-1]]).unwrap();
        let p = params(&[0.7], &[1.0]);
        let y = YPrior::uninformative(2);
        let v = log_objective(&lambda, &p, &uniform, &y, false).unwrap();
        // beta = 1 is clamped to 1 - 1e-6 before logs.
        assert_abs_diff_eq!(v, 2.0 * 0.5f64.ln(), epsilon = 1e-5);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(LfMatrix::from_rows(&[[2i8]]).is_err());
        assert!(LfMatrix::from_rows::<[i8; 0]>(&[]).is_err());
        assert!(ModelParams::new(vec![1.2], vec![0.5]).is_err());
        assert!(YPrior::new(0.4, LabelVector::zeros(1), false).is_err());
        assert!(BetaPriors::new(vec![0.0], vec![1.0]).is_err());
        assert!(LabelVector::truth(vec![1, 0]).is_err());
    }

    #[test]
    fn beta_log_density_matches_closed_form() {
        // Beta(2, 3) density at 0.4 is 12 * 0.4 * 0.6^2.
        let prior = BetaPriors::new(vec![2.0], vec![3.0]).unwrap();
        assert_abs_diff_eq!(
            prior.ln_density(0, 0.4),
            (12.0f64 * 0.4 * 0.36).ln(),
            epsilon = 1e-12
        );
        assert_eq!(BetaPriors::uniform(1).ln_density(0, 0.3), 0.0);
    }

    fn interior() -> impl Strategy<Value = f64> {
        0.01f64..0.99
    }

    fn vote() -> impl Strategy<Value = i8> {
        -1i8..=1
    }

    proptest! {
        #[test]
        fn factor_branches_sum_to_one(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let total = lf_factor(0, 1, a, b).unwrap()
                + lf_factor(1, 1, a, b).unwrap()
                + lf_factor(-1, 1, a, b).unwrap();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn posterior_is_normalized(
            row in prop::collection::vec(vote(), 1..8),
            seed in prop::collection::vec((interior(), interior()), 8),
            pos in 0.0f64..=1.0,
        ) {
            let m = row.len();
            let p = ModelParams::new(
                seed[..m].iter().map(|s| s.0).collect(),
                seed[..m].iter().map(|s| s.1).collect(),
            ).unwrap();
            let (pp, pn) = posterior_class_probs(&row, &p, ClassPrior::new(pos, 1.0 - pos)).unwrap();
            prop_assert!((0.0..=1.0).contains(&pp) && (0.0..=1.0).contains(&pn));
            prop_assert!((pp + pn - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn marginal_is_column_permutation_invariant(
            row in prop::collection::vec(vote(), 2..7),
            seed in prop::collection::vec((interior(), interior()), 7),
            shift in 0usize..7,
        ) {
            let m = row.len();
            let p = ModelParams::new(
                seed[..m].iter().map(|s| s.0).collect(),
                seed[..m].iter().map(|s| s.1).collect(),
            ).unwrap();
            let rot = |v: &[f64]| { let mut v = v.to_vec(); v.rotate_left(shift % m); v };
            let mut row2 = row.clone();
            row2.rotate_left(shift % m);
            let p2 = ModelParams::new(rot(&p.alpha), rot(&p.beta)).unwrap();
            let a = marginal(&row, &p, ClassPrior::SYMMETRIC).unwrap();
            let b = marginal(&row2, &p2, ClassPrior::SYMMETRIC).unwrap();
            prop_assert!((a - b).abs() <= 1e-15 * a.max(1e-300));
        }

        #[test]
        fn joint_monotone_in_accuracy(
            a in 0.05f64..0.9, bump in 0.01f64..0.09, b in 0.05f64..1.0, other in interior(),
        ) {
            let lo = params(&[a, other], &[b, 0.5]);
            let hi = params(&[a + bump, other], &[b, 0.5]);
            // vote agrees with y = +1
            prop_assert!(class_joint(&[1, 1], 1, &hi, 0.5).unwrap() > class_joint(&[1, 1], 1, &lo, 0.5).unwrap());
            // vote disagrees with y = +1
            prop_assert!(class_joint(&[-1, 1], 1, &hi, 0.5).unwrap() < class_joint(&[-1, 1], 1, &lo, 0.5).unwrap());
        }

        #[test]
        fn uniform_prior_objective_equals_mle(
            rows in prop::collection::vec(prop::collection::vec(vote(), 3), 1..20),
            alpha in prop::collection::vec(interior(), 3),
            beta in prop::collection::vec(interior(), 3),
        ) {
            let lambda = LfMatrix::from_rows(&rows).unwrap();
            let p = ModelParams::new(alpha, beta).unwrap();
            let y = YPrior::uninformative(lambda.n_rows());
            let uniform = BetaPriors::uniform(3);
            let mle = log_objective(&lambda, &p, &uniform, &y, false).unwrap();
            let map = log_objective(&lambda, &p, &uniform, &y, true).unwrap();
            prop_assert_eq!(mle.to_bits(), map.to_bits());
            prop_assert_eq!(mle.to_bits(), Objective::mle(&lambda).value(&p).unwrap().to_bits());
        }
    }
}
