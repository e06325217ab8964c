//! Classification metrics computed over non-abstained predictions, plus
//! parameter-recovery distances.

use crate::error::{Error, Result};
use crate::inference::{coverage, Prediction};
use crate::model::LabelVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tp: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tn + self.fp + self.fn_ + self.tp
    }
}

/// Metrics over scored rows (prediction and truth both nonzero).
///
/// `None` marks a metric whose denominator vanished.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub f1: Option<f64>,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub auc_roc: Option<f64>,
    pub coverage: f64,
    pub confusion: Confusion,
    pub n_scored: usize,
}

/// Metric names in reporting order.
pub const METRIC_NAMES: [&str; 6] = [
    "f1",
    "accuracy",
    "precision",
    "recall",
    "auc_roc",
    "coverage",
];

impl MetricsReport {
    pub fn from_confusion(confusion: Confusion, coverage: f64, auc_roc: Option<f64>) -> Self {
        let Confusion { tn, fp, fn_, tp } = confusion;
        let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = match (precision, recall) {
            (None, None) => None,
            (Some(p), Some(r)) if p + r == 0.0 => None,
            (Some(p), Some(r)) => Some(2.0 * p * r / (p + r)),
            _ => Some(0.0),
        };
        let n_scored = confusion.total();
        Self {
            f1,
            accuracy: ratio(tp + tn, n_scored),
            precision,
            recall,
            auc_roc,
            coverage,
            confusion,
            n_scored,
        }
    }

    /// Value of the named metric (see [`METRIC_NAMES`]).
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "f1" => self.f1,
            "accuracy" => self.accuracy,
            "precision" => self.precision,
            "recall" => self.recall,
            "auc_roc" => self.auc_roc,
            "coverage" => Some(self.coverage),
            _ => None,
        }
    }

    /// The five metrics compared during model selection.
    pub fn selection_metrics(&self) -> [Option<f64>; 5] {
        [
            self.accuracy,
            self.f1,
            self.precision,
            self.recall,
            self.auc_roc,
        ]
    }

    /// Flat `key=value` lines; undefined metrics print as `NA`.
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        for name in METRIC_NAMES {
            out.push_str(&format!("{name}={}\n", fmt_opt(self.get(name))));
        }
        let c = self.confusion;
        out.push_str(&format!(
            "tn={}\nfp={}\nfn={}\ntp={}\nn_scored={}\n",
            c.tn, c.fp, c.fn_, c.tp, self.n_scored
        ));
        out
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

/// Two-decimal percentage, e.g. `0.925925…` -> `"92.59"`; `"-"` when undefined.
pub fn format_percent(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{:.2}", v * 100.0))
}

/// Score predictions against `{-1, +1}` truth. `+1` is the positive class.
pub fn score(predictions: &[Prediction], truth: &LabelVector) -> Result<MetricsReport> {
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            what: "truth labels",
            expected: predictions.len(),
            found: truth.len(),
        });
    }
    let mut confusion = Confusion::default();
    let mut scored = Vec::new();
    for (p, &y) in predictions.iter().zip(truth.as_slice()) {
        if p.label == 0 || y == 0 {
            continue;
        }
        match (p.label, y) {
            (1, 1) => confusion.tp += 1,
            (1, _) => confusion.fp += 1,
            (_, 1) => confusion.fn_ += 1,
            _ => confusion.tn += 1,
        }
        scored.push((p.score_pos, y == 1));
    }
    Ok(MetricsReport::from_confusion(
        confusion,
        coverage(predictions),
        auc_roc(&scored),
    ))
}

/// Area under the ROC curve by the rank statistic; tied scores count 1/2.
///
/// `None` unless both classes are present.
pub fn auc_roc(scored: &[(f64, bool)]) -> Option<f64> {
    let n_pos = scored.iter().filter(|s| s.1).count();
    let n_neg = scored.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut sorted: Vec<(f64, bool)> = scored.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Midranks, 1-based.
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start;
        while end + 1 < sorted.len() && sorted[end + 1].0 == sorted[start].0 {
            end += 1;
        }
        let midrank = (start + end) as f64 / 2.0 + 1.0;
        let pos_in_group = sorted[start..=end].iter().filter(|s| s.1).count();
        rank_sum_pos += midrank * pos_in_group as f64;
        start = end + 1;
    }
    let (np, nn) = (n_pos as f64, n_neg as f64);
    Some((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Euclidean distance between two parameter vectors.
pub fn l2_convergence(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::DimensionMismatch {
            what: "parameter vector",
            expected: reference.len(),
            found: estimate.len(),
        });
    }
    Ok(reference
        .iter()
        .zip(estimate)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Accuracy split by agreement with the majority vote.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcordanceReport {
    pub accuracy_concordant: Option<f64>,
    pub accuracy_discordant: Option<f64>,
    /// Share of discordant rows on which the majority vote abstained.
    pub mv_abstain_share_discordant: Option<f64>,
    pub n_concordant: usize,
    pub n_discordant: usize,
}

/// Partition scored rows by whether the prediction equals the majority vote.
pub fn mv_concordance(
    predictions: &[Prediction],
    mv_votes: &LabelVector,
    truth: &LabelVector,
) -> Result<ConcordanceReport> {
    for (what, len) in [
        ("majority votes", mv_votes.len()),
        ("truth labels", truth.len()),
    ] {
        if len != predictions.len() {
            return Err(Error::DimensionMismatch {
                what,
                expected: predictions.len(),
                found: len,
            });
        }
    }
    let (mut n_con, mut ok_con, mut n_dis, mut ok_dis, mut dis_abstain) = (0, 0, 0, 0, 0);
    for ((p, &mv), &y) in predictions
        .iter()
        .zip(mv_votes.as_slice())
        .zip(truth.as_slice())
    {
        if p.label == 0 || y == 0 {
            continue;
        }
        let correct = usize::from(p.label == y);
        if p.label == mv {
            n_con += 1;
            ok_con += correct;
        } else {
            n_dis += 1;
            ok_dis += correct;
            dis_abstain += usize::from(mv == 0);
        }
    }
    let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
    Ok(ConcordanceReport {
        accuracy_concordant: ratio(ok_con, n_con),
        accuracy_discordant: ratio(ok_dis, n_dis),
        mv_abstain_share_discordant: ratio(dis_abstain, n_dis),
        n_concordant: n_con,
        n_discordant: n_dis,
    })
}
