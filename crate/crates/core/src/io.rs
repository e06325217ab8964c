//! Plain-text file formats: datasets, predictions, model files and result tables.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! writer here is lossless and byte-stable.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::ResultRow;
use crate::inference::{predict, AbstainReason, Prediction};
use crate::model::{BetaPriors, LabelVector, LfMatrix, ModelParams, YPrior};
use crate::priors::{majority_vote, PriorSource, PriorSpec};
use crate::training::{FitResult, TrainConfig};

pub const DEFAULT_TRUTH_COLUMN: &str = "y";
pub const PREDICTIONS_HEADER: &str = "index,label,score_pos,abstain_reason";
pub const RESULTS_HEADER: &str = "experiment,mode,size,replicate,metric,value";
pub const MODEL_MAGIC: &str = "labelforge-model";
pub const MODEL_VERSION: u32 = 1;

fn read_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_string(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn format_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Hex SHA-256 of `text`.
pub fn sha256_hex(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

type Table = (Vec<String>, Vec<(usize, csv::StringRecord)>);

/// Header plus body records of a CSV file, with diagnostics for empty files
/// and ragged rows. Records carry their 1-based line number.
fn read_table(path: &Path) -> Result<Table> {
    let text = read_string(path)?;
    if text.trim().is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| format_error(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut records = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| format_error(path, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(Error::Ragged {
                path: path.to_path_buf(),
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        records.push((line, record));
    }
    Ok((header, records))
}

fn parse_cell(path: &Path, line: usize, column: usize, cell: &str, allowed: &[i8]) -> Result<i8> {
    match cell.parse::<i8>() {
        Ok(v) if allowed.contains(&v) => Ok(v),
        _ => Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            column: column + 1,
            message: format!("expected one of {allowed:?}, found '{cell}'"),
        }),
    }
}

/// LF votes with optional ground truth, plus the LF column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub lf_names: Vec<String>,
    pub matrix: LfMatrix,
    pub truth: Option<LabelVector>,
}

/// Read a dataset whose truth column (if any) is named `y`.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<(LfMatrix, Option<LabelVector>)> {
    let d = read_dataset_with(path, DEFAULT_TRUTH_COLUMN)?;
    Ok((d.matrix, d.truth))
}

/// Read a dataset, treating the column named `truth_col` as ground truth and
/// every other column, in order, as an LF.
pub fn read_dataset_with(path: impl AsRef<Path>, truth_col: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let (header, records) = read_table(path)?;
    let truth_idx = header.iter().position(|h| h == truth_col);
    let lf_cols: Vec<usize> = (0..header.len())
        .filter(|&c| Some(c) != truth_idx)
        .collect();
    if lf_cols.is_empty() {
        return Err(format_error(path, "no labeling-function columns"));
    }
    if records.is_empty() {
        return Err(format_error(path, "no data rows"));
    }
    let mut votes = Vec::with_capacity(records.len() * lf_cols.len());
    let mut truth = Vec::new();
    for (line, record) in &records {
        for &c in &lf_cols {
            votes.push(parse_cell(path, *line, c, &record[c], &[-1, 0, 1])?);
        }
        if let Some(t) = truth_idx {
            truth.push(parse_cell(path, *line, t, &record[t], &[-1, 1])?);
        }
    }
    Ok(Dataset {
        lf_names: lf_cols.iter().map(|&c| header[c].clone()).collect(),
        matrix: LfMatrix::new(records.len(), lf_cols.len(), votes)?,
        truth: truth_idx.map(|_| LabelVector::truth(truth)).transpose()?,
    })
}

/// Ground-truth column of a dataset file; errors if it has none.
pub fn read_truth(path: impl AsRef<Path>, truth_col: &str) -> Result<LabelVector> {
    let path = path.as_ref();
    let (header, records) = read_table(path)?;
    let Some(t) = header.iter().position(|h| h == truth_col) else {
        return Err(format_error(path, format!("no truth column '{truth_col}'")));
    };
    let labels = records
        .iter()
        .map(|(line, record)| parse_cell(path, *line, t, &record[t], &[-1, 1]))
        .collect::<Result<Vec<_>>>()?;
    LabelVector::truth(labels)
}

/// Dataset text with header `lf_0,...,lf_{m-1}[,y]`.
pub fn dataset_to_string(matrix: &LfMatrix, truth: Option<&LabelVector>) -> Result<String> {
    if let Some(t) = truth {
        if t.len() != matrix.n_rows() {
            return Err(Error::DimensionMismatch {
                what: "truth labels",
                expected: matrix.n_rows(),
                found: t.len(),
            });
        }
    }
    let mut header: Vec<String> = (0..matrix.n_lfs()).map(|j| format!("lf_{j}")).collect();
    if truth.is_some() {
        header.push(DEFAULT_TRUTH_COLUMN.to_string());
    }
    let mut out = header.join(",");
    out.push('\n');
    for (i, row) in matrix.rows().enumerate() {
        let mut cells: Vec<String> = row.iter().map(i8::to_string).collect();
        if let Some(t) = truth {
            cells.push(t[i].to_string());
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_dataset(
    path: impl AsRef<Path>,
    matrix: &LfMatrix,
    truth: Option<&LabelVector>,
) -> Result<()> {
    write_string(path.as_ref(), &dataset_to_string(matrix, truth)?)
}

pub fn predictions_to_string(predictions: &[Prediction]) -> String {
    let mut out = format!("{PREDICTIONS_HEADER}\n");
    for (i, p) in predictions.iter().enumerate() {
        let _ = writeln!(out, "{i},{},{},{}", p.label, p.score_pos, p.abstain_reason);
    }
    out
}

pub fn write_predictions(path: impl AsRef<Path>, predictions: &[Prediction]) -> Result<()> {
    write_string(path.as_ref(), &predictions_to_string(predictions))
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    let path = path.as_ref();
    let (header, records) = read_table(path)?;
    if header.join(",") != PREDICTIONS_HEADER {
        return Err(format_error(
            path,
            format!("expected header '{PREDICTIONS_HEADER}'"),
        ));
    }
    let bad = |line: usize, column: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message,
    };
    records
        .iter()
        .enumerate()
        .map(|(i, (line, r))| {
            if r[0].parse::<usize>().ok() != Some(i) {
                return Err(bad(
                    *line,
                    1,
                    format!("expected index {i}, found '{}'", &r[0]),
                ));
            }
            let label = parse_cell(path, *line, 1, &r[1], &[-1, 0, 1])?;
            let score_pos: f64 = r[2]
                .parse()
                .map_err(|_| bad(*line, 3, format!("invalid score '{}'", &r[2])))?;
            let abstain_reason: AbstainReason = r[3].parse().map_err(|e| bad(*line, 4, e))?;
            Ok(Prediction {
                label,
                score_pos,
                abstain_reason,
            })
        })
        .collect()
}

pub fn results_to_string(rows: &[ResultRow]) -> String {
    let mut out = format!("{RESULTS_HEADER}\n");
    for r in rows {
        let value = r.value.map_or_else(|| "NA".to_string(), |v| v.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{value}",
            r.experiment, r.mode, r.size, r.replicate, r.metric
        );
    }
    out
}

pub fn write_results(path: impl AsRef<Path>, rows: &[ResultRow]) -> Result<()> {
    write_string(path.as_ref(), &results_to_string(rows))
}

/// The prior a model was trained with, minus the training-set majority vote.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredPrior {
    pub source: PriorSource,
    pub strength: f64,
    pub p: f64,
    pub force_abstain: bool,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl StoredPrior {
    pub fn from_spec(spec: &PriorSpec) -> Self {
        Self {
            source: spec.source,
            strength: spec.strength,
            p: spec.y_prior.p,
            force_abstain: spec.y_prior.force_abstain,
            u: spec.alpha_prior.u.clone(),
            v: spec.alpha_prior.v.clone(),
        }
    }

    pub fn alpha_prior(&self) -> Result<BetaPriors> {
        BetaPriors::new(self.u.clone(), self.v.clone())
    }
}

/// A fitted model as saved to disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub mode: String,
    pub params: ModelParams,
    pub prior: Option<StoredPrior>,
    /// Canonical training configuration, see [`TrainConfig::canonical`].
    pub config: String,
}

impl ModelFile {
    pub fn new(
        mode: impl ToString,
        fit: &FitResult,
        prior: Option<&PriorSpec>,
        config: &TrainConfig,
    ) -> Self {
        Self {
            mode: mode.to_string(),
            params: fit.params.clone(),
            prior: prior.map(StoredPrior::from_spec),
            config: config.canonical(),
        }
    }

    pub fn config_digest(&self) -> String {
        sha256_hex(&self.config)
    }

    /// Label prior for `matrix`: stored `p` and abstention policy, anchored on
    /// the majority vote of `matrix`.
    pub fn y_prior(&self, matrix: &LfMatrix) -> Result<YPrior> {
        match &self.prior {
            Some(s) => YPrior::new(s.p, majority_vote(matrix), s.force_abstain),
            None => Ok(YPrior::uninformative(matrix.n_rows())),
        }
    }

    pub fn predict(&self, matrix: &LfMatrix) -> Result<Vec<Prediction>> {
        predict(matrix, &self.params, &self.y_prior(matrix)?)
    }

    pub fn to_text(&self) -> String {
        let join = |xs: &[f64]| xs.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let mut out = format!("{MODEL_MAGIC} {MODEL_VERSION}\n");
        let _ = writeln!(out, "mode={}", self.mode);
        let _ = writeln!(out, "m={}", self.params.n_lfs());
        let _ = writeln!(out, "alpha={}", join(&self.params.alpha));
        let _ = writeln!(out, "beta={}", join(&self.params.beta));
        match &self.prior {
            None => out.push_str("prior=none\n"),
            Some(p) => {
                let _ = writeln!(out, "prior={}", p.source);
                let _ = writeln!(out, "prior.strength={}", p.strength);
                let _ = writeln!(out, "prior.p={}", p.p);
                let _ = writeln!(out, "prior.force_abstain={}", p.force_abstain);
                let _ = writeln!(out, "prior.u={}", join(&p.u));
                let _ = writeln!(out, "prior.v={}", join(&p.v));
            }
        }
        let _ = writeln!(out, "config={}", self.config);
        let _ = writeln!(out, "config_sha256={}", self.config_digest());
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |message: String| format_error(path, message);
        let mut lines = text.lines();
        let magic = format!("{MODEL_MAGIC} {MODEL_VERSION}");
        if lines.next() != Some(magic.as_str()) {
            return Err(err(format!("first line must be '{magic}'")));
        }
        let mut fields = std::collections::BTreeMap::new();
        for line in lines {
            let Some((k, v)) = line.split_once('=') else {
                return Err(err(format!("malformed line '{line}'")));
            };
            if fields.insert(k, v).is_some() {
                return Err(err(format!("duplicate key '{k}'")));
            }
        }
        let mut take = |key: &str| {
            fields
                .remove(key)
                .ok_or_else(|| err(format!("missing key '{key}'")))
        };
        let float = |key: &str, s: &str| {
            s.parse::<f64>()
                .map_err(|_| err(format!("{key}: invalid number '{s}'")))
        };
        let floats = |key: &str, s: &str, m: usize| -> Result<Vec<f64>> {
            let xs = s
                .split(',')
                .map(|x| float(key, x))
                .collect::<Result<Vec<_>>>()?;
            if xs.len() != m {
                return Err(err(format!(
                    "{key}: expected {m} values, found {}",
                    xs.len()
                )));
            }
            Ok(xs)
        };

        let mode = take("mode")?.to_string();
        let m_text = take("m")?;
        let m: usize = m_text
            .parse()
            .map_err(|_| err(format!("m: invalid count '{m_text}'")))?;
        let params = ModelParams::new(
            floats("alpha", take("alpha")?, m)?,
            floats("beta", take("beta")?, m)?,
        )?;
        let prior = match take("prior")? {
            "none" => None,
            source => Some(StoredPrior {
                source: source.parse().map_err(err)?,
                strength: float("prior.strength", take("prior.strength")?)?,
                p: float("prior.p", take("prior.p")?)?,
                force_abstain: match take("prior.force_abstain")? {
                    "true" => true,
                    "false" => false,
                    other => return Err(err(format!("prior.force_abstain: '{other}'"))),
                },
                u: floats("prior.u", take("prior.u")?, m)?,
                v: floats("prior.v", take("prior.v")?, m)?,
            }),
        };
        let config = take("config")?.to_string();
        let digest = take("config_sha256")?.to_string();
        if let Some(extra) = fields.keys().next() {
            return Err(err(format!("unknown key '{extra}'")));
        }
        let model = Self {
            mode,
            params,
            prior,
            config,
        };
        if model.config_digest() != digest {
            return Err(err("config_sha256 does not match config".to_string()));
        }
        if let Some(p) = &model.prior {
            p.alpha_prior()?;
            YPrior::new(p.p, LabelVector::zeros(0), p.force_abstain)?;
        }
        Ok(model)
    }
}

pub fn write_model(path: impl AsRef<Path>, model: &ModelFile) -> Result<()> {
    write_string(path.as_ref(), &model.to_text())
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    ModelFile::parse(&read_string(path)?, path)
}
