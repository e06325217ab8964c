//! Command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::evaluation::{format_percent, score, MetricsReport, METRIC_NAMES};
use crate::experiments::{
    generate_synthetic, grid_search, holdout_indices, low_data_sweep, prior_quality_study, split,
    stability_sweep, train_mode, GridSpec, LabeledDataset, LowDataSpec, Mode, ModelSettings,
    ResultRow, SplitSpec, SyntheticSpec,
};
use crate::inference::majority_vote_predictions;
use crate::io::{self, ModelFile};
use crate::model::{LabelVector, LfMatrix};
use crate::priors::{
    accuracies_vs_reference, build_empirical_priors, build_mv_priors, build_random_priors,
    PriorSpec,
};
use crate::training::{fit, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "labelforge",
    version,
    about = "Denoise labeling-function votes with MAP data programming"
)]
pub struct Cli {
    /// Seed for splits, priors and training.
    #[arg(long, global = true, env = "LABELFORGE_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Name of the ground-truth column in dataset files.
    #[arg(long, global = true, default_value = io::DEFAULT_TRUTH_COLUMN)]
    pub truth_col: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a label model and save it.
    Train(TrainArgs),
    /// Label a dataset with a saved model.
    Predict(PredictArgs),
    /// Score predictions against ground truth.
    Evaluate(EvaluateArgs),
    /// Select hyperparameters by validation wins.
    Gridsearch(GridArgs),
    /// Metrics as a function of training-set size.
    Lowdata(LowDataArgs),
    /// Metrics as a function of the epoch budget.
    Stability(StabilityArgs),
    /// Sample a dataset from the generative model.
    Synth(SynthArgs),
    /// Distances of priors and fits from the empirical LF accuracies.
    PriorsStudy(StudyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrainMode {
    Mle,
    MapMv,
    MapEmp,
    MapRand,
    MapUser,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentMode {
    Mle,
    MapMv,
    MapEmp,
    MapRand,
    Mv,
}

impl From<ExperimentMode> for Mode {
    fn from(m: ExperimentMode) -> Self {
        match m {
            ExperimentMode::Mle => Mode::Mle,
            ExperimentMode::MapMv => Mode::MapMv,
            ExperimentMode::MapEmp => Mode::MapEmpirical,
            ExperimentMode::MapRand => Mode::MapRandom,
            ExperimentMode::Mv => Mode::Mv,
        }
    }
}

/// Prior and optimizer settings shared by every fitting command.
#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Beta prior strength u + v.
    #[arg(long, default_value_t = 10.0)]
    pub strength: f64,
    /// Label prior weight on the majority-vote class, in [0.5, 1].
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Abstain wherever the majority vote abstains.
    #[arg(long)]
    pub force_abstain: bool,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    /// Minibatch size; full batch when omitted.
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    #[arg(long, default_value_t = 0.9)]
    pub alpha_init: f64,
    /// Learn coverages too, under a beta prior centred on the observed coverage.
    #[arg(long)]
    pub learn_beta: bool,
}

impl FitArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr,
            max_epochs: self.epochs,
            batch_size: self.batch,
            patience: self.patience,
            alpha_init: self.alpha_init,
            seed,
            learn_beta: self.learn_beta,
            ..TrainConfig::default()
        }
    }

    fn settings(&self, seed: u64) -> ModelSettings {
        ModelSettings {
            strength: self.strength,
            p: self.p,
            force_abstain: self.force_abstain,
            train: self.config(seed),
        }
    }
}

/// Train/validation/test split of a labeled dataset.
#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    #[arg(long, default_value_t = 0.8)]
    pub train_frac: f64,
    /// Share of the training rows held out for early stopping.
    #[arg(long, default_value_t = 0.1)]
    pub val_frac: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Share of rows held out for early stopping; 0 disables it.
    #[arg(long, default_value_t = 0.1)]
    pub val_frac: f64,
    #[arg(long, value_enum, default_value = "map-mv")]
    pub mode: TrainMode,
    /// Per-LF beta shape u for map-user (one value broadcasts).
    #[arg(long, value_delimiter = ',')]
    pub prior_u: Vec<f64>,
    /// Per-LF beta shape v for map-user (one value broadcasts).
    #[arg(long, value_delimiter = ',')]
    pub prior_v: Vec<f64>,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predictions file to score.
    #[arg(long, conflicts_with_all = ["model", "mode"])]
    pub pred: Option<PathBuf>,
    /// Model to run on --data.
    #[arg(long, requires = "data")]
    pub model: Option<PathBuf>,
    /// Majority-vote baseline on --data.
    #[arg(long, value_enum, conflicts_with = "model", requires = "data")]
    pub mode: Option<BaselineMode>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Dataset holding the ground truth; defaults to --data.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Also write the metrics record here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineMode {
    Mv,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// TOML file with candidate lists; the built-in grid when omitted.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "map-mv")]
    pub mode: ExperimentMode,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Results table; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LowDataArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1,5,10,50,100,500,1000,2000"
    )]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub replicates: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mle,map-mv")]
    pub modes: Vec<ExperimentMode>,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0,1,5,10,25,50,100,200")]
    pub epoch_grid: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mle,map-mv")]
    pub modes: Vec<ExperimentMode>,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of LFs; inferred from --alpha when omitted.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: usize,
    /// Per-LF accuracies (one value broadcasts to all LFs).
    #[arg(long, value_delimiter = ',', required = true)]
    pub alpha: Vec<f64>,
    /// Per-LF coverages (one value broadcasts to all LFs).
    #[arg(long, value_delimiter = ',', required = true)]
    pub beta: Vec<f64>,
    /// Probability of the positive class.
    #[arg(long, default_value_t = 0.5)]
    pub balance: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(message: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(message.into()))
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else if matches!(e, Error::InvalidParameter { .. }) {
        EXIT_USAGE
    } else {
        EXIT_DATA
    }
}

/// Parse `args` (program name first) and run the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            EXIT_USAGE
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn reproducibility_line(seed: u64, digest: &str) {
    eprintln!(
        "labelforge {} seed={seed} config_sha256={digest}",
        env!("CARGO_PKG_VERSION")
    );
}

fn execute(cli: &Cli) -> CliResult<()> {
    let digest = io::sha256_hex(&format!("{:?}", cli));
    match &cli.command {
        Command::Train(a) => train(cli, a),
        command => {
            reproducibility_line(cli.seed, &digest);
            match command {
                Command::Train(_) => unreachable!(),
                Command::Predict(a) => predict(cli, a),
                Command::Evaluate(a) => evaluate(cli, a),
                Command::Gridsearch(a) => gridsearch(cli, a),
                Command::Lowdata(a) => lowdata(cli, a),
                Command::Stability(a) => stability(cli, a),
                Command::Synth(a) => synth(cli, a),
                Command::PriorsStudy(a) => priors_study(cli, a),
            }
        }
    }
}

fn broadcast(name: &str, values: &[f64], m: usize) -> CliResult<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; m]),
        k if k == m => Ok(values.to_vec()),
        k => usage(format!("--{name} has {k} values, expected 1 or {m}")),
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e).into()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_labeled(cli: &Cli, path: &Path) -> CliResult<LabeledDataset> {
    let d = io::read_dataset_with(path, &cli.truth_col)?;
    let truth = d.truth.ok_or(Error::MissingTruth("this command"))?;
    Ok(LabeledDataset::new(d.matrix, truth)?)
}

fn split_labeled(
    cli: &Cli,
    args: &SplitArgs,
    path: &Path,
) -> CliResult<(LabeledDataset, LabeledDataset, LabeledDataset)> {
    let data = read_labeled(cli, path)?;
    let spec = SplitSpec {
        train_frac: args.train_frac,
        val_frac_of_train: args.val_frac,
        seed: cli.seed,
    };
    Ok(split(&data, &spec)?)
}

fn train(cli: &Cli, a: &TrainArgs) -> CliResult<()> {
    let config = a.fit.config(cli.seed);
    let model_digest = io::sha256_hex(&config.canonical());
    reproducibility_line(cli.seed, &model_digest);

    let d = io::read_dataset_with(&a.data, &cli.truth_col)?;
    let (fit_rows, val_rows) = if a.val_frac > 0.0 {
        let (f, v) = holdout_indices(d.matrix.n_rows(), a.val_frac, cli.seed)?;
        (f, Some(v))
    } else {
        ((0..d.matrix.n_rows()).collect(), None)
    };
    let train_m = d.matrix.select_rows(&fit_rows)?;
    let val_m = val_rows
        .as_ref()
        .map(|v| d.matrix.select_rows(v))
        .transpose()?;
    let m = train_m.n_lfs();
    let FitArgs {
        strength,
        p,
        force_abstain,
        ..
    } = a.fit;

    let prior: Option<PriorSpec> = match a.mode {
        TrainMode::Mle => None,
        TrainMode::MapMv => Some(build_mv_priors(&train_m, strength, p, force_abstain)?),
        TrainMode::MapEmp => {
            let truth = d
                .truth
                .as_ref()
                .ok_or(Error::MissingTruth("--mode map-emp"))?
                .select(&fit_rows);
            Some(build_empirical_priors(
                &train_m,
                &truth,
                strength,
                p,
                force_abstain,
            )?)
        }
        TrainMode::MapRand => Some(build_random_priors(
            &train_m,
            strength,
            p,
            force_abstain,
            cli.seed,
        )?),
        TrainMode::MapUser => {
            if a.prior_u.is_empty() || a.prior_v.is_empty() {
                return usage("--mode map-user needs --prior-u and --prior-v");
            }
            let u = broadcast("prior-u", &a.prior_u, m)?;
            let v = broadcast("prior-v", &a.prior_v, m)?;
            Some(PriorSpec::user(&train_m, u, v, p, force_abstain)?)
        }
    };
    let result = fit(&train_m, val_m.as_ref(), prior.as_ref(), &config)?;
    let mode = a.mode.to_possible_value().expect("no skipped variants");
    let model = ModelFile::new(mode.get_name(), &result, prior.as_ref(), &config);
    io::write_model(&a.out, &model)?;

    let alpha: Vec<String> = result
        .params
        .alpha
        .iter()
        .map(|x| format!("{x:.4}"))
        .collect();
    println!(
        "mode={} n_train={} n_val={} best_epoch={} stopped_epoch={} alpha={}",
        model.mode,
        train_m.n_rows(),
        val_m.as_ref().map_or(0, LfMatrix::n_rows),
        result.best_epoch,
        result.stopped_epoch,
        alpha.join(",")
    );
    Ok(())
}

fn predict(cli: &Cli, a: &PredictArgs) -> CliResult<()> {
    let model = io::read_model(&a.model)?;
    let d = io::read_dataset_with(&a.data, &cli.truth_col)?;
    let predictions = model.predict(&d.matrix)?;
    io::write_predictions(&a.out, &predictions)?;
    println!(
        "n={} coverage={}",
        predictions.len(),
        crate::inference::coverage(&predictions)
    );
    Ok(())
}

fn report_text(report: &MetricsReport) -> String {
    let mut out = report.to_record();
    for name in ["f1", "accuracy", "precision", "recall", "auc_roc"] {
        let _ = writeln!(out, "{name}_pct={}", format_percent(report.get(name)));
    }
    out
}

fn evaluate(cli: &Cli, a: &EvaluateArgs) -> CliResult<()> {
    let truth_path = match (&a.truth, &a.data) {
        (Some(t), _) | (None, Some(t)) => t,
        (None, None) => return usage("--truth is required with --pred"),
    };
    let truth: LabelVector = io::read_truth(truth_path, &cli.truth_col)?;
    let predictions = if let Some(pred) = &a.pred {
        io::read_predictions(pred)?
    } else {
        let Some(data) = &a.data else {
            return usage("one of --pred, --model or --mode is required");
        };
        let d = io::read_dataset_with(data, &cli.truth_col)?;
        match (&a.model, a.mode) {
            (Some(model), _) => io::read_model(model)?.predict(&d.matrix)?,
            (None, Some(BaselineMode::Mv)) => majority_vote_predictions(&d.matrix),
            (None, None) => return usage("one of --pred, --model or --mode is required"),
        }
    };
    let text = report_text(&score(&predictions, &truth)?);
    if let Some(out) = &a.out {
        write_or_print(Some(out), &text)?;
    }
    print!("{text}");
    Ok(())
}

fn metric_rows(
    experiment: &str,
    mode: Mode,
    size: usize,
    replicate: impl ToString,
    report: Option<&MetricsReport>,
) -> Vec<ResultRow> {
    let replicate = replicate.to_string();
    METRIC_NAMES
        .iter()
        .map(|m| {
            ResultRow::new(
                experiment,
                mode,
                size,
                &replicate,
                m,
                report.and_then(|r| r.get(m)),
            )
        })
        .collect()
}

fn gridsearch(cli: &Cli, a: &GridArgs) -> CliResult<()> {
    let grid: GridSpec = match &a.grid {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            toml::from_str(&text).map_err(|e| Error::Format {
                path: path.clone(),
                message: e.to_string(),
            })?
        }
        None => GridSpec::default(),
    };
    let mode = Mode::from(a.mode);
    if grid.cells(mode).is_empty() {
        return usage("grid has no cells for this mode");
    }
    let (train, val, test) = split_labeled(cli, &a.split, &a.data)?;
    let base = a.fit.config(cli.seed);
    let outcome = grid_search(&train, &val, &grid, mode, &base)?;

    let mut rows = Vec::new();
    for c in &outcome.cells {
        rows.extend(metric_rows(
            "gridsearch",
            mode,
            train.len(),
            c.cell.index,
            c.report.as_ref().ok(),
        ));
        if let Err(e) = &c.report {
            log::warn!("grid cell {} failed: {e}", c.cell.index);
        }
    }
    let best = outcome.best_cell();
    let settings = best.cell.settings(&base);
    let model = train_mode(mode, &train, Some(&val), &settings)?;
    let test_report = model.evaluate(&test)?;
    rows.extend(metric_rows(
        "gridsearch-test",
        mode,
        test.len(),
        best.cell.index,
        Some(&test_report),
    ));
    write_or_print(a.out.as_deref(), &io::results_to_string(&rows))?;

    let c = &best.cell;
    eprintln!(
        "best cell {}: strength={} lr={} alpha_init={} p={} force_abstain={} wins={} test_f1={}",
        c.index,
        c.strength,
        c.learning_rate,
        c.alpha_init,
        c.p,
        c.force_abstain,
        best.wins,
        format_percent(test_report.f1)
    );
    Ok(())
}

fn lowdata(cli: &Cli, a: &LowDataArgs) -> CliResult<()> {
    let (train, val, test) = split_labeled(cli, &a.split, &a.data)?;
    let spec = LowDataSpec {
        sizes: a.sizes.clone(),
        replicates: a.replicates,
        modes: a.modes.iter().map(|&m| m.into()).collect(),
        settings: a.fit.settings(cli.seed),
        seed: cli.seed,
    };
    let cells = low_data_sweep(&train, &val, &test, &spec)?;
    let rows: Vec<ResultRow> = cells.iter().flat_map(|c| c.rows()).collect();
    write_or_print(a.out.as_deref(), &io::results_to_string(&rows))
}

fn stability(cli: &Cli, a: &StabilityArgs) -> CliResult<()> {
    let (train, _val, test) = split_labeled(cli, &a.split, &a.data)?;
    let modes: Vec<Mode> = a.modes.iter().map(|&m| m.into()).collect();
    let points = stability_sweep(
        &train,
        &test,
        &a.epoch_grid,
        &modes,
        &a.fit.settings(cli.seed),
    )?;
    let rows: Vec<ResultRow> = points.iter().flat_map(|p| p.rows()).collect();
    write_or_print(a.out.as_deref(), &io::results_to_string(&rows))
}

fn synth(cli: &Cli, a: &SynthArgs) -> CliResult<()> {
    let m = a.m.unwrap_or(a.alpha.len().max(a.beta.len()));
    if m == 0 {
        return usage("--m must be positive");
    }
    let spec = SyntheticSpec {
        n: a.n,
        alpha: broadcast("alpha", &a.alpha, m)?,
        beta: broadcast("beta", &a.beta, m)?,
        class_balance: a.balance,
        seed: cli.seed,
    };
    let data = generate_synthetic(&spec)?;
    io::write_dataset(&a.out, &data.matrix, Some(&data.truth))?;
    Ok(())
}

fn priors_study(cli: &Cli, a: &StudyArgs) -> CliResult<()> {
    let (train, val, _test) = split_labeled(cli, &a.split, &a.data)?;
    let rows = prior_quality_study(&train, Some(&val), &a.fit.settings(cli.seed))?;
    let alpha_star = accuracies_vs_reference(&train.matrix, &train.truth)?;
    let join = |xs: &[f64]| {
        xs.iter()
            .map(|x| format!("{x:.4}"))
            .collect::<Vec<_>>()
            .join(";")
    };
    let mut out = String::from("mode,prior_distance,fit_distance,alpha\n");
    let _ = writeln!(out, "empirical,NA,NA,{}", join(&alpha_star));
    for r in &rows {
        let prior = r
            .prior_distance
            .map_or_else(|| "NA".to_string(), |d| format!("{d:.3}"));
        let _ = writeln!(
            out,
            "{},{prior},{:.3},{}",
            r.mode,
            r.fit_distance,
            join(&r.alpha_hat)
        );
    }
    write_or_print(a.out.as_deref(), &out)
}
