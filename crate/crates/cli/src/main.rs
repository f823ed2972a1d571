use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use maxhunt::classifiers::{accuracy, Classifier};
use maxhunt::data::format_f64;
use maxhunt::dcov::{dependence_curve, Estimator, Measure};
use maxhunt::harness::{
    emit_report, ranking_csv, run_experiment, validate_hyperparams, Choice, ExperimentConfig,
    HyperGrids, MethodConfig, WideTable,
};
use maxhunt::selectors::{self, t_scores, Method, MethodParams, SelectorSpec};
use maxhunt::simulation::{
    analytic_v2_curve, bayes_error, default_grid, registry, sample_model, AnalyticModel, ModelSpec,
    RngStream,
};
use maxhunt::{Error, FunctionalDataset};

#[derive(Parser)]
#[command(
    name = "maxhunt",
    version,
    about = "Maxima-hunting variable selection for functional data"
)]
struct Cli {
    /// Master seed (overrides the seed of an experiment config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for output files; results go to stdout when omitted.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a dataset CSV from a model.
    Simulate(SimulateArgs),
    /// Dependence curve of a dataset.
    Curve(CurveArgs),
    /// Run one selector on a dataset and print the selection as JSON.
    Select(SelectArgs),
    /// Train one pipeline and report its test accuracy.
    Classify(ClassifyArgs),
    /// Run a full study from a TOML config.
    Experiment(ExperimentArgs),
    /// Ranking scores from an aggregate accuracy CSV.
    Rank(RankArgs),
    /// Closed-form curves and Monte-Carlo Bayes errors.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Args)]
struct ModelArgs {
    /// Registry model name (see `maxhunt oracle models`).
    #[arg(
        long,
        conflicts_with = "model_file",
        required_unless_present = "model_file"
    )]
    model: Option<String>,
    /// TOML file holding a model description.
    #[arg(long)]
    model_file: Option<PathBuf>,
}

impl ModelArgs {
    fn resolve(&self) -> Result<ModelSpec, Failure> {
        match (&self.model, &self.model_file) {
            (Some(name), _) => Ok(registry::get(name)?),
            (None, Some(path)) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))
                    .map_err(Failure::Config)?;
                let spec: ModelSpec = toml::from_str(&text)
                    .with_context(|| format!("parsing {}", path.display()))
                    .map_err(Failure::Config)?;
                spec.validate()?;
                Ok(spec)
            }
            (None, None) => unreachable!("clap requires one of the two"),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Number of trajectories.
    #[arg(long)]
    n: usize,
    /// Random stream within the seed.
    #[arg(long, default_value_t = 0)]
    stream: u64,
}

#[derive(Args)]
struct CurveArgs {
    /// Dataset CSV.
    #[arg(long)]
    data: PathBuf,
    /// V2, R2 or T.
    #[arg(long, default_value = "V2")]
    measure: Measure,
    /// U, V or DC (V2 only; R2 always uses DC).
    #[arg(long, default_value = "U")]
    estimator: Estimator,
}

#[derive(Args, Clone)]
struct MethodArgs {
    /// MHV, MHR, T, FCD, FCQ, MID, MIQ, PLS or BASE.
    #[arg(long)]
    method: Method,
    /// Maxima-hunting window half-width.
    #[arg(long)]
    h: Option<usize>,
    /// Estimator behind the MHV curve.
    #[arg(long)]
    estimator: Option<Estimator>,
}

impl MethodArgs {
    fn params(&self) -> MethodParams {
        MethodParams {
            h: self.h,
            estimator: self.estimator,
            mi_spread: None,
        }
    }
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    method: MethodArgs,
    /// Number of variables or PLS components.
    #[arg(long, default_value_t = 5)]
    dim: usize,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Optional validation set; hyperparameters not given on the command line
    /// are then searched over the default grids.
    #[arg(long)]
    validation: Option<PathBuf>,
    #[command(flatten)]
    method: MethodArgs,
    /// KNN or LDA.
    #[arg(long, default_value = "KNN")]
    classifier: Classifier,
    /// Number of variables or PLS components.
    #[arg(long)]
    dim: Option<usize>,
    /// Neighbors for k-NN.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config (TOML); a written manifest.toml also works.
    config: PathBuf,
}

#[derive(Args)]
struct RankArgs {
    /// aggregate.csv written by `experiment`.
    aggregate: PathBuf,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Population V² curve on the default grid.
    Curve {
        /// stochastic or linear.
        #[arg(long)]
        trend: String,
        /// Slope of the linear trend.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
    },
    /// Monte-Carlo Bayes error of a model.
    BayesError {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
    },
    /// List registry model names.
    Models,
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidGrid(_) => {
                Failure::Config(e.into())
            }
            _ => Failure::Runtime(e.into()),
        }
    }
}

fn load_dataset(path: &Path) -> Result<FunctionalDataset, Failure> {
    FunctionalDataset::load(path).map_err(|e| Failure::Runtime(e.into()))
}

/// Writes `content` to `out_dir/name`, or to stdout without an out dir.
fn emit(out_dir: Option<&Path>, name: &str, content: &str) -> Result<(), Failure> {
    match out_dir {
        Some(dir) => {
            let path = dir.join(name);
            fs::create_dir_all(dir)
                .and_then(|_| fs::write(&path, content))
                .with_context(|| format!("writing {}", path.display()))
                .map_err(Failure::Runtime)?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            std::io::stdout()
                .write_all(content.as_bytes())
                .context("writing to stdout")
                .map_err(Failure::Runtime)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Failure::Config(anyhow::anyhow!(
                "--threads must be positive"
            )));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")
            .map_err(Failure::Runtime)?;
    }
    let seed = cli.seed.unwrap_or(0);
    let out_dir = cli.out_dir.as_deref();
    match cli.command {
        Command::Simulate(a) => {
            let model = a.model.resolve()?;
            let ds = sample_model(&model, a.n, &mut RngStream::new(seed, a.stream).rng())?;
            emit(out_dir, "dataset.csv", &ds.to_csv_string())
        }
        Command::Curve(a) => {
            let ds = load_dataset(&a.data)?;
            let curve = match a.measure {
                Measure::T => t_scores(&ds)?,
                m => dependence_curve(&ds, m, a.estimator)?,
            };
            emit(out_dir, "curve.csv", &curve.to_csv_string())
        }
        Command::Select(a) => {
            let ds = load_dataset(&a.data)?;
            let spec = SelectorSpec {
                method: a.method.method,
                target_dim: a.dim,
                params: a.method.params(),
            };
            let fitted = selectors::fit(&spec, &ds)?;
            let json = match &fitted.selection {
                Some(sel) => serde_json::to_string_pretty(sel),
                None => serde_json::to_string_pretty(&serde_json::json!({
                    "method": spec.method,
                    "components": fitted.n_features(),
                })),
            }
            .context("serializing the selection")
            .map_err(Failure::Runtime)?;
            emit(out_dir, "selection.json", &(json + "\n"))
        }
        Command::Classify(a) => classify(a, out_dir),
        Command::Experiment(a) => {
            let mut config = ExperimentConfig::load(&a.config).map_err(|e| match e {
                Error::Io { .. } => Failure::Config(e.into()),
                other => other.into(),
            })?;
            if let Some(s) = cli.seed {
                config.seed = s;
            }
            let report = run_experiment(&config)?;
            let dir = out_dir.map_or_else(|| PathBuf::from("maxhunt-report"), Path::to_path_buf);
            let files = emit_report(&report, &dir)?;
            let failures: usize = report.aggregates.iter().map(|a| a.failures).sum();
            for f in files {
                eprintln!("wrote {}", f.display());
            }
            if failures > 0 {
                eprintln!("{} method runs failed; see raw.csv", failures);
            }
            Ok(())
        }
        Command::Rank(a) => {
            let text = fs::read_to_string(&a.aggregate)
                .with_context(|| format!("reading {}", a.aggregate.display()))
                .map_err(Failure::Config)?;
            let table = WideTable::parse(&text)?;
            let (tables, skipped) = table.rankings()?;
            if skipped > 0 {
                eprintln!("skipped {} experiments with missing cells", skipped);
            }
            emit(
                out_dir,
                "ranking.csv",
                &ranking_csv(&table.selectors, &tables),
            )
        }
        Command::Oracle(OracleCommand::Curve { trend, c, p }) => {
            let model = match trend.to_ascii_lowercase().as_str() {
                "stochastic" => AnalyticModel::StochasticTrend,
                "linear" => AnalyticModel::LinearTrend { c },
                other => {
                    return Err(Failure::Config(anyhow::anyhow!(
                        "unknown trend '{}': use stochastic or linear",
                        other
                    )))
                }
            };
            let mut out = String::from("t,V2\n");
            for &t in default_grid().points() {
                let v = analytic_v2_curve(model, t, p)?;
                out.push_str(&format!("{},{}\n", format_f64(t), format_f64(v)));
            }
            emit(out_dir, "oracle_curve.csv", &out)
        }
        Command::Oracle(OracleCommand::BayesError { model, budget }) => {
            let spec = model.resolve()?;
            let est = bayes_error(&spec, budget, &mut RngStream::new(seed, 0).rng())?;
            let out = format!(
                "error,std_error,budget\n{},{},{}\n",
                format_f64(est.error),
                format_f64(est.std_error),
                est.budget
            );
            emit(out_dir, "bayes_error.csv", &out)
        }
        Command::Oracle(OracleCommand::Models) => emit(
            out_dir,
            "models.txt",
            &(registry::names().join("\n") + "\n"),
        ),
    }
}

fn classify(a: ClassifyArgs, out_dir: Option<&Path>) -> Result<(), Failure> {
    let train = load_dataset(&a.train)?;
    let test = load_dataset(&a.test)?;
    let method = MethodConfig {
        selector: a.method.method,
        classifier: a.classifier,
        params: a.method.params(),
    };
    method.validate()?;
    let is_mh = method.selector.is_maxima_hunting();
    let choice = match &a.validation {
        Some(path) => {
            let validation = load_dataset(path)?;
            let mut grids = HyperGrids::default();
            if let Some(d) = a.dim {
                grids.dims = vec![d];
                grids.pls_components = vec![d];
            }
            if let Some(k) = a.k {
                grids.k = vec![k];
            }
            validate_hyperparams(&method, &grids, &train, &validation)?.choice
        }
        None => Choice {
            dim: (method.selector != Method::BASE).then_some(a.dim.unwrap_or(3)),
            h: is_mh.then_some(a.method.h.unwrap_or(selectors::DEFAULT_H)),
            k: (method.classifier == Classifier::KNN).then_some(a.k.unwrap_or(5)),
        },
    };
    let pipeline = maxhunt::harness::TrainedPipeline::fit(&method, choice, &train)?;
    let acc = accuracy(&pipeline.predict(&test)?, test.labels())?;
    let show = |v: Option<usize>| v.map_or_else(|| "-".to_string(), |v| v.to_string());
    let out = format!(
        "selector,classifier,accuracy,variables,dim,h,k\n{},{},{},{},{},{},{}\n",
        method.selector,
        method.classifier,
        format_f64(acc),
        pipeline.n_features(),
        show(choice.dim),
        show(choice.h),
        show(choice.k)
    );
    emit(out_dir, "classify.csv", &out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {:#}", e);
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(2)
        }
    }
}
