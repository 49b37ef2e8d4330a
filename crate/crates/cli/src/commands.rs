use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fourier_classifier::dataset::{self, SpiralConfig};
use fourier_classifier::inference::{evaluate, predict};
use fourier_classifier::trainer::{train, MIN_ITERATION_CAP};
use fourier_classifier::{ClassifierModel, Dataset, EvalReport, GridSpec, TrainConfig};
use serde::Serialize;
use thiserror::Error;

use crate::{heatmap, model_file};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<fourier_classifier::Error> for CliError {
    fn from(e: fourier_classifier::Error) -> Self {
        use fourier_classifier::Error as E;
        match e {
            E::InvalidMesh(_) | E::InvalidArgument(_) | E::NoiseArity { .. } | E::UnknownLabel(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<model_file::ModelFileError> for CliError {
    fn from(e: model_file::ModelFileError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "fcd", version, about = "Fourier-smoothed density classifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write an interleaved-spiral benchmark dataset as CSV
    Generate(GenerateArgs),
    /// Train a model from a labeled CSV
    Train(TrainArgs),
    /// Predict labels and class probabilities for a CSV of points
    Predict(PredictArgs),
    /// Report confusion matrix and recall on a labeled CSV
    Evaluate(EvaluateArgs),
    /// Render a probability field (PGM) or the decision map (PPM)
    Render(RenderArgs),
}

fn parse_sigma(t: &str) -> Result<f64, String> {
    let v: f64 = t.trim().parse().map_err(|_| format!("not a number: {t:?}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("noise sigma must be finite and >= 0: {t:?}"))
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 400)]
    pub per_class: usize,
    /// Comma-separated noise standard deviation per class
    #[arg(long, value_parser = parse_sigma, value_delimiter = ',', default_value = "0.01,0.015,0.02")]
    pub noise: Vec<f64>,
    #[arg(long, default_value_t = 1.75)]
    pub turns: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// The input CSV has no header row
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 512)]
    pub mesh: usize,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    /// Iteration cap for the bandwidth search [default: max(mesh/8, 4)]
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Hold out this share of each class and report recall on it
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long, default_value_t = 42)]
    pub split_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub input: InputArgs,
    /// Output CSV path [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub input: InputArgs,
    /// Print the report as JSON instead of text
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RenderWhat {
    Prob,
    Decision,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum)]
    pub what: RenderWhat,
    /// Class index for --what prob
    #[arg(long)]
    pub class: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Generate(a) => cmd_generate(a, out),
        Command::Train(a) => cmd_train(a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Render(a) => cmd_render(a, out),
    }
}

fn create(path: &PathBuf) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))
}

pub fn cmd_generate(args: GenerateArgs, out: &mut dyn Write) -> CliResult {
    if args.noise.len() != args.classes {
        return Err(CliError::Usage(format!(
            "--noise has {} entries but --classes is {}",
            args.noise.len(),
            args.classes
        )));
    }
    let data = dataset::generate_spirals(&SpiralConfig {
        n_classes: args.classes,
        n_per_class: args.per_class,
        noise_sigmas: args.noise,
        turns: args.turns,
        seed: args.seed,
    })
    .map_err(|e| match e {
        fourier_classifier::Error::TooFewClasses(_) => CliError::Usage(e.to_string()),
        other => other.into(),
    })?;
    dataset::write_csv(&data, create(&args.out)?)?;
    writeln!(out, "wrote {} points to {}", data.len(), args.out.display())?;
    Ok(())
}

fn train_config(args: &TrainArgs) -> CliResult<TrainConfig> {
    GridSpec::new(args.mesh)?;
    let mut cfg = TrainConfig::for_mesh(args.mesh);
    cfg.epsilon = args.epsilon;
    if let Some(n) = args.nmax {
        if n < MIN_ITERATION_CAP {
            return Err(CliError::Usage(format!("--nmax must be at least {MIN_ITERATION_CAP}")));
        }
        cfg.n_max = n;
    }
    if let Some(f) = args.test_fraction {
        cfg.test_fraction = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_training(model: &ClassifierModel, out: &mut dyn Write) -> CliResult {
    if let Some(summary) = model.training() {
        for trace in &summary.traces {
            let status = if trace.converged { "converged" } else { "hit n_max" };
            writeln!(out, "class {}: n_k = {} ({status})", trace.label, trace.n_k)?;
            writeln!(out, "  {:>4} {:>20} {:>22}", "n", "corr(n, n-1)", "d2(n)")?;
            for &(n, c) in &trace.correlations {
                match trace.second_derivative_at(n) {
                    Some(d) => writeln!(out, "  {n:>4} {c:>20.15} {d:>22.15e}")?,
                    None => writeln!(out, "  {n:>4} {c:>20.15} {:>22}", "-")?,
                }
            }
        }
    }
    writeln!(out, "n_final = {}", model.n_final())?;
    Ok(())
}

pub fn cmd_train(args: TrainArgs, out: &mut dyn Write) -> CliResult {
    let cfg = train_config(&args)?;
    let data = dataset::load_csv(&args.input.input, !args.input.no_header)?;
    let (train_set, held_out) = match args.test_fraction {
        Some(f) => {
            let (a, b) = dataset::split(&data, f, args.split_seed)?;
            (a, Some(b))
        }
        None => (data, None),
    };
    let model = train(&train_set, &cfg)?;
    model_file::save(&model, &args.out)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", args.out.display())))?;
    print_training(&model, out)?;
    if let Some(test) = held_out {
        let tr = evaluate(&model, &train_set)?;
        let te = evaluate(&model, &test)?;
        writeln!(out, "train macro recall = {:.4} ({} points)", tr.macro_recall, tr.n_points)?;
        writeln!(out, "test macro recall = {:.4} ({} points)", te.macro_recall, te.n_points)?;
    }
    writeln!(out, "model written to {}", args.out.display())?;
    Ok(())
}

pub fn cmd_predict(args: PredictArgs, out: &mut dyn Write) -> CliResult {
    let model = model_file::load(&args.model)?;
    let points = dataset::load_unlabeled_csv(&args.input.input, !args.input.no_header)?;
    let mut sink: Box<dyn Write + '_> = match &args.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(&mut *out),
    };
    write!(sink, "x1,x2,predicted_label")?;
    for l in model.labels() {
        write!(sink, ",p_{l}")?;
    }
    writeln!(sink)?;
    for &(x1, x2) in &points {
        let p = predict(&model, x1, x2)?;
        write!(sink, "{x1},{x2},{}", p.label)?;
        for v in &p.probabilities {
            write!(sink, ",{v}")?;
        }
        writeln!(sink)?;
    }
    sink.flush()?;
    drop(sink);
    if let Some(p) = &args.out {
        writeln!(out, "wrote {} predictions to {}", points.len(), p.display())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct JsonReport<'a> {
    labels: &'a [String],
    confusion: &'a [Vec<usize>],
    per_class_recall: &'a [Option<f64>],
    macro_recall: f64,
    accuracy: f64,
    n_points: usize,
}

pub fn report_json(r: &EvalReport) -> String {
    serde_json::to_string_pretty(&JsonReport {
        labels: &r.labels,
        confusion: &r.confusion,
        per_class_recall: &r.per_class_recall,
        macro_recall: r.macro_recall,
        accuracy: r.accuracy,
        n_points: r.n_points,
    })
    .expect("report serializes")
}

pub fn cmd_evaluate(args: EvaluateArgs, out: &mut dyn Write) -> CliResult {
    let model = model_file::load(&args.model)?;
    let points = dataset::load_labeled_points(&args.input.input, !args.input.no_header)?;
    // Judged against the model's vocabulary, so single-class files are fine.
    let data = Dataset::with_labels(points, model.labels().to_vec())?;
    let report = evaluate(&model, &data)?;
    if args.json {
        writeln!(out, "{}", report_json(&report))?;
    } else {
        writeln!(out, "{report}")?;
    }
    Ok(())
}

pub fn cmd_render(args: RenderArgs, out: &mut dyn Write) -> CliResult {
    let model = model_file::load(&args.model)?;
    match args.what {
        RenderWhat::Prob => {
            let class = args
                .class
                .ok_or_else(|| CliError::Usage("--what prob requires --class".into()))?;
            if class >= model.n_classes() {
                return Err(CliError::Usage(format!(
                    "--class {class} out of range (model has {} classes)",
                    model.n_classes()
                )));
            }
            heatmap::write_probability_pgm(&model, class, create(&args.out)?)?;
        }
        RenderWhat::Decision => heatmap::write_decision_ppm(&model, create(&args.out)?)?,
    }
    let n = model.grid().n_mesh();
    writeln!(out, "wrote {n}x{n} image to {}", args.out.display())?;
    Ok(())
}
