//! `uanet` command line. Diagnostics go to stderr; reports go to files, and
//! predictions to stdout unless `--out` is given.
//!
//! Exit codes: 0 success, 1 usage, 2 data, 3 model construction.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use uanet::absorption::{
    absorb_loop, AbsorbError, AbsorptionConfig, ModelBuilder, SqannBuilder, TnnBuilder,
};
use uanet::activations::DsaParams;
use uanet::data::{fit_min_max, fit_standardize, DataError, InputScaling};
use uanet::io::{load_csv, load_model, save_model, Column, IoError, Model};
use uanet::sqann::{build_sqann, BuildError, Provenance, SqannConfig, SqannError};
use uanet::tnn::{fit_tnn, DummyDeltaRule, NeuronState, TnnError, DEFAULT_SHARPNESS};
use uanet::{Dataset, Sample};

use crate::experiments::{run_experiment, ExperimentError, ExperimentSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_CONSTRUCTION: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Construction(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Construction(_) => EXIT_CONSTRUCTION,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Construction(m) => m,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SqannError> for CliError {
    fn from(e: SqannError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<BuildError> for CliError {
    fn from(e: BuildError) -> Self {
        match e {
            BuildError::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Construction(e.to_string()),
        }
    }
}

impl From<TnnError> for CliError {
    fn from(e: TnnError) -> Self {
        match e {
            TnnError::Data(_) | TnnError::DegenerateGap { .. } => CliError::Data(e.to_string()),
            TnnError::Sharpness(_) | TnnError::InvalidTolerance { .. } => {
                CliError::Usage(e.to_string())
            }
        }
    }
}

impl From<AbsorbError> for CliError {
    fn from(e: AbsorbError) -> Self {
        match e {
            AbsorbError::Epsilon(_) | AbsorbError::ZeroRounds => CliError::Usage(e.to_string()),
            AbsorbError::Build(b) => b.into(),
            AbsorbError::Tnn(t) => t.into(),
            AbsorbError::Data(_) | AbsorbError::Predict(_) | AbsorbError::NotScalar(_) => {
                CliError::Data(e.to_string())
            }
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Spec(_) => CliError::Usage(e.to_string()),
            _ if e.is_construction() => CliError::Construction(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "uanet",
    version,
    about = "Fit, query and extend TNN and SQANN models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a model from a CSV file and save it as JSON.
    Fit(FitArgs),
    /// Evaluate a saved model.
    Predict(PredictArgs),
    /// Show which neurons and fitting samples produce a prediction.
    Explain(ExplainArgs),
    /// Extend a model with the external samples it gets wrong.
    Absorb(AbsorbArgs),
    /// Run a JSON experiment spec.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    Tnn,
    Sqann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleChoice {
    None,
    MinMax,
    Standardize,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with one sample per row.
    #[arg(long)]
    pub data: PathBuf,
    /// Target column: 0-based index, header name or `last`.
    #[arg(long, default_value = "last")]
    pub target_col: Column,
    /// The first row holds column names.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long, value_enum, default_value = "sqann")]
    pub model: ModelChoice,
    /// TNN sharpness.
    #[arg(long, default_value_t = DEFAULT_SHARPNESS)]
    pub a: f64,
    #[arg(long, default_value_t = 0.1)]
    pub tau_ad: f64,
    #[arg(long, default_value_t = 0.9)]
    pub tau_act: f64,
    #[arg(long, default_value_t = DsaParams::default().a1)]
    pub a1: f64,
    #[arg(long, default_value_t = DsaParams::default().a2)]
    pub a2: f64,
    #[arg(long, default_value_t = DsaParams::default().r)]
    pub r: f64,
    /// SQANN step budget; defaults to 50 n².
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Input scaling fitted on the fitting data and stored with the model.
    #[arg(long, value_enum, default_value = "none")]
    pub scale: ScaleChoice,
}

impl BuildArgs {
    fn sqann_config(&self) -> SqannConfig {
        SqannConfig {
            dsa: DsaParams {
                a1: self.a1,
                a2: self.a2,
                r: self.r,
            },
            tau_ad: self.tau_ad,
            tau_act: self.tau_act,
            max_construction_steps: self.max_steps,
            ..Default::default()
        }
    }

    fn scaling(&self, d: &Dataset) -> Option<InputScaling> {
        match self.scale {
            ScaleChoice::None => None,
            ScaleChoice::MinMax => Some(InputScaling::MinMax(fit_min_max(d))),
            ScaleChoice::Standardize => Some(InputScaling::Standardize(fit_standardize(d))),
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub build: BuildArgs,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the SQANN construction event log here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["input", "data"]))]
pub struct PredictArgs {
    #[arg(long)]
    pub model_file: PathBuf,
    /// Comma-separated input vector; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    pub input: Vec<String>,
    /// CSV of inputs; with `--target-col` the named column is the target and
    /// an error column is added.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub target_col: Option<Column>,
    #[arg(long)]
    pub header: bool,
    /// Write predictions here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model_file: PathBuf,
    /// Comma-separated input vector.
    #[arg(long, allow_hyphen_values = true)]
    pub input: String,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("base").required(true).args(["model_file", "data"]))]
pub struct AbsorbArgs {
    /// Start from a saved model and its stored fitting data.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    /// Start from a CSV fitting set built with the model flags below.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// External CSV, same column layout as the fitting data.
    #[arg(long)]
    pub external: PathBuf,
    #[arg(long, default_value = "last")]
    pub target_col: Column,
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 10)]
    pub max_rounds: usize,
    /// Per-round CSV report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write the extended model here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Answer with the original model where it responds more strongly.
    #[arg(long)]
    pub keep_original: bool,
    #[command(flatten)]
    pub build: BuildArgs,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Overrides the spec's output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

pub fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Fit(a) => fit(&a),
        Command::Predict(a) => predict(&a),
        Command::Explain(a) => explain(&a),
        Command::Absorb(a) => absorb(&a),
        Command::Experiment(a) => experiment(&a),
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn parse_vector(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|v| {
            v.trim().parse::<f64>().map_err(|_| {
                CliError::Usage(format!("cannot parse input component {v:?} in {s:?}"))
            })
        })
        .collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn scaled(scaling: &Option<InputScaling>, d: &Dataset) -> Result<Dataset, DataError> {
    match scaling {
        Some(s) => s.apply_dataset(d),
        None => Ok(d.clone()),
    }
}

fn build_model(b: &BuildArgs, d: &Dataset) -> Result<(Model, Option<String>), CliError> {
    Ok(match b.model {
        ModelChoice::Tnn => (
            Model::Tnn(fit_tnn(d, b.a, DummyDeltaRule::default())?),
            None,
        ),
        ModelChoice::Sqann => {
            let (m, trace) = build_sqann(d, &b.sqann_config())?;
            (Model::Sqann(m), Some(trace.to_event_log()))
        }
    })
}

fn fit(args: &FitArgs) -> Result<(), CliError> {
    let raw = load_csv(
        &args.data.data,
        std::slice::from_ref(&args.data.target_col),
        args.data.header,
    )?;
    let scaling = args.build.scaling(&raw);
    let data = scaled(&scaling, &raw)?;
    let (model, log) = build_model(&args.build, &data)?;
    save_model(&model, scaling, &args.out)?;
    if let (Some(path), Some(log)) = (&args.trace, log) {
        write_file(path, &log)?;
    }
    match &model {
        Model::Tnn(m) => eprintln!(
            "fitted tnn: {} samples, a={}, fitting error bound {:e}",
            m.len(),
            m.a,
            m.error_bound()
        ),
        Model::Sqann(m) => eprintln!(
            "fitted sqann: {} samples, {} layers, sizes {:?}",
            m.fitting.len(),
            m.layers.len(),
            m.layers.iter().map(|l| l.len()).collect::<Vec<_>>()
        ),
    }
    Ok(())
}

struct Answer {
    y: Vec<f64>,
    interpolated: bool,
}

fn answer(model: &Model, scaling: &Option<InputScaling>, x: &[f64]) -> Result<Answer, CliError> {
    let x = match scaling {
        Some(s) => s.apply(x)?,
        None => x.to_vec(),
    };
    match model {
        Model::Tnn(m) => {
            if x.len() != 1 {
                return Err(CliError::Data(format!(
                    "TNN takes scalar inputs, got {} components",
                    x.len()
                )));
            }
            Ok(Answer {
                y: m.predict(x[0]),
                interpolated: false,
            })
        }
        Model::Sqann(m) => {
            let out = m.predict(&x)?;
            Ok(Answer {
                interpolated: out.is_interpolated(),
                y: out.y,
            })
        }
    }
}

fn predict(args: &PredictArgs) -> Result<(), CliError> {
    let (model, file) = load_model(&args.model_file)?;
    let mut out = String::new();
    if let Some(path) = &args.data {
        let rows: Vec<(Vec<f64>, Option<Vec<f64>>)> = match &args.target_col {
            Some(col) => load_csv(path, std::slice::from_ref(col), args.header)?
                .into_samples()
                .into_iter()
                .map(|s| (s.x, Some(s.y)))
                .collect(),
            None => read_inputs(path, args.header)?
                .into_iter()
                .map(|x| (x, None))
                .collect(),
        };
        out.push_str("row,prediction,interpolated");
        if args.target_col.is_some() {
            out.push_str(",target,error");
        }
        out.push('\n');
        for (i, (x, y)) in rows.iter().enumerate() {
            let a = answer(&model, &file.scaling, x)?;
            let _ = write!(out, "{i},{},{}", join_semicolon(&a.y), a.interpolated as u8);
            if let Some(y) = y {
                let err =
                    a.y.iter()
                        .zip(y)
                        .fold(0.0f64, |m, (p, t)| m.max((p - t).abs()));
                let _ = write!(out, ",{},{err}", join_semicolon(y));
            }
            out.push('\n');
        }
    } else {
        for s in &args.input {
            let a = answer(&model, &file.scaling, &parse_vector(s)?)?;
            let _ = writeln!(out, "{}", join(&a.y));
            if a.interpolated {
                eprintln!("note: {s} activates no neuron strongly; output is interpolated");
            }
        }
    }
    match &args.out {
        Some(p) => write_file(p, &out),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

/// Vector outputs inside one CSV cell.
fn join_semicolon(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

fn read_inputs(path: &Path, header: bool) -> Result<Vec<Vec<f64>>, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate().skip(header as usize) {
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_vector(line).map_err(|_| {
            CliError::Data(format!("{}:{}: non-numeric cell", path.display(), n + 1))
        })?;
        rows.push(row);
    }
    Ok(rows)
}

/// Human-readable account of one prediction. Layers, nodes and samples are
/// numbered from 1.
pub fn explain_text(
    model: &Model,
    scaling: &Option<InputScaling>,
    x: &[f64],
) -> Result<String, CliError> {
    let x = match scaling {
        Some(s) => s.apply(x)?,
        None => x.to_vec(),
    };
    let mut s = String::new();
    match model {
        Model::Sqann(m) => {
            let r = m.explain(&x)?;
            match &r.outcome.provenance {
                Provenance::StrongActivation(n) => {
                    let alpha = &m.layers[n.layer].alphas[n.node];
                    let _ = writeln!(
                        s,
                        "strong activation: layer {}, node {}, sample {}, α={}",
                        n.layer + 1,
                        n.node + 1,
                        n.sample_index + 1,
                        join(alpha)
                    );
                }
                Provenance::Interpolated { .. } => {
                    let _ = writeln!(
                        s,
                        "interpolated: no activation above tau_act, input is ood-suspect"
                    );
                }
            }
            let _ = writeln!(s, "output: {}", join(&r.outcome.y));
            for reference in &r.references {
                let _ = writeln!(
                    s,
                    "reference: sample {} (layer {}, node {}), weight {}, x=[{}], y=[{}]",
                    reference.sample_index + 1,
                    reference.layer + 1,
                    reference.node + 1,
                    reference.weight,
                    join(&reference.x),
                    join(&reference.y)
                );
            }
            for (l, acts) in r.outcome.all_activations.iter().enumerate() {
                let cells: Vec<String> = r
                    .neurons
                    .iter()
                    .filter(|n| n.neuron.layer == l)
                    .map(|n| format!("{:.4e} {:?}", n.neuron.activation, n.regime).to_lowercase())
                    .collect();
                debug_assert_eq!(cells.len(), acts.len());
                let _ = writeln!(s, "layer {}: {}", l + 1, cells.join(", "));
            }
        }
        Model::Tnn(m) => {
            if x.len() != 1 {
                return Err(CliError::Data(format!(
                    "TNN takes scalar inputs, got {} components",
                    x.len()
                )));
            }
            let (states, h) = m.activation_pattern(x[0]);
            let pattern: String = states
                .iter()
                .map(|st| match st {
                    NeuronState::On => '1',
                    NeuronState::Half => '~',
                    NeuronState::Off => '0',
                })
                .collect();
            let _ = writeln!(s, "output: {}", join(&m.predict(x[0])));
            let _ = writeln!(
                s,
                "activation pattern: {pattern} ({} fully on)",
                m.rank_of(x[0])
            );
            let _ = writeln!(s, "hidden: {}", join(&h));
            let _ = writeln!(s, "fitting error bound: {:e}", m.error_bound());
        }
    }
    Ok(s)
}

fn explain(args: &ExplainArgs) -> Result<(), CliError> {
    let (model, file) = load_model(&args.model_file)?;
    print!(
        "{}",
        explain_text(&model, &file.scaling, &parse_vector(&args.input)?)?
    );
    Ok(())
}

/// Gives external samples indices after every fitting index.
fn reindex_after(fitting: &Dataset, external: Dataset) -> Result<Dataset, DataError> {
    let offset = fitting
        .samples()
        .iter()
        .map(|s| s.index + 1)
        .max()
        .unwrap_or(0);
    Dataset::new(
        external
            .into_samples()
            .into_iter()
            .map(|s| Sample::new(s.x, s.y, s.index + offset))
            .collect(),
    )
}

fn absorb(args: &AbsorbArgs) -> Result<(), CliError> {
    let (fitting, scaling, choice) = match (&args.model_file, &args.data) {
        (Some(path), _) => {
            let (model, file) = load_model(path)?;
            let choice = match &model {
                Model::Tnn(m) => BaseModel::Tnn(TnnBuilder {
                    base_sharpness: m.a,
                    dummy: DummyDeltaRule::default(),
                }),
                Model::Sqann(m) => BaseModel::Sqann(SqannBuilder { config: m.config }),
            };
            (model.fitting_dataset()?, file.scaling, choice)
        }
        (None, Some(path)) => {
            let raw = load_csv(path, std::slice::from_ref(&args.target_col), args.header)?;
            let scaling = args.build.scaling(&raw);
            let choice = match args.build.model {
                ModelChoice::Tnn => BaseModel::Tnn(TnnBuilder {
                    base_sharpness: args.build.a,
                    dummy: DummyDeltaRule::default(),
                }),
                ModelChoice::Sqann => BaseModel::Sqann(SqannBuilder {
                    config: args.build.sqann_config(),
                }),
            };
            (scaled(&scaling, &raw)?, scaling, choice)
        }
        (None, None) => unreachable!("clap requires --model-file or --data"),
    };
    let external = load_csv(
        &args.external,
        std::slice::from_ref(&args.target_col),
        args.header,
    )?;
    let external = reindex_after(&fitting, scaled(&scaling, &external)?)?;
    let cfg = AbsorptionConfig {
        keep_original: args.keep_original,
        ..AbsorptionConfig::new(args.epsilon, args.max_rounds)
    };
    match choice {
        BaseModel::Tnn(b) => {
            finish_absorb(args, &b, &fitting, &external, &cfg, scaling, Model::Tnn)
        }
        BaseModel::Sqann(b) => {
            finish_absorb(args, &b, &fitting, &external, &cfg, scaling, Model::Sqann)
        }
    }
}

enum BaseModel {
    Tnn(TnnBuilder),
    Sqann(SqannBuilder),
}

fn finish_absorb<B: ModelBuilder>(
    args: &AbsorbArgs,
    builder: &B,
    fitting: &Dataset,
    external: &Dataset,
    cfg: &AbsorptionConfig,
    scaling: Option<InputScaling>,
    wrap: fn(B::Model) -> Model,
) -> Result<(), CliError> {
    let outcome = absorb_loop(builder, fitting, external, cfg)?;
    let r = &outcome.report;
    eprintln!(
        "absorbed {} of {} external samples in {} rounds; external max error {:e} -> {:e}{}",
        r.total_absorbed(),
        external.len(),
        r.rounds.len(),
        r.initial.max_error,
        r.final_summary().max_error,
        if r.converged { "" } else { " (not converged)" }
    );
    if let Some(p) = &args.report {
        write_file(p, &r.to_csv())?;
    }
    if let Some(p) = &args.out {
        if args.keep_original {
            eprintln!("note: the saved model is the extended one; the original is not stored");
        }
        save_model(&wrap(outcome.model), scaling, p)?;
    }
    Ok(())
}

fn experiment(args: &ExperimentArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.spec)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.spec.display())))?;
    let spec = ExperimentSpec::from_json(&text)?;
    for p in run_experiment(&spec, args.out.as_deref())? {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}
