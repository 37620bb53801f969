//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dsl::{format_model, format_row, parse_model, Model};
use crate::error::{Error, Result};
use crate::grad::EstimatorConfig;
use crate::io::{
    create, load_time_series, save_time_series, write_summary, write_time_series, write_trace, RunSummary,
};
use crate::library::{enumerate_library, ReactionLibrary};
use crate::loss::{Objective, DEFAULT_REPLICATIONS};
use crate::model::{SpeciesSet, State};
use crate::optimizer::{run_descent_with, AdamState, Descent, DEFAULT_REPEATS, DEFAULT_STEPS};
use crate::problems::{ProblemEncoding, ProblemKind, DEFAULT_THRESHOLD};
use crate::rng::RngStream;
use crate::ssa::{simulate_with_cap, SnapshotGrid, DEFAULT_MAX_EVENTS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "reactlearn",
    version,
    about = "Learn stochastic reaction systems from time-series snapshots"
)]
pub struct Cli {
    /// Worker threads (0 = one per core). Results do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one trajectory of a model and write its snapshots as CSV.
    GenRef(GenRefArgs),
    /// Fit a model to a reference time series.
    Fit(FitArgs),
    /// Print the loss of a model against a reference time series.
    Eval(EvalArgs),
    /// List the reaction library for a set of species.
    Library(LibraryArgs),
}

#[derive(Debug, Args)]
pub struct GenRefArgs {
    /// Model file with an `init:` line.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    /// Number of equidistant snapshots in (0, t_end].
    #[arg(long, default_value_t = 100)]
    pub grid: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_EVENTS)]
    pub max_events: u64,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub reference: PathBuf,
    /// library-of-reactions, coefficient-steps, reaction-steps, library-of-systems or fixed-structure.
    #[arg(long)]
    pub problem: ProblemKind,
    /// Gradient samples per step (default: problem preset).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Smoothing factor (default: problem preset).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Adam learning rate (default: problem preset).
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    pub steps: usize,
    /// Trajectories averaged per loss evaluation.
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_REPEATS)]
    pub repeats: usize,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Output directory for traces, models and the summary.
    #[arg(long)]
    pub out: PathBuf,
    /// Initial state, e.g. `1980,20,0`.
    #[arg(long, value_delimiter = ',')]
    pub init: Option<Vec<u64>>,
    /// Model file supplying the initial state, and the structure for fixed-structure fits.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Restrict the library to these indices (as printed by `library`).
    #[arg(long, value_delimiter = ',')]
    pub restrict: Option<Vec<usize>>,
    /// Range of initial raw rates, e.g. `40,90` (default depends on the problem).
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub init_range: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_MAX_EVENTS)]
    pub max_events: u64,
    /// Print the loss of every step to stderr.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long, default_value_t = DEFAULT_REPLICATIONS)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Initial state overriding the model's `init:` line.
    #[arg(long, value_delimiter = ',')]
    pub init: Option<Vec<u64>>,
    #[arg(long, default_value_t = DEFAULT_MAX_EVENTS)]
    pub max_events: u64,
}

#[derive(Debug, Args)]
pub struct LibraryArgs {
    /// Species names, comma or space separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub species: Vec<String>,
    /// Conserved population total, informational only.
    #[arg(long, default_value_t = 0)]
    pub total: u64,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match run(cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Contract(_) => EXIT_USAGE,
        Error::Parse { .. } | Error::Csv(_) => EXIT_PARSE,
        Error::Domain(_) | Error::NonFinite { .. } | Error::EventCap { .. } | Error::Io(_) => EXIT_RUNTIME,
    }
}

pub fn run(cli: Cli, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    pool.install(|| match cli.command {
        Command::GenRef(a) => cmd_gen_ref(&a, out),
        Command::Fit(a) => cmd_fit(&a, out, err),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Library(a) => cmd_library(&a, out),
    })
}

fn load_model(path: &Path) -> Result<Model<f64>> {
    let text = std::fs::read_to_string(path)?;
    parse_model(&text).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

fn initial_state(flag: Option<&Vec<u64>>, model: Option<&Model<f64>>) -> Result<State> {
    match (flag, model.and_then(|m| m.init.as_ref())) {
        (Some(counts), _) => Ok(State::new(counts.clone())),
        (None, Some(init)) => Ok(init.clone()),
        (None, None) => Err(Error::contract(
            "an initial state is required: pass --init or a model file with an `init:` line",
        )),
    }
}

pub fn cmd_gen_ref(a: &GenRefArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let model = load_model(&a.model)?;
    let init = initial_state(None, Some(&model))?;
    if !(a.t_end > 0.0) || !a.t_end.is_finite() {
        return Err(Error::contract(format!("--t-end must be positive, got {}", a.t_end)));
    }
    let grid = SnapshotGrid::uniform(a.t_end, a.grid)?;
    let series = simulate_with_cap(&model.system, &init, &grid, RngStream::new(a.seed), a.max_events)?;
    match &a.out {
        Some(path) => save_time_series(&series, path),
        None => write_time_series(&series, out),
    }
}

pub fn cmd_eval(a: &EvalArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let model = load_model(&a.model)?;
    let init = initial_state(a.init.as_ref(), Some(&model))?;
    let reference = load_time_series::<f64>(&a.reference)?;
    let objective = Objective::new(reference, a.reps, init.total().max(1) as f64)?.with_max_events(a.max_events);
    let loss = objective.evaluate(&model.system, &init, RngStream::new(a.seed))?;
    writeln!(out, "{loss}")?;
    Ok(())
}

pub fn cmd_library(a: &LibraryArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let names: Vec<&str> = a.species.iter().flat_map(|s| s.split_whitespace()).collect();
    let species = SpeciesSet::new(names)?;
    let lib = enumerate_library(&species, a.total);
    for (i, row) in lib.reactions().iter().enumerate() {
        writeln!(out, "{i}\t{}", format_row(row, &species))?;
    }
    Ok(())
}

fn build_problem(
    a: &FitArgs,
    species: &SpeciesSet,
    init: &State,
    model: Option<&Model<f64>>,
) -> Result<ProblemEncoding<f64>> {
    let library = || -> Result<ReactionLibrary> {
        let lib = enumerate_library(species, init.total());
        match &a.restrict {
            Some(idx) => lib.restrict(idx),
            None => Ok(lib),
        }
    };
    let problem = match a.problem {
        ProblemKind::FixedStructure => {
            let model = model.ok_or_else(|| Error::contract("fixed-structure fits need --model"))?;
            if model.system.species() != species {
                return Err(Error::contract("model species differ from the reference columns"));
            }
            ProblemEncoding::fixed_structure(model.system.clone())
        }
        ProblemKind::CoefficientSteps => ProblemEncoding::coefficient_steps(species.clone()),
        kind => ProblemEncoding::new(kind, library()?)?,
    };
    let problem = problem.with_threshold(a.threshold)?;
    match a.init_range.as_deref() {
        None => Ok(problem),
        Some(&[lo, hi]) => problem.with_rate_init(lo, hi),
        Some(_) => Err(Error::contract("--init-range takes two values, e.g. 40,90")),
    }
}

pub fn cmd_fit(a: &FitArgs, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<()> {
    let model = a.model.as_deref().map(load_model).transpose()?;
    let init = initial_state(a.init.as_ref(), model.as_ref())?;
    let reference = load_time_series::<f64>(&a.reference)?;
    let species = reference.species().clone();
    if init.len() != species.len() {
        return Err(Error::contract(format!(
            "initial state has {} counts but the reference has {} species",
            init.len(),
            species.len()
        )));
    }
    let problem = build_problem(a, &species, &init, model.as_ref())?;
    let (n, sigma, eta) = a.problem.preset();
    let estimator = EstimatorConfig::new(a.samples.unwrap_or(n), a.sigma.unwrap_or(sigma))?;
    let eta = a.lr.unwrap_or(eta);
    let objective = Objective::new(reference, a.reps, init.total().max(1) as f64)?.with_max_events(a.max_events);
    let descent = Descent {
        problem: &problem,
        objective: &objective,
        init: &init,
        estimator: &estimator,
    };

    std::fs::create_dir_all(&a.out)?;
    let root = RngStream::new(a.seed);
    let mut summaries = Vec::with_capacity(a.repeats);
    let mut first_error = None;
    for run in 0..a.repeats {
        let stream = root.child(run as u64);
        let theta = problem.initialize(stream.child(0));
        let adam = AdamState::new(eta, problem.dimension())?;
        let verbose = a.verbose;
        let mut log = |r: &crate::optimizer::TraceRecord<f64>| {
            if verbose {
                let _ = writeln!(err, "run {run} step {} loss {}", r.step, r.loss);
            }
        };
        let result = run_descent_with(descent, adam, a.steps, theta, stream.child(1), &mut log);
        let trace = match result {
            Ok(trace) => trace,
            Err(failure) => {
                // Keep going: one pathological start should not discard the other runs.
                write_trace(&failure.trace, create(&a.out.join(format!("run_{run}_trace.csv")))?)?;
                let _ = writeln!(err, "run {run}: aborted: {}", failure.error);
                first_error.get_or_insert(failure.error);
                continue;
            }
        };
        write_trace(&trace, create(&a.out.join(format!("run_{run}_trace.csv")))?)?;
        let extracted = trace.model.clone().expect("completed descent has a model");
        let text = format_model(&Model {
            system: extracted.clone(),
            init: Some(init.clone()),
        });
        std::fs::write(a.out.join(format!("run_{run}_model.txt")), text)?;
        let summary = RunSummary {
            run,
            seed: stream.seed(),
            initial_loss: trace.initial_loss().unwrap_or(f64::NAN),
            final_loss: trace.final_loss().unwrap_or(f64::NAN),
            reactions: extracted.n_reactions(),
        };
        let _ = writeln!(
            err,
            "run {run}: loss {} -> {}, {} reactions",
            summary.initial_loss, summary.final_loss, summary.reactions
        );
        summaries.push(summary);
    }
    write_summary(&summaries, create(&a.out.join("summary.csv"))?)?;
    write_summary(&summaries, out)?;
    first_error.map_or(Ok(()), Err)
}
