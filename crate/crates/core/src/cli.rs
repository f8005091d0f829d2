//! Command-line interface: `simulate`, `verify`, `vibe` and `experiment`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::am::{spawn_am, AmKind, AmSpec, PolicyRules};
use crate::config::{RunConfig, CONFIG_ENV};
use crate::fcl::{parse_constraints, Catalog, Constraint, BUNDLED_CONSTRAINTS};
use crate::feedback::{
    make_generator, run_experiment, run_feedback_loop, FeedbackError, FeedbackVariant, GeneratorSpec,
    LoopSettings, PromptTemplate, ScenarioDocs,
};
use crate::sim::run_episode;
use crate::trace::{Termination, Trace};
use crate::verify::{run_suite, verify_trace, SuiteReport};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Verification failed or the loop did not converge.
    pub const FAILED: i32 = 1;
    pub const INPUT_ERROR: i32 = 2;
    pub const PROTOCOL_ABORT: i32 = 3;
    pub const GENERATOR_UNAVAILABLE: i32 = 4;
}

#[derive(Parser, Debug)]
#[command(name = "fclloop", version, about = "Verify adaptation managers against FCL constraints and repair them with generated code")]
pub struct Cli {
    /// TOML or JSON config file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Episodes run in parallel (default: config, else one per CPU).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one episode and write its trace.
    Simulate(SimulateArgs),
    /// Check traces, or a whole suite run by an AM, against constraints.
    Verify(VerifyArgs),
    /// Run the generate, verify, repair loop.
    Vibe(VibeArgs),
    /// Repeat the loop per feedback variant and tabulate convergence.
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug)]
pub struct AmArgs {
    /// `builtin:<name>` or a path to AM source.
    #[arg(long)]
    pub am: String,
    /// Command template for external AMs (default: config, else `python3 {source}`).
    #[arg(long)]
    pub am_command: Option<String>,
    /// Per-step response timeout in milliseconds.
    #[arg(long)]
    pub timeout_ms: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub am: AmArgs,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Trace file; without it the trace goes to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Trace files to check (each is one run).
    #[arg(long, conflicts_with = "suite")]
    pub trace: Vec<PathBuf>,
    /// Run the configured suite with `--am` instead of reading traces.
    #[arg(long, requires = "am")]
    pub suite: bool,
    /// AM for `--suite`: `builtin:<name>` or a path to AM source.
    #[arg(long)]
    pub am: Option<String>,
    /// Constraint file (default: the bundled Dragon Hunt constraints).
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    /// Report detail: `metrics`, `generic` or `full`.
    #[arg(long, default_value = "full")]
    pub variant: FeedbackVariant,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VibeArgs {
    /// `http`, `replay:<dir>` or `builtin:<name>`.
    #[arg(long)]
    pub generator: GeneratorSpec,
    /// Report detail: `metrics`, `generic` or `full`.
    #[arg(long, default_value = "full")]
    pub variant: FeedbackVariant,
    /// Generator calls per loop (default: config, else 10).
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Constraint file (default: the bundled Dragon Hunt constraints).
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    /// Artifact directory (default: `runs/<timestamp>`).
    #[arg(long)]
    pub run_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// `http`, `replay:<dir>` or `builtin:<name>`; a fresh one per attempt.
    #[arg(long)]
    pub generator: GeneratorSpec,
    #[arg(long, default_value_t = 10)]
    pub attempts: usize,
    /// Comma-separated feedback variants.
    #[arg(long, value_delimiter = ',', default_value = "metrics,generic,full")]
    pub variants: Vec<FeedbackVariant>,
    /// Generator calls per loop (default: config, else 10).
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Constraint file (default: the bundled Dragon Hunt constraints).
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    /// CSV output; the histogram goes next to it as `<stem>.histogram.json`.
    #[arg(long, default_value = "results.csv")]
    pub out: PathBuf,
    /// Root for per-attempt run directories (default: `runs/<timestamp>-experiment`).
    #[arg(long)]
    pub runs_dir: Option<PathBuf>,
}

/// An error that ends the command with a specific exit code.
struct Failure {
    code: i32,
    message: String,
}

fn input_error(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: exit::INPUT_ERROR,
        message: message.to_string(),
    }
}

fn feedback_failure(e: FeedbackError) -> Failure {
    let code = match e {
        FeedbackError::GeneratorUnavailable(_) => exit::GENERATOR_UNAVAILABLE,
        FeedbackError::Io(_) | FeedbackError::Sim(_) => exit::FAILED,
        _ => exit::INPUT_ERROR,
    };
    Failure {
        code,
        message: e.to_string(),
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::INPUT_ERROR } else { exit::OK };
        }
    };
    run(cli)
}

pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, Failure> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(input_error)?,
        None => RunConfig::default(),
    };
    if let Some(j) = cli.jobs {
        config.parallelism = j;
    }
    match cli.command {
        Command::Simulate(a) => simulate(&config, a),
        Command::Verify(a) => verify(&config, a),
        Command::Vibe(a) => vibe(&config, a),
        Command::Experiment(a) => experiment(&config, a),
    }
}

fn am_spec(config: &RunConfig, am: &str, command: Option<&str>, timeout_ms: Option<u64>) -> Result<AmSpec, Failure> {
    let mut spec = AmSpec::parse(am).map_err(input_error)?;
    if let AmKind::External { command: c, .. } = &mut spec.kind {
        *c = command.unwrap_or(&config.am_command).to_string();
    }
    Ok(spec.with_timeout_ms(timeout_ms.unwrap_or(config.step_timeout_ms)))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| input_error(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn simulate(config: &RunConfig, a: SimulateArgs) -> Result<i32, Failure> {
    let spec = am_spec(config, &a.am.am, a.am.am_command.as_deref(), a.am.timeout_ms)?;
    let mut am = spawn_am(&spec, PolicyRules::from(&config.scenario)).map_err(input_error)?;
    let ep = run_episode(am.as_mut(), &config.scenario, a.seed).map_err(input_error)?;
    let metrics = serde_json::to_string(&ep.metrics).expect("metrics serialize");
    match &a.out {
        Some(p) => {
            write_file(p, &ep.trace.to_json())?;
            println!("{metrics}");
        }
        None => {
            print!("{}", ep.trace.to_json());
            eprintln!("{metrics}");
        }
    }
    if ep.trace.terminated == Termination::AbortedProtocolError {
        if let Some(reason) = ep.trace.last().and_then(|s| s.events.last()) {
            eprintln!("{reason}");
        }
        return Ok(exit::PROTOCOL_ABORT);
    }
    Ok(exit::OK)
}

fn load_constraints(path: Option<&Path>) -> Result<Vec<Constraint>, Failure> {
    let (name, text) = match path {
        Some(p) => (
            p.display().to_string(),
            std::fs::read_to_string(p).map_err(|e| input_error(format!("{}: {e}", p.display())))?,
        ),
        None => ("bundled constraints".to_string(), BUNDLED_CONSTRAINTS.to_string()),
    };
    parse_constraints(&text, &Catalog::dragon_hunt()).map_err(|diags| {
        let lines: Vec<String> = diags.iter().map(|d| format!("{name}:{d}")).collect();
        input_error(lines.join("\n"))
    })
}

fn verify(config: &RunConfig, a: VerifyArgs) -> Result<i32, Failure> {
    let constraints = load_constraints(a.constraints.as_deref())?;
    let catalog = Catalog::dragon_hunt();
    let report = if a.suite {
        let spec = am_spec(config, a.am.as_deref().expect("clap requires --am"), None, None)?;
        run_suite(&spec, &config.scenario, &config.suite, &constraints, config.parallelism)
            .map_err(input_error)?
    } else {
        if a.trace.is_empty() {
            return Err(input_error("give --trace <file> (repeatable) or --suite --am <am>"));
        }
        let mut runs = Vec::new();
        for (i, path) in a.trace.iter().enumerate() {
            let text = std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
            let trace = Trace::from_json(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
            let mut run = verify_trace(trace, &constraints, &catalog).map_err(input_error)?;
            run.index = i + 1;
            runs.push(run);
        }
        SuiteReport { runs }
    };
    print!("{}", crate::feedback::render_report(&report, &constraints, a.variant));
    if let Some(out) = &a.out {
        write_file(out, &report.to_json_string())?;
    }
    Ok(if report.accepted() { exit::OK } else { exit::FAILED })
}

fn loop_settings(config: &RunConfig, constraints: Vec<Constraint>, max_iter: Option<usize>) -> Result<LoopSettings, Failure> {
    let mut docs = ScenarioDocs::new(config.scenario.clone());
    docs.step_timeout_ms = config.step_timeout_ms;
    let mut settings = LoopSettings::new(docs, config.suite.clone(), constraints, PathBuf::new());
    if let Some(p) = &config.prompt_template {
        let text = std::fs::read_to_string(p).map_err(|e| input_error(format!("{}: {e}", p.display())))?;
        settings.template = PromptTemplate::from_toml(&text).map_err(feedback_failure)?;
    }
    settings.max_iterations = max_iter.unwrap_or(config.max_iterations).max(1);
    settings.am_command = config.am_command.clone();
    settings.parallelism = config.parallelism;
    Ok(settings)
}

fn timestamp() -> String {
    chrono::Local::now().format("%Y%m%d-%H%M%S").to_string()
}

fn vibe(config: &RunConfig, a: VibeArgs) -> Result<i32, Failure> {
    let constraints = load_constraints(a.constraints.as_deref())?;
    let mut settings = loop_settings(config, constraints, a.max_iter)?;
    settings.variant = a.variant;
    settings.run_dir = a.run_dir.unwrap_or_else(|| PathBuf::from("runs").join(timestamp()));
    let rules = PolicyRules::from(&config.scenario);
    let mut generator = make_generator(&a.generator, config.generator.as_ref(), rules).map_err(feedback_failure)?;
    let outcome = run_feedback_loop(generator.as_mut(), &settings).map_err(feedback_failure)?;
    println!(
        "{} after {} of {} iterations; artifacts in {}",
        if outcome.converged { "converged" } else { "not converged" },
        outcome.iterations_used,
        outcome.max_iterations,
        settings.run_dir.display()
    );
    if let Some(msg) = &outcome.aborted {
        eprintln!("error: code generator unavailable: {msg}");
        return Ok(exit::GENERATOR_UNAVAILABLE);
    }
    Ok(if outcome.converged { exit::OK } else { exit::FAILED })
}

fn experiment(config: &RunConfig, a: ExperimentArgs) -> Result<i32, Failure> {
    let constraints = load_constraints(a.constraints.as_deref())?;
    let settings = loop_settings(config, constraints, a.max_iter)?;
    let runs_root = a
        .runs_dir
        .unwrap_or_else(|| PathBuf::from("runs").join(format!("{}-experiment", timestamp())));
    let rules = PolicyRules::from(&config.scenario);
    let http = config.generator.clone();
    let spec = a.generator.clone();
    let mut make = |_v: FeedbackVariant, _k: usize| make_generator(&spec, http.as_ref(), rules);
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| input_error(format!("{}: {e}", dir.display())))?;
    }
    let (result, err) = run_experiment(&a.variants, a.attempts, &mut make, &settings, &runs_root, &a.out);
    let stem = a.out.file_stem().unwrap_or_default().to_string_lossy().to_string();
    let hist_path = a.out.with_file_name(format!("{stem}.histogram.json"));
    let mut hist = serde_json::to_string_pretty(&result.histogram()).expect("histogram serializes");
    hist.push('\n');
    write_file(&hist_path, &hist)?;
    println!("{} rows written to {}; histogram in {}", result.rows.len(), a.out.display(), hist_path.display());
    match err {
        Some(e) => Err(feedback_failure(e)),
        None => Ok(exit::OK),
    }
}
