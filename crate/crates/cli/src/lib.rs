//! Command-line front end. [`run_cli`] does all the work so that tests can
//! call it without spawning a process.
//!
//! Exit codes: 0 positive verdict, 1 negative verdict, 2 inconclusive,
//! 3 input error, 64 usage error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use petrigame::equilibrium::{
    self, check_alignment_witness_with, search_alignment, soundness_alignment_bridge, Defect, Mode,
    SearchOutcome, SimulationBudget, DEFAULT_EFFORT,
};
use petrigame::game::{build_base_game, build_restart_game, StochasticGame};
use petrigame::io::report::{self, player_names};
use petrigame::io::{self as pio, emit_report, Format, Report};
use petrigame::petri::{structural_checks, AnnotatedNet};
use petrigame::rational::{self, Rational};
use petrigame::statespace::{self, DEFAULT_STATE_BOUND};
use petrigame::strategy::{simulate, CorrelationDevice, StrategyProfile};
use petrigame::Error;

pub const EXIT_POSITIVE: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// Overrides the default reachability bound.
pub const ENV_BOUND: &str = "PETRIGAME_BOUND";
/// Overrides the default search effort.
pub const ENV_EFFORT: &str = "PETRIGAME_EFFORT";

#[derive(Debug, Parser)]
#[command(
    name = "petrigame",
    version,
    about = "Stochastic games from annotated Petri nets"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, default_value = "json", value_parser = ["json", "text"])]
    format: String,
    /// Maximum number of reachable markings to explore.
    #[arg(long, global = true)]
    bound: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classical soundness of a workflow net.
    CheckSoundness {
        pnml: PathBuf,
        /// Annotation file; only needed for the structural report.
        annotations: Option<PathBuf>,
    },
    /// Export the base or restart game as JSON.
    BuildGame {
        pnml: PathBuf,
        annotations: PathBuf,
        #[arg(long)]
        restart: bool,
    },
    /// Check a witness (with --profile) or search for one.
    Analyze(AnalyzeArgs),
    /// Monte Carlo estimate of the mean payoff.
    Simulate(SimulateArgs),
    /// Compare soundness with full-liveness alignment.
    Bridge {
        pnml: PathBuf,
        /// Defaults to one role owning every transition with utility 1.
        annotations: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    pnml: PathBuf,
    annotations: PathBuf,
    #[arg(long, default_value = "proper-completion")]
    mode: String,
    /// Exact rational, e.g. `1/1000000` or `0.001`.
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long)]
    device: Option<PathBuf>,
    /// Number of candidate profiles the search may try.
    #[arg(long)]
    effort: Option<usize>,
    /// Analyze the base game instead of the restart game.
    #[arg(long)]
    base: bool,
    /// Seed of the heuristic deviation estimator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    pnml: PathBuf,
    annotations: PathBuf,
    #[arg(long, default_value_t = 1000)]
    stages: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long)]
    device: Option<PathBuf>,
    #[arg(long)]
    base: bool,
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CliOutput {
    fn report(code: i32, report: &Report, format: Format) -> CliOutput {
        CliOutput {
            code,
            stdout: emit_report(report, format),
            stderr: String::new(),
        }
    }

    fn failure(code: i32, message: String) -> CliOutput {
        CliOutput {
            code,
            stdout: String::new(),
            stderr: message,
        }
    }
}

enum Failure {
    Usage(String),
    Lib(Error),
    Io(PathBuf, std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::StateSpaceExceeded(_) | Error::SolverNonconvergence(_) => EXIT_INCONCLUSIVE,
        _ => EXIT_INPUT,
    }
}

type Run<T> = std::result::Result<T, Failure>;

fn env_usize(name: &str) -> Run<Option<usize>> {
    match std::env::var(name) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("{name}=`{v}` is not a non-negative integer"))),
        Err(_) => Ok(None),
    }
}

struct Inputs {
    report: Report,
}

impl Inputs {
    fn read(&mut self, path: &Path) -> Run<String> {
        let bytes = std::fs::read(path).map_err(|e| Failure::Io(path.to_path_buf(), e))?;
        let name = path.file_name().map_or_else(
            || path.display().to_string(),
            |n| n.to_string_lossy().into_owned(),
        );
        self.report = std::mem::replace(&mut self.report, Report::new("")).input(&name, &bytes);
        String::from_utf8(bytes).map_err(|e| {
            Failure::Lib(Error::ParseError {
                line: 0,
                message: format!("{}: {e}", path.display()),
            })
        })
    }

    fn net(&mut self, pnml: &Path, annotations: Option<&Path>) -> Run<AnnotatedNet> {
        let (net, m0) = pio::parse_pnml(&self.read(pnml)?)?;
        Ok(match annotations {
            Some(p) => pio::parse_annotations(&self.read(p)?, net, m0)?,
            None => AnnotatedNet::unannotated(net, m0),
        })
    }
}

fn game(a: &AnnotatedNet, bound: usize, restart: bool) -> Run<StochasticGame> {
    let ss = statespace::explore(a, bound)?;
    let base = build_base_game(a, &ss)?;
    Ok(if restart {
        build_restart_game(&base, a.initial())?
    } else {
        base
    })
}

/// Runs the tool on `argv` (program name first).
pub fn run_cli<I, S>(argv: I) -> CliOutput
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            return if code == 0 {
                CliOutput {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                CliOutput::failure(code, text)
            };
        }
    };
    match run(cli) {
        Ok(out) => out,
        Err(Failure::Usage(m)) => CliOutput::failure(EXIT_USAGE, format!("error: {m}\n")),
        Err(Failure::Lib(e)) => CliOutput::failure(exit_code(&e), format!("error: {e}\n")),
        Err(Failure::Io(p, e)) => {
            CliOutput::failure(EXIT_INPUT, format!("error: {}: {e}\n", p.display()))
        }
    }
}

fn run(cli: Cli) -> Run<CliOutput> {
    let format: Format = cli.format.parse()?;
    let bound = match cli.bound {
        Some(b) => b,
        None => env_usize(ENV_BOUND)?.unwrap_or(DEFAULT_STATE_BOUND),
    };
    match cli.command {
        Command::CheckSoundness { pnml, annotations } => {
            let mut io = Inputs {
                report: Report::new("check-soundness"),
            };
            let a = io.net(&pnml, annotations.as_deref())?;
            let structure = structural_checks(&a);
            let Some(shape) = structure.workflow else {
                return Err(Error::NotAWorkflowNet(
                    structure.workflow_defect.clone().unwrap_or_default(),
                )
                .into());
            };
            let r = statespace::check_soundness(&a, &shape, bound)?;
            let safe = statespace::is_safe(&a, bound)?;
            let report = io
                .report
                .set("structure", report::structural_json(a.net(), &structure))
                .set("safe", serde_json::json!(safe))
                .set("soundness", report::soundness_json(a.net(), &r));
            let code = if r.sound {
                EXIT_POSITIVE
            } else {
                EXIT_NEGATIVE
            };
            Ok(CliOutput::report(code, &report, format))
        }
        Command::BuildGame {
            pnml,
            annotations,
            restart,
        } => {
            let mut io = Inputs {
                report: Report::new("build-game"),
            };
            let a = io.net(&pnml, Some(&annotations))?;
            let g = game(&a, bound, restart)?;
            let report = io.report.set("game", pio::export_game(&g)?);
            Ok(CliOutput::report(EXIT_POSITIVE, &report, format))
        }
        Command::Analyze(args) => analyze(args, bound, format),
        Command::Simulate(args) => {
            let mut io = Inputs {
                report: Report::new("simulate"),
            };
            let a = io.net(&args.pnml, Some(&args.annotations))?;
            let g = game(&a, bound, !args.base)?;
            let (device, profile) = strategy_inputs(&mut io, &g, &args.profile, &args.device)?;
            let est = simulate(
                &g,
                &device,
                g.initial(),
                &profile,
                args.stages,
                args.trials,
                args.seed,
            )?;
            let report = io.report.seed(args.seed).set(
                "simulation",
                report::simulation_json(&player_names(&a), &est),
            );
            Ok(CliOutput::report(EXIT_POSITIVE, &report, format))
        }
        Command::Bridge { pnml, annotations } => {
            let mut io = Inputs {
                report: Report::new("bridge"),
            };
            let a = match annotations {
                Some(p) => io.net(&pnml, Some(&p))?,
                None => {
                    let plain = io.net(&pnml, None)?;
                    petrigame::fixtures::single_role_unit(
                        plain.net().clone(),
                        plain.initial().clone(),
                    )
                }
            };
            match soundness_alignment_bridge(&a, bound) {
                Ok(b) => {
                    let code = match (b.agree, b.sound) {
                        (false, _) => EXIT_INCONCLUSIVE,
                        (true, true) => EXIT_POSITIVE,
                        (true, false) => EXIT_NEGATIVE,
                    };
                    let report = io.report.set("bridge", report::bridge_json(&a, &b)?);
                    Ok(CliOutput::report(code, &report, format))
                }
                Err(Error::HypothesisViolated(why)) => {
                    let report = io.report.set(
                        "bridge",
                        serde_json::json!({ "applicable": false, "violated": why }),
                    );
                    Ok(CliOutput::report(EXIT_INCONCLUSIVE, &report, format))
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn strategy_inputs(
    io: &mut Inputs,
    g: &StochasticGame,
    profile: &Option<PathBuf>,
    device: &Option<PathBuf>,
) -> Run<(CorrelationDevice, StrategyProfile)> {
    let device = match device {
        Some(p) => pio::parse_device(&io.read(p)?, g)?,
        None => CorrelationDevice::trivial(g.num_players()),
    };
    let profile = match profile {
        Some(p) => pio::parse_profile(&io.read(p)?, g, &device)?,
        None => StrategyProfile::acting(g, &device),
    };
    Ok((device, profile))
}

fn analyze(args: AnalyzeArgs, bound: usize, format: Format) -> Run<CliOutput> {
    let mode: Mode = args
        .mode
        .parse()
        .map_err(|e: Error| Failure::Usage(e.to_string()))?;
    let epsilon: Rational = match &args.epsilon {
        Some(text) => {
            let q = rational::parse(text).map_err(|e| Failure::Usage(e.to_string()))?;
            if q < rational::zero() {
                return Err(Failure::Usage("epsilon must be non-negative".into()));
            }
            q
        }
        None => equilibrium::default_epsilon(),
    };
    let effort = match args.effort {
        Some(e) => e,
        None => env_usize(ENV_EFFORT)?.unwrap_or(DEFAULT_EFFORT),
    };
    let mut io = Inputs {
        report: Report::new("analyze"),
    };
    let a = io.net(&args.pnml, Some(&args.annotations))?;
    let g = game(&a, bound, !args.base)?;
    let names = player_names(&a);

    if args.profile.is_none() && args.device.is_none() {
        let outcome = search_alignment(&g, mode, &epsilon, effort)?;
        let code = match &outcome {
            SearchOutcome::Found(_) => EXIT_POSITIVE,
            SearchOutcome::Refuted(_) => EXIT_NEGATIVE,
            SearchOutcome::Exhausted { .. } => EXIT_INCONCLUSIVE,
        };
        let report = io
            .report
            .set("effort", serde_json::json!(effort))
            .set("search", report::search_json(&g, &outcome)?);
        return Ok(CliOutput::report(code, &report, format));
    }

    let (device, profile) = strategy_inputs(&mut io, &g, &args.profile, &args.device)?;
    let budget = SimulationBudget {
        seed: args.seed,
        ..SimulationBudget::default()
    };
    let verdict = check_alignment_witness_with(
        &g,
        &device,
        &profile,
        mode,
        &epsilon,
        Some(&budget),
        "supplied",
    )?;
    // liveness and positivity failures are exact even when gains are estimated
    let exact_failure = verdict
        .failures
        .iter()
        .any(|d| !matches!(d, Defect::NotEquilibrium { .. }));
    let code = if verdict.heuristic && !exact_failure {
        EXIT_INCONCLUSIVE
    } else if verdict.aligned {
        EXIT_POSITIVE
    } else {
        EXIT_NEGATIVE
    };
    let mut report = io
        .report
        .set("verdict", report::verdict_json(&names, Some(&g), &verdict)?);
    if verdict.heuristic {
        report = report.seed(args.seed);
    }
    Ok(CliOutput::report(code, &report, format))
}
