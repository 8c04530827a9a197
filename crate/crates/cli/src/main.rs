//! `tslab`: run Thompson Sampling experiments from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tslab_core::harness::config::{FeedbackSection, GammaSetting, OutputSection, PolicySection, PriorSection};
use tslab_core::harness::{run, Mode, RunConfig, RunReport};
use tslab_core::prior::{prior_to_toml, write_prior};
use tslab_core::scenarios::{ExpansionMode, ScenarioSpec, GENERATORS};
use tslab_core::{Error, FeedbackKind, PolicyKind};

const EXIT_CONFIG: u8 = 1;
const EXIT_VIOLATION: u8 = 2;
const EXIT_SIZE: u8 = 3;

#[derive(Parser)]
#[command(name = "tslab", version, about = "Exact and Monte Carlo laboratory for Thompson Sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML configuration file.
    Run(RunArgs),
    /// Exact evaluation of a prior file.
    Exact(ExactArgs),
    /// Generate a named prior and write it in the prior text format.
    Scenario(ScenarioArgs),
    /// Re-render a saved report.
    Report {
        /// `report.json` or the directory holding it.
        path: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of Monte Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report invariant violations without failing.
    #[arg(long)]
    no_assert: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FeedbackArg {
    Full,
    SemiBandit,
    Bandit,
    Graph,
    Contextual,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Ts,
    ThresholdedTs,
}

#[derive(Args)]
struct ExactArgs {
    #[arg(long)]
    prior: PathBuf,
    #[arg(long, value_enum, default_value = "full")]
    feedback: FeedbackArg,
    /// Feedback graph file; repeat once per round, or give one for all rounds.
    #[arg(long)]
    graph: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "ts")]
    policy: PolicyArg,
    /// Threshold for thresholded TS: a number or `auto`.
    #[arg(long, default_value = "auto")]
    gamma: String,
    /// Mirror-map potential to track (`tsallis:<a>`, `log-barrier[:T]`, `negentropy`).
    #[arg(long = "potential")]
    potentials: Vec<String>,
    /// Also record the exact law of the regret.
    #[arg(long)]
    regret_distribution: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    no_assert: bool,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Generator name.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(GENERATORS))]
    generator: String,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(short = 'T', long = "horizon")]
    horizon: Option<usize>,
    #[arg(long)]
    lstar: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    scenarios: Option<usize>,
    /// Comma-separated mean profile for `iid-bernoulli`.
    #[arg(long, value_delimiter = ',')]
    means: Option<Vec<f64>>,
    #[arg(long)]
    samples: Option<usize>,
    /// Output file; the prior is printed when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

enum Failure {
    Error(Error),
    Violations,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Exact(args) => cmd_exact(args),
        Command::Scenario(args) => cmd_scenario(args),
        Command::Report { path } => cmd_report(&path),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violations) => ExitCode::from(EXIT_VIOLATION),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            if let Error::Size(_) = e {
                eprintln!("hint: use mode = \"monte-carlo\" for priors this large");
                ExitCode::from(EXIT_SIZE)
            } else {
                ExitCode::from(EXIT_CONFIG)
            }
        }
    }
}

fn finish(config: &RunConfig, out: PathBuf) -> Result<(), Failure> {
    let report = run(config)?;
    report.write_outputs(&out)?;
    print!("{}", report.render());
    println!("outputs    {}", out.display());
    if config.assertions && report.has_failures() {
        return Err(Failure::Violations);
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(trials) = args.trials {
        if trials == 0 {
            return Err(Error::Config("--trials must be at least 1".into()).into());
        }
        config.trials = Some(trials);
    }
    if args.no_assert {
        config.assertions = false;
    }
    let out = args.out.unwrap_or_else(|| config.output_dir());
    finish(&config, out)
}

fn cmd_exact(args: ExactArgs) -> Result<(), Failure> {
    let kind = match args.feedback {
        FeedbackArg::Full => FeedbackKind::Full,
        FeedbackArg::SemiBandit | FeedbackArg::Bandit => FeedbackKind::SemiBandit,
        FeedbackArg::Graph => FeedbackKind::Graph,
        FeedbackArg::Contextual => FeedbackKind::Contextual,
    };
    let gamma = match args.gamma.as_str() {
        "auto" => GammaSetting::default(),
        g => GammaSetting::Value(g.parse().map_err(|_| Error::Config(format!("--gamma: not a number: {g}")))?),
    };
    let (graph, graphs) = match args.graph.len() {
        0 => (None, None),
        1 => (args.graph.into_iter().next(), None),
        _ => (None, Some(args.graph)),
    };
    let config = RunConfig {
        mode: Mode::Exact,
        trials: None,
        seed: 0,
        potentials: (!args.potentials.is_empty()).then_some(args.potentials),
        assertions: !args.no_assert,
        regret_distribution: args.regret_distribution,
        diagnostics: false,
        prior: PriorSection { file: Some(args.prior), ..Default::default() },
        feedback: FeedbackSection { kind: Some(kind), graph, graphs },
        policy: PolicySection {
            kind: match args.policy {
                PolicyArg::Ts => PolicyKind::Ts,
                PolicyArg::ThresholdedTs => PolicyKind::ThresholdedTs,
            },
            gamma,
        },
        output: OutputSection { dir: args.out },
        base_dir: PathBuf::from("."),
    };
    let out = config.output_dir();
    finish(&config, out)
}

fn cmd_scenario(args: ScenarioArgs) -> Result<(), Failure> {
    let spec = ScenarioSpec {
        name: args.generator,
        d: args.d,
        m: args.m,
        horizon: args.horizon,
        lstar: args.lstar,
        seed: args.seed,
        scenarios: args.scenarios,
        means: args.means,
        samples: args.samples,
        mode: ExpansionMode::Exact,
    };
    let prior = spec.build()?.exact_prior()?;
    match args.output {
        Some(path) => {
            write_prior(&prior, &path)?;
            eprintln!("wrote {} scenarios to {}", prior.len(), path.display());
        }
        None => print!("{}", prior_to_toml(&prior)?),
    }
    Ok(())
}

fn cmd_report(path: &Path) -> Result<(), Failure> {
    let file = if path.is_dir() { path.join("report.json") } else { path.to_path_buf() };
    let report = RunReport::read(&file).map_err(|e| Error::Config(format!("cannot load {}: {e}", file.display())))?;
    print!("{}", report.render());
    Ok(())
}
