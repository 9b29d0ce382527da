mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dualsys::{DualParams, ModelKind, PlanKind, SolverConfig};

#[derive(Parser, Debug)]
#[command(
    name = "dualsys",
    version,
    about = "Plan, simulate and infer dual-system agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one planner and write per-state values, a policy map and a cost map.
    Plan(PlanArgs),
    /// Sample Boltzmann trajectories from a planner.
    Sample(SampleArgs),
    /// Fit rewards by maximum likelihood, once per replicate.
    Irl(IrlArgs),
    /// Run one of the bundled studies with pinned defaults.
    Experiment(ExperimentArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Rational,
    System1,
    System2,
    Naive,
    Soph,
}

impl Mode {
    pub fn plan_kind(self) -> PlanKind {
        match self {
            Mode::Rational | Mode::System2 => PlanKind::System2,
            Mode::System1 => PlanKind::System1,
            Mode::Naive => PlanKind::Naive,
            Mode::Soph => PlanKind::Sophisticated,
        }
    }

    pub fn model_kind(self) -> Result<ModelKind> {
        match self {
            Mode::Rational | Mode::System2 => Ok(ModelKind::Rational),
            Mode::Naive => Ok(ModelKind::Naive),
            Mode::Soph => Ok(ModelKind::Sophisticated),
            Mode::System1 => bail!("system1 is not an IRL model; use rational, naive or soph"),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// System-1 discount [default: 0.6]
    #[arg(long)]
    pub gamma1: Option<f64>,
    /// System-2 discount [default: 0.99]
    #[arg(long)]
    pub gamma2: Option<f64>,
    /// Cognitive control cost weight [default: 5]
    #[arg(long)]
    pub psi: Option<f64>,
    /// Softmax temperature [default: 0.01]
    #[arg(long)]
    pub beta: Option<f64>,
    /// Planner convergence tolerance
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

impl ModelArgs {
    /// Flags override `base` field by field.
    pub fn resolve(&self, base: DualParams) -> Result<DualParams> {
        let params = DualParams {
            gamma1: self.gamma1.unwrap_or(base.gamma1),
            gamma2: self.gamma2.unwrap_or(base.gamma2),
            psi: self.psi.unwrap_or(base.psi),
            beta: self.beta.unwrap_or(base.beta),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            bail!("--tol must be positive");
        }
        Ok(SolverConfig::with_tol(self.tol))
    }
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// Output directory
    #[arg(long, env = "DUALSYS_OUT", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct DeArgs {
    /// Differential-evolution population size
    #[arg(long, default_value_t = 40)]
    pub de_pop: usize,
    /// Differential-evolution generations
    #[arg(long, default_value_t = 150)]
    pub de_gens: usize,
    /// Differential weight F
    #[arg(long, default_value_t = 0.8)]
    pub de_f: f64,
    /// Crossover rate CR
    #[arg(long, default_value_t = 0.9)]
    pub de_cr: f64,
    /// Rewards are searched in [-bound, bound]
    #[arg(long, default_value_t = 5.0)]
    pub bound: f64,
    /// Estimate psi as well, searched in [0, --psi-max]
    #[arg(long)]
    pub free_psi: bool,
    #[arg(long, default_value_t = 10.0)]
    pub psi_max: f64,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    /// Bundled world name or path to a world file
    #[arg(long, default_value = "donut-kale")]
    pub world: String,
    #[arg(long, value_enum, default_value_t = Mode::Soph)]
    pub mode: Mode,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long, default_value = "donut-kale")]
    pub world: String,
    #[arg(long, value_enum, default_value_t = Mode::Naive)]
    pub mode: Mode,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of trajectories
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub max_steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct IrlArgs {
    /// Dataset to fit; without it each replicate samples its own dataset
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// World to sample from, or to override the dataset's world
    #[arg(long)]
    pub world: Option<String>,
    /// Model to fit
    #[arg(long, value_enum, default_value_t = Mode::Soph)]
    pub mode: Mode,
    /// Generating planner when sampling
    #[arg(long, value_enum, default_value_t = Mode::Naive)]
    pub data_mode: Mode,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Trajectories per sampled dataset
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub max_steps: usize,
    #[arg(long, default_value_t = 16)]
    pub replicates: usize,
    /// Replicate r uses seed + r * seed-stride
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub seed_stride: u64,
    #[command(flatten)]
    pub de: DeArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Figure1,
    Figure2,
    Thresholds,
    Stopgo,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub name: Experiment,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 16)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub de: DeArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Output directory [default: the manifest's directory]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Arguments minus `--out`, as recorded in manifests.
fn recordable(args: &[String]) -> Vec<String> {
    let mut kept = Vec::new();
    let mut skip = false;
    for arg in args {
        if skip {
            skip = false;
        } else if arg == "--out" {
            skip = true;
        } else if !arg.starts_with("--out=") {
            kept.push(arg.clone());
        }
    }
    kept
}

fn run(argv: Vec<String>) -> Result<()> {
    let cli = Cli::try_parse_from(&argv).unwrap_or_else(|e| e.exit());
    let recorded = recordable(&argv[1..]);
    match cli.command {
        Command::Plan(args) => commands::plan(&args, &recorded),
        Command::Sample(args) => commands::sample(&args, &recorded),
        Command::Irl(args) => commands::irl(&args, &recorded),
        Command::Experiment(args) => commands::experiment(&args, &recorded),
        Command::Replay(args) => {
            let text = std::fs::read_to_string(&args.manifest)
                .with_context(|| format!("reading {}", args.manifest.display()))?;
            let recorded = commands::manifest_args(&text)?;
            let out = match args.out {
                Some(out) => out,
                None => args
                    .manifest
                    .parent()
                    .map(PathBuf::from)
                    .unwrap_or_default(),
            };
            let mut argv = vec![argv[0].clone()];
            argv.extend(recorded);
            argv.push("--out".into());
            argv.push(out.to_string_lossy().into_owned());
            if matches!(argv.get(1).map(String::as_str), Some("replay")) {
                bail!("a manifest cannot record a replay");
            }
            run(argv)
        }
    }
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
