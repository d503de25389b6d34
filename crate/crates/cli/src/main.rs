use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spde_cli::config::{AlphaSetting, RunConfig};
use spde_cli::runner::{self, RunContext};

/// Experiment driver for stochastic gradient-flow PDEs
/// du − div γ(∇u) dt ∋ B(t,u) dW with maximal monotone γ = ∂k.
#[derive(Parser)]
#[command(name = "spde", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration file (`key = value` lines, `#` comments)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config `out` key
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Weighted-norm rate override (skips calibration)
    #[arg(long)]
    alpha: Option<f64>,
    /// Worker-pool size override (0 = machine parallelism)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the additive-noise equation over M paths and report moments,
    /// a priori ratios, and the energy residual
    SimulateAdditive(RunArgs),
    /// Solve the multiplicative-noise equation by Picard iteration in
    /// weighted norms
    SolveMultiplicative(RunArgs),
    /// Solve for each λ in `lambda_list` under common random numbers and
    /// report the limit-passage statistics
    LambdaSweep(RunArgs),
    /// Energy residual and terminal moments across (Δt, h) halvings
    RefinementStudy(RunArgs),
    /// Run the convex-analysis identity battery and print residual maxima
    ConvexCheck(RunArgs),
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::SimulateAdditive(_) => "simulate-additive",
            Cmd::SolveMultiplicative(_) => "solve-multiplicative",
            Cmd::LambdaSweep(_) => "lambda-sweep",
            Cmd::RefinementStudy(_) => "refinement-study",
            Cmd::ConvexCheck(_) => "convex-check",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Cmd::SimulateAdditive(a)
            | Cmd::SolveMultiplicative(a)
            | Cmd::LambdaSweep(a)
            | Cmd::RefinementStudy(a)
            | Cmd::ConvexCheck(a) => a,
        }
    }
}

fn run(cli: &Cli) -> Result<(), spde_cli::CliError> {
    let args = cli.command.args();
    let text = std::fs::read_to_string(&args.config).map_err(|e| spde_cli::CliError::Config {
        field: "config".into(),
        message: format!("cannot read {}: {e}", args.config.display()),
    })?;
    let mut config = RunConfig::parse(&text)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(alpha) = args.alpha {
        config.alpha = AlphaSetting::Fixed(alpha);
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
    let ctx = RunContext::new(&config, args.out.clone(), cli.command.name())?;
    match &cli.command {
        Cmd::SimulateAdditive(_) => runner::simulate_additive(&ctx),
        Cmd::SolveMultiplicative(a) => runner::solve_multiplicative_cmd(&ctx, a.alpha),
        Cmd::LambdaSweep(_) => runner::lambda_sweep_cmd(&ctx),
        Cmd::RefinementStudy(_) => runner::refinement_study_cmd(&ctx),
        Cmd::ConvexCheck(_) => runner::convex_check_cmd(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
