use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use msalab::error::Error;
use msalab::experiments::{run_config, ExperimentConfig, ExperimentKind, RunOptions};

#[derive(Parser)]
#[command(name = "msalab", version, about = "Run msalab experiments from TOML configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Default output root when neither --out nor `output_dir` is given.
    #[arg(long, env = "MSALAB_OUT_ROOT", default_value = "runs")]
    out_root: PathBuf,
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    CoveringSuite(RunArgs),
    Constants(RunArgs),
    InitialScale(RunArgs),
    GoodnessLadder(RunArgs),
    Dichotomy(RunArgs),
    Ids(RunArgs),
    Dynamical(RunArgs),
    Qucp(RunArgs),
    PeriodicGap(RunArgs),
}

impl Command {
    fn split(&self) -> (ExperimentKind, &RunArgs) {
        use ExperimentKind as K;
        match self {
            Command::CoveringSuite(a) => (K::CoveringSuite, a),
            Command::Constants(a) => (K::Constants, a),
            Command::InitialScale(a) => (K::InitialScale, a),
            Command::GoodnessLadder(a) => (K::GoodnessLadder, a),
            Command::Dichotomy(a) => (K::Dichotomy, a),
            Command::Ids(a) => (K::Ids, a),
            Command::Dynamical(a) => (K::Dynamical, a),
            Command::Qucp(a) => (K::Qucp, a),
            Command::PeriodicGap(a) => (K::PeriodicGap, a),
        }
    }
}

fn run(kind: ExperimentKind, args: &RunArgs) -> Result<(), Error> {
    let text = std::fs::read_to_string(&args.config)?;
    let cfg = ExperimentConfig::from_toml_str(&text)?;
    if cfg.kind != kind {
        return Err(Error::Config(format!(
            "config is for `{}` but the subcommand is `{}`",
            cfg.kind.as_str(),
            kind.as_str()
        )));
    }
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| args.out_root.join(kind.as_str()));
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let opts = RunOptions {
        out_dir: out_dir.clone(),
        workers,
        seed_override: args.seed,
    };
    let manifest = run_config(&cfg, &text, &opts)?;
    if args.verbose {
        eprintln!(
            "{} finished in {} ms with {} workers",
            manifest.kind, manifest.wall_clock_ms, manifest.workers
        );
        for f in &manifest.files {
            eprintln!("  {}  {}", f.sha256, f.name);
        }
    }
    println!("{}", out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();
    match run(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{record}");
            ExitCode::from(if matches!(e, Error::Config(_)) { 2 } else { 1 })
        }
    }
}
