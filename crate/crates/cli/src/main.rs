use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use iccsim::code::generate_codebook;
use iccsim::harness::{run_experiment, Experiment, ExperimentConfig};
use iccsim::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Run a seeded ICC uplink-training experiment and write its results as CSV.
#[derive(Debug, Parser)]
#[command(name = "iccsim", version)]
struct Cli {
    /// deltaf_sweep, iep_curve, nmse_curve or iep_montecarlo
    experiment: Experiment,
    /// TOML file with [run], [scenario], [attacker] and [sweep] overrides
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// CSV destination (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads
    #[arg(long, env = "ICCSIM_THREADS")]
    threads: Option<usize>,
    /// Also write the scenario's codebook in text form
    #[arg(long, value_name = "PATH")]
    emit_codebook: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parity { .. } | Error::AlphabetTooLarge { .. } => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", cli.config.display())))?;
    let mut cfg = ExperimentConfig::from_toml_str(&text, Some(cli.experiment)).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.run.trials = trials;
    }
    if cli.threads == Some(0) {
        return Err(Failure::Config("--threads must be >= 1".into()));
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", path.display())))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    if let Some(path) = &cli.emit_codebook {
        let book = generate_codebook(cfg.scenario.n_b, cfg.scenario.taps)?;
        let mut out = create(path)?;
        book.write_text(&mut out)?;
        out.flush().map_err(Error::from)?;
    }
    log::info!("running {} with seed {} and {} trials", cfg.experiment(), cfg.run.seed, cfg.run.trials);
    let table = run_experiment(&cfg, cli.threads)?;
    match &cli.out {
        Some(path) => {
            let mut out = create(path)?;
            table.write_csv(&mut out)?;
            out.flush().map_err(Error::from)?;
        }
        None => table.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("iccsim: config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("iccsim: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
