use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

mod commands;
mod config;
mod error;
mod output;

use config::RawConfig;
use error::CliError;

/// Environment variable holding the default worker count.
const THREADS_ENV: &str = "CQED_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CommandName {
    JcSpectrum,
    BlockadeScan,
    DimerG2,
    SectorNonlinearity,
    MeanfieldLobes,
    DrivenMf,
    Modes,
    Quantize,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::JcSpectrum => "jc-spectrum",
            Self::BlockadeScan => "blockade-scan",
            Self::DimerG2 => "dimer-g2",
            Self::SectorNonlinearity => "sector-nonlinearity",
            Self::MeanfieldLobes => "meanfield-lobes",
            Self::DrivenMf => "driven-mf",
            Self::Modes => "modes",
            Self::Quantize => "quantize",
        }
    }
}

/// Circuit QED lattice simulations.
///
/// Parameters come from an optional TOML file and `--key=value` overrides,
/// which take precedence. Results are written as CSV plus a summary.json.
#[derive(Debug, Parser)]
#[command(name = "cqed", version)]
struct Cli {
    command: CommandName,
    /// TOML parameter file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: out/<command>].
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads [default: $CQED_THREADS or all cores].
    #[arg(long)]
    threads: Option<usize>,
    /// Parameter overrides of the form --key=value.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY=VALUE")]
    overrides: Vec<String>,
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Input(format!("{THREADS_ENV}: expected a positive integer, got '{v}'"))),
        },
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let mut raw = RawConfig::load(cli.config.as_deref())?;
    raw.apply_overrides(&cli.overrides)?;
    if let Some(cmd) = raw.take_string("command")? {
        if cmd != cli.command.as_str() {
            return Err(CliError::Input(format!("command: config is for '{cmd}' but '{}' was requested", cli.command.as_str())));
        }
    }
    let threads = match (cli.threads, raw.take_threads()?, threads_from_env()?) {
        (Some(0), _, _) => return Err(CliError::Input("threads: must be at least 1".into())),
        (Some(n), _, _) | (None, Some(n), _) | (None, None, Some(n)) => n,
        (None, None, None) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let out_dir = match (cli.out_dir, raw.take_out_dir()?) {
        (Some(d), _) | (None, Some(d)) => d,
        (None, None) => PathBuf::from("out").join(cli.command.as_str()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Input(format!("threads: {e}")))?;
    let ctx = commands::Context { out_dir, threads, config_dir: cli.config.as_deref().and_then(|p| p.parent()).map(PathBuf::from) };
    pool.install(|| commands::dispatch(cli.command, raw, &ctx))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("numerical error: results did not meet the requested tolerance; see summary.json");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
