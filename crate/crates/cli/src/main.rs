use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use spdelab_cli::config::VerifySpec;
use spdelab_cli::output::emit_error;
use spdelab_cli::{emit_outputs, parse_config, run_summary, CliError, Command, ExperimentConfig, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sub {
    Simulate,
    Picard,
    Convergence,
    Depend,
    Verify,
}

impl Sub {
    fn command(self) -> Command {
        match self {
            Sub::Simulate => Command::Simulate,
            Sub::Picard => Command::Picard,
            Sub::Convergence => Command::Convergence,
            Sub::Depend => Command::Depend,
            Sub::Verify => Command::Verify,
        }
    }
}

/// Runs an experiment described by a TOML config and writes CSV/JSON outputs.
#[derive(Debug, Parser)]
#[command(name = "spdelab", version)]
struct Args {
    #[arg(value_enum)]
    command: Sub,
    /// Experiment config (TOML). Optional for `verify`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(args: &Args) -> Result<ExperimentConfig, CliError> {
    let command = args.command.command();
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            parse_config(&text)?
        }
        None if command == Command::Verify => {
            parse_config(&format!("schema_version = {SCHEMA_VERSION}\ncommand = \"verify\"\n"))?
        }
        None => return Err(CliError::config("--config", format!("`{}` needs a config file", command.name()))),
    };
    if cfg.command != command {
        return Err(CliError::config(
            "command",
            format!("config declares `{}` but `{}` was requested", cfg.command.name(), command.name()),
        ));
    }
    if let Some(seed) = args.seed {
        cfg.solver.seed = seed;
        if let Some(v) = cfg.verify.as_mut() {
            v.seed = seed;
        } else if command == Command::Verify {
            cfg.verify = Some(VerifySpec { seed, ..VerifySpec::default() });
        }
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let started = Instant::now();
    let mut out_dir = args.out.clone();
    let result = load(&args).and_then(|cfg| {
        let dir = out_dir.get_or_insert_with(|| PathBuf::from(&cfg.output.dir)).clone();
        let (summary, out) = run_summary(&cfg)?;
        emit_outputs(&dir, &summary, &out.tables)?;
        Ok((summary, dir))
    });
    match result {
        Ok((summary, dir)) => {
            for c in summary.checks.iter().filter(|c| !c.pass) {
                eprintln!("FAIL {}: {} (threshold {})", c.name, c.value, c.threshold);
            }
            eprintln!(
                "{}: {} ({} checks, {:.1}s) -> {}",
                summary.command,
                summary.status,
                summary.checks.len(),
                started.elapsed().as_secs_f64(),
                dir.display()
            );
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(err) => {
            if let Some(dir) = &out_dir {
                emit_error(dir, &err);
            }
            eprintln!("{}", err.record());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
