use std::path::PathBuf;
use std::process::ExitCode;

use buqo::engine::Mode;
use buqo_cli::commands;
use buqo_cli::config::{CommandName, Overrides, RunConfig};
use clap::Parser;

#[derive(Debug, Parser)]
#[command(name = "buqo", version, about = "Hypothesis tests for image structure via convex feasibility")]
struct Cli {
    #[arg(value_enum)]
    command: CommandName,
    /// TOML file with flat dotted keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides one dotted key, e.g. `--set experiment.rows=32`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "pocs" => Ok(Mode::Pocs),
        "fb" => Ok(Mode::Fb),
        _ => Err(format!("unknown mode `{s}`, expected pocs or fb")),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let overrides = Overrides {
        seed: cli.seed,
        alpha: cli.alpha,
        eta: cli.eta,
        mode: cli.mode,
        out: cli.out,
        set: cli.set,
    };
    let result = RunConfig::load(cli.config.as_deref(), &overrides).and_then(|mut cfg| {
        cfg.command = Some(cli.command);
        commands::run(&cfg, cli.command)
    });
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
