use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use optomech_switch::{run_cli, Formats, Invocation, TaskKind};

/// Steady states, spectra and switching metrics of a coupled-cavity
/// optomechanical system.
#[derive(Debug, Parser)]
#[command(name = "optomech-switch", version)]
struct Cli {
    /// bistability, spectrum, switch-metrics, hysteresis or sweep.
    #[arg(value_parser = parse_task)]
    task: TaskKind,
    /// Scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated subset of csv,json.
    #[arg(long, value_parser = Formats::parse_list)]
    format: Option<Formats>,
    /// Worker threads for sweep points.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
}

fn parse_task(s: &str) -> Result<TaskKind, String> {
    TaskKind::parse(s).ok_or_else(|| {
        let names: Vec<_> = TaskKind::ALL.iter().map(|k| k.as_str()).collect();
        format!("unknown task `{s}` (expected one of {})", names.join(", "))
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = run_cli(&Invocation {
        task: cli.task,
        config: &cli.config,
        out: &cli.out,
        formats: cli.format,
        jobs: cli.jobs.map(usize::from),
    });
    ExitCode::from(code as u8)
}
