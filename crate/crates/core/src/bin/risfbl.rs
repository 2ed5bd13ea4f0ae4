use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use risfbl::fbl::NoiseMode;
use risfbl::momentfit::ParamMode;
use risfbl::sweep::{crossover_report, run_and_write, Evaluator, Experiment, ExperimentConfig, OutputFormat, ScanOptions};
use risfbl::Error;

const MIN_CLI_TRIALS: u64 = 1000;

#[derive(Parser)]
#[command(name = "risfbl", version, about = "BLER and goodput of RIS-assisted short-packet links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a sweep and write CSV or JSON.
    Run(RunArgs),
    /// Print power and coefficient thresholds as JSON.
    Crossover(ConfigArgs),
    /// Check a config without computing anything.
    Validate(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Preset: fig1, fig2, fig2-n10, fig2-n15, fig3, fig5, custom.
    #[arg(long)]
    experiment: Option<Experiment>,
    /// JSON config merged over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Only evaluate with the RIS noise term removed.
    #[arg(long)]
    no_ris_noise: bool,
    /// paper (the fits exactly as printed) or derived.
    #[arg(long)]
    param_mode: Option<ParamMode>,
    /// Comma-separated: analytical|a, asymptotic|s, monte-carlo|m, goodput|g.
    #[arg(long, value_delimiter = ',')]
    evaluators: Option<Vec<Evaluator>>,
}

fn load(args: &ConfigArgs) -> Result<ExperimentConfig, Error> {
    match &args.config {
        Some(path) => ExperimentConfig::load(path, args.experiment),
        None => ExperimentConfig::for_experiment(args.experiment.unwrap_or_default()),
    }
}

fn apply_overrides(cfg: &mut ExperimentConfig, a: &RunArgs) -> Result<(), Error> {
    if let Some(p) = &a.output {
        cfg.output.path = Some(p.clone());
        if p.extension().is_some_and(|e| e == "json") {
            cfg.output.format = OutputFormat::Json;
        }
    }
    if let Some(f) = &a.format {
        cfg.output.format = match f.as_str() {
            "csv" => OutputFormat::Csv,
            "json" => OutputFormat::Json,
            other => {
                return Err(Error::Config {
                    field: "output.format".into(),
                    msg: format!("unknown format '{other}'"),
                })
            }
        };
    }
    if let Some(t) = a.trials {
        cfg.mc.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.mc.seed = s;
    }
    if let Some(w) = a.workers {
        cfg.mc.workers = w;
    }
    if a.no_ris_noise {
        cfg.modes.noise = vec![NoiseMode::NoRisNoise];
    }
    if let Some(pm) = a.param_mode {
        cfg.modes.param_mode = pm;
    }
    if let Some(ev) = &a.evaluators {
        cfg.evaluators = ev.clone();
    }
    cfg.validate()?;
    let sampled = cfg.evaluators.contains(&Evaluator::MonteCarlo);
    if sampled && cfg.mc.trials < MIN_CLI_TRIALS {
        return Err(Error::Config {
            field: "mc.trials".into(),
            msg: format!("at least {MIN_CLI_TRIALS} trials needed for Monte Carlo columns"),
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(args) => load(args).and_then(|cfg| {
            let line = format!("ok: {} ({} points, {} series)", cfg.experiment.name(), cfg.sweep.points, cfg.series.len());
            writeln!(std::io::stdout(), "{line}")?;
            Ok(0)
        }),
        Command::Crossover(args) => load(args).and_then(|cfg| {
            let report = crossover_report(&cfg, ScanOptions::default())?;
            writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&report)?)?;
            Ok(0)
        }),
        Command::Run(args) => load(&args.cfg).and_then(|mut cfg| {
            apply_overrides(&mut cfg, args)?;
            let (out, code) = run_and_write(&cfg)?;
            if code != 0 {
                eprintln!("{} cell(s) failed; see the error column", out.failures());
            }
            Ok(code)
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config { .. } | Error::Json(_) => 1,
                Error::Io(_) => 1,
                _ => 2,
            })
        }
    }
}
