//! Command-line front end: `drop`, `power-sweep` and `frontier`.

pub mod config;
pub mod output;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map};

use crate::experiment::{run_frontier, run_power_sweep};
use config::{ConfigError, Origin, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "beamsim", version, about = "Energy/throughput simulator for massive MIMO mmWave downlinks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump user positions and path loss of one drop.
    Drop(RunArgs),
    /// Transceiver power breakdown against antenna count.
    PowerSweep(RunArgs),
    /// Energy-efficiency / throughput frontier over Monte-Carlo drops.
    Frontier(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// fwa-fig5, v2i-fig6 or power-fig3.
    #[arg(long)]
    pub preset: Option<String>,
    /// File of `key = value` lines applied over the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one key; repeatable.
    #[arg(long = "set", value_name = "K=V")]
    pub set: Vec<String>,
    #[arg(long, env = "BEAMSIM_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub drops: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Also render SVG charts.
    #[arg(long)]
    pub svg: bool,
    /// Worker thread cap (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn io_err(e: std::io::Error) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Parses arguments, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_RUNTIME
        }
    }
}

pub fn resolve(args: &RunArgs, default_preset: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::preset(args.preset.as_deref().unwrap_or(default_preset))?;
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    for assignment in &args.set {
        cfg.apply_override(assignment)?;
    }
    if let Some(seed) = args.seed {
        cfg.set("experiment.master_seed", &seed.to_string(), Origin::Flag("seed"))?;
    }
    if let Some(drops) = args.drops {
        cfg.set("experiment.n_drops", &drops.to_string(), Origin::Flag("drops"))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(command: &Command) -> Result<(), Failure> {
    let (name, args, default_preset) = match command {
        Command::Drop(a) => ("drop", a, "fwa-fig5"),
        Command::PowerSweep(a) => ("power-sweep", a, "power-fig3"),
        Command::Frontier(a) => ("frontier", a, "fwa-fig5"),
    };
    let cfg = resolve(args, default_preset)?;
    if args.threads == Some(0) {
        return Err(Failure::Config("--threads must be positive".into()));
    }
    std::fs::create_dir_all(&args.out).map_err(io_err)?;
    let start = Instant::now();
    let mut outputs = Vec::new();
    let mut extra = Map::new();
    let e = &cfg.experiment;

    match command {
        Command::Drop(_) => {
            let seed = e.drop_seed(0);
            let text = output::drop_csv(&cfg, seed).map_err(|e| Failure::Runtime(e.to_string()))?;
            outputs.push(output::write(&args.out, "drop.csv", &text).map_err(io_err)?);
            extra.insert("drop_seed".into(), json!(seed));
        }
        Command::PowerSweep(_) => {
            let sweeps = cfg
                .sweep
                .devices
                .iter()
                .map(|&device| {
                    run_power_sweep(
                        device,
                        &cfg.sweep.architectures,
                        &cfg.sweep.antennas,
                        &e.catalog,
                        cfg.sweep.hybrid_rf_chains,
                        e.sample_rate(),
                    )
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            let files = [
                ("power_sweep.csv", output::power_sweep_csv(&sweeps)),
                ("crossovers.csv", output::crossovers_csv(&sweeps)),
            ];
            for (file, text) in files {
                outputs.push(output::write(&args.out, file, &text).map_err(io_err)?);
            }
            if args.svg {
                let svg = output::power_chart(&sweeps).render();
                outputs.push(output::write(&args.out, "power_sweep.svg", &svg).map_err(io_err)?);
            }
        }
        Command::Frontier(_) => {
            let result = run_frontier(e, args.threads).map_err(|e| Failure::Runtime(e.to_string()))?;
            for c in result.curves.iter().filter(|c| c.n_failed > 0) {
                eprintln!(
                    "warning: {} x{}: {} of {} drops failed and were excluded",
                    c.arch.label(),
                    c.arch.streams_per_user,
                    c.n_failed,
                    result.n_drops
                );
            }
            let text = output::frontier_csv(&result);
            outputs.push(output::write(&args.out, "frontier.csv", &text).map_err(io_err)?);
            if args.svg {
                let svg = output::frontier_chart(&result).render();
                outputs.push(output::write(&args.out, "frontier.svg", &svg).map_err(io_err)?);
            }
            let failed: Map<_, _> = result
                .curves
                .iter()
                .map(|c| (format!("{} x{}", c.arch.label(), c.arch.streams_per_user), json!(c.n_failed)))
                .collect();
            extra.insert("failed_drops".into(), failed.into());
        }
    }

    let manifest_path = args.out.join("manifest.json");
    outputs.push(manifest_path.clone());
    let manifest = output::manifest(&output::ManifestInfo {
        command: name,
        config: &cfg,
        outputs: &outputs,
        threads: args.threads,
        duration_s: start.elapsed().as_secs_f64(),
        extra,
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Runtime(e.to_string()))?;
    std::fs::write(&manifest_path, text + "\n").map_err(io_err)?;
    for p in &outputs {
        println!("wrote {}", p.display());
    }
    Ok(())
}
