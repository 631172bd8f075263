use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spindd_lab::output::write_outputs;
use spindd_lab::presets::{preset_names, preset_value};
use spindd_lab::{run_preset, ExperimentConfig, LabError};

#[derive(Parser)]
#[command(name = "spindd", version, about = "Run spin-chain decoupling experiments from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config and write CSV tables and a metadata sidecar.
    Run {
        config: PathBuf,
        /// Worker threads for noise realizations.
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Also write one SVG per panel.
        #[arg(long)]
        svg: bool,
    },
    /// List the shipped presets.
    ListPresets,
    /// Parse and check a config without running it.
    Validate { config: PathBuf },
}

fn run(cli: Cli) -> Result<(), LabError> {
    match cli.command {
        Command::ListPresets => {
            for name in preset_names() {
                let value = preset_value(name)?;
                let description = value.get("description").and_then(|d| d.as_str()).unwrap_or("");
                println!("{name:<22} {description}");
            }
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            println!("{}: ok (preset {}, {} panels)", config.display(), cfg.preset, cfg.panels.len());
        }
        Command::Run { config, jobs, out, seed, svg } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if let Some(seed) = seed {
                cfg.noise.seed = seed;
            }
            if let Some(out) = out {
                cfg.output.dir = out;
            }
            cfg.output.svg |= svg;
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(jobs) = jobs {
                pool = pool.num_threads(jobs.max(1));
            }
            let pool = pool.build().map_err(|e| LabError::Config(e.to_string()))?;
            let result = pool.install(|| run_preset(&cfg))?;
            for path in write_outputs(&result, &cfg.output.dir, cfg.output.svg)? {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
