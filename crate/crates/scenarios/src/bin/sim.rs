use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use bubblesim_scenarios::{compare_mode, load_scenario, run, PRESET_NAMES};
use clap::{Parser, Subcommand};

/// Free-surface liquid simulation with incompressible bubbles.
#[derive(Parser)]
#[command(name = "sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write diagnostics, images and a summary.
    Run {
        /// Config file or `preset:NAME`.
        scenario: String,
        /// Output directory (default: `out/<scenario name>`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of frames (default: from the config).
        #[arg(long)]
        frames: Option<usize>,
        /// Disable bubble constraints (plain free-surface solve).
        #[arg(long)]
        no_bubbles: bool,
        /// Write every assembled system in Matrix Market format.
        #[arg(long)]
        dump_matrix: bool,
    },
    /// Run the first frames with and without constraints and compare costs.
    Compare {
        scenario: String,
        #[arg(long)]
        frames: Option<usize>,
    },
    /// List the built-in scenarios.
    Presets,
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("SIM_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("SIM_THREADS must be a count, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match real_main() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn real_main() -> anyhow::Result<u8> {
    let cli = Cli::parse();
    configure_threads()?;
    match cli.command {
        Command::Presets => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(0)
        }
        Command::Run {
            scenario,
            out,
            frames,
            no_bubbles,
            dump_matrix,
        } => {
            let mut cfg = load_scenario(&scenario)?;
            if no_bubbles {
                cfg.bubbles_enabled = false;
            }
            if dump_matrix {
                cfg.output.dump_matrix = true;
            }
            let dir = out
                .or_else(|| cfg.output.directory.clone())
                .unwrap_or_else(|| {
                    PathBuf::from("out").join(if cfg.name.is_empty() {
                        "run"
                    } else {
                        &cfg.name
                    })
                });
            let outcome = run(&cfg, frames, Some(&dir))?;
            let s = &outcome.summary;
            println!(
                "{}: {} frames, {} substeps, mean CG iterations {:.1}, wall {:.2}s -> {}",
                s.scenario,
                s.frames_completed,
                s.substeps,
                s.mean_cg_iterations,
                s.wall_time,
                dir.display()
            );
            if let Some(e) = &s.error {
                eprintln!("aborted: {e}");
            }
            Ok(outcome.exit_code() as u8)
        }
        Command::Compare { scenario, frames } => {
            let cfg = load_scenario(&scenario)?;
            let report = compare_mode(&cfg, frames)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            let failed =
                report.with_bubbles.error.is_some() || report.without_bubbles.error.is_some();
            Ok(if failed { 2 } else { 0 })
        }
    }
}
