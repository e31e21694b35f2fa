use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use photocorr::config::{load_config, OutputFormat, RunConfig};
use photocorr::output::write_result;
use photocorr::presets::{self, PRESETS};
use photocorr::sweep::{run_sweep_with, SweepOptions};
use photocorr::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "photocorr", version, about = "Photon correlations from a pair of dipole-coupled driven emitters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration file or a preset name and write the result table.
    Run {
        /// Path to a TOML config, or the name of a shipped preset.
        config: String,
        /// Override a config key, e.g. `--set emitter.rabi=25`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        workers: Option<usize>,
        /// Continue from a checkpoint written by an interrupted run.
        #[arg(long, value_name = "CHECKPOINT")]
        resume: Option<PathBuf>,
        /// Where to write checkpoints (defaults to output.checkpoint).
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long, value_parser = ["csv", "json"])]
        format: Option<String>,
        /// Leave out the wall-clock line so identical runs give identical files.
        #[arg(long)]
        no_timestamp: bool,
    },
    /// Inspect the shipped presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Check a configuration and print it with every default filled in.
    Validate {
        config: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// Names, descriptions and plotting recipes.
    List,
    /// Print the TOML of one preset.
    Show { name: String },
}

fn load(config: &str, overrides: &[String]) -> Result<RunConfig, Error> {
    let path = Path::new(config);
    if !path.exists() {
        if let Some(p) = presets::find(config) {
            return RunConfig::from_toml_str(p.toml, overrides, &format!("preset {}", p.name));
        }
    }
    load_config(path, overrides)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Presets { action } => {
            match action {
                PresetAction::List => {
                    // Ignore write errors so piping into `head` is quiet.
                    let mut out = std::io::stdout().lock();
                    for p in PRESETS {
                        let _ = writeln!(out, "{:<20} {}", p.name, p.summary);
                        let _ = writeln!(out, "{:<20} plot: {}", "", p.plot);
                    }
                }
                PresetAction::Show { name } => match presets::find(&name) {
                    Some(p) => print!("{}", p.toml),
                    None => {
                        eprintln!("error: no preset named `{name}`");
                        return ExitCode::from(EXIT_CONFIG);
                    }
                },
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config, overrides } => match load(&config, &overrides) {
            Ok(c) => {
                print!("{}", c.to_toml());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Run {
            config,
            overrides,
            workers,
            resume,
            checkpoint,
            out,
            format,
            no_timestamp,
        } => {
            let mut overrides = overrides;
            if let Some(w) = workers {
                overrides.push(format!("parallelism.workers={w}"));
            }
            if let Some(f) = &format {
                overrides.push(format!("output.format=\"{f}\""));
            }
            if no_timestamp {
                overrides.push("output.timestamp=false".into());
            }
            let cfg = match load(&config, &overrides) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let options = SweepOptions {
                checkpoint,
                resume,
                stop_after: None,
            };
            let table = match run_sweep_with(&cfg, &options) {
                Ok(t) => t,
                Err(e @ Error::Config { .. }) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_RUNTIME);
                }
            };
            let format: OutputFormat = cfg.output.format;
            let path = out.or_else(|| cfg.output.path.clone());
            let written = match &path {
                Some(p) => write_result(&table, p, format),
                None => match format {
                    OutputFormat::Csv => photocorr::output::write_csv(&table, &mut std::io::stdout().lock()),
                    OutputFormat::Json => {
                        let j = photocorr::output::JsonTable::from(&table);
                        serde_json::to_writer_pretty(std::io::stdout().lock(), &j)
                            .map_err(|e| Error::Io(e.into()))
                            .map(|_| println!())
                    }
                },
            };
            if let Err(e) = written {
                if matches!(&e, Error::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe) {
                    return ExitCode::SUCCESS;
                }
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_RUNTIME);
            }
            let flagged = table.flagged();
            if flagged > 0 || !table.complete {
                eprintln!("{flagged} of {} points flagged", table.rows.len());
                return ExitCode::from(EXIT_PARTIAL);
            }
            ExitCode::SUCCESS
        }
    }
}
