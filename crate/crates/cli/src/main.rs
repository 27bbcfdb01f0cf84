use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use krein_cli::config::ScenarioConfig;
use krein_cli::{exit_code, presets, run_scenario, EXIT_INVALID};

#[derive(Parser)]
#[command(name = "krein", version, about = "Spectral diagnostics for half-line Sturm-Liouville and Krein systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a JSON config or a named preset.
    Run {
        /// Scenario configuration (JSON).
        #[arg(required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the presets.
    Presets,
}

fn load(config: Option<PathBuf>, preset: Option<String>) -> Result<(ScenarioConfig, PathBuf), Vec<String>> {
    if let Some(name) = preset {
        let cfg = presets::preset(&name).ok_or_else(|| {
            vec![format!("unknown preset `{name}`; run `krein presets` for the list")]
        })?;
        return Ok((cfg, PathBuf::from(".")));
    }
    let path = config.expect("clap requires a config or a preset");
    let text = std::fs::read_to_string(&path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
    let cfg = ScenarioConfig::from_json(&text)?;
    let base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    Ok((cfg, base))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Presets => {
            print!("{}", presets::catalog());
            ExitCode::SUCCESS
        }
        Command::Run { config, preset, out, threads, seed } => {
            let (mut cfg, base) = match load(config, preset) {
                Ok(c) => c,
                Err(errs) => {
                    eprintln!("invalid configuration:\n  {}", errs.join("\n  "));
                    return ExitCode::from(EXIT_INVALID as u8);
                }
            };
            if let Some(out) = out {
                cfg.out_dir = out;
            }
            if threads.is_some() {
                cfg.threads = threads;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            match run_scenario(&cfg, &base) {
                Ok(report) => {
                    for c in &report.checks {
                        let status = if c.passed { "PASS" } else { "FAIL" };
                        match (c.value, c.limit) {
                            (Some(v), Some(l)) => println!("{status} {}: {v:e} (limit {l:e}) {}", c.name, c.detail),
                            _ => println!("{status} {}: {}", c.name, c.detail),
                        }
                    }
                    println!("outputs in {}", cfg.out_dir.display());
                    ExitCode::from(exit_code(&report) as u8)
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
