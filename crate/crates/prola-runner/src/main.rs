//! Command-line front end: seeded experiment runs, size sweeps, preset
//! listing, and config validation.
//!
//! Exit codes: 0 success, 2 usage, 3 config parse/validation, 4 runtime.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use prola_runner::config::{self, EnvKind, ExperimentConfig};
use prola_runner::error::RunnerError;
use prola_runner::outputs::{self, SweepRow};
use prola_runner::{experiment, presets};

#[derive(Parser)]
#[command(
    name = "prola",
    version,
    about = "Decoupled play/observe bandit experiments",
    after_help = "The output directory comes from --out, then the PROLA_OUT_DIR environment \
                  variable, then output_dir in the config."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        /// Path to the TOML experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for replications (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the config once per problem size and write a combined summary.
    Sweep {
        /// Path to the TOML experiment config (environment must be a
        /// case-study preset).
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated intersection counts, e.g. 10,20,30,40,50.
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for replications (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Inspect the shipped environment presets.
    Presets {
        #[command(subcommand)]
        action: PresetsAction,
    },
    /// Parse and validate a config file without running it.
    Validate {
        /// Path to the TOML experiment config.
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum PresetsAction {
    /// List preset names, sizes, and their probability vectors.
    List,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), RunnerError> {
    match cli.command {
        Command::Run { config, seed, out, threads } => {
            let mut cfg = config::load_config_path(&config)?;
            if let Some(seed) = seed {
                cfg.base_seed = seed;
            }
            let dir = output_dir(&cfg, out);
            with_threads(threads, || run_one(&cfg, dir))
        }
        Command::Sweep { config, k, out, threads } => {
            // Keep the raw config: per-size runs re-derive gamma/eta
            // defaults unless the file pinned them.
            let cfg = config::parse_config_path(&config)?;
            cfg.clone().resolve()?;
            with_threads(threads, || sweep(&cfg, &k, out))
        }
        Command::Presets { action: PresetsAction::List } => list_presets(),
        Command::Validate { config } => {
            let cfg = config::load_config_path(&config)?;
            let policy = match cfg.policy {
                config::PolicyChoice::Prola => "prola",
                config::PolicyChoice::UniformRandom => "uniform-random",
                config::PolicyChoice::OracleBestFixed => "oracle-best-fixed",
            };
            println!(
                "ok: {} (k={}, t={}, gamma={}, eta={}, policy={policy})",
                cfg.name,
                cfg.k,
                cfg.t,
                cfg.gamma.expect("resolved"),
                cfg.eta.expect("resolved"),
            );
            Ok(())
        }
    }
}

/// --out beats PROLA_OUT_DIR beats the config's output_dir.
fn output_dir(cfg: &ExperimentConfig, out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| std::env::var_os("PROLA_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| cfg.output_dir.clone())
}

fn with_threads<T>(
    threads: Option<usize>,
    body: impl FnOnce() -> Result<T, RunnerError> + Send,
) -> Result<T, RunnerError>
where
    T: Send,
{
    match threads {
        None => body(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| RunnerError::Validation(format!("--threads: {e}")))?;
            pool.install(body)
        }
    }
}

fn run_one(cfg: &ExperimentConfig, dir: PathBuf) -> Result<(), RunnerError> {
    let result = experiment::run_experiment(cfg)?;
    let files = outputs::write_outputs(cfg, &result, &dir)?;
    println!(
        "{}: {} replications of t={} done; mean weak regret {:.3} (std {:.3})",
        cfg.name, cfg.replications, cfg.t, result.mean_weak_regret, result.std_weak_regret
    );
    for file in files {
        println!("wrote {}", file.display());
    }
    Ok(())
}

fn sweep(cfg: &ExperimentConfig, sizes: &[usize], out: Option<PathBuf>) -> Result<(), RunnerError> {
    if cfg.environment.kind != EnvKind::Preset {
        return Err(RunnerError::Validation(
            "sweep needs a preset environment so it can re-derive rates per size".into(),
        ));
    }
    let base_preset = cfg.environment.name.as_deref().unwrap_or_default();
    let adaptive = match base_preset {
        "case-study" | "paper-k10" | "gen-k20" | "gen-k30" | "gen-k40" | "gen-k50" => "case-study",
        "case-study-shift" => "case-study-shift",
        other => {
            return Err(RunnerError::Validation(format!(
                "sweep does not know how to scale preset {other:?}"
            )))
        }
    };

    let root = output_dir(cfg, out);
    let mut rows = Vec::new();
    for &k in sizes {
        let mut sub = cfg.clone();
        sub.k = k;
        sub.name = format!("{}-k{k}", cfg.name);
        sub.environment.name = Some(adaptive.to_string());
        let sub = sub.resolve()?;

        let dir = root.join(format!("k{k}"));
        let result = experiment::run_experiment(&sub)?;
        outputs::write_outputs(&sub, &result, &dir)?;
        println!(
            "k={k}: mean weak regret {:.3} (std {:.3})",
            result.mean_weak_regret, result.std_weak_regret
        );
        rows.push(SweepRow {
            k,
            mean_weak_regret: result.mean_weak_regret,
            std_weak_regret: result.std_weak_regret,
            output_dir: dir,
        });
    }
    let files = outputs::write_sweep_summary(&cfg.name, &rows, &root)?;
    for file in files {
        println!("wrote {}", file.display());
    }
    Ok(())
}

fn list_presets() -> Result<(), RunnerError> {
    for info in presets::catalog() {
        match info.arms {
            Some(k) => {
                let probs = presets::case_study_probs(k)?;
                println!("{:<18} k={:<3} {}", info.name, k, info.description);
                println!("{:<18} rates: {:?}", "", probs);
            }
            None => {
                println!("{:<18} k=any {}", info.name, info.description);
            }
        }
    }
    Ok(())
}
