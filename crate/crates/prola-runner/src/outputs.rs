//! Result files: CSV tables, SVG plots, and the metadata echo.
//!
//! Every file is written to a temporary sibling and renamed into place, so
//! a failed run never leaves a truncated table behind. All numbers use
//! Rust's shortest round-trip float formatting; identical results produce
//! identical bytes. Arm indices are 1-based in every file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ExpandedEnvironment, ExperimentConfig};
use crate::error::RunnerError;
use crate::experiment::AggregateResult;
use crate::svg::{self, Series};

/// Echo of everything that determined the run.
#[derive(Serialize)]
struct Metadata<'a> {
    /// Implementation version (crate version of the runner).
    version: &'static str,
    /// The random generator family and stream layout.
    generator: &'static str,
    /// The fully resolved config; feeding this back to `run` reproduces
    /// the experiment.
    config: &'a ExperimentConfig,
    /// The concrete reward process after preset expansion.
    expanded_environment: &'a ExpandedEnvironment,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunnerError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    std::io::Write::write_all(&mut tmp, bytes)?;
    tmp.persist(path).map_err(|e| RunnerError::Io(e.error))?;
    Ok(())
}

fn push_file(
    files: &mut Vec<PathBuf>,
    dir: &Path,
    name: &str,
    bytes: &[u8],
) -> Result<(), RunnerError> {
    let path = dir.join(name);
    write_atomic(&path, bytes)?;
    files.push(path);
    Ok(())
}

fn runs_csv(result: &AggregateResult) -> String {
    let mut out = String::from("replication,seed,g_max,g_policy,weak_regret,best_arm\n");
    for (replication, (seed, report)) in result.reports.iter().enumerate() {
        let _ = writeln!(
            out,
            "{replication},{seed},{},{},{},{}",
            report.g_max,
            report.g_policy,
            report.weak_regret,
            report.best_arm + 1
        );
    }
    out
}

fn frequency_csv(result: &AggregateResult) -> String {
    let mut out = String::from("arm,frequency\n");
    for (arm, frequency) in result.mean_play_frequency.iter().enumerate() {
        let _ = writeln!(out, "{},{frequency}", arm + 1);
    }
    out
}

fn trajectory_csv(result: &AggregateResult) -> String {
    let mut out = String::from("round,arm,probability\n");
    for (round, probs) in result.snapshot_rounds.iter().zip(&result.mean_trajectory) {
        for (arm, probability) in probs.iter().enumerate() {
            let _ = writeln!(out, "{round},{},{probability}", arm + 1);
        }
    }
    out
}

fn violations_csv(rewards: &[prola::env::RewardVector]) -> String {
    let mut out = String::from("round,arm,reward\n");
    for (i, row) in rewards.iter().enumerate() {
        for (arm, value) in row.values().iter().enumerate() {
            let _ = writeln!(out, "{},{},{value}", i + 1, arm + 1);
        }
    }
    out
}

/// Writes the full file set for one experiment into `dir`, creating it if
/// needed. Returns the paths written.
pub fn write_outputs(
    config: &ExperimentConfig,
    result: &AggregateResult,
    dir: &Path,
) -> Result<Vec<PathBuf>, RunnerError> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();

    push_file(&mut files, dir, "runs.csv", runs_csv(result).as_bytes())?;
    push_file(&mut files, dir, "frequency.csv", frequency_csv(result).as_bytes())?;
    push_file(&mut files, dir, "trajectory.csv", trajectory_csv(result).as_bytes())?;

    if let Some(detail) = &result.single_run {
        push_file(
            &mut files,
            dir,
            "violations.csv",
            violations_csv(&detail.rewards).as_bytes(),
        )?;

        let plays: Vec<(u64, usize)> = detail
            .plays
            .iter()
            .enumerate()
            .map(|(i, arm)| (i as u64 + 1, *arm))
            .collect();
        let raster = svg::raster(
            &format!("{}: played intersection per round", config.name),
            "round",
            "intersection",
            &plays,
            config.k,
            config.t,
        );
        push_file(&mut files, dir, "play_raster.svg", raster.as_bytes())?;

        let events: Vec<(u64, usize)> = detail
            .rewards
            .iter()
            .enumerate()
            .flat_map(|(i, row)| {
                row.values()
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v == 1)
                    .map(move |(arm, _)| (i as u64 + 1, arm))
            })
            .collect();
        let violations = svg::raster(
            &format!("{}: violations per round", config.name),
            "round",
            "intersection",
            &events,
            config.k,
            config.t,
        );
        push_file(&mut files, dir, "violation_raster.svg", violations.as_bytes())?;
    }

    let regret_curve = svg::line_chart(
        &format!("{}: weak regret over time", config.name),
        "round",
        "mean weak regret",
        &[Series {
            label: "mean over replications".into(),
            points: result
                .snapshot_rounds
                .iter()
                .zip(&result.mean_running_regret)
                .map(|(round, regret)| (*round as f64, *regret))
                .collect(),
        }],
    );
    push_file(&mut files, dir, "regret_vs_t.svg", regret_curve.as_bytes())?;

    let averaged_curve = svg::line_chart(
        &format!("{}: time-averaged weak regret", config.name),
        "round",
        "mean weak regret / round",
        &[Series {
            label: "mean over replications".into(),
            points: result
                .snapshot_rounds
                .iter()
                .zip(&result.mean_running_regret)
                .map(|(round, regret)| (*round as f64, regret / *round as f64))
                .collect(),
        }],
    );
    push_file(&mut files, dir, "regret_time_averaged.svg", averaged_curve.as_bytes())?;

    let trajectory = svg::line_chart(
        &format!("{}: probability of the best intersection", config.name),
        "round",
        "mean play probability",
        &[Series {
            label: "best intersection".into(),
            points: result
                .snapshot_rounds
                .iter()
                .zip(&result.mean_best_arm_probability)
                .map(|(round, probability)| (*round as f64, *probability))
                .collect(),
        }],
    );
    push_file(&mut files, dir, "bi_probability.svg", trajectory.as_bytes())?;

    let metadata = Metadata {
        version: env!("CARGO_PKG_VERSION"),
        generator: "chacha8 (policy stream 0, environment stream 1, seed = base_seed + replication)",
        config,
        expanded_environment: &config.expanded_environment()?,
    };
    let metadata_toml = toml::to_string_pretty(&metadata)
        .map_err(|e| RunnerError::Validation(format!("metadata serialization: {e}")))?;
    push_file(&mut files, dir, "metadata.toml", metadata_toml.as_bytes())?;

    Ok(files)
}

/// One row of a sweep summary.
pub struct SweepRow {
    pub k: usize,
    pub mean_weak_regret: f64,
    pub std_weak_regret: f64,
    pub output_dir: PathBuf,
}

/// Writes the combined sweep summary CSV and the regret-vs-K bar chart.
pub fn write_sweep_summary(
    name: &str,
    rows: &[SweepRow],
    dir: &Path,
) -> Result<Vec<PathBuf>, RunnerError> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();

    let mut out = String::from("k,mean_weak_regret,std_weak_regret,output_dir\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            row.k,
            row.mean_weak_regret,
            row.std_weak_regret,
            row.output_dir.display()
        );
    }
    push_file(&mut files, dir, "sweep_summary.csv", out.as_bytes())?;

    let bars: Vec<(String, f64)> = rows
        .iter()
        .map(|row| (format!("k={}", row.k), row.mean_weak_regret))
        .collect();
    let chart = svg::bar_chart(
        &format!("{name}: mean weak regret by problem size"),
        "intersections",
        "mean weak regret",
        &bars,
    );
    push_file(&mut files, dir, "regret_vs_k.svg", chart.as_bytes())?;

    Ok(files)
}
