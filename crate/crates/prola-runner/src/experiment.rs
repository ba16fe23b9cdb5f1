//! The replication engine: seeded simulation of policy against
//! environment, per-run metrics, and cross-replication aggregation.
//!
//! Replication `r` draws its policy and environment streams from
//! `base_seed + r`, so runs are reproducible one replication at a time and
//! independent of execution order. Replications run in parallel; results
//! are collected in replication order and aggregated serially with
//! compensated sums, which keeps every output byte independent of the
//! degree of parallelism.

use rayon::prelude::*;

use prola::env::{FixedEnv, RewardVector};
use prola::metrics::{
    self, distribution_trajectory, play_frequency, running_weak_regret, stable_mean, weak_regret,
    RegretReport, RunTrace,
};
use prola::policy::{PlayDistribution, PolicyState, RoundRecord};
use prola::stream;

use crate::config::{ExperimentConfig, PolicyChoice};
use crate::error::RunnerError;

/// One replication's trace plus its seeds.
pub struct ReplicationRun {
    pub replication: u64,
    pub seed: u64,
    pub trace: RunTrace,
}

/// Simulates one replication of the configured experiment.
pub fn run_replication(
    config: &ExperimentConfig,
    replication: u64,
) -> Result<ReplicationRun, RunnerError> {
    let seed = stream::replication_seed(config.base_seed, replication);
    let mut env = config.build_environment(stream::env_rng(config.base_seed, replication))?;

    // The full violation pattern is realized up front: regret accounting
    // needs every cell, and the pattern must not depend on the policy.
    let matrix = (1..=config.t)
        .map(|t| env.rewards_at(t))
        .collect::<Result<Vec<_>, _>>()?;

    let mut policy_rng = stream::policy_rng(config.base_seed, replication);
    let records = match config.policy {
        PolicyChoice::Prola => {
            let mut state = PolicyState::new(config.policy_params()?)?;
            let mut replay = FixedEnv::from_reward_vectors(matrix.clone())?;
            (0..config.t)
                .map(|_| state.run_round(&mut replay, &mut policy_rng))
                .collect::<Result<Vec<_>, _>>()?
        }
        PolicyChoice::UniformRandom => {
            let dist = PlayDistribution::uniform(config.k)?;
            baseline_records(&matrix, &dist, &mut policy_rng)
        }
        PolicyChoice::OracleBestFixed => {
            let (_, best_arm) = metrics::g_max(&matrix)?;
            let dist = PlayDistribution::point_mass(config.k, best_arm)?;
            baseline_records(&matrix, &dist, &mut policy_rng)
        }
    };

    let trace = RunTrace::new(records, matrix)?;
    Ok(ReplicationRun { replication, seed, trace })
}

/// Drives a non-learning policy with a fixed per-round distribution,
/// consuming the policy stream exactly like the learner does.
fn baseline_records(
    matrix: &[RewardVector],
    dist: &PlayDistribution,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Vec<RoundRecord> {
    matrix
        .iter()
        .enumerate()
        .map(|(i, rewards)| {
            let pair = dist.sample_pair(rng);
            RoundRecord {
                round: i as u64 + 1,
                played: pair.played,
                observed: pair.observed,
                observed_reward: rewards.get(pair.observed),
                played_reward: rewards.get(pair.played),
                distribution: dist.clone(),
            }
        })
        .collect()
}

/// Everything kept from one replication after its trace is reduced.
struct ReplicationSummary {
    seed: u64,
    report: RegretReport,
    play_frequency: Vec<f64>,
    /// Per snapshot: the recorded distribution over arms.
    trajectory: Vec<Vec<f64>>,
    /// Per snapshot: probability of this run's best (hindsight) arm.
    best_arm_probability: Vec<f64>,
    /// Per snapshot: running weak regret.
    running_regret: Vec<i64>,
}

/// Raster detail kept for single-replication runs.
pub struct SingleRunDetail {
    pub plays: Vec<usize>,
    pub rewards: Vec<RewardVector>,
}

/// Aggregated experiment outcome.
pub struct AggregateResult {
    /// Per replication, in replication order: (seed, report).
    pub reports: Vec<(u64, RegretReport)>,
    pub mean_weak_regret: f64,
    pub std_weak_regret: f64,
    /// Mean fraction of rounds each arm was played.
    pub mean_play_frequency: Vec<f64>,
    /// Rounds at which trajectories were sampled.
    pub snapshot_rounds: Vec<u64>,
    /// Mean play probability per snapshot and arm.
    pub mean_trajectory: Vec<Vec<f64>>,
    /// Mean probability of each run's own best arm, per snapshot.
    pub mean_best_arm_probability: Vec<f64>,
    /// Mean running weak regret per snapshot.
    pub mean_running_regret: Vec<f64>,
    /// Present only when the experiment has a single replication.
    pub single_run: Option<SingleRunDetail>,
}

fn summarize(
    run: &ReplicationRun,
    snapshot_every: u64,
) -> Result<ReplicationSummary, RunnerError> {
    let report = weak_regret(&run.trace);
    let snapshots = distribution_trajectory(&run.trace, snapshot_every);
    Ok(ReplicationSummary {
        seed: run.seed,
        report,
        play_frequency: play_frequency(&run.trace, None)?,
        best_arm_probability: snapshots
            .iter()
            .map(|(_, dist)| dist.probs()[report.best_arm])
            .collect(),
        trajectory: snapshots
            .into_iter()
            .map(|(_, dist)| dist.probs().to_vec())
            .collect(),
        running_regret: running_weak_regret(&run.trace, snapshot_every)
            .into_iter()
            .map(|(_, regret)| regret)
            .collect(),
    })
}

/// Runs all replications (in parallel when a rayon pool allows) and
/// aggregates. Identical configs produce identical results regardless of
/// thread count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<AggregateResult, RunnerError> {
    let snapshot_every = config.snapshot_interval();
    let replications: Vec<u64> = (0..config.replications).collect();

    let mut single_run = None;
    let summaries: Vec<ReplicationSummary> = if config.replications == 1 {
        // Keep the trace detail around for raster outputs.
        let run = run_replication(config, 0)?;
        let summary = summarize(&run, snapshot_every)?;
        single_run = Some(SingleRunDetail {
            plays: run.trace.records().iter().map(|r| r.played).collect(),
            rewards: run.trace.rewards().to_vec(),
        });
        vec![summary]
    } else {
        replications
            .par_iter()
            .map(|&replication| {
                let run = run_replication(config, replication)?;
                summarize(&run, snapshot_every)
            })
            .collect::<Result<Vec<_>, _>>()?
    };

    let snapshot_rounds: Vec<u64> = (0..config.t).step_by(snapshot_every as usize)
        .map(|i| i + 1)
        .collect();
    debug_assert_eq!(snapshot_rounds.len(), summaries[0].trajectory.len());

    let regrets: Vec<f64> = summaries
        .iter()
        .map(|s| s.report.weak_regret as f64)
        .collect();
    let (mean_weak_regret, std_weak_regret) = metrics::mean_and_std(&regrets);

    let mean_play_frequency = mean_across(
        summaries.iter().map(|s| s.play_frequency.as_slice()),
        config.k,
    );

    let snapshots = snapshot_rounds.len();
    let mut mean_trajectory = Vec::with_capacity(snapshots);
    let mut mean_best_arm_probability = Vec::with_capacity(snapshots);
    let mut mean_running_regret = Vec::with_capacity(snapshots);
    for i in 0..snapshots {
        mean_trajectory.push(mean_across(
            summaries.iter().map(|s| s.trajectory[i].as_slice()),
            config.k,
        ));
        mean_best_arm_probability.push(stable_mean(
            &summaries
                .iter()
                .map(|s| s.best_arm_probability[i])
                .collect::<Vec<_>>(),
        ));
        mean_running_regret.push(stable_mean(
            &summaries
                .iter()
                .map(|s| s.running_regret[i] as f64)
                .collect::<Vec<_>>(),
        ));
    }

    Ok(AggregateResult {
        reports: summaries.iter().map(|s| (s.seed, s.report)).collect(),
        mean_weak_regret,
        std_weak_regret,
        mean_play_frequency,
        snapshot_rounds,
        mean_trajectory,
        mean_best_arm_probability,
        mean_running_regret,
        single_run,
    })
}

/// Per-component compensated mean of equally sized slices.
fn mean_across<'a, I: Iterator<Item = &'a [f64]>>(rows: I, width: usize) -> Vec<f64> {
    let rows: Vec<&[f64]> = rows.collect();
    (0..width)
        .map(|arm| stable_mean(&rows.iter().map(|r| r[arm]).collect::<Vec<_>>()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::load_config;

    fn bernoulli_config(policy: &str, replications: u64) -> ExperimentConfig {
        load_config(&format!(
            r#"
            name = "test"
            k = 3
            t = 200
            policy = "{policy}"
            replications = {replications}
            base_seed = 7
            output_dir = "unused"

            [environment]
            kind = "bernoulli"
            probs = [0.1, 0.7, 0.3]
            "#
        ))
        .unwrap()
    }

    #[test]
    fn oracle_has_zero_regret() {
        let config = bernoulli_config("oracle-best-fixed", 4);
        let result = run_experiment(&config).unwrap();
        for (_, report) in &result.reports {
            assert_eq!(report.weak_regret, 0);
        }
        assert_eq!(result.mean_weak_regret, 0.0);
    }

    #[test]
    fn replications_have_distinct_seeds_and_matrices() {
        let config = bernoulli_config("prola", 3);
        let a = run_replication(&config, 0).unwrap();
        let b = run_replication(&config, 1).unwrap();
        assert_eq!(a.seed, 7);
        assert_eq!(b.seed, 8);
        assert_ne!(a.trace.rewards(), b.trace.rewards());
    }

    #[test]
    fn rerunning_a_replication_is_deterministic() {
        let config = bernoulli_config("prola", 1);
        let a = run_replication(&config, 0).unwrap();
        let b = run_replication(&config, 0).unwrap();
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn environment_is_identical_across_policies() {
        let prola = run_replication(&bernoulli_config("prola", 1), 0).unwrap();
        let uniform = run_replication(&bernoulli_config("uniform-random", 1), 0).unwrap();
        assert_eq!(prola.trace.rewards(), uniform.trace.rewards());
    }

    #[test]
    fn single_replication_keeps_raster_detail() {
        let config = bernoulli_config("prola", 1);
        let result = run_experiment(&config).unwrap();
        let detail = result.single_run.expect("single run keeps detail");
        assert_eq!(detail.plays.len(), 200);
        assert_eq!(detail.rewards.len(), 200);
        assert!(result.snapshot_rounds.starts_with(&[1, 3, 5]));
    }

    #[test]
    fn aggregation_matches_naive_mean() {
        let config = bernoulli_config("prola", 8);
        let result = run_experiment(&config).unwrap();
        let naive: f64 = result
            .reports
            .iter()
            .map(|(_, r)| r.weak_regret as f64)
            .sum::<f64>()
            / 8.0;
        assert!((result.mean_weak_regret - naive).abs() < 1e-9);
    }
}
