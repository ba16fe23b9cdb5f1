//! Regret and convergence accounting over recorded runs.
//!
//! All reward totals are exact integer sums over the realized reward
//! matrix; nothing here accumulates rewards in floating point. The weak
//! regret of a run is the gap to the best fixed arm in hindsight:
//!
//! ```text
//! g_max       = max_j sum_t rewards[t][j]
//! g_policy    = sum_t rewards[t][played(t)]
//! weak regret = g_max - g_policy
//! ```
//!
//! Ties in the best arm break to the lowest index so reports are
//! deterministic. Cross-replication averages use compensated summation so
//! aggregation does not depend on accumulation order.

use serde::{Deserialize, Serialize};

use crate::env::RewardVector;
use crate::error::Error;
use crate::policy::{PlayDistribution, RoundRecord};

/// A completed run: per-round records plus the full realized reward matrix
/// (including everything the policy never saw).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    records: Vec<RoundRecord>,
    rewards: Vec<RewardVector>,
}

impl RunTrace {
    pub fn new(records: Vec<RoundRecord>, rewards: Vec<RewardVector>) -> Result<Self, Error> {
        if records.len() != rewards.len() {
            return Err(Error::MalformedMatrix(format!(
                "{} records but {} reward rows",
                records.len(),
                rewards.len()
            )));
        }
        if records.is_empty() {
            return Err(Error::MalformedMatrix("empty trace".into()));
        }
        let num_arms = rewards[0].num_arms();
        for (record, row) in records.iter().zip(&rewards) {
            if row.num_arms() != num_arms || record.distribution.num_arms() != num_arms {
                return Err(Error::MalformedMatrix(
                    "inconsistent arm counts across rounds".into(),
                ));
            }
        }
        Ok(Self { records, rewards })
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    pub fn rewards(&self) -> &[RewardVector] {
        &self.rewards
    }

    pub fn horizon(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn num_arms(&self) -> usize {
        self.rewards[0].num_arms()
    }
}

/// Per-run regret summary.
///
/// `best_arm` is 0-based here and throughout the library; file formats and
/// reports index intersections from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegretReport {
    /// Realized total of the best fixed arm in hindsight.
    pub g_max: u64,
    /// Realized total collected by the policy's played arms.
    pub g_policy: u64,
    /// `g_max - g_policy`. Negative values are possible when a policy
    /// beats every fixed arm on an adversarial sequence.
    pub weak_regret: i64,
    /// Lowest-index arm attaining `g_max`.
    pub best_arm: usize,
}

/// Exact column sums of the reward matrix: the best fixed arm's total and
/// its (lowest) index.
pub fn g_max(rewards: &[RewardVector]) -> Result<(u64, usize), Error> {
    let first = rewards
        .first()
        .ok_or_else(|| Error::MalformedMatrix("empty reward matrix".into()))?;
    let num_arms = first.num_arms();
    let mut sums = vec![0u64; num_arms];
    for row in rewards {
        if row.num_arms() != num_arms {
            return Err(Error::MalformedMatrix(format!(
                "row width {} does not match {num_arms}",
                row.num_arms()
            )));
        }
        for (sum, value) in sums.iter_mut().zip(row.values()) {
            *sum += u64::from(*value);
        }
    }
    let (best_arm, best) = sums
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.cmp(b).then(j.cmp(i)))
        .expect("at least one arm");
    Ok((*best, best_arm))
}

/// Exact total reward collected on the played arms.
pub fn realized_reward(trace: &RunTrace) -> u64 {
    trace
        .records
        .iter()
        .zip(&trace.rewards)
        .map(|(record, row)| u64::from(row.get(record.played)))
        .sum()
}

/// Assembles the full regret report for a run.
pub fn weak_regret(trace: &RunTrace) -> RegretReport {
    let (g_max, best_arm) = g_max(&trace.rewards).expect("trace is non-empty");
    let g_policy = realized_reward(trace);
    RegretReport {
        g_max,
        g_policy,
        weak_regret: g_max as i64 - g_policy as i64,
        best_arm,
    }
}

/// Fraction of rounds each arm was played, over the whole run or an
/// inclusive 1-based round window.
pub fn play_frequency(trace: &RunTrace, window: Option<(u64, u64)>) -> Result<Vec<f64>, Error> {
    let horizon = trace.horizon();
    let (lo, hi) = window.unwrap_or((1, horizon));
    if lo < 1 || hi > horizon || lo > hi {
        return Err(Error::EmptyWindow(format!(
            "window [{lo}, {hi}] does not select any rounds of a {horizon}-round trace"
        )));
    }
    let mut counts = vec![0u64; trace.num_arms()];
    let mut rounds = 0u64;
    for record in &trace.records {
        if record.round >= lo && record.round <= hi {
            counts[record.played] += 1;
            rounds += 1;
        }
    }
    if rounds == 0 {
        return Err(Error::EmptyWindow(format!(
            "no recorded rounds inside [{lo}, {hi}]"
        )));
    }
    Ok(counts.iter().map(|c| *c as f64 / rounds as f64).collect())
}

/// The stored pre-update distributions of every `sample_every`-th round,
/// starting from the first record. These are exactly the distributions the
/// arms were sampled from; nothing is recomputed.
pub fn distribution_trajectory(
    trace: &RunTrace,
    sample_every: u64,
) -> Vec<(u64, &PlayDistribution)> {
    assert!(sample_every >= 1, "sample_every must be at least 1");
    trace
        .records
        .iter()
        .step_by(sample_every as usize)
        .map(|record| (record.round, &record.distribution))
        .collect()
}

/// Running weak regret after every `sample_every`-th round: the best fixed
/// arm so far minus the policy's total so far, both exact.
pub fn running_weak_regret(trace: &RunTrace, sample_every: u64) -> Vec<(u64, i64)> {
    assert!(sample_every >= 1, "sample_every must be at least 1");
    let mut column_sums = vec![0u64; trace.num_arms()];
    let mut policy_sum = 0u64;
    let mut out = Vec::new();
    for (i, (record, row)) in trace.records.iter().zip(&trace.rewards).enumerate() {
        for (sum, value) in column_sums.iter_mut().zip(row.values()) {
            *sum += u64::from(*value);
        }
        policy_sum += u64::from(row.get(record.played));
        if (i as u64).is_multiple_of(sample_every) {
            let best = *column_sums.iter().max().expect("at least one arm");
            out.push((record.round, best as i64 - policy_sum as i64));
        }
    }
    out
}

/// Neumaier-compensated sum; order-independent to well below 1e-9 relative
/// error for the magnitudes aggregated here.
pub fn stable_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for value in values {
        let t = sum + value;
        if sum.abs() >= value.abs() {
            compensation += (sum - t) + value;
        } else {
            compensation += (value - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

/// Compensated mean; 0 for an empty slice.
pub fn stable_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    stable_sum(values.iter().copied()) / values.len() as f64
}

/// Compensated mean and sample standard deviation (0 for fewer than two
/// values).
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let mean = stable_mean(values);
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let squares = stable_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (mean, (squares / (values.len() - 1) as f64).sqrt())
}
