//! Reward processes over `K` arms.
//!
//! An environment materializes one binary reward vector per round: entry
//! `j` is 1 when a violation occurs at intersection `j` during that
//! interval. The full vector is generated before the policy picks its
//! arms, and each environment owns its own random stream, so the realized
//! violation pattern never depends on what the policy plays or observes.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One round's binary rewards, one entry per arm.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardVector {
    values: Vec<u8>,
}

impl RewardVector {
    pub fn new(values: Vec<u8>) -> Result<Self, Error> {
        if values.is_empty() {
            return Err(Error::MalformedMatrix("empty reward vector".into()));
        }
        if let Some(bad) = values.iter().find(|v| **v > 1) {
            return Err(Error::MalformedMatrix(format!(
                "rewards must be 0 or 1, got {bad}"
            )));
        }
        Ok(Self { values })
    }

    pub fn num_arms(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, arm: usize) -> u8 {
        self.values[arm]
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }
}

/// Per-arm violation probabilities for a stationary Bernoulli process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliSpec {
    probs: Vec<f64>,
}

impl BernoulliSpec {
    pub fn new(probs: Vec<f64>) -> Result<Self, Error> {
        if probs.is_empty() {
            return Err(Error::InvalidSpec("no arm probabilities given".into()));
        }
        if let Some(bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidSpec(format!(
                "violation probabilities must lie in [0, 1], got {bad}"
            )));
        }
        Ok(Self { probs })
    }

    pub fn num_arms(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// A piecewise-stationary schedule: each segment names the round it takes
/// effect and the Bernoulli spec in force from then on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    segments: Vec<(u64, BernoulliSpec)>,
}

impl ScheduleSpec {
    /// Segments must be sorted by strictly increasing start round, begin at
    /// round 1, and agree on the arm count.
    pub fn new(segments: Vec<(u64, BernoulliSpec)>) -> Result<Self, Error> {
        let first = segments
            .first()
            .ok_or_else(|| Error::InvalidSpec("schedule has no segments".into()))?;
        if first.0 != 1 {
            return Err(Error::InvalidSpec(format!(
                "first segment must start at round 1, got {}",
                first.0
            )));
        }
        let num_arms = first.1.num_arms();
        for window in segments.windows(2) {
            if window[1].0 <= window[0].0 {
                return Err(Error::InvalidSpec(format!(
                    "segment starts must be strictly increasing, got {} after {}",
                    window[1].0, window[0].0
                )));
            }
        }
        if let Some((start, spec)) = segments.iter().find(|(_, s)| s.num_arms() != num_arms) {
            return Err(Error::InvalidSpec(format!(
                "segment starting at round {start} has {} arms, expected {num_arms}",
                spec.num_arms()
            )));
        }
        Ok(Self { segments })
    }

    pub fn num_arms(&self) -> usize {
        self.segments[0].1.num_arms()
    }

    pub fn segments(&self) -> &[(u64, BernoulliSpec)] {
        &self.segments
    }

    /// The spec in force at round `t`: the last segment starting at or
    /// before `t`.
    pub fn spec_at(&self, round: u64) -> &BernoulliSpec {
        let idx = self
            .segments
            .partition_point(|(start, _)| *start <= round)
            .saturating_sub(1);
        &self.segments[idx].1
    }
}

/// A reward process queried one round at a time.
pub trait Environment {
    fn num_arms(&self) -> usize;

    /// The reward vector for 1-based round `round`. Stochastic environments
    /// consume their own stream in ascending arm order, one draw per arm,
    /// regardless of the round index passed.
    fn rewards_at(&mut self, round: u64) -> Result<RewardVector, Error>;
}

/// Independent per-arm Bernoulli rewards with stationary probabilities.
#[derive(Debug, Clone)]
pub struct BernoulliEnv {
    spec: BernoulliSpec,
    rng: ChaCha8Rng,
}

impl BernoulliEnv {
    pub fn new(spec: BernoulliSpec, rng: ChaCha8Rng) -> Self {
        Self { spec, rng }
    }

    pub fn spec(&self) -> &BernoulliSpec {
        &self.spec
    }
}

fn draw_bernoulli(probs: &[f64], rng: &mut ChaCha8Rng) -> RewardVector {
    let values = probs
        .iter()
        .map(|p| u8::from(rng.gen::<f64>() < *p))
        .collect();
    RewardVector { values }
}

impl Environment for BernoulliEnv {
    fn num_arms(&self) -> usize {
        self.spec.num_arms()
    }

    fn rewards_at(&mut self, _round: u64) -> Result<RewardVector, Error> {
        Ok(draw_bernoulli(&self.spec.probs, &mut self.rng))
    }
}

/// Bernoulli rewards whose probabilities switch according to a schedule.
#[derive(Debug, Clone)]
pub struct ScheduleEnv {
    spec: ScheduleSpec,
    rng: ChaCha8Rng,
}

impl ScheduleEnv {
    pub fn new(spec: ScheduleSpec, rng: ChaCha8Rng) -> Self {
        Self { spec, rng }
    }

    pub fn spec(&self) -> &ScheduleSpec {
        &self.spec
    }
}

impl Environment for ScheduleEnv {
    fn num_arms(&self) -> usize {
        self.spec.num_arms()
    }

    fn rewards_at(&mut self, round: u64) -> Result<RewardVector, Error> {
        Ok(draw_bernoulli(self.spec.spec_at(round).probs(), &mut self.rng))
    }
}

/// A fixed, finite reward sequence: round `t` returns row `t` verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedEnv {
    rows: Vec<RewardVector>,
}

impl FixedEnv {
    pub fn from_rows(rows: Vec<Vec<u8>>) -> Result<Self, Error> {
        let rows = rows
            .into_iter()
            .map(RewardVector::new)
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_reward_vectors(rows)
    }

    pub fn from_reward_vectors(rows: Vec<RewardVector>) -> Result<Self, Error> {
        let first = rows
            .first()
            .ok_or_else(|| Error::MalformedMatrix("no rounds given".into()))?;
        let width = first.num_arms();
        if let Some((i, row)) = rows
            .iter()
            .enumerate()
            .find(|(_, r)| r.num_arms() != width)
        {
            return Err(Error::MalformedMatrix(format!(
                "row {} has {} columns, expected {width}",
                i + 1,
                row.num_arms()
            )));
        }
        Ok(Self { rows })
    }

    /// Reads a headerless CSV of 0/1 integers, one row per round, one
    /// column per arm.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, Error> {
        let mut csv_reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (i, record) in csv_reader.records().enumerate() {
            let record =
                record.map_err(|e| Error::MalformedMatrix(format!("row {}: {e}", i + 1)))?;
            let row = record
                .iter()
                .map(|field| match field.trim() {
                    "0" => Ok(0),
                    "1" => Ok(1),
                    other => Err(Error::MalformedMatrix(format!(
                        "row {}: expected 0 or 1, got {other:?}",
                        i + 1
                    ))),
                })
                .collect::<Result<Vec<u8>, _>>()?;
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    pub fn from_csv_path<P: AsRef<Path>>(path: P) -> Result<Self, Error> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    /// Writes the matrix back out in the same headerless CSV form; a
    /// write-then-read round trip reproduces the matrix bit-exactly.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), Error> {
        let mut csv_writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        for row in &self.rows {
            csv_writer
                .write_record(row.values().iter().map(|v| v.to_string()))
                .map_err(|e| Error::MalformedMatrix(e.to_string()))?;
        }
        csv_writer
            .flush()
            .map_err(|e| Error::MalformedMatrix(e.to_string()))?;
        Ok(())
    }

    /// Number of rounds available.
    pub fn horizon(&self) -> u64 {
        self.rows.len() as u64
    }

    pub fn rows(&self) -> &[RewardVector] {
        &self.rows
    }
}

impl Environment for FixedEnv {
    fn num_arms(&self) -> usize {
        self.rows[0].num_arms()
    }

    fn rewards_at(&mut self, round: u64) -> Result<RewardVector, Error> {
        if round == 0 || round > self.rows.len() as u64 {
            return Err(Error::HorizonExceeded {
                round,
                horizon: self.rows.len() as u64,
            });
        }
        Ok(self.rows[(round - 1) as usize].clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn reward_vector_rejects_non_binary() {
        assert!(RewardVector::new(vec![0, 1, 2]).is_err());
        assert!(RewardVector::new(vec![]).is_err());
        assert!(RewardVector::new(vec![0, 1, 1]).is_ok());
    }

    #[test]
    fn bernoulli_spec_rejects_out_of_range() {
        assert!(BernoulliSpec::new(vec![0.5, 1.1]).is_err());
        assert!(BernoulliSpec::new(vec![-0.1]).is_err());
        assert!(BernoulliSpec::new(vec![]).is_err());
        assert!(BernoulliSpec::new(vec![0.0, 1.0, 0.5]).is_ok());
    }

    #[test]
    fn all_zero_probabilities_never_reward() {
        let spec = BernoulliSpec::new(vec![0.0; 4]).unwrap();
        let mut env = BernoulliEnv::new(spec, rng(1));
        for t in 1..=100 {
            assert_eq!(env.rewards_at(t).unwrap().values(), &[0, 0, 0, 0]);
        }
    }

    #[test]
    fn all_one_probabilities_always_reward() {
        let spec = BernoulliSpec::new(vec![1.0; 3]).unwrap();
        let mut env = BernoulliEnv::new(spec, rng(2));
        for t in 1..=100 {
            assert_eq!(env.rewards_at(t).unwrap().values(), &[1, 1, 1]);
        }
    }

    #[test]
    fn empirical_means_match_probabilities() {
        // Law of large numbers at n = 100_000 with a three-sigma band.
        let probs = vec![0.04, 0.2, 0.17, 0.2, 0.08, 0.6, 0.16, 0.1, 0.12, 0.2];
        let spec = BernoulliSpec::new(probs.clone()).unwrap();
        let mut env = BernoulliEnv::new(spec, rng(3));
        let n = 100_000u64;
        let mut counts = vec![0u64; probs.len()];
        for t in 1..=n {
            let rewards = env.rewards_at(t).unwrap();
            for (count, value) in counts.iter_mut().zip(rewards.values()) {
                *count += u64::from(*value);
            }
        }
        for (arm, p) in probs.iter().enumerate() {
            let mean = counts[arm] as f64 / n as f64;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (mean - p).abs() <= 3.0 * sigma,
                "arm {arm}: mean {mean} vs p {p}"
            );
        }
    }

    #[test]
    fn same_seed_reproduces_the_sequence() {
        let spec = BernoulliSpec::new(vec![0.3, 0.7]).unwrap();
        let mut a = BernoulliEnv::new(spec.clone(), rng(9));
        let mut b = BernoulliEnv::new(spec, rng(9));
        for t in 1..=500 {
            assert_eq!(a.rewards_at(t).unwrap(), b.rewards_at(t).unwrap());
        }
    }

    #[test]
    fn schedule_single_segment_matches_bernoulli() {
        let spec = BernoulliSpec::new(vec![0.25, 0.75, 0.5]).unwrap();
        let schedule = ScheduleSpec::new(vec![(1, spec.clone())]).unwrap();
        let mut scheduled = ScheduleEnv::new(schedule, rng(4));
        let mut plain = BernoulliEnv::new(spec, rng(4));
        for t in 1..=200 {
            assert_eq!(scheduled.rewards_at(t).unwrap(), plain.rewards_at(t).unwrap());
        }
    }

    #[test]
    fn schedule_switches_at_segment_start() {
        let off = BernoulliSpec::new(vec![0.0, 0.0]).unwrap();
        let on = BernoulliSpec::new(vec![1.0, 1.0]).unwrap();
        let schedule = ScheduleSpec::new(vec![(1, off), (50, on)]).unwrap();
        let mut env = ScheduleEnv::new(schedule, rng(5));
        for t in 1..50 {
            assert_eq!(env.rewards_at(t).unwrap().values(), &[0, 0]);
        }
        for t in 50..=100 {
            assert_eq!(env.rewards_at(t).unwrap().values(), &[1, 1]);
        }
    }

    #[test]
    fn schedule_swap_shifts_empirical_means() {
        // Swap the hot arm from index 5 to index 1 halfway; the second
        // half's empirical mean at index 1 should approach 0.6.
        let mut before = vec![0.04, 0.2, 0.17, 0.2, 0.08, 0.6, 0.16, 0.1, 0.12, 0.2];
        let mut after = before.clone();
        after.swap(1, 5);
        let horizon = 20_000u64;
        let schedule = ScheduleSpec::new(vec![
            (1, BernoulliSpec::new(std::mem::take(&mut before)).unwrap()),
            (horizon / 2, BernoulliSpec::new(after).unwrap()),
        ])
        .unwrap();
        let mut env = ScheduleEnv::new(schedule, rng(6));
        let mut hits = 0u64;
        let mut rounds = 0u64;
        for t in 1..=horizon {
            let rewards = env.rewards_at(t).unwrap();
            if t >= horizon / 2 {
                hits += u64::from(rewards.get(1));
                rounds += 1;
            }
        }
        let mean = hits as f64 / rounds as f64;
        assert!((mean - 0.6).abs() <= 0.03, "second-half mean {mean}");
    }

    #[test]
    fn schedule_rejects_bad_segments() {
        let spec = BernoulliSpec::new(vec![0.5]).unwrap();
        assert!(ScheduleSpec::new(vec![]).is_err());
        assert!(ScheduleSpec::new(vec![(2, spec.clone())]).is_err());
        assert!(ScheduleSpec::new(vec![(1, spec.clone()), (1, spec.clone())]).is_err());
        let wider = BernoulliSpec::new(vec![0.5, 0.5]).unwrap();
        assert!(ScheduleSpec::new(vec![(1, spec), (5, wider)]).is_err());
    }

    #[test]
    fn fixed_env_returns_rows_verbatim() {
        let mut env = FixedEnv::from_rows(vec![vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(env.rewards_at(1).unwrap().values(), &[1, 0]);
        assert_eq!(env.rewards_at(2).unwrap().values(), &[0, 1]);
    }

    #[test]
    fn fixed_env_exhaustion_is_an_error() {
        let mut env = FixedEnv::from_rows(vec![vec![1, 0]]).unwrap();
        env.rewards_at(1).unwrap();
        let err = env.rewards_at(2).unwrap_err();
        assert!(matches!(
            err,
            Error::HorizonExceeded { round: 2, horizon: 1 }
        ));
    }

    #[test]
    fn fixed_env_rejects_ragged_or_invalid_input() {
        assert!(FixedEnv::from_rows(vec![vec![1, 0], vec![1]]).is_err());
        assert!(FixedEnv::from_rows(vec![vec![2, 0]]).is_err());
        assert!(FixedEnv::from_rows(vec![]).is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let env = FixedEnv::from_rows(vec![vec![1, 0, 1], vec![0, 0, 0], vec![1, 1, 1]]).unwrap();
        let mut bytes = Vec::new();
        env.write_csv(&mut bytes).unwrap();
        let reloaded = FixedEnv::from_csv_reader(bytes.as_slice()).unwrap();
        assert_eq!(env, reloaded);

        let mut again = Vec::new();
        reloaded.write_csv(&mut again).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn csv_rejects_junk() {
        assert!(FixedEnv::from_csv_reader("1,0\n0,x\n".as_bytes()).is_err());
        assert!(FixedEnv::from_csv_reader("1,0\n3,0\n".as_bytes()).is_err());
    }
}
