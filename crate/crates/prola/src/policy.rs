//! The decoupled play/observe exponential-weights policy.
//!
//! Two agents act each round: a *player* (the marked patrol car) commits to
//! arm `I_t` drawn from the play distribution and earns that arm's reward
//! without ever seeing it, while an *observer* (the unmarked car) watches a
//! different arm `J_t`, chosen uniformly from the remaining `K - 1` arms,
//! and reports what it saw. The policy rescales the observation by the
//! inverse probability of having observed that arm, which keeps the
//! estimate unbiased, and feeds it to an exponential-weights update.
//!
//! Per round, with weights `w_t(i)`:
//!
//! ```text
//! p_t(i)   = (1 - gamma) * w_t(i) / sum_j w_t(j) + gamma / K
//! I_t      ~ p_t                      (played, reward invisible)
//! J_t      ~ Uniform(arms != I_t)     (observed)
//! xhat     = x_t(J_t) * (K - 1) / (1 - p_t(J_t))
//! w_{t+1}(J_t) = w_t(J_t) * exp(eta * xhat)
//! ```
//!
//! Weights are stored as logarithms and the distribution is computed via a
//! max-subtracted softmax: `xhat` can reach `(K - 1) / (1 - p)` in a single
//! step, and raw weights overflow `f64` over long horizons.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::Error;

/// Tuning parameters: arm count, exploration rate, learning rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    /// Number of arms `K`. At least 2, so the observer always has a
    /// distinct arm to watch.
    pub num_arms: usize,
    /// Exploration rate `gamma` in `(0, 1)`: the probability mass spread
    /// uniformly over all arms, giving every arm a floor of `gamma / K`.
    pub gamma: f64,
    /// Learning rate `eta` in `(0, gamma / (2 (K - 1))]`.
    pub eta: f64,
}

impl PolicyParams {
    /// Validating constructor. See [`PolicyParams::validate`] for the bounds.
    pub fn new(num_arms: usize, gamma: f64, eta: f64) -> Result<Self, Error> {
        let params = Self { num_arms, gamma, eta };
        params.validate()?;
        Ok(params)
    }

    /// Upper bound on the learning rate: `gamma / (2 (K - 1))`.
    pub fn eta_bound(num_arms: usize, gamma: f64) -> f64 {
        gamma / (2.0 * (num_arms as f64 - 1.0))
    }

    /// Default parameters for a known horizon `T`:
    /// `gamma = min(0.5, sqrt(K ln K / T))` and `eta` at its upper bound
    /// `gamma / (2 (K - 1))`.
    pub fn default_for_horizon(num_arms: usize, horizon: u64) -> Result<Self, Error> {
        if num_arms < 2 {
            return Err(Error::InvalidParams(format!(
                "num_arms must be at least 2, got {num_arms}"
            )));
        }
        if horizon == 0 {
            return Err(Error::InvalidParams("horizon must be at least 1".into()));
        }
        let k = num_arms as f64;
        let gamma = (k * k.ln() / horizon as f64).sqrt().min(0.5);
        Self::new(num_arms, gamma, Self::eta_bound(num_arms, gamma))
    }

    /// Checks `K >= 2`, `0 < gamma < 1`, `0 < eta <= gamma / (2 (K - 1))`.
    pub fn validate(&self) -> Result<(), Error> {
        if self.num_arms < 2 {
            return Err(Error::InvalidParams(format!(
                "num_arms must be at least 2 (the observer needs a distinct arm), got {}",
                self.num_arms
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParams(format!(
                "gamma must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        let bound = Self::eta_bound(self.num_arms, self.gamma);
        if !(self.eta > 0.0 && self.eta <= bound) {
            return Err(Error::InvalidParams(format!(
                "eta must satisfy 0 < eta <= gamma/(2(K-1)) = {bound}, got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

/// Play probabilities over the `K` arms for one round.
///
/// Entries are nonnegative and sum to 1 (within 1e-12). Distributions
/// produced by [`PolicyState::distribution`] additionally respect the
/// exploration floor `gamma / K` and cap `1 - gamma (K - 1) / K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayDistribution {
    probs: Vec<f64>,
}

impl PlayDistribution {
    /// Wraps raw probabilities, checking they form a distribution.
    pub fn new(probs: Vec<f64>) -> Result<Self, Error> {
        if probs.len() < 2 {
            return Err(Error::InvalidParams(format!(
                "a play distribution needs at least 2 arms, got {}",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParams(
                "probabilities must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!(
                "probabilities must sum to 1 within 1e-12, got {sum}"
            )));
        }
        Ok(Self { probs })
    }

    /// Uniform distribution over `num_arms` arms.
    pub fn uniform(num_arms: usize) -> Result<Self, Error> {
        Self::new(vec![1.0 / num_arms as f64; num_arms])
    }

    /// All mass on a single arm.
    pub fn point_mass(num_arms: usize, arm: usize) -> Result<Self, Error> {
        if arm >= num_arms {
            return Err(Error::InvalidParams(format!(
                "arm {arm} out of range for {num_arms} arms"
            )));
        }
        let mut probs = vec![0.0; num_arms];
        probs[arm] = 1.0;
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_arms(&self) -> usize {
        self.probs.len()
    }

    /// Inverse-CDF sample: walks the cumulative sums in ascending arm order;
    /// the final bin absorbs any rounding residue, so the same uniform draw
    /// selects the same arm on every platform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut cumulative = 0.0;
        for (arm, p) in self.probs.iter().enumerate() {
            cumulative += p;
            if u < cumulative {
                return arm;
            }
        }
        self.probs.len() - 1
    }

    /// Draws the full played/observed pair: the played arm by inverse CDF
    /// over this distribution, then the observed arm uniformly from the
    /// `K - 1` remaining arms by indexing the ordered complement.
    ///
    /// Consumes exactly two values from `rng`, played arm first.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> ArmPair {
        let played = self.sample(rng);
        let offset = rng.gen_range(0..self.probs.len() - 1);
        let observed = if offset >= played { offset + 1 } else { offset };
        ArmPair { played, observed }
    }
}

/// One round's arm assignment: the played (acting) arm and the observed
/// (watched) arm. Always distinct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmPair {
    pub played: usize,
    pub observed: usize,
}

impl ArmPair {
    fn check(&self, num_arms: usize) -> Result<(), Error> {
        if self.played >= num_arms || self.observed >= num_arms {
            return Err(Error::InvalidParams(format!(
                "arm pair ({}, {}) out of range for {num_arms} arms",
                self.played, self.observed
            )));
        }
        if self.played == self.observed {
            return Err(Error::InvalidParams(format!(
                "played and observed arms must differ, both are {}",
                self.played
            )));
        }
        Ok(())
    }
}

/// Everything recorded about one round: the assignment, both rewards, and
/// the distribution the arms were actually sampled from (pre-update).
///
/// `played_reward` is bookkeeping for regret accounting only; the policy
/// update never sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u64,
    pub played: usize,
    pub observed: usize,
    pub observed_reward: u8,
    pub played_reward: u8,
    pub distribution: PlayDistribution,
}

/// Learner state: parameters, log-weights, and the current round index
/// (starting at 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyState {
    params: PolicyParams,
    log_weights: Vec<f64>,
    round: u64,
}

impl PolicyState {
    /// Fresh state at round 1 with every weight equal to 1 (log-weight 0).
    pub fn new(params: PolicyParams) -> Result<Self, Error> {
        params.validate()?;
        Ok(Self {
            log_weights: vec![0.0; params.num_arms],
            params,
            round: 1,
        })
    }

    /// Reassembles a state from a snapshot, e.g. to resume a run.
    pub fn from_parts(
        params: PolicyParams,
        log_weights: Vec<f64>,
        round: u64,
    ) -> Result<Self, Error> {
        params.validate()?;
        if log_weights.len() != params.num_arms {
            return Err(Error::InvalidParams(format!(
                "{} log-weights for {} arms",
                log_weights.len(),
                params.num_arms
            )));
        }
        if log_weights.iter().any(|lw| !lw.is_finite()) {
            return Err(Error::InvalidParams("log-weights must be finite".into()));
        }
        if round == 0 {
            return Err(Error::InvalidParams("rounds are indexed from 1".into()));
        }
        Ok(Self { params, log_weights, round })
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn num_arms(&self) -> usize {
        self.params.num_arms
    }

    /// Current round index; 1 for a fresh state, incremented by each update.
    pub fn round(&self) -> u64 {
        self.round
    }

    /// Natural logarithms of the arm weights.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Play distribution for the current round:
    /// `(1 - gamma) * softmax(log_weights) + gamma / K`, with the softmax
    /// computed after subtracting the max log-weight so large weights never
    /// overflow.
    pub fn distribution(&self) -> PlayDistribution {
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let scaled: Vec<f64> = self.log_weights.iter().map(|lw| (lw - max).exp()).collect();
        let total: f64 = scaled.iter().sum();
        let gamma = self.params.gamma;
        let k = self.params.num_arms as f64;
        let probs = scaled
            .iter()
            .map(|w| (1.0 - gamma) * w / total + gamma / k)
            .collect();
        PlayDistribution { probs }
    }

    /// Samples the played/observed pair for the current round. Does not
    /// advance the state.
    pub fn sample_arms<R: Rng + ?Sized>(&self, rng: &mut R) -> ArmPair {
        self.distribution().sample_pair(rng)
    }

    /// Applies the exponential-weights update for an observed binary reward:
    /// the observed arm's log-weight grows by `eta * xhat` where `xhat` uses
    /// the pre-update distribution; all other weights are untouched; the
    /// round index advances by 1.
    pub fn update(&mut self, pair: ArmPair, observed_reward: u8) -> Result<(), Error> {
        pair.check(self.params.num_arms)?;
        debug_assert!(observed_reward <= 1, "rewards are binary");
        let dist = self.distribution();
        let xhat = estimate(observed_reward, pair.observed, &dist)?;
        self.log_weights[pair.observed] += self.params.eta * xhat;
        self.round += 1;
        Ok(())
    }

    /// Plays one full round against an environment: materializes the round's
    /// reward vector, samples the arm pair, records the (invisible) played
    /// reward for later regret accounting, and updates on the observed
    /// reward alone.
    pub fn run_round<E, R>(&mut self, env: &mut E, rng: &mut R) -> Result<RoundRecord, Error>
    where
        E: Environment + ?Sized,
        R: Rng + ?Sized,
    {
        if env.num_arms() != self.params.num_arms {
            return Err(Error::ArmCountMismatch {
                policy: self.params.num_arms,
                environment: env.num_arms(),
            });
        }
        let rewards = env.rewards_at(self.round)?;
        let distribution = self.distribution();
        let pair = distribution.sample_pair(rng);
        let record = RoundRecord {
            round: self.round,
            played: pair.played,
            observed: pair.observed,
            observed_reward: rewards.get(pair.observed),
            played_reward: rewards.get(pair.played),
            distribution,
        };
        self.update(pair, record.observed_reward)?;
        Ok(record)
    }
}

/// Importance-weighted reward estimate for the observed arm:
/// `reward * (K - 1) / (1 - p(observed_arm))`.
///
/// The observed arm was watched with probability `(1 - p) / (K - 1)`, so
/// dividing by it makes the estimate unbiased; the implied estimate for
/// every other arm is 0.
pub fn estimate(
    observed_reward: u8,
    observed_arm: usize,
    dist: &PlayDistribution,
) -> Result<f64, Error> {
    debug_assert!(observed_reward <= 1, "rewards are binary");
    let complement = 1.0 - dist.probs[observed_arm];
    if complement <= 1e-15 {
        return Err(Error::DegenerateDistribution {
            arm: observed_arm,
            complement,
        });
    }
    Ok(observed_reward as f64 * (dist.num_arms() as f64 - 1.0) / complement)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn fresh_state_has_zero_log_weights() {
        let params = PolicyParams::new(10, 0.1, 0.1 / 18.0).unwrap();
        let state = PolicyState::new(params).unwrap();
        assert_eq!(state.round(), 1);
        assert_eq!(state.log_weights(), &[0.0; 10]);
    }

    #[test]
    fn eta_above_bound_is_rejected() {
        // 0.006 > 0.1 / 18 ~= 0.005556
        let err = PolicyParams::new(10, 0.1, 0.006).unwrap_err();
        assert!(matches!(err, Error::InvalidParams(_)));
        assert!(err.to_string().contains("eta"));
    }

    #[test]
    fn single_arm_is_rejected() {
        let err = PolicyParams::new(1, 0.5, 0.1).unwrap_err();
        assert!(err.to_string().contains("num_arms"));
    }

    #[test]
    fn gamma_bounds_are_rejected() {
        assert!(PolicyParams::new(5, 0.0, 0.01).is_err());
        assert!(PolicyParams::new(5, 1.0, 0.01).is_err());
        assert!(PolicyParams::new(5, 0.5, 0.0).is_err());
    }

    #[test]
    fn eta_exactly_at_bound_is_accepted() {
        let bound = PolicyParams::eta_bound(10, 0.1);
        assert!(PolicyParams::new(10, 0.1, bound).is_ok());
    }

    #[test]
    fn equal_weights_give_uniform_distribution() {
        for gamma in [0.05, 0.3, 0.9] {
            let params = PolicyParams::new(10, gamma, PolicyParams::eta_bound(10, gamma)).unwrap();
            let state = PolicyState::new(params).unwrap();
            for p in state.distribution().probs() {
                assert!(close(*p, 0.1, 1e-15), "expected 0.1, got {p}");
            }
        }
    }

    #[test]
    fn two_arm_worked_example() {
        // weights (3, 1), gamma = 0.2: softmax = (0.75, 0.25),
        // probs = (0.8 * 0.75 + 0.1, 0.8 * 0.25 + 0.1) = (0.7, 0.3)
        let params = PolicyParams::new(2, 0.2, PolicyParams::eta_bound(2, 0.2)).unwrap();
        let mut state = PolicyState::new(params).unwrap();
        state.log_weights = vec![3.0_f64.ln(), 0.0];
        let dist = state.distribution();
        assert!(close(dist.probs()[0], 0.7, 1e-12));
        assert!(close(dist.probs()[1], 0.3, 1e-12));
    }

    #[test]
    fn three_arm_worked_example() {
        // weights (1, 1, 2), gamma = 0.3: softmax = (0.25, 0.25, 0.5),
        // probs = (0.275, 0.275, 0.45)
        let params = PolicyParams::new(3, 0.3, PolicyParams::eta_bound(3, 0.3)).unwrap();
        let mut state = PolicyState::new(params).unwrap();
        state.log_weights = vec![0.0, 0.0, 2.0_f64.ln()];
        let dist = state.distribution();
        assert!(close(dist.probs()[0], 0.275, 1e-12));
        assert!(close(dist.probs()[1], 0.275, 1e-12));
        assert!(close(dist.probs()[2], 0.45, 1e-12));
    }

    #[test]
    fn two_arms_observed_is_always_the_other() {
        let params = PolicyParams::new(2, 0.2, PolicyParams::eta_bound(2, 0.2)).unwrap();
        let state = PolicyState::new(params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let pair = state.sample_arms(&mut rng);
            assert_eq!(pair.observed, 1 - pair.played);
        }
    }

    #[test]
    fn observed_arm_is_uniform_over_complement() {
        // Condition on played = 0 for K = 3: the observer should split
        // 50/50 between arms 1 and 2. Chi-square with 1 dof at the 99%
        // level accepts below 6.635.
        let params = PolicyParams::new(3, 0.3, PolicyParams::eta_bound(3, 0.3)).unwrap();
        let state = PolicyState::new(params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = [0u64; 3];
        let mut total = 0u64;
        while total < 100_000 {
            let pair = state.sample_arms(&mut rng);
            if pair.played == 0 {
                counts[pair.observed] += 1;
                total += 1;
            }
        }
        assert_eq!(counts[0], 0);
        let expected = total as f64 / 2.0;
        let chi2 = [counts[1], counts[2]]
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum::<f64>();
        assert!(chi2 < 6.635, "chi-square {chi2} rejects uniformity");
    }

    #[test]
    fn sampling_is_reproducible_for_fixed_seed() {
        let params = PolicyParams::new(10, 0.1, PolicyParams::eta_bound(10, 0.1)).unwrap();
        let state = PolicyState::new(params).unwrap();
        let first = state.sample_arms(&mut ChaCha8Rng::seed_from_u64(123));
        for _ in 0..5 {
            let again = state.sample_arms(&mut ChaCha8Rng::seed_from_u64(123));
            assert_eq!(first, again);
        }
        assert_ne!(first.played, first.observed);
    }

    #[test]
    fn zero_reward_estimate_is_zero() {
        let dist = PlayDistribution::uniform(7).unwrap();
        for arm in 0..7 {
            assert_eq!(estimate(0, arm, &dist).unwrap(), 0.0);
        }
    }

    #[test]
    fn estimate_worked_examples() {
        // K = 3, uniform: 2 / (2/3) = 3
        let dist = PlayDistribution::uniform(3).unwrap();
        assert!(close(estimate(1, 1, &dist).unwrap(), 3.0, 1e-12));

        // K = 10, p(observed) = 0.1: 9 / 0.9 = 10
        let dist = PlayDistribution::uniform(10).unwrap();
        assert!(close(estimate(1, 4, &dist).unwrap(), 10.0, 1e-12));
    }

    #[test]
    fn degenerate_distribution_is_reported() {
        let dist = PlayDistribution::point_mass(3, 1).unwrap();
        let err = estimate(1, 1, &dist).unwrap_err();
        assert!(matches!(err, Error::DegenerateDistribution { arm: 1, .. }));
    }

    #[test]
    fn zero_reward_update_only_advances_round() {
        let params = PolicyParams::new(5, 0.2, PolicyParams::eta_bound(5, 0.2)).unwrap();
        let mut state = PolicyState::new(params).unwrap();
        let before = state.log_weights().to_vec();
        state
            .update(ArmPair { played: 0, observed: 3 }, 0)
            .unwrap();
        assert_eq!(state.log_weights(), before.as_slice());
        assert_eq!(state.round(), 2);
    }

    #[test]
    fn update_worked_example() {
        // Fresh K = 3 state is uniform, so xhat = 3 (see estimate test);
        // with eta = 0.05 the observed arm's log-weight becomes 0.15.
        let params = PolicyParams::new(3, 0.3, 0.05).unwrap();
        let mut state = PolicyState::new(params).unwrap();
        state
            .update(ArmPair { played: 0, observed: 1 }, 1)
            .unwrap();
        assert_eq!(state.log_weights()[0], 0.0);
        assert!(close(state.log_weights()[1], 0.15, 1e-12));
        assert_eq!(state.log_weights()[2], 0.0);
        assert_eq!(state.round(), 2);
    }

    #[test]
    fn sequential_updates_accumulate_in_log_space() {
        // Second update must use the distribution refreshed by the first.
        let params = PolicyParams::new(3, 0.3, 0.05).unwrap();
        let mut state = PolicyState::new(params).unwrap();
        let pair = ArmPair { played: 0, observed: 1 };

        let first_dist = state.distribution();
        let first_step = params.eta * estimate(1, 1, &first_dist).unwrap();
        state.update(pair, 1).unwrap();

        let second_dist = state.distribution();
        let second_step = params.eta * estimate(1, 1, &second_dist).unwrap();
        state.update(pair, 1).unwrap();

        assert!(close(state.log_weights()[1], first_step + second_step, 1e-12));
        assert!(second_step > first_step, "refreshed p grows, so xhat grows");
        assert_eq!(state.round(), 3);
    }

    #[test]
    fn update_rejects_bad_pairs() {
        let params = PolicyParams::new(3, 0.3, 0.05).unwrap();
        let mut state = PolicyState::new(params).unwrap();
        assert!(state.update(ArmPair { played: 1, observed: 1 }, 1).is_err());
        assert!(state.update(ArmPair { played: 0, observed: 3 }, 1).is_err());
    }

    #[test]
    fn point_mass_sampling_always_picks_the_mass() {
        let dist = PlayDistribution::point_mass(4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            assert_eq!(dist.sample(&mut rng), 2);
        }
    }

    #[test]
    fn inverse_cdf_residue_falls_to_last_arm() {
        // Probabilities that sum to slightly under 1 after rounding still
        // map every draw to a valid arm.
        let dist = PlayDistribution::new(vec![0.1, 0.2, 0.7]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            assert!(dist.sample(&mut rng) < 3);
        }
    }
}
