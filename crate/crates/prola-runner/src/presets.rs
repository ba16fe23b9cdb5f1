//! Named environment presets for the traffic case study.
//!
//! Only the ten-intersection vector is published data; the other sizes are
//! generated pseudo-randomly from a fixed, documented seed so that every
//! build and every machine agrees on them byte for byte. Generated vectors
//! keep the same shape as the published one: ordinary intersections with
//! low violation rates plus a single hot intersection at 0.6.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::RunnerError;

/// Published per-interval violation probabilities for ten intersections.
/// Intersection 6 (index 5) is the hot one.
pub const PAPER_K10: [f64; 10] = [0.04, 0.2, 0.17, 0.2, 0.08, 0.6, 0.16, 0.1, 0.12, 0.2];

/// Violation probability of the hot intersection in every preset.
pub const HOT_PROBABILITY: f64 = 0.6;

/// Seed for generated presets: ASCII "PROLA".
const GENERATOR_SEED: u64 = 0x50524f4c41;

/// Hot-arm index for `k` arms: intersection 6 where it exists, otherwise
/// the last intersection.
pub fn hot_arm(k: usize) -> usize {
    if k >= 6 {
        5
    } else {
        k - 1
    }
}

/// The case-study probability vector for `k` intersections: the published
/// data for `k = 10`, otherwise background rates drawn uniformly from
/// [0.02, 0.25] (rounded to 4 decimals, one draw per arm in ascending
/// order, stream id = `k`) with the hot arm overwritten to 0.6.
pub fn case_study_probs(k: usize) -> Result<Vec<f64>, RunnerError> {
    if k < 2 {
        return Err(RunnerError::Validation(format!(
            "case-study presets need at least 2 intersections, got {k}"
        )));
    }
    if k == 10 {
        return Ok(PAPER_K10.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(GENERATOR_SEED);
    rng.set_stream(k as u64);
    let mut probs: Vec<f64> = (0..k)
        .map(|_| {
            let raw = 0.02 + 0.23 * rng.gen::<f64>();
            (raw * 1e4).round() / 1e4
        })
        .collect();
    probs[hot_arm(k)] = HOT_PROBABILITY;
    Ok(probs)
}

/// Background rate the former hot intersection falls to after a shift.
pub const COOLED_PROBABILITY: f64 = 0.04;

/// The shifted case-study schedule: the case-study vector until round
/// `t / 2`, then the hot 0.6 rate moves onto intersection 2 while the
/// former hot intersection cools to the quietest background rate.
pub fn case_study_shift_segments(k: usize, t: u64) -> Result<Vec<(u64, Vec<f64>)>, RunnerError> {
    if k < 6 {
        return Err(RunnerError::Validation(format!(
            "the shift preset moves the hot rate from intersection 6 to 2, so it needs \
             at least 6 intersections, got {k}"
        )));
    }
    if t < 4 {
        return Err(RunnerError::Validation(format!(
            "the shift preset switches at round t/2, so it needs t >= 4, got {t}"
        )));
    }
    let before = case_study_probs(k)?;
    let mut after = before.clone();
    after[1] = HOT_PROBABILITY;
    after[5] = COOLED_PROBABILITY;
    Ok(vec![(1, before), (t / 2, after)])
}

/// One catalog entry for `presets list`.
pub struct PresetInfo {
    pub name: &'static str,
    pub arms: Option<usize>,
    pub description: &'static str,
}

pub fn catalog() -> Vec<PresetInfo> {
    vec![
        PresetInfo {
            name: "paper-k10",
            arms: Some(10),
            description: "published 10-intersection Bernoulli rates (hot: intersection 6 at 0.6)",
        },
        PresetInfo {
            name: "gen-k20",
            arms: Some(20),
            description: "generated 20-intersection rates, background 0.02-0.25, hot 0.6",
        },
        PresetInfo {
            name: "gen-k30",
            arms: Some(30),
            description: "generated 30-intersection rates, background 0.02-0.25, hot 0.6",
        },
        PresetInfo {
            name: "gen-k40",
            arms: Some(40),
            description: "generated 40-intersection rates, background 0.02-0.25, hot 0.6",
        },
        PresetInfo {
            name: "gen-k50",
            arms: Some(50),
            description: "generated 50-intersection rates, background 0.02-0.25, hot 0.6",
        },
        PresetInfo {
            name: "case-study",
            arms: None,
            description: "k-adaptive: paper-k10 at k=10, generated rates otherwise",
        },
        PresetInfo {
            name: "case-study-shift",
            arms: None,
            description: "schedule: case-study rates, hot rate moves to intersection 2 at t/2",
        },
    ]
}

/// Resolves a preset name against the configured arm count, returning the
/// adaptive arm count it requires (or validating a fixed one).
pub fn check_preset(name: &str, k: usize) -> Result<(), RunnerError> {
    let required = match name {
        "paper-k10" => Some(10),
        "gen-k20" => Some(20),
        "gen-k30" => Some(30),
        "gen-k40" => Some(40),
        "gen-k50" => Some(50),
        "case-study" | "case-study-shift" => None,
        other => {
            return Err(RunnerError::Validation(format!(
                "unknown preset {other:?}; see `prola presets list`"
            )))
        }
    };
    if let Some(required) = required {
        if k != required {
            return Err(RunnerError::Validation(format!(
                "preset {name:?} is defined for k = {required}, config has k = {k}"
            )));
        }
    }
    Ok(())
}
