use thiserror::Error;

/// Errors produced by the policy, environment, and metrics layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Policy parameters violate one of their bounds. The message names the
    /// violated bound.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The play probability of the observed arm is numerically
    /// indistinguishable from 1, so the importance weight is undefined.
    /// Unreachable for any valid exploration rate; signals upstream
    /// corruption of the weights.
    #[error("degenerate distribution: 1 - p({arm}) = {complement:e} is not positive")]
    DegenerateDistribution { arm: usize, complement: f64 },

    /// Policy and environment disagree on the number of arms.
    #[error("arm count mismatch: policy has {policy} arms, environment has {environment}")]
    ArmCountMismatch { policy: usize, environment: usize },

    /// An environment specification is malformed.
    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),

    /// A fixed-sequence environment was asked for a round past its last row.
    #[error("horizon exceeded: round {round} requested, only {horizon} rounds available")]
    HorizonExceeded { round: u64, horizon: u64 },

    /// A reward matrix is ragged, empty, or contains non-binary entries.
    #[error("malformed reward matrix: {0}")]
    MalformedMatrix(String),

    /// A metrics query selected no rounds.
    #[error("empty window: {0}")]
    EmptyWindow(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
