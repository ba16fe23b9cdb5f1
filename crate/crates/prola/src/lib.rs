//! Decoupled play/observe adversarial bandit.
//!
//! A patrol assignment problem drives the design: each round, a marked
//! unit is posted at one of `K` intersections and suppresses violations
//! there without ever seeing what it prevented, while an unmarked unit
//! watches a different intersection and reports what actually happened.
//! The learner has to concentrate the marked unit on the intersection with
//! the most violations using only those indirect observations.
//!
//! The crate splits into:
//!
//! - [`policy`] — the exponential-weights learner with decoupled
//!   play/observe sampling and importance-weighted estimates;
//! - [`env`] — Bernoulli, scheduled, and fixed-sequence reward processes;
//! - [`metrics`] — exact regret accounting, play frequencies, and
//!   distribution trajectories;
//! - [`stream`] — seed derivation for reproducible replications.
//!
//! The companion guide in `book/` walks through the model and the math;
//! its code samples double as this crate's doc tests.

pub mod env;
pub mod error;
pub mod metrics;
pub mod policy;
pub mod stream;

pub use env::{BernoulliEnv, BernoulliSpec, Environment, FixedEnv, RewardVector, ScheduleEnv, ScheduleSpec};
pub use error::Error;
pub use metrics::{RegretReport, RunTrace};
pub use policy::{ArmPair, PlayDistribution, PolicyParams, PolicyState, RoundRecord};
