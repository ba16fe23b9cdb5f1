//! Experiment configuration: a TOML file with the experiment name, problem
//! size, policy, environment, and seeding. Unknown keys are rejected, and
//! loading resolves every default so the echoed config in the output
//! metadata pins the run completely.

use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use prola::env::{BernoulliEnv, BernoulliSpec, Environment, FixedEnv, ScheduleEnv, ScheduleSpec};
use prola::policy::PolicyParams;

use crate::error::RunnerError;
use crate::presets;

/// Which policy drives the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyChoice {
    /// The decoupled play/observe learner.
    Prola,
    /// Plays and observes uniformly at random; never learns. A regret
    /// anchor.
    UniformRandom,
    /// Plays the best fixed arm of the realized reward matrix every round;
    /// weak regret 0 by construction.
    OracleBestFixed,
}

/// Environment kind discriminator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvKind {
    Preset,
    Bernoulli,
    Schedule,
    Fixed,
}

/// One schedule segment: the round it takes effect and its rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub start: u64,
    pub probs: Vec<f64>,
}

/// The `[environment]` table. Exactly the field matching `kind` may be
/// set: `name` for presets, `probs` for bernoulli, `segments` for
/// schedules, `path` for fixed CSV matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub kind: EnvKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<SegmentConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

/// A fully described experiment. `gamma`, `eta`, and `snapshot_every` may
/// be omitted in config files; loading fills them in (see
/// [`load_config`]), so a resolved config always carries concrete values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Number of intersections.
    pub k: usize,
    /// Horizon in rounds.
    pub t: u64,
    /// Exploration rate; default `min(0.5, sqrt(k ln k / t))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Learning rate; default `gamma / (2 (k - 1))`, its upper bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub policy: PolicyChoice,
    pub environment: EnvironmentConfig,
    pub replications: u64,
    pub base_seed: u64,
    /// Trajectory sampling interval; default `max(1, t / 100)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<u64>,
    pub output_dir: PathBuf,
}

/// The environment with presets expanded and fixed matrices sized; what
/// actually drives reward generation, echoed into run metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExpandedEnvironment {
    Bernoulli { probs: Vec<f64> },
    Schedule { segments: Vec<SegmentConfig> },
    Fixed { path: PathBuf, rounds: u64 },
}

impl ExperimentConfig {
    /// Resolved policy parameters for this config.
    pub fn policy_params(&self) -> Result<PolicyParams, RunnerError> {
        let gamma = match self.gamma {
            Some(g) => g,
            None => {
                PolicyParams::default_for_horizon(self.k, self.t)
                    .map_err(validation)?
                    .gamma
            }
        };
        let eta = self.eta.unwrap_or_else(|| PolicyParams::eta_bound(self.k, gamma));
        PolicyParams::new(self.k, gamma, eta).map_err(|e| RunnerError::Validation(e.to_string()))
    }

    /// Expands presets into concrete rates and checks the fixed matrix on
    /// disk, without building the environment.
    pub fn expanded_environment(&self) -> Result<ExpandedEnvironment, RunnerError> {
        let env = &self.environment;
        let only = |field: &str, wanted: bool, present: bool| -> Result<(), RunnerError> {
            if wanted == present {
                Ok(())
            } else if present {
                Err(RunnerError::Validation(format!(
                    "environment.{field} is not used by kind {:?}",
                    kind_name(env.kind)
                )))
            } else {
                Err(RunnerError::Validation(format!(
                    "environment kind {:?} requires environment.{field}",
                    kind_name(env.kind)
                )))
            }
        };
        match env.kind {
            EnvKind::Preset => {
                only("name", true, env.name.is_some())?;
                only("probs", false, env.probs.is_some())?;
                only("segments", false, env.segments.is_some())?;
                only("path", false, env.path.is_some())?;
                let name = env.name.as_deref().expect("checked above");
                presets::check_preset(name, self.k)?;
                if name == "case-study-shift" {
                    let segments = presets::case_study_shift_segments(self.k, self.t)?
                        .into_iter()
                        .map(|(start, probs)| SegmentConfig { start, probs })
                        .collect();
                    Ok(ExpandedEnvironment::Schedule { segments })
                } else {
                    Ok(ExpandedEnvironment::Bernoulli {
                        probs: presets::case_study_probs(self.k)?,
                    })
                }
            }
            EnvKind::Bernoulli => {
                only("probs", true, env.probs.is_some())?;
                only("name", false, env.name.is_some())?;
                only("segments", false, env.segments.is_some())?;
                only("path", false, env.path.is_some())?;
                let probs = env.probs.clone().expect("checked above");
                check_probs_len(&probs, self.k)?;
                BernoulliSpec::new(probs.clone()).map_err(validation)?;
                Ok(ExpandedEnvironment::Bernoulli { probs })
            }
            EnvKind::Schedule => {
                only("segments", true, env.segments.is_some())?;
                only("name", false, env.name.is_some())?;
                only("probs", false, env.probs.is_some())?;
                only("path", false, env.path.is_some())?;
                let segments = env.segments.clone().expect("checked above");
                for segment in &segments {
                    check_probs_len(&segment.probs, self.k)?;
                }
                build_schedule_spec(&segments).map_err(validation)?;
                Ok(ExpandedEnvironment::Schedule { segments })
            }
            EnvKind::Fixed => {
                only("path", true, env.path.is_some())?;
                only("name", false, env.name.is_some())?;
                only("probs", false, env.probs.is_some())?;
                only("segments", false, env.segments.is_some())?;
                let path = env.path.clone().expect("checked above");
                let matrix = FixedEnv::from_csv_path(&path).map_err(|e| {
                    RunnerError::Validation(format!("environment.path {}: {e}", path.display()))
                })?;
                if matrix.rows()[0].num_arms() != self.k {
                    return Err(RunnerError::Validation(format!(
                        "fixed matrix {} has {} columns, config has k = {}",
                        path.display(),
                        matrix.rows()[0].num_arms(),
                        self.k
                    )));
                }
                if matrix.horizon() < self.t {
                    return Err(RunnerError::Validation(format!(
                        "fixed matrix {} has {} rounds, config has t = {}",
                        path.display(),
                        matrix.horizon(),
                        self.t
                    )));
                }
                Ok(ExpandedEnvironment::Fixed { path, rounds: matrix.horizon() })
            }
        }
    }

    /// Builds the reward process for one replication, fed by `rng`.
    pub fn build_environment(&self, rng: ChaCha8Rng) -> Result<Box<dyn Environment>, RunnerError> {
        match self.expanded_environment()? {
            ExpandedEnvironment::Bernoulli { probs } => {
                let spec = BernoulliSpec::new(probs).map_err(validation)?;
                Ok(Box::new(BernoulliEnv::new(spec, rng)))
            }
            ExpandedEnvironment::Schedule { segments } => {
                let spec = build_schedule_spec(&segments).map_err(validation)?;
                Ok(Box::new(ScheduleEnv::new(spec, rng)))
            }
            ExpandedEnvironment::Fixed { path, .. } => {
                Ok(Box::new(FixedEnv::from_csv_path(path)?))
            }
        }
    }

    /// Resolved trajectory sampling interval.
    pub fn snapshot_interval(&self) -> u64 {
        self.snapshot_every.unwrap_or_else(|| (self.t / 100).max(1))
    }

    /// Fills every optional field with its resolved value and re-validates.
    pub fn resolve(mut self) -> Result<Self, RunnerError> {
        if self.name.is_empty() {
            return Err(RunnerError::Validation("name must not be empty".into()));
        }
        if self.t < 1 {
            return Err(RunnerError::Validation("t must be at least 1".into()));
        }
        if self.replications < 1 {
            return Err(RunnerError::Validation(
                "replications must be at least 1".into(),
            ));
        }
        if self.snapshot_interval() < 1 {
            return Err(RunnerError::Validation(
                "snapshot_every must be at least 1".into(),
            ));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(RunnerError::Validation(
                "output_dir must not be empty".into(),
            ));
        }
        let params = self.policy_params()?;
        self.gamma = Some(params.gamma);
        self.eta = Some(params.eta);
        self.snapshot_every = Some(self.snapshot_interval());
        self.expanded_environment()?;
        Ok(self)
    }

    /// Re-roots a relative fixed-matrix path against the config file's
    /// directory.
    fn anchor_paths(&mut self, base: &Path) {
        if let Some(path) = &self.environment.path {
            if path.is_relative() {
                self.environment.path = Some(base.join(path));
            }
        }
    }
}

fn kind_name(kind: EnvKind) -> &'static str {
    match kind {
        EnvKind::Preset => "preset",
        EnvKind::Bernoulli => "bernoulli",
        EnvKind::Schedule => "schedule",
        EnvKind::Fixed => "fixed",
    }
}

fn validation(e: prola::Error) -> RunnerError {
    RunnerError::Validation(e.to_string())
}

fn check_probs_len(probs: &[f64], k: usize) -> Result<(), RunnerError> {
    if probs.len() != k {
        return Err(RunnerError::Validation(format!(
            "{} probabilities given, config has k = {k}",
            probs.len()
        )));
    }
    Ok(())
}

fn build_schedule_spec(segments: &[SegmentConfig]) -> Result<ScheduleSpec, prola::Error> {
    let specs = segments
        .iter()
        .map(|s| Ok((s.start, BernoulliSpec::new(s.probs.clone())?)))
        .collect::<Result<Vec<_>, prola::Error>>()?;
    ScheduleSpec::new(specs)
}

/// Parses and fully resolves a config from TOML text. Unknown keys, bad
/// types, and constraint violations are validation errors; anything that
/// is not TOML at all is a parse error.
pub fn load_config(text: &str) -> Result<ExperimentConfig, RunnerError> {
    let value: toml::Value = toml::from_str(text).map_err(|e| RunnerError::Parse(e.to_string()))?;
    let config: ExperimentConfig = value
        .try_into()
        .map_err(|e: toml::de::Error| RunnerError::Validation(e.to_string()))?;
    config.resolve()
}

/// Parses a config file without resolving defaults; optional fields stay
/// as the user wrote them. Relative matrix paths are re-rooted against the
/// file's directory.
pub fn parse_config_path<P: AsRef<Path>>(path: P) -> Result<ExperimentConfig, RunnerError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunnerError::Parse(format!("{}: {e}", path.display())))?;
    let value: toml::Value =
        toml::from_str(&text).map_err(|e| RunnerError::Parse(format!("{}: {e}", path.display())))?;
    let mut config: ExperimentConfig = value
        .try_into()
        .map_err(|e: toml::de::Error| RunnerError::Validation(format!("{}: {e}", path.display())))?;
    if let Some(base) = path.parent() {
        config.anchor_paths(base);
    }
    Ok(config)
}

/// [`load_config`] from a file, resolving relative matrix paths against
/// the file's directory.
pub fn load_config_path<P: AsRef<Path>>(path: P) -> Result<ExperimentConfig, RunnerError> {
    parse_config_path(path)?.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        name = "paper-k10"
        k = 10
        t = 600
        policy = "prola"
        replications = 1
        base_seed = 42
        output_dir = "out/paper-k10"

        [environment]
        kind = "preset"
        name = "paper-k10"
    "#;

    #[test]
    fn minimal_config_resolves_defaults() {
        let config = load_config(MINIMAL).unwrap();
        let expected_gamma = (10.0f64 * 10.0f64.ln() / 600.0).sqrt().min(0.5);
        assert!((config.gamma.unwrap() - expected_gamma).abs() < 1e-15);
        assert!((config.eta.unwrap() - expected_gamma / 18.0).abs() < 1e-15);
        assert_eq!(config.snapshot_every, Some(6));
        assert_eq!(config.policy, PolicyChoice::Prola);
    }

    #[test]
    fn eta_above_bound_is_a_validation_error() {
        let text = MINIMAL.replace("base_seed = 42", "base_seed = 42\ngamma = 0.1\neta = 0.006");
        let err = load_config(&text).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(
            err.to_string().contains("gamma/(2(K-1))"),
            "message should cite the bound: {err}"
        );
    }

    #[test]
    fn unknown_keys_are_validation_errors() {
        let text = MINIMAL.replace("base_seed = 42", "base_seed = 42\nturbo = true");
        let err = load_config(&text).unwrap_err();
        assert!(matches!(err, RunnerError::Validation(_)), "{err}");
        assert!(err.to_string().contains("turbo"));
    }

    #[test]
    fn syntax_errors_are_parse_errors() {
        let err = load_config("name = \"x").unwrap_err();
        assert!(matches!(err, RunnerError::Parse(_)), "{err}");
    }

    #[test]
    fn resolved_config_round_trips() {
        let config = load_config(MINIMAL).unwrap();
        let text = toml::to_string_pretty(&config).unwrap();
        let reloaded = load_config(&text).unwrap();
        assert_eq!(config, reloaded);
    }

    #[test]
    fn preset_must_match_arm_count() {
        let text = MINIMAL.replace("k = 10", "k = 20");
        let err = load_config(&text).unwrap_err();
        assert!(err.to_string().contains("paper-k10"));
    }

    #[test]
    fn environment_field_mix_is_rejected() {
        let text = MINIMAL.replace(
            "kind = \"preset\"",
            "kind = \"preset\"\nprobs = [0.1, 0.9]",
        );
        let err = load_config(&text).unwrap_err();
        assert!(err.to_string().contains("probs"));
    }

    #[test]
    fn bernoulli_probs_must_match_k() {
        let text = MINIMAL.replace(
            "kind = \"preset\"\n        name = \"paper-k10\"",
            "kind = \"bernoulli\"\n        probs = [0.5, 0.5]",
        );
        let err = load_config(&text).unwrap_err();
        assert!(err.to_string().contains("k = 10"), "{err}");
    }

    #[test]
    fn schedule_segments_are_validated() {
        let text = r#"
            name = "shift"
            k = 2
            t = 100
            policy = "prola"
            replications = 1
            base_seed = 1
            output_dir = "out"

            [environment]
            kind = "schedule"

            [[environment.segments]]
            start = 5
            probs = [0.1, 0.9]
        "#;
        let err = load_config(text).unwrap_err();
        assert!(err.to_string().contains("round 1"), "{err}");
    }

    #[test]
    fn shift_preset_expands_to_a_schedule() {
        let text = MINIMAL
            .replace("name = \"paper-k10\"\n        k", "name = \"shift\"\n        k")
            .replace("kind = \"preset\"\n        name = \"paper-k10\"",
                     "kind = \"preset\"\n        name = \"case-study-shift\"");
        let config = load_config(&text).unwrap();
        match config.expanded_environment().unwrap() {
            ExpandedEnvironment::Schedule { segments } => {
                assert_eq!(segments.len(), 2);
                assert_eq!(segments[1].start, 300);
                assert_eq!(segments[1].probs[1], 0.6);
            }
            other => panic!("expected schedule, got {other:?}"),
        }
    }
}
