use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::AgentConfig;
use crate::environments::EnvSpec;
use crate::error::{Error, Result};

/// A full experiment: what to run, against what, for how long.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub agent: AgentConfig,
    pub run: RunConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Episode budget per seed.
    pub episodes: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Learning-time cutoff on average regret.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub record_decomposition: bool,
    /// Environment sizes for `sweep`, ascending.
    #[serde(default)]
    pub sweep_n: Vec<usize>,
    /// Also write a gnuplot script next to each CSV.
    #[serde(default)]
    pub plot_script: bool,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_threshold() -> f64 {
    0.1
}

impl RunConfig {
    pub fn new(episodes: u64) -> Self {
        Self {
            episodes,
            seeds: default_seeds(),
            threshold: default_threshold(),
            output: None,
            record_decomposition: false,
            sweep_n: Vec::new(),
            plot_script: false,
        }
    }
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

impl ExperimentConfig {
    pub fn new(env: EnvSpec, agent: AgentConfig, episodes: u64) -> Self {
        Self {
            env,
            agent,
            run: RunConfig::new(episodes),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = parse(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read(path)?)
    }

    /// Checks every section; all failures map to [`Error::Config`].
    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(other.to_string()),
        };
        self.env.validate().map_err(wrap)?;
        self.agent.validate().map_err(wrap)?;
        let run = &self.run;
        if run.episodes == 0 {
            return Err(Error::Config("run.episodes must be >= 1".into()));
        }
        if run.seeds.is_empty() {
            return Err(Error::Config("run.seeds must be nonempty".into()));
        }
        if !(run.threshold > 0.0 && run.threshold.is_finite()) {
            return Err(Error::Config(format!(
                "run.threshold must be > 0, got {}",
                run.threshold
            )));
        }
        if run.sweep_n.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "run.sweep_n must be strictly ascending".into(),
            ));
        }
        Ok(())
    }
}

/// Input of the `coverage` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageConfig {
    pub alpha: Vec<f64>,
    pub horizon: f64,
    /// Visit count plugged into the radius; defaults to the total of `alpha`.
    #[serde(default)]
    pub n_eff: Option<f64>,
    pub delta: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

fn default_trials() -> usize {
    100_000
}

impl CoverageConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        parse(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read(path)?)
    }

    pub fn n_eff(&self) -> f64 {
        self.n_eff.unwrap_or_else(|| self.alpha.iter().sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "env": {"family": "chain", "n": 5},
        "agent": {"kind": "psrl"},
        "run": {"episodes": 100}
    }"#;

    #[test]
    fn defaults() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.run.seeds, vec![0]);
        assert_eq!(cfg.run.threshold, 0.1);
        assert!(!cfg.run.record_decomposition);
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [
            MINIMAL.replace(r#""episodes": 100"#, r#""episodes": 100, "speed": 3"#),
            MINIMAL.replace(r#""kind": "psrl""#, r#""kind": "psrl", "gamma": 0.9"#),
            MINIMAL.replace(r#""n": 5"#, r#""n": 5, "width": 2"#),
            MINIMAL.replace(r#""run":"#, r#""extra": {}, "run":"#),
        ] {
            assert!(
                matches!(ExperimentConfig::from_json(&text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn invariants_enforced() {
        for (from, to) in [
            (r#""episodes": 100"#, r#""episodes": 0"#),
            (r#""episodes": 100"#, r#""episodes": 100, "seeds": []"#),
            (r#""episodes": 100"#, r#""episodes": 100, "threshold": 0"#),
            (
                r#""episodes": 100"#,
                r#""episodes": 100, "sweep_n": [8, 5]"#,
            ),
            (r#""kind": "psrl""#, r#""kind": "psrl", "delta": 2.0"#),
            (r#""n": 5"#, r#""n": 1"#),
        ] {
            let text = MINIMAL.replace(from, to);
            assert!(
                matches!(ExperimentConfig::from_json(&text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn coverage_config() {
        let cfg = CoverageConfig::from_json(r#"{"alpha":[1,2],"horizon":3,"delta":0.1}"#).unwrap();
        assert_eq!(cfg.n_eff(), 3.0);
        assert_eq!(cfg.trials, 100_000);
        assert!(
            CoverageConfig::from_json(r#"{"alpha":[1],"horizon":3,"delta":0.1,"x":1}"#).is_err()
        );
    }
}
