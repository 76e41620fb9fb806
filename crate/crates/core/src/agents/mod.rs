//! Episode-level planners.
//!
//! An agent maps the current [`PosteriorState`] to the policy executed in
//! the next episode. Agents hold no state of their own; everything they learn
//! lives in the posterior.

mod optimistic;
mod sampling;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Policy, QTable};
use crate::posterior::{PosteriorState, PriorConfig};
use crate::scalar::Real;

pub use optimistic::{
    bolt_reward, optimistic_transition, plan_beb, plan_bolt, plan_eps_greedy, plan_ucrl2_fh,
    ucrl2_radii,
};
pub use sampling::{
    gaussian_psrl_noise_variance, plan_gaussian_psrl, plan_gaussian_psrl_with,
    plan_optimistic_psrl, plan_psrl, StageNoise,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Psrl,
    GaussianPsrl,
    Ucrl2Fh,
    Beb,
    Bolt,
    EpsGreedy,
    OptimisticPsrl,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Psrl => "psrl",
            AgentKind::GaussianPsrl => "gaussian_psrl",
            AgentKind::Ucrl2Fh => "ucrl2_fh",
            AgentKind::Beb => "beb",
            AgentKind::Bolt => "bolt",
            AgentKind::EpsGreedy => "eps_greedy",
            AgentKind::OptimisticPsrl => "optimistic_psrl",
        }
    }
}

/// Agent section of an experiment config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub kind: AgentKind,
    /// Confidence level of the optimistic agents.
    #[serde(default = "defaults::delta")]
    pub delta: f64,
    /// Multiplier on every confidence radius.
    #[serde(default = "defaults::one")]
    pub scale: f64,
    #[serde(default = "defaults::epsilon")]
    pub epsilon: f64,
    /// Posterior samples per episode for optimistic PSRL.
    #[serde(default = "defaults::n_samples")]
    pub n_samples: usize,
    /// BEB bonus numerator.
    #[serde(default = "defaults::one")]
    pub beta: f64,
    /// BOLT pseudo-observations per cell, in units of the horizon.
    #[serde(default = "defaults::one")]
    pub eta: f64,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub known_rewards: bool,
    #[serde(default)]
    pub known_transitions: bool,
}

mod defaults {
    pub fn delta() -> f64 {
        0.05
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn epsilon() -> f64 {
        0.1
    }
    pub fn n_samples() -> usize {
        10
    }
}

impl AgentConfig {
    pub fn new(kind: AgentKind) -> Self {
        Self {
            kind,
            delta: defaults::delta(),
            scale: 1.0,
            epsilon: defaults::epsilon(),
            n_samples: defaults::n_samples(),
            beta: 1.0,
            eta: 1.0,
            prior: PriorConfig::default(),
            known_rewards: false,
            known_transitions: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.scale >= 0.0 && self.scale.is_finite()) {
            return fail(format!("scale must be >= 0, got {}", self.scale));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return fail(format!("epsilon must lie in [0, 1], got {}", self.epsilon));
        }
        if self.n_samples == 0 {
            return fail("n_samples must be >= 1".into());
        }
        if !(self.beta >= 0.0 && self.beta.is_finite())
            || !(self.eta >= 0.0 && self.eta.is_finite())
        {
            return fail(format!(
                "beta and eta must be >= 0, got {} and {}",
                self.beta, self.eta
            ));
        }
        self.prior.validate()
    }
}

/// What a planner hands back for one episode.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan<T> {
    pub policy: Policy,
    /// The planner's own action values (sampled, optimistic or mean-model).
    pub q: QTable<T>,
    /// Probability of a uniform per-step override during execution.
    pub epsilon: f64,
}

impl<T: Real> Plan<T> {
    fn greedy(q: QTable<T>, policy: Policy) -> Self {
        Self {
            policy,
            q,
            epsilon: 0.0,
        }
    }

    /// The planner's estimate of its own episode value under `initial`.
    pub fn imagined_value(&self, initial: &[T]) -> T {
        initial
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (s, &p)| acc + p * self.q.v(s, 0))
    }
}

/// Plans episode `episode` (1-based) for the configured agent.
pub fn plan<T: Real, R: Rng + ?Sized>(
    post: &PosteriorState<T>,
    config: &AgentConfig,
    episode: u64,
    rng: &mut R,
) -> Plan<T> {
    match config.kind {
        AgentKind::Psrl => plan_psrl(post, rng),
        AgentKind::GaussianPsrl => plan_gaussian_psrl(post, rng),
        AgentKind::Ucrl2Fh => plan_ucrl2_fh(post, config, episode),
        AgentKind::Beb => plan_beb(post, config),
        AgentKind::Bolt => plan_bolt(post, config),
        AgentKind::EpsGreedy => plan_eps_greedy(post, config),
        AgentKind::OptimisticPsrl => plan_optimistic_psrl(post, config, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_from_json() {
        let cfg: AgentConfig = serde_json::from_str(r#"{"kind":"ucrl2_fh"}"#).unwrap();
        assert_eq!(cfg, AgentConfig::new(AgentKind::Ucrl2Fh));
        assert!(serde_json::from_str::<AgentConfig>(r#"{"kind":"psrl","bogus":1}"#).is_err());
        let cfg: AgentConfig =
            serde_json::from_str(r#"{"kind":"psrl","prior":{"alpha0":0.1,"tau_obs":10.0}}"#)
                .unwrap();
        assert_eq!(cfg.prior.alpha0, 0.1);
        assert_eq!(cfg.prior.tau0, 1.0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = AgentConfig::new(AgentKind::EpsGreedy);
        assert!(cfg.validate().is_ok());
        cfg.delta = 1.0;
        assert!(cfg.validate().is_err());
        cfg.delta = 0.1;
        cfg.epsilon = 1.5;
        assert!(cfg.validate().is_err());
        cfg.epsilon = 0.1;
        cfg.n_samples = 0;
        assert!(cfg.validate().is_err());
        cfg.n_samples = 1;
        cfg.scale = -1.0;
        assert!(cfg.validate().is_err());
    }
}
