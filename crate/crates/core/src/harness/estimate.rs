use serde::Serialize;

use super::{initial_posterior, optimal_value, substream, Stream};
use crate::agents::{self, AgentConfig};
use crate::environments::{EnvFamily, EnvSpec};
use crate::error::{Error, Result};
use crate::mdp::{sample_episode, EpsilonGreedy};

/// The agent's own estimate of the start-state value, episode by episode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimationTrace {
    pub seed: u64,
    /// True optimal value.
    pub truth: f64,
    /// `imagined[k - 1]` is the value the agent planned with in episode `k`,
    /// after `k - 1` episodes of data.
    pub imagined: Vec<f64>,
}

impl EstimationTrace {
    pub fn gap(&self, episode: usize) -> f64 {
        self.imagined[episode - 1] - self.truth
    }
}

/// Records the planned start value of `agent` over `episodes` episodes of
/// one of the estimation environments.
pub fn estimation_study(
    env: &EnvSpec,
    agent: &AgentConfig,
    episodes: u64,
    seed: u64,
) -> Result<EstimationTrace> {
    if env.family == EnvFamily::Chain {
        return Err(Error::Precondition(
            "estimation studies run on the fan-out and stage families".into(),
        ));
    }
    agent.validate()?;
    let truth = env.build::<f64>()?;
    let mut post = initial_posterior(&truth, agent)?;
    let mut imagined = Vec::with_capacity(episodes as usize);
    for k in 1..=episodes {
        let plan = agents::plan(&post, agent, k, &mut substream(seed, k, Stream::Plan));
        imagined.push(plan.imagined_value(truth.initial()));
        let mut rng = substream(seed, k, Stream::Trajectory);
        let episode = if plan.epsilon > 0.0 {
            let rule = EpsilonGreedy {
                policy: &plan.policy,
                epsilon: plan.epsilon,
                num_actions: truth.actions(),
            };
            sample_episode(&truth, &rule, &mut rng)
        } else {
            sample_episode(&truth, &plan.policy, &mut rng)
        };
        post.update_trajectory(&episode)?;
    }
    Ok(EstimationTrace {
        seed,
        truth: optimal_value(&truth),
        imagined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentKind;

    #[test]
    fn fig1_truth_is_one_half() {
        let env = EnvSpec::new(EnvFamily::Fig1BanditS, 7);
        let trace = estimation_study(&env, &AgentConfig::new(AgentKind::Psrl), 20, 1).unwrap();
        assert!((trace.truth - 0.5).abs() < 1e-12);
        assert_eq!(trace.imagined.len(), 20);
    }

    #[test]
    fn fully_known_model_is_exact() {
        let env = EnvSpec::new(EnvFamily::Fig2BanditH, 4);
        let mut agent = AgentConfig::new(AgentKind::Psrl);
        agent.known_rewards = true;
        agent.known_transitions = true;
        let trace = estimation_study(&env, &agent, 10, 0).unwrap();
        assert!(trace
            .imagined
            .iter()
            .all(|&v| (v - trace.truth).abs() < 1e-12));
    }

    #[test]
    fn chain_is_rejected() {
        let env = EnvSpec::new(EnvFamily::Chain, 4);
        assert!(estimation_study(&env, &AgentConfig::new(AgentKind::Psrl), 10, 0).is_err());
    }
}
