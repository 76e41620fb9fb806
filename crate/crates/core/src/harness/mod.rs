//! Episode loop, regret accounting, sweeps and result emission.
//!
//! Everything here runs in `f64`. Each `(config, seed)` pair is a pure
//! function of its inputs: per-episode random streams are derived from the
//! seed, so traces are bit-identical across runs and thread counts.

mod config;
mod estimate;
mod output;
mod sweep;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::agents::{self, AgentConfig};
use crate::error::{Error, Result};
use crate::mdp::{
    backward_induction, epsilon_greedy_evaluation, policy_evaluation, sample_episode,
    EpsilonGreedy, TabularMdp,
};
use crate::posterior::PosteriorState;

pub use config::{CoverageConfig, ExperimentConfig, RunConfig};
pub use estimate::{estimation_study, EstimationTrace};
pub use output::{
    format_float, write_coverage_csv, write_dominance_csv, write_estimation_csv,
    write_gnuplot_script, write_slope_csv, write_sweep_csv, write_trace_csv, PlotKind,
};
pub use sweep::{fit_slope, median, scaling_sweep, SlopeFit, SlopeRow, SweepCell, SweepTable};

/// Purpose of a per-episode random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Plan = 0,
    Trajectory = 1,
}

/// Independent stream for `(episode, purpose)` under a master seed.
pub fn substream(seed: u64, episode: u64, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode * 2 + purpose as u64);
    rng
}

/// Per-episode regret of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegretTrace {
    pub deltas: Vec<f64>,
    /// Prefix sums of `deltas`.
    pub cum: Vec<f64>,
    /// Per-episode `(delta_opt, delta_conc)` when recorded.
    pub decomposition: Option<Vec<(f64, f64)>>,
    pub seed: u64,
    pub agent: String,
    pub env: String,
}

impl RegretTrace {
    fn new(seed: u64, agent: &str, env: &str, record_decomposition: bool) -> Self {
        Self {
            deltas: Vec::new(),
            cum: Vec::new(),
            decomposition: record_decomposition.then(Vec::new),
            seed,
            agent: agent.to_owned(),
            env: env.to_owned(),
        }
    }

    fn push(&mut self, delta: f64) {
        let prev = self.cum.last().copied().unwrap_or(0.0);
        self.deltas.push(delta);
        self.cum.push(prev + delta);
    }

    pub fn episodes(&self) -> usize {
        self.deltas.len()
    }

    pub fn learning_time(&self, threshold: f64) -> LearningTime {
        learning_time(&self.deltas, threshold)
    }
}

/// First episode count at which average regret falls to a threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LearningTime {
    Reached(u64),
    NotReached { budget: u64 },
}

impl LearningTime {
    pub fn is_reached(self) -> bool {
        matches!(self, LearningTime::Reached(_))
    }

    /// `K`, or `budget + 1` when never reached.
    pub fn value(self) -> u64 {
        match self {
            LearningTime::Reached(k) => k,
            LearningTime::NotReached { budget } => budget + 1,
        }
    }

    /// `K` as a float, `+inf` when never reached.
    pub fn as_f64(self) -> f64 {
        match self {
            LearningTime::Reached(k) => k as f64,
            LearningTime::NotReached { .. } => f64::INFINITY,
        }
    }
}

/// `min { K : (1/K) sum_{k <= K} delta_k <= threshold }`.
pub fn learning_time(deltas: &[f64], threshold: f64) -> LearningTime {
    let mut sum = 0.0;
    for (i, d) in deltas.iter().enumerate() {
        sum += d;
        let k = (i + 1) as u64;
        if sum / k as f64 <= threshold {
            return LearningTime::Reached(k);
        }
    }
    LearningTime::NotReached {
        budget: deltas.len() as u64,
    }
}

/// Knobs of a single episode loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopOptions {
    pub episodes: u64,
    pub record_decomposition: bool,
    /// Stop as soon as the learning time at this threshold is reached.
    pub stop_at: Option<f64>,
}

impl LoopOptions {
    pub fn new(episodes: u64) -> Self {
        Self {
            episodes,
            record_decomposition: false,
            stop_at: None,
        }
    }
}

/// Prior for `agent` on `truth`, with the known-model flags applied.
pub fn initial_posterior(
    truth: &TabularMdp<f64>,
    agent: &AgentConfig,
) -> Result<PosteriorState<f64>> {
    let mut post = PosteriorState::from_config(truth, &agent.prior)?;
    if agent.known_rewards {
        post = post.with_known_rewards(truth);
    }
    if agent.known_transitions {
        post = post.with_known_transitions(truth);
    }
    Ok(post)
}

/// Optimal expected return of `mdp` from its initial distribution.
pub fn optimal_value(mdp: &TabularMdp<f64>) -> f64 {
    mdp.initial_value(backward_induction(mdp).0.values())
}

/// Runs `agent` against `truth`, planning from the posterior each episode,
/// scoring the plan exactly, then learning from one simulated episode.
pub fn run_agent(
    truth: &TabularMdp<f64>,
    env_id: &str,
    agent: &AgentConfig,
    seed: u64,
    opts: LoopOptions,
) -> Result<RegretTrace> {
    agent.validate()?;
    if opts.episodes == 0 {
        return Err(Error::Config("episodes must be >= 1".into()));
    }
    let mut post = initial_posterior(truth, agent)?;
    let v_star = optimal_value(truth);
    let mut trace = RegretTrace::new(seed, agent.kind.name(), env_id, opts.record_decomposition);
    let mut sum = 0.0;
    for k in 1..=opts.episodes {
        let plan = agents::plan(&post, agent, k, &mut substream(seed, k, Stream::Plan));
        let achieved_values = if plan.epsilon > 0.0 {
            epsilon_greedy_evaluation(truth, &plan.policy, plan.epsilon)?
        } else {
            policy_evaluation(truth, &plan.policy)?
        };
        let achieved = truth.initial_value(&achieved_values);
        let delta = v_star - achieved;
        trace.push(delta);
        if let Some(parts) = trace.decomposition.as_mut() {
            let imagined = plan.imagined_value(truth.initial());
            parts.push((v_star - imagined, imagined - achieved));
        }

        let mut rng = substream(seed, k, Stream::Trajectory);
        let episode = if plan.epsilon > 0.0 {
            let rule = EpsilonGreedy {
                policy: &plan.policy,
                epsilon: plan.epsilon,
                num_actions: truth.actions(),
            };
            sample_episode(truth, &rule, &mut rng)
        } else {
            sample_episode(truth, &plan.policy, &mut rng)
        };
        post.update_trajectory(&episode)?;

        sum += delta;
        if let Some(threshold) = opts.stop_at {
            if sum / k as f64 <= threshold {
                break;
            }
        }
    }
    Ok(trace)
}

/// One trace for a single seed of `config`.
pub fn run_episode_loop(config: &ExperimentConfig, seed: u64) -> Result<RegretTrace> {
    config.validate()?;
    let truth = config.env.build::<f64>()?;
    let opts = LoopOptions {
        episodes: config.run.episodes,
        record_decomposition: config.run.record_decomposition,
        stop_at: None,
    };
    run_agent(&truth, &config.env.id(), &config.agent, seed, opts)
}

/// One trace per configured seed, run in parallel, in seed order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RegretTrace>> {
    config.validate()?;
    config
        .run
        .seeds
        .par_iter()
        .map(|&seed| run_episode_loop(config, seed))
        .collect()
}
