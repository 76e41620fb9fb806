//! Conjugate belief over an unknown tabular MDP.
//!
//! Each `(s, a)` cell carries an independent Dirichlet over successor states
//! and an independent known-precision Gaussian over its mean reward.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{RewardNoise, TabularMdp, Trajectory};
use crate::scalar::{Real, Scalar};

/// Prior hyperparameters as they appear in config files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorConfig {
    /// Dirichlet concentration given to every successor state.
    pub alpha0: f64,
    pub mu0: f64,
    pub tau0: f64,
    /// Precision the agent assumes for reward observations.
    pub tau_obs: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            alpha0: 1.0,
            mu0: 0.0,
            tau0: 1.0,
            tau_obs: 1.0,
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.alpha0)
            || !positive(self.tau0)
            || !positive(self.tau_obs)
            || !self.mu0.is_finite()
        {
            return Err(Error::InvalidParameter(format!(
                "prior needs alpha0, tau0, tau_obs > 0 and finite mu0: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
struct PriorSnapshot<T> {
    alpha: Vec<T>,
    mu: Vec<T>,
    tau: Vec<T>,
}

/// Posterior over transitions and mean rewards.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorState<T> {
    states: usize,
    actions: usize,
    horizon: usize,
    initial: Vec<T>,
    noise: Vec<RewardNoise>,
    alpha: Vec<T>,
    mu: Vec<T>,
    tau: Vec<T>,
    visits: Vec<u64>,
    tau_obs: T,
    prior: PriorSnapshot<T>,
    known_rewards: Option<Vec<T>>,
    known_transitions: Option<Vec<T>>,
}

impl<T: Scalar> PosteriorState<T> {
    /// Posterior with the same shape, start distribution and reward-noise
    /// spec as `template`, and an explicit prior. `alpha` is indexed like the
    /// transition kernel, `mu`/`tau` like the reward table.
    pub fn with_prior(
        template: &TabularMdp<T>,
        alpha: Vec<T>,
        mu: Vec<T>,
        tau: Vec<T>,
        tau_obs: T,
    ) -> Result<Self> {
        let (s, a) = (template.states(), template.actions());
        if alpha.len() != s * a * s || mu.len() != s * a || tau.len() != s * a {
            return Err(Error::SizeMismatch(
                "prior arrays do not match the model shape".into(),
            ));
        }
        if alpha.iter().any(|&x| !(x > T::zero()))
            || tau.iter().any(|&x| !(x > T::zero()))
            || !(tau_obs > T::zero())
        {
            return Err(Error::InvalidParameter(
                "prior concentrations and precisions must be positive".into(),
            ));
        }
        Ok(Self {
            states: s,
            actions: a,
            horizon: template.horizon(),
            initial: template.initial().to_vec(),
            noise: template.reward_noises().to_vec(),
            prior: PriorSnapshot {
                alpha: alpha.clone(),
                mu: mu.clone(),
                tau: tau.clone(),
            },
            alpha,
            mu,
            tau,
            visits: vec![0; s * a],
            tau_obs,
            known_rewards: None,
            known_transitions: None,
        })
    }

    /// Posterior with the same prior in every cell.
    pub fn uniform(
        template: &TabularMdp<T>,
        alpha0: T,
        mu0: T,
        tau0: T,
        tau_obs: T,
    ) -> Result<Self> {
        let cells = template.states() * template.actions();
        Self::with_prior(
            template,
            vec![alpha0; cells * template.states()],
            vec![mu0; cells],
            vec![tau0; cells],
            tau_obs,
        )
    }

    /// Treats the rewards of `truth` as known: samples and means return them verbatim.
    pub fn with_known_rewards(mut self, truth: &TabularMdp<T>) -> Self {
        self.known_rewards = Some(truth.reward_means().to_vec());
        self
    }

    /// Treats the transitions of `truth` as known.
    pub fn with_known_transitions(mut self, truth: &TabularMdp<T>) -> Self {
        self.known_transitions = Some(truth.transitions().to_vec());
        self
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    #[inline]
    fn cell(&self, s: usize, a: usize) -> usize {
        s * self.actions + a
    }

    pub fn alpha(&self, s: usize, a: usize) -> &[T] {
        let c = self.cell(s, a) * self.states;
        &self.alpha[c..c + self.states]
    }

    pub fn mu(&self, s: usize, a: usize) -> T {
        self.mu[self.cell(s, a)]
    }

    pub fn tau(&self, s: usize, a: usize) -> T {
        self.tau[self.cell(s, a)]
    }

    pub fn visits(&self, s: usize, a: usize) -> u64 {
        self.visits[self.cell(s, a)]
    }

    pub fn tau_obs(&self) -> T {
        self.tau_obs
    }

    pub fn prior_tau(&self, s: usize, a: usize) -> T {
        self.prior.tau[self.cell(s, a)]
    }

    pub fn prior_mu(&self, s: usize, a: usize) -> T {
        self.prior.mu[self.cell(s, a)]
    }

    pub fn rewards_known(&self) -> bool {
        self.known_rewards.is_some()
    }

    pub fn transitions_known(&self) -> bool {
        self.known_transitions.is_some()
    }

    pub fn initial(&self) -> &[T] {
        &self.initial
    }

    /// Conditions on one observed transition `(s, a, r, s_next)`.
    pub fn update(&mut self, s: usize, a: usize, r: T, s_next: usize) -> Result<()> {
        for (what, index, bound) in [
            ("state", s, self.states),
            ("action", a, self.actions),
            ("next state", s_next, self.states),
        ] {
            if index >= bound {
                return Err(Error::IndexOutOfRange { what, index, bound });
            }
        }
        let c = self.cell(s, a);
        self.alpha[c * self.states + s_next] += T::one();
        self.visits[c] += 1;
        let tau_prev = self.tau[c];
        // precision is recomputed from the count so it never accumulates rounding
        let tau_new = self.prior.tau[c] + T::from_count(self.visits[c]) * self.tau_obs;
        self.mu[c] = (tau_prev * self.mu[c] + self.tau_obs * r) / tau_new;
        self.tau[c] = tau_new;
        Ok(())
    }

    /// Feeds every step of an episode through [`PosteriorState::update`].
    pub fn update_trajectory(&mut self, t: &Trajectory<T>) -> Result<()> {
        for h in 0..t.actions.len() {
            self.update(t.states[h], t.actions[h], t.rewards[h], t.states[h + 1])?;
        }
        Ok(())
    }

    /// Forgets all data.
    pub fn reset(&mut self) {
        self.alpha.clone_from(&self.prior.alpha);
        self.mu.clone_from(&self.prior.mu);
        self.tau.clone_from(&self.prior.tau);
        self.visits.iter_mut().for_each(|n| *n = 0);
    }

    /// Posterior-mean model: `P = alpha / sum(alpha)`, `r = mu`.
    pub fn mean_mdp(&self) -> TabularMdp<T> {
        let transitions = match &self.known_transitions {
            Some(p) => p.clone(),
            None => {
                let mut p = Vec::with_capacity(self.alpha.len());
                for row in self.alpha.chunks(self.states) {
                    let total: T = row.iter().copied().sum();
                    p.extend(row.iter().map(|&x| x / total));
                }
                p
            }
        };
        let rewards = self
            .known_rewards
            .clone()
            .unwrap_or_else(|| self.mu.clone());
        self.assemble(rewards, transitions)
    }

    fn assemble(&self, rewards: Vec<T>, transitions: Vec<T>) -> TabularMdp<T> {
        TabularMdp::new(
            self.states,
            self.actions,
            self.horizon,
            self.initial.clone(),
            rewards,
            self.noise.clone(),
            transitions,
        )
        .expect("posterior models are row-stochastic by construction")
    }

    /// Cell-major text dump of alpha, mu, tau and n.
    pub fn snapshot(&self) -> String {
        let mut out = format!(
            "# posterior S={} A={} H={} tau_obs={}\ns,a,n,mu,tau,alpha\n",
            self.states, self.actions, self.horizon, self.tau_obs
        );
        for s in 0..self.states {
            for a in 0..self.actions {
                let alpha: Vec<String> = self.alpha(s, a).iter().map(|x| x.to_string()).collect();
                let _ = writeln!(
                    out,
                    "{s},{a},{},{},{},{}",
                    self.visits(s, a),
                    self.mu(s, a),
                    self.tau(s, a),
                    alpha.join(" ")
                );
            }
        }
        out
    }
}

impl<T: Real> PosteriorState<T> {
    /// Posterior from config hyperparameters.
    pub fn from_config(template: &TabularMdp<T>, prior: &PriorConfig) -> Result<Self> {
        prior.validate()?;
        Self::uniform(
            template,
            T::from_f64(prior.alpha0),
            T::from_f64(prior.mu0),
            T::from_f64(prior.tau0),
            T::from_f64(prior.tau_obs),
        )
    }

    /// Draws one MDP from the posterior.
    pub fn sample_mdp<R: Rng + ?Sized>(&self, rng: &mut R) -> TabularMdp<T> {
        let transitions = match &self.known_transitions {
            Some(p) => p.clone(),
            None => {
                let mut p = Vec::with_capacity(self.alpha.len());
                for row in self.alpha.chunks(self.states) {
                    sample_dirichlet_into(row, rng, &mut p);
                }
                p
            }
        };
        let rewards = match &self.known_rewards {
            Some(r) => r.clone(),
            None => self
                .mu
                .iter()
                .zip(&self.tau)
                .map(|(&mu, &tau)| mu + T::sample_standard_normal(rng) / tau.sqrt())
                .collect(),
        };
        self.assemble(rewards, transitions)
    }
}

/// Appends one `Dirichlet(alpha)` draw to `out`.
///
/// Zero concentrations are allowed and yield exact zeros. An all-zero gamma
/// vector (underflow at tiny concentrations) is redrawn.
pub fn sample_dirichlet_into<T: Real, R: Rng + ?Sized>(alpha: &[T], rng: &mut R, out: &mut Vec<T>) {
    let start = out.len();
    loop {
        out.truncate(start);
        let mut total = T::zero();
        for &a in alpha {
            let g = T::sample_gamma(a, rng);
            total += g;
            out.push(g);
        }
        if total > T::zero() && total.is_finite() {
            for g in &mut out[start..] {
                *g /= total;
            }
            return;
        }
    }
}

pub fn sample_dirichlet<T: Real, R: Rng + ?Sized>(alpha: &[T], rng: &mut R) -> Vec<T> {
    let mut out = Vec::with_capacity(alpha.len());
    sample_dirichlet_into(alpha, rng, &mut out);
    out
}
