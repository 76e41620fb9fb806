//! Finite-horizon tabular MDPs with exact planning and evaluation.
//!
//! Stages are zero-based: an episode visits stages `0..H` and the value table
//! carries an extra terminal stage `H` that is identically zero.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// Observation noise added to the mean reward when an episode is simulated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RewardNoise {
    #[default]
    None,
    Gaussian {
        sigma: f64,
    },
}

impl RewardNoise {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RewardNoise::None => Ok(()),
            RewardNoise::Gaussian { sigma } if sigma > 0.0 && sigma.is_finite() => Ok(()),
            RewardNoise::Gaussian { sigma } => Err(Error::InvalidParameter(format!(
                "gaussian reward noise needs sigma > 0, got {sigma}"
            ))),
        }
    }
}

/// A finite-horizon MDP `(S, A, R, P, H, rho)`.
///
/// Immutable once built; [`TabularMdp::new`] is the only constructor and
/// rejects kernels that are not row-stochastic. Nothing is renormalized.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularMdp<T> {
    states: usize,
    actions: usize,
    horizon: usize,
    initial: Vec<T>,
    reward_mean: Vec<T>,
    reward_noise: Vec<RewardNoise>,
    transitions: Vec<T>,
}

impl<T: Scalar> TabularMdp<T> {
    /// `reward_mean` and `reward_noise` are indexed by `s * A + a`,
    /// `transitions` by `(s * A + a) * S + s'`.
    pub fn new(
        states: usize,
        actions: usize,
        horizon: usize,
        initial: Vec<T>,
        reward_mean: Vec<T>,
        reward_noise: Vec<RewardNoise>,
        transitions: Vec<T>,
    ) -> Result<Self> {
        if states == 0 || actions == 0 || horizon == 0 {
            return Err(Error::InvalidModel(format!(
                "sizes must be positive: S={states}, A={actions}, H={horizon}"
            )));
        }
        let cells = states * actions;
        if initial.len() != states {
            return Err(Error::SizeMismatch(format!(
                "initial distribution has {} entries, expected {states}",
                initial.len()
            )));
        }
        if reward_mean.len() != cells || reward_noise.len() != cells {
            return Err(Error::SizeMismatch(format!(
                "reward arrays have {}/{} entries, expected {cells}",
                reward_mean.len(),
                reward_noise.len()
            )));
        }
        if transitions.len() != cells * states {
            return Err(Error::SizeMismatch(format!(
                "transition kernel has {} entries, expected {}",
                transitions.len(),
                cells * states
            )));
        }
        check_distribution(&initial, "initial distribution")?;
        for (cell, row) in transitions.chunks(states).enumerate() {
            check_distribution(
                row,
                &format!("P[{}, {}, .]", cell / actions, cell % actions),
            )?;
        }
        if let Some(i) = reward_mean.iter().position(|r| !r.is_finite_value()) {
            return Err(Error::InvalidModel(format!(
                "reward mean at cell {i} is not finite"
            )));
        }
        for noise in &reward_noise {
            noise.validate()?;
        }
        Ok(Self {
            states,
            actions,
            horizon,
            initial,
            reward_mean,
            reward_noise,
            transitions,
        })
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

    pub fn initial(&self) -> &[T] {
        &self.initial
    }

    #[inline]
    pub fn cell(&self, s: usize, a: usize) -> usize {
        s * self.actions + a
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> T {
        self.reward_mean[self.cell(s, a)]
    }

    pub fn noise(&self, s: usize, a: usize) -> RewardNoise {
        self.reward_noise[self.cell(s, a)]
    }

    #[inline]
    pub fn transition_row(&self, s: usize, a: usize) -> &[T] {
        let start = self.cell(s, a) * self.states;
        &self.transitions[start..start + self.states]
    }

    pub fn reward_means(&self) -> &[T] {
        &self.reward_mean
    }

    pub fn reward_noises(&self) -> &[RewardNoise] {
        &self.reward_noise
    }

    pub fn transitions(&self) -> &[T] {
        &self.transitions
    }

    /// Expected value of a stage-0 value vector under the initial distribution.
    pub fn initial_value(&self, values: &StateValues<T>) -> T {
        self.initial
            .iter()
            .zip(values.stage(0))
            .fold(T::zero(), |acc, (&p, &v)| acc + p * v)
    }
}

fn check_distribution<T: Scalar>(p: &[T], what: &str) -> Result<()> {
    let mut total = T::zero();
    for &x in p {
        if !x.is_finite_value() || x < T::zero() {
            return Err(Error::InvalidModel(format!("{what} has entry {x}")));
        }
        total += x;
    }
    if total.abs_diff(T::one()) > T::stochastic_tolerance() {
        return Err(Error::InvalidModel(format!("{what} sums to {total}")));
    }
    Ok(())
}

/// Deterministic time-dependent policy `mu(s, h)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Policy {
    states: usize,
    horizon: usize,
    actions: Vec<usize>,
}

impl Policy {
    /// `actions` is indexed by `h * S + s`.
    pub fn new(
        states: usize,
        horizon: usize,
        num_actions: usize,
        actions: Vec<usize>,
    ) -> Result<Self> {
        if actions.len() != states * horizon {
            return Err(Error::SizeMismatch(format!(
                "policy has {} entries, expected {}",
                actions.len(),
                states * horizon
            )));
        }
        if let Some(&a) = actions.iter().find(|&&a| a >= num_actions) {
            return Err(Error::IndexOutOfRange {
                what: "action",
                index: a,
                bound: num_actions,
            });
        }
        Ok(Self {
            states,
            horizon,
            actions,
        })
    }

    pub fn constant(states: usize, horizon: usize, action: usize) -> Self {
        Self {
            states,
            horizon,
            actions: vec![action; states * horizon],
        }
    }

    #[inline]
    pub fn action(&self, s: usize, h: usize) -> usize {
        self.actions[h * self.states + s]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.actions
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn check_for<T: Scalar>(&self, mdp: &TabularMdp<T>) -> Result<()> {
        if self.states != mdp.states() || self.horizon != mdp.horizon() {
            return Err(Error::SizeMismatch(format!(
                "policy is {}x{}, model is S={} H={}",
                self.states,
                self.horizon,
                mdp.states(),
                mdp.horizon()
            )));
        }
        if let Some(&a) = self.actions.iter().find(|&&a| a >= mdp.actions()) {
            return Err(Error::IndexOutOfRange {
                what: "action",
                index: a,
                bound: mdp.actions(),
            });
        }
        Ok(())
    }
}

/// State values for stages `0..=H`, the last stage being zero.
#[derive(Clone, Debug, PartialEq)]
pub struct StateValues<T> {
    states: usize,
    horizon: usize,
    v: Vec<T>,
}

impl<T: Scalar> StateValues<T> {
    fn zeros(states: usize, horizon: usize) -> Self {
        Self {
            states,
            horizon,
            v: vec![T::zero(); states * (horizon + 1)],
        }
    }

    #[inline]
    pub fn get(&self, s: usize, h: usize) -> T {
        self.v[h * self.states + s]
    }

    #[inline]
    pub fn stage(&self, h: usize) -> &[T] {
        &self.v[h * self.states..(h + 1) * self.states]
    }

    fn stage_mut(&mut self, h: usize) -> &mut [T] {
        &mut self.v[h * self.states..(h + 1) * self.states]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn states(&self) -> usize {
        self.states
    }
}

/// Stage-indexed action values together with the values they induce.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable<T> {
    states: usize,
    actions: usize,
    horizon: usize,
    q: Vec<T>,
    values: StateValues<T>,
}

impl<T: Scalar> QTable<T> {
    /// Builds a table from raw action values (indexed `(h * S + s) * A + a`),
    /// setting `v(s, h) = max_a q(s, a, h)`.
    pub fn from_action_values(
        states: usize,
        actions: usize,
        horizon: usize,
        q: Vec<T>,
    ) -> Result<Self> {
        if q.len() != states * actions * horizon {
            return Err(Error::SizeMismatch(format!(
                "q table has {} entries, expected {}",
                q.len(),
                states * actions * horizon
            )));
        }
        let mut values = StateValues::zeros(states, horizon);
        for h in 0..horizon {
            for s in 0..states {
                let row = &q[(h * states + s) * actions..(h * states + s + 1) * actions];
                values.stage_mut(h)[s] = row[argmax(row)];
            }
        }
        Ok(Self {
            states,
            actions,
            horizon,
            q,
            values,
        })
    }

    #[inline]
    pub fn q(&self, s: usize, a: usize, h: usize) -> T {
        self.q[(h * self.states + s) * self.actions + a]
    }

    /// Action values at `(s, h)`.
    #[inline]
    pub fn row(&self, s: usize, h: usize) -> &[T] {
        let start = (h * self.states + s) * self.actions;
        &self.q[start..start + self.actions]
    }

    #[inline]
    pub fn v(&self, s: usize, h: usize) -> T {
        self.values.get(s, h)
    }

    pub fn values(&self) -> &StateValues<T> {
        &self.values
    }

    pub fn action_values(&self) -> &[T] {
        &self.q
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

    /// Greedy policy, ties to the lowest action index.
    pub fn greedy_policy(&self) -> Policy {
        let mut actions = Vec::with_capacity(self.states * self.horizon);
        for h in 0..self.horizon {
            for s in 0..self.states {
                actions.push(argmax(self.row(s, h)));
            }
        }
        Policy {
            states: self.states,
            horizon: self.horizon,
            actions,
        }
    }

    /// Pointwise maximum of several tables of identical shape.
    pub fn envelope<'a, I>(tables: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a QTable<T>>,
    {
        let mut iter = tables.into_iter();
        let first = iter.next()?;
        let mut q = first.q.clone();
        for t in iter {
            assert_eq!(
                t.q.len(),
                q.len(),
                "envelope of tables with different shapes"
            );
            for (m, &x) in q.iter_mut().zip(&t.q) {
                *m = m.max_of(x);
            }
        }
        Self::from_action_values(first.states, first.actions, first.horizon, q).ok()
    }
}

/// Index of the first maximal entry.
#[inline]
pub fn argmax<T: PartialOrd + Copy>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate().skip(1) {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

#[inline]
fn dot<T: Scalar>(p: &[T], v: &[T]) -> T {
    p.iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
}

/// Generic finite-horizon recursion.
///
/// `stage_q(h, s, a, v_next)` returns `Q(s, a, h)` given the stage-`h+1`
/// values; `V(s, h)` is then the maximum over actions. Every planner in the
/// crate is an instance of this loop.
pub fn induct<T, F>(
    states: usize,
    actions: usize,
    horizon: usize,
    mut stage_q: F,
) -> (QTable<T>, Policy)
where
    T: Scalar,
    F: FnMut(usize, usize, usize, &[T]) -> T,
{
    let mut q = vec![T::zero(); states * actions * horizon];
    let mut values = StateValues::zeros(states, horizon);
    let mut policy = vec![0usize; states * horizon];
    for h in (0..horizon).rev() {
        let (head, tail) = values.v.split_at_mut((h + 1) * states);
        let next = &tail[..states];
        let current = &mut head[h * states..];
        for s in 0..states {
            let base = (h * states + s) * actions;
            for a in 0..actions {
                q[base + a] = stage_q(h, s, a, next);
            }
            let best = argmax(&q[base..base + actions]);
            policy[h * states + s] = best;
            current[s] = q[base + best];
        }
    }
    (
        QTable {
            states,
            actions,
            horizon,
            q,
            values,
        },
        Policy {
            states,
            horizon,
            actions: policy,
        },
    )
}

/// Optimal action values and the greedy policy for `mdp`.
pub fn backward_induction<T: Scalar>(mdp: &TabularMdp<T>) -> (QTable<T>, Policy) {
    induct(
        mdp.states(),
        mdp.actions(),
        mdp.horizon(),
        |_, s, a, next| mdp.reward(s, a) + dot(mdp.transition_row(s, a), next),
    )
}

/// Values of a fixed deterministic policy.
pub fn policy_evaluation<T: Scalar>(
    mdp: &TabularMdp<T>,
    policy: &Policy,
) -> Result<StateValues<T>> {
    policy.check_for(mdp)?;
    let states = mdp.states();
    let mut values = StateValues::zeros(states, mdp.horizon());
    for h in (0..mdp.horizon()).rev() {
        let (head, tail) = values.v.split_at_mut((h + 1) * states);
        let next = &tail[..states];
        for (s, out) in head[h * states..].iter_mut().enumerate() {
            let a = policy.action(s, h);
            *out = mdp.reward(s, a) + dot(mdp.transition_row(s, a), next);
        }
    }
    Ok(values)
}

/// Values of the stochastic policy that follows `policy` with probability
/// `1 - epsilon` and a uniformly random action otherwise.
pub fn epsilon_greedy_evaluation<T: Scalar>(
    mdp: &TabularMdp<T>,
    policy: &Policy,
    epsilon: T,
) -> Result<StateValues<T>> {
    policy.check_for(mdp)?;
    if epsilon < T::zero() || epsilon > T::one() {
        return Err(Error::InvalidParameter(format!(
            "epsilon {epsilon} outside [0, 1]"
        )));
    }
    let states = mdp.states();
    let num_actions = T::from_count(mdp.actions() as u64);
    let mut values = StateValues::zeros(states, mdp.horizon());
    for h in (0..mdp.horizon()).rev() {
        let (head, tail) = values.v.split_at_mut((h + 1) * states);
        let next = &tail[..states];
        for (s, out) in head[h * states..].iter_mut().enumerate() {
            let mut total = T::zero();
            let mut greedy = T::zero();
            for a in 0..mdp.actions() {
                let q = mdp.reward(s, a) + dot(mdp.transition_row(s, a), next);
                total += q;
                if a == policy.action(s, h) {
                    greedy = q;
                }
            }
            *out = (T::one() - epsilon) * greedy + epsilon * total / num_actions;
        }
    }
    Ok(values)
}

/// Regret of `policy` over one episode of the true model `mdp`.
pub fn episode_regret<T: Scalar>(mdp: &TabularMdp<T>, policy: &Policy) -> Result<T> {
    let (optimal, _) = backward_induction(mdp);
    let achieved = policy_evaluation(mdp, policy)?;
    Ok(mdp.initial_value(optimal.values()) - mdp.initial_value(&achieved))
}

/// One simulated episode.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    /// Length `H + 1`.
    pub states: Vec<usize>,
    /// Length `H`.
    pub actions: Vec<usize>,
    /// Realized rewards, noise included, never clipped.
    pub rewards: Vec<T>,
}

/// How actions are chosen while simulating an episode.
pub trait ActionRule {
    fn choose<R: Rng + ?Sized>(&self, s: usize, h: usize, rng: &mut R) -> usize;
}

impl ActionRule for Policy {
    fn choose<R: Rng + ?Sized>(&self, s: usize, h: usize, _rng: &mut R) -> usize {
        self.action(s, h)
    }
}

/// Per-step uniform override of a deterministic policy.
#[derive(Clone, Copy, Debug)]
pub struct EpsilonGreedy<'a> {
    pub policy: &'a Policy,
    pub epsilon: f64,
    pub num_actions: usize,
}

impl EpsilonGreedy<'_> {
    /// Returns the action and whether the policy was overridden.
    pub fn draw<R: Rng + ?Sized>(&self, s: usize, h: usize, rng: &mut R) -> (usize, bool) {
        if self.epsilon > 0.0 && rng.random::<f64>() < self.epsilon {
            (rng.random_range(0..self.num_actions), true)
        } else {
            (self.policy.action(s, h), false)
        }
    }
}

impl ActionRule for EpsilonGreedy<'_> {
    fn choose<R: Rng + ?Sized>(&self, s: usize, h: usize, rng: &mut R) -> usize {
        self.draw(s, h, rng).0
    }
}

/// Draws an index from a discrete distribution.
pub fn sample_categorical<T: Real, R: Rng + ?Sized>(p: &[T], rng: &mut R) -> usize {
    let u = T::sample_unit(rng);
    let mut cum = T::zero();
    let mut last = 0;
    for (i, &x) in p.iter().enumerate() {
        if x > T::zero() {
            cum += x;
            last = i;
            if u < cum {
                return i;
            }
        }
    }
    last
}

fn sample_from_initial<T: Real, R: Rng + ?Sized>(mdp: &TabularMdp<T>, rng: &mut R) -> usize {
    sample_categorical(mdp.initial(), rng)
}

/// Simulates one episode of `mdp` under `rule`.
pub fn sample_episode<T, P, R>(mdp: &TabularMdp<T>, rule: &P, rng: &mut R) -> Trajectory<T>
where
    T: Real,
    P: ActionRule + ?Sized,
    R: Rng + ?Sized,
{
    let horizon = mdp.horizon();
    let mut states = Vec::with_capacity(horizon + 1);
    let mut actions = Vec::with_capacity(horizon);
    let mut rewards = Vec::with_capacity(horizon);
    let mut s = sample_from_initial(mdp, rng);
    states.push(s);
    for h in 0..horizon {
        let a = rule.choose(s, h, rng);
        let mut r = mdp.reward(s, a);
        if let RewardNoise::Gaussian { sigma } = mdp.noise(s, a) {
            r += T::from_f64(sigma) * T::sample_standard_normal(rng);
        }
        s = sample_categorical(mdp.transition_row(s, a), rng);
        actions.push(a);
        rewards.push(r);
        states.push(s);
    }
    Trajectory {
        states,
        actions,
        rewards,
    }
}
