//! Generators for the benchmark MDP families.
//!
//! Every generator is generic over [`Scalar`] so the same construction can be
//! planned in floating point or exactly in rationals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{RewardNoise, TabularMdp};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvFamily {
    /// One action, uniform fan-out to `2N` terminal states.
    Fig1BanditS,
    /// One action, `N` stages of uniform rewarding/non-rewarding transitions.
    Fig2BanditH,
    /// Deterministic left/right chain with `S = H = N`.
    Chain,
    /// Fan-out with a second, reward-favouring action.
    #[serde(rename = "twoaction_appC")]
    TwoactionAppC,
}

/// Environment section of an experiment config.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    pub family: EnvFamily,
    pub n: usize,
    /// Defaults to unit gaussian noise for the chain and none elsewhere.
    #[serde(default)]
    pub reward_noise: Option<RewardNoise>,
}

impl EnvSpec {
    pub fn new(family: EnvFamily, n: usize) -> Self {
        Self {
            family,
            n,
            reward_noise: None,
        }
    }

    pub fn noise(&self) -> RewardNoise {
        self.reward_noise.unwrap_or(match self.family {
            EnvFamily::Chain => RewardNoise::Gaussian { sigma: 1.0 },
            _ => RewardNoise::None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let min = if self.family == EnvFamily::Chain {
            2
        } else {
            1
        };
        if self.n < min {
            return Err(Error::InvalidParameter(format!(
                "{:?} needs N >= {min}, got {}",
                self.family, self.n
            )));
        }
        self.noise().validate()
    }

    pub fn build<T: Scalar>(&self) -> Result<TabularMdp<T>> {
        self.validate()?;
        let noise = self.noise();
        match self.family {
            EnvFamily::Fig1BanditS => make_fig1(self.n, noise),
            EnvFamily::Fig2BanditH => make_fig2(self.n, noise),
            EnvFamily::Chain => make_chain(self.n, noise),
            EnvFamily::TwoactionAppC => make_twoaction(self.n, noise),
        }
    }

    pub fn id(&self) -> String {
        let name = match self.family {
            EnvFamily::Fig1BanditS => "fig1_bandit_s",
            EnvFamily::Fig2BanditH => "fig2_bandit_h",
            EnvFamily::Chain => "chain",
            EnvFamily::TwoactionAppC => "twoaction_appC",
        };
        format!("{name}_{}", self.n)
    }
}

fn point_mass<T: Scalar>(states: usize, at: usize) -> Vec<T> {
    let mut rho = vec![T::zero(); states];
    rho[at] = T::one();
    rho
}

/// Builds the fan-out kernel shared by the fig1 and two-action families.
/// `split(a)` gives the probability of each rewarding and each non-rewarding
/// terminal state under action `a`.
fn fan_out<T: Scalar>(
    n: usize,
    actions: usize,
    noise: RewardNoise,
    split: impl Fn(usize) -> (T, T),
) -> Result<TabularMdp<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("fan-out needs N >= 1".into()));
    }
    let states = 2 * n + 1;
    let mut reward = vec![T::zero(); states * actions];
    let mut p = vec![T::zero(); states * actions * states];
    for a in 0..actions {
        let (good, bad) = split(a);
        let row = &mut p[a * states..(a + 1) * states];
        for (s, x) in row.iter_mut().enumerate().skip(1) {
            *x = if s <= n { good } else { bad };
        }
    }
    for s in 1..states {
        for a in 0..actions {
            let cell = s * actions + a;
            p[cell * states + s] = T::one();
            if s <= n {
                reward[cell] = T::one();
            }
        }
    }
    TabularMdp::new(
        states,
        actions,
        2,
        point_mass(states, 0),
        reward,
        vec![noise; states * actions],
        p,
    )
}

/// `S = 2N + 1`, `A = 1`, `H = 2`: state 0 fans out uniformly to states
/// `1..=2N`, the first `N` of which pay reward 1. `V*(0) = 1/2`.
pub fn make_fig1<T: Scalar>(n: usize, noise: RewardNoise) -> Result<TabularMdp<T>> {
    let share = T::from_ratio(1, 2 * n.max(1) as i64);
    fan_out(n, 1, noise, |_| (share, share))
}

/// Same fan-out as [`make_fig1`] under action 0; action 1 puts `0.6/N` on
/// each rewarding state and `0.4/N` on each of the others. `V*(0) = 0.6`.
pub fn make_twoaction<T: Scalar>(n: usize, noise: RewardNoise) -> Result<TabularMdp<T>> {
    let n_i = n.max(1) as i64;
    let uniform = T::from_ratio(1, 2 * n_i);
    let good = T::from_ratio(3, 5 * n_i);
    let bad = T::from_ratio(2, 5 * n_i);
    fan_out(n, 2, noise, |a| {
        if a == 0 {
            (uniform, uniform)
        } else {
            (good, bad)
        }
    })
}

/// `H`-stage analogue of [`make_fig1`].
///
/// Three states, one action: the start state 0 pays a known 1/2, state 1
/// pays 1 and state 2 pays 0; every state moves uniformly to `{1, 2}`. Each
/// stage contributes 1/2 in expectation, so `V*(0) = H/2`, and every stage's
/// estimate depends on an unknown transition row.
pub fn make_fig2<T: Scalar>(horizon: usize, noise: RewardNoise) -> Result<TabularMdp<T>> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("fig2 needs H >= 1".into()));
    }
    let half = T::from_ratio(1, 2);
    let reward = vec![half, T::one(), T::zero()];
    let mut p = Vec::with_capacity(9);
    for _ in 0..3 {
        p.extend([T::zero(), half, half]);
    }
    TabularMdp::new(3, 1, horizon, point_mass(3, 0), reward, vec![noise; 3], p)
}

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

/// Deterministic chain with `S = H = N`, starting at state 0.
///
/// `RIGHT` moves one step right (sticking at `N - 1`), `LEFT` one step left
/// (sticking at 0). Only `(N - 1, RIGHT)` pays a mean reward of 1, so the
/// all-right policy is the unique one with positive value.
pub fn make_chain<T: Scalar>(n: usize, noise: RewardNoise) -> Result<TabularMdp<T>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "chain needs N >= 2, got {n}"
        )));
    }
    let states = n;
    let mut reward = vec![T::zero(); states * 2];
    let mut p = vec![T::zero(); states * 2 * states];
    for s in 0..states {
        let left = s.saturating_sub(1);
        let right = (s + 1).min(states - 1);
        p[(s * 2 + LEFT) * states + left] = T::one();
        p[(s * 2 + RIGHT) * states + right] = T::one();
    }
    reward[(states - 1) * 2 + RIGHT] = T::one();
    TabularMdp::new(
        states,
        2,
        n,
        point_mass(states, 0),
        reward,
        vec![noise; states * 2],
        p,
    )
}
