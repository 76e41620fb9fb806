//! Optimism-driven planners: UCRL2 for finite horizons, BEB, BOLT, and the
//! epsilon-greedy baseline.

use super::sampling::dot;
use super::{AgentConfig, Plan};
use crate::mdp::{argmax, backward_induction, induct};
use crate::posterior::PosteriorState;
use crate::scalar::Real;

/// Reward and L1 transition radii `(b_r, b_p)` for a cell with `visits`
/// observations in episode `episode`, before rescaling.
pub fn ucrl2_radii<T: Real>(
    states: usize,
    actions: usize,
    visits: u64,
    delta: f64,
    episode: u64,
) -> (T, T) {
    let delta_cell = delta / (2.0 * states as f64 * actions as f64 * episode.max(1) as f64);
    let log_term = (2.0 / delta_cell).ln();
    let n = visits.max(1) as f64;
    let b_r = (2.0 * log_term / n).sqrt();
    let b_p = (2.0 * states as f64 * log_term / n).sqrt();
    (T::from_f64(b_r), T::from_f64(b_p))
}

/// Maximizes `p . v` over distributions within L1 distance `radius` of
/// `p_hat`: half the radius is moved onto the best successor, taken from
/// the worst ones first.
pub fn optimistic_transition<T: Real>(p_hat: &[T], radius: T, v: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| {
        v[i].partial_cmp(&v[j])
            .expect("finite values")
            .then(i.cmp(&j))
    });
    shift_mass(p_hat, radius, v, &order)
}

fn shift_mass<T: Real>(p_hat: &[T], radius: T, v: &[T], ascending: &[usize]) -> Vec<T> {
    let mut p = p_hat.to_vec();
    if radius <= T::zero() {
        return p;
    }
    let best = argmax(v);
    let half = radius / T::from_count(2);
    p[best] = (p_hat[best] + half).min_of(T::one());
    let mut excess = p[best] - p_hat[best];
    for &i in ascending {
        if excess <= T::zero() {
            break;
        }
        if i == best {
            continue;
        }
        let take = p[i].min_of(excess);
        p[i] -= take;
        excess -= take;
    }
    p
}

#[inline]
fn clip<T: Real>(x: T, upper: T) -> T {
    x.max_of(T::zero()).min_of(upper)
}

/// Optimistic backward induction over the rectangular confidence set built
/// from per-cell reward and L1 transition radii.
pub fn plan_ucrl2_fh<T: Real>(
    post: &PosteriorState<T>,
    config: &AgentConfig,
    episode: u64,
) -> Plan<T> {
    let (states, actions, horizon) = (post.states(), post.actions(), post.horizon());
    let mean = post.mean_mdp();
    let scale = T::from_f64(config.scale);
    let radii: Vec<(T, T)> = (0..states * actions)
        .map(|c| {
            let (b_r, b_p) = ucrl2_radii::<T>(
                states,
                actions,
                post.visits(c / actions, c % actions),
                config.delta,
                episode,
            );
            let b_r = if post.rewards_known() {
                T::zero()
            } else {
                scale * b_r
            };
            let b_p = if post.transitions_known() {
                T::zero()
            } else {
                scale * b_p
            };
            (b_r, b_p)
        })
        .collect();
    let cap = T::from_count(horizon as u64);
    let mut order: Vec<usize> = (0..states).collect();
    let mut order_stage = usize::MAX;
    let (q, policy) = induct(states, actions, horizon, |h, s, a, next: &[T]| {
        if order_stage != h {
            order.sort_by(|&i, &j| {
                next[i]
                    .partial_cmp(&next[j])
                    .expect("finite values")
                    .then(i.cmp(&j))
            });
            order_stage = h;
        }
        let (b_r, b_p) = radii[s * actions + a];
        let row = mean.transition_row(s, a);
        let future = if b_p > T::zero() {
            dot(&shift_mass(row, b_p, next, &order), next)
        } else {
            dot(row, next)
        };
        clip(mean.reward(s, a) + b_r + future, cap)
    });
    Plan::greedy(q, policy)
}

/// Posterior-mean planning with a count bonus `beta / (1 + n)` on rewards.
pub fn plan_beb<T: Real>(post: &PosteriorState<T>, config: &AgentConfig) -> Plan<T> {
    let mean = post.mean_mdp();
    let beta = T::from_f64(config.beta);
    let cap = T::from_count(post.horizon() as u64);
    let (q, policy) = induct(
        post.states(),
        post.actions(),
        post.horizon(),
        |_, s, a, next| {
            let bonus = beta / (T::one() + T::from_count(post.visits(s, a)));
            clip(
                mean.reward(s, a) + bonus + dot(mean.transition_row(s, a), next),
                cap,
            )
        },
    );
    Plan::greedy(q, policy)
}

/// Reward posterior mean after `eta * H` fictitious observations of reward 1.
pub fn bolt_reward<T: Real>(mu: T, tau: T, tau_obs: T, pseudo: T) -> T {
    let weight = pseudo * tau_obs;
    mu + weight * (T::one() - mu) / (tau + weight)
}

/// Posterior-mean planning with optimistic pseudo-observations on rewards.
pub fn plan_bolt<T: Real>(post: &PosteriorState<T>, config: &AgentConfig) -> Plan<T> {
    let mean = post.mean_mdp();
    let pseudo = T::from_f64(config.eta) * T::from_count(post.horizon() as u64);
    let cap = T::from_count(post.horizon() as u64);
    let (q, policy) = induct(
        post.states(),
        post.actions(),
        post.horizon(),
        |_, s, a, next| {
            let r = if post.rewards_known() {
                mean.reward(s, a)
            } else {
                bolt_reward(post.mu(s, a), post.tau(s, a), post.tau_obs(), pseudo)
            };
            clip(r + dot(mean.transition_row(s, a), next), cap)
        },
    );
    Plan::greedy(q, policy)
}

/// Greedy on the posterior mean; the returned plan carries the per-step
/// override probability for execution.
pub fn plan_eps_greedy<T: Real>(post: &PosteriorState<T>, config: &AgentConfig) -> Plan<T> {
    let (q, policy) = backward_induction(&post.mean_mdp());
    Plan {
        policy,
        q,
        epsilon: config.epsilon,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentKind;
    use crate::environments::{make_chain, make_fig1};
    use crate::mdp::{RewardNoise, TabularMdp};
    use crate::posterior::PriorConfig;

    fn posterior(truth: &TabularMdp<f64>) -> PosteriorState<f64> {
        PosteriorState::from_config(truth, &PriorConfig::default()).unwrap()
    }

    #[test]
    fn l1_inner_maximization_by_hand() {
        let p: Vec<f64> = optimistic_transition(&[0.5, 0.5], 0.4, &[0.0, 1.0]);
        assert!((p[0] - 0.3).abs() < 1e-15 && (p[1] - 0.7).abs() < 1e-15);
        assert!((dot(&p, &[0.0, 1.0]) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn l1_takes_from_worst_first() {
        let p: Vec<f64> = optimistic_transition(&[0.2, 0.3, 0.5], 0.8, &[0.5, 0.0, 1.0]);
        // 0.4 moves to state 2: 0.3 from state 1, then 0.1 from state 0
        let expected = [0.1, 0.0, 0.9];
        for (x, e) in p.iter().zip(expected) {
            assert!((x - e).abs() < 1e-15);
        }
        let full: Vec<f64> = optimistic_transition(&[0.2, 0.3, 0.5], 10.0, &[0.5, 0.0, 1.0]);
        assert_eq!(full, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn radii_formula() {
        let (b_r, b_p) = ucrl2_radii::<f64>(3, 2, 4, 0.1, 5);
        let log_term = (2.0f64 / (0.1 / (2.0 * 3.0 * 2.0 * 5.0))).ln();
        assert!((b_r - (2.0 * log_term / 4.0).sqrt()).abs() < 1e-15);
        assert!((b_p - (6.0 * log_term / 4.0).sqrt()).abs() < 1e-15);
        // zero visits are treated as one
        assert_eq!(
            ucrl2_radii::<f64>(3, 2, 0, 0.1, 0),
            ucrl2_radii::<f64>(3, 2, 1, 0.1, 1)
        );
    }

    #[test]
    fn many_visits_recover_optimal_policy() {
        let truth: TabularMdp<f64> = make_chain(5, RewardNoise::None).unwrap();
        let mut post = posterior(&truth);
        let optimal = backward_induction(&truth).1;
        for s in 0..5 {
            for a in 0..2 {
                let next = crate::mdp::argmax(truth.transition_row(s, a));
                for _ in 0..2_000_000 {
                    post.update(s, a, truth.reward(s, a), next).unwrap();
                }
            }
        }
        let plan = plan_ucrl2_fh(&post, &AgentConfig::new(AgentKind::Ucrl2Fh), 1);
        assert_eq!(plan.policy.action(0, 0), optimal.action(0, 0));
        for h in 0..5 {
            assert_eq!(plan.policy.action(h, h), 1);
        }
    }

    #[test]
    fn zero_scale_is_mean_greedy() {
        let truth: TabularMdp<f64> = make_chain(4, RewardNoise::None).unwrap();
        let mut post = posterior(&truth);
        post.update(0, 1, 0.5, 1).unwrap();
        post.update(3, 1, 1.0, 3).unwrap();
        let mut cfg = AgentConfig::new(AgentKind::Ucrl2Fh);
        cfg.scale = 0.0;
        let plan = plan_ucrl2_fh(&post, &cfg, 7);
        let (q, policy) = backward_induction(&post.mean_mdp());
        assert_eq!(plan.policy, policy);
        assert_eq!(plan.q, q);
    }

    #[test]
    fn optimism_is_monotone_in_scale() {
        let truth: TabularMdp<f64> = make_fig1(3, RewardNoise::None).unwrap();
        let mut post = posterior(&truth);
        post.update(0, 0, 0.0, 2).unwrap();
        post.update(2, 0, 1.0, 2).unwrap();
        let mut cfg = AgentConfig::new(AgentKind::Ucrl2Fh);
        let mut last: Option<Vec<f64>> = None;
        for scale in [0.0, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0] {
            cfg.scale = scale;
            let q = plan_ucrl2_fh(&post, &cfg, 3).q.action_values().to_vec();
            if let Some(prev) = &last {
                assert!(prev.iter().zip(&q).all(|(a, b)| b >= a));
            }
            last = Some(q);
        }
    }

    #[test]
    fn beb_bonus() {
        let truth: TabularMdp<f64> = make_chain(3, RewardNoise::None).unwrap();
        let mut post = posterior(&truth);
        let mut cfg = AgentConfig::new(AgentKind::Beb);
        cfg.beta = 0.0;
        assert_eq!(
            plan_beb(&post, &cfg).policy,
            backward_induction(&post.mean_mdp()).1
        );

        // H = 1 isolates the bonus: Q = mu + beta / (1 + n)
        let bandit = TabularMdp::new(
            1,
            2,
            1,
            vec![1.0],
            vec![0.0; 2],
            vec![RewardNoise::None; 2],
            vec![1.0; 2],
        )
        .unwrap();
        let mut post1 = posterior(&bandit);
        cfg.beta = 1.0;
        let q0 = plan_beb(&post1, &cfg).q.q(0, 0, 0);
        post1.update(0, 0, 0.0, 0).unwrap();
        let q1 = plan_beb(&post1, &cfg).q.q(0, 0, 0);
        assert_eq!(q0, 1.0);
        assert_eq!(q1, 0.5);

        // beta = 2H outweighs any attainable value, so unvisited actions win
        post.update(0, 1, 1.0, 1).unwrap();
        cfg.beta = 6.0;
        let plan = plan_beb(&post, &cfg);
        assert_eq!(plan.policy.action(0, 2), 0);
    }

    #[test]
    fn bolt_pseudo_counts() {
        assert!((bolt_reward(0.0f64, 1.0, 1.0, 2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(bolt_reward(0.3f64, 5.0, 1.0, 0.0), 0.3);
        // empirical mean 0.2 over many observations
        let r = bolt_reward(0.2f64, 1e9, 1.0, 2.0);
        assert!((r - 0.2).abs() < 1e-8);

        let truth: TabularMdp<f64> = make_chain(3, RewardNoise::None).unwrap();
        let mut post = posterior(&truth);
        post.update(2, 1, 0.8, 2).unwrap();
        let mut cfg = AgentConfig::new(AgentKind::Bolt);
        cfg.eta = 0.0;
        let plan = plan_bolt(&post, &cfg);
        let (q, policy) = backward_induction(&post.mean_mdp());
        assert_eq!(plan.policy, policy);
        assert_eq!(plan.q, q);
    }

    #[test]
    fn eps_greedy_plan_carries_epsilon() {
        let truth: TabularMdp<f64> = make_chain(3, RewardNoise::None).unwrap();
        let post = posterior(&truth);
        let mut cfg = AgentConfig::new(AgentKind::EpsGreedy);
        cfg.epsilon = 0.0;
        let plan = plan_eps_greedy(&post, &cfg);
        assert_eq!(plan.epsilon, 0.0);
        assert_eq!(plan.policy, backward_induction(&post.mean_mdp()).1);
        cfg.epsilon = 0.1;
        assert_eq!(plan_eps_greedy(&post, &cfg).epsilon, 0.1);
    }
}
