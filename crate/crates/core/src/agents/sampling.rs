use rand::Rng;

use super::{AgentConfig, Plan};
use crate::mdp::{backward_induction, induct, QTable};
use crate::posterior::PosteriorState;
use crate::scalar::Real;

/// One posterior sample per episode, then act optimally for it.
pub fn plan_psrl<T: Real, R: Rng + ?Sized>(post: &PosteriorState<T>, rng: &mut R) -> Plan<T> {
    let sample = post.sample_mdp(rng);
    let (q, policy) = backward_induction(&sample);
    Plan::greedy(q, policy)
}

/// Variance of the stage-wise value noise in Gaussian PSRL after `visits`
/// observations of a cell.
pub fn gaussian_psrl_noise_variance<T: Real>(horizon: usize, visits: u64) -> T {
    let h1 = T::from_count(horizon as u64 + 1);
    h1 * h1 / T::from_count(visits.saturating_sub(2).max(1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageNoise {
    Sampled,
    /// Zero noise: planning collapses to the posterior-mean model.
    Off,
}

pub fn plan_gaussian_psrl<T: Real, R: Rng + ?Sized>(
    post: &PosteriorState<T>,
    rng: &mut R,
) -> Plan<T> {
    plan_gaussian_psrl_with(post, StageNoise::Sampled, rng)
}

/// Backward induction on the posterior-mean model with fresh Gaussian noise
/// added to every `Q(s, a, h)`.
pub fn plan_gaussian_psrl_with<T: Real, R: Rng + ?Sized>(
    post: &PosteriorState<T>,
    noise: StageNoise,
    rng: &mut R,
) -> Plan<T> {
    let mean = post.mean_mdp();
    let horizon = post.horizon();
    let sd: Vec<T> = (0..post.states() * post.actions())
        .map(|c| {
            gaussian_psrl_noise_variance::<T>(
                horizon,
                post.visits(c / post.actions(), c % post.actions()),
            )
            .sqrt()
        })
        .collect();
    let (q, policy) = induct(post.states(), post.actions(), horizon, |_, s, a, next| {
        let base = mean.reward(s, a) + dot(mean.transition_row(s, a), next);
        match noise {
            StageNoise::Sampled => {
                base + sd[s * post.actions() + a] * T::sample_standard_normal(rng)
            }
            StageNoise::Off => base,
        }
    });
    Plan::greedy(q, policy)
}

/// Envelope of `n_samples` sampled Q-tables, acted on greedily.
pub fn plan_optimistic_psrl<T: Real, R: Rng + ?Sized>(
    post: &PosteriorState<T>,
    config: &AgentConfig,
    rng: &mut R,
) -> Plan<T> {
    let tables: Vec<QTable<T>> = (0..config.n_samples.max(1))
        .map(|_| backward_induction(&post.sample_mdp(rng)).0)
        .collect();
    let q = QTable::envelope(&tables).expect("at least one sample");
    let policy = q.greedy_policy();
    Plan::greedy(q, policy)
}

#[inline]
pub(super) fn dot<T: Real>(p: &[T], v: &[T]) -> T {
    p.iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentKind;
    use crate::environments::make_chain;
    use crate::mdp::{episode_regret, RewardNoise, TabularMdp};
    use crate::posterior::PriorConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain_posterior(n: usize) -> (TabularMdp<f64>, PosteriorState<f64>) {
        let truth: TabularMdp<f64> = make_chain(n, RewardNoise::None).unwrap();
        let post = PosteriorState::from_config(&truth, &PriorConfig::default()).unwrap();
        (truth, post)
    }

    #[test]
    fn noise_variance_formula() {
        assert_eq!(gaussian_psrl_noise_variance::<f64>(4, 3), 25.0);
        assert_eq!(gaussian_psrl_noise_variance::<f64>(4, 5), 25.0 / 3.0);
        assert_eq!(gaussian_psrl_noise_variance::<f64>(4, 0), 25.0);
        assert_eq!(gaussian_psrl_noise_variance::<f64>(4, 1), 25.0);
    }

    #[test]
    fn overwhelming_evidence_recovers_truth() {
        let (truth, _) = chain_posterior(5);
        let big = 1e9;
        let alpha: Vec<f64> = truth
            .transitions()
            .iter()
            .map(|&p| p * big + 1e-3)
            .collect();
        let cells = truth.states() * truth.actions();
        let post = PosteriorState::with_prior(
            &truth,
            alpha,
            truth.reward_means().to_vec(),
            vec![big; cells],
            1.0,
        )
        .unwrap();
        // optimal means zero regret; unreachable cells may break ties either way
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let hits = (0..100)
            .filter(|_| episode_regret(&truth, &plan_psrl(&post, &mut rng).policy).unwrap() < 1e-12)
            .count();
        assert!(hits >= 99, "{hits}/100");
    }

    #[test]
    fn psrl_is_seed_deterministic() {
        let (_, post) = chain_posterior(6);
        let a = plan_psrl(&post, &mut ChaCha8Rng::seed_from_u64(8));
        let b = plan_psrl(&post, &mut ChaCha8Rng::seed_from_u64(8));
        assert_eq!(a, b);
    }

    #[test]
    fn single_state_psrl_is_stagewise_argmax() {
        let truth = TabularMdp::new(
            1,
            3,
            4,
            vec![1.0],
            vec![0.0; 3],
            vec![RewardNoise::None; 3],
            vec![1.0; 3],
        )
        .unwrap();
        let post = PosteriorState::from_config(&truth, &PriorConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let mut replay = rng.clone();
            let plan = plan_psrl(&post, &mut rng);
            let sample = post.sample_mdp(&mut replay);
            let best = crate::mdp::argmax(sample.reward_means());
            for h in 0..4 {
                assert_eq!(plan.policy.action(0, h), best);
            }
        }
    }

    #[test]
    fn noiseless_gaussian_psrl_is_mean_greedy() {
        let (_, mut post) = chain_posterior(5);
        post.update(0, 1, 0.4, 1).unwrap();
        post.update(4, 1, 0.9, 4).unwrap();
        let plan =
            plan_gaussian_psrl_with(&post, StageNoise::Off, &mut ChaCha8Rng::seed_from_u64(0));
        let (q, policy) = backward_induction(&post.mean_mdp());
        assert_eq!(plan.policy, policy);
        assert_eq!(plan.q, q);
    }

    #[test]
    fn gaussian_noise_has_stated_spread() {
        // S = 1, A = 1, H = 1: Q = mu + w with w ~ N(0, 4 / max(n - 2, 1))
        let truth = TabularMdp::new(
            1,
            1,
            1,
            vec![1.0],
            vec![0.0],
            vec![RewardNoise::None],
            vec![1.0],
        )
        .unwrap();
        let mut post = PosteriorState::from_config(&truth, &PriorConfig::default()).unwrap();
        for _ in 0..6 {
            post.update(0, 0, 0.0, 0).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 50_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| plan_gaussian_psrl(&post, &mut rng).q.q(0, 0, 0))
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 4.0 * (1.0f64 / n as f64).sqrt());
        // sd of the sample variance for a gaussian is var * sqrt(2 / n)
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt(), "{var}");
    }

    #[test]
    fn one_sample_envelope_is_psrl() {
        let (_, post) = chain_posterior(6);
        let mut cfg = AgentConfig::new(AgentKind::OptimisticPsrl);
        cfg.n_samples = 1;
        let a = plan_optimistic_psrl(&post, &cfg, &mut ChaCha8Rng::seed_from_u64(3));
        let b = plan_psrl(&post, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }

    #[test]
    fn envelope_dominates_each_sample() {
        let (_, post) = chain_posterior(4);
        let cfg = AgentConfig::new(AgentKind::OptimisticPsrl);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut replay = rng.clone();
        let plan = plan_optimistic_psrl(&post, &cfg, &mut rng);
        for _ in 0..cfg.n_samples {
            let q = backward_induction(&post.sample_mdp(&mut replay)).0;
            for (m, x) in plan.q.action_values().iter().zip(q.action_values()) {
                assert!(m >= x);
            }
        }
    }
}
