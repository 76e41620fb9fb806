use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::posterior::sample_dirichlet_into;
use crate::scalar::Real;

/// Radius `sqrt(2 log(2/delta) / n)` that the mean of `n` independent
/// 1-sub-Gaussian samples exceeds with probability at most `delta`.
pub fn subgaussian_radius(n: f64, delta: f64) -> f64 {
    (2.0 * (2.0 / delta).ln() / n).sqrt()
}

/// Transition concentration radius `2H sqrt(2 log(2/delta) / max(n - 2, 1))`.
pub fn transition_radius(horizon: f64, n: f64, delta: f64) -> f64 {
    2.0 * horizon * (2.0 * (2.0 / delta).ln() / (n - 2.0).max(1.0)).sqrt()
}

/// `max_{v in {0, H}^S} (p - mean) . v`, attained by putting `H` on every
/// coordinate where `p` exceeds the mean.
pub fn worst_corner_deviation(p: &[f64], mean: &[f64], horizon: f64) -> f64 {
    horizon
        * p.iter()
            .zip(mean)
            .map(|(a, b)| (a - b).max(0.0))
            .sum::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoverageReport {
    pub trials: usize,
    pub violations: usize,
    pub bound: f64,
    pub delta: f64,
    /// Standard error of the violation rate at the nominal rate `delta`.
    pub standard_error: f64,
}

impl CoverageReport {
    fn new(trials: usize, violations: usize, bound: f64, delta: f64) -> Self {
        Self {
            trials,
            violations,
            bound,
            delta,
            standard_error: (delta * (1.0 - delta) / trials as f64).sqrt(),
        }
    }

    pub fn rate(&self) -> f64 {
        self.violations as f64 / self.trials as f64
    }

    /// Violation rate no worse than `delta + 3 SE`.
    pub fn within_nominal(&self) -> bool {
        self.rate() <= self.delta + 3.0 * self.standard_error
    }
}

fn check_common(delta: f64, trials: usize) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    if trials < 10_000 {
        return Err(Error::InvalidParameter(format!(
            "coverage needs at least 1e4 trials, got {trials}"
        )));
    }
    Ok(())
}

/// Draws `P ~ Dirichlet(alpha)` and counts how often the worst-case
/// deviation over future values in `[0, H]^S` exceeds the transition
/// concentration radius for `n_eff` visits.
pub fn transition_coverage<R: Rng + ?Sized>(
    alpha: &[f64],
    horizon: f64,
    n_eff: f64,
    delta: f64,
    trials: usize,
    rng: &mut R,
) -> Result<CoverageReport> {
    check_common(delta, trials)?;
    if alpha.is_empty() || alpha.iter().any(|&a| !(a >= 0.0)) || alpha.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidParameter(
            "alpha must be >= 0 with positive total".into(),
        ));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter("horizon must be positive".into()));
    }
    let total: f64 = alpha.iter().sum();
    let mean: Vec<f64> = alpha.iter().map(|a| a / total).collect();
    let bound = transition_radius(horizon, n_eff, delta);
    let mut p = Vec::with_capacity(alpha.len());
    let mut violations = 0;
    for _ in 0..trials {
        p.clear();
        sample_dirichlet_into(alpha, rng, &mut p);
        if worst_corner_deviation(&p, &mean, horizon) > bound {
            violations += 1;
        }
    }
    Ok(CoverageReport::new(trials, violations, bound, delta))
}

/// Coverage of [`subgaussian_radius`] for means of `n` standard normals.
pub fn subgaussian_coverage<R: Rng + ?Sized>(
    n: usize,
    delta: f64,
    trials: usize,
    rng: &mut R,
) -> Result<CoverageReport> {
    check_common(delta, trials)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let bound = subgaussian_radius(n as f64, delta);
    let violations = (0..trials)
        .filter(|_| {
            let sum: f64 = (0..n).map(|_| f64::sample_standard_normal(rng)).sum();
            (sum / n as f64).abs() >= bound
        })
        .count();
    Ok(CoverageReport::new(trials, violations, bound, delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn brute_force_corners(p: &[f64], mean: &[f64], horizon: f64) -> f64 {
        let s = p.len();
        (0..1u32 << s)
            .map(|mask| {
                (0..s)
                    .map(|i| {
                        if mask >> i & 1 == 1 {
                            (p[i] - mean[i]) * horizon
                        } else {
                            0.0
                        }
                    })
                    .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn closed_form_matches_corner_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for s in 1..=8 {
            let alpha: Vec<f64> = (0..s).map(|i| 0.5 + i as f64).collect();
            let total: f64 = alpha.iter().sum();
            let mean: Vec<f64> = alpha.iter().map(|a| a / total).collect();
            for _ in 0..50 {
                let mut p = Vec::new();
                sample_dirichlet_into(&alpha, &mut rng, &mut p);
                let fast = worst_corner_deviation(&p, &mean, 3.0);
                let slow = brute_force_corners(&p, &mean, 3.0);
                assert!((fast - slow).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bound_at_three_visits() {
        let delta: f64 = 0.1;
        assert_eq!(
            transition_radius(4.0, 3.0, delta),
            8.0 * (2.0 * (2.0 / delta).ln()).sqrt()
        );
        assert_eq!(
            transition_radius(4.0, 0.5, delta),
            transition_radius(4.0, 3.0, delta)
        );
    }

    #[test]
    fn symmetric_cell_is_covered() {
        let report = transition_coverage(
            &[5.0, 5.0],
            3.0,
            10.0,
            0.1,
            100_000,
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        assert!(report.within_nominal(), "{report:?}");
    }

    #[test]
    fn concentrated_cell_never_violates() {
        let report = transition_coverage(
            &[1e6, 1.0],
            3.0,
            1e6 + 1.0,
            0.05,
            20_000,
            &mut ChaCha8Rng::seed_from_u64(2),
        )
        .unwrap();
        assert_eq!(report.violations, 0);
    }

    #[test]
    fn subgaussian_radius_covers_gaussian_means() {
        let report =
            subgaussian_coverage(10, 0.1, 20_000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(report.within_nominal(), "{report:?}");
        // two-sided gaussian tail at this radius is well below delta
        assert!(report.rate() < 0.1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(transition_coverage(&[1.0, 1.0], 3.0, 2.0, 0.1, 100, &mut rng).is_err());
        assert!(transition_coverage(&[1.0, 1.0], 3.0, 2.0, 1.5, 10_000, &mut rng).is_err());
        assert!(transition_coverage(&[], 3.0, 2.0, 0.1, 10_000, &mut rng).is_err());
    }
}
