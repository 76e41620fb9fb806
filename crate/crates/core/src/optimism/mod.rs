//! Monte Carlo checks of stochastic optimism.
//!
//! `X` is stochastically optimistic for `Y` when `E[u(X)] >= E[u(Y)]` for
//! every convex increasing `u`. The checks here test that order on a finite
//! hinge family, test the matched Gaussian and Beta bounds for Dirichlet
//! projections, and measure coverage of the transition concentration radius.

mod coverage;
mod dominance;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posterior::sample_dirichlet_into;
use crate::scalar::Real;

pub use coverage::{
    subgaussian_coverage, subgaussian_radius, transition_coverage, transition_radius,
    worst_corner_deviation, CoverageReport,
};
pub use dominance::{
    check_dominance, check_order, DominancePair, DominanceReport, HingeMargin, StochasticOrder,
};

/// A scalar random variable that can be sampled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Gaussian {
        mean: f64,
        var: f64,
    },
    /// `P . v` with `P ~ Dirichlet(alpha)`.
    DirichletDot {
        alpha: Vec<f64>,
        v: Vec<f64>,
    },
    /// `v_low + (v_high - v_low) * P` with `P ~ Beta(a, b)`.
    BetaMix {
        a: f64,
        b: f64,
        v_low: f64,
        v_high: f64,
    },
    Point {
        value: f64,
    },
    /// `-X`.
    Negated {
        of: Box<DistributionSpec>,
    },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            DistributionSpec::Gaussian { mean, var } => {
                if !mean.is_finite() || !(*var >= 0.0 && var.is_finite()) {
                    return bad(format!(
                        "gaussian needs finite mean and var >= 0, got ({mean}, {var})"
                    ));
                }
            }
            DistributionSpec::DirichletDot { alpha, v } => {
                if alpha.len() != v.len() || alpha.is_empty() {
                    return bad("dirichlet_dot needs alpha and v of equal, nonzero length".into());
                }
                if alpha.iter().any(|&a| !(a >= 0.0 && a.is_finite()))
                    || alpha.iter().sum::<f64>() <= 0.0
                {
                    return bad("dirichlet_dot needs alpha >= 0 with positive total".into());
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return bad("dirichlet_dot needs finite v".into());
                }
            }
            DistributionSpec::BetaMix {
                a,
                b,
                v_low,
                v_high,
            } => {
                if !(*a >= 0.0 && *b >= 0.0 && a + b > 0.0)
                    || !v_low.is_finite()
                    || !v_high.is_finite()
                {
                    return bad(format!(
                        "beta_mix needs a, b >= 0 with a + b > 0, got ({a}, {b})"
                    ));
                }
            }
            DistributionSpec::Point { value } => {
                if !value.is_finite() {
                    return bad("point needs a finite value".into());
                }
            }
            DistributionSpec::Negated { of } => of.validate()?,
        }
        Ok(())
    }

    /// Exact expectation.
    pub fn mean(&self) -> f64 {
        match self {
            DistributionSpec::Gaussian { mean, .. } => *mean,
            DistributionSpec::DirichletDot { alpha, v } => {
                let total: f64 = alpha.iter().sum();
                alpha.iter().zip(v).map(|(a, x)| a * x).sum::<f64>() / total
            }
            DistributionSpec::BetaMix {
                a,
                b,
                v_low,
                v_high,
            } => v_low + (v_high - v_low) * a / (a + b),
            DistributionSpec::Point { value } => *value,
            DistributionSpec::Negated { of } => -of.mean(),
        }
    }

    pub fn negated(self) -> Self {
        DistributionSpec::Negated { of: Box::new(self) }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut scratch = Vec::new();
        self.sample_with(rng, &mut scratch)
    }

    /// Like [`DistributionSpec::sample`], reusing `scratch` for Dirichlet draws.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut Vec<f64>) -> f64 {
        match self {
            DistributionSpec::Gaussian { mean, var } => {
                mean + var.sqrt() * f64::sample_standard_normal(rng)
            }
            DistributionSpec::DirichletDot { alpha, v } => {
                scratch.clear();
                sample_dirichlet_into(alpha, rng, scratch);
                scratch.iter().zip(v).map(|(p, x)| p * x).sum()
            }
            DistributionSpec::BetaMix {
                a,
                b,
                v_low,
                v_high,
            } => {
                let p = loop {
                    let ga = f64::sample_gamma(*a, rng);
                    let gb = f64::sample_gamma(*b, rng);
                    if ga + gb > 0.0 {
                        break ga / (ga + gb);
                    }
                };
                v_low + (v_high - v_low) * p
            }
            DistributionSpec::Point { value } => *value,
            DistributionSpec::Negated { of } => -of.sample_with(rng, scratch),
        }
    }
}

/// The matched Gaussian `N(alpha.V / alpha.1, 1 / alpha.1)` that is
/// stochastically optimistic for `P . V`, `P ~ Dirichlet(alpha)`.
pub fn gaussian_dirichlet_pair(alpha: &[f64], v: &[f64]) -> Result<DistributionSpec> {
    if alpha.len() != v.len() {
        return Err(Error::SizeMismatch(format!(
            "alpha has {} entries, V has {}",
            alpha.len(),
            v.len()
        )));
    }
    if alpha.iter().any(|&a| !(a >= 0.0)) {
        return Err(Error::Precondition(
            "alpha must be componentwise >= 0".into(),
        ));
    }
    if v.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::Precondition("V must lie in [0, 1]".into()));
    }
    let total: f64 = alpha.iter().sum();
    if total < 2.0 {
        return Err(Error::Precondition(format!(
            "alpha must sum to at least 2, got {total}"
        )));
    }
    let mean = alpha.iter().zip(v).map(|(a, x)| a * x).sum::<f64>() / total;
    Ok(DistributionSpec::Gaussian {
        mean,
        var: 1.0 / total,
    })
}

/// Two-point reduction of a Dirichlet projection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reduction {
    /// `v_low + (v_high - v_low) * Beta(alpha_tilde, beta_tilde)`.
    Beta {
        alpha_tilde: f64,
        beta_tilde: f64,
        v_low: f64,
        v_high: f64,
    },
    /// All values coincide, so `P . v` is constant.
    PointMass { value: f64 },
}

impl Reduction {
    pub fn mean(&self) -> f64 {
        match *self {
            Reduction::Beta {
                alpha_tilde,
                beta_tilde,
                v_low,
                v_high,
            } => {
                let total = alpha_tilde + beta_tilde;
                alpha_tilde / total * v_high + beta_tilde / total * v_low
            }
            Reduction::PointMass { value } => value,
        }
    }

    pub fn to_spec(&self) -> DistributionSpec {
        match *self {
            Reduction::Beta {
                alpha_tilde,
                beta_tilde,
                v_low,
                v_high,
            } => DistributionSpec::BetaMix {
                a: alpha_tilde,
                b: beta_tilde,
                v_low,
                v_high,
            },
            Reduction::PointMass { value } => DistributionSpec::Point { value },
        }
    }
}

/// Collapses `P . v`, `P ~ Dirichlet(alpha)`, onto the extreme values of `v`
/// with Beta weights; the result is a mean-preserving spread of the original.
/// `v` must be sorted ascending.
pub fn beta_reduction(alpha: &[f64], v: &[f64]) -> Result<Reduction> {
    if alpha.len() != v.len() || v.is_empty() {
        return Err(Error::SizeMismatch(
            "alpha and v must be nonempty and of equal length".into(),
        ));
    }
    if v.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Precondition("v must be sorted ascending".into()));
    }
    if alpha.iter().any(|&a| !(a >= 0.0)) || alpha.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Precondition(
            "alpha must be >= 0 with positive total".into(),
        ));
    }
    let (low, high) = (v[0], v[v.len() - 1]);
    if high == low {
        return Ok(Reduction::PointMass { value: low });
    }
    let span = high - low;
    let mut alpha_tilde = 0.0;
    let mut beta_tilde = 0.0;
    for (&a, &x) in alpha.iter().zip(v) {
        alpha_tilde += a * (x - low) / span;
        beta_tilde += a * (high - x) / span;
    }
    Ok(Reduction::Beta {
        alpha_tilde,
        beta_tilde,
        v_low: low,
        v_high: high,
    })
}
