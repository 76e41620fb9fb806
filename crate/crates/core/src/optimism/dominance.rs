use rand::Rng;
use serde::{Deserialize, Serialize};

use super::DistributionSpec;
use crate::error::{Error, Result};

/// Margin below `-SE_MULTIPLIER * SE` counts as a violation.
pub const SE_MULTIPLIER: f64 = 3.0;

/// A candidate ordering `x >= y` to be tested by Monte Carlo.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominancePair {
    pub x: DistributionSpec,
    pub y: DistributionSpec,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    /// Hinge thresholds; empty means `grid_points` evenly spaced over the
    /// pooled sample range.
    #[serde(default)]
    pub c_grid: Vec<f64>,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

fn default_samples() -> usize {
    1_000_000
}

fn default_grid_points() -> usize {
    21
}

impl DominancePair {
    pub fn new(x: DistributionSpec, y: DistributionSpec, n_samples: usize) -> Self {
        Self {
            x,
            y,
            n_samples,
            c_grid: Vec::new(),
            grid_points: default_grid_points(),
        }
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Self {
        self.c_grid = grid;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.x.validate()?;
        self.y.validate()?;
        if self.n_samples < 10_000 {
            return Err(Error::InvalidParameter(format!(
                "dominance tests need at least 1e4 samples, got {}",
                self.n_samples
            )));
        }
        if self.c_grid.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::InvalidParameter("c_grid must be sorted".into()));
        }
        if self.c_grid.is_empty() && self.grid_points < 2 {
            return Err(Error::InvalidParameter(
                "automatic grids need at least 2 points".into(),
            ));
        }
        Ok(())
    }
}

/// Which hinge family is tested.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StochasticOrder {
    /// `E[(X - c)+] >= E[(Y - c)+]`: stochastic optimism.
    IncreasingConvex,
    /// `E[min(X - c, 0)] >= E[min(Y - c, 0)]`: second-order dominance.
    IncreasingConcave,
}

impl StochasticOrder {
    #[inline]
    fn hinge(self, x: f64, c: f64) -> f64 {
        match self {
            StochasticOrder::IncreasingConvex => (x - c).max(0.0),
            StochasticOrder::IncreasingConcave => (x - c).min(0.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HingeMargin {
    pub c: f64,
    /// Estimated `E[h(X)] - E[h(Y)]`.
    pub margin: f64,
    pub se: f64,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominanceReport {
    pub margins: Vec<HingeMargin>,
    /// Estimated `E[X] - E[Y]`.
    pub mean_margin: f64,
    pub mean_se: f64,
    pub mean_violated: bool,
    pub n_samples: usize,
}

impl DominanceReport {
    pub fn violations(&self) -> usize {
        self.margins.iter().filter(|m| m.violated).count() + usize::from(self.mean_violated)
    }

    pub fn holds(&self) -> bool {
        self.violations() == 0
    }

    /// Smallest margin in units of its standard error.
    pub fn worst_z(&self) -> f64 {
        self.margins
            .iter()
            .map(|m| (m.margin, m.se))
            .chain(std::iter::once((self.mean_margin, self.mean_se)))
            .map(|(m, se)| {
                if se > 0.0 {
                    m / se
                } else if m < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    0.0
                }
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Tests `x` stochastically optimistic for `y` on the convex hinge family.
pub fn check_dominance<R: Rng + ?Sized>(
    pair: &DominancePair,
    rng: &mut R,
) -> Result<DominanceReport> {
    check_order(pair, StochasticOrder::IncreasingConvex, rng)
}

fn draw<R: Rng + ?Sized>(spec: &DistributionSpec, n: usize, rng: &mut R) -> Vec<f64> {
    let mut scratch = Vec::new();
    (0..n)
        .map(|_| spec.sample_with(rng, &mut scratch))
        .collect()
}

fn mean_and_var(xs: impl Iterator<Item = f64>, n: usize) -> (f64, f64) {
    // Welford, for stability at 1e6 samples
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, x) in xs.enumerate() {
        let d = x - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (x - mean);
    }
    (mean, if n > 1 { m2 / (n - 1) as f64 } else { 0.0 })
}

/// Tests `E[h(X)] >= E[h(Y)]` for every hinge `h` of `order` on the grid,
/// plus the means. `X` is drawn first, then `Y`, from the same stream.
pub fn check_order<R: Rng + ?Sized>(
    pair: &DominancePair,
    order: StochasticOrder,
    rng: &mut R,
) -> Result<DominanceReport> {
    pair.validate()?;
    let n = pair.n_samples;
    let xs = draw(&pair.x, n, rng);
    let ys = draw(&pair.y, n, rng);
    let grid = if pair.c_grid.is_empty() {
        let (lo, hi) = xs
            .iter()
            .chain(&ys)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let k = pair.grid_points;
        (0..k)
            .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
            .collect()
    } else {
        pair.c_grid.clone()
    };

    let compare = |fx: &dyn Fn(f64) -> f64| {
        let (mx, vx) = mean_and_var(xs.iter().map(|&x| fx(x)), n);
        let (my, vy) = mean_and_var(ys.iter().map(|&y| fx(y)), n);
        let se = (vx / n as f64 + vy / n as f64).sqrt();
        let margin = mx - my;
        (margin, se, margin < -SE_MULTIPLIER * se)
    };

    let margins = grid
        .iter()
        .map(|&c| {
            let (margin, se, violated) = compare(&|x| order.hinge(x, c));
            HingeMargin {
                c,
                margin,
                se,
                violated,
            }
        })
        .collect();
    let (mean_margin, mean_se, mean_violated) = compare(&|x| x);
    Ok(DominanceReport {
        margins,
        mean_margin,
        mean_se,
        mean_violated,
        n_samples: n,
    })
}
