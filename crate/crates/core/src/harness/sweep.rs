use rayon::prelude::*;
use serde::Serialize;

use super::{run_agent, LearningTime, LoopOptions};
use crate::agents::AgentConfig;
use crate::environments::EnvSpec;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepCell {
    pub n: usize,
    pub seed: u64,
    pub learning_time: LearningTime,
}

/// Learning times per `(N, seed)`, ordered by `N` then seed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
    pub budget: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeRow {
    pub n: usize,
    /// `+inf` when the median seed never reached the threshold.
    pub median: f64,
    /// Log-log slope over this and the two preceding rows, `NaN` if undefined.
    pub slope_window: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Median with the two middle values averaged; infinities propagate.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

const SLOPE_WINDOW: usize = 3;

impl SweepTable {
    pub fn ns(&self) -> Vec<usize> {
        let mut ns: Vec<usize> = self.cells.iter().map(|c| c.n).collect();
        ns.dedup();
        ns
    }

    pub fn cells_for(&self, n: usize) -> impl Iterator<Item = &SweepCell> {
        self.cells.iter().filter(move |c| c.n == n)
    }

    /// Median learning time per `N`, unreached seeds counted as `+inf`.
    pub fn medians(&self) -> Vec<(usize, f64)> {
        self.ns()
            .into_iter()
            .map(|n| {
                let lts: Vec<f64> = self
                    .cells_for(n)
                    .map(|c| c.learning_time.as_f64())
                    .collect();
                (n, median(&lts))
            })
            .collect()
    }

    pub fn slope_rows(&self) -> Vec<SlopeRow> {
        let medians = self.medians();
        (0..medians.len())
            .map(|i| {
                let slope_window = if i + 1 >= SLOPE_WINDOW {
                    let window: Vec<(f64, f64)> = medians[i + 1 - SLOPE_WINDOW..=i]
                        .iter()
                        .map(|&(n, m)| (n as f64, m))
                        .collect();
                    fit_slope(&window).map_or(f64::NAN, |f| f.slope)
                } else {
                    f64::NAN
                };
                SlopeRow {
                    n: medians[i].0,
                    median: medians[i].1,
                    slope_window,
                }
            })
            .collect()
    }

    /// Power-law fit over every `N` whose median was reached.
    pub fn fit(&self) -> Result<SlopeFit> {
        let points: Vec<(f64, f64)> = self
            .medians()
            .into_iter()
            .filter(|(_, m)| m.is_finite())
            .map(|(n, m)| (n as f64, m))
            .collect();
        fit_slope(&points)
    }
}

/// Runs `agent` on `template` resized to every `N` in `ns`, one cell per
/// `(N, seed)`, stopping each cell at its learning time.
pub fn scaling_sweep(
    template: &EnvSpec,
    agent: &AgentConfig,
    ns: &[usize],
    seeds: &[u64],
    budget: u64,
    threshold: f64,
) -> Result<SweepTable> {
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "sweep sizes must be strictly ascending".into(),
        ));
    }
    let mut envs = Vec::with_capacity(ns.len());
    for &n in ns {
        let spec = EnvSpec { n, ..*template };
        envs.push((n, spec.id(), spec.build::<f64>()?));
    }
    let jobs: Vec<(usize, u64)> = (0..envs.len())
        .flat_map(|i| seeds.iter().map(move |&s| (i, s)))
        .collect();
    let opts = LoopOptions {
        episodes: budget,
        record_decomposition: false,
        stop_at: Some(threshold),
    };
    let cells = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let (n, id, truth) = &envs[i];
            let trace = run_agent(truth, id, agent, seed, opts)?;
            Ok(SweepCell {
                n: *n,
                seed,
                learning_time: trace.learning_time(threshold),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { cells, budget })
}

/// Least-squares fit of `log y = slope * log x + intercept`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::Precondition(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(Error::Precondition(
            "slope fit needs finite positive coordinates".into(),
        ));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Precondition(
            "slope fit needs at least two distinct sizes".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let resid: f64 = logs
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - resid / syy };
    Ok(SlopeFit {
        slope,
        intercept,
        r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentKind;
    use crate::environments::EnvFamily;
    use crate::harness::{run_episode_loop, ExperimentConfig};

    #[test]
    fn exact_power_laws() {
        for p in [3.0, 4.0, 5.0] {
            let pts: Vec<(f64, f64)> = [5.0f64, 8.0, 10.0, 20.0]
                .iter()
                .map(|&n| (n, n.powf(p)))
                .collect();
            let fit = fit_slope(&pts).unwrap();
            assert!((fit.slope - p).abs() < 1e-9);
            assert!(fit.intercept.abs() < 1e-9);
            assert!((fit.r2 - 1.0).abs() < 1e-12);
        }
        assert!(fit_slope(&[(1.0, 1.0), (2.0, 8.0)]).is_err());
        assert!(fit_slope(&[(1.0, 1.0), (2.0, f64::INFINITY), (3.0, 2.0)]).is_err());
    }

    #[test]
    fn medians_with_unreached() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[1.0, f64::INFINITY, f64::INFINITY]), f64::INFINITY);
        assert_eq!(median(&[1.0, 2.0, f64::INFINITY]), 2.0);
    }

    #[test]
    fn slope_rows_from_synthetic_table() {
        let cells = [2usize, 4, 8, 16]
            .iter()
            .flat_map(|&n| {
                (0..3).map(move |seed| SweepCell {
                    n,
                    seed,
                    learning_time: LearningTime::Reached((n * n * n) as u64),
                })
            })
            .collect();
        let table = SweepTable {
            cells,
            budget: 10_000,
        };
        let rows = table.slope_rows();
        assert!(rows[0].slope_window.is_nan() && rows[1].slope_window.is_nan());
        assert!((rows[2].slope_window - 3.0).abs() < 1e-9);
        assert!((rows[3].slope_window - 3.0).abs() < 1e-9);
        assert!((table.fit().unwrap().slope - 3.0).abs() < 1e-9);
    }

    #[test]
    fn single_cell_sweep_is_one_loop() {
        let env = EnvSpec::new(EnvFamily::Chain, 3);
        let agent = AgentConfig::new(AgentKind::Psrl);
        let table = scaling_sweep(&env, &agent, &[3], &[7], 500, 0.1).unwrap();
        let cfg = ExperimentConfig::new(env, agent, 500);
        let trace = run_episode_loop(&cfg, 7).unwrap();
        assert_eq!(table.cells.len(), 1);
        assert_eq!(table.cells[0].learning_time, trace.learning_time(0.1));
    }

    #[test]
    fn sweep_rejects_unsorted_sizes() {
        let env = EnvSpec::new(EnvFamily::Chain, 3);
        let agent = AgentConfig::new(AgentKind::Psrl);
        assert!(scaling_sweep(&env, &agent, &[4, 3], &[0], 10, 0.1).is_err());
    }
}
