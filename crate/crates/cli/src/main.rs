use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use psrl_core::harness::{
    self, estimation_study, scaling_sweep, write_coverage_csv, write_dominance_csv,
    write_estimation_csv, write_gnuplot_script, write_slope_csv, write_sweep_csv, write_trace_csv,
    CoverageConfig, ExperimentConfig, PlotKind,
};
use psrl_core::optimism::{check_dominance, transition_coverage, DominancePair};
use psrl_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Parser)]
#[command(
    name = "psrl",
    version,
    about = "Exploration experiments on finite-horizon tabular MDPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Regret trace per seed.
    Run(Common),
    /// Learning time per (N, seed), plus a slope table.
    Sweep(Common),
    /// Planned start-state value per episode against the truth.
    Estimate(Common),
    /// Hinge-margin test of stochastic optimism between two distributions.
    Dominance(Common),
    /// Violation rate of the transition concentration radius.
    Coverage(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed list with a single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, value_name = "n")]
    parallel: Option<usize>,
}

/// Raised for anything the user can fix in the config or flags.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(e: Error) -> anyhow::Error {
    match e {
        Error::Config(m)
        | Error::InvalidParameter(m)
        | Error::Precondition(m)
        | Error::SizeMismatch(m) => ConfigError(m).into(),
        other => other.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let common = match &cli.command {
        Command::Run(c)
        | Command::Sweep(c)
        | Command::Estimate(c)
        | Command::Dominance(c)
        | Command::Coverage(c) => c,
    };
    if let Some(n) = common.parallel {
        if n == 0 {
            bail!(ConfigError("--parallel must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("starting worker pool")?;
    }
    match &cli.command {
        Command::Run(c) => run(c),
        Command::Sweep(c) => sweep(c),
        Command::Estimate(c) => estimate(c),
        Command::Dominance(c) => dominance(c),
        Command::Coverage(c) => coverage(c),
    }
}

fn load_experiment(common: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(&common.config).map_err(config_err)?;
    if let Some(seed) = common.seed {
        config.run.seeds = vec![seed];
    }
    Ok(config)
}

fn output_path(common: &Common, config: Option<&ExperimentConfig>) -> Option<PathBuf> {
    common
        .out
        .clone()
        .or_else(|| config.and_then(|c| c.run.output.clone()))
}

/// `dir/stem<suffix>.csv` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}{suffix}.csv"))
}

fn emit<F>(path: Option<&Path>, plot: Option<PlotKind>, write: F) -> anyhow::Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match path {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
            }
            let mut file = BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            );
            write(&mut file)?;
            file.flush()?;
            if let Some(kind) = plot {
                let name = path
                    .file_name()
                    .and_then(|n| n.to_str())
                    .unwrap_or_default();
                let mut script = File::create(path.with_extension("gp"))?;
                write_gnuplot_script(&mut script, kind, name)?;
            }
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn run(common: &Common) -> anyhow::Result<()> {
    let config = load_experiment(common)?;
    let out = output_path(common, Some(&config));
    if config.run.seeds.len() > 1 && out.is_none() {
        bail!(ConfigError("several seeds need an output path".into()));
    }
    let traces = harness::run_experiment(&config).map_err(config_err)?;
    let plot = config.run.plot_script.then_some(PlotKind::Trace);
    for trace in &traces {
        let path = match (&out, traces.len()) {
            (Some(p), 1) => Some(p.clone()),
            (Some(p), _) => Some(sibling(p, &format!("_seed{}", trace.seed))),
            (None, _) => None,
        };
        emit(path.as_deref(), plot, |w| write_trace_csv(w, trace))?;
    }
    Ok(())
}

fn sweep(common: &Common) -> anyhow::Result<()> {
    let config = load_experiment(common)?;
    if config.run.sweep_n.is_empty() {
        bail!(ConfigError(
            "run.sweep_n must list the sizes to sweep".into()
        ));
    }
    let table = scaling_sweep(
        &config.env,
        &config.agent,
        &config.run.sweep_n,
        &config.run.seeds,
        config.run.episodes,
        config.run.threshold,
    )
    .map_err(config_err)?;
    let out = output_path(common, Some(&config));
    let plot = config.run.plot_script;
    emit(out.as_deref(), plot.then_some(PlotKind::Sweep), |w| {
        write_sweep_csv(w, &table)
    })?;
    match &out {
        Some(p) => emit(
            Some(&sibling(p, "_slope")),
            plot.then_some(PlotKind::Slope),
            |w| write_slope_csv(w, &table),
        )?,
        None => emit(None, None, |w| write_slope_csv(w, &table))?,
    }
    if let Ok(fit) = table.fit() {
        eprintln!(
            "slope {:.4} intercept {:.4} r2 {:.4}",
            fit.slope, fit.intercept, fit.r2
        );
    }
    Ok(())
}

fn estimate(common: &Common) -> anyhow::Result<()> {
    let config = load_experiment(common)?;
    let traces = config
        .run
        .seeds
        .par_iter()
        .map(|&seed| estimation_study(&config.env, &config.agent, config.run.episodes, seed))
        .collect::<Result<Vec<_>, _>>()
        .map_err(config_err)?;
    let out = output_path(common, Some(&config));
    let plot = config.run.plot_script.then_some(PlotKind::Estimation);
    emit(out.as_deref(), plot, |w| write_estimation_csv(w, &traces))
}

fn dominance(common: &Common) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| ConfigError(format!("{}: {e}", common.config.display())))?;
    let pair: DominancePair =
        serde_json::from_str(&text).map_err(|e| ConfigError(e.to_string()))?;
    pair.validate().map_err(config_err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed.unwrap_or(0));
    let report = check_dominance(&pair, &mut rng).map_err(config_err)?;
    emit(common.out.as_deref(), None, |w| {
        write_dominance_csv(w, &report)
    })?;
    eprintln!(
        "{}: {} violation(s), worst margin {:.3} SE",
        if report.holds() { "holds" } else { "violated" },
        report.violations(),
        report.worst_z()
    );
    Ok(())
}

fn coverage(common: &Common) -> anyhow::Result<()> {
    let config = CoverageConfig::load(&common.config).map_err(config_err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed.unwrap_or(0));
    let report = transition_coverage(
        &config.alpha,
        config.horizon,
        config.n_eff(),
        config.delta,
        config.trials,
        &mut rng,
    )
    .map_err(config_err)?;
    emit(common.out.as_deref(), None, |w| {
        write_coverage_csv(w, &report)
    })?;
    eprintln!(
        "violation rate {:.5} against delta {} (SE {:.5}): {}",
        report.rate(),
        report.delta,
        report.standard_error,
        if report.within_nominal() {
            "within"
        } else {
            "exceeded"
        }
    );
    Ok(())
}
