use std::io::{self, Write};

use super::{EstimationTrace, RegretTrace, SweepTable};
use crate::optimism::{CoverageReport, DominanceReport};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trace_csv<W: Write + ?Sized>(out: &mut W, trace: &RegretTrace) -> io::Result<()> {
    match &trace.decomposition {
        Some(parts) => {
            writeln!(out, "episode,delta,cum_regret,delta_opt,delta_conc")?;
            for (i, ((d, c), (o, n))) in trace.deltas.iter().zip(&trace.cum).zip(parts).enumerate()
            {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    i + 1,
                    format_float(*d),
                    format_float(*c),
                    format_float(*o),
                    format_float(*n)
                )?;
            }
        }
        None => {
            writeln!(out, "episode,delta,cum_regret")?;
            for (i, (d, c)) in trace.deltas.iter().zip(&trace.cum).enumerate() {
                writeln!(out, "{},{},{}", i + 1, format_float(*d), format_float(*c))?;
            }
        }
    }
    Ok(())
}

/// Unreached cells carry the `budget + 1` sentinel and `reached = false`.
pub fn write_sweep_csv<W: Write + ?Sized>(out: &mut W, table: &SweepTable) -> io::Result<()> {
    writeln!(out, "N,seed,learning_time,reached")?;
    for cell in &table.cells {
        writeln!(
            out,
            "{},{},{},{}",
            cell.n,
            cell.seed,
            cell.learning_time.value(),
            cell.learning_time.is_reached()
        )?;
    }
    Ok(())
}

pub fn write_slope_csv<W: Write + ?Sized>(out: &mut W, table: &SweepTable) -> io::Result<()> {
    writeln!(out, "N,median_lt,slope_window")?;
    for row in table.slope_rows() {
        writeln!(
            out,
            "{},{},{}",
            row.n,
            format_float(row.median),
            format_float(row.slope_window)
        )?;
    }
    Ok(())
}

pub fn write_estimation_csv<W: Write + ?Sized>(
    out: &mut W,
    traces: &[EstimationTrace],
) -> io::Result<()> {
    writeln!(out, "seed,episode,imagined_v1,true_v1")?;
    for trace in traces {
        for (i, v) in trace.imagined.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                trace.seed,
                i + 1,
                format_float(*v),
                format_float(trace.truth)
            )?;
        }
    }
    Ok(())
}

/// One row per hinge threshold, then a `mean` row.
pub fn write_dominance_csv<W: Write + ?Sized>(
    out: &mut W,
    report: &DominanceReport,
) -> io::Result<()> {
    writeln!(out, "c,margin,se,violated")?;
    for m in &report.margins {
        writeln!(
            out,
            "{},{},{},{}",
            format_float(m.c),
            format_float(m.margin),
            format_float(m.se),
            m.violated
        )?;
    }
    writeln!(
        out,
        "mean,{},{},{}",
        format_float(report.mean_margin),
        format_float(report.mean_se),
        report.mean_violated
    )
}

pub fn write_coverage_csv<W: Write + ?Sized>(
    out: &mut W,
    report: &CoverageReport,
) -> io::Result<()> {
    writeln!(out, "trials,violations,rate,bound,delta,standard_error")?;
    writeln!(
        out,
        "{},{},{},{},{},{}",
        report.trials,
        report.violations,
        format_float(report.rate()),
        format_float(report.bound),
        format_float(report.delta),
        format_float(report.standard_error)
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    Trace,
    Sweep,
    Slope,
    Estimation,
}

/// A gnuplot script that plots `csv_name` (resolved relative to the script).
pub fn write_gnuplot_script<W: Write + ?Sized>(
    out: &mut W,
    kind: PlotKind,
    csv_name: &str,
) -> io::Result<()> {
    writeln!(out, "set datafile separator ','")?;
    writeln!(out, "set key autotitle columnhead")?;
    writeln!(out, "set grid")?;
    match kind {
        PlotKind::Trace => {
            writeln!(out, "set xlabel 'episode'\nset ylabel 'cumulative regret'")?;
            writeln!(out, "plot '{csv_name}' using 1:3 with lines")?;
        }
        PlotKind::Sweep => {
            writeln!(
                out,
                "set logscale xy\nset xlabel 'N'\nset ylabel 'learning time'"
            )?;
            writeln!(
                out,
                "plot '{csv_name}' using 1:($4 eq 'true' ? $3 : 1/0) with points"
            )?;
        }
        PlotKind::Slope => {
            writeln!(
                out,
                "set logscale xy\nset xlabel 'N'\nset ylabel 'median learning time'"
            )?;
            writeln!(out, "plot '{csv_name}' using 1:2 with linespoints")?;
        }
        PlotKind::Estimation => {
            writeln!(out, "set xlabel 'episode'\nset ylabel 'start value'")?;
            writeln!(
                out,
                "plot '{csv_name}' using 2:3 with dots title 'imagined', '' using 2:4 with lines title 'true'"
            )?;
        }
    }
    Ok(())
}
