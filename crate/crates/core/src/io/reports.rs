//! Plain-text result tables.

use std::io::Write;

use crate::filtering::FilterPoint;
use crate::io::format_float;
use crate::metrics::{Checkpoint, Convergence, MetricReport, SweepPoint};

/// `key<TAB>value` lines.
pub fn write_report<W: Write>(mut w: W, r: &MetricReport) -> std::io::Result<()> {
    let f = format_float;
    let rows = [
        ("density", f(r.density)),
        ("n_frames", r.n_frames.to_string()),
        ("n_seeds", r.n_seeds.to_string()),
        ("n_tp", r.n_tp.to_string()),
        ("n_fp", r.n_fp.to_string()),
        ("n_fn", r.n_fn.to_string()),
        ("ji", f(r.ji)),
        ("rmse_lateral", f(r.rmse_lateral)),
        ("rmse_axial", f(r.rmse_axial)),
        ("rmse_3d", f(r.rmse_3d)),
        ("efficiency_lateral", f(r.efficiency_lateral)),
        ("efficiency_3d", f(r.efficiency_3d)),
    ];
    for (k, v) in rows {
        writeln!(w, "{k}\t{v}")?;
    }
    w.flush()
}

pub const SWEEP_HEADER: &str =
    "density,n_frames,n_seeds,n_tp,n_fp,n_fn,ji,rmse_lateral,rmse_axial,rmse_3d,efficiency_lateral,efficiency_3d,seeds_to_converge";

/// `seeds_to_converge` is empty when the run stopped without converging.
pub fn write_sweep<W: Write>(mut w: W, points: &[SweepPoint]) -> std::io::Result<()> {
    let f = format_float;
    writeln!(w, "{SWEEP_HEADER}")?;
    for p in points {
        let r = &p.report;
        let conv = p.convergence.seeds_needed().map_or(String::new(), |n| n.to_string());
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            f(r.density),
            r.n_frames,
            r.n_seeds,
            r.n_tp,
            r.n_fp,
            r.n_fn,
            f(r.ji),
            f(r.rmse_lateral),
            f(r.rmse_axial),
            f(r.rmse_3d),
            f(r.efficiency_lateral),
            f(r.efficiency_3d),
            conv
        )?;
    }
    w.flush()
}

pub const FILTER_HEADER: &str = "rate,n_kept,ji,rmse_lateral,rmse_3d";

pub fn write_filter_curve<W: Write>(mut w: W, points: &[FilterPoint]) -> std::io::Result<()> {
    writeln!(w, "{FILTER_HEADER}")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{}",
            format_float(p.rate),
            p.n_kept,
            format_float(p.ji),
            format_float(p.rmse_lateral),
            format_float(p.rmse_3d)
        )?;
    }
    w.flush()
}

pub const CHECKPOINT_HEADER: &str = "n_seeds,ji,rmse_lateral,rmse_3d";

pub fn write_checkpoints<W: Write>(mut w: W, checkpoints: &[Checkpoint]) -> std::io::Result<()> {
    writeln!(w, "{CHECKPOINT_HEADER}")?;
    for c in checkpoints {
        writeln!(
            w,
            "{},{},{},{}",
            c.n_seeds,
            format_float(c.ji),
            format_float(c.rmse_lateral),
            format_float(c.rmse_3d)
        )?;
    }
    w.flush()
}

/// One line, e.g. `converged after 6000 seeds (6 checkpoints)`.
pub fn describe_convergence(c: &Convergence) -> String {
    match c {
        Convergence::Converged { seeds_needed, checkpoints } => {
            format!("converged after {seeds_needed} seeds ({checkpoints} checkpoints)")
        }
        Convergence::NotConverged {
            checkpoints,
            last_residuals,
        } => format!(
            "not converged after {checkpoints} checkpoints; last relative residuals ji {} rmse_lateral {} rmse_3d {}",
            format_float(last_residuals[0]),
            format_float(last_residuals[1]),
            format_float(last_residuals[2])
        ),
    }
}
