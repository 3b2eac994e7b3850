//! CSV emission and read-back.
//!
//! Every float is written with 17 significant digits so a read-back
//! reproduces the value exactly. Rows end in LF.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use pe_core::analysis::{RegularityReport, StabilityReport};
use pe_core::ibvp::{Snapshot, Trajectory};
use pe_core::periodic::ConvergenceReport;
use pe_core::{Equilibrium, PeriodicField};

use crate::error::RunError;

pub const FIELD_HEADER: [&str; 8] = ["t", "x", "phi1", "phi2", "m", "n", "rho", "u"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::Io(std::io::Error::other(format!("{}: {e}", path.display())))
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, RunError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file)))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<(), RunError> {
    w.flush().map_err(|e| io_err(path, e))?;
    let inner = w.into_inner().map_err(|e| io_err(path, e.error()))?;
    inner
        .into_inner()
        .map_err(|e| io_err(path, e.error()))?
        .sync_all()
        .map_err(|e| io_err(path, e))
}

fn write_row(
    w: &mut csv::Writer<BufWriter<File>>,
    eq: &Equilibrium,
    t: f64,
    x: f64,
    p1: f64,
    p2: f64,
    path: &Path,
) -> Result<(), RunError> {
    let pair = eq.pair(p1, p2);
    let state = eq.state(p1, p2)?;
    let row = [t, x, p1, p2, pair.m, pair.n, state.rho, state.u].map(fmt_f64);
    w.write_record(&row).map_err(|e| io_err(path, e))
}

/// Writes a periodic field, one row per node, `t` outer.
pub fn write_field_csv(field: &PeriodicField, eq: &Equilibrium, path: &Path) -> Result<(), RunError> {
    let mut w = writer(path)?;
    w.write_record(FIELD_HEADER).map_err(|e| io_err(path, e))?;
    for j in 0..field.nt {
        for k in 0..field.nx {
            let i = j * field.nx + k;
            write_row(&mut w, eq, field.t(j), field.x(k), field.phi1[i], field.phi2[i], path)?;
        }
    }
    finish(w, path)
}

/// Writes the given snapshots of a trajectory in the field layout.
pub fn write_snapshots_csv<'a>(
    traj: &Trajectory,
    snapshots: impl IntoIterator<Item = &'a Snapshot>,
    eq: &Equilibrium,
    path: &Path,
) -> Result<(), RunError> {
    let mut w = writer(path)?;
    w.write_record(FIELD_HEADER).map_err(|e| io_err(path, e))?;
    for s in snapshots {
        for k in 0..s.nx() {
            write_row(&mut w, eq, s.t, traj.x(k), s.phi1[k], s.phi2[k], path)?;
        }
    }
    finish(w, path)
}

/// Reads a field CSV written by [`write_field_csv`]. The grid is inferred:
/// `nx` from the first `t` block, `Nt = rows / nx`, `T* = Nt · t₁`, `L = x_last`.
pub fn read_field_csv(path: &Path) -> Result<PeriodicField, RunError> {
    let mut r = csv::ReaderBuilder::new().from_path(path).map_err(|e| io_err(path, e))?;
    let headers = r.headers().map_err(|e| io_err(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != FIELD_HEADER {
        return Err(io_err(path, format!("unexpected header {headers:?}")));
    }
    let mut rows: Vec<[f64; 4]> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let mut vals = [0.0; 4];
        for (i, v) in vals.iter_mut().enumerate() {
            *v = rec
                .get(i)
                .ok_or_else(|| io_err(path, "short row"))?
                .parse()
                .map_err(|e| io_err(path, e))?;
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(io_err(path, "no data rows"));
    }
    let t0 = rows[0][0];
    let nx = rows.iter().take_while(|r| r[0] == t0).count();
    if !rows.len().is_multiple_of(nx) {
        return Err(io_err(path, format!("{} rows do not form blocks of {nx}", rows.len())));
    }
    let nt = rows.len() / nx;
    let length = rows[nx - 1][1];
    let period = if nt > 1 { nt as f64 * rows[nx][0] } else { 1.0 };
    let mut field = PeriodicField::zeros(nt, nx, period, length)?;
    for (i, r) in rows.iter().enumerate() {
        field.phi1[i] = r[2];
        field.phi2[i] = r[3];
    }
    Ok(field)
}

/// Columns `iter,sup_diff,theta_est`; `theta_est` is empty where no ratio is defined.
pub fn write_convergence_csv(report: &ConvergenceReport, path: &Path) -> Result<(), RunError> {
    let mut w = writer(path)?;
    w.write_record(["iter", "sup_diff", "theta_est"])
        .map_err(|e| io_err(path, e))?;
    for (i, d) in report.diffs.iter().enumerate() {
        let theta = report.theta_estimates.get(i).copied().flatten();
        w.write_record([(i + 1).to_string(), fmt_f64(*d), fmt_opt(theta)])
            .map_err(|e| io_err(path, e))?;
    }
    finish(w, path)
}

/// Columns `window,sup_c0,sup_c1,ratio_c0,ratio_c1`, one row per window.
pub fn write_stability_csv(report: &StabilityReport, path: &Path) -> Result<(), RunError> {
    let mut w = writer(path)?;
    w.write_record(["window", "sup_c0", "sup_c1", "ratio_c0", "ratio_c1"])
        .map_err(|e| io_err(path, e))?;
    for i in 0..report.windows() {
        w.write_record([
            i.to_string(),
            fmt_f64(report.c0.sups[i]),
            fmt_opt(report.c1.sups.get(i).copied()),
            fmt_opt(report.c0.ratios[i]),
            fmt_opt(report.c1.ratios.get(i).copied().flatten()),
        ])
        .map_err(|e| io_err(path, e))?;
    }
    finish(w, path)
}

/// Columns `stencil,sup_coarse,sup_fine,ratio`.
pub fn write_regularity_csv(report: &RegularityReport, path: &Path) -> Result<(), RunError> {
    let mut w = writer(path)?;
    w.write_record(["stencil", "sup_coarse", "sup_fine", "ratio"])
        .map_err(|e| io_err(path, e))?;
    let rows = [
        ("d2t", report.d2t_sup),
        ("dtdx", report.dtdx_sup),
        ("d2x", report.d2x_sup),
    ];
    for (i, (name, s)) in rows.iter().enumerate() {
        w.write_record([
            name.to_string(),
            fmt_f64(s[0]),
            fmt_f64(s[1]),
            fmt_f64(report.refinement_ratios[i]),
        ])
        .map_err(|e| io_err(path, e))?;
    }
    finish(w, path)
}

/// Writes a generic table with a fixed header; cells are preformatted.
pub fn write_table_csv(header: &[&str], rows: &[Vec<String>], path: &Path) -> Result<(), RunError> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| io_err(path, e))?;
    }
    finish(w, path)
}

/// Writes `bytes` to `path`, flushing to disk.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let mut f = File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(bytes).map_err(|e| io_err(path, e))?;
    f.sync_all().map_err(|e| io_err(path, e))
}
