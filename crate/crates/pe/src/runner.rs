//! Mode dispatch: each mode solves, writes its artifacts into the output
//! directory, records metrics and checks in the manifest, and fails with
//! [`RunError::Check`] when a check does not pass.

use std::fs;

use pe_core::analysis::{
    c1_distance_between, distance_between, distance_to_periodic, fit_stability, frozen_oracle, oracle_error,
    regularity_probe, OracleMode, Series, StabilityReport,
};
use pe_core::ibvp::{compatible_initial_data, solve_ibvp, Bump, Trajectory};
use pe_core::model::validate_hypothesis;
use pe_core::periodic::{pde_residual, solve_periodic, ConvergenceReport};
use pe_core::{Coefficients, PeriodicField};

use crate::config::{DampingConfig, ExperimentConfig, Mode, Model, SweepParameter};
use crate::error::RunError;
use crate::manifest::RunManifest;
use crate::output::{
    fmt_f64, write_convergence_csv, write_field_csv, write_regularity_csv, write_snapshots_csv, write_stability_csv,
    write_table_csv,
};

/// Windows required for a stability verdict.
pub const MIN_STABILITY_WINDOWS: usize = 8;
/// Relative slack for monotonicity across a damping sweep.
pub const SWEEP_SLACK: f64 = 0.02;
/// Required error reduction of the oracle comparison under grid doubling.
pub const ORACLE_MIN_RATIO: f64 = 3.5;
/// Allowed oracle error relative to the forcing size.
pub const ORACLE_REL_ERROR: f64 = 0.05;
/// Tolerance on the frozen two-window ratio against `|κ₁κ₂|`.
pub const REFLECTION_RATE_TOL: f64 = 0.10;
/// Tolerance on the frozen `C¹` rate against the `C⁰` rate.
pub const C1_RATE_TOL: f64 = 0.15;

/// Runs `mode`, filling `man`. Artifacts are written as they are produced.
pub fn run(mode: Mode, cfg: &ExperimentConfig, grid_scale: usize, man: &mut RunManifest) -> Result<(), RunError> {
    man.config = Some(cfg.clone());
    let model = cfg.model(grid_scale)?;
    fs::create_dir_all(man.out_dir())?;
    match mode {
        Mode::Validate => run_validate(cfg, &model, man),
        Mode::Periodic => run_periodic(cfg, &model, grid_scale, man),
        Mode::Ibvp => run_ibvp(cfg, &model, man),
        Mode::Stability => run_stability(cfg, &model, man),
        Mode::Sweep => run_sweep(cfg, grid_scale, man),
        Mode::Oracle => run_oracle(cfg, &model, man),
    }?;
    if man.all_passed() {
        Ok(())
    } else {
        Err(RunError::Check(man.failed_checks().join(", ")))
    }
}

fn run_validate(cfg: &ExperimentConfig, model: &Model, man: &mut RunManifest) -> Result<(), RunError> {
    let it = &model.iteration;
    let hyp = validate_hypothesis(&model.damping, it.nt, it.nx)?;
    man.check(
        "damping_hypothesis",
        hyp.passed(),
        format!(
            "beta in [{:e}, {:e}], |dt beta| <= {:e}, |dx beta| <= {:e}",
            hyp.min_beta, hyp.max_beta, hyp.max_dt, hyp.max_dx
        ),
    );
    let eq = &model.eq;
    let (l1, l2) = eq.lambda(0.0, 0.0);
    man.check(
        "equilibrium_subsonic",
        l1 < 0.0 && l2 > 0.0,
        format!("lambda = ({l1:e}, {l2:e})"),
    );
    let eps = model.forcing.eps_measured;
    man.check(
        "forcing_in_ball",
        eps < eq.neighborhood_radius,
        format!("eps = {eps:e}, radius = {:e}", eq.neighborhood_radius),
    );
    man.metric("eps", eps);
    man.metric("a0", eq.a0);
    man.metric("window_length", eq.window_length(cfg.domain.length, it.coefficients));
    Ok(())
}

fn solve(model: &Model, man: &mut RunManifest, phase: &str) -> Result<(PeriodicField, ConvergenceReport), RunError> {
    let m = model;
    let (field, report) = man.timed(phase, || solve_periodic(&m.forcing, &m.damping, &m.eq, &m.iteration))?;
    Ok((field, report))
}

fn record_convergence(man: &mut RunManifest, prefix: &str, r: &ConvergenceReport) {
    man.metric(&format!("{prefix}iterations"), r.iterations_used as f64);
    if let Some(theta) = r.theta {
        man.metric(&format!("{prefix}theta"), theta);
    }
    man.metric(&format!("{prefix}c0_norm"), r.final_c0_norm);
    man.metric(&format!("{prefix}c1_norm"), r.final_c1_norm);
}

fn run_periodic(
    cfg: &ExperimentConfig,
    model: &Model,
    grid_scale: usize,
    man: &mut RunManifest,
) -> Result<(), RunError> {
    let (field, report) = solve(model, man, "solve_periodic")?;
    record_convergence(man, "", &report);
    man.check(
        "converged",
        report.converged,
        format!(
            "{} iterations, last diff {:e}",
            report.iterations_used,
            report.diffs.last().copied().unwrap_or(0.0)
        ),
    );
    if field.nt >= 16 && field.nx >= 16 {
        let res = pde_residual(
            &field,
            &model.forcing,
            &model.damping,
            &model.eq,
            model.iteration.coefficients,
        )?;
        man.metric("pde_residual", res.interior());
        man.metric("boundary_mismatch", res.boundary_mismatch);
    }
    let out = &cfg.output;
    if out.emit_csv {
        write_convergence_csv(&report, &man.artifact_path("convergence.csv"))?;
        man.register("convergence.csv")?;
        if out.emit_fields {
            write_field_csv(&field, &model.eq, &man.artifact_path("periodic_field.csv"))?;
            man.register("periodic_field.csv")?;
        }
    }
    if cfg.run.regularity_probe {
        let fine_model = cfg.model(2 * grid_scale)?;
        let (fine, _) = solve(&fine_model, man, "solve_periodic_fine")?;
        let reg = regularity_probe(&field, &fine)?;
        man.metric("regularity_max_ratio", reg.max_ratio());
        if out.emit_csv {
            write_regularity_csv(&reg, &man.artifact_path("regularity.csv"))?;
            man.register("regularity.csv")?;
        }
    }
    Ok(())
}

fn window_length(cfg: &ExperimentConfig, model: &Model) -> f64 {
    model.eq.window_length(cfg.domain.length, model.iteration.coefficients)
}

fn horizon(cfg: &ExperimentConfig) -> f64 {
    cfg.run.horizon_periods * cfg.domain.period
}

fn integrate(
    model: &Model,
    periodic: &PeriodicField,
    amplitude: f64,
    horizon: f64,
    every: f64,
    man: &mut RunManifest,
    phase: &str,
) -> Result<Trajectory, RunError> {
    let m = model;
    let init = compatible_initial_data(periodic, &m.forcing, &Bump::quartic(amplitude, periodic.length))?;
    Ok(man.timed(phase, || {
        solve_ibvp(&init, &m.forcing, &m.damping, &m.eq, horizon, every, &m.ibvp)
    })?)
}

fn series_table(t: &Series, columns: &[&Series]) -> Vec<Vec<String>> {
    t.iter()
        .enumerate()
        .map(|(i, (time, _))| {
            let mut row = vec![fmt_f64(*time)];
            row.extend(columns.iter().map(|c| fmt_f64(c[i].1)));
            row
        })
        .collect()
}

fn run_ibvp(cfg: &ExperimentConfig, model: &Model, man: &mut RunManifest) -> Result<(), RunError> {
    let (periodic, report) = solve(model, man, "solve_periodic")?;
    record_convergence(man, "", &report);
    let every = window_length(cfg, model) / cfg.run.snapshots_per_window as f64;
    let traj = integrate(
        model,
        &periodic,
        cfg.run.bump_amplitude,
        horizon(cfg),
        every,
        man,
        "solve_ibvp",
    )?;
    let c0 = distance_to_periodic(&traj, &periodic)?;
    let c1 = pe_core::analysis::c1_distance_to_periodic(&traj, &periodic)?;
    man.metric("dt", traj.dt_used);
    man.metric("horizon", traj.horizon);
    man.metric("initial_distance", c0[0].1);
    man.metric("final_distance", c0[c0.len() - 1].1);
    if cfg.output.emit_csv {
        write_table_csv(
            &["t", "dist_c0", "dist_c1"],
            &series_table(&c0, &[&c0, &c1]),
            &man.artifact_path("distance.csv"),
        )?;
        man.register("distance.csv")?;
        if cfg.output.emit_fields {
            write_snapshots_csv(&traj, &traj.snapshots, &model.eq, &man.artifact_path("trajectory.csv"))?;
            man.register("trajectory.csv")?;
        }
    }
    Ok(())
}

/// Result of one stability experiment.
#[derive(Debug, Clone)]
pub struct StabilityOutcome {
    pub periodic: PeriodicField,
    pub convergence: ConvergenceReport,
    pub report: StabilityReport,
    pub c0: Series,
    pub c1: Series,
    /// Sup distance of the unperturbed run from the periodic solution.
    pub scheme_error: f64,
}

/// Periodic solve, then an unperturbed and a perturbed forward run. The
/// distances are taken between the two runs so the scheme's own drift
/// cancels; values below ten times that drift are treated as noise.
pub fn stability_experiment(
    cfg: &ExperimentConfig,
    model: &Model,
    man: &mut RunManifest,
    tag: &str,
) -> Result<StabilityOutcome, RunError> {
    let (periodic, convergence) = solve(model, man, &format!("{tag}solve_periodic"))?;
    let window = window_length(cfg, model);
    let every = window / cfg.run.snapshots_per_window as f64;
    let h = horizon(cfg);
    let base = integrate(model, &periodic, 0.0, h, every, man, &format!("{tag}ibvp_reference"))?;
    let pert = integrate(
        model,
        &periodic,
        cfg.run.bump_amplitude,
        h,
        every,
        man,
        &format!("{tag}ibvp_perturbed"),
    )?;
    let scheme_error = distance_to_periodic(&base, &periodic)?
        .iter()
        .map(|p| p.1)
        .fold(0.0, f64::max);
    let c0 = distance_between(&pert, &base)?;
    let c1 = c1_distance_between(&pert, &base)?;
    let report = fit_stability(&c0, &c1, window, 10.0 * scheme_error)?;
    Ok(StabilityOutcome {
        periodic,
        convergence,
        report,
        c0,
        c1,
        scheme_error,
    })
}

fn fmt_ratios(r: &[Option<f64>]) -> String {
    let v: Vec<String> = r.iter().flatten().map(|x| format!("{x:.4}")).collect();
    v.join(" ")
}

/// Decay checks on a stability report; in the frozen undamped mode also the
/// reflection-rate checks.
pub fn stability_checks(model: &Model, out: &StabilityOutcome, tag: &str, man: &mut RunManifest) {
    let rep = &out.report;
    let n = rep.windows();
    man.check(
        &format!("{tag}windows"),
        n >= MIN_STABILITY_WINDOWS,
        format!("{n} windows of length {:.6}", rep.window_length),
    );
    let mono = rep.c0.monotone_after;
    man.check(
        &format!("{tag}c0_monotone_after_first_window"),
        matches!(mono, Some(w) if w <= 1),
        format!("monotone from window {mono:?}; sups {:?}", rep.c0.sups),
    );
    let below = |r: &[Option<f64>]| r.iter().flatten().all(|x| *x < 1.0);
    man.check(
        &format!("{tag}c0_ratios_below_one"),
        below(&rep.c0.ratios),
        format!("ratios {}; floor {:e}", fmt_ratios(&rep.c0.ratios), rep.floor),
    );
    man.check(
        &format!("{tag}c1_rate_below_one"),
        rep.c1.xi.is_none_or(|x| x < 1.0),
        format!("xi_c1 {:?}; ratios {}", rep.c1.xi, fmt_ratios(&rep.c1.ratios)),
    );
    let f = &model.forcing;
    let q = (f.kappa1 * f.kappa2).abs();
    if model.iteration.coefficients == Coefficients::Frozen && model.damping.is_identically_zero() && q > 0.0 {
        let b0 = rep.c0.block_xi;
        man.check(
            &format!("{tag}reflection_rate"),
            b0.is_some_and(|b| (b - q).abs() <= REFLECTION_RATE_TOL * q),
            format!("two-window ratio {b0:?} vs |kappa1 kappa2| = {q}"),
        );
        let b1 = rep.c1.block_xi;
        man.check(
            &format!("{tag}c1_rate_matches_c0"),
            matches!((b0, b1), (Some(a), Some(b)) if (b - a).abs() <= C1_RATE_TOL * a),
            format!("two-window ratios c0 {b0:?}, c1 {b1:?}"),
        );
    }
}

fn record_stability(man: &mut RunManifest, tag: &str, out: &StabilityOutcome) {
    record_convergence(man, tag, &out.convergence);
    man.metric(&format!("{tag}scheme_error"), out.scheme_error);
    man.metric(&format!("{tag}floor"), out.report.floor);
    man.metric(&format!("{tag}window_length"), out.report.window_length);
    if let Some(x) = out.report.c0.xi {
        man.metric(&format!("{tag}xi_c0"), x);
    }
    if let Some(x) = out.report.c1.xi {
        man.metric(&format!("{tag}xi_c1"), x);
    }
    if let Some(x) = out.report.c0.block_xi {
        man.metric(&format!("{tag}block_xi_c0"), x);
    }
    if let Some(x) = out.report.c1.block_xi {
        man.metric(&format!("{tag}block_xi_c1"), x);
    }
}

fn run_stability(cfg: &ExperimentConfig, model: &Model, man: &mut RunManifest) -> Result<(), RunError> {
    let out = stability_experiment(cfg, model, man, "")?;
    record_stability(man, "", &out);
    stability_checks(model, &out, "", man);
    if cfg.output.emit_csv {
        write_stability_csv(&out.report, &man.artifact_path("stability.csv"))?;
        man.register("stability.csv")?;
        write_table_csv(
            &["t", "dist_c0", "dist_c1"],
            &series_table(&out.c0, &[&out.c0, &out.c1]),
            &man.artifact_path("distance.csv"),
        )?;
        man.register("distance.csv")?;
        write_convergence_csv(&out.convergence, &man.artifact_path("convergence.csv"))?;
        man.register("convergence.csv")?;
        if cfg.output.emit_fields {
            write_field_csv(&out.periodic, &model.eq, &man.artifact_path("periodic_field.csv"))?;
            man.register("periodic_field.csv")?;
        }
    }
    Ok(())
}

/// The configuration with the sweep parameter set to `value`.
pub fn sweep_config(
    cfg: &ExperimentConfig,
    param: SweepParameter,
    value: f64,
    base_eps: f64,
) -> Result<ExperimentConfig, RunError> {
    let mut c = cfg.clone();
    match param {
        SweepParameter::Epsilon => {
            if !(base_eps > 0.0) {
                return Err(RunError::Validation(
                    "an epsilon sweep needs nonzero base forcing".into(),
                ));
            }
            let factor = value / base_eps;
            for s in [&mut c.forcing.phi1b, &mut c.forcing.phi2b] {
                match s {
                    crate::config::SignalConfig::Zero => {}
                    crate::config::SignalConfig::Fourier { mean, cos, sin } => {
                        *mean *= factor;
                        cos.iter_mut().chain(sin.iter_mut()).for_each(|v| *v *= factor);
                    }
                    crate::config::SignalConfig::PowerSine { amplitude, .. } => *amplitude *= factor,
                }
            }
        }
        SweepParameter::Beta0 => c.damping = DampingConfig::Constant { beta0: value },
        SweepParameter::Kappa => {
            c.forcing.kappa1 = value;
            c.forcing.kappa2 = value;
        }
        SweepParameter::Grid => {
            c.grid.nt = value as usize;
            c.grid.nx = value as usize;
        }
    }
    c.run.sweep_parameter = None;
    c.run.sweep_values.clear();
    Ok(c)
}

fn run_sweep(cfg: &ExperimentConfig, grid_scale: usize, man: &mut RunManifest) -> Result<(), RunError> {
    let param = cfg.validate_sweep()?;
    let base_eps = cfg.model(grid_scale)?.forcing.eps_measured;
    let mut points = Vec::new();
    for &v in &cfg.run.sweep_values {
        let c = sweep_config(cfg, param, v, base_eps)?;
        let model = c.model(grid_scale)?;
        let tag = format!("sweep[{v}].");
        let out = stability_experiment(&c, &model, man, &tag)?;
        record_stability(man, &tag, &out);
        stability_checks(&model, &out, &tag, man);
        points.push((v, out));
    }
    if param == SweepParameter::Beta0 {
        dissipativity_check(&points, man);
    }
    if cfg.output.emit_csv {
        let rows: Vec<Vec<String>> = points
            .iter()
            .map(|(v, o)| {
                let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
                vec![
                    fmt_f64(*v),
                    o.convergence.iterations_used.to_string(),
                    opt(o.convergence.theta),
                    fmt_f64(o.convergence.final_c0_norm),
                    fmt_f64(o.convergence.final_c1_norm),
                    opt(o.report.c0.xi),
                    opt(o.report.c1.xi),
                    o.report.windows().to_string(),
                ]
            })
            .collect();
        write_table_csv(
            &[
                "value",
                "iterations",
                "theta",
                "periodic_c0",
                "periodic_c1",
                "xi_c0",
                "xi_c1",
                "windows",
            ],
            &rows,
            &man.artifact_path("sweep.csv"),
        )?;
        man.register("sweep.csv")?;
        let mut rows = Vec::new();
        for (v, o) in &points {
            for w in 0..o.report.windows() {
                rows.push(vec![
                    fmt_f64(*v),
                    w.to_string(),
                    fmt_f64(o.report.c0.sups[w]),
                    fmt_f64(o.report.c1.sups[w]),
                ]);
            }
        }
        write_table_csv(
            &["value", "window", "sup_c0", "sup_c1"],
            &rows,
            &man.artifact_path("sweep_windows.csv"),
        )?;
        man.register("sweep_windows.csv")?;
    }
    Ok(())
}

/// `b ≤ a` up to the relative slack and the noise floor.
fn not_above(a: f64, b: f64, floor: f64) -> bool {
    b <= a * (1.0 + SWEEP_SLACK) + floor
}

/// Periodic norms and window sups must not grow with `|β₀|`.
pub fn dissipativity_check(points: &[(f64, StabilityOutcome)], man: &mut RunManifest) {
    let mut order: Vec<&(f64, StabilityOutcome)> = points.iter().collect();
    order.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
    let mut norm_ok = true;
    let mut window_ok = true;
    let mut detail = Vec::new();
    for pair in order.windows(2) {
        let (va, a) = (pair[0].0, &pair[0].1);
        let (vb, b) = (pair[1].0, &pair[1].1);
        if !not_above(a.convergence.final_c0_norm, b.convergence.final_c0_norm, 0.0) {
            norm_ok = false;
            detail.push(format!(
                "periodic norm grows from beta0={va} ({:e}) to {vb} ({:e})",
                a.convergence.final_c0_norm, b.convergence.final_c0_norm
            ));
        }
        let floor = a.report.floor.max(b.report.floor);
        let n = a.report.windows().min(b.report.windows());
        for w in 0..n {
            let (sa, sb) = (a.report.c0.sups[w], b.report.c0.sups[w]);
            if !not_above(sa, sb, floor) {
                window_ok = false;
                detail.push(format!(
                    "window {w} sup grows from beta0={va} ({sa:e}) to {vb} ({sb:e})"
                ));
            }
        }
    }
    let norms: Vec<String> = order
        .iter()
        .map(|(v, o)| format!("{v}: {:e}", o.convergence.final_c0_norm))
        .collect();
    man.check(
        "dissipativity_periodic_norm",
        norm_ok,
        if norm_ok { norms.join(", ") } else { detail.join("; ") },
    );
    man.check(
        "dissipativity_window_sups",
        window_ok,
        if window_ok {
            "non-increasing in |beta0|".to_string()
        } else {
            detail.join("; ")
        },
    );
}

fn run_oracle(cfg: &ExperimentConfig, model: &Model, man: &mut RunManifest) -> Result<(), RunError> {
    if !model.damping.is_identically_zero() {
        return Err(RunError::Validation(
            "oracle mode requires zero damping (beta = 0)".into(),
        ));
    }
    let f = &model.forcing;
    let mode = if f.kappa1 == 0.0 && f.kappa2 == 0.0 {
        OracleMode::Transport
    } else {
        OracleMode::Reflection
    };
    let oracle = frozen_oracle(f, &model.damping, &model.eq, mode)?;
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for level in [1usize, 2] {
        let mut m = model.clone();
        m.iteration.nt *= level;
        m.iteration.nx *= level;
        m.iteration.coefficients = Coefficients::Frozen;
        let (field, report) = solve(&m, man, &format!("solve_periodic_x{level}"))?;
        let err = oracle_error(&field, &oracle);
        let ratio = errors.last().map(|prev: &f64| prev / err.midpoints);
        rows.push(vec![
            field.nt.to_string(),
            field.nx.to_string(),
            report.iterations_used.to_string(),
            fmt_f64(err.nodes),
            fmt_f64(err.midpoints),
            ratio.map(fmt_f64).unwrap_or_default(),
        ]);
        errors.push(err.midpoints);
        if level == 1 && cfg.output.emit_csv && cfg.output.emit_fields {
            write_field_csv(&field, &m.eq, &man.artifact_path("periodic_field.csv"))?;
            man.register("periodic_field.csv")?;
            write_field_csv(&oracle.sample(&field), &m.eq, &man.artifact_path("oracle_field.csv"))?;
            man.register("oracle_field.csv")?;
        }
    }
    let eps = f.eps_measured;
    man.metric("oracle_error", errors[0]);
    man.metric("oracle_error_fine", errors[1]);
    man.check(
        "oracle_accuracy",
        errors[0] <= ORACLE_REL_ERROR * eps.max(f64::MIN_POSITIVE),
        format!(
            "max error {:e} vs {ORACLE_REL_ERROR}·eps = {:e}",
            errors[0],
            ORACLE_REL_ERROR * eps
        ),
    );
    let ratio = if errors[1] == 0.0 {
        f64::INFINITY
    } else {
        errors[0] / errors[1]
    };
    man.metric("oracle_ratio", ratio);
    man.check(
        "oracle_convergence",
        ratio >= ORACLE_MIN_RATIO,
        format!("error ratio {ratio:.4} under grid doubling (need >= {ORACLE_MIN_RATIO})"),
    );
    if cfg.output.emit_csv {
        write_table_csv(
            &["nt", "nx", "iterations", "node_error", "midpoint_error", "ratio"],
            &rows,
            &man.artifact_path("oracle.csv"),
        )?;
        man.register("oracle.csv")?;
    }
    Ok(())
}
