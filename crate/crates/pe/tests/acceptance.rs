//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use pe::config::ExperimentConfig;
use pe::config::SweepParameter;
use pe::manifest::RunManifest;
use pe::runner::{dissipativity_check, stability_checks, stability_experiment, sweep_config};
use pe_core::analysis::{euler_residual, frozen_oracle, oracle_error, regularity_probe, OracleMode};
use pe_core::model::{make_default_equilibrium, BoundaryForcing, DampingField, Equilibrium};
use pe_core::periodic::{pde_residual, solve_periodic, ConvergenceReport, IterationConfig};
use pe_core::series::{FourierSeries, Polynomial, Signal};
use pe_core::{Coefficients, PeriodicField};

const PERIOD: f64 = 4.0;
const LENGTH: f64 = 1.0;

type Outcome = Result<(bool, String), String>;

fn eq() -> Equilibrium {
    make_default_equilibrium(1.0, 1.4).unwrap()
}

fn sine(a: f64) -> Signal {
    Signal::Fourier(FourierSeries::sine(PERIOD, a))
}

fn standard_forcing() -> BoundaryForcing {
    BoundaryForcing::new(sine(0.01), Signal::zero(PERIOD), 0.3, 0.3).unwrap()
}

fn standard_damping() -> DampingField {
    DampingField::constant(-0.5, PERIOD, LENGTH).unwrap()
}

fn solve(
    f: &BoundaryForcing,
    d: &DampingField,
    n: usize,
    co: Coefficients,
    tol: Option<f64>,
) -> Result<(PeriodicField, ConvergenceReport), String> {
    let mut cfg = IterationConfig::for_forcing(n, n, f);
    cfg.coefficients = co;
    if let Some(t) = tol {
        cfg.tol = t;
    }
    solve_periodic(f, d, &eq(), &cfg).map_err(|e| e.to_string())
}

fn in_range(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

fn zero_fixed_point() -> Outcome {
    let damping = DampingField::separable(
        -0.4,
        FourierSeries::new(PERIOD, 1.0, vec![0.3], vec![0.2]),
        Polynomial::new(vec![1.0, -0.5]),
        LENGTH,
    )
    .map_err(|e| e.to_string())?;
    let forcing = BoundaryForcing::zero(PERIOD, 0.4, -0.2).unwrap();
    let (field, report) = solve(&forcing, &damping, 128, Coefficients::Nonlinear, None)?;
    let sup = field.sup_norm();
    Ok((
        report.iterations_used == 1 && sup <= 1e-12,
        format!("{} iteration(s), sup norm {sup:e}", report.iterations_used),
    ))
}

fn frozen_transport_oracle() -> Outcome {
    let forcing = BoundaryForcing::new(sine(0.01), Signal::zero(PERIOD), 0.0, 0.0).unwrap();
    let damping = DampingField::zero(PERIOD, LENGTH).unwrap();
    let oracle = frozen_oracle(&forcing, &damping, &eq(), OracleMode::Transport).map_err(|e| e.to_string())?;
    let (a, _) = solve(&forcing, &damping, 128, Coefficients::Frozen, None)?;
    let (b, _) = solve(&forcing, &damping, 256, Coefficients::Frozen, None)?;
    let (ea, eb) = (oracle_error(&a, &oracle), oracle_error(&b, &oracle));
    let ratio = ea.midpoints / eb.midpoints;
    Ok((
        ea.midpoints.max(ea.nodes) <= 5e-4 && ratio >= 3.5,
        format!(
            "max error 128^2 {:.3e} (nodes {:.1e}), 256^2 {:.3e}, reduction {ratio:.3}",
            ea.midpoints, ea.nodes, eb.midpoints
        ),
    ))
}

fn contraction() -> Outcome {
    let base = standard_forcing();
    let forcing = base.scaled(0.01 / base.eps_measured).map_err(|e| e.to_string())?;
    let (_, report) = solve(&forcing, &standard_damping(), 128, Coefficients::Nonlinear, Some(1e-10))?;
    let ratios: Vec<f64> = report.diffs.windows(2).skip(1).map(|w| w[1] / w[0]).collect();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    Ok((
        report.converged && report.iterations_used <= 40 && worst < 0.9,
        format!(
            "eps {:.4}, {} iterations to 1e-10, largest ratio after iteration 2 {worst:.4}",
            forcing.eps_measured, report.iterations_used
        ),
    ))
}

fn linear_response(full: &ConvergenceReport) -> Outcome {
    let half = standard_forcing().scaled(0.5).map_err(|e| e.to_string())?;
    let (_, r) = solve(&half, &standard_damping(), 128, Coefficients::Nonlinear, None)?;
    let ratio = full.final_c0_norm / r.final_c0_norm;
    Ok((in_range(ratio, 1.8, 2.2), format!("norm ratio {ratio:.5}")))
}

fn pde_residual_order(fields: &[PeriodicField; 3], tols: &[f64; 3]) -> Outcome {
    let mut res = Vec::new();
    for f in fields {
        let r = pde_residual(
            f,
            &standard_forcing(),
            &standard_damping(),
            &eq(),
            Coefficients::Nonlinear,
        )
        .map_err(|e| e.to_string())?;
        res.push(r);
    }
    let interior = [
        res[0].interior() / res[1].interior(),
        res[1].interior() / res[2].interior(),
    ];
    let interior_ok = interior.iter().all(|r| in_range(*r, 3.0, 5.0));
    // Ratios are taken only above the 10·tol floor.
    let floors: Vec<f64> = tols.iter().map(|t| 10.0 * t).collect();
    let mut mismatch_ok = true;
    let mut mdetail = Vec::new();
    for i in 0..2 {
        let (a, b) = (res[i].boundary_mismatch, res[i + 1].boundary_mismatch);
        if a > floors[i] && b > floors[i + 1] {
            let r = a / b;
            mismatch_ok &= in_range(r, 3.0, 5.0);
            mdetail.push(format!("ratio {r:.3}"));
        } else {
            mismatch_ok &= b <= floors[i + 1];
            mdetail.push(format!("{a:.2e} -> {b:.2e} (below 10 tol)"));
        }
    }
    Ok((
        interior_ok && mismatch_ok,
        format!(
            "residual {:.3e} {:.3e} {:.3e}, ratios {:.3} {:.3}; boundary mismatch {}",
            res[0].interior(),
            res[1].interior(),
            res[2].interior(),
            interior[0],
            interior[1],
            mdetail.join(", ")
        ),
    ))
}

fn stability_config(frozen: bool) -> ExperimentConfig {
    let (kappa, beta, coeffs) = if frozen {
        (0.5, 0.0, "frozen")
    } else {
        (0.3, -0.5, "nonlinear")
    };
    let text = format!(
        r#"{{
          "gas": {{ "gamma": 1.4, "rho_bar": 1.0 }},
          "domain": {{ "period": {PERIOD}, "length": {LENGTH} }},
          "damping": {{ "kind": "constant", "beta0": {beta} }},
          "forcing": {{
            "phi1b": {{ "type": "fourier", "sin": [0.01] }},
            "phi2b": {{ "type": "zero" }},
            "kappa1": {kappa}, "kappa2": {kappa}
          }},
          "grid": {{ "coefficients": "{coeffs}" }},
          "output": {{ "emit_csv": false }}
        }}"#
    );
    let cfg = pe::parse_config_str(&text).unwrap();
    cfg.validate().unwrap();
    cfg
}

fn check_names(man: &RunManifest, tag: &str, names: &[&str]) -> (bool, Vec<String>) {
    let mut ok = true;
    let mut failed = Vec::new();
    for n in names {
        let full = format!("{tag}{n}");
        let c = man.checks.iter().find(|c| c.name == full);
        match c {
            Some(c) if c.passed => {}
            Some(c) => {
                ok = false;
                failed.push(format!("{}: {}", c.name, c.detail));
            }
            None => {
                ok = false;
                failed.push(format!("{full}: missing"));
            }
        }
    }
    (ok, failed)
}

struct StabilityRuns {
    man: RunManifest,
    summary: [String; 2],
}

fn stability_runs(dir: &Path) -> Result<StabilityRuns, String> {
    let mut man = RunManifest::new("acceptance", dir, 1, None);
    let mut summary = [String::new(), String::new()];
    for (i, frozen) in [false, true].into_iter().enumerate() {
        let cfg = stability_config(frozen);
        let model = cfg.model(1).map_err(|e| e.to_string())?;
        let tag = if frozen { "frozen." } else { "nonlinear." };
        let out = stability_experiment(&cfg, &model, &mut man, tag).map_err(|e| e.to_string())?;
        stability_checks(&model, &out, tag, &mut man);
        let r = &out.report;
        summary[i] = format!(
            "{tag} {} windows, xi c0 {:.4} c1 {:.4}, two-window c0 {:.4} c1 {:.4}",
            r.windows(),
            r.c0.xi.unwrap_or(f64::NAN),
            r.c1.xi.unwrap_or(f64::NAN),
            r.c0.block_xi.unwrap_or(f64::NAN),
            r.c1.block_xi.unwrap_or(f64::NAN)
        );
    }
    Ok(StabilityRuns { man, summary })
}

fn stability_rate(runs: &StabilityRuns) -> Outcome {
    let names = ["windows", "c0_monotone_after_first_window", "c0_ratios_below_one"];
    let (a, mut fa) = check_names(&runs.man, "nonlinear.", &names);
    let (b, fb) = check_names(&runs.man, "frozen.", &[&names[..], &["reflection_rate"]].concat());
    fa.extend(fb);
    let detail = if fa.is_empty() {
        format!("{}; {}", runs.summary[0], runs.summary[1])
    } else {
        fa.join("; ")
    };
    Ok((a && b, detail))
}

fn c1_stability(runs: &StabilityRuns) -> Outcome {
    let (a, mut fa) = check_names(&runs.man, "nonlinear.", &["c1_rate_below_one"]);
    let (b, fb) = check_names(&runs.man, "frozen.", &["c1_rate_below_one", "c1_rate_matches_c0"]);
    fa.extend(fb);
    let all_below = runs
        .man
        .checks
        .iter()
        .filter(|c| c.name.ends_with("c1_rate_below_one"))
        .all(|c| c.passed);
    let detail = if fa.is_empty() {
        format!("{}; {}", runs.summary[0], runs.summary[1])
    } else {
        fa.join("; ")
    };
    Ok((a && b && all_below, detail))
}

fn damping_dissipativity(dir: &Path) -> Outcome {
    let cfg = stability_config(false);
    let base_eps = cfg.model(1).map_err(|e| e.to_string())?.forcing.eps_measured;
    let mut man = RunManifest::new("acceptance", dir, 1, None);
    let mut points = Vec::new();
    let mut norms = Vec::new();
    for v in [0.0, -0.25, -0.5, -1.0] {
        let c = sweep_config(&cfg, SweepParameter::Beta0, v, base_eps).map_err(|e| e.to_string())?;
        let model = c.model(1).map_err(|e| e.to_string())?;
        let out = stability_experiment(&c, &model, &mut man, "").map_err(|e| e.to_string())?;
        norms.push(format!("{v}: {:.5e}", out.convergence.final_c0_norm));
        points.push((v, out));
    }
    dissipativity_check(&points, &mut man);
    let (ok, failed) = check_names(&man, "", &["dissipativity_periodic_norm", "dissipativity_window_sups"]);
    let detail = if ok {
        format!("periodic norms {}; window sups non-increasing", norms.join(", "))
    } else {
        failed.join("; ")
    };
    Ok((ok, detail))
}

fn regularity(smooth: (&PeriodicField, &PeriodicField)) -> Outcome {
    let r_smooth = regularity_probe(smooth.0, smooth.1).map_err(|e| e.to_string())?;
    let rough_signal = Signal::PowerSine {
        period: PERIOD,
        amplitude: 0.01,
        exponent: 1.25,
    };
    let rough = BoundaryForcing::new(rough_signal, Signal::zero(PERIOD), 0.3, 0.3).unwrap();
    let (a, _) = solve(&rough, &standard_damping(), 128, Coefficients::Nonlinear, None)?;
    let (b, _) = solve(&rough, &standard_damping(), 256, Coefficients::Nonlinear, None)?;
    let r_rough = regularity_probe(&a, &b).map_err(|e| e.to_string())?;
    let fmt = |r: &[f64; 3]| format!("{:.3} {:.3} {:.3}", r[0], r[1], r[2]);
    Ok((
        r_smooth.max_ratio() <= 1.2 && r_rough.max_ratio() > 1.5,
        format!(
            "smooth ratios {}; |sin|^1.25 ratios {}",
            fmt(&r_smooth.refinement_ratios),
            fmt(&r_rough.refinement_ratios)
        ),
    ))
}

fn euler_consistency(fields: &[PeriodicField; 3]) -> Outcome {
    let mut res = Vec::new();
    for f in fields {
        res.push(euler_residual(f, &eq(), &standard_damping()).map_err(|e| e.to_string())?);
    }
    let ratios = [res[0] / res[1], res[1] / res[2]];
    Ok((
        ratios.iter().all(|r| in_range(*r, 3.0, 5.0)),
        format!(
            "residual {:.3e} {:.3e} {:.3e}, ratios {:.3} {:.3}",
            res[0], res[1], res[2], ratios[0], ratios[1]
        ),
    ))
}

fn hypothesis_gate(dir: &Path) -> Outcome {
    let bin = env!("CARGO_BIN_EXE_pe");
    let cases = [
        (
            "kappa1",
            r#""kappa1": 1.5, "kappa2": 0.3"#,
            r#""kind": "constant", "beta0": -0.5"#,
        ),
        (
            "kappa2",
            r#""kappa1": 0.3, "kappa2": -1.0"#,
            r#""kind": "constant", "beta0": -0.5"#,
        ),
        (
            "beta0",
            r#""kappa1": 0.3, "kappa2": 0.3"#,
            r#""kind": "constant", "beta0": 0.2"#,
        ),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, kappas, damping) in cases {
        let text = format!(
            r#"{{
              "gas": {{ "gamma": 1.4, "rho_bar": 1.0 }},
              "domain": {{ "period": 4.0, "length": 1.0 }},
              "damping": {{ {damping} }},
              "forcing": {{
                "phi1b": {{ "type": "fourier", "sin": [0.01] }},
                "phi2b": {{ "type": "zero" }},
                {kappas}
              }}
            }}"#
        );
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, text).map_err(|e| e.to_string())?;
        let out = dir.join(name);
        let status = Command::new(bin)
            .args(["periodic", "--config"])
            .arg(&path)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        let code = status.status.code();
        let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap_or_default();
        let untouched = manifest.contains("\"timings\": []") && manifest.contains("\"artifacts\": []");
        ok &= code == Some(2) && untouched;
        detail.push(format!(
            "{name}: exit {code:?}{}",
            if untouched { "" } else { " after computing" }
        ));
    }
    Ok((ok, detail.join(", ")))
}

fn report(n: usize, name: &str, outcome: Outcome, started: Instant) -> bool {
    let secs = started.elapsed().as_secs_f64();
    match outcome {
        Ok((pass, detail)) => {
            println!(
                "criterion {n:>2} {name}: {} ({detail}) [{secs:.1}s]",
                if pass { "PASS" } else { "FAIL" }
            );
            pass
        }
        Err(e) => {
            println!("criterion {n:>2} {name}: FAIL (error: {e}) [{secs:.1}s]");
            false
        }
    }
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let dir = tmp.path();
    let mut all = true;

    let t = Instant::now();
    all &= report(1, "zero fixed point", zero_fixed_point(), t);
    let t = Instant::now();
    all &= report(2, "frozen transport oracle", frozen_transport_oracle(), t);
    let t = Instant::now();
    all &= report(3, "contraction", contraction(), t);

    let t = Instant::now();
    let solved: Result<Vec<(PeriodicField, ConvergenceReport)>, String> = [64, 128, 256]
        .into_iter()
        .map(|n| {
            solve(
                &standard_forcing(),
                &standard_damping(),
                n,
                Coefficients::Nonlinear,
                None,
            )
        })
        .collect();
    let shared_secs = t.elapsed();
    let (fields, reports): (Vec<_>, Vec<_>) = match solved {
        Ok(v) => v.into_iter().unzip(),
        Err(e) => {
            for (n, name) in [
                (4, "linear response"),
                (5, "pde residual"),
                (9, "regularity"),
                (10, "euler consistency"),
            ] {
                report(n, name, Err(e.clone()), t);
            }
            (Vec::new(), Vec::new())
        }
    };
    println!("(shared 64/128/256 solves: {:.1}s)", shared_secs.as_secs_f64());
    let shared = fields.len() == 3;
    if shared {
        let fields: [PeriodicField; 3] = fields.try_into().unwrap();
        let tols = [reports[0].tol, reports[1].tol, reports[2].tol];
        let t = Instant::now();
        all &= report(4, "linear response", linear_response(&reports[1]), t);
        let t = Instant::now();
        all &= report(5, "pde residual", pde_residual_order(&fields, &tols), t);

        let t = Instant::now();
        let runs = stability_runs(dir);
        match &runs {
            Ok(r) => {
                all &= report(6, "stability rate", stability_rate(r), t);
                all &= report(7, "c1 stability", c1_stability(r), t);
            }
            Err(e) => {
                all &= report(6, "stability rate", Err(e.clone()), t);
                all &= report(7, "c1 stability", Err(e.clone()), t);
            }
        }
        let t = Instant::now();
        all &= report(8, "damping dissipativity", damping_dissipativity(dir), t);
        let t = Instant::now();
        all &= report(9, "regularity", regularity((&fields[1], &fields[2])), t);
        let t = Instant::now();
        all &= report(10, "euler consistency", euler_consistency(&fields), t);
    } else {
        all = false;
    }
    let t = Instant::now();
    all &= report(11, "hypothesis gate", hypothesis_gate(dir), t);

    if all {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
