use pe_core::analysis::{distance_between, distance_to_periodic, euler_residual_trajectory, fit_windows};
use pe_core::ibvp::{compatible_initial_data, solve_ibvp, Bump, IbvpConfig, InitialData};
use pe_core::model::{make_default_equilibrium, BoundaryForcing, DampingField, Equilibrium};
use pe_core::periodic::{solve_periodic, IterationConfig};
use pe_core::series::{FourierSeries, Polynomial, Signal};
use pe_core::{Coefficients, PeriodicField};

const T: f64 = 4.0;
const L: f64 = 1.0;

fn eq() -> Equilibrium {
    make_default_equilibrium(1.0, 1.4).unwrap()
}

fn sine(a: f64) -> Signal {
    Signal::Fourier(FourierSeries::sine(T, a))
}

fn bump_only(nx: usize, f: &BoundaryForcing, amplitude: f64) -> InitialData {
    let zero = PeriodicField::zeros(8, nx, T, L).unwrap();
    compatible_initial_data(&zero, f, &Bump::quartic(amplitude, L)).unwrap()
}

#[test]
fn frozen_pulse_leaves_after_one_crossing() {
    let f = BoundaryForcing::zero(T, 0.0, 0.0).unwrap();
    let d = DampingField::zero(T, L).unwrap();
    let cfg = IbvpConfig {
        coefficients: Coefficients::Frozen,
        ..IbvpConfig::default()
    };
    let cross = L / eq().c_bar;
    let traj = solve_ibvp(
        &bump_only(129, &f, 0.005),
        &f,
        &d,
        &eq(),
        1.25 * cross,
        cross / 16.0,
        &cfg,
    )
    .unwrap();
    let half = &traj.snapshots[8];
    assert!(half.sup_norm() > 0.002);
    assert!(traj.last().sup_norm() < 1e-12, "residual {:e}", traj.last().sup_norm());
}

#[test]
fn frozen_reflections_decay_by_kappa_product_per_round_trip() {
    let f = BoundaryForcing::zero(T, 0.5, 0.5).unwrap();
    let d = DampingField::zero(T, L).unwrap();
    let cfg = IbvpConfig {
        coefficients: Coefficients::Frozen,
        ..IbvpConfig::default()
    };
    let window = L / eq().c_bar;
    let traj = solve_ibvp(
        &bump_only(129, &f, 0.005),
        &f,
        &d,
        &eq(),
        10.0 * window,
        window / 32.0,
        &cfg,
    )
    .unwrap();
    let series: Vec<(f64, f64)> = traj.snapshots.iter().map(|s| (s.t, s.sup_norm())).collect();
    let fit = fit_windows(&series, window, 1e-12).unwrap();
    let block = fit.block_xi.unwrap();
    assert!((block - 0.25).abs() < 0.01, "two-window ratio {block}");
}

#[test]
fn scheme_is_second_order() {
    let f = BoundaryForcing::zero(T, 0.3, -0.3).unwrap();
    let d = DampingField::constant(-0.5, T, L).unwrap();
    let bump = Bump {
        amplitude: 0.01,
        shape: Polynomial::new(vec![0.0, 0.0, 0.0, 1.0, -3.0, 3.0, -1.0]),
        weights: (1.0, -0.5),
    };
    let run = |nx: usize| {
        let zero = PeriodicField::zeros(8, nx, T, L).unwrap();
        let init = compatible_initial_data(&zero, &f, &bump).unwrap();
        solve_ibvp(&init, &f, &d, &eq(), 1.0, 0.25, &IbvpConfig::default())
            .unwrap()
            .last()
            .clone()
    };
    let (a, b, c) = (run(65), run(129), run(257));
    let mut e1: f64 = 0.0;
    let mut e2: f64 = 0.0;
    for k in 0..65 {
        for comp in 0..2 {
            e1 = e1.max((a.component(comp)[k] - b.component(comp)[2 * k]).abs());
            e2 = e2.max((b.component(comp)[2 * k] - c.component(comp)[4 * k]).abs());
        }
    }
    let ratio = e1 / e2;
    assert!(
        (3.0..=5.0).contains(&ratio),
        "self-convergence ratio {ratio} ({e1:e}, {e2:e})"
    );
}

#[test]
fn periodic_trace_is_reproduced_over_a_period() {
    let f = BoundaryForcing::new(sine(0.01), Signal::zero(T), 0.3, 0.3).unwrap();
    let d = DampingField::constant(-0.5, T, L).unwrap();
    let (p, _) = solve_periodic(&f, &d, &eq(), &IterationConfig::for_forcing(64, 64, &f)).unwrap();
    let init = compatible_initial_data(&p, &f, &Bump::quartic(0.0, L)).unwrap();
    let traj = solve_ibvp(&init, &f, &d, &eq(), T, T / 64.0, &IbvpConfig::default()).unwrap();
    let dist = distance_to_periodic(&traj, &p).unwrap();
    let worst = dist.iter().map(|d| d.1).fold(0.0, f64::max);
    assert!(worst < 1e-5, "drift {worst:e}");
    let last = traj.last();
    let mut back: f64 = 0.0;
    for k in 0..last.nx() {
        back = back.max((last.phi1[k] - p.get(0, 0, k)).abs());
    }
    assert!(back < 1e-5, "period defect {back:e}");
    assert!(euler_residual_trajectory(&traj, &eq(), &d).unwrap() < 1e-3);
}

#[test]
fn perturbation_decays_toward_the_periodic_solution() {
    let f = BoundaryForcing::new(sine(0.01), Signal::zero(T), 0.3, 0.3).unwrap();
    let d = DampingField::constant(-0.5, T, L).unwrap();
    let (p, _) = solve_periodic(&f, &d, &eq(), &IterationConfig::for_forcing(48, 48, &f)).unwrap();
    let every = eq().window_length(L, Coefficients::Nonlinear) / 16.0;
    let run = |a: f64| {
        let init = compatible_initial_data(&p, &f, &Bump::quartic(a, L)).unwrap();
        solve_ibvp(&init, &f, &d, &eq(), 6.0, every, &IbvpConfig::default()).unwrap()
    };
    let (base, pert) = (run(0.0), run(0.005));
    let dist = distance_between(&pert, &base).unwrap();
    assert!((dist[0].1 - 0.005).abs() < 1e-4);
    assert!(dist.last().unwrap().1 < 1e-3 * dist[0].1);
}
