//! Forward solver for the initial-boundary value problem on `[0, L]`.
//!
//! A semi-Lagrangian characteristic scheme: each family's foot is traced
//! backward over one step, the value there is interpolated (clamped cubic
//! in `x`), and the source `(β/2)(φ₁+φ₂)` is integrated along the segment.
//! Both the foot and the source use a predictor–corrector (Heun) pair, so
//! the scheme is second order. Incoming values at the faces come from the
//! reflection conditions.

use alloc::format;
use alloc::vec::Vec;

use crate::field::PeriodicField;
use crate::interp::clamped_cubic;
use crate::math;
use crate::model::{BoundaryForcing, DampingField, Equilibrium};
use crate::series::Polynomial;
use crate::{Coefficients, Error, Result};

/// Tolerance on corner values and slopes of a bump shape.
pub const CORNER_TOL: f64 = 1e-10;

pub const DEFAULT_CFL: f64 = 0.8;

/// Initial values of `(φ₁, φ₂)` on the uniform `x`-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub length: f64,
    pub compat_order: u8,
}

/// The perturbation added to the periodic trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub amplitude: f64,
    /// Shape on `[0, L]`; normalized so that its sup is `amplitude`.
    pub shape: Polynomial,
    /// Multipliers applied to the normalized bump for each component.
    pub weights: (f64, f64),
}

impl Bump {
    /// `a · x²(L−x)² / (L/2)⁴` on both components.
    pub fn quartic(amplitude: f64, length: f64) -> Self {
        Self {
            amplitude,
            shape: Polynomial::quartic_bump(length),
            weights: (1.0, 1.0),
        }
    }
}

/// `φ₀ = φ(0,·) + (w₁ψ, w₂ψ)` with `ψ` vanishing to first order at both ends,
/// so the corner compatibility of the periodic trace carries over.
pub fn compatible_initial_data(
    periodic: &PeriodicField,
    forcing: &BoundaryForcing,
    bump: &Bump,
) -> Result<InitialData> {
    let l = periodic.length;
    let shape = &bump.shape;
    let sup = shape.sampled_sup(l, 4097);
    let scale = if sup > 0.0 { 1.0 / sup } else { 1.0 };
    for (name, v) in [
        ("psi(0)", shape.value(0.0)),
        ("psi(L)", shape.value(l)),
        ("psi'(0)", shape.derivative(0.0)),
        ("psi'(L)", shape.derivative(l)),
    ] {
        if math::abs(v * scale) > CORNER_TOL {
            return Err(Error::InvalidParameter(format!(
                "bump shape must vanish to first order at the corners: {name} = {v:e}"
            )));
        }
    }
    let nx = periodic.nx;
    let a = bump.amplitude * scale;
    let mut phi1 = Vec::with_capacity(nx);
    let mut phi2 = Vec::with_capacity(nx);
    for k in 0..nx {
        let psi = a * shape.value(periodic.x(k));
        phi1.push(periodic.get(0, 0, k) + bump.weights.0 * psi);
        phi2.push(periodic.get(1, 0, k) + bump.weights.1 * psi);
    }
    let left = phi2[0] - forcing.phi2b.value(0.0) - forcing.kappa2 * phi1[0];
    let right = phi1[nx - 1] - forcing.phi1b.value(0.0) - forcing.kappa1 * phi2[nx - 1];
    let slack = CORNER_TOL * (1.0 + forcing.eps_measured);
    if math::abs(left) > slack || math::abs(right) > slack {
        return Err(Error::InvalidParameter(format!(
            "initial data violates the corner conditions (mismatch {left:e} at x=0, {right:e} at x=L)"
        )));
    }
    Ok(InitialData {
        phi1,
        phi2,
        length: l,
        compat_order: 1,
    })
}

/// The pair `(φ₁, φ₂)` on the `x`-grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
}

impl Snapshot {
    pub fn nx(&self) -> usize {
        self.phi1.len()
    }

    pub fn sup_norm(&self) -> f64 {
        self.phi1
            .iter()
            .chain(&self.phi2)
            .fold(0.0, |a: f64, v| a.max(math::abs(*v)))
    }

    pub fn component(&self, c: usize) -> &[f64] {
        if c == 0 {
            &self.phi1
        } else {
            &self.phi2
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub length: f64,
    pub snapshots: Vec<Snapshot>,
    pub dt_used: f64,
    pub horizon: f64,
}

impl Trajectory {
    pub fn nx(&self) -> usize {
        self.snapshots.first().map_or(0, Snapshot::nx)
    }

    pub fn dx(&self) -> f64 {
        self.length / (self.nx() - 1) as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        if k + 1 == self.nx() {
            self.length
        } else {
            k as f64 * self.dx()
        }
    }

    pub fn last(&self) -> &Snapshot {
        &self.snapshots[self.snapshots.len() - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbvpConfig {
    pub cfl_fraction: f64,
    pub coefficients: Coefficients,
}

impl Default for IbvpConfig {
    fn default() -> Self {
        Self {
            cfl_fraction: DEFAULT_CFL,
            coefficients: Coefficients::Nonlinear,
        }
    }
}

/// Fixed-point passes for the trapezoidal foot.
const FOOT_PASSES: usize = 2;

struct StepContext<'a> {
    forcing: &'a BoundaryForcing,
    damping: &'a DampingField,
    eq: &'a Equilibrium,
    coefficients: Coefficients,
    length: f64,
    dx: f64,
}

impl StepContext<'_> {
    fn x(&self, k: usize, nx: usize) -> f64 {
        if k + 1 == nx {
            self.length
        } else {
            k as f64 * self.dx
        }
    }

    fn speeds(&self, p1: f64, p2: f64) -> (f64, f64) {
        self.eq.lambda_with(self.coefficients, p1, p2)
    }

    fn at(&self, values: &[f64], x: f64) -> f64 {
        clamped_cubic(values, x / self.dx)
    }

    fn source(&self, t: f64, x: f64, p1: f64, p2: f64) -> f64 {
        0.5 * self.damping.beta(t, x) * (p1 + p2)
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(0.0, self.length)
    }

    fn apply_reflection(&self, t: f64, phi1: &mut [f64], phi2: &mut [f64]) {
        let last = phi1.len() - 1;
        phi2[0] = self.forcing.phi2b.value(t) + self.forcing.kappa2 * phi1[0];
        phi1[last] = self.forcing.phi1b.value(t) + self.forcing.kappa1 * phi2[last];
    }

    fn check_admissible(&self, t: f64, phi1: &[f64], phi2: &[f64]) -> Result<()> {
        let nx = phi1.len();
        for k in 0..nx {
            let (p1, p2) = (phi1[k], phi2[k]);
            if !(p1.is_finite() && p2.is_finite()) || !self.eq.in_ball(p1, p2) {
                return Err(Error::Admissibility {
                    t,
                    x: self.x(k, nx),
                    detail: format!(
                        "perturbation ({p1:.3e}, {p2:.3e}) leaves the ball of radius {}",
                        self.eq.neighborhood_radius
                    ),
                });
            }
        }
        Ok(())
    }

    fn max_speed(&self, phi1: &[f64], phi2: &[f64]) -> f64 {
        phi1.iter().zip(phi2).fold(0.0, |a: f64, (p1, p2)| {
            let (l1, l2) = self.speeds(*p1, *p2);
            a.max(math::abs(l1)).max(math::abs(l2))
        })
    }
}

/// Advances `state` by `dt`.
pub fn step(
    state: &Snapshot,
    forcing: &BoundaryForcing,
    damping: &DampingField,
    eq: &Equilibrium,
    dt: f64,
    config: &IbvpConfig,
) -> Result<Snapshot> {
    let nx = state.nx();
    if nx < 4 || state.phi2.len() != nx {
        return Err(Error::GridMismatch(format!(
            "state needs at least 4 nodes per component, got {nx}"
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    let cx = StepContext {
        forcing,
        damping,
        eq,
        coefficients: config.coefficients,
        length: damping.length,
        dx: damping.length / (nx - 1) as f64,
    };
    cx.check_admissible(state.t, &state.phi1, &state.phi2)?;
    let courant = dt * cx.max_speed(&state.phi1, &state.phi2) / cx.dx;
    if courant > config.cfl_fraction {
        return Err(Error::Cfl {
            courant,
            limit: config.cfl_fraction,
        });
    }
    let (t0, t1) = (state.t, state.t + dt);
    let (u1, u2) = (&state.phi1[..], &state.phi2[..]);

    // Predictor: feet from the current speeds at the arrival node, Euler source.
    let mut feet = [alloc::vec![0.0; nx], alloc::vec![0.0; nx]];
    let mut pred = [alloc::vec![0.0; nx], alloc::vec![0.0; nx]];
    for k in 0..nx {
        let x = cx.x(k, nx);
        let (l1, l2) = cx.speeds(u1[k], u2[k]);
        for (c, l) in [(0, l1), (1, l2)] {
            let foot = cx.clamp(x - dt * l);
            let (f1, f2) = (cx.at(u1, foot), cx.at(u2, foot));
            let own = if c == 0 { f1 } else { f2 };
            feet[c][k] = foot;
            pred[c][k] = own + dt * cx.source(t0, foot, f1, f2);
        }
    }
    let [mut p1, mut p2] = pred;
    cx.apply_reflection(t1, &mut p1, &mut p2);

    // Corrector: trapezoidal foot and source.
    let mut out1 = alloc::vec![0.0; nx];
    let mut out2 = alloc::vec![0.0; nx];
    for k in 0..nx {
        let x = cx.x(k, nx);
        let (a1, a2) = cx.speeds(p1[k], p2[k]);
        let s_new = cx.source(t1, x, p1[k], p2[k]);
        for (c, l_new) in [(0, a1), (1, a2)] {
            let mut foot = feet[c][k];
            for _ in 0..FOOT_PASSES {
                let (b1, b2) = cx.speeds(cx.at(u1, foot), cx.at(u2, foot));
                let l_old = if c == 0 { b1 } else { b2 };
                foot = cx.clamp(x - 0.5 * dt * (l_new + l_old));
            }
            let (f1, f2) = (cx.at(u1, foot), cx.at(u2, foot));
            let own = if c == 0 { f1 } else { f2 };
            let v = own + 0.5 * dt * (cx.source(t0, foot, f1, f2) + s_new);
            if c == 0 {
                out1[k] = v;
            } else {
                out2[k] = v;
            }
        }
    }
    cx.apply_reflection(t1, &mut out1, &mut out2);
    cx.check_admissible(t1, &out1, &out2)?;
    Ok(Snapshot {
        t: t1,
        phi1: out1,
        phi2: out2,
    })
}

/// Uniform step for a run: the largest `dt ≤ cfl·Δx / max|λ|` (worst case over
/// the admissible ball) that divides `snapshot_every`. Returns the step and
/// the number of steps per snapshot.
pub fn choose_step(eq: &Equilibrium, dx: f64, snapshot_every: f64, config: &IbvpConfig) -> Result<(f64, usize)> {
    if !(snapshot_every > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "snapshot interval must be positive, got {snapshot_every}"
        )));
    }
    if !(config.cfl_fraction > 0.0 && config.cfl_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "cfl_fraction must lie in (0, 1], got {}",
            config.cfl_fraction
        )));
    }
    let speed = match config.coefficients {
        Coefficients::Nonlinear => eq.max_speed,
        Coefficients::Frozen => eq.c_bar,
    };
    let dt_max = config.cfl_fraction * dx / speed;
    let per = math::ceil_div(snapshot_every, dt_max).max(1);
    Ok((snapshot_every / per as f64, per))
}

/// Integrates from `t = 0` to `horizon`, recording a snapshot every
/// `snapshot_every` (and at `t = 0`).
pub fn solve_ibvp(
    init: &InitialData,
    forcing: &BoundaryForcing,
    damping: &DampingField,
    eq: &Equilibrium,
    horizon: f64,
    snapshot_every: f64,
    config: &IbvpConfig,
) -> Result<Trajectory> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let nx = init.phi1.len();
    if nx < 4 || init.phi2.len() != nx {
        return Err(Error::GridMismatch(format!(
            "initial data needs at least 4 nodes per component, got {nx}"
        )));
    }
    if math::abs(init.length - damping.length) > 1e-14 * damping.length {
        return Err(Error::GridMismatch(format!(
            "initial data on L={} but damping on L={}",
            init.length, damping.length
        )));
    }
    let dx = init.length / (nx - 1) as f64;
    let (dt, per) = choose_step(eq, dx, snapshot_every, config)?;
    let count = math::ceil_div(horizon, snapshot_every);
    let mut snapshots = Vec::with_capacity(count + 1);
    let mut state = Snapshot {
        t: 0.0,
        phi1: init.phi1.clone(),
        phi2: init.phi2.clone(),
    };
    snapshots.push(state.clone());
    for s in 1..=count {
        for _ in 0..per {
            state = step(&state, forcing, damping, eq, dt, config)?;
        }
        // Pin the clock to the snapshot lattice so windows align exactly.
        state.t = s as f64 * snapshot_every;
        snapshots.push(state.clone());
    }
    Ok(Trajectory {
        length: init.length,
        snapshots,
        dt_used: dt,
        horizon: count as f64 * snapshot_every,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_default_equilibrium;
    use crate::series::{FourierSeries, Signal};

    fn zero_setup(nx: usize) -> (BoundaryForcing, DampingField, Equilibrium, Snapshot) {
        let forcing = BoundaryForcing::zero(4.0, 0.3, 0.3).unwrap();
        let damping = DampingField::constant(-0.5, 4.0, 1.0).unwrap();
        let eq = make_default_equilibrium(1.0, 1.4).unwrap();
        let s = Snapshot {
            t: 0.0,
            phi1: alloc::vec![0.0; nx],
            phi2: alloc::vec![0.0; nx],
        };
        (forcing, damping, eq, s)
    }

    #[test]
    fn zero_state_stays_zero() {
        let (f, d, eq, s) = zero_setup(17);
        let next = step(&s, &f, &d, &eq, 0.01, &IbvpConfig::default()).unwrap();
        assert_eq!(next.sup_norm(), 0.0);
        assert!((next.t - 0.01).abs() < 1e-15);
    }

    #[test]
    fn oversized_step_is_a_cfl_error() {
        let (f, d, eq, s) = zero_setup(17);
        let err = step(&s, &f, &d, &eq, 1.0, &IbvpConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Cfl { .. }));
    }

    #[test]
    fn leaving_the_ball_is_reported() {
        let (f, d, eq, mut s) = zero_setup(17);
        s.phi1[8] = 10.0;
        let err = step(&s, &f, &d, &eq, 0.001, &IbvpConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Admissibility { .. }));
    }

    #[test]
    fn reflection_is_exact_after_each_step() {
        let sig = Signal::Fourier(FourierSeries::sine(4.0, 0.01));
        let f = BoundaryForcing::new(sig.clone(), sig, 0.3, -0.4).unwrap();
        let (_, d, eq, s) = zero_setup(33);
        let cfg = IbvpConfig::default();
        let mut st = s;
        for _ in 0..20 {
            st = step(&st, &f, &d, &eq, 0.02, &cfg).unwrap();
            let last = st.nx() - 1;
            let left = st.phi2[0] - f.phi2b.value(st.t) - f.kappa2 * st.phi1[0];
            let right = st.phi1[last] - f.phi1b.value(st.t) - f.kappa1 * st.phi2[last];
            assert!(left.abs() < 1e-16 && right.abs() < 1e-16);
        }
    }

    #[test]
    fn step_is_aligned_with_snapshots() {
        let (_, _, eq, _) = zero_setup(17);
        let (dt, per) = choose_step(&eq, 1.0 / 16.0, 0.1, &IbvpConfig::default()).unwrap();
        assert!((dt * per as f64 - 0.1).abs() < 1e-15);
        assert!(dt * eq.max_speed / (1.0 / 16.0) <= DEFAULT_CFL);
    }

    #[test]
    fn quartic_bump_reaches_its_amplitude_at_the_center() {
        let field = PeriodicField::zeros(8, 65, 4.0, 1.0).unwrap();
        let f = BoundaryForcing::zero(4.0, 0.3, 0.3).unwrap();
        let init = compatible_initial_data(&field, &f, &Bump::quartic(0.005, 1.0)).unwrap();
        assert!((init.phi1[32] - 0.005).abs() < 1e-15);
        assert_eq!(init.compat_order, 1);
    }

    #[test]
    fn shapes_not_vanishing_at_corners_are_rejected() {
        let field = PeriodicField::zeros(8, 17, 4.0, 1.0).unwrap();
        let f = BoundaryForcing::zero(4.0, 0.3, 0.3).unwrap();
        let bump = Bump {
            amplitude: 0.01,
            shape: Polynomial::new(alloc::vec![0.0, 1.0, -1.0]),
            weights: (1.0, 1.0),
        };
        assert!(compatible_initial_data(&field, &f, &bump).is_err());
    }
}
