//! Verification tools: decay-rate fits of trajectories against the periodic
//! solution, second-difference regularity probes, closed-form oracles for
//! frozen coefficients, and residuals of the conservative Euler form.

use alloc::format;
use alloc::vec::Vec;

use crate::field::PeriodicField;
use crate::ibvp::{Snapshot, Trajectory};
use crate::math;
use crate::model::{BoundaryForcing, DampingField, Equilibrium, RiemannPair};
use crate::{Error, Result};

/// A sampled scalar time series `(t, value)`.
pub type Series = Vec<(f64, f64)>;

/// Minimum number of complete windows for a fit.
pub const MIN_WINDOWS: usize = 4;

/// Relative tolerance when assigning a time to a window.
const WINDOW_SLACK: f64 = 1e-9;

/// Per-window fit of one distance series.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowFit {
    /// Sup of the series over `[wT₀, (w+1)T₀)` for each complete window.
    pub sups: Vec<f64>,
    /// `sups[w] / sups[w−1]`, present where both exceed the floor.
    pub ratios: Vec<Option<f64>>,
    /// Geometric mean of the valid ratios.
    pub xi: Option<f64>,
    /// `sups[w] / sups[w−2]`, present where both exceed the floor.
    pub block_ratios: Vec<Option<f64>>,
    /// Geometric mean of the valid two-window ratios.
    pub block_xi: Option<f64>,
    /// First window from which every later window is strictly smaller than
    /// its predecessor (or already below the floor).
    pub monotone_after: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StabilityReport {
    pub window_length: f64,
    pub floor: f64,
    pub c0: WindowFit,
    pub c1: WindowFit,
}

impl StabilityReport {
    pub fn windows(&self) -> usize {
        self.c0.sups.len()
    }
}

fn geometric_mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut n = 0usize;
    let mut acc = 0.0;
    for v in values {
        acc += math::ln(v.max(f64::MIN_POSITIVE));
        n += 1;
    }
    (n > 0).then(|| math::exp(acc / n as f64))
}

/// Per-window sups of `series` over complete windows of length `window`.
pub fn window_sups(series: &[(f64, f64)], window: f64) -> Result<Vec<f64>> {
    if !(window > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "window must be positive, got {window}"
        )));
    }
    let end = series.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let complete = if end.is_finite() {
        math::floor(end / window + WINDOW_SLACK).max(0.0) as usize
    } else {
        0
    };
    let mut sups = alloc::vec![0.0f64; complete];
    for &(t, v) in series {
        let w = math::floor(t / window + WINDOW_SLACK);
        if w >= 0.0 && (w as usize) < complete {
            sups[w as usize] = sups[w as usize].max(math::abs(v));
        }
    }
    Ok(sups)
}

/// Geometric decay fit of per-window sups; ratios involving values at or
/// below `floor` are not reported.
pub fn fit_windows(series: &[(f64, f64)], window: f64, floor: f64) -> Result<WindowFit> {
    let sups = window_sups(series, window)?;
    if sups.len() < MIN_WINDOWS {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_WINDOWS} complete windows of length {window}, got {}",
            sups.len()
        )));
    }
    let ratio = |w: usize, lag: usize| -> Option<f64> {
        (w >= lag && sups[w - lag] > floor && sups[w] > floor).then(|| sups[w] / sups[w - lag])
    };
    let ratios: Vec<Option<f64>> = (0..sups.len()).map(|w| ratio(w, 1)).collect();
    let block_ratios: Vec<Option<f64>> = (0..sups.len()).map(|w| ratio(w, 2)).collect();
    let decreasing = |w: usize| sups[w] < sups[w - 1] || sups[w] <= floor;
    let mut monotone_after = None;
    for start in 0..sups.len() - 1 {
        if (start + 1..sups.len()).all(decreasing) {
            monotone_after = Some(start);
            break;
        }
    }
    Ok(WindowFit {
        xi: geometric_mean(ratios.iter().flatten().copied()),
        block_xi: geometric_mean(block_ratios.iter().flatten().copied()),
        sups,
        ratios,
        block_ratios,
        monotone_after,
    })
}

/// Fits the `C⁰` and `C¹` distance series over windows of length `window`.
pub fn fit_stability(c0: &[(f64, f64)], c1: &[(f64, f64)], window: f64, floor: f64) -> Result<StabilityReport> {
    Ok(StabilityReport {
        window_length: window,
        floor,
        c0: fit_windows(c0, window, floor)?,
        c1: fit_windows(c1, window, floor)?,
    })
}

fn check_traj_grid(traj: &Trajectory, periodic: &PeriodicField) -> Result<()> {
    if traj.nx() != periodic.nx || math::abs(traj.length - periodic.length) > 1e-14 * periodic.length {
        return Err(Error::GridMismatch(format!(
            "trajectory has {} nodes on L={}, periodic field {} nodes on L={}",
            traj.nx(),
            traj.length,
            periodic.nx,
            periodic.length
        )));
    }
    Ok(())
}

/// Values of the periodic solution at time `t` on its `x`-grid (cubic in `t`).
fn periodic_row(periodic: &PeriodicField, c: usize, t: f64, k: usize) -> f64 {
    periodic.interp_unchecked(c, t, periodic.x(k), 3)
}

/// `sup_{x,i} |φᵢ(t,x) − φᵢ^(T*)(t,x)|` for each snapshot.
pub fn distance_to_periodic(traj: &Trajectory, periodic: &PeriodicField) -> Result<Series> {
    check_traj_grid(traj, periodic)?;
    Ok(traj
        .snapshots
        .iter()
        .map(|s| {
            let mut d: f64 = 0.0;
            for c in 0..2 {
                let v = s.component(c);
                for k in 0..v.len() {
                    d = d.max(math::abs(v[k] - periodic_row(periodic, c, s.t, k)));
                }
            }
            (s.t, d)
        })
        .collect())
}

fn check_pair(a: &Trajectory, b: &Trajectory) -> Result<()> {
    let same_times =
        a.snapshots.len() == b.snapshots.len() && a.snapshots.iter().zip(&b.snapshots).all(|(x, y)| x.t == y.t);
    if a.nx() != b.nx() || !same_times {
        return Err(Error::GridMismatch(
            "trajectories differ in grid or snapshot times".into(),
        ));
    }
    Ok(())
}

/// `sup_{x,i}` distance between two trajectories on the same snapshot lattice.
pub fn distance_between(a: &Trajectory, b: &Trajectory) -> Result<Series> {
    check_pair(a, b)?;
    Ok(a.snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|(sa, sb)| {
            let d = sa
                .phi1
                .iter()
                .zip(&sb.phi1)
                .chain(sa.phi2.iter().zip(&sb.phi2))
                .fold(0.0, |m: f64, (x, y)| m.max(math::abs(x - y)));
            (sa.t, d)
        })
        .collect())
}

/// Centered `x`-difference on a row, second-order one-sided at the ends.
fn dx_row(v: &[f64], k: usize, dx: f64) -> f64 {
    let n = v.len();
    if k == 0 {
        (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx)
    } else if k + 1 == n {
        (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dx)
    } else {
        (v[k + 1] - v[k - 1]) / (2.0 * dx)
    }
}

/// Snapshot neighbours used for the `t`-difference at index `i`.
fn t_neighbours(len: usize, i: usize) -> (usize, usize) {
    if i == 0 {
        (0, 1)
    } else if i + 1 == len {
        (len - 2, len - 1)
    } else {
        (i - 1, i + 1)
    }
}

/// `C¹` distance of a difference sequence given as a closure over
/// `(snapshot index, component, node)`.
fn c1_series(traj: &Trajectory, diff: impl Fn(usize, usize, usize) -> f64) -> Series {
    let snaps = &traj.snapshots;
    let nx = traj.nx();
    let dx = traj.dx();
    let mut row = alloc::vec![0.0; nx];
    (0..snaps.len())
        .map(|i| {
            let (a, b) = t_neighbours(snaps.len(), i);
            let h = snaps[b].t - snaps[a].t;
            let mut d: f64 = 0.0;
            for c in 0..2 {
                for k in 0..nx {
                    row[k] = diff(i, c, k);
                    d = d.max(math::abs((diff(b, c, k) - diff(a, c, k)) / h));
                }
                for k in 0..nx {
                    d = d.max(math::abs(dx_row(&row, k, dx)));
                }
            }
            (snaps[i].t, d)
        })
        .collect()
}

/// Per-snapshot `max` over `{∂ₜ, ∂ₓ}`, components and nodes of the difference
/// of first differences between the trajectory and the periodic solution.
/// `∂ₜ` uses neighbouring snapshots, applied identically to both.
pub fn c1_distance_to_periodic(traj: &Trajectory, periodic: &PeriodicField) -> Result<Series> {
    check_traj_grid(traj, periodic)?;
    if traj.snapshots.len() < 2 || traj.nx() < 3 {
        return Err(Error::InsufficientData(
            "need at least two snapshots and three nodes".into(),
        ));
    }
    let snaps = &traj.snapshots;
    Ok(c1_series(traj, |i, c, k| {
        snaps[i].component(c)[k] - periodic_row(periodic, c, snaps[i].t, k)
    }))
}

/// `C¹` distance between two trajectories on the same snapshot lattice.
pub fn c1_distance_between(a: &Trajectory, b: &Trajectory) -> Result<Series> {
    check_pair(a, b)?;
    if a.snapshots.len() < 2 || a.nx() < 3 {
        return Err(Error::InsufficientData(
            "need at least two snapshots and three nodes".into(),
        ));
    }
    Ok(c1_series(a, |i, c, k| {
        a.snapshots[i].component(c)[k] - b.snapshots[i].component(c)[k]
    }))
}

/// Second-difference sup norms at two resolutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityReport {
    /// `[coarse, fine]` sup of the 3-point `∂ₜ²` difference.
    pub d2t_sup: [f64; 2],
    /// `[coarse, fine]` sup of the 4-point cross `∂ₜ∂ₓ` difference.
    pub dtdx_sup: [f64; 2],
    /// `[coarse, fine]` sup of the 3-point `∂ₓ²` difference.
    pub d2x_sup: [f64; 2],
    /// Fine over coarse for `[∂ₜ², ∂ₜ∂ₓ, ∂ₓ²]`; 1 when both are zero.
    pub refinement_ratios: [f64; 3],
}

impl RegularityReport {
    pub fn max_ratio(&self) -> f64 {
        self.refinement_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Sup norms of `(∂ₜ², ∂ₜ∂ₓ, ∂ₓ²)` second differences over both components.
/// `x`-stencils are evaluated at interior columns only.
pub fn second_differences(field: &PeriodicField) -> [f64; 3] {
    let (dt, dx) = (field.dt(), field.dx());
    let mut out = [0.0f64; 3];
    for c in 0..2 {
        for j in 0..field.nt {
            let j = j as isize;
            for k in 0..field.nx {
                let g = |dj: isize, dk: isize| field.get_wrapped(c, j + dj, (k as isize + dk) as usize);
                let d2t = (g(1, 0) - 2.0 * g(0, 0) + g(-1, 0)) / (dt * dt);
                out[0] = out[0].max(math::abs(d2t));
                if k > 0 && k + 1 < field.nx {
                    let cross = (g(1, 1) - g(1, -1) - g(-1, 1) + g(-1, -1)) / (4.0 * dt * dx);
                    let d2x = (g(0, 1) - 2.0 * g(0, 0) + g(0, -1)) / (dx * dx);
                    out[1] = out[1].max(math::abs(cross));
                    out[2] = out[2].max(math::abs(d2x));
                }
            }
        }
    }
    out
}

pub fn regularity_probe(coarse: &PeriodicField, fine: &PeriodicField) -> Result<RegularityReport> {
    if fine.nt <= coarse.nt || fine.nx <= coarse.nx || coarse.nx < 3 {
        return Err(Error::GridMismatch(format!(
            "fine grid {}x{} must refine coarse grid {}x{}",
            fine.nt, fine.nx, coarse.nt, coarse.nx
        )));
    }
    let a = second_differences(coarse);
    let b = second_differences(fine);
    let ratio = |x: f64, y: f64| {
        if x == 0.0 && y == 0.0 {
            1.0
        } else {
            y / x
        }
    };
    Ok(RegularityReport {
        d2t_sup: [a[0], b[0]],
        dtdx_sup: [a[1], b[1]],
        d2x_sup: [a[2], b[2]],
        refinement_ratios: [ratio(a[0], b[0]), ratio(a[1], b[1]), ratio(a[2], b[2])],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    /// No reflection: `κ₁ = κ₂ = 0`.
    Transport,
    /// Reflections summed as a geometric series of bounces.
    Reflection,
}

/// Term size at which the bounce series is truncated.
pub const SERIES_CUTOFF: f64 = 1e-14;

/// Closed-form time-periodic solution of the frozen-coefficient, undamped
/// problem: straight characteristics of speed `∓c̄` and reflections at the faces.
#[derive(Debug, Clone)]
pub struct FrozenOracle {
    forcing: BoundaryForcing,
    c_bar: f64,
    length: f64,
    terms: usize,
}

pub fn frozen_oracle(
    forcing: &BoundaryForcing,
    damping: &DampingField,
    eq: &Equilibrium,
    mode: OracleMode,
) -> Result<FrozenOracle> {
    if !damping.is_identically_zero() {
        return Err(Error::InvalidParameter("frozen oracle requires beta = 0".into()));
    }
    if mode == OracleMode::Transport && (forcing.kappa1 != 0.0 || forcing.kappa2 != 0.0) {
        return Err(Error::InvalidParameter(
            "transport oracle requires kappa1 = kappa2 = 0".into(),
        ));
    }
    let q = math::abs(forcing.kappa1 * forcing.kappa2);
    let scale = forcing
        .phi1b
        .certified_c1_bound()
        .max(forcing.phi2b.certified_c1_bound())
        * 2.0;
    let mut terms = 1;
    if q > 0.0 && scale > 0.0 {
        let mut size = scale;
        while size >= SERIES_CUTOFF {
            size *= q;
            terms += 1;
        }
    }
    Ok(FrozenOracle {
        forcing: forcing.clone(),
        c_bar: eq.c_bar,
        length: damping.length,
        terms,
    })
}

impl FrozenOracle {
    /// Number of bounce terms kept.
    pub fn terms(&self) -> usize {
        self.terms
    }

    /// `φ₁(t, L)`: incoming data plus all reflections that reach `x = L` at `t`.
    fn right_trace(&self, t: f64) -> f64 {
        let f = &self.forcing;
        let tau = self.length / self.c_bar;
        let q = f.kappa1 * f.kappa2;
        let mut acc = 0.0;
        let mut w = 1.0;
        for k in 0..self.terms {
            let k = k as f64;
            acc += w * (f.phi1b.value(t - 2.0 * k * tau) + f.kappa1 * f.phi2b.value(t - (2.0 * k + 1.0) * tau));
            w *= q;
        }
        acc
    }

    fn left_trace(&self, t: f64) -> f64 {
        let f = &self.forcing;
        let tau = self.length / self.c_bar;
        let q = f.kappa1 * f.kappa2;
        let mut acc = 0.0;
        let mut w = 1.0;
        for k in 0..self.terms {
            let k = k as f64;
            acc += w * (f.phi2b.value(t - 2.0 * k * tau) + f.kappa2 * f.phi1b.value(t - (2.0 * k + 1.0) * tau));
            w *= q;
        }
        acc
    }

    pub fn eval(&self, t: f64, x: f64) -> (f64, f64) {
        (
            self.right_trace(t - (self.length - x) / self.c_bar),
            self.left_trace(t - x / self.c_bar),
        )
    }

    /// Samples the oracle on the grid of `like`.
    pub fn sample(&self, like: &PeriodicField) -> PeriodicField {
        let mut out = like.clone();
        for j in 0..like.nt {
            for k in 0..like.nx {
                let (a, b) = self.eval(like.t(j), like.x(k));
                out.phi1[j * like.nx + k] = a;
                out.phi2[j * like.nx + k] = b;
            }
        }
        out
    }
}

/// Max error of `field` against the oracle at grid nodes and at cell
/// midpoints (cubic in `t`, linear in `x` between nodes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleError {
    pub nodes: f64,
    pub midpoints: f64,
}

pub fn oracle_error(field: &PeriodicField, oracle: &FrozenOracle) -> OracleError {
    let mut nodes: f64 = 0.0;
    let mut mid: f64 = 0.0;
    for j in 0..field.nt {
        for k in 0..field.nx {
            let (a, b) = oracle.eval(field.t(j), field.x(k));
            nodes = nodes
                .max(math::abs(field.get(0, j, k) - a))
                .max(math::abs(field.get(1, j, k) - b));
            if k + 1 < field.nx {
                let t = field.t(j) + 0.5 * field.dt();
                let x = 0.5 * (field.x(k) + field.x(k + 1));
                let (p1, p2) = field.interp_pair(t, x, 3);
                let (a, b) = oracle.eval(t, x);
                mid = mid.max(math::abs(p1 - a)).max(math::abs(p2 - b));
            }
        }
    }
    OracleError { nodes, midpoints: mid }
}

/// Conservative variables `(ρ, ρu)` and flux `(ρu, ρu² + p)` with `p = ρ^γ`.
fn conservative(eq: &Equilibrium, p1: f64, p2: f64) -> Result<[f64; 4]> {
    let pair: RiemannPair = eq.pair(p1, p2);
    let s = crate::model::state_from_riemann(pair, eq.gamma)?;
    let mom = s.rho * s.u;
    Ok([s.rho, mom, mom, mom * s.u + math::powf(s.rho, eq.gamma)])
}

/// Sup of the residuals of `∂ₜρ + ∂ₓ(ρu)` and `∂ₜ(ρu) + ∂ₓ(ρu² + p) − βρu`
/// over the periodic grid, with centered differences (second-order
/// one-sided at the `x` faces).
pub fn euler_residual(field: &PeriodicField, eq: &Equilibrium, damping: &DampingField) -> Result<f64> {
    let (nt, nx) = (field.nt, field.nx);
    let mut q = Vec::with_capacity(nt * nx);
    for i in 0..nt * nx {
        q.push(conservative(eq, field.phi1[i], field.phi2[i])?);
    }
    let (dt, dx) = (field.dt(), field.dx());
    let mut res: f64 = 0.0;
    let mut row = [alloc::vec![0.0; nx], alloc::vec![0.0; nx]];
    for j in 0..nt {
        let jp = (j + 1) % nt;
        let jm = (j + nt - 1) % nt;
        for k in 0..nx {
            row[0][k] = q[j * nx + k][1];
            row[1][k] = q[j * nx + k][3];
        }
        for k in 0..nx {
            let d_rho = (q[jp * nx + k][0] - q[jm * nx + k][0]) / (2.0 * dt);
            let d_mom = (q[jp * nx + k][1] - q[jm * nx + k][1]) / (2.0 * dt);
            let beta = damping.beta(field.t(j), field.x(k));
            let r1 = d_rho + dx_row(&row[0], k, dx);
            let r2 = d_mom + dx_row(&row[1], k, dx) - beta * q[j * nx + k][1];
            res = res.max(math::abs(r1)).max(math::abs(r2));
        }
    }
    Ok(res)
}

/// As [`euler_residual`] for a trajectory, with `∂ₜ` from neighbouring
/// snapshots (interior snapshots only).
pub fn euler_residual_trajectory(traj: &Trajectory, eq: &Equilibrium, damping: &DampingField) -> Result<f64> {
    let snaps = &traj.snapshots;
    if snaps.len() < 3 || traj.nx() < 3 {
        return Err(Error::InsufficientData(
            "need at least three snapshots and three nodes".into(),
        ));
    }
    let nx = traj.nx();
    let dx = traj.dx();
    let convert =
        |s: &Snapshot| -> Result<Vec<[f64; 4]>> { (0..nx).map(|k| conservative(eq, s.phi1[k], s.phi2[k])).collect() };
    let mut prev = convert(&snaps[0])?;
    let mut cur = convert(&snaps[1])?;
    let mut res: f64 = 0.0;
    for i in 1..snaps.len() - 1 {
        let next = convert(&snaps[i + 1])?;
        let h = snaps[i + 1].t - snaps[i - 1].t;
        let flux0: Vec<f64> = cur.iter().map(|q| q[1]).collect();
        let flux1: Vec<f64> = cur.iter().map(|q| q[3]).collect();
        for k in 0..nx {
            let beta = damping.beta(snaps[i].t, traj.x(k));
            let r1 = (next[k][0] - prev[k][0]) / h + dx_row(&flux0, k, dx);
            let r2 = (next[k][1] - prev[k][1]) / h + dx_row(&flux1, k, dx) - beta * cur[k][1];
            res = res.max(math::abs(r1)).max(math::abs(r2));
        }
        prev = core::mem::replace(&mut cur, next);
    }
    Ok(res)
}
