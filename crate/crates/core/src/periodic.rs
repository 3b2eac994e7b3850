//! Linearized characteristic fixed-point iteration for the time-periodic
//! solution.
//!
//! Each iterate `φ⁽ˡ⁾` solves, family by family, a linear transport problem
//! whose characteristics and cross-coupling come from `φ⁽ˡ⁻¹⁾` while the
//! diagonal damping `(β/2)νᵢ(Φ)φᵢ⁽ˡ⁾` is kept implicit through the
//! integrating factors `Fᵢ`. Along each traced characteristic the weighted
//! unknown `Fᵢφᵢ⁽ˡ⁾` obeys a scalar linear ODE in `x`, integrated from the
//! boundary face where the reflection condition supplies its value.

use alloc::format;
use alloc::vec::Vec;

use crate::characteristics::{
    admissible_nu, follow_with, DirectSlope, Family, SlopeField, TraceOptions, WeightTable, DEFAULT_SUBSTEPS,
};
use crate::field::PeriodicField;
use crate::interp::PeriodicStencil;
use crate::math;
use crate::model::{validate_hypothesis, BoundaryForcing, DampingField, Equilibrium};
use crate::{Coefficients, Error, Result};

/// Maximum predictor–corrector passes for the implicit weight term.
pub const MAX_CORRECTOR_PASSES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationConfig {
    pub nt: usize,
    pub nx: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub substeps_per_cell: usize,
    pub interpolation_order: u8,
    pub coefficients: Coefficients,
}

pub const DEFAULT_GRID: usize = 128;
pub const DEFAULT_MAX_ITER: usize = 200;

impl IterationConfig {
    /// Defaults with `tol = 1e−10·max(ε, 1e−6)` for the given forcing.
    pub fn for_forcing(nt: usize, nx: usize, forcing: &BoundaryForcing) -> Self {
        Self {
            nt,
            nx,
            tol: default_tol(forcing),
            max_iter: DEFAULT_MAX_ITER,
            substeps_per_cell: DEFAULT_SUBSTEPS,
            interpolation_order: 3,
            coefficients: Coefficients::Nonlinear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nt < 8 || self.nx < 8 {
            return Err(Error::InvalidParameter(format!(
                "grid must be at least 8x8, got {}x{}",
                self.nt, self.nx
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if self.substeps_per_cell < 1 {
            return Err(Error::InvalidParameter("substeps_per_cell must be at least 1".into()));
        }
        if self.interpolation_order != 1 && self.interpolation_order != 3 {
            return Err(Error::InvalidParameter(format!(
                "interpolation_order must be 1 or 3, got {}",
                self.interpolation_order
            )));
        }
        Ok(())
    }

    pub fn trace_options(&self) -> TraceOptions {
        TraceOptions {
            substeps_per_cell: self.substeps_per_cell,
            order: self.interpolation_order,
            coefficients: self.coefficients,
        }
    }
}

pub fn default_tol(forcing: &BoundaryForcing) -> f64 {
    1e-10 * forcing.eps_measured.max(1e-6)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceReport {
    /// `‖φ⁽ˡ⁾ − φ⁽ˡ⁻¹⁾‖∞` for `l = 1, 2, …`.
    pub diffs: Vec<f64>,
    /// `diffs[l] / diffs[l−1]`, present where `diffs[l−1] > 10·tol`.
    pub theta_estimates: Vec<Option<f64>>,
    /// Geometric mean of the last three valid ratios.
    pub theta: Option<f64>,
    pub final_c0_norm: f64,
    pub final_c1_norm: f64,
    pub iterations_used: usize,
    pub converged: bool,
    pub tol: f64,
}

impl ConvergenceReport {
    pub fn from_diffs(diffs: Vec<f64>, tol: f64) -> Self {
        let mut theta_estimates = Vec::with_capacity(diffs.len());
        for (l, d) in diffs.iter().enumerate() {
            theta_estimates.push(if l > 0 && diffs[l - 1] > 10.0 * tol {
                Some(d / diffs[l - 1])
            } else {
                None
            });
        }
        let valid: Vec<f64> = theta_estimates.iter().flatten().copied().collect();
        let theta = if valid.is_empty() {
            None
        } else {
            let tail = &valid[valid.len().saturating_sub(3)..];
            let log_mean = tail.iter().map(|r| math::ln(r.max(f64::MIN_POSITIVE))).sum::<f64>() / tail.len() as f64;
            Some(math::exp(log_mean))
        };
        Self {
            iterations_used: diffs.len(),
            diffs,
            theta_estimates,
            theta,
            tol,
            ..Self::default()
        }
    }
}

/// The iterate `φ⁽⁰⁾ = 0`.
pub fn init_zero(config: &IterationConfig, period: f64, length: f64) -> Result<PeriodicField> {
    PeriodicField::zeros(config.nt, config.nx, period, length)
}

fn check_inputs(forcing: &BoundaryForcing, damping: &DampingField) -> Result<()> {
    let rel = math::abs(forcing.period - damping.period) / forcing.period;
    if rel > 1e-14 {
        return Err(Error::Domain(format!(
            "forcing period {} differs from damping period {}",
            forcing.period, damping.period
        )));
    }
    Ok(())
}

/// One-cell transition maps of a family: `τ = t_j + shift[k·Nt + j]` is
/// where the characteristic through grid node `(t_j, x_k)` meets the next
/// column toward the family's boundary face. Composing the maps (with
/// periodic cubic interpolation of the shift between nodes) reproduces the
/// full trace to the boundary.
struct CellMaps {
    rate: f64,
    shift: Vec<f64>,
}

impl CellMaps {
    fn new(prev: &PeriodicField, eq: &Equilibrium, family: Family, config: &IterationConfig) -> Result<Self> {
        let (nt, nx) = (prev.nt, prev.nx);
        let mut shift = alloc::vec![0.0; nt * nx];
        let mut build = |slope: &dyn SlopeField| -> Result<()> {
            let mut nodes = Vec::with_capacity(2);
            for k in 0..nx {
                let target = match family {
                    Family::First if k + 1 < nx => k + 1,
                    Family::Second if k > 0 => k - 1,
                    _ => continue,
                };
                for j in 0..nt {
                    let t0 = prev.t(j);
                    follow_with(
                        slope,
                        prev,
                        t0,
                        prev.x(k),
                        prev.x(target),
                        config.substeps_per_cell,
                        &mut nodes,
                    )?;
                    shift[k * nt + j] = nodes[nodes.len() - 1].0 - t0;
                }
            }
            Ok(())
        };
        match config.coefficients {
            Coefficients::Nonlinear => {
                let slope =
                    TabulatedSlope::new(prev, eq, family, config.substeps_per_cell, config.interpolation_order)?;
                build(&slope)?;
            }
            Coefficients::Frozen => {
                let slope = DirectSlope {
                    field: prev,
                    eq,
                    family,
                    order: config.interpolation_order,
                    coefficients: Coefficients::Frozen,
                };
                build(&slope)?;
            }
        }
        Ok(Self {
            rate: nt as f64 / prev.period,
            shift,
        })
    }
}

/// Precomputed weights and boundary data for sweeping a fixed grid.
pub struct Sweeper<'a> {
    forcing: &'a BoundaryForcing,
    damping: &'a DampingField,
    eq: &'a Equilibrium,
    config: IterationConfig,
    tables: [WeightTable; 2],
    beta: Vec<f64>,
}

/// `ν` of one family tabulated from an iterate at every RK4 stage position
/// of a grid-aligned trace, interpolated in `t` at query time.
struct TabulatedSlope<'a> {
    grid: &'a PeriodicField,
    nu: Vec<f64>,
    inv_h: f64,
    rate: f64,
    order: u8,
}

impl<'a> TabulatedSlope<'a> {
    fn new(prev: &'a PeriodicField, eq: &Equilibrium, family: Family, substeps: usize, order: u8) -> Result<Self> {
        let (nt, nx) = (prev.nt, prev.nx);
        let per_cell = 2 * substeps;
        let positions = per_cell * (nx - 1) + 1;
        let h = prev.dx() / per_cell as f64;
        let mut nu = alloc::vec![0.0; positions * nt];
        for p in 0..positions {
            let k = (p / per_cell).min(nx - 2);
            let s = (p - k * per_cell) as f64 / per_cell as f64;
            let x = if p + 1 == positions { prev.length } else { p as f64 * h };
            for j in 0..nt {
                let i0 = j * nx + k;
                let p1 = (1.0 - s) * prev.phi1[i0] + s * prev.phi1[i0 + 1];
                let p2 = (1.0 - s) * prev.phi2[i0] + s * prev.phi2[i0 + 1];
                nu[p * nt + j] = admissible_nu(eq, family, p1, p2, prev.t(j), x)?;
            }
        }
        Ok(Self {
            grid: prev,
            nu,
            inv_h: 1.0 / h,
            rate: nt as f64 / prev.period,
            order,
        })
    }
}

impl SlopeField for TabulatedSlope<'_> {
    #[inline]
    fn slope(&self, t: f64, x: f64) -> Result<f64> {
        let q = x * self.inv_h;
        let p = math::round(q);
        debug_assert!(math::abs(q - p) < 1e-6, "unaligned trace position {x}");
        let nt = self.grid.nt;
        let st = PeriodicStencil::with_rate(t, self.rate, nt, self.order);
        let base = &self.nu[p as usize * nt..(p as usize + 1) * nt];
        Ok(st.w[0] * base[st.idx[0]]
            + st.w[1] * base[st.idx[1]]
            + st.w[2] * base[st.idx[2]]
            + st.w[3] * base[st.idx[3]])
    }
}

impl<'a> Sweeper<'a> {
    pub fn new(
        forcing: &'a BoundaryForcing,
        damping: &'a DampingField,
        eq: &'a Equilibrium,
        config: &IterationConfig,
    ) -> Result<Self> {
        config.validate()?;
        check_inputs(forcing, damping)?;
        let grid = PeriodicField::zeros(config.nt, config.nx, damping.period, damping.length)?;
        let tables = [
            WeightTable::new(damping, eq, Family::First, &grid),
            WeightTable::new(damping, eq, Family::Second, &grid),
        ];
        let beta = (0..config.nt * config.nx)
            .map(|i| damping.beta(grid.t(i / config.nx), grid.x(i % config.nx)))
            .collect();
        Ok(Self {
            forcing,
            damping,
            eq,
            config: *config,
            tables,
            beta,
        })
    }

    fn check_grid(&self, prev: &PeriodicField) -> Result<()> {
        if prev.nt != self.config.nt
            || prev.nx != self.config.nx
            || prev.length != self.damping.length
            || math::abs(prev.period - self.damping.period) > 1e-14 * prev.period
        {
            return Err(Error::GridMismatch(format!(
                "iterate is {}x{} on T*={}, L={}; expected {}x{} on T*={}, L={}",
                prev.nt,
                prev.nx,
                prev.period,
                prev.length,
                self.config.nt,
                self.config.nx,
                self.damping.period,
                self.damping.length
            )));
        }
        Ok(())
    }

    /// New values of component `family` on the whole grid.
    pub fn sweep(&self, family: Family, prev: &PeriodicField) -> Result<Vec<f64>> {
        self.check_grid(prev)?;
        let maps = CellMaps::new(prev, self.eq, family, &self.config)?;
        let rows = map_rows(self.config.nt, |j| {
            let mut scratch = Scratch::default();
            let mut row = Vec::with_capacity(self.config.nx);
            for k in 0..self.config.nx {
                row.push(self.node(family, prev, &maps, j, k, &mut scratch)?);
            }
            Ok(row)
        })?;
        Ok(rows.into_iter().flatten().collect())
    }

    fn node(
        &self,
        family: Family,
        prev: &PeriodicField,
        maps: &CellMaps,
        j: usize,
        k: usize,
        s: &mut Scratch,
    ) -> Result<f64> {
        let nx = prev.nx;
        let order = self.config.interpolation_order;
        let table = &self.tables[family.index()];
        let (nu1_bar, nu2_bar) = self.eq.nu_bar();
        let (own, other, nu_bar, kappa, signal, bcol) = match family {
            Family::First => (0, 1, nu1_bar, self.forcing.kappa1, &self.forcing.phi1b, nx - 1),
            Family::Second => (1, 0, nu2_bar, self.forcing.kappa2, &self.forcing.phi2b, 0),
        };
        let t0 = prev.t(j);
        let x0 = prev.x(k);
        s.path.clear();
        s.rhs.clear();
        s.selfc.clear();
        s.weight.clear();
        s.own_prev.clear();
        let static_coeffs = table.time_independent;
        let mut c = k;
        let mut tau = t0;
        loop {
            let st = PeriodicStencil::with_rate(tau, maps.rate, prev.nt, order);
            let p1 = st.apply(&prev.phi1, nx, c);
            let p2 = st.apply(&prev.phi2, nx, c);
            let (f, beta) = if static_coeffs {
                (table.weight[c], self.beta[c])
            } else {
                (st.apply(&table.weight, nx, c), st.apply(&self.beta, nx, c))
            };
            let nu = match self.config.coefficients {
                Coefficients::Frozen => nu_bar,
                Coefficients::Nonlinear => {
                    let (l1, l2) = self.eq.lambda(p1, p2);
                    1.0 / if family == Family::First { l1 } else { l2 }
                }
            };
            let p_other = if other == 0 { p1 } else { p2 };
            s.path.push((tau, prev.x(c)));
            s.rhs
                .push(0.5 * beta * f * ((nu - nu_bar) * (p1 + p2) + nu_bar * p_other));
            s.selfc.push(if static_coeffs {
                0.0
            } else {
                nu * st.apply(&table.log_dt, nx, c)
            });
            s.weight.push(f);
            s.own_prev.push(if own == 0 { p1 } else { p2 });
            let next = match family {
                Family::First if c + 1 < nx => c + 1,
                Family::Second if c > 0 => c - 1,
                _ => break,
            };
            tau += if c == k {
                maps.shift[c * prev.nt + j]
            } else {
                st.apply(&maps.shift, 1, c * prev.nt)
            };
            c = next;
        }
        let n = s.path.len();
        let (tau_b, _) = s.path[n - 1];
        let reflected = PeriodicStencil::new(tau_b, prev.period, prev.nt, order).apply(prev.component(other), nx, bcol);
        let w_boundary = signal.value(tau_b) + kappa * reflected;

        // Predictor: self-term evaluated with the previous iterate.
        s.guess.clear();
        s.guess.extend(s.weight.iter().zip(&s.own_prev).map(|(f, p)| f * p));
        let passes = if table.time_independent {
            1
        } else {
            MAX_CORRECTOR_PASSES
        };
        let pc_tol = 0.1 * self.config.tol;
        let mut w0 = 0.0;
        for pass in 0..passes {
            s.next.clear();
            s.next.resize(n, 0.0);
            s.next[n - 1] = w_boundary;
            for m in (0..n - 1).rev() {
                let dy = s.path[m].1 - s.path[m + 1].1;
                let g_hi = s.rhs[m + 1] + s.selfc[m + 1] * s.guess[m + 1];
                let g_lo = s.rhs[m] + s.selfc[m] * s.guess[m];
                s.next[m] = s.next[m + 1] + 0.5 * dy * (g_lo + g_hi);
            }
            w0 = s.next[0];
            if passes == 1 {
                break;
            }
            let change = s
                .next
                .iter()
                .zip(&s.guess)
                .fold(0.0, |a: f64, (x, y)| a.max(math::abs(x - y)));
            core::mem::swap(&mut s.next, &mut s.guess);
            if change <= pc_tol {
                break;
            }
            if pass + 1 == passes {
                return Err(Error::PredictorCorrector { t: t0, x: x0, passes });
            }
        }
        Ok(w0 / s.weight[0])
    }

    /// One step of the iteration: both sweeps from `prev`, and the sup-norm change.
    pub fn iterate(&self, prev: &PeriodicField) -> Result<(PeriodicField, f64)> {
        let phi1 = self.sweep(Family::First, prev)?;
        let phi2 = self.sweep(Family::Second, prev)?;
        let next = PeriodicField {
            phi1,
            phi2,
            ..prev.clone()
        };
        if !next.is_finite() {
            return Err(Error::Domain("iterate has non-finite values".into()));
        }
        let diff = next.sup_diff(prev)?;
        Ok((next, diff))
    }
}

#[derive(Default)]
struct Scratch {
    path: Vec<(f64, f64)>,
    rhs: Vec<f64>,
    selfc: Vec<f64>,
    weight: Vec<f64>,
    own_prev: Vec<f64>,
    guess: Vec<f64>,
    next: Vec<f64>,
}

#[cfg(feature = "parallel")]
fn map_rows<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_rows<T>(n: usize, f: impl Fn(usize) -> Result<T>) -> Result<Vec<T>> {
    (0..n).map(f).collect()
}

pub fn sweep_family1(
    prev: &PeriodicField,
    forcing: &BoundaryForcing,
    damping: &DampingField,
    eq: &Equilibrium,
    config: &IterationConfig,
) -> Result<Vec<f64>> {
    Sweeper::new(forcing, damping, eq, config)?.sweep(Family::First, prev)
}

pub fn sweep_family2(
    prev: &PeriodicField,
    forcing: &BoundaryForcing,
    damping: &DampingField,
    eq: &Equilibrium,
    config: &IterationConfig,
) -> Result<Vec<f64>> {
    Sweeper::new(forcing, damping, eq, config)?.sweep(Family::Second, prev)
}

pub fn iterate_once(
    prev: &PeriodicField,
    forcing: &BoundaryForcing,
    damping: &DampingField,
    eq: &Equilibrium,
    config: &IterationConfig,
) -> Result<(PeriodicField, f64)> {
    Sweeper::new(forcing, damping, eq, config)?.iterate(prev)
}

/// Iterates from zero until the sup-norm change drops below `config.tol`.
pub fn solve_periodic(
    forcing: &BoundaryForcing,
    damping: &DampingField,
    eq: &Equilibrium,
    config: &IterationConfig,
) -> Result<(PeriodicField, ConvergenceReport)> {
    config.validate()?;
    let hyp = validate_hypothesis(damping, config.nt, config.nx)?;
    if !hyp.passed() {
        let msgs: Vec<&str> = hyp.violations.iter().map(|(_, m)| m.as_str()).collect();
        return Err(Error::Domain(format!("damping hypothesis fails: {}", msgs.join("; "))));
    }
    let sweeper = Sweeper::new(forcing, damping, eq, config)?;
    let mut current = init_zero(config, damping.period, damping.length)?;
    let mut diffs = Vec::new();
    let mut rising = 0;
    loop {
        let (next, diff) = sweeper.iterate(&current)?;
        current = next;
        if let Some(&last) = diffs.last() {
            rising = if diff > last { rising + 1 } else { 0 };
        }
        diffs.push(diff);
        let done = diff < config.tol;
        if done || rising >= 3 || diffs.len() >= config.max_iter {
            let mut report = ConvergenceReport::from_diffs(diffs, config.tol);
            report.final_c0_norm = current.sup_norm();
            report.final_c1_norm = current.c1_norm();
            report.converged = done;
            if done {
                return Ok((current, report));
            }
            return Err(if rising >= 3 {
                Error::NonContraction(alloc::boxed::Box::new(report))
            } else {
                Error::MaxIter(alloc::boxed::Box::new(report))
            });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeResidual {
    /// Sup-norm residual of each equation.
    pub residual: [f64; 2],
    /// Sup mismatch of the two reflection conditions at the boundary nodes.
    pub boundary_mismatch: f64,
}

impl PdeResidual {
    pub fn interior(&self) -> f64 {
        self.residual[0].max(self.residual[1])
    }
}

/// Residual of `∂ₜφᵢ + λᵢ(φ+Φ)∂ₓφᵢ − (β/2)(φ₁+φ₂)` with centered differences
/// (second-order one-sided at the `x` faces), and the reflection mismatch.
pub fn pde_residual(
    solution: &PeriodicField,
    forcing: &BoundaryForcing,
    damping: &DampingField,
    eq: &Equilibrium,
    coefficients: Coefficients,
) -> Result<PdeResidual> {
    if solution.nt < 16 || solution.nx < 16 {
        return Err(Error::InvalidParameter(format!(
            "residual needs at least a 16x16 grid, got {}x{}",
            solution.nt, solution.nx
        )));
    }
    let mut res: [f64; 2] = [0.0, 0.0];
    for j in 0..solution.nt {
        let t = solution.t(j);
        for k in 0..solution.nx {
            let p1 = solution.get(0, j, k);
            let p2 = solution.get(1, j, k);
            let (l1, l2) = eq.lambda_with(coefficients, p1, p2);
            let src = 0.5 * damping.beta(t, solution.x(k)) * (p1 + p2);
            for (c, l) in [(0, l1), (1, l2)] {
                let r = solution.dt_centered(c, j, k) + l * solution.dx_centered(c, j, k) - src;
                res[c] = res[c].max(math::abs(r));
            }
        }
    }
    let mut mismatch: f64 = 0.0;
    let last = solution.nx - 1;
    for j in 0..solution.nt {
        let t = solution.t(j);
        let right = solution.get(0, j, last) - forcing.phi1b.value(t) - forcing.kappa1 * solution.get(1, j, last);
        let left = solution.get(1, j, 0) - forcing.phi2b.value(t) - forcing.kappa2 * solution.get(0, j, 0);
        mismatch = mismatch.max(math::abs(right)).max(math::abs(left));
    }
    Ok(PdeResidual {
        residual: res,
        boundary_mismatch: mismatch,
    })
}
