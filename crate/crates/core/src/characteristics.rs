//! Characteristic curves on the periodic strip, parameterized by `x`.
//!
//! In the subsonic regime `dt/dx = νᵢ = 1/λᵢ` is well defined, so every
//! curve crosses the domain and meets a boundary face: family 1 (`ν₁ < 0`)
//! is traced toward `x = L`, family 2 (`ν₂ > 0`) toward `x = 0`.

use alloc::format;
use alloc::vec::Vec;

use crate::field::{PeriodicField, X_SLACK};
use crate::math;
use crate::model::{DampingField, Equilibrium};
use crate::{Coefficients, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    First,
    Second,
}

impl Family {
    pub fn index(self) -> usize {
        match self {
            Family::First => 0,
            Family::Second => 1,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Family::First),
            2 => Ok(Family::Second),
            _ => Err(Error::InvalidParameter(format!("family must be 1 or 2, got {n}"))),
        }
    }

    /// The face where this family's characteristics leave the strip.
    pub fn boundary_x(self, length: f64) -> f64 {
        match self {
            Family::First => length,
            Family::Second => 0.0,
        }
    }
}

pub const DEFAULT_SUBSTEPS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    pub substeps_per_cell: usize,
    /// Time interpolation order (1 or 3).
    pub order: u8,
    pub coefficients: Coefficients,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            substeps_per_cell: DEFAULT_SUBSTEPS,
            order: 3,
            coefficients: Coefficients::Nonlinear,
        }
    }
}

/// A traced characteristic: `(t, x)` at the anchor, at every grid column
/// passed, and at the end point.
#[derive(Debug, Clone, PartialEq)]
pub struct CharPath {
    pub family: Family,
    pub nodes: Vec<(f64, f64)>,
    pub arrival_t: f64,
}

/// Periodic-in-`t`, linear-in-`x` interpolation of one component.
pub fn interpolate(field: &PeriodicField, component: usize, t: f64, x: f64, order: u8) -> Result<f64> {
    field.interpolate(component, t, x, order)
}

/// Source of the characteristic slope `dt/dx` at a point of the strip.
pub trait SlopeField {
    fn slope(&self, t: f64, x: f64) -> Result<f64>;
}

/// Slope computed from the field by interpolation at each query.
pub struct DirectSlope<'a> {
    pub field: &'a PeriodicField,
    pub eq: &'a Equilibrium,
    pub family: Family,
    pub order: u8,
    pub coefficients: Coefficients,
}

/// Checks admissibility of `(p1, p2)` and returns `ν_family`.
#[inline]
pub(crate) fn admissible_nu(eq: &Equilibrium, family: Family, p1: f64, p2: f64, t: f64, x: f64) -> Result<f64> {
    if !eq.in_ball(p1, p2) {
        return Err(Error::Admissibility {
            t,
            x,
            detail: format!(
                "perturbation ({p1:.3e}, {p2:.3e}) leaves the ball of radius {}",
                eq.neighborhood_radius
            ),
        });
    }
    let (l1, l2) = eq.lambda(p1, p2);
    let l = if family == Family::First { l1 } else { l2 };
    if math::abs(l) < eq.sonic_margin || (family == Family::First) != (l < 0.0) {
        return Err(Error::Admissibility {
            t,
            x,
            detail: format!("characteristic speed {l} is sonic or has the wrong sign"),
        });
    }
    Ok(1.0 / l)
}

impl SlopeField for DirectSlope<'_> {
    #[inline]
    fn slope(&self, t: f64, x: f64) -> Result<f64> {
        match self.coefficients {
            Coefficients::Frozen => {
                let (n1, n2) = self.eq.nu_bar();
                Ok(if self.family == Family::First { n1 } else { n2 })
            }
            Coefficients::Nonlinear => {
                let (p1, p2) = self.field.interp_pair(t, x, self.order);
                admissible_nu(self.eq, self.family, p1, p2, t, x)
            }
        }
    }
}

/// Integrates `dt/dx = ν_family(φ + Φ)` from `(t0, x0)` to `x_end` with the
/// classical fourth-order Runge–Kutta method, `substeps_per_cell` steps per
/// grid cell. Stores the start point, every grid column crossed and the end.
pub fn follow(
    field: &PeriodicField,
    eq: &Equilibrium,
    family: Family,
    t0: f64,
    x0: f64,
    x_end: f64,
    opts: &TraceOptions,
) -> Result<CharPath> {
    let mut nodes = Vec::with_capacity(field.nx + 1);
    follow_into(field, eq, family, t0, x0, x_end, opts, &mut nodes)?;
    let arrival_t = nodes.last().map(|n| n.0).unwrap_or(t0);
    Ok(CharPath {
        family,
        nodes,
        arrival_t,
    })
}

pub(crate) fn follow_into(
    field: &PeriodicField,
    eq: &Equilibrium,
    family: Family,
    t0: f64,
    x0: f64,
    x_end: f64,
    opts: &TraceOptions,
    nodes: &mut Vec<(f64, f64)>,
) -> Result<()> {
    let slope = DirectSlope {
        field,
        eq,
        family,
        order: opts.order,
        coefficients: opts.coefficients,
    };
    follow_with(&slope, field, t0, x0, x_end, opts.substeps_per_cell, nodes)
}

/// Fourth-order Runge–Kutta integration of `dt/dx = slope(t, x)` with
/// `substeps` steps per grid cell of `grid`, storing column crossings.
pub fn follow_with<S: SlopeField + ?Sized>(
    slope: &S,
    grid: &PeriodicField,
    t0: f64,
    x0: f64,
    x_end: f64,
    substeps: usize,
    nodes: &mut Vec<(f64, f64)>,
) -> Result<()> {
    let field = grid;
    if substeps < 1 {
        return Err(Error::InvalidParameter("substeps_per_cell must be at least 1".into()));
    }
    let l = field.length;
    for x in [x0, x_end] {
        if !(x >= -X_SLACK && x <= l + X_SLACK) {
            return Err(Error::Domain(format!("x = {x} outside [0, {l}]")));
        }
    }
    let x0 = x0.clamp(0.0, l);
    let x_end = x_end.clamp(0.0, l);
    nodes.clear();
    nodes.push((t0, x0));
    if x0 == x_end {
        return Ok(());
    }
    let h = field.dx();
    let forward = x_end > x0;
    let eps = 1e-9 * h;
    let mut t = t0;
    let mut x = x0;
    // Grid columns strictly between x0 and x_end, then x_end.
    let pos = x0 / h;
    let mut next_col: isize = if forward {
        math::floor(pos + 1e-9) as isize + 1
    } else {
        let c = math::floor(pos - 1e-9) as isize;
        if (pos - c as f64) < 1e-9 {
            c - 1
        } else {
            c
        }
    };
    loop {
        let col_x = if next_col >= 0 && (next_col as usize) < field.nx {
            Some(field.x(next_col as usize))
        } else {
            None
        };
        let target = match col_x {
            Some(cx) if (forward && cx < x_end - eps) || (!forward && cx > x_end + eps) => cx,
            _ => x_end,
        };
        let seg = target - x;
        let n = (math::ceil_div(math::abs(seg), h) * substeps).max(1);
        let dx = seg / n as f64;
        for i in 0..n {
            let xa = x + i as f64 * dx;
            let xm = xa + 0.5 * dx;
            let k1 = slope.slope(t, xa)?;
            let k2 = slope.slope(t + 0.5 * dx * k1, xm)?;
            let k3 = slope.slope(t + 0.5 * dx * k2, xm)?;
            let xb = if i + 1 == n { target } else { xa + dx };
            let k4 = slope.slope(t + dx * k3, xb)?;
            t += dx * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        }
        x = target;
        nodes.push((t, x));
        if target == x_end {
            break;
        }
        next_col += if forward { 1 } else { -1 };
    }
    Ok(())
}

/// Traces the characteristic of `family` through `anchor` to its boundary face.
pub fn trace(
    field: &PeriodicField,
    eq: &Equilibrium,
    family: Family,
    anchor: (f64, f64),
    opts: &TraceOptions,
) -> Result<CharPath> {
    follow(
        field,
        eq,
        family,
        anchor.0,
        anchor.1,
        family.boundary_x(field.length),
        opts,
    )
}

/// Composite trapezoid of `integrand(t, x)` along the path in its `x`
/// parameterization, from the first node to the last (signed).
pub fn path_integrate(path: &CharPath, mut integrand: impl FnMut(f64, f64) -> f64) -> Result<f64> {
    if path.nodes.len() < 2 {
        return Err(Error::InvalidParameter("path needs at least 2 nodes".into()));
    }
    let mut acc = 0.0;
    let (mut t_prev, mut x_prev) = path.nodes[0];
    let mut f_prev = integrand(t_prev, x_prev);
    for &(t, x) in &path.nodes[1..] {
        let f = integrand(t, x);
        acc += 0.5 * (x - x_prev) * (f + f_prev);
        t_prev = t;
        x_prev = x;
        f_prev = f;
    }
    let _ = t_prev;
    Ok(acc)
}

fn simpson(n: usize, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    // n odd, n >= 3
    let m = n - 1;
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Integrating-factor weight
/// `F₁ = exp(∫ₓᴸ (β/2)ν₁(Φ) ds)` or `F₂ = exp(−∫₀ˣ (β/2)ν₂(Φ) ds)`
/// by composite Simpson with `quad_points` nodes (rounded up to odd).
pub fn weight_f(
    damping: &DampingField,
    eq: &Equilibrium,
    family: Family,
    t: f64,
    x: f64,
    quad_points: usize,
) -> Result<f64> {
    if quad_points < 2 {
        return Err(Error::InvalidParameter(format!(
            "quad_points must be at least 2, got {quad_points}"
        )));
    }
    let n = if quad_points.is_multiple_of(2) {
        quad_points + 1
    } else {
        quad_points
    };
    let (nu1, nu2) = eq.nu_bar();
    let l = damping.length;
    Ok(match family {
        Family::First => math::exp(0.5 * nu1 * simpson(n, x, l, |s| damping.beta(t, s))),
        Family::Second => math::exp(-0.5 * nu2 * simpson(n, 0.0, x, |s| damping.beta(t, s))),
    })
}

/// `F` and the time-derivative factor `∂ₜF / F` of one family tabulated on
/// the field grid (`t` outer). Integrals use one Simpson panel per cell,
/// accumulated from the family's boundary face.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    pub family: Family,
    pub nt: usize,
    pub nx: usize,
    pub period: f64,
    pub weight: Vec<f64>,
    /// `∂ₜF / F`: `∫ₓᴸ ∂ₜβ/2 ν₁(Φ) ds` for family 1, `−∫₀ˣ ∂ₜβ/2 ν₂(Φ) ds` for family 2.
    pub log_dt: Vec<f64>,
    pub time_independent: bool,
}

impl WeightTable {
    pub fn new(damping: &DampingField, eq: &Equilibrium, family: Family, grid: &PeriodicField) -> Self {
        let (nt, nx) = (grid.nt, grid.nx);
        let (nu1, nu2) = eq.nu_bar();
        let mut weight = alloc::vec![0.0; nt * nx];
        let mut log_dt = alloc::vec![0.0; nt * nx];
        let time_independent = damping.is_time_independent();
        let panel = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
        for j in 0..nt {
            let t = grid.t(j);
            let beta = |s: f64| damping.beta(t, s);
            let dbeta = |s: f64| damping.dbeta_dt(t, s);
            let row = j * nx;
            match family {
                Family::First => {
                    let (mut ib, mut id) = (0.0, 0.0);
                    weight[row + nx - 1] = 1.0;
                    log_dt[row + nx - 1] = 0.0;
                    for k in (0..nx - 1).rev() {
                        let (a, b) = (grid.x(k), grid.x(k + 1));
                        ib += panel(&beta, a, b);
                        if !time_independent {
                            id += panel(&dbeta, a, b);
                        }
                        weight[row + k] = math::exp(0.5 * nu1 * ib);
                        log_dt[row + k] = 0.5 * nu1 * id;
                    }
                }
                Family::Second => {
                    let (mut ib, mut id) = (0.0, 0.0);
                    weight[row] = 1.0;
                    log_dt[row] = 0.0;
                    for k in 1..nx {
                        let (a, b) = (grid.x(k - 1), grid.x(k));
                        ib += panel(&beta, a, b);
                        if !time_independent {
                            id += panel(&dbeta, a, b);
                        }
                        weight[row + k] = math::exp(-0.5 * nu2 * ib);
                        log_dt[row + k] = -0.5 * nu2 * id;
                    }
                }
            }
        }
        Self {
            family,
            nt,
            nx,
            period: grid.period,
            weight,
            log_dt,
            time_independent,
        }
    }

    #[inline]
    pub fn weight_at(&self, j: usize, k: usize) -> f64 {
        self.weight[j * self.nx + k]
    }

    /// `M₀ = exp(−β*·A₀·L/2)`.
    pub fn upper_bound(damping: &DampingField, eq: &Equilibrium) -> f64 {
        math::exp(-0.5 * damping.beta_star * eq.a0 * damping.length)
    }
}
