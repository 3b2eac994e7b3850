//! γ-law gas, Riemann invariants, characteristic speeds, the background
//! equilibrium, and the damping/forcing data of the boundary value problem.
//!
//! Pressure is normalized to `p = ρ^γ`. Perturbation coordinates are
//! `φ = (m − m̄, n − n̄)`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::math::{self, TAU};
use crate::series::{FourierSeries, Polynomial, Signal};
use crate::{Coefficients, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasState {
    pub rho: f64,
    pub u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannPair {
    pub m: f64,
    pub n: f64,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 1.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("adiabatic exponent must exceed 1, got {gamma}")))
    }
}

/// `c = √γ ρ^((γ−1)/2)`.
pub fn sound_speed(rho: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("density must be positive, got {rho}")));
    }
    Ok(math::sqrt(gamma) * math::powf(rho, 0.5 * (gamma - 1.0)))
}

pub fn riemann_from_state(state: GasState, gamma: f64) -> Result<RiemannPair> {
    let c = sound_speed(state.rho, gamma)?;
    let h = c / (gamma - 1.0);
    Ok(RiemannPair {
        m: 0.5 * state.u - h,
        n: 0.5 * state.u + h,
    })
}

/// Inverse transform: `u = m + n`, `c = (γ−1)(n−m)/2`, `ρ = (c²/γ)^(1/(γ−1))`.
pub fn state_from_riemann(pair: RiemannPair, gamma: f64) -> Result<GasState> {
    check_gamma(gamma)?;
    if !(pair.n > pair.m) {
        return Err(Error::Domain(format!(
            "n must exceed m (vacuum or negative density): m={}, n={}",
            pair.m, pair.n
        )));
    }
    let c = 0.5 * (gamma - 1.0) * (pair.n - pair.m);
    Ok(GasState {
        rho: math::powf(c * c / gamma, 1.0 / (gamma - 1.0)),
        u: pair.m + pair.n,
    })
}

/// `(λ₁, λ₂)` with `λ₁ = (γ+1)m/2 + (3−γ)n/2`, `λ₂ = (3−γ)m/2 + (γ+1)n/2`.
pub fn eigenvalues(pair: RiemannPair, gamma: f64) -> (f64, f64) {
    let a = 0.5 * (gamma + 1.0);
    let b = 0.5 * (3.0 - gamma);
    (a * pair.m + b * pair.n, b * pair.m + a * pair.n)
}

/// `(1/λ₁, 1/λ₂)`, rejecting states with `λ₁ ≥ −margin` or `λ₂ ≤ margin`.
pub fn nu(pair: RiemannPair, gamma: f64, margin: f64) -> Result<(f64, f64)> {
    let (l1, l2) = eigenvalues(pair, gamma);
    if !(l1 <= -margin && l2 >= margin) {
        return Err(Error::Domain(format!(
            "not subsonic: λ₁={l1}, λ₂={l2} (margin {margin})"
        )));
    }
    Ok((1.0 / l1, 1.0 / l2))
}

/// Constant background state `Φ = (m̄, n̄)` together with a sup-norm ball of
/// perturbations on which the flow is guaranteed subsonic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub rho_bar: f64,
    pub gamma: f64,
    pub m_bar: f64,
    pub n_bar: f64,
    pub c_bar: f64,
    /// `max |1/λᵢ|` over the admissible ball.
    pub a0: f64,
    pub neighborhood_radius: f64,
    /// Minimum admissible `|λᵢ|`.
    pub sonic_margin: f64,
    /// `max |λᵢ|` over the admissible ball.
    pub max_speed: f64,
}

/// Relative sonic guard: `|λᵢ| ≥ SONIC_MARGIN · c̄`.
pub const SONIC_MARGIN: f64 = 1e-6;

/// Default admissible radius as a fraction of `c̄`.
pub const DEFAULT_RADIUS_FRACTION: f64 = 0.1;

pub fn make_equilibrium(rho_bar: f64, gamma: f64, radius: f64) -> Result<Equilibrium> {
    let c_bar = sound_speed(rho_bar, gamma)?;
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::Domain(format!("neighborhood radius must be >= 0, got {radius}")));
    }
    let n_bar = c_bar / (gamma - 1.0);
    let m_bar = -n_bar;
    let margin = SONIC_MARGIN * c_bar;
    let phi = RiemannPair { m: m_bar, n: n_bar };
    // λ is linear in (m, n): its extremes over the box sit on the corners.
    let mut min_abs = f64::INFINITY;
    let mut max_abs: f64 = 0.0;
    for (s1, s2) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
        let p = RiemannPair {
            m: phi.m + s1 * radius,
            n: phi.n + s2 * radius,
        };
        let (l1, l2) = eigenvalues(p, gamma);
        if !(l1 <= -margin && l2 >= margin) {
            return Err(Error::Domain(format!(
                "radius {radius} reaches the sonic set: corner ({}, {}) has λ₁={l1}, λ₂={l2}",
                s1 * radius,
                s2 * radius
            )));
        }
        min_abs = min_abs.min(math::abs(l1)).min(math::abs(l2));
        max_abs = max_abs.max(math::abs(l1)).max(math::abs(l2));
    }
    Ok(Equilibrium {
        rho_bar,
        gamma,
        m_bar,
        n_bar,
        c_bar,
        a0: 1.0 / min_abs,
        neighborhood_radius: radius,
        sonic_margin: margin,
        max_speed: max_abs,
    })
}

/// Equilibrium with radius `0.1·c̄`.
pub fn make_default_equilibrium(rho_bar: f64, gamma: f64) -> Result<Equilibrium> {
    let c = sound_speed(rho_bar, gamma)?;
    make_equilibrium(rho_bar, gamma, DEFAULT_RADIUS_FRACTION * c)
}

impl Equilibrium {
    pub fn pair(&self, phi1: f64, phi2: f64) -> RiemannPair {
        RiemannPair {
            m: self.m_bar + phi1,
            n: self.n_bar + phi2,
        }
    }

    /// `λᵢ(φ + Φ)`.
    #[inline]
    pub fn lambda(&self, phi1: f64, phi2: f64) -> (f64, f64) {
        eigenvalues(self.pair(phi1, phi2), self.gamma)
    }

    #[inline]
    pub fn lambda_with(&self, coeffs: Coefficients, phi1: f64, phi2: f64) -> (f64, f64) {
        match coeffs {
            Coefficients::Nonlinear => self.lambda(phi1, phi2),
            Coefficients::Frozen => (-self.c_bar, self.c_bar),
        }
    }

    /// `νᵢ(Φ) = ∓1/c̄`.
    pub fn nu_bar(&self) -> (f64, f64) {
        (-1.0 / self.c_bar, 1.0 / self.c_bar)
    }

    pub fn in_ball(&self, phi1: f64, phi2: f64) -> bool {
        math::abs(phi1) <= self.neighborhood_radius && math::abs(phi2) <= self.neighborhood_radius
    }

    /// `A₀` as seen by the given coefficient mode: frozen speeds are `±c̄`.
    pub fn a0_for(&self, coeffs: Coefficients) -> f64 {
        match coeffs {
            Coefficients::Nonlinear => self.a0,
            Coefficients::Frozen => 1.0 / self.c_bar,
        }
    }

    /// Window length `T₀ = L·A₀`.
    pub fn window_length(&self, length: f64, coeffs: Coefficients) -> f64 {
        length * self.a0_for(coeffs)
    }

    pub fn state(&self, phi1: f64, phi2: f64) -> Result<GasState> {
        state_from_riemann(self.pair(phi1, phi2), self.gamma)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DampingKind {
    Constant,
    /// `β = β₀ · g(t) · h(x)`.
    Separable {
        temporal: FourierSeries,
        spatial: Polynomial,
    },
    /// Samples on `t_j = jT/nt`, `x_k = kL/(nx−1)`, row-major with `t` outer.
    Tabulated {
        nt: usize,
        nx: usize,
        values: Vec<f64>,
    },
}

/// Damping coefficient `β(t,x) ≤ 0`, `T*`-periodic in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingField {
    pub kind: DampingKind,
    pub beta0: f64,
    pub period: f64,
    pub length: f64,
    /// Certified lower bound `β* ≤ β`.
    pub beta_star: f64,
    /// Certified bound on `|∂ₜβ|` and `|∂ₓβ|`.
    pub deriv_bound: f64,
}

fn check_period_length(period: f64, length: f64) -> Result<()> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::Domain(format!("period must be positive, got {period}")));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::Domain(format!("domain length must be positive, got {length}")));
    }
    Ok(())
}

impl DampingField {
    pub fn constant(beta0: f64, period: f64, length: f64) -> Result<Self> {
        check_period_length(period, length)?;
        Ok(Self {
            kind: DampingKind::Constant,
            beta0,
            period,
            length,
            beta_star: beta0.min(0.0),
            deriv_bound: 0.0,
        })
    }

    pub fn zero(period: f64, length: f64) -> Result<Self> {
        Self::constant(0.0, period, length)
    }

    pub fn separable(beta0: f64, temporal: FourierSeries, spatial: Polynomial, length: f64) -> Result<Self> {
        let period = temporal.period;
        check_period_length(period, length)?;
        let g = temporal.sup_bound();
        let h = spatial.sup_bound(length);
        let dg = temporal.derivative_bound();
        let dh = spatial.derivative_bound(length);
        let amp = math::abs(beta0);
        Ok(Self {
            kind: DampingKind::Separable { temporal, spatial },
            beta0,
            period,
            length,
            beta_star: -amp * g * h,
            deriv_bound: amp * (dg * h).max(g * dh),
        })
    }

    pub fn tabulated(nt: usize, nx: usize, values: Vec<f64>, period: f64, length: f64) -> Result<Self> {
        check_period_length(period, length)?;
        if nt < 4 || nx < 4 || values.len() != nt * nx {
            return Err(Error::InvalidParameter(format!(
                "tabulated damping needs nt, nx >= 4 and nt*nx values (nt={nt}, nx={nx}, len={})",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("tabulated damping has non-finite values".into()));
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut field = Self {
            kind: DampingKind::Tabulated { nt, nx, values },
            beta0: lo,
            period,
            length,
            // Four-point Lagrange weights have absolute sum <= 1.25 per axis.
            beta_star: lo - 0.5625 * (hi - lo),
            deriv_bound: 0.0,
        };
        let (sampled_dt, sampled_dx) = field.sampled_derivative_max(4 * nt, 4 * (nx - 1) + 1);
        field.deriv_bound = 1.25 * sampled_dt.max(sampled_dx);
        Ok(field)
    }

    fn sampled_derivative_max(&self, nt: usize, nx: usize) -> (f64, f64) {
        let mut mt: f64 = 0.0;
        let mut mx: f64 = 0.0;
        for j in 0..nt {
            let t = self.period * j as f64 / nt as f64;
            for k in 0..nx {
                let x = self.length * k as f64 / (nx - 1) as f64;
                mt = mt.max(math::abs(self.dbeta_dt(t, x)));
                mx = mx.max(math::abs(self.dbeta_dx(t, x)));
            }
        }
        (mt, mx)
    }

    pub fn is_identically_zero(&self) -> bool {
        match &self.kind {
            DampingKind::Constant => self.beta0 == 0.0,
            DampingKind::Separable { temporal, spatial } => {
                self.beta0 == 0.0 || temporal.sup_bound() == 0.0 || spatial.sup_bound(self.length) == 0.0
            }
            DampingKind::Tabulated { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// True when `∂ₜβ ≡ 0`.
    pub fn is_time_independent(&self) -> bool {
        match &self.kind {
            DampingKind::Constant => true,
            DampingKind::Separable { temporal, .. } => self.beta0 == 0.0 || temporal.derivative_bound() == 0.0,
            DampingKind::Tabulated { nt, nx, values } => {
                (0..*nx).all(|k| (1..*nt).all(|j| values[j * nx + k] == values[k]))
            }
        }
    }

    pub fn beta(&self, t: f64, x: f64) -> f64 {
        match &self.kind {
            DampingKind::Constant => self.beta0,
            DampingKind::Separable { temporal, spatial } => self.beta0 * temporal.value(t) * spatial.value(x),
            DampingKind::Tabulated { nt, nx, values } => {
                tabulated_eval(*nt, *nx, values, self.period, self.length, t, x)
            }
        }
    }

    pub fn dbeta_dt(&self, t: f64, x: f64) -> f64 {
        match &self.kind {
            DampingKind::Constant => 0.0,
            DampingKind::Separable { temporal, spatial } => self.beta0 * temporal.derivative(t) * spatial.value(x),
            DampingKind::Tabulated { .. } => {
                let h = 1e-6 * self.period;
                (self.beta(t + h, x) - self.beta(t - h, x)) / (2.0 * h)
            }
        }
    }

    pub fn dbeta_dx(&self, t: f64, x: f64) -> f64 {
        match &self.kind {
            DampingKind::Constant => 0.0,
            DampingKind::Separable { temporal, spatial } => self.beta0 * temporal.value(t) * spatial.derivative(x),
            DampingKind::Tabulated { .. } => {
                let h = 1e-6 * self.length;
                let lo = (x - h).max(0.0);
                let hi = (x + h).min(self.length);
                (self.beta(t, hi) - self.beta(t, lo)) / (hi - lo)
            }
        }
    }

    /// `β(t, L − x)`; used for mirror-symmetry checks.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        match &mut out.kind {
            DampingKind::Constant => {}
            DampingKind::Separable { spatial, .. } => {
                // p(L − x) by Taylor shift.
                let n = spatial.coeffs.len();
                let mut shifted = alloc::vec![0.0; n];
                for (k, c) in spatial.coeffs.iter().enumerate() {
                    // c (L − x)^k = c Σ_j C(k,j) L^(k−j) (−x)^j
                    let mut binom = 1.0;
                    for j in 0..=k {
                        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                        shifted[j] += c * binom * math::powf(self.length, (k - j) as f64) * sign;
                        binom = binom * (k - j) as f64 / (j + 1) as f64;
                    }
                }
                *spatial = Polynomial::new(shifted);
            }
            DampingKind::Tabulated { nt, nx, values } => {
                let (nt, nx) = (*nt, *nx);
                let mut v = values.clone();
                for j in 0..nt {
                    for k in 0..nx {
                        v[j * nx + k] = values[j * nx + (nx - 1 - k)];
                    }
                }
                *values = v;
            }
        }
        out
    }
}

/// Four-point Lagrange weights for the offset `s ∈ [0,1)` on nodes −1, 0, 1, 2.
#[inline]
pub(crate) fn cubic_weights(s: f64) -> [f64; 4] {
    [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ]
}

/// Clamped four-point stencil on `0..n`: returns the first stencil node and
/// the weights for position `p` (in node units).
#[inline]
pub(crate) fn clamped_cubic_stencil(p: f64, n: usize) -> (usize, [f64; 4]) {
    debug_assert!(n >= 4);
    let cell = (math::floor(p) as isize).clamp(0, n as isize - 2) as usize;
    let start = cell.saturating_sub(1).min(n - 4);
    // Offset of p relative to node start+1.
    let s = p - (start + 1) as f64;
    (start, cubic_weights(s))
}

fn tabulated_eval(nt: usize, nx: usize, values: &[f64], period: f64, length: f64, t: f64, x: f64) -> f64 {
    let pt = math::wrap(t, period) / period * nt as f64;
    let j = (math::floor(pt) as usize).min(nt - 1);
    let wt = cubic_weights(pt - j as f64);
    let px = (x / length * (nx - 1) as f64).clamp(0.0, (nx - 1) as f64);
    let (kx, wx) = clamped_cubic_stencil(px, nx);
    let mut acc = 0.0;
    for a in 0..4 {
        let jj = (j + nt + a - 1) % nt;
        let row = &values[jj * nx..(jj + 1) * nx];
        let mut r = 0.0;
        for b in 0..4 {
            r += wx[b] * row[kx + b];
        }
        acc += wt[a] * r;
    }
    acc
}

/// Clauses of the damping hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clause {
    /// `β ≤ 0`.
    NonPositive,
    /// `β ≥ β*`.
    LowerBound,
    /// `|∂ₜβ|, |∂ₓβ| ≤ ε`.
    DerivativeBound,
    /// `β(t + T*, x) = β(t, x)`.
    Periodicity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub max_beta: f64,
    pub min_beta: f64,
    pub max_dt: f64,
    pub max_dx: f64,
    pub periodicity_defect: f64,
    pub deriv_slack: f64,
    pub violations: Vec<(Clause, String)>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples `β` on an `nt × nx` grid and checks the sign, lower bound,
/// derivative bound (centered differences) and periodicity clauses.
pub fn validate_hypothesis(field: &DampingField, nt: usize, nx: usize) -> Result<HypothesisReport> {
    if nt < 2 || nx < 2 {
        return Err(Error::InvalidParameter(format!(
            "hypothesis grid must be at least 2x2, got {nt}x{nx}"
        )));
    }
    let ht = field.period / nt as f64;
    let hx = field.length / (nx - 1) as f64;
    let mut max_beta = f64::NEG_INFINITY;
    let mut min_beta = f64::INFINITY;
    let (mut max_dt, mut max_dx, mut defect): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for j in 0..nt {
        let t = j as f64 * ht;
        for k in 0..nx {
            let x = k as f64 * hx;
            let b = field.beta(t, x);
            max_beta = max_beta.max(b);
            min_beta = min_beta.min(b);
            let dt = (field.beta(t + ht, x) - field.beta(t - ht, x)) / (2.0 * ht);
            let dx = if k == 0 {
                (field.beta(t, hx) - b) / hx
            } else if k == nx - 1 {
                (b - field.beta(t, x - hx)) / hx
            } else {
                (field.beta(t, x + hx) - field.beta(t, x - hx)) / (2.0 * hx)
            };
            max_dt = max_dt.max(math::abs(dt));
            max_dx = max_dx.max(math::abs(dx));
            // Probe an off-grid time as well as the node.
            let tp = t + 0.37 * ht;
            defect = defect
                .max(math::abs(field.beta(t + field.period, x) - b))
                .max(math::abs(field.beta(tp + field.period, x) - field.beta(tp, x)));
        }
    }
    let deriv_slack = 1e-9 + 0.01 * field.deriv_bound;
    let scale = math::abs(field.beta_star).max(1.0);
    let mut violations = Vec::new();
    if max_beta > 1e-14 * scale {
        violations.push((
            Clause::NonPositive,
            format!("β must be non-positive; sampled maximum is {max_beta}"),
        ));
    }
    if min_beta < field.beta_star - 1e-14 * scale {
        violations.push((
            Clause::LowerBound,
            format!("sampled minimum {min_beta} is below β* = {}", field.beta_star),
        ));
    }
    let worst = max_dt.max(max_dx);
    if worst > field.deriv_bound + deriv_slack {
        violations.push((
            Clause::DerivativeBound,
            format!(
                "sampled derivative {worst} exceeds bound {} (+{deriv_slack} slack)",
                field.deriv_bound
            ),
        ));
    }
    if defect > 1e-12 * scale {
        violations.push((Clause::Periodicity, format!("β(t+T*,x) − β(t,x) reaches {defect}")));
    }
    Ok(HypothesisReport {
        max_beta,
        min_beta,
        max_dt,
        max_dx,
        periodicity_defect: defect,
        deriv_slack,
        violations,
    })
}

/// Time-periodic boundary data `φ₁(t,L) = φ₁b(t) + κ₁φ₂(t,L)`,
/// `φ₂(t,0) = φ₂b(t) + κ₂φ₁(t,0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryForcing {
    pub phi1b: Signal,
    pub phi2b: Signal,
    pub kappa1: f64,
    pub kappa2: f64,
    pub period: f64,
    /// Sampled `max_i max(sup|φᵢb|, sup|φᵢb'|)`.
    pub eps_measured: f64,
}

pub const DEFAULT_NORM_SAMPLES: usize = 4096;

impl BoundaryForcing {
    pub fn new(phi1b: Signal, phi2b: Signal, kappa1: f64, kappa2: f64) -> Result<Self> {
        let period = phi1b.period();
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::Domain(format!("period must be positive, got {period}")));
        }
        if phi2b.period() != period {
            return Err(Error::Domain(format!(
                "forcing periods differ: {} vs {}",
                period,
                phi2b.period()
            )));
        }
        for (name, k) in [("kappa1", kappa1), ("kappa2", kappa2)] {
            if !(math::abs(k) < 1.0) {
                return Err(Error::Domain(format!(
                    "reflection coefficient {name} = {k} violates |κ| < 1"
                )));
            }
        }
        let mut out = Self {
            phi1b,
            phi2b,
            kappa1,
            kappa2,
            period,
            eps_measured: 0.0,
        };
        out.eps_measured = boundary_c1_norm(&out, DEFAULT_NORM_SAMPLES)?.sampled;
        Ok(out)
    }

    pub fn zero(period: f64, kappa1: f64, kappa2: f64) -> Result<Self> {
        Self::new(Signal::zero(period), Signal::zero(period), kappa1, kappa2)
    }

    pub fn is_zero(&self) -> bool {
        self.phi1b.is_zero() && self.phi2b.is_zero()
    }

    /// Same forcing with both signals multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let scale = |s: &Signal| match s {
            Signal::Fourier(f) => Signal::Fourier(FourierSeries::new(
                f.period,
                f.mean * factor,
                f.cos.iter().map(|c| c * factor).collect(),
                f.sin.iter().map(|c| c * factor).collect(),
            )),
            Signal::PowerSine {
                period,
                amplitude,
                exponent,
            } => Signal::PowerSine {
                period: *period,
                amplitude: amplitude * factor,
                exponent: *exponent,
            },
        };
        Self::new(scale(&self.phi1b), scale(&self.phi2b), self.kappa1, self.kappa2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C1Norm {
    pub sampled: f64,
    pub certified: f64,
}

/// Sampled and certified `max_i max(sup|φᵢb|, sup|φᵢb'|)` over one period.
pub fn boundary_c1_norm(forcing: &BoundaryForcing, samples: usize) -> Result<C1Norm> {
    if samples < 64 {
        return Err(Error::InvalidParameter(format!(
            "boundary norm needs at least 64 samples, got {samples}"
        )));
    }
    let mut sampled: f64 = 0.0;
    for s in [&forcing.phi1b, &forcing.phi2b] {
        for i in 0..samples {
            let t = forcing.period * i as f64 / samples as f64;
            sampled = sampled.max(math::abs(s.value(t))).max(math::abs(s.derivative(t)));
        }
    }
    let certified = forcing
        .phi1b
        .certified_c1_bound()
        .max(forcing.phi2b.certified_c1_bound())
        .max(sampled);
    Ok(C1Norm { sampled, certified })
}

/// Human-readable one-line summary of a forcing, used in manifests.
pub fn describe_forcing(f: &BoundaryForcing) -> String {
    format!(
        "T*={} κ₁={} κ₂={} ε={:.6e}",
        f.period, f.kappa1, f.kappa2, f.eps_measured
    )
}

/// `2π/T`.
pub fn angular_frequency(period: f64) -> f64 {
    TAU / period
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sound_speed_values() {
        assert_relative_eq!(sound_speed(1.0, 3.0).unwrap(), 1.7320508075688772, epsilon = 1e-15);
        assert_relative_eq!(sound_speed(1.0, 1.4).unwrap(), 1.1832159566199232, epsilon = 1e-15);
        assert_relative_eq!(sound_speed(1.0, 1.0 + 1e-12).unwrap(), 1.0, epsilon = 1e-9);
        assert!(sound_speed(0.0, 1.4).is_err());
        assert!(sound_speed(-1.0, 1.4).is_err());
        assert!(sound_speed(1.0, 1.0).is_err());
    }

    #[test]
    fn riemann_examples() {
        let p = riemann_from_state(GasState { rho: 1.0, u: 0.0 }, 3.0).unwrap();
        assert_relative_eq!(p.m, -0.8660254037844386, epsilon = 1e-15);
        assert_relative_eq!(p.n, 0.8660254037844386, epsilon = 1e-15);
        let p = riemann_from_state(GasState { rho: 1.0, u: 0.0 }, 1.4).unwrap();
        // 2c/(γ−1)/2 = √1.4/0.4
        assert_relative_eq!(p.n, 2.958039891549808, epsilon = 1e-14);
        assert_relative_eq!(p.m, -2.958039891549808, epsilon = 1e-14);
        assert!(riemann_from_state(GasState { rho: 0.0, u: 1.0 }, 1.4).is_err());
    }

    #[test]
    fn inverse_examples() {
        let h = 3f64.sqrt() / 2.0;
        let s = state_from_riemann(RiemannPair { m: -h, n: h }, 3.0).unwrap();
        assert_relative_eq!(s.rho, 1.0, epsilon = 1e-15);
        assert_eq!(s.u, 0.0);
        let s = state_from_riemann(
            RiemannPair {
                m: -2.9580399,
                n: 2.9580399,
            },
            1.4,
        )
        .unwrap();
        assert_relative_eq!(s.rho, 1.0, epsilon = 1e-7);
        assert!(state_from_riemann(RiemannPair { m: 0.3, n: 0.3 }, 1.4).is_err());
        assert!(state_from_riemann(RiemannPair { m: 0.4, n: 0.3 }, 1.4).is_err());
    }

    #[test]
    fn eigenvalue_examples() {
        let h = 0.8660254037844386;
        let (l1, l2) = eigenvalues(RiemannPair { m: -h, n: h }, 3.0);
        assert_relative_eq!(l1, -1.7320508075688772, epsilon = 1e-15);
        assert_relative_eq!(l2, 1.7320508075688772, epsilon = 1e-15);
        let eq = make_equilibrium(1.0, 1.4, 0.0).unwrap();
        let (l1, l2) = eq.lambda(0.0, 0.0);
        assert_relative_eq!(l1, -1.1832159566199232, epsilon = 1e-14);
        assert_relative_eq!(l2, 1.1832159566199232, epsilon = 1e-14);
    }

    #[test]
    fn nu_examples() {
        let h = 0.8660254037844386;
        let (n1, n2) = nu(RiemannPair { m: -h, n: h }, 3.0, 1e-6).unwrap();
        assert_relative_eq!(n1, -0.5773502691896258, epsilon = 1e-14);
        assert_relative_eq!(n2, 0.5773502691896258, epsilon = 1e-14);
        let eq = make_equilibrium(1.0, 1.4, 0.1).unwrap();
        let (n1, _) = nu(eq.pair(0.0, 0.0), 1.4, eq.sonic_margin).unwrap();
        assert_relative_eq!(n1, -1.0 / eq.c_bar, epsilon = 1e-15);
        // γ = 3, m = 0: λ₁ = 2m = 0
        assert!(nu(RiemannPair { m: 0.0, n: 1.0 }, 3.0, 1e-6).is_err());
    }

    #[test]
    fn equilibrium_examples() {
        let eq = make_equilibrium(1.0, 1.4, 0.1).unwrap();
        assert_relative_eq!(eq.c_bar, 1.1832159566199232, epsilon = 1e-15);
        assert_relative_eq!(eq.n_bar, 2.958039891549808, epsilon = 1e-14);
        assert_relative_eq!(eq.m_bar, -eq.n_bar);
        // |Δλ| ≤ ((γ+1)/2 + |3−γ|/2)·r = 2r
        assert_relative_eq!(eq.a0, 1.0 / (1.1832159566199232 - 0.2), epsilon = 1e-14);
        assert!((eq.a0 - 1.0170).abs() < 1e-3);
        let eq0 = make_equilibrium(1.0, 1.4, 0.0).unwrap();
        assert_relative_eq!(eq0.a0, 1.0 / eq0.c_bar, epsilon = 1e-15);
        // First failing radius: c̄ − 2r = margin.
        let r_crit = eq.c_bar * (1.0 - SONIC_MARGIN) / 2.0;
        assert!(make_equilibrium(1.0, 1.4, r_crit * 0.999).is_ok());
        assert!(make_equilibrium(1.0, 1.4, r_crit * 1.001).is_err());
        assert!(make_equilibrium(1.0, 1.4, 1.0).is_err());
    }

    #[test]
    fn hypothesis_constant_and_sign() {
        let f = DampingField::constant(-0.5, 4.0, 1.0).unwrap();
        let r = validate_hypothesis(&f, 16, 16).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
        assert_eq!(r.max_dt, 0.0);
        assert_eq!(r.max_dx, 0.0);

        let f = DampingField::constant(0.1, 4.0, 1.0).unwrap();
        let r = validate_hypothesis(&f, 16, 16).unwrap();
        assert!(!r.passed());
        assert!(r.violations.iter().any(|(c, _)| *c == Clause::NonPositive));

        assert!(validate_hypothesis(&f, 1, 16).is_err());
    }

    #[test]
    fn hypothesis_oscillating_profile() {
        let period = 4.0;
        let temporal = FourierSeries::new(period, 1.0, alloc::vec![], alloc::vec![0.5]);
        let f = DampingField::separable(-0.5, temporal, Polynomial::constant(1.0), 1.0).unwrap();
        let r = validate_hypothesis(&f, 64, 9).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
        let analytic = 0.25 * TAU / period;
        assert_relative_eq!(f.deriv_bound, analytic, epsilon = 1e-15);
        assert!(r.max_dt <= analytic + r.deriv_slack);
        assert!(r.max_dt > 0.99 * analytic);
        assert_relative_eq!(f.beta_star, -0.75, epsilon = 1e-15);
        assert!(r.min_beta >= -0.75);
    }

    #[test]
    fn tabulated_damping_reproduces_nodes() {
        let (nt, nx) = (8, 6);
        let values: Vec<f64> = (0..nt * nx)
            .map(|i| -0.5 - 0.1 * ((i / nx) as f64 * 0.7).sin() - 0.05 * (i % nx) as f64)
            .collect();
        let f = DampingField::tabulated(nt, nx, values.clone(), 2.0, 1.0).unwrap();
        for j in 0..nt {
            for k in 0..nx {
                let t = 2.0 * j as f64 / nt as f64;
                let x = k as f64 / (nx - 1) as f64;
                assert_relative_eq!(f.beta(t, x), values[j * nx + k], epsilon = 1e-14);
            }
        }
        let r = validate_hypothesis(&f, 32, 21).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
    }

    #[test]
    fn mirrored_polynomial_profile() {
        let temporal = FourierSeries::constant(2.0, 1.0);
        let f =
            DampingField::separable(-1.0, temporal, Polynomial::new(alloc::vec![0.2, 0.5, -0.3, 0.1]), 1.5).unwrap();
        let m = f.mirrored();
        for i in 0..10 {
            let x = 0.15 * i as f64;
            assert_relative_eq!(m.beta(0.3, x), f.beta(0.3, 1.5 - x), epsilon = 1e-13);
        }
    }

    #[test]
    fn boundary_norm_examples() {
        let z = BoundaryForcing::zero(4.0, 0.3, 0.3).unwrap();
        let n = boundary_c1_norm(&z, 64).unwrap();
        assert_eq!(n.sampled, 0.0);
        assert_eq!(n.certified, 0.0);

        let eps = 0.01;
        let f = BoundaryForcing::new(
            Signal::Fourier(FourierSeries::sine(TAU, eps)),
            Signal::zero(TAU),
            0.0,
            0.0,
        )
        .unwrap();
        let n = boundary_c1_norm(&f, 4096).unwrap();
        // derivative ε cos t has sup ε at t = 0
        assert_relative_eq!(n.sampled, eps, epsilon = 1e-15);
        assert!(n.certified >= n.sampled);
        assert!(boundary_c1_norm(&f, 10).is_err());
    }

    #[test]
    fn forcing_rejects_reflection_at_or_above_one() {
        assert!(BoundaryForcing::zero(1.0, 1.0, 0.0).is_err());
        assert!(BoundaryForcing::zero(1.0, 0.0, -1.5).is_err());
        assert!(BoundaryForcing::zero(1.0, 0.99, -0.99).is_ok());
    }
}
