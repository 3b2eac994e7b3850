//! Grid-sampled pair of perturbation fields on one period of the strip.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::interp::{linear_stencil, PeriodicStencil};
use crate::math;
use crate::{Error, Result};

/// `(φ₁, φ₂)` sampled at `t_j = j·T*/Nt` (periodic) and `x_k = k·L/(Nx−1)`.
///
/// Values are stored row-major with `t` outer: index `j·Nx + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    pub nt: usize,
    pub nx: usize,
    pub period: f64,
    pub length: f64,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
}

/// Slack allowed when querying slightly outside `[0, L]`.
pub const X_SLACK: f64 = 1e-12;

impl PeriodicField {
    pub fn zeros(nt: usize, nx: usize, period: f64, length: f64) -> Result<Self> {
        if nt < 2 || nx < 2 {
            return Err(Error::InvalidParameter(format!("field grid too small: {nt}x{nx}")));
        }
        if !(period > 0.0) || !(length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "period and length must be positive (T*={period}, L={length})"
            )));
        }
        Ok(Self {
            nt,
            nx,
            period,
            length,
            phi1: vec![0.0; nt * nx],
            phi2: vec![0.0; nt * nx],
        })
    }

    /// Samples `f(t, x) -> (φ₁, φ₂)` on the grid.
    pub fn from_fn(
        nt: usize,
        nx: usize,
        period: f64,
        length: f64,
        mut f: impl FnMut(f64, f64) -> (f64, f64),
    ) -> Result<Self> {
        let mut out = Self::zeros(nt, nx, period, length)?;
        for j in 0..nt {
            for k in 0..nx {
                let (a, b) = f(out.t(j), out.x(k));
                out.phi1[j * nx + k] = a;
                out.phi2[j * nx + k] = b;
            }
        }
        Ok(out)
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.period / self.nt as f64
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.length / (self.nx - 1) as f64
    }

    #[inline]
    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt()
    }

    #[inline]
    pub fn x(&self, k: usize) -> f64 {
        if k + 1 == self.nx {
            self.length
        } else {
            k as f64 * self.dx()
        }
    }

    #[inline]
    pub fn component(&self, c: usize) -> &[f64] {
        if c == 0 {
            &self.phi1
        } else {
            &self.phi2
        }
    }

    #[inline]
    pub fn get(&self, c: usize, j: usize, k: usize) -> f64 {
        self.component(c)[j * self.nx + k]
    }

    /// Value at node `j` with `j` taken modulo `Nt`.
    #[inline]
    pub fn get_wrapped(&self, c: usize, j: isize, k: usize) -> f64 {
        let n = self.nt as isize;
        self.get(c, j.rem_euclid(n) as usize, k)
    }

    pub fn is_finite(&self) -> bool {
        self.phi1.iter().chain(self.phi2.iter()).all(|v| v.is_finite())
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.nt == other.nt && self.nx == other.nx && self.period == other.period && self.length == other.length
    }

    /// `max_{i,j,k} |φᵢ|`.
    pub fn sup_norm(&self) -> f64 {
        self.phi1
            .iter()
            .chain(self.phi2.iter())
            .fold(0.0, |m, v| m.max(math::abs(*v)))
    }

    pub fn sup_diff(&self, other: &Self) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch(format!(
                "{}x{} vs {}x{}",
                self.nt, self.nx, other.nt, other.nx
            )));
        }
        let d1 = self.phi1.iter().zip(&other.phi1);
        let d2 = self.phi2.iter().zip(&other.phi2);
        Ok(d1.chain(d2).fold(0.0, |m, (a, b)| m.max(math::abs(a - b))))
    }

    /// Periodic in `t` (linear for `order == 1`, cubic otherwise), linear in `x`.
    pub fn interpolate(&self, c: usize, t: f64, x: f64, order: u8) -> Result<f64> {
        if !(x >= -X_SLACK && x <= self.length + X_SLACK) {
            return Err(Error::Domain(format!("x = {x} outside [0, {}]", self.length)));
        }
        if !t.is_finite() {
            return Err(Error::Domain(format!("non-finite time {t}")));
        }
        Ok(self.interp_unchecked(c, t, x, order))
    }

    #[inline]
    pub(crate) fn interp_unchecked(&self, c: usize, t: f64, x: f64, order: u8) -> f64 {
        let st = PeriodicStencil::new(t, self.period, self.nt, order);
        let (k, s) = linear_stencil(x, self.length, self.nx);
        let v = self.component(c);
        let a = st.apply(v, self.nx, k);
        if s == 0.0 {
            a
        } else {
            (1.0 - s) * a + s * st.apply(v, self.nx, k + 1)
        }
    }

    /// Both components at once.
    #[inline]
    pub(crate) fn interp_pair(&self, t: f64, x: f64, order: u8) -> (f64, f64) {
        let st = PeriodicStencil::new(t, self.period, self.nt, order);
        let (k, s) = linear_stencil(x, self.length, self.nx);
        let a1 = st.apply(&self.phi1, self.nx, k);
        let a2 = st.apply(&self.phi2, self.nx, k);
        if s == 0.0 {
            (a1, a2)
        } else {
            let b1 = st.apply(&self.phi1, self.nx, k + 1);
            let b2 = st.apply(&self.phi2, self.nx, k + 1);
            ((1.0 - s) * a1 + s * b1, (1.0 - s) * a2 + s * b2)
        }
    }

    /// Centered difference in `t` at node `(j, k)`.
    #[inline]
    pub fn dt_centered(&self, c: usize, j: usize, k: usize) -> f64 {
        let j = j as isize;
        (self.get_wrapped(c, j + 1, k) - self.get_wrapped(c, j - 1, k)) / (2.0 * self.dt())
    }

    /// Centered difference in `x`, second-order one-sided at the faces.
    #[inline]
    pub fn dx_centered(&self, c: usize, j: usize, k: usize) -> f64 {
        let h = self.dx();
        let g = |kk: usize| self.get(c, j, kk);
        let n = self.nx;
        if n < 3 {
            return (g(1) - g(0)) / h;
        }
        if k == 0 {
            (-3.0 * g(0) + 4.0 * g(1) - g(2)) / (2.0 * h)
        } else if k == n - 1 {
            (3.0 * g(n - 1) - 4.0 * g(n - 2) + g(n - 3)) / (2.0 * h)
        } else {
            (g(k + 1) - g(k - 1)) / (2.0 * h)
        }
    }

    /// `max(‖φ‖∞, ‖∂ₜφ‖∞, ‖∂ₓφ‖∞)` with centered differences.
    pub fn c1_norm(&self) -> f64 {
        let mut m = self.sup_norm();
        for c in 0..2 {
            for j in 0..self.nt {
                for k in 0..self.nx {
                    m = m
                        .max(math::abs(self.dt_centered(c, j, k)))
                        .max(math::abs(self.dx_centered(c, j, k)));
                }
            }
        }
        m
    }

    /// Field with the time index shifted cyclically by `s` nodes.
    pub fn shifted_in_time(&self, s: usize) -> Self {
        let mut out = self.clone();
        for j in 0..self.nt {
            let src = (j + s) % self.nt;
            for k in 0..self.nx {
                out.phi1[j * self.nx + k] = self.phi1[src * self.nx + k];
                out.phi2[j * self.nx + k] = self.phi2[src * self.nx + k];
            }
        }
        out
    }

    /// `(φ₁, φ₂)(t, L − x)` with components swapped and negated: the image of
    /// the field under the reflection `x ↦ L − x`, `u ↦ −u`.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        for j in 0..self.nt {
            for k in 0..self.nx {
                let src = j * self.nx + (self.nx - 1 - k);
                out.phi1[j * self.nx + k] = -self.phi2[src];
                out.phi2[j * self.nx + k] = -self.phi1[src];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn node_queries_are_exact() {
        let f = PeriodicField::from_fn(8, 5, 2.0, 1.0, |t, x| (t * t + x, (3.0 * t).sin() * x)).unwrap();
        for j in 0..8 {
            for k in 0..5 {
                for order in [1, 3] {
                    assert_eq!(f.interpolate(0, f.t(j), f.x(k), order).unwrap(), f.get(0, j, k));
                    assert_eq!(f.interpolate(1, f.t(j), f.x(k), order).unwrap(), f.get(1, j, k));
                }
            }
        }
    }

    #[test]
    fn constants_are_reproduced() {
        let f = PeriodicField::from_fn(8, 5, 2.0, 1.0, |_, _| (0.7, -0.2)).unwrap();
        for i in 0..30 {
            let t = -3.0 + 0.41 * i as f64;
            let x = (i as f64 * 0.033).min(1.0);
            assert_relative_eq!(f.interpolate(0, t, x, 3).unwrap(), 0.7, epsilon = 1e-15);
            assert_relative_eq!(f.interpolate(1, t, x, 1).unwrap(), -0.2, epsilon = 1e-15);
        }
    }

    #[test]
    fn out_of_range_x_is_rejected() {
        let f = PeriodicField::zeros(8, 5, 2.0, 1.0).unwrap();
        assert!(f.interpolate(0, 0.0, 1.0 + 1e-13, 3).is_ok());
        assert!(f.interpolate(0, 0.0, 1.0 + 1e-9, 3).is_err());
        assert!(f.interpolate(0, 0.0, -1e-9, 3).is_err());
    }

    #[test]
    fn cubic_time_interpolation_is_fourth_order() {
        let period = 4.0;
        let w = core::f64::consts::TAU / period;
        let err = |nt: usize| {
            let f = PeriodicField::from_fn(nt, 3, period, 1.0, |t, _| ((w * t).sin(), 0.0)).unwrap();
            (0..997)
                .map(|i| {
                    let t = period * (i as f64 + 0.5) / 997.0;
                    (f.interpolate(0, t, 0.5, 3).unwrap() - (w * t).sin()).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(32), err(64));
        let ratio = e1 / e2;
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}, errors {e1} {e2}");
        // C = e·Nt⁴ stays bounded
        assert!(e1 * 32f64.powi(4) < 50.0);
    }

    #[test]
    fn mirror_is_an_involution() {
        let f = PeriodicField::from_fn(6, 7, 1.0, 2.0, |t, x| (t + x * x, t * x)).unwrap();
        assert_eq!(f.mirrored().mirrored(), f);
    }
}
