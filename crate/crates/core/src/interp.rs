//! Interpolation stencils on uniform grids.

use crate::math;
pub(crate) use crate::model::{clamped_cubic_stencil, cubic_weights};

/// Stencil on a periodic grid of `n` nodes with spacing `period / n`.
#[derive(Debug, Clone, Copy)]
pub struct PeriodicStencil {
    pub idx: [usize; 4],
    pub w: [f64; 4],
    pub len: usize,
}

impl PeriodicStencil {
    /// `order` 1 gives linear interpolation, anything else four-point cubic.
    #[inline]
    pub fn new(t: f64, period: f64, n: usize, order: u8) -> Self {
        Self::with_rate(t, n as f64 / period, n, order)
    }

    /// As [`PeriodicStencil::new`] with `rate = n / period` precomputed.
    #[inline(always)]
    pub fn with_rate(t: f64, rate: f64, n: usize, order: u8) -> Self {
        let p = t * rate;
        let fl = math::floor(p);
        let mut s = p - fl;
        let ni = n as i64;
        let mut j = fl as i64;
        if j < -4 * ni || j >= 5 * ni {
            j = j.rem_euclid(ni);
        } else {
            while j < 0 {
                j += ni;
            }
            while j >= ni {
                j -= ni;
            }
        }
        if s >= 1.0 {
            s = 0.0;
            j = if j + 1 == ni { 0 } else { j + 1 };
        }
        let j = j as usize;
        let next = |i: usize| if i + 1 == n { 0 } else { i + 1 };
        if order == 1 {
            Self {
                idx: [j, next(j), 0, 0],
                w: [1.0 - s, s, 0.0, 0.0],
                len: 2,
            }
        } else {
            let jp = next(j);
            Self {
                idx: [if j == 0 { n - 1 } else { j - 1 }, j, jp, next(jp)],
                w: cubic_weights(s),
                len: 4,
            }
        }
    }

    /// Applies the stencil along a strided axis: `values[idx * stride + offset]`.
    #[inline(always)]
    pub fn apply(&self, values: &[f64], stride: usize, offset: usize) -> f64 {
        let mut acc = 0.0;
        for a in 0..self.len {
            acc += self.w[a] * values[self.idx[a] * stride + offset];
        }
        acc
    }
}

/// Linear stencil on `[0, L]` with `n` nodes; `p` is clamped to the grid.
#[inline]
pub fn linear_stencil(x: f64, length: f64, n: usize) -> (usize, f64) {
    let p = (x / length * (n - 1) as f64).clamp(0.0, (n - 1) as f64);
    let k = (math::floor(p) as usize).min(n - 2);
    (k, p - k as f64)
}

/// Four-point Lagrange interpolation of `values` at fractional node
/// position `p`, with the stencil shifted inward near the ends.
#[inline]
pub fn clamped_cubic(values: &[f64], p: f64) -> f64 {
    let (start, w) = clamped_cubic_stencil(p, values.len());
    w[0] * values[start] + w[1] * values[start + 1] + w[2] * values[start + 2] + w[3] * values[start + 3]
}
