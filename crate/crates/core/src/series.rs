//! Periodic signals and polynomial profiles used for damping and forcing data.

use alloc::vec::Vec;

use crate::math::{self, TAU};

/// Truncated Fourier series `mean + Σₖ aₖ cos(2πkt/T) + bₖ sin(2πkt/T)`, `k ≥ 1`.
///
/// The argument is reduced modulo the period before evaluation, so
/// periodicity holds by construction up to the rounding of that reduction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FourierSeries {
    pub period: f64,
    pub mean: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl FourierSeries {
    pub fn new(period: f64, mean: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self { period, mean, cos, sin }
    }

    pub fn zero(period: f64) -> Self {
        Self::new(period, 0.0, Vec::new(), Vec::new())
    }

    pub fn constant(period: f64, value: f64) -> Self {
        Self::new(period, value, Vec::new(), Vec::new())
    }

    /// `amplitude · sin(2πt/T)`.
    pub fn sine(period: f64, amplitude: f64) -> Self {
        Self::new(period, 0.0, Vec::new(), alloc::vec![amplitude])
    }

    fn modes(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    fn coeff(&self, k: usize) -> (f64, f64) {
        (
            self.cos.get(k).copied().unwrap_or(0.0),
            self.sin.get(k).copied().unwrap_or(0.0),
        )
    }

    /// Returns `(f, f', f'')` at `t`.
    pub fn eval_all(&self, t: f64) -> (f64, f64, f64) {
        let s = math::wrap(t, self.period);
        let w = TAU / self.period;
        let (mut f, mut d1, mut d2) = (self.mean, 0.0, 0.0);
        for k in 0..self.modes() {
            let (a, b) = self.coeff(k);
            let wk = w * (k + 1) as f64;
            let (sn, cs) = (math::sin(wk * s), math::cos(wk * s));
            f += a * cs + b * sn;
            d1 += wk * (b * cs - a * sn);
            d2 -= wk * wk * (a * cs + b * sn);
        }
        (f, d1, d2)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval_all(t).0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.eval_all(t).1
    }

    /// `|mean| + Σ (|aₖ| + |bₖ|)` bounds `sup |f|`.
    pub fn sup_bound(&self) -> f64 {
        let mut s = math::abs(self.mean);
        for k in 0..self.modes() {
            let (a, b) = self.coeff(k);
            s += math::abs(a) + math::abs(b);
        }
        s
    }

    /// `Σ (|aₖ| + |bₖ|)·2πk/T` bounds `sup |f'|`.
    pub fn derivative_bound(&self) -> f64 {
        let w = TAU / self.period;
        let mut s = 0.0;
        for k in 0..self.modes() {
            let (a, b) = self.coeff(k);
            s += (math::abs(a) + math::abs(b)) * w * (k + 1) as f64;
        }
        s
    }

    /// Certified C¹ bound `|mean| + Σ (|aₖ| + |bₖ|)(1 + 2πk/T)`.
    pub fn c1_bound(&self) -> f64 {
        self.sup_bound() + self.derivative_bound()
    }
}

/// A `T`-periodic scalar signal.
#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    Fourier(FourierSeries),
    /// `amplitude · |sin(2πt/T)|^exponent`. For `1 < exponent < 2` this is C¹
    /// with an unbounded second derivative at the zeros of the sine.
    PowerSine {
        period: f64,
        amplitude: f64,
        exponent: f64,
    },
}

impl Signal {
    pub fn zero(period: f64) -> Self {
        Signal::Fourier(FourierSeries::zero(period))
    }

    pub fn period(&self) -> f64 {
        match self {
            Signal::Fourier(s) => s.period,
            Signal::PowerSine { period, .. } => *period,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Signal::Fourier(s) => s.value(t),
            Signal::PowerSine {
                period,
                amplitude,
                exponent,
            } => {
                let s = math::sin(TAU * math::wrap(t, *period) / period);
                amplitude * math::powf(math::abs(s), *exponent)
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Signal::Fourier(s) => s.derivative(t),
            Signal::PowerSine {
                period,
                amplitude,
                exponent,
            } => {
                let w = TAU / period;
                let arg = w * math::wrap(t, *period);
                let s = math::sin(arg);
                if s == 0.0 {
                    return 0.0;
                }
                let sign = if s > 0.0 { 1.0 } else { -1.0 };
                amplitude * exponent * math::powf(math::abs(s), exponent - 1.0) * sign * math::cos(arg) * w
            }
        }
    }

    /// Upper bound on `max(sup|f|, sup|f'|)`.
    pub fn certified_c1_bound(&self) -> f64 {
        match self {
            Signal::Fourier(s) => s.c1_bound(),
            Signal::PowerSine {
                period,
                amplitude,
                exponent,
            } => math::abs(*amplitude) * (1.0 + exponent * TAU / period),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Signal::Fourier(s) => s.sup_bound() == 0.0,
            Signal::PowerSine { amplitude, .. } => *amplitude == 0.0,
        }
    }
}

/// Polynomial `Σ cₖ xᵏ`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(alloc::vec![c])
    }

    /// `x²(L−x)²`, unnormalized.
    pub fn quartic_bump(length: f64) -> Self {
        let l = length;
        // x²(L² − 2Lx + x²)
        Self::new(alloc::vec![0.0, 0.0, l * l, -2.0 * l, 1.0])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    pub fn value(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * x + k as f64 * c)
    }

    /// `Σ |cₖ| Lᵏ` bounds `sup |p|` on `[0, L]`.
    pub fn sup_bound(&self, length: f64) -> f64 {
        let mut s = 0.0;
        let mut p = 1.0;
        for c in &self.coeffs {
            s += math::abs(*c) * p;
            p *= length;
        }
        s
    }

    /// `Σ k|cₖ| Lᵏ⁻¹` bounds `sup |p'|` on `[0, L]`.
    pub fn derivative_bound(&self, length: f64) -> f64 {
        let mut s = 0.0;
        let mut p = 1.0;
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            s += k as f64 * math::abs(*c) * p;
            p *= length;
        }
        s
    }

    /// Sampled maximum of `|p|` over `[0, L]`.
    pub fn sampled_sup(&self, length: f64, samples: usize) -> f64 {
        let n = samples.max(2);
        (0..n)
            .map(|i| math::abs(self.value(length * i as f64 / (n - 1) as f64)))
            .fold(0.0, f64::max)
    }
}
