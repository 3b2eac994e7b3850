// Thin wrappers so numerical code reads the same with and without std.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    // Truncation is exact below 2^52; fall back to libm elsewhere.
    if x.abs() < 4.5e15 {
        let i = x as i64 as f64;
        if i > x {
            i - 1.0
        } else {
            i
        }
    } else {
        libm::floor(x)
    }
}

#[inline]
pub fn round(x: f64) -> f64 {
    floor(x + 0.5)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    x.abs()
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

/// `x mod p` in `[0, p)`.
#[inline]
pub fn wrap(x: f64, p: f64) -> f64 {
    let r = x - p * floor(x / p);
    if r >= p {
        0.0
    } else if r < 0.0 {
        r + p
    } else {
        r
    }
}

pub const TAU: f64 = core::f64::consts::TAU;

/// `ceil(a / h)` as a count, treating values within `1e-9` of an integer as that integer.
#[inline]
pub fn ceil_div(a: f64, h: f64) -> usize {
    let q = a / h;
    let f = floor(q);
    if q - f < 1e-9 {
        f as usize
    } else {
        f as usize + 1
    }
}
