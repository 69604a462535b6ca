//! Thin wrappers over `libm` so every transcendental call in the crate goes
//! through one implementation, independent of the `std` feature. This is
//! what makes outputs bit-identical across platforms: `std`'s `f64::exp`
//! etc. may dispatch to the platform libm, while `libm` is pure Rust.

pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub fn exp2(x: f64) -> f64 {
    libm::exp2(x)
}

pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Exact `2^n` for integer exponents in the normal range.
pub fn pow2i(n: i32) -> f64 {
    // f64 handles 2^n exactly for |n| < 1023; lattice scales stay far inside.
    exp2(n as f64)
}

/// Euclidean norm of a short vector (d <= 3 in practice, any length works).
pub fn norm2(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for &v in x {
        s += v * v;
    }
    sqrt(s)
}

/// Squared Euclidean norm.
pub fn norm2_sq(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for &v in x {
        s += v * v;
    }
    s
}

/// Dot product of two equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}
