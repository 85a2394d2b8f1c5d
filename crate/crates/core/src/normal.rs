//! Standard normal density and distribution function.

use libm::erfc;

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `Φ(b) − Φ(a)` without cancellation in either tail.
pub fn interval_mass(a: f64, b: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    if a > 0.0 {
        cdf(-a) - cdf(-b)
    } else {
        cdf(b) - cdf(a)
    }
}

/// Antiderivative of Φ: `∫_{-∞}^{u} Φ(s) ds = uΦ(u) + φ(u)`.
pub fn cdf_integral(u: f64) -> f64 {
    if u == f64::NEG_INFINITY {
        return 0.0;
    }
    u * cdf(u) + pdf(u)
}

/// Product of standard normal densities.
pub fn pdf_iid(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    INV_SQRT_2PI.powi(x.len() as i32) * (-0.5 * r2).exp()
}
