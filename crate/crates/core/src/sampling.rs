//! Deterministic low-discrepancy point sets for the samplers.

use num_complex::Complex64;

// Additive recurrence driven by the plastic constant (the R2 sequence).
const A1: f64 = 0.754_877_666_246_692_9;
const A2: f64 = 0.569_840_290_998_053_2;

/// The `n`-th point of a well-spread deterministic sequence on `[0,1)^2`.
pub fn unit_square(n: u64) -> (f64, f64) {
    let t = n as f64;
    ((0.5 + A1 * t).fract(), (0.5 + A2 * t).fract())
}

/// The `n`-th sample of an axis-aligned rectangle.
pub fn in_rect(n: u64, x0: f64, y0: f64, x1: f64, y1: f64) -> Complex64 {
    let (u, v) = unit_square(n);
    Complex64::new(x0 + u * (x1 - x0), y0 + v * (y1 - y0))
}

/// The `n`-th sample of a disk, via the area-preserving polar map.
pub fn in_disk(n: u64, center: Complex64, radius: f64) -> Complex64 {
    let (u, v) = unit_square(n);
    let r = radius * u.sqrt();
    let theta = std::f64::consts::TAU * v;
    center + Complex64::from_polar(r, theta)
}
