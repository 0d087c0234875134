//! The five piecewise planar maps, evaluated branch-faithfully on binary64.
//!
//! All maps are pure functions on [`Complex64`]. Branches that can overflow
//! (`z^d`, `exp(-z^2)`) saturate at [`SATURATION_MAGNITUDE`] so that iteration
//! never observes a non-finite coordinate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Magnitude cap applied wherever a branch could overflow binary64.
pub const SATURATION_MAGNITUDE: f64 = 1e100;

/// ln([`SATURATION_MAGNITUDE`]).
const SATURATION_LN: f64 = 230.258_509_299_404_57;

/// Errors from map construction and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    /// The horizontal stretch is only defined on the closed strip `1/2 <= Im z <= 1`.
    #[error("point ({0}, {1}) lies outside the closed strip 1/2 <= Im z <= 1")]
    OutsideStrip(f64, f64),
    #[error("degree must be an odd integer >= 3, got {0}")]
    BadDegree(u32),
    #[error("delta must be positive and finite, got {0}")]
    BadDelta(f64),
    #[error("faithful parameters need d > 2K, got d = {d} with K estimate {k_hat}")]
    DegreeBelowDilatation { d: u32, k_hat: f64 },
    #[error("dilatation estimate {0} is not a usable finite value")]
    BadDilatation(f64),
}

/// Which of the five maps to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MapKind {
    /// Horizontal stretch `h` on the closed strip `1/2 <= Im z <= 1`.
    #[serde(rename = "h")]
    StretchH,
    /// Dyadic rescaling `f` of the stretch, defined on the whole plane.
    #[serde(rename = "f")]
    DyadicF,
    /// Radial degree-`d` perturbation `g`, the identity on the closed unit disk.
    #[serde(rename = "g")]
    DegreeG,
    /// The composite `p = g o f`.
    #[serde(rename = "p")]
    PolyP,
    /// The interpolated map with an essential singularity at infinity.
    #[serde(rename = "ftilde")]
    TranscendentalFt,
}

impl MapKind {
    pub fn flag_name(&self) -> &'static str {
        match self {
            MapKind::StretchH => "h",
            MapKind::DyadicF => "f",
            MapKind::DegreeG => "g",
            MapKind::PolyP => "p",
            MapKind::TranscendentalFt => "ftilde",
        }
    }
}

/// Parameter regime for the degree perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamMode {
    /// Tractable desk-scale parameters (`d = 5`, small delta).
    Demo,
    /// `d` exceeds twice the sampled dilatation estimate.
    Faithful,
}

/// A map choice plus its parameters. `d` and `delta` only matter for the
/// `g`-based maps and the transcendental interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub kind: MapKind,
    pub d: u32,
    pub delta: f64,
    pub mode: ParamMode,
}

impl MapSpec {
    /// Desk-scale defaults: `d = 5`, `delta = 0.01` (`0.05` for the
    /// transcendental map, where the super-exponential term must dominate
    /// `2|z|` already at moderate radii).
    pub fn demo(kind: MapKind) -> Self {
        let delta = match kind {
            MapKind::TranscendentalFt => 0.05,
            _ => 0.01,
        };
        MapSpec {
            kind,
            d: 5,
            delta,
            mode: ParamMode::Demo,
        }
    }

    /// Explicit parameters, validated.
    pub fn with_params(
        kind: MapKind,
        d: u32,
        delta: f64,
        mode: ParamMode,
    ) -> Result<Self, MapError> {
        if d < 3 || d % 2 == 0 {
            return Err(MapError::BadDegree(d));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(MapError::BadDelta(delta));
        }
        Ok(MapSpec {
            kind,
            d,
            delta,
            mode,
        })
    }

    /// Faithful parameters derived from a dilatation estimate: the smallest
    /// odd `d` exceeding `2K`, and `delta = 0.01 * 2^(1-d)` to keep the
    /// perturbation moderate on `|z| <= 2`.
    pub fn faithful(kind: MapKind, k_hat: f64) -> Result<Self, MapError> {
        if !(k_hat.is_finite() && (1.0..=1e6).contains(&k_hat)) {
            return Err(MapError::BadDilatation(k_hat));
        }
        let mut d = (2.0 * k_hat).floor() as u32 + 1;
        if d % 2 == 0 {
            d += 1;
        }
        let d = d.max(3);
        let delta = 0.01 * pow2(1 - d as i32);
        MapSpec::with_params(kind, d, delta, ParamMode::Faithful)
    }

    /// Check the faithful-mode degree condition against a dilatation estimate.
    pub fn ensure_faithful(&self, k_hat: f64) -> Result<(), MapError> {
        if !(k_hat.is_finite() && k_hat >= 1.0) {
            return Err(MapError::BadDilatation(k_hat));
        }
        if (self.d as f64) <= 2.0 * k_hat {
            return Err(MapError::DegreeBelowDilatation {
                d: self.d,
                k_hat,
            });
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), MapError> {
        MapSpec::with_params(self.kind, self.d, self.delta, self.mode).map(|_| ())
    }
}

/// Exact power of two. Multiplying by these is lossless in binary64.
#[inline]
pub(crate) fn pow2(e: i32) -> f64 {
    f64::powi(2.0, e)
}

/// `x * 2^e` without materializing `2^e` itself, which overflows an f64 for
/// `|e| > 1023` even when the product is representable. Each factor stays in
/// range, so the multiplications remain exact power-of-two scalings.
#[inline]
fn scale_by_pow2(x: f64, e: i32) -> f64 {
    if (-1000..=1000).contains(&e) {
        return x * pow2(e);
    }
    let half = e / 2;
    (x * pow2(half)) * pow2(e - half)
}

/// The unique integer `e` with `2^(e-1) < y <= 2^e`, honored bit-exactly.
/// `log2` alone rounds inconsistently at powers of two, hence the correction
/// loops.
pub(crate) fn dyadic_exponent(y: f64) -> i32 {
    debug_assert!(y > 0.0, "dyadic exponent needs a positive input");
    let mut e = y.log2().ceil() as i32;
    while pow2(e - 1) >= y {
        e -= 1;
    }
    while pow2(e) < y {
        e += 1;
    }
    e
}

/// Horizontal stretch factor: 1 on the closed central diamond section,
/// 4 for `|x| >= y`, linear in `|x|` across the band between.
pub fn stretch_profile(y: f64, x: f64) -> Result<f64, MapError> {
    if !(0.5..=1.0).contains(&y) {
        return Err(MapError::OutsideStrip(x, y));
    }
    Ok(profile_unchecked(y, x))
}

fn profile_unchecked(y: f64, x: f64) -> f64 {
    let ax = x.abs();
    if ax >= y {
        return 4.0;
    }
    // half-width of the diamond section at height y
    let inner = (y - 0.5).min(1.0 - y);
    if ax <= inner {
        return 1.0;
    }
    if y <= 0.75 {
        6.0 * ax - 6.0 * y + 4.0
    } else {
        (3.0 * ax + 5.0 * y - 4.0) / (2.0 * y - 1.0)
    }
}

/// The strip homeomorphism `h(x + iy) = h_y(x) x + iy` on `1/2 <= Im z <= 1`.
pub fn stretch_map(z: Complex64) -> Result<Complex64, MapError> {
    if !(0.5..=1.0).contains(&z.im) {
        return Err(MapError::OutsideStrip(z.re, z.im));
    }
    Ok(stretch_apply(z))
}

#[inline]
pub(crate) fn stretch_apply(z: Complex64) -> Complex64 {
    Complex64::new(profile_unchecked(z.im, z.re) * z.re, z.im)
}

/// The dyadic rescaling of the stretch: `2^-(m+1) h(2^m z)` on the strip
/// `Im z in (2^-(m+1), 2^-m]`, and `2x + iy/2` for `Im z <= 0`.
///
/// The imaginary part halves exactly, and the map is `z/2` on the diamonds,
/// because all rescalings multiply by exact powers of two.
pub fn dyadic_map(z: Complex64) -> Complex64 {
    if z.im <= 0.0 || z.re.abs() >= z.im {
        // On `|x| >= y` the stretch factor is the constant 4, so the strip
        // detour collapses to the same linear branch as the lower half-plane.
        return Complex64::new(2.0 * z.re, 0.5 * z.im);
    }
    let e = dyadic_exponent(z.im);
    let w = stretch_apply(Complex64::new(
        scale_by_pow2(z.re, -e),
        scale_by_pow2(z.im, -e),
    ));
    Complex64::new(scale_by_pow2(w.re, e - 1), scale_by_pow2(w.im, e - 1))
}

/// Radial degree-`d` perturbation: identity on the closed unit disk,
/// `z + delta (|z|-1) z^d` on `1 < |z| <= 2`, `z + delta z^d` outside.
pub fn degree_map(z: Complex64, spec: &MapSpec) -> Complex64 {
    let r = z.norm();
    if r.is_nan() {
        return saturation_fallback();
    }
    if r <= 1.0 {
        return z;
    }
    let zd = pow_saturated(z, r, spec.d);
    let out = if r <= 2.0 {
        z + zd.scale(spec.delta * (r - 1.0))
    } else {
        z + zd.scale(spec.delta)
    };
    cap_norm(out)
}

/// The composite `p = g o f`.
pub fn poly_map(z: Complex64, spec: &MapSpec) -> Complex64 {
    degree_map(dyadic_map(z), spec)
}

/// The interpolated map: `f` on the closed upper half-plane,
/// `2z - delta (Im z) exp(-z^2)` on `-1 <= Im z < 0`, and
/// `2z + delta exp(-z^2)` below.
pub fn transcendental_map(z: Complex64, spec: &MapSpec) -> Complex64 {
    if z.im >= 0.0 {
        return dyadic_map(z);
    }
    let neg_z_sq = Complex64::new(z.im * z.im - z.re * z.re, -2.0 * z.re * z.im);
    let ez = exp_saturated(neg_z_sq);
    let doubled = Complex64::new(2.0 * z.re, 2.0 * z.im);
    let out = if z.im >= -1.0 {
        doubled - ez.scale(spec.delta * z.im)
    } else {
        doubled + ez.scale(spec.delta)
    };
    cap_norm(out)
}

/// Dispatch over [`MapSpec::kind`]. Only the stretch has a restricted domain.
pub fn evaluate(spec: &MapSpec, z: Complex64) -> Result<Complex64, MapError> {
    Ok(match spec.kind {
        MapKind::StretchH => stretch_map(z)?,
        MapKind::DyadicF => dyadic_map(z),
        MapKind::DegreeG => degree_map(z, spec),
        MapKind::PolyP => poly_map(z, spec),
        MapKind::TranscendentalFt => transcendental_map(z, spec),
    })
}

/// `z^d` by binary exponentiation, switching to a polar form with the
/// magnitude clamped once `|z|^d` would overflow the saturation cap.
fn pow_saturated(z: Complex64, r: f64, d: u32) -> Complex64 {
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if (d as f64) * r.ln() > SATURATION_LN {
        return Complex64::from_polar(SATURATION_MAGNITUDE, (d as f64) * z.arg());
    }
    z.powu(d)
}

/// `exp(w)` with the modulus clamped at the saturation cap.
fn exp_saturated(w: Complex64) -> Complex64 {
    if w.re > SATURATION_LN {
        Complex64::from_polar(SATURATION_MAGNITUDE, w.im)
    } else {
        w.exp()
    }
}

/// Scale a finite value back inside the saturation disk.
fn cap_norm(z: Complex64) -> Complex64 {
    let n = z.norm();
    if n <= SATURATION_MAGNITUDE {
        return z;
    }
    if n.is_finite() {
        return z.scale(SATURATION_MAGNITUDE / n);
    }
    saturation_fallback()
}

fn saturation_fallback() -> Complex64 {
    Complex64::new(SATURATION_MAGNITUDE, 0.0)
}
