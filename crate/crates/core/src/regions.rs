//! Membership and sampling for the geometric sets of the construction: the
//! nested diamonds, the two horizontal strips, and the escape seed sets.
//!
//! Boundary conventions follow the defining inequalities exactly: diamonds are
//! open (closures available explicitly), the first seed set is closed, the
//! second is half-open in `y < x`.

use num_complex::Complex64;
use thiserror::Error;

use crate::maps::{dyadic_exponent, pow2};
use crate::sampling;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("epsilon must lie in (0, 1/4), got {0}")]
    BadEpsilon(f64),
}

/// The open diamond at scale `k`: the scale-0 diamond has vertices at
/// `(0, 1)`, `(0, 1/2)`, `(1/4, 3/4)`, `(-1/4, 3/4)`, and scale `k` shrinks it
/// by `2^-k`. Membership reduces to `2^k |x| + |2^k y - 3/4| < 1/4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Diamond {
    k: u32,
}

impl Diamond {
    pub fn new(k: u32) -> Self {
        Diamond { k }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Strict (open) membership.
    pub fn contains(&self, z: Complex64) -> bool {
        let s = pow2(self.k as i32);
        s * z.re.abs() + (s * z.im - 0.75).abs() < 0.25
    }

    /// Closure membership.
    pub fn contains_closure(&self, z: Complex64) -> bool {
        let s = pow2(self.k as i32);
        s * z.re.abs() + (s * z.im - 0.75).abs() <= 0.25
    }

    /// The four vertices in a fixed order: top, bottom, right, left.
    pub fn vertices(&self) -> [Complex64; 4] {
        let s = pow2(-(self.k as i32));
        [
            Complex64::new(0.0, s),
            Complex64::new(0.0, 0.5 * s),
            Complex64::new(0.25 * s, 0.75 * s),
            Complex64::new(-0.25 * s, 0.75 * s),
        ]
    }

    /// Euclidean distance from `z` to the diamond boundary.
    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        let v = self.vertices();
        let ring = [v[0], v[2], v[1], v[3], v[0]];
        let mut best = f64::INFINITY;
        for pair in ring.windows(2) {
            best = best.min(segment_distance(z, pair[0], pair[1]));
        }
        best
    }

    /// `n >= 4` boundary points including all four vertices, walking the ring
    /// top -> right -> bottom -> left. The four edges have equal length, so
    /// distributing the remainder round-robin keeps the spacing near-uniform.
    /// Deterministic for fixed `(k, n)`.
    pub fn boundary_samples(&self, n: usize) -> Vec<Complex64> {
        assert!(n >= 4, "need at least the four vertices, got n = {n}");
        let v = self.vertices();
        let ring = [v[0], v[2], v[1], v[3]];
        let base = n / 4;
        let extra = n % 4;
        let mut out = Vec::with_capacity(n);
        for edge in 0..4 {
            let a = ring[edge];
            let b = ring[(edge + 1) % 4];
            out.push(a);
            let interior = base - 1 + usize::from(edge < extra);
            for j in 1..=interior {
                let t = j as f64 / (interior + 1) as f64;
                out.push(a + (b - a).scale(t));
            }
        }
        out
    }

    /// `n` strictly interior points from a deterministic low-discrepancy set.
    pub fn interior_samples(&self, n: usize) -> Vec<Complex64> {
        let s = pow2(-(self.k as i32));
        let mut out = Vec::with_capacity(n);
        let mut idx = 0u64;
        while out.len() < n {
            let (u, v) = sampling::unit_square(idx);
            idx += 1;
            let z = Complex64::new((u - 0.5) * 0.5 * s, (0.5 + 0.5 * v) * s);
            if self.contains(z) {
                out.push(z);
            }
        }
        out
    }
}

/// Distance from a point to the segment `[a, b]`.
pub(crate) fn segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sqr();
    if len_sq == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a).re * ab.re + (p - a).im * ab.im) / len_sq).clamp(0.0, 1.0);
    (p - (a + ab.scale(t))).norm()
}

/// The open strip `1/2 < Im z < 1` on which the stretch acts.
pub fn in_strip_s(z: Complex64) -> bool {
    0.5 < z.im && z.im < 1.0
}

/// The open strip `-1 < Im z < 0` carrying the transcendental interpolation.
pub fn in_strip_d(z: Complex64) -> bool {
    -1.0 < z.im && z.im < 0.0
}

/// The scale index whose *closed* diamond contains `z`, if any. A point at a
/// dyadic height can only sit in the diamonds on either side of that height,
/// so two candidate scales suffice.
pub fn enclosing_closed_diamond(z: Complex64) -> Option<u32> {
    if !(z.im > 0.0) || z.im > 1.0 {
        return None;
    }
    let e = dyadic_exponent(z.im);
    for k in [-e, -e - 1] {
        if k >= 0 {
            let d = Diamond::new(k as u32);
            if d.contains_closure(z) {
                return Some(k as u32);
            }
        }
    }
    None
}

/// The two seed rectangles along the positive real axis, parameterized by the
/// band height `epsilon in (0, 1/4)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeSeeds {
    epsilon: f64,
}

impl EscapeSeeds {
    pub fn new(epsilon: f64) -> Result<Self, RegionError> {
        if !(epsilon.is_finite() && 0.0 < epsilon && epsilon < 0.25) {
            return Err(RegionError::BadEpsilon(epsilon));
        }
        Ok(EscapeSeeds { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Closed rectangle `1/4 <= x <= 1`, `0 <= y <= epsilon`.
    pub fn in_i1(&self, z: Complex64) -> bool {
        (0.25..=1.0).contains(&z.re) && (0.0..=self.epsilon).contains(&z.im)
    }

    /// Half-open wedge `y < x <= 1/4`, `0 <= y <= epsilon`.
    pub fn in_i2(&self, z: Complex64) -> bool {
        z.im < z.re && z.re <= 0.25 && (0.0..=self.epsilon).contains(&z.im)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.in_i1(z) || self.in_i2(z)
    }
}

impl Default for EscapeSeeds {
    /// Band height 1/32, validated downstream by the seed-escape check.
    fn default() -> Self {
        EscapeSeeds { epsilon: 1.0 / 32.0 }
    }
}
