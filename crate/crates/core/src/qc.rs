//! Numerical differential analysis: finite-difference derivative matrices,
//! operator norms, Jacobians, sampled dilatation estimates, and topological
//! degree via the argument principle.

use num_complex::Complex64;
use thiserror::Error;

use crate::maps::{evaluate, pow2, MapError, MapKind, MapSpec};
use crate::regions::{segment_distance, Diamond};
use crate::sampling;

#[derive(Debug, Error)]
pub enum QcError {
    #[error("finite-difference step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("every sample fell inside the seam-exclusion zone")]
    AllSamplesNearSeam,
    #[error("image curve passes within {closest} of the target; enlarge the radius")]
    TargetOnCurve { closest: f64 },
    #[error("winding sum {sum} did not resolve to an integer multiple of 2 pi")]
    WindingUnresolved { sum: f64 },
    #[error(transparent)]
    Map(#[from] MapError),
}

/// A finite-difference derivative matrix at one point, with the invariants of
/// the 2x2 case baked in: `op_norm` is the exact largest singular value and
/// `local_k = op_norm^2 / jac_det` whenever the Jacobian is positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeSample {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub op_norm: f64,
    pub jac_det: f64,
    pub local_k: f64,
    /// True when the probe stencil straddles a branch seam; the entries are
    /// then unreliable and samplers skip the point.
    pub near_seam: bool,
}

/// Sup estimates over a sampled region. `k_hat = max(16, sup_op_norm^2)`
/// mirrors how the stretch's dilatation combines its two regimes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DilatationReport {
    pub sup_op_norm: f64,
    pub sup_local_k: f64,
    pub k_hat: f64,
    pub n_samples: usize,
    pub step: f64,
}

/// Largest singular value of a 2x2 matrix in closed form.
fn largest_singular_value(a11: f64, a12: f64, a21: f64, a22: f64) -> f64 {
    let e = 0.5 * (a11 + a22);
    let f = 0.5 * (a11 - a22);
    let g = 0.5 * (a21 + a12);
    let h = 0.5 * (a21 - a12);
    f64::hypot(e, h) + f64::hypot(f, g)
}

fn fd_matrix(spec: &MapSpec, z: Complex64, h: f64) -> Result<[f64; 4], QcError> {
    let xp = evaluate(spec, z + Complex64::new(h, 0.0))?;
    let xm = evaluate(spec, z - Complex64::new(h, 0.0))?;
    let yp = evaluate(spec, z + Complex64::new(0.0, h))?;
    let ym = evaluate(spec, z - Complex64::new(0.0, h))?;
    let inv = 0.5 / h;
    Ok([
        (xp.re - xm.re) * inv,
        (yp.re - ym.re) * inv,
        (xp.im - xm.im) * inv,
        (yp.im - ym.im) * inv,
    ])
}

/// Central-difference derivative matrix at `z`.
///
/// Runs a coarse pass at `10 * step` when the point is clear of seams at that
/// scale; if the two disagree by more than 1e-3 relative, the Richardson
/// combination of the pair replaces the single-step estimate.
pub fn derivative_sample(
    spec: &MapSpec,
    z: Complex64,
    step: f64,
) -> Result<DerivativeSample, QcError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(QcError::BadStep(step));
    }
    let seam_dist = seam_distance(spec, z);
    let near_seam = seam_dist <= 2.0 * step;
    let fine = fd_matrix(spec, z, step)?;
    let mut entries = fine;
    let coarse_step = 10.0 * step;
    if seam_dist > 2.0 * coarse_step {
        let coarse = fd_matrix(spec, z, coarse_step)?;
        let scale = fine.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let rel = fine
            .iter()
            .zip(coarse.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / scale;
        if rel > 1e-3 {
            for i in 0..4 {
                entries[i] = (100.0 * fine[i] - coarse[i]) / 99.0;
            }
        }
    }
    let [a11, a12, a21, a22] = entries;
    let op_norm = largest_singular_value(a11, a12, a21, a22);
    let jac_det = a11 * a22 - a12 * a21;
    let local_k = if jac_det > 0.0 {
        op_norm * op_norm / jac_det
    } else {
        f64::INFINITY
    };
    Ok(DerivativeSample {
        a11,
        a12,
        a21,
        a22,
        op_norm,
        jac_det,
        local_k,
        near_seam,
    })
}

/// Closed-form Jacobian of the stretch, `J = h_y(x) + h_y'(x) x`, with a flag
/// raised when the evaluation sits exactly on a derivative-jump line (the
/// returned value is then the branch on the diamond/outer side).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StretchJacobian {
    pub value: f64,
    pub on_kink: bool,
}

pub fn jacobian_h_analytic(y: f64, x: f64) -> Result<StretchJacobian, MapError> {
    if !(0.5..=1.0).contains(&y) {
        return Err(MapError::OutsideStrip(x, y));
    }
    let ax = x.abs();
    let inner = (y - 0.5).min(1.0 - y);
    if ax <= inner {
        return Ok(StretchJacobian {
            value: 1.0,
            on_kink: ax == inner,
        });
    }
    if ax >= y {
        return Ok(StretchJacobian {
            value: 4.0,
            on_kink: ax == y,
        });
    }
    let value = if y <= 0.75 {
        12.0 * ax - 6.0 * y + 4.0
    } else {
        (6.0 * ax + 5.0 * y - 4.0) / (2.0 * y - 1.0)
    };
    Ok(StretchJacobian {
        value,
        on_kink: false,
    })
}

/// Distance from `z` to the nearest branch seam of the map. Conservative:
/// used only to exclude sample points, never to assert smoothness.
pub fn seam_distance(spec: &MapSpec, z: Complex64) -> f64 {
    match spec.kind {
        MapKind::StretchH => stretch_seam_distance(z),
        MapKind::DyadicF => dyadic_seam_distance(z),
        MapKind::DegreeG => {
            let r = z.norm();
            (r - 1.0).abs().min((r - 2.0).abs())
        }
        MapKind::PolyP => {
            let base = dyadic_seam_distance(z);
            // pull back the circle seams of g through f; |Df| <= ~8 bounds
            // how fast |f| can cross them
            let fz = crate::maps::dyadic_map(z);
            let r = fz.norm();
            let pulled = (r - 1.0).abs().min((r - 2.0).abs()) / 8.0;
            base.min(pulled)
        }
        MapKind::TranscendentalFt => {
            if z.im > 0.0 {
                dyadic_seam_distance(z)
            } else {
                z.im.abs().min((z.im + 1.0).abs())
            }
        }
    }
}

/// Seams of the stretch inside its strip: the diamond edges, the `|x| = y`
/// kink segments, the formula switch at `y = 3/4` across the band, and the
/// strip edges themselves (the map is undefined beyond them).
fn stretch_seam_distance(z: Complex64) -> f64 {
    let mut d = Diamond::new(0).boundary_distance(z);
    for sign in [1.0, -1.0] {
        d = d.min(segment_distance(
            z,
            Complex64::new(sign * 0.5, 0.5),
            Complex64::new(sign * 1.0, 1.0),
        ));
        d = d.min(segment_distance(
            z,
            Complex64::new(sign * 0.25, 0.75),
            Complex64::new(sign * 0.75, 0.75),
        ));
    }
    d.min((z.im - 0.5).abs()).min((1.0 - z.im).abs())
}

/// Seams of the dyadic map: the real axis, the dyadic lines, and the stretch
/// seams rescaled into the strip containing `z`.
fn dyadic_seam_distance(z: Complex64) -> f64 {
    if z.im <= 0.0 {
        return z.im.abs();
    }
    let e = crate::maps::dyadic_exponent(z.im);
    let below = z.im - pow2(e - 1);
    let above = pow2(e) - z.im;
    let scaled = Complex64::new(z.re * pow2(-e), z.im * pow2(-e));
    let inherited = stretch_seam_distance(scaled) * pow2(e);
    below.min(above).min(inherited)
}

/// Where to draw derivative samples from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleRegion {
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    /// `{|x| <= y}` inside the stretch strip, where the nonconstant part of
    /// the profile lives.
    StretchCone,
    Disk { center: Complex64, radius: f64 },
}

impl SampleRegion {
    fn sample(&self, n: u64) -> Complex64 {
        match *self {
            SampleRegion::Rect { x0, y0, x1, y1 } => sampling::in_rect(n, x0, y0, x1, y1),
            SampleRegion::StretchCone => sampling::in_rect(n, -1.0, 0.5, 1.0, 1.0),
            SampleRegion::Disk { center, radius } => sampling::in_disk(n, center, radius),
        }
    }

    fn admits(&self, z: Complex64) -> bool {
        match *self {
            SampleRegion::StretchCone => z.re.abs() <= z.im,
            _ => true,
        }
    }
}

/// Sup of operator norm and local dilatation over `n` low-discrepancy samples
/// of `region`, skipping points within `2 * step` of a seam.
pub fn estimate_dilatation(
    spec: &MapSpec,
    region: &SampleRegion,
    n: usize,
    step: f64,
) -> Result<DilatationReport, QcError> {
    if n < 100 {
        return Err(QcError::TooFewSamples { min: 100, got: n });
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(QcError::BadStep(step));
    }
    let mut sup_op = 0.0f64;
    let mut sup_k = 0.0f64;
    let mut used = 0usize;
    let mut idx = 0u64;
    let budget = 50 * n as u64;
    while used < n && idx < budget {
        let z = region.sample(idx);
        idx += 1;
        if !region.admits(z) || seam_distance(spec, z) <= 2.0 * step {
            continue;
        }
        let ds = derivative_sample(spec, z, step)?;
        if !ds.op_norm.is_finite() {
            continue;
        }
        sup_op = sup_op.max(ds.op_norm);
        if ds.local_k.is_finite() {
            sup_k = sup_k.max(ds.local_k);
        }
        used += 1;
    }
    if used == 0 {
        return Err(QcError::AllSamplesNearSeam);
    }
    Ok(DilatationReport {
        sup_op_norm: sup_op,
        sup_local_k: sup_k,
        k_hat: 16.0f64.max(sup_op * sup_op),
        n_samples: used,
        step,
    })
}

/// Region-wide lower-bound scan of the stretch Jacobian, both analytic and by
/// finite differences, over non-seam samples of the strip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianBoundReport {
    pub samples: usize,
    pub min_analytic: f64,
    pub min_fd: f64,
    pub max_disagreement: f64,
    pub pass: bool,
}

pub fn jacobian_bound_check(n: usize, step: f64) -> Result<JacobianBoundReport, QcError> {
    let spec = MapSpec::demo(MapKind::StretchH);
    let mut min_analytic = f64::INFINITY;
    let mut min_fd = f64::INFINITY;
    let mut max_disagreement = 0.0f64;
    let mut used = 0usize;
    let mut idx = 0u64;
    while used < n {
        let z = sampling::in_rect(idx, -2.0, 0.5, 2.0, 1.0);
        idx += 1;
        if seam_distance(&spec, z) <= 2.0 * step {
            continue;
        }
        let analytic = jacobian_h_analytic(z.im, z.re)?.value;
        let fd = derivative_sample(&spec, z, step)?.jac_det;
        min_analytic = min_analytic.min(analytic);
        min_fd = min_fd.min(fd);
        max_disagreement = max_disagreement.max((analytic - fd).abs());
        used += 1;
    }
    let pass = min_analytic >= 1.0 - 1e-12 && min_fd >= 1.0 - 1e-4;
    Ok(JacobianBoundReport {
        samples: used,
        min_analytic,
        min_fd,
        max_disagreement,
        pass,
    })
}

/// Winding number of `t -> F(center + radius e^{2 pi i t}) - target`, summed
/// from principal-branch argument increments with adaptive bisection whenever
/// a single increment exceeds pi/2. Returns an exact integer.
pub fn winding_degree(
    spec: &MapSpec,
    center: Complex64,
    radius: f64,
    target: Complex64,
    n: usize,
) -> Result<i64, QcError> {
    if n < 256 {
        return Err(QcError::TooFewSamples { min: 256, got: n });
    }
    let probe = |t: f64| -> Result<Complex64, QcError> {
        let z = center + Complex64::from_polar(radius, std::f64::consts::TAU * t);
        Ok(evaluate(spec, z)? - target)
    };
    let tol = 1e-9 * radius.max(1.0);
    let mut total = 0.0f64;
    let mut w_prev = probe(0.0)?;
    if w_prev.norm() <= tol {
        return Err(QcError::TargetOnCurve { closest: w_prev.norm() });
    }
    for j in 0..n {
        let t0 = j as f64 / n as f64;
        let t1 = (j + 1) as f64 / n as f64;
        let w_next = probe(t1)?;
        total += arc_increment(&probe, t0, w_prev, t1, w_next, tol, 48)?;
        w_prev = w_next;
    }
    let turns = total / std::f64::consts::TAU;
    let rounded = turns.round();
    if (turns - rounded).abs() > 0.05 {
        return Err(QcError::WindingUnresolved { sum: total });
    }
    Ok(rounded as i64)
}

fn arc_increment<F>(
    probe: &F,
    t0: f64,
    w0: Complex64,
    t1: f64,
    w1: Complex64,
    tol: f64,
    depth: u32,
) -> Result<f64, QcError>
where
    F: Fn(f64) -> Result<Complex64, QcError>,
{
    if w1.norm() <= tol {
        return Err(QcError::TargetOnCurve { closest: w1.norm() });
    }
    let delta = (w1 * w0.conj()).arg();
    if delta.abs() <= std::f64::consts::FRAC_PI_2 || depth == 0 {
        return Ok(delta);
    }
    let tm = 0.5 * (t0 + t1);
    let wm = probe(tm)?;
    Ok(arc_increment(probe, t0, w0, tm, wm, tol, depth - 1)?
        + arc_increment(probe, tm, wm, t1, w1, tol, depth - 1)?)
}
