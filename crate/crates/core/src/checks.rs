//! Verification procedures: desk-scale numerical probes of the qualitative
//! behavior of the maps, each returning a structured pass/fail report.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{
    escapes_within, first_exit_time, iterate_orbit, DynamicsConfig, DynamicsError, OrbitLabel,
};
use crate::maps::{
    dyadic_map, evaluate, poly_map, pow2, stretch_map, stretch_profile, MapKind, MapSpec,
    SATURATION_MAGNITUDE,
};
use crate::regions::{enclosing_closed_diamond, Diamond, EscapeSeeds};
use crate::sampling;

/// Boundary images of the halving step must land on the next boundary to
/// within this distance.
pub const DIAMOND_STEP_TOL: f64 = 1e-12;
/// The composite and the dyadic map must agree bit-for-bit (modulo rounding)
/// along pre-exit orbits.
pub const LEMMA_GAP_TOL: f64 = 1e-14;
/// Mirror-symmetry defect allowed when transferring escape across the axis.
pub const MIRROR_TOL: f64 = 1e-12;
/// Allowed relative deviation of the measured growth exponent.
pub const GROWTH_REL_DEV_MAX: f64 = 0.1;
/// Two-sided seam probes at this offset must agree to `SEAM_GAP_TOL`.
pub const SEAM_PROBE_OFFSET: f64 = 1e-8;
pub const SEAM_GAP_TOL: f64 = 1e-6;

fn require_kind(spec: &MapSpec, expected: MapKind) -> Result<(), DynamicsError> {
    if spec.kind != expected {
        return Err(DynamicsError::WrongMap {
            expected: expected.flag_name(),
            got: spec.kind.flag_name(),
        });
    }
    Ok(())
}

/// Which seed set an exit orbit landed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Landing {
    I1,
    I2,
    Outside,
}

/// Exit-orbit verification: along the orbit of an admissible seed, the
/// composite equals the dyadic map, the orbit stays inside the unit disk, and
/// the exit point lands in one of the seed sets.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaOrbitReport {
    pub seed: Complex64,
    pub exit_time: u32,
    pub max_modulus: f64,
    pub max_gap: f64,
    pub exit_point: Complex64,
    pub landing: Landing,
    pub pass: bool,
    pub failure: Option<String>,
}

pub fn verify_lemma_orbit(
    spec: &MapSpec,
    z0: Complex64,
    seeds: &EscapeSeeds,
) -> Result<LemmaOrbitReport, DynamicsError> {
    require_kind(spec, MapKind::PolyP)?;
    if z0.im > seeds.epsilon() {
        return Err(DynamicsError::SeedAboveBand {
            im: z0.im,
            eps: seeds.epsilon(),
        });
    }
    let exit_time = first_exit_time(z0)?;
    let mut fz = z0;
    let mut pz = z0;
    let mut max_modulus = z0.norm();
    let mut max_gap = 0.0f64;
    for _ in 0..exit_time {
        fz = dyadic_map(fz);
        pz = evaluate(spec, pz)?;
        max_modulus = max_modulus.max(fz.norm());
        max_gap = max_gap.max((fz - pz).norm());
    }
    let landing = if seeds.in_i1(fz) {
        Landing::I1
    } else if seeds.in_i2(fz) {
        Landing::I2
    } else {
        Landing::Outside
    };
    let mut failure = None;
    if max_modulus >= 1.0 {
        failure = Some(format!("orbit left the unit disk: max |f^n| = {max_modulus}"));
    } else if max_gap > LEMMA_GAP_TOL {
        failure = Some(format!("composite drifted from the dyadic orbit by {max_gap}"));
    } else if landing == Landing::Outside {
        failure = Some(format!("exit point {fz} missed both seed sets"));
    }
    Ok(LemmaOrbitReport {
        seed: z0,
        exit_time,
        max_modulus,
        max_gap,
        exit_point: fz,
        landing,
        pass: failure.is_none(),
        failure,
    })
}

/// One halving step: boundary samples of the scale-`k` diamond must map onto
/// the scale-`k+1` boundary, interior samples strictly inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiamondStepReport {
    pub k: u32,
    pub boundary_samples: usize,
    pub interior_samples: usize,
    pub max_boundary_deviation: f64,
    pub interior_violations: usize,
    pub center_deviation: f64,
    pub pass: bool,
}

pub fn verify_diamond_step(
    spec: &MapSpec,
    k: u32,
    n_samples: usize,
) -> Result<DiamondStepReport, DynamicsError> {
    require_kind(spec, MapKind::PolyP)?;
    let from = Diamond::new(k);
    let to = Diamond::new(k + 1);
    let mut max_dev = 0.0f64;
    for w in from.boundary_samples(n_samples.max(4)) {
        let img = poly_map(w, spec);
        max_dev = max_dev.max(to.boundary_distance(img));
    }
    let interior = from.interior_samples(n_samples.max(4));
    let interior_violations = interior
        .iter()
        .filter(|&&w| !to.contains(poly_map(w, spec)))
        .count();
    let center = Complex64::new(0.0, 0.75 * pow2(-(k as i32)));
    let center_deviation = (poly_map(center, spec) - center.scale(0.5)).norm();
    let pass = max_dev <= DIAMOND_STEP_TOL
        && interior_violations == 0
        && center_deviation <= DIAMOND_STEP_TOL;
    Ok(DiamondStepReport {
        k,
        boundary_samples: n_samples.max(4),
        interior_samples: interior.len(),
        max_boundary_deviation: max_dev,
        interior_violations,
        center_deviation,
        pass,
    })
}

/// Escape probe along the right half of a diamond boundary: every point
/// nudged right by `eta > 0` must escape, the boundary points themselves must
/// not, and the mirrored points inherit escape through the odd symmetry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEscapeReport {
    pub j: u32,
    pub eta: f64,
    pub samples: usize,
    pub shifted_escaped: usize,
    pub unshifted_escaped: usize,
    pub mirror_defect: f64,
    pub pass: bool,
}

pub fn boundary_escape_probe(
    spec: &MapSpec,
    j: u32,
    eta: f64,
    seeds: &EscapeSeeds,
    cfg: &DynamicsConfig,
    n_samples: usize,
) -> Result<BoundaryEscapeReport, DynamicsError> {
    require_kind(spec, MapKind::PolyP)?;
    if pow2(-(j as i32)) > seeds.epsilon() {
        return Err(DynamicsError::DiamondAboveBand {
            j,
            eps: seeds.epsilon(),
        });
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(DynamicsError::BadEta(eta));
    }
    let points = right_boundary_points(j, n_samples.max(2));
    let mut shifted_escaped = 0usize;
    let mut unshifted_escaped = 0usize;
    let mut mirror_defect = 0.0f64;
    for &w in &points {
        let z = w + Complex64::new(eta, 0.0);
        // For a positive nudge the claim is escape, and only the full race
        // sees it through the deep transient. At eta = 0 the claim is
        // convergence of the closed-diamond orbit, so the classifier decides;
        // racing a boundary sample would instead probe its one-ulp rounding,
        // which already escapes.
        let escaped = if eta > 0.0 {
            escapes_within(spec, z, cfg)?
        } else {
            matches!(
                iterate_orbit(spec, z, cfg, false)?.label,
                OrbitLabel::Escaped(_)
            )
        };
        if escaped {
            shifted_escaped += 1;
        }
        // the escape of -conj(z) - eta follows from the odd symmetry; confirm
        // the identity holds along the bounded part of the orbit instead of
        // re-iterating the mirror seed
        mirror_defect = mirror_defect.max(mirror_drift(spec, z, 50, cfg.escape_radius)?);
        let unshifted = iterate_orbit(spec, w, cfg, false)?;
        if matches!(unshifted.label, OrbitLabel::Escaped(_)) {
            unshifted_escaped += 1;
        }
    }
    let want_escapes = if eta > 0.0 { points.len() } else { 0 };
    let pass = shifted_escaped == want_escapes
        && unshifted_escaped == 0
        && mirror_defect <= MIRROR_TOL;
    Ok(BoundaryEscapeReport {
        j,
        eta,
        samples: points.len(),
        shifted_escaped,
        unshifted_escaped,
        mirror_defect,
        pass,
    })
}

/// Max relative deviation of `p^n(-conj z)` from `-conj(p^n(z))` over the
/// first `steps` iterates, stopping once the orbit crosses `bound` (past it
/// both orbits are already classified).
fn mirror_drift(
    spec: &MapSpec,
    z0: Complex64,
    steps: u32,
    bound: f64,
) -> Result<f64, DynamicsError> {
    let mut z = z0;
    let mut m = Complex64::new(-z0.re, z0.im);
    let mut worst = 0.0f64;
    for _ in 0..steps {
        z = evaluate(spec, z)?;
        m = evaluate(spec, m)?;
        let defect = (m - Complex64::new(-z.re, z.im)).norm() / z.norm().max(1.0);
        worst = worst.max(defect);
        if z.norm() > bound {
            break;
        }
    }
    Ok(worst)
}

/// `n` evenly spaced points on the two right edges (top vertex -> right
/// vertex -> bottom vertex) of the scale-`j` diamond.
fn right_boundary_points(j: u32, n: usize) -> Vec<Complex64> {
    let v = Diamond::new(j).vertices();
    let (top, bottom, right) = (v[0], v[1], v[2]);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = 2.0 * i as f64 / (n - 1) as f64;
        let z = if t <= 1.0 {
            top + (right - top).scale(t)
        } else {
            right + (bottom - right).scale(t - 1.0)
        };
        out.push(z);
    }
    out
}

/// Disk probe at the midpoint of the upper-right edge of the scale-`j`
/// diamond: no iterate of any sample may visit the parent diamond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParentAvoidanceReport {
    pub j: u32,
    pub samples: usize,
    pub parent_visits: usize,
    pub escaped: usize,
    pub converged: usize,
    pub undecided: usize,
    pub pass: bool,
}

pub fn julia_distinction_probe(
    spec: &MapSpec,
    j: u32,
    disk_radius: f64,
    horizon: u32,
    n_samples: usize,
    cfg: &DynamicsConfig,
) -> Result<ParentAvoidanceReport, DynamicsError> {
    require_kind(spec, MapKind::PolyP)?;
    if j == 0 {
        return Err(DynamicsError::NeedPositiveScale);
    }
    let v = Diamond::new(j).vertices();
    let center = (v[0] + v[2]).scale(0.5);
    let parent = Diamond::new(j - 1);
    let samples: Vec<Complex64> = if disk_radius == 0.0 {
        vec![center]
    } else {
        (0..n_samples.max(1) as u64)
            .map(|n| sampling::in_disk(n, center, disk_radius))
            .collect()
    };
    let mut parent_visits = 0usize;
    let mut escaped = 0usize;
    let mut converged = 0usize;
    let mut undecided = 0usize;
    for &s in &samples {
        let mut z = s;
        for _ in 0..=horizon {
            if parent.contains(z) {
                parent_visits += 1;
                break;
            }
            z = evaluate(spec, z)?;
        }
        match iterate_orbit(spec, s, cfg, false)?.label {
            OrbitLabel::Escaped(_) => escaped += 1,
            OrbitLabel::ConvergedToZero(_) => converged += 1,
            OrbitLabel::Undecided => undecided += 1,
        }
    }
    Ok(ParentAvoidanceReport {
        j,
        samples: samples.len(),
        parent_visits,
        escaped,
        converged,
        undecided,
        pass: parent_visits == 0,
    })
}

/// One row of the super-exponential growth table along the negative
/// imaginary axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRow {
    pub r: f64,
    pub log_modulus: f64,
    pub predicted: f64,
    pub rel_deviation: f64,
    pub saturated: bool,
}

pub fn growth_check_ftilde(
    spec: &MapSpec,
    r_values: &[f64],
) -> Result<Vec<GrowthRow>, DynamicsError> {
    require_kind(spec, MapKind::TranscendentalFt)?;
    let mut rows = Vec::with_capacity(r_values.len());
    for &r in r_values {
        if !(r >= 2.0) {
            return Err(DynamicsError::RadiusTooSmall(r));
        }
        let w = evaluate(spec, Complex64::new(0.0, -r))?;
        // past this the exponential term was clamped and the row is nominal
        let saturated = r * r >= SATURATION_MAGNITUDE.ln();
        let log_modulus = w.norm().ln();
        let predicted = r * r + spec.delta.ln();
        let rel_deviation = (log_modulus - predicted).abs() / predicted.abs();
        rows.push(GrowthRow {
            r,
            log_modulus,
            predicted,
            rel_deviation,
            saturated,
        });
    }
    Ok(rows)
}

/// The stretch fixes the central diamond pointwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StretchIdentityReport {
    pub samples: usize,
    pub max_deviation: f64,
    pub pass: bool,
}

pub fn stretch_identity_check(n: usize) -> StretchIdentityReport {
    let diamond = Diamond::new(0);
    let mut max_dev = 0.0f64;
    let pts = diamond.interior_samples(n);
    for &z in &pts {
        let w = stretch_map(z).expect("diamond points lie in the strip");
        max_dev = max_dev.max((w - z).norm());
    }
    StretchIdentityReport {
        samples: pts.len(),
        max_deviation: max_dev,
        pass: max_dev <= 1e-15,
    }
}

/// Iterated stretch growth: to the right of the diamond, the real part gains
/// at least a factor `h_y(x_0)` per step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StretchGrowthReport {
    pub seeds: usize,
    pub horizon: u32,
    pub max_rel_shortfall: f64,
    pub pass: bool,
}

pub fn stretch_growth_check(n_seeds: usize, horizon: u32, rng_seed: u64) -> StretchGrowthReport {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let diamond = Diamond::new(0);
    let mut max_shortfall = 0.0f64;
    let mut seeds = 0usize;
    while seeds < n_seeds {
        let z0 = Complex64::new(rng.gen_range(1e-3..2.0), rng.gen_range(0.5..=1.0));
        if diamond.contains_closure(z0) {
            continue;
        }
        seeds += 1;
        let rate = stretch_profile(z0.im, z0.re).expect("seed lies in the strip");
        let mut z = z0;
        for n in 1..=horizon {
            z = stretch_map(z).expect("stretch preserves its strip");
            let bound = rate.powi(n as i32) * z0.re;
            let shortfall = (bound - z.re) / bound;
            max_shortfall = max_shortfall.max(shortfall);
        }
    }
    StretchGrowthReport {
        seeds,
        horizon,
        max_rel_shortfall: max_shortfall.max(0.0),
        pass: max_shortfall <= 1e-9,
    }
}

/// True when `z` sits at least `clearance` to the right of the diamond union
/// in the rescaled strip coordinates. Exit times blow up as a seed approaches
/// the boundary pinch (that is the whole escape mechanism), so the batch
/// check keeps its random seeds clear of it.
pub fn clear_of_diamonds(z: Complex64, clearance: f64) -> bool {
    if !(z.re > 0.0) {
        return false;
    }
    if z.im <= 0.0 {
        return true;
    }
    let e = crate::maps::dyadic_exponent(z.im);
    let scaled_x = z.re * pow2(-e);
    let scaled_y = z.im * pow2(-e);
    let inner = (scaled_y - 0.5).min(1.0 - scaled_y).max(0.0);
    scaled_x - inner >= clearance
}

/// Batch exit-time check over random admissible seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitTimeReport {
    pub seeds: usize,
    pub max_exit_time: u32,
    pub pass: bool,
}

pub fn exit_time_check(n_seeds: usize, rng_seed: u64) -> Result<ExitTimeReport, DynamicsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut max_exit = 0u32;
    let mut seeds = 0usize;
    while seeds < n_seeds {
        let z = Complex64::new(rng.gen_range(0.01..2.0), rng.gen_range(-1.0..2.0));
        if enclosing_closed_diamond(z).is_some() || !clear_of_diamonds(z, 1e-3) {
            continue;
        }
        max_exit = max_exit.max(first_exit_time(z)?);
        seeds += 1;
    }
    Ok(ExitTimeReport {
        seeds,
        max_exit_time: max_exit,
        pass: true,
    })
}

/// Every random point of the first seed rectangle escapes; this is the
/// startup validation of the chosen band height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedEscapeReport {
    pub samples: usize,
    pub escaped: usize,
    pub pass: bool,
}

pub fn seed_escape_check(
    spec: &MapSpec,
    seeds: &EscapeSeeds,
    cfg: &DynamicsConfig,
    n: usize,
    rng_seed: u64,
) -> Result<SeedEscapeReport, DynamicsError> {
    require_kind(spec, MapKind::PolyP)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut escaped = 0usize;
    for _ in 0..n {
        let z = Complex64::new(
            rng.gen_range(0.25..=1.0),
            rng.gen_range(0.0..=seeds.epsilon()),
        );
        if escapes_within(spec, z, cfg)? {
            escaped += 1;
        }
    }
    Ok(SeedEscapeReport {
        samples: n,
        escaped,
        pass: escaped == n,
    })
}

/// Bounded wandering: orbits of diamond points under the interpolated map
/// never leave the closed unit disk and still reach the zero tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WanderingReport {
    pub samples: usize,
    pub max_modulus: f64,
    pub max_steps_to_tol: u32,
    pub failures: usize,
    pub pass: bool,
}

pub fn bounded_wandering_check(
    spec: &MapSpec,
    max_scale: u32,
    per_scale: usize,
    step_budget: u32,
    tol: f64,
) -> Result<WanderingReport, DynamicsError> {
    require_kind(spec, MapKind::TranscendentalFt)?;
    let mut max_modulus = 0.0f64;
    let mut max_steps = 0u32;
    let mut failures = 0usize;
    let mut samples = 0usize;
    for k in 0..=max_scale {
        for z0 in Diamond::new(k).interior_samples(per_scale) {
            samples += 1;
            let mut z = z0;
            let mut reached = false;
            for n in 0..=step_budget {
                max_modulus = max_modulus.max(z.norm());
                if z.norm() < tol {
                    max_steps = max_steps.max(n);
                    reached = true;
                    break;
                }
                z = evaluate(spec, z)?;
            }
            if !reached {
                failures += 1;
            }
        }
    }
    Ok(WanderingReport {
        samples,
        max_modulus,
        max_steps_to_tol: max_steps,
        failures,
        pass: failures == 0 && max_modulus <= 1.0,
    })
}

/// The fixed point at the origin attracts along the diamonds on the positive
/// imaginary axis and repels along the real axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleReport {
    pub axis_samples: usize,
    pub axis_converged: usize,
    pub real_samples: usize,
    pub real_escaped: usize,
    pub pass: bool,
}

pub fn saddle_check(
    spec: &MapSpec,
    cfg: &DynamicsConfig,
) -> Result<SaddleReport, DynamicsError> {
    require_kind(spec, MapKind::TranscendentalFt)?;
    let mut axis_samples = 0usize;
    let mut axis_converged = 0usize;
    for k in 0..=8u32 {
        for i in 0..16 {
            // interior heights of the scale-k diamond on the imaginary axis
            let t = 0.55 + 0.4 * (i as f64) / 15.0;
            let z = Complex64::new(0.0, t * pow2(-(k as i32)));
            axis_samples += 1;
            if matches!(
                iterate_orbit(spec, z, cfg, false)?.label,
                OrbitLabel::ConvergedToZero(_)
            ) {
                axis_converged += 1;
            }
        }
    }
    let mut real_samples = 0usize;
    let mut real_escaped = 0usize;
    for i in 0..50 {
        let t = 0.25 + 0.75 * (i as f64) / 49.0;
        for sign in [1.0, -1.0] {
            real_samples += 1;
            if matches!(
                iterate_orbit(spec, Complex64::new(sign * t, 0.0), cfg, false)?.label,
                OrbitLabel::Escaped(_)
            ) {
                real_escaped += 1;
            }
        }
    }
    Ok(SaddleReport {
        axis_samples,
        axis_converged,
        real_samples,
        real_escaped,
        pass: axis_converged == axis_samples && real_escaped == real_samples,
    })
}

/// Two-sided continuity probes across the branch seams of a map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeamContinuityReport {
    pub probes: usize,
    pub max_gap: f64,
    pub pass: bool,
}

pub fn seam_continuity_check(
    spec: &MapSpec,
    points_per_seam: usize,
) -> Result<SeamContinuityReport, DynamicsError> {
    let mut probes = 0usize;
    let mut max_gap = 0.0f64;
    let off = SEAM_PROBE_OFFSET;
    let record = |a: Complex64, b: Complex64, max_gap: &mut f64| {
        *max_gap = (*max_gap).max((a - b).norm());
    };
    match spec.kind {
        MapKind::PolyP => {
            // the composite's seams are exactly those of its two factors, and
            // the per-offset tolerance is meaningful only where the factor
            // derivatives stay moderate, so probe the factors
            let f = MapSpec { kind: MapKind::DyadicF, ..*spec };
            let g = MapSpec { kind: MapKind::DegreeG, ..*spec };
            let a = seam_continuity_check(&f, points_per_seam)?;
            let b = seam_continuity_check(&g, points_per_seam)?;
            probes = a.probes + b.probes;
            max_gap = a.max_gap.max(b.max_gap);
        }
        MapKind::DyadicF => {
            for m in -20..=20i32 {
                let y0 = pow2(-m);
                for i in 0..points_per_seam {
                    let x = -3.0 * y0 + 6.0 * y0 * (i as f64 + 0.5) / points_per_seam as f64;
                    let above = evaluate(spec, Complex64::new(x, y0 + off))?;
                    let below = evaluate(spec, Complex64::new(x, y0 - off))?;
                    record(above, below, &mut max_gap);
                    probes += 1;
                }
            }
        }
        MapKind::DegreeG => {
            for radius in [1.0, 2.0] {
                for i in 0..points_per_seam {
                    let theta = std::f64::consts::TAU * (i as f64) / points_per_seam as f64;
                    let outer = evaluate(spec, Complex64::from_polar(radius + off, theta))?;
                    let inner = evaluate(spec, Complex64::from_polar(radius - off, theta))?;
                    record(outer, inner, &mut max_gap);
                    probes += 1;
                }
            }
        }
        MapKind::TranscendentalFt => {
            for y0 in [0.0, -1.0] {
                for i in 0..points_per_seam {
                    let x = -3.0 + 6.0 * (i as f64 + 0.5) / points_per_seam as f64;
                    let above = evaluate(spec, Complex64::new(x, y0 + off))?;
                    let below = evaluate(spec, Complex64::new(x, y0 - off))?;
                    record(above, below, &mut max_gap);
                    probes += 1;
                }
            }
        }
        MapKind::StretchH => {
            // the profile's kinks inside the strip: the diamond edge and the
            // |x| = y line at a sweep of heights
            for i in 0..points_per_seam {
                let y = 0.5 + (i as f64 + 0.5) / points_per_seam as f64 * 0.5;
                let inner = (y - 0.5).min(1.0 - y);
                for x0 in [inner, y] {
                    let left = stretch_map(Complex64::new(x0 - off, y))?;
                    let right = stretch_map(Complex64::new(x0 + off, y))?;
                    record(left, right, &mut max_gap);
                    probes += 1;
                }
            }
        }
    }
    Ok(SeamContinuityReport {
        probes,
        max_gap,
        pass: max_gap <= SEAM_GAP_TOL,
    })
}
