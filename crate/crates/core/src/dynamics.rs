//! Orbit iteration and escape/convergence classification.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maps::{dyadic_map, evaluate, MapError, MapKind, MapSpec};
use crate::regions::enclosing_closed_diamond;

/// Iteration cap for the exit-time search; exceeding it is flagged loudly
/// because a finite exit time is guaranteed for admissible seeds.
pub const EXIT_TIME_CAP: u32 = 100_000;

pub const DEFAULT_ZERO_TOL: f64 = 1e-9;
pub const DEFAULT_CHECK_HORIZON: u32 = 10;
pub const DEFAULT_MAX_ITER: u32 = 10_000;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("seed must satisfy Re z > 0, got Re z = {0}")]
    SeedNotRightHalf(f64),
    #[error("seed lies in the closed diamond of scale {k}")]
    SeedInClosedDiamond { k: u32 },
    #[error("seed height {im} exceeds the seed band epsilon = {eps}")]
    SeedAboveBand { im: f64, eps: f64 },
    #[error("exit time exceeded the {0}-step cap (inconsistent with the guaranteed finite exit)")]
    ExitCapExceeded(u32),
    #[error("check needs 2^-j <= epsilon, got j = {j} with epsilon = {eps}")]
    DiamondAboveBand { j: u32, eps: f64 },
    #[error("this check needs the `{expected}` map, got `{got}`")]
    WrongMap {
        expected: &'static str,
        got: &'static str,
    },
    #[error("growth radii must be >= 2, got {0}")]
    RadiusTooSmall(f64),
    #[error("eta must be nonnegative and finite, got {0}")]
    BadEta(f64),
    #[error("scale index must be >= 1")]
    NeedPositiveScale,
    #[error("invalid dynamics config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// Numerical surrogates for the limit behaviors: a radius past which orbits
/// are declared escaped, and a tolerance under which they are declared
/// convergent once a confirmation horizon stays under it too.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    pub escape_radius: f64,
    pub zero_tol: f64,
    pub max_iter: u32,
    pub check_horizon: u32,
}

impl DynamicsConfig {
    /// Defaults for a map: the certified radius for the degree-perturbed
    /// maps, a fixed radius of 8 otherwise.
    pub fn for_map(spec: &MapSpec) -> Self {
        let escape_radius = match spec.kind {
            MapKind::DegreeG | MapKind::PolyP => certified_escape_radius(spec),
            _ => 8.0,
        };
        DynamicsConfig {
            escape_radius,
            zero_tol: DEFAULT_ZERO_TOL,
            max_iter: DEFAULT_MAX_ITER,
            check_horizon: DEFAULT_CHECK_HORIZON,
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.escape_radius >= 4.0 && self.escape_radius.is_finite()) {
            return Err(DynamicsError::BadConfig(format!(
                "escape_radius must be >= 4, got {}",
                self.escape_radius
            )));
        }
        if !(self.zero_tol > 0.0 && self.zero_tol < 1e-6) {
            return Err(DynamicsError::BadConfig(format!(
                "zero_tol must lie in (0, 1e-6), got {}",
                self.zero_tol
            )));
        }
        if self.max_iter == 0 {
            return Err(DynamicsError::BadConfig("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// Radius past which a `p` orbit provably grows. For `|w| > (4/delta)^(1/(d-1))`
/// the degree term dominates and `|g(w)| >= 3|w|`; since `|f(z)| >= |z|/2`
/// always, doubling that radius gives `|p(z)| >= 1.5 |z|` whenever
/// `|z|` exceeds it.
pub fn certified_escape_radius(spec: &MapSpec) -> f64 {
    let r_g = (4.0 / spec.delta).powf(1.0 / (spec.d as f64 - 1.0));
    let radius = 2.0 * r_g.max(4.0);
    #[cfg(debug_assertions)]
    {
        if matches!(spec.kind, MapKind::PolyP) {
            for j in 0..32u32 {
                let theta = std::f64::consts::TAU * (j as f64) / 32.0;
                let z = Complex64::from_polar(radius * 1.000001, theta);
                let pz = crate::maps::poly_map(z, spec);
                debug_assert!(
                    pz.norm() >= 1.4 * z.norm(),
                    "escape radius not certified at {z}: |p(z)| = {}",
                    pz.norm()
                );
            }
        }
    }
    radius
}

/// Terminal classification of an orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrbitLabel {
    /// `|z_n|` exceeded the escape radius at step `n`.
    Escaped(u32),
    /// `|z_n|` fell below `zero_tol` at step `n` and stayed below it for the
    /// whole confirmation horizon.
    ConvergedToZero(u32),
    /// Neither fired within `max_iter` steps. Never coerced into the others.
    Undecided,
}

impl OrbitLabel {
    pub fn name(&self) -> &'static str {
        match self {
            OrbitLabel::Escaped(_) => "escaped",
            OrbitLabel::ConvergedToZero(_) => "converged",
            OrbitLabel::Undecided => "undecided",
        }
    }

    /// Steps spent before the label fired; `max_iter` for undecided orbits.
    pub fn steps(&self, max_iter: u32) -> u32 {
        match *self {
            OrbitLabel::Escaped(n) | OrbitLabel::ConvergedToZero(n) => n,
            OrbitLabel::Undecided => max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitResult {
    pub label: OrbitLabel,
    pub final_point: Complex64,
    pub trace: Option<Vec<Complex64>>,
}

/// Iterate `z -> F(z)` until a label fires or `max_iter` applications have
/// been spent. Non-finite points (only reachable from non-finite seeds) are
/// reported as escaped rather than propagated.
pub fn iterate_orbit(
    spec: &MapSpec,
    z0: Complex64,
    cfg: &DynamicsConfig,
    keep_trace: bool,
) -> Result<OrbitResult, MapError> {
    let mut z = z0;
    let mut trace = keep_trace.then(|| vec![z0]);
    let mut n = 0u32;
    loop {
        if !z.is_finite() || z.norm() > cfg.escape_radius {
            return Ok(OrbitResult {
                label: OrbitLabel::Escaped(n),
                final_point: z,
                trace,
            });
        }
        if z.norm() < cfg.zero_tol && horizon_confirms(spec, z, cfg)? {
            return Ok(OrbitResult {
                label: OrbitLabel::ConvergedToZero(n),
                final_point: z,
                trace,
            });
        }
        if n == cfg.max_iter {
            return Ok(OrbitResult {
                label: OrbitLabel::Undecided,
                final_point: z,
                trace,
            });
        }
        z = evaluate(spec, z)?;
        n += 1;
        if let Some(t) = trace.as_mut() {
            t.push(z);
        }
    }
}

fn horizon_confirms(spec: &MapSpec, z: Complex64, cfg: &DynamicsConfig) -> Result<bool, MapError> {
    let mut w = z;
    for _ in 0..cfg.check_horizon {
        w = evaluate(spec, w)?;
        if !(w.norm() < cfg.zero_tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True if the orbit reaches the escape radius within `max_iter` steps.
///
/// Unlike [`iterate_orbit`] this never cuts an orbit short for passing near
/// zero: orbits launched just outside a diamond ride the contraction to
/// within `2^-N` of the origin before the stretch finally expels them, so an
/// absolute-modulus convergence test would misread them.
pub fn escapes_within(
    spec: &MapSpec,
    z0: Complex64,
    cfg: &DynamicsConfig,
) -> Result<bool, MapError> {
    let mut z = z0;
    for _ in 0..cfg.max_iter {
        if !z.is_finite() || z.norm() > cfg.escape_radius {
            return Ok(true);
        }
        z = evaluate(spec, z)?;
    }
    Ok(!z.is_finite() || z.norm() > cfg.escape_radius)
}

/// Least `N >= 0` with `Re(f^N(z)) > Im(f^N(z))`, for seeds strictly in the
/// right half-plane and outside every closed diamond.
pub fn first_exit_time(z0: Complex64) -> Result<u32, DynamicsError> {
    if !(z0.re > 0.0) {
        return Err(DynamicsError::SeedNotRightHalf(z0.re));
    }
    if let Some(k) = enclosing_closed_diamond(z0) {
        return Err(DynamicsError::SeedInClosedDiamond { k });
    }
    let mut z = z0;
    for n in 0..=EXIT_TIME_CAP {
        if z.re > z.im {
            return Ok(n);
        }
        z = dyadic_map(z);
    }
    Err(DynamicsError::ExitCapExceeded(EXIT_TIME_CAP))
}

/// A rectangular pixel grid. Row 0 is the top row; pixel centers are used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub width: u32,
    pub height: u32,
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.x0 < self.x1 && self.y0 < self.y1)
            || !(self.x0.is_finite() && self.y0.is_finite() && self.x1.is_finite() && self.y1.is_finite())
        {
            return Err(DynamicsError::BadConfig(format!(
                "grid bounds must be finite with x0 < x1 and y0 < y1, got {self:?}"
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(DynamicsError::BadConfig(
                "grid resolution must be at least 1x1".into(),
            ));
        }
        Ok(())
    }

    pub fn pixel_center(&self, col: u32, row: u32) -> Complex64 {
        let fx = (col as f64 + 0.5) / self.width as f64;
        let fy = (row as f64 + 0.5) / self.height as f64;
        Complex64::new(
            self.x0 + fx * (self.x1 - self.x0),
            self.y1 - fy * (self.y1 - self.y0),
        )
    }

    pub fn pixel_size(&self) -> (f64, f64) {
        (
            (self.x1 - self.x0) / self.width as f64,
            (self.y1 - self.y0) / self.height as f64,
        )
    }
}

impl std::str::FromStr for GridSpec {
    type Err = String;

    /// Parses `x0,y0,x1,y1,WxH`, e.g. `-1.5,-1.5,1.5,1.5,512x512`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 5 {
            return Err("expected x0,y0,x1,y1,WxH".into());
        }
        let num = |t: &str| -> Result<f64, String> {
            t.trim().parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}"))
        };
        let (w, h) = parts[4]
            .trim()
            .split_once(['x', 'X'])
            .ok_or_else(|| "resolution must look like 512x512".to_string())?;
        let grid = GridSpec {
            x0: num(parts[0])?,
            y0: num(parts[1])?,
            x1: num(parts[2])?,
            y1: num(parts[3])?,
            width: w.parse().map_err(|e| format!("bad width `{w}`: {e}"))?,
            height: h.parse().map_err(|e| format!("bad height `{h}`: {e}"))?,
        };
        grid.validate().map_err(|e| e.to_string())?;
        Ok(grid)
    }
}

/// Per-pixel orbit labels, row-major with the top row first.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelGrid {
    pub grid: GridSpec,
    pub labels: Vec<OrbitLabel>,
}

impl LabelGrid {
    pub fn label(&self, col: u32, row: u32) -> OrbitLabel {
        self.labels[(row * self.grid.width + col) as usize]
    }
}

/// Classify every pixel center. Pixels are independent, so the result is
/// bit-identical regardless of how rayon partitions the rows. For the stretch
/// map, pixels outside its strip have no orbit and stay `Undecided`.
pub fn classify_grid(spec: &MapSpec, grid: &GridSpec, cfg: &DynamicsConfig) -> LabelGrid {
    let width = grid.width as usize;
    let height = grid.height as usize;
    let mut labels = vec![OrbitLabel::Undecided; width * height];
    labels
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(row, row_labels)| {
            for (col, slot) in row_labels.iter_mut().enumerate() {
                let z = grid.pixel_center(col as u32, row as u32);
                *slot = match iterate_orbit(spec, z, cfg, false) {
                    Ok(result) => result.label,
                    Err(_) => OrbitLabel::Undecided,
                };
            }
        });
    LabelGrid { grid: *grid, labels }
}

/// Number of 4-connected components of the escaped label. Reported as a
/// qualitative cross-check only; pixel connectivity at a fixed resolution
/// proves nothing about the underlying open set.
pub fn escaped_component_count(grid: &LabelGrid) -> usize {
    let w = grid.grid.width as usize;
    let h = grid.grid.height as usize;
    let escaped: Vec<bool> = grid
        .labels
        .iter()
        .map(|l| matches!(l, OrbitLabel::Escaped(_)))
        .collect();
    let mut seen = vec![false; w * h];
    let mut components = 0usize;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !escaped[start] || seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (x, y) = (idx % w, idx / w);
            let mut push = |nx: usize, ny: usize| {
                let nidx = ny * w + nx;
                if escaped[nidx] && !seen[nidx] {
                    seen[nidx] = true;
                    stack.push(nidx);
                }
            };
            if x > 0 {
                push(x - 1, y);
            }
            if x + 1 < w {
                push(x + 1, y);
            }
            if y > 0 {
                push(x, y - 1);
            }
            if y + 1 < h {
                push(x, y + 1);
            }
        }
    }
    components
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::pow2;

    fn demo_p() -> (MapSpec, DynamicsConfig) {
        let spec = MapSpec::demo(MapKind::PolyP);
        let cfg = DynamicsConfig::for_map(&spec);
        (spec, cfg)
    }

    #[test]
    fn default_config_is_valid_and_certified() {
        let (spec, cfg) = demo_p();
        cfg.validate().unwrap();
        // 2 * (4 / 0.01)^(1/4) = 2 * 4.4721...
        assert!((cfg.escape_radius - 2.0 * 400.0f64.powf(0.25)).abs() < 1e-12);
        assert!(cfg.escape_radius >= 4.0);
        let faithful = MapSpec::faithful(MapKind::PolyP, 93.0).unwrap();
        let cfg = DynamicsConfig::for_map(&faithful);
        cfg.validate().unwrap();
        assert_eq!(cfg.escape_radius, 8.0);
    }

    #[test]
    fn large_imaginary_seeds_are_not_mislabelled() {
        // the orbit of -5i contracts back to the origin; the certified radius
        // must sit beyond it
        let (spec, cfg) = demo_p();
        let r = iterate_orbit(&spec, Complex64::new(0.0, -5.0), &cfg, false).unwrap();
        assert!(matches!(r.label, OrbitLabel::ConvergedToZero(_)), "{:?}", r.label);
        let r = iterate_orbit(&spec, Complex64::new(0.0, -7.0), &cfg, false).unwrap();
        assert!(matches!(r.label, OrbitLabel::Escaped(_)), "{:?}", r.label);
    }

    #[test]
    fn diamond_center_halves_until_convergence() {
        let (spec, cfg) = demo_p();
        let r = iterate_orbit(&spec, Complex64::new(0.0, 0.75), &cfg, true).unwrap();
        assert_eq!(r.label, OrbitLabel::ConvergedToZero(30));
        let trace = r.trace.unwrap();
        for (n, z) in trace.iter().enumerate() {
            let expected = 0.75 * pow2(-(n as i32));
            assert!((z.norm() - expected).abs() <= 1e-12 * expected.max(1e-300));
        }
    }

    #[test]
    fn real_axis_seeds_escape_fast() {
        let (spec, cfg) = demo_p();
        let r = iterate_orbit(&spec, Complex64::new(3.0, 0.0), &cfg, false).unwrap();
        assert_eq!(r.label, OrbitLabel::Escaped(1));
        let r = iterate_orbit(&spec, Complex64::new(0.0, 0.0), &cfg, false).unwrap();
        assert_eq!(r.label, OrbitLabel::ConvergedToZero(0));
    }

    #[test]
    fn escape_is_monotone_on_the_positive_real_axis() {
        let (spec, cfg) = demo_p();
        for i in 0..1000 {
            let mut x = 0.25 + 1.75 * (i as f64) / 999.0;
            let mut steps = 0;
            while x <= cfg.escape_radius && steps < 100 {
                let next = crate::maps::poly_map(Complex64::new(x, 0.0), &spec).re;
                assert!(next >= 2.0 * x - 1e-12, "x = {x} -> {next}");
                x = next;
                steps += 1;
            }
            assert!(x > cfg.escape_radius, "seed {i} failed to escape");
        }
    }

    #[test]
    fn exit_time_worked_examples() {
        assert_eq!(first_exit_time(Complex64::new(2.0, 0.0)).unwrap(), 0);
        assert_eq!(first_exit_time(Complex64::new(0.9, 0.8)).unwrap(), 0);
        // direct-iteration oracle: (0.3, 0.75) -> (0.195, 0.375)
        // -> (0.1794, 0.1875) -> (0.34136232, 0.09375), so the exit lands at 3
        let mut z = Complex64::new(0.3, 0.75);
        let mut oracle = 0;
        while z.re <= z.im {
            z = dyadic_map(z);
            oracle += 1;
        }
        assert_eq!(oracle, 3);
        assert!((z.re - 0.34136232).abs() < 1e-12, "z3 = {z}");
        assert!((z.im - 0.09375).abs() < 1e-15);
        assert_eq!(first_exit_time(Complex64::new(0.3, 0.75)).unwrap(), 3);
    }

    #[test]
    fn exit_time_preconditions() {
        assert!(matches!(
            first_exit_time(Complex64::new(0.0, 0.75)),
            Err(DynamicsError::SeedNotRightHalf(_))
        ));
        assert!(matches!(
            first_exit_time(Complex64::new(0.1, 0.76)),
            Err(DynamicsError::SeedInClosedDiamond { k: 0 })
        ));
    }

    #[test]
    fn exit_time_is_finite_for_admissible_seeds() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut found = 0;
        while found < 1000 {
            let z = Complex64::new(rng.gen_range(0.01..2.0), rng.gen_range(-1.0..2.0));
            if enclosing_closed_diamond(z).is_some()
                || !crate::checks::clear_of_diamonds(z, 1e-3)
            {
                continue;
            }
            let n = first_exit_time(z).unwrap();
            assert!(n <= EXIT_TIME_CAP);
            found += 1;
        }
    }

    #[test]
    fn grid_parsing_and_pixel_centers() {
        let grid: GridSpec = "-1.5,-1.5,1.5,1.5,3x3".parse().unwrap();
        assert_eq!(grid.width, 3);
        // top-left pixel center
        let z = grid.pixel_center(0, 0);
        assert!((z.re + 1.0).abs() < 1e-15 && (z.im - 1.0).abs() < 1e-15);
        // a symmetric 1x1 grid centers exactly on the origin
        let one: GridSpec = "-1.5,-1.5,1.5,1.5,1x1".parse().unwrap();
        assert_eq!(one.pixel_center(0, 0), Complex64::new(0.0, 0.0));
        assert!("-1.5,-1.5,1.5,1.5".parse::<GridSpec>().is_err());
        assert!("0,0,1,1,0x4".parse::<GridSpec>().is_err());
    }

    #[test]
    fn one_pixel_grid_at_the_origin_converges_immediately() {
        let (spec, cfg) = demo_p();
        let grid = GridSpec { x0: -1.5, y0: -1.5, x1: 1.5, y1: 1.5, width: 1, height: 1 };
        let out = classify_grid(&spec, &grid, &cfg);
        assert_eq!(out.labels, vec![OrbitLabel::ConvergedToZero(0)]);
    }

    #[test]
    fn grid_labels_known_pixels() {
        let (spec, cfg) = demo_p();
        // single pixels centered on (0, 0.75) and (3, 0)
        let g1 = GridSpec { x0: -0.1, y0: 0.65, x1: 0.1, y1: 0.85, width: 1, height: 1 };
        let out = classify_grid(&spec, &g1, &cfg);
        assert!(matches!(out.labels[0], OrbitLabel::ConvergedToZero(_)));
        let g2 = GridSpec { x0: 2.9, y0: -0.1, x1: 3.1, y1: 0.1, width: 1, height: 1 };
        let out = classify_grid(&spec, &g2, &cfg);
        assert!(matches!(out.labels[0], OrbitLabel::Escaped(_)));
    }

    #[test]
    fn grid_is_identical_across_worker_counts() {
        let (spec, cfg) = demo_p();
        let grid = GridSpec { x0: -1.5, y0: -1.5, x1: 1.5, y1: 1.5, width: 64, height: 64 };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| classify_grid(&spec, &grid, &cfg));
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| classify_grid(&spec, &grid, &cfg));
        assert_eq!(single, many);
    }

    #[test]
    fn stretch_grid_marks_out_of_domain_pixels_undecided() {
        let spec = MapSpec::demo(MapKind::StretchH);
        let cfg = DynamicsConfig::for_map(&spec);
        // everything below the strip: no orbit to classify
        let grid = GridSpec { x0: -1.0, y0: -1.0, x1: 1.0, y1: 0.4, width: 2, height: 2 };
        let out = classify_grid(&spec, &grid, &cfg);
        assert!(out.labels.iter().all(|l| matches!(l, OrbitLabel::Undecided)));
    }

    #[test]
    fn component_count_on_a_toy_grid() {
        let grid = GridSpec { x0: 0.0, y0: 0.0, x1: 3.0, y1: 1.0, width: 3, height: 1 };
        let labels = vec![
            OrbitLabel::Escaped(1),
            OrbitLabel::ConvergedToZero(2),
            OrbitLabel::Escaped(3),
        ];
        let lg = LabelGrid { grid, labels };
        assert_eq!(escaped_component_count(&lg), 2);
    }

    #[test]
    fn escape_race_sees_deep_transients_through() {
        // a point a hair to the right of a diamond boundary rides the
        // contraction far below any convergence tolerance before escaping
        let (spec, cfg) = demo_p();
        let top = Complex64::new(0.0, pow2(-5));
        let seed = top + Complex64::new(1e-4, 0.0);
        assert!(escapes_within(&spec, seed, &cfg).unwrap());
        // while the plain classifier reads the same orbit as convergent
        let r = iterate_orbit(&spec, seed, &cfg, false).unwrap();
        assert!(matches!(r.label, OrbitLabel::ConvergedToZero(_)));
    }
}
