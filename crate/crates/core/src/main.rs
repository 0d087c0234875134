use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use qrdyn::checks;
use qrdyn::config::{DynamicsOverrides, Resolved, RunConfig};
use qrdyn::dynamics::{classify_grid, escaped_component_count, iterate_orbit};
use qrdyn::qc::{estimate_dilatation, winding_degree, SampleRegion};
use qrdyn::render::{render_ppm, RenderOptions};
use qrdyn::{GridSpec, MapKind, ParamMode};

#[derive(Parser)]
#[command(
    name = "qrdyn",
    about = "Piecewise planar quasiregular maps: orbits, dilatation estimates, escape pictures",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a grid and write a binary PPM picture
    Render(RenderArgs),
    /// Classify a grid and write CSV rows x,y,label,iters
    Classify(CommonArgs),
    /// Iterate a single seed and write the CSV trace n,x,y,abs_z
    Orbit(OrbitArgs),
    /// Run verification checks; exit 1 if any fails
    Verify(VerifyArgs),
    /// Sample a dilatation estimate and print it as JSON
    #[command(name = "estimate-k")]
    EstimateK(EstimateArgs),
    /// Count preimages by the argument principle and print the integer
    Degree(DegreeArgs),
}

#[derive(Args, Default)]
struct CommonArgs {
    /// Map to run: h, f, g, p, or ftilde
    #[arg(long, value_parser = parse_map)]
    map: Option<MapKind>,
    /// Odd degree of the radial perturbation
    #[arg(long)]
    d: Option<u32>,
    /// Strength of the perturbation
    #[arg(long)]
    delta: Option<f64>,
    /// Parameter regime: demo or faithful
    #[arg(long, value_parser = parse_mode)]
    mode: Option<ParamMode>,
    /// Seed band height (in (0, 1/4))
    #[arg(long)]
    eps: Option<f64>,
    /// Boundary nudge used by the escape probe
    #[arg(long)]
    eta: Option<f64>,
    /// Grid as x0,y0,x1,y1,WxH
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<GridSpec>,
    #[arg(long)]
    max_iter: Option<u32>,
    #[arg(long)]
    escape_radius: Option<f64>,
    /// RNG seed for the randomized sample sets
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (stdout for text formats when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON RunConfig file; explicit flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Stroke diamond boundaries up to this scale
    #[arg(long)]
    overlay_diamonds: Option<u32>,
    /// Stroke the seed set outlines
    #[arg(long)]
    overlay_seeds: bool,
}

#[derive(Args)]
struct OrbitArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Seed point as x,y
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    point: Complex64,
    /// Number of iterations to record
    #[arg(short = 'n', long = "steps", default_value_t = 100)]
    steps: u32,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated check names (default: all checks for the map)
    #[arg(long, value_delimiter = ',')]
    checks: Option<Vec<String>>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    #[arg(long, default_value_t = 1e-6)]
    step: f64,
}

#[derive(Args)]
struct DegreeArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 10.0)]
    radius: f64,
    /// Winding target as x,y
    #[arg(long, value_parser = parse_point, default_value = "0,0", allow_hyphen_values = true)]
    target: Complex64,
    #[arg(long, default_value_t = 4096)]
    samples: usize,
}

fn parse_map(s: &str) -> Result<MapKind, String> {
    match s {
        "h" => Ok(MapKind::StretchH),
        "f" => Ok(MapKind::DyadicF),
        "g" => Ok(MapKind::DegreeG),
        "p" => Ok(MapKind::PolyP),
        "ftilde" => Ok(MapKind::TranscendentalFt),
        other => Err(format!("unknown map `{other}` (expected h, f, g, p, ftilde)")),
    }
}

fn parse_mode(s: &str) -> Result<ParamMode, String> {
    match s {
        "demo" => Ok(ParamMode::Demo),
        "faithful" => Ok(ParamMode::Faithful),
        other => Err(format!("unknown mode `{other}` (expected demo or faithful)")),
    }
}

fn parse_point(s: &str) -> Result<Complex64, String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| "expected x,y".to_string())?;
    Ok(Complex64::new(
        x.trim().parse().map_err(|e| format!("bad x `{x}`: {e}"))?,
        y.trim().parse().map_err(|e| format!("bad y `{y}`: {e}"))?,
    ))
}

impl CommonArgs {
    /// Config file first, explicit flags on top.
    fn resolve(&self) -> Result<Resolved, String> {
        let base = match &self.config {
            Some(path) => RunConfig::from_file(path).map_err(|e| e.to_string())?,
            None => RunConfig::default(),
        };
        let dynamics = if self.max_iter.is_some() || self.escape_radius.is_some() {
            Some(DynamicsOverrides {
                escape_radius: self.escape_radius,
                max_iter: self.max_iter,
                ..Default::default()
            })
        } else {
            None
        };
        let flags = RunConfig {
            map: self.map,
            mode: self.mode,
            d: self.d,
            delta: self.delta,
            eps: self.eps,
            eta: self.eta,
            dynamics,
            grid: self.grid,
            seed: self.seed,
            out: self.out.clone(),
            checks: None,
        };
        base.merged_with(&flags).resolve().map_err(|e| e.to_string())
    }
}

/// Write via a sibling temp file and rename, so readers never see a partial
/// file.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_os_string();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), String> {
    match out {
        Some(path) => write_atomic(path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| format!("cannot write stdout: {e}"))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            eprintln!("run with --help for usage");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Render(args) => {
            let resolved = args.common.resolve()?;
            let labels = classify_grid(&resolved.spec, &resolved.grid, &resolved.dynamics);
            let opts = RenderOptions {
                overlay_diamonds: args.overlay_diamonds,
                overlay_seeds: args.overlay_seeds.then_some(resolved.seeds),
            };
            let bytes = render_ppm(&labels, &opts).map_err(|e| e.to_string())?;
            let out = resolved.out.as_deref().ok_or("render needs --out PATH")?;
            write_atomic(out, &bytes).map_err(|e| format!("cannot write {}: {e}", out.display()))?;
            eprintln!(
                "wrote {} ({}x{}, escaped-label components: {})",
                out.display(),
                resolved.grid.width,
                resolved.grid.height,
                escaped_component_count(&labels)
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Classify(common) => {
            let resolved = common.resolve()?;
            let labels = classify_grid(&resolved.spec, &resolved.grid, &resolved.dynamics);
            let mut csv = String::from("x,y,label,iters\n");
            for row in 0..resolved.grid.height {
                for col in 0..resolved.grid.width {
                    let z = resolved.grid.pixel_center(col, row);
                    let label = labels.label(col, row);
                    writeln!(
                        csv,
                        "{},{},{},{}",
                        z.re,
                        z.im,
                        label.name(),
                        label.steps(resolved.dynamics.max_iter)
                    )
                    .expect("string write");
                }
            }
            emit(resolved.out.as_deref(), csv.as_bytes())?;
            eprintln!(
                "escaped-label components: {} (qualitative)",
                escaped_component_count(&labels)
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Orbit(args) => {
            let resolved = args.common.resolve()?;
            let mut cfg = resolved.dynamics;
            cfg.max_iter = args.steps;
            let result = iterate_orbit(&resolved.spec, args.point, &cfg, true)
                .map_err(|e| e.to_string())?;
            let mut csv = String::from("n,x,y,abs_z\n");
            for (n, z) in result.trace.as_deref().unwrap_or_default().iter().enumerate() {
                writeln!(csv, "{},{},{},{}", n, z.re, z.im, z.norm()).expect("string write");
            }
            emit(resolved.out.as_deref(), csv.as_bytes())?;
            eprintln!("label: {:?}", result.label);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(args) => {
            let resolved = args.common.resolve()?;
            let selected = args
                .checks
                .or_else(|| resolved.checks.clone());
            let outcomes = run_verify(&resolved, selected.as_deref())?;
            let mut all_pass = true;
            for outcome in &outcomes {
                let tag = if outcome.pass { "PASS" } else { "FAIL" };
                println!("{tag} {}: {}", outcome.name, outcome.detail);
                all_pass &= outcome.pass;
            }
            if outcomes.is_empty() {
                return Err("no checks selected for this map".into());
            }
            Ok(if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::EstimateK(args) => {
            let resolved = args.common.resolve()?;
            let region = default_region(resolved.spec.kind, args.common.grid.as_ref());
            let report = estimate_dilatation(&resolved.spec, &region, args.samples, args.step)
                .map_err(|e| e.to_string())?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            emit(resolved.out.as_deref(), format!("{json}\n").as_bytes())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Degree(args) => {
            let resolved = args.common.resolve()?;
            let deg = winding_degree(
                &resolved.spec,
                Complex64::new(0.0, 0.0),
                args.radius,
                args.target,
                args.samples,
            )
            .map_err(|e| e.to_string())?;
            println!("{deg}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Sampling region for the dilatation estimate. A `--grid` flag narrows it;
/// otherwise each map gets the region where its distortion lives.
fn default_region(kind: MapKind, grid: Option<&GridSpec>) -> SampleRegion {
    if let Some(g) = grid {
        return SampleRegion::Rect {
            x0: g.x0,
            y0: g.y0,
            x1: g.x1,
            y1: g.y1,
        };
    }
    match kind {
        MapKind::StretchH => SampleRegion::StretchCone,
        // the lower half-plane branch; the upper half inherits the stretch
        // figures, which `--map h` reports directly
        MapKind::DyadicF => SampleRegion::Rect { x0: -2.0, y0: -2.0, x1: 2.0, y1: -0.1 },
        MapKind::DegreeG => SampleRegion::Rect { x0: -3.0, y0: -3.0, x1: 3.0, y1: 3.0 },
        MapKind::PolyP => SampleRegion::Rect { x0: -2.0, y0: -2.0, x1: 2.0, y1: 2.0 },
        MapKind::TranscendentalFt => SampleRegion::Rect { x0: -2.0, y0: -3.0, x1: 2.0, y1: 2.0 },
    }
}

struct CheckOutcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

/// All checks applicable to the resolved map, or the named subset.
fn run_verify(resolved: &Resolved, selected: Option<&[String]>) -> Result<Vec<CheckOutcome>, String> {
    let kind = resolved.spec.kind;
    let all: &[&str] = match kind {
        MapKind::StretchH => &["identity-w0", "jacobian-bound", "growth-bound", "seam-continuity", "dilatation"],
        MapKind::DyadicF => &["im-halving", "diamond-halving", "lemma-exit", "seam-continuity", "dilatation"],
        MapKind::DegreeG => &["seam-continuity", "degree", "dilatation"],
        MapKind::PolyP => &[
            "diamond-step",
            "lemma-exit",
            "symmetry",
            "boundary-escape",
            "degree",
            "julia-distinction",
            "seeds-escape",
            "seam-continuity",
        ],
        MapKind::TranscendentalFt => &[
            "seam-continuity",
            "growth-ftilde",
            "bounded-wandering",
            "saddle",
        ],
    };
    let wanted: Vec<&str> = match selected {
        Some(names) => {
            let mut out = Vec::new();
            for name in names {
                let name = name.as_str();
                if !all.contains(&name) {
                    return Err(format!(
                        "check `{name}` is not available for map `{}` (available: {})",
                        kind.flag_name(),
                        all.join(", ")
                    ));
                }
                out.push(all[all.iter().position(|c| *c == name).unwrap()]);
            }
            out
        }
        None => all.to_vec(),
    };
    let mut outcomes = Vec::new();
    for name in wanted {
        outcomes.push(run_one_check(resolved, name)?);
    }
    Ok(outcomes)
}

fn run_one_check(resolved: &Resolved, name: &'static str) -> Result<CheckOutcome, String> {
    let spec = &resolved.spec;
    let cfg = &resolved.dynamics;
    let seeds = &resolved.seeds;
    let ok = |pass: bool, detail: String| Ok(CheckOutcome { name, pass, detail });
    match name {
        "identity-w0" => {
            let r = checks::stretch_identity_check(10_000);
            ok(r.pass, format!("max |h(z)-z| = {:.2e} over {} diamond samples", r.max_deviation, r.samples))
        }
        "jacobian-bound" => {
            let r = qrdyn::qc::jacobian_bound_check(200_000, 1e-6).map_err(|e| e.to_string())?;
            ok(r.pass, format!("min J (analytic) = {:.6}, min J (fd) = {:.6}", r.min_analytic, r.min_fd))
        }
        "growth-bound" => {
            let r = checks::stretch_growth_check(1000, 20, resolved.seed);
            ok(r.pass, format!("max relative shortfall {:.2e} over {} seeds", r.max_rel_shortfall, r.seeds))
        }
        "dilatation" => {
            let region = default_region(spec.kind, None);
            let r = estimate_dilatation(spec, &region, 20_000, 1e-6).map_err(|e| e.to_string())?;
            let pass = r.sup_op_norm.is_finite() && r.sup_local_k >= 1.0 - 1e-9;
            ok(pass, format!(
                "sup |Df| = {:.4}, sup K = {:.4}, K_hat = {:.4} ({} samples)",
                r.sup_op_norm, r.sup_local_k, r.k_hat, r.n_samples
            ))
        }
        "im-halving" => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(resolved.seed);
            let mut worst = 0.0f64;
            for _ in 0..100_000 {
                let z = Complex64::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
                let w = qrdyn::maps::dyadic_map(z);
                let ulps = (w.im - z.im * 0.5).abs() / (z.im.abs() * 0.5 * f64::EPSILON).max(f64::MIN_POSITIVE);
                worst = worst.max(ulps);
            }
            ok(worst <= 1.0, format!("max halving error {worst:.3} ulp over 100000 points"))
        }
        "diamond-halving" => {
            let mut worst = 0.0f64;
            for k in 0..=30u32 {
                for z in qrdyn::Diamond::new(k).interior_samples(300) {
                    let w = qrdyn::maps::dyadic_map(z);
                    worst = worst.max((w - z.scale(0.5)).norm());
                }
            }
            ok(worst <= 1e-15, format!("max |f(z) - z/2| = {worst:.2e} on the diamonds"))
        }
        "lemma-exit" => {
            let r = checks::exit_time_check(1000, resolved.seed).map_err(|e| e.to_string())?;
            let worked = qrdyn::dynamics::first_exit_time(Complex64::new(0.3, 0.75))
                .map_err(|e| e.to_string())?;
            ok(r.pass && worked == 3, format!("max exit time {} over {} seeds; worked seed exits at {}", r.max_exit_time, r.seeds, worked))
        }
        "diamond-step" => {
            let mut worst = 0.0f64;
            let mut pass = true;
            for k in 0..=10 {
                let r = checks::verify_diamond_step(spec, k, 1000).map_err(|e| e.to_string())?;
                worst = worst.max(r.max_boundary_deviation);
                pass &= r.pass;
            }
            ok(pass, format!("max boundary deviation {worst:.2e} over scales 0..=10"))
        }
        "symmetry" => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(resolved.seed);
            let mut worst = 0.0f64;
            for _ in 0..10_000 {
                let z = Complex64::new(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));
                let lhs = qrdyn::maps::poly_map(Complex64::new(-z.re, z.im), spec);
                let rhs = -qrdyn::maps::poly_map(z, spec).conj();
                worst = worst.max((lhs - rhs).norm());
            }
            ok(worst <= 1e-12, format!("max mirror defect {worst:.2e} over 10000 points"))
        }
        "boundary-escape" => {
            let mut pass = true;
            let mut detail = String::new();
            for eta in [resolved.eta, 0.0] {
                let r = checks::boundary_escape_probe(spec, 5, eta, seeds, cfg, 100)
                    .map_err(|e| e.to_string())?;
                pass &= r.pass;
                write!(detail, "eta={eta:.0e}: {}/{} escaped; ", r.shifted_escaped, r.samples)
                    .expect("string write");
            }
            ok(pass, detail)
        }
        "degree" => {
            let deg = winding_degree(spec, Complex64::new(0.0, 0.0), 10.0, Complex64::new(0.0, 0.0), 4096)
                .map_err(|e| e.to_string())?;
            ok(deg == spec.d as i64, format!("winding degree {deg}, parameter d = {}", spec.d))
        }
        "julia-distinction" => {
            let r = checks::julia_distinction_probe(spec, 6, 1e-3, 30, 500, cfg)
                .map_err(|e| e.to_string())?;
            ok(r.pass, format!(
                "parent visits {}, split {}/{}/{} escaped/converged/undecided",
                r.parent_visits, r.escaped, r.converged, r.undecided
            ))
        }
        "seeds-escape" => {
            let r = checks::seed_escape_check(spec, seeds, cfg, 1000, resolved.seed)
                .map_err(|e| e.to_string())?;
            ok(r.pass, format!("{}/{} seed points escaped", r.escaped, r.samples))
        }
        "seam-continuity" => {
            let r = checks::seam_continuity_check(spec, 200).map_err(|e| e.to_string())?;
            ok(r.pass, format!("max two-sided gap {:.2e} over {} probes", r.max_gap, r.probes))
        }
        "growth-ftilde" => {
            let rows = checks::growth_check_ftilde(spec, &[2.5, 3.0, 3.5]).map_err(|e| e.to_string())?;
            let worst = rows.iter().map(|r| r.rel_deviation).fold(0.0, f64::max);
            let pass = rows.iter().all(|r| r.rel_deviation <= checks::GROWTH_REL_DEV_MAX && !r.saturated);
            ok(pass, format!("max relative deviation {worst:.4} at r in {{2.5, 3, 3.5}}"))
        }
        "bounded-wandering" => {
            let r = checks::bounded_wandering_check(spec, 5, 200, 60, 1e-9).map_err(|e| e.to_string())?;
            ok(r.pass, format!(
                "max modulus {:.3}, slowest orbit {} steps, {} failures",
                r.max_modulus, r.max_steps_to_tol, r.failures
            ))
        }
        "saddle" => {
            let r = checks::saddle_check(spec, cfg).map_err(|e| e.to_string())?;
            ok(r.pass, format!(
                "{}/{} axis orbits converged, {}/{} real orbits escaped",
                r.axis_converged, r.axis_samples, r.real_escaped, r.real_samples
            ))
        }
        other => Err(format!("unknown check `{other}`")),
    }
}
