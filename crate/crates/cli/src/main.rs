//! `itekit` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 negative
//! verdict (not elliptic, failed self-check, not strongly periodic).

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use itekit::billiards::{
    self, exterior_correspondence, measure_estimate, periodicity_probe, segments_json, trace_branching, trace_path,
    Ham, PathClass, PeriodicOrbit, PhasePoint, Tolerances,
};
use itekit::ellipticity::{self, Verdict};
use itekit::geometry::{Domain, Medium, ProblemConfig};
use itekit::radial_ite::{assemble_spectrum, Provenance, RadialProblem, DEFAULT_STRIP_HEIGHT};
use itekit::report::fmt17;
use itekit::smatrix::{self, eigenphase_flow, scan_unit_crossings, CrossingReport};
use itekit::weyl::{self, alpha_closed, alpha_quadrature, main_term_ratio, remainder_fit, WeylConstant};

use output::{Header, OutDir};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Io(String),
    Compute(String),
    /// Computation finished but the result is negative.
    Verdict(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verdict(_) => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Compute(m) => write!(f, "error: {m}"),
            CliError::Verdict(m) => write!(f, "{m}"),
        }
    }
}

fn compute<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Compute(e.to_string())
}

#[derive(Parser)]
#[command(name = "itekit", version, about = "Interior transmission eigenvalues, Weyl counting, branching billiards and partial-wave scattering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Seed for randomized commands; recorded in every header.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: one per core).
    #[arg(long, global = true, env = "ITEKIT_WORKERS")]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Parameter-ellipticity check of the boundary conditions.
    Ellipticity {
        config: PathBuf,
        #[arg(long, default_value_t = ellipticity::DEFAULT_SAMPLES)]
        samples: usize,
    },
    /// Weyl constant, in closed form when available and by quadrature.
    WeylConstant {
        config: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        quad_tol: f64,
    },
    /// Interior transmission eigenvalues of a disk or ball.
    IteSolve {
        config: PathBuf,
        #[arg(long)]
        t_max: f64,
        /// Also count complex eigenvalues with the argument principle.
        #[arg(long)]
        complex: bool,
        #[arg(long, default_value_t = DEFAULT_STRIP_HEIGHT)]
        strip_height: f64,
        /// Also scan the negative real axis.
        #[arg(long)]
        negative: bool,
    },
    /// Counting function against the Weyl main term, with a remainder fit.
    WeylVerify {
        config: PathBuf,
        #[arg(long)]
        t_max: f64,
        /// Count real eigenvalues only.
        #[arg(long)]
        real_only: bool,
        #[arg(long, default_value_t = DEFAULT_STRIP_HEIGHT)]
        strip_height: f64,
        /// Remainder window `T1 T2` (default: `min(100, t_max/2)` to `t_max`).
        #[arg(long, num_args = 2, value_names = ["T1", "T2"])]
        window: Option<Vec<f64>>,
        /// Rows in the table.
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
    /// Branching billiards.
    Billiard {
        #[command(subcommand)]
        action: BilliardCommand,
    },
    /// S-matrix eigenvalues and their crossings through 1.
    Smatrix {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        m_min: u32,
        #[arg(long, default_value_t = 10)]
        m_max: u32,
        #[arg(long, default_value_t = 0.05)]
        k_min: f64,
        #[arg(long)]
        k_max: f64,
        #[arg(long, default_value_t = 200)]
        grid: usize,
    },
}

#[derive(Subcommand)]
enum BilliardCommand {
    /// One non-splitting trajectory following a branch policy.
    Trace {
        config: PathBuf,
        #[command(flatten)]
        init: InitArgs,
        /// Bits, `1` = refract when possible; cycled. Empty means always specular.
        #[arg(long, default_value = "")]
        policy: String,
        #[arg(long, default_value_t = 100.0)]
        t_max: f64,
        #[command(flatten)]
        tol: TolArgs,
        #[arg(long)]
        svg: bool,
    },
    /// Full branching tree with deduplicated segments.
    Branch {
        config: PathBuf,
        #[command(flatten)]
        init: InitArgs,
        #[arg(long, default_value_t = 20)]
        depth: usize,
        #[command(flatten)]
        tol: TolArgs,
        #[arg(long)]
        svg: bool,
        /// Also build the exterior trajectory (needs strong periodicity).
        #[arg(long)]
        exterior: bool,
    },
    /// Monte Carlo estimate of dead-end and periodic fractions.
    Measure {
        config: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 50.0)]
        t_max: f64,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Return distances of perturbed starts along a periodic trajectory.
    Probe {
        config: PathBuf,
        #[command(flatten)]
        init: InitArgs,
        #[arg(long, default_value = "")]
        policy: String,
        /// Perturbation sizes.
        #[arg(long, value_delimiter = ',', default_value = "0,1e-2,3e-3,1e-3,3e-4,1e-4")]
        rho: Vec<f64>,
        #[command(flatten)]
        tol: TolArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum HamArg {
    H1,
    H2,
}

#[derive(Args)]
struct InitArgs {
    /// Start point, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    x: String,
    /// Momentum direction, comma separated; rescaled to h = 1.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "angle")]
    dir: Option<String>,
    /// For boundary starts in the plane: degrees from the inward normal,
    /// counter-clockwise.
    #[arg(long, allow_hyphen_values = true)]
    angle: Option<f64>,
    #[arg(long, value_enum, default_value = "h1")]
    ham: HamArg,
}

#[derive(Args)]
struct TolArgs {
    #[arg(long, default_value_t = itekit::geometry::DEFAULT_TOL_GRAZE)]
    tol_graze: f64,
    #[arg(long, default_value_t = billiards::DEFAULT_TOL_CLOSE)]
    tol_close: f64,
    #[arg(long, default_value_t = billiards::DEFAULT_DEDUP_TOL)]
    dedup_tol: f64,
    #[arg(long, default_value_t = billiards::DEFAULT_T_MIN)]
    t_min: f64,
    #[arg(long, default_value_t = billiards::DEFAULT_MAX_EVENTS)]
    max_events: usize,
}

impl TolArgs {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            tol_graze: self.tol_graze,
            tol_close: self.tol_close,
            dedup_tol: self.dedup_tol,
            t_min: self.t_min,
            max_events: self.max_events,
            ..Tolerances::default()
        }
    }
}

struct Loaded {
    bytes: Vec<u8>,
    config: ProblemConfig,
}

impl Loaded {
    fn read(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let config = ProblemConfig::from_json(text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(Loaded { bytes, config })
    }

    fn domain(&self) -> Result<Domain, CliError> {
        self.config.domain().map_err(|e| CliError::Config(e.to_string()))
    }

    fn medium(&self) -> Result<Medium, CliError> {
        self.config.medium().map_err(|e| CliError::Config(e.to_string()))
    }

    fn radial(&self) -> Result<RadialProblem, CliError> {
        RadialProblem::from_config(&self.config).map_err(|e| CliError::Config(format!("unsupported: {e}")))
    }

    fn header(&self, command: &str, seed: u64, tolerances: Value) -> Header {
        Header::new(command, Some(&self.bytes), seed, tolerances)
    }
}

fn parse_vector(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| CliError::Usage(format!("{what}: '{t}': {e}"))))
        .collect()
}

fn parse_policy(s: &str) -> Result<Vec<bool>, CliError> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(CliError::Usage(format!("policy must be a string of 0 and 1, got '{s}'"))),
        })
        .collect()
}

/// Initial phase point and whether it had to be rescaled to `h = 1`.
fn initial_point(init: &InitArgs, medium: &Medium, domain: &Domain) -> Result<(PhasePoint, bool), CliError> {
    let x = nalgebra::DVector::from_vec(parse_vector(&init.x, "--x")?);
    if x.len() != domain.dimension() {
        return Err(CliError::Usage(format!("--x needs {} coordinates", domain.dimension())));
    }
    let level = domain.level(&x);
    if level > 1e-9 {
        return Err(CliError::Usage("start point lies outside the domain".into()));
    }
    let on_boundary = level.abs() <= 1e-9;
    let dir = match (&init.dir, init.angle) {
        (Some(d), None) => nalgebra::DVector::from_vec(parse_vector(d, "--dir")?),
        (None, Some(deg)) => {
            if !on_boundary || domain.dimension() != 2 {
                return Err(CliError::Usage("--angle needs a boundary start in the plane".into()));
            }
            let frame = domain.frame_at_point(&x).map_err(compute)?;
            let inward = -&frame.normal;
            let t = &frame.tangents[0];
            // counter-clockwise from the inward normal
            let ccw = if inward[0] * t[1] - inward[1] * t[0] > 0.0 { t.clone() } else { -t };
            let (s, c) = deg.to_radians().sin_cos();
            inward * c + ccw * s
        }
        _ => return Err(CliError::Usage("give exactly one of --dir and --angle".into())),
    };
    if dir.len() != domain.dimension() {
        return Err(CliError::Usage(format!("--dir needs {} components", domain.dimension())));
    }
    let ham = match init.ham {
        HamArg::H1 => Ham::H1,
        HamArg::H2 => Ham::H2,
    };
    if on_boundary {
        let frame = domain.frame_at_point(&x).map_err(compute)?;
        let v = billiards::group_velocity(ham, medium, &x, &dir);
        if v.dot(&frame.normal) >= 0.0 {
            return Err(CliError::Usage("direction from a boundary start must point into the domain".into()));
        }
    }
    let h = billiards::hamiltonian(ham, medium, &x, &dir);
    let p = PhasePoint::normalized(ham, medium, x, &dir).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok((p, (h - 1.0).abs() > 1e-8))
}

fn billiard_tolerances(tol: &Tolerances) -> Value {
    serde_json::to_value(tol).expect("tolerances serialize")
}

fn init_json(p: &PhasePoint, rescaled: bool) -> Value {
    json!({
        "x": p.x.iter().copied().collect::<Vec<_>>(),
        "xi": p.xi.iter().copied().collect::<Vec<_>>(),
        "hamiltonian": p.ham,
        "rescaled_to_unit_hamiltonian": rescaled,
    })
}

fn class_summary(class: &PathClass) -> String {
    match class {
        PathClass::Ordinary => "ordinary".into(),
        PathClass::DeadEnd { reason } => format!("dead end ({})", serde_json::to_value(reason).unwrap().as_str().unwrap()),
        PathClass::Periodic { period, segments } => format!("periodic, period {}, {segments} segments", fmt17(*period)),
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let mut out = OutDir::create(&cli.out)?;
    let seed = cli.seed;
    match cli.command {
        Command::Ellipticity { config, samples } => {
            let l = Loaded::read(&config)?;
            let report = ellipticity::check_domain(&l.medium()?, &l.domain()?, samples).map_err(compute)?;
            let header = l.header("ellipticity", seed, json!({ "samples": samples, "margin": report.margin }));
            out.json("ellipticity.json", &header, &report)?;
            println!(
                "verdict: {} (min |c1| = {}, min c2 = {}, failing points {}/{})",
                report.verdict.as_str(),
                fmt17(report.min_abs_c1),
                fmt17(report.min_c2),
                report.failing_points,
                report.samples
            );
            Ok(match report.verdict {
                Verdict::EllipticSigmaPlus | Verdict::EllipticSigmaMinus => 0,
                _ => 2,
            })
        }
        Command::WeylConstant { config, quad_tol } => {
            let l = Loaded::read(&config)?;
            let (domain, medium) = (l.domain()?, l.medium()?);
            let quad = alpha_quadrature(&medium, &domain, quad_tol).map_err(compute)?;
            let closed = closed_alpha(&domain, &medium)?;
            let header = l.header("weyl-constant", seed, json!({ "quad_tol": quad_tol }));
            out.json("weyl_constant.json", &header, &json!({ "closed_form": closed, "quadrature": quad }))?;
            if let Some(c) = closed {
                println!("alpha (closed form) = {}", fmt17(c.alpha));
            }
            println!("alpha (quadrature)  = {} ± {}", fmt17(quad.alpha), fmt17(quad.error_estimate));
            Ok(0)
        }
        Command::IteSolve { config, t_max, complex, strip_height, negative } => {
            let l = Loaded::read(&config)?;
            let problem = l.radial()?;
            check_t_max(t_max)?;
            let mut spectrum = assemble_spectrum(&problem, t_max, complex, strip_height).map_err(compute)?;
            if negative {
                spectrum.add_negative(0.0);
            }
            let tol = json!({ "root_tol": "adjacent floats", "strip_height": complex.then_some(strip_height) });
            let header = l.header("ite-solve", seed, tol);
            let mut csv = Vec::new();
            spectrum.write_csv(&mut csv).map_err(|e| CliError::Io(e.to_string()))?;
            out.csv("spectrum.csv", &header, &csv)?;
            let count = |p: Provenance| spectrum.entries.iter().filter(|e| e.provenance == p).map(|e| e.multiplicity as u64).sum::<u64>();
            let summary = json!({
                "problem": problem,
                "t_max": t_max,
                "region": spectrum.region,
                "count_with_multiplicity": spectrum.len_with_multiplicity(),
                "real": count(Provenance::RealScan),
                "complex": count(Provenance::ArgumentPrincipleCell),
                "negative": count(Provenance::NegativeScan),
            });
            out.json("ite_summary.json", &header, &summary)?;
            println!(
                "{} eigenvalues with multiplicity (|λ| ≤ {}): {} real, {} complex, {} negative",
                spectrum.len_with_multiplicity(),
                t_max,
                count(Provenance::RealScan),
                count(Provenance::ArgumentPrincipleCell),
                count(Provenance::NegativeScan)
            );
            Ok(0)
        }
        Command::WeylVerify { config, t_max, real_only, strip_height, window, points } => {
            let l = Loaded::read(&config)?;
            let problem = l.radial()?;
            check_t_max(t_max)?;
            let (domain, medium) = (l.domain()?, l.medium()?);
            let closed = closed_alpha(&domain, &medium)?.expect("radial problems have constant coefficients");
            let quad = alpha_quadrature(&medium, &domain, 1e-10).map_err(compute)?;
            let spectrum = assemble_spectrum(&problem, t_max, !real_only, strip_height).map_err(compute)?;
            let n = spectrum.counting().map_err(compute)?;
            let (t1, t2) = match window.as_deref() {
                Some([a, b]) => (*a, *b),
                _ => ((t_max / 2.0).min(100.0), t_max),
            };
            let points = points.max(1);
            let ts: Vec<f64> = (1..=points).map(|i| t_max * i as f64 / points as f64).collect();
            let rows = weyl::table(&n, &closed, &ts).map_err(compute)?;
            let fit = remainder_fit(&n, &closed, (t1, t2)).map_err(compute)?;
            let ratio = main_term_ratio(&n, &closed, t_max).map_err(compute)?;
            let tol = json!({ "strip_height": (!real_only).then_some(strip_height), "quad_tol": 1e-10 });
            let header = l
                .header("weyl-verify", seed, tol)
                .note("alpha_closed_form", fmt17(closed.alpha))
                .note("alpha_quadrature", fmt17(quad.alpha));
            let mut csv = Vec::new();
            weyl::write_csv(&mut csv, &rows).map_err(|e| CliError::Io(e.to_string()))?;
            out.csv("weyl.csv", &header, &csv)?;
            let summary = json!({
                "alpha_closed_form": closed.alpha,
                "alpha_quadrature": quad.alpha,
                "t_max": t_max,
                "count": n.count(t_max).map_err(compute)?,
                "ratio": ratio,
                "region": spectrum.region,
                "remainder": { "c_hat": fit.c_hat, "t_at_sup": fit.t_at_sup, "window": fit.window },
            });
            out.json("weyl_summary.json", &header, &summary)?;
            println!("alpha = {} (quadrature {})", fmt17(closed.alpha), fmt17(quad.alpha));
            println!("N({t_max}) = {}, N/(alpha t^(d/2)) = {}", n.count(t_max).map_err(compute)?, fmt17(ratio));
            println!("C_hat over [{t1}, {t2}] = {} at t = {}", fmt17(fit.c_hat), fmt17(fit.t_at_sup));
            if let Some(h) = spectrum.region.strip_height {
                println!("complex eigenvalues counted in |Im k| <= {h}");
            }
            Ok(0)
        }
        Command::Billiard { action } => run_billiard(action, &mut out, seed),
        Command::Smatrix { config, m_min, m_max, k_min, k_max, grid } => {
            let l = Loaded::read(&config)?;
            let problem = l.radial()?;
            if m_min > m_max {
                return Err(CliError::Usage("m_min must not exceed m_max".into()));
            }
            let tol = json!({ "match_tol": smatrix::MATCH_TOL, "max_phase_step": "pi/8", "unit_modulus_tol": 1e-8 });
            let header = l.header("smatrix", seed, tol);
            let (flows, reports) = if k_min < k_max {
                let results: Result<Vec<_>, _> = (m_min..=m_max)
                    .into_par_iter()
                    .map(|m| {
                        Ok::<_, smatrix::SmatrixError>((
                            eigenphase_flow(&problem, m, (k_min, k_max), grid)?,
                            scan_unit_crossings(&problem, m, (k_min, k_max), grid)?,
                        ))
                    })
                    .collect();
                results.map_err(compute)?.into_iter().unzip()
            } else {
                (Vec::new(), Vec::<CrossingReport>::new())
            };
            let mut csv = Vec::new();
            smatrix::write_csv(&mut csv, &flows).map_err(|e| CliError::Io(e.to_string()))?;
            out.csv("smatrix.csv", &header, &csv)?;
            let max_modulus_error = flows
                .iter()
                .flat_map(|f| f.samples.iter())
                .map(|s| (s.z.norm() - 1.0).abs())
                .fold(0.0, f64::max);
            let max_mismatch = reports
                .iter()
                .flat_map(|r| r.crossings.iter())
                .filter_map(|c| c.matched_root.map(|r| (r - c.k).abs()))
                .fold(0.0, f64::max);
            let unmatched_crossings: usize =
                reports.iter().map(|r| r.crossings.iter().filter(|c| c.matched_root.is_none()).count()).sum();
            let unmatched_roots: usize = reports.iter().map(|r| r.unmatched_roots.len()).sum();
            let crossings: usize = reports.iter().map(|r| r.crossings.len()).sum();
            #[derive(Serialize)]
            struct Report<'a> {
                k_range: (f64, f64),
                crossings: usize,
                max_mismatch: f64,
                max_modulus_error: f64,
                unmatched_crossings: usize,
                unmatched_roots: usize,
                orders: &'a [CrossingReport],
            }
            let report = Report {
                k_range: (k_min, k_max),
                crossings,
                max_mismatch,
                max_modulus_error,
                unmatched_crossings,
                unmatched_roots,
                orders: &reports,
            };
            out.json("crossings.json", &header, &report)?;
            println!(
                "{crossings} crossings of z = 1, max mismatch {} against determinant roots, max ||z| - 1| = {}",
                fmt17(max_mismatch),
                fmt17(max_modulus_error)
            );
            if max_modulus_error > 1e-8 {
                return Err(CliError::Verdict(format!("self-check failed: ||z| - 1| = {max_modulus_error:e}")));
            }
            if unmatched_crossings + unmatched_roots > 0 {
                return Err(CliError::Verdict(format!(
                    "{unmatched_crossings} crossings without a determinant root, {unmatched_roots} roots without a crossing"
                )));
            }
            Ok(0)
        }
    }
}

fn check_t_max(t_max: f64) -> Result<(), CliError> {
    if t_max > 0.0 && t_max.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("t_max must be positive, got {t_max}")))
    }
}

fn closed_alpha(domain: &Domain, medium: &Medium) -> Result<Option<WeylConstant>, CliError> {
    match medium.isotropic_constant() {
        Some((a, n)) => Ok(Some(alpha_closed(domain.volume(), a, n, domain.dimension()).map_err(compute)?)),
        None => Ok(None),
    }
}

fn run_billiard(action: BilliardCommand, out: &mut OutDir, seed: u64) -> Result<u8, CliError> {
    match action {
        BilliardCommand::Trace { config, init, policy, t_max, tol, svg } => {
            let l = Loaded::read(&config)?;
            let (domain, medium) = (l.domain()?, l.medium()?);
            let (p, rescaled) = initial_point(&init, &medium, &domain)?;
            let tol = tol.tolerances();
            let bits = parse_policy(&policy)?;
            let r = trace_path(&p, &bits, &medium, &domain, &tol, t_max).map_err(compute)?;
            let header = l.header("billiard trace", seed, billiard_tolerances(&tol));
            let body = json!({
                "init": init_json(&p, rescaled),
                "policy": policy,
                "t_max": t_max,
                "classification": r.class,
                "elapsed": r.elapsed,
                "closure": r.closure,
                "choices": r.choices,
                "segments": segments_json(&r.segments),
            });
            out.json("trajectory.json", &header, &body)?;
            if svg {
                out.svg("trajectory.svg", &header, &billiards::svg(&domain, &r.segments, None).map_err(compute)?)?;
            }
            if rescaled {
                println!("note: initial momentum rescaled to h = 1");
            }
            println!("{}, {} events, elapsed {}", class_summary(&r.class), r.choices.len(), fmt17(r.elapsed));
            Ok(0)
        }
        BilliardCommand::Branch { config, init, depth, tol, svg, exterior } => {
            let l = Loaded::read(&config)?;
            let (domain, medium) = (l.domain()?, l.medium()?);
            let (p, rescaled) = initial_point(&init, &medium, &domain)?;
            let tol = tol.tolerances();
            let tree = trace_branching(&p, depth, &medium, &domain, &tol).map_err(compute)?;
            let header = l.header("billiard branch", seed, billiard_tolerances(&tol));
            let body = json!({
                "init": init_json(&p, rescaled),
                "depth": depth,
                "strongly_periodic": tree.strongly_periodic,
                "truncated": tree.truncated,
                "dead_ends": tree.dead_ends,
                "closure_residual": tree.closure_residual,
                "lead_in_counted": tree.lead_in_counted,
                "distinct_by_depth": tree.distinct_by_depth,
                "nodes": tree.nodes.len(),
                "segments": segments_json(&tree.distinct),
            });
            out.json("branch.json", &header, &body)?;
            if svg {
                out.svg("branch.svg", &header, &billiards::svg(&domain, &tree.distinct, None).map_err(compute)?)?;
            }
            if rescaled {
                println!("note: initial momentum rescaled to h = 1");
            }
            if tree.strongly_periodic {
                println!("strongly periodic, {} segments", tree.distinct.len());
            } else {
                println!(
                    "not strongly periodic, {} distinct segments at depth {depth}{}",
                    tree.distinct.len(),
                    if tree.truncated { " (tree truncated)" } else { "" }
                );
            }
            if exterior {
                let ext = exterior_correspondence(&tree, tol.dedup_tol).map_err(|e| CliError::Verdict(e.to_string()))?;
                let rays: Vec<Value> = ext
                    .rays
                    .iter()
                    .map(|r| {
                        json!({
                            "origin": r.origin.iter().copied().collect::<Vec<_>>(),
                            "direction": r.direction.iter().copied().collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                out.json("exterior.json", &header, &json!({ "kept": segments_json(&ext.kept), "rays": rays }))?;
                if svg {
                    out.svg("exterior.svg", &header, &billiards::svg(&domain, &ext.kept, Some(&ext)).map_err(compute)?)?;
                }
                println!("exterior: {} kept h2 chords, {} rays", ext.kept.len(), ext.rays.len());
            }
            Ok(0)
        }
        BilliardCommand::Measure { config, samples, t_max, tol } => {
            let l = Loaded::read(&config)?;
            let (domain, medium) = (l.domain()?, l.medium()?);
            let tol = tol.tolerances();
            let est = measure_estimate(&medium, &domain, seed, samples, t_max, &tol).map_err(|e| match e {
                billiards::BilliardError::InvalidArgument(m) => CliError::Usage(m),
                e => compute(e),
            })?;
            let header = l.header("billiard measure", seed, billiard_tolerances(&tol));
            out.json("measure.json", &header, &est)?;
            println!(
                "dead-end fraction {} (95% CI [{}, {}]), periodic fraction {} (95% CI [{}, {}]), {} samples",
                fmt17(est.dead_end_fraction),
                fmt17(est.dead_end_ci95.0),
                fmt17(est.dead_end_ci95.1),
                fmt17(est.periodic_fraction),
                fmt17(est.periodic_ci95.0),
                fmt17(est.periodic_ci95.1),
                est.samples
            );
            Ok(0)
        }
        BilliardCommand::Probe { config, init, policy, rho, tol } => {
            let l = Loaded::read(&config)?;
            let (domain, medium) = (l.domain()?, l.medium()?);
            let (p, _) = initial_point(&init, &medium, &domain)?;
            let tol = tol.tolerances();
            let r = trace_path(&p, &parse_policy(&policy)?, &medium, &domain, &tol, 1e6).map_err(compute)?;
            let orbit = PeriodicOrbit::from_trace(&p, &r, &domain)
                .ok_or_else(|| CliError::Verdict(format!("start is not a boundary-started periodic path: {}", class_summary(&r.class))))?;
            let rep = periodicity_probe(&orbit, &rho, &medium, &domain, &tol).map_err(compute)?;
            let header = l.header("billiard probe", seed, billiard_tolerances(&tol));
            out.json("probe.json", &header, &rep)?;
            match rep.slope {
                Some(s) => println!("empirical vanishing order {} over {} feasible radii", fmt17(s), rep.local_slopes.len() + 1),
                None => println!("not enough feasible radii for a slope"),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("usage error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
