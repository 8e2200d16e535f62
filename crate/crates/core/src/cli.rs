//! Command-line front end.
//!
//! Every subcommand prints a versioned JSON report (to stdout or `--report`)
//! and exits with [`EXIT_PASS`] when all of its checks hold,
//! [`EXIT_CHECK_FAILED`] when a check fails, [`EXIT_USAGE`] for malformed
//! flags, configs or parameters, and [`EXIT_RUNTIME`] for I/O or solver
//! failures.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use crate::boundary::{
    an_spectrum, choose_b, dissipativity_scan, find_mu, kappa, lemma41_residue, q_poly, sup_gamma, BoundaryFrame,
    BoundarySpace,
};
use crate::diffops::{maxwell_residual_batch, FdOrder, FdScheme};
use crate::error::Error;
use crate::fields::{eval_csv, eval_e, eval_pair, SpacetimePoint};
use crate::nogo::{
    azimuthal_tube_sweep, modulated_div_obstruction, quiet_spot_find, solution_divergence, ModulationCase, LABEL,
};
use crate::profiles::{exponential_rate, Profile, ProfileSpec};
use crate::quadrature::{decay_rate, energy_trace, ShellGrid};
use crate::radial::{self, init_from_profile, OuterBoundary, RadialGrid};
use crate::report::{emit_svg, energy_trace_rows, write_csv_file, write_output, Check, Report};
use crate::sampling::{annulus_points, halton4, sphere_point};
use crate::{e1, Vec3};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "vanishing-maxwell",
    version,
    about = "Explicit disappearing Maxwell solutions: checks and experiments"
)]
pub struct Cli {
    /// JSON file supplying defaults for any flag; unknown keys are rejected.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Finite-difference Maxwell residuals, the boundary identity and the boundary condition.
    Verify(VerifyArgs),
    /// Spectrum of the boundary symbol and sampled dissipativity of a boundary space.
    BoundaryScan(ScanArgs),
    /// Shell-quadrature energy and boundary flux over time.
    EnergyTrace(TraceArgs),
    /// Evolve the reduced radial system.
    Simulate(SimulateArgs),
    /// Modulated-wave obstruction, quiet spots and the axially singular profile.
    NogoDemo(NogoArgs),
    /// Evaluate (E, B) on CSV rows of (t, x1, x2, x3).
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Exponential,
    Bump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OuterKind {
    Analytic,
    Extrapolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NogoCase {
    Modulated,
    Quiet,
    Georgiev,
}

#[derive(Debug, Default, Args)]
pub struct ProfileArgs {
    #[arg(long, value_enum)]
    pub profile: Option<ProfileKind>,
    /// Boundary constant of the exponential family.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Support radius of the bump family (must exceed 1).
    #[arg(long)]
    pub b: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub order: Option<u32>,
    #[arg(long)]
    pub levels: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// `eps:<value>`, `eps` (the profile's ε), `gamma` or `gamma:<b>`.
    #[arg(long)]
    pub bc: Option<String>,
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long)]
    pub t1: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// CSV table of (t, energy, flux).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// SVG plot of log energy.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// `eps:<value>`, `eps`, `gamma` or `gamma:<b>`.
    #[arg(long)]
    pub bc: Option<String>,
    /// Choose the bump width so that sup |γ| ≤ delta/2.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "R", alias = "r-outer")]
    pub r_outer: Option<f64>,
    #[arg(long)]
    pub dr: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long, value_enum)]
    pub outer: Option<OuterKind>,
    /// CSV table of (t, energy, boundary_residual, constraint_residual).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NogoArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub case: Option<NogoCase>,
    #[arg(long)]
    pub points: Option<usize>,
    /// CSV table of the residuals or minimizers.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    /// Input CSV (stdin when absent).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Contents of a `--config` file. Every field is optional and is overridden
/// by the corresponding flag.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<String>,
    pub profile: Option<ProfileSpec>,
    pub boundary: Option<String>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub points: Option<usize>,
    pub samples: Option<usize>,
    pub eps: Option<f64>,
    pub case: Option<NogoCase>,
    pub scheme: Option<SchemeConfig>,
    pub radial: Option<RadialConfig>,
    pub trace: Option<TraceConfig>,
    pub report: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub tolerances: Option<Tolerances>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub step: Option<f64>,
    pub order: Option<u32>,
    pub levels: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialConfig {
    pub r_outer: Option<f64>,
    pub dr: Option<f64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub outer: Option<OuterKind>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    pub samples: Option<usize>,
}

/// Overrides for the default check thresholds.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Maxwell residual at the finest level.
    pub residual: Option<f64>,
    pub order_min: Option<f64>,
    pub order_max: Option<f64>,
    /// Boundary-condition residual relative to the field scale.
    pub boundary: Option<f64>,
    /// Relative error of a fitted decay rate.
    pub rate: Option<f64>,
    /// Energy level, relative to the initial energy, counted as vanished.
    pub vanish: Option<f64>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::UnsupportedOrder(_)
            | Error::InvalidInput(_)
            | Error::DegenerateInput(_)
            | Error::ConstructionInvalid(_)
            | Error::Json(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(None) => EXIT_PASS,
        Ok(Some(report)) => {
            if report.passed {
                EXIT_PASS
            } else {
                eprintln!("failed checks: {}", report.failed_checks().join(", "));
                EXIT_CHECK_FAILED
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_RUNTIME
        }
    }
}

fn load_config(path: Option<&Path>, command: &str) -> Outcome<ExperimentConfig> {
    let Some(path) = path else {
        return Ok(ExperimentConfig::default());
    };
    let text =
        std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?;
    if let Some(c) = &cfg.command {
        if c != command {
            return Err(usage(format!("config is for `{c}`, not `{command}`")));
        }
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Outcome<Option<Report>> {
    let name = match &cli.command {
        Command::Verify(_) => "verify",
        Command::BoundaryScan(_) => "boundary-scan",
        Command::EnergyTrace(_) => "energy-trace",
        Command::Simulate(_) => "simulate",
        Command::NogoDemo(_) => "nogo-demo",
        Command::Eval(_) => "eval",
    };
    let cfg = load_config(cli.config.as_deref(), name)?;
    let (report, common) = match &cli.command {
        Command::Verify(a) => (verify(a, &cfg)?, &a.common),
        Command::BoundaryScan(a) => (boundary_scan(a, &cfg)?, &a.common),
        Command::EnergyTrace(a) => (trace_command(a, &cfg)?, &a.common),
        Command::Simulate(a) => (simulate(a, &cfg)?, &a.common),
        Command::NogoDemo(a) => (nogo_demo(a, &cfg)?, &a.common),
        Command::Eval(a) => {
            eval_command(a, &cfg)?;
            return Ok(None);
        }
    };
    let path = common.report.clone().or(cfg.report.clone());
    write_output(path.as_deref(), &report.to_json()?)?;
    Ok(Some(report))
}

fn resolve_profile(args: &ProfileArgs, cfg: &ExperimentConfig, default: ProfileKind) -> Outcome<ProfileSpec> {
    let (cfg_kind, cfg_eps, cfg_b) = match cfg.profile {
        Some(ProfileSpec::Exponential { epsilon }) => (Some(ProfileKind::Exponential), Some(epsilon), None),
        Some(ProfileSpec::Bump { b }) => (Some(ProfileKind::Bump), None, Some(b)),
        None => (None, None, None),
    };
    let kind = args.profile.or(cfg_kind).unwrap_or(default);
    Ok(match kind {
        ProfileKind::Exponential => ProfileSpec::Exponential {
            epsilon: args.epsilon.or(cfg_eps).unwrap_or(0.25),
        },
        ProfileKind::Bump => ProfileSpec::Bump {
            b: args.b.or(cfg_b).unwrap_or(1.05),
        },
    })
}

fn tolerances(cfg: &ExperimentConfig) -> Tolerances {
    cfg.tolerances.clone().unwrap_or_default()
}

fn seed(common: &CommonArgs, cfg: &ExperimentConfig) -> u64 {
    common.seed.or(cfg.seed).unwrap_or(0)
}

/// Quasi-random points on the unit sphere.
fn sphere_samples(n: usize, seed: u64) -> Vec<Vec3> {
    (0..n as u64)
        .map(|i| {
            let [u, v, _, _] = halton4(1 + seed.wrapping_mul(7919) % 1_000_003 + i);
            sphere_point(u, v)
        })
        .collect()
}

fn verify(a: &VerifyArgs, cfg: &ExperimentConfig) -> Outcome<Report> {
    let spec = resolve_profile(&a.profile, cfg, ProfileKind::Exponential)?;
    let profile = spec.build()?;
    let sc = cfg.scheme.clone().unwrap_or_default();
    let scheme = FdScheme::new(
        a.step.or(sc.step).unwrap_or(1e-3),
        FdOrder::from_int(a.order.or(sc.order).unwrap_or(2))?,
        a.levels.or(sc.levels).unwrap_or(3),
    )?;
    let tol = tolerances(cfg);
    let n_points = a.points.or(cfg.points).unwrap_or(500);
    let points = annulus_points(n_points, (1.0, 3.0), (0.0, 2.0), seed(&a.common, cfg))?;

    let maxwell = maxwell_residual_batch(&profile, &points, &scheme)?;
    let divergence = solution_divergence(&profile, &points, &scheme)?;
    let expected_order = scheme.order.as_int() as f64;
    let order_lo = tol.order_min.unwrap_or(expected_order - 0.2);
    let order_hi = tol.order_max.unwrap_or(expected_order + 0.3);
    let order_check = |name: &str, r: &crate::diffops::ResidualReport| Check {
        name: name.into(),
        value: r.estimated_order,
        threshold: order_hi,
        passed: r.converges_within((order_lo, order_hi)),
    };

    let mut lemma_worst: f64 = 0.0;
    for (i, omega) in sphere_samples(20, 1).iter().enumerate() {
        for j in 0..20 {
            let rho = 1.0 + 2.0 * j as f64 / 19.0;
            for k in 0..10 {
                let t = 0.2 * k as f64 + 0.01 * i as f64;
                let (lhs, rhs) = lemma41_residue(&profile, &(omega * rho), t)?;
                lemma_worst = lemma_worst.max((lhs - rhs).norm() / (1.0 + rhs.norm()));
            }
        }
    }

    let boundary = match spec {
        ProfileSpec::Exponential { epsilon } => Some((BoundarySpace::eps(epsilon)?, 2.0)),
        ProfileSpec::Bump { b } => BoundarySpace::gamma(b).ok().map(|s| (s, b - 1.0)),
    };
    let mut checks = vec![
        order_check("maxwell_order", &maxwell),
        order_check("divergence_order", &divergence),
        Check::at_most(
            "maxwell_residual_finest",
            maxwell.finest(),
            tol.residual.unwrap_or(1e-5),
        ),
        Check::at_most("boundary_identity", lemma_worst, 1e-12),
    ];
    let mut bc_json = serde_json::Value::Null;
    if let Some((space, window)) = boundary {
        let mut worst: f64 = 0.0;
        for (i, omega) in sphere_samples(200, 2).iter().enumerate() {
            let t = window * (i as f64 + 0.5) / 200.0;
            let u = eval_pair(&profile, &SpacetimePoint::new(t, *omega)?);
            let scale = u.e.norm().max(u.b.norm());
            if scale > 0.0 {
                let frame = BoundaryFrame::new(*omega)?;
                worst = worst.max(space.residual(&u, &frame, t).norm() / scale);
            }
        }
        let threshold = tol.boundary.unwrap_or(match space {
            BoundarySpace::Eps { .. } => 1e-12,
            BoundarySpace::Gamma(_) => 1e-10,
        });
        checks.push(Check::at_most("boundary_condition_relative", worst, threshold));
        bc_json = json!({"space": space, "window": [0.0, window]});
    }
    let data = json!({
        "profile": spec,
        "scheme": {"step": scheme.step, "order": scheme.order.as_int(), "levels": scheme.levels},
        "maxwell": maxwell,
        "divergence": divergence,
        "boundary": bc_json,
    });
    Ok(Report::new("verify", checks, data))
}

fn boundary_scan(a: &ScanArgs, cfg: &ExperimentConfig) -> Outcome<Report> {
    let eps = a.eps.or(cfg.eps).unwrap_or(0.25);
    BoundarySpace::eps(eps)?;
    let samples = a.samples.or(cfg.samples).unwrap_or(100_000);
    let scan = dissipativity_scan(eps, samples, seed(&a.common, cfg))?;
    let mut spectrum_error: f64 = 0.0;
    for n in sphere_samples(100, 3) {
        let s = an_spectrum(&n);
        let expected = [-1.0, -1.0, 0.0, 0.0, 1.0, 1.0];
        for (x, y) in s.iter().zip(expected) {
            spectrum_error = spectrum_error.max((x - y).abs());
        }
    }
    let mu = find_mu(1000)?;
    let checks = vec![
        Check::at_most("spectrum_error", spectrum_error, 1e-10),
        Check::at_least("c_estimate", scan.c_estimate, f64::MIN_POSITIVE),
        Check::at_most("min_margin", scan.min_margin, -f64::MIN_POSITIVE),
        Check::within("dim_neps", scan.dim_neps as f64, 4.0, 4.0),
        Check::at_most("kernel_missing", if scan.kernel_contained { 0.0 } else { 1.0 }, 0.0),
        Check::at_most("rank_failures", scan.rank_failures as f64, 0.0),
        Check::within("q_at_one", q_poly(1.0, 1.0), 4.0, 4.0),
    ];
    let data = json!({
        "scan": scan,
        "kappa": kappa(),
        "mu": mu,
        "expected_c": 2.0 * (1.0 / (1.0 + eps)) / (1.0 + (1.0 / (1.0 + eps)).powi(2)),
    });
    Ok(Report::new("boundary-scan", checks, data))
}

fn parse_boundary(desc: &str, spec: &ProfileSpec) -> Outcome<BoundarySpace> {
    let (kind, value) = match desc.split_once(':') {
        Some((k, v)) => (
            k,
            Some(
                v.parse::<f64>()
                    .map_err(|_| usage(format!("bad boundary value in `{desc}`")))?,
            ),
        ),
        None => (desc, None),
    };
    match (kind, value, spec) {
        ("eps", Some(e), _) => Ok(BoundarySpace::eps(e)?),
        ("eps", None, ProfileSpec::Exponential { epsilon }) => Ok(BoundarySpace::eps(*epsilon)?),
        ("eps", None, ProfileSpec::Bump { .. }) => Err(usage("`eps` without a value needs the exponential profile")),
        ("gamma", Some(b), _) => Ok(BoundarySpace::gamma(b)?),
        ("gamma", None, ProfileSpec::Bump { b }) => Ok(BoundarySpace::gamma(*b)?),
        ("gamma", None, ProfileSpec::Exponential { .. }) => {
            Err(usage("`gamma` without a value needs the bump profile"))
        }
        _ => Err(usage(format!(
            "unknown boundary `{desc}`; use eps[:value] or gamma[:b]"
        ))),
    }
}

fn default_boundary(spec: &ProfileSpec) -> &'static str {
    match spec {
        ProfileSpec::Exponential { .. } => "eps",
        ProfileSpec::Bump { .. } => "gamma",
    }
}

fn trace_command(a: &TraceArgs, cfg: &ExperimentConfig) -> Outcome<Report> {
    let spec = resolve_profile(&a.profile, cfg, ProfileKind::Exponential)?;
    let profile = spec.build()?;
    let desc =
        a.bc.clone()
            .or(cfg.boundary.clone())
            .unwrap_or(default_boundary(&spec).into());
    let space = parse_boundary(&desc, &spec)?;
    let tc = cfg.trace.clone().unwrap_or_default();
    let t0 = a.t0.or(tc.t0).unwrap_or(0.0);
    let t1 = a.t1.or(tc.t1).unwrap_or(5.0);
    let samples = a.samples.or(tc.samples).or(cfg.samples).unwrap_or(101);
    if !(t1 > t0 && t0 >= 0.0) || samples < 2 {
        return Err(usage("need 0 ≤ t0 < t1 and at least 2 samples"));
    }
    let times: Vec<f64> = (0..samples)
        .map(|i| t0 + (t1 - t0) * i as f64 / (samples - 1) as f64)
        .collect();
    let grid = ShellGrid::default_for(&profile)?;
    let trace = energy_trace(&profile, &times, &grid, &space)?;
    let tol = tolerances(cfg);

    let e0 = trace.energy[0];
    let rise = trace
        .energy
        .windows(2)
        .map(|w| (w[1] - w[0]) / e0.max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    let max_flux = trace.flux.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut checks = vec![
        Check::at_most("energy_rise_relative", rise, 1e-8),
        Check::at_most("flux_max", max_flux, 1e-12 * e0),
    ];
    let mut fitted = serde_json::Value::Null;
    let mut expected = serde_json::Value::Null;
    match spec {
        ProfileSpec::Exponential { epsilon } => {
            let r = exponential_rate(epsilon)?;
            let rate = decay_rate(&trace)?;
            checks.push(Check::at_most(
                "rate_relative_error",
                (rate - r).abs() / r.abs(),
                tol.rate.unwrap_or(0.01),
            ));
            fitted = json!(rate);
            expected = json!(r);
        }
        ProfileSpec::Bump { b } => {
            let after = trace
                .times
                .iter()
                .zip(&trace.energy)
                .filter(|(t, _)| **t >= b - 1.0)
                .map(|(_, e)| *e)
                .fold(0.0, f64::max);
            checks.push(Check::at_most("energy_after_disappearance", after, 0.0));
        }
    }
    let out = a.out.clone().or(cfg.out.clone());
    if let Some(path) = &out {
        write_csv_file(path, &["t", "energy", "flux"], &energy_trace_rows(&trace))?;
    }
    if let Some(path) = a.svg.clone().or(cfg.svg.clone()) {
        emit_svg(&trace, &path)?;
    }
    let data = json!({
        "profile": spec,
        "boundary": space,
        "grid": grid,
        "fitted_rate": fitted,
        "expected_rate": expected,
        "trace": if out.is_none() { json!(trace) } else { serde_json::Value::Null },
    });
    Ok(Report::new("energy-trace", checks, data))
}

fn simulate(a: &SimulateArgs, cfg: &ExperimentConfig) -> Outcome<Report> {
    let desc = a.bc.clone().or(cfg.boundary.clone());
    let delta = a.delta.or(cfg.delta);
    let wants_gamma = desc.as_deref().is_some_and(|d| d.starts_with("gamma"));
    let default_kind = if wants_gamma || delta.is_some() {
        ProfileKind::Bump
    } else {
        ProfileKind::Exponential
    };
    let mut spec = resolve_profile(&a.profile, cfg, default_kind)?;
    if let Some(d) = delta {
        if !matches!(spec, ProfileSpec::Bump { .. }) {
            return Err(usage("--delta applies to the bump profile"));
        }
        if a.profile.b.is_some() {
            return Err(usage("give either --b or --delta, not both"));
        }
        spec = ProfileSpec::Bump { b: choose_b(d)? };
    }
    let profile = spec.build()?;
    let space = parse_boundary(desc.as_deref().unwrap_or(default_boundary(&spec)), &spec)?;
    let rc = cfg.radial.clone().unwrap_or_default();
    let (r_default, dr_default, t_default, outer_default) = match spec {
        ProfileSpec::Exponential { .. } => (12.0, 1.0 / 400.0, 3.0, OuterKind::Analytic),
        ProfileSpec::Bump { b } => (
            1.0 + 5.0 * (b - 1.0),
            (b - 1.0) / 200.0,
            2.0 * (b - 1.0),
            OuterKind::Extrapolation,
        ),
    };
    let r_outer = a.r_outer.or(rc.r_outer).unwrap_or(r_default);
    let dr = a.dr.or(rc.dr).unwrap_or(dr_default);
    let grid = RadialGrid::new(r_outer, dr)?;
    let dt = a.dt.or(rc.dt).unwrap_or(0.5 * grid.dr());
    let t_end = a.t_end.or(rc.t_end).unwrap_or(t_default);
    let outer = match a.outer.or(rc.outer).unwrap_or(outer_default) {
        OuterKind::Analytic => OuterBoundary::AnalyticDirichlet(profile.clone()),
        OuterKind::Extrapolation => OuterBoundary::Extrapolation,
    };
    let tol = tolerances(cfg);

    let start = init_from_profile(&profile, &grid, 0.0)?;
    let scale = start.scale();
    let steps = (t_end / dt).ceil().max(1.0) as usize;
    let out = radial::run(&start, t_end, dt, &space, &outer, (steps / 400).max(1))?;
    let trace = &out.trace;
    let e0 = trace.energy.energy[0];
    let vanish = tol.vanish.unwrap_or(1e-6);
    let disappearance = disappearance_time(&trace.energy.times, &trace.energy.energy, vanish * e0);
    let max_bc = trace.boundary_residual.iter().cloned().fold(0.0, f64::max);
    let rise = trace
        .energy
        .energy
        .windows(2)
        .map(|w| (w[1] - w[0]) / e0)
        .fold(f64::NEG_INFINITY, f64::max);

    let mut checks = vec![
        Check::at_most(
            "boundary_residual_relative",
            max_bc / scale.max(f64::MIN_POSITIVE),
            tol.boundary.unwrap_or(1e-10),
        ),
        Check::at_most("energy_rise_relative", rise, 1e-8),
    ];
    let mut fitted = serde_json::Value::Null;
    let mut expected = serde_json::Value::Null;
    let mut gamma_json = serde_json::Value::Null;
    match (spec, space) {
        (ProfileSpec::Exponential { .. }, BoundarySpace::Eps { eps }) => {
            let r = exponential_rate(eps)?;
            let rate = decay_rate(&trace.energy)?;
            checks.push(Check::at_most(
                "rate_relative_error",
                (rate - r).abs() / r.abs(),
                tol.rate.unwrap_or(0.02),
            ));
            fitted = json!(rate);
            expected = json!(r);
        }
        (ProfileSpec::Bump { b }, BoundarySpace::Gamma(g)) if g.b == b => {
            let sup = sup_gamma(b, 2001)?;
            if let Some(d) = delta {
                checks.push(Check::at_most("sup_gamma", sup, 0.5 * d));
            }
            checks.push(Check::at_most(
                "disappearance_time",
                disappearance.unwrap_or(f64::INFINITY),
                b - 1.0,
            ));
            gamma_json = json!({"b": b, "sup_gamma": sup, "delta": delta});
        }
        _ => {}
    }
    if let Some(path) = a.out.clone().or(cfg.out.clone()) {
        let rows: Vec<Vec<f64>> = (0..trace.energy.len())
            .map(|i| {
                vec![
                    trace.energy.times[i],
                    trace.energy.energy[i],
                    trace.boundary_residual[i],
                    trace.constraint_residual[i],
                ]
            })
            .collect();
        write_csv_file(
            &path,
            &["t", "energy", "boundary_residual", "constraint_residual"],
            &rows,
        )?;
    }
    if let Some(path) = a.svg.clone().or(cfg.svg.clone()) {
        emit_svg(&trace.energy, &path)?;
    }
    let data = json!({
        "profile": spec,
        "boundary": space,
        "chosen_b": match spec { ProfileSpec::Bump { b } => json!(b), _ => serde_json::Value::Null },
        "gamma": gamma_json,
        "grid": {"r_outer": grid.r_outer, "dr": grid.dr(), "dt": out.dt, "steps": out.steps, "accuracy_warning": grid.accuracy_warning()},
        "t_end": t_end,
        "fitted_rate": fitted,
        "expected_rate": expected,
        "disappearance_time": disappearance,
        "initial_energy": e0,
        "final_energy": trace.energy.energy.last(),
        "max_constraint_residual": trace.constraint_residual.iter().cloned().fold(0.0, f64::max),
    });
    Ok(Report::new("simulate", checks, data))
}

/// First sample time from which the energy stays at or below `level`.
pub fn disappearance_time(times: &[f64], energy: &[f64], level: f64) -> Option<f64> {
    let last_above = energy.iter().rposition(|e| *e > level);
    match last_above {
        None => times.first().copied(),
        Some(i) if i + 1 < times.len() => Some(times[i + 1]),
        Some(_) => None,
    }
}

fn nogo_demo(a: &NogoArgs, cfg: &ExperimentConfig) -> Outcome<Report> {
    let case = a.case.or(cfg.case).unwrap_or(NogoCase::Modulated);
    let out = a.out.clone().or(cfg.out.clone());
    let (checks, data, headers, rows): (Vec<Check>, serde_json::Value, Vec<&str>, Vec<Vec<f64>>) = match case {
        NogoCase::Modulated => {
            let n = a.points.or(cfg.points).unwrap_or(500);
            let points = annulus_points(n, (1.0, 3.0), (0.0, 2.0), seed(&a.common, cfg))?;
            let scheme = FdScheme::default();
            let reference = solution_divergence(&crate::profiles::make_exponential(0.25)?, &points, &scheme)?;
            let mut checks = Vec::new();
            let mut cases = Vec::new();
            let mut rows = Vec::new();
            for (idx, c) in ModulationCase::SMOOTH.iter().enumerate() {
                let r = modulated_div_obstruction(|s, w| c.eval(s, w), &points, &scheme)?;
                checks.push(Check::at_least(
                    format!("{}_ratio_to_solution", c.name()),
                    r.finest() / reference.finest(),
                    10.0,
                ));
                checks.push(Check::at_most(format!("{}_spread", c.name()), r.relative_spread, 1e-3));
                for (k, h) in r.steps.iter().enumerate() {
                    rows.push(vec![
                        idx as f64,
                        *h,
                        r.max_abs_div[k],
                        r.min_abs_div[k],
                        reference.residual_norms[k],
                    ]);
                }
                cases.push(json!({"case": c.name(), "index": idx, "report": r}));
            }
            (
                checks,
                json!({"cases": cases, "solution_divergence": reference}),
                vec!["case", "step", "max_abs_div", "min_abs_div", "solution_div"],
                rows,
            )
        }
        NogoCase::Quiet => {
            let v = Vec3::new(1.0, 2.0, -2.0) / 3.0;
            let solution = crate::profiles::make_exponential(0.25)?;
            let profiles: Vec<(&str, Box<dyn Fn(f64, &Vec3) -> Vec3>)> = vec![
                ("cross-e1", Box::new(|_, w: &Vec3| w.cross(&e1()))),
                ("rotated", Box::new(move |_, w: &Vec3| w.cross(&v))),
                (
                    "solution-e",
                    Box::new(move |s, w: &Vec3| eval_e(&solution, &SpacetimePoint { t: s, x: w * 2.0 })),
                ),
                (
                    "projected-e2",
                    Box::new(|s, w: &Vec3| ModulationCase::ProjectedE2.eval(s, w)),
                ),
                (
                    "polar-weighted",
                    Box::new(|s, w: &Vec3| ModulationCase::PolarWeighted.eval(s, w)),
                ),
            ];
            let mut checks = Vec::new();
            let mut spots = Vec::new();
            let mut rows = Vec::new();
            for (idx, (name, f)) in profiles.iter().enumerate() {
                let spot = quiet_spot_find(f, 0.5, 32)?;
                checks.push(Check::at_most(
                    format!("{name}_min_norm_relative"),
                    spot.min_norm / spot.scale,
                    crate::nogo::QUIET_TOLERANCE,
                ));
                rows.push(vec![
                    idx as f64,
                    spot.omega_star[0],
                    spot.omega_star[1],
                    spot.omega_star[2],
                    spot.min_norm,
                ]);
                spots.push(json!({"case": name, "index": idx, "spot": spot}));
            }
            (
                checks,
                json!({"spots": spots}),
                vec!["case", "omega1", "omega2", "omega3", "min_norm"],
                rows,
            )
        }
        NogoCase::Georgiev => {
            let sweep = azimuthal_tube_sweep(&[0.4, 0.2, 0.1, 0.05, 0.025], 2.0, 0.3)?;
            let checks = vec![Check::at_least("growth_exponent", sweep.growth_exponent, 0.5)];
            let rows = sweep
                .distances
                .iter()
                .zip(&sweep.residuals)
                .map(|(d, r)| vec![*d, *r])
                .collect();
            (
                checks,
                json!({"profile": "representative axially singular unit azimuthal field", "sweep": sweep}),
                vec!["distance", "residual"],
                rows,
            )
        }
    };
    if let Some(path) = out {
        write_csv_file(&path, &headers, &rows)?;
    }
    let mut data = data;
    data["label"] = json!(LABEL);
    Ok(Report::new("nogo-demo", checks, data))
}

fn eval_command(a: &EvalArgs, cfg: &ExperimentConfig) -> Outcome<()> {
    let profile: Profile = resolve_profile(&a.profile, cfg, ProfileKind::Exponential)?.build()?;
    let input: Box<dyn std::io::Read> = match &a.input {
        Some(p) => Box::new(std::fs::File::open(p).map_err(|e| usage(format!("cannot open {}: {e}", p.display())))?),
        None => Box::new(std::io::stdin().lock()),
    };
    let output: Box<dyn std::io::Write> = match a.out.clone().or(cfg.out.clone()) {
        Some(p) => Box::new(std::fs::File::create(p).map_err(Error::from)?),
        None => Box::new(std::io::stdout().lock()),
    };
    eval_csv(&profile, input, output)?;
    Ok(())
}
