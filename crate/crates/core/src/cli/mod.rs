//! Batch entry point: `abpole <command> [--config PATH] [--out DIR] [--jobs N]
//! [--seed N] [--k K]`. Each command validates its configuration, runs, and
//! writes CSV tables, plot data and `manifest.json` into the output
//! directory.

pub mod config;
pub mod emit;

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::asymptotics::{
    base_expansion, check_theorem, directional_limit, ensure_directions, extrapolate_in_h, fit_polynomial,
    fit_polynomial_points, pole_grid, run_sweep, sign_pattern_angles, solve_at_pole, PolyFit, SweepResult,
    TheoremReport, NOISE_FACTOR,
};
use crate::eigen::EigenOptions;
use crate::error::{Error, Result};
use crate::expansion::LocalExpansion;
use crate::extrapolate::ExtrapolationResult;
use crate::geom::Point;
use crate::identities::{direction_rank, expected_roots, factor_roots, sin_product, HomogeneousPoly};
use crate::profile::{
    angular_summary, closed_form_coefficients, compute_upsilon, fit_upsilon, profile_grid, relative_rms, solve_wr,
    xi_and_f, FAlpha,
};
use crate::slit::{compute_mk, slit_grid, MkEstimate, SlitProblem};

use config::RunConfig;
use emit::{Cell, Manifest, Sink, Table};

pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Lowest eigenvalues at one pole, extrapolated in h.
    Eig,
    /// Eigenvalue variation over a polar family of poles around a base point.
    Sweep,
    /// The slit constant by two routes.
    Mk,
    /// One limit-profile solve and its angular coefficient.
    Profile,
    /// f(α) over a set of pole angles.
    Falpha,
    /// Polynomial fit of a sweep table.
    Fit,
    /// Algebraic identity checks.
    Identities,
    /// Full pipeline with the theorem comparison.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Eig => "eig",
            Command::Sweep => "sweep",
            Command::Mk => "mk",
            Command::Profile => "profile",
            Command::Falpha => "falpha",
            Command::Fit => "fit",
            Command::Identities => "identities",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "abpole", version, about = "Eigenvalue asymptotics for a moving half-flux pole")]
pub struct Args {
    pub command: Command,
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory [default: out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads [default: available parallelism].
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Seed for the random rank trials of `identities`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Order override for mk, profile, falpha and fit.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    ConfigError,
    SolverFailure,
    AcceptanceFailure,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::ConfigError => 2,
            Status::SolverFailure => 3,
            Status::AcceptanceFailure => 4,
        }
    }
}

/// A pass/fail check on a computed quantity.
#[derive(Debug, Clone, Serialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub threshold: String,
    pub pass: bool,
}

impl Gate {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Gate {
            name: name.into(),
            value,
            threshold: format!("<= {limit:e}"),
            pass: value <= limit,
        }
    }

    fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Gate {
            name: name.into(),
            value,
            threshold: format!(">= {limit:e}"),
            pass: value >= limit,
        }
    }

    fn holds(name: &str, value: f64, threshold: &str, pass: bool) -> Self {
        Gate {
            name: name.into(),
            value,
            threshold: threshold.into(),
            pass,
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub status: Status,
    pub gates: Vec<Gate>,
    pub error: Option<String>,
    pub out: Option<PathBuf>,
}

fn classify(e: &Error) -> Status {
    match e {
        Error::Config(_) | Error::Io { .. } => Status::ConfigError,
        _ => Status::SolverFailure,
    }
}

/// Parses `argv` and runs; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Status::ConfigError.code() } else { 0 };
        }
    };
    let outcome = run(&args);
    for g in &outcome.gates {
        println!(
            "{} {} = {} ({})",
            if g.pass { "PASS" } else { "FAIL" },
            g.name,
            emit::fmt_float(g.value),
            g.threshold
        );
    }
    if let Some(e) = &outcome.error {
        eprintln!("error: {e}");
    }
    outcome.status.code()
}

struct Ctx {
    cfg: RunConfig,
    opts: EigenOptions,
    jobs: usize,
    seed: u64,
    sink: Sink,
}

/// Resolves the configuration, validates it for `args.command`, runs the
/// command and writes the manifest.
pub fn run(args: &Args) -> Outcome {
    let fail = |e: Error, out: Option<PathBuf>| Outcome {
        status: classify(&e),
        gates: Vec::new(),
        error: Some(e.to_string()),
        out,
    };
    let (mut cfg, file_bytes) = match &args.config {
        Some(p) => match RunConfig::load(p) {
            Ok((c, b)) => (c, Some(b)),
            Err(e) => return fail(e, None),
        },
        None => (RunConfig::default(), None),
    };
    if let Some(k) = args.k {
        cfg.set_k(k);
    }
    let out = args.out.clone().or(cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    cfg.out = Some(out.clone());
    let jobs = args
        .jobs
        .or(cfg.jobs)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return fail(Error::Config("jobs must be positive".into()), None);
    }
    cfg.jobs = Some(jobs);
    let seed = args.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    cfg.seed = Some(seed);
    if let Err(e) = validate(args.command, &cfg) {
        return fail(e, None);
    }
    let sink = match Sink::create(&out) {
        Ok(s) => s,
        Err(e) => return fail(e, None),
    };
    faer::set_global_parallelism(faer::Par::Seq);
    let mut ctx = Ctx {
        opts: EigenOptions {
            seed,
            ..EigenOptions::default()
        },
        cfg,
        jobs,
        seed,
        sink,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => return fail(Error::Config(format!("thread pool: {e}")), Some(out)),
    };
    let result = pool.install(|| dispatch(args.command, &mut ctx));
    let (status, gates, error) = match result {
        Ok(gates) => {
            let status = if gates.iter().all(|g| g.pass) {
                Status::Ok
            } else {
                Status::AcceptanceFailure
            };
            (status, gates, None)
        }
        Err(e) => (classify(&e), Vec::new(), Some(e.to_string())),
    };
    if let Err(e) = write_manifest(args.command, &mut ctx, file_bytes.as_deref(), args.config.clone(), status) {
        return fail(e, Some(out));
    }
    Outcome {
        status,
        gates,
        error,
        out: Some(out),
    }
}

fn validate(command: Command, cfg: &RunConfig) -> Result<()> {
    match command {
        Command::Eig => cfg.eig.validate(),
        Command::Sweep => cfg.sweep.sweep_config().map(drop),
        Command::Mk => cfg.mk.validate(),
        Command::Profile => cfg.profile.problem().map(drop),
        Command::Falpha => cfg.falpha.validate(),
        Command::Fit => {
            crate::geom::check_odd(cfg.fit.k).map_err(|e| Error::Config(format!("[fit] {e}")))?;
            let p = fit_input(cfg);
            if !p.is_file() {
                return Err(Error::Config(format!("[fit] sweep table {} not found", p.display())));
            }
            Ok(())
        }
        Command::Identities => cfg.identities.validate(),
        Command::Report => {
            cfg.sweep.sweep_config()?;
            cfg.mk.validate()
        }
    }
}

fn fit_input(cfg: &RunConfig) -> PathBuf {
    cfg.fit.sweep_csv.clone().unwrap_or_else(|| {
        cfg.out.clone().unwrap_or_else(|| PathBuf::from("out")).join("sweep.csv")
    })
}

fn dispatch(command: Command, ctx: &mut Ctx) -> Result<Vec<Gate>> {
    match command {
        Command::Eig => cmd_eig(ctx),
        Command::Sweep => cmd_sweep(ctx),
        Command::Mk => cmd_mk(ctx),
        Command::Profile => cmd_profile(ctx),
        Command::Falpha => cmd_falpha(ctx),
        Command::Fit => cmd_fit(ctx),
        Command::Identities => cmd_identities(ctx),
        Command::Report => cmd_report(ctx),
    }
}

fn write_manifest(
    command: Command,
    ctx: &mut Ctx,
    file_bytes: Option<&[u8]>,
    config_path: Option<PathBuf>,
    status: Status,
) -> Result<()> {
    let path = ctx.sink.dir.join("manifest.json");
    let rendered = toml::to_string(&ctx.cfg).map_err(|e| Error::Config(e.to_string()))?;
    let config = serde_json::to_value(&ctx.cfg).map_err(|e| Error::Config(e.to_string()))?;
    let manifest = Manifest {
        command: command.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: emit::sha256_hex(rendered.as_bytes()),
        config_file_sha256: file_bytes.map(emit::sha256_hex),
        config_path,
        seed: ctx.seed,
        jobs: ctx.jobs,
        config,
        grids: ctx.sink.grids.clone(),
        timings: ctx.sink.timings.clone(),
        outputs: ctx.sink.outputs.clone(),
        status: serde_json::to_value(status)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default(),
        timestamp: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    emit::write_json(&path, &manifest)
}

fn pt(p: [f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

fn extrapolation_cells(e: &ExtrapolationResult) -> Vec<Cell> {
    vec![
        e.limit.into(),
        e.error_estimate.into(),
        e.observed_order.into(),
        e.used_order.into(),
        e.flag.map_or(String::new(), |f| format!("{f:?}")).into(),
    ]
}

fn dense_angles(n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| TAU * i as f64 / n as f64)
}

fn cmd_eig(ctx: &mut Ctx) -> Result<Vec<Gate>> {
    let c = ctx.cfg.eig.clone();
    let domain = c.domain.spec()?;
    let pole = pt(c.pole);
    let opts = EigenOptions { tol: c.tol, ..ctx.opts.clone() };
    let mut spectra = Vec::new();
    for &h in &c.h_seq {
        let s = ctx
            .sink
            .time(&format!("eig h={h}"), || solve_at_pole(&domain, pole, h, c.count, &opts))?;
        ctx.sink.grid("eig", h, s.grid.len());
        spectra.push(s);
    }
    let multiplicity = |s: &crate::asymptotics::PoleSpectrum, i: usize| {
        s.clusters.iter().find(|cl| cl.contains(&i)).map_or(1, Vec::len)
    };
    let mut levels = Table::new(&["h", "index", "eigenvalue", "multiplicity"]);
    for (s, &h) in spectra.iter().zip(&c.h_seq) {
        for (i, v) in s.values.iter().enumerate() {
            levels.push(vec![h.into(), (i + 1).into(), (*v).into(), multiplicity(s, i).into()]);
        }
    }
    let mut limits = Table::new(&["index", "limit", "error", "observed_order", "used_order", "flag", "multiplicity"]);
    let finest = spectra.last().unwrap();
    for i in 0..c.count {
        let vals: Vec<f64> = spectra.iter().map(|s| s.values[i]).collect();
        let e = extrapolate_in_h(&c.h_seq, &vals)?;
        println!("eigenvalue {}: {:.8} ± {:.2e}", i + 1, e.limit, e.error_estimate);
        let mut row = vec![(i + 1).into()];
        row.extend(extrapolation_cells(&e));
        row.push(multiplicity(finest, i).into());
        limits.push(row);
    }
    ctx.sink.table("eig.csv", &levels)?;
    ctx.sink.table("eig_limit.csv", &limits)?;
    let conv: Vec<(f64, f64)> = spectra.iter().zip(&c.h_seq).map(|(s, &h)| (h, s.values[0])).collect();
    ctx.sink.plot("eig_convergence.dat", &conv)?;
    Ok(Vec::new())
}

fn sweep_tables(result: &SweepResult) -> (Table, Table) {
    let mut rows = Table::new(&[
        "alpha",
        "radius",
        "a1",
        "a2",
        "difference",
        "difference_error",
        "difference_order",
        "lambda_limit",
        "lambda_limit_error",
        "status",
        "message",
    ]);
    let mut levels = Table::new(&["alpha", "radius", "h", "lambda"]);
    let base = result.config.base;
    for r in &result.rows {
        let a = r.pole - base;
        let (d, de, dord) = r
            .difference
            .as_ref()
            .map_or((None, None, None), |d| (Some(d.limit), Some(d.error_estimate), d.used_order));
        let (l, le) = r
            .lambda_limit
            .as_ref()
            .map_or((None, None), |l| (Some(l.limit), Some(l.error_estimate)));
        rows.push(vec![
            r.alpha.into(),
            r.radius.into(),
            a.x1.into(),
            a.x2.into(),
            d.into(),
            de.into(),
            dord.into(),
            l.into(),
            le.into(),
            if r.is_ok() { "ok" } else { "failed" }.into(),
            r.failure.clone().unwrap_or_default().into(),
        ]);
        for (lam, &h) in r.lambda.iter().zip(&result.config.h_seq) {
            levels.push(vec![r.alpha.into(), r.radius.into(), h.into(), (*lam).into()]);
        }
    }
    (rows, levels)
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    base_lambda: &'a [f64],
    h_seq: &'a [f64],
    lambda0: &'a ExtrapolationResult,
    gap: f64,
    poles: usize,
    failed: usize,
}

fn do_sweep(ctx: &mut Ctx) -> Result<SweepResult> {
    let config = ctx.cfg.sweep.sweep_config()?;
    let opts = EigenOptions {
        tol: ctx.cfg.sweep.tol,
        ..ctx.opts.clone()
    };
    for &h in &config.h_seq {
        let g = pole_grid(&config.domain, config.base, h)?;
        ctx.sink.grid("sweep base", h, g.len());
    }
    let jobs = ctx.jobs;
    let result = ctx.sink.time("sweep", || run_sweep(&config, &opts, jobs))?;
    write_sweep(ctx, &result)?;
    Ok(result)
}

fn write_sweep(ctx: &mut Ctx, result: &SweepResult) -> Result<()> {
    let (rows, levels) = sweep_tables(result);
    ctx.sink.table("sweep.csv", &rows)?;
    ctx.sink.table("sweep_levels.csv", &levels)?;
    let failed = result.rows.iter().filter(|r| !r.is_ok()).count();
    ctx.sink.json(
        "sweep_summary.json",
        &SweepSummary {
            base_lambda: &result.base_lambda,
            h_seq: &result.config.h_seq,
            lambda0: &result.lambda0,
            gap: result.gap,
            poles: result.rows.len(),
            failed,
        },
    )?;
    println!(
        "lambda0 = {:.8} ± {:.2e}, gap {:.4}, {} poles ({} failed)",
        result.lambda0.limit,
        result.lambda0.error_estimate,
        result.gap,
        result.rows.len(),
        failed
    );
    Ok(())
}

fn directional_points(result: &SweepResult, k: usize) -> Vec<(f64, f64)> {
    let mut angles = result.config.angles.clone();
    angles.sort_by(f64::total_cmp);
    angles
        .into_iter()
        .filter_map(|a| directional_limit(result, a, k).ok().map(|d| (a, d.limit)))
        .collect()
}

fn cmd_sweep(ctx: &mut Ctx) -> Result<Vec<Gate>> {
    let result = do_sweep(ctx)?;
    let pts = directional_points(&result, ctx.cfg.fit.k);
    ctx.sink.plot("directional.dat", &pts)?;
    Ok(Vec::new())
}

fn mk_tables(est: &MkEstimate) -> (Table, Table) {
    let mut rows = Table::new(&["k", "h", "r_trunc", "m_energy", "m_boundary"]);
    for r in &est.rows {
        rows.push(vec![r.k.into(), r.h.into(), r.r_trunc.into(), r.m_energy.into(), r.m_boundary.into()]);
    }
    let mut summary = Table::new(&["k", "route", "limit", "error", "observed_order", "used_order", "flag"]);
    for (name, e) in [("energy", &est.energy), ("boundary", &est.boundary)] {
        let mut row = vec![est.k.into(), name.into()];
        row.extend(extrapolation_cells(e));
        summary.push(row);
    }
    (rows, summary)
}

fn do_mk(ctx: &mut Ctx, k: usize) -> Result<MkEstimate> {
    let c = ctx.cfg.mk.clone();
    for &h in &c.h_seq {
        for &r in &c.r_seq {
            let g = slit_grid(&SlitProblem::new(k, r, h)?)?;
            ctx.sink.grid(&format!("mk R={r}"), h, g.len());
        }
    }
    let est = ctx.sink.time("mk", || compute_mk(k, &c.h_seq, &c.r_seq))?;
    let (rows, summary) = mk_tables(&est);
    ctx.sink.table("mk_rows.csv", &rows)?;
    ctx.sink.table("mk.csv", &summary)?;
    println!(
        "m_{k}: energy {:.8} ± {:.2e}, boundary {:.8} ± {:.2e}",
        est.energy.limit, est.energy.error_estimate, est.boundary.limit, est.boundary.error_estimate
    );
    Ok(est)
}

fn mk_gates(est: &MkEstimate) -> Vec<Gate> {
    let (e, b) = (est.energy.limit, est.boundary.limit);
    vec![
        Gate::holds("mk_energy_negative", e, "< 0", e < 0.0),
        Gate::holds("mk_boundary_negative", b, "< 0", b < 0.0),
        Gate::at_most("mk_route_agreement", (e - b).abs() / e.abs().max(b.abs()), 0.01),
    ]
}

fn cmd_mk(ctx: &mut Ctx) -> Result<Vec<Gate>> {
    let k = ctx.cfg.mk.k;
    let est = do_mk(ctx, k)?;
    Ok(mk_gates(&est))
}

fn cmd_profile(ctx: &mut Ctx) -> Result<Vec<Gate>> {
    let c = ctx.cfg.profile.clone();
    let problem = c.problem()?;
    let g = profile_grid(&problem)?;
    ctx.sink.grid("profile", problem.h, g.len());
    let sol = ctx.sink.time("profile solve", || solve_wr(&problem))?;
    let n = c.samples - 1;
    let radii: Vec<f64> = (0..=n).map(|i| 1.0 + (problem.r_trunc - 1.0) * i as f64 / n as f64).collect();
    let samples = ctx.sink.time("upsilon", || compute_upsilon(&sol, &radii))?;
    let one = samples[0].value();
    let (a, b) = closed_form_coefficients(problem.k, problem.r_trunc, one);
    let e = 0.5 * problem.k as f64;
    let closed = |r: f64| a * r.powf(e) + b * r.powf(-e);
    let closed_rms = relative_rms(&samples, closed);
    let fit = fit_upsilon(problem.k, &samples)?;
    let mut table = Table::new(&["r", "upsilon_re", "upsilon_im", "closed_re", "closed_im", "fit_re", "fit_im"]);
    for s in &samples {
        let (cf, ff) = (closed(s.r), fit.at(problem.k, s.r));
        table.push(vec![s.r.into(), s.re.into(), s.im.into(), cf.re.into(), cf.im.into(), ff.re.into(), ff.im.into()]);
    }
    ctx.sink.table("upsilon.csv", &table)?;
    let kappa = crate::profile::kappa_tilde(problem.k, problem.r_trunc, one);
    let mut summary = Table::new(&[
        "k",
        "alpha",
        "r_trunc",
        "h",
        "upsilon1_re",
        "upsilon1_im",
        "closed_a_re",
        "closed_a_im",
        "closed_b_re",
        "closed_b_im",
        "closed_rms",
        "fit_rms",
        "kappa_re",
        "kappa_im",
    ]);
    summary.push(vec![
        problem.k.into(),
        problem.alpha.into(),
        problem.r_trunc.into(),
        problem.h.into(),
        one.re.into(),
        one.im.into(),
        a.re.into(),
        a.im.into(),
        b.re.into(),
        b.im.into(),
        closed_rms.into(),
        fit.relative_rms.into(),
        kappa.re.into(),
        kappa.im.into(),
    ]);
    ctx.sink.table("profile.csv", &summary)?;
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.r, s.re)).collect();
    ctx.sink.plot("upsilon.dat", &pts)?;
    let dense: Vec<(f64, f64)> = (0..=200)
        .map(|i| {
            let r = 1.0 + (problem.r_trunc - 1.0) * i as f64 / 200.0;
            (r, closed(r).re)
        })
        .collect();
    ctx.sink.plot("upsilon_closed.dat", &dense)?;
    println!("upsilon_R(1) = {:.8} {:+.3e}i, closed-form rms {:.3e}", one.re, one.im, closed_rms);
    Ok(vec![Gate::at_most("upsilon_closed_form_rms", closed_rms, 0.01)])
}

fn cmd_falpha(ctx: &mut Ctx) -> Result<Vec<Gate>> {
    let c = ctx.cfg.falpha.clone();
    let angles = c.angles.values();
    for &h in &c.h_seq {
        for &r in &c.r_seq {
            let g = profile_grid(&crate::profile::ProfileProblem::new(c.k, angles[0], r, h)?)?;
            ctx.sink.grid(&format!("falpha R={r}"), h, g.len());
        }
    }
    let mut values: Vec<FAlpha> = Vec::with_capacity(angles.len());
    for &a in &angles {
        let f = ctx
            .sink
            .time(&format!("falpha alpha={a}"), || xi_and_f(c.k, a, &c.r_seq, &c.h_seq))?;
        println!("f({a:.6}) = {:.8} ± {:.2e}", f.value, f.error);
        values.push(f);
    }
    let mut table = Table::new(&["alpha", "f", "error", "xi_re", "xi_im", "real"]);
    let mut rows = Table::new(&[
        "alpha",
        "h",
        "r_trunc",
        "upsilon1_re",
        "upsilon1_im",
        "kappa_re",
        "kappa_im",
        "fit_rms",
    ]);
    for f in &values {
        table.push(vec![
            f.alpha.into(),
            f.value.into(),
            f.error.into(),
            f.xi[0].into(),
            f.xi[1].into(),
            f.is_real().into(),
        ]);
        for r in &f.rows {
            rows.push(vec![
                r.alpha.into(),
                r.h.into(),
                r.r_trunc.into(),
                r.upsilon_one[0].into(),
                r.upsilon_one[1].into(),
                r.kappa[0].into(),
                r.kappa[1].into(),
                r.fit.relative_rms.into(),
            ]);
        }
    }
    ctx.sink.table("falpha.csv", &table)?;
    ctx.sink.table("falpha_rows.csv", &rows)?;
    let pts: Vec<(f64, f64)> = values.iter().map(|f| (f.alpha, f.value)).collect();
    ctx.sink.plot("falpha.dat", &pts)?;
    let mut gates = Vec::new();
    let mut summary = Table::new(&[
        "k",
        "cos_coeff",
        "sin_coeff",
        "cos_energy_fraction",
        "reflection_defect",
        "periodicity_defect",
        "mk_from_f0",
    ]);
    match angular_summary(&pts, c.k) {
        Ok(s) => {
            let f0 = pts
                .iter()
                .find(|p| p.0.rem_euclid(TAU).min(TAU - p.0.rem_euclid(TAU)) < 1e-9)
                .map(|p| p.1 * c.k as f64 * PI.sqrt() / -4.0);
            summary.push(vec![
                c.k.into(),
                s.cos_coeff.into(),
                s.sin_coeff.into(),
                s.cos_energy_fraction.into(),
                s.reflection_defect.into(),
                s.periodicity_defect.into(),
                f0.into(),
            ]);
            let kf = c.k as f64;
            let dense: Vec<(f64, f64)> = dense_angles(360).map(|a| (a, s.cos_coeff * (kf * a).cos())).collect();
            ctx.sink.plot("falpha_fit.dat", &dense)?;
            gates.push(Gate::at_most("falpha_reflection", s.reflection_defect, 0.02));
            gates.push(Gate::at_most("falpha_periodicity", s.periodicity_defect, 0.02));
            gates.push(Gate::at_least("falpha_cos_energy", s.cos_energy_fraction, 0.97));
        }
        Err(e) => println!("no angular summary: {e}"),
    }
    ctx.sink.table("falpha_summary.csv", &summary)?;
    Ok(gates)
}

fn read_sweep_table(path: &Path) -> Result<Vec<(Point, f64, f64)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("{}: missing column {name}", path.display())))
    };
    let (ia1, ia2, id, ie, is) = (col("a1")?, col("a2")?, col("difference")?, col("difference_error")?, col("status")?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if &rec[is] != "ok" {
            continue;
        }
        let num = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("{}: bad number {:?}: {e}", path.display(), &rec[i])))
        };
        out.push((Point::new(num(ia1)?, num(ia2)?), num(id)?, num(ie)?));
    }
    Ok(out)
}

fn fit_outputs(ctx: &mut Ctx, fit: &PolyFit, points: &[(Point, f64, f64)]) -> Result<Vec<Gate>> {
    let mut coeffs = Table::new(&["degree", "j", "coeff", "error"]);
    for (j, (c, e)) in fit.coeffs.iter().zip(&fit.coeff_errors).enumerate() {
        coeffs.push(vec![fit.k.into(), j.into(), (*c).into(), (*e).into()]);
    }
    for d in &fit.lower_degrees {
        for (j, (c, e)) in d.coeffs.iter().zip(&d.errors).enumerate() {
            coeffs.push(vec![d.degree.into(), j.into(), (*c).into(), (*e).into()]);
        }
    }
    ctx.sink.table("fit_coefficients.csv", &coeffs)?;
    let harmonicity = {
        let lap = crate::asymptotics::laplacian_coefficients(&fit.coeffs);
        let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        n(&lap) / n(&fit.coeffs)
    };
    let mut summary = Table::new(&["k", "c0", "alpha0_fit", "rms", "harmonicity_defect", "lower_degrees_vanish"]);
    summary.push(vec![
        fit.k.into(),
        fit.c0.into(),
        fit.alpha0_fit.into(),
        fit.rms.into(),
        harmonicity.into(),
        fit.lower_degrees.iter().all(|d| d.is_zero(NOISE_FACTOR)).into(),
    ]);
    ctx.sink.table("fit_summary.csv", &summary)?;
    let g: Vec<(f64, f64)> = dense_angles(360).map(|a| (a, fit.angular(a))).collect();
    ctx.sink.plot("fit_angular.dat", &g)?;
    let m: Vec<(f64, f64)> = dense_angles(360).map(|a| (a, fit.model(a))).collect();
    ctx.sink.plot("fit_harmonic.dat", &m)?;
    let kf = fit.k as i32;
    let mut scaled: Vec<(f64, f64)> = points
        .iter()
        .map(|(a, d, _)| (a.x2.atan2(a.x1).rem_euclid(TAU), d / a.norm().powi(kf)))
        .collect();
    scaled.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    ctx.sink.plot("fit_points.dat", &scaled)?;
    println!("C0 = {:.6}, alpha0 = {:.6}, harmonicity defect {:.3e}", fit.c0, fit.alpha0_fit, harmonicity);
    let mut gates = vec![Gate::at_most("harmonicity_defect", harmonicity, 0.05)];
    gates.extend(lower_degree_gates(&fit.lower_degrees));
    Ok(gates)
}

fn lower_degree_gates(checks: &[crate::asymptotics::DegreeCheck]) -> Vec<Gate> {
    checks
        .iter()
        .map(|d| {
            let worst = d
                .coeffs
                .iter()
                .zip(&d.errors)
                .map(|(c, e)| c.abs() / e)
                .fold(0.0, f64::max);
            Gate::holds(
                &format!("degree_{}_vanishes", d.degree),
                worst,
                &format!("<= {NOISE_FACTOR} error bars"),
                d.is_zero(NOISE_FACTOR),
            )
        })
        .collect()
}

fn cmd_fit(ctx: &mut Ctx) -> Result<Vec<Gate>> {
    let path = fit_input(&ctx.cfg);
    let points = read_sweep_table(&path)?;
    let k = ctx.cfg.fit.k;
    let fit = ctx.sink.time("fit", || fit_polynomial_points(&points, k))?;
    fit_outputs(ctx, &fit, &points)
}

fn cmd_identities(ctx: &mut Ctx) -> Result<Vec<Gate>> {
    let c = ctx.cfg.identities.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut table = Table::new(&["check", "k", "value", "threshold", "pass"]);
    let mut gates = Vec::new();
    let mut record = |table: &mut Table, gate: Gate, k: usize| {
        table.push(vec![
            gate.name.clone().into(),
            k.into(),
            gate.value.into(),
            gate.threshold.clone().into(),
            gate.pass.into(),
        ]);
        gates.push(Gate {
            name: format!("{} k={k}", gate.name),
            ..gate
        });
    };
    let start = std::time::Instant::now();
    for &k in &c.ks {
        let mut worst = 0.0f64;
        for _ in 0..c.samples {
            let a = rng.random_range(0.0..TAU);
            let exact = 2f64.powi(1 - k as i32) * (k as f64 * a).cos();
            worst = worst.max((sin_product(k, a)? - exact).abs());
        }
        record(&mut table, Gate::at_most("sin_product", worst, c.tol), k);

        let mut deficient = 0usize;
        for h in 0..k {
            for trial in 0..=c.rank_trials {
                let theta = if trial == 0 { 0.0 } else { rng.random_range(0.0..TAU) };
                if direction_rank(h, k, theta)? != h + 1 {
                    deficient += 1;
                }
            }
        }
        record(
            &mut table,
            Gate::holds("direction_rank_full", deficient as f64, "= 0 deficient", deficient == 0),
            k,
        );
        let theta = rng.random_range(0.0..TAU);
        let rk = direction_rank(k, k, theta)?;
        record(
            &mut table,
            Gate::holds("direction_rank_degree_k", rk as f64, &format!("= {k}"), rk == k),
            k,
        );

        let mut root_err = 0.0f64;
        for _ in 0..c.rank_trials.max(1) {
            let shift = rng.random_range(0.0..TAU);
            let amp = rng.random_range(0.5..2.0);
            let poly = HomogeneousPoly::harmonic(k, amp, shift);
            let roots = factor_roots(&poly)?;
            let expected = expected_roots(k, shift);
            if !roots.complete {
                root_err = f64::INFINITY;
                continue;
            }
            for (r, e) in roots.roots.iter().zip(&expected) {
                let d = (r - e).rem_euclid(PI);
                root_err = root_err.max(d.min(PI - d));
            }
        }
        record(&mut table, Gate::at_most("factor_roots", root_err, 1e-9), k);
    }
    ctx.sink.timings.push(emit::Timing {
        stage: "identities".into(),
        seconds: start.elapsed().as_secs_f64(),
    });
    ctx.sink.table("identities.csv", &table)?;
    Ok(gates)
}

#[derive(Serialize)]
struct DirectionalEntry {
    label: &'static str,
    alpha: f64,
    limit: f64,
    error: f64,
}

#[derive(Serialize)]
struct Report<'a> {
    k: usize,
    lambda0: &'a ExtrapolationResult,
    gap: f64,
    expansion: &'a LocalExpansion,
    mk: f64,
    mk_error: f64,
    mk_boundary: f64,
    fit: &'a PolyFit,
    theorem: &'a TheoremReport,
    directional: &'a [DirectionalEntry],
    gates: &'a [Gate],
}

fn cmd_report(ctx: &mut Ctx) -> Result<Vec<Gate>> {
    let config = ctx.cfg.sweep.sweep_config()?;
    let opts = EigenOptions {
        tol: ctx.cfg.sweep.tol,
        ..ctx.opts.clone()
    };
    let mut result = do_sweep(ctx)?;
    let radii = ctx.cfg.sweep.expansion_radii.clone();
    let expansion = ctx.sink.time("expansion", || base_expansion(&config, &radii, &opts))?;
    let k = expansion.k;
    println!(
        "expansion: k = {k}, |beta|^2 = {:.6}, alpha0 = {:.6}",
        expansion.amplitude_sq(),
        expansion.alpha0
    );
    let mk = do_mk(ctx, k)?;
    let fit = ctx.sink.time("fit", || fit_polynomial(&result, k))?;
    let points: Vec<(Point, f64, f64)> = result
        .rows
        .iter()
        .filter_map(|r| r.difference.as_ref().map(|d| (r.pole - config.base, d.limit, d.error_estimate)))
        .collect();
    fit_outputs(ctx, &fit, &points)?;
    let theorem = check_theorem(&fit, &expansion, mk.value())?;

    let angles = sign_pattern_angles(expansion.alpha0, k);
    let jobs = ctx.jobs;
    ctx.sink
        .time("directions", || ensure_directions(&mut result, &angles, &opts, jobs))?;
    write_sweep(ctx, &result)?;
    let labels = ["alpha0", "alpha0+pi/2k", "alpha0+pi/k"];
    let mut directional = Vec::new();
    for (label, &a) in labels.into_iter().zip(&angles) {
        let d = directional_limit(&result, a, k)?;
        directional.push(DirectionalEntry {
            label,
            alpha: a,
            limit: d.limit,
            error: d.error_estimate,
        });
    }
    ctx.sink.plot("directional.dat", &directional_points(&result, k))?;

    let (top, mid, opp) = (directional[0].limit, directional[1].limit, directional[2].limit);
    let mut gates = vec![
        Gate::at_most("c0_relative_error", theorem.c0_relative_error, 0.10),
        Gate::at_most("alpha0_difference", theorem.alpha0_difference, 0.05),
        Gate::at_most("harmonicity_defect", theorem.harmonicity_defect, 0.05),
    ];
    gates.extend(lower_degree_gates(&theorem.lower_degrees));
    gates.push(Gate::holds("limit_at_alpha0", top, "> 0", top > 0.0));
    gates.push(Gate::at_most("limit_at_quarter_period", mid.abs() / top.abs(), 0.10));
    gates.push(Gate::at_most("limit_at_half_period", (opp + top).abs() / top.abs(), 0.10));

    let report = Report {
        k,
        lambda0: &result.lambda0,
        gap: result.gap,
        expansion: &expansion,
        mk: mk.value(),
        mk_error: mk.error(),
        mk_boundary: mk.boundary.limit,
        fit: &fit,
        theorem: &theorem,
        directional: &directional,
        gates: &gates,
    };
    ctx.sink.json("report.json", &report)?;
    ctx.sink.text("report.txt", &render_report(&report))?;
    Ok(gates)
}

fn render_report(r: &Report) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let t = r.theorem;
    let beta = |z: Complex64| format!("{:.6} {:+.6}i", z.re, z.im);
    let _ = writeln!(s, "vanishing order k        {}", r.k);
    let _ = writeln!(s, "lambda0                  {:.8} ± {:.2e}", r.lambda0.limit, r.lambda0.error_estimate);
    let _ = writeln!(s, "spectral gap             {:.6}", r.gap);
    let _ = writeln!(s, "beta1                    {}", beta(r.expansion.beta1));
    let _ = writeln!(s, "beta2                    {}", beta(r.expansion.beta2));
    let _ = writeln!(s, "|beta1|^2 + |beta2|^2    {:.6}", t.amplitude_sq);
    let _ = writeln!(s, "m_k (energy)             {:.8} ± {:.2e}", r.mk, r.mk_error);
    let _ = writeln!(s, "m_k (boundary)           {:.8}", r.mk_boundary);
    let _ = writeln!(s, "C0 predicted             {:.6}", t.c0_predicted);
    let _ = writeln!(s, "C0 fitted                {:.6}", t.c0_fitted);
    let _ = writeln!(s, "C0 relative error        {:.4}", t.c0_relative_error);
    let _ = writeln!(s, "alpha0 expansion         {:.6}", t.alpha0_expansion);
    let _ = writeln!(s, "alpha0 fit               {:.6}", t.alpha0_fit);
    let _ = writeln!(s, "harmonicity defect       {:.4e}", t.harmonicity_defect);
    let _ = writeln!(s, "reconstruction defect    {:.4e}", t.reconstruction_defect);
    for d in r.directional {
        let _ = writeln!(s, "limit at {:<16} {:.6} ± {:.2e} (alpha = {:.6})", d.label, d.limit, d.error, d.alpha);
    }
    for g in r.gates {
        let _ = writeln!(
            s,
            "{} {} = {:.6e} ({})",
            if g.pass { "PASS" } else { "FAIL" },
            g.name,
            g.value,
            g.threshold
        );
    }
    s
}
