//! Batch front end: reads an experiment configuration, runs one subcommand
//! and writes its artifacts under the output directory.
//!
//! Exit codes: 0 when every requested check passes, 1 when a check fails,
//! 2 for configuration or input errors, 3 when a solve fails.

pub mod config;
pub mod plot;
pub mod presets;
pub mod verify;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gmlab_core::analysis::{analyze, core_distance, FreeBoundaryReport};
use gmlab_core::field::{read_field, write_field, DomainSpec, ScalarField};
use gmlab_core::nonlinearity::Nonlinearity;
use gmlab_core::profile::{transform_h, Profile};
use gmlab_core::radial::{solve_annulus_with, solve_ball_with, solve_barriers_scaled, AnnulusConfig, RadialProfile};
use gmlab_core::recursion::{recursion_fixed_point, RecursionSpec};
use gmlab_core::solver::{solve, SolveReport};

use config::{ConfigError, ExperimentConfig, ProfileSpec, RawConfig};
use plot::{Chart, Series, Style};
use verify::{results_csv, results_json, Verifier, CHECKS};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "gmlab", version, about = "Solve and analyze the nonlocal dead-core problem −Δu = g(|u ≥ u(x)|)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Experiment configuration (flat INI with dotted sections).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; defaults to `output.dir` or `./out`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set solver.h=1/128`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Start from a bundled preset: case-a, ball-h1, annulus, ellipse, alt-phillips-γ43.
    #[arg(long = "case", global = true, value_name = "NAME")]
    pub case: Option<String>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Solve the nonlocal problem on the configured domain.
    Solve,
    /// Radial quadrature solution on a ball.
    Radial,
    /// Radial fixed-point solution on an annulus.
    Annulus,
    /// Radial barriers of the configured profile.
    Barriers,
    /// Free-boundary analysis of a field (solved first unless `--field` is given).
    Analyze {
        /// GMF1 field to analyze.
        #[arg(long, value_name = "PATH")]
        field: Option<PathBuf>,
    },
    /// Run the named acceptance checks on the reference experiment.
    VerifyAll {
        /// Run only these checks (repeatable).
        #[arg(long = "only", value_name = "CHECK")]
        only: Vec<String>,
        /// List the check names and exit.
        #[arg(long)]
        list: bool,
    },
    /// Fixed points of the exponent recursions.
    Recursion,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] gmlab_core::Error),
    #[error("cannot write {path}: {message}")]
    Write { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_solver_failure() => EXIT_SOLVER,
            _ => EXIT_CONFIG,
        }
    }
}

/// Collects artifacts in the output directory and remembers what was
/// written, in order.
pub struct Output {
    pub dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Output {
    fn new(dir: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&dir)
            .map_err(|e| CliError::Write { path: dir.display().to_string(), message: e.to_string() })?;
        Ok(Output { dir, written: Vec::new() })
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, body)
            .map_err(|e| CliError::Write { path: path.display().to_string(), message: e.to_string() })?;
        self.written.push(path);
        Ok(())
    }

    fn field(&mut self, name: &str, u: &ScalarField) -> Result<(), CliError> {
        let path = self.dir.join(name);
        write_field(u, &path)?;
        self.written.push(path);
        Ok(())
    }
}

/// Preset, then file, then `--set` overrides.
pub fn load_config(common: &CommonArgs) -> Result<ExperimentConfig, ConfigError> {
    let mut raw = match &common.case {
        Some(name) => presets::preset(name)?,
        None => RawConfig::default(),
    };
    if let Some(path) = &common.config {
        raw.merge(RawConfig::from_file(path)?);
    }
    raw.apply_overrides(&common.overrides)?;
    ExperimentConfig::from_raw(&raw)
}

/// Parses the arguments, runs the subcommand and returns the exit code.
/// Progress and results go to stdout, errors to stderr.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    if let Command::VerifyAll { list: true, .. } = cli.command {
        for (name, about) in CHECKS {
            println!("{name:<24} {about}");
        }
        return Ok(EXIT_PASS);
    }
    let mut common = cli.common.clone();
    if matches!(cli.command, Command::VerifyAll { .. }) && common.case.is_none() && common.config.is_none() {
        common.case = Some("case-a".into());
    }
    let cfg = load_config(&common)?;
    let dir = common.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let mut out = Output::new(dir)?;
    let code = match &cli.command {
        Command::Solve => cmd_solve(&cfg, &mut out)?,
        Command::Radial => cmd_radial(&cfg, &mut out)?,
        Command::Annulus => cmd_annulus(&cfg, &mut out)?,
        Command::Barriers => cmd_barriers(&cfg, &mut out)?,
        Command::Analyze { field } => cmd_analyze(&cfg, field.as_deref(), &mut out)?,
        Command::VerifyAll { only, .. } => cmd_verify(&cfg, only, &mut out)?,
        Command::Recursion => cmd_recursion(&mut out)?,
    };
    for p in &out.written {
        println!("wrote {}", p.display());
    }
    Ok(code)
}

fn nonlinearity(cfg: &ExperimentConfig, domain: &DomainSpec) -> Result<Nonlinearity, CliError> {
    Ok(cfg.require_g()?.build(domain.measure())?)
}

fn convergence_chart(report: &SolveReport) -> Chart {
    let upd = report.updates.iter().enumerate().map(|(i, u)| ((i + 1) as f64, *u)).collect();
    let gaps = report.gaps.iter().enumerate().map(|(i, g)| ((i + 1) as f64, *g)).collect();
    Chart {
        title: "Outer iteration".into(),
        x_label: "iteration".into(),
        y_label: "sup update / duality gap".into(),
        log_x: false,
        log_y: true,
        series: vec![Series::new("update", upd, Style::Line), Series::new("gap", gaps, Style::Line)],
    }
}

fn solve_configured(
    cfg: &ExperimentConfig,
    out: &mut Output,
) -> Result<(ScalarField, Nonlinearity, SolveReport), CliError> {
    let domain = cfg.require_domain()?;
    let g = nonlinearity(cfg, &domain)?;
    let (u, report) = solve(&domain, &g, &cfg.solver)?;
    out.field("solution.gmf", &u)?;
    out.text("solve_report.json", &report.to_json())?;
    out.text("solve_trace.csv", &report.trace_csv())?;
    out.text("convergence.svg", &convergence_chart(&report).to_svg())?;
    println!(
        "solve: {} iterations, residual {:.3e}, max u {:.9}, converged {} ({:.1} s)",
        report.iterations,
        report.residual,
        u.max(),
        report.converged,
        report.wall_ms / 1000.0
    );
    Ok((u, g, report))
}

fn cmd_solve(cfg: &ExperimentConfig, out: &mut Output) -> Result<i32, CliError> {
    let (_, _, report) = solve_configured(cfg, out)?;
    if report.converged {
        Ok(EXIT_PASS)
    } else {
        eprintln!("error: the outer iteration did not converge in {} iterations", report.iterations);
        Ok(EXIT_SOLVER)
    }
}

fn profile_chart(title: &str, p: &RadialProfile) -> Chart {
    Chart {
        title: title.into(),
        x_label: "r".into(),
        y_label: "ζ(r)".into(),
        log_x: false,
        log_y: false,
        series: vec![Series::new("ζ", p.r.iter().copied().zip(p.zeta.iter().copied()).collect(), Style::Line)],
    }
}

fn report_radial(
    name: &str,
    p: &RadialProfile,
    g: &Nonlinearity,
    cfg: &ExperimentConfig,
    domain: &DomainSpec,
    out: &mut Output,
) -> Result<(), CliError> {
    out.text(&format!("{name}.csv"), &p.to_csv())?;
    out.text(&format!("{name}.svg"), &profile_chart(name, p).to_svg())?;
    if p.n == 2 {
        let grid = std::sync::Arc::new(gmlab_core::field::build_grid(domain, cfg.solver.h)?);
        out.field(&format!("{name}.gmf"), &p.rasterize(grid)?)?;
    }
    let alpha = g.alpha.map_or("none".to_string(), |a| format!("{a:.9}"));
    let core = p.core.map_or("none".to_string(), |(a, b)| format!("[{a:.9}, {b:.9}]"));
    println!(
        "{name}: max ζ {:.12}, core radii {core}, core measure {:.9}, root of g {alpha}",
        p.max_value,
        p.core_measure()
    );
    Ok(())
}

fn cmd_radial(cfg: &ExperimentConfig, out: &mut Output) -> Result<i32, CliError> {
    let domain = cfg.require_domain()?;
    let DomainSpec::Ball { radius } = domain else {
        return Err(ConfigError::general("config", "radial needs domain.kind = ball").into());
    };
    let n = cfg.radial.n;
    let measure = gmlab_core::radial::unit_ball_volume(n) * radius.powi(n as i32);
    let g = cfg.require_g()?.build(measure)?;
    let p = solve_ball_with(&g, radius, n, cfg.radial.nodes)?;
    report_radial("radial", &p, &g, cfg, &domain, out)?;
    Ok(EXIT_PASS)
}

fn cmd_annulus(cfg: &ExperimentConfig, out: &mut Output) -> Result<i32, CliError> {
    let domain = cfg.require_domain()?;
    let DomainSpec::Annulus { r1, r2 } = domain else {
        return Err(ConfigError::general("config", "annulus needs domain.kind = annulus").into());
    };
    let a = &cfg.annulus;
    let n = a.n;
    let omega = gmlab_core::radial::unit_ball_volume(n);
    let g = cfg.require_g()?.build(omega * (r2.powi(n as i32) - r1.powi(n as i32)))?;
    let p = solve_annulus_with(&g, r1, r2, n, &AnnulusConfig { nodes: a.nodes, tol: a.tol, max_iter: a.max_iter })?;
    report_radial("annulus", &p, &g, cfg, &domain, out)?;
    Ok(EXIT_PASS)
}

fn configured_profile(cfg: &ExperimentConfig) -> Result<Profile, CliError> {
    match &cfg.profile {
        Some(ProfileSpec::Empirical) => {
            Err(ConfigError::general("config", "barriers need an explicit profile (power or table)").into())
        }
        Some(spec) => Ok(spec.build()?.expect("explicit profile")),
        None => Err(ConfigError::general("config", "this subcommand needs a [profile] block").into()),
    }
}

fn cmd_barriers(cfg: &ExperimentConfig, out: &mut Output) -> Result<i32, CliError> {
    let p = configured_profile(cfg)?;
    let b = cfg.barriers.clone().ok_or_else(|| ConfigError::general("config", "barriers need a [barriers] block"))?;
    let pair = solve_barriers_scaled(&p, b.r, b.n, b.scale, b.nodes)?;
    let s2 = std::f64::consts::SQRT_2;
    let mut csv = String::from("r,upper,lower,upper_start,lower_start,h_upper,h_lower,upper_bound,lower_bound\n");
    let (mut upper_ok, mut lower_ok) = (true, true);
    for (i, &x) in pair.upper.radii.iter().enumerate() {
        let hu = transform_h(&p, pair.upper.values[i])?;
        let hl = transform_h(&p, pair.lower.values[i])?;
        let (bu, bl) = (s2 * (pair.big_r - x), s2 * (x - pair.r));
        upper_ok &= hu <= bu + 1e-6;
        lower_ok &= hl >= bl - 1e-6;
        csv.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            x, pair.upper.values[i], pair.lower.values[i], pair.upper.start[i], pair.lower.start[i], hu, hl, bu, bl
        ));
    }
    out.text("barriers.csv", &csv)?;
    let series = |label: &str, v: &[f64]| {
        Series::new(label, pair.upper.radii.iter().copied().zip(v.iter().copied()).collect(), Style::Line)
    };
    let chart = Chart {
        title: "Radial barriers".into(),
        x_label: "|x|".into(),
        y_label: "v".into(),
        log_x: false,
        log_y: false,
        series: vec![
            series("upper limit", &pair.upper.values),
            series("upper start", &pair.upper.start),
            series("lower limit", &pair.lower.values),
            series("lower start", &pair.lower.start),
        ],
    };
    out.text("barriers.svg", &chart.to_svg())?;
    let monotone = pair.upper.monotonicity_defect <= 1e-10 && pair.lower.monotonicity_defect <= 1e-10;
    println!(
        "barriers: κ {:.12}, R {:.12}, iterations {}/{}, monotone {monotone}, upper bound {upper_ok}, lower bound {lower_ok}",
        pair.kappa, pair.big_r, pair.upper.iterations, pair.lower.iterations
    );
    Ok(if monotone && upper_ok && lower_ok { EXIT_PASS } else { EXIT_CHECK_FAILED })
}

/// Log-log scatter of `v` against the distance to the dead core with the fit.
pub fn detachment_chart(u: &ScalarField, report: &FreeBoundaryReport) -> Chart {
    let dist = core_distance(u, &report.dead_core.nodes);
    let top = u.max();
    let mut pts: Vec<(f64, f64)> = (0..dist.len())
        .filter(|&k| dist[k] > 0.0 && dist[k].is_finite() && top > u.values[k])
        .map(|k| (dist[k], top - u.values[k]))
        .collect();
    let stride = (pts.len() / 1500).max(1);
    pts = pts.into_iter().step_by(stride).collect();
    let mut series = vec![Series::new("max u − u", pts, Style::Points)];
    if let Some(d) = &report.detachment {
        let (a, b) = d.band;
        let line =
            (0..=20).map(|i| a * (b / a).powf(i as f64 / 20.0)).map(|x| (x, d.constant * x.powf(d.beta))).collect();
        series.push(Series::new(format!("fit β = {:.3}", d.beta), line, Style::Line));
    }
    Chart {
        title: "Detachment from the dead core".into(),
        x_label: "distance to the dead core".into(),
        y_label: "max u − u".into(),
        log_x: true,
        log_y: true,
        series,
    }
}

pub fn perimeter_chart(report: &FreeBoundaryReport) -> Chart {
    let pts =
        report.perimeters.as_ref().map_or(Vec::new(), |p| p.levels.iter().map(|(k, _, l)| (*k as f64, *l)).collect());
    Chart {
        title: "Level-set lengths at v = 2^-k max v".into(),
        x_label: "k".into(),
        y_label: "length".into(),
        log_x: false,
        log_y: false,
        series: vec![Series::new("length", pts, Style::Line)],
    }
}

pub fn ratio_chart(report: &FreeBoundaryReport) -> Chart {
    let mut series = Vec::new();
    if let Some(g) = &report.gradient {
        series.push(Series::new("sup |∇v|²/F(v) on {v ≤ t}", g.trace.clone(), Style::Line));
    }
    if let Some(h) = &report.htransform {
        series.push(Series::new("h-transform nondegeneracy", h.nondegeneracy.clone(), Style::Line));
        series.push(Series::new("density", h.density.clone(), Style::Line));
    }
    Chart {
        title: "Ratio traces toward the free boundary".into(),
        x_label: "t".into(),
        y_label: "ratio".into(),
        log_x: true,
        log_y: false,
        series,
    }
}

fn print_verdicts(report: &FreeBoundaryReport) {
    for v in &report.verdicts {
        println!("{} {:<28} {:.6e}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.value);
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
}

fn cmd_analyze(cfg: &ExperimentConfig, field: Option<&Path>, out: &mut Output) -> Result<i32, CliError> {
    let field = field.map(Path::to_path_buf).or_else(|| cfg.input_field.clone());
    let (u, g) = match field {
        Some(path) => {
            let u = read_field(&path)?;
            let g = nonlinearity(cfg, &u.grid.domain)?;
            (u, g)
        }
        None => {
            let (u, g, report) = solve_configured(cfg, out)?;
            if !report.converged {
                eprintln!("error: the outer iteration did not converge in {} iterations", report.iterations);
                return Ok(EXIT_SOLVER);
            }
            (u, g)
        }
    };
    let profile = match &cfg.profile {
        Some(spec) => spec.build()?,
        None => None,
    };
    let report = analyze(&u, &g, profile.as_ref(), &cfg.analysis)?;
    out.text("fb_report.json", &report.to_json())?;
    out.text("fb_report.csv", &report.to_csv())?;
    out.text("detachment.svg", &detachment_chart(&u, &report).to_svg())?;
    out.text("perimeters.svg", &perimeter_chart(&report).to_svg())?;
    out.text("ratios.svg", &ratio_chart(&report).to_svg())?;
    print_verdicts(&report);
    Ok(if report.all_pass() { EXIT_PASS } else { EXIT_CHECK_FAILED })
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(1.0)
}

/// `verify-all` is calibrated on the reference experiment; a configuration
/// describing another one is rejected rather than silently ignored.
fn check_reference(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    if let Some(d) = cfg.domain {
        if d != (DomainSpec::Ball { radius: 1.0 }) {
            return Err(ConfigError::general(
                "config",
                "verify-all runs on the unit disc; remove or fix the [domain] block",
            ));
        }
    }
    if let Some(g) = &cfg.g {
        let built = g.build(std::f64::consts::PI).map_err(|e| ConfigError::general("config", e.to_string()))?;
        let reference = verify::reference_g();
        let ok = built.kind == reference.kind
            && built.params.len() == reference.params.len()
            && built.params.iter().zip(&reference.params).all(|(a, b)| same(*a, *b));
        if !ok {
            return Err(ConfigError::general(
                "config",
                "verify-all runs with g(s) = s − π/4; remove or fix the [g] block",
            ));
        }
    }
    Ok(())
}

fn cmd_verify(cfg: &ExperimentConfig, only: &[String], out: &mut Output) -> Result<i32, CliError> {
    check_reference(cfg)?;
    for name in only {
        if !CHECKS.iter().any(|(n, _)| n == name) {
            return Err(
                ConfigError::general("--only", format!("unknown check '{name}' (see verify-all --list)")).into()
            );
        }
    }
    let verifier = Verifier::new(cfg.solver.clone(), cfg.analysis.clone());
    let mut results = Vec::new();
    for (name, _) in CHECKS {
        if only.is_empty() || only.iter().any(|o| o == name) {
            let r = verifier.run(name).expect("known check");
            println!("{}", r.line());
            results.push(r);
        }
    }
    if let Some(fine) = verifier.fine_if_computed() {
        out.field("solution.gmf", &fine.u)?;
        out.text("solve_report.json", &fine.report.to_json())?;
        out.text("fb_report.json", &fine.analysis.to_json())?;
        out.text("fb_report.csv", &fine.analysis.to_csv())?;
        out.text("detachment.svg", &detachment_chart(&fine.u, &fine.analysis).to_svg())?;
        out.text("perimeters.svg", &perimeter_chart(&fine.analysis).to_svg())?;
        out.text("ratios.svg", &ratio_chart(&fine.analysis).to_svg())?;
        println!("dead-core measure {:.6} (π/4 = {:.6})", fine.analysis.dead_core.measure, std::f64::consts::PI / 4.0);
    }
    out.text("verify.json", &results_json(&results))?;
    out.text("verify.csv", &results_csv(&results))?;
    let passed = results.iter().filter(|r| r.pass).count();
    println!("{passed}/{} checks passed", results.len());
    Ok(if results.iter().any(|r| r.solver_failure) {
        EXIT_SOLVER
    } else if passed == results.len() {
        EXIT_PASS
    } else {
        EXIT_CHECK_FAILED
    })
}

fn cmd_recursion(out: &mut Output) -> Result<i32, CliError> {
    let mut csv = String::from("recursion,a,b,start,limit,iterations,expected\n");
    let mut ok = true;
    for (name, spec, expected) in verify::recursions() {
        let r = recursion_fixed_point(&spec)?;
        ok &= (r.limit - expected).abs() <= 1e-12;
        println!(
            "{name:<14} t ↦ {:.6}·t + {:.6} from {:.6}: limit {:.15} after {} steps",
            spec.a, spec.b, spec.start, r.limit, r.iterations
        );
        csv.push_str(&format!(
            "{name},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}\n",
            spec.a, spec.b, spec.start, r.limit, r.iterations, expected
        ));
    }
    // Reported for information only; see RecursionSpec::gradient_condition.
    let spec = RecursionSpec::gradient_condition();
    match recursion_fixed_point(&spec) {
        Ok(r) => println!("gradient-cond  capped map from {:.6}: limit {:.15} (informational)", spec.start, r.limit),
        Err(e) => println!("gradient-cond  capped map from {:.6}: {e} (informational)", spec.start),
    }
    out.text("recursion.csv", &csv)?;
    Ok(if ok { EXIT_PASS } else { EXIT_CHECK_FAILED })
}
