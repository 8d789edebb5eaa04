//! Grid solver for `−Δu = g(|u ≥ u(x)|)` with `u = 0` on the boundary.
//!
//! The discrete problem is `K u = W F` where `K` is the symmetric cut-cell
//! stiffness matrix, `W` the diagonal of finite-volume node weights and
//! `F_i = g₊(|u ≥ u_i|)`. For non-decreasing `g` the admissible right-hand
//! sides `F` form the convex hull of the rearrangements of `g₊`, and the
//! solution is the minimiser of `E(F) = ½ (WF)ᵀ K⁻¹ (WF)` over that hull.
//! The outer loop is a Frank-Wolfe iteration whose linear oracle is exactly
//! the map `u ↦ g₊(λ_u(u))`, so each step costs one sort and one Poisson
//! solve, and the duality gap bounds the distance to the solution.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{build_grid, read_field, DistributionFunction, DomainSpec, Grid, ScalarField};
use crate::linalg::{dot, norm2, pcg, sup_norm, CgStats, Csr, Multigrid};
use crate::nonlinearity::{check_hypotheses, Nonlinearity};

/// Starting point of the outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Zero,
    /// Poisson solution with the constant right-hand side `g(|Ω|)`.
    PoissonG0,
    File(PathBuf),
}

impl Init {
    pub fn parse(s: &str) -> Option<Init> {
        match s {
            "zero" => Some(Init::Zero),
            "poisson_g0" => Some(Init::PoissonG0),
            _ => s.strip_prefix("file:").map(|p| Init::File(PathBuf::from(p))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Init::Zero => "zero".into(),
            Init::PoissonG0 => "poisson_g0".into(),
            Init::File(p) => format!("file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Grid spacing.
    pub h: f64,
    /// Outer tolerance on the sup-norm update and on the duality gap.
    pub tol_outer: f64,
    pub tol_inner: f64,
    /// Relative residual of each linear solve.
    pub cg_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub max_cg: usize,
    /// Upper bound on the Frank-Wolfe step after the first.
    pub damping: f64,
    pub init: Init,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            h: 1.0 / 128.0,
            tol_outer: 1e-6,
            tol_inner: 1e-10,
            cg_tol: 1e-10,
            max_outer: 2000,
            max_inner: 100,
            max_cg: 200,
            damping: 0.5,
            init: Init::Zero,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos =
            [("h", self.h), ("tol_outer", self.tol_outer), ("tol_inner", self.tol_inner), ("cg_tol", self.cg_tol)];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Range(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Range(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if self.max_outer == 0 || self.max_inner == 0 || self.max_cg == 0 {
            return Err(Error::Range("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Sup-norm change of `u` per outer iteration.
    pub updates: Vec<f64>,
    /// Frank-Wolfe duality gap per outer iteration.
    pub gaps: Vec<f64>,
    /// Relative residual `‖Ku − W g₊(λ_u(u))‖₂ / ‖W g₊(λ_u(u))‖₂`.
    pub residual: f64,
    pub wall_ms: f64,
    pub converged: bool,
}

/// `{:.16e}`, i.e. 17 significant digits; non-finite values become `null`.
pub fn json_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        format!(
            "{{\n  \"iterations\": {},\n  \"residual\": {},\n  \"wall_ms\": {},\n  \"converged\": {}\n}}\n",
            self.iterations,
            json_number(self.residual),
            json_number(self.wall_ms),
            self.converged
        )
    }

    /// Per-iteration trace with header `iteration,update,gap`.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iteration,update,gap\n");
        for (i, (u, g)) in self.updates.iter().zip(&self.gaps).enumerate() {
            s.push_str(&format!("{},{:.16e},{:.16e}\n", i + 1, u, g));
        }
        s
    }
}

/// The discrete Dirichlet Laplacian of a grid in the form `K u = W f`.
///
/// Grid edges to inside neighbours contribute `1` to the diagonal and `−1`
/// off it; an edge cut by the boundary at fraction `θ` contributes `1/θ` to
/// the diagonal only. `K` is scaled by `h^(dim−2)` so that `K u = W f`
/// approximates `−Δu = f` with the finite-volume weights `W`.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub grid: Arc<Grid>,
    pub stiffness: Csr,
    pub weights: Vec<f64>,
    coords: Vec<(i64, i64)>,
    mg: Multigrid,
}

impl Discretization {
    pub fn new(grid: Arc<Grid>) -> Result<Self> {
        let n = grid.len();
        let dirs = if grid.dim() == 1 { 2 } else { 4 };
        let scale = grid.h.powi(grid.dim() as i32 - 2);
        let mut t = Vec::with_capacity(n * (dirs + 1));
        for k in 0..n {
            let th = grid.theta(k);
            let mut diag = 0.0;
            for (d, &thd) in th.iter().enumerate().take(dirs) {
                match grid.neighbor(k, d) {
                    Some(nb) => {
                        diag += 1.0;
                        t.push((k, nb, -scale));
                    }
                    None => diag += 1.0 / thd,
                }
            }
            t.push((k, k, scale * diag));
        }
        let stiffness = Csr::from_triplets(n, n, t);
        let coords: Vec<(i64, i64)> = (0..n)
            .map(|k| {
                let (i, j) = grid.ij(k);
                (i as i64, j as i64)
            })
            .collect();
        let mg = Multigrid::new(stiffness.clone(), &coords)?;
        let weights = grid.weights().to_vec();
        Ok(Discretization { grid, stiffness, weights, coords, mg })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Solves `K x = b` (with `b` already weighted), warm-started from `x`.
    pub fn solve_into(&self, b: &[f64], x: &mut [f64], cfg: &SolverConfig) -> Result<CgStats> {
        pcg(&self.mg, b, x, cfg.cg_tol, cfg.max_cg)
    }

    /// Solves `K x = W f`.
    pub fn solve_weighted(&self, f: &[f64], x: &mut [f64], cfg: &SolverConfig) -> Result<CgStats> {
        let b: Vec<f64> = f.iter().zip(&self.weights).map(|(f, w)| f * w).collect();
        self.solve_into(&b, x, cfg)
    }

    /// Hierarchy for `K + W·diag(m)`.
    fn shifted(&self, m: &[f64]) -> Result<Multigrid> {
        let mut a = self.stiffness.clone();
        let d: Vec<f64> = m.iter().zip(&self.weights).map(|(m, w)| m * w).collect();
        a.add_diagonal(&d);
        Multigrid::new(a, &self.coords)
    }

    /// The discrete `−Δu` implied by the scheme, `W⁻¹ K u`.
    pub fn minus_laplacian(&self, u: &[f64]) -> Vec<f64> {
        let ku = self.stiffness.matvec(u);
        ku.iter().zip(&self.weights).map(|(a, w)| a / w).collect()
    }
}

/// Solves `−Δu = rhs` with zero boundary values on the grid of `rhs`.
pub fn poisson_solve(rhs: &ScalarField, cfg: &SolverConfig) -> Result<ScalarField> {
    let disc = Discretization::new(rhs.grid.clone())?;
    let mut x = vec![0.0; disc.len()];
    disc.solve_weighted(&rhs.values, &mut x, cfg)?;
    ScalarField::new(rhs.grid.clone(), x)
}

/// Relative residual `‖K u − W ψ(u)‖₂ / ‖W ψ(u)‖₂` (absolute when `ψ(u) = 0`).
pub fn semilinear_residual(disc: &Discretization, u: &[f64], psi: &dyn Fn(f64) -> f64) -> f64 {
    let ku = disc.stiffness.matvec(u);
    let wf: Vec<f64> = u.iter().zip(&disc.weights).map(|(&x, w)| w * psi(x)).collect();
    let r: Vec<f64> = ku.iter().zip(&wf).map(|(a, b)| a - b).collect();
    let d = norm2(&wf);
    if d > 0.0 {
        norm2(&r) / d
    } else {
        norm2(&r)
    }
}

/// Solves `−Δu = ψ(u)` for non-increasing `ψ` from `u0` by shifted Picard
/// steps `(K + W M) u⁺ = W (ψ(u) + M u)` with the nodewise shift
/// `M_i = max(−ψ'(u_i), 0)` (a Newton step for the monotone problem).
///
/// A jump or a steep stretch of `ψ` can make the full step overshoot, so the
/// step length is the minimiser along the step of the convex energy
/// `½uᵀKu − Σ w Ψ(u)`, `Ψ' = ψ`. Its derivative along the step is monotone
/// and needs only `ψ`, so the minimiser is found by bisection.
/// Returns the limit and the number of steps.
pub fn semilinear_solve(
    disc: &Discretization,
    psi: &dyn Fn(f64) -> f64,
    u0: Vec<f64>,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, usize)> {
    semilinear_solve_with_kinks(disc, psi, &[], u0, cfg)
}

/// [`semilinear_solve`] for a `ψ` that jumps down at the levels `kinks`.
///
/// A node whose step would cross a kink is stopped on it and pinned there
/// while `−Δu` at the node stays inside the jump `[ψ(k⁺), ψ(k⁻)]`; it is
/// released once it leaves that interval. Without this, Newton steps
/// overshoot the jump every time and the line search stalls.
pub fn semilinear_solve_with_kinks(
    disc: &Discretization,
    psi: &dyn Fn(f64) -> f64,
    kinks: &[f64],
    u0: Vec<f64>,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, usize)> {
    let mut u = u0;
    let n = u.len();
    let w = &disc.weights;
    let diag = disc.stiffness.diagonal();
    let scale = sup_norm(&u).max(1e-3);
    let delta = 1e-7 * scale;
    let near_kink = |x: f64| kinks.iter().copied().find(|&k| (x - k).abs() < delta);
    let jump = |k: f64| {
        let e = 1e-12 * k.abs().max(1.0);
        (psi(k + e), psi(k - e))
    };
    let mut pin: Vec<Option<f64>> = vec![None; n];
    let mut prev = f64::INFINITY;
    let mut growth = 0;
    for it in 1..=cfg.max_inner {
        let ku = disc.stiffness.matvec(&u);
        // Released nodes remember which side of the kink they leave to.
        let mut leaving = vec![0i8; n];
        let mut released = 0;
        for i in 0..n {
            if let Some(k) = pin[i] {
                let (lo, hi) = jump(k);
                let slack = 1e-9 * (lo.abs() + hi.abs() + 1.0);
                let need = ku[i] / w[i];
                if need > hi + slack || need < lo - slack {
                    pin[i] = None;
                    leaving[i] = if need > hi { -1 } else { 1 };
                    released += 1;
                }
            }
        }
        // Pinned nodes get a shift large enough to hold them; free nodes the
        // Newton shift, one-sided next to a kink so the jump stays out of it.
        let m: Vec<f64> = (0..n)
            .map(|i| {
                let x = u[i];
                if pin[i].is_some() {
                    return 1e12 * diag[i] / w[i];
                }
                let slope = match near_kink(x) {
                    Some(k) if x < k || (x == k && leaving[i] < 0) => (psi(x) - psi(x - delta)) / delta,
                    Some(_) => (psi(x + delta) - psi(x)) / delta,
                    None => (psi(x + delta) - psi(x - delta)) / (2.0 * delta),
                };
                (-slope).max(0.0)
            })
            .collect();
        let b: Vec<f64> =
            (0..n).map(|i| w[i] * if let Some(k) = pin[i] { m[i] * k } else { psi(u[i]) + m[i] * u[i] }).collect();
        // Correction form, so the tolerance is measured against the free rows
        // rather than the penalized ones.
        let r: Vec<f64> =
            (0..n).map(|i| if pin[i].is_some() { 0.0 } else { b[i] - ku[i] - w[i] * m[i] * u[i] }).collect();
        let mut corr = vec![0.0; n];
        if m.iter().all(|&v| v == 0.0) {
            disc.solve_into(&r, &mut corr, cfg)?;
        } else {
            let mg = disc.shifted(&m)?;
            pcg(&mg, &r, &mut corr, cfg.cg_tol, cfg.max_cg)?;
        }
        let mut next: Vec<f64> = u.iter().zip(&corr).map(|(a, c)| a + c).collect();
        let mut landing: Vec<Option<f64>> = vec![None; n];
        for i in 0..n {
            if let Some(k) = pin[i] {
                next[i] = k;
                continue;
            }
            let (x0, x) = (u[i], next[i]);
            if let Some(&k) = kinks.iter().find(|&&k| x0 != k && ((x0 < k && x >= k) || (x0 > k && x <= k))) {
                next[i] = k;
                landing[i] = Some(k);
            }
        }
        let d: Vec<f64> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
        let kd = disc.stiffness.matvec(&d);
        let (a0, a1) = (dot(&d, &ku), dot(&d, &kd));
        let slope = |s: f64| -> f64 { a0 + s * a1 - (0..n).map(|i| w[i] * psi(u[i] + s * d[i]) * d[i]).sum::<f64>() };
        let step = if slope(1.0) <= 0.0 {
            1.0
        } else {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if slope(mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let mut upd = 0.0f64;
        let mut pinned_now = 0;
        for i in 0..n {
            let du = step * d[i];
            upd = upd.max(du.abs());
            if step == 1.0 && landing[i].is_some() {
                u[i] = next[i];
                pin[i] = landing[i];
                pinned_now += 1;
            } else {
                u[i] += du;
            }
        }
        if upd < cfg.tol_inner && released == 0 && pinned_now == 0 {
            return Ok((u, it));
        }
        growth = if upd > prev { growth + 1 } else { 0 };
        if growth >= 3 {
            return Err(Error::InnerDivergence(format!("update grew three times in a row (now {upd:e})")));
        }
        prev = upd;
    }
    Err(Error::InnerDivergence(format!("no convergence in {} steps", cfg.max_inner)))
}

/// Solves `−Δu = g(λ(u))` for a frozen distribution function `λ`.
pub fn inner_semilinear(
    lambda: &DistributionFunction,
    g: &Nonlinearity,
    grid: Arc<Grid>,
    cfg: &SolverConfig,
) -> Result<ScalarField> {
    cfg.validate()?;
    let disc = Discretization::new(grid.clone())?;
    let psi = |t: f64| g.eval_clamped(lambda.eval(t));
    let (u, _) = semilinear_solve_with_kinks(&disc, &psi, &[lambda.max_value], vec![0.0; disc.len()], cfg)?;
    ScalarField::new(grid, u)
}

/// The linear oracle: `F_i = g₊(|u ≥ u_i|)` with node ranks measured by the
/// weights (rescaled to `|Ω|`) at the midpoint of each node's own weight,
/// averaged over groups of exactly tied values.
pub fn rank_rhs(u: &[f64], weights: &[f64], g: &Nonlinearity) -> Vec<f64> {
    let n = u.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| u[b].total_cmp(&u[a]).then(a.cmp(&b)));
    let scale = g.domain_measure / weights.iter().sum::<f64>();
    let mut out = vec![0.0; n];
    let mut cum = 0.0;
    let mut k = 0;
    while k < n {
        let mut e = k + 1;
        while e < n && u[order[e]] == u[order[k]] {
            e += 1;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for &i in &order[k..e] {
            let s = scale * (cum + 0.5 * weights[i]);
            num += weights[i] * g.eval_positive_part(s);
            den += weights[i];
            cum += weights[i];
        }
        for &i in &order[k..e] {
            out[i] = num / den;
        }
        k = e;
    }
    out
}

fn hypothesis(g: &Nonlinearity) -> Result<()> {
    match check_hypotheses(g) {
        Ok(_) => Ok(()),
        Err(e) => Err(Error::Hypothesis(e.to_string())),
    }
}

/// Runs the outer iteration on a prepared discretization and reports the
/// outcome without turning non-convergence into an error.
pub fn solve_on(disc: &Discretization, g: &Nonlinearity, cfg: &SolverConfig) -> Result<(ScalarField, SolveReport)> {
    cfg.validate()?;
    hypothesis(g)?;
    let start = Instant::now();
    let n = disc.len();
    let w = &disc.weights;
    let (mut f, mut u, mut first) = match &cfg.init {
        Init::Zero => (vec![0.0; n], vec![0.0; n], true),
        Init::PoissonG0 => {
            let f = vec![g.eval_positive_part(g.domain_measure); n];
            let mut u = vec![0.0; n];
            disc.solve_weighted(&f, &mut u, cfg)?;
            (f, u, false)
        }
        Init::File(path) => {
            let u0 = read_field(path)?;
            if u0.grid.len() != n || u0.grid.h != disc.grid.h || u0.grid.domain != disc.grid.domain {
                return Err(Error::Grid(format!("initial field {} does not match the solver grid", path.display())));
            }
            let f = rank_rhs(&u0.values, w, g);
            let mut u = u0.values.clone();
            disc.solve_weighted(&f, &mut u, cfg)?;
            (f, u, false)
        }
    };
    let mut report = SolveReport {
        iterations: 0,
        updates: Vec::new(),
        gaps: Vec::new(),
        residual: f64::NAN,
        wall_ms: 0.0,
        converged: false,
    };
    let mut up = u.clone();
    for it in 1..=cfg.max_outer {
        let fp = rank_rhs(&u, w, g);
        disc.solve_weighted(&fp, &mut up, cfg)?;
        if !first && fp == f {
            // F is already the oracle's vertex: an exact discrete fixed point.
            report.iterations = it;
            report.updates.push(0.0);
            report.gaps.push(0.0);
            report.converged = true;
            break;
        }
        let (mut gap, mut curv) = (0.0, 0.0);
        for i in 0..n {
            let d = f[i] - fp[i];
            gap += w[i] * d * u[i];
            curv += w[i] * d * (u[i] - up[i]);
        }
        let gamma = if first {
            1.0
        } else if curv > 0.0 {
            (gap / curv).clamp(0.0, cfg.damping)
        } else {
            0.0
        };
        first = false;
        let mut upd = 0.0f64;
        for i in 0..n {
            let du = gamma * (up[i] - u[i]);
            upd = upd.max(du.abs());
            u[i] += du;
            f[i] += gamma * (fp[i] - f[i]);
        }
        report.iterations = it;
        report.updates.push(upd);
        report.gaps.push(gap.max(0.0));
        let recent = &report.updates[report.updates.len().saturating_sub(STALL_WINDOW)..];
        let settled = recent.len() == STALL_WINDOW && recent.iter().all(|&x| x < cfg.tol_outer);
        if settled && gap <= gap_tolerance(cfg, &f, &u, w) {
            report.converged = true;
            break;
        }
    }
    let fp = rank_rhs(&u, w, g);
    let ku = disc.stiffness.matvec(&u);
    let wf: Vec<f64> = fp.iter().zip(w).map(|(a, b)| a * b).collect();
    let r: Vec<f64> = ku.iter().zip(&wf).map(|(a, b)| a - b).collect();
    let d = norm2(&wf);
    report.residual = if d > 0.0 { norm2(&r) / d } else { norm2(&r) };
    report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok((ScalarField::new(disc.grid.clone(), u)?, report))
}

/// Number of consecutive updates that must stay below `tol_outer`; a single
/// short step can be small merely because the line search chose a small γ.
const STALL_WINDOW: usize = 5;

/// Gap threshold `tol_outer·Σ w F u`, relative to the energy.
fn gap_tolerance(cfg: &SolverConfig, f: &[f64], u: &[f64], w: &[f64]) -> f64 {
    let energy: f64 = f.iter().zip(u).zip(w).map(|((a, b), c)| a * b * c).sum();
    cfg.tol_outer * energy.max(f64::MIN_POSITIVE)
}

/// Builds the grid for `domain`, solves, and fails with `FixedPoint` when the
/// outer iteration does not converge.
pub fn solve(domain: &DomainSpec, g: &Nonlinearity, cfg: &SolverConfig) -> Result<(ScalarField, SolveReport)> {
    cfg.validate()?;
    check_measure(domain, g)?;
    let grid = Arc::new(build_grid(domain, cfg.h)?);
    let disc = Discretization::new(grid)?;
    let (u, report) = solve_on(&disc, g, cfg)?;
    if !report.converged {
        return Err(Error::FixedPoint(format!(
            "outer iteration stalled after {} steps (last update {:e}, gap {:e})",
            report.iterations,
            report.updates.last().copied().unwrap_or(f64::NAN),
            report.gaps.last().copied().unwrap_or(f64::NAN)
        )));
    }
    Ok((u, report))
}

fn check_measure(domain: &DomainSpec, g: &Nonlinearity) -> Result<()> {
    let m = domain.measure();
    if (g.domain_measure - m).abs() > 1e-9 * m {
        return Err(Error::Domain(format!("g is defined on [0, {}] but |Ω| = {m}", g.domain_measure)));
    }
    Ok(())
}

/// Solves from `init = zero` and `init = poisson_g0` and returns the sup-norm
/// discrepancy of the two solutions.
pub fn uniqueness_experiment(domain: &DomainSpec, g: &Nonlinearity, cfg: &SolverConfig) -> Result<f64> {
    cfg.validate()?;
    check_measure(domain, g)?;
    let grid = Arc::new(build_grid(domain, cfg.h)?);
    let disc = Discretization::new(grid)?;
    let mut runs = Vec::new();
    for init in [Init::Zero, Init::PoissonG0] {
        let c = SolverConfig { init, ..cfg.clone() };
        let (u, rep) = solve_on(&disc, g, &c)?;
        if !rep.converged {
            return Err(Error::FixedPoint(format!("run from {} did not converge", c.init.name())));
        }
        runs.push(u);
    }
    Ok(runs[0].sup_distance(&runs[1]))
}

/// Largest deviation `|u(Rx) − u(x)|` over nodes at least `2h` inside the
/// domain and `n_rotations` random rotations `R` (seeded, so repeatable);
/// `u(Rx)` is bilinear interpolation.
pub fn symmetry_check(u: &ScalarField, n_rotations: usize) -> Result<f64> {
    symmetry_check_seeded(u, n_rotations, 0x5eed)
}

pub fn symmetry_check_seeded(u: &ScalarField, n_rotations: usize, seed: u64) -> Result<f64> {
    let g = &*u.grid;
    if g.dim() != 2 || !g.domain.is_rotation_invariant() {
        return Err(Error::Domain(format!("symmetry check needs a rotation-invariant 2-D domain, got {}", g.domain)));
    }
    let ext = u.extended_values();
    let sample = |x: f64, y: f64| -> f64 {
        let fx = (x - g.origin[0]) / g.h;
        let fy = (y - g.origin[1]) / g.h;
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        let (sx, sy) = (fx - i as f64, fy - j as f64);
        let at = |i: usize, j: usize| ext[i + g.nx * j];
        (1.0 - sx) * (1.0 - sy) * at(i, j)
            + sx * (1.0 - sy) * at(i + 1, j)
            + sx * sy * at(i + 1, j + 1)
            + (1.0 - sx) * sy * at(i, j + 1)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dev = 0.0f64;
    for _ in 0..n_rotations {
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let (s, c) = phi.sin_cos();
        for k in 0..g.len() {
            if g.boundary_distance(k) < 2.0 * g.h {
                continue;
            }
            let (x, y) = g.xy(k);
            let v = sample(c * x - s * y, s * x + c * y);
            dev = dev.max((v - u.values[k]).abs());
        }
    }
    Ok(dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn poisson_bubble() {
        let g = Arc::new(build_grid(&DomainSpec::Ball { radius: 1.0 }, 1.0 / 64.0).unwrap());
        let rhs = ScalarField::from_fn(g.clone(), |_, _| 1.0);
        let u = poisson_solve(&rhs, &SolverConfig::default()).unwrap();
        let exact = ScalarField::from_fn(g, |x, y| (1.0 - x * x - y * y) / 4.0);
        assert!(u.sup_distance(&exact) < 2e-3, "{}", u.sup_distance(&exact));
    }

    #[test]
    fn rank_rhs_of_ramp() {
        let w = vec![1.0; 4];
        let g = Nonlinearity::affine_with_root(1.0, 0.0, 4.0).unwrap();
        let f = rank_rhs(&[3.0, 1.0, 2.0, 1.0], &w, &g);
        assert_eq!(f, vec![0.5, 3.0, 1.5, 3.0]);
    }

    #[test]
    fn constant_g_converges_in_one_step() {
        let d = DomainSpec::Ball { radius: 1.0 };
        let g = Nonlinearity::constant(1.0, PI).unwrap();
        let cfg = SolverConfig { h: 1.0 / 32.0, ..Default::default() };
        let (_, rep) = solve(&d, &g, &cfg).unwrap();
        assert!(rep.iterations <= 2, "{rep:?}");
    }

    #[test]
    fn config_validation() {
        let cfg = SolverConfig { damping: 1.5, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(Error::Range(_))));
    }
}
