//! Quantitative checks of the free-boundary statements on a computed field:
//! dead-core geometry, detachment rate, non-degeneracy, supersolution and
//! gradient bounds, the h-transform, perimeters and integrability.
//!
//! Everything is phrased in terms of `v = max u − u`, which vanishes on the
//! dead core. Derivatives of `v` are taken from `u` because the grid
//! operators assume zero boundary values.

mod distance;

pub use distance::edt;

use crate::error::{Error, Result};
use crate::field::{
    distribution_function, gradient, hessian, laplacian, level_set_perimeter, DistributionFunction, ScalarField,
};
use crate::nonlinearity::Nonlinearity;
use crate::profile::{coefficient_a, transform_h, Profile};
use crate::quad::linear_fit;
use crate::solver::{json_number, rank_rhs};

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    /// `ε = c_eps·h²·sup|g|` resolves the dead core.
    pub c_eps: f64,
    /// Exponent of the refined gradient bound `|∇w|² − 2 ≤ w^{2−2s}`.
    pub s: f64,
    /// Alt-Phillips exponent for the Hessian bound.
    pub gamma: f64,
    /// Detachment fit band `[band_lo_cells·h, band_hi_fraction·diam]`.
    pub band_lo_cells: f64,
    pub band_hi_fraction: f64,
    pub min_band_nodes: usize,
    /// Near-FB limits are extrapolated from `{δ < v ≤ near_fb_fraction·max v}`.
    pub near_fb_fraction: f64,
    pub k_max: usize,
    pub q_list: Vec<f64>,
    pub integrability_p: Vec<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            c_eps: 10.0,
            s: 0.45,
            gamma: 4.0 / 3.0,
            band_lo_cells: 5.0,
            band_hi_fraction: 0.2,
            min_band_nodes: 50,
            near_fb_fraction: 0.1,
            k_max: 8,
            q_list: vec![1.0 / 6.0, 1.0 / 5.0, 1.0 / 3.0],
            integrability_p: vec![0.2, 0.5],
        }
    }
}

/// `ε = c_eps·h²·sup|g|`.
pub fn epsilon_rule(h: f64, sup_g: f64, c_eps: f64) -> f64 {
    c_eps * h * h * sup_g
}

/// `v = max u − u` with its derivatives, computed once per field.
struct Gap {
    v: Vec<f64>,
    max_v: f64,
    grad: Vec<[f64; 2]>,
    lap: Vec<f64>,
    /// Nodes whose axis neighbours are all inside.
    interior: Vec<bool>,
}

impl Gap {
    fn new(u: &ScalarField) -> Gap {
        let top = u.max();
        let v: Vec<f64> = u.values.iter().map(|x| top - x).collect();
        let max_v = v.iter().copied().fold(0.0, f64::max);
        let grad = gradient(u).into_iter().map(|[a, b]| [-a, -b]).collect();
        let lap = laplacian(u).values.into_iter().map(|x| -x).collect();
        let g = &*u.grid;
        let interior = (0..g.len()).map(|k| !g.is_cut(k)).collect();
        Gap { v, max_v, grad, lap, interior }
    }

    fn grad2(&self, k: usize) -> f64 {
        self.grad[k][0].powi(2) + self.grad[k][1].powi(2)
    }

    /// Nodes of `{δ < v < 0.9 max v}` with a full stencil.
    fn band(&self, delta: f64) -> impl Iterator<Item = usize> + '_ {
        (0..self.v.len()).filter(move |&k| self.interior[k] && self.v[k] > delta && self.v[k] < 0.9 * self.max_v)
    }

    fn near_fb_cap(&self, delta: f64, fraction: f64) -> f64 {
        (fraction * self.max_v).max(8.0 * delta)
    }
}

/// Intercept at `v = 0` of the least-squares line of `ratio` against `v^{1/3}`.
fn extrapolate_to_fb(samples: &[(f64, f64)]) -> Option<f64> {
    if samples.len() < 10 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = samples.iter().map(|&(v, r)| (v.cbrt(), r)).unzip();
    linear_fit(&x, &y).map(|f| f.0)
}

/// `true` when `a` and `b` are positive and within a factor `k` of each other.
pub fn within_factor(a: f64, b: f64, k: f64) -> bool {
    a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() && a.max(b) <= k * a.min(b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeadCore {
    pub epsilon: f64,
    /// `|D_ε|`, `|D_{ε/8}|`, `|D_{ε/64}|`.
    pub raw_measures: [f64; 3],
    /// Measure extrapolated to `ε → 0`.
    pub measure: f64,
    /// Fitted exponent `p` in `|D_ε| ≈ |D| + c·ε^p` (1/β for a detachment rate β).
    pub exponent: Option<f64>,
    /// Nodes with the smallest `v` whose weights add up to `measure`, plus
    /// any ties at the cut-off.
    pub nodes: Vec<usize>,
    pub touches_boundary: bool,
    pub warnings: Vec<String>,
}

/// Dead core by the ε-rule. The raw measure of `D_ε = {v ≤ ε}` carries a
/// bias of order `ε^{1/β}`; it is removed by Richardson extrapolation over
/// `ε, ε/8, ε/64` with a fitted exponent.
pub fn dead_core(u: &ScalarField, g: &Nonlinearity, cfg: &AnalysisConfig) -> DeadCore {
    dead_core_at(u, epsilon_rule(u.grid.h, g.sup_abs(), cfg.c_eps))
}

pub fn dead_core_at(u: &ScalarField, epsilon: f64) -> DeadCore {
    let grid = &*u.grid;
    let gap = Gap::new(u);
    let measure_at = |e: f64| -> f64 { (0..grid.len()).filter(|&k| gap.v[k] <= e).map(|k| grid.weight(k)).sum() };
    let m = [measure_at(epsilon), measure_at(epsilon / 8.0), measure_at(epsilon / 64.0)];
    let (d1, d2) = (m[0] - m[1], m[1] - m[2]);
    let (measure, exponent) = if d1 > 0.0 && d2 > 0.0 && d1 > d2 {
        let rho = d1 / d2;
        ((m[2] - d2 / (rho - 1.0)).clamp(0.0, m[2]), Some(rho.ln() / 8f64.ln()))
    } else {
        (m[2], None)
    };
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| gap.v[a].total_cmp(&gap.v[b]).then(a.cmp(&b)));
    let mut nodes = Vec::new();
    let mut acc = 0.0;
    for &k in &order {
        let w = grid.weight(k);
        if acc + 0.5 * w > measure {
            break;
        }
        acc += w;
        nodes.push(k);
    }
    // Ties at the cut-off all belong to the core.
    if let Some(&last) = nodes.last() {
        let cut = gap.v[last];
        nodes.extend(order[nodes.len()..].iter().copied().take_while(|&k| gap.v[k] == cut));
    }
    let touches_boundary = (0..grid.len()).any(|k| gap.v[k] <= epsilon && grid.is_cut(k));
    let mut warnings = Vec::new();
    if touches_boundary {
        warnings.push(format!("D_ε (ε = {epsilon:e}) touches the domain boundary"));
    }
    DeadCore { epsilon, raw_measures: m, measure, exponent, nodes, touches_boundary, warnings }
}

/// Distance of every inside node to the edge of the dead core, located at
/// the midpoints of grid edges joining a core node to a non-core node. Core
/// nodes get 0; all nodes get ∞ when the core has no such edge.
pub fn core_distance(u: &ScalarField, core: &[usize]) -> Vec<f64> {
    let g = &*u.grid;
    let mut in_core = vec![false; g.len()];
    for &k in core {
        in_core[k] = true;
    }
    // Doubled lattice: node (i, j) sits at (2i, 2j), edge midpoints in between.
    let (nx2, ny2) = (2 * g.nx - 1, if g.ny > 1 { 2 * g.ny - 1 } else { 1 });
    let mut site = vec![false; nx2 * ny2];
    let dirs = if g.dim() == 1 { 2 } else { 4 };
    for &k in core {
        let (i, j) = g.ij(k);
        for (d, &(di, dj)) in crate::field::DIRS.iter().enumerate().take(dirs) {
            if g.neighbor(k, d).is_some_and(|n| !in_core[n]) {
                let (x, y) = ((2 * i) as i64 + di, (2 * j) as i64 + dj);
                site[x as usize + nx2 * y as usize] = true;
            }
        }
    }
    let (d2, _) = edt(nx2, ny2, &site);
    (0..g.len())
        .map(|k| {
            if in_core[k] {
                return 0.0;
            }
            let (i, j) = g.ij(k);
            d2[2 * i + nx2 * 2 * j].sqrt() * 0.5 * g.h
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetachmentFit {
    pub beta: f64,
    /// Two standard errors of the slope.
    pub beta_band: f64,
    /// `C` in `v ≈ C·d^β` with the fitted `β`.
    pub constant: f64,
    /// `C` in `v ≈ C·d³`, from the nearer half of the band.
    pub cubic_constant: f64,
    pub band: (f64, f64),
    pub nodes: usize,
    pub rms: f64,
}

/// Log-log fit of `v` against the distance to the dead core over the band
/// `[5h, 0.2·diam]`.
pub fn detachment_fit(u: &ScalarField, core: &DeadCore, cfg: &AnalysisConfig) -> Result<DetachmentFit> {
    if core.nodes.is_empty() {
        return Err(Error::NoDeadCore("the dead core is empty".into()));
    }
    let g = &*u.grid;
    let gap = Gap::new(u);
    let dist = core_distance(u, &core.nodes);
    let band = (cfg.band_lo_cells * g.h, cfg.band_hi_fraction * g.domain.diameter());
    let pts: Vec<(f64, f64)> = (0..g.len())
        .filter(|&k| dist[k] >= band.0 && dist[k] <= band.1 && gap.v[k] > 0.0)
        .map(|k| (dist[k], gap.v[k]))
        .collect();
    if pts.len() < cfg.min_band_nodes {
        return Err(Error::InsufficientData(format!(
            "{} nodes in the fit band, need {}",
            pts.len(),
            cfg.min_band_nodes
        )));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().map(|&(d, v)| (d.ln(), v.ln())).unzip();
    let (c0, beta, rms) = linear_fit(&x, &y).ok_or_else(|| Error::InsufficientData("degenerate fit band".into()))?;
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let sxx: f64 = x.iter().map(|xi| (xi - mean).powi(2)).sum();
    let dof = (x.len() as f64 - 2.0).max(1.0);
    let se = rms * (x.len() as f64 / dof).sqrt() / sxx.sqrt();
    let mut ds: Vec<f64> = pts.iter().map(|p| p.0).collect();
    ds.sort_by(f64::total_cmp);
    let median = ds[ds.len() / 2];
    let near: Vec<f64> = pts.iter().filter(|p| p.0 <= median).map(|&(d, v)| (v / d.powi(3)).ln()).collect();
    let cubic_constant = (near.iter().sum::<f64>() / near.len() as f64).exp();
    Ok(DetachmentFit { beta, beta_band: 2.0 * se, constant: c0.exp(), cubic_constant, band, nodes: pts.len(), rms })
}

/// `g₊(λ(u(x)))` at every node, with `λ` the weighted rank measure the
/// solver uses, so the values match the discrete equation.
pub fn reaction_values(u: &ScalarField, g: &Nonlinearity) -> Vec<f64> {
    rank_rhs(&u.values, u.grid.weights(), g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioStats {
    pub min: f64,
    pub max: f64,
    /// Extrapolation of the ratio to the free boundary.
    pub near_fb_limit: Option<f64>,
    pub nodes: usize,
}

fn ratio_stats(gap: &Gap, delta: f64, fraction: f64, ratio: impl Fn(usize) -> f64) -> RatioStats {
    let cap = gap.near_fb_cap(delta, fraction);
    let (mut min, mut max, mut nodes) = (f64::INFINITY, f64::NEG_INFINITY, 0);
    let mut near = Vec::new();
    for k in gap.band(delta) {
        let r = ratio(k);
        if !r.is_finite() {
            continue;
        }
        min = min.min(r);
        max = max.max(r);
        nodes += 1;
        if gap.v[k] <= cap {
            near.push((gap.v[k], r));
        }
    }
    RatioStats { min, max, near_fb_limit: extrapolate_to_fb(&near), nodes }
}

/// `g-value / v^{1/3}` over `{δ < v < 0.9 max v}`; `reaction` holds the
/// reaction at every node (see [`reaction_values`]).
pub fn nondegeneracy_check(u: &ScalarField, reaction: &[f64], delta: f64, cfg: &AnalysisConfig) -> RatioStats {
    let gap = Gap::new(u);
    ratio_stats(&gap, delta, cfg.near_fb_fraction, |k| reaction[k] / gap.v[k].cbrt())
}

/// `Δv / v^q` over the same band.
pub fn supersolution_check(u: &ScalarField, q: f64, delta: f64, cfg: &AnalysisConfig) -> RatioStats {
    let gap = Gap::new(u);
    ratio_stats(&gap, delta, cfg.near_fb_fraction, |k| gap.lap[k] / gap.v[k].powf(q))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport {
    pub sup_global: f64,
    /// `(upper v of the band, sup of |∇v|²/F(v) on {δ < v ≤ upper})`.
    pub trace: Vec<(f64, f64)>,
    pub near_fb_limit: Option<f64>,
    /// `max (|∇w|² − 2)/w^{2−2s}` near the free boundary.
    pub refined_max: f64,
    pub refined_holds: bool,
}

/// `|∇v|²/F(v)` on `{v > δ}` and the refined bound for `w = h(v)`.
pub fn gradient_bound_check(u: &ScalarField, p: &Profile, delta: f64, cfg: &AnalysisConfig) -> Result<GradientReport> {
    let gap = Gap::new(u);
    let ratio = |k: usize| -> f64 {
        let f = p.big_f(gap.v[k].min(p.t_max));
        if f > 0.0 {
            gap.grad2(k) / f
        } else {
            f64::NAN
        }
    };
    let usable: Vec<usize> = (0..gap.v.len()).filter(|&k| gap.v[k] > delta && ratio(k).is_finite()).collect();
    let sup_global = usable.iter().map(|&k| ratio(k)).fold(0.0, f64::max);
    let mut trace = Vec::new();
    let mut upper = 2.0 * delta;
    while upper < gap.max_v {
        let sup = gap
            .band(delta)
            .filter(|&k| gap.v[k] <= upper)
            .map(ratio)
            .filter(|r| r.is_finite())
            .fold(f64::NAN, f64::max);
        if sup.is_finite() {
            trace.push((upper, sup));
        }
        upper *= 4.0;
    }
    let stats = ratio_stats(&gap, delta, cfg.near_fb_fraction, ratio);
    let cap = gap.near_fb_cap(delta, cfg.near_fb_fraction);
    let mut refined_max = f64::NEG_INFINITY;
    for k in gap.band(delta).filter(|&k| gap.v[k] <= cap) {
        let w = transform_h(p, gap.v[k].min(p.t_max))?;
        let r = (ratio(k) - 2.0) / w.powf(2.0 - 2.0 * cfg.s);
        if r.is_finite() {
            refined_max = refined_max.max(r);
        }
    }
    Ok(GradientReport {
        sup_global,
        trace,
        near_fb_limit: stats.near_fb_limit,
        refined_max,
        refined_holds: refined_max <= 1.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianReport {
    pub max_ratio: f64,
    /// `(h_b, ∫_{0 ≤ v ≤ h_b} |∇v|², energy / h_b)`.
    pub band_energy: Vec<(f64, f64, f64)>,
    /// Energy ratio at every smaller `h_b` stays below twice the one at the
    /// largest `h_b`.
    pub energy_linear: bool,
}

/// `|D²v|_∞ / v^{γ−1}` over the band, and the band Dirichlet energy for
/// `h_b = 2^{-k}·max|∇v|`, `k = 4..7`.
pub fn hessian_bound_check(u: &ScalarField, gamma: f64, delta: f64) -> HessianReport {
    let g = &*u.grid;
    let gap = Gap::new(u);
    let hess = hessian(u);
    let full = |k: usize| -> bool {
        let (i, j) = g.ij(k);
        let (i, j) = (i as i64, j as i64);
        (-1..=1).all(|di| (-1..=1).all(|dj| g.is_inside(i + di, j + dj)))
    };
    let max_ratio = gap
        .band(delta)
        .filter(|&k| g.dim() == 1 || full(k))
        .map(|k| hess[k].iter().fold(0.0f64, |m, x| m.max(x.abs())) / gap.v[k].powf(gamma - 1.0))
        .fold(0.0, f64::max);
    let gmax = (0..g.len()).map(|k| gap.grad2(k).sqrt()).fold(0.0, f64::max);
    let band_energy: Vec<(f64, f64, f64)> = (4..=7)
        .map(|k| {
            let hb = gmax * 2f64.powi(-k);
            let e: f64 = (0..g.len()).filter(|&i| gap.v[i] <= hb).map(|i| gap.grad2(i) * g.weight(i)).sum();
            (hb, e, e / hb)
        })
        .collect();
    let energy_linear = band_energy.iter().all(|b| b.2 <= 2.0 * band_energy[0].2);
    HessianReport { max_ratio, band_energy, energy_linear }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HTransform {
    pub w: ScalarField,
    /// `sup |∇w|` over the band.
    pub lipschitz: f64,
    /// `sup |∇w|²` over the near-FB band.
    pub near_fb_grad2: f64,
    /// `sup |Δw − a(v)(2 − |∇w|²)/w|` over the near-FB band.
    pub one_phase_residual: f64,
    /// `(ρ, min over sampled FB points of sup_{B_ρ} w / ρ)`.
    pub nondegeneracy: Vec<(f64, f64)>,
    /// `(ρ, worst c with B_{ρ/c} ⊂ {w > 0} ∩ B_ρ)`.
    pub density: Vec<(f64, f64)>,
    /// `∫_band (|∇w|² − 2)₊ / w`.
    pub excess_integral: f64,
    pub fb_points: usize,
}

/// `w = h(v)` and the one-phase diagnostics.
pub fn htransform_field(
    u: &ScalarField,
    p: &Profile,
    core: &DeadCore,
    delta: f64,
    cfg: &AnalysisConfig,
) -> Result<HTransform> {
    transform_h(p, p.t_max.min(1e-3))?;
    if core.nodes.is_empty() {
        return Err(Error::NoDeadCore("the dead core is empty".into()));
    }
    let g = &*u.grid;
    let gap = Gap::new(u);
    let h_top = transform_h(p, p.t_max)?;
    let slope_top = 1.0 / p.big_f(p.t_max).sqrt();
    let wv: Vec<f64> = gap
        .v
        .iter()
        .map(|&t| if t <= p.t_max { transform_h(p, t.max(0.0)) } else { Ok(h_top + (t - p.t_max) * slope_top) })
        .collect::<Result<_>>()?;
    let w = ScalarField::new(u.grid.clone(), wv)?;
    let wgrad = gradient(&w);
    let wlap = laplacian(&w).values;
    let cap = gap.near_fb_cap(delta, cfg.near_fb_fraction);
    let (mut lipschitz, mut near_fb_grad2, mut residual, mut excess) = (0.0f64, 0.0f64, 0.0f64, 0.0);
    for k in gap.band(delta) {
        let g2 = wgrad[k][0].powi(2) + wgrad[k][1].powi(2);
        lipschitz = lipschitz.max(g2.sqrt());
        excess += (g2 - 2.0).max(0.0) / w.values[k] * g.weight(k);
        if gap.v[k] <= cap {
            near_fb_grad2 = near_fb_grad2.max(g2);
            let a = coefficient_a(p, gap.v[k].min(p.t_max))?;
            residual = residual.max((wlap[k] - a * (2.0 - g2) / w.values[k]).abs());
        }
    }
    let in_core = {
        let mut m = vec![false; g.len()];
        for &k in &core.nodes {
            m[k] = true;
        }
        m
    };
    let dirs = if g.dim() == 1 { 2 } else { 4 };
    let fb: Vec<usize> = core
        .nodes
        .iter()
        .copied()
        .filter(|&k| (0..dirs).any(|d| g.neighbor(k, d).is_some_and(|n| !in_core[n])))
        .collect();
    let stride = fb.len().div_ceil(64).max(1);
    let points: Vec<usize> = fb.iter().copied().step_by(stride).collect();
    let dist = core_distance(u, &core.nodes);
    let mut nondegeneracy = Vec::new();
    let mut density = Vec::new();
    for m in [4.0, 8.0, 16.0, 32.0] {
        let rho = m * g.h;
        let reach = m as i64;
        let (mut worst_sup, mut worst_c) = (f64::INFINITY, 0.0f64);
        for &c in &points {
            let (ci, cj) = g.ij(c);
            let (cx, cy) = g.xy(c);
            let (mut sup, mut inscribed) = (0.0f64, 0.0f64);
            let yr = if g.dim() == 1 { 0 } else { reach };
            for dj in -yr..=yr {
                for di in -reach..=reach {
                    if let Some(k) = g.unknown(ci as i64 + di, cj as i64 + dj) {
                        let (x, y) = g.xy(k);
                        let r = (x - cx).hypot(y - cy);
                        if r > rho {
                            continue;
                        }
                        sup = sup.max(w.values[k]);
                        if !in_core[k] {
                            inscribed = inscribed.max(dist[k].min(rho - r));
                        }
                    }
                }
            }
            worst_sup = worst_sup.min(sup / rho);
            worst_c = worst_c.max(if inscribed > 0.0 { rho / inscribed } else { f64::INFINITY });
        }
        nondegeneracy.push((rho, worst_sup));
        density.push((rho, worst_c));
    }
    Ok(HTransform {
        w,
        lipschitz,
        near_fb_grad2,
        one_phase_residual: residual,
        nondegeneracy,
        density,
        excess_integral: excess,
        fb_points: points.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerimeterSequence {
    /// `(k, t_k, length of {v = t_k})`.
    pub levels: Vec<(usize, f64, f64)>,
    /// Tail (second half) varies by less than a factor 2.
    pub bounded: bool,
    pub warnings: Vec<String>,
}

/// Lengths of `{v = 2^{-k} max v}`, `k = 1..k_max`, stopping below `δ`.
pub fn perimeter_sequence(u: &ScalarField, k_max: usize, delta: f64) -> Result<PerimeterSequence> {
    let top = u.max();
    let max_v = top - u.min().min(0.0);
    let mut levels = Vec::new();
    let mut warnings = Vec::new();
    for k in 1..=k_max {
        let t = max_v * 2f64.powi(-(k as i32));
        if t < delta {
            warnings.push(format!("sequence truncated at k = {k}: t_k = {t:e} is below the resolution {delta:e}"));
            break;
        }
        levels.push((k, t, level_set_perimeter(u, top - t)?));
    }
    let tail = &levels[levels.len() / 2..];
    let (lo, hi) = tail.iter().fold((f64::INFINITY, 0.0f64), |(a, b), l| (a.min(l.2), b.max(l.2)));
    let bounded = !tail.is_empty() && lo > 0.0 && hi < 2.0 * lo;
    Ok(PerimeterSequence { levels, bounded, warnings })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Integrability {
    pub p: f64,
    /// `(ε_k, Σ_{v > ε_k} v^{-p}·w)`.
    pub partial_sums: Vec<(f64, f64)>,
    /// Fitted ratio of consecutive increments.
    pub increment_ratio: f64,
    pub convergent: bool,
    /// Geometric-tail extrapolation of the sum when convergent.
    pub limit: Option<f64>,
}

/// Partial sums of `v^{-p}` over `{v > ε_k}` with `ε_k = 2^{-k} max v ≥ δ`.
pub fn integrability_check(u: &ScalarField, p: f64, delta: f64) -> Result<Integrability> {
    let g = &*u.grid;
    let gap = Gap::new(u);
    let mut partial_sums = Vec::new();
    let mut k = 1;
    loop {
        let e = gap.max_v * 2f64.powi(-k);
        if e < delta || k > 60 {
            break;
        }
        let s: f64 = (0..g.len()).filter(|&i| gap.v[i] > e).map(|i| gap.v[i].powf(-p) * g.weight(i)).sum();
        partial_sums.push((e, s));
        k += 1;
    }
    let inc: Vec<f64> = partial_sums.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let tail: Vec<(f64, f64)> = inc
        .iter()
        .enumerate()
        .skip(inc.len() / 2)
        .filter(|(_, d)| **d > 0.0)
        .map(|(i, d)| (i as f64, d.ln()))
        .collect();
    if tail.len() < 3 {
        return Err(Error::InsufficientData(format!("only {} usable levels above the resolution", tail.len())));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = tail.into_iter().unzip();
    let ratio =
        linear_fit(&x, &y).map(|f| f.1.exp()).ok_or_else(|| Error::InsufficientData("flat increments".into()))?;
    let convergent = ratio < 1.0;
    let limit = convergent.then(|| partial_sums.last().unwrap().1 + inc.last().unwrap() * ratio / (1.0 - ratio));
    Ok(Integrability { p, partial_sums, increment_ratio: ratio, convergent, limit })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DifferentialInequality {
    pub c: f64,
    /// Smallest relative slack `C·(f³(t) − f³(s))/(t − s) − 1` on the
    /// verification half.
    pub min_slack: f64,
    pub holds: bool,
}

/// Integrated form `f³(t) − f³(s) ≥ (t − s)/C` on consecutive samples `t`
/// (increasing). `C` is the smallest constant that works on the upper half
/// of the samples; the lower half (nearest the free boundary) verifies it.
pub fn differential_inequality(t: &[f64], f: &[f64]) -> Result<DifferentialInequality> {
    if t.len() < 4 || t.len() != f.len() {
        return Err(Error::InsufficientData("need at least four samples".into()));
    }
    let slopes: Vec<f64> = (0..t.len() - 1).map(|i| (f[i + 1].powi(3) - f[i].powi(3)) / (t[i + 1] - t[i])).collect();
    let half = slopes.len() / 2;
    let min_cal = slopes[half..].iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_cal > 0.0) {
        return Ok(DifferentialInequality { c: f64::INFINITY, min_slack: f64::NEG_INFINITY, holds: false });
    }
    let c = 1.0 / min_cal;
    let min_slack = slopes[..half].iter().map(|s| c * s - 1.0).fold(f64::INFINITY, f64::min);
    Ok(DifferentialInequality { c, min_slack, holds: min_slack >= -1e-9 })
}

/// The reaction profile `f(t) = g₊(λ(max u − t))` at 64 geometric levels in
/// `[δ, max v]`.
pub fn reaction_profile_samples(df: &DistributionFunction, g: &Nonlinearity, delta: f64) -> (Vec<f64>, Vec<f64>) {
    let top = df.max_value;
    let max_v = top - df.t[0].min(0.0);
    let ratio = (max_v / delta).ln();
    let t: Vec<f64> = (0..64).map(|i| delta * (ratio * i as f64 / 63.0).exp()).collect();
    let f = t.iter().map(|&s| g.eval_positive_part(df.eval(top - s))).collect();
    (t, f)
}

pub fn differential_inequality_check(
    df: &DistributionFunction,
    g: &Nonlinearity,
    delta: f64,
) -> Result<DifferentialInequality> {
    let (t, f) = reaction_profile_samples(df, g, delta);
    differential_inequality(&t, &f)
}

/// The profile `f(t) = g₊(λ(max u − t))` read off the field through the
/// nodal reaction, tabulated on `[δ, max v]` and extended below `δ` by its
/// power-law fit.
pub fn empirical_profile(u: &ScalarField, g: &Nonlinearity, delta: f64) -> Result<Profile> {
    let top = u.max();
    let reaction = reaction_values(u, g);
    let mut pairs: Vec<(f64, f64)> = u.values.iter().zip(&reaction).map(|(x, r)| (top - x, *r)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let max_v = pairs.last().map_or(0.0, |p| p.0);
    if !(max_v > delta) {
        return Err(Error::NoFreeBoundary("the field does not rise above the resolution".into()));
    }
    let n = 400;
    let ratio = (max_v / delta).ln();
    let mut t = Vec::with_capacity(n);
    let mut f: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        let s = delta * (ratio * i as f64 / (n - 1) as f64).exp();
        let j = pairs.partition_point(|p| p.0 < s).clamp(1, pairs.len() - 1);
        let (a, b) = (pairs[j - 1], pairs[j]);
        let fs = if b.0 > a.0 { a.1 + (b.1 - a.1) * (s - a.0) / (b.0 - a.0) } else { b.1 };
        if fs > 0.0 && f.last().is_none_or(|&l| fs > l) {
            t.push(s);
            f.push(fs);
        }
    }
    if t.len() < 2 {
        return Err(Error::NoFreeBoundary("the reaction vanishes on the whole resolved range".into()));
    }
    Profile::table(t, f)
}

/// One line of the pass/fail summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeBoundaryReport {
    pub h: f64,
    pub delta: f64,
    pub dead_core: DeadCore,
    pub detachment: Option<DetachmentFit>,
    pub nondegeneracy: RatioStats,
    /// `(q, stats)` for every supersolution exponent.
    pub supersolution: Vec<(f64, RatioStats)>,
    pub gradient: Option<GradientReport>,
    pub hessian: HessianReport,
    pub htransform: Option<HTransform>,
    pub perimeters: Option<PerimeterSequence>,
    pub integrability: Vec<Integrability>,
    pub differential: Option<DifferentialInequality>,
    pub verdicts: Vec<Verdict>,
    pub warnings: Vec<String>,
}

/// Runs every check. Without an explicit profile the empirical one is used.
/// Checks whose preconditions fail are recorded as warnings and `None`.
pub fn analyze(
    u: &ScalarField,
    g: &Nonlinearity,
    profile: Option<&Profile>,
    cfg: &AnalysisConfig,
) -> Result<FreeBoundaryReport> {
    let h = u.grid.h;
    let delta = epsilon_rule(h, g.sup_abs(), cfg.c_eps);
    let core = dead_core(u, g, cfg);
    let mut warnings = core.warnings.clone();
    let mut note = |r: &Error| warnings.push(r.to_string());
    let detachment = detachment_fit(u, &core, cfg).map_err(|e| note(&e)).ok();
    let reaction = reaction_values(u, g);
    let nondegeneracy = nondegeneracy_check(u, &reaction, delta, cfg);
    let supersolution: Vec<(f64, RatioStats)> =
        cfg.q_list.iter().map(|&q| (q, supersolution_check(u, q, delta, cfg))).collect();
    let owned;
    let profile = match profile {
        Some(p) => Some(p),
        None => match empirical_profile(u, g, delta) {
            Ok(p) => {
                owned = p;
                Some(&owned)
            }
            Err(e) => {
                note(&e);
                None
            }
        },
    };
    let gradient = profile.and_then(|p| gradient_bound_check(u, p, delta, cfg).map_err(|e| note(&e)).ok());
    let hessian = hessian_bound_check(u, cfg.gamma, delta);
    let htransform = profile.and_then(|p| htransform_field(u, p, &core, delta, cfg).map_err(|e| note(&e)).ok());
    let perimeters =
        if u.grid.dim() == 2 { perimeter_sequence(u, cfg.k_max, delta).map_err(|e| note(&e)).ok() } else { None };
    let integrability: Vec<Integrability> = cfg
        .integrability_p
        .iter()
        .filter_map(|&p| integrability_check(u, p, delta).map_err(|e| note(&e)).ok())
        .collect();
    let differential =
        distribution_function(u).and_then(|df| differential_inequality_check(&df, g, delta)).map_err(|e| note(&e)).ok();
    if let Some(p) = &perimeters {
        warnings.extend(p.warnings.iter().cloned());
    }

    let mut verdicts = Vec::new();
    let mut verdict = |name: &str, value: f64, pass: bool| verdicts.push(Verdict { name: name.into(), value, pass });
    verdict("dead_core_measure", core.measure, core.measure > 0.0);
    if let Some(d) = &detachment {
        verdict("detachment_beta", d.beta, d.beta.is_finite() && d.beta > 0.0);
    }
    verdict("nondegeneracy_min_ratio", nondegeneracy.min, nondegeneracy.min > 0.0 && nondegeneracy.min.is_finite());
    for (q, s) in &supersolution {
        verdict(&format!("supersolution_q{q:.4}"), s.max, s.max.is_finite());
    }
    if let Some(gr) = &gradient {
        let v = gr.near_fb_limit.unwrap_or(f64::NAN);
        verdict("gradient_near_fb_limit", v, v.is_finite());
        verdict("gradient_refined_bound", gr.refined_max, gr.refined_holds);
    }
    verdict("hessian_max_ratio", hessian.max_ratio, hessian.max_ratio.is_finite());
    verdict("band_energy_linear", hessian.band_energy.last().map_or(f64::NAN, |b| b.2), hessian.energy_linear);
    if let Some(ht) = &htransform {
        verdict("htransform_lipschitz", ht.lipschitz, ht.lipschitz.is_finite());
        verdict("one_phase_residual", ht.one_phase_residual, ht.one_phase_residual.is_finite());
        let nd = ht.nondegeneracy.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        verdict("htransform_nondegeneracy", nd, nd > 0.0);
        let dens = ht.density.iter().map(|x| x.1).fold(0.0, f64::max);
        verdict("uniform_density", dens, dens.is_finite());
        verdict("excess_integral", ht.excess_integral, ht.excess_integral.is_finite());
    }
    if let Some(p) = &perimeters {
        verdict("perimeter_bounded", p.levels.last().map_or(f64::NAN, |l| l.2), p.bounded);
    }
    // Only exponents below γ − 1 come with an integrability claim; larger
    // ones are reported for information.
    for i in &integrability {
        verdict(&format!("integrability_p{:.2}", i.p), i.increment_ratio, i.convergent || i.p >= cfg.gamma - 1.0);
    }
    if let Some(d) = &differential {
        verdict("differential_inequality", d.min_slack, d.holds);
    }
    Ok(FreeBoundaryReport {
        h,
        delta,
        dead_core: core,
        detachment,
        nondegeneracy,
        supersolution,
        gradient,
        hessian,
        htransform,
        perimeters,
        integrability,
        differential,
        verdicts,
        warnings,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map_or("null".into(), json_number)
}

fn json_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn stats_json(s: &RatioStats) -> String {
    format!(
        "{{\"min\": {}, \"max\": {}, \"near_fb_limit\": {}, \"nodes\": {}}}",
        json_number(s.min),
        json_number(s.max),
        opt(s.near_fb_limit),
        s.nodes
    )
}

fn pairs_json(v: &[(f64, f64)]) -> String {
    let items: Vec<String> = v.iter().map(|(a, b)| format!("[{}, {}]", json_number(*a), json_number(*b))).collect();
    format!("[{}]", items.join(", "))
}

impl FreeBoundaryReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn to_json(&self) -> String {
        let dc = &self.dead_core;
        let mut parts = vec![
            format!("\"h\": {}", json_number(self.h)),
            format!("\"delta\": {}", json_number(self.delta)),
            format!(
                "\"dead_core\": {{\"epsilon\": {}, \"measure\": {}, \"raw_measures\": [{}, {}, {}], \"exponent\": {}, \"nodes\": {}, \"touches_boundary\": {}}}",
                json_number(dc.epsilon),
                json_number(dc.measure),
                json_number(dc.raw_measures[0]),
                json_number(dc.raw_measures[1]),
                json_number(dc.raw_measures[2]),
                opt(dc.exponent),
                dc.nodes.len(),
                dc.touches_boundary
            ),
        ];
        parts.push(match &self.detachment {
            Some(d) => format!(
                "\"detachment\": {{\"beta\": {}, \"beta_band\": {}, \"constant\": {}, \"cubic_constant\": {}, \"band\": [{}, {}], \"nodes\": {}, \"rms\": {}}}",
                json_number(d.beta),
                json_number(d.beta_band),
                json_number(d.constant),
                json_number(d.cubic_constant),
                json_number(d.band.0),
                json_number(d.band.1),
                d.nodes,
                json_number(d.rms)
            ),
            None => "\"detachment\": null".into(),
        });
        parts.push(format!("\"nondegeneracy\": {}", stats_json(&self.nondegeneracy)));
        let sup: Vec<String> = self
            .supersolution
            .iter()
            .map(|(q, s)| format!("{{\"q\": {}, \"stats\": {}}}", json_number(*q), stats_json(s)))
            .collect();
        parts.push(format!("\"supersolution\": [{}]", sup.join(", ")));
        parts.push(match &self.gradient {
            Some(g) => format!(
                "\"gradient\": {{\"sup_global\": {}, \"trace\": {}, \"near_fb_limit\": {}, \"refined_max\": {}, \"refined_holds\": {}}}",
                json_number(g.sup_global),
                pairs_json(&g.trace),
                opt(g.near_fb_limit),
                json_number(g.refined_max),
                g.refined_holds
            ),
            None => "\"gradient\": null".into(),
        });
        let be: Vec<String> = self
            .hessian
            .band_energy
            .iter()
            .map(|(a, b, c)| format!("[{}, {}, {}]", json_number(*a), json_number(*b), json_number(*c)))
            .collect();
        parts.push(format!(
            "\"hessian\": {{\"max_ratio\": {}, \"band_energy\": [{}], \"energy_linear\": {}}}",
            json_number(self.hessian.max_ratio),
            be.join(", "),
            self.hessian.energy_linear
        ));
        parts.push(match &self.htransform {
            Some(t) => format!(
                "\"htransform\": {{\"lipschitz\": {}, \"near_fb_grad2\": {}, \"one_phase_residual\": {}, \"nondegeneracy\": {}, \"density\": {}, \"excess_integral\": {}, \"fb_points\": {}}}",
                json_number(t.lipschitz),
                json_number(t.near_fb_grad2),
                json_number(t.one_phase_residual),
                pairs_json(&t.nondegeneracy),
                pairs_json(&t.density),
                json_number(t.excess_integral),
                t.fb_points
            ),
            None => "\"htransform\": null".into(),
        });
        parts.push(match &self.perimeters {
            Some(p) => {
                let lv: Vec<String> = p
                    .levels
                    .iter()
                    .map(|(k, t, l)| format!("[{k}, {}, {}]", json_number(*t), json_number(*l)))
                    .collect();
                format!("\"perimeters\": {{\"levels\": [{}], \"bounded\": {}}}", lv.join(", "), p.bounded)
            }
            None => "\"perimeters\": null".into(),
        });
        let ints: Vec<String> = self
            .integrability
            .iter()
            .map(|i| {
                format!(
                    "{{\"p\": {}, \"partial_sums\": {}, \"increment_ratio\": {}, \"convergent\": {}, \"limit\": {}}}",
                    json_number(i.p),
                    pairs_json(&i.partial_sums),
                    json_number(i.increment_ratio),
                    i.convergent,
                    opt(i.limit)
                )
            })
            .collect();
        parts.push(format!("\"integrability\": [{}]", ints.join(", ")));
        parts.push(match &self.differential {
            Some(d) => format!(
                "\"differential_inequality\": {{\"c\": {}, \"min_slack\": {}, \"holds\": {}}}",
                json_number(d.c),
                json_number(d.min_slack),
                d.holds
            ),
            None => "\"differential_inequality\": null".into(),
        });
        let vs: Vec<String> = self
            .verdicts
            .iter()
            .map(|v| {
                format!(
                    "{{\"name\": {}, \"value\": {}, \"pass\": {}}}",
                    json_string(&v.name),
                    json_number(v.value),
                    v.pass
                )
            })
            .collect();
        parts.push(format!("\"verdicts\": [{}]", vs.join(", ")));
        let ws: Vec<String> = self.warnings.iter().map(|w| json_string(w)).collect();
        parts.push(format!("\"warnings\": [{}]", ws.join(", ")));
        format!("{{\n  {}\n}}\n", parts.join(",\n  "))
    }

    /// One `check,value,pass` row per verdict.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("check,value,pass\n");
        for v in &self.verdicts {
            s.push_str(&format!("{},{:.16e},{}\n", v.name, v.value, v.pass));
        }
        s
    }
}
