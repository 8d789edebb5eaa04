//! Radial solutions: the quadrature oracle on balls, the nonlocal problem on
//! annuli, and the sub/supersolution barriers of the semilinear problem
//! `Δv = f(v)` on annuli.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField};
use crate::linalg::tridiagonal;
use crate::nonlinearity::{check_hypotheses, HypothesisCase, Nonlinearity};
use crate::profile::{transform_h, Profile};
use crate::quad::simpson;

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// A radial function `ζ(|x|)` sampled on increasing radii.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub n: usize,
    pub r: Vec<f64>,
    pub zeta: Vec<f64>,
    pub dzeta: Vec<f64>,
    /// Reaction `g(|ζ ≥ ζ(r)|)` at each radius.
    pub g_value: Vec<f64>,
    /// Inner and outer radius of the plateau `{ζ = max ζ}`.
    pub core: Option<(f64, f64)>,
    pub max_value: f64,
}

/// Relative threshold on `|ζ'|` that delimits the plateau of a quadrature
/// profile, where `ζ'` vanishes identically.
pub const PLATEAU_SLOPE_TOL: f64 = 1e-10;

impl RadialProfile {
    /// Cubic Hermite interpolation of `ζ`; 0 outside the sampled range.
    pub fn value(&self, r: f64) -> f64 {
        let n = self.r.len();
        if r < self.r[0] || r > self.r[n - 1] {
            return 0.0;
        }
        let i = self.r.partition_point(|&x| x <= r).clamp(1, n - 1) - 1;
        let dt = self.r[i + 1] - self.r[i];
        let s = (r - self.r[i]) / dt;
        let (h00, h10) = ((1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s), s * (1.0 - s) * (1.0 - s));
        let (h01, h11) = (s * s * (3.0 - 2.0 * s), s * s * (s - 1.0));
        h00 * self.zeta[i] + h10 * dt * self.dzeta[i] + h01 * self.zeta[i + 1] + h11 * dt * self.dzeta[i + 1]
    }

    /// `n ω_n ∫ r^{n-1}` over the plateau.
    pub fn core_measure(&self) -> f64 {
        self.core.map_or(0.0, |(a, b)| unit_ball_volume(self.n) * (b.powi(self.n as i32) - a.powi(self.n as i32)))
    }

    /// CSV with header `r,zeta,dzeta,g`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,zeta,dzeta,g\n");
        for i in 0..self.r.len() {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.r[i], self.zeta[i], self.dzeta[i], self.g_value[i]
            ));
        }
        s
    }

    /// Samples `ζ(|x|)` at the inside nodes of a 2-D grid.
    pub fn rasterize(&self, grid: Arc<Grid>) -> Result<ScalarField> {
        if grid.dim() != 2 || self.n != 2 {
            return Err(Error::Domain("rasterization needs a 2-D grid and a 2-D profile".into()));
        }
        let u = ScalarField::from_fn(grid, |x, y| self.value(x.hypot(y)));
        ScalarField::new(u.grid.clone(), u.values)
    }

    /// Least-squares exponents `β` of `max ζ − ζ ≈ C·d^β` on each side of the
    /// plateau, over distances `d ∈ [lo, hi]`.
    pub fn detachment_exponents(&self, lo: f64, hi: f64) -> Option<(Option<f64>, Option<f64>)> {
        let (a, b) = self.core?;
        let side = |inner: bool| -> Option<f64> {
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for i in 0..self.r.len() {
                let d = if inner { a - self.r[i] } else { self.r[i] - b };
                let v = self.max_value - self.zeta[i];
                if d >= lo && d <= hi && v > 0.0 {
                    xs.push(d.ln());
                    ys.push(v.ln());
                }
            }
            (xs.len() >= 5).then(|| crate::quad::linear_fit(&xs, &ys).map(|f| f.1)).flatten()
        };
        Some((side(true), side(false)))
    }
}

/// Maximal interval around the maximiser where `|ζ'| ≤ tol·max|ζ'|`.
fn plateau(r: &[f64], zeta: &[f64], dzeta: &[f64], tol: f64) -> Option<(f64, f64)> {
    let top = zeta.iter().enumerate().fold(0, |b, (i, &z)| if z > zeta[b] { i } else { b });
    let dmax = dzeta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let flat = |i: usize| dzeta[i].abs() <= tol * dmax;
    if !flat(top) {
        return None;
    }
    let (mut lo, mut hi) = (top, top);
    while lo > 0 && flat(lo - 1) {
        lo -= 1;
    }
    while hi + 1 < r.len() && flat(hi + 1) {
        hi += 1;
    }
    (hi > lo).then_some((r[lo], r[hi]))
}

/// Splits `[a, b]` into `m` equal pieces (endpoints included).
fn linspace(a: f64, b: f64, m: usize) -> Vec<f64> {
    (0..=m).map(|i| if i == m { b } else { a + (b - a) * i as f64 / m as f64 }).collect()
}

/// Exact radial solution on the ball of radius `R` in `R^n`:
/// `−ζ'(r) = r^{1−n} ∫_{r(α)}^r s^{n−1} g(ω_n sⁿ) ds`, `ζ(R) = 0`, with
/// `ζ ≡ max u` on `[0, r(α)]`. Both integrals use adaptive Simpson on a
/// fixed partition, the inner one nested inside the outer.
pub fn solve_ball(g: &Nonlinearity, radius: f64, n: usize) -> Result<RadialProfile> {
    solve_ball_with(g, radius, n, 2048)
}

pub fn solve_ball_with(g: &Nonlinearity, radius: f64, n: usize, nodes: usize) -> Result<RadialProfile> {
    if n == 0 || !(radius > 0.0) {
        return Err(Error::Domain(format!("ball needs n ≥ 1 and R > 0 (got {n}, {radius})")));
    }
    let omega = unit_ball_volume(n);
    let vol = omega * radius.powi(n as i32);
    if (g.domain_measure - vol).abs() > 1e-9 * vol {
        return Err(Error::Domain(format!("g is defined on [0, {}] but the ball has measure {vol}", g.domain_measure)));
    }
    let rep = check_hypotheses(g)?;
    let r_alpha = match rep.case {
        HypothesisCase::H1 => 0.0,
        HypothesisCase::H2 => {
            let a = rep.alpha.unwrap();
            if a >= vol {
                return Err(Error::NoDeadCore(format!("α = {a} ≥ |Ω| = {vol}")));
            }
            (a / omega).powf(1.0 / n as f64)
        }
        HypothesisCase::Neither => {
            return Err(Error::NoDeadCore("g ≤ 0 on [0, |Ω|], so u ≡ 0".into()));
        }
    };
    let nn = n as i32;
    let integrand = |s: f64| s.powi(nn - 1) * g.eval_clamped(omega * s.powi(nn));
    let tol = 1e-13;
    // Absolute floors at rounding level of the inner integral and of ζ, so
    // panels where the integrand is pure cancellation noise terminate.
    let scale_g = g.sup_abs().max(f64::MIN_POSITIVE);
    let abs_inner = 1e-16 * scale_g * radius.powi(n as i32);
    let abs_outer = 1e-16 * scale_g * radius * radius;
    let mut r: Vec<f64> = Vec::new();
    if r_alpha > 0.0 {
        let m = ((nodes as f64 * r_alpha / radius).round() as usize).max(8);
        r.extend(linspace(0.0, r_alpha, m));
        r.pop();
    }
    let m = ((nodes as f64 * (radius - r_alpha) / radius).round() as usize).max(16);
    r.extend(linspace(r_alpha, radius, m));
    let first = r.iter().position(|&x| x >= r_alpha).unwrap();
    let k = r.len();
    // I(r) = ∫_{r(α)}^r s^{n−1} g(ω_n sⁿ) ds at the nodes.
    let mut cum = vec![0.0; k];
    for i in first..k - 1 {
        cum[i + 1] = cum[i] + simpson(integrand, r[i], r[i + 1], tol, abs_inner)?;
    }
    let dz = |i: usize, s: f64| -> Result<f64> {
        if s <= 0.0 {
            return Ok(0.0);
        }
        let inner = cum[i] + if s > r[i] { simpson(integrand, r[i], s, tol, abs_inner)? } else { 0.0 };
        Ok(-inner / s.powi(nn - 1))
    };
    let dzeta: Vec<f64> =
        (0..k).map(|i| if i < first { 0.0 } else { -cum[i] / r[i].powi(nn - 1).max(f64::MIN_POSITIVE) }).collect();
    let mut zeta = vec![0.0; k];
    for i in (first..k - 1).rev() {
        // Simpson on −ζ' with nested inner integrals; errors are propagated.
        let err = std::cell::RefCell::new(None);
        let piece = simpson(
            |s| match dz(i, s) {
                Ok(v) => -v,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    0.0
                }
            },
            r[i],
            r[i + 1],
            tol,
            abs_outer,
        )?;
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        zeta[i] = zeta[i + 1] + piece;
    }
    for i in 0..first {
        zeta[i] = zeta[first];
    }
    let g_value: Vec<f64> =
        r.iter().map(|&x| g.eval_positive_part(omega * x.powi(nn).max(omega * r_alpha.powi(nn)))).collect();
    let core = if r_alpha > 0.0 { plateau(&r, &zeta, &dzeta, PLATEAU_SLOPE_TOL) } else { None };
    let max_value = zeta[0];
    Ok(RadialProfile { n, r, zeta, dzeta, g_value, core, max_value })
}

/// Controls for the one-dimensional nonlocal solve on annuli.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusConfig {
    pub nodes: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for AnnulusConfig {
    fn default() -> Self {
        AnnulusConfig { nodes: 4000, tol: 1e-12, max_iter: 200_000 }
    }
}

/// Nonlocal radial solution on the annulus `R1 < |x| < R2` in `R^n`.
///
/// Uses the same Frank-Wolfe iteration as the grid solver on the 1-D
/// finite-volume discretisation with exact shell volumes as weights, so
/// every measure is computed from the shell formula.
pub fn solve_annulus(g: &Nonlinearity, r1: f64, r2: f64, n: usize) -> Result<RadialProfile> {
    solve_annulus_with(g, r1, r2, n, &AnnulusConfig::default())
}

pub fn solve_annulus_with(g: &Nonlinearity, r1: f64, r2: f64, n: usize, cfg: &AnnulusConfig) -> Result<RadialProfile> {
    if n == 0 || !(r1 > 0.0 && r2 > r1) {
        return Err(Error::Domain(format!("annulus needs n ≥ 1 and 0 < R1 < R2 (got {n}, {r1}, {r2})")));
    }
    let omega = unit_ball_volume(n);
    let nn = n as i32;
    let vol = omega * (r2.powi(nn) - r1.powi(nn));
    if (g.domain_measure - vol).abs() > 1e-9 * vol {
        return Err(Error::Domain(format!(
            "g is defined on [0, {}] but the annulus has measure {vol}",
            g.domain_measure
        )));
    }
    let rep = check_hypotheses(g)?;
    if rep.case == HypothesisCase::Neither {
        return Err(Error::NoDeadCore("g ≤ 0 on [0, |Ω|]".into()));
    }
    let m = cfg.nodes;
    let dr = (r2 - r1) / m as f64;
    let r: Vec<f64> = (0..=m).map(|j| r1 + dr * j as f64).collect();
    // Unknowns are the interior nodes 1..m−1.
    let k = m - 1;
    let shell = |a: f64, b: f64| omega * (b.powi(nn) - a.powi(nn));
    let w: Vec<f64> = (1..m).map(|j| shell(r[j] - 0.5 * dr, r[j] + 0.5 * dr)).collect();
    let flux = |rm: f64| n as f64 * omega * rm.powi(nn - 1) / dr;
    let mut sub = vec![0.0; k];
    let mut diag = vec![0.0; k];
    let mut sup = vec![0.0; k];
    for i in 0..k {
        let j = i + 1;
        let (cl, cr) = (flux(r[j] - 0.5 * dr), flux(r[j] + 0.5 * dr));
        diag[i] = cl + cr;
        sub[i] = -cl;
        sup[i] = -cr;
    }
    let solve = |f: &[f64]| -> Result<Vec<f64>> {
        let b: Vec<f64> = f.iter().zip(&w).map(|(a, b)| a * b).collect();
        tridiagonal(&sub, &diag, &sup, &b)
    };
    let mut f = vec![0.0; k];
    let mut u = vec![0.0; k];
    let mut first = true;
    let mut converged = false;
    let mut small = 0;
    for _ in 0..cfg.max_iter {
        let fp = crate::solver::rank_rhs(&u, &w, g);
        if !first && fp == f {
            converged = true;
            break;
        }
        let up = solve(&fp)?;
        let (mut gap, mut curv, mut scale) = (0.0, 0.0, 0.0);
        for i in 0..k {
            let d = f[i] - fp[i];
            gap += w[i] * d * u[i];
            curv += w[i] * d * (u[i] - up[i]);
            scale += w[i] * f[i] * u[i];
        }
        let gamma = if first {
            1.0
        } else if curv > 0.0 {
            (gap / curv).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let mut upd = 0.0f64;
        for i in 0..k {
            let du = gamma * (up[i] - u[i]);
            upd = upd.max(du.abs());
            u[i] += du;
            f[i] += gamma * (fp[i] - f[i]);
        }
        small = if upd < cfg.tol { small + 1 } else { 0 };
        if !first && small >= 5 && gap <= cfg.tol * scale.abs() {
            converged = true;
            break;
        }
        first = false;
    }
    if !converged {
        return Err(Error::FixedPoint(format!("annulus iteration did not settle in {} steps", cfg.max_iter)));
    }
    let mut zeta = vec![0.0; m + 1];
    zeta[1..m].copy_from_slice(&u);
    let dzeta: Vec<f64> = (0..=m)
        .map(|j| match j {
            0 => (-3.0 * zeta[0] + 4.0 * zeta[1] - zeta[2]) / (2.0 * dr),
            _ if j == m => (3.0 * zeta[m] - 4.0 * zeta[m - 1] + zeta[m - 2]) / (2.0 * dr),
            _ => (zeta[j + 1] - zeta[j - 1]) / (2.0 * dr),
        })
        .collect();
    let mut g_value = vec![0.0; m + 1];
    let fv = crate::solver::rank_rhs(&u, &w, g);
    g_value[1..m].copy_from_slice(&fv);
    // The discrete core is the contiguous run of nodes around the maximiser
    // where the reaction vanishes. The discrete solution is harmonic there,
    // so it is flat only up to a small tilt that vanishes under refinement.
    let top = (1..m).fold(1, |b, j| if zeta[j] > zeta[b] { j } else { b });
    let core = if g_value[top] == 0.0 && rep.case == HypothesisCase::H2 {
        let (mut lo, mut hi) = (top, top);
        while lo > 1 && g_value[lo - 1] == 0.0 {
            lo -= 1;
        }
        while hi + 1 < m && g_value[hi + 1] == 0.0 {
            hi += 1;
        }
        if hi - lo < 2 {
            return Err(Error::Geometry("dead-core radii collapsed onto each other".into()));
        }
        // Half-cell faces, so the shell volumes add up exactly.
        Some((r[lo] - 0.5 * dr, r[hi] + 0.5 * dr))
    } else if rep.case == HypothesisCase::H2 {
        return Err(Error::Geometry("dead core is empty at the computed fixed point".into()));
    } else {
        None
    };
    let max_value = zeta.iter().copied().fold(0.0, f64::max);
    Ok(RadialProfile { n, r, zeta, dzeta, g_value, core, max_value })
}

/// A barrier profile on `[r, R]` with its monotone-iteration history.
#[derive(Debug, Clone, PartialEq)]
pub struct Barrier {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Starting sub- or supersolution at the same radii.
    pub start: Vec<f64>,
    pub iterations: usize,
    /// Largest violation of monotonicity seen across iterates.
    pub monotonicity_defect: f64,
    /// Sup-norm residual of the discrete equation at the limit.
    pub residual: f64,
}

/// The barriers `v̄_r` (1 at `|x| = r`, 0 at `R`) and `v̲_r` (0 at `r`, 1 at
/// `R`) with `R = r + κ` and `U(κ) = m` for the scale `m` (1 by default).
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierPair {
    pub n: usize,
    pub r: f64,
    pub big_r: f64,
    pub kappa: f64,
    pub scale: f64,
    pub upper: Barrier,
    pub lower: Barrier,
}

pub fn solve_barriers(p: &Profile, r: f64, n: usize) -> Result<BarrierPair> {
    solve_barriers_scaled(p, r, n, 1.0, 2000)
}

/// Monotone iteration from the radial sub/supersolutions built from `U`.
///
/// For sublinear `f` (`f(t)/t` nonincreasing) each step solves
/// `(K + W f(v_{k−1})/v_{k−1}) v_k = b`, which is order-preserving without any
/// bound on `f'` near 0. Otherwise the shifted form
/// `(K + W M) v_k = W (M v_{k−1} − f(v_{k−1})) + b` is used with `M ≥ Lip f`.
pub fn solve_barriers_scaled(p: &Profile, r: f64, n: usize, scale: f64, nodes: usize) -> Result<BarrierPair> {
    if n == 0 || !(r > 0.0) || !(scale > 0.0) {
        return Err(Error::Domain(format!("barriers need n ≥ 1, r > 0 and a positive scale (got {n}, {r}, {scale})")));
    }
    if p.f(0.0) != 0.0 || !(p.f(scale) > 0.0) {
        return Err(Error::ContractViolation("barriers need f(0) = 0 and f > 0".into()));
    }
    let h_scale = transform_h(p, scale)?;
    let kappa = h_scale / std::f64::consts::SQRT_2;
    let big_r = r + kappa;
    let u_of = |t: f64| -> Result<f64> { crate::profile::profile_u(p, t.clamp(0.0, kappa)) };
    let m = nodes;
    let dr = kappa / m as f64;
    let radii: Vec<f64> = (0..=m).map(|j| if j == m { big_r } else { r + dr * j as f64 }).collect();
    let omega = unit_ball_volume(n);
    let nn = n as i32;
    let area = |x: f64| n as f64 * omega * x.powi(nn - 1);
    // Interior unknowns 1..m−1; −Δv ≈ K v / W with Dirichlet ends.
    let k = m - 1;
    let w: Vec<f64> =
        (1..m).map(|j| omega * ((radii[j] + 0.5 * dr).powi(nn) - (radii[j] - 0.5 * dr).powi(nn))).collect();
    let cl: Vec<f64> = (1..m).map(|j| area(radii[j] - 0.5 * dr) / dr).collect();
    let cr: Vec<f64> = (1..m).map(|j| area(radii[j] + 0.5 * dr) / dr).collect();

    // f(t)/t nonincreasing allows the absorption form of the iteration,
    // which stays monotone however steep f is at 0.
    let probe: Vec<f64> = (1..=400).map(|i| scale * i as f64 / 400.0).collect();
    let sublinear = probe.windows(2).all(|t| p.f(t[1]) / t[1] <= p.f(t[0]) / t[0] * (1.0 + 1e-12));
    let lipschitz = 1.1
        * probe.windows(2).map(|t| (p.f(t[1]) - p.f(t[0])) / (t[1] - t[0])).fold(p.f(probe[0]) / probe[0], f64::max);
    let quotient = |x: f64| if x > 0.0 { p.f(x) / x } else { 1e300 };

    let run = |inner: f64, outer: f64, start: Vec<f64>, decreasing: bool| -> Result<Barrier> {
        let residual_of = |v: &[f64]| -> f64 {
            (0..k)
                .map(|i| {
                    let left = if i == 0 { inner } else { v[i - 1] };
                    let right = if i + 1 == k { outer } else { v[i + 1] };
                    let kv = (cl[i] + cr[i]) * v[i] - cl[i] * left - cr[i] * right;
                    (kv / w[i] + p.f(v[i])).abs()
                })
                .fold(0.0, f64::max)
        };
        let a: Vec<f64> = cl.iter().map(|c| -c).collect();
        let c: Vec<f64> = cr.iter().map(|c| -c).collect();
        let mut v = start.clone();
        let mut defect = 0.0f64;
        let mut settled = None;
        for it in 1..=200_000 {
            let (diag, mut d): (Vec<f64>, Vec<f64>) = if sublinear {
                (0..k).map(|i| (cl[i] + cr[i] + w[i] * quotient(v[i]), 0.0)).unzip()
            } else {
                (0..k).map(|i| (cl[i] + cr[i] + w[i] * lipschitz, w[i] * (lipschitz * v[i] - p.f(v[i])))).unzip()
            };
            d[0] += cl[0] * inner;
            d[k - 1] += cr[k - 1] * outer;
            let next = tridiagonal(&a, &diag, &c, &d)?;
            let mut upd = 0.0f64;
            for i in 0..k {
                let moved = next[i] - v[i];
                // Rounding in the solve can move converged nodes by a few ulps.
                let wrong = if decreasing { moved } else { -moved } - 1e-15 * v[i].abs();
                defect = defect.max(wrong);
                upd = upd.max(moved.abs());
            }
            v = next;
            if defect > 1e-10 {
                return Err(Error::Monotonicity(format!("iterate {it} moved the wrong way by {defect:e}")));
            }
            // Iterate past the 1e-10 stopping rule until the update stalls so
            // the limit also satisfies the discrete equation tightly.
            if upd < 1e-10 && settled.is_none() {
                settled = Some(it);
            }
            if upd < 1e-15 || settled.is_some_and(|s| it >= 20 * s) {
                let mut values = vec![inner];
                values.extend_from_slice(&v);
                values.push(outer);
                let mut full_start = vec![inner];
                full_start.extend_from_slice(&start);
                full_start.push(outer);
                return Ok(Barrier {
                    radii: radii.clone(),
                    values,
                    start: full_start,
                    iterations: settled.unwrap_or(it),
                    monotonicity_defect: defect.max(0.0),
                    residual: residual_of(&v),
                });
            }
        }
        Err(Error::Monotonicity("monotone iteration did not settle".into()))
    };

    let sup_start: Vec<f64> = (1..m).map(|j| u_of(big_r - radii[j])).collect::<Result<_>>()?;
    let sub_start: Vec<f64> = (1..m).map(|j| u_of(radii[j] - r)).collect::<Result<_>>()?;
    let upper = run(scale, 0.0, sup_start, true)?;
    let lower = run(0.0, scale, sub_start, false)?;
    Ok(BarrierPair { n, r, big_r, kappa, scale, upper, lower })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
    }

    fn case_a() -> Nonlinearity {
        Nonlinearity::affine_with_root(1.0, PI / 4.0, PI).unwrap()
    }

    #[test]
    fn case_a_ball_matches_closed_form() {
        let p = solve_ball(&case_a(), 1.0, 2).unwrap();
        let exact = |r: f64| PI * ((1.0 - r.powi(4)) / 16.0 - (1.0 - r * r) / 16.0 - r.ln() / 64.0);
        for &r in &[0.5, 0.6, 0.75, 0.9, 0.999] {
            assert!((p.value(r) - exact(r)).abs() < 1e-10, "r = {r}");
        }
        assert!((p.max_value - PI * (3.0 / 256.0 + 2f64.ln() / 64.0)).abs() < 1e-10);
        assert!((p.dzeta.last().unwrap() + 9.0 * PI / 64.0).abs() < 1e-10);
        let (a, b) = p.core.unwrap();
        assert!(a == 0.0 && (b - 0.5).abs() < 1e-12);
        assert!((p.core_measure() - PI / 4.0).abs() < 1e-10);
    }

    #[test]
    fn ball_rejects_nonpositive_g() {
        let g = Nonlinearity::constant(-1.0, PI).unwrap();
        assert!(matches!(solve_ball(&g, 1.0, 2), Err(Error::NoDeadCore(_))));
    }

    #[test]
    fn annulus_core_has_measure_alpha() {
        let vol = PI * (2.25 - 0.25);
        let g = Nonlinearity::affine_with_root(1.0, PI / 2.0, vol).unwrap();
        let p = match solve_annulus(&g, 0.5, 1.5, 2) {
            Ok(p) => p,
            Err(e) => panic!("{e}"),
        };
        assert!((p.core_measure() - PI / 2.0).abs() < 0.02, "{:?} {}", p.core, p.core_measure());
        assert!(p.zeta[0] == 0.0 && *p.zeta.last().unwrap() == 0.0);
        let (a, b) = p.core.unwrap();
        let osc =
            p.r.iter()
                .zip(&p.zeta)
                .filter(|(r, _)| **r >= a && **r <= b)
                .map(|(_, z)| p.max_value - z)
                .fold(0.0, f64::max);
        assert!(osc <= 1e-5 * p.max_value, "core oscillation {osc}");
    }

    #[test]
    fn cube_root_barriers() {
        let prof = Profile::power(1.0, 1.0 / 3.0, 10.0).unwrap();
        let b = solve_barriers(&prof, 0.5, 2).unwrap();
        assert!((b.kappa - 6f64.sqrt()).abs() < 1e-8, "{}", b.kappa);
        let s2 = std::f64::consts::SQRT_2;
        for (i, &x) in b.upper.radii.iter().enumerate() {
            let hu = prof.h(b.upper.values[i]).unwrap();
            let hl = prof.h(b.lower.values[i]).unwrap();
            assert!(hu <= s2 * (b.big_r - x) + 1e-6, "upper at {x}: {hu}");
            assert!(hl >= s2 * (x - b.r) - 1e-6, "lower at {x}: {hl}");
        }
        assert!(b.upper.residual < 1e-8 && b.lower.residual < 1e-8, "{} {}", b.upper.residual, b.lower.residual);
        assert!(b.upper.monotonicity_defect <= 1e-10);
    }

    #[test]
    fn constant_rhs_ball() {
        let g = Nonlinearity::constant(1.0, PI).unwrap();
        let p = solve_ball_with(&g, 1.0, 2, 256).unwrap();
        for (r, z) in p.r.iter().zip(&p.zeta) {
            assert!((z - (1.0 - r * r) / 4.0).abs() < 1e-12);
        }
        assert!(p.core.is_none());
    }
}
