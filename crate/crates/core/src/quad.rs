//! Scalar quadrature and root finding shared by the profile and radial code.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 30;

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// The interval is first split into 16 panels to obtain a scale estimate; the
/// tolerance is `max(abs_tol, rel_tol·|I|)`. Fails with [`Error::Quadrature`]
/// if a panel still misses its share after 30 bisection levels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let panels = 16usize;
    let w = (hi - lo) / panels as f64;
    let mut cells = Vec::with_capacity(panels);
    let mut scale = 0.0;
    for k in 0..panels {
        let x0 = lo + k as f64 * w;
        let x2 = if k + 1 == panels { hi } else { x0 + w };
        let x1 = 0.5 * (x0 + x2);
        let (f0, f1, f2) = (f(x0), f(x1), f(x2));
        let s = (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2);
        scale += s.abs();
        cells.push((x0, x1, x2, f0, f1, f2, s));
    }
    let tol = abs_tol.max(rel_tol * scale);
    let mut total = 0.0;
    for (x0, x1, x2, f0, f1, f2, s) in cells {
        total += refine(&f, x0, x1, x2, f0, f1, f2, s, tol / panels as f64, 0)?;
    }
    if !total.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integral on [{lo}, {hi}]")));
    }
    Ok(sign * total)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a) <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Quadrature(format!("no convergence on [{a}, {b}] after {MAX_DEPTH} bisection levels")));
    }
    let l = refine(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
    let r = refine(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
    Ok(l + r)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` computed by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Bisection for a root of `f` in `[a, b]` where `f(a)` and `f(b)` differ in
/// sign (or one is zero). Returns the bracket midpoint once it is narrower
/// than `xtol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    for _ in 0..400 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol || m == a || m == b {
            return Some(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Ordinary least squares fit `y ≈ c0 + c1·x`. Returns `(c0, c1, rms residual)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let c1 = sxy / sxx;
    let c0 = my - c1 * mx;
    let rms = (x.iter().zip(y).map(|(xi, yi)| (yi - c0 - c1 * xi).powi(2)).sum::<f64>() / n as f64).sqrt();
    Some((c0, c1, rms))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_and_transcendental() {
        let v = simpson(|x| x * x, 0.0, 3.0, 1e-12, 0.0).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
        let v = simpson(f64::sin, 0.0, std::f64::consts::PI, 1e-12, 0.0).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
        let v = simpson(|x| x.exp(), 1.0, 0.0, 1e-12, 0.0).unwrap();
        assert!((v + (1f64.exp() - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn simpson_reports_nonconvergence() {
        let r = simpson(|x: f64| if x > 0.3 { 1.0 / (x - 0.3).sqrt() } else { 0.0 }, 0.0, 1.0, 1e-15, 0.0);
        assert!(matches!(r, Err(Error::Quadrature(_))));
    }

    #[test]
    fn gauss_legendre_integrates_degree_2n_minus_1() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-14).is_none());
    }
}
