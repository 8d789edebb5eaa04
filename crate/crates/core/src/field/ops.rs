//! Finite differences with Shortley-Weller treatment of cut cells: a
//! neighbour across the boundary is replaced by the boundary value 0 at
//! distance `θh`.

use super::{Grid, ScalarField};

/// Neighbour value and distance along direction `d` (0 at the boundary).
#[inline]
fn arm(g: &Grid, u: &[f64], k: usize, d: usize) -> (f64, f64) {
    match g.neighbor(k, d) {
        Some(n) => (u[n], g.h),
        None => (0.0, g.theta(k)[d] * g.h),
    }
}

/// First derivative from three points at offsets `+hp`, `0`, `−hm`.
#[inline]
fn d1(up: f64, u0: f64, um: f64, hp: f64, hm: f64) -> f64 {
    (hm * hm * (up - u0) + hp * hp * (u0 - um)) / (hp * hm * (hp + hm))
}

/// Second derivative from three points at offsets `+hp`, `0`, `−hm`.
#[inline]
fn d2(up: f64, u0: f64, um: f64, hp: f64, hm: f64) -> f64 {
    2.0 / (hp + hm) * ((up - u0) / hp - (u0 - um) / hm)
}

/// Second-order gradient `[∂x, ∂y]` at every inside node (`∂y = 0` in 1-D).
pub fn gradient(u: &ScalarField) -> Vec<[f64; 2]> {
    let g = &*u.grid;
    let v = &u.values;
    (0..g.len())
        .map(|k| {
            let (ue, he) = arm(g, v, k, 0);
            let (uw, hw) = arm(g, v, k, 1);
            let gx = d1(ue, v[k], uw, he, hw);
            let gy = if g.dim() == 2 {
                let (un, hn) = arm(g, v, k, 2);
                let (us, hs) = arm(g, v, k, 3);
                d1(un, v[k], us, hn, hs)
            } else {
                0.0
            };
            [gx, gy]
        })
        .collect()
}

/// Shortley-Weller Laplacian: exact for quadratics at interior nodes and
/// first-order consistent at cut nodes.
pub fn laplacian(u: &ScalarField) -> ScalarField {
    let g = &*u.grid;
    let v = &u.values;
    let values = (0..g.len())
        .map(|k| {
            let (ue, he) = arm(g, v, k, 0);
            let (uw, hw) = arm(g, v, k, 1);
            let mut l = d2(ue, v[k], uw, he, hw);
            if g.dim() == 2 {
                let (un, hn) = arm(g, v, k, 2);
                let (us, hs) = arm(g, v, k, 3);
                l += d2(un, v[k], us, hn, hs);
            }
            l
        })
        .collect();
    ScalarField { grid: u.grid.clone(), values }
}

/// Second derivatives `[∂xx, ∂yy, ∂xy]`. The mixed derivative uses the
/// diagonal stencil where all four diagonal nodes are inside and otherwise
/// differentiates the gradient field across whatever neighbours exist.
pub fn hessian(u: &ScalarField) -> Vec<[f64; 3]> {
    let g = &*u.grid;
    let v = &u.values;
    let grad = gradient(u);
    (0..g.len())
        .map(|k| {
            let (ue, he) = arm(g, v, k, 0);
            let (uw, hw) = arm(g, v, k, 1);
            let xx = d2(ue, v[k], uw, he, hw);
            if g.dim() == 1 {
                return [xx, 0.0, 0.0];
            }
            let (un, hn) = arm(g, v, k, 2);
            let (us, hs) = arm(g, v, k, 3);
            let yy = d2(un, v[k], us, hn, hs);
            let (i, j) = g.ij(k);
            let (i, j) = (i as i64, j as i64);
            let diag =
                [g.unknown(i + 1, j + 1), g.unknown(i + 1, j - 1), g.unknown(i - 1, j + 1), g.unknown(i - 1, j - 1)];
            let xy = if let [Some(a), Some(b), Some(c), Some(d)] = diag {
                (v[a] - v[b] - v[c] + v[d]) / (4.0 * g.h * g.h)
            } else {
                match (g.neighbor(k, 2), g.neighbor(k, 3)) {
                    (Some(n), Some(s)) => (grad[n][0] - grad[s][0]) / (2.0 * g.h),
                    (Some(n), None) => (grad[n][0] - grad[k][0]) / g.h,
                    (None, Some(s)) => (grad[k][0] - grad[s][0]) / g.h,
                    (None, None) => 0.0,
                }
            };
            [xx, yy, xy]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_grid, DomainSpec};
    use std::sync::Arc;

    #[test]
    fn quadratic_laplacian_exact_inside() {
        let g =
            Arc::new(build_grid(&DomainSpec::Rectangle { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 }, 1.0 / 32.0).unwrap());
        let u = ScalarField::from_fn(g.clone(), |x, y| x * x + y * y);
        let l = laplacian(&u);
        for k in 0..g.len() {
            if !g.is_cut(k) {
                assert!((l.values[k] - 4.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn bubble_laplacian_near_boundary() {
        let g = Arc::new(build_grid(&DomainSpec::Ball { radius: 1.0 }, 1.0 / 64.0).unwrap());
        let u = ScalarField::from_fn(g.clone(), |x, y| (1.0 - x * x - y * y) / 4.0);
        let l = laplacian(&u);
        for v in &l.values {
            assert!((v + 1.0).abs() < 1e-9, "{v}");
        }
        let gr = gradient(&u);
        for (k, d) in gr.iter().enumerate() {
            let (x, y) = g.xy(k);
            assert!((d[0] + x / 2.0).abs() < 1e-10 && (d[1] + y / 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_has_zero_gradient() {
        let g = Arc::new(build_grid(&DomainSpec::Ball { radius: 1.0 }, 0.05).unwrap());
        let u = ScalarField::from_fn(g.clone(), |_, _| 3.0);
        let gr = gradient(&u);
        for k in 0..g.len() {
            if !g.is_cut(k) {
                assert!(gr[k][0].abs() < 1e-12 && gr[k][1].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hessian_of_quadratic() {
        let g = Arc::new(build_grid(&DomainSpec::Ball { radius: 1.0 }, 1.0 / 32.0).unwrap());
        let u = ScalarField::from_fn(g.clone(), |x, y| x * y);
        let hs = hessian(&u);
        for k in 0..g.len() {
            let (i, j) = g.ij(k);
            let (i, j) = (i as i64, j as i64);
            let diag = [(1, 1), (1, -1), (-1, 1), (-1, -1)];
            if diag.iter().all(|(a, b)| g.is_inside(i + a, j + b)) {
                assert!((hs[k][2] - 1.0).abs() < 1e-9);
            }
        }
    }
}
