//! Superlevel-set measures `λ(t) = |{u ≥ t}|` of the piecewise-linear
//! interpolant of a grid function.
//!
//! In 2-D every cell is split into four triangles around its centre (value:
//! mean of the corners), so the measure of a superlevel set is a sum of
//! closed-form triangle pieces. Corners outside the domain carry the linear
//! extrapolation that vanishes on the boundary (see
//! [`ScalarField::extended_values`]), which puts the zero level on the true
//! boundary to first order.

use super::ScalarField;
use crate::error::{Error, Result};

/// `|{x ∈ T : ũ ≥ t}|` for a triangle of area `area` with sorted vertex
/// values `lo ≤ mid ≤ hi`. Non-increasing in `t`, exactly.
#[inline]
pub(crate) fn triangle_superlevel(lo: f64, mid: f64, hi: f64, area: f64, t: f64) -> f64 {
    if t <= lo {
        return area;
    }
    if t > hi {
        return 0.0;
    }
    let upper = |t: f64| {
        if mid > lo {
            area - area * ((t - lo) / (mid - lo)) * ((t - lo) / (hi - lo))
        } else {
            area
        }
    };
    if t <= mid {
        return upper(t).clamp(0.0, area);
    }
    let lower = area * ((hi - t) / (hi - lo)) * ((hi - t) / (hi - mid));
    lower.min(upper(mid)).clamp(0.0, area)
}

/// Length of `{x ∈ [0, h] : ũ ≥ t}` for a linear segment with end values `a`, `b`.
#[inline]
fn segment_superlevel(a: f64, b: f64, h: f64, t: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if t <= lo {
        h
    } else if t > hi {
        0.0
    } else {
        (h * ((hi - t) / (hi - lo))).clamp(0.0, h)
    }
}

/// Sorted vertex values of all measure pieces with their areas.
pub(crate) struct Pieces {
    pub lo: Vec<f64>,
    pub mid: Vec<f64>,
    pub hi: Vec<f64>,
    pub area: f64,
    pub dim: usize,
}

impl Pieces {
    pub fn new(u: &ScalarField) -> Pieces {
        let g = &*u.grid;
        let ext = u.extended_values();
        let mut lo = Vec::new();
        let mut mid = Vec::new();
        let mut hi = Vec::new();
        if g.dim() == 1 {
            for i in 0..g.nx - 1 {
                if !(g.is_inside(i as i64, 0) || g.is_inside(i as i64 + 1, 0)) {
                    continue;
                }
                let (a, b) = (ext[i], ext[i + 1]);
                lo.push(a.min(b));
                mid.push(a.min(b));
                hi.push(a.max(b));
            }
            return Pieces { lo, mid, hi, area: g.h, dim: 1 };
        }
        let nx = g.nx;
        for j in 0..g.ny - 1 {
            for i in 0..nx - 1 {
                let (ii, jj) = (i as i64, j as i64);
                if !(g.is_inside(ii, jj)
                    || g.is_inside(ii + 1, jj)
                    || g.is_inside(ii, jj + 1)
                    || g.is_inside(ii + 1, jj + 1))
                {
                    continue;
                }
                let c = [ext[i + nx * j], ext[i + 1 + nx * j], ext[i + 1 + nx * (j + 1)], ext[i + nx * (j + 1)]];
                let centre = 0.25 * (c[0] + c[1] + c[2] + c[3]);
                for e in 0..4 {
                    let mut v = [c[e], c[(e + 1) % 4], centre];
                    v.sort_by(f64::total_cmp);
                    lo.push(v[0]);
                    mid.push(v[1]);
                    hi.push(v[2]);
                }
            }
        }
        Pieces { lo, mid, hi, area: 0.25 * g.h * g.h, dim: 2 }
    }

    fn piece(&self, p: usize, t: f64) -> f64 {
        if self.dim == 1 {
            segment_superlevel(self.lo[p], self.hi[p], self.area, t)
        } else {
            triangle_superlevel(self.lo[p], self.mid[p], self.hi[p], self.area, t)
        }
    }

    pub fn measure(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        let mut s = 0.0;
        for p in 0..self.lo.len() {
            s += self.piece(p, t);
        }
        s
    }

    /// Measures at many thresholds in one sweep over the pieces. The result
    /// is made non-increasing in `t` by a running minimum.
    pub fn measures(&self, ts: &[f64]) -> Vec<f64> {
        let mut order: Vec<usize> = (0..ts.len()).collect();
        order.sort_by(|&a, &b| ts[a].total_cmp(&ts[b]));
        let sorted: Vec<f64> = order.iter().map(|&i| ts[i].max(0.0)).collect();
        let n = sorted.len();
        let mut full = vec![0.0; n + 1];
        let mut part = vec![0.0; n];
        for p in 0..self.lo.len() {
            let (lo, hi) = (self.lo[p], self.hi[p]);
            let a = sorted.partition_point(|&t| t <= lo);
            full[a] += self.area;
            let b = sorted.partition_point(|&t| t <= hi);
            for (k, slot) in part.iter_mut().enumerate().take(b).skip(a) {
                *slot += self.piece(p, sorted[k]);
            }
        }
        // full[a] counts pieces that are whole for every sorted index below a.
        let mut acc = 0.0;
        let mut whole = vec![0.0; n];
        for k in (0..n).rev() {
            acc += full[k + 1];
            whole[k] = acc;
        }
        let mut out_sorted: Vec<f64> = whole.iter().zip(&part).map(|(w, p)| w + p).collect();
        for k in 1..n {
            if out_sorted[k] > out_sorted[k - 1] {
                out_sorted[k] = out_sorted[k - 1];
            }
        }
        let mut out = vec![0.0; n];
        for (pos, &i) in order.iter().enumerate() {
            out[i] = out_sorted[pos];
        }
        out
    }
}

/// `|{ũ ≥ t}|` with `t` clamped to `t ≥ 0` (for `t ≤ 0` this is the measured
/// domain volume) and 0 above `max u`.
pub fn superlevel_measure(u: &ScalarField, t: f64) -> f64 {
    if t > u.max() {
        return 0.0;
    }
    Pieces::new(u).measure(t)
}

/// [`superlevel_measure`] at many thresholds at once.
pub fn superlevel_measures(u: &ScalarField, ts: &[f64]) -> Vec<f64> {
    let m = u.max();
    let mut out = Pieces::new(u).measures(ts);
    for (o, &t) in out.iter_mut().zip(ts) {
        if t > m {
            *o = 0.0;
        }
    }
    out
}

/// Samples of `λ(t) = |{u ≥ t}|` with linear interpolation between them.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionFunction {
    /// Increasing thresholds.
    pub t: Vec<f64>,
    /// Non-increasing measures.
    pub lambda: Vec<f64>,
    pub max_value: f64,
    /// Threshold below which the top plateau begins, with its measure.
    pub plateau: Option<(f64, f64)>,
}

/// Relative width of the window below `max u` that counts as the top plateau.
pub const PLATEAU_TOL: f64 = 1e-6;

impl DistributionFunction {
    /// Builds a distribution function from explicit samples.
    pub fn from_samples(t: Vec<f64>, lambda: Vec<f64>, plateau: Option<(f64, f64)>) -> Result<Self> {
        if t.len() < 2 || t.len() != lambda.len() {
            return Err(Error::DegenerateField("need at least two samples".into()));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) || lambda.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::DegenerateField("samples must be increasing in t and non-increasing in λ".into()));
        }
        let max_value = *t.last().unwrap();
        Ok(DistributionFunction { t, lambda, max_value, plateau })
    }

    pub fn eval(&self, t: f64) -> f64 {
        if let Some((tp, lp)) = self.plateau {
            if t >= tp && t <= self.max_value {
                return lp;
            }
        }
        if t <= self.t[0] {
            return self.lambda[0];
        }
        if t > self.max_value {
            return 0.0;
        }
        let i = self.t.partition_point(|&x| x <= t).min(self.t.len() - 1);
        let (t0, t1) = (self.t[i - 1], self.t[i]);
        let (l0, l1) = (self.lambda[i - 1], self.lambda[i]);
        l0 + (l1 - l0) * (t - t0) / (t1 - t0)
    }

    /// One-sided slope `dλ/dt` of the interpolant at `t` (≤ 0), taken from
    /// the steeper adjacent segment at knots.
    pub fn slope(&self, t: f64) -> f64 {
        if let Some((tp, _)) = self.plateau {
            if t >= tp {
                return 0.0;
            }
        }
        if t <= self.t[0] || t > self.max_value {
            return 0.0;
        }
        let n = self.t.len();
        let i = self.t.partition_point(|&x| x <= t).clamp(1, n - 1);
        let s = |i: usize| (self.lambda[i] - self.lambda[i - 1]) / (self.t[i] - self.t[i - 1]);
        let mut m = s(i);
        if self.t[i - 1] == t && i >= 2 {
            m = m.min(s(i - 1));
        }
        m
    }

    /// Measure of the top plateau (0 when there is none).
    pub fn plateau_measure(&self) -> f64 {
        self.plateau.map_or(0.0, |p| p.1)
    }

    pub fn volume(&self) -> f64 {
        self.lambda[0]
    }
}

/// Samples `λ` at 512 equispaced thresholds on `[min(0, min u), max u]`,
/// at thresholds accumulating geometrically at `max u` (four per octave down
/// to `2^-40` of the range), and at the start of the top plateau.
pub fn distribution_function(u: &ScalarField) -> Result<DistributionFunction> {
    let top = u.max();
    let bottom = u.min().min(0.0);
    let range = top - bottom;
    if !(top - u.min() > 1e-14 * top.abs().max(1e-300)) {
        return Err(Error::DegenerateField(format!("field is constant ({top})")));
    }
    let mut ts: Vec<f64> = (0..512).map(|i| bottom + range * i as f64 / 511.0).collect();
    ts.extend((8..=160).map(|k| top - range * 2f64.powf(-(k as f64) / 4.0)));
    let pieces = Pieces::new(u);
    let tau = PLATEAU_TOL * range;
    let cell = u.grid.cell_volume();
    let plateau_start = u.values.iter().copied().filter(|&v| v >= top - tau).fold(top, f64::min);
    ts.push(plateau_start);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let lambda = pieces.measures(&ts);
    let plateau_measure = pieces.measure(plateau_start);
    let plateau = (plateau_measure >= 4.0 * cell && plateau_start < top).then_some((plateau_start, plateau_measure));
    let (mut t, mut l): (Vec<f64>, Vec<f64>) = ts.into_iter().zip(lambda).unzip();
    if let Some(last) = l.last_mut() {
        if let Some((_, pm)) = plateau {
            *last = last.min(pm);
        }
    }
    // Enforce strictly increasing thresholds after clamping at zero.
    let mut k = 1;
    while k < t.len() {
        if t[k] <= t[k - 1] {
            t.remove(k);
            l.remove(k);
        } else {
            k += 1;
        }
    }
    Ok(DistributionFunction { t, lambda: l, max_value: top, plateau })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_grid, DomainSpec};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn bubble(h: f64) -> ScalarField {
        let g = Arc::new(build_grid(&DomainSpec::Ball { radius: 1.0 }, h).unwrap());
        ScalarField::from_fn(g, |x, y| (1.0 - x * x - y * y) / 4.0)
    }

    #[test]
    fn bubble_measures() {
        let u = bubble(1.0 / 128.0);
        assert!((superlevel_measure(&u, 0.0) - PI).abs() < 0.01);
        assert!((superlevel_measure(&u, 0.125) - PI / 2.0).abs() < 0.01);
        assert_eq!(superlevel_measure(&u, 0.3), 0.0);
        let df = distribution_function(&u).unwrap();
        for &t in &[0.01, 0.05, 0.1, 0.2, 0.24] {
            assert!((df.eval(t) - PI * (1.0 - 4.0 * t)).abs() < 0.01);
        }
        assert!(df.plateau.is_none());
    }

    #[test]
    fn many_thresholds_agree_with_single() {
        let u = bubble(1.0 / 32.0);
        let ts = [0.2, 0.0, 0.05, 0.125, 0.249];
        let many = superlevel_measures(&u, &ts);
        for (t, m) in ts.iter().zip(&many) {
            assert!((superlevel_measure(&u, *t) - m).abs() < 1e-12);
        }
    }

    #[test]
    fn ramp_on_interval() {
        let g = Arc::new(build_grid(&DomainSpec::Interval { a: 0.0, b: 1.0 }, 0.01).unwrap());
        let u = ScalarField::from_fn(g, |x, _| x);
        let df = distribution_function(&u).unwrap();
        for &t in &[0.1, 0.5, 0.9] {
            assert!((df.eval(t) - (1.0 - t)).abs() <= 0.01);
        }
    }

    #[test]
    fn constant_is_degenerate() {
        let g = Arc::new(build_grid(&DomainSpec::Ball { radius: 1.0 }, 0.1).unwrap());
        let u = ScalarField::from_fn(g, |_, _| 0.0);
        assert!(matches!(distribution_function(&u), Err(Error::DegenerateField(_))));
    }

    #[test]
    fn plateau_is_detected() {
        let g = Arc::new(build_grid(&DomainSpec::Ball { radius: 1.0 }, 1.0 / 64.0).unwrap());
        let u = ScalarField::from_fn(g, |x, y| {
            let r = x.hypot(y);
            if r < 0.5 {
                1.0
            } else {
                1.0 - ((r - 0.5) / 0.5).powi(2)
            }
        });
        let df = distribution_function(&u).unwrap();
        let (_, m) = df.plateau.unwrap();
        // Nodes see the flat disc only up to the last inside node, so the
        // measure sits about h/2 inside the true radius.
        let h: f64 = 1.0 / 64.0;
        assert!((m - PI * (0.5 - h / 2.0).powi(2)).abs() < 0.01, "{m}");
        assert_eq!(df.eval(u.max()), m);
    }

    #[test]
    fn triangle_piece_is_monotone() {
        let mut prev = f64::INFINITY;
        for k in 0..=1000 {
            let t = -0.1 + 1.2 * k as f64 / 1000.0;
            let a = triangle_superlevel(0.0, 0.3, 1.0, 0.5, t);
            assert!(a <= prev);
            prev = a;
        }
        assert_eq!(triangle_superlevel(0.2, 0.2, 0.2, 0.5, 0.2), 0.5);
    }
}
