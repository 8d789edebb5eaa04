//! Masked Cartesian grids on analytic domains, grid functions and the discrete
//! geometry built on them (derivatives, level-set measures, contours, I/O).

mod contour;
mod domain;
mod io;
mod measure;
mod ops;

use std::sync::Arc;

pub use contour::{coarea_check, level_set_perimeter, CoareaResult, Segment};
pub use domain::DomainSpec;
pub use io::{read_field, read_field_from, write_field, write_field_to};
pub use measure::{distribution_function, superlevel_measure, superlevel_measures, DistributionFunction};
pub use ops::{gradient, hessian, laplacian};

use crate::error::{Error, Result};

/// Direction offsets in the order east, west, north, south.
pub const DIRS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

const NONE: u32 = u32::MAX;

/// A uniform Cartesian grid clipped to a domain. Node `(i, j)` sits at
/// `origin + h·(i, j)`; inside nodes are numbered row-major and carry, per
/// direction, the fraction `θ ∈ (0, 1]` of the grid edge that lies inside.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub domain: DomainSpec,
    pub h: f64,
    pub origin: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    index: Vec<u32>,
    nodes: Vec<u32>,
    theta: Vec<[f64; 4]>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Number of inside nodes (unknowns).
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }

    /// Number of inside nodes times the cell volume.
    pub fn mask_volume(&self) -> f64 {
        self.len() as f64 * self.cell_volume()
    }

    /// Flat node index `i + nx·j` of unknown `k`.
    pub fn node_of(&self, k: usize) -> usize {
        self.nodes[k] as usize
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        let n = self.node_of(k);
        (n % self.nx, n / self.nx)
    }

    pub fn node_xy(&self, i: usize, j: usize) -> (f64, f64) {
        (self.origin[0] + self.h * i as f64, self.origin[1] + self.h * j as f64)
    }

    pub fn xy(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.ij(k);
        self.node_xy(i, j)
    }

    /// Unknown index at node `(i, j)` if it is inside.
    pub fn unknown(&self, i: i64, j: i64) -> Option<usize> {
        if i < 0 || j < 0 || i as usize >= self.nx || j as usize >= self.ny {
            return None;
        }
        let v = self.index[i as usize + self.nx * j as usize];
        (v != NONE).then_some(v as usize)
    }

    pub fn is_inside(&self, i: i64, j: i64) -> bool {
        self.unknown(i, j).is_some()
    }

    /// Inside neighbour of unknown `k` in direction `d` (see [`DIRS`]).
    pub fn neighbor(&self, k: usize, d: usize) -> Option<usize> {
        let (i, j) = self.ij(k);
        let (di, dj) = DIRS[d];
        self.unknown(i as i64 + di, j as i64 + dj)
    }

    /// Cut fractions `[θ_E, θ_W, θ_N, θ_S]`; 1 towards inside neighbours.
    pub fn theta(&self, k: usize) -> [f64; 4] {
        self.theta[k]
    }

    /// True if the node is adjacent to the boundary along some axis.
    pub fn is_cut(&self, k: usize) -> bool {
        let dirs = if self.dim() == 1 { 2 } else { 4 };
        (0..dirs).any(|d| self.neighbor(k, d).is_none())
    }

    /// Finite-volume weight of unknown `k`: `h^dim` scaled per axis by the
    /// mean of the two cut fractions.
    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Euclidean distance of node `k` to the boundary, from the analytic
    /// level function (exact except for the ellipse).
    pub fn boundary_distance(&self, k: usize) -> f64 {
        let (x, y) = self.xy(k);
        -self.domain.level(x, y)
    }
}

/// Builds the masked grid of spacing `h` for `d`.
///
/// Nodes are aligned with the origin so centred domains get symmetric grids.
/// A node is inside when it lies strictly inside the domain by more than
/// `1e-9·h`; cut fractions come from exact ray/boundary intersections.
pub fn build_grid(d: &DomainSpec, h: f64) -> Result<Grid> {
    d.validate()?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Grid(format!("spacing must be positive, got {h}")));
    }
    if h > d.feature_size() / 8.0 * (1.0 + 1e-12) {
        return Err(Error::Grid(format!(
            "spacing {h} exceeds one eighth of the smallest feature {}",
            d.feature_size()
        )));
    }
    let bb = d.bounding_box();
    let dim = d.dim();
    let i0 = (bb[0] / h).floor() as i64 - 1;
    let i1 = (bb[1] / h).ceil() as i64 + 1;
    let (j0, j1) = if dim == 1 { (0, 0) } else { ((bb[2] / h).floor() as i64 - 1, (bb[3] / h).ceil() as i64 + 1) };
    let nx = (i1 - i0 + 1) as usize;
    let ny = (j1 - j0 + 1) as usize;
    let origin = [i0 as f64 * h, j0 as f64 * h];
    let tol = 1e-9 * h;
    let inside = |i: usize, j: usize| {
        let (x, y) = (origin[0] + h * i as f64, origin[1] + h * j as f64);
        d.level(x, y) < -tol
    };
    let mut index = vec![NONE; nx * ny];
    let mut nodes = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if inside(i, j) {
                index[i + nx * j] = nodes.len() as u32;
                nodes.push((i + nx * j) as u32);
            }
        }
    }
    if nodes.is_empty() {
        return Err(Error::Grid(format!("no grid node of spacing {h} lies inside {d}")));
    }
    let dirs = if dim == 1 { 2 } else { 4 };
    let mut theta = Vec::with_capacity(nodes.len());
    let mut weights = Vec::with_capacity(nodes.len());
    for &n in &nodes {
        let (i, j) = (n as usize % nx, n as usize / nx);
        let (x, y) = (origin[0] + h * i as f64, origin[1] + h * j as f64);
        let mut th = [1.0; 4];
        for (dd, t) in th.iter_mut().enumerate().take(dirs) {
            let (di, dj) = DIRS[dd];
            let (ni, nj) = (i as i64 + di, j as i64 + dj);
            let nb_inside = ni >= 0
                && nj >= 0
                && (ni as usize) < nx
                && (nj as usize) < ny
                && index[ni as usize + nx * nj as usize] != NONE;
            if !nb_inside {
                let s = d.ray_hit(x, y, di as f64, dj as f64, h * (1.0 + 1e-9)).unwrap_or(h);
                *t = (s / h).clamp(1e-9, 1.0);
            }
        }
        let wx = 0.5 * (th[0] + th[1]);
        let w = if dim == 1 { h * wx } else { h * h * wx * 0.5 * (th[2] + th[3]) };
        theta.push(th);
        weights.push(w);
    }
    Ok(Grid { domain: *d, h, origin, nx, ny, index, nodes, theta, weights })
}

/// Values on the inside nodes of a grid; the boundary value 0 is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!("{} values for {} inside nodes", values.len(), grid.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Grid(format!("non-finite value at unknown {k}")));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        ScalarField { grid, values: vec![0.0; n] }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| {
            let (x, y) = grid.xy(k);
            f(x, y)
        });
        let values = values.collect();
        ScalarField { grid, values }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = k;
            }
        }
        best
    }

    /// `v = max u − u`.
    pub fn gap_from_max(&self) -> ScalarField {
        let m = self.max();
        ScalarField { grid: self.grid.clone(), values: self.values.iter().map(|u| m - u).collect() }
    }

    pub fn sup_distance(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Values on every grid node. Outside nodes get the linear extrapolation
    /// from their inside axis neighbours that vanishes on the boundary, averaged
    /// over those neighbours, or 0 when there are none.
    pub fn extended_values(&self) -> Vec<f64> {
        let g = &*self.grid;
        let mut out = vec![0.0; g.nx * g.ny];
        let mut count = vec![0u8; g.nx * g.ny];
        let dirs = if g.dim() == 1 { 2 } else { 4 };
        for k in 0..g.len() {
            let n = g.node_of(k);
            out[n] = self.values[k];
        }
        for k in 0..g.len() {
            let (i, j) = g.ij(k);
            let th = g.theta(k);
            for (d, &(di, dj)) in DIRS.iter().enumerate().take(dirs) {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                if ni < 0 || nj < 0 || ni as usize >= g.nx || nj as usize >= g.ny || g.is_inside(ni, nj) {
                    continue;
                }
                let n = ni as usize + g.nx * nj as usize;
                out[n] += self.values[k] * (1.0 - 1.0 / th[d]);
                count[n] += 1;
            }
        }
        for (n, c) in count.iter().enumerate() {
            if *c > 1 {
                out[n] /= *c as f64;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_mask_volume() {
        let g = build_grid(&DomainSpec::Ball { radius: 1.0 }, 1.0 / 128.0).unwrap();
        assert!((g.mask_volume() - PI).abs() < 0.01);
        let wsum: f64 = g.weights().iter().sum();
        assert!((wsum - PI).abs() < 0.05);
    }

    #[test]
    fn interval_has_nine_nodes() {
        let g = build_grid(&DomainSpec::Interval { a: 0.0, b: 1.0 }, 0.1).unwrap();
        assert_eq!(g.len(), 9);
        assert!(g.theta(0)[1] > 0.99 && g.theta(8)[0] > 0.99);
    }

    #[test]
    fn invalid_annulus_rejected() {
        let r = build_grid(&DomainSpec::Annulus { r1: 1.0, r2: 0.5 }, 0.01);
        assert!(matches!(r, Err(Error::Grid(_))));
    }

    #[test]
    fn cut_fractions_positive_and_exact() {
        let g = build_grid(&DomainSpec::Ball { radius: 1.0 }, 0.1).unwrap();
        for k in 0..g.len() {
            let (x, y) = g.xy(k);
            for (d, &(di, dj)) in DIRS.iter().enumerate() {
                let t = g.theta(k)[d];
                assert!(t > 0.0 && t <= 1.0);
                if t < 1.0 {
                    let (bx, by) = (x + t * g.h * di as f64, y + t * g.h * dj as f64);
                    assert!((bx.hypot(by) - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
