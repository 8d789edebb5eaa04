//! Sparse linear algebra for the grid solvers: CSR matrices, a geometric
//! multigrid V-cycle used as a preconditioner for conjugate gradients, and a
//! tridiagonal solver for the radial problems.

use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    /// Assembles from triplets; duplicate entries are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0; n_rows + 1];
        let mut col = Vec::with_capacity(t.len());
        let mut val: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(c);
                val.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Csr { n_rows, n_cols, row_ptr, col, val }
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col[a..b].iter().copied().zip(self.val[a..b].iter().copied())
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.n_rows) {
            let mut s = 0.0;
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.val[p] * x[self.col[p]];
            }
            *yr = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|r| self.row(r).find(|&(c, _)| c == r).map_or(0.0, |(_, v)| v)).collect()
    }

    pub fn transpose(&self) -> Csr {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                t.push((c, r, v));
            }
        }
        Csr::from_triplets(self.n_cols, self.n_rows, t)
    }

    /// Sparse product `self · b`.
    pub fn mul(&self, b: &Csr) -> Csr {
        assert_eq!(self.n_cols, b.n_rows);
        let mut acc = vec![0.0; b.n_cols];
        let mut mark = vec![usize::MAX; b.n_cols];
        let mut row_ptr = vec![0];
        let mut col = Vec::new();
        let mut val = Vec::new();
        for r in 0..self.n_rows {
            let start = col.len();
            for (k, a) in self.row(r) {
                for (c, v) in b.row(k) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = 0.0;
                        col.push(c);
                    }
                    acc[c] += a * v;
                }
            }
            col[start..].sort_unstable();
            val.extend(col[start..].iter().map(|&c| acc[c]));
            row_ptr.push(col.len());
        }
        Csr { n_rows: self.n_rows, n_cols: b.n_cols, row_ptr, col, val }
    }

    /// Adds `d` to the diagonal (entries must already exist).
    pub fn add_diagonal(&mut self, d: &[f64]) {
        for (r, dr) in d.iter().enumerate() {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let p = a + self.col[a..b].binary_search(&r).expect("missing diagonal entry");
            self.val[p] += dr;
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Dense Cholesky factor of a small SPD matrix (row-major lower triangle).
#[derive(Debug, Clone)]
struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    fn new(a: &Csr) -> Result<Self> {
        let n = a.n_rows;
        let mut l = vec![0.0; n * n];
        for r in 0..n {
            for (c, v) in a.row(r) {
                l[r * n + c] = v;
            }
        }
        for j in 0..n {
            let mut d = l[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) {
                return Err(Error::LinearSolver(format!("coarse matrix is not positive definite (pivot {d:e})")));
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = l[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Cholesky { n, l })
    }

    fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
    }
}

#[derive(Debug, Clone)]
struct Level {
    a: Csr,
    diag: Vec<f64>,
    /// Prolongation from the next coarser level.
    p: Option<Csr>,
    r: Option<Csr>,
}

/// Geometric multigrid hierarchy on nested Cartesian index sets.
///
/// The coarse unknowns are the even-indexed fine unknowns; prolongation is
/// bilinear interpolation restricted to coarse unknowns that exist, and
/// coarse operators are Galerkin products `PᵀAP`. The V-cycle uses one
/// forward and one backward Gauss-Seidel sweep, so it is symmetric and may
/// precondition CG.
#[derive(Debug, Clone)]
pub struct Multigrid {
    levels: Vec<Level>,
    coarse: Cholesky,
}

const COARSEST: usize = 300;

impl Multigrid {
    /// `coords[k]` are the integer grid coordinates of unknown `k`.
    pub fn new(a: Csr, coords: &[(i64, i64)]) -> Result<Self> {
        let mut levels = Vec::new();
        let mut a = a;
        let mut coords = coords.to_vec();
        while a.n_rows > COARSEST {
            let (p, cc) = prolongation(&coords);
            if cc.len() as f64 > 0.9 * coords.len() as f64 {
                break;
            }
            let r = p.transpose();
            let ac = r.mul(&a.mul(&p));
            let diag = a.diagonal();
            levels.push(Level { a, diag, p: Some(p), r: Some(r) });
            a = ac;
            coords = cc;
        }
        let coarse = Cholesky::new(&a)?;
        let diag = a.diagonal();
        levels.push(Level { a, diag, p: None, r: None });
        Ok(Multigrid { levels, coarse })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn matrix(&self) -> &Csr {
        &self.levels[0].a
    }

    /// One V-cycle for `A x = b` from `x = 0`.
    pub fn vcycle(&self, b: &[f64], x: &mut [f64]) {
        self.cycle(0, b, x);
    }

    fn cycle(&self, l: usize, b: &[f64], x: &mut [f64]) {
        let lev = &self.levels[l];
        if l + 1 == self.levels.len() {
            self.coarse.solve(b, x);
            return;
        }
        x.iter_mut().for_each(|v| *v = 0.0);
        gauss_seidel(&lev.a, &lev.diag, b, x, false);
        let mut res = lev.a.matvec(x);
        for (r, bi) in res.iter_mut().zip(b) {
            *r = bi - *r;
        }
        let (p, r) = (lev.p.as_ref().unwrap(), lev.r.as_ref().unwrap());
        let bc = r.matvec(&res);
        let mut xc = vec![0.0; bc.len()];
        self.cycle(l + 1, &bc, &mut xc);
        let corr = p.matvec(&xc);
        for (xi, c) in x.iter_mut().zip(&corr) {
            *xi += c;
        }
        gauss_seidel(&lev.a, &lev.diag, b, x, true);
    }
}

fn gauss_seidel(a: &Csr, diag: &[f64], b: &[f64], x: &mut [f64], backward: bool) {
    let mut sweep = |r: usize| {
        let mut s = b[r];
        for (c, v) in a.row(r) {
            if c != r {
                s -= v * x[c];
            }
        }
        x[r] = s / diag[r];
    };
    if backward {
        (0..a.n_rows).rev().for_each(&mut sweep);
    } else {
        (0..a.n_rows).for_each(&mut sweep);
    }
}

/// Bilinear prolongation onto the even-indexed sub-lattice of `coords`.
fn prolongation(coords: &[(i64, i64)]) -> (Csr, Vec<(i64, i64)>) {
    let coarse: Vec<(i64, i64)> = coords
        .iter()
        .filter(|(i, j)| i.rem_euclid(2) == 0 && j.rem_euclid(2) == 0)
        .map(|(i, j)| (i.div_euclid(2), j.div_euclid(2)))
        .collect();
    let (mut i0, mut i1, mut j0, mut j1) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
    for &(i, j) in &coarse {
        i0 = i0.min(i);
        i1 = i1.max(i);
        j0 = j0.min(j);
        j1 = j1.max(j);
    }
    let w = (i1 - i0 + 1).max(0) as usize;
    let hgt = (j1 - j0 + 1).max(0) as usize;
    let mut lookup = vec![u32::MAX; w * hgt];
    for (k, &(i, j)) in coarse.iter().enumerate() {
        lookup[(i - i0) as usize + w * (j - j0) as usize] = k as u32;
    }
    let find = |i: i64, j: i64| -> Option<usize> {
        if i < i0 || i > i1 || j < j0 || j > j1 {
            return None;
        }
        let v = lookup[(i - i0) as usize + w * (j - j0) as usize];
        (v != u32::MAX).then_some(v as usize)
    };
    let axis = |i: i64| -> Vec<(i64, f64)> {
        if i.rem_euclid(2) == 0 {
            vec![(i.div_euclid(2), 1.0)]
        } else {
            vec![((i - 1).div_euclid(2), 0.5), ((i + 1).div_euclid(2), 0.5)]
        }
    };
    let mut t = Vec::new();
    for (k, &(i, j)) in coords.iter().enumerate() {
        for (ci, wi) in axis(i) {
            for &(cj, wj) in &axis(j) {
                if let Some(c) = find(ci, cj) {
                    t.push((k, c, wi * wj));
                }
            }
        }
    }
    (Csr::from_triplets(coords.len(), coarse.len(), t), coarse)
}

/// Outcome of a conjugate-gradient solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Multigrid-preconditioned CG for the SPD system held by `mg`, stopping at
/// `‖b − Ax‖₂ ≤ tol·‖b‖₂`. `x` holds the initial guess on entry.
pub fn pcg(mg: &Multigrid, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<CgStats> {
    let a = mg.matrix();
    let n = b.len();
    let bn = norm2(b);
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgStats { iterations: 0, relative_residual: 0.0 });
    }
    let mut r = a.matvec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut rel = norm2(&r) / bn;
    if rel <= tol {
        return Ok(CgStats { iterations: 0, relative_residual: rel });
    }
    let mut z = vec![0.0; n];
    mg.vcycle(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::LinearSolver(format!("CG breakdown at iteration {it} (pᵀAp = {pap:e})")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = norm2(&r) / bn;
        if rel <= tol {
            return Ok(CgStats { iterations: it, relative_residual: rel });
        }
        mg.vcycle(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::LinearSolver(format!("CG did not reach {tol:e} in {max_iter} iterations (residual {rel:e})")))
}

/// Solves a tridiagonal system with sub-, main and super-diagonals `a`, `b`,
/// `c` (`a[0]` and `c[n-1]` are ignored) by the Thomas algorithm.
pub fn tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let mut denom = b[0];
    for i in 0..n {
        if i > 0 {
            denom = b[i] - a[i] * cp[i - 1];
        }
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::LinearSolver(format!("zero pivot in tridiagonal solve at row {i}")));
        }
        cp[i] = if i + 1 < n { c[i] / denom } else { 0.0 };
        dp[i] = (d[i] - if i > 0 { a[i] * dp[i - 1] } else { 0.0 }) / denom;
    }
    let mut x = dp;
    for i in (0..n.saturating_sub(1)).rev() {
        x[i] -= cp[i] * x[i + 1];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_2d(m: i64) -> (Csr, Vec<(i64, i64)>) {
        let coords: Vec<(i64, i64)> = (1..m).flat_map(|j| (1..m).map(move |i| (i, j))).collect();
        let id = |i: i64, j: i64| ((i - 1) + (m - 1) * (j - 1)) as usize;
        let mut t = Vec::new();
        for &(i, j) in &coords {
            t.push((id(i, j), id(i, j), 4.0));
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (a, b) = (i + di, j + dj);
                if a > 0 && a < m && b > 0 && b < m {
                    t.push((id(i, j), id(a, b), -1.0));
                }
            }
        }
        let n = coords.len();
        (Csr::from_triplets(n, n, t), coords)
    }

    #[test]
    fn pcg_converges_quickly() {
        let (a, coords) = laplace_2d(128);
        let mg = Multigrid::new(a.clone(), &coords).unwrap();
        assert!(mg.depth() >= 4);
        let b: Vec<f64> = (0..a.n_rows).map(|k| ((k * 37) % 11) as f64 - 5.0).collect();
        let mut x = vec![0.0; b.len()];
        let st = pcg(&mg, &b, &mut x, 1e-10, 50).unwrap();
        assert!(st.iterations < 20, "{st:?}");
        let r = a.matvec(&x);
        let err: f64 = r.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        assert!(err <= 1.1e-10 * norm2(&b));
    }

    #[test]
    fn thomas_matches_dense() {
        let a = [0.0, -1.0, -1.0, -1.0];
        let b = [2.0, 2.0, 2.0, 2.0];
        let c = [-1.0, -1.0, -1.0, 0.0];
        let x = tridiagonal(&a, &b, &c, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn product_and_transpose() {
        let a = Csr::from_triplets(2, 3, vec![(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0), (0, 0, 1.0)]);
        assert_eq!(a.nnz(), 3);
        let ata = a.transpose().mul(&a);
        assert_eq!(ata.matvec(&[1.0, 1.0, 1.0]), vec![2.0 * 2.0 + 2.0 * 2.0, 9.0, 2.0 * 2.0 + 2.0 * 2.0]);
    }
}
