//! Exact Euclidean distance transform (Felzenszwalb-Huttenlocher) on the
//! full node lattice, with the nearest site of every node.

/// Squared distance to the nearest site along a line, and that site.
fn envelope(f: &[f64], d: &mut [f64], arg: &mut [usize]) {
    let n = f.len();
    let sites: Vec<usize> = (0..n).filter(|&q| f[q].is_finite()).collect();
    if sites.is_empty() {
        d.fill(f64::INFINITY);
        arg.fill(usize::MAX);
        return;
    }
    // Parabola apexes `v` and the boundaries `z` between consecutive ones.
    let mut v: Vec<usize> = Vec::with_capacity(sites.len());
    let mut z: Vec<f64> = Vec::with_capacity(sites.len() + 1);
    v.push(sites[0]);
    z.push(f64::NEG_INFINITY);
    z.push(f64::INFINITY);
    let cross = |q: usize, p: usize| -> f64 {
        ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64))
    };
    for &q in &sites[1..] {
        let mut s = cross(q, *v.last().unwrap());
        while s <= z[v.len() - 1] {
            v.pop();
            z.pop();
            s = cross(q, *v.last().unwrap());
        }
        v.push(q);
        *z.last_mut().unwrap() = s;
        z.push(f64::INFINITY);
    }
    let mut k = 0;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        d[q] = dq * dq + f[p];
        arg[q] = p;
    }
}

/// For an `nx × ny` lattice with `site[i + nx·j]` marking the sources,
/// returns the squared distance in lattice units and the flat index of the
/// nearest source (`usize::MAX` when there are none).
pub fn edt(nx: usize, ny: usize, site: &[bool]) -> (Vec<f64>, Vec<usize>) {
    // Columns first: nearest site row per column.
    let mut col_d = vec![f64::INFINITY; nx * ny];
    let mut col_row = vec![usize::MAX; nx * ny];
    let mut f = vec![0.0; ny];
    let mut d = vec![0.0; ny];
    let mut a = vec![0usize; ny];
    for i in 0..nx {
        for j in 0..ny {
            f[j] = if site[i + nx * j] { 0.0 } else { f64::INFINITY };
        }
        envelope(&f, &mut d, &mut a);
        for j in 0..ny {
            col_d[i + nx * j] = d[j];
            col_row[i + nx * j] = a[j];
        }
    }
    let mut out_d = vec![f64::INFINITY; nx * ny];
    let mut out_s = vec![usize::MAX; nx * ny];
    let mut f = vec![0.0; nx];
    let mut d = vec![0.0; nx];
    let mut a = vec![0usize; nx];
    for j in 0..ny {
        f.copy_from_slice(&col_d[nx * j..nx * (j + 1)]);
        envelope(&f, &mut d, &mut a);
        for i in 0..nx {
            if a[i] != usize::MAX {
                out_d[i + nx * j] = d[i];
                let ci = a[i];
                out_s[i + nx * j] = ci + nx * col_row[ci + nx * j];
            }
        }
    }
    (out_d, out_s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_brute_force() {
        let (nx, ny) = (23, 17);
        let site: Vec<bool> = (0..nx * ny).map(|k| (k * 7919) % 53 == 0).collect();
        let (d, s) = edt(nx, ny, &site);
        for k in 0..nx * ny {
            let (i, j) = ((k % nx) as f64, (k / nx) as f64);
            let best = (0..nx * ny)
                .filter(|&m| site[m])
                .map(|m| ((m % nx) as f64 - i).powi(2) + ((m / nx) as f64 - j).powi(2))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(d[k], best);
            let m = s[k];
            assert_eq!(((m % nx) as f64 - i).powi(2) + ((m / nx) as f64 - j).powi(2), best);
        }
    }
}
