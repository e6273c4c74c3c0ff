//! Small linear-algebra kit: compressed sparse rows, a banded LU for the
//! M-matrices of the walk problems, Jacobi-preconditioned BiCGSTAB, the
//! Thomas algorithm, and linear ODE propagation (dense exponential or
//! adaptive Dormand-Prince).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Build from per-row entries; duplicate columns are summed.
    pub fn from_rows(ncols: usize, rows: &[Vec<(usize, f64)>]) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            let mut r = row.clone();
            r.sort_by_key(|e| e.0);
            for (j, v) in r {
                debug_assert!(j < ncols);
                if indices.len() > *indptr.last().unwrap() && *indices.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Csr {
            nrows: rows.len(),
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).filter(|e| e.0 == j).map(|e| e.1).sum()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    /// Half bandwidths `(lower, upper)`.
    pub fn bandwidth(&self) -> (usize, usize) {
        let (mut lo, mut up) = (0, 0);
        for i in 0..self.nrows {
            for (j, _) in self.row(i) {
                if j < i {
                    lo = lo.max(i - j);
                } else {
                    up = up.max(j - i);
                }
            }
        }
        (lo, up)
    }
}

/// LU factors of a banded matrix, computed without pivoting. Valid for
/// the nonsingular M-matrices produced by absorbed walks.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    lo: usize,
    up: usize,
    // row i stores columns i-lo ..= i+up
    band: Vec<f64>,
}

impl BandedLu {
    pub fn factor(a: &Csr) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::Usage("banded LU needs a square matrix".into()));
        }
        let n = a.nrows;
        let (lo, up) = a.bandwidth();
        let w = lo + up + 1;
        let mut band = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in a.row(i) {
                band[i * w + (j + lo - i)] += v;
            }
        }
        let at = |i: usize, j: usize| i * w + (j + lo - i);
        for k in 0..n {
            let piv = band[at(k, k)];
            if piv.abs() < 1e-300 || !piv.is_finite() {
                return Err(Error::Singular(format!("zero pivot at row {k}")));
            }
            let iend = (k + lo).min(n - 1);
            let jend = (k + up).min(n - 1);
            for i in k + 1..=iend {
                let l = band[at(i, k)] / piv;
                if l == 0.0 {
                    continue;
                }
                band[at(i, k)] = l;
                for j in k + 1..=jend {
                    if j + lo >= i && j <= i + up {
                        band[at(i, j)] -= l * band[at(k, j)];
                    }
                }
            }
        }
        Ok(BandedLu { n, lo, up, band })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, lo, up) = (self.n, self.lo, self.up);
        let w = lo + up + 1;
        let at = |i: usize, j: usize| i * w + (j + lo - i);
        let mut x = b.to_vec();
        for i in 0..n {
            let start = i.saturating_sub(lo);
            let mut s = x[i];
            for j in start..i {
                s -= self.band[at(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let end = (i + up).min(n - 1);
            let mut s = x[i];
            for j in i + 1..=end {
                s -= self.band[at(i, j)] * x[j];
            }
            x[i] = s / self.band[at(i, i)];
        }
        x
    }
}

/// Jacobi-preconditioned BiCGSTAB. Returns the solution once the relative
/// residual drops below `tol`.
pub fn bicgstab(a: &Csr, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let dinv: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let norm_b = dot(b, b).sqrt().max(1e-300);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut t = vec![0.0; n];
    for _ in 0..max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < 1e-300 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = dinv[i] * p[i];
        }
        a.mul_vec_into(&y, &mut v);
        alpha = rho / dot(&r0, &v);
        let mut s = r.clone();
        for i in 0..n {
            s[i] -= alpha * v[i];
        }
        if dot(&s, &s).sqrt() / norm_b < tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok(x);
        }
        for i in 0..n {
            z[i] = dinv[i] * s[i];
        }
        a.mul_vec_into(&z, &mut t);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        if dot(&r, &r).sqrt() / norm_b < tol {
            return Ok(x);
        }
    }
    Err(Error::Singular(format!("BiCGSTAB did not reach {tol:e} in {max_iter} iterations")))
}

/// Thomas algorithm for `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`.
pub fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

/// `exp(t A) v` through nalgebra's dense exponential.
pub fn expm_apply(a: &DMatrix<f64>, t: f64, v: &[f64]) -> Vec<f64> {
    let e = (a * t).exp();
    (e * DVector::from_column_slice(v)).as_slice().to_vec()
}

/// Adaptive Dormand-Prince 5(4) for `y' = f(y)` on `[0, t]`.
pub fn dopri5<F>(f: F, y0: &[f64], t: f64, rtol: f64, atol: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]),
{
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let _ = C;
    let n = y0.len();
    let mut y = y0.to_vec();
    if t == 0.0 {
        return Ok(y);
    }
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    f(&y, &mut k[0]);
    let mut h = {
        let d0 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let d1 = k[0].iter().map(|v| v * v).sum::<f64>().sqrt();
        if d1 > 1e-12 { (0.01 * d0.max(1e-6) / d1).min(t) } else { t.min(1e-3) }
    };
    let mut s = 0.0;
    let mut steps = 0usize;
    while s < t {
        steps += 1;
        if steps > 50_000_000 {
            return Err(Error::Resource("step limit reached in Dormand-Prince".into()));
        }
        h = h.min(t - s);
        for stage in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, a) in A[stage][..stage].iter().enumerate() {
                    if *a != 0.0 {
                        acc += h * a * k[j][i];
                    }
                }
                tmp[i] = acc;
            }
            let (head, tail) = k.split_at_mut(stage);
            let _ = head;
            f(&tmp, &mut tail[0]);
        }
        // tmp now holds the 5th-order solution (stage 7 argument)
        let mut err = 0.0f64;
        for i in 0..n {
            let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * h;
            let sc = atol + rtol * y[i].abs().max(tmp[i].abs());
            err = err.max((e / sc).abs());
        }
        if err <= 1.0 {
            s += h;
            y.copy_from_slice(&tmp);
            let last = k[6].clone();
            k[0] = last;
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lap1d(n: usize) -> Csr {
        let rows: Vec<_> = (0..n)
            .map(|i| {
                let mut r = vec![(i, 2.0)];
                if i > 0 {
                    r.push((i - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, -1.0));
                }
                r
            })
            .collect();
        Csr::from_rows(n, &rows)
    }

    #[test]
    fn banded_and_bicgstab_agree() {
        let a = lap1d(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let x1 = BandedLu::factor(&a).unwrap().solve(&b);
        let x2 = bicgstab(&a, &b, 1e-13, 10_000).unwrap();
        let r = a.mul_vec(&x1);
        for i in 0..50 {
            assert!((r[i] - b[i]).abs() < 1e-10);
            assert!((x1[i] - x2[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn thomas_matches_banded() {
        let n = 20;
        let sub = vec![-1.0; n];
        let diag = vec![2.5; n];
        let sup = vec![-1.2; n];
        let rhs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let x = thomas(&sub, &diag, &sup, &rhs);
        for i in 0..n {
            let mut s = diag[i] * x[i];
            if i > 0 {
                s += sub[i] * x[i - 1];
            }
            if i + 1 < n {
                s += sup[i] * x[i + 1];
            }
            assert!((s - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn dopri_matches_expm() {
        let a = lap1d(12);
        let mut m = a.to_dense();
        m *= -30.0;
        let y0: Vec<f64> = (0..12).map(|i| 1.0 + i as f64).collect();
        let exact = expm_apply(&m, 0.3, &y0);
        let ap = a.clone();
        let got = dopri5(
            |y, dy| {
                ap.mul_vec_into(y, dy);
                dy.iter_mut().for_each(|v| *v *= -30.0);
            },
            &y0,
            0.3,
            1e-11,
            1e-14,
        )
        .unwrap();
        for i in 0..12 {
            assert!((exact[i] - got[i]).abs() <= 1e-9 * exact[i].abs().max(1e-3), "{i}");
        }
    }
}
