//! The one-dimensional problem: `∂ϱ = Δ¹ᴰϱ` on the bulk with the reservoir
//! values pinned at `0` and `N`.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{dopri5, expm_apply, thomas};
use crate::models::{LinearCoefficients, ModelSpec};

/// Above this size evolution switches from the dense exponential to
/// adaptive stepping.
pub const DENSE_LIMIT: usize = 128;

/// Values on `{0, ..., N}`; entries `0` and `N` hold the reservoir values.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub values: Vec<f64>,
    /// Macroscopic time label.
    pub t: f64,
}

impl DensityField {
    /// Field with the given bulk values (`N - 1` of them) and pinned ends.
    pub fn from_bulk(spec: &ModelSpec, bulk: &[f64]) -> Result<Self> {
        if bulk.len() != spec.n - 1 {
            return Err(Error::Usage(format!(
                "expected {} bulk values, got {}",
                spec.n - 1,
                bulk.len()
            )));
        }
        let co = spec.density_coefficients();
        let mut values = Vec::with_capacity(spec.n + 1);
        values.push(co.res_left);
        values.extend_from_slice(bulk);
        values.push(co.res_right);
        Ok(DensityField { values, t: 0.0 })
    }

    pub fn from_fn(spec: &ModelSpec, f: impl Fn(usize) -> f64) -> Self {
        let bulk: Vec<f64> = (1..spec.n).map(f).collect();
        Self::from_bulk(spec, &bulk).expect("length matches")
    }

    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn bulk(&self) -> &[f64] {
        &self.values[1..self.n()]
    }

    pub fn at(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,value\n");
        for (x, v) in self.values.iter().enumerate() {
            writeln!(s, "{x},{v:.17e}").unwrap();
        }
        s
    }
}

/// `Δ¹ᴰ` with model conductances, `N²` included.
#[derive(Debug, Clone)]
pub struct Lap1d {
    pub n: usize,
    pub coeffs: LinearCoefficients,
}

impl Lap1d {
    pub fn new(spec: &ModelSpec) -> Self {
        Lap1d {
            n: spec.n,
            coeffs: spec.density_coefficients(),
        }
    }

    fn scale(&self) -> f64 {
        (self.n * self.n) as f64
    }

    /// Apply to a full vector on `{0..N}`; ghost entries of the result are 0.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n + 1];
        for x in 1..n {
            let cl = self.coeffs.bond(x - 1, n);
            let cr = self.coeffs.bond(x, n);
            out[x] = self.scale() * (cl * (f[x - 1] - f[x]) + cr * (f[x + 1] - f[x]));
        }
        out
    }

    /// Matrix on the augmented state `[1, ϱ(1), ..., ϱ(N-1)]`.
    pub fn augmented(&self) -> DMatrix<f64> {
        let n = self.n;
        let s = self.scale();
        let mut m = DMatrix::zeros(n, n);
        for x in 1..n {
            let cl = self.coeffs.bond(x - 1, n);
            let cr = self.coeffs.bond(x, n);
            m[(x, x)] = -s * (cl + cr);
            if x > 1 {
                m[(x, x - 1)] = s * cl;
            } else {
                m[(x, 0)] += s * cl * self.coeffs.res_left;
            }
            if x + 1 < n {
                m[(x, x + 1)] = s * cr;
            } else {
                m[(x, 0)] += s * cr * self.coeffs.res_right;
            }
        }
        m
    }
}

pub fn apply_lap1d(spec: &ModelSpec, f: &DensityField) -> Result<DensityField> {
    if f.n() != spec.n {
        return Err(Error::Usage("field and spec disagree on N".into()));
    }
    Ok(DensityField {
        values: Lap1d::new(spec).apply(&f.values),
        t: f.t,
    })
}

/// Solve `∂f = Δ¹ᴰf` up to macroscopic time `t` (relative tolerance 1e-10).
pub fn evolve_density(spec: &ModelSpec, f0: &DensityField, t: f64) -> Result<DensityField> {
    if !(t >= 0.0) {
        return Err(Error::Usage(format!("time must be non-negative, got {t}")));
    }
    if f0.n() != spec.n {
        return Err(Error::Usage("field and spec disagree on N".into()));
    }
    let lap = Lap1d::new(spec);
    let mut y0 = Vec::with_capacity(spec.n);
    y0.push(1.0);
    y0.extend_from_slice(f0.bulk());
    let y = if t == 0.0 {
        y0
    } else if spec.n <= DENSE_LIMIT {
        expm_apply(&lap.augmented(), t, &y0)
    } else {
        let co = lap.coeffs;
        let n = spec.n;
        dopri5(
            |y, dy| {
                let mut full = Vec::with_capacity(n + 1);
                full.push(co.res_left);
                full.extend_from_slice(&y[1..]);
                full.push(co.res_right);
                let l = lap.apply(&full);
                dy[0] = 0.0;
                dy[1..].copy_from_slice(&l[1..n]);
            },
            &y0,
            t,
            1e-11,
            1e-14,
        )?
    };
    let mut out = DensityField::from_bulk(spec, &y[1..])?;
    out.t = f0.t + t;
    Ok(out)
}

/// Slope and intercept `(a_N, b_N)` of the affine stationary profile on the
/// bulk. Reduces to `((ϱ+ - ϱ-)/N, ϱ-)` when both boundary conductances
/// equal the bulk one.
pub fn stationary_affine(spec: &ModelSpec) -> (f64, f64) {
    let co = spec.density_coefficients();
    let n = spec.n as f64;
    // series resistance of the chain 0 - 1 - ... - N
    let r = 1.0 / co.left + (n - 2.0) / co.bulk + 1.0 / co.right;
    let j = (co.res_right - co.res_left) / r;
    let a = j / co.bulk;
    let b = co.res_left + j / co.left - a;
    (a, b)
}

/// Closed-form stationary profile.
pub fn stationary_density(spec: &ModelSpec) -> DensityField {
    let (a, b) = stationary_affine(spec);
    DensityField::from_fn(spec, |x| a * x as f64 + b)
}

/// Stationary profile by a tridiagonal solve of `Δ¹ᴰf = 0`.
pub fn stationary_density_solve(spec: &ModelSpec) -> DensityField {
    let n = spec.n;
    let co = spec.density_coefficients();
    let m = n - 1;
    let mut sub = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut sup = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for x in 1..n {
        let (cl, cr) = (co.bond(x - 1, n), co.bond(x, n));
        let i = x - 1;
        diag[i] = cl + cr;
        if x > 1 {
            sub[i] = -cl;
        } else {
            rhs[i] += cl * co.res_left;
        }
        if x + 1 < n {
            sup[i] = -cr;
        } else {
            rhs[i] += cr * co.res_right;
        }
    }
    let bulk = thomas(&sub, &diag, &sup, &rhs);
    DensityField::from_bulk(spec, &bulk).expect("length matches")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_is_harmonic_with_unit_lambdas() {
        let spec = ModelSpec::sep(7, 1, 0.1, 0.9).unwrap();
        let f = DensityField::from_fn(&spec, |x| 0.1 + 0.8 * x as f64 / 7.0);
        let l = apply_lap1d(&spec, &f).unwrap();
        assert!(l.bulk().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn half_lambda_example() {
        let spec = ModelSpec::sep(4, 1, 0.0, 1.0).unwrap().with_lambdas(1.0, 0.5).unwrap();
        let f = DensityField::from_bulk(&spec, &[0.2, 0.4, 0.6]).unwrap();
        let l = apply_lap1d(&spec, &f).unwrap();
        assert!(l.bulk().iter().all(|v| v.abs() < 1e-12));
        let ss = stationary_density(&spec);
        for (a, b) in ss.bulk().iter().zip([0.2, 0.4, 0.6]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_lambda_profile() {
        let spec = ModelSpec::sep(4, 1, 0.0, 1.0).unwrap();
        let ss = stationary_density(&spec);
        let want = [0.0, 0.25, 0.5, 0.75, 1.0];
        for (a, b) in ss.values.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn relaxes_to_stationary() {
        let spec = ModelSpec::sep(8, 1, 0.3, 0.6).unwrap().with_lambdas(0.4, 0.9).unwrap();
        let f0 = DensityField::from_fn(&spec, |x| if x % 2 == 0 { 1.0 } else { 0.0 });
        let ft = evolve_density(&spec, &f0, 50.0).unwrap();
        let ss = stationary_density(&spec);
        for (a, b) in ft.values.iter().zip(&ss.values) {
            assert!((a - b).abs() < 1e-8);
        }
        assert_eq!(ft.t, 50.0);
    }

    #[test]
    fn negative_time_rejected() {
        let spec = ModelSpec::sep(5, 1, 0.3, 0.6).unwrap();
        let f0 = stationary_density(&spec);
        assert!(matches!(evolve_density(&spec, &f0, -1.0), Err(Error::Usage(_))));
    }
}
