//! Two-point correlations: the 2D generator of the absorbed walk, the
//! source term, and the joint evolution of density and correlation.
//!
//! Evolution runs on the raw second moments `M = φ + ϱ⊗ϱ` (with the
//! model's diagonal convention). `M` obeys a linear equation with boundary
//! values `M(0, y) = ϱ(0)ϱ(y)`, `M(x, N) = ϱ(x)ϱ(N)`, so the triple
//! `[1, ϱ, M]` evolves under one linear operator and no quadrature of the
//! time-dependent source is needed. `φ` is recovered at the end.

use std::fmt::Write as _;

use serde::Serialize;

use crate::density::{DensityField, Lap1d};
use crate::error::{Error, Result};
use crate::lattice::Geometry;
use crate::linalg::{dopri5, expm_apply, Csr};
use crate::models::{BepBoundary, DiagonalMode, Model, ModelSpec};

/// Augmented systems up to this dimension use the dense exponential.
pub const DENSE_AUG_LIMIT: usize = 400;

/// Two-point function on the closed triangle, indexed like [`Geometry`].
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationField {
    pub geom: Geometry,
    pub values: Vec<f64>,
    pub mode: DiagonalMode,
    pub t: f64,
}

impl CorrelationField {
    pub fn zeros(geom: &Geometry, mode: DiagonalMode) -> Self {
        CorrelationField {
            geom: geom.clone(),
            values: vec![0.0; geom.len()],
            mode,
            t: 0.0,
        }
    }

    /// Zero field with the diagonal convention a solve for `spec` produces.
    pub fn zeros_for(spec: &ModelSpec) -> Result<Self> {
        Ok(Self::zeros(&Geometry::new(spec.n)?, field_mode(spec)))
    }

    pub fn from_fn(geom: &Geometry, mode: DiagonalMode, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut out = Self::zeros(geom, mode);
        for (x, y) in geom.open_points() {
            if x == y && mode == DiagonalMode::Excluded {
                continue;
            }
            out.values[geom.index(x, y).unwrap()] = f(x, y);
        }
        out
    }

    /// Symmetric lookup; `None` outside the closed square or on an excluded
    /// diagonal.
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        if a == b && self.mode == DiagonalMode::Excluded && a != 0 && a != self.geom.n() {
            return None;
        }
        self.geom.index(a, b).map(|i| self.values[i])
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        if let Some(i) = self.geom.index(a, b) {
            self.values[i] = v;
        }
    }

    /// Points of `T_N` that carry a value.
    pub fn defined_points(&self) -> Vec<(usize, usize)> {
        self.geom
            .open_points()
            .filter(|&(x, y)| !(x == y && self.mode == DiagonalMode::Excluded))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.defined_points()
            .iter()
            .map(|&(x, y)| self.get(x, y).unwrap().abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CorrelationField) -> f64 {
        self.defined_points()
            .iter()
            .map(|&(x, y)| (self.get(x, y).unwrap() - other.get(x, y).unwrap_or(f64::NAN)).abs())
            .fold(0.0, |a: f64, b| if b.is_nan() { f64::INFINITY } else { a.max(b) })
    }

    /// `x,y,value` over the upper triangle including the diagonal where defined.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,value\n");
        for (x, y) in self.geom.points() {
            if let Some(v) = self.get(x, y) {
                writeln!(s, "{x},{y},{v:.17e}").unwrap();
            }
        }
        s
    }
}

/// Metadata block written beside triangle CSVs.
#[derive(Debug, Clone, Serialize)]
pub struct FieldMeta<'a> {
    pub schema_version: u32,
    pub spec: &'a ModelSpec,
    pub diagonal_mode: DiagonalMode,
    pub t: Option<f64>,
}

/// Diagonal convention of fields returned for `spec`.
pub fn field_mode(spec: &ModelSpec) -> DiagonalMode {
    match spec.diagonal_mode() {
        DiagonalMode::Excluded => DiagonalMode::Excluded,
        _ => DiagonalMode::MomentExtended,
    }
}

/// Correlation value on the diagonal from one-site moments.
///
/// `second` is `E[η(η-1)]` for the particle models and `E[z²]` for BEP and
/// GL.
pub fn diagonal_value(spec: &ModelSpec, second: f64, mean: f64) -> Result<f64> {
    let k = spec.diagonal_factor().ok_or(Error::DiagonalUndefined)?;
    Ok(k * second - mean * mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceSupport {
    UpperDiagonal,
    Diagonal,
    Empty,
}

/// Markov generator of the two-particle walk on the closed triangle.
/// Rows on `∂T_N` are empty (absorption). Rates include the `N²` factor.
#[derive(Debug, Clone)]
pub struct TwoDGenerator {
    pub geom: Geometry,
    pub mode: DiagonalMode,
    pub support: SourceSupport,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TwoDGenerator {
    /// Off-diagonal jump rates out of closed-triangle index `i`.
    pub fn jumps(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn exit_rate(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|e| e.1).sum()
    }

    /// Whether point `(x, y)` of `T_N` is an unknown of the evolution.
    pub fn is_unknown(&self, x: usize, y: usize) -> bool {
        !self.geom.is_boundary(x, y) && !(x == y && self.mode == DiagonalMode::Excluded)
    }

    pub fn unknowns(&self) -> Vec<(usize, usize)> {
        self.geom.open_points().filter(|&(x, y)| self.is_unknown(x, y)).collect()
    }

    /// `(A f)` for a vector on the closed triangle.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        for (i, row) in self.rows.iter().enumerate() {
            out[i] = row.iter().map(|&(j, r)| r * (f[j] - f[i])).sum();
        }
        out
    }

    /// Full generator matrix over the closed triangle (rows sum to zero).
    pub fn matrix(&self) -> Csr {
        let rows: Vec<Vec<(usize, f64)>> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut r = row.clone();
                if !row.is_empty() {
                    r.push((i, -self.exit_rate(i)));
                }
                r
            })
            .collect();
        Csr::from_rows(self.geom.len(), &rows)
    }

    /// Restriction to the unknowns: `(A_uu, couplings)` where `couplings[u]`
    /// lists `(closed index of a boundary point, rate)`.
    pub fn restricted(&self) -> (Csr, Vec<Vec<(usize, f64)>>, Vec<usize>) {
        let unknowns = self.unknowns();
        let mut uidx = vec![usize::MAX; self.geom.len()];
        let closed: Vec<usize> = unknowns
            .iter()
            .map(|&(x, y)| self.geom.index(x, y).unwrap())
            .collect();
        for (u, &i) in closed.iter().enumerate() {
            uidx[i] = u;
        }
        let mut rows = Vec::with_capacity(closed.len());
        let mut coupling = Vec::with_capacity(closed.len());
        for (u, &i) in closed.iter().enumerate() {
            let mut r = vec![(u, -self.exit_rate(i))];
            let mut b = Vec::new();
            for &(j, rate) in &self.rows[i] {
                if uidx[j] != usize::MAX {
                    r.push((uidx[j], rate));
                } else if self.geom.point(j).is_some_and(|(x, y)| self.geom.is_boundary(x, y)) {
                    b.push((j, rate));
                } else if rate != 0.0 {
                    // only an excluded diagonal can land here, and those rates vanish
                    debug_assert!(rate.abs() < 1e-12);
                }
            }
            rows.push(r);
            coupling.push(b);
        }
        (Csr::from_rows(closed.len(), &rows), coupling, closed)
    }
}

pub fn build_generator2d(spec: &ModelSpec) -> Result<TwoDGenerator> {
    build_generator2d_with_mode(spec, field_mode(spec))
}

/// Like [`build_generator2d`] but forcing the diagonal treatment; with
/// `MomentExtended` on an exclusion spec the diagonal rows are kept (the
/// walk can start there but never enters it).
pub fn build_generator2d_with_mode(spec: &ModelSpec, mode: DiagonalMode) -> Result<TwoDGenerator> {
    let geom = Geometry::new(spec.n)?;
    let n = spec.n;
    let s = (n * n) as f64;
    let mut rows = vec![Vec::new(); geom.len()];
    let idx = |x: usize, y: usize| geom.index(x, y).unwrap();

    if let Model::Piles { alpha, .. } = spec.model {
        let a = alpha as f64;
        for (x, y) in geom.open_points() {
            let row = &mut rows[idx(x, y)];
            if x < y {
                for (p, q) in [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)] {
                    row.push((idx(p, q), s / a));
                }
            } else {
                let r1 = 2.0 / (a + 1.0);
                let r2 = 1.0 / (a * (a + 1.0));
                row.push((idx(x - 1, x), s * r1));
                row.push((idx(x, x + 1), s * r1));
                row.push((idx(x - 1, x - 1), s * r2));
                row.push((idx(x + 1, x + 1), s * r2));
            }
        }
        return Ok(TwoDGenerator {
            geom,
            mode,
            support: SourceSupport::Diagonal,
            rows,
        });
    }

    let co = spec.density_coefficients();
    let d = spec.interaction();
    let bond = |b: usize| co.bond(b, n);
    for (x, y) in geom.open_points() {
        if x == y && mode == DiagonalMode::Excluded {
            continue;
        }
        let row = &mut rows[idx(x, y)];
        if x == y {
            row.push((idx(x - 1, x), 2.0 * s * bond(x - 1)));
            row.push((idx(x, x + 1), 2.0 * s * bond(x)));
            continue;
        }
        row.push((idx(x - 1, y), s * bond(x - 1)));
        row.push((idx(x, y + 1), s * bond(y)));
        if y == x + 1 {
            // both moves land on the diagonal; the interaction shifts their rate
            let r = s * (bond(x) + d);
            if mode == DiagonalMode::Excluded {
                debug_assert!(r.abs() < 1e-9);
            } else if r != 0.0 {
                row.push((idx(x + 1, y), r));
                row.push((idx(x, y - 1), r));
            }
        } else {
            row.push((idx(x + 1, y), s * bond(x)));
            row.push((idx(x, y - 1), s * bond(y - 1)));
        }
    }
    let support = if d != 0.0 {
        SourceSupport::UpperDiagonal
    } else {
        SourceSupport::Empty
    };
    Ok(TwoDGenerator {
        geom,
        mode,
        support,
        rows,
    })
}

/// Source of the correlation equation, on the closed triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceTerm {
    pub values: Vec<f64>,
    pub support: SourceSupport,
}

/// Extra diagonal source of the literal BEP boundary, per unit density:
/// `(site, coefficient)` with the `N²` factor included.
fn literal_bep_terms(spec: &ModelSpec) -> Vec<(usize, f64)> {
    match spec.model {
        Model::Bep {
            alpha,
            t_minus,
            t_plus,
            boundary: BepBoundary::Literal,
        } => {
            let n = spec.n;
            let k = (n * n) as f64 * 2.0 * alpha / (alpha + 1.0);
            vec![(1, k * (1.0 - t_minus)), (n - 1, k * (1.0 - t_plus))]
        }
        _ => Vec::new(),
    }
}

pub fn source_term(spec: &ModelSpec, rho: &DensityField) -> Result<SourceTerm> {
    let geom = Geometry::new(spec.n)?;
    if rho.n() != spec.n {
        return Err(Error::Usage("density and spec disagree on N".into()));
    }
    let n = spec.n;
    let s = (n * n) as f64;
    let r = &rho.values;
    let mut values = vec![0.0; geom.len()];
    let support;
    match spec.model {
        Model::GinzburgLandau { .. } => support = SourceSupport::Empty,
        Model::Piles { alpha, .. } => {
            let a = alpha as f64;
            for x in 1..n {
                let g = (r[x + 1] - r[x]).powi(2) + (r[x - 1] - r[x]).powi(2);
                values[geom.index(x, x).unwrap()] = s * g / (a * (a + 1.0));
            }
            support = SourceSupport::Diagonal;
        }
        _ => {
            let d = spec.interaction();
            for x in 1..n - 1 {
                values[geom.index(x, x + 1).unwrap()] = d * s * (r[x + 1] - r[x]).powi(2);
            }
            for (x, k) in literal_bep_terms(spec) {
                values[geom.index(x, x).unwrap()] += k * r[x];
            }
            support = if d != 0.0 {
                SourceSupport::UpperDiagonal
            } else {
                SourceSupport::Empty
            };
        }
    }
    Ok(SourceTerm { values, support })
}

/// `ψ̃ = ψ - 1_{x=y}`.
pub fn gl_shift(spec: &ModelSpec, psi: &CorrelationField) -> Result<CorrelationField> {
    gl_move(spec, psi, -1.0, DiagonalMode::Shifted)
}

/// Inverse of [`gl_shift`].
pub fn gl_unshift(spec: &ModelSpec, psi_t: &CorrelationField) -> Result<CorrelationField> {
    gl_move(spec, psi_t, 1.0, DiagonalMode::MomentExtended)
}

fn gl_move(spec: &ModelSpec, f: &CorrelationField, by: f64, mode: DiagonalMode) -> Result<CorrelationField> {
    if !matches!(spec.model, Model::GinzburgLandau { .. }) {
        return Err(Error::Usage("the diagonal shift only applies to Ginzburg-Landau".into()));
    }
    let mut out = f.clone();
    for x in 1..f.geom.n() {
        let i = f.geom.index(x, x).unwrap();
        out.values[i] += by;
    }
    out.mode = mode;
    Ok(out)
}

/// Linear operator on `[1, ϱ(1..N-1), M(unknowns)]`.
struct Augmented {
    csr: Csr,
    closed: Vec<usize>,
}

fn augmented(spec: &ModelSpec, gen: &TwoDGenerator) -> Augmented {
    let n = spec.n;
    let lap = Lap1d::new(spec);
    let dense1 = lap.augmented();
    let (a_uu, coupling, closed) = gen.restricted();
    let off = n; // M unknowns start after [1, ϱ(1..N-1)]
    let dim = n + closed.len();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
    for i in 0..n {
        for j in 0..n {
            let v = dense1[(i, j)];
            if v != 0.0 {
                rows[i].push((j, v));
            }
        }
    }
    let (rl, rr) = (lap.coeffs.res_left, lap.coeffs.res_right);
    // column of the boundary value ϱ(z) for z in 0..=N: (column, factor)
    let rho_col = |z: usize| -> (usize, f64) {
        if z == 0 {
            (0, rl)
        } else if z == n {
            (0, rr)
        } else {
            (z, 1.0)
        }
    };
    let lit: Vec<(usize, f64)> = literal_bep_terms(spec);
    for (u, &ci) in closed.iter().enumerate() {
        let row = &mut rows[off + u];
        for (j, v) in a_uu.row(u) {
            row.push((off + j, v));
        }
        for &(bj, rate) in &coupling[u] {
            let (x, y) = gen.geom.point(bj).unwrap();
            // M on the boundary is the product of the two one-point values
            let (cx, fx) = rho_col(x);
            let (cy, fy) = rho_col(y);
            match (cx, cy) {
                (0, 0) => row.push((0, rate * fx * fy)),
                (0, c) => row.push((c, rate * fx * fy)),
                (c, 0) => row.push((c, rate * fx * fy)),
                _ => unreachable!("boundary point with two bulk coordinates"),
            }
        }
        let (x, y) = gen.geom.point(ci).unwrap();
        if x == y {
            for &(site, k) in &lit {
                if site == x {
                    row.push((x, k));
                }
            }
        }
    }
    Augmented {
        csr: Csr::from_rows(dim, &rows),
        closed,
    }
}

/// Propagate the augmented state by time `t`.
fn propagate(aug: &Augmented, y0: &[f64], t: f64) -> Result<Vec<f64>> {
    if t == 0.0 {
        return Ok(y0.to_vec());
    }
    if y0.len() <= DENSE_AUG_LIMIT {
        Ok(expm_apply(&aug.csr.to_dense(), t, y0))
    } else {
        dopri5(|y, dy| aug.csr.mul_vec_into(y, dy), y0, t, 1e-11, 1e-14)
    }
}

/// Evolve `(ϱ, φ)` jointly by macroscopic time `t`.
///
/// For Ginzburg-Landau `φ0` is the covariance `ψ` (diagonal = variance);
/// the evolution runs on the shifted field and the output is un-shifted.
pub fn evolve_correlation(
    spec: &ModelSpec,
    phi0: &CorrelationField,
    rho0: &DensityField,
    t: f64,
) -> Result<(DensityField, CorrelationField)> {
    if !(t >= 0.0) {
        return Err(Error::Usage(format!("time must be non-negative, got {t}")));
    }
    if phi0.geom.n() != spec.n || rho0.n() != spec.n {
        return Err(Error::Usage("fields and spec disagree on N".into()));
    }
    let want = field_mode(spec);
    if phi0.mode != want {
        return Err(Error::Usage(format!(
            "initial field has diagonal mode {:?}, spec needs {:?}",
            phi0.mode, want
        )));
    }
    let gl = matches!(spec.model, Model::GinzburgLandau { .. });
    let start = if gl { gl_shift(spec, phi0)? } else { phi0.clone() };

    let gen = build_generator2d(spec)?;
    let aug = augmented(spec, &gen);
    let n = spec.n;
    let mut y0 = Vec::with_capacity(aug.csr.nrows);
    y0.push(1.0);
    y0.extend_from_slice(rho0.bulk());
    let r = &rho0.values;
    for &ci in &aug.closed {
        let (x, y) = gen.geom.point(ci).unwrap();
        y0.push(start.values[ci] + r[x] * r[y]);
    }
    let yt = propagate(&aug, &y0, t)?;
    let mut rho_t = DensityField::from_bulk(spec, &yt[1..n])?;
    rho_t.t = rho0.t + t;
    let mut phi = CorrelationField::zeros(&gen.geom, start.mode);
    let rv = &rho_t.values;
    for (u, &ci) in aug.closed.iter().enumerate() {
        let (x, y) = gen.geom.point(ci).unwrap();
        phi.values[ci] = yt[n + u] - rv[x] * rv[y];
    }
    phi.t = phi0.t + t;
    if gl {
        phi = gl_unshift(spec, &phi)?;
    }
    Ok((rho_t, phi))
}
