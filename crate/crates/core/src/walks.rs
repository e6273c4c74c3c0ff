//! Potential theory of the absorbed 2D walk: occupation time of the upper
//! diagonal, stationary correlations, comparison between boundary
//! couplings, and the `1/N` decay fit.

use serde::Serialize;

use crate::correlation::{
    build_generator2d, build_generator2d_with_mode, field_mode, gl_unshift, source_term,
    CorrelationField, TwoDGenerator,
};
use crate::density::{stationary_affine, stationary_density};
use crate::error::{Error, Result};
use crate::lattice::Geometry;
use crate::linalg::{bicgstab, BandedLu};
use crate::models::{BepBoundary, DiagonalMode, Model, ModelSpec, Preset};

/// Above this `N` stationary solves use BiCGSTAB instead of banded LU.
pub const DIRECT_LIMIT: usize = 256;

/// Parameters of the rate-family walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkParams {
    pub n: usize,
    pub c: f64,
    pub d: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
}

impl WalkParams {
    pub fn new(n: usize, c: f64, d: f64) -> Self {
        WalkParams {
            n,
            c,
            d,
            lambda_minus: 1.0,
            lambda_plus: 1.0,
        }
    }

    pub fn with_lambdas(self, lambda_minus: f64, lambda_plus: f64) -> Self {
        WalkParams {
            lambda_minus,
            lambda_plus,
            ..self
        }
    }

    fn spec(&self) -> Result<ModelSpec> {
        if self.n < 3 {
            return Err(Error::InvalidSize(self.n));
        }
        if !(self.c > 0.0) {
            return Err(Error::InvalidParameter(format!("c must be positive, got {}", self.c)));
        }
        for l in [self.lambda_minus, self.lambda_plus] {
            if !(l > 0.0 && l <= 1.0) {
                return Err(Error::Singular(format!(
                    "boundary coupling {l} outside (0, 1]; the walk needs absorption"
                )));
            }
        }
        Ok(ModelSpec {
            n: self.n,
            model: Model::RateFamily {
                preset: Preset::RateFamily,
                c: self.c,
                d: self.d,
                lambda_minus: self.lambda_minus,
                lambda_plus: self.lambda_plus,
                rho_minus: 0.0,
                rho_plus: 0.0,
            },
        })
    }
}

/// Solve `A u = -g` on the unknowns of `gen`, with `u = 0` on `∂T_N`.
fn solve_absorbed(gen: &TwoDGenerator, g: &[f64]) -> Result<Vec<f64>> {
    let (a, _, closed) = gen.restricted();
    // -A is a nonsingular M-matrix
    let mut neg = a.clone();
    neg.values.iter_mut().for_each(|v| *v = -*v);
    let rhs: Vec<f64> = closed.iter().map(|&i| g[i]).collect();
    let u = if gen.geom.n() <= DIRECT_LIMIT {
        BandedLu::factor(&neg)?.solve(&rhs)
    } else {
        bicgstab(&neg, &rhs, 1e-13, 100_000)?
    };
    let mut out = vec![0.0; gen.geom.len()];
    for (k, &i) in closed.iter().enumerate() {
        out[i] = u[k];
    }
    Ok(out)
}

/// Expected time spent on the upper diagonal before absorption, started
/// from each point of the closed triangle (diagonal included).
pub fn occupation_time_solve(p: &WalkParams) -> Result<CorrelationField> {
    let spec = p.spec()?;
    let gen = build_generator2d_with_mode(&spec, DiagonalMode::MomentExtended)?;
    let mut ind = vec![0.0; gen.geom.len()];
    for (x, y) in gen.geom.upper_diagonal() {
        ind[gen.geom.index(x, y).unwrap()] = 1.0;
    }
    let values = solve_absorbed(&gen, &ind)?;
    Ok(CorrelationField {
        geom: gen.geom,
        values,
        mode: DiagonalMode::MomentExtended,
        t: 0.0,
    })
}

/// `(N-y)x / (N²(cN+d)) - 1{x=y} / (2N(cN+d))`, valid for `λ± = 1`.
pub fn occupation_time_closed(p: &WalkParams) -> Result<CorrelationField> {
    if p.lambda_minus != 1.0 || p.lambda_plus != 1.0 {
        return Err(Error::Unsupported(
            "the polynomial occupation time needs lambda_minus = lambda_plus = 1".into(),
        ));
    }
    let geom = Geometry::new(p.n)?;
    let nf = p.n as f64;
    let k = p.c * nf + p.d;
    Ok(CorrelationField::from_fn(&geom, DiagonalMode::MomentExtended, |x, y| {
        let base = (nf - y as f64) * x as f64 / (nf * nf * k);
        if x == y {
            base - 1.0 / (2.0 * nf * k)
        } else {
            base
        }
    }))
}

/// Elementwise comparison of `𝒯^{λ-,λ+}` with `𝒯^{1,1}` over `T_N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// `max (𝒯^{λ} - 𝒯^{1,1})`; the ordering `𝒯^{λ} <= 𝒯^{1,1}` holds iff
    /// this is `<= 0`.
    pub max_excess: f64,
    /// `min (𝒯^{λ} - 𝒯^{1,1})`; the reverse ordering holds iff this is `>= 0`.
    pub min_excess: f64,
    /// Largest ratio `𝒯^{λ} / 𝒯^{1,1}` off the boundary.
    pub max_ratio: f64,
}

impl ComparisonReport {
    /// Amount by which `𝒯^{λ} <= 𝒯^{1,1}` fails (0 when it holds).
    pub fn max_violation(&self) -> f64 {
        self.max_excess.max(0.0)
    }
}

/// Compare the occupation time under couplings `λ±` with the `λ± = 1` one.
///
/// A weaker coupling slows absorption, so in practice `𝒯^{λ} >= 𝒯^{1,1}`:
/// `Δ^{λ}(𝒯^{λ} - 𝒯^{1,1}) = -N²c(1-λ-)𝒯^{1,1}(1,y)1{x=1} - ... <= 0`
/// and the minimum principle applies.
pub fn max_principle_compare(p: &WalkParams) -> Result<ComparisonReport> {
    let lo = occupation_time_solve(p)?;
    let hi = occupation_time_solve(&p.with_lambdas(1.0, 1.0))?;
    let mut max_excess = f64::NEG_INFINITY;
    let mut min_excess = f64::INFINITY;
    let mut max_ratio = 0.0f64;
    for (x, y) in lo.geom.open_points() {
        let (a, b) = (lo.get(x, y).unwrap(), hi.get(x, y).unwrap());
        max_excess = max_excess.max(a - b);
        min_excess = min_excess.min(a - b);
        if b > 0.0 {
            max_ratio = max_ratio.max(a / b);
        }
    }
    Ok(ComparisonReport {
        max_excess,
        min_excess,
        max_ratio,
    })
}

/// Stationary correlation by a linear solve with the stationary-density
/// source. Ginzburg-Landau returns the un-shifted covariance.
pub fn stationary_correlation_solve(spec: &ModelSpec) -> Result<CorrelationField> {
    let gen = build_generator2d(spec)?;
    let rho = stationary_density(spec);
    let g = source_term(spec, &rho)?;
    let values = solve_absorbed(&gen, &g.values)?;
    let mut phi = CorrelationField {
        geom: gen.geom.clone(),
        values,
        mode: gen.mode,
        t: f64::INFINITY,
    };
    if matches!(spec.model, Model::GinzburgLandau { .. }) {
        phi.mode = DiagonalMode::Shifted;
        phi = gl_unshift(spec, &phi)?;
    }
    Ok(phi)
}

/// The rate-family / BEP identity `φ_ss = d N² a_N² 𝒯^{λ-,λ+}` (affine
/// stationary profile with interior slope `a_N`), valid for every coupling.
pub fn stationary_via_occupation(spec: &ModelSpec) -> Result<CorrelationField> {
    let co = spec.density_coefficients();
    match spec.model {
        Model::RateFamily { .. } => {}
        Model::Bep { boundary, .. } if boundary != BepBoundary::Literal => {}
        _ => {
            return Err(Error::Unsupported(format!(
                "{} has no upper-diagonal occupation-time representation",
                spec.name()
            )))
        }
    }
    let d = spec.interaction();
    let p = WalkParams::new(spec.n, co.bulk, d).with_lambdas(co.left / co.bulk, co.right / co.bulk);
    if p.lambda_minus > 1.0 || p.lambda_plus > 1.0 {
        return Err(Error::Unsupported("boundary conductance exceeds the bulk one".into()));
    }
    let occ = occupation_time_solve(&p)?;
    let (a, _) = stationary_affine(spec);
    let k = d * (spec.n as f64 * a).powi(2);
    let mut out = CorrelationField::from_fn(&occ.geom, field_mode(spec), |x, y| k * occ.get(x, y).unwrap());
    out.t = f64::INFINITY;
    Ok(out)
}

/// Closed-form stationary correlation, where one exists.
///
/// * rate family with `λ± = 1`: `d (ϱ+ - ϱ-)² 𝒯_N`;
/// * BEP when the boundary conductance equals the bulk one (for the
///   thermal boundary that is `α = 1/2`): `(e+ - e-)² 𝒯_N` with `c = α`,
///   `d = 1`, reservoir energies `e± = 2αT±`;
/// * piles: `α² Δρ² (N-y)x / (N²(αN+1))`, `Δρ = β+/(1-β+) - β-/(1-β-)`;
/// * Ginzburg-Landau: the diagonal indicator.
pub fn stationary_correlation_closed(spec: &ModelSpec) -> Result<CorrelationField> {
    let geom = Geometry::new(spec.n)?;
    let nf = spec.n as f64;
    let mode = field_mode(spec);
    let mut out = match spec.model {
        Model::GinzburgLandau { .. } => {
            CorrelationField::from_fn(&geom, mode, |x, y| if x == y { 1.0 } else { 0.0 })
        }
        Model::Piles {
            alpha,
            beta_minus,
            beta_plus,
        } => {
            let a = alpha as f64;
            let dr = beta_plus / (1.0 - beta_plus) - beta_minus / (1.0 - beta_minus);
            let k = a * a * dr * dr / (nf * nf * (a * nf + 1.0));
            CorrelationField::from_fn(&geom, mode, |x, y| k * (nf - y as f64) * x as f64)
        }
        Model::RateFamily { .. } | Model::Bep { .. } => {
            let co = spec.density_coefficients();
            if co.left != co.bulk || co.right != co.bulk {
                return Err(Error::Unsupported(
                    "closed form needs boundary conductance equal to the bulk one (λ± = 1)".into(),
                ));
            }
            if let Model::Bep {
                boundary: BepBoundary::Literal,
                ..
            } = spec.model
            {
                return Err(Error::Unsupported(
                    "the literal BEP boundary adds a diagonal source with no closed form".into(),
                ));
            }
            let d = spec.interaction();
            let occ = occupation_time_closed(&WalkParams::new(spec.n, co.bulk, d))?;
            let k = d * (co.res_right - co.res_left).powi(2);
            CorrelationField::from_fn(&geom, mode, |x, y| k * occ.get(x, y).unwrap())
        }
    };
    out.t = f64::INFINITY;
    Ok(out)
}

/// Least-squares slope and intercept of `ln y` against `ln x`.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayStudy {
    pub ns: Vec<usize>,
    pub max_abs: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
}

/// `max_{T_N} |φ_ss|` over the given sizes and its log-log slope.
/// `make` builds the spec for each `N`.
pub fn decay_study(ns: &[usize], make: impl Fn(usize) -> Result<ModelSpec>) -> Result<DecayStudy> {
    let mut max_abs = Vec::with_capacity(ns.len());
    for &n in ns {
        max_abs.push(stationary_correlation_solve(&make(n)?)?.max_abs());
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let (slope, intercept) = loglog_fit(&xs, &max_abs);
    Ok(DecayStudy {
        ns: ns.to_vec(),
        max_abs,
        slope,
        intercept,
    })
}
