//! Duality with absorbing-boundary dual walkers.
//!
//! A duality function `D(η, ξ)` turns moments of the open system into
//! expectations over a finite number of dual particles that are absorbed at
//! `0` and `N`. Here the intertwining `𝓛 D(·, ξ)(η) = 𝓛̂ D(η, ·)(ξ)` is
//! checked by brute force on small systems, and the two-particle dual is
//! assembled as a matrix so it can be compared against
//! [`crate::correlation::TwoDGenerator`].
//!
//! States are passed as `&[f64]` of length `N - 1` (site `x` at index
//! `x - 1`); jump models expect non-negative integers there.

use rayon::prelude::*;
use serde::Serialize;

use crate::correlation::{build_generator2d, diagonal_value, field_mode, CorrelationField};
use crate::density::DensityField;
use crate::error::{Error, Result};
use crate::lattice::Geometry;
use crate::linalg::Csr;
use crate::models::{pile_block_rate, BepBoundary, Model, ModelSpec};
use crate::oracle::log_series_tail;

/// Injection series are summed until `β^k` drops below this.
pub const SERIES_CUTOFF: f64 = 1e-14;
/// Largest number of `(η, ξ)` pairs a check will enumerate.
pub const MAX_PAIRS: usize = 5_000_000;

/// Dual particle counts on `{0, ..., N}`; entries `0` and `N` count
/// absorbed particles.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DualConfiguration {
    pub counts: Vec<u32>,
}

impl DualConfiguration {
    pub fn empty(n: usize) -> Self {
        DualConfiguration { counts: vec![0; n + 1] }
    }

    /// One particle per listed site (repeats stack).
    pub fn from_sites(n: usize, sites: &[usize]) -> Result<Self> {
        let mut xi = Self::empty(n);
        for &s in sites {
            if s > n {
                return Err(Error::Usage(format!("site {s} outside 0..={n}")));
            }
            xi.counts[s] += 1;
        }
        Ok(xi)
    }

    pub fn n(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn absorbed(&self) -> u32 {
        self.counts[0] + self.counts[self.n()]
    }

    fn moved(&self, from: usize, to: usize, k: u32) -> Self {
        let mut c = self.clone();
        c.counts[from] -= k;
        c.counts[to] += k;
        c
    }
}

fn falling(eta: f64, k: u32) -> f64 {
    (0..k).map(|i| eta - i as f64).product()
}

/// Single-site weight `w(k)` multiplying the falling factorial.
fn site_weight(spec: &ModelSpec, k: u32) -> Result<f64> {
    let (c, d) = match spec.model {
        Model::RateFamily { c, d, .. } => (c, d),
        Model::Bep { alpha, .. } => (alpha, 1.0),
        Model::Piles { alpha, .. } => (alpha as f64, 1.0),
        Model::GinzburgLandau { .. } => return Err(no_dual()),
    };
    let mut w = 1.0;
    for i in 0..k {
        let r = c + d * i as f64;
        if r <= 0.0 {
            return Err(Error::Usage(format!("{k} dual particles exceed the site capacity")));
        }
        w /= r;
    }
    Ok(w)
}

fn no_dual() -> Error {
    Error::Unsupported("Ginzburg-Landau has no particle dual".into())
}

/// Reservoir factors multiplying the absorbed counts at `0` and `N`.
pub fn boundary_factors(spec: &ModelSpec) -> Result<(f64, f64)> {
    Ok(match spec.model {
        Model::RateFamily {
            c,
            rho_minus,
            rho_plus,
            ..
        } => (rho_minus / c, rho_plus / c),
        Model::Bep { t_minus, t_plus, .. } => (2.0 * t_minus, 2.0 * t_plus),
        Model::Piles {
            beta_minus,
            beta_plus,
            ..
        } => (beta_minus / (1.0 - beta_minus), beta_plus / (1.0 - beta_plus)),
        Model::GinzburgLandau { .. } => return Err(no_dual()),
    })
}

/// `D(η, ξ)`.
pub fn duality_function(spec: &ModelSpec, state: &[f64], xi: &DualConfiguration) -> Result<f64> {
    let n = spec.n;
    if state.len() != n - 1 || xi.n() != n {
        return Err(Error::Usage("state, dual configuration and spec disagree on N".into()));
    }
    let (bl, br) = boundary_factors(spec)?;
    let bep = matches!(spec.model, Model::Bep { .. });
    let mut v = bl.powi(xi.counts[0] as i32) * br.powi(xi.counts[n] as i32);
    for x in 1..n {
        let k = xi.counts[x];
        if k == 0 {
            continue;
        }
        let e = state[x - 1];
        let f = if bep { e.powi(k as i32) } else { falling(e, k) };
        v *= f * site_weight(spec, k)?;
    }
    Ok(v)
}

/// Transitions of the absorbing dual out of `ξ`, rates including `N²`.
pub fn dual_transitions(spec: &ModelSpec, xi: &DualConfiguration) -> Result<Vec<(DualConfiguration, f64)>> {
    let n = spec.n;
    let s = (n * n) as f64;
    let mut out = Vec::new();
    let cnt = &xi.counts;
    match spec.model {
        Model::Piles { alpha, .. } => {
            for x in 1..n {
                for j in 1..=cnt[x] {
                    let h = s * pile_block_rate(alpha, j, cnt[x]);
                    out.push((xi.moved(x, x - 1, j), h));
                    out.push((xi.moved(x, x + 1, j), h));
                }
            }
        }
        Model::GinzburgLandau { .. } => return Err(no_dual()),
        _ => {
            let (c, d, lm, lp) = match spec.model {
                Model::RateFamily {
                    c,
                    d,
                    lambda_minus,
                    lambda_plus,
                    ..
                } => (c, d, lambda_minus, lambda_plus),
                // absorption rate 1/2 per particle, i.e. λ = 1/(2α)
                Model::Bep { alpha, .. } => (alpha, 1.0, 0.5 / alpha, 0.5 / alpha),
                _ => unreachable!(),
            };
            for x in 1..n {
                let k = cnt[x] as f64;
                if k == 0.0 {
                    continue;
                }
                for y in [x - 1, x + 1] {
                    let r = if y == 0 {
                        c * lm * k
                    } else if y == n {
                        c * lp * k
                    } else {
                        k * (c + d * cnt[y] as f64)
                    };
                    if r > 0.0 {
                        out.push((xi.moved(x, y, 1), s * r));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `(𝓛̂ f)(ξ)`.
pub fn dual_generator_apply(
    spec: &ModelSpec,
    f: impl Fn(&DualConfiguration) -> f64,
    xi: &DualConfiguration,
) -> Result<f64> {
    let f0 = f(xi);
    Ok(dual_transitions(spec, xi)?
        .iter()
        .map(|(t, r)| r * (f(t) - f0))
        .sum())
}

/// `(𝓛 D(·, ξ))(η)` for the open system, with a bound on the part of an
/// infinite injection series that was not summed (0 when there is none).
pub fn primal_generator_on_duality(
    spec: &ModelSpec,
    state: &[f64],
    xi: &DualConfiguration,
) -> Result<(f64, f64)> {
    let n = spec.n;
    let s = (n * n) as f64;
    let d0 = duality_function(spec, state, xi)?;
    let dual_at = |st: &[f64]| duality_function(spec, st, xi);
    let shifted = |x: usize, dx: f64| {
        let mut st = state.to_vec();
        st[x - 1] += dx;
        st
    };
    let moved = |x: usize, y: usize, k: f64| {
        let mut st = state.to_vec();
        st[x - 1] -= k;
        if (1..n).contains(&y) {
            st[y - 1] += k;
        }
        st
    };
    let mut acc = 0.0;
    let mut tail = 0.0;
    match spec.model {
        Model::RateFamily { .. } => {
            let eta: Vec<u32> = state.iter().map(|&v| v as u32).collect();
            for x in 1..n - 1 {
                for (a, b) in [(x, x + 1), (x + 1, x)] {
                    let r = spec.bulk_rate(&eta, a, b)?;
                    if r > 0.0 {
                        acc += r * (dual_at(&moved(a, b, 1.0))? - d0);
                    }
                }
            }
            let br = spec.boundary_rates(&eta)?;
            let last = n - 1;
            for (site, rate, dx) in [
                (1, br.r01, 1.0),
                (1, br.r10, -1.0),
                (last, br.r_in_right, 1.0),
                (last, br.r_out_right, -1.0),
            ] {
                if rate > 0.0 {
                    acc += rate * (dual_at(&shifted(site, dx))? - d0);
                }
            }
        }
        Model::Piles {
            alpha,
            beta_minus,
            beta_plus,
        } => {
            for x in 1..n {
                let m = state[x - 1] as u32;
                for j in 1..=m {
                    let h = pile_block_rate(alpha, j, m);
                    for y in [x - 1, x + 1] {
                        acc += h * (dual_at(&moved(x, y, j as f64))? - d0);
                    }
                }
            }
            for (site, beta) in [(1usize, beta_minus), (n - 1, beta_plus)] {
                let b = xi.counts[site];
                let mut k = 0u32;
                let mut p = 1.0f64;
                let last = loop {
                    k += 1;
                    p *= beta;
                    let dk = dual_at(&shifted(site, k as f64))?;
                    acc += p / k as f64 * (dk - d0);
                    if p < SERIES_CUTOFF && k > b {
                        break p / k as f64 * dk.abs();
                    }
                };
                // ratio of consecutive terms beyond k is at most r
                let e = state[site - 1];
                let r = beta * (1.0 + 1.0 / (e + k as f64 + 1.0 - b as f64)).powi(b as i32);
                if r < 1.0 {
                    tail += last * r / (1.0 - r);
                } else {
                    tail = f64::INFINITY;
                }
                tail += d0.abs() * log_series_tail(beta, k);
            }
        }
        Model::Bep { .. } => {
            // L = drift·∇ + ½ Σ σ² (directional second derivative)
            let co = spec.sde_coefficients(state)?;
            let (bl, br) = boundary_factors(spec)?;
            let pref = bl.powi(xi.counts[0] as i32) * br.powi(xi.counts[n] as i32);
            let mut weight = pref;
            for x in 1..n {
                weight *= site_weight(spec, xi.counts[x])?;
            }
            let e: Vec<i32> = (1..n).map(|x| xi.counts[x] as i32).collect();
            let mono = |shift: &[(usize, i32)]| -> f64 {
                let mut ex = e.clone();
                let mut coef = 1.0;
                for &(i, dk) in shift {
                    // dk = -1 per derivative
                    coef *= ex[i] as f64;
                    ex[i] += dk;
                }
                if coef == 0.0 {
                    return 0.0;
                }
                coef * ex
                    .iter()
                    .zip(state)
                    .map(|(&p, &z)| if p == 0 { 1.0 } else { z.powi(p) })
                    .product::<f64>()
            };
            let m = n - 1;
            let mut v = 0.0;
            for i in 0..m {
                v += co.drift[i] * mono(&[(i, -1)]);
            }
            for b in 0..m - 1 {
                let q = 0.5 * co.bond_noise[b].powi(2);
                v += q
                    * (mono(&[(b, -1), (b, -1)]) - 2.0 * mono(&[(b, -1), (b + 1, -1)])
                        + mono(&[(b + 1, -1), (b + 1, -1)]));
            }
            v += 0.5 * co.boundary_noise[0].powi(2) * mono(&[(0, -1), (0, -1)]);
            v += 0.5 * co.boundary_noise[1].powi(2) * mono(&[(m - 1, -1), (m - 1, -1)]);
            // drift and noise are per unit macroscopic time already
            acc = v * weight;
        }
        Model::GinzburgLandau { .. } => return Err(no_dual()),
    }
    Ok((s * acc, s * tail))
}

/// Report of a brute-force intertwining check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    pub model: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub cap: u32,
    pub budget: u32,
    pub max_residual: f64,
    pub tail_bound: f64,
}

fn all_duals(spec: &ModelSpec, budget: u32) -> Vec<DualConfiguration> {
    let n = spec.n;
    let site_cap = spec.max_occupation();
    let mut out = Vec::new();
    let mut cur = vec![0u32; n + 1];
    fn rec(
        i: usize,
        left: u32,
        cur: &mut Vec<u32>,
        out: &mut Vec<DualConfiguration>,
        n: usize,
        site_cap: Option<u32>,
    ) {
        if i > n {
            out.push(DualConfiguration { counts: cur.clone() });
            return;
        }
        let bulk = i != 0 && i != n;
        let top = if bulk { site_cap.map_or(left, |c| c.min(left)) } else { left };
        for k in 0..=top {
            cur[i] = k;
            rec(i + 1, left - k, cur, out, n, site_cap);
        }
        cur[i] = 0;
    }
    rec(0, budget, &mut cur, &mut out, n, site_cap);
    out
}

fn primal_states(spec: &ModelSpec, cap: u32) -> Vec<Vec<f64>> {
    let m = spec.n - 1;
    let bep = matches!(spec.model, Model::Bep { .. });
    let cap = spec.max_occupation().unwrap_or(cap);
    let b = cap as usize + 1;
    (0..b.pow(m as u32))
        .map(|mut i| {
            (0..m)
                .map(|_| {
                    let v = (i % b) as f64;
                    i /= b;
                    // energies sit on a grid that avoids integers
                    if bep {
                        0.37 * v
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect()
}

/// Largest `|𝓛 D(·, ξ)(η) - 𝓛̂ D(η, ·)(ξ)|` over `η ∈ {0..cap}^{N-1}` (a grid
/// for BEP) and all dual configurations with at most `budget` particles.
pub fn check_duality_identity(spec: &ModelSpec, cap: u32, budget: u32) -> Result<DualityReport> {
    if matches!(spec.model, Model::GinzburgLandau { .. }) {
        return Err(no_dual());
    }
    let duals = all_duals(spec, budget);
    let cap_eff = spec.max_occupation().unwrap_or(cap);
    let n_states = (cap_eff as usize + 1).checked_pow(spec.n as u32 - 1);
    let pairs = n_states.and_then(|s| s.checked_mul(duals.len()));
    if pairs.is_none_or(|p| p > MAX_PAIRS) {
        return Err(Error::Resource(format!(
            "cap {cap}, budget {budget} at N = {} exceeds {MAX_PAIRS} pairs",
            spec.n
        )));
    }
    let states = primal_states(spec, cap);
    let (res, tail) = states
        .par_iter()
        .map(|st| -> Result<(f64, f64)> {
            let mut worst = (0.0f64, 0.0f64);
            for xi in &duals {
                let (lhs, t) = primal_generator_on_duality(spec, st, xi)?;
                let rhs = dual_generator_apply(spec, |z| duality_function(spec, st, z).unwrap_or(f64::NAN), xi)?;
                worst.0 = worst.0.max((lhs - rhs).abs());
                worst.1 = worst.1.max(t);
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((0.0f64, 0.0f64), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok(DualityReport {
        model: spec.name().to_string(),
        n: spec.n,
        cap: cap_eff,
        budget,
        max_residual: res,
        tail_bound: tail,
    })
}

/// Two-particle dual generator as a matrix over the closed triangle,
/// positions sorted. Rows of absorbed states are empty.
pub fn two_particle_matrix(spec: &ModelSpec) -> Result<Csr> {
    let geom = Geometry::new(spec.n)?;
    let n = spec.n;
    let mut rows = vec![Vec::new(); geom.len()];
    for (i, row) in rows.iter_mut().enumerate() {
        let (x, y) = geom.point(i).unwrap();
        if geom.is_boundary(x, y) {
            continue;
        }
        let xi = DualConfiguration::from_sites(n, &[x, y])?;
        if spec.max_occupation().is_some_and(|c| xi.counts[x] > c) {
            continue;
        }
        let mut exit = 0.0;
        for (t, r) in dual_transitions(spec, &xi)? {
            let mut pos = Vec::with_capacity(2);
            for (s, &k) in t.counts.iter().enumerate() {
                pos.extend(std::iter::repeat_n(s, k as usize));
            }
            row.push((geom.index(pos[0], pos[1]).unwrap(), r));
            exit += r;
        }
        if !row.is_empty() {
            row.push((i, -exit));
        }
    }
    Ok(Csr::from_rows(geom.len(), &rows))
}

/// Largest elementwise gap between the two-particle dual and the
/// correlation operator.
pub fn two_particle_gap(spec: &ModelSpec) -> Result<f64> {
    let a = two_particle_matrix(spec)?.to_dense();
    let b = build_generator2d(spec)?.matrix().to_dense();
    Ok((a - b).abs().max())
}

/// `ϱ` and `φ` of a weighted sample, computed from duality moments:
/// `ϱ(x) = κ E D(δ_x)` and `φ(x, y) = κ² (E D(δ_x + δ_y) - E D(δ_x) E D(δ_y))`
/// with `κ = c` (rate family) or `α`.
pub fn moments_via_duality(
    spec: &ModelSpec,
    states: &[Vec<f64>],
    weights: &[f64],
) -> Result<(DensityField, CorrelationField)> {
    if states.len() != weights.len() {
        return Err(Error::Usage("states and weights differ in length".into()));
    }
    let n = spec.n;
    let kappa = 1.0 / site_weight(spec, 1)?;
    let expect = |sites: &[usize]| -> Result<f64> {
        let xi = DualConfiguration::from_sites(n, sites)?;
        let mut s = 0.0;
        for (st, w) in states.iter().zip(weights) {
            s += w * duality_function(spec, st, &xi)?;
        }
        Ok(s)
    };
    let one: Vec<f64> = (1..n).map(|x| expect(&[x])).collect::<Result<_>>()?;
    let rho = DensityField::from_bulk(spec, &one.iter().map(|v| kappa * v).collect::<Vec<_>>())?;
    let geom = Geometry::new(n)?;
    let mode = field_mode(spec);
    let mut phi = CorrelationField::zeros(&geom, mode);
    for (x, y) in geom.open_points() {
        if x == y && spec.max_occupation().is_some_and(|c| c < 2) {
            continue;
        }
        let two = expect(&[x, y])?;
        phi.set(x, y, kappa * kappa * (two - one[x - 1] * one[y - 1]));
    }
    Ok((rho, phi))
}

/// Same quantities from the plain definitions, for comparison.
pub fn moments_direct(
    spec: &ModelSpec,
    states: &[Vec<f64>],
    weights: &[f64],
) -> Result<(DensityField, CorrelationField)> {
    let n = spec.n;
    let bep = matches!(spec.model, Model::Bep { .. });
    let mean = |f: &dyn Fn(&[f64]) -> f64| -> f64 { states.iter().zip(weights).map(|(s, w)| w * f(s)).sum() };
    let one: Vec<f64> = (1..n).map(|x| mean(&|s| s[x - 1])).collect();
    let rho = DensityField::from_bulk(spec, &one)?;
    let geom = Geometry::new(n)?;
    let mut phi = CorrelationField::zeros(&geom, field_mode(spec));
    for (x, y) in geom.open_points() {
        let v = if x == y {
            let second = mean(&|s| {
                let e = s[x - 1];
                if bep {
                    e * e
                } else {
                    e * (e - 1.0)
                }
            });
            match diagonal_value(spec, second, one[x - 1]) {
                Ok(v) => v,
                Err(_) => continue,
            }
        } else {
            mean(&|s| s[x - 1] * s[y - 1]) - one[x - 1] * one[y - 1]
        };
        phi.set(x, y, v);
    }
    Ok((rho, phi))
}

/// Whether the BEP boundary used by `spec` is the one the particle dual
/// describes.
pub fn bep_boundary_is_dual(spec: &ModelSpec) -> bool {
    matches!(
        spec.model,
        Model::Bep {
            boundary: BepBoundary::Thermal,
            ..
        }
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_dual_is_one() {
        let spec = ModelSpec::sip(4, 2.0, 0.3, 0.6).unwrap();
        let d = duality_function(&spec, &[3.0, 0.0, 1.0], &DualConfiguration::empty(4)).unwrap();
        assert_eq!(d, 1.0);
    }

    #[test]
    fn single_particle_values() {
        let spec = ModelSpec::sip(4, 2.0, 0.3, 0.6).unwrap();
        let xi = DualConfiguration::from_sites(4, &[2]).unwrap();
        assert_eq!(duality_function(&spec, &[0.0, 5.0, 1.0], &xi).unwrap(), 2.5);
        let sep = ModelSpec::sep(4, 3, 0.3, 0.6).unwrap();
        let xi = DualConfiguration::from_sites(4, &[1, 3]).unwrap();
        let d = duality_function(&sep, &[2.0, 0.0, 3.0], &xi).unwrap();
        assert!((d - 6.0 / 9.0).abs() < 1e-15);
        // falling factorial vanishes when ξ exceeds η
        let xi = DualConfiguration::from_sites(4, &[1, 1]).unwrap();
        assert_eq!(duality_function(&sep, &[1.0, 0.0, 0.0], &xi).unwrap(), 0.0);
    }

    #[test]
    fn absorbed_dual_is_a_trap() {
        let spec = ModelSpec::piles(4, 2, 0.3, 0.6).unwrap();
        let xi = DualConfiguration::from_sites(4, &[0, 4, 4]).unwrap();
        assert!(dual_transitions(&spec, &xi).unwrap().is_empty());
    }

    #[test]
    fn gl_has_no_dual() {
        let spec = ModelSpec::gl(4, 0.3, 0.6).unwrap();
        assert!(matches!(check_duality_identity(&spec, 2, 1), Err(Error::Unsupported(_))));
    }
}
