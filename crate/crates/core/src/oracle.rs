//! Exact master equations on truncated state spaces.
//!
//! Every site holds at most `K` particles. Transitions that would exceed
//! the cap go to a single absorbing loss state instead of being dropped,
//! so the lost probability is always known.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::correlation::{field_mode, CorrelationField};
use crate::density::DensityField;
use crate::error::{Error, Result};
use crate::lattice::Geometry;
use crate::linalg::{expm_apply, Csr};
use crate::models::{pile_block_rate, DiagonalMode, Model, ModelSpec};

/// Largest enumerated state space.
pub const MAX_STATES: usize = 1_000_000;
/// Up to this many states the dense exponential is used.
pub const DENSE_STATES: usize = 1500;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedStateSpace {
    pub n: usize,
    pub cap: u32,
    len: usize,
}

impl TruncatedStateSpace {
    /// `cap` is ignored for exclusion models, which use their native bound.
    pub fn new(spec: &ModelSpec, cap: u32) -> Result<Self> {
        if !spec.is_jump() {
            return Err(Error::Usage(format!("no master equation for {}", spec.name())));
        }
        let cap = spec.max_occupation().unwrap_or(cap);
        let sites = spec.n - 1;
        let len = (cap as usize + 1)
            .checked_pow(sites as u32)
            .filter(|&l| l <= MAX_STATES)
            .ok_or_else(|| {
                Error::Resource(format!("({}+1)^{} states exceed {MAX_STATES}", cap, sites))
            })?;
        Ok(TruncatedStateSpace { n: spec.n, cap, len })
    }

    /// Number of lattice states (the loss state is extra).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sink(&self) -> usize {
        self.len
    }

    pub fn state(&self, mut i: usize) -> Vec<u32> {
        let b = self.cap as usize + 1;
        (0..self.n - 1)
            .map(|_| {
                let v = (i % b) as u32;
                i /= b;
                v
            })
            .collect()
    }

    pub fn index(&self, eta: &[u32]) -> Option<usize> {
        let b = self.cap as usize + 1;
        let mut i = 0;
        for &v in eta.iter().rev() {
            if v > self.cap {
                return None;
            }
            i = i * b + v as usize;
        }
        Some(i)
    }
}

/// Rate matrix of the truncated chain (speeded by `N²`), with the loss state
/// as last index.
#[derive(Debug, Clone)]
pub struct MasterGenerator {
    pub space: TruncatedStateSpace,
    /// `(from, to, rate)`; `to == space.sink()` marks lost probability.
    pub transitions: Vec<(usize, usize, f64)>,
}

impl MasterGenerator {
    pub fn dim(&self) -> usize {
        self.space.len() + 1
    }

    /// `Q` with rows summing to zero (the loss row is empty).
    pub fn rate_matrix(&self) -> Csr {
        let mut rows = vec![Vec::new(); self.dim()];
        for &(i, j, r) in &self.transitions {
            rows[i].push((j, r));
            rows[i].push((i, -r));
        }
        Csr::from_rows(self.dim(), &rows)
    }

    /// `Qᵀ`, the operator of `dμ/dt = μQ` on column vectors.
    pub fn forward(&self) -> Csr {
        let mut rows = vec![Vec::new(); self.dim()];
        for &(i, j, r) in &self.transitions {
            rows[j].push((i, r));
            rows[i].push((i, -r));
        }
        Csr::from_rows(self.dim(), &rows)
    }

    /// Rate into the loss state from each lattice state.
    pub fn loss_rates(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.space.len()];
        for &(i, j, r) in &self.transitions {
            if j == self.space.sink() {
                out[i] += r;
            }
        }
        out
    }
}

/// `Σ_{k > kmax} β^k / k`.
pub(crate) fn log_series_tail(beta: f64, kmax: u32) -> f64 {
    let mut s = -(1.0 - beta).ln();
    let mut p = 1.0;
    for k in 1..=kmax {
        p *= beta;
        s -= p / k as f64;
    }
    s.max(0.0)
}

pub fn build_master_generator(spec: &ModelSpec, space: &TruncatedStateSpace) -> Result<MasterGenerator> {
    if space.n != spec.n {
        return Err(Error::Usage("state space and spec disagree on N".into()));
    }
    let n = spec.n;
    let s = (n * n) as f64;
    let cap = space.cap;
    let sink = space.sink();
    let mut tr = Vec::new();
    let push = |from: usize, eta: &[u32], rate: f64, tr: &mut Vec<(usize, usize, f64)>| {
        if rate > 0.0 {
            let to = space.index(eta).unwrap_or(sink);
            tr.push((from, to, s * rate));
        }
    };
    for i in 0..space.len() {
        let eta = space.state(i);
        match spec.model {
            Model::RateFamily { .. } => {
                for x in 1..n - 1 {
                    for (a, b) in [(x, x + 1), (x + 1, x)] {
                        let r = spec.bulk_rate(&eta, a, b)?;
                        let mut e = eta.clone();
                        e[a - 1] -= (r > 0.0) as u32;
                        e[b - 1] += (r > 0.0) as u32;
                        push(i, &e, r, &mut tr);
                    }
                }
                let br = spec.boundary_rates(&eta)?;
                let last = n - 2;
                let mut e = eta.clone();
                e[0] += 1;
                push(i, &e, br.r01, &mut tr);
                if eta[0] > 0 {
                    let mut e = eta.clone();
                    e[0] -= 1;
                    push(i, &e, br.r10, &mut tr);
                }
                let mut e = eta.clone();
                e[last] += 1;
                push(i, &e, br.r_in_right, &mut tr);
                if eta[last] > 0 {
                    let mut e = eta.clone();
                    e[last] -= 1;
                    push(i, &e, br.r_out_right, &mut tr);
                }
            }
            Model::Piles {
                alpha,
                beta_minus,
                beta_plus,
            } => {
                for x in 1..n {
                    let m = eta[x - 1];
                    for j in 1..=m {
                        let h = pile_block_rate(alpha, j, m);
                        for dir in [-1i64, 1] {
                            let y = x as i64 + dir;
                            let mut e = eta.clone();
                            e[x - 1] -= j;
                            if y >= 1 && y < n as i64 {
                                let yi = y as usize - 1;
                                if e[yi] + j > cap {
                                    tr.push((i, sink, s * h));
                                    continue;
                                }
                                e[yi] += j;
                            }
                            push(i, &e, h, &mut tr);
                        }
                    }
                }
                for (site, beta) in [(0usize, beta_minus), (n - 2, beta_plus)] {
                    let room = cap - eta[site];
                    let mut p = 1.0;
                    for k in 1..=room {
                        p *= beta;
                        let mut e = eta.clone();
                        e[site] += k;
                        push(i, &e, p / k as f64, &mut tr);
                    }
                    let tail = log_series_tail(beta, room);
                    if tail > 0.0 {
                        tr.push((i, sink, s * tail));
                    }
                }
            }
            _ => unreachable!("checked by the state space"),
        }
    }
    Ok(MasterGenerator {
        space: space.clone(),
        transitions: tr,
    })
}

/// Evolve a distribution (lattice states plus loss) by time `t`.
pub fn evolve_distribution(gen: &MasterGenerator, mu0: &[f64], t: f64) -> Result<Vec<f64>> {
    if mu0.len() != gen.dim() {
        return Err(Error::Usage(format!(
            "distribution has {} entries, expected {}",
            mu0.len(),
            gen.dim()
        )));
    }
    if t == 0.0 {
        return Ok(mu0.to_vec());
    }
    let q = gen.forward();
    if gen.dim() <= DENSE_STATES {
        return Ok(expm_apply(&q.to_dense(), t, mu0));
    }
    // uniformization in slices with Λ·dt <= 30
    let lam = q.diagonal().iter().fold(0.0f64, |a, d| a.max(-d)).max(1e-300);
    let slices = ((lam * t) / 30.0).ceil().max(1.0) as usize;
    let dt = t / slices as f64;
    let mut mu = mu0.to_vec();
    let mut tmp = vec![0.0; mu.len()];
    for _ in 0..slices {
        let lt = lam * dt;
        let mut w = (-lt).exp();
        let mut term = mu.clone();
        let mut acc: Vec<f64> = term.iter().map(|v| w * v).collect();
        let mut cum = w;
        let mut k = 0usize;
        while 1.0 - cum > 1e-16 && k < 10_000 {
            k += 1;
            q.mul_vec_into(&term, &mut tmp);
            for (a, b) in term.iter_mut().zip(&tmp) {
                *a += b / lam;
            }
            w *= lt / k as f64;
            cum += w;
            for (a, b) in acc.iter_mut().zip(&term) {
                *a += w * b;
            }
        }
        mu = acc;
    }
    Ok(mu)
}

/// Exact one- and two-point functions of a distribution.
#[derive(Debug, Clone)]
pub struct OracleMoments {
    pub density: DensityField,
    pub correlation: CorrelationField,
    /// Probability in the loss state.
    pub loss: f64,
}

pub fn moments_of(spec: &ModelSpec, space: &TruncatedStateSpace, mu: &[f64]) -> Result<OracleMoments> {
    let n = spec.n;
    let m = n - 1;
    let geom = Geometry::new(n)?;
    let mode = field_mode(spec);
    let k = spec.diagonal_factor();
    let mut rho = vec![0.0; m];
    let mut second = vec![vec![0.0; m]; m];
    for (i, &p) in mu.iter().take(space.len()).enumerate() {
        if p == 0.0 {
            continue;
        }
        let eta = space.state(i);
        for x in 0..m {
            let ex = eta[x] as f64;
            rho[x] += p * ex;
            second[x][x] += p * ex * (ex - 1.0);
            for y in x + 1..m {
                second[x][y] += p * ex * eta[y] as f64;
            }
        }
    }
    let density = DensityField::from_bulk(spec, &rho)?;
    let mut phi = CorrelationField::zeros(&geom, mode);
    for x in 1..n {
        for y in x..n {
            let (a, b) = (x - 1, y - 1);
            let v = if x == y {
                match (mode, k) {
                    (DiagonalMode::Excluded, _) | (_, None) => continue,
                    (_, Some(k)) => k * second[a][a] - rho[a] * rho[a],
                }
            } else {
                second[a][b] - rho[a] * rho[b]
            };
            phi.set(x, y, v);
        }
    }
    Ok(OracleMoments {
        density,
        correlation: phi,
        loss: mu.get(space.sink()).copied().unwrap_or(0.0),
    })
}

/// Evolve `μ0` by `t` and extract the moments.
pub fn oracle_moments(
    spec: &ModelSpec,
    gen: &MasterGenerator,
    mu0: &[f64],
    t: f64,
) -> Result<OracleMoments> {
    let mu = evolve_distribution(gen, mu0, t)?;
    let mut m = moments_of(spec, &gen.space, &mu)?;
    m.density.t = t;
    m.correlation.t = t;
    Ok(m)
}

/// Stationary law of the chain conditioned on never exceeding the cap
/// (loss transitions removed), with the stationary loss flux as error
/// indicator.
pub fn oracle_stationary(spec: &ModelSpec, gen: &MasterGenerator) -> Result<(OracleMoments, f64)> {
    let l = gen.space.len();
    if l > DENSE_STATES * 2 {
        return Err(Error::Resource(format!("{l} states too many for the dense stationary solve")));
    }
    let mut a = DMatrix::<f64>::zeros(l, l);
    for &(i, j, r) in &gen.transitions {
        if j < l {
            a[(j, i)] += r;
            a[(i, i)] -= r;
        }
    }
    for c in 0..l {
        a[(0, c)] = 1.0;
    }
    let mut b = DVector::zeros(l);
    b[0] = 1.0;
    let pi = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Singular("stationary system".into()))?;
    let mut mu: Vec<f64> = pi.iter().copied().collect();
    let flux: f64 = gen.loss_rates().iter().zip(&mu).map(|(r, p)| r * p).sum();
    mu.push(0.0);
    Ok((moments_of(spec, &gen.space, &mu)?, flux))
}

/// Single-site law of the product invariant measure with mean `rho`,
/// up to `cap`: binomial for exclusion, negative binomial for inclusion
/// and piles, Poisson for independent walkers.
pub fn product_marginal(spec: &ModelSpec, rho: f64, cap: u32) -> Result<Vec<f64>> {
    let lnp = |k: u32, shape: f64, q: f64| -> f64 {
        // negative binomial, P(k) = Γ(k+s)/(Γ(s)k!) q^k (1-q)^s
        (ln_gamma(k as f64 + shape) - ln_gamma(shape) - ln_gamma(k as f64 + 1.0)
            + k as f64 * q.ln()
            + shape * (1.0 - q).ln())
        .exp()
    };
    let out: Vec<f64> = match spec.model {
        Model::RateFamily { c, d, .. } if d < 0.0 => {
            let m = -c / d;
            if m.fract() != 0.0 {
                return Err(Error::Unsupported("product measure needs integer -c/d".into()));
            }
            let m = m as u32;
            let p = rho / m as f64;
            (0..=cap.min(m))
                .map(|k| {
                    let lc = ln_gamma(m as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((m - k) as f64 + 1.0);
                    (lc + k as f64 * p.ln() + (m - k) as f64 * (1.0 - p).ln()).exp()
                })
                .collect()
        }
        Model::RateFamily { d, .. } if d == 0.0 => (0..=cap)
            .map(|k| (k as f64 * rho.ln() - rho - ln_gamma(k as f64 + 1.0)).exp())
            .collect(),
        Model::RateFamily { c, d, .. } => {
            let s = c / d;
            let q = rho / (s + rho);
            (0..=cap).map(|k| lnp(k, s, q)).collect()
        }
        Model::Piles { alpha, .. } => {
            let s = alpha as f64;
            let q = rho / (s + rho);
            (0..=cap).map(|k| lnp(k, s, q)).collect()
        }
        _ => return Err(Error::Usage(format!("no lattice marginal for {}", spec.name()))),
    };
    Ok(out.into_iter().map(|v: f64| if v.is_finite() { v } else { 0.0 }).collect())
}

/// Product distribution over the truncated space with one-site laws
/// `marginals[x-1]` (loss entry 0).
pub fn product_distribution(space: &TruncatedStateSpace, marginals: &[Vec<f64>]) -> Vec<f64> {
    let mut mu = vec![0.0; space.len() + 1];
    for (i, m) in mu.iter_mut().take(space.len()).enumerate() {
        let eta = space.state(i);
        *m = eta
            .iter()
            .zip(marginals)
            .map(|(&e, law)| law.get(e as usize).copied().unwrap_or(0.0))
            .product();
    }
    mu
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NullVectorReport {
    /// `‖μQ‖₁` over lattice states.
    pub residual: f64,
    /// Flux from the truncated box into the loss state under `μ`; equals the
    /// residual of an exactly invariant measure (inflow from outside the box
    /// is what the truncation removes).
    pub tail_bound: f64,
    /// Mass of `μ` outside the box.
    pub tail_mass: f64,
}

/// Residual of the equilibrium product measure with one-site mean `rho`.
pub fn equilibrium_residual(spec: &ModelSpec, gen: &MasterGenerator, rho: f64) -> Result<NullVectorReport> {
    let sp = &gen.space;
    let law = product_marginal(spec, rho, sp.cap)?;
    let in_box: f64 = law.iter().sum();
    let marg = vec![law; spec.n - 1];
    let mu = product_distribution(sp, &marg);
    let q = gen.forward();
    let r = q.mul_vec(&mu);
    let residual: f64 = r.iter().take(sp.len()).map(|v| v.abs()).sum();
    let tail_bound: f64 = gen.loss_rates().iter().zip(&mu).map(|(a, b)| a * b).sum();
    Ok(NullVectorReport {
        residual,
        tail_bound,
        tail_mass: 1.0 - in_box.powi(spec.n as i32 - 1),
    })
}

/// Outcome of comparing the closed moment equations against the master
/// equation from one initial law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureReport {
    pub model: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub cap: u32,
    pub times: Vec<f64>,
    /// Largest `|φ_ode - φ_oracle|` at each time.
    pub max_diff: Vec<f64>,
    /// Largest density difference at each time.
    pub max_density_diff: Vec<f64>,
    /// Probability lost through the cap at each time.
    pub loss: Vec<f64>,
}

impl ClosureReport {
    pub fn worst(&self) -> f64 {
        self.max_diff
            .iter()
            .chain(&self.max_density_diff)
            .fold(0.0, |a, b| a.max(*b))
    }
}

/// Random correlated law on configurations with at most one particle per
/// site, drawn from `seed`. Site densities stay below about 0.15 so that
/// clustering models rarely reach the cap.
pub fn random_low_occupation_law(space: &TruncatedStateSpace, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let p: Vec<f64> = (1..space.n).map(|_| rng.random_range(0.02..0.15)).collect();
    let mut mu = vec![0.0; space.len() + 1];
    for (i, m) in mu.iter_mut().take(space.len()).enumerate() {
        let eta = space.state(i);
        if eta.iter().all(|&e| e <= 1) {
            let base: f64 = eta.iter().zip(&p).map(|(&e, q)| if e == 1 { *q } else { 1.0 - q }).product();
            *m = base * rng.random_range(0.5..1.5);
        }
    }
    let z: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|m| *m /= z);
    mu
}

/// Run both evolutions from a random low-occupation law and compare.
pub fn closure_check(spec: &ModelSpec, cap: u32, times: &[f64], seed: u64) -> Result<ClosureReport> {
    let space = TruncatedStateSpace::new(spec, cap)?;
    let gen = build_master_generator(spec, &space)?;
    let mu0 = random_low_occupation_law(&space, seed);
    let start = moments_of(spec, &space, &mu0)?;
    let mut rep = ClosureReport {
        model: spec.name().to_string(),
        n: spec.n,
        cap: space.cap,
        times: times.to_vec(),
        max_diff: Vec::new(),
        max_density_diff: Vec::new(),
        loss: Vec::new(),
    };
    for &t in times {
        let exact = oracle_moments(spec, &gen, &mu0, t)?;
        let (rho, phi) = crate::correlation::evolve_correlation(spec, &start.correlation, &start.density, t)?;
        rep.max_diff.push(phi.max_abs_diff(&exact.correlation));
        let dd = rho
            .values
            .iter()
            .zip(&exact.density.values)
            .fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
        rep.max_density_diff.push(dd);
        rep.loss.push(exact.loss);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sep_space_and_conservation() {
        let spec = ModelSpec::sep(5, 1, 0.3, 0.6).unwrap();
        let sp = TruncatedStateSpace::new(&spec, 8).unwrap();
        assert_eq!(sp.len(), 16);
        for i in 0..sp.len() {
            assert_eq!(sp.index(&sp.state(i)), Some(i));
        }
        let g = build_master_generator(&spec, &sp).unwrap();
        assert!(g.loss_rates().iter().all(|r| *r == 0.0));
        let q = g.rate_matrix();
        for i in 0..q.nrows {
            let s: f64 = q.row(i).map(|e| e.1).sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn sep_equilibrium_is_null() {
        let spec = ModelSpec::sep(5, 1, 0.35, 0.35).unwrap();
        let sp = TruncatedStateSpace::new(&spec, 1).unwrap();
        let g = build_master_generator(&spec, &sp).unwrap();
        let r = equilibrium_residual(&spec, &g, 0.35).unwrap();
        assert!(r.residual < 1e-12 && r.tail_bound == 0.0);
    }

    #[test]
    fn sip_equilibrium_within_tail() {
        let spec = ModelSpec::sip(3, 1.0, 0.4, 0.4).unwrap();
        let sp = TruncatedStateSpace::new(&spec, 6).unwrap();
        let g = build_master_generator(&spec, &sp).unwrap();
        let r = equilibrium_residual(&spec, &g, 0.4).unwrap();
        assert!(r.tail_bound > 0.0);
        assert!(r.residual <= r.tail_bound * (1.0 + 1e-9) + 1e-15, "{r:?}");
    }

    #[test]
    fn too_large_space_is_refused() {
        let spec = ModelSpec::sip(12, 1.0, 0.4, 0.4).unwrap();
        assert!(matches!(TruncatedStateSpace::new(&spec, 8), Err(Error::Resource(_))));
    }

    #[test]
    fn product_start_has_zero_correlation() {
        let spec = ModelSpec::sip(4, 2.0, 0.3, 0.3).unwrap();
        let sp = TruncatedStateSpace::new(&spec, 16).unwrap();
        let law = product_marginal(&spec, 0.3, 16).unwrap();
        let mu = product_distribution(&sp, &vec![law; 3]);
        let m = moments_of(&spec, &sp, &mu).unwrap();
        assert!(m.correlation.max_abs() < 1e-9, "{:?}", m.correlation.values);
        assert!((m.density.at(2) - 0.3).abs() < 1e-10);
    }
}
