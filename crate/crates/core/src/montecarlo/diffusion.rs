//! Time stepping for the Ginzburg–Landau and BEP diffusions.
//!
//! Both use a Strang splitting into single-bond and single-reservoir
//! pieces. For GL every piece is an exact Ornstein–Uhlenbeck step (on the
//! bond difference, or on the boundary site). For BEP a bond redistributes
//! its total by a Beta draw matching the first two moments of the Jacobi
//! diffusion for the energy fraction, and a reservoir step is the exact CIR
//! transition, so energies stay non-negative. Every piece propagates first
//! and second moments exactly, so the only bias in means and correlations
//! is the O(dt²) splitting error.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::models::{BepBoundary, Model, ModelSpec};

/// Default macroscopic step: `10⁻²/N²`, i.e. 0.01 in microscopic time.
pub fn default_dt(n: usize) -> f64 {
    1e-2 / (n * n) as f64
}

/// Integrate from `z0` for macroscopic time `t` with step `dt` (the last
/// step is shortened to land on `t`).
pub fn simulate_diffusion<R: Rng + ?Sized>(
    spec: &ModelSpec,
    z0: &[f64],
    t: f64,
    dt: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::Usage(format!("dt must be positive, got {dt}")));
    }
    if !(t >= 0.0) {
        return Err(Error::Usage(format!("time must be non-negative, got {t}")));
    }
    // also validates length and the BEP sign
    spec.sde_coefficients(z0)?;
    let mut z = z0.to_vec();
    let s = (spec.n * spec.n) as f64;
    let steps = (t / dt).ceil() as u64;
    let mut done = 0.0;
    for k in 0..steps {
        let h = if k + 1 == steps { t - done } else { dt };
        done += h;
        match spec.model {
            Model::GinzburgLandau { phi_minus, phi_plus } => {
                let tau = s * h;
                let m = z.len();
                ou_site_step(&mut z[0], phi_minus, tau / 2.0, rng);
                ou_site_step(&mut z[m - 1], phi_plus, tau / 2.0, rng);
                for b in 0..m.saturating_sub(1) {
                    ou_bond_step(&mut z, b, tau / 2.0, rng);
                }
                for b in (0..m.saturating_sub(1)).rev() {
                    ou_bond_step(&mut z, b, tau / 2.0, rng);
                }
                ou_site_step(&mut z[m - 1], phi_plus, tau / 2.0, rng);
                ou_site_step(&mut z[0], phi_minus, tau / 2.0, rng);
            }
            Model::Bep {
                alpha,
                t_minus,
                t_plus,
                boundary,
            } => {
                let (sl, sr) = match boundary {
                    BepBoundary::Thermal => (t_minus, t_plus),
                    _ => (1.0, 1.0),
                };
                let tau = s * h;
                let m = z.len();
                cir_step(&mut z[0], alpha * t_minus, sl, tau / 2.0, rng);
                cir_step(&mut z[m - 1], alpha * t_plus, sr, tau / 2.0, rng);
                for b in 0..m.saturating_sub(1) {
                    bond_step(&mut z, b, alpha, tau / 2.0, rng);
                }
                for b in (0..m.saturating_sub(1)).rev() {
                    bond_step(&mut z, b, alpha, tau / 2.0, rng);
                }
                cir_step(&mut z[m - 1], alpha * t_plus, sr, tau / 2.0, rng);
                cir_step(&mut z[0], alpha * t_minus, sl, tau / 2.0, rng);
            }
            _ => return Err(Error::Usage(format!("{} is not a diffusion", spec.name()))),
        }
    }
    Ok(z)
}

/// `dz = (φ − z) dt + √2 dW`, exactly.
fn ou_site_step<R: Rng + ?Sized>(z: &mut f64, phi: f64, tau: f64, rng: &mut R) {
    let e = (-tau).exp();
    let w: f64 = StandardNormal.sample(rng);
    *z = phi + (*z - phi) * e + (1.0 - e * e).sqrt() * w;
}

/// One bond alone: the sum is conserved and the difference `δ` follows
/// `dδ = −2δ dt + 2√2 dW`, exactly.
fn ou_bond_step<R: Rng + ?Sized>(z: &mut [f64], b: usize, tau: f64, rng: &mut R) {
    let sum = z[b] + z[b + 1];
    let e = (-2.0 * tau).exp();
    let w: f64 = StandardNormal.sample(rng);
    let delta = (z[b] - z[b + 1]) * e + (2.0 * (1.0 - e * e)).sqrt() * w;
    z[b] = 0.5 * (sum + delta);
    z[b + 1] = 0.5 * (sum - delta);
}

/// First two moments after time `tau` of the fraction `u` driven by
/// `du = α(1 − 2u) dt + √(2u(1−u)) dW`, started at `u0`.
pub(crate) fn jacobi_moments(u0: f64, alpha: f64, tau: f64) -> (f64, f64) {
    let a = u0 - 0.5;
    let e1 = (-2.0 * alpha * tau).exp();
    let e2 = (-(2.0 + 4.0 * alpha) * tau).exp();
    let m2_inf = (1.0 + alpha) / (2.0 * (1.0 + 2.0 * alpha));
    let mean = 0.5 + a * e1;
    let m2 = m2_inf + a * e1 + (u0 * u0 - m2_inf - a) * e2;
    (mean, (m2 - mean * mean).max(0.0))
}

fn bond_step<R: Rng + ?Sized>(z: &mut [f64], b: usize, alpha: f64, tau: f64, rng: &mut R) {
    let total = z[b] + z[b + 1];
    if !(total > 0.0) {
        return;
    }
    let (mean, var) = jacobi_moments(z[b] / total, alpha, tau);
    let k = mean * (1.0 - mean) / var - 1.0;
    let u = match Beta::new(mean * k, (1.0 - mean) * k) {
        Ok(d) if k.is_finite() && k > 0.0 => {
            let u: f64 = d.sample(rng);
            if u.is_finite() {
                u.clamp(0.0, 1.0)
            } else {
                mean
            }
        }
        _ => mean,
    };
    z[b] = total * u;
    z[b + 1] = total * (1.0 - u);
}

/// Exact transition of `dz = (θ/2 − z/2) dt + √(2σz) dW` over `tau`, as a
/// Poisson mixture of Gamma laws. Here `theta_half = θ/2`.
fn cir_step<R: Rng + ?Sized>(z: &mut f64, theta_half: f64, sigma: f64, tau: f64, rng: &mut R) {
    let e = (-0.5 * tau).exp();
    let c = sigma * (1.0 - e);
    let lam = *z * e / c;
    let p = if lam > 0.0 {
        Poisson::new(lam / 2.0).map(|d| d.sample(rng)).unwrap_or(0.0)
    } else {
        0.0
    };
    let shape = theta_half / sigma + p;
    *z = if shape > 0.0 {
        2.0 * c * Gamma::new(shape, 1.0).map(|g| g.sample(rng)).unwrap_or(0.0)
    } else {
        0.0
    };
}

#[cfg(test)]
mod tests {
    use super::jacobi_moments;

    #[test]
    fn jacobi_moments_limits() {
        let (m, v) = jacobi_moments(0.2, 1.5, 0.0);
        assert!((m - 0.2).abs() < 1e-15 && v.abs() < 1e-15);
        // symmetric Beta(α, α) at long times
        let a = 1.5;
        let (m, v) = jacobi_moments(0.9, a, 50.0);
        assert!((m - 0.5).abs() < 1e-14);
        assert!((v - 1.0 / (4.0 * (2.0 * a + 1.0))).abs() < 1e-14);
        // small-time variance is the squared noise coefficient
        let tau = 1e-7;
        let (m, v) = jacobi_moments(0.3, a, tau);
        assert!((m - 0.3 - a * 0.4 * tau).abs() < 1e-12);
        assert!((v / tau - 2.0 * 0.3 * 0.7).abs() < 1e-5);
    }
}
