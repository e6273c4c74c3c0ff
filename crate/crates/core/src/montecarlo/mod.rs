//! Ensemble estimates of `ϱ` and `φ` from simulated trajectories.
//!
//! Trajectory `i` draws everything (initial state and dynamics) from a
//! ChaCha8 stream keyed by `(seed, i)`, and results are reduced in
//! trajectory order, so an estimate depends on `(seed, M)` only and not on
//! the number of worker threads.

mod diffusion;
mod gillespie;
mod logseries;
mod sampling;
mod sumtree;

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use diffusion::{default_dt, simulate_diffusion};
pub use gillespie::{simulate_jump, simulate_jump_with, JumpOptions};
pub use logseries::sample_log_series;
pub use sampling::{sample_initial, InitialFamily};

use crate::correlation::{field_mode, CorrelationField};
use crate::density::DensityField;
use crate::error::{Error, Result};
use crate::lattice::Geometry;
use crate::models::{Model, ModelSpec};

/// RNG for trajectory `index` under `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialMeasure {
    pub family: InitialFamily,
    pub profile: DensityField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleEstimate {
    pub rho: DensityField,
    pub rho_se: DensityField,
    pub phi: CorrelationField,
    pub phi_se: CorrelationField,
    pub m: usize,
    pub t: f64,
    pub seed: u64,
}

impl EnsembleEstimate {
    /// Columns `kind,x,y,mean,stderr`; `kind` is `x` for densities (empty
    /// `y`) and `xy` for correlations.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,x,y,mean,stderr\n");
        let n = self.rho.n();
        for x in 1..n {
            writeln!(s, "x,{x},,{:.17e},{:.17e}", self.rho.at(x), self.rho_se.at(x)).unwrap();
        }
        for (x, y) in self.phi.defined_points() {
            writeln!(
                s,
                "xy,{x},{y},{:.17e},{:.17e}",
                self.phi.get(x, y).unwrap(),
                self.phi_se.get(x, y).unwrap()
            )
            .unwrap();
        }
        s
    }

    /// Largest `|φ̂ - φ| / SE` over defined points (points with zero SE and
    /// an exact match are skipped).
    pub fn max_z_score(&self, reference: &CorrelationField) -> f64 {
        let mut worst = 0.0f64;
        for (x, y) in self.phi.defined_points() {
            let (Some(a), Some(b), Some(se)) = (self.phi.get(x, y), reference.get(x, y), self.phi_se.get(x, y))
            else {
                continue;
            };
            let d = (a - b).abs();
            if se > 0.0 {
                worst = worst.max(d / se);
            } else if d > 0.0 {
                worst = f64::INFINITY;
            }
        }
        worst
    }
}

/// One trajectory: sample the start, then run to `t`.
pub fn run_trajectory(
    spec: &ModelSpec,
    init: &InitialMeasure,
    t: f64,
    dt: Option<f64>,
    seed: u64,
    index: u64,
) -> Result<Vec<f64>> {
    let mut rng = trajectory_rng(seed, index);
    let z0 = sample_initial(spec, &init.profile, init.family, &mut rng)?;
    if spec.is_jump() {
        let eta: Vec<u32> = z0.iter().map(|&v| v as u32).collect();
        let out = simulate_jump(spec, &eta, t, &mut rng)?;
        Ok(out.into_iter().map(f64::from).collect())
    } else {
        simulate_diffusion(spec, &z0, t, dt.unwrap_or_else(|| default_dt(spec.n)), &mut rng)
    }
}

/// Means and delta-method standard errors from final states (one row per
/// trajectory).
pub fn summarize(spec: &ModelSpec, samples: &[Vec<f64>], t: f64, seed: u64) -> Result<EnsembleEstimate> {
    let mm = samples.len();
    if mm < 2 {
        return Err(Error::Usage(format!("need at least 2 trajectories, got {mm}")));
    }
    let n = spec.n;
    let sites = n - 1;
    let mf = mm as f64;
    let col = |x: usize| samples.iter().map(move |s| s[x - 1]);
    let mean = |it: &mut dyn Iterator<Item = f64>| it.sum::<f64>() / mf;
    // sample variance of W about its mean, over √M
    let se_of = |w: &dyn Fn(&[f64]) -> f64| -> f64 {
        let mu = samples.iter().map(|s| w(s)).sum::<f64>() / mf;
        let v = samples.iter().map(|s| (w(s) - mu).powi(2)).sum::<f64>() / (mf - 1.0);
        (v / mf).sqrt()
    };
    let m: Vec<f64> = (1..n).map(|x| mean(&mut col(x))).collect();
    let mse: Vec<f64> = (0..sites).map(|i| se_of(&|s| s[i])).collect();
    let mut rho = DensityField::from_bulk(spec, &m)?;
    let mut rho_se = DensityField::from_bulk(spec, &mse)?;
    rho_se.values[0] = 0.0;
    rho_se.values[n] = 0.0;
    rho.t = t;
    rho_se.t = t;

    let geom = Geometry::new(n)?;
    let mode = field_mode(spec);
    let k = spec.diagonal_factor();
    let smooth = matches!(spec.model, Model::Bep { .. } | Model::GinzburgLandau { .. });
    let mut phi = CorrelationField::zeros(&geom, mode);
    let mut phi_se = CorrelationField::zeros(&geom, mode);
    for (x, y) in geom.open_points() {
        let (a, b) = (x - 1, y - 1);
        if x == y {
            let Some(k) = k.filter(|_| mode != crate::models::DiagonalMode::Excluded) else {
                continue;
            };
            let sec = |s: &[f64]| if smooth { s[a] * s[a] } else { s[a] * (s[a] - 1.0) };
            let v = k * samples.iter().map(|s| sec(s)).sum::<f64>() / mf - m[a] * m[a];
            let ma = m[a];
            phi.set(x, y, v);
            phi_se.set(x, y, se_of(&|s| k * sec(s) - 2.0 * ma * s[a]));
        } else {
            let v = samples.iter().map(|s| s[a] * s[b]).sum::<f64>() / mf - m[a] * m[b];
            let (ma, mb) = (m[a], m[b]);
            phi.set(x, y, v);
            phi_se.set(x, y, se_of(&|s| s[a] * s[b] - mb * s[a] - ma * s[b]));
        }
    }
    phi.t = t;
    phi_se.t = phi.t;
    Ok(EnsembleEstimate {
        rho,
        rho_se,
        phi,
        phi_se,
        m: mm,
        t,
        seed,
    })
}

/// Run `m` independent trajectories and estimate `ϱ_t` and `φ_t`.
pub fn estimate_fields(
    spec: &ModelSpec,
    init: &InitialMeasure,
    t: f64,
    m: usize,
    dt: Option<f64>,
    seed: u64,
) -> Result<EnsembleEstimate> {
    if m < 2 {
        return Err(Error::Usage(format!("need at least 2 trajectories, got {m}")));
    }
    spec.validate()?;
    let samples = (0..m as u64)
        .into_par_iter()
        .map(|i| run_trajectory(spec, init, t, dt, seed, i))
        .collect::<Result<Vec<_>>>()?;
    summarize(spec, &samples, t, seed)
}

/// JSON experiment description for [`estimate_fields`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub spec: ModelSpec,
    pub initial: InitialDoc,
    pub t: f64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDoc {
    pub family: InitialFamily,
    /// `"stationary"` or a list of `N + 1` values (ends ignored).
    pub profile: ProfileDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileDoc {
    Named(String),
    Values(Vec<f64>),
}

impl Experiment {
    pub fn initial_measure(&self) -> Result<InitialMeasure> {
        let profile = match &self.initial.profile {
            ProfileDoc::Named(s) if s == "stationary" => crate::density::stationary_density(&self.spec),
            ProfileDoc::Named(s) => return Err(Error::Usage(format!("unknown profile {s:?}"))),
            ProfileDoc::Values(v) => {
                if v.len() != self.spec.n + 1 {
                    return Err(Error::Usage(format!(
                        "profile needs {} values, got {}",
                        self.spec.n + 1,
                        v.len()
                    )));
                }
                DensityField::from_bulk(&self.spec, &v[1..self.spec.n])?
            }
        };
        Ok(InitialMeasure {
            family: self.initial.family,
            profile,
        })
    }

    pub fn run(&self) -> Result<EnsembleEstimate> {
        estimate_fields(&self.spec, &self.initial_measure()?, self.t, self.m, self.dt, self.seed)
    }
}
