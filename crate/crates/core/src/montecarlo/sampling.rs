//! Product initial laws with a prescribed mean profile.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::density::DensityField;
use crate::error::{Error, Result};
use crate::models::{Model, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialFamily {
    Binomial,
    NegativeBinomial,
    Poisson,
    Gamma,
    Gaussian,
    Deterministic,
}

impl InitialFamily {
    /// The family of the model's product invariant measures.
    pub fn natural(spec: &ModelSpec) -> Self {
        match spec.model {
            Model::RateFamily { d, .. } if d < 0.0 => InitialFamily::Binomial,
            Model::RateFamily { d, .. } if d == 0.0 => InitialFamily::Poisson,
            Model::RateFamily { .. } | Model::Piles { .. } => InitialFamily::NegativeBinomial,
            Model::Bep { .. } => InitialFamily::Gamma,
            Model::GinzburgLandau { .. } => InitialFamily::Gaussian,
        }
    }
}

fn bad(family: InitialFamily, spec: &ModelSpec) -> Error {
    Error::Usage(format!("family {family:?} does not fit {}", spec.name()))
}

/// Negative-binomial shape of the invariant marginals.
fn nb_shape(spec: &ModelSpec) -> Option<f64> {
    match spec.model {
        Model::RateFamily { c, d, .. } if d > 0.0 => Some(c / d),
        Model::Piles { alpha, .. } => Some(alpha as f64),
        _ => None,
    }
}

/// Independent draws, one per bulk site, with `E[η(x)] = profile(x)`.
/// Jump-model values are non-negative integers stored as `f64`.
pub fn sample_initial<R: Rng + ?Sized>(
    spec: &ModelSpec,
    profile: &DensityField,
    family: InitialFamily,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if profile.n() != spec.n {
        return Err(Error::Usage("profile and spec disagree on N".into()));
    }
    let jump = spec.is_jump();
    let cap = spec.max_occupation();
    let dom = |v: f64| Error::Domain(format!("mean {v} not admissible for {}", spec.name()));
    let mut out = Vec::with_capacity(spec.n - 1);
    for &mean in profile.bulk() {
        if !(mean >= 0.0) && !matches!(spec.model, Model::GinzburgLandau { .. }) {
            return Err(dom(mean));
        }
        let v = match family {
            InitialFamily::Deterministic => {
                if jump {
                    let r = mean.round();
                    cap.map_or(r, |k| r.min(k as f64))
                } else {
                    mean
                }
            }
            InitialFamily::Binomial => {
                let k = cap.ok_or_else(|| bad(family, spec))?;
                let Model::RateFamily { c, d, .. } = spec.model else {
                    return Err(bad(family, spec));
                };
                if (-c / d).fract() != 0.0 {
                    return Err(Error::Unsupported("binomial marginals need integer -c/d".into()));
                }
                let p = mean / k as f64;
                if p > 1.0 {
                    return Err(dom(mean));
                }
                Binomial::new(k as u64, p).map_err(|_| dom(mean))?.sample(rng) as f64
            }
            InitialFamily::Poisson => {
                if !jump || cap.is_some() {
                    return Err(bad(family, spec));
                }
                if mean == 0.0 {
                    0.0
                } else {
                    Poisson::new(mean).map_err(|_| dom(mean))?.sample(rng)
                }
            }
            InitialFamily::NegativeBinomial => {
                let s = nb_shape(spec).ok_or_else(|| bad(family, spec))?;
                if mean == 0.0 {
                    0.0
                } else {
                    // Gamma-Poisson mixture with success parameter mean/(s + mean)
                    let lam: f64 = Gamma::new(s, mean / s).map_err(|_| dom(mean))?.sample(rng);
                    if lam > 0.0 {
                        Poisson::new(lam).map_err(|_| dom(lam))?.sample(rng)
                    } else {
                        0.0
                    }
                }
            }
            InitialFamily::Gamma => {
                let Model::Bep { alpha, .. } = spec.model else {
                    return Err(bad(family, spec));
                };
                if mean == 0.0 {
                    0.0
                } else {
                    Gamma::new(alpha, mean / alpha).map_err(|_| dom(mean))?.sample(rng)
                }
            }
            InitialFamily::Gaussian => {
                if !matches!(spec.model, Model::GinzburgLandau { .. }) {
                    return Err(bad(family, spec));
                }
                Normal::new(mean, 1.0).unwrap().sample(rng)
            }
        };
        out.push(v);
    }
    Ok(out)
}
