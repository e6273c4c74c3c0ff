//! Model parameters and elementary rates.
//!
//! Configurations are plain slices of length `N - 1`; site `x` of the bulk
//! lives at index `x - 1`. Reservoir sites `0` and `N` are never stored in a
//! configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which boundary dynamics a BEP spec uses.
///
/// `Thermal` is the boundary generator `(Tα - z/2)∂ + T z ∂²`, whose
/// equilibrium is `Gamma(α, 2T)` for every `T`. `Literal` keeps unit noise,
/// `(Tα - z/2)∂ + z ∂²`; its correlation equation picks up an extra source
/// on the two corner diagonal sites. `Stated` only affects the deterministic
/// equations: boundary conductance `α T±` instead of `1/2` (no process has
/// this as its generator; simulations fall back to the literal dynamics).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BepBoundary {
    #[default]
    Thermal,
    Literal,
    Stated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Sep,
    Sip,
    Irw,
    RateFamily,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    /// Bulk rate `η(x)(c + d η(y))`, reservoirs `ϱ±` coupled with strength `λ±`.
    RateFamily {
        preset: Preset,
        c: f64,
        d: f64,
        lambda_minus: f64,
        lambda_plus: f64,
        rho_minus: f64,
        rho_plus: f64,
    },
    GinzburgLandau {
        phi_minus: f64,
        phi_plus: f64,
    },
    Bep {
        alpha: f64,
        t_minus: f64,
        t_plus: f64,
        boundary: BepBoundary,
    },
    Piles {
        alpha: u32,
        beta_minus: f64,
        beta_plus: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub n: usize,
    pub model: Model,
}

/// How the two-point function is treated on the diagonal `x = y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalMode {
    /// `c + d = 0`: the diagonal is never visited and carries no value.
    Excluded,
    /// Diagonal value built from the second factorial moment.
    MomentExtended,
    /// Ginzburg-Landau: the stationary diagonal `1` is subtracted.
    Shifted,
}

/// Conductances and reservoir values of the one-dimensional problem,
/// before the `N²` factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearCoefficients {
    pub bulk: f64,
    pub left: f64,
    pub right: f64,
    pub res_left: f64,
    pub res_right: f64,
}

impl LinearCoefficients {
    /// Conductance of bond `{b, b+1}` for `b` in `0..N`.
    pub fn bond(&self, b: usize, n: usize) -> f64 {
        if b == 0 {
            self.left
        } else if b == n - 1 {
            self.right
        } else {
            self.bulk
        }
    }
}

/// The four boundary rates of a rate-family configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryRates {
    /// reservoir 0 -> site 1
    pub r01: f64,
    /// site 1 -> reservoir 0
    pub r10: f64,
    /// site N-1 -> reservoir N
    pub r_out_right: f64,
    /// reservoir N -> site N-1
    pub r_in_right: f64,
}

/// Itô coefficients of a diffusion model, unscaled (multiply by `N²` for the
/// speeded process).
#[derive(Debug, Clone, PartialEq)]
pub struct SdeCoefficients {
    pub drift: Vec<f64>,
    /// Bond `{x, x+1}` for `x = 1..N-2` at index `x - 1`; enters site `x`
    /// with sign `-1` and site `x+1` with sign `+1`.
    pub bond_noise: Vec<f64>,
    /// Independent noise on sites `1` and `N-1`.
    pub boundary_noise: [f64; 2],
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    check(v.is_finite(), || format!("{name} must be finite, got {v}"))
}

impl ModelSpec {
    pub fn new(n: usize, model: Model) -> Result<Self> {
        let spec = ModelSpec { n, model };
        spec.validate()?;
        Ok(spec)
    }

    pub fn sep(n: usize, alpha: u32, rho_minus: f64, rho_plus: f64) -> Result<Self> {
        Self::rate_family_preset(Preset::Sep, n, alpha as f64, -1.0, rho_minus, rho_plus)
    }

    pub fn sip(n: usize, alpha: f64, rho_minus: f64, rho_plus: f64) -> Result<Self> {
        Self::rate_family_preset(Preset::Sip, n, alpha, 1.0, rho_minus, rho_plus)
    }

    pub fn irw(n: usize, c: f64, rho_minus: f64, rho_plus: f64) -> Result<Self> {
        Self::rate_family_preset(Preset::Irw, n, c, 0.0, rho_minus, rho_plus)
    }

    pub fn rate_family(n: usize, c: f64, d: f64, rho_minus: f64, rho_plus: f64) -> Result<Self> {
        Self::rate_family_preset(Preset::RateFamily, n, c, d, rho_minus, rho_plus)
    }

    fn rate_family_preset(
        preset: Preset,
        n: usize,
        c: f64,
        d: f64,
        rho_minus: f64,
        rho_plus: f64,
    ) -> Result<Self> {
        Self::new(
            n,
            Model::RateFamily {
                preset,
                c,
                d,
                lambda_minus: 1.0,
                lambda_plus: 1.0,
                rho_minus,
                rho_plus,
            },
        )
    }

    pub fn gl(n: usize, phi_minus: f64, phi_plus: f64) -> Result<Self> {
        Self::new(n, Model::GinzburgLandau { phi_minus, phi_plus })
    }

    pub fn bep(n: usize, alpha: f64, t_minus: f64, t_plus: f64) -> Result<Self> {
        Self::new(
            n,
            Model::Bep {
                alpha,
                t_minus,
                t_plus,
                boundary: BepBoundary::Thermal,
            },
        )
    }

    pub fn piles(n: usize, alpha: u32, beta_minus: f64, beta_plus: f64) -> Result<Self> {
        Self::new(
            n,
            Model::Piles {
                alpha,
                beta_minus,
                beta_plus,
            },
        )
    }

    /// Replace the boundary coupling `λ±` of a rate-family spec.
    pub fn with_lambdas(mut self, lm: f64, lp: f64) -> Result<Self> {
        match &mut self.model {
            Model::RateFamily {
                lambda_minus,
                lambda_plus,
                ..
            } => {
                *lambda_minus = lm;
                *lambda_plus = lp;
            }
            _ => return Err(Error::Usage("λ± only exist for rate-family models".into())),
        }
        self.validate()?;
        Ok(self)
    }

    pub fn with_bep_boundary(mut self, b: BepBoundary) -> Result<Self> {
        match &mut self.model {
            Model::Bep { boundary, .. } => *boundary = b,
            _ => return Err(Error::Usage("boundary variant only applies to BEP".into())),
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidSize(self.n));
        }
        match self.model {
            Model::RateFamily {
                c,
                d,
                lambda_minus,
                lambda_plus,
                rho_minus,
                rho_plus,
                ..
            } => {
                for (k, v) in [("c", c), ("d", d), ("rho_minus", rho_minus), ("rho_plus", rho_plus)] {
                    finite(k, v)?;
                }
                check(c > 0.0, || format!("c must be positive, got {c}"))?;
                for (k, l) in [("lambda_minus", lambda_minus), ("lambda_plus", lambda_plus)] {
                    check(l > 0.0 && l <= 1.0, || format!("{k} must lie in (0, 1], got {l}"))?;
                }
                check(rho_minus >= 0.0 && rho_plus >= 0.0, || {
                    "reservoir densities must be non-negative".into()
                })?;
                if d < 0.0 {
                    let cap = (-c / d).floor();
                    check(cap >= 1.0, || format!("need floor(-c/d) >= 1, got -c/d = {}", -c / d))?;
                    let top = -c / d;
                    check(rho_minus <= top && rho_plus <= top, || {
                        format!("reservoir densities must lie in [0, {top}]")
                    })?;
                }
            }
            Model::GinzburgLandau { phi_minus, phi_plus } => {
                finite("phi_minus", phi_minus)?;
                finite("phi_plus", phi_plus)?;
            }
            Model::Bep {
                alpha,
                t_minus,
                t_plus,
                ..
            } => {
                for (k, v) in [("alpha", alpha), ("t_minus", t_minus), ("t_plus", t_plus)] {
                    finite(k, v)?;
                    check(v > 0.0, || format!("{k} must be positive, got {v}"))?;
                }
            }
            Model::Piles {
                alpha,
                beta_minus,
                beta_plus,
            } => {
                check(alpha >= 1, || "alpha must be a positive integer".into())?;
                for (k, b) in [("beta_minus", beta_minus), ("beta_plus", beta_plus)] {
                    check(b > 0.0 && b < 1.0, || format!("{k} must lie in (0, 1), got {b}"))?;
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self.model {
            Model::RateFamily { preset, .. } => match preset {
                Preset::Sep => "sep",
                Preset::Sip => "sip",
                Preset::Irw => "irw",
                Preset::RateFamily => "rate_family",
            },
            Model::GinzburgLandau { .. } => "gl",
            Model::Bep { .. } => "bep",
            Model::Piles { .. } => "piles",
        }
    }

    pub fn is_jump(&self) -> bool {
        matches!(self.model, Model::RateFamily { .. } | Model::Piles { .. })
    }

    /// Largest admissible occupation, if any (`floor(-c/d)` when `d < 0`).
    pub fn max_occupation(&self) -> Option<u32> {
        match self.model {
            Model::RateFamily { c, d, .. } if d < 0.0 => Some((-c / d).floor() as u32),
            _ => None,
        }
    }

    pub fn diagonal_mode(&self) -> DiagonalMode {
        match self.model {
            Model::RateFamily { c, d, .. } if (c + d).abs() < 1e-12 => DiagonalMode::Excluded,
            Model::GinzburgLandau { .. } => DiagonalMode::Shifted,
            _ => DiagonalMode::MomentExtended,
        }
    }

    /// Coefficient `k` in the diagonal definition `k E[η(η-1)] - ϱ²`
    /// (`k E[z²] - e²` for the diffusions).
    pub fn diagonal_factor(&self) -> Option<f64> {
        match self.model {
            Model::RateFamily { c, d, .. } => {
                if (c + d).abs() < 1e-12 {
                    None
                } else {
                    Some(c / (c + d))
                }
            }
            Model::GinzburgLandau { .. } => Some(1.0),
            Model::Bep { alpha, .. } => Some(alpha / (alpha + 1.0)),
            Model::Piles { alpha, .. } => {
                let a = alpha as f64;
                Some(a / (a + 1.0))
            }
        }
    }

    /// Conductances and reservoir values of the density equation, derived
    /// from the generator of each model.
    pub fn density_coefficients(&self) -> LinearCoefficients {
        match self.model {
            Model::RateFamily {
                c,
                lambda_minus,
                lambda_plus,
                rho_minus,
                rho_plus,
                ..
            } => LinearCoefficients {
                bulk: c,
                left: c * lambda_minus,
                right: c * lambda_plus,
                res_left: rho_minus,
                res_right: rho_plus,
            },
            Model::GinzburgLandau { phi_minus, phi_plus } => LinearCoefficients {
                bulk: 1.0,
                left: 1.0,
                right: 1.0,
                res_left: phi_minus,
                res_right: phi_plus,
            },
            Model::Bep {
                alpha,
                t_minus,
                t_plus,
                boundary,
            } => {
                let (left, right) = match boundary {
                    BepBoundary::Stated => (alpha * t_minus, alpha * t_plus),
                    _ => (0.5, 0.5),
                };
                LinearCoefficients {
                    bulk: alpha,
                    left,
                    right,
                    res_left: 2.0 * alpha * t_minus,
                    res_right: 2.0 * alpha * t_plus,
                }
            }
            Model::Piles {
                alpha,
                beta_minus,
                beta_plus,
            } => {
                let a = alpha as f64;
                LinearCoefficients {
                    bulk: 1.0 / a,
                    left: 1.0 / a,
                    right: 1.0 / a,
                    res_left: a * beta_minus / (1.0 - beta_minus),
                    res_right: a * beta_plus / (1.0 - beta_plus),
                }
            }
        }
    }

    /// Strength of the correction on the upper diagonal (`d`; `1` for BEP,
    /// `0` for GL and piles, whose diagonal structure is different).
    pub fn interaction(&self) -> f64 {
        match self.model {
            Model::RateFamily { d, .. } => d,
            Model::Bep { .. } => 1.0,
            _ => 0.0,
        }
    }

    fn rate_params(&self) -> Result<(f64, f64)> {
        match self.model {
            Model::RateFamily { c, d, .. } => Ok((c, d)),
            _ => Err(Error::Usage(format!("{} is not a rate-family model", self.name()))),
        }
    }

    fn check_config_len<T>(&self, eta: &[T]) -> Result<()> {
        if eta.len() != self.n - 1 {
            return Err(Error::Usage(format!(
                "configuration has {} sites, expected {}",
                eta.len(),
                self.n - 1
            )));
        }
        Ok(())
    }

    /// Jump rate of one particle from `x` to the neighbouring bulk site `y`.
    ///
    /// For `d < 0` with non-integer `-c/d` a site at the cap accepts no more
    /// particles.
    pub fn bulk_rate(&self, eta: &[u32], x: usize, y: usize) -> Result<f64> {
        let (c, d) = self.rate_params()?;
        self.check_config_len(eta)?;
        let n = self.n;
        if x == 0 || y == 0 || x >= n || y >= n || x.abs_diff(y) != 1 {
            return Err(Error::Usage(format!("sites {x} and {y} are not adjacent bulk sites")));
        }
        let (ex, ey) = (eta[x - 1] as f64, eta[y - 1]);
        if let Some(cap) = self.max_occupation() {
            if ey >= cap {
                return Ok(0.0);
            }
        }
        Ok((ex * (c + d * ey as f64)).max(0.0))
    }

    pub fn boundary_rates(&self, eta: &[u32]) -> Result<BoundaryRates> {
        let (c, d) = self.rate_params()?;
        self.check_config_len(eta)?;
        let Model::RateFamily {
            lambda_minus: lm,
            lambda_plus: lp,
            rho_minus: rm,
            rho_plus: rp,
            ..
        } = self.model
        else {
            unreachable!()
        };
        let e1 = eta[0];
        let en = eta[self.n - 2];
        let full = |e: u32| self.max_occupation().is_some_and(|cap| e >= cap);
        let inj = |lam: f64, rho: f64, e: u32| {
            if full(e) {
                0.0
            } else {
                (lam * rho * (c + d * e as f64)).max(0.0)
            }
        };
        Ok(BoundaryRates {
            r01: inj(lm, rm, e1),
            r10: (lm * e1 as f64 * (c + d * rm)).max(0.0),
            r_out_right: (lp * en as f64 * (c + d * rp)).max(0.0),
            r_in_right: inj(lp, rp, en),
        })
    }

    /// Drift and noise of the speeded-down diffusion (GL or BEP).
    pub fn sde_coefficients(&self, z: &[f64]) -> Result<SdeCoefficients> {
        self.check_config_len(z)?;
        let m = self.n - 1;
        let mut drift = vec![0.0; m];
        let mut bond_noise = vec![0.0; m - 1];
        let boundary_noise;
        match self.model {
            Model::GinzburgLandau { phi_minus, phi_plus } => {
                for b in 0..m - 1 {
                    let g = z[b] - z[b + 1];
                    drift[b] -= g;
                    drift[b + 1] += g;
                    bond_noise[b] = 2f64.sqrt();
                }
                drift[0] += phi_minus - z[0];
                drift[m - 1] += phi_plus - z[m - 1];
                boundary_noise = [2f64.sqrt(), 2f64.sqrt()];
            }
            Model::Bep {
                alpha,
                t_minus,
                t_plus,
                boundary,
            } => {
                if let Some(v) = z.iter().find(|v| !(**v >= 0.0)) {
                    return Err(Error::Domain(format!("BEP energies must be non-negative, got {v}")));
                }
                for b in 0..m - 1 {
                    let g = alpha * (z[b] - z[b + 1]);
                    drift[b] -= g;
                    drift[b + 1] += g;
                    bond_noise[b] = (2.0 * z[b] * z[b + 1]).sqrt();
                }
                drift[0] += t_minus * alpha - 0.5 * z[0];
                drift[m - 1] += t_plus * alpha - 0.5 * z[m - 1];
                let (sl, sr) = match boundary {
                    BepBoundary::Thermal => (t_minus, t_plus),
                    _ => (1.0, 1.0),
                };
                boundary_noise = [(2.0 * sl * z[0]).sqrt(), (2.0 * sr * z[m - 1]).sqrt()];
            }
            _ => return Err(Error::Usage(format!("{} is not a diffusion", self.name()))),
        }
        Ok(SdeCoefficients {
            drift,
            bond_noise,
            boundary_noise,
        })
    }
}

/// Block rate `h_α(j, m)` of the piles model, as the finite product
/// `(1/j) Π_{i<j} (m − i)/(m − i + α − 1)`.
pub fn pile_block_rate(alpha: u32, j: u32, m: u32) -> f64 {
    if j == 0 || j > m {
        return 0.0;
    }
    let (a, m) = (alpha as f64, m as f64);
    let p: f64 = (0..j).map(|i| (m - i as f64) / (m - i as f64 + a - 1.0)).product();
    p / j as f64
}

/// Flat JSON form of a [`ModelSpec`]. Field names are part of the file
/// format; fields that do not belong to the selected model are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDoc {
    pub model: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_minus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_minus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_minus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_minus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_minus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bep_boundary: Option<BepBoundary>,
}

impl SpecDoc {
    fn present(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        macro_rules! p {
            ($($f:ident),*) => { $( if self.$f.is_some() { v.push(stringify!($f)); } )* };
        }
        p!(alpha, c, d, lambda_minus, lambda_plus, rho_minus, rho_plus, phi_minus, phi_plus,
           t_minus, t_plus, beta_minus, beta_plus, bep_boundary);
        v
    }
}

fn need(v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| Error::InvalidParameter(format!("missing field `{name}`")))
}

impl TryFrom<SpecDoc> for ModelSpec {
    type Error = Error;

    fn try_from(doc: SpecDoc) -> Result<Self> {
        let allowed: &[&str] = match doc.model.as_str() {
            "sep" | "sip" => &["alpha", "lambda_minus", "lambda_plus", "rho_minus", "rho_plus"],
            "irw" => &["c", "lambda_minus", "lambda_plus", "rho_minus", "rho_plus"],
            "rate_family" => &["c", "d", "lambda_minus", "lambda_plus", "rho_minus", "rho_plus"],
            "gl" => &["phi_minus", "phi_plus"],
            "bep" => &["alpha", "t_minus", "t_plus", "bep_boundary"],
            "piles" => &["alpha", "beta_minus", "beta_plus"],
            other => return Err(Error::InvalidParameter(format!("unknown model `{other}`"))),
        };
        if let Some(f) = doc.present().into_iter().find(|f| !allowed.contains(f)) {
            return Err(Error::InvalidParameter(format!(
                "field `{f}` does not apply to model `{}`",
                doc.model
            )));
        }
        let n = doc.n;
        let lm = doc.lambda_minus.unwrap_or(1.0);
        let lp = doc.lambda_plus.unwrap_or(1.0);
        let spec = match doc.model.as_str() {
            "sep" => {
                let a = need(doc.alpha, "alpha")?;
                if a.fract() != 0.0 || a < 1.0 {
                    return Err(Error::InvalidParameter("SEP alpha must be a positive integer".into()));
                }
                ModelSpec::sep(n, a as u32, need(doc.rho_minus, "rho_minus")?, need(doc.rho_plus, "rho_plus")?)?
                    .with_lambdas(lm, lp)?
            }
            "sip" => ModelSpec::sip(
                n,
                need(doc.alpha, "alpha")?,
                need(doc.rho_minus, "rho_minus")?,
                need(doc.rho_plus, "rho_plus")?,
            )?
            .with_lambdas(lm, lp)?,
            "irw" => ModelSpec::irw(
                n,
                doc.c.unwrap_or(1.0),
                need(doc.rho_minus, "rho_minus")?,
                need(doc.rho_plus, "rho_plus")?,
            )?
            .with_lambdas(lm, lp)?,
            "rate_family" => ModelSpec::rate_family(
                n,
                need(doc.c, "c")?,
                need(doc.d, "d")?,
                need(doc.rho_minus, "rho_minus")?,
                need(doc.rho_plus, "rho_plus")?,
            )?
            .with_lambdas(lm, lp)?,
            "gl" => ModelSpec::gl(n, need(doc.phi_minus, "phi_minus")?, need(doc.phi_plus, "phi_plus")?)?,
            "bep" => ModelSpec::bep(
                n,
                need(doc.alpha, "alpha")?,
                need(doc.t_minus, "t_minus")?,
                need(doc.t_plus, "t_plus")?,
            )?
            .with_bep_boundary(doc.bep_boundary.unwrap_or_default())?,
            "piles" => {
                let a = need(doc.alpha, "alpha")?;
                if a.fract() != 0.0 || a < 1.0 {
                    return Err(Error::InvalidParameter("piles alpha must be a positive integer".into()));
                }
                ModelSpec::piles(n, a as u32, need(doc.beta_minus, "beta_minus")?, need(doc.beta_plus, "beta_plus")?)?
            }
            _ => unreachable!(),
        };
        Ok(spec)
    }
}

impl From<&ModelSpec> for SpecDoc {
    fn from(spec: &ModelSpec) -> Self {
        let mut doc = SpecDoc {
            model: spec.name().to_string(),
            n: spec.n,
            ..Default::default()
        };
        match spec.model {
            Model::RateFamily {
                preset,
                c,
                d,
                lambda_minus,
                lambda_plus,
                rho_minus,
                rho_plus,
            } => {
                match preset {
                    Preset::Sep | Preset::Sip => doc.alpha = Some(c),
                    Preset::Irw => doc.c = Some(c),
                    Preset::RateFamily => {
                        doc.c = Some(c);
                        doc.d = Some(d);
                    }
                }
                doc.lambda_minus = Some(lambda_minus);
                doc.lambda_plus = Some(lambda_plus);
                doc.rho_minus = Some(rho_minus);
                doc.rho_plus = Some(rho_plus);
            }
            Model::GinzburgLandau { phi_minus, phi_plus } => {
                doc.phi_minus = Some(phi_minus);
                doc.phi_plus = Some(phi_plus);
            }
            Model::Bep {
                alpha,
                t_minus,
                t_plus,
                boundary,
            } => {
                doc.alpha = Some(alpha);
                doc.t_minus = Some(t_minus);
                doc.t_plus = Some(t_plus);
                doc.bep_boundary = Some(boundary);
            }
            Model::Piles {
                alpha,
                beta_minus,
                beta_plus,
            } => {
                doc.alpha = Some(alpha as f64);
                doc.beta_minus = Some(beta_minus);
                doc.beta_plus = Some(beta_plus);
            }
        }
        doc
    }
}

impl ModelSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        let doc: SpecDoc =
            serde_json::from_str(s).map_err(|e| Error::InvalidParameter(format!("spec JSON: {e}")))?;
        doc.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SpecDoc::from(self)).expect("spec serializes")
    }
}

impl Serialize for ModelSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpecDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = SpecDoc::deserialize(d)?;
        ModelSpec::try_from(doc).map_err(serde::de::Error::custom)
    }
}
