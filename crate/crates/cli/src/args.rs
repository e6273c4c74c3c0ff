use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

use corrwalk::models::{BepBoundary, ModelSpec};
use corrwalk::montecarlo::InitialFamily;
use corrwalk::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "corrwalk", version, about = "Two-point correlations of boundary-driven lattice models")]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output file. Without it, output goes to $CORRWALK_OUT_DIR/<command>.<ext>
    /// when that variable is set, and to stdout otherwise.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Density profile at time t, or the stationary profile.
    Density(DensityArgs),
    /// Two-point correlation at time t.
    Correlation(TimeArgs),
    /// Stationary two-point correlation.
    Stationary(StationaryArgs),
    /// Occupation time of the upper diagonal by the absorbed walk.
    Occupation(OccupationArgs),
    /// Monte Carlo estimate of density and correlation.
    Simulate(SimulateArgs),
    /// Run a verification suite and report pass/fail.
    Verify(VerifyArgs),
    /// Decay of max |φ| with N and its log-log slope.
    DecayStudy(DecayArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum ModelName {
    Sep,
    Sip,
    Irw,
    #[value(alias = "rate_family")]
    RateFamily,
    Gl,
    Bep,
    Piles,
}

#[derive(Debug, Clone, Args, Default)]
pub struct ModelArgs {
    /// JSON file holding a model spec or an experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelName>,
    /// Lattice size (a comma list for `decay-study`).
    #[arg(long = "N", value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<f64>,
    #[arg(long = "rho-", alias = "rho-minus")]
    pub rho_minus: Option<f64>,
    #[arg(long = "rho+", alias = "rho-plus")]
    pub rho_plus: Option<f64>,
    #[arg(long = "lambda-", alias = "lambda-minus")]
    pub lambda_minus: Option<f64>,
    #[arg(long = "lambda+", alias = "lambda-plus")]
    pub lambda_plus: Option<f64>,
    #[arg(long = "phi-", alias = "phi-minus", allow_hyphen_values = true)]
    pub phi_minus: Option<f64>,
    #[arg(long = "phi+", alias = "phi-plus", allow_hyphen_values = true)]
    pub phi_plus: Option<f64>,
    #[arg(long = "T-", alias = "t-minus")]
    pub t_minus: Option<f64>,
    #[arg(long = "T+", alias = "t-plus")]
    pub t_plus: Option<f64>,
    #[arg(long = "beta-", alias = "beta-minus")]
    pub beta_minus: Option<f64>,
    #[arg(long = "beta+", alias = "beta-plus")]
    pub beta_plus: Option<f64>,
    #[arg(long, value_enum)]
    pub bep_boundary: Option<BoundaryName>,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum BoundaryName {
    Thermal,
    Literal,
    Stated,
}

// Omitted parameters fall back to a driven setup with α = 1: reservoirs at
// 0.2 and 0.8 (also for β), T = 1 and 2, φ = -1 and 1.
const DEFAULT_N: usize = 8;
const DEFAULT_LEFT: f64 = 0.2;
const DEFAULT_RIGHT: f64 = 0.8;

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

impl ModelArgs {
    fn any_flag(&self) -> bool {
        self.model.is_some()
            || !self.n.is_empty()
            || [
                self.alpha,
                self.c,
                self.d,
                self.rho_minus,
                self.rho_plus,
                self.lambda_minus,
                self.lambda_plus,
                self.phi_minus,
                self.phi_plus,
                self.t_minus,
                self.t_plus,
                self.beta_minus,
                self.beta_plus,
            ]
            .iter()
            .any(Option::is_some)
            || self.bep_boundary.is_some()
    }

    /// Spec from flags with `N` replaced by `n` when given.
    pub fn build(&self, n: Option<usize>) -> Result<ModelSpec> {
        if let Some(path) = &self.config {
            if self.any_flag() {
                return Err(usage("model flags cannot be combined with --config"));
            }
            let cfg = crate::config::Config::load(path)?;
            let mut spec = cfg.spec;
            if let Some(n) = n {
                spec.n = n;
                spec.validate()?;
            }
            return Ok(spec);
        }
        let model = self.model.ok_or_else(|| usage("--model is required"))?;
        let n = match (n, self.n.as_slice()) {
            (Some(n), _) => n,
            (None, [n]) => *n,
            (None, []) => DEFAULT_N,
            (None, _) => return Err(usage("--N takes a single value here")),
        };
        let req = |v: Option<f64>, name: &str| v.ok_or_else(|| usage(format!("--{name} is required for this model")));
        let allowed: &[&str] = match model {
            ModelName::Sep | ModelName::Sip => &["alpha", "rho", "lambda"],
            ModelName::Irw => &["c", "rho", "lambda"],
            ModelName::RateFamily => &["c", "d", "rho", "lambda"],
            ModelName::Gl => &["phi"],
            ModelName::Bep => &["alpha", "T", "bep-boundary"],
            ModelName::Piles => &["alpha", "beta"],
        };
        let given = [
            ("alpha", self.alpha.is_some()),
            ("c", self.c.is_some()),
            ("d", self.d.is_some()),
            ("rho", self.rho_minus.is_some() || self.rho_plus.is_some()),
            ("lambda", self.lambda_minus.is_some() || self.lambda_plus.is_some()),
            ("phi", self.phi_minus.is_some() || self.phi_plus.is_some()),
            ("T", self.t_minus.is_some() || self.t_plus.is_some()),
            ("beta", self.beta_minus.is_some() || self.beta_plus.is_some()),
            ("bep-boundary", self.bep_boundary.is_some()),
        ];
        if let Some((f, _)) = given.iter().find(|(f, g)| *g && !allowed.contains(f)) {
            return Err(usage(format!("--{f}… does not apply to this model")));
        }
        let lm = self.lambda_minus.unwrap_or(1.0);
        let lp = self.lambda_plus.unwrap_or(1.0);
        let rho = || -> Result<(f64, f64)> {
            Ok((self.rho_minus.unwrap_or(DEFAULT_LEFT), self.rho_plus.unwrap_or(DEFAULT_RIGHT)))
        };
        let alpha = self.alpha.unwrap_or(1.0);
        let spec = match model {
            ModelName::Sep => {
                let a = alpha;
                if a.fract() != 0.0 || a < 1.0 {
                    return Err(Error::InvalidParameter("SEP alpha must be a positive integer".into()));
                }
                let (rm, rp) = rho()?;
                ModelSpec::sep(n, a as u32, rm, rp)?.with_lambdas(lm, lp)?
            }
            ModelName::Sip => {
                let (rm, rp) = rho()?;
                ModelSpec::sip(n, alpha, rm, rp)?.with_lambdas(lm, lp)?
            }
            ModelName::Irw => {
                let (rm, rp) = rho()?;
                ModelSpec::irw(n, self.c.unwrap_or(1.0), rm, rp)?.with_lambdas(lm, lp)?
            }
            ModelName::RateFamily => {
                let (rm, rp) = rho()?;
                ModelSpec::rate_family(n, req(self.c, "c")?, req(self.d, "d")?, rm, rp)?.with_lambdas(lm, lp)?
            }
            ModelName::Gl => ModelSpec::gl(n, self.phi_minus.unwrap_or(-1.0), self.phi_plus.unwrap_or(1.0))?,
            ModelName::Bep => {
                let b = match self.bep_boundary.unwrap_or(BoundaryName::Thermal) {
                    BoundaryName::Thermal => BepBoundary::Thermal,
                    BoundaryName::Literal => BepBoundary::Literal,
                    BoundaryName::Stated => BepBoundary::Stated,
                };
                ModelSpec::bep(n, alpha, self.t_minus.unwrap_or(1.0), self.t_plus.unwrap_or(2.0))?
                    .with_bep_boundary(b)?
            }
            ModelName::Piles => {
                let a = alpha;
                if a.fract() != 0.0 || a < 1.0 {
                    return Err(Error::InvalidParameter("piles alpha must be a positive integer".into()));
                }
                ModelSpec::piles(n, a as u32, self.beta_minus.unwrap_or(DEFAULT_LEFT), self.beta_plus.unwrap_or(DEFAULT_RIGHT))?
            }
        };
        Ok(spec)
    }
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Macroscopic time.
    #[arg(long)]
    pub t: Option<f64>,
    /// Print the closed-form stationary profile.
    #[arg(long, conflicts_with = "t")]
    pub stationary: bool,
    /// Initial profile: `flat:<v>`, `stationary`, or N+1 comma-separated values.
    #[arg(long, default_value = "flat:0")]
    pub init: String,
}

#[derive(Debug, Args)]
pub struct TimeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub t: f64,
    /// Initial density profile (as for `density`); the start is the
    /// model's product law with that mean, so φ starts at zero.
    #[arg(long, default_value = "flat:0")]
    pub init: String,
}

#[derive(Debug, Args)]
pub struct StationaryArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Print the closed form beside the solve.
    #[arg(long)]
    pub closed_form: bool,
}

#[derive(Debug, Args)]
pub struct OccupationArgs {
    #[arg(long = "N")]
    pub n: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub c: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub d: f64,
    #[arg(long = "lambda-", default_value_t = 1.0)]
    pub lambda_minus: f64,
    #[arg(long = "lambda+", default_value_t = 1.0)]
    pub lambda_plus: f64,
    #[arg(long)]
    pub closed_form: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Time step for diffusions (default 1e-2/N²).
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial family; defaults to the model's invariant family.
    #[arg(long, value_enum)]
    pub family: Option<FamilyName>,
    /// Initial mean profile (as for `density`); defaults to the stationary one.
    #[arg(long)]
    pub init: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyName {
    Binomial,
    NegativeBinomial,
    Poisson,
    Gamma,
    Gaussian,
    Deterministic,
}

impl From<FamilyName> for InitialFamily {
    fn from(f: FamilyName) -> Self {
        match f {
            FamilyName::Binomial => InitialFamily::Binomial,
            FamilyName::NegativeBinomial => InitialFamily::NegativeBinomial,
            FamilyName::Poisson => InitialFamily::Poisson,
            FamilyName::Gamma => InitialFamily::Gamma,
            FamilyName::Gaussian => InitialFamily::Gaussian,
            FamilyName::Deterministic => InitialFamily::Deterministic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum Suite {
    Closure,
    Duality,
    MaxPrinciple,
    ClosedForm,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Occupancy cap for truncated enumerations.
    #[arg(long, default_value_t = 8)]
    pub cap: u32,
    /// Dual-particle budget.
    #[arg(long, default_value_t = 2)]
    pub budget: u32,
    /// Comparison times for the closure suite.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.2,1.0")]
    pub times: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    /// Model flags; `--N` takes the list of sizes, e.g. 8,16,32,64,128.
    #[command(flatten)]
    pub model: ModelArgs,
    /// Use the stationary correlation (default when --t is absent).
    #[arg(long, conflicts_with = "t")]
    pub stationary: bool,
    /// Use φ at this time from a flat product start at the left reservoir value.
    #[arg(long)]
    pub t: Option<f64>,
    /// Also write the (N, max|φ|) table as CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}
