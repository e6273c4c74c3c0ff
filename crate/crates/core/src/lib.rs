//! Two-point correlation functions of boundary-driven lattice gases and
//! diffusions, computed from their closed evolution equation, from the
//! absorbed two-particle walk behind it, from exact master equations on
//! truncated state spaces, and from Monte Carlo.
//!
//! ```
//! use corrwalk::{models::ModelSpec, walks::stationary_correlation_solve};
//!
//! let spec = ModelSpec::sep(4, 1, 0.0, 1.0).unwrap();
//! let phi = stationary_correlation_solve(&spec).unwrap();
//! assert!((phi.get(1, 2).unwrap() + 1.0 / 24.0).abs() < 1e-14);
//! ```

pub mod correlation;
pub mod density;
pub mod duality;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod models;
pub mod montecarlo;
pub mod oracle;
pub mod walks;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/walks.md")]
    mod walks {}
    #[doc = include_str!("../../../book/src/checks.md")]
    mod checks {}
    #[doc = include_str!("../../../book/src/montecarlo.md")]
    mod montecarlo {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
