//! Poisson Telecom process toolkit.
//!
//! Closed-form intensity measures, the limiting stable law, simulators for
//! the infinite-source Poisson service system and for the Telecom limit, and
//! rare-event estimators for the tail `P(Y(t) ≥ ρ)` in every deviation zone.

// Quadrature tables keep their published digits; `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod lde;
pub mod measures;
pub mod quadrature;
pub mod simulator;
pub mod stable;
pub mod stats;
pub mod streams;
pub mod tabulated;

pub use distributions::{Atom, DurationLaw, RewardLaw};
pub use error::{Error, Result};
pub use measures::{
    kernel_ell, mu_ell_atom, mu_ell_density, mu_ell_tail, JumpSampler, NuMeasure, RewardMarginal, TailMeasure,
    TelecomParams,
};
pub use quadrature::{Estimate, Quadrature};
pub use stable::StableSpec;
pub use tabulated::TabulatedCdf;

/// Library version, recorded in run summaries.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
