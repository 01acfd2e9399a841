//! Samplers for the Telecom marginal `Y(t)` and for the pre-limit
//! service-system workload.

mod marginal;
mod telecom;
mod workload;

pub use marginal::{log_cf, MarginalCdf};
pub use telecom::{
    centering, centering_bound, chernoff_bound, exp_moment_small, log_exp_moment_small, Residual, SplitConfig,
    TelecomSample, TelecomSimulator, DEFAULT_JUMP_BUDGET,
};
pub use workload::{ServiceSystemParams, WorkloadMethod, WorkloadSimulator};

use rand::Rng;
use rand_distr::{Distribution, Poisson};

/// Poisson draw, with rate 0 giving 0.
pub(crate) fn poisson<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    // Rates here stay far below the u64 range.
    Poisson::new(rate).expect("finite positive Poisson rate").sample(rng) as u64
}

/// Standard normal draw.
pub(crate) fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}
