//! Large-deviation constants and tail estimators for `P(Y(t) ≥ ρ)`.

mod constants;
mod estimators;

pub use constants::{
    intermediate_constant_1, intermediate_constant_1_quadrature, intermediate_constant_2_uniform,
    intermediate_constant_n, moderate_asymptotic, required_sessions, ultra_asymptotic, ultra_constant,
    ConstantEstimate, SessionCount,
};
pub use estimators::{
    tail_estimate_conditional, tail_estimate_crude, ConditionalDiagnostics, ConditionalTerm, Method, TailEstimate,
};
