//! Small-wavenumber expansion of the 1D Schrödinger / Fokker-Planck Green
//! function, with an independent ODE oracle for validation.

pub mod assembler;
pub mod brackets;
pub mod coeffgen;
pub mod error;
pub mod laurent;
pub mod ode;
pub mod oracle;
pub mod potential;

pub use assembler::{
    closed_form_g, generic_expansion, green_series, log_form, log_form_value, pole_resummed,
    q_values, s_series, Diagnostics, ExpansionResult, Route,
};
pub use brackets::{eval_bracket, eval_bracket_with_error, BracketKind, BracketSpec, QuadratureConfig};
pub use coeffgen::{gamma_series, Family, Side, TermTable};
pub use error::{Error, Result};
pub use laurent::{Branch, LaurentSeries};
pub use potential::{
    catalog, classify_case, max_valid_order, CaseTag, Classification, Decay, Discontinuity,
    DiscontinuityKind, EndpointClass, EndpointKind, PotentialModel, ValidOrder, CATALOG,
};
pub use oracle::{
    green_exact, green_exact_detailed, remainder_scaling_fit, zero_energy_modes, GreenDetail,
    GreenSample, ScalingFit, ScalingPoint, SolverConfig,
};
