//! Codes and the E-processes they induce.
//!
//! A code-length function `l` converts to `E_t = exp(-l(x^t)) / P0(x^t)`.
//! That process is valid exactly when the induced one-step factors
//! `exp(-l(h x) + l(h))` form a sub-probability kernel, which is what
//! [`liftability_check`] enumerates. Prequential codes satisfy it with
//! equality; the NML code re-normalized at each horizon does not.

mod family;
mod nml;

pub use family::{
    code_to_e, iid_family, liftability_check, nml_fixed_horizon_family, nml_sequence_family,
    prequential_family, CodeEvidence, CodeLengthFamily, LiftabilityReport, LiftabilityViolation,
    MAX_FAMILY_DEPTH,
};
pub use nml::{
    binomial_row, max_likelihood, nml_horizon_conditional, nml_horizon_conditional_exact,
    nml_normalizer, nml_prefix_marginal, nml_probability, MAX_HORIZON, MAX_NORMALIZER_N,
};
