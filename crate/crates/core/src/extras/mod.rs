//! Conformal e-values and the PAC-Bayes bridge.

mod conformal;
mod pacbayes;

pub use conformal::{
    conformal_e_value, conformal_exhaustive_suite, nonconformity_scores, position_averaged_e_value,
    Bag, ConformalFlag, ConformalReport, ConformalSuiteReport, DistanceToMean, NearestNeighbor,
    NonconformityScorer,
};
pub use pacbayes::{
    expected_exp_rhs, kl_weights, pac_bayes_check, pac_bayes_suite, random_instance_parts,
    PacBayesInstance, PacBayesReport, PacBayesSuiteReport, PosteriorRule,
};
