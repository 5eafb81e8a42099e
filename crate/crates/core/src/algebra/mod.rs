//! Closure operations on evidence processes, the operations that leave the
//! class, and an exhaustive checker that tells them apart on small trees.

mod combinators;
mod expr;
mod rules;
mod validity;

pub use combinators::{
    bayes_mix, convex_mix, pointwise_max, scale, stitch, stitch_shared, stop, stop_shared,
    Combinator, ConvexMix, PointwiseMax, Scaled, Stitched, Stopped,
};
pub use expr::parse_process;
pub use rules::{AtStep, EvidenceAtLeast, Never, Predicate, SharedRule, StoppingRule};
pub use validity::{validity_check, ville_frequency, ValidityReport, VilleRow, MAX_CHECK_DEPTH};
