//! Evidence processes.
//!
//! An evidence process is a nonnegative running product `E_t` fed one symbol
//! at a time. All state is kept as `ln E_t`; `exp` is applied only by
//! [`EvidenceProcess::evidence`].
//!
//! Constructors here cover the representation layer: likelihood ratios,
//! Bayes-factor mixtures, prequential plug-in codes, the (improper)
//! maximum-likelihood ratio, and scoring-rule-induced processes.

mod bayes;
mod lr;
mod plugin;
mod scoring_rule;

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::prob::{Alphabet, Symbol};
use crate::scalar::Real;

pub use bayes::{bayes_factor_process, BayesFactor, DiscretePrior, MixtureKernel};
pub use lr::{lr_process, LikelihoodRatio};
pub use plugin::{ml_plugin_process, prequential_process, MlPlugin, PrequentialKernel, Smoothing};
pub use scoring_rule::{scoring_rule_process, ScoringRuleProcess};

/// Whether a process is in the evidence class by construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    /// Known not to be a supermartingale under the null in general.
    NotGuaranteed,
    /// No structural guarantee; run the enumeration checker.
    Unchecked,
    /// A nonnegative supermartingale under the null by construction.
    Guaranteed,
}

impl Validity {
    /// Validity of a combination: the weakest of its parts.
    pub fn meet(self, other: Validity) -> Validity {
        self.min(other)
    }
}

pub trait EvidenceProcess<T: Real>: Send + Sync + Debug {
    /// Feeds the next symbol and returns the new `ln E_t`.
    fn observe(&mut self, x: Symbol) -> Result<T>;

    fn log_evidence(&self) -> T;

    /// Number of symbols observed so far.
    fn steps(&self) -> usize;

    fn alphabet(&self) -> Alphabet;

    fn validity(&self) -> Validity;

    fn describe(&self) -> String;

    fn clone_box(&self) -> Box<dyn EvidenceProcess<T>>;

    fn evidence(&self) -> T {
        self.log_evidence().exp()
    }

    fn observe_all(&mut self, xs: &[Symbol]) -> Result<T> {
        for &x in xs {
            self.observe(x)?;
        }
        Ok(self.log_evidence())
    }
}

impl<T: Real> Clone for Box<dyn EvidenceProcess<T>> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// Builds fresh processes; used by stitching and the validity checker.
pub trait ProcessFactory<T: Real>: Send + Sync + Debug {
    fn build(&self) -> Box<dyn EvidenceProcess<T>>;
}

/// A factory that clones a template process at step zero.
#[derive(Debug, Clone)]
pub struct Template<T: Real>(pub Box<dyn EvidenceProcess<T>>);

impl<T: Real> ProcessFactory<T> for Template<T> {
    fn build(&self) -> Box<dyn EvidenceProcess<T>> {
        self.0.clone_box()
    }
}
