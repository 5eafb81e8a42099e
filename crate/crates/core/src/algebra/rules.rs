use std::fmt::Debug;
use std::sync::Arc;

use crate::prob::Symbol;
use crate::scalar::Real;

/// A predictable stopping rule.
///
/// Consulted before each observation with the history so far and the
/// log-evidence trajectory `ln E_0, ..., ln E_t`; it never sees the symbol
/// about to arrive.
pub trait StoppingRule<T: Real>: Send + Sync + Debug {
    fn fires(&self, history: &[Symbol], log_trajectory: &[T]) -> bool;

    fn describe(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Never;

impl<T: Real> StoppingRule<T> for Never {
    fn fires(&self, _history: &[Symbol], _log_trajectory: &[T]) -> bool {
        false
    }

    fn describe(&self) -> String {
        "never".into()
    }
}

/// Fires once `t` symbols have been seen (`t = 0` fires immediately).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AtStep(pub usize);

impl<T: Real> StoppingRule<T> for AtStep {
    fn fires(&self, history: &[Symbol], _log_trajectory: &[T]) -> bool {
        history.len() >= self.0
    }

    fn describe(&self) -> String {
        format!("t={}", self.0)
    }
}

/// Fires once the current evidence reaches `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvidenceAtLeast(pub f64);

impl<T: Real> StoppingRule<T> for EvidenceAtLeast {
    fn fires(&self, _history: &[Symbol], log_trajectory: &[T]) -> bool {
        log_trajectory
            .last()
            .and_then(|v| v.to_f64())
            .is_some_and(|v| v >= self.0.ln())
    }

    fn describe(&self) -> String {
        format!("e>={}", self.0)
    }
}

/// Arbitrary predicate over the past.
pub struct Predicate<F> {
    label: String,
    f: F,
}

impl<F> Predicate<F> {
    pub fn new(label: impl Into<String>, f: F) -> Self {
        Self {
            label: label.into(),
            f,
        }
    }
}

impl<F> Debug for Predicate<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Predicate")
            .field("label", &self.label)
            .finish()
    }
}

impl<T, F> StoppingRule<T> for Predicate<F>
where
    T: Real,
    F: Fn(&[Symbol], &[T]) -> bool + Send + Sync,
{
    fn fires(&self, history: &[Symbol], log_trajectory: &[T]) -> bool {
        (self.f)(history, log_trajectory)
    }

    fn describe(&self) -> String {
        self.label.clone()
    }
}

pub type SharedRule<T> = Arc<dyn StoppingRule<T>>;
