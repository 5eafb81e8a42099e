use std::sync::Arc;

use super::{EvidenceProcess, Validity};
use crate::error::{EvidenceError, Result};
use crate::prob::{log_ratio, Alphabet, PredictiveKernel, Symbol};
use crate::scalar::Real;

/// `E_t = prod_s p1(x_s | x^{s-1}) / p0(x_s | x^{s-1})`.
#[derive(Debug, Clone)]
pub struct LikelihoodRatio<T: Real> {
    p1: Arc<dyn PredictiveKernel<T>>,
    p0: Arc<dyn PredictiveKernel<T>>,
    history: Vec<Symbol>,
    log_e: T,
    validity: Validity,
}

/// Likelihood-ratio process of `p1` against the null `p0`, starting at `E_0 = 1`.
pub fn lr_process<T: Real>(
    p1: impl PredictiveKernel<T> + 'static,
    p0: impl PredictiveKernel<T> + 'static,
) -> Result<LikelihoodRatio<T>> {
    LikelihoodRatio::new(Arc::new(p1), Arc::new(p0))
}

impl<T: Real> LikelihoodRatio<T> {
    pub fn new(p1: Arc<dyn PredictiveKernel<T>>, p0: Arc<dyn PredictiveKernel<T>>) -> Result<Self> {
        p0.alphabet().check_same(p1.alphabet())?;
        Ok(Self {
            p1,
            p0,
            history: Vec::new(),
            log_e: T::zero(),
            validity: Validity::Guaranteed,
        })
    }

    pub fn history(&self) -> &[Symbol] {
        &self.history
    }

    pub fn numerator(&self) -> &Arc<dyn PredictiveKernel<T>> {
        &self.p1
    }

    pub fn null(&self) -> &Arc<dyn PredictiveKernel<T>> {
        &self.p0
    }
}

impl<T: Real> EvidenceProcess<T> for LikelihoodRatio<T> {
    fn observe(&mut self, x: Symbol) -> Result<T> {
        self.p0.alphabet().check(x)?;
        let q0 = self.p0.prob(&self.history, x);
        if q0 == T::zero() {
            return Err(EvidenceError::AbsoluteContinuityViolation {
                step: self.history.len() + 1,
                symbol: x,
            });
        }
        let q1 = self.p1.prob(&self.history, x);
        self.log_e = self.log_e + log_ratio(q1, q0);
        self.history.push(x);
        Ok(self.log_e)
    }

    fn log_evidence(&self) -> T {
        self.log_e
    }

    fn steps(&self) -> usize {
        self.history.len()
    }

    fn alphabet(&self) -> Alphabet {
        self.p0.alphabet()
    }

    fn validity(&self) -> Validity {
        self.validity
    }

    fn describe(&self) -> String {
        format!("lr({}, {})", self.p1.describe(), self.p0.describe())
    }

    fn clone_box(&self) -> Box<dyn EvidenceProcess<T>> {
        Box::new(self.clone())
    }
}
