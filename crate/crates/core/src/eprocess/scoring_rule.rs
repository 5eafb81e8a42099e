use super::{EvidenceProcess, Validity};
use crate::error::{EvidenceError, Result};
use crate::prob::{Alphabet, Distribution, Symbol};
use crate::scalar::Real;
use crate::scoring::ScoringRule;

/// `E_t = prod_s exp(S(p0, x_s) - S(p1, x_s))` for i.i.d. forecasts.
#[derive(Debug, Clone)]
pub struct ScoringRuleProcess<T: Real> {
    rule: ScoringRule,
    p1: Distribution<T>,
    p0: Distribution<T>,
    log_e: T,
    steps: usize,
}

pub fn scoring_rule_process<T: Real>(
    rule: ScoringRule,
    p1: Distribution<T>,
    p0: Distribution<T>,
) -> Result<ScoringRuleProcess<T>> {
    p0.alphabet().check_same(p1.alphabet())?;
    Ok(ScoringRuleProcess {
        rule,
        p1,
        p0,
        log_e: T::zero(),
        steps: 0,
    })
}

impl<T: Real> ScoringRuleProcess<T> {
    pub fn rule(&self) -> ScoringRule {
        self.rule
    }
}

impl<T: Real> EvidenceProcess<T> for ScoringRuleProcess<T> {
    fn observe(&mut self, x: Symbol) -> Result<T> {
        self.p0.alphabet().check(x)?;
        // An infinite null log score has no finite difference to take.
        if self.rule == ScoringRule::Log && self.p0.prob(x) == T::zero() {
            return Err(EvidenceError::AbsoluteContinuityViolation {
                step: self.steps + 1,
                symbol: x,
            });
        }
        self.log_e = self.log_e + (self.rule.score(&self.p0, x) - self.rule.score(&self.p1, x));
        self.steps += 1;
        Ok(self.log_e)
    }

    fn log_evidence(&self) -> T {
        self.log_e
    }

    fn steps(&self) -> usize {
        self.steps
    }

    fn alphabet(&self) -> Alphabet {
        self.p0.alphabet()
    }

    fn validity(&self) -> Validity {
        match self.rule {
            ScoringRule::Log => Validity::Guaranteed,
            ScoringRule::Brier => Validity::Unchecked,
        }
    }

    fn describe(&self) -> String {
        format!("{}({}, {})", self.rule.name(), self.p1, self.p0)
    }

    fn clone_box(&self) -> Box<dyn EvidenceProcess<T>> {
        Box::new(self.clone())
    }
}
