use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{EvidenceProcess, LikelihoodRatio, Validity};
use crate::error::{EvidenceError, Result};
use crate::prob::{Alphabet, PredictiveKernel, Symbol};
use crate::scalar::{lit, Real};

/// Additive smoothing for the prequential Bernoulli estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    /// Krichevsky–Trofimov, pseudo-count 1/2.
    KrichevskyTrofimov,
    /// Laplace, pseudo-count 1.
    Laplace,
}

impl Smoothing {
    pub fn pseudo_count(self) -> f64 {
        match self {
            Smoothing::KrichevskyTrofimov => 0.5,
            Smoothing::Laplace => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Smoothing::KrichevskyTrofimov => "kt",
            Smoothing::Laplace => "laplace",
        }
    }
}

/// `q(1 | x^{t-1}) = (k + a) / (t - 1 + 2a)` where `k` counts ones so far.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrequentialKernel {
    pub smoothing: Smoothing,
}

impl<T: Real> PredictiveKernel<T> for PrequentialKernel {
    fn alphabet(&self) -> Alphabet {
        Alphabet::BINARY
    }

    fn conditional(&self, history: &[Symbol]) -> Vec<T> {
        let a: T = lit(self.smoothing.pseudo_count());
        let ones = history.iter().filter(|&&x| x == 1).count();
        let k: T = lit(ones as f64);
        let n: T = lit(history.len() as f64);
        let denom = n + a + a;
        let q1 = (k + a) / denom;
        let q0 = (n - k + a) / denom;
        vec![q0, q1]
    }

    fn describe(&self) -> String {
        self.smoothing.name().to_string()
    }
}

/// Prequential plug-in process against `p0`: a likelihood ratio whose
/// numerator is the smoothed running estimate.
pub fn prequential_process<T: Real>(
    smoothing: Smoothing,
    p0: impl PredictiveKernel<T> + 'static,
) -> Result<LikelihoodRatio<T>> {
    binary_only(p0.alphabet())?;
    LikelihoodRatio::new(Arc::new(PrequentialKernel { smoothing }), Arc::new(p0))
}

fn binary_only(alphabet: Alphabet) -> Result<()> {
    if alphabet == Alphabet::BINARY {
        Ok(())
    } else {
        Err(EvidenceError::AlphabetMismatch {
            expected: 2,
            actual: alphabet.size(),
        })
    }
}

/// `max_theta theta^k (1-theta)^{t-k} / P0(x^t)`, with `0^0 = 1`.
///
/// Not an E-process: it lacks the normalizer that would make the numerator
/// a probability, and exceeds one in expectation at `t = 1`. Kept as the
/// negative control.
#[derive(Debug, Clone)]
pub struct MlPlugin<T: Real> {
    p0: Arc<dyn PredictiveKernel<T>>,
    history: Vec<Symbol>,
    ones: usize,
    log_null: T,
    log_e: T,
}

pub fn ml_plugin_process<T: Real>(p0: impl PredictiveKernel<T> + 'static) -> Result<MlPlugin<T>> {
    binary_only(p0.alphabet())?;
    Ok(MlPlugin {
        p0: Arc::new(p0),
        history: Vec::new(),
        ones: 0,
        log_null: T::zero(),
        log_e: T::zero(),
    })
}

/// `k ln(k/t) + (t-k) ln((t-k)/t)`, the maximized Bernoulli log-likelihood.
pub(crate) fn max_log_likelihood<T: Real>(ones: usize, t: usize) -> T {
    let term = |c: usize| -> T {
        if c == 0 {
            T::zero()
        } else {
            let c: T = lit(c as f64);
            c * (c / lit(t as f64)).ln()
        }
    };
    term(ones) + term(t - ones)
}

impl<T: Real> EvidenceProcess<T> for MlPlugin<T> {
    fn observe(&mut self, x: Symbol) -> Result<T> {
        Alphabet::BINARY.check(x)?;
        let q0 = self.p0.prob(&self.history, x);
        if q0 == T::zero() {
            return Err(EvidenceError::AbsoluteContinuityViolation {
                step: self.history.len() + 1,
                symbol: x,
            });
        }
        self.log_null = self.log_null + q0.ln();
        self.history.push(x);
        self.ones += x;
        self.log_e = max_log_likelihood::<T>(self.ones, self.history.len()) - self.log_null;
        Ok(self.log_e)
    }

    fn log_evidence(&self) -> T {
        self.log_e
    }

    fn steps(&self) -> usize {
        self.history.len()
    }

    fn alphabet(&self) -> Alphabet {
        Alphabet::BINARY
    }

    fn validity(&self) -> Validity {
        Validity::NotGuaranteed
    }

    fn describe(&self) -> String {
        format!("ml({})", self.p0.describe())
    }

    fn clone_box(&self) -> Box<dyn EvidenceProcess<T>> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Distribution;

    fn bern(p: f64) -> Distribution<f64> {
        Distribution::bernoulli(p).unwrap()
    }

    #[test]
    fn kt_conditionals() {
        let k = PrequentialKernel {
            smoothing: Smoothing::KrichevskyTrofimov,
        };
        let c: Vec<f64> = k.conditional(&[]);
        assert_eq!(c, vec![0.5, 0.5]);
        let c: Vec<f64> = k.conditional(&[1, 1]);
        assert!((c[1] - 5.0 / 6.0).abs() < 1e-15);
        assert!((c[0] + c[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn laplace_conditionals() {
        let k = PrequentialKernel {
            smoothing: Smoothing::Laplace,
        };
        let c: Vec<f64> = k.conditional(&[1, 1]);
        assert!((c[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn prequential_is_martingale_on_three_steps() {
        for smoothing in [Smoothing::KrichevskyTrofimov, Smoothing::Laplace] {
            let mut total = 0.0;
            for bits in 0..8u32 {
                let path: Vec<usize> = (0..3).map(|i| ((bits >> i) & 1) as usize).collect();
                let mut e = prequential_process(smoothing, bern(0.5)).unwrap();
                e.observe_all(&path).unwrap();
                total += 0.125 * e.evidence();
            }
            assert!((total - 1.0).abs() < 1e-12, "{smoothing:?}: {total}");
        }
    }

    #[test]
    fn ml_plugin_values() {
        let mut e = ml_plugin_process(bern(0.5)).unwrap();
        e.observe(1).unwrap();
        assert!((e.evidence() - 2.0).abs() < 1e-15);
        e.observe(0).unwrap();
        assert!((e.evidence() - 1.0).abs() < 1e-15);
        let mut e = ml_plugin_process(bern(0.5)).unwrap();
        e.observe(0).unwrap();
        assert!((e.evidence() - 2.0).abs() < 1e-15);
        assert_eq!(e.validity(), Validity::NotGuaranteed);
    }

    #[test]
    fn ml_plugin_one_step_mean_is_two() {
        let mean: f64 = (0..2)
            .map(|x| {
                let mut e = ml_plugin_process(bern(0.5)).unwrap();
                e.observe(x).unwrap();
                0.5 * e.evidence()
            })
            .sum();
        assert!((mean - 2.0).abs() < 1e-15);
    }

    #[test]
    fn binary_only() {
        let tri = Distribution::<f64>::uniform(Alphabet::new(3).unwrap());
        assert!(prequential_process(Smoothing::Laplace, tri.clone()).is_err());
        assert!(ml_plugin_process(tri).is_err());
    }
}
