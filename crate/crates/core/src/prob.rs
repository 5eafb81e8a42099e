//! Finite-alphabet probability primitives: distributions, predictive
//! kernels, divergences and the log score.
//!
//! Everything is carried in natural-log units. Symbols are indices
//! `0..alphabet.size()`; Bernoulli distributions put `p` on symbol `1`.

use std::fmt::Debug;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EvidenceError, Result};
use crate::rng::RngStream;
use crate::scalar::{lit, normalization_tol, xlogx_over, Real};

pub type Symbol = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet(usize);

impl Alphabet {
    pub const BINARY: Alphabet = Alphabet(2);

    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(EvidenceError::InvalidDistribution(format!(
                "alphabet needs at least 2 symbols, got {size}"
            )));
        }
        Ok(Alphabet(size))
    }

    pub fn size(self) -> usize {
        self.0
    }

    pub fn symbols(self) -> std::ops::Range<Symbol> {
        0..self.0
    }

    pub fn check(self, x: Symbol) -> Result<()> {
        if x < self.0 {
            Ok(())
        } else {
            Err(EvidenceError::SymbolOutOfRange {
                symbol: x,
                size: self.0,
            })
        }
    }

    pub(crate) fn check_same(self, other: Alphabet) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(EvidenceError::AlphabetMismatch {
                expected: self.0,
                actual: other.0,
            })
        }
    }
}

/// A probability vector over a finite alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<T> {
    probs: Vec<T>,
}

impl<T: Real> Distribution<T> {
    /// Validates and, when the total is within tolerance of one,
    /// renormalizes.
    pub fn new(probs: Vec<T>) -> Result<Self> {
        Alphabet::new(probs.len())?;
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < T::zero()) {
            return Err(EvidenceError::InvalidDistribution(format!(
                "entry {bad} is not a probability"
            )));
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > normalization_tol() {
            return Err(EvidenceError::InvalidDistribution(format!(
                "entries sum to {total}"
            )));
        }
        let probs = if total == T::one() {
            probs
        } else {
            probs.into_iter().map(|p| p / total).collect()
        };
        Ok(Self { probs })
    }

    /// `Bern(p)`: probability `p` on symbol 1.
    pub fn bernoulli(p: T) -> Result<Self> {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(EvidenceError::InvalidDistribution(format!(
                "Bernoulli parameter {p} outside [0, 1]"
            )));
        }
        Self::new(vec![T::one() - p, p])
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let n = alphabet.size();
        let p = T::one() / lit::<T>(n as f64);
        Self { probs: vec![p; n] }
    }

    pub fn point_mass(alphabet: Alphabet, x: Symbol) -> Result<Self> {
        alphabet.check(x)?;
        let mut probs = vec![T::zero(); alphabet.size()];
        probs[x] = T::one();
        Ok(Self { probs })
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet(self.probs.len())
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    /// Probability of `x`; zero outside the alphabet.
    pub fn prob(&self, x: Symbol) -> T {
        self.probs.get(x).copied().unwrap_or_else(T::zero)
    }

    /// Inverse-CDF draw from a uniform variate in `[0, 1)`.
    pub fn sample_from_uniform(&self, u: f64) -> Symbol {
        let mut acc = 0.0f64;
        let mut last = 0;
        for (x, p) in self.probs.iter().enumerate() {
            let p = p.to_f64().unwrap_or(0.0);
            if p > 0.0 {
                last = x;
            }
            acc += p;
            if u < acc {
                return x;
            }
        }
        last
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Symbol {
        self.sample_from_uniform(rng.random::<f64>())
    }

    /// Bernoulli parameter, when this is a binary distribution.
    pub fn bernoulli_parameter(&self) -> Option<T> {
        (self.probs.len() == 2).then(|| self.probs[1])
    }
}

impl<T: Real> std::fmt::Display for Distribution<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.bernoulli_parameter() {
            Some(p) => write!(f, "Bern({p})"),
            None => {
                write!(f, "Cat[")?;
                for (i, p) in self.probs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// One-step conditional sub-probability given the past.
///
/// Implementations receive only the history, never the symbol about to be
/// scored, so anything built on a kernel is predictable by construction.
pub trait PredictiveKernel<T: Real>: Send + Sync + Debug {
    fn alphabet(&self) -> Alphabet;

    /// Conditional masses for every symbol; entries sum to at most one.
    fn conditional(&self, history: &[Symbol]) -> Vec<T>;

    fn prob(&self, history: &[Symbol], x: Symbol) -> T {
        self.conditional(history)
            .get(x)
            .copied()
            .unwrap_or_else(T::zero)
    }

    fn mass(&self, history: &[Symbol]) -> T {
        self.conditional(history).into_iter().sum()
    }

    fn describe(&self) -> String;
}

/// An i.i.d. kernel: the same distribution at every step.
impl<T: Real> PredictiveKernel<T> for Distribution<T> {
    fn alphabet(&self) -> Alphabet {
        Distribution::alphabet(self)
    }

    fn conditional(&self, _history: &[Symbol]) -> Vec<T> {
        self.probs.clone()
    }

    fn prob(&self, _history: &[Symbol], x: Symbol) -> T {
        Distribution::prob(self, x)
    }

    fn mass(&self, _history: &[Symbol]) -> T {
        self.probs.iter().copied().sum()
    }

    fn describe(&self) -> String {
        self.to_string()
    }
}

/// `D(p || q)` in nats.
pub fn kl_divergence<T: Real>(p: &Distribution<T>, q: &Distribution<T>) -> Result<T> {
    p.alphabet().check_same(q.alphabet())?;
    let mut total = T::zero();
    for (x, (&pi, &qi)) in p.probs().iter().zip(q.probs()).enumerate() {
        if pi > T::zero() && qi == T::zero() {
            return Err(EvidenceError::AbsoluteContinuityViolation { step: 0, symbol: x });
        }
        total = total + xlogx_over(pi, qi);
    }
    // Rounding can leave a tiny negative total when p == q.
    Ok(total.max(T::zero()))
}

/// `-ln p(x)`; `+inf` when `p(x) = 0`.
pub fn log_score<T: Real>(p: &Distribution<T>, x: Symbol) -> T {
    -p.prob(x).ln()
}

/// One-step log likelihood ratio `ln num - ln den`.
///
/// Bit-identical to `log_score(den) - log_score(num)`.
#[inline]
pub(crate) fn log_ratio<T: Real>(num: T, den: T) -> T {
    num.ln() - den.ln()
}

/// `sum_t ln(p1(x_t) / p0(x_t))`, summed left to right.
pub fn weight_of_evidence<T: Real>(
    p1: &Distribution<T>,
    p0: &Distribution<T>,
    path: &[Symbol],
) -> Result<T> {
    p1.alphabet().check_same(p0.alphabet())?;
    let mut total = T::zero();
    for (step, &x) in path.iter().enumerate() {
        p0.alphabet().check(x)?;
        let q0 = p0.prob(x);
        if q0 == T::zero() {
            return Err(EvidenceError::AbsoluteContinuityViolation {
                step: step + 1,
                symbol: x,
            });
        }
        total = total + log_ratio(p1.prob(x), q0);
    }
    Ok(total)
}

/// A realized sequence together with what generated it.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePath<T> {
    pub symbols: Vec<Symbol>,
    pub seed: u64,
    pub stream_index: u64,
    pub generator: Distribution<T>,
}

impl<T: Real> SamplePath<T> {
    pub fn generate(generator: Distribution<T>, len: usize, stream: RngStream) -> Self {
        let mut rng = stream.rng();
        let symbols = (0..len).map(|_| generator.sample(&mut rng)).collect();
        Self {
            symbols,
            seed: stream.master_seed,
            stream_index: stream.stream_index,
            generator,
        }
    }

    pub fn regenerate(&self) -> Self {
        Self::generate(
            self.generator.clone(),
            self.symbols.len(),
            RngStream::new(self.seed, self.stream_index),
        )
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

impl<T> AsRef<[Symbol]> for SamplePath<T> {
    fn as_ref(&self) -> &[Symbol] {
        &self.symbols
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern(p: f64) -> Distribution<f64> {
        Distribution::bernoulli(p).unwrap()
    }

    #[test]
    fn kl_reference_values() {
        let v = kl_divergence(&bern(0.65), &bern(0.5)).unwrap();
        assert!((v - 0.0457).abs() < 1e-4, "{v}");
        assert_eq!(kl_divergence(&bern(0.3), &bern(0.3)).unwrap(), 0.0);
        let v = kl_divergence(&bern(0.55), &bern(0.8)).unwrap();
        assert!((v - 0.15884).abs() < 1e-4, "{v}");
        let delta = kl_divergence(&bern(0.55), &bern(0.5)).unwrap() - v;
        assert!((delta + 0.154).abs() < 1e-3, "{delta}");
    }

    #[test]
    fn kl_rejects_missing_support() {
        let err = kl_divergence(&bern(0.5), &bern(1.0)).unwrap_err();
        assert!(matches!(
            err,
            EvidenceError::AbsoluteContinuityViolation { symbol: 0, .. }
        ));
        // The reverse direction is fine: 0 log 0 = 0.
        assert!(kl_divergence(&bern(1.0), &bern(0.5)).unwrap() > 0.0);
    }

    #[test]
    fn kl_nonnegative_on_grid_and_zero_only_on_diagonal() {
        let grid: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
        for &a in &grid {
            for &b in &grid {
                let v = kl_divergence(&bern(a), &bern(b)).unwrap();
                if a == b {
                    assert_eq!(v, 0.0);
                } else {
                    assert!(v > 0.0, "kl({a},{b}) = {v}");
                }
            }
        }
    }

    #[test]
    fn log_score_values() {
        assert!((log_score(&bern(0.5), 1) - 2f64.ln()).abs() < 1e-15);
        assert!((log_score(&bern(0.65), 1) - 0.4308).abs() < 1e-4);
        let point = Distribution::<f64>::point_mass(Alphabet::BINARY, 1).unwrap();
        assert_eq!(log_score(&point, 1), 0.0);
        assert_eq!(log_score(&point, 0), f64::INFINITY);
    }

    #[test]
    fn weight_of_evidence_values() {
        let p1 = bern(0.65);
        let p0 = bern(0.5);
        assert_eq!(weight_of_evidence(&p0, &p0, &[1, 0, 0, 1]).unwrap(), 0.0);
        let w = weight_of_evidence(&p1, &p0, &[1]).unwrap();
        assert!((w - 0.26236).abs() < 1e-5);
        let w = weight_of_evidence(&p1, &p0, &[1, 0]).unwrap();
        assert!((w + 0.09431).abs() < 1e-5);
    }

    #[test]
    fn weight_of_evidence_is_score_difference() {
        let p1 = bern(0.65);
        let p0 = bern(0.5);
        let path = [1, 1, 0, 1, 0, 0, 1];
        let w = weight_of_evidence(&p1, &p0, &path).unwrap();
        let mut by_scores = 0.0;
        for &x in &path {
            by_scores += log_score(&p0, x) - log_score(&p1, x);
        }
        assert_eq!(w, by_scores);
    }

    #[test]
    fn weight_of_evidence_rejects_null_zero() {
        let err = weight_of_evidence(&bern(0.5), &bern(1.0), &[1, 0]).unwrap_err();
        assert_eq!(
            err,
            EvidenceError::AbsoluteContinuityViolation { step: 2, symbol: 0 }
        );
    }

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(vec![0.5f64]).is_err());
        assert!(Distribution::new(vec![0.5f64, 0.6]).is_err());
        assert!(Distribution::new(vec![-0.1f64, 1.1]).is_err());
        let d = Distribution::new(vec![0.5f64, 0.5 + 5e-13]).unwrap();
        let s: f64 = d.probs().iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
        assert!(Distribution::bernoulli(1.5f64).is_err());
    }

    #[test]
    fn sample_path_regenerates_bit_exactly() {
        let path = SamplePath::generate(bern(0.65), 500, RngStream::new(9, 4));
        assert_eq!(path.regenerate(), path);
        let ones = path.symbols.iter().filter(|&&x| x == 1).count();
        assert!(ones > 250 && ones < 400);
    }

    #[test]
    fn works_in_single_precision() {
        let p1 = Distribution::<f32>::bernoulli(0.65).unwrap();
        let p0 = Distribution::<f32>::bernoulli(0.5).unwrap();
        let v = kl_divergence(&p1, &p0).unwrap();
        assert!((v - 0.0457).abs() < 1e-4);
    }
}
