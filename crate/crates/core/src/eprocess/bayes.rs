use super::{EvidenceProcess, Validity};
use crate::error::{EvidenceError, Result};
use crate::prob::{log_ratio, Alphabet, Distribution, PredictiveKernel, Symbol};
use crate::scalar::{log_sum_exp, normalization_tol, Real};

/// A prior with finitely many i.i.d. atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePrior<T: Real> {
    atoms: Vec<(Distribution<T>, T)>,
}

impl<T: Real> DiscretePrior<T> {
    pub fn new(atoms: Vec<(Distribution<T>, T)>) -> Result<Self> {
        let Some((first, _)) = atoms.first() else {
            return Err(EvidenceError::InvalidDistribution(
                "prior needs at least one atom".into(),
            ));
        };
        let alphabet = first.alphabet();
        for (d, w) in &atoms {
            alphabet.check_same(d.alphabet())?;
            if !(w.is_finite() && *w >= T::zero()) {
                return Err(EvidenceError::WeightViolation {
                    total: w.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        let total: T = atoms.iter().map(|(_, w)| *w).sum();
        if (total - T::one()).abs() > normalization_tol() {
            return Err(EvidenceError::WeightViolation {
                total: total.to_f64().unwrap_or(f64::NAN),
            });
        }
        let atoms = if total == T::one() {
            atoms
        } else {
            atoms.into_iter().map(|(d, w)| (d, w / total)).collect()
        };
        Ok(Self { atoms })
    }

    pub fn point(dist: Distribution<T>) -> Self {
        Self {
            atoms: vec![(dist, T::one())],
        }
    }

    pub fn uniform(dists: Vec<Distribution<T>>) -> Result<Self> {
        let w = T::one() / T::from_usize(dists.len().max(1)).unwrap_or_else(T::one);
        Self::new(dists.into_iter().map(|d| (d, w)).collect())
    }

    pub fn atoms(&self) -> &[(Distribution<T>, T)] {
        &self.atoms
    }

    pub fn alphabet(&self) -> Alphabet {
        self.atoms[0].0.alphabet()
    }

    pub fn is_point(&self) -> bool {
        self.atoms.len() == 1
    }

    fn log_weights(&self) -> Vec<T> {
        self.atoms.iter().map(|(_, w)| w.ln()).collect()
    }

    fn describe(&self) -> String {
        let parts: Vec<String> = self.atoms.iter().map(|(d, w)| format!("{w}:{d}")).collect();
        format!("{{{}}}", parts.join(", "))
    }
}

/// Bayes predictive kernel of a discrete prior: the posterior-weighted
/// mixture of atoms given the history.
#[derive(Debug, Clone)]
pub struct MixtureKernel<T: Real> {
    prior: DiscretePrior<T>,
}

impl<T: Real> MixtureKernel<T> {
    pub fn new(prior: DiscretePrior<T>) -> Self {
        Self { prior }
    }
}

impl<T: Real> PredictiveKernel<T> for MixtureKernel<T> {
    fn alphabet(&self) -> Alphabet {
        self.prior.alphabet()
    }

    fn conditional(&self, history: &[Symbol]) -> Vec<T> {
        let log_post: Vec<T> = self
            .prior
            .atoms
            .iter()
            .map(|(d, w)| history.iter().fold(w.ln(), |acc, &x| acc + d.prob(x).ln()))
            .collect();
        let norm = log_sum_exp(&log_post);
        self.alphabet()
            .symbols()
            .map(|x| {
                self.prior
                    .atoms
                    .iter()
                    .zip(&log_post)
                    .map(|((d, _), &lp)| (lp - norm).exp() * d.prob(x))
                    .sum()
            })
            .collect()
    }

    fn describe(&self) -> String {
        format!("mixture{}", self.prior.describe())
    }
}

/// `M1(x^n) / M0(x^n)` with `M_j(x^n) = sum_k w_k prod_t P_k(x_t)`.
///
/// Per-atom cumulative log-likelihoods are combined by log-sum-exp after
/// every step; atoms are never pruned.
#[derive(Debug, Clone)]
pub struct BayesFactor<T: Real> {
    prior1: DiscretePrior<T>,
    prior0: DiscretePrior<T>,
    log_joint1: Vec<T>,
    log_joint0: Vec<T>,
    log_e: T,
    steps: usize,
}

pub fn bayes_factor_process<T: Real>(
    prior1: DiscretePrior<T>,
    prior0: DiscretePrior<T>,
) -> Result<BayesFactor<T>> {
    prior0.alphabet().check_same(prior1.alphabet())?;
    let log_joint1 = prior1.log_weights();
    let log_joint0 = prior0.log_weights();
    Ok(BayesFactor {
        prior1,
        prior0,
        log_joint1,
        log_joint0,
        log_e: T::zero(),
        steps: 0,
    })
}

impl<T: Real> BayesFactor<T> {
    pub fn prior1(&self) -> &DiscretePrior<T> {
        &self.prior1
    }

    pub fn prior0(&self) -> &DiscretePrior<T> {
        &self.prior0
    }
}

impl<T: Real> EvidenceProcess<T> for BayesFactor<T> {
    fn observe(&mut self, x: Symbol) -> Result<T> {
        self.prior0.alphabet().check(x)?;
        let step = self.steps + 1;
        // Degenerate priors: follow the likelihood-ratio recursion exactly.
        if self.prior1.is_point() && self.prior0.is_point() {
            let q0 = self.prior0.atoms[0].0.prob(x);
            if q0 == T::zero() {
                return Err(EvidenceError::AbsoluteContinuityViolation { step, symbol: x });
            }
            self.log_e = self.log_e + log_ratio(self.prior1.atoms[0].0.prob(x), q0);
            self.steps = step;
            return Ok(self.log_e);
        }
        let next0: Vec<T> = self
            .log_joint0
            .iter()
            .zip(&self.prior0.atoms)
            .map(|(&l, (d, _))| l + d.prob(x).ln())
            .collect();
        let log_m0 = log_sum_exp(&next0);
        if log_m0 == T::neg_infinity() {
            return Err(EvidenceError::AbsoluteContinuityViolation { step, symbol: x });
        }
        for (l, (d, _)) in self.log_joint1.iter_mut().zip(&self.prior1.atoms) {
            *l = *l + d.prob(x).ln();
        }
        self.log_joint0 = next0;
        self.log_e = log_sum_exp(&self.log_joint1) - log_m0;
        self.steps = step;
        Ok(self.log_e)
    }

    fn log_evidence(&self) -> T {
        self.log_e
    }

    fn steps(&self) -> usize {
        self.steps
    }

    fn alphabet(&self) -> Alphabet {
        self.prior0.alphabet()
    }

    fn validity(&self) -> Validity {
        Validity::Guaranteed
    }

    fn describe(&self) -> String {
        format!("bf({}, {})", self.prior1.describe(), self.prior0.describe())
    }

    fn clone_box(&self) -> Box<dyn EvidenceProcess<T>> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eprocess::lr_process;

    fn bern(p: f64) -> Distribution<f64> {
        Distribution::bernoulli(p).unwrap()
    }

    fn two_point_prior() -> DiscretePrior<f64> {
        DiscretePrior::uniform(vec![bern(0.3), bern(0.7)]).unwrap()
    }

    #[test]
    fn point_priors_reduce_to_lr_bitwise() {
        let path = [1, 0, 1, 1, 0, 0, 0, 1, 1, 1];
        let mut bf = bayes_factor_process(
            DiscretePrior::point(bern(0.65)),
            DiscretePrior::point(bern(0.5)),
        )
        .unwrap();
        let mut lr = lr_process(bern(0.65), bern(0.5)).unwrap();
        for &x in &path {
            assert_eq!(bf.observe(x).unwrap(), lr.observe(x).unwrap());
        }
    }

    #[test]
    fn two_step_hand_value() {
        let mut bf =
            bayes_factor_process(two_point_prior(), DiscretePrior::point(bern(0.5))).unwrap();
        bf.observe_all(&[1, 1]).unwrap();
        assert!((bf.evidence() - 1.16).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_mean_under_null_mixture_is_one() {
        let null = bern(0.5);
        let mut total = 0.0;
        for bits in 0..8u32 {
            let path: Vec<usize> = (0..3).map(|i| ((bits >> i) & 1) as usize).collect();
            let mut bf =
                bayes_factor_process(two_point_prior(), DiscretePrior::point(null.clone()))
                    .unwrap();
            bf.observe_all(&path).unwrap();
            let p0: f64 = path.iter().map(|&x| null.prob(x)).product();
            total += p0 * bf.evidence();
        }
        assert!((total - 1.0).abs() < 1e-12, "{total}");
    }

    #[test]
    fn mixture_kernel_is_bayes_predictive() {
        let k = MixtureKernel::new(two_point_prior());
        let c = k.conditional(&[]);
        assert!((c[1] - 0.5).abs() < 1e-15);
        // After one head the posterior is (0.3, 0.7); predictive 0.09+0.49 = 0.58.
        let c = k.conditional(&[1]);
        assert!((c[1] - 0.58).abs() < 1e-12);
        assert!((k.mass(&[1, 0, 1]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn composite_null_is_supported() {
        let prior0 = DiscretePrior::uniform(vec![bern(0.4), bern(0.5)]).unwrap();
        let null = MixtureKernel::new(prior0.clone());
        let mut total = 0.0;
        for bits in 0..16u32 {
            let path: Vec<usize> = (0..4).map(|i| ((bits >> i) & 1) as usize).collect();
            let mut bf = bayes_factor_process(two_point_prior(), prior0.clone()).unwrap();
            bf.observe_all(&path).unwrap();
            let mut m0 = 1.0;
            for t in 0..path.len() {
                m0 *= null.prob(&path[..t], path[t]);
            }
            total += m0 * bf.evidence();
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_priors() {
        assert!(DiscretePrior::<f64>::new(vec![]).is_err());
        assert!(DiscretePrior::new(vec![(bern(0.3), 0.7), (bern(0.6), 0.7)]).is_err());
        assert!(DiscretePrior::new(vec![(bern(0.3), -0.5), (bern(0.6), 1.5)]).is_err());
    }

    #[test]
    fn null_support_violation() {
        let mut bf =
            bayes_factor_process(two_point_prior(), DiscretePrior::point(bern(1.0))).unwrap();
        bf.observe(1).unwrap();
        assert!(matches!(
            bf.observe(0),
            Err(EvidenceError::AbsoluteContinuityViolation { step: 2, .. })
        ));
    }
}
