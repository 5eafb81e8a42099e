//! The Donsker-Varadhan bridge between mixture evidence and PAC-Bayes.
//!
//! With `L(theta) = ln(p_theta(x^n) / p0(x^n))` and mixture evidence
//! `E^pi = sum pi(theta) exp(L(theta))`, every posterior `rho` satisfies
//! `ln E^pi >= sum rho L - KL(rho || pi)`, with equality at the Gibbs
//! posterior `rho ~ pi exp(L)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EvidenceError, Result};
use crate::prob::{Distribution, Symbol};
use crate::rng::RngStream;
use crate::scalar::{log_sum_exp, normalization_tol, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct PacBayesInstance<T> {
    theta_grid: Vec<Distribution<T>>,
    prior: Vec<T>,
    null: Distribution<T>,
    path: Vec<Symbol>,
}

fn check_weights<T: Real>(w: &[T], len: usize) -> Result<()> {
    let total = w.iter().copied().sum::<T>();
    if w.len() != len
        || w.iter().any(|v| *v < T::zero() || v.is_nan())
        || (total - T::one()).abs() > normalization_tol::<T>()
    {
        return Err(EvidenceError::WeightViolation {
            total: total.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

impl<T: Real> PacBayesInstance<T> {
    pub fn new(
        theta_grid: Vec<Distribution<T>>,
        prior: Vec<T>,
        null: Distribution<T>,
        path: Vec<Symbol>,
    ) -> Result<Self> {
        check_weights(&prior, theta_grid.len())?;
        if theta_grid.is_empty() {
            return Err(EvidenceError::DomainError("empty parameter grid".into()));
        }
        for d in &theta_grid {
            d.alphabet().check_same(null.alphabet())?;
        }
        for (t, &x) in path.iter().enumerate() {
            null.alphabet().check(x)?;
            if null.prob(x) == T::zero() {
                return Err(EvidenceError::AbsoluteContinuityViolation {
                    step: t + 1,
                    symbol: x,
                });
            }
        }
        Ok(Self {
            theta_grid,
            prior,
            null,
            path,
        })
    }

    pub fn theta_grid(&self) -> &[Distribution<T>] {
        &self.theta_grid
    }

    pub fn prior(&self) -> &[T] {
        &self.prior
    }

    pub fn path(&self) -> &[Symbol] {
        &self.path
    }

    /// `L(theta)` for every grid point.
    pub fn log_ratios(&self) -> Vec<T> {
        self.theta_grid
            .iter()
            .map(|d| {
                self.path
                    .iter()
                    .map(|&x| d.prob(x).ln() - self.null.prob(x).ln())
                    .fold(T::zero(), |a, b| a + b)
            })
            .collect()
    }

    /// `ln E^pi`.
    pub fn log_mixture_evidence(&self) -> T {
        let terms: Vec<T> = self
            .prior
            .iter()
            .zip(self.log_ratios())
            .map(|(&w, l)| {
                if w == T::zero() {
                    T::neg_infinity()
                } else {
                    w.ln() + l
                }
            })
            .collect();
        log_sum_exp(&terms)
    }
}

/// `KL(rho || pi)`; infinite if `rho` puts mass where `pi` does not.
pub fn kl_weights<T: Real>(rho: &[T], pi: &[T]) -> T {
    rho.iter()
        .zip(pi)
        .filter(|(r, _)| **r > T::zero())
        .map(|(&r, &p)| {
            if p == T::zero() {
                T::infinity()
            } else {
                r * (r.ln() - p.ln())
            }
        })
        .fold(T::zero(), |a, b| a + b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PacBayesReport<T> {
    pub lhs: T,
    pub rhs: T,
    pub gap: T,
    pub kl: T,
}

/// `lhs = ln E^pi`, `rhs = sum rho L - KL(rho || pi)`, `gap = lhs - rhs`.
pub fn pac_bayes_check<T: Real>(
    inst: &PacBayesInstance<T>,
    posterior: &[T],
) -> Result<PacBayesReport<T>> {
    check_weights(posterior, inst.theta_grid.len())?;
    let lhs = inst.log_mixture_evidence();
    let kl = kl_weights(posterior, &inst.prior);
    let fit = posterior
        .iter()
        .zip(inst.log_ratios())
        .filter(|(r, _)| **r > T::zero())
        .map(|(&r, l)| r * l)
        .fold(T::zero(), |a, b| a + b);
    let rhs = fit - kl;
    Ok(PacBayesReport {
        lhs,
        rhs,
        gap: lhs - rhs,
        kl,
    })
}

/// Deterministic posterior-selection rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosteriorRule {
    Prior,
    /// `rho ~ pi exp(L)`, the maximizer of the right-hand side.
    Gibbs,
    /// Point mass on the first grid point maximizing `L`.
    MaxLikelihood,
}

impl PosteriorRule {
    pub const ALL: [PosteriorRule; 3] = [
        PosteriorRule::Prior,
        PosteriorRule::Gibbs,
        PosteriorRule::MaxLikelihood,
    ];

    pub fn posterior<T: Real>(self, inst: &PacBayesInstance<T>) -> Vec<T> {
        let l = inst.log_ratios();
        match self {
            PosteriorRule::Prior => inst.prior.clone(),
            PosteriorRule::Gibbs => {
                let lhs = inst.log_mixture_evidence();
                inst.prior
                    .iter()
                    .zip(&l)
                    .map(|(&w, &v)| {
                        if w == T::zero() {
                            T::zero()
                        } else {
                            (w.ln() + v - lhs).exp()
                        }
                    })
                    .collect()
            }
            PosteriorRule::MaxLikelihood => {
                let mut best = 0;
                for (i, v) in l.iter().enumerate() {
                    if *v > l[best] {
                        best = i;
                    }
                }
                (0..l.len())
                    .map(|i| if i == best { T::one() } else { T::zero() })
                    .collect()
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PosteriorRule::Prior => "prior",
            PosteriorRule::Gibbs => "gibbs",
            PosteriorRule::MaxLikelihood => "max_likelihood",
        }
    }
}

/// `E_{P0}[exp(rhs)]` over all paths of length `n`, by enumeration.
pub fn expected_exp_rhs(
    theta_grid: &[Distribution<f64>],
    prior: &[f64],
    null: &Distribution<f64>,
    rule: PosteriorRule,
    n: usize,
) -> Result<f64> {
    let k = null.alphabet().size();
    let count = k
        .checked_pow(n as u32)
        .filter(|c| *c <= 1 << 20)
        .ok_or(EvidenceError::DepthTooLarge { depth: n, max: 20 })?;
    let mut total = 0.0;
    for code in 0..count {
        let mut c = code;
        let path: Vec<Symbol> = (0..n)
            .map(|_| {
                let x = c % k;
                c /= k;
                x
            })
            .collect();
        let p0: f64 = path.iter().map(|&x| null.prob(x)).product();
        if p0 == 0.0 {
            continue;
        }
        let inst = PacBayesInstance::new(theta_grid.to_vec(), prior.to_vec(), null.clone(), path)?;
        let rho = rule.posterior(&inst);
        total += p0 * pac_bayes_check(&inst, &rho)?.rhs.exp();
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PacBayesSuiteReport {
    pub instances: usize,
    pub path_length: usize,
    pub grid_size: usize,
    pub min_gap: f64,
    pub gap_pass: bool,
    /// `(rule, n, E[exp(rhs)])` for `n = 1..=max_enumeration_length`.
    pub enumeration: Vec<(PosteriorRule, usize, f64)>,
    pub max_expectation: f64,
    pub enumeration_pass: bool,
    pub pass: bool,
}

/// Random Bernoulli grid of `grid` points with a random prior; null
/// `Bern(1/2)`.
pub fn random_instance_parts<R: Rng + ?Sized>(
    rng: &mut R,
    grid: usize,
) -> Result<(Vec<Distribution<f64>>, Vec<f64>)> {
    let thetas = (0..grid)
        .map(|_| Distribution::bernoulli(0.05 + 0.9 * rng.random::<f64>()))
        .collect::<Result<Vec<_>>>()?;
    let raw: Vec<f64> = (0..grid).map(|_| 0.05 + rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    Ok((thetas, raw.into_iter().map(|w| w / s).collect()))
}

/// The DV gap on `instances` random instances (every posterior rule), and
/// the enumeration check of `E_{P0}[exp(rhs)] <= 1` up to `max_len`.
/// Instance `i` draws from stream `(seed, i)`.
pub fn pac_bayes_suite(
    seed: u64,
    instances: usize,
    path_length: usize,
    grid: usize,
    max_len: usize,
) -> Result<PacBayesSuiteReport> {
    let null = Distribution::bernoulli(0.5)?;
    let mut min_gap = f64::INFINITY;
    for i in 0..instances as u64 {
        let mut rng = RngStream::new(seed, i).rng();
        let (thetas, prior) = random_instance_parts(&mut rng, grid)?;
        let data = Distribution::bernoulli(rng.random::<f64>())?;
        let path: Vec<Symbol> = (0..path_length).map(|_| data.sample(&mut rng)).collect();
        let inst = PacBayesInstance::new(thetas, prior, null.clone(), path)?;
        for rule in PosteriorRule::ALL {
            let r = pac_bayes_check(&inst, &rule.posterior(&inst))?;
            min_gap = min_gap.min(r.gap);
        }
    }
    let mut rng = RngStream::new(seed, u64::MAX).rng();
    let (thetas, prior) = random_instance_parts(&mut rng, grid)?;
    let mut enumeration = Vec::new();
    for rule in PosteriorRule::ALL {
        for n in 1..=max_len {
            enumeration.push((rule, n, expected_exp_rhs(&thetas, &prior, &null, rule, n)?));
        }
    }
    let max_expectation = enumeration
        .iter()
        .map(|e| e.2)
        .fold(f64::NEG_INFINITY, f64::max);
    let gap_pass = min_gap >= -1e-10;
    let enumeration_pass = max_expectation <= 1.0 + 1e-10;
    Ok(PacBayesSuiteReport {
        instances,
        path_length,
        grid_size: grid,
        min_gap,
        gap_pass,
        enumeration,
        max_expectation,
        enumeration_pass,
        pass: gap_pass && enumeration_pass,
    })
}
