use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use serde::{Serialize, Serializer};

use super::nml::{nml_prefix_marginal, nml_probability, MAX_HORIZON};
use crate::eprocess::{EvidenceProcess, Smoothing, Validity};
use crate::error::{EvidenceError, Result};
use crate::prob::{Alphabet, PredictiveKernel, Symbol};
use crate::scalar::{AsFraction, Field, Real};

/// Deepest family that will be tabulated (`|X|^depth` prefixes are stored).
pub const MAX_FAMILY_DEPTH: usize = MAX_HORIZON;

/// Code lengths on every prefix up to `max_depth`, stored as code weights
/// `exp(-l(prefix))` so that exact scalars can be used.
#[derive(Debug, Clone)]
pub struct CodeLengthFamily<F> {
    alphabet: Alphabet,
    max_depth: usize,
    weights: HashMap<Vec<Symbol>, F>,
    label: String,
}

impl<F: Field> CodeLengthFamily<F> {
    /// Tabulates `weight(prefix) = exp(-l(prefix))` for all prefixes of
    /// length `<= max_depth`. The empty prefix must have weight one.
    pub fn from_weights(
        label: impl Into<String>,
        alphabet: Alphabet,
        max_depth: usize,
        mut weight: impl FnMut(&[Symbol]) -> Result<F>,
    ) -> Result<Self> {
        check_depth(alphabet, max_depth)?;
        if weight(&[])? != F::one() {
            return Err(EvidenceError::DomainError(
                "code length of the empty prefix must be 0".into(),
            ));
        }
        let mut weights = HashMap::new();
        let mut frontier: Vec<Vec<Symbol>> = vec![Vec::new()];
        weights.insert(Vec::new(), F::one());
        for _ in 0..max_depth {
            let mut next = Vec::with_capacity(frontier.len() * alphabet.size());
            for h in &frontier {
                for x in alphabet.symbols() {
                    let mut hx = h.clone();
                    hx.push(x);
                    weights.insert(hx.clone(), weight(&hx)?);
                    next.push(hx);
                }
            }
            frontier = next;
        }
        Ok(Self {
            alphabet,
            max_depth,
            weights,
            label: label.into(),
        })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn weight(&self, prefix: &[Symbol]) -> Result<&F> {
        self.weights
            .get(prefix)
            .ok_or_else(|| EvidenceError::MissingPrefix(prefix.to_vec()))
    }

    /// `l(prefix)` in nats.
    pub fn length(&self, prefix: &[Symbol]) -> Result<f64> {
        Ok(-self.weight(prefix)?.to_f64().unwrap_or(f64::NAN).ln())
    }
}

impl CodeLengthFamily<f64> {
    /// Family from explicit code lengths in nats. Prefixes may be missing;
    /// consumers report [`EvidenceError::MissingPrefix`] when they need one.
    pub fn from_lengths(
        label: impl Into<String>,
        alphabet: Alphabet,
        max_depth: usize,
        lengths: HashMap<Vec<Symbol>, f64>,
    ) -> Result<Self> {
        match lengths.get(&Vec::new()) {
            Some(0.0) => {}
            Some(_) => {
                return Err(EvidenceError::DomainError(
                    "code length of the empty prefix must be 0".into(),
                ))
            }
            None => return Err(EvidenceError::MissingPrefix(Vec::new())),
        }
        for (prefix, l) in &lengths {
            if prefix.len() > max_depth || !(*l >= 0.0) {
                return Err(EvidenceError::DomainError(format!(
                    "bad entry {prefix:?} -> {l}"
                )));
            }
            for &x in prefix {
                alphabet.check(x)?;
            }
        }
        let weights = lengths.into_iter().map(|(p, l)| (p, (-l).exp())).collect();
        Ok(Self {
            alphabet,
            max_depth,
            weights,
            label: label.into(),
        })
    }
}

fn check_depth(alphabet: Alphabet, depth: usize) -> Result<()> {
    let entries = (alphabet.size() as f64).powi(depth as i32);
    if depth > MAX_FAMILY_DEPTH || entries > (1u64 << MAX_FAMILY_DEPTH) as f64 {
        return Err(EvidenceError::DepthTooLarge {
            depth,
            max: MAX_FAMILY_DEPTH,
        });
    }
    Ok(())
}

/// `l = -log Q` for the prequential smoothed Bernoulli measure `Q`.
pub fn prequential_family<F: Field>(
    smoothing: Smoothing,
    depth: usize,
) -> Result<CodeLengthFamily<F>> {
    let a = F::from_f64(smoothing.pseudo_count()).expect("pseudo-count representable");
    let two = F::one() + F::one();
    CodeLengthFamily::from_weights(smoothing.name(), Alphabet::BINARY, depth, |h| {
        let mut w = F::one();
        let mut ones = F::zero();
        let mut seen = F::zero();
        for &x in h {
            let denom = seen.clone() + two.clone() * a.clone();
            let q = if x == 1 {
                (ones.clone() + a.clone()) / denom
            } else {
                (seen.clone() - ones.clone() + a.clone()) / denom
            };
            w = w * q;
            ones = ones + F::from_usize(x).expect("symbol");
            seen = seen + F::one();
        }
        Ok(w)
    })
}

/// `l = -log Q` for an i.i.d. measure with per-symbol masses `probs`.
pub fn iid_family<F: Field>(probs: &[F], depth: usize) -> Result<CodeLengthFamily<F>> {
    let alphabet = Alphabet::new(probs.len())?;
    CodeLengthFamily::from_weights("iid", alphabet, depth, |h| {
        Ok(h.iter().fold(F::one(), |acc, &x| acc * probs[x].clone()))
    })
}

/// `l_t(x^t) = -log P_NML^(t)(x^t)`: the NML code re-normalized at every
/// horizon.
pub fn nml_sequence_family<F: Field>(depth: usize) -> Result<CodeLengthFamily<F>> {
    CodeLengthFamily::from_weights("nml-seq", Alphabet::BINARY, depth, nml_probability::<F>)
}

/// `l(x^t) = -log` of the horizon-`N` NML marginal, for `t <= N`.
pub fn nml_fixed_horizon_family<F: Field>(horizon: usize) -> Result<CodeLengthFamily<F>> {
    if horizon == 0 {
        return Err(EvidenceError::DomainError("horizon must be >= 1".into()));
    }
    CodeLengthFamily::from_weights(
        format!("nml-fixed({horizon})"),
        Alphabet::BINARY,
        horizon,
        |h| nml_prefix_marginal::<F>(horizon, h),
    )
}

fn ser_bigint<S: Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    let n: serde_json::Number = v.to_string().parse().map_err(serde::ser::Error::custom)?;
    n.serialize(s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiftabilityViolation {
    pub prefix: Vec<Symbol>,
    pub mass: f64,
    #[serde(serialize_with = "ser_bigint")]
    pub mass_numerator: BigInt,
    #[serde(serialize_with = "ser_bigint")]
    pub mass_denominator: BigInt,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiftabilityReport {
    pub family: String,
    pub depth: usize,
    pub pass: bool,
    pub max_mass: f64,
    pub worst_prefix: Vec<Symbol>,
    pub prefixes_checked: usize,
    pub violations: Vec<LiftabilityViolation>,
}

/// Checks `m(h) = sum_x exp(-l(h x) + l(h)) <= 1 + 1e-10` for every prefix
/// with `|h| < depth`. Masses are computed in the family's own scalar, so
/// an exact family yields exact violation fractions.
pub fn liftability_check<F: Field + AsFraction>(
    family: &CodeLengthFamily<F>,
    depth: usize,
) -> Result<LiftabilityReport> {
    check_depth(family.alphabet, depth)?;
    let limit = F::one() + F::from_f64(1e-10).expect("tolerance representable");
    let mut report = LiftabilityReport {
        family: family.label.clone(),
        depth,
        pass: true,
        max_mass: f64::NEG_INFINITY,
        worst_prefix: Vec::new(),
        prefixes_checked: 0,
        violations: Vec::new(),
    };
    let mut frontier: Vec<Vec<Symbol>> = vec![Vec::new()];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(frontier.len() * family.alphabet.size());
        for h in frontier {
            let parent = family.weight(&h)?.clone();
            let mut children = F::zero();
            for x in family.alphabet.symbols() {
                let mut hx = h.clone();
                hx.push(x);
                children = children + family.weight(&hx)?.clone();
                next.push(hx);
            }
            report.prefixes_checked += 1;
            let (mass, violated, fraction) = if parent == F::zero() {
                let infinite = children > F::zero();
                let num = children.as_fraction().map(|f| f.0).unwrap_or_default();
                let mass = if infinite { f64::INFINITY } else { 0.0 };
                (mass, infinite, (num, BigInt::from(0)))
            } else {
                let m = children / parent;
                let violated = m > limit;
                let fraction = m.as_fraction().unwrap_or_default();
                (m.to_f64().unwrap_or(f64::NAN), violated, fraction)
            };
            if mass > report.max_mass {
                report.max_mass = mass;
                report.worst_prefix = h.clone();
            }
            if violated {
                report.pass = false;
                report.violations.push(LiftabilityViolation {
                    prefix: h,
                    mass,
                    mass_numerator: fraction.0,
                    mass_denominator: fraction.1,
                });
            }
        }
        frontier = next;
    }
    if report.prefixes_checked == 0 {
        report.max_mass = 0.0;
    }
    Ok(report)
}

/// `E_t = exp(-l(x^t)) / P0(x^t)`. No validity is claimed.
#[derive(Debug, Clone)]
pub struct CodeEvidence<T: Real, F> {
    family: Arc<CodeLengthFamily<F>>,
    p0: Arc<dyn PredictiveKernel<T>>,
    history: Vec<Symbol>,
    log_null: T,
    log_e: T,
}

pub fn code_to_e<T: Real, F: Field>(
    family: Arc<CodeLengthFamily<F>>,
    p0: impl PredictiveKernel<T> + 'static,
) -> Result<CodeEvidence<T, F>> {
    family.alphabet.check_same(p0.alphabet())?;
    Ok(CodeEvidence {
        family,
        p0: Arc::new(p0),
        history: Vec::new(),
        log_null: T::zero(),
        log_e: T::zero(),
    })
}

impl<T: Real, F: Field> EvidenceProcess<T> for CodeEvidence<T, F> {
    fn observe(&mut self, x: Symbol) -> Result<T> {
        self.family.alphabet.check(x)?;
        let mut next = self.history.clone();
        next.push(x);
        let w = self.family.weight(&next)?.to_f64().unwrap_or(f64::NAN);
        let q0 = self.p0.prob(&self.history, x);
        if q0 == T::zero() {
            return Err(EvidenceError::AbsoluteContinuityViolation {
                step: next.len(),
                symbol: x,
            });
        }
        self.log_null = self.log_null + q0.ln();
        self.history = next;
        self.log_e = T::from_f64(w.ln()).unwrap_or_else(T::nan) - self.log_null;
        Ok(self.log_e)
    }

    fn log_evidence(&self) -> T {
        self.log_e
    }

    fn steps(&self) -> usize {
        self.history.len()
    }

    fn alphabet(&self) -> Alphabet {
        self.family.alphabet
    }

    fn validity(&self) -> Validity {
        Validity::Unchecked
    }

    fn describe(&self) -> String {
        format!("code({}, {})", self.family.label, self.p0.describe())
    }

    fn clone_box(&self) -> Box<dyn EvidenceProcess<T>> {
        Box::new(self.clone())
    }
}
