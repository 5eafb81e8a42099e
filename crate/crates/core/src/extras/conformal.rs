//! Conformal e-values by the ratio-to-mean construction
//! `f = (n + 1) A_test / sum_i A_i`, where `A_i` scores example `i` against
//! the bag of the other `n` examples. Averaging `f` over which position
//! holds the test point gives exactly one, which is the whole validity
//! argument under exchangeability.

use std::cmp::Ordering;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::error::{EvidenceError, Result};
use crate::scalar::Real;

/// An unordered multiset of examples. Scorers only ever see a bag, so they
/// are permutation-invariant by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Bag<T>(Vec<T>);

impl<T: Real> Bag<T> {
    pub fn new(mut items: Vec<T>) -> Result<Self> {
        if items.iter().any(|v| v.is_nan()) {
            return Err(EvidenceError::DomainError("NaN example".into()));
        }
        items.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        Ok(Self(items))
    }

    pub fn items(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub trait NonconformityScorer<T: Real>: Send + Sync + Debug {
    /// Nonnegative strangeness of `candidate` relative to `bag`.
    fn score(&self, bag: &Bag<T>, candidate: T) -> T;

    fn name(&self) -> &'static str;
}

/// `|z - mean(bag)|`; zero against an empty bag.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DistanceToMean;

impl<T: Real> NonconformityScorer<T> for DistanceToMean {
    fn score(&self, bag: &Bag<T>, candidate: T) -> T {
        if bag.is_empty() {
            return T::zero();
        }
        let mean = bag.items().iter().copied().sum::<T>()
            / T::from_usize(bag.len()).unwrap_or_else(T::one);
        (candidate - mean).abs()
    }

    fn name(&self) -> &'static str {
        "distance-to-mean"
    }
}

/// Distance to the nearest member of the bag; zero against an empty bag.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NearestNeighbor;

impl<T: Real> NonconformityScorer<T> for NearestNeighbor {
    fn score(&self, bag: &Bag<T>, candidate: T) -> T {
        bag.items()
            .iter()
            .map(|&b| (candidate - b).abs())
            .fold(None, |acc: Option<T>, d| Some(acc.map_or(d, |a| a.min(d))))
            .unwrap_or_else(T::zero)
    }

    fn name(&self) -> &'static str {
        "nearest-neighbor"
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConformalFlag {
    Ok,
    /// Every score was zero; the e-value is set to one.
    AllZeroScores,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalReport<T> {
    pub e_value: T,
    pub n: usize,
    pub flag: ConformalFlag,
}

/// Scores of every example against the bag of the others.
pub fn nonconformity_scores<T: Real>(
    scorer: &dyn NonconformityScorer<T>,
    examples: &[T],
) -> Result<Vec<T>> {
    (0..examples.len())
        .map(|i| {
            let others: Vec<T> = examples
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &v)| v)
                .collect();
            let a = scorer.score(&Bag::new(others)?, examples[i]);
            if a < T::zero() || a.is_nan() {
                return Err(EvidenceError::DomainError(format!("scorer returned {a}")));
            }
            Ok(a)
        })
        .collect()
}

fn ratio_to_mean<T: Real>(scores: &[T], test: usize) -> (T, ConformalFlag) {
    let total = scores.iter().copied().sum::<T>();
    if total == T::zero() {
        return (T::one(), ConformalFlag::AllZeroScores);
    }
    let m = T::from_usize(scores.len()).unwrap_or_else(T::nan);
    (m * scores[test] / total, ConformalFlag::Ok)
}

/// `(n + 1) A_{n+1} / sum_i A_i` with the test point in position `n + 1`.
pub fn conformal_e_value<T: Real>(
    scorer: &dyn NonconformityScorer<T>,
    calibration: &[T],
    test: T,
) -> Result<ConformalReport<T>> {
    if calibration.is_empty() {
        return Err(EvidenceError::EmptyCalibration);
    }
    let mut all = calibration.to_vec();
    all.push(test);
    let scores = nonconformity_scores(scorer, &all)?;
    let (e_value, flag) = ratio_to_mean(&scores, all.len() - 1);
    Ok(ConformalReport {
        e_value,
        n: calibration.len(),
        flag,
    })
}

/// Mean of the e-value over every choice of which example is the test
/// point, the rest forming the calibration set.
pub fn position_averaged_e_value<T: Real>(
    scorer: &dyn NonconformityScorer<T>,
    examples: &[T],
) -> Result<T> {
    if examples.len() < 2 {
        return Err(EvidenceError::EmptyCalibration);
    }
    let mut total = T::zero();
    for j in 0..examples.len() {
        let mut calibration = examples.to_vec();
        let test = calibration.remove(j);
        total = total + conformal_e_value(scorer, &calibration, test)?.e_value;
    }
    Ok(total / T::from_usize(examples.len()).unwrap_or_else(T::nan))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalSuiteReport {
    pub scorer: String,
    pub max_size: usize,
    pub levels: usize,
    pub bags_checked: usize,
    pub max_deviation: f64,
    pub pass: bool,
}

/// Every sequence over `{0, .., levels - 1}` of length `2..=max_size`:
/// the position-averaged e-value must equal one within `1e-12`.
pub fn conformal_exhaustive_suite(
    scorer: &dyn NonconformityScorer<f64>,
    max_size: usize,
    levels: usize,
) -> Result<ConformalSuiteReport> {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for size in 2..=max_size {
        let count = levels.pow(size as u32);
        for code in 0..count {
            let mut c = code;
            let xs: Vec<f64> = (0..size)
                .map(|_| {
                    let v = (c % levels) as f64;
                    c /= levels;
                    v
                })
                .collect();
            let avg = position_averaged_e_value(scorer, &xs)?;
            worst = worst.max((avg - 1.0).abs());
            checked += 1;
        }
    }
    Ok(ConformalSuiteReport {
        scorer: scorer.name().into(),
        max_size,
        levels,
        bags_checked: checked,
        max_deviation: worst,
        pass: worst <= 1e-12,
    })
}
