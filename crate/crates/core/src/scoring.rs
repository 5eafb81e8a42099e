//! Proper scoring rules and the evidence they induce.
//!
//! A rule `S` induces the per-step factor `exp(S(p0, x) - S(p1, x))`. Under
//! the log score that factor is the likelihood ratio and has null mean one;
//! under the Brier score its null mean is strictly below one, so the induced
//! process decays geometrically.

use serde::{Deserialize, Serialize};

use crate::prob::{log_score, Distribution, Symbol};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringRule {
    Log,
    Brier,
}

impl ScoringRule {
    /// Loss of forecast `q` when `x` occurs, in nats for the log rule.
    pub fn score<T: Real>(self, q: &Distribution<T>, x: Symbol) -> T {
        match self {
            ScoringRule::Log => log_score(q, x),
            ScoringRule::Brier => brier(q, x),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScoringRule::Log => "log",
            ScoringRule::Brier => "brier",
        }
    }
}

/// `sum_j (q(j) - 1{x = j})^2`.
pub fn brier<T: Real>(q: &Distribution<T>, x: Symbol) -> T {
    q.probs()
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let d = if j == x { p - T::one() } else { p };
            d * d
        })
        .sum()
}

/// `E_{X ~ p}[S(q, X)]`.
pub fn expected_score<T: Real>(rule: ScoringRule, p: &Distribution<T>, q: &Distribution<T>) -> T {
    p.alphabet()
        .symbols()
        .filter(|&x| p.prob(x) > T::zero())
        .map(|x| p.prob(x) * rule.score(q, x))
        .sum()
}

/// `sum_x p0(x) exp(S(p0, x) - S(p1, x))` over the support of `p0`.
pub fn one_step_evidence_expectation<T: Real>(
    rule: ScoringRule,
    p1: &Distribution<T>,
    p0: &Distribution<T>,
) -> T {
    p0.alphabet()
        .symbols()
        .filter(|&x| p0.prob(x) > T::zero())
        .map(|x| p0.prob(x) * (rule.score(p0, x) - rule.score(p1, x)).exp())
        .sum()
}

/// `E_{P0}[E_n]` for `n = 1..=n_max` under i.i.d. scoring: the geometric
/// sequence `r, r^2, ...` with `r` the one-step expectation.
pub fn decay_curve<T: Real>(
    rule: ScoringRule,
    p1: &Distribution<T>,
    p0: &Distribution<T>,
    n_max: usize,
) -> Vec<T> {
    let r = one_step_evidence_expectation(rule, p1, p0);
    let mut out = Vec::with_capacity(n_max);
    let mut v = T::one();
    for _ in 0..n_max {
        v = v * r;
        out.push(v);
    }
    out
}

/// CSV row of a decay curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub n: usize,
    pub expected_evidence: f64,
}

pub fn decay_points<T: Real>(curve: &[T]) -> Vec<DecayPoint> {
    curve
        .iter()
        .enumerate()
        .map(|(i, v)| DecayPoint {
            n: i + 1,
            expected_evidence: v.to_f64().unwrap_or(f64::NAN),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern(p: f64) -> Distribution<f64> {
        Distribution::bernoulli(p).unwrap()
    }

    fn brier_reference() -> f64 {
        0.5 * (-5.0f64 / 8.0).exp() + 0.5 * (3.0f64 / 8.0).exp()
    }

    #[test]
    fn brier_values() {
        assert_eq!(brier(&bern(0.5), 0), 0.5);
        assert_eq!(brier(&bern(0.5), 1), 0.5);
        assert_eq!(brier(&bern(0.75), 0), 9.0 / 8.0);
        assert_eq!(brier(&bern(0.75), 1), 1.0 / 8.0);
        assert_eq!(brier(&bern(1.0), 1), 0.0);
    }

    #[test]
    fn brier_one_step_expectation() {
        let v = one_step_evidence_expectation(ScoringRule::Brier, &bern(0.75), &bern(0.5));
        assert!((v - brier_reference()).abs() < 1e-15);
        assert!((v - 0.9951).abs() < 1e-4);
        assert_eq!(
            one_step_evidence_expectation(ScoringRule::Brier, &bern(0.3), &bern(0.3)),
            1.0
        );
    }

    #[test]
    fn log_one_step_expectation_is_one() {
        for (a, b) in [(0.75, 0.5), (0.1, 0.9), (0.5, 0.2)] {
            let v = one_step_evidence_expectation(ScoringRule::Log, &bern(a), &bern(b));
            assert!((v - 1.0).abs() < 1e-14, "{a} {b}: {v}");
        }
    }

    #[test]
    fn decay_curve_values() {
        let curve = decay_curve(ScoringRule::Brier, &bern(0.75), &bern(0.5), 100);
        assert!((curve[0] - 0.9951).abs() < 1e-4);
        assert!((curve[99] - 0.61).abs() < 0.01, "{}", curve[99]);
        let log = decay_curve(ScoringRule::Log, &bern(0.75), &bern(0.5), 50);
        assert!(log.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn decay_curve_is_geometric() {
        let curve = decay_curve(ScoringRule::Brier, &bern(0.75), &bern(0.5), 200);
        let r = curve[0];
        for w in curve.windows(2) {
            assert!((w[1] / w[0] - r).abs() < 1e-14);
        }
    }

    #[test]
    fn uniqueness_boundary_on_grid() {
        let grid: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
        for &a in &grid {
            for &b in &grid {
                if a == b {
                    continue;
                }
                let log = one_step_evidence_expectation(ScoringRule::Log, &bern(a), &bern(b));
                assert!((log - 1.0).abs() < 1e-14);
                let br = one_step_evidence_expectation(ScoringRule::Brier, &bern(a), &bern(b));
                assert!(br < 1.0, "brier({a},{b}) = {br}");
            }
        }
    }

    #[test]
    fn both_rules_are_strictly_proper_on_grid() {
        let grid: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
        for rule in [ScoringRule::Log, ScoringRule::Brier] {
            for &p in &grid {
                let own = expected_score(rule, &bern(p), &bern(p));
                for &q in &grid {
                    let other = expected_score(rule, &bern(p), &bern(q));
                    if p == q {
                        assert_eq!(own, other);
                    } else {
                        assert!(own < other, "{rule:?} p={p} q={q}");
                    }
                }
            }
        }
    }
}
