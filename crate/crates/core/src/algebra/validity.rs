//! Brute-force supermartingale certification.
//!
//! For every history `h` reachable under the null with `|h| < depth`, the
//! checker computes `sum_x p0(x | h) E(h x) / E(h)` by feeding `x` to a
//! clone of the process positioned at `h`. A process passes iff every such
//! conditional mean is at most `1 + 1e-10` and `E_0 <= 1 + 1e-10`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eprocess::{EvidenceProcess, Validity};
use crate::error::{EvidenceError, Result};
use crate::prob::{PredictiveKernel, Symbol};
use crate::rng::RngStream;
use crate::scalar::{check_tol, Real};

pub const MAX_CHECK_DEPTH: usize = 12;
const MAX_CHECK_NODES: usize = 1 << 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub combinator: String,
    pub depth: usize,
    pub max_expectation: f64,
    pub worst_history: Vec<Symbol>,
    pub initial_evidence: f64,
    pub histories_checked: usize,
    pub declared: Validity,
    pub pass: bool,
}

/// Certifies (or refutes) membership in the evidence class up to `depth`.
///
/// `process` must be at step zero. Ties in the maximum keep the history
/// visited first in lexicographic order.
pub fn validity_check<T: Real>(
    process: &dyn EvidenceProcess<T>,
    p0: &dyn PredictiveKernel<T>,
    depth: usize,
) -> Result<ValidityReport> {
    let size = p0.alphabet().size();
    process.alphabet().check_same(p0.alphabet())?;
    let nodes = (size as f64).powi(depth as i32);
    if depth > MAX_CHECK_DEPTH || nodes > MAX_CHECK_NODES as f64 {
        return Err(EvidenceError::DepthTooLarge {
            depth,
            max: MAX_CHECK_DEPTH,
        });
    }
    let mut state = Walk {
        p0,
        depth,
        max: f64::NEG_INFINITY,
        worst: Vec::new(),
        checked: 0,
        history: Vec::new(),
    };
    state.visit(process.clone_box())?;
    let initial = process.evidence().to_f64().unwrap_or(f64::NAN);
    let tol = check_tol::<T>().to_f64().unwrap_or(1e-10);
    let max = if state.checked == 0 { 0.0 } else { state.max };
    Ok(ValidityReport {
        combinator: process.describe(),
        depth,
        max_expectation: max,
        worst_history: state.worst,
        initial_evidence: initial,
        histories_checked: state.checked,
        declared: process.validity(),
        pass: max <= 1.0 + tol && initial <= 1.0 + tol,
    })
}

struct Walk<'a, T: Real> {
    p0: &'a dyn PredictiveKernel<T>,
    depth: usize,
    max: f64,
    worst: Vec<Symbol>,
    checked: usize,
    history: Vec<Symbol>,
}

impl<T: Real> Walk<'_, T> {
    fn visit(&mut self, node: Box<dyn EvidenceProcess<T>>) -> Result<()> {
        if self.history.len() >= self.depth {
            return Ok(());
        }
        let cond = self.p0.conditional(&self.history);
        let parent = node.log_evidence();
        let mut children = Vec::with_capacity(cond.len());
        let mut expectation = T::zero();
        for (x, &q) in cond.iter().enumerate() {
            if q <= T::zero() {
                continue;
            }
            let mut child = node.clone_box();
            child.observe(x)?;
            let term = if parent == T::neg_infinity() {
                // Ratio to a zero parent: any positive child is an
                // infinite relative increase.
                if child.log_evidence() == T::neg_infinity() {
                    T::zero()
                } else {
                    T::infinity()
                }
            } else {
                (child.log_evidence() - parent).exp()
            };
            expectation = expectation + q * term;
            children.push((x, child));
        }
        let e = expectation.to_f64().unwrap_or(f64::NAN);
        self.checked += 1;
        if e > self.max || e.is_nan() {
            self.max = if e.is_nan() { f64::INFINITY } else { e };
            self.worst = self.history.clone();
        }
        for (x, child) in children {
            self.history.push(x);
            self.visit(child)?;
            self.history.pop();
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VilleRow {
    pub threshold: f64,
    pub frequency: f64,
    pub bound: f64,
    pub mc_stderr: f64,
    pub pass: bool,
}

/// Fraction of simulated null paths on which `sup_{t <= horizon} E_t`
/// reaches each threshold, against `1/b + 3 sigma_MC`.
///
/// Path `i` is sampled from `p0` using stream `(seed, i)`.
pub fn ville_frequency<T: Real>(
    process: &dyn EvidenceProcess<T>,
    p0: &dyn PredictiveKernel<T>,
    thresholds: &[f64],
    paths: usize,
    horizon: usize,
    seed: u64,
) -> Result<Vec<VilleRow>> {
    let sups: Vec<f64> = (0..paths as u64)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = RngStream::new(seed, i).rng();
            let mut e = process.clone_box();
            let mut history = Vec::with_capacity(horizon);
            let mut sup = e.log_evidence().to_f64().unwrap_or(f64::NAN);
            for _ in 0..horizon {
                let cond = p0.conditional(&history);
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut x = cond.len() - 1;
                for (s, q) in cond.iter().enumerate() {
                    acc += q.to_f64().unwrap_or(0.0);
                    if u < acc {
                        x = s;
                        break;
                    }
                }
                let v = e.observe(x)?.to_f64().unwrap_or(f64::NAN);
                history.push(x);
                sup = sup.max(v);
            }
            Ok(sup)
        })
        .collect::<Result<_>>()?;
    Ok(thresholds
        .iter()
        .map(|&b| {
            let hits = sups.iter().filter(|&&s| s >= b.ln()).count();
            let frequency = hits as f64 / paths as f64;
            let alpha = 1.0 / b;
            let mc_stderr = (alpha * (1.0 - alpha) / paths as f64).sqrt();
            let bound = alpha + 3.0 * mc_stderr;
            VilleRow {
                threshold: b,
                frequency,
                bound,
                mc_stderr,
                pass: frequency <= bound,
            }
        })
        .collect())
}
