use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::rules::{SharedRule, StoppingRule};
use crate::eprocess::{EvidenceProcess, ProcessFactory, Validity};
use crate::error::{EvidenceError, Result};
use crate::prob::{Alphabet, Symbol};
use crate::scalar::{log_sum_exp, normalization_tol, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combinator {
    ConvexMix,
    BayesMix,
    Scale,
    Stop,
    Stitch,
    PointwiseMax,
}

impl Combinator {
    pub fn name(self) -> &'static str {
        match self {
            Combinator::ConvexMix => "mix",
            Combinator::BayesMix => "bmix",
            Combinator::Scale => "scale",
            Combinator::Stop => "stop",
            Combinator::Stitch => "stitch",
            Combinator::PointwiseMax => "max",
        }
    }
}

type Child<T> = Box<dyn EvidenceProcess<T>>;

fn shared_alphabet<T: Real>(children: &[Child<T>]) -> Result<Alphabet> {
    let Some(first) = children.first() else {
        return Err(EvidenceError::WeightViolation { total: 0.0 });
    };
    let alphabet = first.alphabet();
    for c in children {
        alphabet.check_same(c.alphabet())?;
    }
    Ok(alphabet)
}

/// `sum_i w_i E^(i)_t`, kept in log domain. Weights may total less than one.
#[derive(Debug, Clone)]
pub struct ConvexMix<T: Real> {
    kind: Combinator,
    children: Vec<Child<T>>,
    weights: Vec<T>,
    log_weights: Vec<T>,
    log_e: T,
    steps: usize,
}

pub fn convex_mix<T: Real>(children: Vec<Child<T>>, weights: Vec<T>) -> Result<ConvexMix<T>> {
    ConvexMix::new(Combinator::ConvexMix, children, weights)
}

/// Discrete Bayesian mixture of processes; the prior weights play the role
/// of mixture weights.
pub fn bayes_mix<T: Real>(children: Vec<Child<T>>, prior: Vec<T>) -> Result<ConvexMix<T>> {
    ConvexMix::new(Combinator::BayesMix, children, prior)
}

impl<T: Real> ConvexMix<T> {
    fn new(kind: Combinator, children: Vec<Child<T>>, weights: Vec<T>) -> Result<Self> {
        let total: T = weights.iter().copied().sum();
        let bad = weights.iter().any(|w| !w.is_finite() || *w < T::zero());
        if bad || weights.len() != children.len() || total > T::one() + normalization_tol() {
            return Err(EvidenceError::WeightViolation {
                total: total.to_f64().unwrap_or(f64::NAN),
            });
        }
        shared_alphabet(&children)?;
        let log_weights: Vec<T> = weights.iter().map(|w| w.ln()).collect();
        let mut mix = Self {
            kind,
            children,
            weights,
            log_weights,
            log_e: T::zero(),
            steps: 0,
        };
        mix.log_e = mix.combine();
        Ok(mix)
    }

    fn combine(&self) -> T {
        let terms: Vec<T> = self
            .log_weights
            .iter()
            .zip(&self.children)
            .map(|(&lw, c)| lw + c.log_evidence())
            .collect();
        log_sum_exp(&terms)
    }
}

impl<T: Real> EvidenceProcess<T> for ConvexMix<T> {
    fn observe(&mut self, x: Symbol) -> Result<T> {
        for c in &mut self.children {
            c.observe(x)?;
        }
        self.steps += 1;
        self.log_e = self.combine();
        Ok(self.log_e)
    }

    fn log_evidence(&self) -> T {
        self.log_e
    }

    fn steps(&self) -> usize {
        self.steps
    }

    fn alphabet(&self) -> Alphabet {
        self.children[0].alphabet()
    }

    fn validity(&self) -> Validity {
        self.children
            .iter()
            .fold(Validity::Guaranteed, |v, c| v.meet(c.validity()))
    }

    fn describe(&self) -> String {
        let parts: Vec<String> = self
            .weights
            .iter()
            .zip(&self.children)
            .map(|(w, c)| format!("{w}:{}", c.describe()))
            .collect();
        format!("{}({})", self.kind.name(), parts.join(", "))
    }

    fn clone_box(&self) -> Box<dyn EvidenceProcess<T>> {
        Box::new(self.clone())
    }
}

/// `c E_t` with `c` in `(0, 1]`.
#[derive(Debug, Clone)]
pub struct Scaled<T: Real> {
    child: Child<T>,
    factor: T,
    log_factor: T,
}

pub fn scale<T: Real>(child: Child<T>, factor: T) -> Result<Scaled<T>> {
    if !(factor > T::zero() && factor <= T::one()) {
        return Err(EvidenceError::ScaleViolation(
            factor.to_f64().unwrap_or(f64::NAN),
        ));
    }
    Ok(Scaled {
        child,
        factor,
        log_factor: factor.ln(),
    })
}

impl<T: Real> EvidenceProcess<T> for Scaled<T> {
    fn observe(&mut self, x: Symbol) -> Result<T> {
        self.child.observe(x)?;
        Ok(self.log_evidence())
    }

    fn log_evidence(&self) -> T {
        self.log_factor + self.child.log_evidence()
    }

    fn steps(&self) -> usize {
        self.child.steps()
    }

    fn alphabet(&self) -> Alphabet {
        self.child.alphabet()
    }

    fn validity(&self) -> Validity {
        self.child.validity()
    }

    fn describe(&self) -> String {
        format!("scale({}, {})", self.factor, self.child.describe())
    }

    fn clone_box(&self) -> Box<dyn EvidenceProcess<T>> {
        Box::new(self.clone())
    }
}

/// `E_{min(t, tau)}`: frozen from the first step the rule fires.
#[derive(Debug, Clone)]
pub struct Stopped<T: Real> {
    child: Child<T>,
    rule: SharedRule<T>,
    history: Vec<Symbol>,
    trajectory: Vec<T>,
    stopped_at: Option<usize>,
}

pub fn stop<T: Real>(child: Child<T>, rule: impl StoppingRule<T> + 'static) -> Stopped<T> {
    stop_shared(child, Arc::new(rule))
}

pub fn stop_shared<T: Real>(child: Child<T>, rule: SharedRule<T>) -> Stopped<T> {
    let trajectory = vec![child.log_evidence()];
    Stopped {
        child,
        rule,
        history: Vec::new(),
        trajectory,
        stopped_at: None,
    }
}

impl<T: Real> Stopped<T> {
    pub fn stopped_at(&self) -> Option<usize> {
        self.stopped_at
    }
}

impl<T: Real> EvidenceProcess<T> for Stopped<T> {
    fn observe(&mut self, x: Symbol) -> Result<T> {
        self.child.alphabet().check(x)?;
        if self.stopped_at.is_none() && self.rule.fires(&self.history, &self.trajectory) {
            self.stopped_at = Some(self.history.len());
        }
        if self.stopped_at.is_none() {
            self.child.observe(x)?;
        }
        self.history.push(x);
        let v = self.child.log_evidence();
        self.trajectory.push(v);
        Ok(v)
    }

    fn log_evidence(&self) -> T {
        self.child.log_evidence()
    }

    fn steps(&self) -> usize {
        self.history.len()
    }

    fn alphabet(&self) -> Alphabet {
        self.child.alphabet()
    }

    fn validity(&self) -> Validity {
        self.child.validity()
    }

    fn describe(&self) -> String {
        format!("stop({} @ {})", self.child.describe(), self.rule.describe())
    }

    fn clone_box(&self) -> Box<dyn EvidenceProcess<T>> {
        Box::new(self.clone())
    }
}

/// `E1_t` up to `tau`, then `E1_tau * E2_{t - tau}` with a fresh second
/// process started at `tau`.
#[derive(Debug, Clone)]
pub struct Stitched<T: Real> {
    first: Child<T>,
    factory: Arc<dyn ProcessFactory<T>>,
    second: Option<Child<T>>,
    rule: SharedRule<T>,
    history: Vec<Symbol>,
    trajectory: Vec<T>,
    handoff_log_e: T,
    handoff_at: Option<usize>,
}

pub fn stitch<T: Real>(
    first: Child<T>,
    factory: impl ProcessFactory<T> + 'static,
    rule: impl StoppingRule<T> + 'static,
) -> Stitched<T> {
    stitch_shared(first, Arc::new(factory), Arc::new(rule))
}

pub fn stitch_shared<T: Real>(
    first: Child<T>,
    factory: Arc<dyn ProcessFactory<T>>,
    rule: SharedRule<T>,
) -> Stitched<T> {
    let trajectory = vec![first.log_evidence()];
    Stitched {
        first,
        factory,
        second: None,
        rule,
        history: Vec::new(),
        trajectory,
        handoff_log_e: T::zero(),
        handoff_at: None,
    }
}

impl<T: Real> Stitched<T> {
    pub fn handoff_at(&self) -> Option<usize> {
        self.handoff_at
    }

    fn current(&self) -> T {
        match &self.second {
            Some(s) => self.handoff_log_e + s.log_evidence(),
            None => self.first.log_evidence(),
        }
    }
}

impl<T: Real> EvidenceProcess<T> for Stitched<T> {
    fn observe(&mut self, x: Symbol) -> Result<T> {
        self.first.alphabet().check(x)?;
        if self.second.is_none() && self.rule.fires(&self.history, &self.trajectory) {
            self.handoff_log_e = self.first.log_evidence();
            self.handoff_at = Some(self.history.len());
            self.second = Some(self.factory.build());
        }
        match &mut self.second {
            Some(s) => {
                s.observe(x)?;
            }
            None => {
                self.first.observe(x)?;
            }
        }
        self.history.push(x);
        let v = self.current();
        self.trajectory.push(v);
        Ok(v)
    }

    fn log_evidence(&self) -> T {
        self.current()
    }

    fn steps(&self) -> usize {
        self.history.len()
    }

    fn alphabet(&self) -> Alphabet {
        self.first.alphabet()
    }

    fn validity(&self) -> Validity {
        self.first.validity().meet(self.factory.build().validity())
    }

    fn describe(&self) -> String {
        format!(
            "stitch({} @ {} -> {})",
            self.first.describe(),
            self.rule.describe(),
            self.factory.build().describe()
        )
    }

    fn clone_box(&self) -> Box<dyn EvidenceProcess<T>> {
        Box::new(self.clone())
    }
}

/// `max(a_t, b_t)`. Leaves the evidence class; exists for counterexamples.
#[derive(Debug, Clone)]
pub struct PointwiseMax<T: Real> {
    a: Child<T>,
    b: Child<T>,
}

pub fn pointwise_max<T: Real>(a: Child<T>, b: Child<T>) -> Result<PointwiseMax<T>> {
    a.alphabet().check_same(b.alphabet())?;
    Ok(PointwiseMax { a, b })
}

impl<T: Real> EvidenceProcess<T> for PointwiseMax<T> {
    fn observe(&mut self, x: Symbol) -> Result<T> {
        self.a.observe(x)?;
        self.b.observe(x)?;
        Ok(self.log_evidence())
    }

    fn log_evidence(&self) -> T {
        self.a.log_evidence().max(self.b.log_evidence())
    }

    fn steps(&self) -> usize {
        self.a.steps()
    }

    fn alphabet(&self) -> Alphabet {
        self.a.alphabet()
    }

    fn validity(&self) -> Validity {
        Validity::NotGuaranteed
    }

    fn describe(&self) -> String {
        format!("max({}, {})", self.a.describe(), self.b.describe())
    }

    fn clone_box(&self) -> Box<dyn EvidenceProcess<T>> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rules::{AtStep, EvidenceAtLeast, Never};
    use crate::eprocess::{lr_process, Template};
    use crate::prob::Distribution;

    fn bern(p: f64) -> Distribution<f64> {
        Distribution::bernoulli(p).unwrap()
    }

    fn lr(p1: f64, p0: f64) -> Child<f64> {
        Box::new(lr_process(bern(p1), bern(p0)).unwrap())
    }

    fn heads() -> Child<f64> {
        lr(1.0, 0.5)
    }

    fn tails() -> Child<f64> {
        lr(0.0, 0.5)
    }

    fn paths(n: usize) -> impl Iterator<Item = Vec<Symbol>> {
        (0..1u32 << n).map(move |bits| (0..n).map(|i| ((bits >> i) & 1) as usize).collect())
    }

    fn null_mean(mut make: impl FnMut() -> Child<f64>, n: usize) -> f64 {
        paths(n)
            .map(|p| {
                let mut e = make();
                e.observe_all(&p).unwrap();
                e.evidence() / (1u64 << n) as f64
            })
            .sum()
    }

    #[test]
    fn idempotent_mixture() {
        let path = [1, 0, 0, 1, 1];
        let mut mix = convex_mix(vec![lr(0.65, 0.5), lr(0.65, 0.5)], vec![0.5, 0.5]).unwrap();
        let mut single = lr(0.65, 0.5);
        for &x in &path {
            let a = mix.observe(x).unwrap();
            let b = single.observe(x).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn bettor_mixture_is_constant_one() {
        for x in 0..2 {
            let mut mix = convex_mix(vec![heads(), tails()], vec![0.5, 0.5]).unwrap();
            mix.observe(x).unwrap();
            assert!((mix.evidence() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn mixture_null_mean_bounded() {
        let m = null_mean(
            || Box::new(convex_mix(vec![lr(0.65, 0.5), lr(0.2, 0.5)], vec![0.3, 0.6]).unwrap()),
            3,
        );
        assert!(m <= 1.0 + 1e-10);
        assert!((m - 0.9).abs() < 1e-12);
    }

    #[test]
    fn weight_violations() {
        assert!(convex_mix(vec![heads(), tails()], vec![0.7, 0.7]).is_err());
        assert!(convex_mix(vec![heads(), tails()], vec![-0.1, 0.7]).is_err());
        assert!(convex_mix(vec![heads()], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn scale_bounds() {
        assert!(scale(heads(), 1.5).is_err());
        assert!(scale(heads(), 0.0).is_err());
        let mut s = scale(heads(), 0.25).unwrap();
        s.observe(1).unwrap();
        assert!((s.evidence() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stop_never_is_identity() {
        let path = [1, 1, 0, 1];
        let mut s = stop(lr(0.65, 0.5), Never);
        let mut e = lr(0.65, 0.5);
        for &x in &path {
            assert_eq!(s.observe(x).unwrap(), e.observe(x).unwrap());
        }
    }

    #[test]
    fn stop_at_three_freezes_and_keeps_mean_one() {
        let mut s = stop(lr(0.65, 0.5), AtStep(3));
        s.observe_all(&[1, 1, 0, 1, 1]).unwrap();
        let expected = 2.0 * 1.3f64.ln() + 0.7f64.ln();
        assert!((s.log_evidence() - expected).abs() < 1e-14);
        assert_eq!(s.stopped_at(), Some(3));
        let m = null_mean(|| Box::new(stop(lr(0.65, 0.5), AtStep(3))), 5);
        assert!((m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stop_on_evidence_threshold_heads_bettor() {
        let m = null_mean(|| Box::new(stop(heads(), EvidenceAtLeast(2.0))), 4);
        assert!(m <= 1.0 + 1e-12, "{m}");
    }

    #[test]
    fn stitch_edge_rules() {
        let path = [1, 0, 1, 1];
        let mut never = stitch(lr(0.65, 0.5), Template(tails()), Never);
        let mut first = lr(0.65, 0.5);
        for &x in &path {
            assert_eq!(never.observe(x).unwrap(), first.observe(x).unwrap());
        }
        let mut immediate = stitch(lr(0.65, 0.5), Template(lr(0.3, 0.5)), AtStep(0));
        let mut second = lr(0.3, 0.5);
        for &x in &path {
            assert_eq!(immediate.observe(x).unwrap(), second.observe(x).unwrap());
        }
    }

    #[test]
    fn stitch_bettors_handoff_at_one() {
        let mut s = stitch(heads(), Template(tails()), AtStep(1));
        s.observe_all(&[1, 0, 0]).unwrap();
        assert!((s.evidence() - 8.0).abs() < 1e-12);
        assert_eq!(s.handoff_at(), Some(1));
        let m = null_mean(
            || Box::new(stitch(heads(), Template(tails()), AtStep(1))),
            3,
        );
        assert!((m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pointwise_max_counterexample() {
        for x in 0..2 {
            let mut m = pointwise_max(heads(), tails()).unwrap();
            m.observe(x).unwrap();
            assert_eq!(m.evidence(), 2.0);
        }
        let mut same = pointwise_max(lr(0.65, 0.5), lr(0.65, 0.5)).unwrap();
        let mut e = lr(0.65, 0.5);
        for &x in &[1, 0, 1] {
            assert_eq!(same.observe(x).unwrap(), e.observe(x).unwrap());
        }
        assert_eq!(same.validity(), Validity::NotGuaranteed);
    }

    #[test]
    fn sup_of_max_grows_with_horizon() {
        // E[sup_{s<=t} M_s] over all 2^t paths, for t = 1..10.
        let mut prev = 1.0;
        for t in 1..=10 {
            let mean: f64 = paths(t)
                .map(|p| {
                    let mut m = pointwise_max(heads(), tails()).unwrap();
                    let mut sup = m.evidence();
                    for &x in &p {
                        m.observe(x).unwrap();
                        sup = sup.max(m.evidence());
                    }
                    sup / (1u64 << t) as f64
                })
                .sum();
            assert!(mean > prev, "t={t}: {mean} <= {prev}");
            prev = mean;
        }
    }
}
