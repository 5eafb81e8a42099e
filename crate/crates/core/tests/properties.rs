use std::sync::Arc;

use proptest::prelude::*;

use evident::algebra::{
    bayes_mix, convex_mix, scale, stitch, stop, validity_check, AtStep, EvidenceAtLeast,
};
use evident::codes::{code_to_e, iid_family, liftability_check, prequential_family};
use evident::eprocess::{
    bayes_factor_process, lr_process, prequential_process, scoring_rule_process, DiscretePrior,
    EvidenceProcess, Smoothing, Template,
};
use evident::prob::{weight_of_evidence, Distribution, Symbol};
use evident::scoring::ScoringRule;
use evident::Rational;

type Boxed = Box<dyn EvidenceProcess<f64>>;

fn bern(p: f64) -> Distribution<f64> {
    Distribution::bernoulli(p).unwrap()
}

fn path(max: usize) -> impl Strategy<Value = Vec<Symbol>> {
    prop::collection::vec(0usize..2, 0..max)
}

/// A randomly parameterized process that is valid under `Bern(1/2)`.
fn valid_child() -> impl Strategy<Value = Boxed> {
    prop_oneof![
        (0.0f64..=1.0).prop_map(|p| Box::new(lr_process(bern(p), bern(0.5)).unwrap()) as Boxed),
        Just(
            Box::new(prequential_process(Smoothing::KrichevskyTrofimov, bern(0.5)).unwrap())
                as Boxed
        ),
        Just(Box::new(prequential_process(Smoothing::Laplace, bern(0.5)).unwrap()) as Boxed),
        (0.01f64..0.99, 0.01f64..0.99, 0.05f64..0.95).prop_map(|(a, b, w)| {
            let prior = DiscretePrior::new(vec![(bern(a), w), (bern(b), 1.0 - w)]).unwrap();
            Box::new(bayes_factor_process(prior, DiscretePrior::point(bern(0.5))).unwrap()) as Boxed
        }),
        (0.0f64..=1.0).prop_map(|p| Box::new(
            scoring_rule_process(ScoringRule::Brier, bern(p), bern(0.5)).unwrap()
        ) as Boxed),
    ]
}

fn combined() -> impl Strategy<Value = Boxed> {
    (
        valid_child(),
        valid_child(),
        0.0f64..=1.0,
        0.0f64..=1.0,
        0usize..5,
        0usize..6,
        1.0f64..8.0,
    )
        .prop_map(|(a, b, w, c, kind, t, thr)| -> Boxed {
            match kind {
                0 => Box::new(convex_mix(vec![a, b], vec![w * c, (1.0 - w) * c]).unwrap()),
                1 => Box::new(bayes_mix(vec![a, b], vec![w, 1.0 - w]).unwrap()),
                2 => Box::new(scale(a, c.max(1e-3)).unwrap()),
                3 if t % 2 == 0 => Box::new(stop(a, AtStep(t))),
                3 => Box::new(stop(a, EvidenceAtLeast(thr))),
                _ => Box::new(stitch(a, Template(b), AtStep(t))),
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn woe_is_additive(p1 in 0.01f64..0.99, p0 in 0.01f64..0.99, x in path(20), y in path(20)) {
        let (a, b) = (bern(p1), bern(p0));
        let mut xy = x.clone();
        xy.extend(&y);
        let whole = weight_of_evidence(&a, &b, &xy).unwrap();
        let parts = weight_of_evidence(&a, &b, &x).unwrap() + weight_of_evidence(&a, &b, &y).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * (1.0 + whole.abs()));
    }

    #[test]
    fn exp_woe_is_the_product_of_ratios(p1 in 0.01f64..0.99, p0 in 0.01f64..0.99, x in path(30)) {
        let (a, b) = (bern(p1), bern(p0));
        let product: f64 = x.iter().map(|&s| a.prob(s) / b.prob(s)).product();
        let w = weight_of_evidence(&a, &b, &x).unwrap();
        prop_assert!((w.exp() - product).abs() <= 1e-10 * product);
    }

    #[test]
    fn lr_process_tracks_woe(p1 in 0.01f64..0.99, p0 in 0.01f64..0.99, x in path(30)) {
        let mut e = lr_process(bern(p1), bern(p0)).unwrap();
        e.observe_all(&x).unwrap();
        prop_assert_eq!(e.log_evidence(), weight_of_evidence(&bern(p1), &bern(p0), &x).unwrap());
    }

    #[test]
    fn point_bayes_factor_equals_lr(p1 in 0.01f64..0.99, p0 in 0.01f64..0.99, x in path(30)) {
        let mut lr = lr_process(bern(p1), bern(p0)).unwrap();
        let mut bf = bayes_factor_process(DiscretePrior::point(bern(p1)), DiscretePrior::point(bern(p0))).unwrap();
        for &s in &x {
            prop_assert_eq!(lr.observe(s).unwrap(), bf.observe(s).unwrap());
        }
    }

    #[test]
    fn closure_under_combinators(e in combined()) {
        let r = validity_check(e.as_ref(), &bern(0.5), 5).unwrap();
        prop_assert!(r.pass, "{} -> {}", r.combinator, r.max_expectation);
    }

    #[test]
    fn iid_codes_lift(p in 0.01f64..0.99) {
        let fam = iid_family(&[1.0 - p, p], 5).unwrap();
        let r = liftability_check(&fam, 5).unwrap();
        prop_assert!(r.pass);
        let e = code_to_e(Arc::new(fam), bern(0.5)).unwrap();
        prop_assert!(validity_check(&e, &bern(0.5), 5).unwrap().pass);
    }
}

#[test]
fn exact_prequential_families_lift_with_equality() {
    for s in [Smoothing::KrichevskyTrofimov, Smoothing::Laplace] {
        let fam = prequential_family::<Rational>(s, 8).unwrap();
        let r = liftability_check(&fam, 8).unwrap();
        assert!(r.pass && r.max_mass == 1.0);
    }
}
