//! Published target windows for the experiment drivers.
//!
//! `widen` multiplies every half-width; reduced-replication runs use 3.

use serde::{Deserialize, Serialize};

use super::experiments::{Table2, TABLE2_REFERENCE};
use super::ExperimentResult;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub pass: bool,
}

impl Check {
    pub fn window(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lo,
            hi,
            pass: value >= lo && value <= hi,
        }
    }

    pub fn around(name: impl Into<String>, value: f64, target: f64, half_width: f64) -> Self {
        Self::window(name, value, target - half_width, target + half_width)
    }

    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::window(name, value, f64::NEG_INFINITY, limit)
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

pub fn accumulation_checks(r: &ExperimentResult, widen: f64) -> Vec<Check> {
    vec![
        Check::around(
            "crossing_fraction",
            r.get("crossing_fraction"),
            0.97,
            0.02 * widen,
        ),
        Check::around("median_tau", r.get("median_tau"), 50.0, 5.0 * widen),
        Check::around("slope", r.get("slope"), 0.046, 0.003 * widen),
    ]
}

pub fn type1_checks(r: &ExperimentResult, widen: f64) -> Vec<Check> {
    let lr = r.get("lr_rate");
    let slack = if widen > 1.0 {
        3.0 * r.stderr("lr_rate")
    } else {
        0.0
    };
    vec![
        Check::around("lr_rate", lr, 0.042, 0.006 * widen),
        Check::at_most("lr_rate_below_bound", lr, 0.05 + slack),
        Check::around("ml_rate", r.get("ml_rate"), 0.225, 0.015 * widen),
    ]
}

pub fn misspec_checks(r: &ExperimentResult, widen: f64) -> Vec<Check> {
    vec![
        Check::around("drift", r.get("drift"), -0.154, 0.01 * widen),
        Check::at_most("crossings", r.get("crossings"), 0.0),
    ]
}

pub fn table2_checks(t: &Table2, widen: f64) -> Vec<Check> {
    let mut out = Vec::new();
    for (rep, reference) in t.reports.iter().zip(TABLE2_REFERENCE) {
        out.push(Check::around(
            format!("mean_b{}", reference.b),
            rep.mean,
            reference.mean,
            0.5 * widen,
        ));
        out.push(Check::around(
            format!("sd_b{}", reference.b),
            rep.sd,
            reference.sd,
            1.5 * widen,
        ));
    }
    out.push(Check::window(
        "residual_non_increasing",
        if t.residual_non_increasing { 1.0 } else { 0.0 },
        1.0,
        1.0,
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows() {
        assert!(Check::around("x", 1.0, 1.1, 0.1).pass);
        assert!(!Check::around("x", 1.0, 1.2, 0.1).pass);
        assert!(Check::at_most("x", 0.0, 0.0).pass);
        assert!(!Check::at_most("x", 1.0, 0.0).pass);
        assert!(!Check::window("x", f64::NAN, 0.0, 1.0).pass);
    }
}
