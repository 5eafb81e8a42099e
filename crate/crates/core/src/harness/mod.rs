//! Seeded Monte Carlo drivers. Replication `i` of every experiment draws
//! from stream `(seed, i)`; results are gathered in index order and reduced
//! with exact counters or compensated sums, so output does not depend on
//! the worker count.

mod checks;
mod experiments;
mod output;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use checks::{
    accumulation_checks, all_pass, misspec_checks, table2_checks, type1_checks, Check,
};
pub use experiments::{
    experiment_accumulation, experiment_misspec, experiment_type1, type1_sweep, verify_table2,
    MisspecConfig, Table2, Table2Reference, Trajectory, TrajectoryPoint, Type1SweepRow, TABLE2_B,
    TABLE2_CAP, TABLE2_REFERENCE,
};
pub use output::{to_csv, to_json, write_atomic};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub seed: u64,
    pub reps: usize,
    pub params: BTreeMap<String, f64>,
    pub metrics: BTreeMap<String, f64>,
    /// Monte Carlo standard error of each metric; zero for exact values.
    pub mc_stderr: BTreeMap<String, f64>,
    #[serde(skip)]
    pub trajectories: Vec<Trajectory>,
}

impl ExperimentResult {
    pub fn new(name: &str, seed: u64, reps: usize) -> Self {
        Self {
            name: name.into(),
            seed,
            reps,
            ..Self::default()
        }
    }

    pub fn param(&mut self, key: &str, value: f64) -> &mut Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn metric(&mut self, key: &str, value: f64, stderr: f64) -> &mut Self {
        self.metrics.insert(key.into(), value);
        self.mc_stderr.insert(key.into(), stderr);
        self
    }

    pub fn get(&self, key: &str) -> f64 {
        self.metrics.get(key).copied().unwrap_or(f64::NAN)
    }

    pub fn stderr(&self, key: &str) -> f64 {
        self.mc_stderr.get(key).copied().unwrap_or(f64::NAN)
    }
}

/// `sqrt(p (1 - p) / n)`.
pub fn binomial_stderr(p: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}
