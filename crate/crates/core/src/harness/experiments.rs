use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{binomial_stderr, ExperimentResult};
use crate::boundary::{
    mean_sd, misspec_crossing_bound, misspecification_drift, misspecified_moments,
    simulate_stopping, CrossingConfig, StoppingReport, StoppingRow,
};
use crate::eprocess::{
    lr_process, ml_plugin_process, prequential_process, EvidenceProcess, Smoothing,
};
use crate::error::Result;
use crate::prob::{kl_divergence, Distribution};
use crate::rng::RngStream;
use crate::scalar::compensated_sum;

/// At most this many per-path trajectories are kept for plotting.
const MAX_TRAJECTORIES: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub path_id: usize,
    /// `ln E_t` for `t = 0..=T`.
    pub log_evidence: Vec<f64>,
}

/// One CSV row of a trajectory dump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub path_id: usize,
    pub t: usize,
    pub log_evidence: f64,
}

impl Trajectory {
    pub fn points(&self) -> impl Iterator<Item = TrajectoryPoint> + '_ {
        self.log_evidence
            .iter()
            .enumerate()
            .map(|(t, &v)| TrajectoryPoint {
                path_id: self.path_id,
                t,
                log_evidence: v,
            })
    }
}

fn bern(p: f64) -> Result<Distribution<f64>> {
    Distribution::bernoulli(p)
}

/// Median with censored values as `+inf`, and half the spread of the order
/// statistics at ranks `n/2 -+ sqrt(n)/2` as its standard error.
fn median_with_stderr(mut values: Vec<f64>) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    values.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    };
    let half = (n as f64).sqrt() / 2.0;
    let lo = ((n as f64 / 2.0 - half).floor().max(0.0) as usize).min(n - 1);
    let hi = ((n as f64 / 2.0 + half).ceil() as usize).min(n - 1);
    (median, (values[hi] - values[lo]) / 2.0)
}

struct AccumulationPath {
    tau: Option<usize>,
    lr: Vec<f64>,
    ml_final: f64,
    kt_final: f64,
}

/// LR evidence for `Bern(0.65)` against `Bern(0.5)` on paths drawn from
/// `Bern(0.65)`, monitored at `b = 20` up to `horizon`.
///
/// Besides the crossing statistics it reports where the improper ML ratio
/// ends up relative to the LR process and to the KT mixture at `T`, next to
/// `0.5 ln T`.
pub fn experiment_accumulation(seed: u64, reps: usize, horizon: usize) -> Result<ExperimentResult> {
    let b = 20.0f64;
    let (p1, p0) = (bern(0.65)?, bern(0.5)?);
    let lr = lr_process(p1.clone(), p0.clone())?;
    let ml = ml_plugin_process(p0.clone())?;
    let kt = prequential_process(Smoothing::KrichevskyTrofimov, p0.clone())?;
    let paths: Vec<AccumulationPath> = (0..reps as u64)
        .into_par_iter()
        .map(|i| -> Result<AccumulationPath> {
            let mut rng = RngStream::new(seed, i).rng();
            let (mut e, mut m, mut k) = (lr.clone(), ml.clone(), kt.clone());
            let mut traj = Vec::with_capacity(horizon + 1);
            traj.push(e.log_evidence());
            let mut tau = None;
            for t in 1..=horizon {
                let x = p1.sample(&mut rng);
                let v = e.observe(x)?;
                m.observe(x)?;
                k.observe(x)?;
                traj.push(v);
                if tau.is_none() && v >= b.ln() {
                    tau = Some(t);
                }
            }
            Ok(AccumulationPath {
                tau,
                lr: traj,
                ml_final: m.log_evidence(),
                kt_final: k.log_evidence(),
            })
        })
        .collect::<Result<_>>()?;

    let n = reps as f64;
    let crossed = paths.iter().filter(|p| p.tau.is_some()).count();
    let fraction = crossed as f64 / n;
    let (median, median_se) = median_with_stderr(
        paths
            .iter()
            .map(|p| p.tau.map_or(f64::INFINITY, |t| t as f64))
            .collect(),
    );
    let t = horizon as f64;
    let slopes: Vec<f64> = paths.iter().map(|p| p.lr[horizon] / t).collect();
    let (slope, _, slope_se) = mean_sd(&slopes);
    let ml_lr: Vec<f64> = paths.iter().map(|p| p.ml_final - p.lr[horizon]).collect();
    let (ml_lr_mean, _, ml_lr_se) = mean_sd(&ml_lr);
    let ml_kt: Vec<f64> = paths.iter().map(|p| p.ml_final - p.kt_final).collect();
    let (ml_kt_mean, _, ml_kt_se) = mean_sd(&ml_kt);

    let mut r = ExperimentResult::new("accumulation", seed, reps);
    r.param("p1", 0.65)
        .param("p0", 0.5)
        .param("p_data", 0.65)
        .param("b", b)
        .param("horizon", t);
    r.metric(
        "crossing_fraction",
        fraction,
        binomial_stderr(fraction, reps),
    )
    .metric("median_tau", median, median_se)
    .metric("slope", slope, slope_se)
    .metric("kl_rate", kl_divergence(&p1, &p0)?, 0.0)
    .metric("ml_minus_lr_at_T", ml_lr_mean, ml_lr_se)
    .metric("ml_minus_kt_at_T", ml_kt_mean, ml_kt_se)
    .metric("half_log_T", 0.5 * t.ln(), 0.0);
    r.trajectories = paths
        .into_iter()
        .take(MAX_TRAJECTORIES)
        .enumerate()
        .map(|(path_id, p)| Trajectory {
            path_id,
            log_evidence: p.lr,
        })
        .collect();
    Ok(r)
}

/// Null paths from `Bern(0.5)`, each monitored by the LR process
/// (`Bern(0.65)` alternative) and by the ML ratio; a path rejects when the
/// evidence first reaches `b` by `horizon`.
pub fn experiment_type1(
    seed: u64,
    reps: usize,
    horizon: usize,
    b: f64,
) -> Result<ExperimentResult> {
    let (p1, p0) = (bern(0.65)?, bern(0.5)?);
    let lr = lr_process(p1, p0.clone())?;
    let ml = ml_plugin_process(p0.clone())?;
    let target = b.ln();
    let hits: Vec<(bool, bool)> = (0..reps as u64)
        .into_par_iter()
        .map(|i| -> Result<(bool, bool)> {
            let mut rng = RngStream::new(seed, i).rng();
            let (mut e, mut m) = (lr.clone(), ml.clone());
            let (mut lr_hit, mut ml_hit) = (false, false);
            for _ in 0..horizon {
                let x = p0.sample(&mut rng);
                if !lr_hit {
                    lr_hit = e.observe(x)? >= target;
                }
                if !ml_hit {
                    ml_hit = m.observe(x)? >= target;
                }
                if lr_hit && ml_hit {
                    break;
                }
            }
            Ok((lr_hit, ml_hit))
        })
        .collect::<Result<_>>()?;
    let lr_rate = hits.iter().filter(|h| h.0).count() as f64 / reps as f64;
    let ml_rate = hits.iter().filter(|h| h.1).count() as f64 / reps as f64;
    let mut r = ExperimentResult::new("type1", seed, reps);
    r.param("p1", 0.65)
        .param("p0", 0.5)
        .param("b", b)
        .param("horizon", horizon as f64);
    r.metric("lr_rate", lr_rate, binomial_stderr(lr_rate, reps))
        .metric("ml_rate", ml_rate, binomial_stderr(ml_rate, reps))
        .metric("ville_bound", 1.0 / b, 0.0);
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Type1SweepRow {
    pub b: f64,
    pub horizon: usize,
    pub rate: f64,
    pub stderr: f64,
    /// `1/b + 4 sqrt((1/b)(1 - 1/b)/reps)`.
    pub bound: f64,
    pub pass: bool,
}

/// LR false-rejection rate for every `(b, T)` pair, from one set of null
/// paths of length `max(horizons)`.
pub fn type1_sweep(
    seed: u64,
    reps: usize,
    horizons: &[usize],
    thresholds: &[f64],
) -> Result<Vec<Type1SweepRow>> {
    let longest = horizons.iter().copied().max().unwrap_or(0);
    let (p1, p0) = (bern(0.65)?, bern(0.5)?);
    let lr = lr_process(p1, p0.clone())?;
    // Running supremum of ln E_t at each horizon, per path.
    let sups: Vec<Vec<f64>> = (0..reps as u64)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let mut rng = RngStream::new(seed, i).rng();
            let mut e = lr.clone();
            let mut sup = f64::NEG_INFINITY;
            let mut at = Vec::with_capacity(horizons.len());
            let mut running = Vec::with_capacity(longest + 1);
            running.push(0.0);
            for _ in 0..longest {
                sup = sup.max(e.observe(p0.sample(&mut rng))?);
                running.push(sup);
            }
            for &h in horizons {
                at.push(running[h]);
            }
            Ok(at)
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &b in thresholds {
        for (j, &h) in horizons.iter().enumerate() {
            let rate = sups.iter().filter(|s| s[j] >= b.ln()).count() as f64 / reps as f64;
            let alpha = 1.0 / b;
            let bound = alpha + 4.0 * binomial_stderr(alpha, reps);
            rows.push(Type1SweepRow {
                b,
                horizon: h,
                rate,
                stderr: binomial_stderr(rate, reps),
                bound,
                pass: rate <= bound,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MisspecConfig {
    pub p_true: f64,
    pub p1: f64,
    pub p0: f64,
    pub reps: usize,
    pub horizon: usize,
    pub b: f64,
}

impl Default for MisspecConfig {
    fn default() -> Self {
        Self {
            p_true: 0.55,
            p1: 0.80,
            p0: 0.5,
            reps: 500,
            horizon: 300,
            b: 20.0,
        }
    }
}

/// LR evidence for a badly chosen alternative. Reports the empirical drift
/// of `ln E_t / t`, the number of paths whose evidence ever reaches `b`
/// (first passage), the number ending at or above `b`, and the closed-form
/// tail expression for comparison.
pub fn experiment_misspec(seed: u64, cfg: &MisspecConfig) -> Result<ExperimentResult> {
    let (pt, p1, p0) = (bern(cfg.p_true)?, bern(cfg.p1)?, bern(cfg.p0)?);
    let lr = lr_process(p1.clone(), p0.clone())?;
    let target = cfg.b.ln();
    let paths: Vec<(bool, Vec<f64>)> = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|i| -> Result<(bool, Vec<f64>)> {
            let mut rng = RngStream::new(seed, i).rng();
            let mut e = lr.clone();
            let mut traj = Vec::with_capacity(cfg.horizon + 1);
            traj.push(e.log_evidence());
            let mut crossed = false;
            for _ in 0..cfg.horizon {
                let v = e.observe(pt.sample(&mut rng))?;
                crossed |= v >= target;
                traj.push(v);
            }
            Ok((crossed, traj))
        })
        .collect::<Result<_>>()?;
    let n = cfg.reps;
    let t = cfg.horizon as f64;
    let drifts: Vec<f64> = paths.iter().map(|p| p.1[cfg.horizon] / t).collect();
    let (drift, _, drift_se) = mean_sd(&drifts);
    let crossings = paths.iter().filter(|p| p.0).count();
    let terminal = paths.iter().filter(|p| p.1[cfg.horizon] >= target).count();
    let cross_rate = crossings as f64 / n as f64;
    let term_rate = terminal as f64 / n as f64;
    let delta = misspecification_drift(&pt, &p1, &p0)?;
    let bound = if delta < 0.0 {
        misspec_crossing_bound(cfg.horizon, cfg.b, &pt, &p1, &p0)?
    } else {
        f64::NAN
    };
    let mut r = ExperimentResult::new("misspec", seed, n);
    r.param("p_true", cfg.p_true)
        .param("p1", cfg.p1)
        .param("p0", cfg.p0)
        .param("b", cfg.b)
        .param("horizon", t);
    r.metric("drift", drift, drift_se)
        .metric("drift_exact", delta, 0.0)
        .metric(
            "sigma2_true",
            misspecified_moments(&pt, &p1, &p0)?.sigma2,
            0.0,
        )
        .metric(
            "crossings",
            crossings as f64,
            n as f64 * binomial_stderr(cross_rate, n),
        )
        .metric(
            "crossing_fraction",
            cross_rate,
            binomial_stderr(cross_rate, n),
        )
        .metric(
            "terminal_exceedances",
            terminal as f64,
            n as f64 * binomial_stderr(term_rate, n),
        )
        .metric("closed_form_bound", bound, 0.0)
        .metric(
            "mean_final_log_evidence",
            compensated_sum(paths.iter().map(|p| p.1[cfg.horizon])) / n as f64,
            drift_se * t,
        );
    r.trajectories = paths
        .into_iter()
        .take(MAX_TRAJECTORIES)
        .enumerate()
        .map(|(path_id, p)| Trajectory {
            path_id,
            log_evidence: p.1,
        })
        .collect();
    Ok(r)
}

pub const TABLE2_B: [f64; 5] = [10.0, 20.0, 50.0, 100.0, 200.0];
pub const TABLE2_CAP: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table2Reference {
    pub b: f64,
    pub predicted_mean: f64,
    pub mean: f64,
    pub sd: f64,
    pub normalized_residual: f64,
}

/// Published values of the stopping-time table.
pub const TABLE2_REFERENCE: [Table2Reference; 5] = [
    Table2Reference {
        b: 10.0,
        predicted_mean: 50.4,
        mean: 53.0,
        sd: 46.8,
        normalized_residual: 1.75,
    },
    Table2Reference {
        b: 20.0,
        predicted_mean: 65.6,
        mean: 68.2,
        sd: 53.2,
        normalized_residual: 1.52,
    },
    Table2Reference {
        b: 50.0,
        predicted_mean: 85.6,
        mean: 88.2,
        sd: 60.6,
        normalized_residual: 1.33,
    },
    Table2Reference {
        b: 100.0,
        predicted_mean: 100.8,
        mean: 103.5,
        sd: 65.8,
        normalized_residual: 1.27,
    },
    Table2Reference {
        b: 200.0,
        predicted_mean: 115.9,
        mean: 118.2,
        sd: 69.8,
        normalized_residual: 0.99,
    },
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table2 {
    pub seed: u64,
    pub reps: usize,
    pub horizon_cap: usize,
    pub reports: Vec<StoppingReport>,
    pub residual_non_increasing: bool,
}

impl Table2 {
    pub fn rows(&self) -> Vec<StoppingRow> {
        self.reports.iter().map(StoppingReport::row).collect()
    }
}

/// Crossing times under `Bern(0.65)` for `Bern(0.65)` against `Bern(0.5)`
/// at every `b` in [`TABLE2_B`]. All thresholds share the seed, so the
/// rows are computed on common paths.
pub fn verify_table2(seed: u64, reps: usize) -> Result<Table2> {
    let (p1, p0) = (bern(0.65)?, bern(0.5)?);
    let reports = TABLE2_B
        .iter()
        .map(|&b| {
            simulate_stopping(
                &p1,
                &p1,
                &p0,
                &CrossingConfig::new(b, TABLE2_CAP)?,
                reps,
                seed,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let residual_non_increasing = reports
        .windows(2)
        .all(|w| w[1].normalized_residual <= w[0].normalized_residual);
    Ok(Table2 {
        seed,
        reps,
        horizon_cap: TABLE2_CAP,
        reports,
        residual_non_increasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_definition() {
        assert_eq!(median_with_stderr(vec![3.0, 1.0, 2.0]).0, 2.0);
        assert_eq!(median_with_stderr(vec![4.0, 1.0, 2.0, 3.0]).0, 2.5);
        assert_eq!(
            median_with_stderr(vec![1.0, f64::INFINITY, f64::INFINITY]).0,
            f64::INFINITY
        );
    }

    #[test]
    fn accumulation_small() {
        let r = experiment_accumulation(42, 200, 200).unwrap();
        assert!((r.get("crossing_fraction") - 0.97).abs() < 0.05);
        assert!((r.get("slope") - 0.0457).abs() < 0.01);
        assert_eq!(r.trajectories.len(), 100);
        assert_eq!(r.trajectories[0].log_evidence.len(), 201);
        // The ML ratio sits above the valid mixture by roughly the
        // complexity term.
        assert!(r.get("ml_minus_kt_at_T") > 1.0);
        assert!(r.get("ml_minus_lr_at_T") >= 0.0);
    }

    #[test]
    fn unreachable_threshold_never_rejects() {
        let r = experiment_type1(1, 500, 10, 1e6).unwrap();
        assert_eq!(r.get("lr_rate"), 0.0);
        assert_eq!(r.get("ml_rate"), 0.0);
    }

    #[test]
    fn type1_is_deterministic() {
        let a = experiment_type1(5, 300, 100, 20.0).unwrap();
        let b = experiment_type1(5, 300, 100, 20.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_respects_ville() {
        let rows = type1_sweep(3, 4000, &[50, 200], &[5.0, 10.0, 20.0, 50.0]).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| r.pass), "{rows:?}");
    }

    #[test]
    fn correctly_specified_drift_is_positive() {
        let cfg = MisspecConfig {
            p1: 0.55,
            reps: 400,
            ..MisspecConfig::default()
        };
        let r = experiment_misspec(8, &cfg).unwrap();
        let kl = 0.55f64 * (0.55f64 / 0.5).ln() + 0.45 * (0.45f64 / 0.5).ln();
        assert!((r.get("drift_exact") - kl).abs() < 1e-15);
        assert!((r.get("drift") - kl).abs() < 4.0 * r.stderr("drift"));
        assert!(r.get("closed_form_bound").is_nan());
    }

    #[test]
    fn misspec_drift_matches() {
        let r = experiment_misspec(42, &MisspecConfig::default()).unwrap();
        assert!((r.get("drift") + 0.154).abs() < 0.01);
        assert!((r.get("drift_exact") + 0.15383).abs() < 1e-4);
    }

    #[test]
    fn table2_smoke() {
        let t = verify_table2(42, 5000).unwrap();
        assert_eq!(t.reports.len(), 5);
        for (rep, reference) in t.reports.iter().zip(TABLE2_REFERENCE) {
            assert!((rep.predicted_mean - reference.predicted_mean).abs() < 0.05);
            assert!((rep.mean - reference.mean).abs() < 5.0 * rep.mean_stderr + 0.5);
        }
    }
}
