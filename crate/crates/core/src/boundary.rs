//! Threshold crossing of the log-likelihood-ratio walk `S_t = sum Y_s`,
//! `Y = ln(p1/p0)(X)`, and the bounds that go with it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EvidenceError, Result};
use crate::prob::{kl_divergence, Distribution, Symbol};
use crate::rng::RngStream;
use crate::scalar::{compensated_sum, Real};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingConfig {
    pub threshold_b: f64,
    pub horizon_cap: usize,
}

impl CrossingConfig {
    pub fn new(threshold_b: f64, horizon_cap: usize) -> Result<Self> {
        if !(threshold_b > 1.0) || !threshold_b.is_finite() {
            return Err(EvidenceError::DomainError(format!(
                "threshold must exceed 1, got {threshold_b}"
            )));
        }
        if horizon_cap == 0 {
            return Err(EvidenceError::DomainError(
                "horizon cap must be >= 1".into(),
            ));
        }
        Ok(Self {
            threshold_b,
            horizon_cap,
        })
    }

    pub fn log_threshold(&self) -> f64 {
        self.threshold_b.ln()
    }
}

/// Mean and variance of `Y` under `p1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncrementMoments<T> {
    pub mu: T,
    pub sigma2: T,
}

impl<T: Real> IncrementMoments<T> {
    /// `E[Y^2] = sigma2 + mu^2`.
    pub fn second_moment(&self) -> T {
        self.sigma2 + self.mu * self.mu
    }
}

/// `ln(p1/p0)` per symbol; `-inf` where `p1` vanishes.
fn increments<T: Real>(p1: &Distribution<T>, p0: &Distribution<T>) -> Result<Vec<T>> {
    p1.alphabet().check_same(p0.alphabet())?;
    p1.probs()
        .iter()
        .zip(p0.probs())
        .enumerate()
        .map(|(x, (&a, &b))| {
            if b == T::zero() && a > T::zero() {
                Err(EvidenceError::AbsoluteContinuityViolation { step: 1, symbol: x })
            } else if a == T::zero() {
                Ok(T::neg_infinity())
            } else {
                Ok(a.ln() - b.ln())
            }
        })
        .collect()
}

/// Moments of `Y = ln(p1/p0)(X)` for `X ~ weights`.
fn moments_under<T: Real>(weights: &Distribution<T>, y: &[T]) -> IncrementMoments<T> {
    let support = || {
        weights
            .probs()
            .iter()
            .zip(y)
            .filter(|(w, _)| **w > T::zero())
    };
    let mu = support().map(|(&w, &v)| w * v).sum::<T>();
    let sigma2 = support().map(|(&w, &v)| w * (v - mu) * (v - mu)).sum::<T>();
    IncrementMoments { mu, sigma2 }
}

pub fn increment_moments<T: Real>(
    p1: &Distribution<T>,
    p0: &Distribution<T>,
) -> Result<IncrementMoments<T>> {
    let y = increments(p1, p0)?;
    Ok(moments_under(p1, &y))
}

/// Running log-LR from symbol counts, so every replication computes `S_t`
/// the same way regardless of order of accumulation.
struct Walk<'a> {
    y: &'a [f64],
    counts: Vec<u64>,
}

impl<'a> Walk<'a> {
    fn new(y: &'a [f64]) -> Self {
        Self {
            y,
            counts: vec![0; y.len()],
        }
    }

    fn push(&mut self, x: Symbol) -> f64 {
        self.counts[x] += 1;
        self.value()
    }

    fn value(&self) -> f64 {
        self.counts
            .iter()
            .zip(self.y)
            .filter(|(c, _)| **c > 0)
            .map(|(&c, &y)| c as f64 * y)
            .sum()
    }
}

/// First `t` with `S_t >= ln b`, and whether the path was censored at the
/// cap (then `tau = cap`).
pub fn crossing_time(
    path: &[Symbol],
    p1: &Distribution<f64>,
    p0: &Distribution<f64>,
    cfg: &CrossingConfig,
) -> Result<(usize, bool)> {
    if path.len() < cfg.horizon_cap {
        return Err(EvidenceError::DomainError(format!(
            "path of length {} is shorter than the cap {}",
            path.len(),
            cfg.horizon_cap
        )));
    }
    let y = increments(p1, p0)?;
    let mut walk = Walk::new(&y);
    let target = cfg.log_threshold();
    for (t, &x) in path[..cfg.horizon_cap].iter().enumerate() {
        p1.alphabet().check(x)?;
        if walk.push(x) >= target {
            return Ok((t + 1, false));
        }
    }
    Ok((cfg.horizon_cap, true))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingSample {
    pub tau: usize,
    pub censored: bool,
    /// `S_tau` (or `S_cap` when censored).
    pub log_evidence_at_stop: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingReport {
    pub b: f64,
    pub reps: usize,
    pub horizon_cap: usize,
    pub seed: u64,
    pub mu: f64,
    pub sigma2: f64,
    /// Over uncensored replications.
    pub mean: f64,
    pub sd: f64,
    pub mean_stderr: f64,
    pub censor_rate: f64,
    pub predicted_mean: f64,
    pub normalized_residual: f64,
    #[serde(skip)]
    pub samples: Vec<StoppingSample>,
}

/// The Table-2 layout of a report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingRow {
    pub b: f64,
    pub predicted_mean: f64,
    pub mean: f64,
    pub sd: f64,
    pub censor_rate: f64,
    pub normalized_residual: f64,
}

impl StoppingReport {
    pub fn row(&self) -> StoppingRow {
        StoppingRow {
            b: self.b,
            predicted_mean: self.predicted_mean,
            mean: self.mean,
            sd: self.sd,
            censor_rate: self.censor_rate,
            normalized_residual: self.normalized_residual,
        }
    }

    fn uncensored(&self) -> impl Iterator<Item = &StoppingSample> {
        self.samples.iter().filter(|s| !s.censored)
    }
}

/// Sample mean, sample sd (n - 1 denominator) and standard error of the mean.
pub fn mean_sd(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(values.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0, 0.0);
    }
    let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    let sd = (ss / (n - 1) as f64).sqrt();
    (mean, sd, sd / (n as f64).sqrt())
}

/// Replications of the crossing time with data drawn from `p_data`.
///
/// Replication `i` uses stream `(seed, i)`, so the result does not depend
/// on the number of worker threads.
pub fn simulate_stopping(
    p_data: &Distribution<f64>,
    p1: &Distribution<f64>,
    p0: &Distribution<f64>,
    cfg: &CrossingConfig,
    reps: usize,
    seed: u64,
) -> Result<StoppingReport> {
    if reps == 0 {
        return Err(EvidenceError::DomainError("reps must be >= 1".into()));
    }
    p_data.alphabet().check_same(p1.alphabet())?;
    let y = increments(p1, p0)?;
    let m = moments_under(p1, &y);
    let target = cfg.log_threshold();
    let samples: Vec<StoppingSample> = (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i).rng();
            let mut walk = Walk::new(&y);
            let mut s = 0.0;
            for t in 1..=cfg.horizon_cap {
                s = walk.push(p_data.sample(&mut rng));
                if s >= target {
                    return StoppingSample {
                        tau: t,
                        censored: false,
                        log_evidence_at_stop: s,
                    };
                }
            }
            StoppingSample {
                tau: cfg.horizon_cap,
                censored: true,
                log_evidence_at_stop: s,
            }
        })
        .collect();
    let taus: Vec<f64> = samples
        .iter()
        .filter(|s| !s.censored)
        .map(|s| s.tau as f64)
        .collect();
    let (mean, sd, mean_stderr) = mean_sd(&taus);
    let predicted_mean = target / m.mu;
    Ok(StoppingReport {
        b: cfg.threshold_b,
        reps,
        horizon_cap: cfg.horizon_cap,
        seed,
        mu: m.mu,
        sigma2: m.sigma2,
        mean,
        sd,
        mean_stderr,
        censor_rate: (reps - taus.len()) as f64 / reps as f64,
        predicted_mean,
        normalized_residual: (mean - predicted_mean) / target.sqrt(),
        samples,
    })
}

/// Wald's identity and Lorden's overshoot bound, checked on a report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaldLordenCheck {
    pub mu: f64,
    pub drift_estimate: f64,
    pub drift_stderr: f64,
    pub wald_pass: bool,
    pub mean_overshoot: f64,
    pub overshoot_stderr: f64,
    pub lorden_bound: f64,
    pub lorden_pass: bool,
}

/// `mean(S_tau) / mean(tau)` against `mu` (delta-method standard error)
/// and `mean(S_tau - ln b)` against `E[Y^2] / mu`, each allowed three
/// standard errors. Censored replications are excluded.
pub fn wald_lorden_check(report: &StoppingReport) -> WaldLordenCheck {
    let s: Vec<f64> = report
        .uncensored()
        .map(|x| x.log_evidence_at_stop)
        .collect();
    let tau: Vec<f64> = report.uncensored().map(|x| x.tau as f64).collect();
    let n = s.len() as f64;
    let (ms, _, _) = mean_sd(&s);
    let (mt, _, _) = mean_sd(&tau);
    let ratio = ms / mt;
    let resid: Vec<f64> = s.iter().zip(&tau).map(|(a, b)| a - ratio * b).collect();
    let (_, rsd, _) = mean_sd(&resid);
    let drift_stderr = rsd / (mt * n.sqrt());
    let log_b = report.b.ln();
    let over: Vec<f64> = s.iter().map(|v| v - log_b).collect();
    let (mean_overshoot, _, overshoot_stderr) = mean_sd(&over);
    let lorden_bound = (report.sigma2 + report.mu * report.mu) / report.mu;
    WaldLordenCheck {
        mu: report.mu,
        drift_estimate: ratio,
        drift_stderr,
        wald_pass: (ratio - report.mu).abs() <= 3.0 * drift_stderr,
        mean_overshoot,
        overshoot_stderr,
        lorden_bound,
        lorden_pass: mean_overshoot <= lorden_bound + 3.0 * overshoot_stderr,
    }
}

/// Leading-order sample size `ln(1/alpha) / mu`.
pub fn sample_complexity<T: Real>(alpha: T, mu: T) -> Result<T> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(EvidenceError::DomainError(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if !(mu > T::zero()) || !mu.is_finite() {
        return Err(EvidenceError::DomainError(format!(
            "mu must be positive, got {mu}"
        )));
    }
    Ok(-alpha.ln() / mu)
}

/// `ln(1/alpha)/mu` with a `z`-sd band from the crossing-time variance
/// `sigma2 ln(1/alpha) / mu^3`.
pub fn sample_complexity_band(
    alpha: f64,
    m: &IncrementMoments<f64>,
    z: f64,
) -> Result<(f64, f64, f64)> {
    let n = sample_complexity(alpha, m.mu)?;
    let half = z * (m.sigma2 * (1.0 / alpha).ln() / m.mu.powi(3)).sqrt();
    Ok((n - half, n, n + half))
}

/// `exp(-(mu t - ln b)^2 / (2 sigma2 t))`, an upper bound on
/// `P(tau_b > t)` for `t >= ln(b)/mu`.
pub fn detection_tail_bound(t: f64, b: f64, m: &IncrementMoments<f64>) -> Result<f64> {
    if !(b > 1.0) || !(m.mu > 0.0) {
        return Err(EvidenceError::DomainError("need b > 1 and mu > 0".into()));
    }
    let log_b = b.ln();
    let gap = m.mu * t - log_b;
    // Relative slack for t computed as ln(b)/mu in floating point.
    if gap < -1e-12 * log_b {
        return Err(EvidenceError::DomainError(format!(
            "t = {t} is below ln(b)/mu = {}",
            log_b / m.mu
        )));
    }
    let gap = gap.max(0.0);
    if m.sigma2 == 0.0 {
        return Ok(if gap > 0.0 { 0.0 } else { 1.0 });
    }
    Ok((-(gap * gap) / (2.0 * m.sigma2 * t)).exp().clamp(0.0, 1.0))
}

/// `delta = KL(p_true || p0) - KL(p_true || p1)`, the drift of `S_t` when
/// the data come from `p_true`.
pub fn misspecification_drift<T: Real>(
    p_true: &Distribution<T>,
    p1: &Distribution<T>,
    p0: &Distribution<T>,
) -> Result<T> {
    Ok(kl_divergence(p_true, p0)? - kl_divergence(p_true, p1)?)
}

/// Moments of `Y = ln(p1/p0)` under `p_true`.
pub fn misspecified_moments<T: Real>(
    p_true: &Distribution<T>,
    p1: &Distribution<T>,
    p0: &Distribution<T>,
) -> Result<IncrementMoments<T>> {
    let y = increments(p1, p0)?;
    Ok(moments_under(p_true, &y))
}

/// `exp(-(ln b + |delta| T)^2 / (2 sigma_true^2 T))`.
///
/// This is the closed form as stated for the misspecified walk. It is a
/// Gaussian tail for the terminal value only; it does not dominate the
/// first-passage probability (see `harness::experiment_misspec`).
pub fn misspec_crossing_bound(
    horizon: usize,
    b: f64,
    p_true: &Distribution<f64>,
    p1: &Distribution<f64>,
    p0: &Distribution<f64>,
) -> Result<f64> {
    if horizon == 0 {
        return Err(EvidenceError::DomainError("horizon must be >= 1".into()));
    }
    if !(b > 1.0) {
        return Err(EvidenceError::DomainError(format!(
            "threshold must exceed 1, got {b}"
        )));
    }
    let delta = misspecification_drift(p_true, p1, p0)?;
    if delta >= 0.0 {
        return Err(EvidenceError::DomainError(format!(
            "drift must be negative for a divergence bound, got {delta}"
        )));
    }
    let var = misspecified_moments(p_true, p1, p0)?.sigma2;
    let t = horizon as f64;
    let num = b.ln() + delta.abs() * t;
    if var == 0.0 {
        return Ok(0.0);
    }
    Ok((-(num * num) / (2.0 * var * t)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern(p: f64) -> Distribution<f64> {
        Distribution::bernoulli(p).unwrap()
    }

    #[test]
    fn moments_two_point() {
        let m = increment_moments(&bern(0.65), &bern(0.5)).unwrap();
        assert!((m.mu - 0.0457).abs() < 1e-4);
        let d = 1.3f64.ln() - 0.7f64.ln();
        assert!((m.sigma2 - 0.65 * 0.35 * d * d).abs() < 1e-15);
        let z = increment_moments(&bern(0.3), &bern(0.3)).unwrap();
        assert_eq!((z.mu, z.sigma2), (0.0, 0.0));
        let f = increment_moments(
            &Distribution::bernoulli(0.65f32).unwrap(),
            &Distribution::bernoulli(0.5f32).unwrap(),
        )
        .unwrap();
        assert!((f.mu - 0.0457).abs() < 1e-4);
        assert!(increment_moments(&bern(0.5), &bern(0.0)).is_err());
    }

    #[test]
    fn crossing_time_deterministic_paths() {
        let cfg = CrossingConfig::new(2.0, 10).unwrap();
        let ones = vec![1; 10];
        assert_eq!(
            crossing_time(&ones, &bern(0.65), &bern(0.5), &cfg).unwrap(),
            (3, false)
        );
        assert_eq!((2f64.ln() / 1.3f64.ln()).ceil(), 3.0);
        let tiny = CrossingConfig::new(1.0 + 1e-9, 5).unwrap();
        assert_eq!(
            crossing_time(&ones, &bern(0.65), &bern(0.5), &tiny).unwrap(),
            (1, false)
        );
        let zeros = vec![0; 10];
        assert_eq!(
            crossing_time(&zeros, &bern(0.65), &bern(0.5), &cfg).unwrap(),
            (10, true)
        );
        assert!(crossing_time(&ones[..4], &bern(0.65), &bern(0.5), &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(CrossingConfig::new(1.0, 10).is_err());
        assert!(CrossingConfig::new(2.0, 0).is_err());
    }

    #[test]
    fn null_data_mostly_censored() {
        let cfg = CrossingConfig::new(20.0, 500).unwrap();
        let r = simulate_stopping(&bern(0.5), &bern(0.65), &bern(0.5), &cfg, 10_000, 7).unwrap();
        assert!(r.censor_rate >= 0.95, "{}", r.censor_rate);
        let alpha: f64 = 1.0 / 20.0;
        let sigma = (alpha * (1.0 - alpha) / 10_000.0).sqrt();
        assert!(r.censor_rate >= 1.0 - alpha - 3.0 * sigma);
    }

    #[test]
    fn simulation_is_reproducible() {
        let cfg = CrossingConfig::new(10.0, 2000).unwrap();
        let a = simulate_stopping(&bern(0.65), &bern(0.65), &bern(0.5), &cfg, 3000, 1).unwrap();
        let b = simulate_stopping(&bern(0.65), &bern(0.65), &bern(0.5), &cfg, 3000, 1).unwrap();
        assert_eq!(a, b);
        assert!((a.mean - 53.0).abs() < 4.0 * a.mean_stderr + 0.5);
    }

    #[test]
    fn wald_and_lorden_hold() {
        let cfg = CrossingConfig::new(50.0, 2000).unwrap();
        let r = simulate_stopping(&bern(0.65), &bern(0.65), &bern(0.5), &cfg, 20_000, 11).unwrap();
        let w = wald_lorden_check(&r);
        assert!(w.wald_pass && w.lorden_pass, "{w:?}");
    }

    #[test]
    fn sample_complexity_values() {
        assert!((sample_complexity(0.01f64, 0.05).unwrap() - 92.1034).abs() < 1e-3);
        assert!((sample_complexity(1.0 / std::f64::consts::E, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((sample_complexity(0.05f64, 0.0457).unwrap() - 65.55).abs() < 0.05);
        assert!(sample_complexity(0.0, 1.0).is_err());
        assert!(sample_complexity(0.5, 0.0).is_err());
        let m = increment_moments(&bern(0.65), &bern(0.5)).unwrap();
        let (lo, mid, hi) = sample_complexity_band(0.05, &m, 1.0).unwrap();
        assert!(lo < mid && mid < hi);
    }

    #[test]
    fn tail_bound_cases() {
        let m = increment_moments(&bern(0.65), &bern(0.5)).unwrap();
        let t0 = 20f64.ln() / m.mu;
        assert_eq!(detection_tail_bound(t0, 20.0, &m).unwrap(), 1.0);
        let v = detection_tail_bound(131.0, 20.0, &m).unwrap();
        let d = 0.0457 * 131.0 - 20f64.ln();
        let approx = (-(d * d) / (2.0 * 0.0871 * 131.0)).exp();
        assert!(
            (v - approx).abs() < 1e-3 && (v - 0.6759).abs() < 1e-4,
            "{v}"
        );
        assert!(detection_tail_bound(10.0, 20.0, &m).is_err());
        let flat = IncrementMoments {
            mu: 0.1,
            sigma2: 0.0,
        };
        assert_eq!(detection_tail_bound(100.0, 20.0, &flat).unwrap(), 0.0);
    }

    #[test]
    fn tail_bound_dominates_simulation() {
        let m = increment_moments(&bern(0.65), &bern(0.5)).unwrap();
        let cfg = CrossingConfig::new(20.0, 2000).unwrap();
        let r = simulate_stopping(&bern(0.65), &bern(0.65), &bern(0.5), &cfg, 20_000, 5).unwrap();
        let late = r.samples.iter().filter(|s| s.tau > 131).count() as f64 / 20_000.0;
        assert!(late <= detection_tail_bound(131.0, 20.0, &m).unwrap());
    }

    #[test]
    fn misspecification_drift_value() {
        let d = misspecification_drift(&bern(0.55), &bern(0.8), &bern(0.5)).unwrap();
        assert!((d + 0.154).abs() < 1e-3, "{d}");
        assert!(misspec_crossing_bound(0, 20.0, &bern(0.55), &bern(0.8), &bern(0.5)).is_err());
        assert!(misspec_crossing_bound(300, 20.0, &bern(0.8), &bern(0.8), &bern(0.5)).is_err());
    }

    #[test]
    fn misspec_formula_does_not_bound_first_passage() {
        // Exact first-passage probability by dynamic programming over the
        // count of ones; compare with the closed form.
        let (pt, p1, p0) = (bern(0.55), bern(0.8), bern(0.5));
        let y = increments(&p1, &p0).unwrap();
        let horizon = 300;
        let target = 20f64.ln();
        let mut alive = vec![1.0f64];
        let mut crossed = 0.0;
        for t in 1..=horizon {
            let mut next = vec![0.0; t + 1];
            for (k, &w) in alive.iter().enumerate() {
                next[k] += w * 0.45;
                next[k + 1] += w * 0.55;
            }
            for (k, w) in next.iter_mut().enumerate() {
                if k as f64 * y[1] + (t - k) as f64 * y[0] >= target {
                    crossed += *w;
                    *w = 0.0;
                }
            }
            alive = next;
        }
        let bound = misspec_crossing_bound(horizon, 20.0, &pt, &p1, &p0).unwrap();
        assert!(bound < 1e-3);
        assert!(crossed > 0.09 && crossed < 0.12, "{crossed}");
    }
}
