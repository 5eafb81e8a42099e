//! Bernoulli normalized maximum likelihood.
//!
//! `P_NML^(n)(x^n) = (k/n)^k ((n-k)/n)^(n-k) / C_n` where `k` counts ones
//! and `C_n = sum_k binom(n, k) (k/n)^k ((n-k)/n)^(n-k)`, with `0^0 = 1`.
//! Everything depends on a sequence only through its count of ones, so
//! sums over completions collapse to sums over counts.

use crate::error::{EvidenceError, Result};
use crate::prob::Symbol;
use crate::scalar::Field;
use crate::Rational;

/// Largest `n` accepted by [`nml_normalizer`].
pub const MAX_NORMALIZER_N: usize = 30;
/// Largest horizon accepted by the horizon-conditional and marginal routines.
pub const MAX_HORIZON: usize = 16;

fn from_usize<F: Field>(n: usize) -> F {
    F::from_usize(n).expect("small integer representable")
}

fn pow<F: Field>(base: F, exp: usize) -> F {
    (0..exp).fold(F::one(), |acc, _| acc * base.clone())
}

/// `(k/n)^k ((n-k)/n)^(n-k)`, the maximized likelihood of a sequence with
/// `k` ones out of `n`.
pub fn max_likelihood<F: Field>(k: usize, n: usize) -> F {
    if n == 0 {
        return F::one();
    }
    let nn: F = from_usize(n);
    let p = from_usize::<F>(k) / nn.clone();
    let q = from_usize::<F>(n - k) / nn;
    pow(p, k) * pow(q, n - k)
}

/// `binom(n, 0), ..., binom(n, n)` built by Pascal's rule.
pub fn binomial_row<F: Field>(n: usize) -> Vec<F> {
    let mut row = vec![F::one()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(F::one());
        for w in row.windows(2) {
            next.push(w[0].clone() + w[1].clone());
        }
        next.push(F::one());
        row = next;
    }
    row
}

fn normalizer_unchecked<F: Field>(n: usize) -> F {
    binomial_row::<F>(n)
        .into_iter()
        .enumerate()
        .fold(F::zero(), |acc, (k, b)| acc + b * max_likelihood::<F>(k, n))
}

/// The Shtarkov normalizer `C_n`.
pub fn nml_normalizer<F: Field>(n: usize) -> Result<F> {
    if n == 0 {
        return Err(EvidenceError::DomainError(
            "NML normalizer needs n >= 1".into(),
        ));
    }
    if n > MAX_NORMALIZER_N {
        return Err(EvidenceError::BudgetExceeded {
            n,
            max: MAX_NORMALIZER_N,
        });
    }
    Ok(normalizer_unchecked(n))
}

fn count_ones(xs: &[Symbol]) -> Result<usize> {
    xs.iter().try_fold(0usize, |k, &x| match x {
        0 | 1 => Ok(k + x),
        _ => Err(EvidenceError::SymbolOutOfRange { symbol: x, size: 2 }),
    })
}

/// `P_NML^(n)(x^n)` with `n = xs.len()`; the empty sequence has mass one.
pub fn nml_probability<F: Field>(xs: &[Symbol]) -> Result<F> {
    let n = xs.len();
    if n == 0 {
        return Ok(F::one());
    }
    let k = count_ones(xs)?;
    Ok(max_likelihood::<F>(k, n) / nml_normalizer::<F>(n)?)
}

/// Marginal of the horizon-`horizon` NML distribution on `prefix`:
/// `sum over completions y of P_NML^(N)(prefix, y)`.
pub fn nml_prefix_marginal<F: Field>(horizon: usize, prefix: &[Symbol]) -> Result<F> {
    if horizon > MAX_HORIZON {
        return Err(EvidenceError::BudgetExceeded {
            n: horizon,
            max: MAX_HORIZON,
        });
    }
    if prefix.len() > horizon || horizon == 0 {
        return Err(EvidenceError::DomainError(format!(
            "prefix of length {} does not fit horizon {horizon}",
            prefix.len()
        )));
    }
    let k = count_ones(prefix)?;
    let rest = horizon - prefix.len();
    let unnormalized = binomial_row::<F>(rest)
        .into_iter()
        .enumerate()
        .fold(F::zero(), |acc, (j, b)| {
            acc + b * max_likelihood::<F>(k + j, horizon)
        });
    Ok(unnormalized / normalizer_unchecked::<F>(horizon))
}

/// `q_t^(N)(x | history)`: the step-`t` conditional implied by the
/// horizon-`N` NML distribution, exactly.
pub fn nml_horizon_conditional_exact(
    horizon: usize,
    t: usize,
    history: &[Symbol],
    x: Symbol,
) -> Result<Rational> {
    if t == 0 || t > horizon || history.len() + 1 != t {
        return Err(EvidenceError::DomainError(format!(
            "need 1 <= t <= N and |history| = t - 1 (t = {t}, N = {horizon}, |history| = {})",
            history.len()
        )));
    }
    let mut extended = history.to_vec();
    extended.push(x);
    let num: Rational = nml_prefix_marginal(horizon, &extended)?;
    let den: Rational = nml_prefix_marginal(horizon, history)?;
    Ok(num / den)
}

/// [`nml_horizon_conditional_exact`] converted to `f64` at the end.
pub fn nml_horizon_conditional(
    horizon: usize,
    t: usize,
    history: &[Symbol],
    x: Symbol,
) -> Result<f64> {
    use num_traits::ToPrimitive;
    let q = nml_horizon_conditional_exact(horizon, t, history, x)?;
    Ok(q.to_f64().unwrap_or(f64::NAN))
}
