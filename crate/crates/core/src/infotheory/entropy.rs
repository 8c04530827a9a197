//! Entropies and divergences. Natural logarithms; `0 log 0 = 0`.

use crate::error::{Error, Result};

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Shannon entropy `-sum p log p`.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlogx(x)).sum::<f64>()
}

/// Entropy of a Bernoulli(`x`) variable.
pub fn binary_entropy(x: f64) -> f64 {
    -xlogx(x) - xlogx(1.0 - x)
}

/// Sum of binary entropies of the coordinates.
pub fn coordinate_entropy(v: &[f64]) -> f64 {
    v.iter().map(|&x| binary_entropy(x)).sum()
}

/// `(sum p^alpha - 1) / (alpha (1 - alpha))` for `alpha` in `(0,1)`.
pub fn tsallis_entropy(p: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("Tsallis exponent {alpha} not in (0,1)")));
    }
    let s: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| x.powf(alpha)).sum();
    Ok((s - 1.0) / (alpha * (1.0 - alpha)))
}

/// Extended relative entropy `sum p log(p/q) - p + q` on nonnegative
/// vectors; `+inf` when some `q_i = 0 < p_i`.
pub fn relative_entropy_ext(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(&a, &b)| ent_term(a, b)).sum()
}

fn ent_term(a: f64, b: f64) -> f64 {
    if a <= 0.0 {
        b
    } else if b <= 0.0 {
        f64::INFINITY
    } else {
        a * (a / b).ln() - a + b
    }
}

/// KL divergence between Bernoulli(`a`) and Bernoulli(`b`).
pub fn kl_bernoulli(a: f64, b: f64) -> f64 {
    ent_term(a, b) + ent_term(1.0 - a, 1.0 - b)
}

/// Positive chi-squared divergence `sum_{p_i >= q_i} (p_i - q_i)^2 / p_i`.
pub fn chi_sq_plus(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&a, &b)| a > 0.0 && a >= b)
        .map(|(&a, &b)| (a - b) * (a - b) / a)
        .sum()
}
