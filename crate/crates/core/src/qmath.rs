//! Numeric kernel: the q-ary entropy function, Hamming-ball volumes, the
//! Plotkin bound and the entropy-increment bound used by the trajectory
//! analysis.
//!
//! Entropies are plain `f64` with the `0·log 0 = 0` convention. Ball volumes
//! are exact big integers.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Absolute tolerance applied to every domain check in this module.
pub const DOMAIN_TOL: f64 = 1e-12;

/// Largest argument of the q-ary entropy function, `1 - 1/q`.
#[inline]
pub fn entropy_max_arg(q: u32) -> f64 {
    1.0 - 1.0 / q as f64
}

fn check_q(q: u32) -> Result<()> {
    if q < 2 {
        return Err(Error::domain(format!("alphabet size q={q} must be at least 2")));
    }
    Ok(())
}

/// The q-ary entropy function
/// `H_q(x) = x log_q(q-1) - x log_q x - (1-x) log_q(1-x)` on `[0, 1-1/q]`.
///
/// Arguments within [`DOMAIN_TOL`] of the interval are clamped onto it.
pub fn q_entropy(x: f64, q: u32) -> Result<f64> {
    check_q(q)?;
    let hi = entropy_max_arg(q);
    if !x.is_finite() || x < -DOMAIN_TOL || x > hi + DOMAIN_TOL {
        return Err(Error::domain(format!(
            "q-ary entropy argument {x} outside [0, {hi}] for q={q}"
        )));
    }
    Ok(entropy_unchecked(x.clamp(0.0, hi), q))
}

/// `H_q` extended to the whole real line by clamping: 0 below the interval,
/// 1 above it. Used where an argument past `1 - 1/q` simply means "the ball
/// covers the space".
pub fn q_entropy_capped(x: f64, q: u32) -> f64 {
    let hi = entropy_max_arg(q);
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= hi {
        return 1.0;
    }
    if x <= 0.0 {
        return 0.0;
    }
    entropy_unchecked(x, q)
}

fn entropy_unchecked(x: f64, q: u32) -> f64 {
    let ln_q = (q as f64).ln();
    let mut h = 0.0;
    if x > 0.0 {
        h += x * ((q - 1) as f64).ln() - x * x.ln();
    }
    if x < 1.0 {
        h -= (1.0 - x) * (1.0 - x).ln();
    }
    (h / ln_q).clamp(0.0, 1.0)
}

/// Inverse of `H_q` on `[0, 1-1/q]`, by bisection to machine precision.
/// Values of `h` outside `[0, 1]` are clamped.
pub fn q_entropy_inverse(h: f64, q: u32) -> Result<f64> {
    check_q(q)?;
    if h.is_nan() {
        return Err(Error::domain("entropy value is NaN"));
    }
    let hi_arg = entropy_max_arg(q);
    if h <= 0.0 {
        return Ok(0.0);
    }
    if h >= 1.0 {
        return Ok(hi_arg);
    }
    let (mut lo, mut hi) = (0.0_f64, hi_arg);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if entropy_unchecked(mid, q) < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Number of words of length `n` over a q-ary alphabet within Hamming
/// distance `r` of a fixed word: `sum_{i=0}^{r} C(n,i) (q-1)^i`.
pub fn hamming_ball_volume(n: u64, r: u64, q: u32) -> Result<BigUint> {
    check_q(q)?;
    if r > n {
        return Err(Error::domain(format!("radius {r} exceeds length {n}")));
    }
    let qm1 = BigUint::from(q - 1);
    let mut term = BigUint::one(); // C(n,i) (q-1)^i
    let mut total = BigUint::one();
    for i in 1..=r {
        term = term * BigUint::from(n - i + 1) * &qm1 / BigUint::from(i);
        total += &term;
    }
    Ok(total)
}

/// `q^n` as a big integer.
pub fn q_pow(q: u32, n: u64) -> BigUint {
    let mut acc = BigUint::one();
    let base = BigUint::from(q);
    for _ in 0..n {
        acc *= &base;
    }
    if acc.is_zero() {
        BigUint::one()
    } else {
        acc
    }
}

/// Plotkin bound: a q-ary code of length `n` and minimum distance
/// `d_min > (1-1/q) n` has at most `floor(q d / (q d - (q-1) n))` codewords.
pub fn plotkin_bound(n: u64, d_min: u64, q: u32) -> Result<u64> {
    check_q(q)?;
    let num = q as u128 * d_min as u128;
    let sub = (q as u128 - 1) * n as u128;
    if num <= sub {
        return Err(Error::domain(format!(
            "Plotkin bound is vacuous: d={d_min} <= (1-1/q) n for n={n}, q={q}"
        )));
    }
    let den = num - sub;
    u64::try_from(num / den).map_err(|_| Error::domain("Plotkin bound overflows u64"))
}

/// Both sides of the entropy-increment bound
/// `H_q(x+δ) < H_q(x) + (2√δ + δ ln(q-1)) / ln q`, returned as `(lhs, rhs)`.
pub fn lemma1_margin(x: f64, delta: f64, q: u32) -> Result<(f64, f64)> {
    check_q(q)?;
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::domain(format!("increment {delta} outside (0, 1/2)")));
    }
    let lhs = q_entropy(x + delta, q)?;
    let base = q_entropy(x, q)?;
    let ln_q = (q as f64).ln();
    let rhs = base + (2.0 * delta.sqrt() + delta * ((q - 1) as f64).ln()) / ln_q;
    Ok((lhs, rhs))
}
