//! Channel and code parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of a q-ary causal error-erasure channel together with the
/// design parameters of the chunked code used over it.
///
/// The chunk fraction θ is held as the integer chunk length `n θ`, which must
/// divide `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Alphabet size.
    pub q: u32,
    /// Fraction of symbols the jammer may substitute.
    pub p: f64,
    /// Fraction of symbols the jammer may erase.
    pub p_star: f64,
    /// Design slack ε.
    pub epsilon: f64,
    /// Block length in symbols.
    pub n: usize,
    /// Chunk length `n θ` in symbols.
    pub chunk_len: usize,
    /// Code rate in q-ary symbols per channel use.
    pub rate: f64,
    /// Number of secrets per message per chunk.
    pub secret_count: usize,
    /// When set, θ and the secret rate follow the asymptotic parameter table.
    #[serde(default)]
    pub theoretical_mode: bool,
}

/// Parses a chunk fraction θ against a block length, returning `n θ`.
pub fn chunk_len_from_theta(n: usize, theta: f64) -> Result<usize> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::config(format!("theta={theta} must lie in (0, 1]")));
    }
    let raw = n as f64 * theta;
    let rounded = raw.round();
    if (raw - rounded).abs() > 1e-9 * raw.max(1.0) || rounded < 1.0 {
        return Err(Error::config(format!(
            "n*theta = {raw} is not a positive integer (n={n}, theta={theta})"
        )));
    }
    let c = rounded as usize;
    if n % c != 0 {
        return Err(Error::config(format!(
            "chunk length n*theta = {c} does not divide n = {n}"
        )));
    }
    Ok(c)
}

/// θ prescribed by the parameter table: `ε² / (9 q²)`.
pub fn table_theta(q: u32, epsilon: f64) -> f64 {
    epsilon * epsilon / (9.0 * (q as f64).powi(2))
}

/// Secret rate prescribed by the parameter table: `θ³ / q²`.
pub fn table_secret_rate(q: u32, theta: f64) -> f64 {
    theta.powi(3) / (q as f64).powi(2)
}

impl ChannelParams {
    /// Parameters with the rate derived from an explicit message count,
    /// `R = log_q(M) / n`.
    #[allow(clippy::too_many_arguments)]
    pub fn with_messages(
        q: u32,
        p: f64,
        p_star: f64,
        epsilon: f64,
        n: usize,
        chunk_len: usize,
        message_count: usize,
        secret_count: usize,
    ) -> Self {
        let rate = (message_count.max(1) as f64).ln() / (q as f64).ln() / n.max(1) as f64;
        ChannelParams {
            q,
            p,
            p_star,
            epsilon,
            n,
            chunk_len,
            rate,
            secret_count,
            theoretical_mode: false,
        }
    }

    /// Parameters following the asymptotic table: `θ = ε²/(9q²)`,
    /// `S = θ³/q²`, secret count `⌈q^{nS}⌉`.
    pub fn theoretical(q: u32, p: f64, p_star: f64, epsilon: f64, n: usize, rate: f64) -> Result<Self> {
        let theta = table_theta(q, epsilon);
        let chunk_len = chunk_len_from_theta(n, theta)?;
        let s = table_secret_rate(q, theta);
        let secrets = (q as f64).powf(n as f64 * s).ceil();
        let params = ChannelParams {
            q,
            p,
            p_star,
            epsilon,
            n,
            chunk_len,
            rate,
            secret_count: secrets.max(1.0) as usize,
            theoretical_mode: true,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn theta(&self) -> f64 {
        self.chunk_len as f64 / self.n as f64
    }

    pub fn chunk_count(&self) -> usize {
        self.n / self.chunk_len
    }

    /// Number of messages, `q^{nR}` rounded to an integer, at least 2.
    pub fn message_count(&self) -> usize {
        let m = (self.n as f64 * self.rate * (self.q as f64).ln()).exp().round();
        if m.is_finite() && m < usize::MAX as f64 {
            (m as usize).max(2)
        } else {
            usize::MAX
        }
    }

    /// `⌊p n⌋`.
    pub fn error_cap(&self) -> usize {
        floor_count(self.p, self.n)
    }

    /// `⌊p* n⌋`.
    pub fn erasure_cap(&self) -> usize {
        floor_count(self.p_star, self.n)
    }

    /// `(q-1)/q`.
    pub fn max_fraction(&self) -> f64 {
        (self.q as f64 - 1.0) / self.q as f64
    }

    /// The chunk ends `{nθ, 2nθ, …, n - nθ}`.
    pub fn chunk_ends(&self) -> impl Iterator<Item = usize> + '_ {
        (1..self.chunk_count()).map(move |k| k * self.chunk_len)
    }

    /// Whether `(p, p*)` lies strictly inside the region where the capacity
    /// formula is positive, `2p + p* < (q-1)/q`.
    pub fn in_positive_region(&self) -> bool {
        2.0 * self.p + self.p_star < self.max_fraction() - 1e-12
    }

    /// Structural checks that every consumer relies on.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.q < 2 {
            errs.push(format!("q={} must be at least 2", self.q));
        }
        if !(0.0..=1.0).contains(&self.p) {
            errs.push(format!("p={} must lie in [0, 1]", self.p));
        }
        if !(0.0..=1.0).contains(&self.p_star) {
            errs.push(format!("pstar={} must lie in [0, 1]", self.p_star));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            errs.push(format!("eps={} must lie in (0, 1)", self.epsilon));
        }
        if self.n == 0 {
            errs.push("n must be positive".into());
        }
        if self.chunk_len == 0 || (self.n > 0 && self.n % self.chunk_len != 0) {
            errs.push(format!(
                "chunk length n*theta = {} must be a positive divisor of n = {}",
                self.chunk_len, self.n
            ));
        }
        if !(self.rate >= 0.0) {
            errs.push(format!("rate={} must be nonnegative", self.rate));
        }
        if self.secret_count == 0 {
            errs.push("secret count must be positive".into());
        }
        if self.theoretical_mode && self.q >= 2 && self.epsilon > 0.0 && self.n > 0 {
            let want = self.n as f64 * table_theta(self.q, self.epsilon);
            if (want - self.chunk_len as f64).abs() > 1e-9 * want.max(1.0) {
                errs.push(format!(
                    "theoretical mode requires n*theta = n*eps^2/(9q^2) = {want}, got {}",
                    self.chunk_len
                ));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// [`validate`](Self::validate) plus the conditions the coding scheme
    /// needs: a positive-capacity budget region and a nonempty chunk range.
    pub fn validate_for_coding(&self) -> Result<()> {
        let mut errs = match self.validate() {
            Ok(()) => Vec::new(),
            Err(Error::Config(e)) => e,
            Err(e) => return Err(e),
        };
        if self.q >= 2 {
            let half = self.max_fraction() / 2.0;
            if self.p > half + 1e-12 {
                errs.push(format!("p={} exceeds (q-1)/(2q) = {half}", self.p));
            }
            if !self.in_positive_region() {
                errs.push(format!(
                    "2p + pstar = {} must be below (q-1)/q = {} for positive capacity",
                    2.0 * self.p + self.p_star,
                    self.max_fraction()
                ));
            }
        }
        if self.chunk_len > 0 && self.n / self.chunk_len.max(1) < 2 {
            errs.push("at least two chunks are required".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// `⌊frac · n⌋` with a small tolerance so that e.g. `0.1 · 10` counts as 1.
pub fn floor_count(frac: f64, n: usize) -> usize {
    let v = frac * n as f64;
    (v + 1e-9).floor().max(0.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ChannelParams {
        ChannelParams {
            q: 2,
            p: 0.125,
            p_star: 0.0,
            epsilon: 0.3,
            n: 4000,
            chunk_len: 10,
            rate: 0.1,
            secret_count: 2,
            theoretical_mode: false,
        }
    }

    #[test]
    fn table_theta_gives_chunk_of_ten() {
        let theta = table_theta(2, 0.3);
        assert!((theta - 0.0025).abs() < 1e-15);
        assert_eq!(chunk_len_from_theta(4000, theta).unwrap(), 10);
    }

    #[test]
    fn non_dividing_chunk_rejected() {
        assert!(chunk_len_from_theta(1000, 0.003).is_err());
        assert!(chunk_len_from_theta(1000, 0.0025).is_err()); // 2.5 symbols
        assert!(chunk_len_from_theta(1000, 0.0).is_err());
    }

    #[test]
    fn caps_and_chunk_ends() {
        let p = base();
        assert_eq!(p.error_cap(), 500);
        assert_eq!(p.erasure_cap(), 0);
        let ends: Vec<_> = p.chunk_ends().collect();
        assert_eq!(ends.len(), 399);
        assert_eq!(ends[0], 10);
        assert_eq!(*ends.last().unwrap(), 3990);
        assert_eq!(floor_count(0.1, 10), 1);
    }

    #[test]
    fn validation_collects_every_violation() {
        let mut p = base();
        p.q = 1;
        p.epsilon = 0.0;
        p.chunk_len = 7;
        match p.validate() {
            Err(Error::Config(errs)) => assert_eq!(errs.len(), 3, "{errs:?}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn coding_requires_positive_region() {
        let mut p = base();
        assert!(p.validate_for_coding().is_ok());
        p.p = 0.3;
        assert!(p.validate().is_ok());
        assert!(p.validate_for_coding().is_err());
    }

    #[test]
    fn theoretical_mode_follows_table() {
        let p = ChannelParams::theoretical(2, 0.125, 0.0, 0.3, 4000, 0.1).unwrap();
        assert_eq!(p.chunk_len, 10);
        // S = θ³/q² = 0.0025³/4, so q^{nS} = 2^{0.0000156} rounds up to 2.
        assert_eq!(p.secret_count, 2);
        let mut bad = p.clone();
        bad.chunk_len = 20;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn message_count_from_rate() {
        let p = ChannelParams::with_messages(2, 0.1, 0.0, 0.3, 64, 8, 4, 2);
        assert_eq!(p.message_count(), 4);
        let p = ChannelParams::with_messages(3, 0.1, 0.0, 0.3, 12, 4, 1, 2);
        assert_eq!(p.message_count(), 2);
    }
}
