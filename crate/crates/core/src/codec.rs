//! The chunked stochastic code: generation, encoding and the iterative
//! list/consistency decoder.
//!
//! Every search here is exhaustive. Because chunks are drawn independently,
//! the minimum distance over secret sequences splits into a sum of per-chunk
//! minima, which keeps the exhaustive searches linear in the table size.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ChannelParams;
use crate::rng::codebook_stream;
use crate::trajectory::{ErasureProfile, Reference};

/// Largest symbol table [`Codebook::generate`] builds without an explicit cap.
pub const DEFAULT_SYMBOL_CAP: usize = 1 << 28;

/// Largest number of secret suffixes [`suffix_goodness`] enumerates.
pub const GOODNESS_ENUM_CAP: u128 = 1 << 20;

const MAGIC: &[u8; 4] = b"QCCB";
const FORMAT_VERSION: u32 = 1;

/// A codebook `C = C₁∘…∘C_K`. Symbols are stored flat, indexed
/// `(chunk, message, secret, offset)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    params: ChannelParams,
    seed: u64,
    message_count: usize,
    symbols: Vec<u8>,
}

impl Codebook {
    pub fn generate(params: &ChannelParams, seed: u64) -> Result<Self> {
        Self::generate_with_cap(params, seed, DEFAULT_SYMBOL_CAP)
    }

    /// Draws every symbol i.i.d. uniform on `{0, …, q-1}` from the codebook
    /// stream of `seed`. Fails if the table would exceed `cap` symbols.
    pub fn generate_with_cap(params: &ChannelParams, seed: u64, cap: usize) -> Result<Self> {
        params.validate()?;
        if params.q > 256 {
            return Err(Error::config(format!("codebooks store one byte per symbol; q={} > 256", params.q)));
        }
        let message_count = params.message_count();
        let size = message_count
            .checked_mul(params.secret_count)
            .and_then(|v| v.checked_mul(params.n))
            .filter(|&v| v <= cap)
            .ok_or_else(|| {
                Error::Resource(format!(
                    "codebook of {message_count} messages x {} secrets x {} symbols exceeds cap {cap}",
                    params.secret_count, params.n
                ))
            })?;
        let mut rng = codebook_stream(seed);
        let q = params.q;
        let symbols = (0..size).map(|_| rng.gen_range(0..q) as u8).collect();
        Ok(Codebook { params: params.clone(), seed, message_count, symbols })
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn message_count(&self) -> usize {
        self.message_count
    }

    pub fn secret_count(&self) -> usize {
        self.params.secret_count
    }

    pub fn chunk_count(&self) -> usize {
        self.params.chunk_count()
    }

    pub fn chunk_len(&self) -> usize {
        self.params.chunk_len
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    /// `C_k(m, s)`.
    pub fn block(&self, chunk: usize, message: usize, secret: usize) -> &[u8] {
        let c = self.params.chunk_len;
        let start = ((chunk * self.message_count + message) * self.params.secret_count + secret) * c;
        &self.symbols[start..start + c]
    }

    /// `C₁(m, s₁)∘…∘C_K(m, s_K)`.
    pub fn encode(&self, message: usize, secrets: &[usize]) -> Result<Vec<u8>> {
        if message >= self.message_count {
            return Err(Error::Index(format!("message {message} >= {}", self.message_count)));
        }
        if secrets.len() != self.chunk_count() {
            return Err(Error::Index(format!(
                "expected {} secrets, got {}",
                self.chunk_count(),
                secrets.len()
            )));
        }
        let mut out = Vec::with_capacity(self.params.n);
        for (k, &s) in secrets.iter().enumerate() {
            if s >= self.secret_count() {
                return Err(Error::Index(format!("secret {s} >= {} in chunk {k}", self.secret_count())));
            }
            out.extend_from_slice(self.block(k, message, s));
        }
        Ok(out)
    }

    /// Serializes as `QCCB`, version, q, n, θ as (nθ, n), message count,
    /// secret count, seed, then p, p*, ε, R and the theoretical flag,
    /// followed by the row-major symbol table.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let p = &self.params;
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&p.q.to_le_bytes())?;
        for v in [p.n, p.chunk_len, p.n, self.message_count, p.secret_count] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        w.write_all(&self.seed.to_le_bytes())?;
        for v in [p.p, p.p_star, p.epsilon, p.rate] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&[p.theoretical_mode as u8])?;
        w.write_all(&self.symbols)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a codebook file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported codebook version {version}")));
        }
        let q = read_u32(&mut r)?;
        let n = read_u64(&mut r)? as usize;
        let theta_num = read_u64(&mut r)? as usize;
        let theta_den = read_u64(&mut r)? as usize;
        let message_count = read_u64(&mut r)? as usize;
        let secret_count = read_u64(&mut r)? as usize;
        let seed = read_u64(&mut r)?;
        let p = read_f64(&mut r)?;
        let p_star = read_f64(&mut r)?;
        let epsilon = read_f64(&mut r)?;
        let rate = read_f64(&mut r)?;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        if theta_den != n || theta_num == 0 {
            return Err(Error::Format(format!("theta {theta_num}/{theta_den} does not match n={n}")));
        }
        let params = ChannelParams {
            q,
            p,
            p_star,
            epsilon,
            n,
            chunk_len: theta_num,
            rate,
            secret_count,
            theoretical_mode: flag[0] != 0,
        };
        params.validate().map_err(|e| Error::Format(e.to_string()))?;
        let size = message_count
            .checked_mul(secret_count)
            .and_then(|v| v.checked_mul(n))
            .ok_or_else(|| Error::Format("table size overflows".into()))?;
        let mut symbols = Vec::new();
        r.take(size as u64 + 1).read_to_end(&mut symbols)?;
        if symbols.len() != size {
            return Err(Error::Format(format!("expected {size} symbols, found {}", symbols.len())));
        }
        if symbols.iter().any(|&s| s as u32 >= q) {
            return Err(Error::Format(format!("symbol out of range for q={q}")));
        }
        Ok(Codebook { params, seed, message_count, symbols })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

/// A channel output. The erasure symbol Λ is stored as the value `q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceivedWord {
    pub q: u32,
    pub symbols: Vec<u16>,
}

impl ReceivedWord {
    pub fn new(q: u32, symbols: Vec<u16>) -> Result<Self> {
        if let Some(bad) = symbols.iter().find(|&&s| s as u32 > q) {
            return Err(Error::domain(format!("received symbol {bad} exceeds erasure code {q}")));
        }
        Ok(ReceivedWord { q, symbols })
    }

    /// The word received over a noiseless channel.
    pub fn clean(q: u32, x: &[u8]) -> Self {
        ReceivedWord { q, symbols: x.iter().map(|&s| s as u16).collect() }
    }

    pub fn erasure_symbol(&self) -> u16 {
        self.q as u16
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn is_erased(&self, i: usize) -> bool {
        self.symbols[i] == self.erasure_symbol()
    }

    pub fn erasure_count(&self) -> usize {
        self.symbols.iter().filter(|&&s| s == self.erasure_symbol()).count()
    }

    /// `λ_t`: erasures among the first `t` symbols.
    pub fn lambda_at(&self, t: usize) -> usize {
        self.symbols[..t].iter().filter(|&&s| s == self.erasure_symbol()).count()
    }

    pub fn erasure_profile(&self, chunk_len: usize) -> ErasureProfile {
        ErasureProfile::from_mask(chunk_len, self.symbols.iter().map(|&s| s == self.erasure_symbol()))
    }
}

/// Disagreements between `y` and `x` on the positions `y` does not erase.
pub fn unerased_distance(y: &[u16], x: &[u8], erasure: u16) -> usize {
    y.iter().zip(x).filter(|(&a, &b)| a != erasure && a != b as u16).count()
}

/// `min_s d(y_k, C_k(m, s))` for one chunk.
fn chunk_min_distance(cb: &Codebook, y: &ReceivedWord, chunk: usize, message: usize) -> usize {
    let c = cb.chunk_len();
    let yk = &y.symbols[chunk * c..(chunk + 1) * c];
    (0..cb.secret_count())
        .map(|s| unerased_distance(yk, cb.block(chunk, message, s), y.erasure_symbol()))
        .min()
        .unwrap_or(usize::MAX)
}

/// For every message, the minimum unerased distance from `y[..t]` to any of
/// its codeword prefixes.
pub fn prefix_min_distances(cb: &Codebook, y: &ReceivedWord, t: usize) -> Vec<usize> {
    let k_end = t / cb.chunk_len();
    (0..cb.message_count())
        .map(|m| (0..k_end).map(|k| chunk_min_distance(cb, y, k, m)).sum())
        .collect()
}

/// For every message, the minimum unerased distance from `y[t..]` to any of
/// its codeword suffixes.
pub fn suffix_min_distances(cb: &Codebook, y: &ReceivedWord, t: usize) -> Vec<usize> {
    let k_start = t / cb.chunk_len();
    (0..cb.message_count())
        .map(|m| (k_start..cb.chunk_count()).map(|k| chunk_min_distance(cb, y, k, m)).sum())
        .collect()
}

/// Messages with some codeword prefix within `radius` of `y[..t]` on
/// unerased positions, in increasing order.
pub fn list_decode_prefix(cb: &Codebook, y: &ReceivedWord, t: usize, radius: usize) -> Vec<usize> {
    prefix_min_distances(cb, y, t)
        .into_iter()
        .enumerate()
        .filter(|&(_, d)| d <= radius)
        .map(|(m, _)| m)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Consistency {
    Unique(usize),
    None,
    Ambiguous(Vec<usize>),
}

/// Consistency check of the listed messages against `y[t..]` with an
/// integer disagreement radius; a negative radius admits nothing.
pub fn consistency_with_radius(
    cb: &Codebook,
    y: &ReceivedWord,
    t: usize,
    list: &[usize],
    radius: i64,
) -> Consistency {
    let k_start = t / cb.chunk_len();
    let passing: Vec<usize> = list
        .iter()
        .copied()
        .filter(|&m| {
            let d: usize = (k_start..cb.chunk_count()).map(|k| chunk_min_distance(cb, y, k, m)).sum();
            radius >= 0 && d as i64 <= radius
        })
        .collect();
    match passing.len() {
        0 => Consistency::None,
        1 => Consistency::Unique(passing[0]),
        _ => Consistency::Ambiguous(passing),
    }
}

/// Consistency radius at `t`, floored to an integer disagreement count.
pub fn consistency_radius(reference: &Reference, t: usize, lambda: usize) -> i64 {
    reference.consistency_radius(t, lambda).floor() as i64
}

/// List-decoding radius `⌊(t - λ_t) p̂_t⌋`.
pub fn list_radius(reference: &Reference, t: usize, lambda: usize) -> Result<usize> {
    Ok((reference.list_radius(t, lambda)? + 1e-9).floor() as usize)
}

/// Checks every listed message over all of its secret suffixes.
pub fn consistency_decode(cb: &Codebook, y: &ReceivedWord, t: usize, list: &[usize]) -> Consistency {
    let reference = Reference::new(cb.params());
    consistency_with_radius(cb, y, t, list, consistency_radius(&reference, t, y.lambda_at(t)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecodeResult {
    Decoded { message: usize, t_star: usize },
    Ambiguous { t: usize },
    Exhausted,
}

/// One iteration of the decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeAttempt {
    pub t: usize,
    pub lambda_t: usize,
    pub list_radius: usize,
    pub list: Vec<usize>,
    pub consistency_radius: i64,
    pub consistency: Consistency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeOutcome {
    pub result: DecodeResult,
    pub t_zero: Option<usize>,
    pub stop_point: Option<usize>,
    pub trace: Vec<DecodeAttempt>,
}

impl DecodeOutcome {
    pub fn decoded(&self) -> Option<usize> {
        match self.result {
            DecodeResult::Decoded { message, .. } => Some(message),
            _ => None,
        }
    }
}

/// The iterative decoder: list-decode the prefix at t, check the listed
/// messages' suffixes, and move t one chunk on until something decodes,
/// an ambiguity is declared, or the stop point is passed.
pub fn bob_decode(cb: &Codebook, y: &ReceivedWord) -> DecodeOutcome {
    bob_decode_with(cb, y, &Reference::new(cb.params()))
}

pub fn bob_decode_with(cb: &Codebook, y: &ReceivedWord, reference: &Reference) -> DecodeOutcome {
    let profile = y.erasure_profile(cb.chunk_len());
    let t_zero = reference.t_zero(&profile);
    let stop_point = reference.stop_point(&profile);
    let mut trace = Vec::new();
    let (Some(t0), Some(stop)) = (t_zero, stop_point) else {
        return DecodeOutcome { result: DecodeResult::Exhausted, t_zero, stop_point, trace };
    };
    let mut t = t0;
    while t <= stop {
        let lambda = profile.at(t);
        let Ok(radius) = list_radius(reference, t, lambda) else {
            t += cb.chunk_len();
            continue;
        };
        let list = list_decode_prefix(cb, y, t, radius);
        let c_radius = consistency_radius(reference, t, lambda);
        let consistency = if list.is_empty() {
            Consistency::None
        } else {
            consistency_with_radius(cb, y, t, &list, c_radius)
        };
        let result = match &consistency {
            Consistency::Unique(m) => Some(DecodeResult::Decoded { message: *m, t_star: t }),
            Consistency::Ambiguous(_) => Some(DecodeResult::Ambiguous { t }),
            Consistency::None => None,
        };
        trace.push(DecodeAttempt {
            t,
            lambda_t: lambda,
            list_radius: radius,
            list,
            consistency_radius: c_radius,
            consistency,
        });
        if let Some(result) = result {
            return DecodeOutcome { result, t_zero, stop_point, trace };
        }
        t += cb.chunk_len();
    }
    DecodeOutcome { result: DecodeResult::Exhausted, t_zero, stop_point, trace }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuffixGoodness {
    /// Secret ids for chunks `t/(nθ), …, K-1`.
    pub secrets: Vec<usize>,
    /// `None` when the excluded list is empty.
    pub min_distance: Option<usize>,
    pub good: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodnessReport {
    pub threshold: f64,
    pub suffixes: Vec<SuffixGoodness>,
    pub good_fraction: f64,
}

/// For each secret suffix of message `m` after `t`, the distance from its
/// codeword suffix to the nearest excluded suffix. A suffix is good when
/// that distance exceeds `(n-t)(q-1)/q - (n-t)·2ε²/(9q³)`.
pub fn suffix_goodness(cb: &Codebook, message: usize, excluded: &[Vec<u8>], t: usize) -> Result<GoodnessReport> {
    let p = cb.params();
    let n = p.n;
    if message >= cb.message_count() {
        return Err(Error::Index(format!("message {message} >= {}", cb.message_count())));
    }
    if let Some(bad) = excluded.iter().find(|e| e.len() != n - t) {
        return Err(Error::domain(format!("excluded suffix of length {} != {}", bad.len(), n - t)));
    }
    let k_start = t / cb.chunk_len();
    let chunks = cb.chunk_count() - k_start;
    let s = cb.secret_count();
    let total = (s as u128).checked_pow(chunks as u32).filter(|&v| v <= GOODNESS_ENUM_CAP).ok_or_else(|| {
        Error::Resource(format!("{s}^{chunks} secret suffixes exceed the enumeration cap"))
    })? as usize;
    let qf = p.q as f64;
    let len = (n - t) as f64;
    let threshold = len * (qf - 1.0) / qf - len * 2.0 * p.epsilon * p.epsilon / (9.0 * qf.powi(3));
    let mut suffixes = Vec::with_capacity(total);
    let mut secrets = vec![0usize; chunks];
    let mut word = Vec::with_capacity(n - t);
    for _ in 0..total {
        word.clear();
        for (j, &sj) in secrets.iter().enumerate() {
            word.extend_from_slice(cb.block(k_start + j, message, sj));
        }
        let min_distance =
            excluded.iter().map(|e| e.iter().zip(&word).filter(|(a, b)| a != b).count()).min();
        let good = min_distance.map_or(true, |d| d as f64 > threshold);
        suffixes.push(SuffixGoodness { secrets: secrets.clone(), min_distance, good });
        for digit in secrets.iter_mut().rev() {
            *digit += 1;
            if *digit < s {
                break;
            }
            *digit = 0;
        }
    }
    let good_fraction = suffixes.iter().filter(|g| g.good).count() as f64 / total.max(1) as f64;
    Ok(GoodnessReport { threshold, suffixes, good_fraction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::hamming_ball_volume;
    use num_traits::ToPrimitive;

    fn toy(q: u32, n: usize, c: usize, m: usize, s: usize) -> ChannelParams {
        ChannelParams::with_messages(q, 1.0 / 16.0, 0.0, 0.3, n, c, m, s)
    }

    #[test]
    fn shape_and_determinism() {
        let p = toy(2, 8, 4, 2, 1);
        let cb = Codebook::generate(&p, 9).unwrap();
        assert_eq!(cb.chunk_count(), 2);
        assert_eq!(cb.symbols().len(), 2 * 2 * 1 * 4);
        assert_eq!(cb.block(1, 1, 0).len(), 4);
        assert_eq!(cb, Codebook::generate(&p, 9).unwrap());
        assert_ne!(cb, Codebook::generate(&p, 10).unwrap());
    }

    #[test]
    fn symbols_are_uniform() {
        // chi-square over 10⁶ symbols with q = 5: 4 degrees of freedom
        let p = toy(5, 1000, 10, 250, 4);
        let cb = Codebook::generate(&p, 3).unwrap();
        assert_eq!(cb.symbols().len(), 1_000_000);
        let mut hist = [0f64; 5];
        for &s in cb.symbols() {
            hist[s as usize] += 1.0;
        }
        let e = 200_000.0;
        let chi2: f64 = hist.iter().map(|h| (h - e) * (h - e) / e).sum();
        assert!(chi2 < 18.47, "chi2={chi2}"); // 0.999 quantile
    }

    #[test]
    fn table_cap_is_enforced() {
        let p = toy(2, 64, 8, 4, 2);
        assert!(matches!(Codebook::generate_with_cap(&p, 1, 100), Err(Error::Resource(_))));
    }

    #[test]
    fn encode_concatenates_chunks() {
        let p = toy(3, 12, 4, 4, 2);
        let cb = Codebook::generate(&p, 4).unwrap();
        let x = cb.encode(2, &[1, 0, 1]).unwrap();
        assert_eq!(&x[..4], cb.block(0, 2, 1));
        assert_eq!(&x[4..8], cb.block(1, 2, 0));
        let x2 = cb.encode(2, &[1, 1, 1]).unwrap();
        assert_eq!(&x[..4], &x2[..4]);
        assert_eq!(&x[8..], &x2[8..]);
        assert!(cb.encode(4, &[0, 0, 0]).is_err());
        assert!(cb.encode(0, &[0, 2, 0]).is_err());
        assert!(cb.encode(0, &[0, 0]).is_err());

        let one = toy(2, 8, 8, 2, 2);
        let cb1 = Codebook::generate(&one, 4).unwrap();
        assert_eq!(cb1.encode(1, &[1]).unwrap(), cb1.block(0, 1, 1));
    }

    #[test]
    fn serialization_round_trip() {
        let p = toy(3, 12, 4, 4, 2);
        let cb = Codebook::generate(&p, 77).unwrap();
        let mut buf = Vec::new();
        cb.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"QCCB");
        let back = Codebook::read_from(&buf[..]).unwrap();
        assert_eq!(back, cb);
        buf.truncate(buf.len() - 1);
        assert!(matches!(Codebook::read_from(&buf[..]), Err(Error::Format(_))));
        let mut junk = buf.clone();
        junk[0] = b'X';
        assert!(matches!(Codebook::read_from(&junk[..]), Err(Error::Format(_))));
    }

    #[test]
    fn list_decode_basics() {
        let p = toy(2, 64, 8, 4, 2);
        let cb = Codebook::generate(&p, 5).unwrap();
        let x = cb.encode(3, &[0, 1, 1, 0, 1, 0, 0, 1]).unwrap();
        let y = ReceivedWord::clean(2, &x);
        assert!(list_decode_prefix(&cb, &y, 32, 0).contains(&3));
        assert_eq!(list_decode_prefix(&cb, &y, 32, 32), vec![0, 1, 2, 3]);
    }

    #[test]
    fn list_decode_matches_enumeration() {
        // every codeword prefix enumerated, t = 8 with chunk 4
        let p = toy(2, 16, 4, 4, 2);
        for seed in 0..20 {
            let cb = Codebook::generate(&p, seed).unwrap();
            let mut ys = vec![0u16; 16];
            for (i, v) in ys.iter_mut().enumerate() {
                *v = ((seed as usize * 7 + i * 3) % 3) as u16; // includes erasures
            }
            let y = ReceivedWord::new(2, ys).unwrap();
            let mut want = Vec::new();
            for m in 0..4 {
                let hit = (0..2).any(|s0| {
                    (0..2).any(|s1| {
                        let x = cb.encode(m, &[s0, s1, 0, 0]).unwrap();
                        unerased_distance(&y.symbols[..8], &x[..8], 2) <= 2
                    })
                });
                if hit {
                    want.push(m);
                }
            }
            assert_eq!(list_decode_prefix(&cb, &y, 8, 2), want, "seed {seed}");
        }
    }

    #[test]
    fn consistency_outcomes() {
        let p = toy(2, 64, 8, 4, 2);
        let cb = Codebook::generate(&p, 6).unwrap();
        let x = cb.encode(1, &[0; 8]).unwrap();
        let y = ReceivedWord::clean(2, &x);
        assert_eq!(consistency_with_radius(&cb, &y, 32, &[1], 0), Consistency::Unique(1));
        assert_eq!(consistency_with_radius(&cb, &y, 32, &[1], -1), Consistency::None);
        assert!(matches!(consistency_with_radius(&cb, &y, 32, &[0, 1, 2], 32), Consistency::Ambiguous(_)));

        // corrupt 3 suffix positions: radius 3 accepts, radius 2 rejects
        let mut ys = y.symbols.clone();
        for i in [40, 50, 60] {
            ys[i] ^= 1;
        }
        let yc = ReceivedWord::new(2, ys).unwrap();
        let d = suffix_min_distances(&cb, &yc, 32)[1];
        assert!(d <= 3);
        assert_eq!(consistency_with_radius(&cb, &yc, 32, &[1], d as i64), Consistency::Unique(1));
        if d > 0 {
            assert_eq!(consistency_with_radius(&cb, &yc, 32, &[1], d as i64 - 1), Consistency::None);
        }
    }

    #[test]
    fn identical_suffixes_are_ambiguous() {
        let p = toy(2, 16, 4, 2, 1);
        let mut cb = Codebook::generate(&p, 1).unwrap();
        // make chunks 2 and 3 of messages 0 and 1 coincide
        for k in 2..4 {
            let src: Vec<u8> = cb.block(k, 0, 0).to_vec();
            let start = (k * 2 + 1) * 4;
            cb.symbols[start..start + 4].copy_from_slice(&src);
        }
        let y = ReceivedWord::clean(2, &cb.encode(0, &[0; 4]).unwrap());
        assert_eq!(consistency_with_radius(&cb, &y, 8, &[0, 1], 0), Consistency::Ambiguous(vec![0, 1]));
    }

    #[test]
    fn radius_monotonicity() {
        let p = toy(2, 64, 8, 4, 2);
        let cb = Codebook::generate(&p, 8).unwrap();
        let ys: Vec<u16> = (0..64).map(|i| ((i * 5) % 3) as u16).collect();
        let y = ReceivedWord::new(2, ys).unwrap();
        let list = [0, 1, 2, 3];
        let mut prev = 0;
        for r in -1..40 {
            let n = match consistency_with_radius(&cb, &y, 24, &list, r) {
                Consistency::None => 0,
                Consistency::Unique(_) => 1,
                Consistency::Ambiguous(v) => v.len(),
            };
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn erased_values_are_never_read() {
        let p = toy(2, 64, 8, 4, 2);
        let cb = Codebook::generate(&p, 12).unwrap();
        let x = cb.encode(2, &[1; 8]).unwrap();
        let mut y = ReceivedWord::clean(2, &x);
        for i in (0..64).step_by(5) {
            y.symbols[i] = 2;
        }
        let a = prefix_min_distances(&cb, &y, 40);
        let b = suffix_min_distances(&cb, &y, 40);
        let mut cb2 = cb.clone();
        // rewrite the codebook at erased positions of every block
        for k in 0..8 {
            for m in 0..4 {
                for s in 0..2 {
                    let start = ((k * 4 + m) * 2 + s) * 8;
                    for o in 0..8 {
                        if (k * 8 + o) % 5 == 0 {
                            cb2.symbols[start + o] ^= 1;
                        }
                    }
                }
            }
        }
        assert_eq!(a, prefix_min_distances(&cb2, &y, 40));
        assert_eq!(b, suffix_min_distances(&cb2, &y, 40));
    }

    #[test]
    fn null_channel_decodes_at_t_zero() {
        let p = toy(2, 64, 8, 4, 2);
        let cb = Codebook::generate(&p, 21).unwrap();
        let x = cb.encode(0, &[1, 0, 1, 0, 1, 0, 1, 0]).unwrap();
        let out = bob_decode(&cb, &ReceivedWord::clean(2, &x));
        assert_eq!(out.result, DecodeResult::Decoded { message: 0, t_star: out.t_zero.unwrap() });
        assert_eq!(out.t_zero, Some(48));
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn goodness_vacuous_and_exact_hit() {
        let p = toy(2, 32, 4, 2, 2);
        let cb = Codebook::generate(&p, 2).unwrap();
        let r = suffix_goodness(&cb, 0, &[], 16).unwrap();
        assert_eq!(r.suffixes.len(), 16);
        assert!(r.suffixes.iter().all(|g| g.good && g.min_distance.is_none()));
        assert_eq!(r.good_fraction, 1.0);

        let secrets = [0, 0, 0, 0, 1, 0, 1, 1];
        let x = cb.encode(0, &secrets).unwrap();
        let r = suffix_goodness(&cb, 0, &[x[16..].to_vec()], 16).unwrap();
        let hit = r.suffixes.iter().find(|g| g.secrets == secrets[4..]).unwrap();
        assert_eq!(hit.min_distance, Some(0));
        assert!(!hit.good);
    }

    #[test]
    fn goodness_matches_forbidden_region() {
        // n - t = 16, 8 excluded suffixes: a suffix is good exactly when it
        // lies outside every excluded ball of radius ⌊threshold⌋
        let p = toy(2, 32, 4, 2, 2);
        let cb = Codebook::generate(&p, 31).unwrap();
        let other = Codebook::generate(&p, 32).unwrap();
        let excluded: Vec<Vec<u8>> = (0..8)
            .map(|j| other.encode(j % 2, &[0, 0, 0, 0, j & 1, (j >> 1) & 1, (j >> 2) & 1, 0]).unwrap()[16..].to_vec())
            .collect();
        let r = suffix_goodness(&cb, 1, &excluded, 16).unwrap();
        let radius = r.threshold.floor() as usize;
        let mut in_region = vec![false; 1 << 16];
        for w in 0..(1usize << 16) {
            in_region[w] = excluded.iter().any(|e| {
                (0..16).filter(|&i| ((w >> i) & 1) as u8 != e[i]).count() <= radius
            });
        }
        let region_size = in_region.iter().filter(|&&b| b).count() as f64;
        let ball = hamming_ball_volume(16, radius as u64, 2).unwrap().to_f64().unwrap();
        assert!(region_size <= 8.0 * ball);
        for g in &r.suffixes {
            let word: Vec<u8> = g.secrets.iter().enumerate().flat_map(|(j, &s)| cb.block(4 + j, 1, s).to_vec()).collect();
            let idx = word.iter().enumerate().fold(0usize, |acc, (i, &b)| acc | ((b as usize) << i));
            assert_eq!(g.good, !in_region[idx]);
        }
    }
}
