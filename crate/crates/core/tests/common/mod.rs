//! Brute-force reference decoder: every (message, secret vector) codeword is
//! materialized and compared against the received word symbol by symbol.
#![allow(dead_code)]

use qcausal_core::{ChannelParams, Codebook, DecodeResult};

pub struct Radii {
    pub q: f64,
    pub p: f64,
    pub p_star: f64,
    pub margin: f64,
    pub n: f64,
}

impl Radii {
    pub fn new(p: &ChannelParams) -> Self {
        let q = p.q as f64;
        Radii { q, p: p.p, p_star: p.p_star, margin: p.epsilon * p.epsilon / (9.0 * q * q), n: p.n as f64 }
    }

    fn alpha(&self, pbar: f64) -> f64 {
        let r = self.q / (self.q - 1.0);
        1.0 - 2.0 * r * (self.p - pbar) - r * self.p_star
    }

    /// `⌊(t-λ) p̂⌋`, or None where the reference trajectory is undefined.
    pub fn list(&self, t: usize, lambda: usize, epsilon: f64) -> Option<usize> {
        let u = (t - lambda) as f64;
        let x = u / self.n;
        let a0 = self.alpha(0.0);
        if x < a0 - epsilon * epsilon / 4.0 - 1e-12 {
            return None;
        }
        let p_hat = if x < a0 {
            self.margin / (a0 * a0)
        } else {
            let pbar = self.p + self.p_star / 2.0 - (self.q - 1.0) / (2.0 * self.q) * (1.0 - x);
            pbar / x + self.margin / (x * x)
        };
        Some((u * p_hat + 1e-9).floor() as usize)
    }

    pub fn consistency(&self, t: usize, lambda: usize) -> i64 {
        let half = (self.q - 1.0) / (2.0 * self.q);
        let v = (self.n - self.n * self.p_star - t as f64 + lambda as f64) * (half - self.margin)
            - self.n * self.p_star / (2.0 * self.q);
        v.floor() as i64
    }
}

/// Every secret vector in lexicographic order.
pub fn secret_vectors(secrets: usize, chunks: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..chunks {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..secrets).map(move |s| {
                    let mut w = v.clone();
                    w.push(s);
                    w
                })
            })
            .collect();
    }
    out
}

fn distance(y: &[u16], x: &[u8], erasure: u16) -> usize {
    y.iter().zip(x).filter(|(&a, &b)| a != erasure && a != b as u16).count()
}

pub fn reference_decode(cb: &Codebook, y: &[u16]) -> DecodeResult {
    let params = cb.params();
    let (n, c) = (params.n, params.chunk_len);
    let erasure = params.q as u16;
    let radii = Radii::new(params);
    let words: Vec<(usize, Vec<u8>)> = (0..cb.message_count())
        .flat_map(|m| {
            secret_vectors(cb.secret_count(), cb.chunk_count())
                .into_iter()
                .map(move |s| (m, cb.encode(m, &s).unwrap()))
        })
        .collect();
    let lambda = |t: usize| y[..t].iter().filter(|&&s| s == erasure).count();
    let ends: Vec<usize> = (1..n / c).map(|k| k * c).collect();
    let floor = radii.alpha(0.0) - params.epsilon * params.epsilon / 4.0;
    let top = 1.0 - radii.q / (radii.q - 1.0) * params.p_star - c as f64 / n as f64;
    let frac = |t: usize| (t - lambda(t)) as f64 / n as f64;
    let Some(&t0) = ends.iter().find(|&&t| frac(t) >= floor - 1e-12) else { return DecodeResult::Exhausted };
    let Some(&stop) = ends.iter().filter(|&&t| frac(t) <= top + 1e-12).last() else {
        return DecodeResult::Exhausted;
    };
    let mut t = t0;
    while t <= stop {
        let l = lambda(t);
        if let Some(r) = radii.list(t, l, params.epsilon) {
            let mut listed: Vec<usize> =
                words.iter().filter(|(_, x)| distance(&y[..t], &x[..t], erasure) <= r).map(|(m, _)| *m).collect();
            listed.dedup();
            let cr = radii.consistency(t, l);
            let mut passing: Vec<usize> = words
                .iter()
                .filter(|(m, x)| listed.contains(m) && cr >= 0 && distance(&y[t..], &x[t..], erasure) as i64 <= cr)
                .map(|(m, _)| *m)
                .collect();
            passing.dedup();
            match passing.len() {
                0 => {}
                1 => return DecodeResult::Decoded { message: passing[0], t_star: t },
                _ => return DecodeResult::Ambiguous { t },
            }
        }
        t += c;
    }
    DecodeResult::Exhausted
}
