//! Capacity of the q-ary causal error-erasure channel.
//!
//! The capacity is `min_{p̄ ∈ [0,p]} α(p̄) (1 - H_q(p̄ / α(p̄)))` with
//! `α(p̄) = 1 - (2q/(q-1))(p - p̄) - (q/(q-1)) p*`, and zero outside the
//! region `p ≤ (q-1)/(2q)`, `p* ≤ (q-1)/q`, `p + p* ≤ (q-1)/q`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::params::ChannelParams;
use crate::qmath::{entropy_max_arg, q_entropy_capped};

/// Points in the coarse bracketing scan.
pub const SCAN_POINTS: usize = 1024;
/// Golden-section stopping width in p̄.
pub const GOLDEN_TOL: f64 = 1e-10;
/// Slack for the closed region comparisons.
pub const REGION_TOL: f64 = 1e-12;

/// The three numbers the capacity depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub q: u32,
    pub p: f64,
    pub p_star: f64,
}

impl ChannelModel {
    pub fn new(q: u32, p: f64, p_star: f64) -> Self {
        ChannelModel { q, p, p_star }
    }

    fn ratio(&self) -> f64 {
        self.q as f64 / (self.q as f64 - 1.0)
    }

    /// `(q-1)/q`.
    pub fn max_fraction(&self) -> f64 {
        entropy_max_arg(self.q)
    }

    /// True when `(p, p*)` is outside the region where the min-formula
    /// applies, so the capacity is zero by definition.
    pub fn outside_region(&self) -> bool {
        let top = self.max_fraction();
        self.p > top / 2.0 + REGION_TOL
            || self.p_star > top + REGION_TOL
            || self.p + self.p_star > top + REGION_TOL
            || self.p < 0.0
            || self.p_star < 0.0
    }

    /// `p̄` at which `p̄ / α(p̄)` reaches `1 - 1/q`; below it the rate term is
    /// excluded.
    pub fn zero_crossing(&self) -> f64 {
        2.0 * self.p + self.p_star - self.max_fraction()
    }
}

impl From<&ChannelParams> for ChannelModel {
    fn from(p: &ChannelParams) -> Self {
        ChannelModel::new(p.q, p.p, p.p_star)
    }
}

/// `α_q(p̄) = 1 - (2q/(q-1))(p - p̄) - (q/(q-1)) p*`.
pub fn alpha_q(pbar: f64, ch: &ChannelModel) -> f64 {
    let r = ch.ratio();
    1.0 - 2.0 * r * (ch.p - pbar) - r * ch.p_star
}

/// The bracketed term `α(p̄)(1 - H_q(p̄/α(p̄)))`, or `None` when `α(p̄) ≤ 0` or
/// `p̄/α(p̄) > 1 - 1/q`.
pub fn rate_term(pbar: f64, ch: &ChannelModel) -> Option<f64> {
    let a = alpha_q(pbar, ch);
    if a <= 0.0 {
        return None;
    }
    let arg = pbar / a;
    if arg > ch.max_fraction() + REGION_TOL || arg < -REGION_TOL {
        return None;
    }
    Some(a * (1.0 - q_entropy_capped(arg, ch.q)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub value: f64,
    pub argmin_pbar: f64,
    pub zero_region: bool,
}

/// Feasible p̄ interval, or `None` when the minimum is known to be zero
/// (which also covers the "otherwise" branch).
enum Feasible {
    Interval(f64, f64),
    Zero { argmin: f64, zero_region: bool },
}

fn feasible(ch: &ChannelModel) -> Feasible {
    if ch.outside_region() {
        return Feasible::Zero { argmin: 0.0, zero_region: true };
    }
    let z = ch.zero_crossing();
    if z >= -REGION_TOL {
        return Feasible::Zero { argmin: z.clamp(0.0, ch.p), zero_region: false };
    }
    Feasible::Interval(0.0, ch.p)
}

fn eval(pbar: f64, ch: &ChannelModel) -> f64 {
    rate_term(pbar, ch).unwrap_or(f64::INFINITY)
}

/// Capacity by a 1024-point bracketing scan followed by golden-section
/// refinement.
pub fn capacity(ch: &ChannelModel) -> CapacityResult {
    let (lo, hi) = match feasible(ch) {
        Feasible::Zero { argmin, zero_region } => {
            return CapacityResult { value: 0.0, argmin_pbar: argmin, zero_region }
        }
        Feasible::Interval(lo, hi) => (lo, hi),
    };
    if hi - lo <= 0.0 {
        return CapacityResult { value: eval(lo, ch).max(0.0), argmin_pbar: lo, zero_region: false };
    }

    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let grid = |i: usize| if i == SCAN_POINTS - 1 { hi } else { lo + step * i as f64 };
    let (best_i, best_v) = (0..SCAN_POINTS)
        .map(|i| (i, eval(grid(i), ch)))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });

    let a = grid(best_i.saturating_sub(1));
    let b = grid((best_i + 1).min(SCAN_POINTS - 1));
    let (x, v) = golden_section(|x| eval(x, ch), a, b, GOLDEN_TOL);

    let (argmin, value) = if v < best_v { (x, v) } else { (grid(best_i), best_v) };
    CapacityResult { value: value.max(0.0), argmin_pbar: argmin, zero_region: false }
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc < fd { (c, fc) } else { (d, fd) };
    for x in [a, b] {
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Independent reference: minimum of the rate term over `points` equally
/// spaced p̄ values (endpoints included), evaluated in parallel.
pub fn capacity_grid_oracle(ch: &ChannelModel, points: usize) -> CapacityResult {
    let (lo, hi) = match feasible(ch) {
        Feasible::Zero { argmin, zero_region } => {
            return CapacityResult { value: 0.0, argmin_pbar: argmin, zero_region }
        }
        Feasible::Interval(lo, hi) => (lo, hi),
    };
    let points = points.max(2);
    let step = (hi - lo) / (points - 1) as f64;
    let (i, v) = (0..points)
        .into_par_iter()
        .with_min_len(4096)
        .map(|i| {
            let x = if i == points - 1 { hi } else { lo + step * i as f64 };
            (i, eval(x, ch))
        })
        .reduce(
            || (usize::MAX, f64::INFINITY),
            |a, b| if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a },
        );
    let x = if i == points - 1 { hi } else { lo + step * i as f64 };
    CapacityResult { value: v.max(0.0), argmin_pbar: x, zero_region: false }
}

/// Closed forms for the special channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialCase {
    /// `p = 0`: `1 - (q/(q-1)) p*`.
    ErasureOnly,
    /// `p* = 0`: the general formula with no erasures.
    ErrorOnly,
    /// Large-alphabet limit `1 - 2p - p*`.
    LargeQ,
}

pub fn special_case_capacity(kind: SpecialCase, ch: &ChannelModel) -> f64 {
    match kind {
        SpecialCase::ErasureOnly => {
            if ch.p_star > ch.max_fraction() {
                0.0
            } else {
                1.0 - ch.ratio() * ch.p_star
            }
        }
        SpecialCase::ErrorOnly => capacity(&ChannelModel::new(ch.q, ch.p, 0.0)).value,
        SpecialCase::LargeQ => (1.0 - 2.0 * ch.p - ch.p_star).max(0.0),
    }
}

/// One row of the capacity surface.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SurfacePoint {
    pub q: u32,
    pub p: f64,
    pub p_star: f64,
    pub capacity: f64,
}

/// Capacity over a rectangular grid of `(p, p*)` for each alphabet size.
pub fn capacity_surface(qs: &[u32], p_steps: usize, pstar_steps: usize) -> Vec<SurfacePoint> {
    let mut rows = Vec::new();
    for &q in qs {
        let top = entropy_max_arg(q);
        for i in 0..=p_steps {
            let p = top / 2.0 * i as f64 / p_steps.max(1) as f64;
            for j in 0..=pstar_steps {
                let p_star = top * j as f64 / pstar_steps.max(1) as f64;
                let c = capacity(&ChannelModel::new(q, p, p_star)).value;
                rows.push(SurfacePoint { q, p, p_star, capacity: c });
            }
        }
    }
    rows
}
