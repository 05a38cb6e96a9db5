//! Decoder reference trajectories and the conditions they satisfy.
//!
//! Everything here is indexed by chunk ends `t = k·nθ` and the erasure count
//! `λ_t` observed up to `t`. The quantity that matters is the number of
//! unerased prefix symbols `t - λ_t`.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::capacity::{alpha_q, capacity, ChannelModel};
use crate::error::{Error, Result};
use crate::params::ChannelParams;
use crate::qmath::{q_entropy_capped, q_entropy_inverse};

/// Slack (in fractions of `n`) applied toward satisfaction in all
/// trajectory comparisons.
pub const TRAJ_TOL: f64 = 1e-12;

/// Cumulative erasure counts at every chunk boundary: entry `k` is
/// `λ_{k·nθ}`, entry 0 is always 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErasureProfile {
    chunk_len: usize,
    counts: Vec<usize>,
}

impl ErasureProfile {
    /// No erasures at all.
    pub fn zero(params: &ChannelParams) -> Self {
        ErasureProfile { chunk_len: params.chunk_len, counts: vec![0; params.chunk_count() + 1] }
    }

    /// Builds a profile from cumulative counts, one per chunk boundary
    /// including the leading 0.
    pub fn from_counts(chunk_len: usize, counts: Vec<usize>) -> Result<Self> {
        if counts.first() != Some(&0) {
            return Err(Error::config("erasure profile must start at 0"));
        }
        for w in counts.windows(2) {
            if w[1] < w[0] || w[1] - w[0] > chunk_len {
                return Err(Error::config(format!(
                    "erasure profile step {} -> {} is not a valid per-chunk increment",
                    w[0], w[1]
                )));
            }
        }
        Ok(ErasureProfile { chunk_len, counts })
    }

    /// Profile of the erased positions (`true` = erased) of a length-n word.
    pub fn from_mask(chunk_len: usize, erased: impl IntoIterator<Item = bool>) -> Self {
        let mut counts = vec![0];
        let mut acc = 0;
        for (i, e) in erased.into_iter().enumerate() {
            acc += e as usize;
            if (i + 1) % chunk_len == 0 {
                counts.push(acc);
            }
        }
        ErasureProfile { chunk_len, counts }
    }

    /// `λ_t ≈ ⌊p* t⌋`, the profile of an adversary erasing at a constant rate.
    pub fn proportional(params: &ChannelParams) -> Self {
        let cap = params.erasure_cap();
        let counts = (0..=params.chunk_count())
            .map(|k| ((params.p_star * (k * params.chunk_len) as f64 + 1e-9).floor() as usize).min(cap))
            .collect();
        ErasureProfile { chunk_len: params.chunk_len, counts }
    }

    /// `λ_t` at chunk end `t`.
    pub fn at(&self, t: usize) -> usize {
        self.counts[t / self.chunk_len]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        *self.counts.last().unwrap_or(&0)
    }
}

/// Results of the list-decoding and energy-bounding checks at one chunk end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub list_ok: bool,
    pub energy_ok: bool,
    pub list_lhs: f64,
    pub list_rhs: f64,
    pub energy_lhs: f64,
    pub energy_rhs: f64,
}

/// The reference trajectories for one parameter set.
///
/// `margin_scale` multiplies the `ε²/(9q²α²)` margin of p̂; it is 1 except
/// when deliberately injecting a fault to exercise the claim checker.
#[derive(Debug, Clone, Copy)]
pub struct Reference {
    pub q: u32,
    pub p: f64,
    pub p_star: f64,
    pub epsilon: f64,
    pub n: usize,
    pub chunk_len: usize,
    pub margin_scale: f64,
}

impl Reference {
    pub fn new(params: &ChannelParams) -> Self {
        Reference {
            q: params.q,
            p: params.p,
            p_star: params.p_star,
            epsilon: params.epsilon,
            n: params.n,
            chunk_len: params.chunk_len,
            margin_scale: 1.0,
        }
    }

    pub fn with_margin_scale(mut self, scale: f64) -> Self {
        self.margin_scale = scale;
        self
    }

    fn model(&self) -> ChannelModel {
        ChannelModel::new(self.q, self.p, self.p_star)
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    fn qf(&self) -> f64 {
        self.q as f64
    }

    /// `ε² / (9 q²)`.
    pub fn margin_unit(&self) -> f64 {
        self.epsilon * self.epsilon / (9.0 * self.qf() * self.qf())
    }

    /// `α_q(0) = 1 - (2q/(q-1)) p - (q/(q-1)) p*`.
    pub fn alpha0(&self) -> f64 {
        alpha_q(0.0, &self.model())
    }

    /// Lowest `(t - λ_t)/n` at which p̂ is defined: `α_q(0) - ε²/4`.
    pub fn floor_fraction(&self) -> f64 {
        self.alpha0() - self.epsilon * self.epsilon / 4.0
    }

    /// Top of the second branch: `1 - (q/(q-1)) p*`.
    pub fn top_fraction(&self) -> f64 {
        1.0 - self.qf() / (self.qf() - 1.0) * self.p_star
    }

    fn frac(&self, t: usize, lambda: usize) -> f64 {
        (t as f64 - lambda as f64) / self.nf()
    }

    /// Bob's guess of the random-noise fraction,
    /// `p̄_t = p + p*/2 - ((q-1)/(2q)) (1 - (t-λ_t)/n)`.
    pub fn p_bar(&self, t: usize, lambda: usize) -> f64 {
        let half = (self.qf() - 1.0) / (2.0 * self.qf());
        self.p + self.p_star / 2.0 - half * (1.0 - self.frac(t, lambda))
    }

    /// `α_q(p̄_t)`, which equals `(t-λ_t)/n` by construction.
    pub fn alpha_t(&self, t: usize, lambda: usize) -> f64 {
        alpha_q(self.p_bar(t, lambda), &self.model())
    }

    /// Whether `(t - λ_t)/n` reaches the floor where p̂ is defined.
    pub fn defined_at(&self, t: usize, lambda: usize) -> bool {
        lambda <= t && self.frac(t, lambda) >= self.floor_fraction() - TRAJ_TOL
    }

    /// First branch: the constant `ε²/(9q²α_q(0)²)`.
    pub fn p_hat_branch1(&self) -> f64 {
        self.margin_scale * self.margin_unit() / self.alpha0().powi(2)
    }

    /// Second branch: `p̄_t/α_t + ε²/(9q²α_t²)`.
    pub fn p_hat_branch2(&self, t: usize, lambda: usize) -> f64 {
        let a = self.alpha_t(t, lambda);
        self.p_bar(t, lambda) / a + self.margin_scale * self.margin_unit() / (a * a)
    }

    /// Bob's decoding reference trajectory p̂_t.
    ///
    /// Errors below the first-branch floor, where it is undefined. Above the
    /// top of the second branch the second-branch formula is continued.
    pub fn p_hat(&self, t: usize, lambda: usize) -> Result<f64> {
        if !self.defined_at(t, lambda) {
            return Err(Error::domain(format!(
                "p_hat undefined at t={t}, lambda={lambda}: (t-lambda)/n below {}",
                self.floor_fraction()
            )));
        }
        if self.frac(t, lambda) < self.alpha0() {
            Ok(self.p_hat_branch1())
        } else {
            Ok(self.p_hat_branch2(t, lambda))
        }
    }

    /// Energy-bounding trajectory `p̃_t = p̄_t/α_t + (n-t)ε²/(9q²(t-λ_t))`.
    pub fn p_tilde(&self, t: usize, lambda: usize) -> Result<f64> {
        if !self.defined_at(t, lambda) || t == lambda {
            return Err(Error::domain(format!("p_tilde undefined at t={t}, lambda={lambda}")));
        }
        let a = self.alpha_t(t, lambda);
        let u = (t - lambda) as f64;
        Ok(self.p_bar(t, lambda) / a + (self.n - t) as f64 * self.margin_unit() / u)
    }

    /// Whether `t - λ_t` lies in the range on which the list and energy
    /// conditions are claimed: `[n(α_q(0) - ε²/4), n(1 - (q/(q-1))p*)]`.
    pub fn in_claim_range(&self, t: usize, lambda: usize) -> bool {
        let f = self.frac(t, lambda);
        lambda <= t && f >= self.floor_fraction() - TRAJ_TOL && f <= self.top_fraction() + TRAJ_TOL
    }

    /// Start point t₀: the first chunk end whose `t - λ_t` reaches
    /// `n(α_q(0) - ε²/4)`.
    pub fn t_zero(&self, profile: &ErasureProfile) -> Option<usize> {
        self.chunk_ends().find(|&t| self.defined_at(t, profile.at(t)))
    }

    /// Stop point: the last chunk end with
    /// `t - λ_t ≤ n - (q/(q-1)) n p* - nθ`.
    pub fn stop_point(&self, profile: &ErasureProfile) -> Option<usize> {
        let limit = self.top_fraction() - self.chunk_len as f64 / self.nf();
        self.chunk_ends()
            .filter(|&t| self.frac(t, profile.at(t)) <= limit + TRAJ_TOL)
            .last()
    }

    pub fn chunk_ends(&self) -> impl Iterator<Item = usize> {
        let c = self.chunk_len;
        (1..self.n / c).map(move |k| k * c)
    }

    /// List-decoding radius `(t - λ_t) p̂_t` in symbols.
    pub fn list_radius(&self, t: usize, lambda: usize) -> Result<f64> {
        Ok((t - lambda) as f64 * self.p_hat(t, lambda)?)
    }

    /// Consistency radius
    /// `(n - np* - t + λ_t)((q-1)/(2q) - ε²/(9q²)) - np*/(2q)` in symbols.
    pub fn consistency_radius(&self, t: usize, lambda: usize) -> f64 {
        let nf = self.nf();
        let half = (self.qf() - 1.0) / (2.0 * self.qf());
        (nf - nf * self.p_star - t as f64 + lambda as f64) * (half - self.margin_unit())
            - nf * self.p_star / (2.0 * self.qf())
    }

    /// Evaluates the list-decoding condition
    /// `(t-λ)(1 - H_q(p̂)) - nε/4 ≥ nR` and the energy-bounding condition
    /// `np - (t-λ)p̂ + (n-t)ε²/(9q²) ≤ ((q-1)/(2q))(n - np* - t + λ)`.
    pub fn check_conditions(&self, t: usize, lambda: usize, rate: f64) -> Result<ConditionCheck> {
        let p_hat = self.p_hat(t, lambda)?;
        let nf = self.nf();
        let u = (t - lambda) as f64;
        let list_lhs = u * (1.0 - q_entropy_capped(p_hat, self.q)) - nf * self.epsilon / 4.0;
        let list_rhs = nf * rate;
        let energy_lhs = nf * self.p - u * p_hat + (self.n - t) as f64 * self.margin_unit();
        let energy_rhs =
            (self.qf() - 1.0) / (2.0 * self.qf()) * (nf - nf * self.p_star - t as f64 + lambda as f64);
        let slack = TRAJ_TOL * nf;
        Ok(ConditionCheck {
            list_ok: list_lhs >= list_rhs - slack,
            energy_ok: energy_lhs <= energy_rhs + slack,
            list_lhs,
            list_rhs,
            energy_lhs,
            energy_rhs,
        })
    }

    /// List-size bound
    /// `(t-λ + 3 log_q n) / ((t-λ)(1 - H_q(p̂)) - nR - nθ²/q²)`,
    /// or `None` when the denominator is not positive (bound vacuous).
    pub fn list_size_bound(&self, t: usize, lambda: usize, rate: f64) -> Result<Option<f64>> {
        let p_hat = self.p_hat(t, lambda)?;
        let u = (t - lambda) as f64;
        let nf = self.nf();
        let theta = self.chunk_len as f64 / nf;
        let den = u * (1.0 - q_entropy_capped(p_hat, self.q)) - nf * rate - nf * theta * theta / (self.qf() * self.qf());
        if den <= 0.0 {
            return Ok(None);
        }
        Ok(Some((u + 3.0 * nf.ln() / self.qf().ln()) / den))
    }
}

/// Per-chunk-end view of the reference trajectories.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySample {
    pub t: usize,
    pub lambda_t: usize,
    pub p_bar_t: f64,
    pub p_hat_t: Option<f64>,
    pub p_tilde_t: Option<f64>,
    pub list_condition_holds: Option<bool>,
    pub energy_condition_holds: Option<bool>,
}

/// Evaluates every chunk end under an erasure profile. Conditions are only
/// reported inside the claimed range.
pub fn sample_trajectory(
    reference: &Reference,
    profile: &ErasureProfile,
    rate: f64,
) -> Vec<TrajectorySample> {
    reference
        .chunk_ends()
        .map(|t| {
            let lambda = profile.at(t);
            let p_hat = reference.p_hat(t, lambda).ok();
            let p_tilde = reference.p_tilde(t, lambda).ok();
            let cond = if reference.in_claim_range(t, lambda) {
                reference.check_conditions(t, lambda, rate).ok()
            } else {
                None
            };
            TrajectorySample {
                t,
                lambda_t: lambda,
                p_bar_t: reference.p_bar(t, lambda),
                p_hat_t: p_hat,
                p_tilde_t: p_tilde,
                list_condition_holds: cond.map(|c| c.list_ok),
                energy_condition_holds: cond.map(|c| c.energy_ok),
            }
        })
        .collect()
}

/// A jammer's realized trajectory: cumulative error and erasure counts at
/// every chunk boundary, plus the suffix totals needed for exact counting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalvinTrajectory {
    pub chunk_len: usize,
    /// Cumulative substitutions at each chunk boundary, starting at 0.
    pub errors: Vec<usize>,
    pub erasures: ErasureProfile,
}

impl CalvinTrajectory {
    /// Builds the trajectory of a transmitted/received pair.
    pub fn from_positions(chunk_len: usize, substituted: &[bool], erased: &[bool]) -> Self {
        let mut errors = vec![0];
        let mut acc = 0;
        for (i, &s) in substituted.iter().enumerate() {
            acc += s as usize;
            if (i + 1) % chunk_len == 0 {
                errors.push(acc);
            }
        }
        CalvinTrajectory {
            chunk_len,
            errors,
            erasures: ErasureProfile::from_mask(chunk_len, erased.iter().copied()),
        }
    }

    pub fn errors_at(&self, t: usize) -> usize {
        self.errors[t / self.chunk_len]
    }

    pub fn lambda_at(&self, t: usize) -> usize {
        self.erasures.at(t)
    }

    /// `p_t`: substitutions over unerased prefix positions, 0 when the prefix
    /// is fully erased.
    pub fn p_t(&self, t: usize) -> f64 {
        let u = t - self.lambda_at(t);
        if u == 0 {
            0.0
        } else {
            self.errors_at(t) as f64 / u as f64
        }
    }

    pub fn total_errors(&self) -> usize {
        *self.errors.last().unwrap_or(&0)
    }

    pub fn total_erasures(&self) -> usize {
        self.erasures.total()
    }

    pub fn within_budget(&self, params: &ChannelParams) -> bool {
        self.total_errors() <= params.error_cap() && self.total_erasures() <= params.erasure_cap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrajectoryType {
    High,
    Low,
}

fn t_zero_of(calvin: &CalvinTrajectory, reference: &Reference) -> Result<usize> {
    reference.t_zero(&calvin.erasures).ok_or_else(|| Error::domain("no chunk end reaches the decoding floor"))
}

/// High iff `p_{t₀} ≥ p̂_{t₀}`.
pub fn classify(calvin: &CalvinTrajectory, reference: &Reference) -> Result<TrajectoryType> {
    let t0 = t_zero_of(calvin, reference)?;
    Ok(if calvin.p_t(t0) < reference.p_hat(t0, calvin.lambda_at(t0))? {
        TrajectoryType::Low
    } else {
        TrajectoryType::High
    })
}

/// Classifies a trajectory at t₀ and locates t*: t₀ for a Low trajectory,
/// otherwise the first chunk end where p_t drops to p̂_t after lying above it
/// one chunk earlier.
pub fn classify_and_find_tstar(
    calvin: &CalvinTrajectory,
    reference: &Reference,
) -> Result<(TrajectoryType, usize)> {
    let t0 = t_zero_of(calvin, reference)?;
    let above = |t: usize| -> Result<bool> {
        Ok(calvin.p_t(t) > reference.p_hat(t, calvin.lambda_at(t))? + TRAJ_TOL)
    };
    let at_or_below = |t: usize| -> Result<bool> {
        Ok(calvin.p_t(t) <= reference.p_hat(t, calvin.lambda_at(t))? + TRAJ_TOL)
    };
    if classify(calvin, reference)? == TrajectoryType::Low {
        return Ok((TrajectoryType::Low, t0));
    }
    let c = reference.chunk_len;
    for t in reference.chunk_ends().filter(|&t| t > t0) {
        if above(t - c)? && at_or_below(t)? {
            return Ok((TrajectoryType::High, t));
        }
    }
    Err(Error::domain("trajectory never meets the decoding reference trajectory"))
}

/// Shape of a synthetic budget-respecting trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticStyle {
    /// Error and erasure positions drawn uniformly without replacement.
    Uniform,
    /// All corruption packed into a uniformly placed window.
    Burst,
    /// Errors first, as early as possible; erasures uniform afterwards.
    FrontLoaded,
}

/// Draws integer error and erasure placements under the budgets and returns
/// the resulting exact trajectory. Counts are uniform on `[0, cap]`.
pub fn synthetic_trajectory<R: Rng + ?Sized>(
    params: &ChannelParams,
    style: SyntheticStyle,
    rng: &mut R,
) -> CalvinTrajectory {
    let n = params.n;
    let errs = rng.gen_range(0..=params.error_cap());
    let eras = rng.gen_range(0..=params.erasure_cap().min(n - errs));
    let mut substituted = vec![false; n];
    let mut erased = vec![false; n];
    match style {
        SyntheticStyle::Uniform => {
            let picks = sample(rng, n, errs + eras);
            for (j, pos) in picks.iter().enumerate() {
                if j < errs {
                    substituted[pos] = true;
                } else {
                    erased[pos] = true;
                }
            }
        }
        SyntheticStyle::Burst => {
            let width = errs + eras;
            let start = rng.gen_range(0..=n - width);
            let picks = sample(rng, width, width);
            for (j, off) in picks.iter().enumerate() {
                if j < errs {
                    substituted[start + off] = true;
                } else {
                    erased[start + off] = true;
                }
            }
        }
        SyntheticStyle::FrontLoaded => {
            for s in substituted.iter_mut().take(errs) {
                *s = true;
            }
            let rest = n - errs;
            for pos in sample(rng, rest, eras).iter() {
                erased[errs + pos] = true;
            }
        }
    }
    CalvinTrajectory::from_positions(params.chunk_len, &substituted, &erased)
}

/// Curve identifiers of the trajectory-region plot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegionCurve {
    /// Largest achievable p_t: every error spent as early as possible.
    MaxCorruption,
    /// Smallest achievable p_t: every error held back to the end.
    MinCorruption,
    /// Lower edge of admissible p̂ (energy-bounding condition).
    EnergyFloor,
    /// Upper edge of admissible p̂ (list-decoding condition).
    ListCeiling,
    /// The reference trajectory itself.
    PHat,
}

impl RegionCurve {
    pub fn id(&self) -> &'static str {
        match self {
            RegionCurve::MaxCorruption => "1",
            RegionCurve::MinCorruption => "2",
            RegionCurve::EnergyFloor => "3",
            RegionCurve::ListCeiling => "4",
            RegionCurve::PHat => "p_hat",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegionPoint {
    pub curve: RegionCurve,
    pub t: usize,
    pub t_minus_lambda: usize,
    pub value: f64,
}

/// The trajectory-region curves with no erasures observed (`λ ≡ 0`), at rate
/// `R = C - ε`. The p̂-related curves are clipped to where p̂ is defined.
pub fn region_curves(params: &ChannelParams, reference: &Reference) -> Result<Vec<RegionPoint>> {
    let rate = capacity(&ChannelModel::from(params)).value - params.epsilon;
    let n = params.n;
    let nf = n as f64;
    let budget = params.error_cap();
    let half = (params.q as f64 - 1.0) / (2.0 * params.q as f64);
    let mut out = Vec::new();
    for t in reference.chunk_ends() {
        let tf = t as f64;
        out.push(RegionPoint {
            curve: RegionCurve::MaxCorruption,
            t,
            t_minus_lambda: t,
            value: budget.min(t) as f64 / tf,
        });
        out.push(RegionPoint {
            curve: RegionCurve::MinCorruption,
            t,
            t_minus_lambda: t,
            value: budget.saturating_sub(n - t) as f64 / tf,
        });
        if !reference.defined_at(t, 0) {
            continue;
        }
        let energy_floor = (nf * params.p + (n - t) as f64 * reference.margin_unit()
            - half * (nf - nf * params.p_star - tf))
            / tf;
        out.push(RegionPoint { curve: RegionCurve::EnergyFloor, t, t_minus_lambda: t, value: energy_floor.max(0.0) });
        let h_budget = 1.0 - (nf * rate + nf * params.epsilon / 4.0) / tf;
        if h_budget >= 0.0 {
            out.push(RegionPoint {
                curve: RegionCurve::ListCeiling,
                t,
                t_minus_lambda: t,
                value: q_entropy_inverse(h_budget, params.q)?,
            });
        }
        out.push(RegionPoint { curve: RegionCurve::PHat, t, t_minus_lambda: t, value: reference.p_hat(t, 0)? });
    }
    Ok(out)
}
