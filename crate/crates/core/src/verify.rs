//! Numeric check of the trajectory claims over random parameter draws.
//!
//! Each draw picks `(q, p, p*, ε)` with `2p + p* + ε ≤ (q-1)/q` and a block
//! length `n = K·nθ` with `K = ⌈9q²/ε²⌉`, so that `θ ≤ ε²/(9q²)`. Every claim
//! is then evaluated at every relevant chunk end, under the zero and
//! proportional erasure profiles and under synthetic jammer trajectories.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{capacity, ChannelModel};
use crate::error::Result;
use crate::params::ChannelParams;
use crate::qmath::{entropy_max_arg, lemma1_margin};
use crate::rng::{stream, Role};
use crate::trajectory::{synthetic_trajectory, CalvinTrajectory, ErasureProfile, Reference, SyntheticStyle, TRAJ_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    /// `H_q(x+δ) < H_q(x) + (2√δ + δ ln(q-1))/ln q`.
    Lemma1,
    /// List-decoding condition at `R = C - ε` over the claimed range.
    ListCondition,
    /// Energy-bounding condition at `R = C - ε` over the claimed range.
    EnergyCondition,
    /// `(t - λ_t) p̂_t ≥ np` at the stop point.
    ClaimAbove,
    /// `p_{t-nθ} > p̂_{t-nθ}` implies `p_t > p̃_t`.
    ClaimIngap,
    /// `p_t > p̃_t` bounds the suffix error fraction.
    PTilde,
    /// The energy inequality at t₀ for every `p_{t₀} ∈ [0, p̂_{t₀}]`.
    ZeroStarting,
}

impl Claim {
    pub const ALL: [Claim; 7] = [
        Claim::Lemma1,
        Claim::ListCondition,
        Claim::EnergyCondition,
        Claim::ClaimAbove,
        Claim::ClaimIngap,
        Claim::PTilde,
        Claim::ZeroStarting,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Claim::Lemma1 => "lemma1",
            Claim::ListCondition => "list_condition",
            Claim::EnergyCondition => "energy_condition",
            Claim::ClaimAbove => "claim_above",
            Claim::ClaimIngap => "claim_ingap",
            Claim::PTilde => "p_tilde",
            Claim::ZeroStarting => "zero_starting",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub qs: Vec<u32>,
    pub draws_per_q: usize,
    pub seed: u64,
    /// Synthetic trajectories per style per draw.
    pub synthetic_per_style: usize,
    pub lemma1_samples: usize,
    /// Multiplier of the p̂ margin; anything but 1 deliberately breaks p̂.
    pub margin_scale: f64,
    pub max_counterexamples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            qs: vec![2, 3, 4],
            draws_per_q: 200,
            seed: 1,
            synthetic_per_style: 2,
            lemma1_samples: 50,
            margin_scale: 1.0,
            max_counterexamples: 5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClaimReport {
    pub claim: Claim,
    pub checks: u64,
    pub failures: u64,
    /// Points the claim does not cover, e.g. a nonpositive denominator.
    pub skipped: u64,
    pub counterexamples: Vec<String>,
}

impl ClaimReport {
    fn new(claim: Claim) -> Self {
        ClaimReport { claim, checks: 0, failures: 0, skipped: 0, counterexamples: Vec::new() }
    }

    fn record(&mut self, ok: bool, limit: usize, describe: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.counterexamples.len() < limit {
                self.counterexamples.push(describe());
            }
        }
    }

    fn merge(&mut self, other: ClaimReport, limit: usize) {
        self.checks += other.checks;
        self.failures += other.failures;
        self.skipped += other.skipped;
        for c in other.counterexamples {
            if self.counterexamples.len() < limit {
                self.counterexamples.push(c);
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub draws: usize,
    pub claims: Vec<ClaimReport>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.claims.iter().all(|c| c.passed())
    }

    pub fn claim(&self, claim: Claim) -> &ClaimReport {
        self.claims.iter().find(|c| c.claim == claim).expect("every claim is reported")
    }
}

/// One random parameter point with `θ ≤ ε²/(9q²)`.
pub fn draw_params<R: Rng + ?Sized>(q: u32, rng: &mut R) -> ChannelParams {
    let qf = q as f64;
    let top = (qf - 1.0) / qf;
    let epsilon = rng.gen_range(0.05..0.3);
    let p = rng.gen_range(0.0..(top - epsilon) / 2.0);
    let p_star = rng.gen_range(0.0..(top - epsilon - 2.0 * p));
    let chunks = (9.0 * qf * qf / (epsilon * epsilon)).ceil() as usize;
    let chunk_len = rng.gen_range(1..=3);
    let n = chunks * chunk_len;
    let rate = (capacity(&ChannelModel::new(q, p, p_star)).value - epsilon).max(0.0);
    ChannelParams { q, p, p_star, epsilon, n, chunk_len, rate, secret_count: 1, theoretical_mode: false }
}

fn describe(params: &ChannelParams, what: String) -> String {
    format!(
        "q={} p={:.6} pstar={:.6} eps={:.6} n={} chunk={}: {what}",
        params.q, params.p, params.p_star, params.epsilon, params.n, params.chunk_len
    )
}

/// Evaluates every claim at one parameter point.
pub fn verify_point(params: &ChannelParams, cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Vec<ClaimReport> {
    let lim = cfg.max_counterexamples;
    let mut reports: Vec<ClaimReport> = Claim::ALL.iter().map(|&c| ClaimReport::new(c)).collect();
    let idx = |c: Claim| Claim::ALL.iter().position(|&x| x == c).unwrap();
    let reference = Reference::new(params).with_margin_scale(cfg.margin_scale);
    let n = params.n;
    let nf = n as f64;
    let q = params.q;
    let qf = q as f64;
    let c = params.chunk_len;
    let rate = capacity(&ChannelModel::from(params)).value - params.epsilon;
    let half = (qf - 1.0) / (2.0 * qf);
    let unit = reference.margin_unit();

    {
        let r = &mut reports[idx(Claim::Lemma1)];
        let xmax = entropy_max_arg(q);
        for _ in 0..cfg.lemma1_samples {
            let delta = rng.gen_range(1e-6..0.5f64.min(xmax));
            let x = rng.gen_range(0.0..=(xmax - delta));
            match lemma1_margin(x, delta, q) {
                Ok((lhs, rhs)) => r.record(lhs < rhs, lim, || describe(params, format!("x={x} delta={delta}"))),
                Err(_) => r.skipped += 1,
            }
        }
    }

    let mut synthetic: Vec<CalvinTrajectory> = Vec::new();
    for style in [SyntheticStyle::Uniform, SyntheticStyle::Burst, SyntheticStyle::FrontLoaded] {
        for _ in 0..cfg.synthetic_per_style {
            synthetic.push(synthetic_trajectory(params, style, rng));
        }
    }
    let mut profiles = vec![ErasureProfile::zero(params), ErasureProfile::proportional(params)];
    profiles.extend(synthetic.iter().map(|s| s.erasures.clone()));

    for profile in &profiles {
        for t in reference.chunk_ends() {
            let lambda = profile.at(t);
            if !reference.in_claim_range(t, lambda) {
                continue;
            }
            let Ok(chk) = reference.check_conditions(t, lambda, rate) else { continue };
            reports[idx(Claim::ListCondition)].record(chk.list_ok, lim, || {
                describe(params, format!("t={t} lambda={lambda} lhs={} rhs={}", chk.list_lhs, chk.list_rhs))
            });
            reports[idx(Claim::EnergyCondition)].record(chk.energy_ok, lim, || {
                describe(params, format!("t={t} lambda={lambda} lhs={} rhs={}", chk.energy_lhs, chk.energy_rhs))
            });
        }

        match reference.stop_point(profile) {
            Some(t) if reference.defined_at(t, profile.at(t)) => {
                let lambda = profile.at(t);
                let lhs = (t - lambda) as f64 * reference.p_hat(t, lambda).unwrap_or(f64::NAN);
                reports[idx(Claim::ClaimAbove)].record(lhs >= nf * params.p - TRAJ_TOL * nf, lim, || {
                    describe(params, format!("stop t={t} lambda={lambda} (t-lambda)p_hat={lhs} np={}", nf * params.p))
                });
            }
            _ => reports[idx(Claim::ClaimAbove)].skipped += 1,
        }

        match reference.t_zero(profile) {
            Some(t0) => {
                let lambda = profile.at(t0);
                let u = (t0 - lambda) as f64;
                let p_hat0 = reference.p_hat_branch1();
                let rhs = half * (nf - nf * params.p_star - t0 as f64 + lambda as f64);
                for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
                    let p_t0 = frac * p_hat0;
                    let lhs = nf * params.p - u * p_t0 + (n - t0) as f64 * unit;
                    reports[idx(Claim::ZeroStarting)].record(lhs <= rhs + TRAJ_TOL * nf, lim, || {
                        describe(params, format!("t0={t0} lambda={lambda} p_t0={p_t0} lhs={lhs} rhs={rhs}"))
                    });
                }
            }
            None => reports[idx(Claim::ZeroStarting)].skipped += 1,
        }
    }

    let top = reference.top_fraction() * nf;
    let floor = reference.floor_fraction() * nf;
    for calvin in &synthetic {
        let total_errors = calvin.total_errors();
        let total_erasures = calvin.total_erasures();
        for t in reference.chunk_ends() {
            let lambda = calvin.lambda_at(t);
            let u = (t - lambda) as f64;
            if !reference.in_claim_range(t, lambda) {
                continue;
            }
            let p_t = calvin.p_t(t);
            let Ok(p_tilde) = reference.p_tilde(t, lambda) else { continue };

            // the claim covers t - λ_t from one chunk above the floor to the top
            if t > c && u >= floor + c as f64 - TRAJ_TOL * nf && u <= top + TRAJ_TOL * nf {
                let prev = t - c;
                let lp = calvin.lambda_at(prev);
                if let Ok(p_hat_prev) = reference.p_hat(prev, lp) {
                    if calvin.p_t(prev) > p_hat_prev {
                        reports[idx(Claim::ClaimIngap)].record(p_t > p_tilde - TRAJ_TOL, lim, || {
                            describe(params, format!("t={t} lambda={lambda} p_t={p_t} p_tilde={p_tilde}"))
                        });
                    }
                }
            }

            if p_t > p_tilde {
                let denom = nf - t as f64 - nf * params.p_star + lambda as f64;
                let suffix_unerased = (n - t) - (total_erasures - lambda);
                if denom <= 0.0 || suffix_unerased == 0 {
                    reports[idx(Claim::PTilde)].skipped += 1;
                    continue;
                }
                let suffix_errors = total_errors - calvin.errors_at(t);
                let frac = suffix_errors as f64 / suffix_unerased as f64;
                let bound = half - unit - nf * params.p_star / (2.0 * qf * denom);
                reports[idx(Claim::PTilde)].record(frac < bound + TRAJ_TOL, lim, || {
                    describe(params, format!("t={t} lambda={lambda} suffix fraction {frac} >= {bound}"))
                });
            }
        }
    }
    reports
}

/// Runs the suite over `draws_per_q` draws for every q. Draws are processed
/// in parallel; merging follows draw order.
pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let jobs: Vec<(usize, u32)> = cfg
        .qs
        .iter()
        .flat_map(|&q| (0..cfg.draws_per_q).map(move |_| q))
        .enumerate()
        .collect();
    let per_draw: Vec<Vec<ClaimReport>> = jobs
        .par_iter()
        .map(|&(i, q)| {
            let mut rng = stream(cfg.seed, i as u64, Role::Message, Some("verify"));
            let params = draw_params(q, &mut rng);
            verify_point(&params, cfg, &mut rng)
        })
        .collect();
    let mut claims: Vec<ClaimReport> = Claim::ALL.iter().map(|&c| ClaimReport::new(c)).collect();
    for draw in per_draw {
        for (acc, r) in claims.iter_mut().zip(draw) {
            acc.merge(r, cfg.max_counterexamples);
        }
    }
    Ok(VerifyReport { draws: jobs.len(), claims })
}
