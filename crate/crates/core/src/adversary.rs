//! Causal jammers and the harness that keeps them causal and within budget.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::capacity::{alpha_q, ChannelModel};
use crate::codec::{unerased_distance, Codebook, ReceivedWord};
use crate::error::{Error, Result};
use crate::params::{floor_count, ChannelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Pass,
    Erase,
    Substitute(u8),
}

impl Action {
    /// One-letter code used in transcripts.
    pub fn code(&self) -> char {
        match self {
            Action::Pass => 'P',
            Action::Erase => 'E',
            Action::Substitute(_) => 'S',
        }
    }
}

/// Running error and erasure counts against `⌊pn⌋` and `⌊p*n⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub errors_used: usize,
    pub erasures_used: usize,
    pub error_cap: usize,
    pub erasure_cap: usize,
}

impl Budget {
    pub fn new(params: &ChannelParams) -> Self {
        Budget { errors_used: 0, erasures_used: 0, error_cap: params.error_cap(), erasure_cap: params.erasure_cap() }
    }

    pub fn errors_left(&self) -> usize {
        self.error_cap - self.errors_used
    }

    pub fn erasures_left(&self) -> usize {
        self.erasure_cap - self.erasures_used
    }
}

/// Everything a causal jammer may look at before acting on position `i`.
pub struct View<'a> {
    pub i: usize,
    /// Transmitted symbols `x[..min(n, i + 1 + lookahead)]`.
    pub x: &'a [u8],
    /// Channel outputs `y[..i]`.
    pub y: &'a [u16],
    pub budget: &'a Budget,
    pub q: u32,
    /// The message, when the jammer is configured to know it.
    pub message: Option<usize>,
}

pub trait Adversary {
    fn act(&mut self, view: &View<'_>) -> Action;

    /// Whether the jammer had to fall back from its nominal strategy.
    fn fallback_engaged(&self) -> bool {
        false
    }

    fn push_stats(&self) -> Option<PushStats> {
        None
    }
}

/// The transmitter side as the channel sees it: symbols are produced on
/// demand, so nothing beyond what has been revealed exists yet.
pub trait SymbolSource {
    fn len(&self) -> usize;

    /// Makes sure at least `len` symbols exist and returns all revealed ones.
    fn reveal(&mut self, len: usize) -> &[u8];
}

/// A fully known transmitted word.
pub struct FixedSource<'a>(pub &'a [u8]);

impl SymbolSource for FixedSource<'_> {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn reveal(&mut self, _len: usize) -> &[u8] {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRun {
    pub x: Vec<u8>,
    pub y: ReceivedWord,
    pub actions: Vec<Action>,
    /// Requested actions that were illegal and replaced by Pass.
    pub violations: usize,
    pub budget: Budget,
}

/// Passes a word through the jammer one symbol at a time. Illegal requests
/// (wrong symbol, exhausted budget) become Pass and count as violations.
pub fn run_channel(
    adversary: &mut dyn Adversary,
    source: &mut dyn SymbolSource,
    params: &ChannelParams,
    lookahead: usize,
    message: Option<usize>,
) -> ChannelRun {
    let n = source.len();
    let q = params.q;
    let erasure = q as u16;
    let mut budget = Budget::new(params);
    let mut y: Vec<u16> = Vec::with_capacity(n);
    let mut actions = Vec::with_capacity(n);
    let mut violations = 0;
    for i in 0..n {
        let visible = n.min(i + 1 + lookahead);
        let x = &source.reveal(visible)[..visible];
        let xi = x[i];
        let requested = adversary.act(&View { i, x, y: &y, budget: &budget, q, message });
        let action = match requested {
            Action::Substitute(s) if s != xi && (s as u32) < q && budget.errors_left() > 0 => {
                budget.errors_used += 1;
                y.push(s as u16);
                requested
            }
            Action::Erase if budget.erasures_left() > 0 => {
                budget.erasures_used += 1;
                y.push(erasure);
                requested
            }
            Action::Pass => {
                y.push(xi as u16);
                Action::Pass
            }
            _ => {
                violations += 1;
                y.push(xi as u16);
                Action::Pass
            }
        };
        actions.push(action);
    }
    let x = source.reveal(n)[..n].to_vec();
    ChannelRun { x, y: ReceivedWord { q, symbols: y }, actions, violations, budget }
}

/// A uniformly random symbol other than `x`.
fn other_symbol<R: Rng + ?Sized>(rng: &mut R, x: u8, q: u32) -> u8 {
    let r = rng.gen_range(0..q - 1) as u8;
    if r >= x {
        r + 1
    } else {
        r
    }
}

pub struct NullAdversary;

impl Adversary for NullAdversary {
    fn act(&mut self, _view: &View<'_>) -> Action {
        Action::Pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Planned {
    Nothing,
    Error,
    Erasure,
}

/// A jammer whose corruption positions are fixed up front; substituted
/// symbols are drawn uniformly at action time.
pub struct PlannedAdversary {
    plan: Vec<Planned>,
    q: u32,
    rng: ChaCha8Rng,
}

impl Adversary for PlannedAdversary {
    fn act(&mut self, view: &View<'_>) -> Action {
        match self.plan[view.i] {
            Planned::Nothing => Action::Pass,
            Planned::Error => Action::Substitute(other_symbol(&mut self.rng, view.x[view.i], self.q)),
            Planned::Erasure => Action::Erase,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Null,
    UniformRandom,
    GreedyPush,
    FrontLoaded,
}

/// Control and stress jammers.
///
/// * `UniformRandom` spends both budgets on disjoint uniformly random positions.
/// * `GreedyPush` spends errors and then erasures on the last positions.
/// * `FrontLoaded` spends errors on the first positions, erasures right after.
pub fn make_baseline(kind: BaselineKind, params: &ChannelParams, mut rng: ChaCha8Rng) -> Box<dyn Adversary> {
    let n = params.n;
    let errors = params.error_cap().min(n);
    let erasures = params.erasure_cap().min(n - errors);
    let mut plan = vec![Planned::Nothing; n];
    match kind {
        BaselineKind::Null => return Box::new(NullAdversary),
        BaselineKind::UniformRandom => {
            for (j, pos) in sample(&mut rng, n, errors + erasures).iter().enumerate() {
                plan[pos] = if j < errors { Planned::Error } else { Planned::Erasure };
            }
        }
        BaselineKind::GreedyPush => {
            let start = n - errors - erasures;
            plan[start..start + errors].fill(Planned::Error);
            plan[start + errors..].fill(Planned::Erasure);
        }
        BaselineKind::FrontLoaded => {
            plan[..errors].fill(Planned::Error);
            plan[errors..errors + erasures].fill(Planned::Erasure);
        }
    }
    Box::new(PlannedAdversary { plan, q: params.q, rng })
}

/// Coin statistics of the push phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PushStats {
    /// Push positions where `x_i ≠ x'_i`.
    pub disagreements: usize,
    /// Disagreement positions where the coin was tossed.
    pub coin_flips: usize,
    /// Tosses that came up substitute.
    pub substitutions: usize,
    /// Disagreement positions erased after the errors ran out.
    pub erasures: usize,
}

/// Babble length `⌊n(α_q(p̄) + ε/2)⌋`. Values above `n - 1` are an error
/// unless `allow_clamp` is set.
pub fn babble_length(params: &ChannelParams, pbar: f64, allow_clamp: bool) -> Result<usize> {
    if !(0.0..=params.p + 1e-12).contains(&pbar) {
        return Err(Error::config(format!("pbar={pbar} must lie in [0, p={}]", params.p)));
    }
    let n = params.n as f64;
    let alpha = alpha_q(pbar, &ChannelModel::from(params));
    let raw = n * (alpha + params.epsilon / 2.0);
    if raw < 0.0 {
        return Err(Error::config(format!("babble length n(alpha+eps/2) = {raw} is negative")));
    }
    let mut b = (raw + 1e-9).floor() as usize;
    if b > params.n - 1 {
        if !allow_clamp {
            return Err(Error::config(format!(
                "babble length {b} exceeds n-1 = {}; enable clamping to proceed",
                params.n - 1
            )));
        }
        b = params.n - 1;
    }
    let flips = floor_count(pbar, params.n);
    if b < flips {
        return Err(Error::config(format!("babble length {b} is shorter than the {flips} babble errors")));
    }
    Ok(b)
}

/// Per-message counts of secret prefixes by distance to `y[..b]`:
/// entry `[m][d]` counts secret choices for the chunks overlapping `[0, b)`
/// whose codeword prefix lies at distance exactly `d`.
pub fn prefix_distance_counts(cb: &Codebook, y: &[u16], erasure: u16) -> Result<Vec<Vec<u128>>> {
    (0..cb.message_count()).map(|m| Ok(forward_layers(cb, y, erasure, m)?.pop().unwrap())).collect()
}

/// Distance of the part of chunk `k` inside `y`, for every secret.
fn chunk_distances(cb: &Codebook, y: &[u16], erasure: u16, k: usize, m: usize) -> Vec<usize> {
    let c = cb.chunk_len();
    let lo = k * c;
    let hi = ((k + 1) * c).min(y.len());
    (0..cb.secret_count())
        .map(|s| unerased_distance(&y[lo..hi], &cb.block(k, m, s)[..hi - lo], erasure))
        .collect()
}

/// DP layers `f_k[d]` for `k = 0..=chunks`, counting secret prefixes over the
/// first `k` chunks at distance `d`.
fn forward_layers(cb: &Codebook, y: &[u16], erasure: u16, m: usize) -> Result<Vec<Vec<u128>>> {
    let chunks = y.len().div_ceil(cb.chunk_len());
    let mut layers = vec![vec![1u128]];
    for k in 0..chunks {
        let dists = chunk_distances(cb, y, erasure, k, m);
        let prev = layers.last().unwrap();
        let width = prev.len() + dists.iter().max().copied().unwrap_or(0);
        let mut next = vec![0u128; width];
        for (d, &w) in prev.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for &dk in &dists {
                next[d + dk] = next[d + dk]
                    .checked_add(w)
                    .ok_or_else(|| Error::Resource("secret-prefix count overflows u128".into()))?;
            }
        }
        layers.push(next);
    }
    Ok(layers)
}

/// The alternative codeword chosen at the end of the babble phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PushTarget {
    pub message: usize,
    pub secrets: Vec<usize>,
    pub prefix_distance: usize,
    pub fallback: bool,
}

/// Draws `(m', s')` uniformly from the pairs whose codeword prefix is at
/// distance exactly `target` from `y_b`. If there are none, draws uniformly
/// from the pairs at the smallest `|d - target|`. The secrets of chunks
/// after the babble are uniform.
pub fn choose_push_target<R: Rng + ?Sized>(
    cb: &Codebook,
    y_b: &[u16],
    erasure: u16,
    target: usize,
    rng: &mut R,
) -> Result<PushTarget> {
    let layers: Vec<Vec<Vec<u128>>> =
        (0..cb.message_count()).map(|m| forward_layers(cb, y_b, erasure, m)).collect::<Result<_>>()?;
    let count_at = |m: usize, d: usize| -> u128 { layers[m].last().unwrap().get(d).copied().unwrap_or(0) };
    let max_d = layers.iter().map(|l| l.last().unwrap().len()).max().unwrap_or(0);
    let mut chosen = None;
    for delta in 0..=max_d.max(target) {
        let mut ds = vec![];
        if let Some(lo) = target.checked_sub(delta) {
            ds.push(lo);
        }
        if delta > 0 {
            ds.push(target + delta);
        }
        let total: u128 = (0..cb.message_count()).flat_map(|m| ds.iter().map(move |&d| (m, d))).map(|(m, d)| count_at(m, d)).sum();
        if total > 0 {
            chosen = Some((ds, total, delta > 0));
            break;
        }
    }
    let (ds, total, fallback) = chosen.ok_or_else(|| Error::domain("empty codebook prefix set"))?;
    let mut pick = rng.gen_range(0..total);
    let mut found = None;
    'outer: for m in 0..cb.message_count() {
        for &d in &ds {
            let w = count_at(m, d);
            if pick < w {
                found = Some((m, d));
                break 'outer;
            }
            pick -= w;
        }
    }
    let (message, prefix_distance) = found.expect("pick lies below the total weight");
    let chunks = layers[message].len() - 1;
    let mut secrets = vec![0usize; cb.chunk_count()];
    let mut d_rem = prefix_distance;
    for k in (0..chunks).rev() {
        let dists = chunk_distances(cb, y_b, erasure, k, message);
        let prev = &layers[message][k];
        let weight = |s: usize| -> u128 {
            d_rem.checked_sub(dists[s]).and_then(|r| prev.get(r).copied()).unwrap_or(0)
        };
        let sum: u128 = (0..dists.len()).map(weight).sum();
        let mut r = rng.gen_range(0..sum);
        let mut pick_s = 0;
        for s in 0..dists.len() {
            let w = weight(s);
            if r < w {
                pick_s = s;
                break;
            }
            r -= w;
        }
        secrets[k] = pick_s;
        d_rem -= dists[pick_s];
    }
    for s in secrets.iter_mut().skip(chunks) {
        *s = rng.gen_range(0..cb.secret_count());
    }
    Ok(PushTarget { message, secrets, prefix_distance, fallback })
}

/// The babble-and-push jammer.
///
/// Babble: substitute a uniformly random other symbol on a precommitted
/// uniform `⌊np̄⌋`-subset Γ of `[0, b)`. Push: at `i = b` pick `x'` from the
/// pairs consistent with the babble, then on every later position where
/// `x_i ≠ x'_i` substitute `x'_i` with probability 1/2 while errors last,
/// and erase while erasures last. Everything else passes.
pub struct BabblePush<'a> {
    cb: &'a Codebook,
    q: u32,
    b: usize,
    flips: usize,
    gamma: Vec<bool>,
    babble_rng: ChaCha8Rng,
    coin_rng: ChaCha8Rng,
    target: Option<PushTarget>,
    x_alt: Vec<u8>,
    stats: PushStats,
}

impl<'a> BabblePush<'a> {
    pub fn new(
        cb: &'a Codebook,
        pbar: f64,
        allow_clamp: bool,
        mut babble_rng: ChaCha8Rng,
        coin_rng: ChaCha8Rng,
    ) -> Result<Self> {
        let params = cb.params();
        let b = babble_length(params, pbar, allow_clamp)?;
        let flips = floor_count(pbar, params.n);
        let chunks = b.div_ceil(cb.chunk_len()) as i32;
        let space = (cb.secret_count() as f64).powi(chunks) * cb.message_count() as f64;
        if space >= 2f64.powi(127) {
            return Err(Error::config(format!("{space:.3e} babble candidates are too many to count exactly")));
        }
        let mut gamma = vec![false; b];
        for pos in sample(&mut babble_rng, b, flips).iter() {
            gamma[pos] = true;
        }
        Ok(BabblePush {
            cb,
            q: params.q,
            b,
            flips,
            gamma,
            babble_rng,
            coin_rng,
            target: None,
            x_alt: Vec::new(),
            stats: PushStats::default(),
        })
    }

    pub fn babble_length(&self) -> usize {
        self.b
    }

    pub fn babble_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.gamma.iter().enumerate().filter(|(_, &g)| g).map(|(i, _)| i)
    }

    pub fn target(&self) -> Option<&PushTarget> {
        self.target.as_ref()
    }

    fn select(&mut self, y_b: &[u16]) {
        let chosen = choose_push_target(self.cb, y_b, self.q as u16, self.flips, &mut self.babble_rng)
            .expect("candidate space was bounded at construction");
        self.x_alt = self.cb.encode(chosen.message, &chosen.secrets).expect("target ids are in range");
        self.target = Some(chosen);
    }
}

impl Adversary for BabblePush<'_> {
    fn act(&mut self, view: &View<'_>) -> Action {
        let i = view.i;
        let xi = view.x[i];
        if i < self.b {
            return if self.gamma[i] {
                Action::Substitute(other_symbol(&mut self.babble_rng, xi, self.q))
            } else {
                Action::Pass
            };
        }
        if self.target.is_none() {
            self.select(&view.y[..self.b]);
        }
        let alt = self.x_alt[i];
        if alt == xi {
            return Action::Pass;
        }
        self.stats.disagreements += 1;
        if view.budget.errors_left() > 0 {
            self.stats.coin_flips += 1;
            if self.coin_rng.gen_bool(0.5) {
                self.stats.substitutions += 1;
                return Action::Substitute(alt);
            }
            return Action::Pass;
        }
        if view.budget.erasures_left() > 0 {
            self.stats.erasures += 1;
            return Action::Erase;
        }
        Action::Pass
    }

    fn fallback_engaged(&self) -> bool {
        self.target.as_ref().is_some_and(|t| t.fallback)
    }

    fn push_stats(&self) -> Option<PushStats> {
        Some(self.stats)
    }
}
