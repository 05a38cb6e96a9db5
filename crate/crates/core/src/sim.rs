//! Seeded Monte Carlo trials: encoder, jammer and decoder end to end.

use std::collections::BTreeMap;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{make_baseline, run_channel, Adversary, BabblePush, BaselineKind, PushStats, SymbolSource};
use crate::capacity::{capacity, ChannelModel};
use crate::codec::{bob_decode, Codebook, DecodeOutcome, DecodeResult, ReceivedWord};
use crate::error::{Error, Result};
use crate::params::ChannelParams;
use crate::rng::{stream, Role};
use crate::trajectory::{classify, classify_and_find_tstar, CalvinTrajectory, Reference, TrajectoryType};

pub const TRANSCRIPT_VERSION: u32 = 1;
pub const SUMMARY_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversarySpec {
    Null,
    UniformRandom {
        #[serde(default)]
        seed_stream: Option<String>,
    },
    GreedyPush {
        #[serde(default)]
        seed_stream: Option<String>,
    },
    FrontLoaded {
        #[serde(default)]
        seed_stream: Option<String>,
    },
    /// `pbar` defaults to the capacity minimizer.
    BabblePush {
        #[serde(default)]
        pbar: Option<f64>,
        #[serde(default)]
        seed_stream: Option<String>,
        #[serde(default)]
        allow_clamp: bool,
    },
}

impl AdversarySpec {
    fn seed_stream(&self) -> Option<&str> {
        match self {
            AdversarySpec::Null => None,
            AdversarySpec::UniformRandom { seed_stream }
            | AdversarySpec::GreedyPush { seed_stream }
            | AdversarySpec::FrontLoaded { seed_stream }
            | AdversarySpec::BabblePush { seed_stream, .. } => seed_stream.as_deref(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessagePolicy {
    #[default]
    Uniform,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub params: ChannelParams,
    pub adversary: AdversarySpec,
    #[serde(default)]
    pub message: MessagePolicy,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub lookahead: usize,
    #[serde(default)]
    pub adversary_knows_message: bool,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate_for_coding()?;
        if let MessagePolicy::Fixed(m) = self.message {
            let count = self.params.message_count();
            if m >= count {
                return Err(Error::config(format!("fixed message {m} >= message count {count}")));
            }
        }
        if let AdversarySpec::BabblePush { pbar: Some(pb), allow_clamp, .. } = &self.adversary {
            crate::adversary::babble_length(&self.params, *pb, *allow_clamp)?;
        }
        Ok(())
    }

    fn babble_pbar(&self) -> Option<f64> {
        match &self.adversary {
            AdversarySpec::BabblePush { pbar, .. } => {
                Some(pbar.unwrap_or_else(|| capacity(&ChannelModel::from(&self.params)).argmin_pbar))
            }
            _ => None,
        }
    }
}

/// Alice: the message is fixed up front, each chunk's secret is drawn only
/// when the chunk is about to go out.
pub struct LazyEncoder<'a> {
    cb: &'a Codebook,
    message: usize,
    rng: ChaCha8Rng,
    secrets: Vec<usize>,
    x: Vec<u8>,
}

impl<'a> LazyEncoder<'a> {
    pub fn new(cb: &'a Codebook, message: usize, rng: ChaCha8Rng) -> Self {
        LazyEncoder { cb, message, rng, secrets: Vec::new(), x: Vec::new() }
    }

    /// Secrets drawn so far.
    pub fn secrets(&self) -> &[usize] {
        &self.secrets
    }
}

impl SymbolSource for LazyEncoder<'_> {
    fn len(&self) -> usize {
        self.cb.params().n
    }

    fn reveal(&mut self, len: usize) -> &[u8] {
        while self.x.len() < len.min(self.len()) {
            let k = self.secrets.len();
            let s = self.rng.gen_range(0..self.cb.secret_count());
            self.secrets.push(s);
            self.x.extend_from_slice(self.cb.block(k, self.message, s));
        }
        &self.x
    }
}

/// Symbol arrays as base64 of one byte per symbol, or two little-endian
/// bytes when the erasure code `q` does not fit a byte.
pub fn encode_symbols(symbols: &[u16], q: u32) -> String {
    if q < 256 {
        B64.encode(symbols.iter().map(|&s| s as u8).collect::<Vec<_>>())
    } else {
        B64.encode(symbols.iter().flat_map(|s| s.to_le_bytes()).collect::<Vec<_>>())
    }
}

pub fn decode_symbols(text: &str, q: u32) -> Result<Vec<u16>> {
    let bytes = B64.decode(text).map_err(|e| Error::Format(e.to_string()))?;
    if q < 256 {
        Ok(bytes.into_iter().map(|b| b as u16).collect())
    } else if bytes.len() % 2 == 0 {
        Ok(bytes.chunks(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect())
    } else {
        Err(Error::Format("odd byte count for two-byte symbols".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub version: u32,
    pub trial: usize,
    pub message: usize,
    pub secrets: Vec<usize>,
    /// Transmitted codeword, base64.
    pub codeword: String,
    /// Received word with Λ = q, base64.
    pub received: String,
    /// One letter per position: P(ass), E(rase), S(ubstitute).
    pub actions: String,
    pub violations: usize,
    pub errors_used: usize,
    pub erasures_used: usize,
    pub fallback_engaged: bool,
    pub push_stats: Option<PushStats>,
    pub trajectory_type: Option<TrajectoryType>,
    /// Absent when the trajectory never meets p̂ before the last chunk end,
    /// which can happen when θ exceeds ε²/(9q²).
    pub trajectory_t_star: Option<usize>,
    pub list_bound_violations: usize,
    pub decode: DecodeOutcome,
    pub success: bool,
}

impl Transcript {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn received_word(&self, q: u32) -> Result<ReceivedWord> {
        ReceivedWord::new(q, decode_symbols(&self.received, q)?)
    }
}

/// Number of decoder attempts whose list is longer than the list-size bound
/// at that `(t, λ_t)`. A vacuous bound is never violated.
pub fn list_bound_violations(params: &ChannelParams, decode: &DecodeOutcome) -> usize {
    let reference = Reference::new(params);
    decode
        .trace
        .iter()
        .filter(|a| {
            matches!(reference.list_size_bound(a.t, a.lambda_t, params.rate), Ok(Some(b)) if a.list.len() as f64 > b)
        })
        .count()
}

fn build_adversary<'a>(cb: &'a Codebook, config: &TrialConfig, trial: u64) -> Result<Box<dyn Adversary + 'a>> {
    let seed = config.master_seed;
    let label = config.adversary.seed_stream();
    let main = stream(seed, trial, Role::AdversaryBabble, label);
    Ok(match &config.adversary {
        AdversarySpec::Null => make_baseline(BaselineKind::Null, &config.params, main),
        AdversarySpec::UniformRandom { .. } => make_baseline(BaselineKind::UniformRandom, &config.params, main),
        AdversarySpec::GreedyPush { .. } => make_baseline(BaselineKind::GreedyPush, &config.params, main),
        AdversarySpec::FrontLoaded { .. } => make_baseline(BaselineKind::FrontLoaded, &config.params, main),
        AdversarySpec::BabblePush { allow_clamp, .. } => {
            let coins = stream(seed, trial, Role::AdversaryCoins, label);
            let pbar = config.babble_pbar().expect("babble spec");
            Box::new(BabblePush::new(cb, pbar, *allow_clamp, main, coins)?)
        }
    })
}

/// Runs one trial; the result depends only on `(master_seed, trial)`.
pub fn run_trial(cb: &Codebook, config: &TrialConfig, trial: usize) -> Result<Transcript> {
    let params = &config.params;
    let seed = config.master_seed;
    let t = trial as u64;
    let message = match config.message {
        MessagePolicy::Fixed(m) => m,
        MessagePolicy::Uniform => stream(seed, t, Role::Message, None).gen_range(0..cb.message_count()),
    };
    let mut adversary = build_adversary(cb, config, t)?;
    let mut alice = LazyEncoder::new(cb, message, stream(seed, t, Role::AliceSecrets, None));
    let known = config.adversary_knows_message.then_some(message);
    let run = run_channel(adversary.as_mut(), &mut alice, params, config.lookahead, known);
    let decode = bob_decode(cb, &run.y);
    let erasure = params.q as u16;
    let substituted: Vec<bool> =
        run.x.iter().zip(&run.y.symbols).map(|(&a, &b)| b != erasure && b != a as u16).collect();
    let erased: Vec<bool> = run.y.symbols.iter().map(|&b| b == erasure).collect();
    let calvin = CalvinTrajectory::from_positions(params.chunk_len, &substituted, &erased);
    let reference = Reference::new(params);
    let trajectory_type = classify(&calvin, &reference).ok();
    let trajectory_t_star = classify_and_find_tstar(&calvin, &reference).ok().map(|c| c.1);
    let success = decode.decoded() == Some(message);
    Ok(Transcript {
        version: TRANSCRIPT_VERSION,
        trial,
        message,
        secrets: alice.secrets().to_vec(),
        codeword: B64.encode(&run.x),
        received: encode_symbols(&run.y.symbols, params.q),
        actions: run.actions.iter().map(|a| a.code()).collect(),
        violations: run.violations,
        errors_used: run.budget.errors_used,
        erasures_used: run.budget.erasures_used,
        fallback_engaged: adversary.fallback_engaged(),
        push_stats: adversary.push_stats(),
        trajectory_type,
        trajectory_t_star,
        list_bound_violations: list_bound_violations(params, &decode),
        decode,
        success,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageStats {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    pub cap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRate {
    pub failures: usize,
    pub trials: usize,
    pub rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub version: u32,
    pub config: TrialConfig,
    pub message_count: usize,
    pub trials: usize,
    pub decode_success_count: usize,
    pub miscorrection_count: usize,
    pub ambiguous_count: usize,
    pub exhausted_count: usize,
    pub high_type_count: usize,
    /// Size of every list produced by any decoder attempt.
    pub list_size_histogram: BTreeMap<usize, usize>,
    /// Chunk end at which decoding stopped, over decoded trials.
    pub t_star_histogram: BTreeMap<usize, usize>,
    pub errors_used: UsageStats,
    pub erasures_used: UsageStats,
    pub violation_count: usize,
    pub fallback_engaged_count: usize,
    pub list_bound_violations: usize,
    pub push_stats: Option<PushStats>,
    pub error_rate: Option<ErrorRate>,
}

impl ExperimentSummary {
    fn empty(config: &TrialConfig) -> Self {
        ExperimentSummary {
            version: SUMMARY_VERSION,
            config: config.clone(),
            message_count: config.params.message_count(),
            trials: 0,
            decode_success_count: 0,
            miscorrection_count: 0,
            ambiguous_count: 0,
            exhausted_count: 0,
            high_type_count: 0,
            list_size_histogram: BTreeMap::new(),
            t_star_histogram: BTreeMap::new(),
            errors_used: UsageStats { cap: config.params.error_cap(), ..Default::default() },
            erasures_used: UsageStats { cap: config.params.erasure_cap(), ..Default::default() },
            violation_count: 0,
            fallback_engaged_count: 0,
            list_bound_violations: 0,
            push_stats: None,
            error_rate: None,
        }
    }

    fn absorb(&mut self, tr: &Transcript) {
        let first = self.trials == 0;
        self.trials += 1;
        match tr.decode.result {
            DecodeResult::Decoded { t_star, .. } => {
                if tr.success {
                    self.decode_success_count += 1;
                } else {
                    self.miscorrection_count += 1;
                }
                *self.t_star_histogram.entry(t_star).or_default() += 1;
            }
            DecodeResult::Ambiguous { .. } => self.ambiguous_count += 1,
            DecodeResult::Exhausted => self.exhausted_count += 1,
        }
        if tr.trajectory_type == Some(TrajectoryType::High) {
            self.high_type_count += 1;
        }
        for a in &tr.decode.trace {
            *self.list_size_histogram.entry(a.list.len()).or_default() += 1;
        }
        for (stats, used) in [(&mut self.errors_used, tr.errors_used), (&mut self.erasures_used, tr.erasures_used)] {
            stats.min = if first { used } else { stats.min.min(used) };
            stats.max = stats.max.max(used);
            stats.mean += used as f64;
        }
        self.violation_count += tr.violations;
        self.fallback_engaged_count += tr.fallback_engaged as usize;
        self.list_bound_violations += tr.list_bound_violations;
        if let Some(ps) = tr.push_stats {
            let acc = self.push_stats.get_or_insert_with(PushStats::default);
            acc.disagreements += ps.disagreements;
            acc.coin_flips += ps.coin_flips;
            acc.substitutions += ps.substitutions;
            acc.erasures += ps.erasures;
        }
    }

    fn finish(&mut self) {
        if self.trials > 0 {
            self.errors_used.mean /= self.trials as f64;
            self.erasures_used.mean /= self.trials as f64;
            self.error_rate = summarize_error_rate(self).ok();
        }
    }
}

/// Generates the experiment codebook from the master seed and runs it.
pub fn run_experiment(config: &TrialConfig, keep_transcripts: bool) -> Result<(ExperimentSummary, Vec<Transcript>)> {
    config.validate()?;
    let cb = Codebook::generate(&config.params, config.master_seed)?;
    run_experiment_with(&cb, config, keep_transcripts)
}

/// Trials run in parallel; aggregation follows trial order so the summary
/// does not depend on scheduling.
pub fn run_experiment_with(
    cb: &Codebook,
    config: &TrialConfig,
    keep_transcripts: bool,
) -> Result<(ExperimentSummary, Vec<Transcript>)> {
    config.validate()?;
    let transcripts: Vec<Transcript> =
        (0..config.trials).into_par_iter().map(|i| run_trial(cb, config, i)).collect::<Result<_>>()?;
    let mut summary = ExperimentSummary::empty(config);
    for tr in &transcripts {
        summary.absorb(tr);
    }
    summary.finish();
    Ok((summary, if keep_transcripts { transcripts } else { Vec::new() }))
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(failures: usize, trials: usize) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::domain("no trials"));
    }
    let z = 1.96f64;
    let n = trials as f64;
    let ph = failures as f64 / n;
    let den = 1.0 + z * z / n;
    let center = (ph + z * z / (2.0 * n)) / den;
    let half = z * (ph * (1.0 - ph) / n + z * z / (4.0 * n * n)).sqrt() / den;
    Ok(((center - half).max(0.0), (center + half).min(1.0)))
}

/// Decoder failure rate (anything but the transmitted message) with its
/// Wilson interval.
pub fn summarize_error_rate(summary: &ExperimentSummary) -> Result<ErrorRate> {
    let failures = summary.trials - summary.decode_success_count;
    let (lo, hi) = wilson_interval(failures, summary.trials)?;
    Ok(ErrorRate {
        failures,
        trials: summary.trials,
        rate: failures as f64 / summary.trials as f64,
        wilson_low: lo,
        wilson_high: hi,
    })
}
