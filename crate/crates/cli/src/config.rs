//! Flag and config-file resolution. A config file is a flat JSON object
//! whose keys mirror the long flags; a flag given on the command line wins.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::Args;
use qcausal_core::params::{chunk_len_from_theta, table_theta};
use qcausal_core::sim::{AdversarySpec, MessagePolicy};
use qcausal_core::{capacity, ChannelModel, ChannelParams};
use serde::Deserialize;

/// Every constraint a command line violated. Maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub Vec<String>);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("; "))
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(vec![msg.into()]).into()
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub q: Option<u32>,
    pub p: Option<f64>,
    pub pstar: Option<f64>,
    pub eps: Option<f64>,
    pub n: Option<usize>,
    pub theta: Option<f64>,
    pub rate: Option<f64>,
    pub messages: Option<usize>,
    pub secrets: Option<usize>,
    pub theoretical: Option<bool>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub adversary: Option<AdversarySpec>,
    pub message: Option<MessagePolicy>,
    pub lookahead: Option<usize>,
    pub adversary_knows_message: Option<bool>,
    pub codebook: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
    }
}

/// Channel and code parameters shared by most subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// Flat JSON config file; flags override its keys
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Alphabet size q
    #[arg(long)]
    pub q: Option<u32>,
    /// Error fraction p
    #[arg(long)]
    pub p: Option<f64>,
    /// Erasure fraction p*
    #[arg(long)]
    pub pstar: Option<f64>,
    /// Slack epsilon
    #[arg(long)]
    pub eps: Option<f64>,
    /// Block length n
    #[arg(long)]
    pub n: Option<usize>,
    /// Chunk fraction theta; n*theta must be an integer dividing n [default: eps^2/(9q^2)]
    #[arg(long)]
    pub theta: Option<f64>,
    /// Rate in q-ary symbols per channel use [default: C - eps, floored at 0]
    #[arg(long, conflicts_with = "messages")]
    pub rate: Option<f64>,
    /// Message count M; sets the rate to log_q(M)/n
    #[arg(long)]
    pub messages: Option<usize>,
    /// Secrets per message per chunk [default: 1]
    #[arg(long)]
    pub secrets: Option<usize>,
    /// Follow the asymptotic parameter table for theta and the secret count
    #[arg(long)]
    pub theoretical: bool,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Flags merged over the config file.
pub struct Resolved {
    pub params: ChannelParams,
    pub seed: u64,
    pub file: FileConfig,
}

impl ParamArgs {
    pub fn file(&self) -> anyhow::Result<FileConfig> {
        match &self.config {
            Some(path) => FileConfig::load(path),
            None => Ok(FileConfig::default()),
        }
    }

    /// Whether any channel parameter was given, by flag or file.
    pub fn any_channel_key(&self, file: &FileConfig) -> bool {
        self.q.or(file.q).is_some()
            || self.p.or(file.p).is_some()
            || self.pstar.or(file.pstar).is_some()
            || self.eps.or(file.eps).is_some()
            || self.n.or(file.n).is_some()
    }

    pub fn resolve(&self) -> anyhow::Result<Resolved> {
        let file = self.file()?;
        self.resolve_with(file, None)
    }

    /// `default_n` picks `n` when it is absent: the smallest multiple of
    /// `1/θ` that is at least the given length.
    pub fn resolve_with(&self, file: FileConfig, default_n: Option<usize>) -> anyhow::Result<Resolved> {
        let mut errs = Vec::new();
        let mut need = |name: &str, v: Option<f64>| {
            if v.is_none() {
                errs.push(format!("missing --{name}"));
            }
            v.unwrap_or(f64::NAN)
        };
        let q = self.q.or(file.q).unwrap_or(2);
        let p = need("p", self.p.or(file.p));
        let p_star = need("pstar", self.pstar.or(file.pstar));
        let eps = need("eps", self.eps.or(file.eps));
        let theoretical = self.theoretical || file.theoretical.unwrap_or(false);
        let theta_given = self.theta.or(file.theta);
        let secrets_given = self.secrets.or(file.secrets);
        let messages = self.messages.or(file.messages);
        let rate_given = self.rate.or(if self.messages.is_some() { None } else { file.rate });
        let seed = self.seed.or(file.seed).unwrap_or(0);

        if q < 2 {
            errs.push(format!("q={q} must be at least 2"));
        }
        if theoretical && theta_given.is_some() {
            errs.push("--theoretical fixes theta; do not pass --theta".into());
        }
        if theoretical && secrets_given.is_some() {
            errs.push("--theoretical fixes the secret count; do not pass --secrets".into());
        }
        if messages.is_some() && rate_given.is_some() {
            errs.push("give --messages or --rate, not both".into());
        }
        if messages == Some(0) {
            errs.push("--messages must be positive".into());
        }
        if !(eps > 0.0 && eps < 1.0) && !eps.is_nan() {
            errs.push(format!("eps={eps} must lie in (0, 1)"));
        }
        let theta = theta_given.unwrap_or_else(|| if q >= 2 { table_theta(q, eps) } else { f64::NAN });
        let n = match self.n.or(file.n) {
            Some(n) => n,
            None => match default_n {
                Some(min) if theta.is_finite() && theta > 0.0 => {
                    let unit = (1.0 / theta).round();
                    if (unit * theta - 1.0).abs() > 1e-9 {
                        errs.push(format!("missing --n, and 1/theta = {} is not an integer", 1.0 / theta));
                        0
                    } else {
                        let unit = unit as usize;
                        min.div_ceil(unit) * unit
                    }
                }
                _ => {
                    errs.push("missing --n".into());
                    0
                }
            },
        };
        if !errs.is_empty() {
            return Err(UsageError(errs).into());
        }

        let chunk_len = match chunk_len_from_theta(n, theta) {
            Ok(c) => c,
            Err(qcausal_core::Error::Config(e)) => {
                errs.extend(e);
                0
            }
            Err(e) => return Err(e.into()),
        };
        let rate = match (messages, rate_given) {
            (Some(m), _) => (m as f64).ln() / (q as f64).ln() / n.max(1) as f64,
            (None, Some(r)) => r,
            (None, None) => (capacity(&ChannelModel::new(q, p, p_star)).value - eps).max(0.0),
        };
        let secret_count = if theoretical {
            let s = qcausal_core::params::table_secret_rate(q, theta);
            (q as f64).powf(n as f64 * s).ceil().max(1.0) as usize
        } else {
            secrets_given.unwrap_or(1)
        };
        let params = ChannelParams {
            q,
            p,
            p_star,
            epsilon: eps,
            n,
            chunk_len,
            rate,
            secret_count,
            theoretical_mode: theoretical,
        };
        if let Err(qcausal_core::Error::Config(e)) = params.validate() {
            for v in e {
                if !errs.contains(&v) && !(chunk_len == 0 && v.starts_with("chunk length")) {
                    errs.push(v);
                }
            }
        }
        if errs.is_empty() {
            Ok(Resolved { params, seed, file })
        } else {
            Err(UsageError(errs).into())
        }
    }
}

/// Core configuration errors become usage errors.
pub fn config_to_usage(e: qcausal_core::Error) -> anyhow::Error {
    match e {
        qcausal_core::Error::Config(v) => UsageError(v).into(),
        other => other.into(),
    }
}

/// One-line record of a parameter set, for CSV comment lines.
pub fn describe(params: &ChannelParams, seed: Option<u64>) -> String {
    let mut s = format!(
        "q={} p={} pstar={} eps={} n={} theta={} chunk_len={} rate={} secrets={} theoretical={}",
        params.q,
        params.p,
        params.p_star,
        params.epsilon,
        params.n,
        params.theta(),
        params.chunk_len,
        params.rate,
        params.secret_count,
        params.theoretical_mode
    );
    if let Some(seed) = seed {
        s.push_str(&format!(" seed={seed}"));
    }
    s
}
