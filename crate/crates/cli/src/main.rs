//! `qcausal`: capacity, trajectories, simulation and claim checks from the
//! command line.
//!
//! Exit codes: 0 success, 1 a checked property failed (or a runtime error),
//! 2 invalid usage.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ParamArgs, UsageError};

#[derive(Debug, Parser)]
#[command(name = "qcausal", version = env!("QCAUSAL_GIT_DESCRIBE"), about = "Capacity and coding laboratory for q-ary causal error-erasure channels")]
struct Cli {
    /// On usage errors print a JSON diagnostic listing every violation to stdout
    #[arg(long, global = true)]
    json_errors: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Capacity at one (q, p, p*) as JSON
    Capacity(CapacityArgs),
    /// Capacity over a (p, p*) grid for several q, as CSV
    CapacitySurface(SurfaceArgs),
    /// Reference trajectories and condition flags at every chunk end, as CSV
    Trajectory(TrajectoryArgs),
    /// Trajectory-region curves with no erasures, as CSV
    Region(RegionArgs),
    /// Seeded Monte Carlo trials; writes summary.json and optional transcripts
    Simulate(SimulateArgs),
    /// Numeric claim suite over a random grid, or a condition table at one point
    Verify(VerifyArgs),
    /// Generate or inspect a serialized codebook
    #[command(subcommand)]
    Codebook(CodebookCommand),
}

#[derive(Debug, Args)]
struct CapacityArgs {
    /// Alphabet size q
    #[arg(long, default_value_t = 2)]
    q: u32,
    /// Error fraction p
    #[arg(long)]
    p: f64,
    /// Erasure fraction p*
    #[arg(long, default_value_t = 0.0)]
    pstar: f64,
    /// Use the brute-force grid minimizer instead of golden-section search
    #[arg(long)]
    grid_oracle: bool,
    /// Grid size for --grid-oracle
    #[arg(long, default_value_t = 1_000_000, requires = "grid_oracle")]
    grid_points: usize,
}

#[derive(Debug, Args)]
struct SurfaceArgs {
    /// Alphabet sizes, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = [2u32, 3, 4, 16])]
    qs: Vec<u32>,
    /// Steps over p in [0, (q-1)/(2q)]
    #[arg(long, default_value_t = 20)]
    p_steps: usize,
    /// Steps over p* in [0, (q-1)/q]
    #[arg(long, default_value_t = 20)]
    pstar_steps: usize,
    /// Output file [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrajectoryArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// JSON array of cumulative erasure counts at every chunk boundary, starting with 0 [default: no erasures]
    #[arg(long, value_name = "FILE")]
    lambda_profile: Option<PathBuf>,
    /// Output file [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RegionArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Output file [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Also write one JSON transcript per trial under OUT/transcripts
    #[arg(long)]
    keep_transcripts: bool,
    /// Number of trials [default: 1000]
    #[arg(long)]
    trials: Option<usize>,
    /// Adversary kind [default: null]
    #[arg(long, value_parser = ["null", "uniform_random", "greedy_push", "front_loaded", "babble_push"])]
    adversary: Option<String>,
    /// Babble fraction for babble_push [default: the capacity minimizer]
    #[arg(long)]
    pbar: Option<f64>,
    /// Let babble_push clamp a babble length beyond n - 1
    #[arg(long)]
    allow_clamp: bool,
    /// Fixed message id [default: uniform per trial]
    #[arg(long)]
    message: Option<usize>,
    /// Symbols of lookahead given to the adversary
    #[arg(long)]
    lookahead: Option<usize>,
    /// Give the adversary the message
    #[arg(long)]
    adversary_knows_message: bool,
    /// Use this codebook instead of generating one from the seed
    #[arg(long, value_name = "FILE")]
    codebook: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Single-point mode: channel parameters (n defaults to the smallest multiple of 1/theta >= 4000)
    #[command(flatten)]
    params: ParamArgs,
    /// Alphabet sizes for the random grid
    #[arg(long, value_delimiter = ',', default_values_t = [2u32, 3, 4])]
    qs: Vec<u32>,
    /// Random draws per alphabet size
    #[arg(long, default_value_t = 200)]
    draws: usize,
    /// Synthetic trajectories per style per draw
    #[arg(long, default_value_t = 2)]
    synthetic_per_style: usize,
    /// Entropy-bound samples per draw
    #[arg(long, default_value_t = 50)]
    lemma1_samples: usize,
    /// Counterexamples kept per claim
    #[arg(long, default_value_t = 5)]
    max_counterexamples: usize,
    /// Print the full report as JSON
    #[arg(long)]
    json: bool,
    /// Output file for the single-point table [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, hide = true, default_value_t = 1.0)]
    debug_margin_scale: f64,
}

#[derive(Debug, Subcommand)]
enum CodebookCommand {
    /// Generate a codebook from the seed and write it
    Gen {
        #[command(flatten)]
        params: ParamArgs,
        /// Output file
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a codebook's header and symbol statistics as JSON
    Inspect {
        /// Codebook file
        file: PathBuf,
    },
}

fn wants_json_errors() -> bool {
    std::env::args().any(|a| a == "--json-errors")
}

fn report_usage(violations: &[String], json: bool) {
    if json {
        let doc = serde_json::json!({ "status": "usage_error", "violations": violations });
        println!("{}", serde_json::to_string_pretty(&doc).expect("plain JSON"));
    } else {
        for v in violations {
            eprintln!("error: {v}");
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) if wants_json_errors() => {
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ").to_string();
            report_usage(&[first], true);
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    let json = cli.json_errors;
    let result = match cli.command {
        Command::Capacity(a) => commands::capacity(a),
        Command::CapacitySurface(a) => commands::capacity_surface(a),
        Command::Trajectory(a) => commands::trajectory(a),
        Command::Region(a) => commands::region(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Verify(a) => commands::verify(a),
        Command::Codebook(c) => commands::codebook(c),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            if let Some(u) = e.downcast_ref::<UsageError>() {
                report_usage(&u.0, json);
                return ExitCode::from(2);
            }
            if let Some(qcausal_core::Error::Config(v)) = e.downcast_ref::<qcausal_core::Error>() {
                report_usage(v, json);
                return ExitCode::from(2);
            }
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
