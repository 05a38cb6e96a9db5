use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use qcausal_core::capacity::{self as cap, capacity_grid_oracle};
use qcausal_core::sim::run_experiment_with;
use qcausal_core::trajectory::{region_curves, sample_trajectory};
use qcausal_core::*;
use serde_json::json;

use crate::config::{config_to_usage, describe, usage, FileConfig, UsageError};
use crate::output::{csv_writer, flag, opt};
use crate::{CapacityArgs, CodebookCommand, RegionArgs, SimulateArgs, SurfaceArgs, TrajectoryArgs, VerifyArgs};

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn check_fraction(name: &str, v: f64, errs: &mut Vec<String>) {
    if !(0.0..=1.0).contains(&v) {
        errs.push(format!("{name}={v} must lie in [0, 1]"));
    }
}

pub fn capacity(a: CapacityArgs) -> Result<ExitCode> {
    let mut errs = Vec::new();
    if a.q < 2 {
        errs.push(format!("q={} must be at least 2", a.q));
    }
    check_fraction("p", a.p, &mut errs);
    check_fraction("pstar", a.pstar, &mut errs);
    if a.grid_points < 2 {
        errs.push("--grid-points must be at least 2".into());
    }
    if !errs.is_empty() {
        return Err(UsageError(errs).into());
    }
    let ch = ChannelModel::new(a.q, a.p, a.pstar);
    let result = if a.grid_oracle { capacity_grid_oracle(&ch, a.grid_points) } else { qcausal_core::capacity(&ch) };
    print_json(&result)?;
    Ok(ExitCode::SUCCESS)
}

pub fn capacity_surface(a: SurfaceArgs) -> Result<ExitCode> {
    if let Some(q) = a.qs.iter().find(|&&q| q < 2) {
        return Err(usage(format!("q={q} must be at least 2")));
    }
    let qs: Vec<String> = a.qs.iter().map(|q| q.to_string()).collect();
    let params = format!("qs={} p_steps={} pstar_steps={}", qs.join(","), a.p_steps, a.pstar_steps);
    let mut w = csv_writer(a.out.as_deref(), "capacity-surface", &params)?;
    w.write_record(["q", "p", "pstar", "capacity"])?;
    for pt in cap::capacity_surface(&a.qs, a.p_steps, a.pstar_steps) {
        w.write_record([pt.q.to_string(), pt.p.to_string(), pt.p_star.to_string(), pt.capacity.to_string()])?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn load_profile(path: &Path, params: &ChannelParams) -> Result<ErasureProfile> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let counts: Vec<usize> =
        serde_json::from_str(&text).map_err(|e| usage(format!("erasure profile {}: {e}", path.display())))?;
    let mut errs = Vec::new();
    if counts.len() != params.chunk_count() + 1 {
        errs.push(format!(
            "erasure profile has {} entries, expected one per chunk boundary ({})",
            counts.len(),
            params.chunk_count() + 1
        ));
    }
    if counts.last().is_some_and(|&c| c > params.erasure_cap()) {
        errs.push(format!("erasure profile ends above the erasure cap {}", params.erasure_cap()));
    }
    if !errs.is_empty() {
        return Err(UsageError(errs).into());
    }
    ErasureProfile::from_counts(params.chunk_len, counts).map_err(config_to_usage)
}

pub fn trajectory(a: TrajectoryArgs) -> Result<ExitCode> {
    let r = a.params.resolve()?;
    let params = r.params;
    let profile = match &a.lambda_profile {
        Some(path) => load_profile(path, &params)?,
        None => ErasureProfile::zero(&params),
    };
    let reference = Reference::new(&params);
    let mut w = csv_writer(a.out.as_deref(), "trajectory", &describe(&params, None))?;
    w.write_record(["t", "t_minus_lambda", "p_bar", "p_hat", "p_tilde", "list_ok", "energy_ok"])?;
    for s in sample_trajectory(&reference, &profile, params.rate) {
        w.write_record([
            s.t.to_string(),
            (s.t - s.lambda_t).to_string(),
            s.p_bar_t.to_string(),
            opt(s.p_hat_t),
            opt(s.p_tilde_t),
            flag(s.list_condition_holds),
            flag(s.energy_condition_holds),
        ])?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

pub fn region(a: RegionArgs) -> Result<ExitCode> {
    let params = a.params.resolve()?.params;
    let reference = Reference::new(&params);
    let curves = region_curves(&params, &reference)?;
    let mut w = csv_writer(a.out.as_deref(), "region", &describe(&params, None))?;
    w.write_record(["curve", "t", "t_minus_lambda", "value"])?;
    for pt in curves {
        w.write_record([pt.curve.id().to_string(), pt.t.to_string(), pt.t_minus_lambda.to_string(), pt.value.to_string()])?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn adversary_from_kind(kind: &str, pbar: Option<f64>, allow_clamp: bool) -> AdversarySpec {
    match kind {
        "uniform_random" => AdversarySpec::UniformRandom { seed_stream: None },
        "greedy_push" => AdversarySpec::GreedyPush { seed_stream: None },
        "front_loaded" => AdversarySpec::FrontLoaded { seed_stream: None },
        "babble_push" => AdversarySpec::BabblePush { pbar, seed_stream: None, allow_clamp },
        _ => AdversarySpec::Null,
    }
}

fn coding_error(e: Error) -> anyhow::Error {
    match e {
        Error::Resource(msg) => usage(msg),
        other => config_to_usage(other),
    }
}

pub fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let r = a.params.resolve()?;
    let file = r.file;
    let mut adversary = match a.adversary.as_deref() {
        Some(kind) => adversary_from_kind(kind, a.pbar, a.allow_clamp),
        None => file.adversary.clone().unwrap_or(AdversarySpec::Null),
    };
    if let AdversarySpec::BabblePush { pbar, allow_clamp, .. } = &mut adversary {
        *pbar = a.pbar.or(*pbar);
        *allow_clamp |= a.allow_clamp;
    } else if a.pbar.is_some() {
        return Err(usage("--pbar only applies to the babble_push adversary"));
    }
    let config = TrialConfig {
        params: r.params,
        adversary,
        message: a.message.map(MessagePolicy::Fixed).or(file.message).unwrap_or_default(),
        trials: a.trials.or(file.trials).unwrap_or(1000),
        master_seed: r.seed,
        lookahead: a.lookahead.or(file.lookahead).unwrap_or(0),
        adversary_knows_message: a.adversary_knows_message || file.adversary_knows_message.unwrap_or(false),
    };
    config.validate().map_err(config_to_usage)?;
    let cb = match a.codebook.as_ref().or(file.codebook.as_ref()) {
        Some(path) => {
            let cb = Codebook::load(path).with_context(|| format!("loading codebook {}", path.display()))?;
            if cb.params() != &config.params {
                return Err(usage(format!("codebook {} was built for different parameters", path.display())));
            }
            cb
        }
        None => Codebook::generate(&config.params, config.master_seed).map_err(coding_error)?,
    };
    let (summary, transcripts) = run_experiment_with(&cb, &config, a.keep_transcripts).map_err(coding_error)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    fs::write(a.out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    if a.keep_transcripts {
        let dir = a.out.join("transcripts");
        fs::create_dir_all(&dir)?;
        for tr in &transcripts {
            fs::write(dir.join(format!("trial-{:06}.json", tr.trial)), tr.to_json()?)?;
        }
    }
    println!(
        "{} trials: {} decoded, {} miscorrected, {} ambiguous, {} exhausted; summary in {}",
        summary.trials,
        summary.decode_success_count,
        summary.miscorrection_count,
        summary.ambiguous_count,
        summary.exhausted_count,
        a.out.join("summary.json").display()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn verify(a: VerifyArgs) -> Result<ExitCode> {
    let file = a.params.file()?;
    if !(a.debug_margin_scale.is_finite() && a.debug_margin_scale >= 0.0) {
        return Err(usage("--debug-margin-scale must be a nonnegative number"));
    }
    if a.params.any_channel_key(&file) {
        return verify_point(a, file);
    }
    let mut errs = Vec::new();
    if a.qs.is_empty() || a.qs.iter().any(|&q| q < 2) {
        errs.push("--qs must list alphabet sizes of at least 2".into());
    }
    if a.draws == 0 {
        errs.push("--draws must be positive".into());
    }
    if !errs.is_empty() {
        return Err(UsageError(errs).into());
    }
    let cfg = VerifyConfig {
        qs: a.qs,
        draws_per_q: a.draws,
        seed: a.params.seed.or(file.seed).unwrap_or(VerifyConfig::default().seed),
        synthetic_per_style: a.synthetic_per_style,
        lemma1_samples: a.lemma1_samples,
        margin_scale: a.debug_margin_scale,
        max_counterexamples: a.max_counterexamples,
    };
    let report = run_verify(&cfg)?;
    if a.json {
        print_json(&report)?;
    } else {
        println!("{} parameter draws", report.draws);
        println!("{:<16} {:>12} {:>10} {:>10}  result", "claim", "checks", "failures", "skipped");
        for c in &report.claims {
            let verdict = if c.passed() { "pass" } else { "FAIL" };
            println!("{:<16} {:>12} {:>10} {:>10}  {verdict}", c.claim.name(), c.checks, c.failures, c.skipped);
            for ce in &c.counterexamples {
                println!("    counterexample: {ce}");
            }
        }
    }
    Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn verify_point(a: VerifyArgs, file: FileConfig) -> Result<ExitCode> {
    let params = a.params.resolve_with(file, Some(4000))?.params;
    let reference = Reference::new(&params).with_margin_scale(a.debug_margin_scale);
    let mut w = csv_writer(a.out.as_deref(), "verify", &describe(&params, None))?;
    w.write_record([
        "t",
        "t_minus_lambda",
        "p_hat",
        "list_lhs",
        "list_rhs",
        "list_ok",
        "energy_lhs",
        "energy_rhs",
        "energy_ok",
    ])?;
    let (mut rows, mut failures) = (0, 0);
    for t in reference.chunk_ends() {
        if !reference.in_claim_range(t, 0) {
            continue;
        }
        let c = reference.check_conditions(t, 0, params.rate)?;
        rows += 1;
        failures += (!c.list_ok || !c.energy_ok) as usize;
        w.write_record([
            t.to_string(),
            t.to_string(),
            reference.p_hat(t, 0)?.to_string(),
            c.list_lhs.to_string(),
            c.list_rhs.to_string(),
            c.list_ok.to_string(),
            c.energy_lhs.to_string(),
            c.energy_rhs.to_string(),
            c.energy_ok.to_string(),
        ])?;
    }
    w.flush()?;
    drop(w);
    if rows == 0 {
        eprintln!("no chunk end lies in the claimed range");
    }
    if failures > 0 {
        eprintln!("{failures} of {rows} chunk ends violate a condition");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn codebook_info(cb: &Codebook) -> serde_json::Value {
    let mut histogram = BTreeMap::new();
    for &s in cb.symbols() {
        *histogram.entry(s).or_insert(0usize) += 1;
    }
    let p = cb.params();
    json!({
        "q": p.q,
        "n": p.n,
        "chunk_len": p.chunk_len,
        "theta": p.theta(),
        "chunk_count": cb.chunk_count(),
        "message_count": cb.message_count(),
        "secret_count": cb.secret_count(),
        "seed": cb.seed(),
        "p": p.p,
        "pstar": p.p_star,
        "eps": p.epsilon,
        "rate": p.rate,
        "theoretical": p.theoretical_mode,
        "symbols": cb.symbols().len(),
        "symbol_histogram": histogram,
    })
}

pub fn codebook(c: CodebookCommand) -> Result<ExitCode> {
    match c {
        CodebookCommand::Gen { params, out } => {
            let r = params.resolve()?;
            r.params.validate_for_coding().map_err(config_to_usage)?;
            let cb = Codebook::generate(&r.params, r.seed).map_err(coding_error)?;
            cb.save(&out).with_context(|| format!("writing {}", out.display()))?;
            print_json(&codebook_info(&cb))?;
        }
        CodebookCommand::Inspect { file } => {
            let cb = Codebook::load(&file).with_context(|| format!("reading {}", file.display()))?;
            print_json(&codebook_info(&cb))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
