//! Preset desk-scale runs of the three headline separations.

use std::path::Path;

use memlab::analysis::{
    contradiction_report, eve_guessing, signalling_measure, stats::wilson_interval, stats::Z_99, ExactTable,
    GuessStrategy, MapDecoder,
};
use memlab::devices::{echo_signalling, even_round_copier, iid_bell, retain_remeasure, Device, Process1Spec};
use memlab::protocol::{run_example_protocol, ExampleConfig, Transcript};
use memlab::rng::trial_rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{io_error, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Which {
    Signalling,
    Contradiction,
    ProtocolAttack,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoLine {
    pub name: &'static str,
    pub pass: bool,
    pub summary: String,
}

impl std::fmt::Display for DemoLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.summary)
    }
}

pub struct DemoSettings {
    pub seed: u64,
    /// Monte Carlo trials for the protocol attack.
    pub trials: u64,
}

fn signalling() -> CliResult<(DemoLine, Value)> {
    let echo = signalling_measure(&ExactTable::build(&Device::sequential(echo_signalling()), 2)?)?;
    let iid = signalling_measure(&ExactTable::build(&Device::sequential(iid_bell()), 2)?)?;
    let (e, i) = (echo.magnitude(2), iid.magnitude(2));
    let pass = (e - 1.0).abs() < 1e-12 && i.abs() < 1e-12;
    Ok((
        DemoLine {
            name: "signalling",
            pass,
            summary: format!("round-2 signalling magnitude {e:.3} for echo, {i:.3} for iid_bell"),
        },
        json!({"echo": echo, "iid_bell": iid}),
    ))
}

fn contradiction() -> CliResult<(DemoLine, Value)> {
    let r = contradiction_report(&Device::sequential(retain_remeasure()), 8)?;
    let pass = r.naive_claim.delta_ph == 0.0
        && r.naive_claim.claimed_length == 8.0
        && (r.actual_minentropy - 1.0).abs() < 1e-9
        && r.ebit_budget == Some(1);
    Ok((
        DemoLine {
            name: "contradiction",
            pass,
            summary: format!(
                "retain_remeasure n=8: naive {} bits vs actual {} bit (phase error {}, {} ebit consumed)",
                r.naive_claim.claimed_length,
                r.actual_minentropy.round(),
                r.naive_claim.delta_ph,
                r.ebit_budget.unwrap_or(0)
            ),
        },
        json!(r),
    ))
}

fn batch(device: &Device, n_pairs: usize, trials: u64, seed: u64) -> CliResult<Vec<Transcript>> {
    let config = ExampleConfig::new(n_pairs);
    Ok((0..trials)
        .into_par_iter()
        .map(|t| run_example_protocol(&config, device, &mut trial_rng(seed, t)))
        .collect::<memlab::Result<_>>()?)
}

fn protocol_attack(s: &DemoSettings) -> CliResult<(DemoLine, Value)> {
    let copier = Device::sequential(even_round_copier());
    let attacked = eve_guessing(&batch(&copier, 50, s.trials, s.seed)?, &GuessStrategy::Copy)?;

    let honest = Device::joint(Process1Spec::bell_product(6)?);
    let map = MapDecoder::build(&honest, 3)?;
    let exact = map.exact().clone();
    let sampled = eve_guessing(
        &batch(&honest, 3, s.trials, s.seed ^ 1)?,
        &GuessStrategy::Map(Box::new(map)),
    )?;
    let exact_ok = exact
        .by_length
        .iter()
        .all(|l| (l.success - 2f64.powi(-(l.length as i32))).abs() < 1e-12);
    let sampled_ok = sampled.by_length.iter().all(|(&k, tally)| {
        let (lo, hi) = wilson_interval(tally.successes, tally.trials, Z_99);
        let p = 2f64.powi(-(k as i32));
        lo <= p && p <= hi
    });
    let pass = attacked.success_rate == 1.0 && attacked.pa_match_rate == 1.0 && exact_ok && sampled_ok;
    let per_length: Vec<String> = sampled
        .by_length
        .iter()
        .map(|(k, t)| format!("k={k}: {}/{}", t.successes, t.trials))
        .collect();
    Ok((
        DemoLine {
            name: "protocol_attack",
            pass,
            summary: format!(
                "Eve success {:.3} (copier, {} trials, PA key matched {:.3}) vs {:.3} honest (exact sum of P(k) 2^-k = {:.6}; {})",
                attacked.success_rate,
                attacked.trials,
                attacked.pa_match_rate,
                sampled.success_rate,
                exact.overall_success,
                per_length.join(", ")
            ),
        },
        json!({"even_copier": attacked, "honest_map_exact": exact, "honest_map_sampled": sampled}),
    ))
}

/// Runs the selected demos, writing `demo_<name>.json` under `out`.
pub fn demo(which: Which, settings: &DemoSettings, out: &Path) -> CliResult<Vec<DemoLine>> {
    if settings.trials == 0 {
        return Err(CliError::config("--trials must be at least 1"));
    }
    let mut results = Vec::new();
    if matches!(which, Which::Signalling | Which::All) {
        results.push(signalling()?);
    }
    if matches!(which, Which::Contradiction | Which::All) {
        results.push(contradiction()?);
    }
    if matches!(which, Which::ProtocolAttack | Which::All) {
        results.push(protocol_attack(settings)?);
    }
    std::fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
    let mut lines = Vec::new();
    for (line, detail) in results {
        let path = out.join(format!("demo_{}.json", line.name));
        let body = json!({
            "demo": line.name,
            "pass": line.pass,
            "summary": line.summary,
            "seed": settings.seed,
            "rng_stream": memlab::rng::STREAM_ID,
            "detail": detail,
        });
        let mut text = serde_json::to_string_pretty(&body).expect("demo reports serialize");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        lines.push(line);
    }
    Ok(lines)
}
