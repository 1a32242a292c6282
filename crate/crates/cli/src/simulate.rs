use std::path::PathBuf;

use memlab::devices::Device;
use memlab::protocol::transcript::{config_hash, to_jsonl, TranscriptMeta};
use memlab::protocol::{run_bb84, run_example_protocol, Transcript};
use memlab::rng::trial_rng;
use rayon::prelude::*;

use crate::analyses::run_analyses;
use crate::config::{ExperimentConfig, ProtocolParams};
use crate::error::{io_error, CliResult};
use crate::report::{build_report, transcript_hash, write_report, ReportHeader};

pub fn transcript_file_name(trial: u64) -> String {
    format!("trial_{trial:06}.jsonl")
}

/// Runs trial `trial` on its own stream.
pub fn run_trial(config: &ExperimentConfig, device: &Device, trial: u64) -> memlab::Result<Transcript> {
    let mut rng = trial_rng(config.seed, trial);
    match &config.protocol_params {
        ProtocolParams::Bb84(p) => run_bb84(p, device, &mut rng),
        ProtocolParams::Example(p) => run_example_protocol(p, device, &mut rng),
    }
}

pub struct SimulateOutput {
    pub report_path: PathBuf,
    pub transcript_dir: PathBuf,
    pub report: serde_json::Value,
}

pub fn simulate(config: &ExperimentConfig) -> CliResult<SimulateOutput> {
    let device = config.device()?;
    let recorded = config.recorded();
    let batch: Vec<Transcript> = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(config, &device, trial))
        .collect::<memlab::Result<_>>()?;

    let dir = config.output.path.join("transcripts");
    std::fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    let mut files = Vec::with_capacity(batch.len());
    for (trial, t) in batch.iter().enumerate() {
        let meta = TranscriptMeta::new(&config.device_id, config.seed, trial as u64, recorded.clone());
        let text = to_jsonl(t, &meta);
        let path = dir.join(transcript_file_name(trial as u64));
        std::fs::write(&path, &text).map_err(|e| io_error(&path, e))?;
        files.push(text);
    }

    let analyses = run_analyses(&config.analyses, &config.plan(&device), &batch)?;
    let report = build_report(
        ReportHeader {
            command: "simulate",
            config_hash: config_hash(&recorded),
            config: recorded,
            trials: batch.len(),
            transcript_hash: transcript_hash(files.iter().map(String::as_str)),
        },
        analyses,
    );
    let report_path = write_report(&config.output.path, &report, config.output.format)?;
    Ok(SimulateOutput {
        report_path,
        transcript_dir: dir,
        report,
    })
}
