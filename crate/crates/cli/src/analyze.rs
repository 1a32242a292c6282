use std::path::{Path, PathBuf};

use memlab::protocol::transcript::from_jsonl;
use memlab::protocol::Transcript;

use crate::analyses::run_analyses;
use crate::config::{read_file, ExperimentConfig, Format};
use crate::error::{io_error, CliError, CliResult};
use crate::report::{build_report, transcript_hash, write_report, ReportHeader};

/// Transcript files named directly or found (`*.jsonl`) in named directories.
pub fn collect_files(paths: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    if paths.is_empty() {
        return Err(CliError::config("analyze needs at least one transcript file"));
    }
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| io_error(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            found.sort();
            files.extend(found);
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            return Err(CliError::config(format!("{}: no such file or directory", p.display())));
        }
    }
    if files.is_empty() {
        return Err(CliError::config("no transcript files found"));
    }
    Ok(files)
}

pub struct AnalyzeRequest<'a> {
    pub ids: &'a [String],
    pub files: &'a [PathBuf],
    pub out: &'a Path,
    pub format: Format,
    pub strategy: Option<&'a str>,
}

/// Recomputes analyses from stored transcripts. All transcripts must carry
/// the same schema version and configuration hash.
pub fn analyze(req: &AnalyzeRequest<'_>) -> CliResult<serde_json::Value> {
    if req.ids.is_empty() {
        return Err(CliError::config("analyze needs at least one analysis id"));
    }
    let files = collect_files(req.files)?;
    let mut loaded = Vec::with_capacity(files.len());
    for f in &files {
        let text = read_file(f)?;
        let (meta, t) = from_jsonl(&text).map_err(|e| CliError::config(format!("{}: {e}", f.display())))?;
        loaded.push((meta, t, text));
    }
    let first = loaded[0].0.clone();
    for (meta, _, _) in &loaded {
        if meta.config_hash != first.config_hash {
            return Err(CliError::config(format!(
                "transcripts mix configurations ({} vs {})",
                first.config_hash, meta.config_hash
            )));
        }
    }
    loaded.sort_by_key(|(meta, _, _)| meta.trial);
    if loaded.windows(2).any(|w| w[0].0.trial == w[1].0.trial) {
        return Err(CliError::config("duplicate trial index among transcripts"));
    }

    let mut config = ExperimentConfig::from_recorded(&first.config)?;
    if let Some(s) = req.strategy {
        config.strategy = s.to_string();
    }
    let device = config.device()?;
    let batch: Vec<Transcript> = loaded.iter().map(|(_, t, _)| t.clone()).collect();
    let analyses = run_analyses(req.ids, &config.plan(&device), &batch)?;
    let report = build_report(
        ReportHeader {
            command: "analyze",
            config: first.config.clone(),
            config_hash: first.config_hash.clone(),
            trials: batch.len(),
            transcript_hash: transcript_hash(loaded.iter().map(|(_, _, text)| text.as_str())),
        },
        analyses,
    );
    write_report(req.out, &report, req.format)?;
    Ok(report)
}
