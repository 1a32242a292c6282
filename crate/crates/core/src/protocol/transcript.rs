//! Line-oriented JSON transcripts.
//!
//! Each line carries `kind` (`header`, `round` or `footer`). One header line (protocol, config, seed, trial, stream id, config hash),
//! one line per round, and a footer with keys as hex plus the public log.
//! Field names are stable under `schema_version` 1.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{Announcement, ProtocolKind, TestStatistics, Transcript};
use crate::devices::RoundRecord;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Run context stored in the header line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptMeta {
    pub device: String,
    pub seed: u64,
    pub trial: u64,
    pub rng_stream: String,
    pub config: Value,
    pub config_hash: String,
}

impl TranscriptMeta {
    pub fn new(device: &str, seed: u64, trial: u64, config: Value) -> Self {
        let config_hash = config_hash(&config);
        Self {
            device: device.to_string(),
            seed,
            trial,
            rng_stream: crate::rng::STREAM_ID.to_string(),
            config,
            config_hash,
        }
    }
}

/// SHA-256 of the canonical (sorted-key) JSON form.
pub fn config_hash(config: &Value) -> String {
    hex::encode(Sha256::digest(config.to_string().as_bytes()))
}

/// Bit string as MSB-first hex plus its length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HexBits {
    pub hex: String,
    pub len: usize,
}

impl HexBits {
    pub fn encode(bits: &[u8]) -> Self {
        let bytes: Vec<u8> = bits
            .chunks(8)
            .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b & 1) << (7 - i))))
            .collect();
        Self {
            hex: hex::encode(bytes),
            len: bits.len(),
        }
    }

    pub fn decode(&self) -> Result<Vec<u8>> {
        let bytes = hex::decode(&self.hex).map_err(|e| Error::SchemaMismatch(format!("bad hex: {e}")))?;
        if bytes.len() != self.len.div_ceil(8) {
            return Err(Error::SchemaMismatch("hex length disagrees with bit length".into()));
        }
        Ok((0..self.len).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1).collect())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Header {
        schema_version: u32,
        protocol: ProtocolKind,
        #[serde(flatten)]
        meta: TranscriptMeta,
    },
    Round {
        schema_version: u32,
        #[serde(flatten)]
        record: RoundRecord,
    },
    Footer {
        schema_version: u32,
        test_rounds: Vec<usize>,
        key_rounds: Vec<usize>,
        sifted_key_a: HexBits,
        sifted_key_b: HexBits,
        test_statistics: TestStatistics,
        pa_seed: HexBits,
        final_key: HexBits,
        public_log: Vec<Announcement>,
    },
}

pub fn to_jsonl(t: &Transcript, meta: &TranscriptMeta) -> String {
    let mut lines = Vec::with_capacity(t.rounds.len() + 2);
    lines.push(Line::Header {
        schema_version: SCHEMA_VERSION,
        protocol: t.protocol,
        meta: meta.clone(),
    });
    for r in &t.rounds {
        lines.push(Line::Round {
            schema_version: SCHEMA_VERSION,
            record: r.clone(),
        });
    }
    lines.push(Line::Footer {
        schema_version: SCHEMA_VERSION,
        test_rounds: t.test_rounds.clone(),
        key_rounds: t.key_rounds.clone(),
        sifted_key_a: HexBits::encode(&t.sifted_key_a),
        sifted_key_b: HexBits::encode(&t.sifted_key_b),
        test_statistics: t.test_statistics,
        pa_seed: HexBits::encode(&t.pa_seed),
        final_key: HexBits::encode(&t.final_key),
        public_log: t.public_log.clone(),
    });
    let mut out = String::new();
    for l in lines {
        out.push_str(&serde_json::to_string(&l).expect("transcript lines serialize"));
        out.push('\n');
    }
    out
}

fn check_version(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::SchemaMismatch(format!(
            "schema_version {v}, expected {SCHEMA_VERSION}"
        )));
    }
    Ok(())
}

pub fn from_jsonl(text: &str) -> Result<(TranscriptMeta, Transcript)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let parse = |l: &str| -> Result<Line> {
        serde_json::from_str(l).map_err(|e| Error::SchemaMismatch(e.to_string()))
    };
    let (protocol, meta) = match parse(lines.next().ok_or_else(|| Error::SchemaMismatch("empty transcript".into()))?)? {
        Line::Header {
            schema_version,
            protocol,
            meta,
        } => {
            check_version(schema_version)?;
            (protocol, meta)
        }
        _ => return Err(Error::SchemaMismatch("first line must be the header".into())),
    };
    let mut rounds = Vec::new();
    for l in lines {
        match parse(l)? {
            Line::Round { schema_version, record } => {
                check_version(schema_version)?;
                if record.round != rounds.len() + 1 {
                    return Err(Error::SchemaMismatch(format!(
                        "round {} out of order",
                        record.round
                    )));
                }
                rounds.push(record);
            }
            Line::Footer {
                schema_version,
                test_rounds,
                key_rounds,
                sifted_key_a,
                sifted_key_b,
                test_statistics,
                pa_seed,
                final_key,
                public_log,
            } => {
                check_version(schema_version)?;
                let t = Transcript {
                    protocol,
                    rounds,
                    public_log,
                    test_rounds,
                    key_rounds,
                    sifted_key_a: sifted_key_a.decode()?,
                    sifted_key_b: sifted_key_b.decode()?,
                    test_statistics,
                    pa_seed: pa_seed.decode()?,
                    final_key: final_key.decode()?,
                };
                t.check_announcements()?;
                return Ok((meta, t));
            }
            Line::Header { .. } => return Err(Error::SchemaMismatch("second header".into())),
        }
    }
    Err(Error::SchemaMismatch("missing footer".into()))
}
