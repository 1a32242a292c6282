//! Analyses over device models and protocol transcripts.
//!
//! Exact-mode analyses enumerate branch probabilities and are authoritative.
//! Sampled modes work from transcript batches and carry Wilson intervals.
//! Eve's knowledge is always exactly the public log.

mod contradiction;
mod empirical;
mod entropy;
mod guessing;
mod signalling;
pub mod stats;
mod subset;

pub use contradiction::{contradiction_report, phase_error_rate, ContradictionReport};
pub use empirical::{EmpiricalDistribution, ExactTable, InputConditioned};
pub use entropy::{
    binary_entropy, entropy_of, string_entropy, EntropyMode, OutputSelect, MAX_EXACT_ROUNDS,
};
pub(crate) use entropy::binary_entropy_unchecked;
pub use guessing::{
    copy_decoder, eve_guessing, eve_pa_key, EveView, GuessStrategy, GuessingReport, MapDecoder,
    MapExact,
};
pub use signalling::{signalling_measure, Scope, SignallingEntry, SignallingReport};
pub use subset::{test_subset_consistency, SubsetReport, SubsetWitness};

use serde::Serialize;

use crate::protocol::{naive_key_claim, KeyClaim, Transcript};
use crate::{Error, Result};

/// X and key-basis error counts pooled over a transcript batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QberReport {
    pub trials: usize,
    pub x_errors: usize,
    pub x_total: usize,
    pub z_errors: usize,
    pub z_total: usize,
    pub x_rate: Option<f64>,
    pub z_rate: Option<f64>,
}

pub fn qber(batch: &[Transcript]) -> QberReport {
    let mut r = QberReport {
        trials: batch.len(),
        x_errors: 0,
        x_total: 0,
        z_errors: 0,
        z_total: 0,
        x_rate: None,
        z_rate: None,
    };
    for t in batch {
        r.x_errors += t.test_statistics.x.errors;
        r.x_total += t.test_statistics.x.total;
        r.z_errors += t.test_statistics.z.errors;
        r.z_total += t.test_statistics.z.total;
    }
    r.x_rate = (r.x_total > 0).then(|| r.x_errors as f64 / r.x_total as f64);
    r.z_rate = (r.z_total > 0).then(|| r.z_errors as f64 / r.z_total as f64);
    r
}

/// Naive claims for every transcript in a batch that has X test data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NaiveClaimReport {
    pub label: &'static str,
    pub claims: Vec<KeyClaim>,
    /// Transcripts without X test rounds, for which no claim exists.
    pub skipped_no_tests: usize,
    pub mean_claimed_length: Option<f64>,
    pub mean_sifted_length: Option<f64>,
}

pub fn naive_claims(batch: &[Transcript]) -> Result<NaiveClaimReport> {
    let mut claims = Vec::with_capacity(batch.len());
    let mut skipped_no_tests = 0;
    for t in batch {
        match naive_key_claim(t) {
            Ok(c) => claims.push(c),
            Err(Error::NoTestRounds) => skipped_no_tests += 1,
            Err(e) => return Err(e),
        }
    }
    let mean = |f: &dyn Fn(&KeyClaim) -> f64| {
        (!claims.is_empty()).then(|| claims.iter().map(f).sum::<f64>() / claims.len() as f64)
    };
    Ok(NaiveClaimReport {
        label: "NAIVE: valid only for memoryless devices",
        mean_claimed_length: mean(&|c| c.claimed_length),
        mean_sifted_length: mean(&|c| c.n_key as f64),
        claims,
        skipped_no_tests,
    })
}
