//! Protocol state machines over device executions.
//!
//! [`run_bb84`] is entanglement-based BB84 with X-basis test rounds chosen by
//! spot-checking or as a fixed-size subset. [`run_example_protocol`] repeats
//! every odd round's measurement in the following even round and announces
//! the even-round outcomes.

mod bb84;
mod example;
mod pa;
pub mod transcript;

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::devices::{Party, RoundRecord};
use crate::quantum::Basis;
use crate::{Error, Result};

pub use bb84::run_bb84;
pub use example::{run_example_protocol, ExampleConfig};
pub use pa::{privacy_amplify, random_seed, seed_length};

/// How test rounds are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestSelection {
    /// Each round independently becomes a test round with probability `gamma`,
    /// decided right before the round runs.
    SpotCheck { gamma: f64 },
    /// A uniformly random `k`-subset, drawn before round 1.
    FixedSubset { k: usize },
}

/// Length of the privacy-amplified key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PaLength {
    Fixed(usize),
    Auto(AutoTag),
}

/// Serialized as the string `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

impl PaLength {
    pub const AUTO: PaLength = PaLength::Auto(AutoTag::Auto);

    /// `Fixed(l)` clamps to the key length; `Auto` is `floor(n (1 - h(delta_ph)))`.
    pub fn resolve(&self, key_len: usize, delta_ph: Option<f64>) -> usize {
        match *self {
            PaLength::Fixed(l) => l.min(key_len),
            PaLength::Auto(_) => match delta_ph {
                Some(d) => {
                    let claim = key_len as f64 * (1.0 - crate::analysis::binary_entropy_unchecked(d));
                    // Guard against 7.9999999 from rounding.
                    ((claim + 1e-9).floor().max(0.0) as usize).min(key_len)
                }
                None => 0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub n_rounds: usize,
    #[serde(default = "default_key_basis")]
    pub key_basis: Basis,
    pub test_selection: TestSelection,
    /// Probability each party picks the key basis in a key round.
    #[serde(default = "default_bias")]
    pub basis_bias: f64,
    #[serde(default = "default_pa")]
    pub pa_output_length: PaLength,
}

fn default_key_basis() -> Basis {
    Basis::Z
}

fn default_bias() -> f64 {
    1.0
}

fn default_pa() -> PaLength {
    PaLength::AUTO
}

impl ProtocolConfig {
    pub fn new(n_rounds: usize, test_selection: TestSelection) -> Self {
        Self {
            n_rounds,
            key_basis: Basis::Z,
            test_selection,
            basis_bias: 1.0,
            pa_output_length: PaLength::AUTO,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rounds == 0 {
            return Err(Error::InvalidConfig("n_rounds must be positive".into()));
        }
        match self.test_selection {
            TestSelection::SpotCheck { gamma } if !(gamma > 0.0 && gamma < 1.0) => {
                return Err(Error::InvalidConfig(format!("gamma must lie in (0, 1), got {gamma}")))
            }
            TestSelection::FixedSubset { k } if k >= self.n_rounds => {
                return Err(Error::InvalidConfig(format!(
                    "fixed subset size {k} must be below n_rounds {}",
                    self.n_rounds
                )))
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.basis_bias) {
            return Err(Error::InvalidConfig(format!(
                "basis_bias must lie in [0, 1], got {}",
                self.basis_bias
            )));
        }
        Ok(())
    }
}

/// Test-round indices (1-based) out of `n`.
pub fn select_test_rounds<R: Rng + ?Sized>(
    mode: TestSelection,
    n: usize,
    rng: &mut R,
) -> Result<BTreeSet<usize>> {
    match mode {
        TestSelection::SpotCheck { gamma } => {
            if !(0.0..=1.0).contains(&gamma) {
                return Err(Error::InvalidProbability(gamma));
            }
            Ok((1..=n).filter(|_| rng.random::<f64>() < gamma).collect())
        }
        TestSelection::FixedSubset { k } => {
            if k > n {
                return Err(Error::LengthViolation(format!("subset of {k} out of {n} rounds")));
            }
            Ok(sample(rng, n, k).into_iter().map(|i| i + 1).collect())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Bb84,
    ExampleProtocol,
}

/// One public announcement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Announcement {
    pub seq: usize,
    /// Rounds completed when the announcement was made.
    pub after_round: usize,
    #[serde(flatten)]
    pub event: PublicEvent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PublicEvent {
    TestRounds { rounds: Vec<usize> },
    Basis { round: usize, party: Party, basis: Basis },
    Output { round: usize, party: Party, bit: u8 },
    ErrorCorrection { leaked_bits: usize },
    /// Seed bits as a `0`/`1` string.
    PaSeed { bits: String },
}

/// Disagreements among compared rounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCount {
    pub errors: usize,
    pub total: usize,
}

impl ErrorCount {
    pub fn rate(&self) -> Option<f64> {
        (self.total > 0).then(|| self.errors as f64 / self.total as f64)
    }

    fn record(&mut self, a: u8, b: u8) {
        self.total += 1;
        self.errors += usize::from(a != b);
    }
}

/// Error counts by basis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestStatistics {
    pub x: ErrorCount,
    pub z: ErrorCount,
}

impl TestStatistics {
    pub fn get(&self, b: Basis) -> ErrorCount {
        match b {
            Basis::X => self.x,
            Basis::Z => self.z,
        }
    }

    fn get_mut(&mut self, b: Basis) -> &mut ErrorCount {
        match b {
            Basis::X => &mut self.x,
            Basis::Z => &mut self.z,
        }
    }
}

/// Time-ordered record of one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub protocol: ProtocolKind,
    pub rounds: Vec<RoundRecord>,
    pub public_log: Vec<Announcement>,
    pub test_rounds: Vec<usize>,
    /// Rounds contributing to the sifted key, in key order.
    pub key_rounds: Vec<usize>,
    pub sifted_key_a: Vec<u8>,
    pub sifted_key_b: Vec<u8>,
    pub test_statistics: TestStatistics,
    pub pa_seed: Vec<u8>,
    /// Privacy-amplified key (Bob's corrected key hashes to the same value).
    pub final_key: Vec<u8>,
}

impl Transcript {
    /// Announced bits of `party`'s output at `round`, if any.
    pub fn announced_output(&self, round: usize, party: Party) -> Option<u8> {
        self.public_log.iter().find_map(|a| match a.event {
            PublicEvent::Output { round: r, party: p, bit } if r == round && p == party => Some(bit),
            _ => None,
        })
    }

    pub fn announced_basis(&self, round: usize, party: Party) -> Option<Basis> {
        self.public_log.iter().find_map(|a| match a.event {
            PublicEvent::Basis { round: r, party: p, basis } if r == round && p == party => Some(basis),
            _ => None,
        })
    }

    /// Every announced field has its `announced` flag set in the round record.
    pub fn check_announcements(&self) -> Result<()> {
        for a in &self.public_log {
            let (round, party, is_output) = match a.event {
                PublicEvent::Basis { round, party, .. } => (round, party, false),
                PublicEvent::Output { round, party, .. } => (round, party, true),
                _ => continue,
            };
            let rec = self
                .rounds
                .get(round.wrapping_sub(1))
                .ok_or_else(|| Error::SchemaMismatch(format!("announcement for missing round {round}")))?;
            let flag = match (is_output, party) {
                (false, Party::Alice) => rec.announced.input_a,
                (false, Party::Bob) => rec.announced.input_b,
                (true, Party::Alice) => rec.announced.output_a,
                (true, Party::Bob) => rec.announced.output_b,
            };
            if !flag {
                return Err(Error::SchemaMismatch(format!(
                    "round {round} announcement not flagged in its record"
                )));
            }
            if a.after_round < round {
                return Err(Error::SchemaMismatch(format!(
                    "round {round} announced before it was measured"
                )));
            }
        }
        Ok(())
    }
}

/// Key-length claim from the phase-error rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyClaim {
    pub delta_ph: f64,
    pub n_key: usize,
    pub claimed_length: f64,
    pub formula_id: String,
}

impl KeyClaim {
    /// `n_key (1 - h(delta_ph))`.
    pub fn naive(delta_ph: f64, n_key: usize) -> Result<Self> {
        let h = crate::analysis::binary_entropy(delta_ph)?;
        Ok(Self {
            delta_ph,
            n_key,
            claimed_length: n_key as f64 * (1.0 - h),
            formula_id: "naive_cpa".into(),
        })
    }
}

/// Naive claim from observed X-basis test disagreements. Only meaningful
/// when the devices fit the memoryless model.
pub fn naive_key_claim(t: &Transcript) -> Result<KeyClaim> {
    let x = t.test_statistics.x;
    let delta = x.rate().ok_or(Error::NoTestRounds)?;
    KeyClaim::naive(delta, t.sifted_key_a.len())
}

/// Appends announcements with consecutive sequence numbers and flags them on
/// the round records.
pub(crate) struct PublicLog {
    entries: Vec<Announcement>,
}

impl PublicLog {
    pub(crate) fn new() -> Self {
        Self { entries: Vec::new() }
    }

    pub(crate) fn push(&mut self, after_round: usize, event: PublicEvent, rounds: &mut [RoundRecord]) {
        match event {
            PublicEvent::Basis { round, party, .. } => {
                let rec = &mut rounds[round - 1].announced;
                match party {
                    Party::Alice => rec.input_a = true,
                    Party::Bob => rec.input_b = true,
                }
            }
            PublicEvent::Output { round, party, .. } => {
                let rec = &mut rounds[round - 1].announced;
                match party {
                    Party::Alice => rec.output_a = true,
                    Party::Bob => rec.output_b = true,
                }
            }
            _ => {}
        }
        let seq = self.entries.len();
        self.entries.push(Announcement {
            seq,
            after_round,
            event,
        });
    }

    pub(crate) fn announce_bases(&mut self, after_round: usize, which: &[usize], rounds: &mut [RoundRecord]) {
        for &j in which {
            for party in Party::BOTH {
                let basis = rounds[j - 1].basis(party);
                self.push(after_round, PublicEvent::Basis { round: j, party, basis }, rounds);
            }
        }
    }

    pub(crate) fn into_inner(self) -> Vec<Announcement> {
        self.entries
    }
}

/// Error correction oracle and privacy amplification shared by both protocols.
pub(crate) fn postprocess<R: Rng + ?Sized>(
    key_a: &[u8],
    stats: &TestStatistics,
    pa: PaLength,
    log: &mut PublicLog,
    after_round: usize,
    rounds: &mut [RoundRecord],
    rng: &mut R,
) -> Result<(Vec<u8>, Vec<u8>)> {
    log.push(
        after_round,
        PublicEvent::ErrorCorrection { leaked_bits: key_a.len() },
        rounds,
    );
    let out_len = pa.resolve(key_a.len(), stats.x.rate());
    let seed = random_seed(key_a.len(), out_len, rng);
    let bits: String = seed.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect();
    log.push(after_round, PublicEvent::PaSeed { bits }, rounds);
    let key = privacy_amplify(key_a, out_len, &seed)?;
    Ok((seed, key))
}

pub(crate) fn record_error(stats: &mut TestStatistics, basis: Basis, a: u8, b: u8) {
    stats.get_mut(basis).record(a, b);
}
