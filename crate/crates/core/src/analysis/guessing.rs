use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::stats::{wilson_interval, Z_99};
use crate::devices::{pack_inputs, unpack_inputs, Device, OutputDistribution, Party, RoundInput};
use crate::protocol::{privacy_amplify, ProtocolKind, PublicEvent, Transcript};
use crate::{Error, Result};

/// Everything Eve sees of one example-protocol run: the public log and the
/// number of rounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EveView {
    pub n_pairs: usize,
    /// Announced bases of each odd round.
    pub odd_inputs: Vec<Option<RoundInput>>,
    /// Announced outputs of each even round, `[alice, bob]`.
    pub even_outputs: Vec<[Option<u8>; 2]>,
    pub pa_seed: Vec<u8>,
}

impl EveView {
    pub fn from_transcript(t: &Transcript) -> Result<Self> {
        if t.protocol != ProtocolKind::ExampleProtocol {
            return Err(Error::SchemaMismatch(
                "Eve's decoders read example-protocol transcripts".into(),
            ));
        }
        let n = t.rounds.len();
        if n % 2 == 1 {
            return Err(Error::SchemaMismatch(format!("odd round count {n}")));
        }
        let n_pairs = n / 2;
        let mut bases = vec![[None, None]; n_pairs];
        let mut even_outputs = vec![[None, None]; n_pairs];
        let mut pa_seed = Vec::new();
        for a in &t.public_log {
            match &a.event {
                PublicEvent::Basis { round, party, basis } if round % 2 == 1 && *round <= n => {
                    bases[(round - 1) / 2][party.index()] = Some(*basis);
                }
                PublicEvent::Output { round, party, bit } if round % 2 == 0 && *round <= n => {
                    even_outputs[round / 2 - 1][party.index()] = Some(*bit);
                }
                PublicEvent::PaSeed { bits } => {
                    pa_seed = bits.bytes().map(|b| u8::from(b == b'1')).collect();
                }
                _ => {}
            }
        }
        let odd_inputs = bases
            .into_iter()
            .map(|[a, b]| Some(RoundInput::new(a?, b?)))
            .collect();
        Ok(Self {
            n_pairs,
            odd_inputs,
            even_outputs,
            pa_seed,
        })
    }

    /// Pairs (0-based) whose odd-round bases were announced equal.
    pub fn sifted_pairs(&self) -> Vec<usize> {
        self.odd_inputs
            .iter()
            .enumerate()
            .filter(|(_, i)| matches!(i, Some(r) if r.alice == r.bob))
            .map(|(m, _)| m)
            .collect()
    }

    fn table_key(&self) -> Option<(u64, u64)> {
        let inputs: Option<Vec<RoundInput>> = self.odd_inputs.iter().copied().collect();
        let mut even = 0u64;
        for (m, o) in self.even_outputs.iter().enumerate() {
            even |= (o[0]? as u64) << (2 * m) | (o[1]? as u64) << (2 * m + 1);
        }
        Some((pack_inputs(&inputs?), even))
    }
}

/// Reads each announced even-round Alice output into the preceding odd
/// round's key position.
pub fn copy_decoder(view: &EveView) -> Vec<u8> {
    view.sifted_pairs()
        .into_iter()
        .map(|m| view.even_outputs[m][0].unwrap_or(0))
        .collect()
}

/// Eve applies the announced hash to her key guess.
pub fn eve_pa_key(view: &EveView, guess: &[u8]) -> Result<Vec<u8>> {
    let out_len = if view.pa_seed.is_empty() {
        0
    } else {
        (view.pa_seed.len() + 1).saturating_sub(guess.len())
    };
    privacy_amplify(guess, out_len, &view.pa_seed)
}

/// Exact best-guess success per sifted-key length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapLength {
    pub length: usize,
    pub probability: f64,
    pub success: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapExact {
    pub n_pairs: usize,
    pub by_length: Vec<MapLength>,
    pub overall_success: f64,
}

/// Maximum-a-posteriori key decoder for a device model, built by
/// enumerating every basis choice and outcome branch.
#[derive(Debug, Clone)]
pub struct MapDecoder {
    n_pairs: usize,
    table: HashMap<(u64, u64), Vec<u8>>,
    exact: MapExact,
}

impl MapDecoder {
    pub const MAX_PAIRS: usize = 4;

    pub fn build(model: &Device, n_pairs: usize) -> Result<Self> {
        if n_pairs == 0 || n_pairs > Self::MAX_PAIRS {
            return Err(Error::EnumerationBudgetExceeded(format!(
                "map decoder supports 1..={} pairs, got {n_pairs}",
                Self::MAX_PAIRS
            )));
        }
        model.check_rounds(2 * n_pairs)?;
        let weight = 1.0 / (1u64 << (2 * n_pairs)) as f64;
        // view -> (key length, key bits -> probability)
        let mut posterior: BTreeMap<(u64, u64), (usize, BTreeMap<u64, f64>)> = BTreeMap::new();
        for odd_key in 0..1u64 << (2 * n_pairs) {
            let odd = unpack_inputs(odd_key, n_pairs);
            let inputs: Vec<RoundInput> = odd.iter().flat_map(|&i| [i, i]).collect();
            let sifted: Vec<usize> = (0..n_pairs).filter(|&m| odd[m].alice == odd[m].bob).collect();
            let dist = model.exact_distribution(&inputs)?;
            for (k, p) in dist.iter() {
                let mut even = 0u64;
                for m in 0..n_pairs {
                    even |= (OutputDistribution::bit(k, Party::Alice, 2 * m + 2) as u64) << (2 * m)
                        | (OutputDistribution::bit(k, Party::Bob, 2 * m + 2) as u64) << (2 * m + 1);
                }
                let key = sifted.iter().enumerate().fold(0u64, |acc, (i, &m)| {
                    acc | ((OutputDistribution::bit(k, Party::Alice, 2 * m + 1) as u64) << i)
                });
                let entry = posterior
                    .entry((odd_key, even))
                    .or_insert_with(|| (sifted.len(), BTreeMap::new()));
                *entry.1.entry(key).or_insert(0.0) += weight * p;
            }
        }
        let mut table = HashMap::new();
        let mut mass: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
        for (view, (len, keys)) in posterior {
            let mut best = (0u64, f64::NEG_INFINITY);
            let mut total = 0.0;
            for (&key, &p) in &keys {
                total += p;
                if p > best.1 {
                    best = (key, p);
                }
            }
            table.insert(view, (0..len).map(|i| ((best.0 >> i) & 1) as u8).collect());
            let m = mass.entry(len).or_insert((0.0, 0.0));
            m.0 += total;
            m.1 += best.1;
        }
        let overall_success = mass.values().map(|m| m.1).sum();
        let by_length = mass
            .into_iter()
            .map(|(length, (probability, hit))| MapLength {
                length,
                probability,
                success: hit / probability,
            })
            .collect();
        Ok(Self {
            n_pairs,
            table,
            exact: MapExact {
                n_pairs,
                by_length,
                overall_success,
            },
        })
    }

    pub fn exact(&self) -> &MapExact {
        &self.exact
    }

    pub fn decode(&self, view: &EveView) -> Vec<u8> {
        let k = view.sifted_pairs().len();
        if view.n_pairs == self.n_pairs {
            if let Some(guess) = view.table_key().and_then(|key| self.table.get(&key)) {
                return guess.clone();
            }
        }
        // View impossible under the model.
        vec![0; k]
    }
}

#[derive(Debug, Clone)]
pub enum GuessStrategy {
    Copy,
    Map(Box<MapDecoder>),
}

impl GuessStrategy {
    /// `copy_decoder`, or `map_decoder` built against `model` at `n_pairs`.
    pub fn from_id(id: &str, model: Option<(&Device, usize)>) -> Result<Self> {
        match id {
            "copy_decoder" => Ok(GuessStrategy::Copy),
            "map_decoder" => {
                let (device, n_pairs) = model.ok_or_else(|| {
                    Error::InvalidConfig("map_decoder needs a device model and pair count".into())
                })?;
                Ok(GuessStrategy::Map(Box::new(MapDecoder::build(device, n_pairs)?)))
            }
            other => Err(Error::UnknownStrategy(other.to_string())),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            GuessStrategy::Copy => "copy_decoder",
            GuessStrategy::Map(_) => "map_decoder",
        }
    }

    pub fn guess(&self, view: &EveView) -> Vec<u8> {
        match self {
            GuessStrategy::Copy => copy_decoder(view),
            GuessStrategy::Map(m) => m.decode(view),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthTally {
    pub trials: u64,
    pub successes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuessingReport {
    pub strategy: String,
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub wilson_99: (f64, f64),
    pub pa_matches: u64,
    pub pa_match_rate: f64,
    pub per_trial: Vec<bool>,
    pub by_length: BTreeMap<usize, LengthTally>,
}

/// Fraction of transcripts whose sifted key Eve reconstructs exactly from
/// the public log.
pub fn eve_guessing(batch: &[Transcript], strategy: &GuessStrategy) -> Result<GuessingReport> {
    let mut per_trial = Vec::with_capacity(batch.len());
    let mut pa_matches = 0;
    let mut by_length: BTreeMap<usize, LengthTally> = BTreeMap::new();
    for t in batch {
        let view = EveView::from_transcript(t)?;
        let guess = strategy.guess(&view);
        let hit = guess == t.sifted_key_a;
        per_trial.push(hit);
        if guess.len() == t.sifted_key_a.len() && eve_pa_key(&view, &guess)? == t.final_key {
            pa_matches += 1;
        }
        let tally = by_length.entry(t.sifted_key_a.len()).or_insert(LengthTally {
            trials: 0,
            successes: 0,
        });
        tally.trials += 1;
        tally.successes += u64::from(hit);
    }
    let trials = per_trial.len() as u64;
    let successes = per_trial.iter().filter(|&&h| h).count() as u64;
    let rate = |x: u64| if trials == 0 { 0.0 } else { x as f64 / trials as f64 };
    Ok(GuessingReport {
        strategy: strategy.id().to_string(),
        trials,
        successes,
        success_rate: rate(successes),
        wilson_99: wilson_interval(successes, trials, Z_99),
        pa_matches,
        pa_match_rate: rate(pa_matches),
        per_trial,
        by_length,
    })
}
