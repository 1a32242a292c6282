use std::collections::BTreeMap;

use super::{Party, RoundInput};
use crate::quantum::Basis;
use crate::{Error, Result};

/// Longest run that fits the packed `u64` keys.
pub const MAX_PACKED_ROUNDS: usize = 32;

/// Probability of every output string for one fixed input sequence.
///
/// Keys pack round `j` (1-based) as Alice's bit at position `2(j-1)` and
/// Bob's at `2(j-1)+1`. Zero-probability strings are absent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputDistribution {
    rounds: usize,
    probs: BTreeMap<u64, f64>,
}

impl OutputDistribution {
    pub fn new(rounds: usize) -> Self {
        Self {
            rounds,
            probs: BTreeMap::new(),
        }
    }

    pub fn from_map(rounds: usize, probs: BTreeMap<u64, f64>) -> Self {
        Self { rounds, probs }
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn add(&mut self, key: u64, p: f64) {
        if p > 0.0 {
            *self.probs.entry(key).or_insert(0.0) += p;
        }
    }

    pub fn get(&self, key: u64) -> f64 {
        self.probs.get(&key).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.probs.iter().map(|(&k, &p)| (k, p))
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    /// Distribution of `f(key)`.
    pub fn marginal(&self, f: impl Fn(u64) -> u64) -> BTreeMap<u64, f64> {
        let mut out = BTreeMap::new();
        for (&k, &p) in &self.probs {
            *out.entry(f(k)).or_insert(0.0) += p;
        }
        out
    }

    pub fn tv_distance(&self, other: &OutputDistribution) -> f64 {
        tv_distance(&self.probs, &other.probs)
    }

    pub fn bit(key: u64, party: Party, round: usize) -> u8 {
        ((key >> (2 * (round - 1) + party.index())) & 1) as u8
    }

    /// One party's output string, round 1 in bit 0.
    pub fn party_string(key: u64, party: Party, rounds: usize) -> u64 {
        (1..=rounds).fold(0, |acc, j| {
            acc | ((Self::bit(key, party, j) as u64) << (j - 1))
        })
    }
}

/// Total-variation distance between two sparse distributions.
pub fn tv_distance(a: &BTreeMap<u64, f64>, b: &BTreeMap<u64, f64>) -> f64 {
    let mut sum = 0.0;
    for (k, &p) in a {
        sum += (p - b.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, &q) in b {
        if !a.contains_key(k) {
            sum += q.abs();
        }
    }
    0.5 * sum
}

/// Packs inputs the same way outputs are packed: bit set means Z.
pub fn pack_inputs(inputs: &[RoundInput]) -> u64 {
    inputs.iter().enumerate().fold(0, |acc, (j, r)| {
        acc | ((r.alice.index() as u64) << (2 * j)) | ((r.bob.index() as u64) << (2 * j + 1))
    })
}

pub fn unpack_inputs(key: u64, rounds: usize) -> Vec<RoundInput> {
    (0..rounds)
        .map(|j| {
            RoundInput::new(
                Basis::from_index(((key >> (2 * j)) & 1) as usize),
                Basis::from_index(((key >> (2 * j + 1)) & 1) as usize),
            )
        })
        .collect()
}

/// Every one of the `4^n` input sequences, in packed-key order.
pub fn all_input_sequences(rounds: usize) -> impl Iterator<Item = Vec<RoundInput>> {
    (0..1u64 << (2 * rounds)).map(move |k| unpack_inputs(k, rounds))
}

pub(crate) fn check_packable(rounds: usize) -> Result<()> {
    if rounds > MAX_PACKED_ROUNDS {
        return Err(Error::EnumerationBudgetExceeded(format!(
            "{rounds} rounds exceed the {MAX_PACKED_ROUNDS}-round packing limit"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_packing_round_trips() {
        for k in 0..256u64 {
            assert_eq!(pack_inputs(&unpack_inputs(k, 4)), k);
        }
    }

    #[test]
    fn tv_of_disjoint_supports_is_one() {
        let mut a = OutputDistribution::new(1);
        a.add(0, 1.0);
        let mut b = OutputDistribution::new(1);
        b.add(3, 1.0);
        assert_eq!(a.tv_distance(&b), 1.0);
        assert_eq!(a.tv_distance(&a), 0.0);
    }

    #[test]
    fn party_string_extracts_bits() {
        // round1: A=1,B=0; round2: A=0,B=1
        let key = 0b1001;
        assert_eq!(OutputDistribution::party_string(key, Party::Alice, 2), 0b01);
        assert_eq!(OutputDistribution::party_string(key, Party::Bob, 2), 0b10);
    }
}
