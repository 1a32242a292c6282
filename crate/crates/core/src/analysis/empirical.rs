use std::collections::BTreeMap;

use crate::devices::{all_input_sequences, pack_inputs, Device, DeviceTrace, OutputDistribution, RoundRecord};
use crate::{Error, Result};

/// Output distributions indexed by packed input sequence.
pub trait InputConditioned {
    fn rounds(&self) -> usize;

    /// Input settings with data, in packed-key order.
    fn settings(&self) -> Vec<u64>;

    fn conditional(&self, input: u64) -> Option<BTreeMap<u64, f64>>;

    fn is_exact(&self) -> bool;
}

/// Exact output distribution for every input sequence of a device.
#[derive(Debug, Clone)]
pub struct ExactTable {
    rounds: usize,
    tables: BTreeMap<u64, OutputDistribution>,
}

impl ExactTable {
    /// Enumerates all `4^n` input sequences.
    pub fn build(device: &Device, rounds: usize) -> Result<Self> {
        if rounds > 6 {
            return Err(Error::EnumerationBudgetExceeded(format!(
                "exact tables cover at most 6 rounds, got {rounds}"
            )));
        }
        let mut tables = BTreeMap::new();
        for inputs in all_input_sequences(rounds) {
            tables.insert(pack_inputs(&inputs), device.exact_distribution(&inputs)?);
        }
        Ok(Self { rounds, tables })
    }

    pub fn get(&self, input: u64) -> Option<&OutputDistribution> {
        self.tables.get(&input)
    }
}

impl InputConditioned for ExactTable {
    fn rounds(&self) -> usize {
        self.rounds
    }

    fn settings(&self) -> Vec<u64> {
        self.tables.keys().copied().collect()
    }

    fn conditional(&self, input: u64) -> Option<BTreeMap<u64, f64>> {
        self.tables.get(&input).map(|d| d.iter().collect())
    }

    fn is_exact(&self) -> bool {
        true
    }
}

/// Counts of (input sequence, output sequence) pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmpiricalDistribution {
    rounds: usize,
    counts: BTreeMap<(u64, u64), u64>,
    total: u64,
}

impl EmpiricalDistribution {
    pub fn new(rounds: usize) -> Self {
        Self {
            rounds,
            ..Self::default()
        }
    }

    pub fn add_records(&mut self, rounds: &[RoundRecord]) -> Result<()> {
        if rounds.len() != self.rounds {
            return Err(Error::RoundCountMismatch {
                expected: self.rounds,
                actual: rounds.len(),
            });
        }
        let inputs: Vec<_> = rounds.iter().map(RoundRecord::input).collect();
        let outputs = DeviceTrace {
            rounds: rounds.to_vec(),
            snapshots: Vec::new(),
        }
        .output_key();
        *self.counts.entry((pack_inputs(&inputs), outputs)).or_insert(0) += 1;
        self.total += 1;
        Ok(())
    }

    pub fn add_trace(&mut self, t: &DeviceTrace) -> Result<()> {
        self.add_records(&t.rounds)
    }

    pub fn total_trials(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &BTreeMap<(u64, u64), u64> {
        &self.counts
    }
}

impl InputConditioned for EmpiricalDistribution {
    fn rounds(&self) -> usize {
        self.rounds
    }

    fn settings(&self) -> Vec<u64> {
        let mut s: Vec<u64> = self.counts.keys().map(|&(i, _)| i).collect();
        s.dedup();
        s
    }

    fn conditional(&self, input: u64) -> Option<BTreeMap<u64, f64>> {
        let rows: Vec<(u64, u64)> = self
            .counts
            .range((input, 0)..=(input, u64::MAX))
            .map(|(&(_, o), &c)| (o, c))
            .collect();
        let total: u64 = rows.iter().map(|r| r.1).sum();
        (total > 0).then(|| rows.into_iter().map(|(o, c)| (o, c as f64 / total as f64)).collect())
    }

    fn is_exact(&self) -> bool {
        false
    }
}
