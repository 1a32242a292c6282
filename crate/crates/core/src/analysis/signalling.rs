use std::collections::BTreeMap;

use serde::Serialize;

use super::InputConditioned;
use crate::devices::{tv_distance, unpack_inputs, RoundInput};
use crate::{Error, Result};

type Marginal = BTreeMap<u64, f64>;

/// Which outputs of the influenced round are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Alice,
    Bob,
    /// Alice's and Bob's round output pair.
    Joint,
}

impl Scope {
    pub const ALL: [Scope; 3] = [Scope::Alice, Scope::Bob, Scope::Joint];

    fn extract(self, key: u64, round: usize) -> u64 {
        let s = 2 * (round - 1);
        match self {
            Scope::Alice => (key >> s) & 1,
            Scope::Bob => (key >> (s + 1)) & 1,
            Scope::Joint => (key >> s) & 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignallingEntry {
    pub round: usize,
    pub scope: Scope,
    pub max_tv: f64,
    /// Two input sequences that agree from `round` on and realize `max_tv`.
    pub witness: Option<(Vec<RoundInput>, Vec<RoundInput>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignallingReport {
    pub rounds: usize,
    pub exact: bool,
    pub entries: Vec<SignallingEntry>,
    /// Settings with no data; nonzero means the maxima cover only what was seen.
    pub missing_settings: u64,
}

impl SignallingReport {
    /// Largest magnitude over all scopes at `round`.
    pub fn magnitude(&self, round: usize) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.round == round)
            .map(|e| e.max_tv)
            .fold(0.0, f64::max)
    }

    pub fn entry(&self, round: usize, scope: Scope) -> Option<&SignallingEntry> {
        self.entries.iter().find(|e| e.round == round && e.scope == scope)
    }

    pub fn max_magnitude(&self) -> f64 {
        self.entries.iter().map(|e| e.max_tv).fold(0.0, f64::max)
    }

    pub fn complete(&self) -> bool {
        self.missing_settings == 0
    }
}

/// Influence of earlier inputs on each later round's outputs.
///
/// For round `j >= 2` and each scope, input settings are grouped by their
/// inputs at rounds `>= j`; within a group only inputs before `j` differ.
/// The magnitude is the largest total-variation distance between round-`j`
/// output marginals inside any group.
pub fn signalling_measure(dist: &dyn InputConditioned) -> Result<SignallingReport> {
    let n = dist.rounds();
    if n < 2 {
        return Err(Error::TooFewRounds { needed: 2, actual: n });
    }
    let settings = dist.settings();
    let expected = 1u64.checked_shl(2 * n as u32).unwrap_or(u64::MAX);
    let missing_settings = expected.saturating_sub(settings.len() as u64);
    let conditionals: Vec<(u64, BTreeMap<u64, f64>)> = settings
        .iter()
        .filter_map(|&s| dist.conditional(s).map(|c| (s, c)))
        .collect();

    let mut entries = Vec::new();
    for j in 2..=n {
        for scope in Scope::ALL {
            let mut groups: BTreeMap<u64, Vec<(u64, Marginal)>> = BTreeMap::new();
            for (s, cond) in &conditionals {
                let mut marginal = BTreeMap::new();
                for (&o, &p) in cond {
                    *marginal.entry(scope.extract(o, j)).or_insert(0.0) += p;
                }
                groups.entry(s >> (2 * (j - 1))).or_default().push((*s, marginal));
            }
            let mut best = 0.0;
            let mut witness = None;
            for members in groups.values() {
                for (a, (sa, ma)) in members.iter().enumerate() {
                    for (sb, mb) in &members[a + 1..] {
                        let tv = tv_distance(ma, mb);
                        if tv > best {
                            best = tv;
                            witness = Some((*sa, *sb));
                        }
                    }
                }
            }
            entries.push(SignallingEntry {
                round: j,
                scope,
                max_tv: best.min(1.0),
                witness: witness.map(|(a, b)| (unpack_inputs(a, n), unpack_inputs(b, n))),
            });
        }
    }
    Ok(SignallingReport {
        rounds: n,
        exact: dist.is_exact(),
        entries,
        missing_settings,
    })
}
