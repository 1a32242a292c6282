use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::devices::{pack_inputs, tv_distance, unpack_inputs, Device, OutputDistribution, RoundInput};
use crate::quantum::Basis;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetWitness {
    pub test_rounds: Vec<usize>,
    pub reference_inputs: Vec<RoundInput>,
    pub shifted_inputs: Vec<RoundInput>,
    pub tv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetReport {
    pub rounds: usize,
    pub subsets_checked: usize,
    pub settings_checked: usize,
    pub max_tv: f64,
    pub witness: Option<SubsetWitness>,
}

/// Compares the test-round output distribution when every round is measured
/// in X with the one obtained for each other choice of non-test inputs.
///
/// Every nonempty proper subset of rounds is tried as the test set; test
/// rounds are always (X, X). Exact, so limited to 4 rounds.
pub fn test_subset_consistency(device: &Device, rounds: usize) -> Result<SubsetReport> {
    if rounds == 0 || rounds > 4 {
        return Err(Error::EnumerationBudgetExceeded(format!(
            "test-subset enumeration supports 1..=4 rounds, got {rounds}"
        )));
    }
    device.check_rounds(rounds)?;
    let mut cache: HashMap<u64, OutputDistribution> = HashMap::new();
    let mut dist = |inputs: &[RoundInput]| -> Result<OutputDistribution> {
        let key = pack_inputs(inputs);
        if let Some(d) = cache.get(&key) {
            return Ok(d.clone());
        }
        let d = device.exact_distribution(inputs)?;
        cache.insert(key, d.clone());
        Ok(d)
    };
    let reference_inputs = vec![RoundInput::both(Basis::X); rounds];
    let reference = dist(&reference_inputs)?;

    let mut report = SubsetReport {
        rounds,
        subsets_checked: 0,
        settings_checked: 0,
        max_tv: 0.0,
        witness: None,
    };
    for mask in 1u32..(1 << rounds) - 1 {
        let tests: Vec<usize> = (1..=rounds).filter(|j| mask & (1 << (j - 1)) != 0).collect();
        let others: Vec<usize> = (1..=rounds).filter(|j| mask & (1 << (j - 1)) == 0).collect();
        let project = |d: &OutputDistribution| -> BTreeMap<u64, f64> {
            d.marginal(|k| {
                tests.iter().enumerate().fold(0, |acc, (i, &j)| {
                    acc | (((k >> (2 * (j - 1))) & 3) << (2 * i))
                })
            })
        };
        let ref_marginal = project(&reference);
        report.subsets_checked += 1;
        for assignment in 0..1u64 << (2 * others.len()) {
            let chosen = unpack_inputs(assignment, others.len());
            let mut inputs = reference_inputs.clone();
            for (&j, inp) in others.iter().zip(chosen) {
                inputs[j - 1] = inp;
            }
            let tv = tv_distance(&ref_marginal, &project(&dist(&inputs)?));
            report.settings_checked += 1;
            if tv > report.max_tv {
                report.max_tv = tv;
                report.witness = Some(SubsetWitness {
                    test_rounds: tests.clone(),
                    reference_inputs: reference_inputs.clone(),
                    shifted_inputs: inputs,
                    tv,
                });
            }
        }
    }
    Ok(report)
}
