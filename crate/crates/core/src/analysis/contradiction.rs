use serde::Serialize;

use super::entropy::{distribution_entropy, EntropyMode, OutputSelect, MAX_EXACT_ROUNDS};
use crate::devices::{Device, OutputDistribution, Party, RoundInput};
use crate::protocol::KeyClaim;
use crate::quantum::Basis;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContradictionReport {
    pub device: String,
    pub rounds: usize,
    pub naive_claim: KeyClaim,
    /// Entropy of Alice's all-Z output string.
    pub actual_shannon: f64,
    pub actual_minentropy: f64,
    /// `naive_claim.claimed_length - actual_minentropy`.
    pub gap: f64,
    pub ebit_budget: Option<usize>,
    /// The naive claim exceeds the entangled pairs the device ever received.
    pub claim_exceeds_ebit_budget: Option<bool>,
}

/// Expected fraction of rounds where Alice and Bob disagree.
pub fn phase_error_rate(dist: &OutputDistribution) -> f64 {
    let n = dist.rounds();
    if n == 0 {
        return 0.0;
    }
    let mut expected = 0.0;
    for (k, p) in dist.iter() {
        let disagreements = (1..=n)
            .filter(|&j| OutputDistribution::bit(k, Party::Alice, j) != OutputDistribution::bit(k, Party::Bob, j))
            .count();
        expected += p * disagreements as f64;
    }
    expected / n as f64
}

/// Naive key claim from the exact all-X phase-error rate, against the exact
/// entropy of the all-Z key string.
///
/// Measurements are taken as the trusted X/Z instruments, since the claim
/// presumes them.
pub fn contradiction_report(device: &Device, rounds: usize) -> Result<ContradictionReport> {
    if rounds == 0 || rounds > MAX_EXACT_ROUNDS {
        return Err(Error::EnumerationBudgetExceeded(format!(
            "contradiction report needs 1..={MAX_EXACT_ROUNDS} rounds, got {rounds}"
        )));
    }
    device.check_rounds(rounds)?;
    let trusted = device.trusted();
    let x = trusted.exact_distribution(&vec![RoundInput::both(Basis::X); rounds])?;
    let delta = phase_error_rate(&x).clamp(0.0, 1.0);
    let naive_claim = KeyClaim::naive(delta, rounds)?;
    let z = trusted.exact_distribution(&vec![RoundInput::both(Basis::Z); rounds])?;
    let select = OutputSelect::Party(Party::Alice);
    let actual_shannon = distribution_entropy(&z, select, EntropyMode::Shannon);
    let actual_minentropy = distribution_entropy(&z, select, EntropyMode::Min);
    let ebit_budget = device.ebit_budget(rounds);
    Ok(ContradictionReport {
        device: device.id().to_string(),
        rounds,
        gap: naive_claim.claimed_length - actual_minentropy,
        claim_exceeds_ebit_budget: ebit_budget.map(|e| naive_claim.claimed_length > e as f64 + 1e-9),
        naive_claim,
        actual_shannon,
        actual_minentropy,
        ebit_budget,
    })
}
