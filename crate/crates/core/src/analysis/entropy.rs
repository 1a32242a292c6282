use serde::{Deserialize, Serialize};

use crate::devices::{Device, OutputDistribution, Party, RoundInput};
use crate::{Error, Result};

/// Exact entropy computations refuse longer runs.
pub const MAX_EXACT_ROUNDS: usize = 12;

/// `h(p) = -p log2 p - (1-p) log2 (1-p)`, with `h(0) = h(1) = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    Ok(binary_entropy_unchecked(p))
}

pub(crate) fn binary_entropy_unchecked(p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMode {
    Shannon,
    Min,
}

/// Which output string the entropy is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputSelect {
    Party(Party),
    Both,
}

/// Entropy in bits of a probability vector.
pub fn entropy_of(probs: impl IntoIterator<Item = f64>, mode: EntropyMode) -> f64 {
    match mode {
        EntropyMode::Shannon => probs
            .into_iter()
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.log2())
            .sum(),
        EntropyMode::Min => {
            let max = probs.into_iter().fold(0.0, f64::max);
            if max > 0.0 {
                -max.log2()
            } else {
                0.0
            }
        }
    }
}

/// Exact entropy of the selected output string under a fixed input sequence.
pub fn string_entropy(
    device: &Device,
    inputs: &[RoundInput],
    select: OutputSelect,
    mode: EntropyMode,
) -> Result<f64> {
    if inputs.len() > MAX_EXACT_ROUNDS {
        return Err(Error::EnumerationBudgetExceeded(format!(
            "exact entropy supports at most {MAX_EXACT_ROUNDS} rounds, got {}",
            inputs.len()
        )));
    }
    let dist = device.exact_distribution(inputs)?;
    Ok(distribution_entropy(&dist, select, mode))
}

pub(crate) fn distribution_entropy(dist: &OutputDistribution, select: OutputSelect, mode: EntropyMode) -> f64 {
    let n = dist.rounds();
    let marginal = match select {
        OutputSelect::Party(p) => dist.marginal(|k| OutputDistribution::party_string(k, p, n)),
        OutputSelect::Both => dist.marginal(|k| k),
    };
    entropy_of(marginal.into_values(), mode)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log2_series(mut x: f64) -> f64 {
        // ln(x) = 2 atanh((x-1)/(x+1)) as a power series; independent of f64::log2.
        let mut shift = 0.0;
        while x < 0.75 {
            x *= 2.0;
            shift -= 1.0;
        }
        let y = (x - 1.0) / (x + 1.0);
        let mut term = y;
        let mut sum = 0.0;
        for k in 0..200 {
            sum += term / (2 * k + 1) as f64;
            term *= y * y;
        }
        2.0 * sum / std::f64::consts::LN_2 + shift
    }

    #[test]
    fn binary_entropy_matches_series_oracle() {
        for &p in &[0.01, 0.11, 0.25, 0.37, 0.5, 0.9] {
            let oracle = -p * log2_series(p) - (1.0 - p) * log2_series(1.0 - p);
            assert!((binary_entropy(p).unwrap() - oracle).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn binary_entropy_endpoints_and_domain() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(binary_entropy(1.5), Err(Error::InvalidProbability(_))));
        assert!(matches!(binary_entropy(-0.1), Err(Error::InvalidProbability(_))));
    }

    #[test]
    fn h_of_0_11() {
        // Frozen from a 40-digit decimal evaluation: h(0.11) = 0.49991595816452799564...
        let h = binary_entropy(0.11).unwrap();
        assert!((h - 0.499_915_958_164_528).abs() < 1e-12, "{h}");
    }
}
