//! Binomial intervals and two-sample chi-squared tests.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::{Error, Result};

/// Two-sided 99% standard-normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_901;

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquaredResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

/// Two-sample chi-squared homogeneity test on categorical counts.
///
/// Categories whose pooled expected count falls below 5 in either sample
/// are merged into one residual bin.
pub fn chi_squared_two_sample<K: Ord + Clone>(a: &BTreeMap<K, u64>, b: &BTreeMap<K, u64>) -> Result<ChiSquaredResult> {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    if na == 0 || nb == 0 {
        return Err(Error::InvalidConfig("chi-squared needs two nonempty samples".into()));
    }
    let total = (na + nb) as f64;
    let (fa, fb) = (na as f64 / total, nb as f64 / total);
    let mut keys: Vec<K> = a.keys().cloned().collect();
    keys.extend(b.keys().filter(|k| !a.contains_key(k)).cloned());
    keys.sort();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut residual = (0.0, 0.0);
    for k in keys {
        let ca = a.get(&k).copied().unwrap_or(0) as f64;
        let cb = b.get(&k).copied().unwrap_or(0) as f64;
        let pooled = ca + cb;
        if pooled * fa.min(fb) < 5.0 {
            residual.0 += ca;
            residual.1 += cb;
        } else {
            bins.push((ca, cb));
        }
    }
    if residual.0 + residual.1 > 0.0 {
        bins.push(residual);
    }
    let mut statistic = 0.0;
    for &(ca, cb) in &bins {
        let pooled = ca + cb;
        let (ea, eb) = (pooled * fa, pooled * fb);
        if ea > 0.0 {
            statistic += (ca - ea).powi(2) / ea;
        }
        if eb > 0.0 {
            statistic += (cb - eb).powi(2) / eb;
        }
    }
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        1.0 - dist.cdf(statistic)
    };
    Ok(ChiSquaredResult {
        statistic,
        dof,
        p_value,
        bins: bins.len(),
    })
}
