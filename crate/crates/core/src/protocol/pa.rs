//! Toeplitz-matrix hashing.
//!
//! For an `m`-bit key and `l`-bit output the seed has `m + l - 1` bits and
//! defines `T[i][j] = seed[i - j + m - 1]`; the output is `T key` over GF(2).
//! The family is two-universal.

use rand::Rng;

use crate::{Error, Result};

pub fn seed_length(key_len: usize, output_len: usize) -> usize {
    if key_len == 0 || output_len == 0 {
        0
    } else {
        key_len + output_len - 1
    }
}

pub fn random_seed<R: Rng + ?Sized>(key_len: usize, output_len: usize, rng: &mut R) -> Vec<u8> {
    (0..seed_length(key_len, output_len))
        .map(|_| rng.random::<bool>() as u8)
        .collect()
}

pub fn privacy_amplify(key: &[u8], output_len: usize, seed: &[u8]) -> Result<Vec<u8>> {
    let m = key.len();
    if output_len > m {
        return Err(Error::LengthViolation(format!(
            "output length {output_len} exceeds key length {m}"
        )));
    }
    let need = seed_length(m, output_len);
    if seed.len() != need {
        return Err(Error::LengthViolation(format!(
            "seed has {} bits, hash needs {need}",
            seed.len()
        )));
    }
    if key.iter().chain(seed).any(|&b| b > 1) {
        return Err(Error::LengthViolation("bit strings must contain only 0 and 1".into()));
    }
    Ok((0..output_len)
        .map(|i| {
            (0..m).fold(0u8, |acc, j| acc ^ (seed[i + m - 1 - j] & key[j]))
        })
        .collect())
}
