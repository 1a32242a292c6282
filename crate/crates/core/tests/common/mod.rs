//! Random quantum objects for property tests.

#![allow(dead_code)]

use memlab::quantum::{Basis, CMatrix, Channel, DensityOperator, Instrument, StateVector, C64};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn labels(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("q{i}")).collect()
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_pure(k: usize, rng: &mut impl Rng) -> StateVector {
    let mut amps: Vec<C64> = (0..1usize << k).map(|_| gaussian(rng)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    StateVector::new(amps, &labels(k)).unwrap()
}

/// Ginibre ensemble: G G^dagger / tr.
pub fn random_mixed(k: usize, rng: &mut impl Rng) -> DensityOperator {
    let d = 1usize << k;
    let g = CMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityOperator::new(m / tr, &labels(k)).unwrap()
}

/// Kraus set cut from a random isometry (QR of a Gaussian matrix).
pub fn random_channel(k: usize, n_kraus: usize, rng: &mut impl Rng) -> Channel {
    let d = 1usize << k;
    let g = CMatrix::from_fn(d * n_kraus, d, |_, _| gaussian(rng));
    let q = g.qr().q();
    let kraus = (0..n_kraus).map(|i| q.rows(i * d, d).into_owned()).collect();
    Channel::new(kraus, &labels(k), &labels(k)).unwrap()
}

pub fn random_basis(rng: &mut impl Rng) -> Basis {
    if rng.random::<bool>() {
        Basis::Z
    } else {
        Basis::X
    }
}

pub fn random_instrument(rng: &mut impl Rng) -> Instrument {
    Instrument::random(random_basis(rng), rng)
}
