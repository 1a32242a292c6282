use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;

use super::{c, max_abs, Basis, CMatrix, C64, STRUCTURAL_TOL};
use crate::{Error, Result};

/// Two-outcome rank-1 projective instrument on a single qubit.
///
/// Outcome `o` projects onto `vectors[o]`; the post-measurement state of the
/// qubit is exactly that vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Instrument {
    basis: Basis,
    vectors: [[C64; 2]; 2],
}

impl Instrument {
    /// Trusted measurement: Z projects on |0>,|1>; X projects on |+>,|->.
    pub fn standard(basis: Basis) -> Self {
        let s = FRAC_1_SQRT_2;
        let vectors = match basis {
            Basis::Z => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
            Basis::X => [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]],
        };
        Self { basis, vectors }
    }

    /// Instrument selected by `input` that actually measures in `measured`.
    /// Devices outside the trusted setting may ignore their input this way.
    pub fn relabelled(input: Basis, measured: Basis) -> Self {
        Self {
            basis: input,
            ..Self::standard(measured)
        }
    }

    pub fn from_vectors(basis: Basis, v0: [C64; 2], v1: [C64; 2]) -> Result<Self> {
        let inst = Self {
            basis,
            vectors: [v0, v1],
        };
        inst.validate(STRUCTURAL_TOL)?;
        Ok(inst)
    }

    pub fn from_projectors(basis: Basis, p0: &CMatrix, p1: &CMatrix) -> Result<Self> {
        let mut vectors = [[C64::default(); 2]; 2];
        for (o, p) in [p0, p1].into_iter().enumerate() {
            if p.nrows() != 2 || p.ncols() != 2 {
                return Err(Error::InvalidInstrument("projectors must be 2x2".into()));
            }
            // Rank-1 projector: pick the column with the larger norm.
            let col = if p[(0, 0)].norm() >= p[(1, 1)].norm() { 0 } else { 1 };
            let v = [p[(0, col)], p[(1, col)]];
            let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
            if n < STRUCTURAL_TOL {
                return Err(Error::InvalidInstrument(format!("projector {o} is zero")));
            }
            vectors[o] = [v[0] / n, v[1] / n];
        }
        let inst = Self { basis, vectors };
        inst.validate(STRUCTURAL_TOL)?;
        for (o, p) in [p0, p1].into_iter().enumerate() {
            let diff = max_abs(&(p - inst.projector(o as u8)));
            if diff > STRUCTURAL_TOL {
                return Err(Error::InvalidInstrument(format!(
                    "projector {o} is not rank-1 idempotent (deviation {diff:e})"
                )));
            }
        }
        Ok(inst)
    }

    /// Haar-random orthonormal basis, labelled by `basis`.
    pub fn random<R: Rng + ?Sized>(basis: Basis, rng: &mut R) -> Self {
        let mut g = || crate::rng::standard_normal(rng);
        let a = c(g(), g());
        let b = c(g(), g());
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (a, b) = (a / n, b / n);
        Self {
            basis,
            vectors: [[a, b], [-b.conj(), a.conj()]],
        }
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn vector(&self, outcome: u8) -> [C64; 2] {
        self.vectors[outcome as usize & 1]
    }

    pub fn projector(&self, outcome: u8) -> CMatrix {
        let v = self.vector(outcome);
        CMatrix::from_fn(2, 2, |i, j| v[i] * v[j].conj())
    }

    /// Unitary whose rows are the outcome bras; rotates the eigenbasis onto
    /// the computational basis.
    pub fn rotation(&self) -> [[C64; 2]; 2] {
        let [v0, v1] = self.vectors;
        [[v0[0].conj(), v0[1].conj()], [v1[0].conj(), v1[1].conj()]]
    }

    /// Checks completeness and idempotence of the projector pair.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let p0 = self.projector(0);
        let p1 = self.projector(1);
        let sum_dev = max_abs(&(&p0 + &p1 - CMatrix::identity(2, 2)));
        if sum_dev > tol {
            return Err(Error::InvalidInstrument(format!(
                "projectors do not sum to identity (deviation {sum_dev:e})"
            )));
        }
        for (o, p) in [p0, p1].iter().enumerate() {
            let dev = max_abs(&(p * p - p));
            if dev > tol {
                return Err(Error::InvalidInstrument(format!(
                    "projector {o} is not idempotent (deviation {dev:e})"
                )));
            }
        }
        Ok(())
    }
}
