//! Exact dense simulation of small qubit registers.
//!
//! States carry an ordered list of register labels; label `0` in that list is
//! the most significant bit of the computational-basis index. Every operation
//! addresses qubits by label, never by position, so states produced by
//! different code paths can be compared after a [`DensityOperator::reorder`].
//!
//! Measurements are rank-1 projective instruments. A measured qubit stays in
//! the state, collapsed onto the eigenvector of the observed outcome.

mod channel;
mod instrument;
mod state;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
pub use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use channel::{apply_channel, Channel};
pub use instrument::Instrument;
pub use state::{
    bell_state, measure, measure_all_branches, measure_with, partial_trace, tensor, Branch,
    project_outcome, DensityOperator, Measurement, QuantumState, StateVector,
};
pub(crate) use state::branches_with;

pub type CMatrix = DMatrix<C64>;

/// Tolerance for structural invariants (normalization, hermiticity, completeness).
pub const STRUCTURAL_TOL: f64 = 1e-9;
/// Tolerance for analytically exact identities.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub structural: f64,
    pub exact: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            structural: STRUCTURAL_TOL,
            exact: EXACT_TOL,
        }
    }
}

/// Measurement basis selected by a party's classical input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::X, Basis::Z];

    pub fn other(self) -> Basis {
        match self {
            Basis::X => Basis::Z,
            Basis::Z => Basis::X,
        }
    }

    /// X is 0 and Z is 1.
    pub fn index(self) -> usize {
        match self {
            Basis::X => 0,
            Basis::Z => 1,
        }
    }

    pub fn from_index(i: usize) -> Basis {
        if i & 1 == 0 {
            Basis::X
        } else {
            Basis::Z
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::X => f.write_str("X"),
            Basis::Z => f.write_str("Z"),
        }
    }
}

/// Name of a qubit register.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(Arc<str>);

impl Label {
    pub fn new(name: impl AsRef<str>) -> Self {
        Label(Arc::from(name.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label::new(s)
    }
}

impl From<String> for Label {
    fn from(s: String) -> Self {
        Label::new(s)
    }
}

impl From<&Label> for Label {
    fn from(l: &Label) -> Self {
        l.clone()
    }
}

pub(crate) fn labels_of<L: Into<Label> + Clone>(labels: &[L]) -> Vec<Label> {
    labels.iter().cloned().map(Into::into).collect()
}

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn check_unique(labels: &[Label]) -> crate::Result<()> {
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(crate::Error::DuplicateLabel(l.to_string()));
        }
    }
    Ok(())
}

/// Bit of `index` belonging to qubit `pos` out of `k`.
#[inline]
pub(crate) fn bit_at(index: usize, pos: usize, k: usize) -> usize {
    (index >> (k - 1 - pos)) & 1
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
