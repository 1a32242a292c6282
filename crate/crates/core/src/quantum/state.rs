use std::f64::consts::FRAC_1_SQRT_2;

use super::{bit_at, c, check_unique, labels_of, max_abs, Basis, CMatrix, Instrument, Label, C64};
use super::STRUCTURAL_TOL;
use crate::{Error, Result};

/// Branch probabilities at or below this are treated as exact zeros.
pub(crate) const ZERO_PROBABILITY: f64 = 1e-15;

/// Operations shared by pure and mixed states.
pub trait QuantumState: Clone + Sized {
    fn labels(&self) -> &[Label];

    fn num_qubits(&self) -> usize {
        self.labels().len()
    }

    fn position(&self, label: &Label) -> Result<usize> {
        self.labels()
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Projects `label` onto the qubit vector `v`. Returns the Born
    /// probability and the renormalized post-measurement state, or `None`
    /// when the branch has zero probability.
    fn project(&self, label: &Label, v: [C64; 2]) -> Result<(f64, Option<Self>)>;

    fn tensor(&self, other: &Self) -> Result<Self>;

    fn to_density(&self) -> DensityOperator;
}

/// Pure state over labelled qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
    labels: Vec<Label>,
}

impl StateVector {
    pub fn new<L: Into<Label> + Clone>(amplitudes: Vec<C64>, labels: &[L]) -> Result<Self> {
        let labels = labels_of(labels);
        check_unique(&labels)?;
        let expected = 1usize << labels.len();
        if amplitudes.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: amplitudes.len(),
            });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > STRUCTURAL_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amplitudes, labels })
    }

    /// Computational basis state `|bits>`.
    pub fn basis_state<L: Into<Label> + Clone>(bits: &[u8], labels: &[L]) -> Result<Self> {
        if bits.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                actual: bits.len(),
            });
        }
        let index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b as usize & 1));
        let mut amplitudes = vec![C64::default(); 1 << bits.len()];
        amplitudes[index] = c(1.0, 0.0);
        Self::new(amplitudes, labels)
    }

    pub fn qubit(v: [C64; 2], label: impl Into<Label>) -> Result<Self> {
        Self::new(v.to_vec(), &[label.into()])
    }

    /// Eigenstate of `basis` with the given outcome.
    pub fn eigenstate(basis: Basis, outcome: u8, label: impl Into<Label>) -> Self {
        let v = Instrument::standard(basis).vector(outcome);
        Self {
            amplitudes: v.to_vec(),
            labels: vec![label.into()],
        }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.labels != other.labels {
            return Err(Error::LabelMismatch("inner product needs identical label order".into()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn relabel(mut self, from: &Label, to: impl Into<Label>) -> Result<Self> {
        let to = to.into();
        let pos = self.position(from)?;
        if self.labels.contains(&to) && *from != to {
            return Err(Error::DuplicateLabel(to.to_string()));
        }
        self.labels[pos] = to;
        Ok(self)
    }

    /// Same state with qubits permuted into `order`.
    pub fn reorder<L: Into<Label> + Clone>(&self, order: &[L]) -> Result<Self> {
        let order = labels_of(order);
        let map = permutation_map(&self.labels, &order)?;
        let mut amplitudes = vec![C64::default(); self.amplitudes.len()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            amplitudes[map[i]] = *a;
        }
        Ok(Self {
            amplitudes,
            labels: order,
        })
    }
}

impl QuantumState for StateVector {
    fn labels(&self) -> &[Label] {
        &self.labels
    }

    fn project(&self, label: &Label, v: [C64; 2]) -> Result<(f64, Option<Self>)> {
        let pos = self.position(label)?;
        let k = self.labels.len();
        let stride = 1usize << (k - 1 - pos);
        let mut out = vec![C64::default(); self.amplitudes.len()];
        let mut prob = 0.0;
        for i in 0..self.amplitudes.len() {
            if i & stride == 0 {
                let overlap = v[0].conj() * self.amplitudes[i]
                    + v[1].conj() * self.amplitudes[i | stride];
                prob += overlap.norm_sqr();
                out[i] = v[0] * overlap;
                out[i | stride] = v[1] * overlap;
            }
        }
        if prob <= ZERO_PROBABILITY {
            return Ok((0.0, None));
        }
        let scale = 1.0 / prob.sqrt();
        out.iter_mut().for_each(|a| *a *= scale);
        Ok((
            prob,
            Some(Self {
                amplitudes: out,
                labels: self.labels.clone(),
            }),
        ))
    }

    fn tensor(&self, other: &Self) -> Result<Self> {
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        check_unique(&labels)?;
        let mut amplitudes = Vec::with_capacity(self.amplitudes.len() * other.amplitudes.len());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Ok(Self { amplitudes, labels })
    }

    fn to_density(&self) -> DensityOperator {
        let n = self.amplitudes.len();
        let m = CMatrix::from_fn(n, n, |i, j| self.amplitudes[i] * self.amplitudes[j].conj());
        DensityOperator::from_parts(m, self.labels.clone())
    }
}

/// Mixed state over labelled qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
    labels: Vec<Label>,
}

impl DensityOperator {
    /// Validates hermiticity, unit trace and positivity at the structural tolerance.
    pub fn new<L: Into<Label> + Clone>(matrix: CMatrix, labels: &[L]) -> Result<Self> {
        let labels = labels_of(labels);
        check_unique(&labels)?;
        let rho = Self { matrix, labels };
        rho.validate(STRUCTURAL_TOL)?;
        Ok(rho)
    }

    pub(crate) fn from_parts(matrix: CMatrix, labels: Vec<Label>) -> Self {
        debug_assert_eq!(matrix.nrows(), 1 << labels.len());
        Self { matrix, labels }
    }

    pub fn maximally_mixed<L: Into<Label> + Clone>(labels: &[L]) -> Result<Self> {
        let labels = labels_of(labels);
        check_unique(&labels)?;
        let d = 1usize << labels.len();
        let m = CMatrix::from_diagonal_element(d, d, c(1.0 / d as f64, 0.0));
        Ok(Self::from_parts(m, labels))
    }

    /// Convex mixture of states sharing one label order.
    pub fn mixture(parts: &[(f64, DensityOperator)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::LabelMismatch("empty mixture".into()))?;
        let labels = first.1.labels.clone();
        let d = first.1.dim();
        let mut m = CMatrix::zeros(d, d);
        let mut total = 0.0;
        for (w, rho) in parts {
            if *w < 0.0 {
                return Err(Error::InvalidProbability(*w));
            }
            let rho = if rho.labels == labels {
                rho.clone()
            } else {
                rho.reorder(&labels)?
            };
            m += rho.matrix * c(*w, 0.0);
            total += w;
        }
        if (total - 1.0).abs() > STRUCTURAL_TOL {
            return Err(Error::NotNormalized(total));
        }
        Ok(Self::from_parts(m, labels))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Computational-basis populations.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let d = 1usize << self.labels.len();
        if self.matrix.nrows() != d || self.matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: self.matrix.nrows().max(self.matrix.ncols()),
            });
        }
        let herm = max_abs(&(&self.matrix - self.matrix.adjoint()));
        if herm > tol {
            return Err(Error::NotHermitian(herm));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > tol {
            return Err(Error::NotNormalized(tr));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -tol {
            return Err(Error::NotPositive(min_eig));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * c(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn relabel(mut self, from: &Label, to: impl Into<Label>) -> Result<Self> {
        let to = to.into();
        let pos = self.position(from)?;
        if self.labels.contains(&to) && *from != to {
            return Err(Error::DuplicateLabel(to.to_string()));
        }
        self.labels[pos] = to;
        Ok(self)
    }

    /// Same operator with tensor factors permuted into `order`.
    pub fn reorder<L: Into<Label> + Clone>(&self, order: &[L]) -> Result<Self> {
        let order = labels_of(order);
        if order == self.labels {
            return Ok(self.clone());
        }
        let map = permutation_map(&self.labels, &order)?;
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for j in 0..d {
            for i in 0..d {
                m[(map[i], map[j])] = self.matrix[(i, j)];
            }
        }
        Ok(Self::from_parts(m, order))
    }

    /// Reduced state on `keep`, in this operator's label order.
    pub fn partial_trace<L: Into<Label> + Clone>(&self, keep: &[L]) -> Result<Self> {
        let keep = labels_of(keep);
        check_unique(&keep)?;
        for l in &keep {
            self.position(l)?;
        }
        let k = self.labels.len();
        let kept_pos: Vec<usize> = (0..k).filter(|&p| keep.contains(&self.labels[p])).collect();
        let traced_pos: Vec<usize> = (0..k).filter(|p| !kept_pos.contains(p)).collect();
        let scatter = |sub: usize, positions: &[usize]| -> usize {
            let n = positions.len();
            positions
                .iter()
                .enumerate()
                .fold(0usize, |acc, (q, &p)| acc | (bit_at(sub, q, n) << (k - 1 - p)))
        };
        let kept_idx: Vec<usize> = (0..1usize << kept_pos.len()).map(|s| scatter(s, &kept_pos)).collect();
        let traced_idx: Vec<usize> =
            (0..1usize << traced_pos.len()).map(|s| scatter(s, &traced_pos)).collect();
        let dk = kept_idx.len();
        let mut m = CMatrix::zeros(dk, dk);
        for j in 0..dk {
            for i in 0..dk {
                let mut acc = C64::default();
                for t in &traced_idx {
                    acc += self.matrix[(kept_idx[i] | t, kept_idx[j] | t)];
                }
                m[(i, j)] = acc;
            }
        }
        let labels = kept_pos.iter().map(|&p| self.labels[p].clone()).collect();
        Ok(Self::from_parts(m, labels))
    }

    pub(crate) fn add_matrix(mut self, other: &DensityOperator) -> Self {
        self.matrix += &other.matrix;
        self
    }

    pub(crate) fn set_label(&mut self, pos: usize, label: Label) {
        self.labels[pos] = label;
    }

    /// rho -> K rho K^dagger for a single-qubit operator given as rows.
    pub(crate) fn apply_qubit_operator(&mut self, pos: usize, u: [[C64; 2]; 2]) {
        let k = self.labels.len();
        let stride = 1usize << (k - 1 - pos);
        let d = self.dim();
        // Left multiplication acts on rows, right multiplication by K^dagger on columns.
        for j in 0..d {
            for i in 0..d {
                if i & stride == 0 {
                    let a0 = self.matrix[(i, j)];
                    let a1 = self.matrix[(i | stride, j)];
                    self.matrix[(i, j)] = u[0][0] * a0 + u[0][1] * a1;
                    self.matrix[(i | stride, j)] = u[1][0] * a0 + u[1][1] * a1;
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                if j & stride == 0 {
                    let a0 = self.matrix[(i, j)];
                    let a1 = self.matrix[(i, j | stride)];
                    self.matrix[(i, j)] = a0 * u[0][0].conj() + a1 * u[0][1].conj();
                    self.matrix[(i, j | stride)] = a0 * u[1][0].conj() + a1 * u[1][1].conj();
                }
            }
        }
    }

    /// Trace distance to another state over the same labels.
    pub fn trace_distance(&self, other: &DensityOperator) -> Result<f64> {
        let other = other.reorder(&self.labels)?;
        let diff = &self.matrix - &other.matrix;
        let herm = (&diff + diff.adjoint()) * c(0.5, 0.0);
        Ok(0.5 * herm.symmetric_eigenvalues().iter().map(|e| e.abs()).sum::<f64>())
    }
}

impl QuantumState for DensityOperator {
    fn labels(&self) -> &[Label] {
        &self.labels
    }

    fn project(&self, label: &Label, v: [C64; 2]) -> Result<(f64, Option<Self>)> {
        let pos = self.position(label)?;
        let k = self.labels.len();
        let stride = 1usize << (k - 1 - pos);
        let d = self.dim();
        let m = &self.matrix;
        let (vc0, vc1) = (v[0].conj(), v[1].conj());
        let mut out = CMatrix::zeros(d, d);
        let mut prob = 0.0;
        for j in (0..d).filter(|j| j & stride == 0) {
            for i in (0..d).filter(|i| i & stride == 0) {
                // <v| on the row index, |v> on the column index.
                let w = vc0 * (m[(i, j)] * v[0] + m[(i, j | stride)] * v[1])
                    + vc1 * (m[(i | stride, j)] * v[0] + m[(i | stride, j | stride)] * v[1]);
                if i == j {
                    prob += w.re;
                }
                out[(i, j)] = v[0] * w * vc0;
                out[(i, j | stride)] = v[0] * w * vc1;
                out[(i | stride, j)] = v[1] * w * vc0;
                out[(i | stride, j | stride)] = v[1] * w * vc1;
            }
        }
        if prob <= ZERO_PROBABILITY {
            return Ok((0.0, None));
        }
        out *= c(1.0 / prob, 0.0);
        Ok((prob, Some(Self::from_parts(out, self.labels.clone()))))
    }

    fn tensor(&self, other: &Self) -> Result<Self> {
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        check_unique(&labels)?;
        Ok(Self::from_parts(self.matrix.kronecker(&other.matrix), labels))
    }

    fn to_density(&self) -> DensityOperator {
        self.clone()
    }
}

impl From<&StateVector> for DensityOperator {
    fn from(s: &StateVector) -> Self {
        s.to_density()
    }
}

/// `map[old_index] = new_index` for moving factors from `from` order to `to` order.
pub(crate) fn permutation_map(from: &[Label], to: &[Label]) -> Result<Vec<usize>> {
    if from.len() != to.len() {
        return Err(Error::LabelMismatch(format!(
            "reorder needs {} labels, got {}",
            from.len(),
            to.len()
        )));
    }
    check_unique(to)?;
    let k = from.len();
    let old_pos: Vec<usize> = to
        .iter()
        .map(|l| {
            from.iter()
                .position(|f| f == l)
                .ok_or_else(|| Error::UnknownLabel(l.to_string()))
        })
        .collect::<Result<_>>()?;
    Ok((0..1usize << k)
        .map(|i| {
            old_pos
                .iter()
                .enumerate()
                .fold(0usize, |acc, (q, &p)| acc | (bit_at(i, p, k) << (k - 1 - q)))
        })
        .collect())
}

/// `(|00> + |11>)/sqrt(2)` on the two given labels.
pub fn bell_state(a: impl Into<Label>, b: impl Into<Label>) -> Result<StateVector> {
    let s = c(FRAC_1_SQRT_2, 0.0);
    let z = C64::default();
    StateVector::new(vec![s, z, z, s], &[a.into(), b.into()])
}

pub fn tensor<S: QuantumState>(a: &S, b: &S) -> Result<S> {
    a.tensor(b)
}

pub fn partial_trace<L: Into<Label> + Clone>(rho: &DensityOperator, keep: &[L]) -> Result<DensityOperator> {
    rho.partial_trace(keep)
}

/// One sampled measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement<S> {
    pub outcome: u8,
    pub post_state: S,
    pub probability: f64,
}

/// One branch of an exhaustively enumerated measurement. `post_state` is
/// `None` exactly when the branch has zero probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch<S> {
    pub outcome: u8,
    pub post_state: Option<S>,
    pub probability: f64,
}

/// Measures `label` in a trusted basis. `randomness` is a uniform draw in
/// `[0, 1)`: outcome 0 is returned when it falls below the outcome-0 probability.
pub fn measure<S: QuantumState>(
    state: &S,
    label: impl Into<Label>,
    basis: Basis,
    randomness: f64,
) -> Result<Measurement<S>> {
    measure_with(state, label, &Instrument::standard(basis), randomness)
}

pub fn measure_with<S: QuantumState>(
    state: &S,
    label: impl Into<Label>,
    instrument: &Instrument,
    randomness: f64,
) -> Result<Measurement<S>> {
    let label = label.into();
    let (p0, post0) = state.project(&label, instrument.vector(0))?;
    if randomness < p0 {
        if let Some(post) = post0 {
            return Ok(Measurement {
                outcome: 0,
                post_state: post,
                probability: p0,
            });
        }
    }
    let (p1, post1) = state.project(&label, instrument.vector(1))?;
    match (post1, post0) {
        (Some(post), _) => Ok(Measurement {
            outcome: 1,
            post_state: post,
            probability: p1,
        }),
        // Rounding can leave randomness just above p0 = 1 - eps.
        (None, Some(post)) => Ok(Measurement {
            outcome: 0,
            post_state: post,
            probability: p0,
        }),
        (None, None) => Err(Error::ZeroProbabilityBranch { outcome: 1 }),
    }
}

/// Both outcomes of measuring `label` in `basis`.
pub fn measure_all_branches<S: QuantumState>(
    state: &S,
    label: impl Into<Label>,
    basis: Basis,
) -> Result<[Branch<S>; 2]> {
    branches_with(state, &label.into(), &Instrument::standard(basis))
}

pub(crate) fn branches_with<S: QuantumState>(
    state: &S,
    label: &Label,
    instrument: &Instrument,
) -> Result<[Branch<S>; 2]> {
    let (p0, s0) = state.project(label, instrument.vector(0))?;
    let (p1, s1) = state.project(label, instrument.vector(1))?;
    Ok([
        Branch {
            outcome: 0,
            post_state: s0,
            probability: p0,
        },
        Branch {
            outcome: 1,
            post_state: s1,
            probability: p1,
        },
    ])
}

/// Projects onto a fixed outcome; a zero-probability outcome is an error.
pub fn project_outcome<S: QuantumState>(
    state: &S,
    label: impl Into<Label>,
    instrument: &Instrument,
    outcome: u8,
) -> Result<(S, f64)> {
    let (p, post) = state.project(&label.into(), instrument.vector(outcome))?;
    post.map(|s| (s, p))
        .ok_or(Error::ZeroProbabilityBranch { outcome })
}

#[cfg(test)]
pub(crate) fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= super::EXACT_TOL
}
