use super::state::permutation_map;
use super::{bit_at, c, check_unique, labels_of, CMatrix, DensityOperator, Label, QuantumState};
use super::{max_abs, StateVector, C64, STRUCTURAL_TOL};
use crate::{Error, Result};

/// CPTP map in Kraus form from `input_labels` to `output_labels`.
///
/// Each Kraus operator is `2^outputs x 2^inputs`, with label order giving
/// the bit order of row and column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    kraus: Vec<CMatrix>,
    input_labels: Vec<Label>,
    output_labels: Vec<Label>,
}

impl Channel {
    pub fn new<L: Into<Label> + Clone, M: Into<Label> + Clone>(
        kraus: Vec<CMatrix>,
        input_labels: &[L],
        output_labels: &[M],
    ) -> Result<Self> {
        let input_labels = labels_of(input_labels);
        let output_labels = labels_of(output_labels);
        check_unique(&input_labels)?;
        check_unique(&output_labels)?;
        let (din, dout) = (1usize << input_labels.len(), 1usize << output_labels.len());
        if kraus.is_empty() {
            return Err(Error::IncompleteKraus(1.0));
        }
        for k in &kraus {
            if k.ncols() != din {
                return Err(Error::DimensionMismatch {
                    expected: din,
                    actual: k.ncols(),
                });
            }
            if k.nrows() != dout {
                return Err(Error::DimensionMismatch {
                    expected: dout,
                    actual: k.nrows(),
                });
            }
        }
        let ch = Self {
            kraus,
            input_labels,
            output_labels,
        };
        let dev = ch.completeness_deviation();
        if dev > STRUCTURAL_TOL {
            return Err(Error::IncompleteKraus(dev));
        }
        Ok(ch)
    }

    pub fn identity<L: Into<Label> + Clone>(labels: &[L]) -> Self {
        let labels = labels_of(labels);
        let d = 1usize << labels.len();
        Self {
            kraus: vec![CMatrix::identity(d, d)],
            input_labels: labels.clone(),
            output_labels: labels,
        }
    }

    pub fn unitary<L: Into<Label> + Clone>(u: CMatrix, labels: &[L]) -> Result<Self> {
        Self::new(vec![u], labels, labels)
    }

    /// `rho -> (1 - p) rho + p I/2`; `p = 1` is the fully depolarizing channel.
    pub fn depolarizing(label: impl Into<Label>, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        let label = label.into();
        let z = C64::default();
        let one = c(1.0, 0.0);
        let paulis = [
            CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
            CMatrix::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
            CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
        ];
        let mut kraus = vec![CMatrix::identity(2, 2) * c((1.0 - 0.75 * p).sqrt(), 0.0)];
        kraus.extend(paulis.into_iter().map(|s| s * c((p / 4.0).sqrt(), 0.0)));
        let labels = [label];
        Self::new(kraus, &labels, &labels)
    }

    /// Discards `memory` and applies `inner` (identity when `None`) to `target`.
    /// Maps `(memory, target) -> target`.
    pub fn discard_memory(memory: impl Into<Label>, target: impl Into<Label>, inner: Option<&Channel>) -> Result<Self> {
        let (memory, target) = (memory.into(), target.into());
        let inner_kraus = match inner {
            Some(ch) => {
                if ch.input_labels != [target.clone()] || ch.output_labels != [target.clone()] {
                    return Err(Error::LabelMismatch(format!(
                        "inner channel must act on `{target}` alone"
                    )));
                }
                ch.kraus.clone()
            }
            None => vec![CMatrix::identity(2, 2)],
        };
        let mut kraus = Vec::with_capacity(2 * inner_kraus.len());
        for m in 0..2 {
            let bra = CMatrix::from_fn(1, 2, |_, j| if j == m { c(1.0, 0.0) } else { C64::default() });
            for k in &inner_kraus {
                kraus.push(bra.kronecker(k));
            }
        }
        Self::new(kraus, &[memory, target.clone()], &[target])
    }

    /// Discards the freshly received `target` and moves `memory` into its place.
    /// Maps `(memory, target) -> target`.
    pub fn swap_in_memory(memory: impl Into<Label>, target: impl Into<Label>) -> Result<Self> {
        let (memory, target) = (memory.into(), target.into());
        let kraus = (0..2)
            .map(|i| {
                let bra = CMatrix::from_fn(1, 2, |_, j| if j == i { c(1.0, 0.0) } else { C64::default() });
                CMatrix::identity(2, 2).kronecker(&bra)
            })
            .collect();
        Self::new(kraus, &[memory, target.clone()], &[target])
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn input_labels(&self) -> &[Label] {
        &self.input_labels
    }

    pub fn output_labels(&self) -> &[Label] {
        &self.output_labels
    }

    /// `max |sum K^dagger K - I|`.
    pub fn completeness_deviation(&self) -> f64 {
        let din = 1usize << self.input_labels.len();
        let mut sum = CMatrix::zeros(din, din);
        for k in &self.kraus {
            sum += k.adjoint() * k;
        }
        max_abs(&(sum - CMatrix::identity(din, din)))
    }

    /// Applies the channel to the matching registers of `rho`.
    ///
    /// Untouched registers keep their relative order; the output registers
    /// take the position of the first input register.
    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let labels = rho.labels();
        for l in &self.input_labels {
            if !labels.contains(l) {
                return Err(Error::LabelMismatch(format!(
                    "channel input `{l}` is not present in the state"
                )));
            }
        }
        let rest: Vec<Label> = labels
            .iter()
            .filter(|l| !self.input_labels.contains(l))
            .cloned()
            .collect();
        if let Some(clash) = self.output_labels.iter().find(|l| rest.contains(l)) {
            return Err(Error::LabelMismatch(format!(
                "channel output `{clash}` collides with an untouched register"
            )));
        }
        if self.input_labels.len() == 1 && self.output_labels.len() == 1 {
            return Ok(self.apply_single_qubit(rho));
        }
        let mut front: Vec<Label> = self.input_labels.clone();
        front.extend(rest.iter().cloned());
        let arranged = rho.reorder(&front)?;
        let drest = 1usize << rest.len();
        let id = CMatrix::identity(drest, drest);
        let dout = 1usize << (self.output_labels.len() + rest.len());
        let mut out = CMatrix::zeros(dout, dout);
        for k in &self.kraus {
            let big = if drest == 1 { k.clone() } else { k.kronecker(&id) };
            out += &big * arranged.matrix() * big.adjoint();
        }
        let mut produced = self.output_labels.clone();
        produced.extend(rest.iter().cloned());
        let result = DensityOperator::from_parts(out, produced);

        let mut order = Vec::with_capacity(result.labels().len());
        let mut placed = false;
        for l in labels {
            if self.input_labels.contains(l) {
                if !placed {
                    order.extend(self.output_labels.iter().cloned());
                    placed = true;
                }
            } else {
                order.push(l.clone());
            }
        }
        result.reorder(&order)
    }

    /// Qubit-to-qubit channel applied in place, without reordering.
    fn apply_single_qubit(&self, rho: &DensityOperator) -> DensityOperator {
        let pos = rho
            .labels()
            .iter()
            .position(|l| *l == self.input_labels[0])
            .expect("checked by apply");
        let mut out: Option<DensityOperator> = None;
        for k in &self.kraus {
            let mut term = rho.clone();
            term.apply_qubit_operator(pos, [[k[(0, 0)], k[(0, 1)]], [k[(1, 0)], k[(1, 1)]]]);
            out = Some(match out {
                None => term,
                Some(acc) => acc.add_matrix(&term),
            });
        }
        let mut out = out.expect("channels have at least one Kraus operator");
        out.set_label(pos, self.output_labels[0].clone());
        out
    }

    /// Feeds the pure state `input` into the `label` input, yielding a
    /// channel on the remaining inputs.
    pub fn absorb_input(&self, input: &StateVector) -> Result<Channel> {
        if input.num_qubits() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: input.num_qubits(),
            });
        }
        let label = &input.labels()[0];
        let pos = self
            .input_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::LabelMismatch(format!("`{label}` is not a channel input")))?;
        let k = self.input_labels.len();
        let din = 1usize << k;
        let dred = din >> 1;
        let amp = input.amplitudes();
        // Embedding of the reduced input space with `input` inserted at `pos`.
        let embed = CMatrix::from_fn(din, dred, |full, red| {
            let b = bit_at(full, pos, k);
            let low_mask = (1usize << (k - 1 - pos)) - 1;
            let reduced = ((full >> (k - pos)) << (k - 1 - pos)) | (full & low_mask);
            if reduced == red {
                amp[b]
            } else {
                C64::default()
            }
        });
        let mut inputs = self.input_labels.clone();
        inputs.remove(pos);
        Ok(Channel {
            kraus: self.kraus.iter().map(|kr| kr * &embed).collect(),
            input_labels: inputs,
            output_labels: self.output_labels.clone(),
        })
    }

    /// True when the output does not depend on the `ignored` inputs: the map
    /// factors as a trace over those registers followed by a channel on the rest.
    pub fn ignores_inputs<L: Into<Label> + Clone>(&self, ignored: &[L], tol: f64) -> Result<bool> {
        let ignored = labels_of(ignored);
        let mut order = ignored.clone();
        for l in &self.input_labels {
            if !ignored.contains(l) {
                order.push(l.clone());
            }
        }
        if order.len() != self.input_labels.len() {
            return Err(Error::LabelMismatch("ignored labels must be channel inputs".into()));
        }
        let map = permutation_map(&self.input_labels, &order)?;
        let din = 1usize << self.input_labels.len();
        // Kraus columns re-indexed by (ignored, kept).
        let permuted: Vec<CMatrix> = self
            .kraus
            .iter()
            .map(|k| {
                let mut p = CMatrix::zeros(k.nrows(), din);
                for (old, &new) in map.iter().enumerate() {
                    p.set_column(new, &k.column(old));
                }
                p
            })
            .collect();
        let dm = 1usize << ignored.len();
        let dq = din / dm;
        let image = |m: usize, q: usize, mp: usize, qp: usize| -> CMatrix {
            let (a, b) = (m * dq + q, mp * dq + qp);
            let mut acc = CMatrix::zeros(permuted[0].nrows(), permuted[0].nrows());
            for k in &permuted {
                acc += k.column(a) * k.column(b).adjoint();
            }
            acc
        };
        for q in 0..dq {
            for qp in 0..dq {
                let reference = image(0, q, 0, qp);
                for m in 0..dm {
                    for mp in 0..dm {
                        let img = image(m, q, mp, qp);
                        let dev = if m == mp {
                            max_abs(&(&img - &reference))
                        } else {
                            max_abs(&img)
                        };
                        if dev > tol {
                            return Ok(false);
                        }
                    }
                }
            }
        }
        Ok(true)
    }
}

/// Applies `ch` to `state`.
pub fn apply_channel(ch: &Channel, state: &impl QuantumState) -> Result<DensityOperator> {
    ch.apply(&state.to_density())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{bell_state, Basis};

    #[test]
    fn identity_returns_input() {
        let rho = bell_state("a", "b").unwrap().to_density();
        let out = Channel::identity(&["a"]).apply(&rho).unwrap();
        assert!(max_abs(&(out.matrix() - rho.matrix())) < 1e-15);
        assert_eq!(out.labels(), rho.labels());
    }

    #[test]
    fn full_depolarizing_gives_maximally_mixed() {
        let zero = StateVector::basis_state(&[0], &["q"]).unwrap();
        let out = apply_channel(&Channel::depolarizing("q", 1.0).unwrap(), &zero).unwrap();
        let mm = DensityOperator::maximally_mixed(&["q"]).unwrap();
        assert!(out.trace_distance(&mm).unwrap() < 1e-12);
    }

    #[test]
    fn incomplete_kraus_rejected() {
        let half = CMatrix::identity(2, 2) * c(0.5, 0.0);
        assert!(matches!(
            Channel::new(vec![half], &["q"], &["q"]),
            Err(Error::IncompleteKraus(_))
        ));
    }

    #[test]
    fn missing_input_label_rejected() {
        let rho = DensityOperator::maximally_mixed(&["a"]).unwrap();
        let err = Channel::identity(&["b"]).apply(&rho);
        assert!(matches!(err, Err(Error::LabelMismatch(_))));
    }

    #[test]
    fn swap_in_memory_moves_memory_state() {
        let mem = StateVector::eigenstate(Basis::X, 1, "m");
        let fresh = StateVector::basis_state(&[0], &["q"]).unwrap();
        let other = StateVector::basis_state(&[1], &["r"]).unwrap();
        let rho = fresh.tensor(&mem).unwrap().tensor(&other).unwrap().to_density();
        let out = Channel::swap_in_memory("m", "q").unwrap().apply(&rho).unwrap();
        assert_eq!(out.labels(), &[Label::new("q"), Label::new("r")]);
        let expected = StateVector::eigenstate(Basis::X, 1, "q")
            .tensor(&other)
            .unwrap()
            .to_density();
        assert!(out.trace_distance(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn memory_checks() {
        let swap = Channel::swap_in_memory("m", "q").unwrap();
        assert!(!swap.ignores_inputs(&["m"], 1e-9).unwrap());
        let dep = Channel::depolarizing("q", 0.3).unwrap();
        let discard = Channel::discard_memory("m", "q", Some(&dep)).unwrap();
        assert!(discard.ignores_inputs(&["m"], 1e-9).unwrap());
        assert!(!discard.ignores_inputs(&["q"], 1e-9).unwrap());
    }

    #[test]
    fn absorbing_memory_matches_full_application() {
        let mem = StateVector::eigenstate(Basis::X, 0, "m");
        let q = StateVector::basis_state(&[1], &["q"]).unwrap();
        let swap = Channel::swap_in_memory("m", "q").unwrap();
        let full = swap.apply(&mem.tensor(&q).unwrap().to_density()).unwrap();
        let reduced = swap.absorb_input(&mem).unwrap();
        assert_eq!(reduced.input_labels(), &[Label::new("q")]);
        assert!(reduced.completeness_deviation() < 1e-12);
        let part = reduced.apply(&q.to_density()).unwrap();
        assert!(part.trace_distance(&full).unwrap() < 1e-12);
    }
}
