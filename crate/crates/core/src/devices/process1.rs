use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use super::distribution::check_packable;
use super::{Announced, DeviceTrace, InputSource, OutputDistribution, Party, RoundInput, RoundRecord};
use crate::quantum::{
    bell_state, branches_with, measure_with, Basis, DensityOperator, Instrument, Label, QuantumState,
    StateVector, STRUCTURAL_TOL,
};
use crate::{Error, Result};

/// Entries below this are dropped from exact distributions.
const NEGLIGIBLE: f64 = 1e-16;

/// Largest register count [`JointState::to_density`] will materialize.
const MAX_DENSE_QUBITS: usize = 12;

/// One product term of a joint state: the tensor product of `blocks`,
/// carrying probability `weight`.
#[derive(Debug, Clone)]
pub struct ProductComponent {
    pub weight: f64,
    pub blocks: Vec<DensityOperator>,
}

/// Joint state over every round's registers, kept as a mixture of products
/// so that long runs of independent pairs stay cheap.
#[derive(Debug, Clone)]
pub struct JointState {
    components: Vec<ProductComponent>,
    labels: BTreeSet<Label>,
}

impl JointState {
    pub fn new(components: Vec<ProductComponent>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidConfig("joint state needs at least one component".into()))?;
        let labels = component_labels(first)?;
        let mut total = 0.0;
        for comp in &components {
            if comp.weight < 0.0 {
                return Err(Error::InvalidProbability(comp.weight));
            }
            if component_labels(comp)? != labels {
                return Err(Error::LabelMismatch(
                    "joint state components cover different registers".into(),
                ));
            }
            total += comp.weight;
        }
        if (total - 1.0).abs() > STRUCTURAL_TOL {
            return Err(Error::NotNormalized(total));
        }
        Ok(Self { components, labels })
    }

    pub fn single(rho: DensityOperator) -> Result<Self> {
        Self::product(vec![rho])
    }

    pub fn product(blocks: Vec<DensityOperator>) -> Result<Self> {
        Self::new(vec![ProductComponent { weight: 1.0, blocks }])
    }

    pub fn components(&self) -> &[ProductComponent] {
        &self.components
    }

    pub fn labels(&self) -> &BTreeSet<Label> {
        &self.labels
    }

    /// Dense density operator in the given register order.
    pub fn to_density(&self, order: &[Label]) -> Result<DensityOperator> {
        if order.len() > MAX_DENSE_QUBITS {
            return Err(Error::EnumerationBudgetExceeded(format!(
                "{} registers exceed the dense limit of {MAX_DENSE_QUBITS}",
                order.len()
            )));
        }
        let mut parts = Vec::with_capacity(self.components.len());
        for comp in &self.components {
            let mut it = comp.blocks.iter();
            let mut acc = it.next().expect("validated non-empty").clone();
            for b in it {
                acc = acc.tensor(b)?;
            }
            parts.push((comp.weight, acc.reorder(order)?));
        }
        DensityOperator::mixture(&parts)
    }
}

fn component_labels(comp: &ProductComponent) -> Result<BTreeSet<Label>> {
    if comp.blocks.is_empty() {
        return Err(Error::InvalidConfig("product component without blocks".into()));
    }
    let mut set = BTreeSet::new();
    for b in &comp.blocks {
        for l in b.labels() {
            if !set.insert(l.clone()) {
                return Err(Error::DuplicateLabel(l.to_string()));
            }
        }
    }
    Ok(set)
}

/// Parses `A3` / `B3` into the party and round.
pub(crate) fn parse_round_label(l: &Label) -> Option<(Party, usize)> {
    let s = l.as_str();
    let party = match s.as_bytes().first()? {
        b'A' => Party::Alice,
        b'B' => Party::Bob,
        _ => return None,
    };
    let round = s[1..].parse().ok()?;
    (round >= 1).then_some((party, round))
}

/// Memoryless device: a joint state fixed before round 1 and a local
/// instrument per party, round and basis.
#[derive(Debug, Clone)]
pub struct Process1Spec {
    id: String,
    rounds: usize,
    joint: JointState,
    instruments: BTreeMap<(Party, usize, Basis), Instrument>,
    ebits: Option<usize>,
}

impl Process1Spec {
    /// Spec with trusted instruments; registers must be exactly `A1..An, B1..Bn`.
    pub fn new(id: impl Into<String>, rounds: usize, joint: JointState) -> Result<Self> {
        if rounds == 0 {
            return Err(Error::RoundCountMismatch {
                expected: 1,
                actual: 0,
            });
        }
        let expected: BTreeSet<Label> = (1..=rounds)
            .flat_map(|j| Party::BOTH.map(|p| p.round_register(j)))
            .collect();
        if joint.labels() != &expected {
            return Err(Error::LabelMismatch(format!(
                "joint state must cover registers A1..A{rounds}, B1..B{rounds} exactly"
            )));
        }
        let mut instruments = BTreeMap::new();
        for j in 1..=rounds {
            for p in Party::BOTH {
                for b in Basis::ALL {
                    instruments.insert((p, j, b), Instrument::standard(b));
                }
            }
        }
        Ok(Self {
            id: id.into(),
            rounds,
            joint,
            instruments,
            ebits: None,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn joint_state(&self) -> &JointState {
        &self.joint
    }

    pub fn ebit_budget(&self) -> Option<usize> {
        self.ebits
    }

    pub fn with_ebit_budget(mut self, ebits: Option<usize>) -> Self {
        self.ebits = ebits;
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn instrument(&self, party: Party, round: usize, basis: Basis) -> &Instrument {
        &self.instruments[&(party, round, basis)]
    }

    pub fn set_instrument(
        &mut self,
        party: Party,
        round: usize,
        basis: Basis,
        instrument: Instrument,
    ) -> Result<()> {
        if round == 0 || round > self.rounds {
            return Err(Error::RoundCountMismatch {
                expected: self.rounds,
                actual: round,
            });
        }
        instrument.validate(STRUCTURAL_TOL)?;
        self.instruments.insert((party, round, basis), instrument);
        Ok(())
    }

    pub fn with_instruments(mut self, f: impl Fn(Party, usize, Basis) -> Instrument) -> Result<Self> {
        for j in 1..=self.rounds {
            for p in Party::BOTH {
                for b in Basis::ALL {
                    self.set_instrument(p, j, b, f(p, j, b))?;
                }
            }
        }
        Ok(self)
    }

    pub fn with_trusted_instruments(&self) -> Self {
        let mut s = self.clone();
        for ((_, _, b), inst) in s.instruments.iter_mut() {
            *inst = Instrument::standard(*b);
        }
        s
    }

    /// |Φ+> on every round's pair.
    pub fn bell_product(rounds: usize) -> Result<Self> {
        let blocks = (1..=rounds)
            .map(|j| {
                bell_state(Party::Alice.round_register(j), Party::Bob.round_register(j))
                    .map(|s| DensityOperator::from(&s))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new("bell_product", rounds, JointState::product(blocks)?)?.with_ebit_budget(Some(rounds)))
    }

    /// Random joint state over all `2n` registers (one dense block), with
    /// Haar-random instruments when `random_instruments` is set.
    pub fn random<R: Rng + ?Sized>(rounds: usize, rng: &mut R, random_instruments: bool) -> Result<Self> {
        let labels: Vec<String> = (1..=rounds)
            .flat_map(|j| Party::BOTH.map(|p| p.round_register(j).to_string()))
            .collect();
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let rho = super::behaviours::random_density_on(rng, &refs);
        let mut spec = Self::new("random_process1", rounds, JointState::single(rho)?)?;
        if random_instruments {
            for j in 1..=rounds {
                for p in Party::BOTH {
                    for b in Basis::ALL {
                        spec.set_instrument(p, j, b, Instrument::random(b, rng))?;
                    }
                }
            }
        }
        Ok(spec)
    }

    fn check_inputs(&self, inputs: &[RoundInput]) -> Result<()> {
        if inputs.len() != self.rounds {
            return Err(Error::RoundCountMismatch {
                expected: self.rounds,
                actual: inputs.len(),
            });
        }
        check_packable(self.rounds)
    }

    /// Exact distribution: every block is rotated into its measurement
    /// eigenbases and read off the diagonal; blocks combine as a product.
    pub fn exact_distribution(&self, inputs: &[RoundInput]) -> Result<OutputDistribution> {
        self.check_inputs(inputs)?;
        let mut dist = OutputDistribution::new(self.rounds);
        for comp in &self.joint.components {
            let mut acc: Vec<(u64, f64)> = vec![(0, comp.weight)];
            for block in &comp.blocks {
                let local = self.block_distribution(block, inputs)?;
                let mut next = Vec::with_capacity(acc.len() * local.len());
                for &(k, p) in &acc {
                    for &(lk, q) in &local {
                        let w = p * q;
                        if w > NEGLIGIBLE {
                            next.push((k | lk, w));
                        }
                    }
                }
                acc = next;
            }
            for (k, p) in acc {
                dist.add(k, p);
            }
        }
        Ok(dist)
    }

    /// Block outcome probabilities keyed by their global packed bits.
    fn block_distribution(&self, block: &DensityOperator, inputs: &[RoundInput]) -> Result<Vec<(u64, f64)>> {
        let mut rotated = block.clone();
        let k = block.labels().len();
        let mut shifts = Vec::with_capacity(k);
        for (pos, l) in block.labels().iter().enumerate() {
            let (party, round) = parse_round_label(l)
                .ok_or_else(|| Error::UnknownLabel(l.to_string()))?;
            let basis = inputs[round - 1].get(party);
            rotated.apply_qubit_operator(pos, self.instrument(party, round, basis).rotation());
            shifts.push(2 * (round - 1) + party.index());
        }
        Ok(rotated
            .diagonal()
            .into_iter()
            .enumerate()
            .filter(|&(_, p)| p > NEGLIGIBLE)
            .map(|(idx, p)| {
                let key = shifts.iter().enumerate().fold(0u64, |acc, (pos, &s)| {
                    acc | ((crate::quantum::bit_at(idx, pos, k) as u64) << s)
                });
                (key, p)
            })
            .collect())
    }

    /// Exact distribution by measuring the flattened joint state register by
    /// register in `order`, enumerating both branches each time.
    pub fn distribution_in_order(
        &self,
        inputs: &[RoundInput],
        order: &[(Party, usize)],
    ) -> Result<OutputDistribution> {
        self.check_inputs(inputs)?;
        let expected: BTreeSet<(Party, usize)> = (1..=self.rounds)
            .flat_map(|j| Party::BOTH.map(|p| (p, j)))
            .collect();
        if order.len() != expected.len() || order.iter().copied().collect::<BTreeSet<_>>() != expected {
            return Err(Error::LabelMismatch(
                "measurement order must list every register once".into(),
            ));
        }
        let flat_order: Vec<Label> = order.iter().map(|&(p, j)| p.round_register(j)).collect();
        let rho = self.joint.to_density(&flat_order)?;
        let mut live = vec![(1.0, 0u64, rho)];
        for &(party, round) in order {
            let label = party.round_register(round);
            let inst = self.instrument(party, round, inputs[round - 1].get(party));
            let shift = 2 * (round - 1) + party.index();
            let mut next = Vec::with_capacity(live.len() * 2);
            for (p, key, state) in &live {
                for br in branches_with(state, &label, inst)? {
                    if let Some(post) = br.post_state {
                        next.push((p * br.probability, key | ((br.outcome as u64) << shift), post));
                    }
                }
            }
            live = next;
        }
        let mut dist = OutputDistribution::new(self.rounds);
        for (p, key, _) in live {
            dist.add(key, p);
        }
        Ok(dist)
    }

    /// Samples round by round, drawing round `j`'s inputs only after round
    /// `j-1` is recorded.
    pub fn run_with<R: Rng + ?Sized>(
        &self,
        source: &mut dyn InputSource,
        rng: &mut R,
    ) -> Result<DeviceTrace> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.joint.components.last().expect("validated non-empty");
        for comp in &self.joint.components {
            acc += comp.weight;
            if u < acc {
                chosen = comp;
                break;
            }
        }
        let mut blocks = chosen.blocks.clone();
        let mut trace = DeviceTrace::default();
        for round in 1..=self.rounds {
            let input = source.next_input(round, &trace.rounds);
            let mut out = [0u8; 2];
            for party in Party::BOTH {
                let label = party.round_register(round);
                let b = blocks
                    .iter()
                    .position(|b| b.labels().contains(&label))
                    .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
                let inst = self.instrument(party, round, input.get(party));
                let m = measure_with(&blocks[b], label, inst, rng.random::<f64>())?;
                blocks[b] = m.post_state;
                out[party.index()] = m.outcome;
            }
            trace.rounds.push(RoundRecord {
                round,
                input_a: input.alice,
                input_b: input.bob,
                output_a: out[0],
                output_b: out[1],
                announced: Announced::default(),
            });
        }
        Ok(trace)
    }
}

/// Samples one execution on a fixed input sequence.
pub fn run_process1<R: Rng + ?Sized>(
    spec: &Process1Spec,
    inputs: &[RoundInput],
    rng: &mut R,
) -> Result<DeviceTrace> {
    spec.check_inputs(inputs)?;
    let mut source = super::fixed_inputs(inputs);
    spec.run_with(&mut source, rng)
}

/// `(|0..0><0..0| + |1..1><1..1|)/2` on all `2n` registers, measured in Z
/// whatever the input.
pub fn classical_copy(rounds: usize) -> Result<Process1Spec> {
    let comps = (0..2u8)
        .map(|bit| {
            let blocks = (1..=rounds)
                .flat_map(|j| Party::BOTH.map(|p| p.round_register(j)))
                .map(|l| DensityOperator::from(&StateVector::eigenstate(Basis::Z, bit, l)))
                .collect();
            ProductComponent { weight: 0.5, blocks }
        })
        .collect();
    Process1Spec::new("classical_copy", rounds, JointState::new(comps)?)?
        .with_ebit_budget(Some(0))
        .with_instruments(|_, _, b| Instrument::relabelled(b, Basis::Z))
}
