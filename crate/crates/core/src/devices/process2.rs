use std::fmt::Debug;

use rand::Rng;

use super::distribution::check_packable;
use super::{InputSource, OutputDistribution, Party, RoundInput, RoundRecord};
use super::{Announced, DeviceTrace};
use crate::quantum::{
    measure_with, Basis, Channel, DensityOperator, Instrument, Label, StateVector,
};
use crate::quantum::branches_with as branches;
use crate::{Error, Result};

/// Live-branch ceiling for exact enumeration.
pub const DEFAULT_BRANCH_BUDGET: usize = 1 << 20;

/// Eve's classical memory, threaded through round preparations.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct EveMemory(pub Vec<u64>);

/// One term of Eve's (possibly probabilistic) preparation.
#[derive(Debug, Clone)]
pub struct Preparation {
    pub probability: f64,
    /// State on the `A`, `B` registers.
    pub state: DensityOperator,
    pub eve: EveMemory,
}

impl Preparation {
    pub fn certain(state: DensityOperator, eve: EveMemory) -> Self {
        Self {
            probability: 1.0,
            state,
            eve,
        }
    }
}

/// How a device writes its memory register after measuring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryUpdate {
    /// Memory reset to |0>.
    Discard,
    /// Memory holds the post-measurement qubit.
    RetainPostMeasurement,
    /// Memory holds the Z eigenstate of the outcome bit.
    RecordOutput,
    /// Memory holds the Z eigenstate of the encoded input.
    RecordInput { x: u8, z: u8 },
}

/// Sequential device with memory.
///
/// Round `j` runs: Eve prepares a state on `A`,`B` from her memory; each
/// party applies its memory channel `(M, Q) -> Q` to its previous memory
/// register and incoming qubit; each party measures with the instrument for
/// its input; each party writes its next memory register.
pub trait Process2Behaviour: Send + Sync + Debug {
    fn id(&self) -> &str;

    fn prepare(&self, round: usize, eve: &EveMemory) -> Vec<Preparation>;

    /// Channel with inputs `[memory_register, register]` and output `[register]`.
    fn memory_channel(&self, party: Party, round: usize) -> &Channel;

    fn instrument(&self, _party: Party, _round: usize, input: Basis) -> Instrument {
        Instrument::standard(input)
    }

    fn memory_update(&self, party: Party, round: usize) -> MemoryUpdate;

    /// Entangled pairs Eve distributes over `rounds` rounds, when known.
    fn ebit_budget(&self, _rounds: usize) -> Option<usize> {
        None
    }
}

/// Debug-only view of a round's state right before measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub round: usize,
    pub pre_measurement: DensityOperator,
}

#[derive(Debug, Clone)]
struct DeviceState {
    eve: EveMemory,
    memory: [StateVector; 2],
}

impl DeviceState {
    fn initial() -> Self {
        Self {
            eve: EveMemory::default(),
            memory: Party::BOTH.map(|p| StateVector::eigenstate(Basis::Z, 0, p.memory_register())),
        }
    }
}

fn register_labels() -> [Label; 2] {
    [Party::Alice.register(), Party::Bob.register()]
}

/// Applies both memory channels to a fresh round state.
fn pre_measurement(
    b: &dyn Process2Behaviour,
    round: usize,
    memory: &[StateVector; 2],
    prepared: &DensityOperator,
) -> Result<DensityOperator> {
    let regs = register_labels();
    let mut rho = prepared.reorder(&regs).map_err(|_| {
        Error::LabelMismatch(format!(
            "round {round} preparation must act on registers A and B exactly"
        ))
    })?;
    for party in Party::BOTH {
        let ch = b.memory_channel(party, round);
        let reg = party.register();
        if ch.input_labels() != [party.memory_register(), reg.clone()] || ch.output_labels() != [reg]
        {
            return Err(Error::LabelMismatch(format!(
                "{party} memory channel at round {round} must map ({}, {}) to {}",
                party.memory_register(),
                party.register(),
                party.register()
            )));
        }
        rho = ch.absorb_input(&memory[party.index()])?.apply(&rho)?;
    }
    Ok(rho)
}

fn next_memory(
    update: MemoryUpdate,
    party: Party,
    input: Basis,
    instrument: &Instrument,
    outcome: u8,
) -> Result<StateVector> {
    let label = party.memory_register();
    Ok(match update {
        MemoryUpdate::Discard => StateVector::eigenstate(Basis::Z, 0, label),
        MemoryUpdate::RetainPostMeasurement => StateVector::qubit(instrument.vector(outcome), label)?,
        MemoryUpdate::RecordOutput => StateVector::eigenstate(Basis::Z, outcome, label),
        MemoryUpdate::RecordInput { x, z } => {
            let bit = match input {
                Basis::X => x,
                Basis::Z => z,
            };
            StateVector::eigenstate(Basis::Z, bit & 1, label)
        }
    })
}

fn validate_preparations(round: usize, preps: &[Preparation]) -> Result<()> {
    if preps.is_empty() {
        return Err(Error::InvalidConfig(format!("round {round}: empty preparation")));
    }
    let total: f64 = preps.iter().map(|p| p.probability).sum();
    if preps.iter().any(|p| !(0.0..=1.0 + 1e-12).contains(&p.probability))
        || (total - 1.0).abs() > crate::quantum::STRUCTURAL_TOL
    {
        return Err(Error::InvalidProbability(total));
    }
    Ok(())
}

/// Sequential sampler for a [`Process2Behaviour`].
///
/// Inputs are pulled from the [`InputSource`] one round at a time, after the
/// previous round's outputs are recorded.
pub struct Process2Executor<'a> {
    behaviour: &'a dyn Process2Behaviour,
    snapshots: bool,
}

impl<'a> Process2Executor<'a> {
    pub fn new(behaviour: &'a dyn Process2Behaviour) -> Self {
        Self {
            behaviour,
            snapshots: false,
        }
    }

    pub fn with_snapshots(mut self, on: bool) -> Self {
        self.snapshots = on;
        self
    }

    pub fn run<R: Rng + ?Sized>(
        &self,
        n: usize,
        source: &mut dyn InputSource,
        rng: &mut R,
    ) -> Result<DeviceTrace> {
        if n == 0 {
            return Err(Error::RoundCountMismatch {
                expected: 1,
                actual: 0,
            });
        }
        let b = self.behaviour;
        let mut state = DeviceState::initial();
        let mut trace = DeviceTrace {
            rounds: Vec::with_capacity(n),
            snapshots: Vec::new(),
        };
        let [ra, rb] = register_labels();
        for round in 1..=n {
            let input = source.next_input(round, &trace.rounds);
            let preps = b.prepare(round, &state.eve);
            validate_preparations(round, &preps)?;
            let prep = pick(&preps, rng.random::<f64>());
            let rho = pre_measurement(b, round, &state.memory, &prep.state)?;
            if self.snapshots {
                trace.snapshots.push(Snapshot {
                    round,
                    pre_measurement: rho.clone(),
                });
            }
            let ia = b.instrument(Party::Alice, round, input.alice);
            let ib = b.instrument(Party::Bob, round, input.bob);
            let ma = measure_with(&rho, ra.clone(), &ia, rng.random::<f64>())?;
            let mb = measure_with(&ma.post_state, rb.clone(), &ib, rng.random::<f64>())?;
            state = DeviceState {
                eve: prep.eve.clone(),
                memory: [
                    next_memory(b.memory_update(Party::Alice, round), Party::Alice, input.alice, &ia, ma.outcome)?,
                    next_memory(b.memory_update(Party::Bob, round), Party::Bob, input.bob, &ib, mb.outcome)?,
                ],
            };
            trace.rounds.push(RoundRecord {
                round,
                input_a: input.alice,
                input_b: input.bob,
                output_a: ma.outcome,
                output_b: mb.outcome,
                announced: Announced::default(),
            });
        }
        Ok(trace)
    }
}

fn pick(preps: &[Preparation], u: f64) -> &Preparation {
    let mut acc = 0.0;
    for p in preps {
        acc += p.probability;
        if u < acc {
            return p;
        }
    }
    preps.last().expect("validated non-empty")
}

/// Samples one execution on a fixed input sequence.
pub fn run_process2<R: Rng + ?Sized>(
    behaviour: &dyn Process2Behaviour,
    inputs: &[RoundInput],
    rng: &mut R,
) -> Result<DeviceTrace> {
    let mut source = super::fixed_inputs(inputs);
    Process2Executor::new(behaviour).run(inputs.len(), &mut source, rng)
}

/// Exact output distribution by enumerating every preparation and
/// measurement branch.
pub fn enumerate_process2(
    behaviour: &dyn Process2Behaviour,
    inputs: &[RoundInput],
    budget: usize,
) -> Result<OutputDistribution> {
    check_packable(inputs.len())?;
    let [ra, rb] = register_labels();
    let mut live: Vec<(f64, u64, DeviceState)> = vec![(1.0, 0, DeviceState::initial())];
    for (j, input) in inputs.iter().enumerate() {
        let round = j + 1;
        let ia = behaviour.instrument(Party::Alice, round, input.alice);
        let ib = behaviour.instrument(Party::Bob, round, input.bob);
        let ua = behaviour.memory_update(Party::Alice, round);
        let ub = behaviour.memory_update(Party::Bob, round);
        let mut next = Vec::with_capacity(live.len() * 4);
        for (p, key, state) in &live {
            let preps = behaviour.prepare(round, &state.eve);
            validate_preparations(round, &preps)?;
            for prep in preps.iter().filter(|q| q.probability > 0.0) {
                let rho = pre_measurement(behaviour, round, &state.memory, &prep.state)?;
                for ba in branches(&rho, &ra, &ia)? {
                    let Some(post_a) = ba.post_state else { continue };
                    for bb in branches(&post_a, &rb, &ib)? {
                        if bb.post_state.is_none() {
                            continue;
                        }
                        let k = key
                            | ((ba.outcome as u64) << (2 * j))
                            | ((bb.outcome as u64) << (2 * j + 1));
                        next.push((
                            p * prep.probability * ba.probability * bb.probability,
                            k,
                            DeviceState {
                                eve: prep.eve.clone(),
                                memory: [
                                    next_memory(ua, Party::Alice, input.alice, &ia, ba.outcome)?,
                                    next_memory(ub, Party::Bob, input.bob, &ib, bb.outcome)?,
                                ],
                            },
                        ));
                    }
                }
            }
        }
        if next.len() > budget {
            return Err(Error::EnumerationBudgetExceeded(format!(
                "{} live branches after round {round} (budget {budget})",
                next.len()
            )));
        }
        live = next;
    }
    let mut dist = OutputDistribution::new(inputs.len());
    for (p, key, _) in live {
        dist.add(key, p);
    }
    Ok(dist)
}
