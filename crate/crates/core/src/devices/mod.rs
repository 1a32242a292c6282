//! Device models.
//!
//! A [`Process1Spec`] fixes one joint state over every round's registers up
//! front; each round's measurement acts on its own tensor factors. A
//! [`Process2Behaviour`] instead produces rounds one at a time: Eve prepares
//! the round state, each device runs a memory channel over its previous
//! memory register and the fresh qubit, measures, and writes a new memory
//! register for the next round.

mod behaviours;
mod compile;
mod distribution;
mod process1;
mod process2;
pub mod registry;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::quantum::{Basis, Label};
use crate::Result;

pub use behaviours::{
    echo_signalling, echo_signalling_with, even_round_copier, iid_bell, random_trivial_memory,
    retain_remeasure, EchoEncoding, EchoSignalling, EvenRoundCopier, IidBell, RandomTrivialMemory,
    RetainRemeasure, TrustedMeasurements,
};
pub use compile::{compile_trivial_memory, DEFAULT_COMPONENT_BUDGET};
pub use distribution::{
    all_input_sequences, pack_inputs, tv_distance, unpack_inputs, OutputDistribution, MAX_PACKED_ROUNDS,
};
pub use process1::{classical_copy, run_process1, JointState, Process1Spec, ProductComponent};
pub use process2::{
    enumerate_process2, run_process2, EveMemory, MemoryUpdate, Preparation, Process2Behaviour,
    Process2Executor, Snapshot, DEFAULT_BRANCH_BUDGET,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub const BOTH: [Party; 2] = [Party::Alice, Party::Bob];

    pub fn index(self) -> usize {
        match self {
            Party::Alice => 0,
            Party::Bob => 1,
        }
    }

    /// Register holding this party's qubit during one sequential round.
    pub fn register(self) -> Label {
        Label::new(match self {
            Party::Alice => "A",
            Party::Bob => "B",
        })
    }

    /// Register carrying this party's device memory between rounds.
    pub fn memory_register(self) -> Label {
        Label::new(match self {
            Party::Alice => "MA",
            Party::Bob => "MB",
        })
    }

    /// Register of round `round` in a joint (all-rounds) state.
    pub fn round_register(self, round: usize) -> Label {
        Label::new(match self {
            Party::Alice => format!("A{round}"),
            Party::Bob => format!("B{round}"),
        })
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Alice => f.write_str("alice"),
            Party::Bob => f.write_str("bob"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RoundInput {
    pub alice: Basis,
    pub bob: Basis,
}

impl RoundInput {
    pub fn new(alice: Basis, bob: Basis) -> Self {
        Self { alice, bob }
    }

    pub fn both(basis: Basis) -> Self {
        Self::new(basis, basis)
    }

    pub fn get(&self, party: Party) -> Basis {
        match party {
            Party::Alice => self.alice,
            Party::Bob => self.bob,
        }
    }
}

/// Which fields of a round were made public.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Announced {
    pub input_a: bool,
    pub input_b: bool,
    pub output_a: bool,
    pub output_b: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based.
    pub round: usize,
    pub input_a: Basis,
    pub input_b: Basis,
    pub output_a: u8,
    pub output_b: u8,
    pub announced: Announced,
}

impl RoundRecord {
    pub fn input(&self) -> RoundInput {
        RoundInput::new(self.input_a, self.input_b)
    }

    pub fn output(&self, party: Party) -> u8 {
        match party {
            Party::Alice => self.output_a,
            Party::Bob => self.output_b,
        }
    }

    pub fn basis(&self, party: Party) -> Basis {
        match party {
            Party::Alice => self.input_a,
            Party::Bob => self.input_b,
        }
    }
}

/// Output of one device execution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeviceTrace {
    pub rounds: Vec<RoundRecord>,
    /// Debug-only internal states; empty unless requested from the executor.
    pub snapshots: Vec<Snapshot>,
}

impl DeviceTrace {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// Outputs packed like [`OutputDistribution`] keys.
    pub fn output_key(&self) -> u64 {
        self.rounds.iter().enumerate().fold(0u64, |acc, (j, r)| {
            acc | ((r.output_a as u64) << (2 * j)) | ((r.output_b as u64) << (2 * j + 1))
        })
    }

    pub fn inputs(&self) -> Vec<RoundInput> {
        self.rounds.iter().map(RoundRecord::input).collect()
    }
}

/// Supplies the inputs of round `round` once every earlier round has finished.
pub trait InputSource {
    fn next_input(&mut self, round: usize, completed: &[RoundRecord]) -> RoundInput;
}

impl<F: FnMut(usize, &[RoundRecord]) -> RoundInput> InputSource for F {
    fn next_input(&mut self, round: usize, completed: &[RoundRecord]) -> RoundInput {
        self(round, completed)
    }
}

/// Input source replaying a precomputed sequence.
pub fn fixed_inputs(inputs: &[RoundInput]) -> impl FnMut(usize, &[RoundRecord]) -> RoundInput + '_ {
    move |round, _| inputs[round - 1]
}

/// Either kind of device model.
#[derive(Clone)]
pub enum Device {
    Sequential(Arc<dyn Process2Behaviour>),
    Joint(Arc<Process1Spec>),
}

impl fmt::Debug for Device {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Device::Sequential(b) => write!(f, "Sequential({})", b.id()),
            Device::Joint(s) => write!(f, "Joint({}, {} rounds)", s.id(), s.rounds()),
        }
    }
}

impl Device {
    pub fn sequential(b: impl Process2Behaviour + 'static) -> Self {
        Device::Sequential(Arc::new(b))
    }

    pub fn joint(spec: Process1Spec) -> Self {
        Device::Joint(Arc::new(spec))
    }

    pub fn id(&self) -> &str {
        match self {
            Device::Sequential(b) => b.id(),
            Device::Joint(s) => s.id(),
        }
    }

    /// Round count fixed by the model, if any.
    pub fn fixed_rounds(&self) -> Option<usize> {
        match self {
            Device::Sequential(_) => None,
            Device::Joint(s) => Some(s.rounds()),
        }
    }

    pub fn check_rounds(&self, n: usize) -> Result<()> {
        match self.fixed_rounds() {
            Some(expected) if expected != n => Err(crate::Error::RoundCountMismatch {
                expected,
                actual: n,
            }),
            _ => Ok(()),
        }
    }

    pub fn run<R: Rng + ?Sized>(
        &self,
        n: usize,
        source: &mut dyn InputSource,
        rng: &mut R,
    ) -> Result<DeviceTrace> {
        match self {
            Device::Sequential(b) => Process2Executor::new(b.as_ref()).run(n, source, rng),
            Device::Joint(s) => {
                self.check_rounds(n)?;
                s.run_with(source, rng)
            }
        }
    }

    /// Exact output distribution for a fixed input sequence.
    pub fn exact_distribution(&self, inputs: &[RoundInput]) -> Result<OutputDistribution> {
        match self {
            Device::Sequential(b) => enumerate_process2(b.as_ref(), inputs, DEFAULT_BRANCH_BUDGET),
            Device::Joint(s) => s.exact_distribution(inputs),
        }
    }

    pub fn ebit_budget(&self, n: usize) -> Option<usize> {
        match self {
            Device::Sequential(b) => b.ebit_budget(n),
            Device::Joint(s) => s.ebit_budget(),
        }
    }

    /// Same device with every measurement replaced by the trusted X/Z instrument.
    pub fn trusted(&self) -> Device {
        match self {
            Device::Sequential(b) => Device::sequential(TrustedMeasurements::new(b.clone())),
            Device::Joint(s) => Device::joint(s.with_trusted_instruments()),
        }
    }
}

#[cfg(test)]
mod tests;
