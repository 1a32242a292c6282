use super::process1::{JointState, Process1Spec, ProductComponent};
use super::{EveMemory, Party, Process2Behaviour};
use crate::quantum::{Basis, DensityOperator, StateVector, STRUCTURAL_TOL};
use crate::{Error, Result};

/// Ceiling on the number of Eve preparation paths a compile may expand.
pub const DEFAULT_COMPONENT_BUDGET: usize = 1 << 12;

/// Rewrites a sequential behaviour whose memory channels ignore the memory
/// register as a joint-state spec over `rounds` rounds.
///
/// Each Eve preparation path becomes one product component; round `j`'s
/// block is the prepared state pushed through both memory channels (fed an
/// arbitrary memory state, which they ignore), relabelled to `Aj`, `Bj`.
pub fn compile_trivial_memory(
    behaviour: &dyn Process2Behaviour,
    rounds: usize,
) -> Result<Process1Spec> {
    for round in 1..=rounds {
        for party in Party::BOTH {
            let ch = behaviour.memory_channel(party, round);
            if !ch.ignores_inputs(&[party.memory_register()], STRUCTURAL_TOL)? {
                return Err(Error::MemoryNotTrivial { party, round });
            }
        }
    }
    let blank = Party::BOTH.map(|p| StateVector::eigenstate(Basis::Z, 0, p.memory_register()));
    let mut paths: Vec<(f64, EveMemory, Vec<DensityOperator>)> =
        vec![(1.0, EveMemory::default(), Vec::with_capacity(rounds))];
    for round in 1..=rounds {
        let mut next = Vec::with_capacity(paths.len());
        for (w, eve, blocks) in &paths {
            for prep in behaviour.prepare(round, eve) {
                if prep.probability <= 0.0 {
                    continue;
                }
                let mut rho = prep.state.clone();
                for party in Party::BOTH {
                    let ch = behaviour.memory_channel(party, round);
                    rho = ch.absorb_input(&blank[party.index()])?.apply(&rho)?;
                }
                let rho = rho
                    .relabel(&Party::Alice.register(), Party::Alice.round_register(round))?
                    .relabel(&Party::Bob.register(), Party::Bob.round_register(round))?;
                let mut b = blocks.clone();
                b.push(rho);
                next.push((w * prep.probability, prep.eve, b));
            }
        }
        if next.len() > DEFAULT_COMPONENT_BUDGET {
            return Err(Error::EnumerationBudgetExceeded(format!(
                "{} preparation paths after round {round}",
                next.len()
            )));
        }
        paths = next;
    }
    let components = paths
        .into_iter()
        .map(|(weight, _, blocks)| ProductComponent { weight, blocks })
        .collect();
    let spec = Process1Spec::new(
        format!("{}+compiled", behaviour.id()),
        rounds,
        JointState::new(components)?,
    )?
    .with_ebit_budget(behaviour.ebit_budget(rounds));
    spec.with_instruments(|p, j, b| behaviour.instrument(p, j, b))
}
