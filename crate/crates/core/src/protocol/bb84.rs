use std::collections::BTreeSet;

use rand::Rng;

use super::{
    postprocess, record_error, select_test_rounds, ProtocolConfig, ProtocolKind, PublicEvent, PublicLog,
    TestSelection, TestStatistics, Transcript,
};
use crate::devices::{Device, RoundInput, RoundRecord};
use crate::quantum::Basis;
use crate::rng::stream_from_u64;
use crate::Result;

fn key_round_input<R: Rng + ?Sized>(config: &ProtocolConfig, rng: &mut R) -> RoundInput {
    let mut pick = || {
        if rng.random::<f64>() < config.basis_bias {
            config.key_basis
        } else {
            config.key_basis.other()
        }
    };
    let alice = pick();
    let bob = pick();
    RoundInput::new(alice, bob)
}

/// Entanglement-based BB84.
///
/// Test rounds are measured in X by both parties. Key rounds use the key
/// basis with probability `basis_bias` per party. Test indices and bases are
/// announced once every round has been measured. X statistics come from the
/// test rounds; key-basis statistics come from the error-correction oracle
/// comparing the sifted keys (recorded under Z only when the key basis is Z).
pub fn run_bb84<R: Rng + ?Sized>(config: &ProtocolConfig, device: &Device, rng: &mut R) -> Result<Transcript> {
    config.validate()?;
    let n = config.n_rounds;
    device.check_rounds(n)?;
    let mut device_rng = stream_from_u64(rng.random());

    let mut is_test = vec![false; n + 1];
    let trace = match config.test_selection {
        TestSelection::FixedSubset { .. } => {
            // Committed before round 1.
            let tests = select_test_rounds(config.test_selection, n, rng)?;
            let inputs: Vec<RoundInput> = (1..=n)
                .map(|j| {
                    if tests.contains(&j) {
                        RoundInput::both(Basis::X)
                    } else {
                        key_round_input(config, rng)
                    }
                })
                .collect();
            for &j in &tests {
                is_test[j] = true;
            }
            let mut source = crate::devices::fixed_inputs(&inputs);
            device.run(n, &mut source, &mut device_rng)?
        }
        TestSelection::SpotCheck { gamma } => {
            let mut source = |round: usize, _: &[RoundRecord]| {
                if rng.random::<f64>() < gamma {
                    is_test[round] = true;
                    RoundInput::both(Basis::X)
                } else {
                    key_round_input(config, rng)
                }
            };
            device.run(n, &mut source, &mut device_rng)?
        }
    };
    let mut rounds = trace.rounds;
    let tests: BTreeSet<usize> = (1..=n).filter(|&j| is_test[j]).collect();

    let mut log = PublicLog::new();
    log.push(
        n,
        PublicEvent::TestRounds {
            rounds: tests.iter().copied().collect(),
        },
        &mut rounds,
    );
    let all: Vec<usize> = (1..=n).collect();
    log.announce_bases(n, &all, &mut rounds);

    let mut stats = TestStatistics::default();
    let mut key_rounds = Vec::new();
    for rec in &rounds {
        if tests.contains(&rec.round) {
            record_error(&mut stats, Basis::X, rec.output_a, rec.output_b);
        } else if rec.input_a == config.key_basis && rec.input_b == config.key_basis {
            key_rounds.push(rec.round);
        }
    }
    let sifted_key_a: Vec<u8> = key_rounds.iter().map(|&j| rounds[j - 1].output_a).collect();
    let sifted_key_b: Vec<u8> = key_rounds.iter().map(|&j| rounds[j - 1].output_b).collect();
    if config.key_basis == Basis::Z {
        for (a, b) in sifted_key_a.iter().zip(&sifted_key_b) {
            record_error(&mut stats, Basis::Z, *a, *b);
        }
    }
    let (pa_seed, final_key) = postprocess(
        &sifted_key_a,
        &stats,
        config.pa_output_length,
        &mut log,
        n,
        &mut rounds,
        rng,
    )?;
    Ok(Transcript {
        protocol: ProtocolKind::Bb84,
        rounds,
        public_log: log.into_inner(),
        test_rounds: tests.into_iter().collect(),
        key_rounds,
        sifted_key_a,
        sifted_key_b,
        test_statistics: stats,
        pa_seed,
        final_key,
    })
}
