use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    postprocess, record_error, PaLength, ProtocolKind, PublicEvent, PublicLog, TestStatistics, Transcript,
};
use crate::devices::{Device, Party, RoundInput, RoundRecord};
use crate::quantum::Basis;
use crate::rng::stream_from_u64;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleConfig {
    pub n_pairs: usize,
    #[serde(default = "default_pa")]
    pub pa_output_length: PaLength,
}

fn default_pa() -> PaLength {
    PaLength::AUTO
}

impl ExampleConfig {
    pub fn new(n_pairs: usize) -> Self {
        Self {
            n_pairs,
            pa_output_length: PaLength::AUTO,
        }
    }

    pub fn n_rounds(&self) -> usize {
        2 * self.n_pairs
    }
}

/// Odd rounds: independent uniform X/Z per party, outputs kept. Even rounds:
/// the preceding round's bases again, outputs announced right away. Even-round
/// data is then ignored and the odd rounds go through BB84 postprocessing:
/// basis announcements, sifting on matched bases, statistics per basis from
/// the error-correction oracle, privacy amplification.
///
/// Only outcomes are announced for even rounds; their bases follow from the
/// odd-round basis announcements.
pub fn run_example_protocol<R: Rng + ?Sized>(
    config: &ExampleConfig,
    device: &Device,
    rng: &mut R,
) -> Result<Transcript> {
    if config.n_pairs == 0 {
        return Err(Error::InvalidConfig("n_pairs must be positive".into()));
    }
    let n = config.n_rounds();
    if let Some(fixed) = device.fixed_rounds() {
        if fixed % 2 == 1 {
            return Err(Error::LengthViolation(format!(
                "example protocol needs an even round count, device has {fixed}"
            )));
        }
    }
    device.check_rounds(n)?;
    let mut device_rng = stream_from_u64(rng.random());
    let mut source = |round: usize, done: &[RoundRecord]| {
        if round % 2 == 1 {
            let pick = |r: &mut R| if r.random::<bool>() { Basis::Z } else { Basis::X };
            let alice = pick(rng);
            RoundInput::new(alice, pick(rng))
        } else {
            done[round - 2].input()
        }
    };
    let mut rounds = device.run(n, &mut source, &mut device_rng)?.rounds;

    let mut log = PublicLog::new();
    for j in (2..=n).step_by(2) {
        for party in Party::BOTH {
            let bit = rounds[j - 1].output(party);
            log.push(j, PublicEvent::Output { round: j, party, bit }, &mut rounds);
        }
    }
    let odd: Vec<usize> = (1..=n).step_by(2).collect();
    log.announce_bases(n, &odd, &mut rounds);

    let key_rounds: Vec<usize> = odd
        .iter()
        .copied()
        .filter(|&j| rounds[j - 1].input_a == rounds[j - 1].input_b)
        .collect();
    let sifted_key_a: Vec<u8> = key_rounds.iter().map(|&j| rounds[j - 1].output_a).collect();
    let sifted_key_b: Vec<u8> = key_rounds.iter().map(|&j| rounds[j - 1].output_b).collect();
    let mut stats = TestStatistics::default();
    for &j in &key_rounds {
        let r = &rounds[j - 1];
        record_error(&mut stats, r.input_a, r.output_a, r.output_b);
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
        protocol: ProtocolKind::ExampleProtocol,
        rounds,
        public_log: log.into_inner(),
        test_rounds: Vec::new(),
        key_rounds,
        sifted_key_a,
        sifted_key_b,
        test_statistics: stats,
        pa_seed,
        final_key,
    })
}
