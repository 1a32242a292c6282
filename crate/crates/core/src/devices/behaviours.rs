use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{EveMemory, MemoryUpdate, Party, Preparation, Process2Behaviour};
use crate::quantum::{bell_state, Basis, CMatrix, Channel, DensityOperator, Instrument, C64};
use crate::Result;

fn bell_density() -> DensityOperator {
    DensityOperator::from(&bell_state("A", "B").expect("fresh labels"))
}

/// State Eve sends when the devices ignore the incoming qubits.
fn placeholder() -> DensityOperator {
    DensityOperator::from(
        &crate::quantum::StateVector::basis_state(&[0, 0], &["A", "B"]).expect("fresh labels"),
    )
}

/// Discard and swap-in channels for both parties.
#[derive(Debug, Clone)]
struct ChannelSet {
    discard: [Channel; 2],
    swap: [Channel; 2],
}

impl ChannelSet {
    fn new() -> Self {
        let build = |f: fn(Party) -> Result<Channel>| Party::BOTH.map(|p| f(p).expect("valid labels"));
        Self {
            discard: build(|p| Channel::discard_memory(p.memory_register(), p.register(), None)),
            swap: build(|p| Channel::swap_in_memory(p.memory_register(), p.register())),
        }
    }
}

/// Honest source: a fresh |Φ+> every round, no memory.
#[derive(Debug, Clone)]
pub struct IidBell {
    bell: DensityOperator,
    channels: ChannelSet,
}

pub fn iid_bell() -> IidBell {
    IidBell {
        bell: bell_density(),
        channels: ChannelSet::new(),
    }
}

impl Process2Behaviour for IidBell {
    fn id(&self) -> &str {
        "iid_bell"
    }

    fn prepare(&self, _round: usize, eve: &EveMemory) -> Vec<Preparation> {
        vec![Preparation::certain(self.bell.clone(), eve.clone())]
    }

    fn memory_channel(&self, party: Party, _round: usize) -> &Channel {
        &self.channels.discard[party.index()]
    }

    fn memory_update(&self, _party: Party, _round: usize) -> MemoryUpdate {
        MemoryUpdate::Discard
    }

    fn ebit_budget(&self, rounds: usize) -> Option<usize> {
        Some(rounds)
    }
}

/// Bit a basis input is written as when the device echoes it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EchoEncoding {
    pub x: u8,
    pub z: u8,
}

impl Default for EchoEncoding {
    fn default() -> Self {
        Self { x: 0, z: 1 }
    }
}

impl EchoEncoding {
    pub fn encode(&self, b: Basis) -> u8 {
        match b {
            Basis::X => self.x,
            Basis::Z => self.z,
        }
    }
}

/// Round 1 gives uniform outputs; every later round outputs the party's own
/// input from the round before. The measurement ignores the input and reads
/// the memory register in Z.
#[derive(Debug, Clone)]
pub struct EchoSignalling {
    encoding: EchoEncoding,
    mixed: DensityOperator,
    idle: DensityOperator,
    channels: ChannelSet,
}

pub fn echo_signalling() -> EchoSignalling {
    echo_signalling_with(EchoEncoding::default())
}

pub fn echo_signalling_with(encoding: EchoEncoding) -> EchoSignalling {
    EchoSignalling {
        encoding,
        mixed: DensityOperator::maximally_mixed(&["A", "B"]).expect("fresh labels"),
        idle: placeholder(),
        channels: ChannelSet::new(),
    }
}

impl EchoSignalling {
    pub fn encoding(&self) -> EchoEncoding {
        self.encoding
    }
}

impl Process2Behaviour for EchoSignalling {
    fn id(&self) -> &str {
        "echo"
    }

    fn prepare(&self, round: usize, eve: &EveMemory) -> Vec<Preparation> {
        let state = if round == 1 { &self.mixed } else { &self.idle };
        vec![Preparation::certain(state.clone(), eve.clone())]
    }

    fn memory_channel(&self, party: Party, round: usize) -> &Channel {
        if round == 1 {
            &self.channels.discard[party.index()]
        } else {
            &self.channels.swap[party.index()]
        }
    }

    fn instrument(&self, _party: Party, _round: usize, input: Basis) -> Instrument {
        Instrument::relabelled(input, Basis::Z)
    }

    fn memory_update(&self, _party: Party, _round: usize) -> MemoryUpdate {
        MemoryUpdate::RecordInput {
            x: self.encoding.x,
            z: self.encoding.z,
        }
    }

    fn ebit_budget(&self, _rounds: usize) -> Option<usize> {
        Some(0)
    }
}

/// One |Φ+> in round 1; afterwards each side swaps its retained
/// post-measurement qubit back in and measures it again.
#[derive(Debug, Clone)]
pub struct RetainRemeasure {
    bell: DensityOperator,
    idle: DensityOperator,
    channels: ChannelSet,
}

pub fn retain_remeasure() -> RetainRemeasure {
    RetainRemeasure {
        bell: bell_density(),
        idle: placeholder(),
        channels: ChannelSet::new(),
    }
}

impl Process2Behaviour for RetainRemeasure {
    fn id(&self) -> &str {
        "retain_remeasure"
    }

    fn prepare(&self, round: usize, eve: &EveMemory) -> Vec<Preparation> {
        let state = if round == 1 { &self.bell } else { &self.idle };
        vec![Preparation::certain(state.clone(), eve.clone())]
    }

    fn memory_channel(&self, party: Party, round: usize) -> &Channel {
        if round == 1 {
            &self.channels.discard[party.index()]
        } else {
            &self.channels.swap[party.index()]
        }
    }

    fn memory_update(&self, _party: Party, _round: usize) -> MemoryUpdate {
        MemoryUpdate::RetainPostMeasurement
    }

    fn ebit_budget(&self, _rounds: usize) -> Option<usize> {
        Some(1)
    }
}

/// Odd rounds measure a fresh |Φ+> honestly and keep the post-measurement
/// qubit; even rounds measure that qubit again. When the even-round basis
/// repeats the odd-round basis, the even output copies the odd one.
#[derive(Debug, Clone)]
pub struct EvenRoundCopier {
    bell: DensityOperator,
    idle: DensityOperator,
    channels: ChannelSet,
}

pub fn even_round_copier() -> EvenRoundCopier {
    EvenRoundCopier {
        bell: bell_density(),
        idle: placeholder(),
        channels: ChannelSet::new(),
    }
}

impl Process2Behaviour for EvenRoundCopier {
    fn id(&self) -> &str {
        "even_copier"
    }

    fn prepare(&self, round: usize, eve: &EveMemory) -> Vec<Preparation> {
        let state = if round % 2 == 1 { &self.bell } else { &self.idle };
        vec![Preparation::certain(state.clone(), eve.clone())]
    }

    fn memory_channel(&self, party: Party, round: usize) -> &Channel {
        if round % 2 == 1 {
            &self.channels.discard[party.index()]
        } else {
            &self.channels.swap[party.index()]
        }
    }

    fn memory_update(&self, _party: Party, round: usize) -> MemoryUpdate {
        if round % 2 == 1 {
            MemoryUpdate::RetainPostMeasurement
        } else {
            MemoryUpdate::Discard
        }
    }

    fn ebit_budget(&self, rounds: usize) -> Option<usize> {
        Some(rounds.div_ceil(2))
    }
}

/// Randomly generated behaviour whose memory channels ignore the memory
/// register: each round depolarizes the fresh qubit, and Eve may pick one of
/// two state families with a coin flipped in round 1.
#[derive(Debug, Clone)]
pub struct RandomTrivialMemory {
    id: String,
    /// `families[c][t]` is the round state for coin `c`, period slot `t`.
    families: Vec<Vec<DensityOperator>>,
    coin: Option<f64>,
    /// `instruments[party][t][basis]`.
    instruments: [Vec<[Instrument; 2]>; 2],
    channels: [Channel; 2],
}

/// Defaults: period 3, depolarizing strength 0.2, coin bias 0.3.
pub fn random_trivial_memory(seed: u64) -> RandomTrivialMemory {
    RandomTrivialMemory::new(seed, 3, 0.2, Some(0.3)).expect("valid defaults")
}

impl RandomTrivialMemory {
    pub fn new(seed: u64, period: usize, depolarizing: f64, coin: Option<f64>) -> Result<Self> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let period = period.max(1);
        let n_families = if coin.is_some() { 2 } else { 1 };
        let families = (0..n_families)
            .map(|_| (0..period).map(|_| random_density(&mut rng)).collect())
            .collect();
        let mut draw = || -> Vec<[Instrument; 2]> {
            (0..period)
                .map(|_| Basis::ALL.map(|b| Instrument::random(b, &mut rng)))
                .collect()
        };
        let instruments = [draw(), draw()];
        let mut channels = Vec::with_capacity(2);
        for p in Party::BOTH {
            let dep = Channel::depolarizing(p.register(), depolarizing)?;
            channels.push(Channel::discard_memory(p.memory_register(), p.register(), Some(&dep))?);
        }
        let channels: [Channel; 2] = channels.try_into().expect("two parties");
        Ok(Self {
            id: format!("random_trivial_{seed}"),
            families,
            coin,
            instruments,
            channels,
        })
    }

    fn period(&self) -> usize {
        self.families[0].len()
    }
}

/// Ginibre-random two-qubit density operator on `A`,`B`.
pub(crate) fn random_density<R: Rng + ?Sized>(rng: &mut R) -> DensityOperator {
    random_density_on(rng, &["A", "B"])
}

pub(crate) fn random_density_on<R: Rng + ?Sized>(rng: &mut R, labels: &[&str]) -> DensityOperator {
    let d = 1usize << labels.len();
    let g = CMatrix::from_fn(d, d, |_, _| {
        C64::new(crate::rng::standard_normal(rng), crate::rng::standard_normal(rng))
    });
    let mut m = &g * g.adjoint();
    let tr = m.trace().re;
    m /= C64::new(tr, 0.0);
    // Exact hermiticity after rounding.
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    DensityOperator::new(m, labels).expect("Ginibre matrices are valid states")
}

impl Process2Behaviour for RandomTrivialMemory {
    fn id(&self) -> &str {
        &self.id
    }

    fn prepare(&self, round: usize, eve: &EveMemory) -> Vec<Preparation> {
        let slot = (round - 1) % self.period();
        match self.coin {
            Some(q) if round == 1 => (0..2)
                .map(|c| Preparation {
                    probability: if c == 1 { q } else { 1.0 - q },
                    state: self.families[c][slot].clone(),
                    eve: EveMemory(vec![c as u64]),
                })
                .collect(),
            _ => {
                let c = eve.0.first().copied().unwrap_or(0) as usize;
                vec![Preparation::certain(
                    self.families[c.min(self.families.len() - 1)][slot].clone(),
                    eve.clone(),
                )]
            }
        }
    }

    fn memory_channel(&self, party: Party, _round: usize) -> &Channel {
        &self.channels[party.index()]
    }

    fn instrument(&self, party: Party, round: usize, input: Basis) -> Instrument {
        self.instruments[party.index()][(round - 1) % self.period()][input.index()].clone()
    }

    fn memory_update(&self, _party: Party, _round: usize) -> MemoryUpdate {
        // The channels ignore it, so retaining is harmless and exercises the check.
        MemoryUpdate::RetainPostMeasurement
    }
}

/// Wraps a behaviour so every measurement is the trusted X/Z instrument
/// chosen by the input.
#[derive(Debug, Clone)]
pub struct TrustedMeasurements {
    inner: Arc<dyn Process2Behaviour>,
    id: String,
}

impl TrustedMeasurements {
    pub fn new(inner: Arc<dyn Process2Behaviour>) -> Self {
        let id = format!("{}+trusted", inner.id());
        Self { inner, id }
    }
}

impl Process2Behaviour for TrustedMeasurements {
    fn id(&self) -> &str {
        &self.id
    }

    fn prepare(&self, round: usize, eve: &EveMemory) -> Vec<Preparation> {
        self.inner.prepare(round, eve)
    }

    fn memory_channel(&self, party: Party, round: usize) -> &Channel {
        self.inner.memory_channel(party, round)
    }

    fn memory_update(&self, party: Party, round: usize) -> MemoryUpdate {
        self.inner.memory_update(party, round)
    }

    fn ebit_budget(&self, rounds: usize) -> Option<usize> {
        self.inner.ebit_budget(rounds)
    }
}
