//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use common::*;
use memlab::analysis::stats::chi_squared_two_sample;
use memlab::analysis::{
    contradiction_report, eve_guessing, signalling_measure, test_subset_consistency, ExactTable, GuessStrategy,
    MapDecoder,
};
use memlab::devices::{
    classical_copy, compile_trivial_memory, echo_signalling, enumerate_process2, even_round_copier, fixed_inputs,
    iid_bell, random_trivial_memory, retain_remeasure, unpack_inputs, Device, OutputDistribution, Process1Spec,
    Process2Behaviour, DEFAULT_BRANCH_BUDGET,
};
use memlab::protocol::{run_example_protocol, ExampleConfig};
use memlab::quantum::{
    measure, measure_all_branches, partial_trace, tensor, CMatrix, DensityOperator, QuantumState, StateVector,
};
use memlab::rng::trial_rng;
use memlab::{Basis, Error, Party, Result, RoundInput};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_611;

type Check = std::result::Result<String, String>;

type Criterion = (&'static str, Duration, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn lift<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn all_equal_outputs() -> Check {
    let device = Device::sequential(retain_remeasure());
    let inputs = vec![RoundInput::both(Basis::X); 10];
    let trials = 10_000u64;
    let mut zeros = 0u64;
    for trial in 0..trials {
        let mut src = fixed_inputs(&inputs);
        let t = lift(device.run(10, &mut src, &mut trial_rng(SEED, trial)))?;
        let key = t.output_key();
        ensure(key == 0 || key == (1 << 20) - 1, format!("trial {trial}: mixed outputs {key:#x}"))?;
        zeros += u64::from(key == 0);
    }
    let frac = zeros as f64 / trials as f64;
    ensure((0.485..=0.515).contains(&frac), format!("all-zero fraction {frac}"))?;
    Ok(format!("10000/10000 all-equal, all-zero fraction {frac:.4}"))
}

fn contradiction() -> Check {
    let r = lift(contradiction_report(&Device::sequential(retain_remeasure()), 8))?;
    ensure(r.naive_claim.delta_ph == 0.0, format!("delta_ph {}", r.naive_claim.delta_ph))?;
    ensure(r.naive_claim.claimed_length == 8.0, format!("claim {}", r.naive_claim.claimed_length))?;
    ensure((r.actual_shannon - 1.0).abs() <= 1e-9, format!("shannon {}", r.actual_shannon))?;
    ensure((r.actual_minentropy - 1.0).abs() <= 1e-9, format!("min-entropy {}", r.actual_minentropy))?;
    ensure(r.ebit_budget == Some(1), format!("ebit budget {:?}", r.ebit_budget))?;
    Ok(format!(
        "delta_ph 0, naive 8 bits vs actual {:.12} bits, ebit budget 1",
        r.actual_minentropy
    ))
}

fn signalling() -> Check {
    let echo = lift(signalling_measure(&lift(ExactTable::build(&Device::sequential(echo_signalling()), 3))?))?;
    ensure((echo.magnitude(2) - 1.0).abs() <= 1e-12, format!("echo round 2 {}", echo.magnitude(2)))?;
    let mut specs = vec![lift(Process1Spec::bell_product(3))?, lift(classical_copy(3))?];
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..20 {
        specs.push(lift(Process1Spec::random(3, &mut r, true))?);
    }
    let mut worst: f64 = 0.0;
    for spec in specs {
        let id = spec.id().to_string();
        let report = lift(signalling_measure(&lift(ExactTable::build(&Device::joint(spec), 3))?))?;
        ensure(report.max_magnitude() <= 1e-12, format!("{id}: {}", report.max_magnitude()))?;
        worst = worst.max(report.max_magnitude());
    }
    Ok(format!("echo round 2 = 1.0, 22 Process 1 specs max {worst:.1e}"))
}

fn copy_attack() -> Check {
    let device = Device::sequential(even_round_copier());
    let config = ExampleConfig::new(50);
    let batch = (0..1000u64)
        .map(|trial| run_example_protocol(&config, &device, &mut trial_rng(SEED, trial)))
        .collect::<Result<Vec<_>>>();
    let report = lift(eve_guessing(&lift(batch)?, &GuessStrategy::Copy))?;
    ensure(report.successes == 1000, format!("copy decoder {}/1000", report.successes))?;
    ensure(report.pa_matches == 1000, format!("pa matches {}/1000", report.pa_matches))?;

    let honest = Device::joint(lift(Process1Spec::bell_product(6))?);
    let map = lift(MapDecoder::build(&honest, 3))?;
    for l in &map.exact().by_length {
        let expected = 2f64.powi(-(l.length as i32));
        ensure((l.success - expected).abs() <= 1e-12, format!("length {}: {}", l.length, l.success))?;
    }
    Ok("copy decoder 1000/1000, PA 1000/1000; honest MAP = 2^-k for k = 0..3".into())
}

/// Categorical summary of a 20-round output: Alice's weight and the number
/// of disagreeing rounds.
fn weight_category(key: u64, n: usize) -> (u32, u32) {
    let a = OutputDistribution::party_string(key, Party::Alice, n);
    let b = OutputDistribution::party_string(key, Party::Bob, n);
    (a.count_ones(), (a ^ b).count_ones())
}

/// Rounds 1-3 and 18-20 jointly.
fn window_category(key: u64, n: usize) -> u64 {
    (key & 0x3f) | ((key >> (2 * (n - 3))) << 6)
}

fn sample_keys(device: &Device, inputs: &[RoundInput], trials: u64, stream: u64) -> Result<Vec<u64>> {
    (0..trials)
        .map(|trial| {
            let mut src = fixed_inputs(inputs);
            Ok(device.run(inputs.len(), &mut src, &mut trial_rng(stream, trial))?.output_key())
        })
        .collect()
}

fn counts<K: Ord>(keys: &[u64], f: impl Fn(u64) -> K) -> BTreeMap<K, u64> {
    let mut m = BTreeMap::new();
    for &k in keys {
        *m.entry(f(k)).or_insert(0) += 1;
    }
    m
}

fn compile_equivalence() -> Check {
    let behaviours: Vec<Box<dyn Process2Behaviour>> = vec![Box::new(iid_bell()), Box::new(random_trivial_memory(7))];
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    let mut notes = Vec::new();
    for b in behaviours {
        let id = b.id().to_string();
        let spec3 = lift(compile_trivial_memory(b.as_ref(), 3))?;
        let mut worst: f64 = 0.0;
        for setting in 0..64 {
            let inputs = unpack_inputs(setting, 3);
            let direct = lift(enumerate_process2(b.as_ref(), &inputs, DEFAULT_BRANCH_BUDGET))?;
            worst = worst.max(direct.tv_distance(&lift(spec3.exact_distribution(&inputs))?));
        }
        ensure(worst < 1e-9, format!("{id}: exact TV {worst}"))?;

        let n = 20;
        let inputs: Vec<RoundInput> = (0..n).map(|_| RoundInput::new(random_basis(&mut r), random_basis(&mut r))).collect();
        let compiled = Device::joint(lift(compile_trivial_memory(b.as_ref(), n))?);
        let direct = Device::sequential(SharedBehaviour(b));
        let a = lift(sample_keys(&direct, &inputs, 100_000, SEED))?;
        let c = lift(sample_keys(&compiled, &inputs, 100_000, SEED ^ 0x5eed))?;
        let p1 = lift(chi_squared_two_sample(&counts(&a, |k| weight_category(k, n)), &counts(&c, |k| weight_category(k, n))))?;
        let p2 = lift(chi_squared_two_sample(&counts(&a, |k| window_category(k, n)), &counts(&c, |k| window_category(k, n))))?;
        ensure(p1.p_value > 0.001 && p2.p_value > 0.001, format!("{id}: p = {:.4}, {:.4}", p1.p_value, p2.p_value))?;
        notes.push(format!("{id} TV {worst:.1e} p {:.3}/{:.3}", p1.p_value, p2.p_value));
    }
    match compile_trivial_memory(&retain_remeasure(), 3) {
        Err(Error::MemoryNotTrivial { .. }) => {}
        other => return Err(format!("retain_remeasure compiled: {:?}", other.map(|s| s.id().to_string()))),
    }
    notes.push("retain_remeasure rejected".into());
    Ok(notes.join("; "))
}

#[derive(Debug)]
struct SharedBehaviour(Box<dyn Process2Behaviour>);

impl Process2Behaviour for SharedBehaviour {
    fn id(&self) -> &str {
        self.0.id()
    }
    fn prepare(&self, round: usize, eve: &memlab::devices::EveMemory) -> Vec<memlab::devices::Preparation> {
        self.0.prepare(round, eve)
    }
    fn memory_channel(&self, party: Party, round: usize) -> &memlab::quantum::Channel {
        self.0.memory_channel(party, round)
    }
    fn instrument(&self, party: Party, round: usize, basis: Basis) -> memlab::quantum::Instrument {
        self.0.instrument(party, round, basis)
    }
    fn memory_update(&self, party: Party, round: usize) -> memlab::devices::MemoryUpdate {
        self.0.memory_update(party, round)
    }
}

fn subset_consistency() -> Check {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    let mut checked = 0;
    for n in 1..=4 {
        let mut specs = vec![lift(Process1Spec::bell_product(n))?, lift(classical_copy(n))?];
        for _ in 0..4 {
            specs.push(lift(Process1Spec::random(n, &mut r, true))?);
        }
        for spec in specs {
            let id = spec.id().to_string();
            let report = lift(test_subset_consistency(&Device::joint(spec), n))?;
            ensure(report.max_tv < 1e-9, format!("{id} n={n}: TV {}", report.max_tv))?;
            checked += 1;
        }
    }
    let retain = lift(test_subset_consistency(&Device::sequential(retain_remeasure()), 3))?;
    let w = retain.witness.ok_or("retain_remeasure: no witness")?;
    ensure(w.tv >= 0.25, format!("retain witness TV {}", w.tv))?;
    Ok(format!(
        "{checked} Process 1 specs invariant; retain witness tests {:?} TV {:.3}",
        w.test_rounds, w.tv
    ))
}

fn quantum_properties() -> Check {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    let id = CMatrix::identity(2, 2);
    for case in 0..1000 {
        let k = 1 + case % 3;
        let label = format!("q{}", case % k);
        let b = random_basis(&mut r);
        let u: f64 = rand::Rng::random(&mut r);
        let fail = |what: &str| format!("case {case}: {what}");

        let pure = random_pure(k, &mut r);
        let mixed = random_mixed(k, &mut r);
        let [b0, b1] = lift(measure_all_branches(&pure, label.as_str(), b))?;
        ensure((b0.probability + b1.probability - 1.0).abs() <= 1e-9, fail("pure branch sum"))?;
        let m = lift(measure(&mixed, label.as_str(), b, u))?;
        ensure((0.0..=1.0).contains(&m.probability), fail("probability range"))?;
        ensure((m.post_state.trace() - 1.0).abs() <= 1e-9, fail("post-state trace"))?;

        let inst = random_instrument(&mut r);
        let (p0, p1) = (inst.projector(0), inst.projector(1));
        ensure((&p0 + &p1 - &id).iter().all(|z| z.norm() <= 1e-9), fail("completeness"))?;
        ensure((&p0 * &p0 - &p0).iter().all(|z| z.norm() <= 1e-9), fail("idempotence"))?;

        let again = lift(measure_all_branches(&m.post_state, label.as_str(), b))?;
        ensure((again[m.outcome as usize].probability - 1.0).abs() <= 1e-9, fail("repeatability"))?;

        let eig = StateVector::eigenstate(b, (case % 2) as u8, "e");
        let joint = lift(tensor(&eig.to_density(), &mixed))?;
        for br in lift(measure_all_branches(&joint, "e", b.other()))? {
            ensure((br.probability - 0.5).abs() <= 1e-12, fail("unbiasedness"))?;
        }

        let other: DensityOperator = lift(random_mixed(1, &mut r).relabel(&"q0".into(), "env"))?;
        let back = lift(partial_trace(&lift(tensor(&mixed, &other))?, &labels(k)))?;
        ensure(lift(back.trace_distance(&mixed))? <= 1e-9, fail("tensor/partial trace"))?;
    }
    Ok("1000 randomized cases".into())
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("all-equal outputs under retain-and-remeasure", Duration::from_secs(10), all_equal_outputs),
        ("naive claim contradiction", Duration::from_secs(5), contradiction),
        ("signalling separation", Duration::from_secs(30), signalling),
        ("even-round copier attack", Duration::from_secs(60), copy_attack),
        ("trivial-memory compilation equivalence", Duration::from_secs(60), compile_equivalence),
        ("test-subset consistency", Duration::from_secs(30), subset_consistency),
        ("quantum property suite", Duration::from_secs(10), quantum_properties),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) if elapsed <= *limit => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over time limit {limit:?}")),
            Err(e) => ("FAIL", e),
        };
        failed += usize::from(status == "FAIL");
        println!("criterion {}: {status} {name} ({:.2}s) {detail}", i + 1, elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 7 acceptance criteria passed");
}
