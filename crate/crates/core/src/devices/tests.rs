use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::quantum::{Basis, Channel, DensityOperator};
use crate::Error;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn all(basis: Basis, n: usize) -> Vec<RoundInput> {
    vec![RoundInput::both(basis); n]
}

#[test]
fn retain_remeasure_all_outputs_equal() {
    let b = retain_remeasure();
    let mut r = rng(1);
    for basis in Basis::ALL {
        for _ in 0..200 {
            let t = run_process2(&b, &all(basis, 5), &mut r).unwrap();
            let first = t.rounds[0].output_a;
            assert!(t.rounds.iter().all(|x| x.output_a == first && x.output_b == first));
        }
    }
}

#[test]
fn retain_remeasure_exact_support() {
    let d = enumerate_process2(&retain_remeasure(), &all(Basis::X, 4), DEFAULT_BRANCH_BUDGET).unwrap();
    assert_eq!(d.len(), 2);
    assert!((d.get(0) - 0.5).abs() < 1e-12);
    assert!((d.get(0xFF) - 0.5).abs() < 1e-12);
}

#[test]
fn echo_outputs_previous_input() {
    let b = echo_signalling();
    let inputs = [RoundInput::new(Basis::X, Basis::Z), RoundInput::new(Basis::Z, Basis::X)];
    let mut r = rng(2);
    for _ in 0..50 {
        let t = run_process2(&b, &inputs, &mut r).unwrap();
        assert_eq!(t.rounds[1].output_a, 0);
        assert_eq!(t.rounds[1].output_b, 1);
    }
    let flipped = echo_signalling_with(EchoEncoding { x: 1, z: 0 });
    let t = run_process2(&flipped, &inputs, &mut r).unwrap();
    assert_eq!((t.rounds[1].output_a, t.rounds[1].output_b), (1, 0));
}

#[test]
fn echo_first_round_is_uniform() {
    let d = enumerate_process2(&echo_signalling(), &all(Basis::X, 1), 16).unwrap();
    for k in 0..4 {
        assert!((d.get(k) - 0.25).abs() < 1e-12);
    }
}

#[test]
fn iid_bell_matched_bases_agree() {
    let b = iid_bell();
    let mut r = rng(3);
    let inputs: Vec<_> = (0..40)
        .map(|j| RoundInput::new(Basis::from_index(j), Basis::from_index(j / 2)))
        .collect();
    for _ in 0..50 {
        let t = run_process2(&b, &inputs, &mut r).unwrap();
        for rec in &t.rounds {
            if rec.input_a == rec.input_b {
                assert_eq!(rec.output_a, rec.output_b);
            }
        }
    }
}

#[test]
fn even_copier_copies_when_basis_repeats() {
    let b = even_round_copier();
    let mut r = rng(4);
    for s in 0..100u64 {
        let odd = unpack_inputs(s.wrapping_mul(0x9E37_79B9_7F4A_7C15), 4);
        let inputs: Vec<_> = odd.iter().flat_map(|&i| [i, i]).collect();
        let t = run_process2(&b, &inputs, &mut r).unwrap();
        for k in 0..4 {
            assert_eq!(t.rounds[2 * k + 1].output_a, t.rounds[2 * k].output_a);
            assert_eq!(t.rounds[2 * k + 1].output_b, t.rounds[2 * k].output_b);
        }
    }
}

#[test]
fn even_copier_remeasures_in_a_new_basis() {
    let inputs = [RoundInput::both(Basis::Z), RoundInput::both(Basis::X)];
    let d = enumerate_process2(&even_round_copier(), &inputs, 64).unwrap();
    // Round-2 X outcome of a Z eigenstate is uniform and independent of round 1.
    let copied = d.marginal(|k| u64::from((k & 1) == ((k >> 2) & 1)));
    assert!((copied[&1] - 0.5).abs() < 1e-12);
}

#[test]
fn executor_requests_inputs_lazily() {
    let devices = [
        Device::sequential(iid_bell()),
        Device::sequential(retain_remeasure()),
        Device::joint(Process1Spec::bell_product(6).unwrap()),
    ];
    for d in devices {
        let mut asked = Vec::new();
        let mut source = |round: usize, done: &[RoundRecord]| {
            asked.push((round, done.len()));
            RoundInput::both(Basis::X)
        };
        d.run(6, &mut source, &mut rng(5)).unwrap();
        assert_eq!(asked, (1..=6).map(|j| (j, j - 1)).collect::<Vec<_>>());
    }
}

#[test]
fn classical_copy_outputs_all_equal() {
    let spec = classical_copy(4).unwrap();
    for inputs in all_input_sequences(4).step_by(7) {
        let d = spec.exact_distribution(&inputs).unwrap();
        assert_eq!(d.len(), 2);
        assert!((d.get(0) - 0.5).abs() < 1e-12 && (d.get(0xFF) - 0.5).abs() < 1e-12);
    }
    let t = run_process1(&spec, &all(Basis::X, 4), &mut rng(6)).unwrap();
    assert!(t.rounds.iter().all(|r| r.output_a == t.rounds[0].output_a && r.output_b == r.output_a));
}

#[test]
fn single_pair_unbiased_bases_give_uniform_outputs() {
    let spec = Process1Spec::bell_product(1).unwrap();
    let d = spec.exact_distribution(&[RoundInput::new(Basis::X, Basis::Z)]).unwrap();
    for k in 0..4 {
        assert!((d.get(k) - 0.25).abs() < 1e-12);
    }
}

#[test]
fn bell_product_matches_iid_bell_enumeration() {
    let spec = Process1Spec::bell_product(3).unwrap();
    for inputs in all_input_sequences(3) {
        let a = spec.exact_distribution(&inputs).unwrap();
        let b = enumerate_process2(&iid_bell(), &inputs, DEFAULT_BRANCH_BUDGET).unwrap();
        assert!(a.tv_distance(&b) < 1e-12);
    }
}

#[test]
fn block_route_matches_sequential_route() {
    let mut r = rng(7);
    for n in 1..=3 {
        let spec = Process1Spec::random(n, &mut r, true).unwrap();
        let order: Vec<_> = (1..=n).flat_map(|j| Party::BOTH.map(|p| (p, j))).collect();
        for inputs in all_input_sequences(n).step_by(3) {
            let a = spec.exact_distribution(&inputs).unwrap();
            let b = spec.distribution_in_order(&inputs, &order).unwrap();
            assert!(a.tv_distance(&b) < 1e-9, "n={n}");
            assert!((a.total() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn compile_rejects_retained_memory() {
    let err = compile_trivial_memory(&retain_remeasure(), 3).unwrap_err();
    assert_eq!(err, Error::MemoryNotTrivial { party: Party::Alice, round: 2 });
    assert!(matches!(
        compile_trivial_memory(&echo_signalling(), 2),
        Err(Error::MemoryNotTrivial { round: 2, .. })
    ));
}

#[test]
fn compiled_random_behaviour_matches_enumeration() {
    for seed in 0..3 {
        let b = random_trivial_memory(seed);
        let spec = compile_trivial_memory(&b, 3).unwrap();
        assert_eq!(spec.joint_state().components().len(), 2);
        for inputs in all_input_sequences(3) {
            let direct = enumerate_process2(&b, &inputs, DEFAULT_BRANCH_BUDGET).unwrap();
            let compiled = spec.exact_distribution(&inputs).unwrap();
            assert!(direct.tv_distance(&compiled) < 1e-9, "seed {seed}");
        }
    }
}

#[test]
fn trusted_wrapper_restores_honest_measurements() {
    // Echo devices measure Z regardless of input; trusted ones measure X when asked.
    let d = Device::sequential(echo_signalling()).trusted();
    let dist = d.exact_distribution(&all(Basis::X, 2)).unwrap();
    // Round 2 memory is |0>, measured in X: uniform.
    let r2 = dist.marginal(|k| (k >> 2) & 1);
    assert!((r2[&0] - 0.5).abs() < 1e-12);
}

#[derive(Debug)]
struct WrongLabels(Channel);

impl Process2Behaviour for WrongLabels {
    fn id(&self) -> &str {
        "wrong"
    }
    fn prepare(&self, _: usize, eve: &EveMemory) -> Vec<Preparation> {
        vec![Preparation::certain(
            DensityOperator::maximally_mixed(&["A", "B"]).unwrap(),
            eve.clone(),
        )]
    }
    fn memory_channel(&self, _: Party, _: usize) -> &Channel {
        &self.0
    }
    fn memory_update(&self, _: Party, _: usize) -> MemoryUpdate {
        MemoryUpdate::Discard
    }
}

#[test]
fn channel_label_mismatch_is_reported() {
    let b = WrongLabels(Channel::identity(&["A"]));
    let err = run_process2(&b, &all(Basis::Z, 1), &mut rng(8)).unwrap_err();
    assert!(matches!(err, Error::LabelMismatch(_)));
}

#[test]
fn enumeration_budget_is_enforced() {
    let err = enumerate_process2(&iid_bell(), &all(Basis::X, 4), 10).unwrap_err();
    assert!(matches!(err, Error::EnumerationBudgetExceeded(_)));
}

#[test]
fn joint_round_count_is_checked() {
    let d = Device::joint(Process1Spec::bell_product(3).unwrap());
    assert!(matches!(d.check_rounds(4), Err(Error::RoundCountMismatch { expected: 3, actual: 4 })));
}
