mod common;

use common::*;
use memlab::analysis::{binary_entropy, signalling_measure, string_entropy, EntropyMode, ExactTable, OutputSelect};
use memlab::devices::{
    compile_trivial_memory, enumerate_process2, even_round_copier, fixed_inputs, iid_bell, random_trivial_memory,
    retain_remeasure, unpack_inputs, Device, Process1Spec, DEFAULT_BRANCH_BUDGET,
};
use memlab::protocol::transcript::{from_jsonl, to_jsonl, TranscriptMeta};
use memlab::protocol::{privacy_amplify, random_seed, run_bb84, ProtocolConfig, TestSelection};
use memlab::quantum::{
    measure, measure_all_branches, partial_trace, project_outcome, tensor, StateVector, CMatrix, C64,
};
use memlab::{Basis, Party, RoundInput};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn basis() -> impl Strategy<Value = Basis> {
    prop_oneof![Just(Basis::X), Just(Basis::Z)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn born_probabilities_are_normalized(seed in any::<u64>(), k in 1usize..=3, b in basis(), u in 0.0..1.0f64) {
        let mut r = rng(seed);
        let pos = (seed as usize) % k;
        let label = format!("q{pos}");
        let pure = random_pure(k, &mut r);
        let mixed = random_mixed(k, &mut r);
        let [b0, b1] = measure_all_branches(&pure, label.as_str(), b).unwrap();
        prop_assert!((b0.probability + b1.probability - 1.0).abs() < 1e-9);
        let [m0, m1] = measure_all_branches(&mixed, label.as_str(), b).unwrap();
        prop_assert!((m0.probability + m1.probability - 1.0).abs() < 1e-9);
        let m = measure(&mixed, label.as_str(), b, u).unwrap();
        prop_assert!((0.0..=1.0).contains(&m.probability));
        prop_assert!((m.post_state.trace() - 1.0).abs() < 1e-9);
        let inst = random_instrument(&mut r);
        let p: f64 = (0..2).filter_map(|o| project_outcome(&pure, label.as_str(), &inst, o).ok()).map(|(_, p)| p).sum();
        prop_assert!((p - 1.0).abs() < 1e-9);
    }

    #[test]
    fn projective_measurement_is_repeatable(seed in any::<u64>(), k in 1usize..=3, b in basis(), u in 0.0..1.0f64) {
        let mut r = rng(seed);
        let label = format!("q{}", seed as usize % k);
        let state = random_mixed(k, &mut r);
        let first = measure(&state, label.as_str(), b, u).unwrap();
        let again = measure_all_branches(&first.post_state, label.as_str(), b).unwrap();
        prop_assert!((again[first.outcome as usize].probability - 1.0).abs() < 1e-9);
        prop_assert!(again[1 - first.outcome as usize].post_state.is_none());
    }

    #[test]
    fn x_and_z_are_unbiased(b in basis(), o in 0u8..2) {
        let eig = StateVector::eigenstate(b, o, "q");
        for br in measure_all_branches(&eig, "q", b.other()).unwrap() {
            prop_assert!((br.probability - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_undoes_tensor(seed in any::<u64>(), ka in 1usize..=2, kb in 1usize..=2) {
        let mut r = rng(seed);
        let a = random_mixed(ka, &mut r);
        let b = random_mixed(kb, &mut r);
        let b = (0..kb).fold(b, |s, i| s.relabel(&format!("q{i}").as_str().into(), format!("r{i}")).unwrap());
        let keep = labels(ka);
        let back = partial_trace(&tensor(&a, &b).unwrap(), &keep).unwrap();
        prop_assert!(back.trace_distance(&a).unwrap() < 1e-9);
    }

    #[test]
    fn channels_preserve_trace(seed in any::<u64>(), k in 1usize..=2, n_kraus in 1usize..=4) {
        let mut r = rng(seed);
        let ch = random_channel(k, n_kraus, &mut r);
        prop_assert!(ch.completeness_deviation() < 1e-9);
        let out = ch.apply(&random_mixed(k, &mut r)).unwrap();
        prop_assert!((out.trace() - 1.0).abs() < 1e-9);
        prop_assert!(out.validate(1e-9).is_ok());
    }

    #[test]
    fn instruments_are_complete_and_idempotent(seed in any::<u64>()) {
        let inst = random_instrument(&mut rng(seed));
        let (p0, p1) = (inst.projector(0), inst.projector(1));
        let id = CMatrix::identity(2, 2);
        prop_assert!((&p0 + &p1 - id).iter().all(|z| z.norm() < 1e-9));
        for p in [&p0, &p1] {
            prop_assert!((p * p - p).iter().all(|z: &C64| z.norm() < 1e-9));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn process1_measurement_order_is_irrelevant(seed in any::<u64>(), n in 1usize..=3, setting in any::<u64>()) {
        let mut r = rng(seed);
        let spec = Process1Spec::random(n, &mut r, true).unwrap();
        let inputs = unpack_inputs(setting & ((1 << (2 * n)) - 1), n);
        let mut order: Vec<(Party, usize)> = (1..=n).flat_map(|j| Party::BOTH.map(|p| (p, j))).collect();
        order.shuffle(&mut r);
        let a = spec.exact_distribution(&inputs).unwrap();
        let b = spec.distribution_in_order(&inputs, &order).unwrap();
        prop_assert!(a.tv_distance(&b) < 1e-9);
        prop_assert!((a.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn process1_never_signals(seed in any::<u64>(), n in 2usize..=3) {
        let spec = Process1Spec::random(n, &mut rng(seed), true).unwrap();
        let report = signalling_measure(&ExactTable::build(&Device::joint(spec), n).unwrap()).unwrap();
        prop_assert!(report.max_magnitude() < 1e-12);
    }

    #[test]
    fn compiled_trivial_memory_matches_sequential(seed in any::<u64>(), n in 1usize..=3, setting in any::<u64>()) {
        let behaviour = random_trivial_memory(seed);
        let spec = compile_trivial_memory(&behaviour, n).unwrap();
        let inputs = unpack_inputs(setting & ((1 << (2 * n)) - 1), n);
        let direct = enumerate_process2(&behaviour, &inputs, DEFAULT_BRANCH_BUDGET).unwrap();
        prop_assert!(direct.tv_distance(&spec.exact_distribution(&inputs).unwrap()) < 1e-9);
    }

    #[test]
    fn retain_remeasure_has_two_strings(n in 1usize..=8, b in basis()) {
        let d = Device::sequential(retain_remeasure()).exact_distribution(&vec![RoundInput::both(b); n]).unwrap();
        let all_ones = (1u64 << (2 * n)) - 1;
        prop_assert_eq!(d.len(), 2);
        prop_assert!((d.get(0) - 0.5).abs() < 1e-12);
        prop_assert!((d.get(all_ones) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn even_copier_repeats_odd_outputs(seed in any::<u64>(), pairs in 1usize..=6) {
        let mut r = rng(seed);
        let odd: Vec<RoundInput> = (0..pairs).map(|_| RoundInput::new(random_basis(&mut r), random_basis(&mut r))).collect();
        let inputs: Vec<RoundInput> = odd.iter().flat_map(|&i| [i, i]).collect();
        let mut src = fixed_inputs(&inputs);
        let trace = Device::sequential(even_round_copier()).run(2 * pairs, &mut src, &mut r).unwrap();
        for m in 0..pairs {
            for p in Party::BOTH {
                prop_assert_eq!(trace.rounds[2 * m + 1].output(p), trace.rounds[2 * m].output(p));
            }
        }
    }

    #[test]
    fn shannon_bounds_min_entropy(seed in any::<u64>(), n in 1usize..=3, setting in any::<u64>()) {
        let device = Device::joint(Process1Spec::random(n, &mut rng(seed), true).unwrap());
        let inputs = unpack_inputs(setting & ((1 << (2 * n)) - 1), n);
        for select in [OutputSelect::Party(Party::Alice), OutputSelect::Both] {
            let s = string_entropy(&device, &inputs, select, EntropyMode::Shannon).unwrap();
            let m = string_entropy(&device, &inputs, select, EntropyMode::Min).unwrap();
            prop_assert!(s + 1e-12 >= m);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn binary_entropy_is_symmetric(p in 0.0..=1.0f64) {
        let h = binary_entropy(p).unwrap();
        prop_assert!((0.0..=1.0).contains(&h));
        prop_assert!((h - binary_entropy(1.0 - p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn toeplitz_hash_is_linear(seed in any::<u64>(), m in 16usize..64, l in 1usize..=16) {
        let mut r = rng(seed);
        let s = random_seed(m, l, &mut r);
        prop_assert_eq!(s.len(), m + l - 1);
        let a: Vec<u8> = (0..m).map(|_| rand::Rng::random::<bool>(&mut r) as u8).collect();
        let b: Vec<u8> = (0..m).map(|_| rand::Rng::random::<bool>(&mut r) as u8).collect();
        let x: Vec<u8> = a.iter().zip(&b).map(|(p, q)| p ^ q).collect();
        let (ha, hb) = (privacy_amplify(&a, l, &s).unwrap(), privacy_amplify(&b, l, &s).unwrap());
        let hx = privacy_amplify(&x, l, &s).unwrap();
        prop_assert_eq!(hx.len(), l);
        prop_assert_eq!(hx, ha.iter().zip(&hb).map(|(p, q)| p ^ q).collect::<Vec<u8>>());
    }

    #[test]
    fn bb84_on_bell_pairs_sifts_equal_keys(seed in any::<u64>(), n in 2usize..60, gamma in 0.05..0.95f64, bias in 0.0..=1.0f64) {
        let mut config = ProtocolConfig::new(n, TestSelection::SpotCheck { gamma });
        config.basis_bias = bias;
        let t = run_bb84(&config, &Device::sequential(iid_bell()), &mut rng(seed)).unwrap();
        prop_assert_eq!(&t.sifted_key_a, &t.sifted_key_b);
        prop_assert!(t.check_announcements().is_ok());
        let meta = TranscriptMeta::new("iid_bell", seed, 0, serde_json::to_value(&config).unwrap());
        let (_, back) = from_jsonl(&to_jsonl(&t, &meta)).unwrap();
        prop_assert_eq!(back, t);
    }
}
