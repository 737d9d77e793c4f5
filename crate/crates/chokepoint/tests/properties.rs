//! Property suites over random instances: the defining-map identities, pass
//! accounting, budget behavior, and read-count schedules.

use chokepoint::algorithms::{FirstPassMinimal, GreedyCheat, Optimized, Standard};
use chokepoint::formulas::{
    self, first_pass_bound, floor_ceiling_identity, forward_map, output_sum_identity, reconstruct,
    second_pass_bound_raw, total_bound,
};
use chokepoint::model::{
    default_max_steps, execute, instance, split_passes, verify_output, Algorithm, InputInstance,
};
use num_bigint::BigInt;
use num_traits::Signed;
use proptest::collection::vec;
use proptest::prelude::*;

fn arb_instance(max_n: usize, max_d: u32) -> impl Strategy<Value = InputInstance> {
    (1..=max_d).prop_flat_map(move |d| {
        let limit = if d >= 64 { u64::MAX } else { (1u64 << d) - 1 };
        vec(0..=limit, 1..=max_n)
            .prop_map(move |values| InputInstance::new(d, values).expect("values fit width"))
    })
}

proptest! {
    #[test]
    fn reconstruct_inverts_forward_map(inst in arb_instance(64, 64)) {
        prop_assume!(inst.n() >= 2);
        let out = forward_map(&inst);
        let recovered = reconstruct(&out.values, Some(inst.d())).unwrap();
        let expected: Vec<BigInt> = inst.values().map(BigInt::from).collect();
        prop_assert_eq!(recovered, expected);
    }

    #[test]
    fn output_sum_identity_always_holds(inst in arb_instance(48, 64)) {
        prop_assert!(output_sum_identity(&inst).holds);
    }

    #[test]
    fn outputs_stay_in_the_domain_bound(inst in arb_instance(32, 16)) {
        let bound = BigInt::from(inst.n() as u64 - 1) * BigInt::from((1u64 << inst.d()) - 1);
        for value in forward_map(&inst).values {
            prop_assert!(!value.is_negative());
            prop_assert!(value <= bound);
        }
    }

    #[test]
    fn bound_decomposition(n in 1u64..10_000, d in 1u32..128, t in 0u64..1_000_000) {
        prop_assert_eq!(
            total_bound(n, d, t),
            first_pass_bound(n) as i128 + second_pass_bound_raw(n, d, t)
        );
    }

    #[test]
    fn floor_ceiling_identity_holds_everywhere(
        n in 0u64..100_000,
        t in 0u64..100_000,
        d in 1u32..512,
    ) {
        prop_assert!(floor_ceiling_identity(n, t, d));
    }

    #[test]
    fn pass_accounting_conserves_reads(inst in arb_instance(12, 6)) {
        for alg in chokepoint::algorithms::correct_algorithms() {
            let trace = execute(alg.as_ref(), &inst, 1024, default_max_steps(inst.n())).unwrap();
            let split = split_passes(&trace).unwrap();
            prop_assert_eq!(
                split.first_pass_reads + split.second_pass_reads,
                trace.read_count()
            );
        }
    }

    #[test]
    fn read_counts_follow_the_schedules(inst in arb_instance(16, 8)) {
        let n = inst.n() as u64;
        let steps = default_max_steps(inst.n());
        let standard = execute(&Standard, &inst, 1024, steps).unwrap();
        let optimized = execute(&Optimized, &inst, 1024, steps).unwrap();
        let minimal = execute(&FirstPassMinimal, &inst, 1024, steps).unwrap();
        if n == 1 {
            prop_assert_eq!(standard.read_count(), 0);
            prop_assert_eq!(optimized.read_count(), 0);
            prop_assert_eq!(minimal.read_count(), 0);
        } else {
            prop_assert_eq!(standard.read_count(), 2 * n);
            prop_assert_eq!(optimized.read_count(), 2 * n - 1);
            let split = split_passes(&minimal).unwrap();
            prop_assert_eq!(split.first_pass_reads, n - 1);
        }
    }

    #[test]
    fn budget_monotonicity(inst in arb_instance(10, 4), extra in 1u64..512) {
        let steps = default_max_steps(inst.n());
        for alg in chokepoint::algorithms::correct_algorithms() {
            let probe = execute(alg.as_ref(), &inst, 4096, steps).unwrap();
            let tight = probe.max_counted_state_bits.max(1);
            let a = execute(alg.as_ref(), &inst, tight, steps).unwrap();
            let b = execute(alg.as_ref(), &inst, tight + extra, steps).unwrap();
            prop_assert_eq!(&a.events, &b.events);
            prop_assert_eq!(&a.outputs, &b.outputs);
            prop_assert_eq!(a.max_counted_state_bits, b.max_counted_state_bits);
        }
    }

    #[test]
    fn cheat_partial_sums_break_somewhere(n in 3usize..6, d in 1u32..3) {
        // every admissible k leaves a replayable witness
        for k in 0..=(n as u64 - 2) {
            let cheat = GreedyCheat::new(k);
            let witness = chokepoint::adversary::find_counterexample_exhaustive(
                &cheat, n, d, 512,
            )
            .unwrap()
            .expect("a witness exists for every cheat");
            prop_assert!(
                chokepoint::adversary::replay_counterexample(&cheat, &witness, 512).unwrap()
            );
        }
    }

    #[test]
    fn correct_algorithms_never_yield_witnesses(inst in arb_instance(24, 8)) {
        prop_assume!(inst.n() >= 2);
        for alg in chokepoint::algorithms::correct_algorithms() {
            let found =
                chokepoint::adversary::find_counterexample(alg.as_ref(), &inst, 1024).unwrap();
            prop_assert!(found.is_none(), "{}", alg.name());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn correct_algorithms_match_the_oracle(inst in arb_instance(40, 32)) {
        for alg in chokepoint::algorithms::correct_algorithms() {
            let trace = execute(alg.as_ref(), &inst, 4096, default_max_steps(inst.n())).unwrap();
            prop_assert!(verify_output(&trace).is_correct(), "{}", alg.name());
            prop_assert_eq!(trace.final_output().unwrap(), forward_map(&inst));
        }
    }
}

#[test]
fn reconstruct_rejects_vectors_outside_the_image() {
    // odd coordinate sums at n = 3 never divide by 2
    let out = [BigInt::from(1), BigInt::from(2), BigInt::from(2)];
    assert!(matches!(
        reconstruct(&out, None),
        Err(formulas::FormulaError::NotDivisible { .. })
    ));
}

#[test]
fn oblivious_schedules_cover_the_cheat_too() {
    // every implemented algorithm declares an oblivious schedule; check the
    // claim across a full tiny domain, state sizes included
    let mut algs: Vec<Box<dyn Algorithm>> = chokepoint::algorithms::correct_algorithms();
    algs.push(Box::new(GreedyCheat::new(1)));
    for alg in algs {
        assert!(alg.oblivious());
        let mut seen: Option<(Vec<_>, Vec<u64>)> = None;
        for values in chokepoint::model::all_inputs(3, 2) {
            let inst = instance(2, &values);
            let trace = execute(alg.as_ref(), &inst, 512, 64).unwrap();
            let signature = trace.schedule_signature();
            let sizes: Vec<u64> = trace.snapshots.iter().map(|s| s.measured_bits(2)).collect();
            match &seen {
                None => seen = Some((signature, sizes)),
                Some((sig, sz)) => {
                    assert_eq!(sig, &signature, "{} schedule varies", alg.name());
                    assert_eq!(sz, &sizes, "{} state sizes vary", alg.name());
                }
            }
        }
    }
}

#[test]
fn write_only_output_has_no_read_back_surface() {
    // the event vocabulary and the action vocabulary are closed: every
    // variant is constructed here, and none returns output-tape contents
    use chokepoint::model::{Action, TraceEventKind};
    let actions = [
        Action::Read(0),
        Action::Write(0, BigInt::from(0)),
        Action::Mark("m"),
        Action::Halt,
    ];
    for action in &actions {
        match action {
            Action::Read(_) | Action::Write(_, _) | Action::Mark(_) | Action::Halt => {}
        }
    }
    let events = [
        TraceEventKind::ReadInput { index: 0, value: 0 },
        TraceEventKind::WriteOutput {
            index: 0,
            value: BigInt::from(0),
        },
        TraceEventKind::PhaseMark { label: "m".into() },
        TraceEventKind::StateSize { bits: 0 },
    ];
    for event in &events {
        match event {
            TraceEventKind::ReadInput { .. }
            | TraceEventKind::WriteOutput { .. }
            | TraceEventKind::PhaseMark { .. }
            | TraceEventKind::StateSize { .. } => {}
        }
    }
}
