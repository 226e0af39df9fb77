//! Property tests: the integrity workhorse plus structural invariants that
//! should hold for arbitrary configurations, not just the pinned scenarios.

use proptest::prelude::*;

use cdcsim::elements::{c_element, ChannelSide, TwoPhaseChannel};
use cdcsim::fifos::{FifoConfig, FifoDesign};
use cdcsim::harness::{run_experiment, EndpointPolicy, ExperimentConfig, StressConfig};
use cdcsim::kernel::{ClockDomain, EventKind, EventQueue, SimTime};

fn safe_design() -> impl Strategy<Value = FifoDesign> {
    prop_oneof![
        Just(FifoDesign::Gray),
        Just(FifoDesign::Pausible),
        Just(FifoDesign::SelfTimed),
        Just(FifoDesign::Elastic),
    ]
}

fn duty() -> impl Strategy<Value = EndpointPolicy> {
    prop_oneof![
        Just(EndpointPolicy::Saturating),
        (0.3..1.0f64).prop_map(EndpointPolicy::Duty),
    ]
}

prop_compose! {
    fn experiment()(
        design in safe_design(),
        tx_period in 500u64..2000,
        rx_shift in 0u64..1500,
        tx_phase in 0u64..400,
        rx_phase in 0u64..400,
        tx_drift in -500i64..500,
        rx_drift in -500i64..500,
        jitter in 0u64..60,
        depth_pow in 2u32..6,
        producer in duty(),
        consumer in duty(),
        stress in prop_oneof![Just(0.0f64), Just(1.0f64), 0.0..1.0f64],
        seed in any::<u64>(),
    ) -> ExperimentConfig {
        let rx_period = 500 + rx_shift;
        ExperimentConfig {
            fifo: FifoConfig {
                design,
                depth: 1 << depth_pow,
                ..FifoConfig::default()
            },
            tx_clock: ClockDomain::new(0, tx_period)
                .with_phase(tx_phase)
                .with_jitter(jitter.min(tx_period / 5))
                .with_drift(tx_drift),
            rx_clock: ClockDomain::new(1, rx_period)
                .with_phase(rx_phase)
                .with_jitter(jitter.min(rx_period / 5))
                .with_drift(rx_drift),
            seed,
            n_words: 1500,
            producer,
            consumer,
            stress: StressConfig {
                metastability: true,
                violation_rate: stress,
            },
            ..ExperimentConfig::default()
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// The workhorse: every safe design delivers losslessly, in order, with
    /// conservative flags and sane pointer views, under arbitrary clock
    /// pairs, phases, drift, jitter, duty cycles, and stress.
    #[test]
    fn safe_designs_always_deliver(cfg in experiment()) {
        let out = run_experiment(&cfg).unwrap();
        prop_assert!(out.verdict.is_ok(), "verdict {} for {:?}", out.verdict, cfg.fifo.design);
        prop_assert_eq!(out.metrics.delivered, cfg.n_words);
        prop_assert_eq!(out.metrics.conservatism_violations, 0);
        prop_assert_eq!(out.metrics.staleness_violations, 0);
        prop_assert_eq!(out.metrics.estimate_violations, 0);
        if cfg.fifo.design == FifoDesign::Pausible {
            prop_assert_eq!(out.metrics.metastable_events, 0);
        }
    }

    /// Identical configuration, identical everything.
    #[test]
    fn runs_are_deterministic(cfg in experiment()) {
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        prop_assert_eq!(a.trace_hash, b.trace_hash);
        prop_assert_eq!(a.metrics, b.metrics);
        prop_assert_eq!(a.received_seqs, b.received_seqs);
    }

    /// Shifting both clock phases by a common constant is unobservable:
    /// protocol decisions never consult absolute time.
    #[test]
    fn phase_translation_is_unobservable(cfg in experiment(), delta in 1u64..100_000) {
        let base = run_experiment(&cfg).unwrap();
        let shifted = run_experiment(&cfg.translated(delta)).unwrap();
        prop_assert_eq!(base.verdict, shifted.verdict);
        prop_assert_eq!(base.received_seqs, shifted.received_seqs);
        prop_assert_eq!(base.metrics, shifted.metrics);
    }

    /// Queue dispatch order is exactly (time, insertion) lexicographic.
    #[test]
    fn event_queue_total_order(times in prop::collection::vec(0u64..1000, 1..64)) {
        #[derive(Clone, Copy)]
        struct Tag(usize);
        impl EventKind for Tag {
            fn label(&self) -> &'static str { "tag" }
        }
        let mut q = EventQueue::new();
        for (i, &t) in times.iter().enumerate() {
            q.push(SimTime(t), Tag(i));
        }
        let mut expect: Vec<(u64, usize)> = times.iter().copied().zip(0..).collect();
        expect.sort();
        let mut got = Vec::new();
        while let Some(ev) = q.pop() {
            got.push((ev.time.0, ev.kind.0));
        }
        prop_assert_eq!(got, expect);
    }

    /// Two-phase channels hold at most one credit: any alternating sequence
    /// succeeds, any out-of-turn toggle fails fast and leaves state intact.
    #[test]
    fn two_phase_credit_bound(ops in prop::collection::vec(any::<bool>(), 1..64)) {
        let mut ch = TwoPhaseChannel::new();
        let mut outstanding = 0i32;
        for op in ops {
            let side = if op { ChannelSide::Req } else { ChannelSide::Ack };
            let legal = match side {
                ChannelSide::Req => !ch.pending(),
                ChannelSide::Ack => ch.pending(),
            };
            let result = ch.toggle(side);
            prop_assert_eq!(result.is_ok(), legal);
            if result.is_ok() {
                outstanding += if op { 1 } else { -1 };
            }
            prop_assert!(outstanding == 0 || outstanding == 1);
            prop_assert_eq!(ch.pending(), outstanding == 1);
        }
    }

    /// Consensus gate: output moves only when inputs agree.
    #[test]
    fn c_element_holds_until_consensus(seq in prop::collection::vec((any::<bool>(), any::<bool>()), 1..64)) {
        let mut out = false;
        for (a, b) in seq {
            let next = c_element(a, b, out);
            if a == b {
                prop_assert_eq!(next, a);
            } else {
                prop_assert_eq!(next, out);
            }
            out = next;
        }
    }
}
