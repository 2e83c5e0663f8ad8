use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rgsim::analysis;
use rgsim::baselines::{EdMasterState, EdWorkerState};
use rgsim::cli::RunConfig;
use rgsim::mechanism::{AnswerId, DeviationDetector, MixedWorkerState};
use rgsim::payoff::PayoffParams;
use rgsim::sim::{MechanismSpec, Scenario, SweepSpec};

fn mechanism() -> impl Strategy<Value = MechanismSpec> {
    prop_oneof![
        (prop::option::of(0.0..1.0f64), 1..5u32, 0.01..1.0f64).prop_map(|(pv, k, pc)| {
            MechanismSpec::RgPure {
                pv,
                punishment_rounds: k,
                pc_reference: pc,
            }
        }),
        (0.0..1.0f64, 0.01..1.0f64, 0.001..0.5f64, 1..4u32).prop_map(|(pv, pc, eps, k)| {
            MechanismSpec::RgMixed {
                pv,
                pc,
                eps,
                punishment_rounds: k,
                xi: Some(0.5),
                phi: None,
            }
        }),
        (0.0..1.0f64, 0.0..0.1f64).prop_map(|(pa, min)| MechanismSpec::Ed {
            pa_initial: pa,
            pa_min: min,
            tau: 0.5,
            aspiration: 0.1,
            alpha_m: 0.01,
            alpha_w: 0.02,
        }),
        prop::option::of(0.0..1.0f64).prop_map(|pv| MechanismSpec::Ros { pv }),
    ]
}

fn scenario() -> impl Strategy<Value = Scenario> {
    (
        mechanism(),
        1..100usize,
        0.5..3.0f64,
        0.0..1.0f64,
        any::<u64>(),
        prop::option::of(0..10usize),
        1..300u32,
    )
        .prop_map(|(m, n, wba, dpc, seed, dc, rounds)| {
            let mut s = Scenario::new(m, n, wba, dpc, seed);
            s.deviator_count = dc;
            s.rounds = rounds;
            s
        })
}

proptest! {
    #[test]
    fn detector_window_stays_bounded(
        n in 3..120usize,
        pc in 0.01..0.5f64,
        eps in 0.001..0.3f64,
        counts in prop::collection::vec(0..120usize, 0..200),
    ) {
        let mut det = DeviationDetector::new(n, pc, eps).unwrap();
        let cap = det.capacity();
        prop_assert_eq!(cap, analysis::chernoff_window(n, pc, eps).unwrap());
        for c in counts {
            det.record(c.min(n));
            prop_assert!(det.window().len() <= cap);
        }
    }

    #[test]
    fn window_is_nonempty_and_delta_shrinks(n in 1..500usize, pc in 0.01..1.0f64, eps in 0.001..0.5f64) {
        let w = analysis::chernoff_window(n, pc, eps).unwrap();
        prop_assert_eq!(w, (3.0 * n as f64 * pc * (1.0 / eps).ln()).floor() as usize);
        let mut prev = f64::INFINITY;
        for r in 1..=w.min(50) {
            let d = analysis::chernoff_delta(r, n, pc, eps).unwrap();
            prop_assert!(d < prev);
            prev = d;
        }
    }

    #[test]
    fn mixed_worker_reverts_after_punishment(
        seed in any::<u64>(),
        deviant in 0.3..1.0f64,
        rounds in 1..60usize,
    ) {
        use rand::Rng;
        let n = 27;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = MixedWorkerState::new(n, 0.1, 0.01, 1).unwrap();
        let mut punishing_prev = false;
        for _ in 0..rounds {
            if punishing_prev {
                prop_assert!(!w.is_punishing());
                prop_assert_eq!(w.pc_current(), 0.1);
            }
            let wrong = (0..n).filter(|_| rng.gen::<f64>() < deviant).count();
            let hist = vec![(AnswerId::CORRECT, n - wrong), (AnswerId::WRONG, wrong)];
            let hist: Vec<_> = hist.into_iter().filter(|&(_, c)| c > 0).collect();
            punishing_prev = w.is_punishing();
            w.observe(&hist, AnswerId::CORRECT).unwrap();
            prop_assert!(w.detector().window().len() <= w.window_cap());
            prop_assert!(w.pc_current() == 0.1 || w.pc_current() == 1.0);
        }
    }

    #[test]
    fn ed_updates_stay_clamped(
        pc in 0.0..=1.0f64,
        rate in 0.0..2.0f64,
        steps in prop::collection::vec((any::<bool>(), -50.0..50.0f64), 0..100),
    ) {
        let mut w = EdWorkerState::new(pc, 0.1, rate);
        for (cheated, payoff) in steps {
            w.update(cheated, payoff);
            prop_assert!((0.0..=1.0).contains(&w.pc));
        }
    }

    #[test]
    fn ed_audit_probability_stays_clamped(
        pa in 0.0..=1.0f64,
        pa_min in 0.0..0.5f64,
        step in 0.0..0.5f64,
        events in prop::collection::vec((any::<bool>(), 0..10usize), 0..200),
    ) {
        let mut m = EdMasterState::new(pa, pa_min, step, 0.5);
        for (audited, f) in events {
            m.update(audited, f.min(9), 9);
            prop_assert!(m.pa >= pa_min - 1e-15 && m.pa <= 1.0);
        }
    }

    #[test]
    fn tails_partition(n in (1..50usize).prop_map(|k| 2 * k + 1), pc in 0.0..=1.0f64) {
        let t = analysis::binom_tails(n, pc).unwrap();
        prop_assert!((t.p_gt_h + t.p_leq_h - 1.0).abs() < 1e-12);
        prop_assert!(t.p_geq_h >= t.p_gt_h - 1e-15);
    }

    #[test]
    fn deviant_utility_is_linear(
        n in (1..20usize).prop_map(|k| 2 * k + 1),
        own in 0.0..=1.0f64,
        others in 0.0..=1.0f64,
        pv in 0.0..=1.0f64,
    ) {
        let p = PayoffParams { wpc: 1.1, wct: 0.1, wba: 1.0, mpw: 9.0, mca: 1.0, mcv: 9.0, mbr: 9.0 };
        let u0 = analysis::deviant_utility_mixed(&p, n, 0.0, others, pv).unwrap();
        let u1 = analysis::deviant_utility_mixed(&p, n, 1.0, others, pv).unwrap();
        let u = analysis::deviant_utility_mixed(&p, n, own, others, pv).unwrap();
        prop_assert!((u - (u0 + own * (u1 - u0))).abs() < 1e-9);
    }

    #[test]
    fn config_round_trips(s in scenario(), threads in prop::option::of(1..16usize), trace in any::<bool>()) {
        let cfg = RunConfig {
            scenario: Some(s),
            sweep: Some(SweepSpec { seeds: vec![1, 2, 3], ..SweepSpec::default() }),
            threads,
            trace,
            ..RunConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        prop_assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
    }
}
