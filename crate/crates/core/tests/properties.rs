use gossip_dp::adversary::{observe, observe_timed};
use gossip_dp::bounds::{optimal_delta, param_c, param_delta_bound, param_delta_exact};
use gossip_dp::protocols::{run_async, run_delayed_start, run_sync};
use gossip_dp::{spawn_stream, GossipConfig, NodeId, Variant};
use proptest::prelude::*;

fn config() -> impl Strategy<Value = GossipConfig> {
    (2usize..40, 0.0f64..=1.0, any::<u8>(), any::<u8>()).prop_map(|(n, s, fr, src)| {
        let f = fr as usize % (n - 1);
        let honest = (n - f) as u32;
        GossipConfig::new(n, f, s)
            .unwrap()
            .with_source(NodeId(src as u32 % honest))
            .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn async_traces_replay(cfg in config(), seed in any::<u64>()) {
        let trace = run_async(&cfg, &mut spawn_stream(seed, 0)).unwrap();
        prop_assert!(trace.validate().is_ok());
        prop_assert!(trace.is_complete());
        prop_assert_eq!(trace.events()[0].sender, cfg.source());
    }

    #[test]
    fn delayed_start_traces_replay(cfg in config(), seed in any::<u64>()) {
        let cfg = cfg.with_variant(Variant::DelayedStart);
        let trace = run_delayed_start(&cfg, &mut spawn_stream(seed, 1)).unwrap();
        prop_assert!(trace.validate().is_ok());
        prop_assert!(trace.is_complete());
    }

    #[test]
    fn sync_rounds_are_consistent(cfg in config(), seed in any::<u64>()) {
        let (trace, rounds) = run_sync(&cfg, &mut spawn_stream(seed, 2)).unwrap();
        prop_assert!(trace.validate().is_ok());
        prop_assert!(rounds.validate(trace.events()).is_ok());
        prop_assert_eq!(rounds.total_messages(), trace.len() as u64);
        prop_assert_eq!(rounds.records().last().unwrap().informed, cfg.n() as u64);
    }

    #[test]
    fn observation_is_an_ordered_curious_subsequence(cfg in config(), seed in any::<u64>()) {
        let trace = run_async(&cfg, &mut spawn_stream(seed, 3)).unwrap();
        let curious = cfg.curious();
        let timed = observe_timed(&trace, &curious);
        let steps: Vec<u64> = timed.entries().iter().map(|e| e.step).collect();
        prop_assert!(steps.windows(2).all(|w| w[0] < w[1]));
        for e in timed.entries() {
            prop_assert_eq!(trace.events()[e.step as usize], e.event);
        }
        let expected = trace.events().iter().filter(|e| curious.contains(e.receiver)).count();
        prop_assert_eq!(timed.len(), expected);
        prop_assert_eq!(timed.untimed(), observe(&trace, &curious));
    }

    #[test]
    fn closed_forms_are_ordered(s in 0.0f64..=1.0, f in 0usize..500, extra in 2usize..500, r in 1u32..50) {
        let n = f + extra;
        let exact = param_delta_exact(s, f, n);
        prop_assert!((0.0..=1.0).contains(&exact));
        prop_assert!(param_delta_bound(s, f, n, r) >= exact - 1e-12);
        prop_assert!(exact >= optimal_delta(0.0, f, n) - 1e-12);
        let c = param_c(s, f, n);
        prop_assert!((0.0..=1.0).contains(&c));
    }

    #[test]
    fn exact_delta_is_monotone(s1 in 0.0f64..=1.0, s2 in 0.0f64..=1.0, f in 1usize..200, extra in 2usize..200) {
        let n = f + extra;
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        prop_assert!(param_delta_exact(lo, f, n) <= param_delta_exact(hi, f, n) + 1e-12);
        prop_assert!(param_delta_exact(lo, f - 1, n) <= param_delta_exact(lo, f, n) + 1e-12);
    }

    #[test]
    fn optimal_delta_decreases_in_epsilon(e1 in 0.0f64..10.0, e2 in 0.0f64..10.0, f in 0usize..200, extra in 2usize..200) {
        let n = f + extra;
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(optimal_delta(hi, f, n) <= optimal_delta(lo, f, n));
        prop_assert!(optimal_delta(hi, f, n) >= 0.0);
    }
}
