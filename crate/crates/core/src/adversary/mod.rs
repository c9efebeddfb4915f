//! What curious nodes see, and the source-location attacks run on it.

mod attacks;
mod observe;

pub use attacks::{
    default_silence_window, first_distinct_senders, map_attack, multi_rumor_attack, silence_attack,
    AttackError, AttackOutcome, Prior,
};
pub use observe::{
    observe, observe_timed, ObservedSequence, ObservingSink, TimedEntry, TimedObservedSequence,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        spawn_stream, Completion, CuriousSet, Event, ExecutionTrace, GossipConfig, NodeId,
    };
    use crate::protocols::{run_async, run_async_into};

    fn ev(a: u32, b: u32) -> Event {
        Event::new(NodeId(a), NodeId(b))
    }

    /// Observation with the given senders, all received by node `n - 1`.
    fn seq(n: usize, f: usize, source: u32, senders: &[u32]) -> ObservedSequence {
        let c = CuriousSet::new(n, f);
        let entries = senders.iter().map(|&s| ev(s, n as u32 - 1)).collect();
        ObservedSequence::new(entries, c, NodeId(source))
    }

    #[test]
    fn no_curious_receiver_means_empty_view() {
        let cfg = GossipConfig::new(6, 2, 0.0).unwrap();
        let trace = ExecutionTrace::new(
            cfg.clone(),
            vec![ev(0, 1), ev(1, 2), ev(2, 3)],
            Completion::Capped,
        );
        assert!(observe(&trace, &cfg.curious()).is_empty());
    }

    #[test]
    fn observe_keeps_curious_receivers_in_order() {
        let cfg = GossipConfig::new(4, 2, 0.0).unwrap();
        let events = vec![ev(0, 2), ev(2, 1), ev(1, 3), ev(3, 0), ev(0, 2)];
        let trace = ExecutionTrace::new(cfg.clone(), events, Completion::Completed);
        let obs = observe(&trace, &cfg.curious());
        assert_eq!(obs.entries(), &[ev(0, 2), ev(1, 3), ev(0, 2)]);
        assert_eq!(obs.first_rank(NodeId(1)), Some(1));
        assert_eq!(obs.first_rank(NodeId(3)), None);

        let timed = observe_timed(&trace, &cfg.curious());
        let steps: Vec<u64> = timed.entries().iter().map(|e| e.step).collect();
        assert_eq!(steps, vec![0, 2, 4]);
        assert_eq!(timed.first_step_disclosure(), Some(NodeId(0)));
        assert_eq!(timed.untimed(), obs);
    }

    #[test]
    fn timed_projection_matches_untimed_on_random_runs() {
        for seed in 0..20 {
            let cfg = GossipConfig::new(100, 10, 0.4).unwrap();
            let trace = run_async(&cfg, &mut spawn_stream(seed, 0)).unwrap();
            let timed = observe_timed(&trace, &cfg.curious());
            assert_eq!(timed.untimed(), observe(&trace, &cfg.curious()));
            assert!(timed.entries().windows(2).all(|w| w[0].step < w[1].step));
        }
    }

    #[test]
    fn kept_fraction_matches_curious_fraction() {
        let cfg = GossipConfig::new(100, 10, 1.0).unwrap();
        let mut rng = spawn_stream(77, 0);
        let (mut total, mut kept) = (0usize, 0usize);
        while total < 10_000 {
            let trace = run_async(&cfg, &mut rng).unwrap();
            total += trace.len();
            kept += observe(&trace, &cfg.curious()).len();
        }
        let p = 0.1;
        let sigma = (total as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (kept as f64 - total as f64 * p).abs() <= 4.0 * sigma,
            "{kept}/{total}"
        );
    }

    #[test]
    fn observing_sink_stops_on_request() {
        let cfg = GossipConfig::new(200, 20, 1.0).unwrap();
        let mut sink =
            ObservingSink::new(cfg.curious(), cfg.source(), |e: &[TimedEntry]| e.len() >= 3);
        let status = run_async_into(&cfg, &mut spawn_stream(1, 0), &mut sink).unwrap();
        assert_eq!(status.completion, Completion::Stopped);
        let view = sink.into_view();
        assert_eq!(view.len(), 3);
        assert_eq!(view.entries()[2].step + 1, status.steps);

        let mut sink = ObservingSink::new(cfg.curious(), cfg.source(), |_: &[TimedEntry]| false)
            .stop_after_steps(1);
        let status = run_async_into(&cfg, &mut spawn_stream(1, 0), &mut sink).unwrap();
        assert_eq!(status.steps, 1);
    }

    #[test]
    fn map_predicts_first_sender_in_prior() {
        let obs = seq(20, 5, 3, &[5, 3, 8]);
        let prior = Prior::new([NodeId(3), NodeId(9)], obs.curious()).unwrap();
        let out = map_attack(&obs, &prior, &mut spawn_stream(0, 0));
        assert_eq!(out.predicted, Some(NodeId(3)));
        assert!(out.correct);
        assert_eq!(out.rank_of_source, Some(1));
    }

    #[test]
    fn map_falls_back_to_uniform_guess() {
        let obs = seq(20, 5, 2, &[]);
        let prior = Prior::new((0..4).map(NodeId), obs.curious()).unwrap();
        let mut rng = spawn_stream(5, 0);
        let trials = 40_000;
        let hits = (0..trials)
            .filter(|_| map_attack(&obs, &prior, &mut rng).correct)
            .count();
        let p = hits as f64 / trials as f64;
        let ci = 2.576 * (0.25f64 * 0.75 / trials as f64).sqrt();
        assert!((p - 0.25).abs() <= 3.0 * ci, "{p}");
    }

    #[test]
    fn map_with_singleton_prior_is_right_once_source_speaks() {
        for seed in 0..30 {
            let cfg = GossipConfig::new(60, 6, 0.5).unwrap();
            let trace = run_async(&cfg, &mut spawn_stream(seed, 2)).unwrap();
            let obs = observe(&trace, &cfg.curious());
            if obs.first_rank(cfg.source()).is_some() {
                let prior = Prior::new([cfg.source()], obs.curious()).unwrap();
                assert!(map_attack(&obs, &prior, &mut spawn_stream(0, 0)).correct);
            }
        }
    }

    #[test]
    fn prior_validation() {
        let c = CuriousSet::new(10, 2);
        assert_eq!(Prior::new([], &c), Err(AttackError::EmptyPrior));
        assert_eq!(
            Prior::new([NodeId(9)], &c),
            Err(AttackError::CuriousInPrior(NodeId(9)))
        );
        assert!(Prior::new([NodeId(12)], &c).is_err());
        assert_eq!(Prior::all_honest(&c).len(), 8);
    }

    #[test]
    fn multi_rumor_extracts_distinct_senders() {
        let obs = seq(20, 5, 7, &[7, 7, 2, 16, 4]);
        // 16 is curious and skipped.
        assert_eq!(
            first_distinct_senders(&obs, 10),
            vec![(NodeId(7), 0), (NodeId(2), 2), (NodeId(4), 4)]
        );
        assert_eq!(
            first_distinct_senders(&obs, 2),
            vec![(NodeId(7), 0), (NodeId(2), 2)]
        );
        let out = multi_rumor_attack(&[obs], 10, &mut spawn_stream(0, 0)).unwrap();
        assert_eq!(out.predicted, Some(NodeId(7)));
        assert!(out.correct);
    }

    #[test]
    fn multi_rumor_counts_instances_then_earliest_rank() {
        let a = seq(20, 5, 1, &[3, 1, 2]);
        let b = seq(20, 5, 1, &[1, 4]);
        let c = seq(20, 5, 1, &[5, 6, 3]);
        // 1 and 3 appear twice; 1 has rank 0 in `b`, 3 has rank 0 in `a`.
        // Tie on both keys, so the pick is random between them.
        let mut seen = std::collections::HashSet::new();
        let mut rng = spawn_stream(2, 0);
        for _ in 0..64 {
            let out = multi_rumor_attack(&[a.clone(), b.clone(), c.clone()], 10, &mut rng).unwrap();
            seen.insert(out.predicted.unwrap());
        }
        assert_eq!(seen, [NodeId(1), NodeId(3)].into_iter().collect());

        let d = seq(20, 5, 1, &[2, 3]);
        let out = multi_rumor_attack(&[a, b, c, d], 10, &mut rng).unwrap();
        assert_eq!(out.predicted, Some(NodeId(3)));
        assert!(!out.correct);
    }

    #[test]
    fn multi_rumor_input_errors() {
        let mut rng = spawn_stream(0, 0);
        assert_eq!(
            multi_rumor_attack(&[], 10, &mut rng),
            Err(AttackError::NoObservations)
        );
        let a = seq(20, 5, 1, &[1]);
        let b = seq(20, 5, 2, &[1]);
        assert_eq!(
            multi_rumor_attack(std::slice::from_ref(&a), 0, &mut rng),
            Err(AttackError::ZeroWindow)
        );
        assert_eq!(
            multi_rumor_attack(&[a, b], 3, &mut rng),
            Err(AttackError::MixedSources)
        );
        let empty = seq(20, 5, 1, &[]);
        assert!(multi_rumor_attack(&[empty], 3, &mut rng)
            .unwrap()
            .abstained());
    }

    #[test]
    fn silence_rule() {
        let obs = seq(20, 5, 4, &[4, 9, 9, 1]);
        let out = silence_attack(&obs, 3).unwrap();
        assert_eq!(out.predicted, Some(NodeId(4)));
        assert!(out.correct);

        let obs = seq(20, 5, 4, &[9, 4, 9]);
        assert!(silence_attack(&obs, 3).unwrap().abstained());
        // Reappearing only after the window does not count.
        assert_eq!(silence_attack(&obs, 1).unwrap().predicted, Some(NodeId(9)));

        assert!(silence_attack(&seq(20, 5, 4, &[]), 3).unwrap().abstained());
        assert_eq!(silence_attack(&obs, 0), Err(AttackError::ZeroWindow));
    }

    #[test]
    fn silence_window_default() {
        assert_eq!(
            default_silence_window(1024),
            (1024f64.ln().powi(2)).ceil() as usize
        );
        assert_eq!(default_silence_window(256), 31);
    }
}
