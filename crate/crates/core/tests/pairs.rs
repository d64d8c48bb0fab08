mod common {
    pub mod corpora;
    pub mod oracle;
}

use std::collections::HashSet;

use common::{corpora, oracle};
use ctxembed::context::{
    generate_pairs, negative_samples, pairs_neighbor_timestamps, pairs_same_frame, pairs_surrounding_frames,
    read_pairs, write_pairs, ContextConfig, Mechanism, PairConfig,
};
use ctxembed::synth;
use ctxembed::{Corpus, DiffusionKernel, DiscrepancyScorer, ObjectInstance, PairKind, ScoreMethod, TrainingPair};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn toy(seed: u64, n_labels: usize, n_frames: usize, n_ts: usize) -> corpora::Toy {
    corpora::random_corpus(&mut ChaCha8Rng::seed_from_u64(seed), n_labels, n_frames, n_ts)
}

proptest! {
    #[test]
    fn same_frame_count_matches_enumeration(seed in 0u64..500) {
        let t = toy(seed, 6, 8, 2);
        let pairs = pairs_same_frame(&t.corpus, &DiscrepancyScorer::default());
        let expected = t.raw.iter()
            .flat_map(|a| t.raw.iter().map(move |b| (a, b)))
            .filter(|(a, b)| a.1 == b.1 && a.0 != b.0)
            .count();
        prop_assert_eq!(pairs.len(), expected);
    }

    #[test]
    fn every_delta_in_unit_interval(seed in 0u64..200, method in 0usize..3, sigma_t in 0.2f64..3.0) {
        let t = toy(seed, 6, 12, 3);
        let scorer = DiscrepancyScorer::with_method(ScoreMethod::ALL[method]);
        let kernel = DiffusionKernel::new(sigma_t, 3).unwrap();
        let frame_kernel = DiffusionKernel::new(sigma_t, 12).unwrap();
        let all = [
            pairs_same_frame(&t.corpus, &scorer),
            pairs_surrounding_frames(&t.corpus, 2, &scorer, Some(&frame_kernel)),
            pairs_neighbor_timestamps(&t.corpus, 1, &scorer, &kernel),
        ]
        .concat();
        for p in negative_samples(&t.corpus, &all, 2, 2, seed) {
            prop_assert!((0.0..=1.0).contains(&p.delta));
            if p.kind == PairKind::Negative {
                prop_assert_eq!(p.delta, 1.0);
            }
        }
    }

    #[test]
    fn exclusion_rules_hold(seed in 0u64..300, w in 1usize..3) {
        let t = toy(seed, 6, 12, 3);
        let c = &t.corpus;
        let scorer = DiscrepancyScorer::default();
        for p in pairs_surrounding_frames(c, w, &scorer, None) {
            let f = p.frame.unwrap();
            prop_assert!(!c.frame(f).iter().any(|i| i.label == p.context));
        }
        let kernel = DiffusionKernel::new(1.0, 3).unwrap();
        for p in pairs_neighbor_timestamps(c, w, &scorer, &kernel) {
            prop_assert!(!c.present_in_timestamp(p.context, p.t_ref.unwrap()));
        }
    }

    #[test]
    fn zero_windows_emit_nothing(seed in 0u64..100) {
        let t = toy(seed, 5, 6, 2);
        let scorer = DiscrepancyScorer::default();
        prop_assert!(pairs_surrounding_frames(&t.corpus, 0, &scorer, None).is_empty());
        let kernel = DiffusionKernel::new(1.0, 2).unwrap();
        prop_assert!(pairs_neighbor_timestamps(&t.corpus, 0, &scorer, &kernel).is_empty());
    }

    #[test]
    fn negative_sampling_is_reproducible(seed in 0u64..200) {
        let t = toy(seed, 8, 10, 2);
        let pos = pairs_same_frame(&t.corpus, &DiscrepancyScorer::default());
        let a = negative_samples(&t.corpus, &pos, 3, 0, seed);
        let b = negative_samples(&t.corpus, &pos, 3, 0, seed);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn corpus_invariants(seed in 0u64..300) {
        let t = toy(seed, 7, 11, 3);
        let c = &t.corpus;
        let total: u32 = (0..c.n_labels()).map(|l| c.total_frequency(l)).sum();
        prop_assert_eq!(total as usize, c.instance_count());
        let mut covered = vec![0; c.n_frames()];
        for ts in 0..c.n_timestamps() {
            for f in c.timestamp_frames(ts) {
                covered[f] += 1;
                prop_assert_eq!(c.timestamp_of(f), ts);
            }
        }
        prop_assert!(covered.iter().all(|&n| n == 1));
        let back = Corpus::from_snapshot_json(&c.to_snapshot_json().unwrap()).unwrap();
        prop_assert_eq!(&back, c);
    }
}

#[test]
fn negative_probabilities_follow_excess_frequency() {
    // reference r sits in timestamp 0 only; x occurs 3 times and y once, both
    // outside timestamp 0
    let inst = |label, frame| ObjectInstance { label, frame, cx: 0.5, cy: 0.5 };
    let mut instances = vec![inst(0, 0), inst(1, 1), inst(1, 1), inst(1, 1), inst(2, 1)];
    // a label that only lives in timestamp 0 is never drawn
    instances.push(inst(3, 0));
    let corpus = Corpus::from_instances(vec!["r".into(), "x".into(), "y".into(), "z".into()], instances, 2, 2).unwrap();
    let pos = [TrainingPair::positive(0, 3, Some(0), 0.1)];
    let out = negative_samples(&corpus, &pos, 20_000, 0, 3);
    let x = out.iter().filter(|p| p.context == 1).count() as f64;
    let y = out.iter().filter(|p| p.context == 2).count() as f64;
    assert!(out.iter().skip(1).all(|p| p.context != 3));
    let share = x / (x + y);
    assert!((share - 0.75).abs() < 0.015, "{share}");
    assert_eq!(negative_samples(&corpus, &pos, 0, 0, 3), pos.to_vec());
}

#[test]
fn neighbor_timestamp_damping_example() {
    // base discrepancy 0.5 via the minmax scorer at distance √2/2
    let inst = |label, frame, cx, cy| ObjectInstance { label, frame, cx, cy };
    let corpus =
        Corpus::from_instances(vec!["a".into(), "b".into()], vec![inst(0, 0, 0.0, 0.0), inst(1, 1, 0.5, 0.5)], 2, 2)
            .unwrap();
    let scorer = DiscrepancyScorer::with_method(ScoreMethod::MinMax);
    let pairs = pairs_neighbor_timestamps(&corpus, 1, &scorer, &DiffusionKernel::new(1.0, 2).unwrap());
    let p = pairs.iter().find(|p| p.reference == 0).unwrap();
    let expected = 0.5 * (1.0 - oracle::gamma(1.0, 1.0));
    assert!((p.delta - expected).abs() < 1e-12);
    assert!((p.delta - 0.37901).abs() < 1e-5);
}

#[test]
fn surrounding_frames_link_consecutive_seq4_blocks() {
    let g = synth::gen_seq4(40, 0).unwrap();
    let corpus = Corpus::from_annotations(&g.records, 1).unwrap();
    let pairs = pairs_surrounding_frames(&corpus, 1, &DiscrepancyScorer::default(), None);
    let nine = corpus.label_id("9").unwrap();
    let ctx: HashSet<&str> =
        pairs.iter().filter(|p| p.reference == nine).map(|p| corpus.label_name(p.context)).collect();
    for l in ["A", "B", "C", "D", "4", "5", "6", "7"] {
        assert!(ctx.contains(l), "{l}");
    }
    // frame 0 only reaches forward
    let first: HashSet<usize> = pairs.iter().filter(|p| p.frame == Some(0)).map(|p| p.context).collect();
    let next: HashSet<usize> = corpus.frame(1).iter().map(|i| i.label).collect();
    assert_eq!(first, next);
}

#[test]
fn generate_pairs_validates_and_round_trips() {
    let t = toy(9, 6, 12, 3);
    let mut cfg = PairConfig {
        context: ContextConfig {
            mechanisms: vec![Mechanism::SameFrame, Mechanism::NeighborTimestamps],
            negatives_per_positive: 2,
            ..ContextConfig::default()
        },
        temporal: true,
        ..PairConfig::default()
    };
    let pairs = generate_pairs(&t.corpus, &cfg).unwrap();
    assert!(pairs.iter().all(|p| p.t_ref.is_some()));
    let mut buf = Vec::new();
    write_pairs(&pairs, &mut buf).unwrap();
    let back = read_pairs(buf.as_slice()).unwrap();
    assert_eq!(back.len(), pairs.len());
    for (a, b) in back.iter().zip(&pairs) {
        assert_eq!((a.reference, a.context, a.t_ref, a.kind), (b.reference, b.context, b.t_ref, b.kind));
        assert_eq!(a.delta, b.delta);
    }
    cfg.temporal = false;
    assert!(generate_pairs(&t.corpus, &cfg).is_err());
}
