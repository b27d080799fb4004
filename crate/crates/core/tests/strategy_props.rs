use std::collections::BTreeMap;

use cws_core::strategy::{
    assign, prioritize, Assignment, CandidateTask, NodeSnapshot, Prioritization, RoundRobinCursor,
};
use cws_core::{Millicores, Resources};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn candidates() -> impl Strategy<Value = Vec<CandidateTask>> {
    prop::collection::vec((0u64..4, 0u32..4, 1u64..4000, 1u64..8), 0..30).prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(i, (size, rank, mc, gib))| CandidateTask {
                task_id: format!("t{i:02}").into(),
                submission_seq: (i as u64 * 7) % 31,
                input_size_bytes: size,
                rank,
                request: Resources::new(Millicores::new(mc), gib << 30),
            })
            .collect()
    })
}

fn prioritization() -> impl Strategy<Value = Prioritization> {
    prop::sample::select(Prioritization::ALL.to_vec())
}

fn assignment() -> impl Strategy<Value = Assignment> {
    prop::sample::select(Assignment::ALL.to_vec())
}

fn nodes() -> impl Strategy<Value = Vec<NodeSnapshot>> {
    prop::collection::vec((1u64..8, 0u64..8, 1u64..16, 0u64..16), 1..6).prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(i, (cores, used, mem, used_mem))| {
                let mut n = NodeSnapshot::new(
                    format!("n{i}"),
                    Resources::new(Millicores::from_cores(cores), mem << 30),
                );
                n.allocated = Resources::new(
                    Millicores::new(used.min(cores) * 1000),
                    used_mem.min(mem) << 30,
                );
                n
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn prioritize_is_a_permutation(tasks in candidates(), p in prioritization(), seed in any::<u64>()) {
        let out = prioritize(tasks.clone(), p, &mut ChaCha8Rng::seed_from_u64(seed));
        let mut a: Vec<_> = tasks.iter().map(|t| t.task_id.clone()).collect();
        let mut b: Vec<_> = out.iter().map(|t| t.task_id.clone()).collect();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn prioritize_is_deterministic(tasks in candidates(), p in prioritization(), seed in any::<u64>()) {
        let x = prioritize(tasks.clone(), p, &mut ChaCha8Rng::seed_from_u64(seed));
        let y = prioritize(tasks, p, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(x, y);
    }

    #[test]
    fn rank_orders_respect_rank_then_tie_break(tasks in candidates(), seed in any::<u64>()) {
        for p in [Prioritization::RankFifo, Prioritization::RankMin, Prioritization::RankMax] {
            let out = prioritize(tasks.clone(), p, &mut ChaCha8Rng::seed_from_u64(seed));
            for w in out.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                prop_assert!(a.rank >= b.rank);
                if a.rank == b.rank {
                    let key = |t: &CandidateTask| (t.submission_seq, t.task_id.clone());
                    let ok = match p {
                        Prioritization::RankMin => (a.input_size_bytes, key(a)) <= (b.input_size_bytes, key(b)),
                        Prioritization::RankMax => {
                            a.input_size_bytes > b.input_size_bytes
                                || (a.input_size_bytes == b.input_size_bytes && key(a) <= key(b))
                        }
                        _ => key(a) <= key(b),
                    };
                    prop_assert!(ok, "{:?}: {:?} before {:?}", p, a, b);
                }
            }
        }
    }

    #[test]
    fn assign_only_returns_feasible_nodes(
        tasks in candidates(),
        nodes in nodes(),
        a in assignment(),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cursor = RoundRobinCursor::default();
        for t in &tasks {
            let feasible = nodes.iter().any(|n| n.fits(&t.request));
            match assign(t, &nodes, a, &mut cursor, &mut rng) {
                Some(id) => {
                    let n = nodes.iter().find(|n| n.id == id).unwrap();
                    prop_assert!(n.fits(&t.request));
                }
                None => prop_assert!(!feasible),
            }
        }
    }

    #[test]
    fn round_robin_spreads_evenly(k in 1usize..8, m in 1usize..10) {
        let nodes: Vec<_> = (0..k)
            .map(|i| NodeSnapshot::new(format!("n{i}"), Resources::new(Millicores::from_cores(64), 1 << 40)))
            .collect();
        let task = CandidateTask {
            task_id: "t".into(),
            submission_seq: 0,
            input_size_bytes: 0,
            rank: 0,
            request: Resources::new(Millicores::from_cores(1), 1 << 20),
        };
        let mut cursor = RoundRobinCursor::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for _ in 0..k * m {
            let id = assign(&task, &nodes, Assignment::RoundRobin, &mut cursor, &mut rng).unwrap();
            *counts.entry(id.to_string()).or_default() += 1;
        }
        prop_assert_eq!(counts.len(), k);
        prop_assert!(counts.values().all(|&c| c == m));
    }
}
