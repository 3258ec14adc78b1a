use ipd_core::model::{is_subgraph, payload_contains, LabeledGraph, Payload};
use ipd_testkit::{brute_force_subgraph, random_connected_subgraph, random_graph, seeded};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn subgraph_search_agrees_with_exhaustive_mapping() {
    let mut rng = seeded(17);
    let mut positives = 0;
    for _ in 0..400 {
        let tn = rng.random_range(1..=6);
        let connected = rng.random_bool(0.7);
        let target = random_graph(&mut rng, tn, 2, 2, connected);
        let pattern = if rng.random_bool(0.5) {
            let size = rng.random_range(1..=4);
            random_connected_subgraph(&mut rng, &target, size)
        } else {
            let pn = rng.random_range(1..=4);
            random_graph(&mut rng, pn, 2, 2, true)
        };
        let fast = is_subgraph(&pattern, &target);
        assert_eq!(
            fast,
            brute_force_subgraph(&pattern, &target),
            "{pattern:?} in {target:?}"
        );
        positives += fast as usize;
    }
    assert!(positives > 100, "too few positive cases: {positives}");
}

fn graph_strategy() -> impl Strategy<Value = LabeledGraph> {
    (any::<u64>(), 1usize..=6).prop_map(|(seed, n)| random_graph(&mut seeded(seed), n, 2, 2, true))
}

proptest! {
    #[test]
    fn graphs_contain_themselves(g in graph_strategy()) {
        prop_assert!(is_subgraph(&g, &g));
    }

    #[test]
    fn containment_is_antitone_under_removal(g in graph_strategy(), t in graph_strategy(), drop in any::<prop::sample::Index>()) {
        if is_subgraph(&g, &t) && !g.edges.is_empty() {
            let mut smaller = g.clone();
            smaller.edges.remove(drop.index(g.edges.len()));
            prop_assert!(is_subgraph(&smaller, &t));
        }
    }

    #[test]
    fn subsequences_keep_order(seq in prop::collection::vec(0u32..4, 0..12), mask in prop::collection::vec(any::<bool>(), 12)) {
        let sub: Vec<u32> = seq.iter().zip(&mask).filter(|(_, &m)| m).map(|(&s, _)| s).collect();
        prop_assert!(payload_contains(&Payload::Sequence(sub.clone()), &Payload::Sequence(seq.clone())).unwrap());
        let mut reversed = sub.clone();
        reversed.reverse();
        let rev_ok = payload_contains(&Payload::Sequence(reversed.clone()), &Payload::Sequence(seq.clone())).unwrap();
        if !rev_ok {
            prop_assert_ne!(reversed, sub);
        }
    }

    #[test]
    fn itemset_containment_is_subset(a in prop::collection::btree_set(0u32..8, 0..6), b in prop::collection::btree_set(0u32..8, 0..8)) {
        let contained = payload_contains(
            &Payload::itemset(a.iter().copied().collect()),
            &Payload::itemset(b.iter().copied().collect()),
        ).unwrap();
        prop_assert_eq!(contained, a.is_subset(&b));
    }
}

#[test]
fn kinds_must_match() {
    assert!(payload_contains(&Payload::Sequence(vec![1]), &Payload::itemset(vec![1])).is_err());
}
