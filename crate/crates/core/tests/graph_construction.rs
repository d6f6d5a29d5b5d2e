use proptest::prelude::*;
use psgraph::graph::{build_graph, named_graph, nb_paths, parse_edge_list, random_regular, RegularGraph, GRAPH_NAMES};
use psgraph::Error;

fn k4_edges() -> Vec<(usize, usize)> {
    vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
}

#[test]
fn k4_from_edge_list() {
    let g = build_graph(&k4_edges(), None).unwrap();
    assert_eq!(g.vertex_count(), 4);
    assert_eq!(g.q(), 2);
    assert_eq!(g.edge_count(), 12);
}

#[test]
fn triangle_is_rejected() {
    let err = build_graph(&[(0, 1), (1, 2), (0, 2)], None).unwrap_err();
    assert!(matches!(err, Error::QTooSmall(1)), "{err:?}");
}

#[test]
fn k4_minus_edge_is_not_regular() {
    let mut edges = k4_edges();
    edges.pop();
    assert!(matches!(build_graph(&edges, None), Err(Error::NotRegular { .. })));
}

#[test]
fn loops_and_multi_edges_are_rejected() {
    let mut edges = k4_edges();
    edges.push((0, 1));
    assert!(build_graph(&edges, None).is_err());
    assert!(build_graph(&[(0, 0), (1, 2)], None).is_err());
}

#[test]
fn disconnected_graph_is_rejected() {
    let mut edges = k4_edges();
    edges.extend(k4_edges().iter().map(|&(a, b)| (a + 4, b + 4)));
    assert!(matches!(build_graph(&edges, None), Err(Error::NotConnected)));
}

#[test]
fn named_graph_sizes() {
    for (name, v, directed) in [("petersen", 10, 30), ("cube", 8, 24), ("k33", 6, 18), ("k4", 4, 12)] {
        let g = named_graph(name).unwrap();
        assert_eq!((g.vertex_count(), g.q(), g.edge_count()), (v, 2, directed), "{name}");
    }
    assert!(matches!(named_graph("nope"), Err(Error::UnknownName(_))));
    for name in GRAPH_NAMES {
        named_graph(name).unwrap();
    }
}

fn check_structure(g: &RegularGraph) {
    let d = g.degree();
    for x in 0..g.vertex_count() {
        assert_eq!(g.out_edges(x).len(), d);
        assert_eq!(g.in_edges(x).count(), d);
    }
    for e in 0..g.edge_count() {
        let r = g.reverse(e);
        assert_eq!(g.reverse(r), e);
        assert_eq!(g.iota(r), g.tau(e));
        assert_eq!(g.tau(r), g.iota(e));
        assert_ne!(g.iota(e), g.tau(e));
    }
    let mut pairs: Vec<_> = g.directed_edges().to_vec();
    pairs.sort();
    pairs.dedup();
    assert_eq!(pairs.len(), g.edge_count());
    assert!(g.distances_from(0).iter().all(|&d| d != usize::MAX));
}

#[test]
fn random_regular_is_deterministic() {
    let a = random_regular(10, 3, 1).unwrap();
    let b = random_regular(10, 3, 1).unwrap();
    assert_eq!(a.to_edge_list(), b.to_edge_list());
}

#[test]
fn random_regular_parity() {
    for seed in 0..5 {
        assert!(matches!(random_regular(5, 3, seed), Err(Error::ParityError { .. })));
    }
}

#[test]
fn random_regular_50_4() {
    let g = random_regular(50, 4, 7).unwrap();
    assert_eq!((g.vertex_count(), g.q()), (50, 3));
    check_structure(&g);
    // Rebuilding from the emitted edge list runs every validation again.
    let again = parse_edge_list(&g.to_edge_list()).unwrap();
    assert_eq!(again.to_edge_list(), g.to_edge_list());
}

#[test]
fn serialization_round_trips() {
    let g = named_graph("heawood").unwrap();
    let back = RegularGraph::from_json(&g.to_json()).unwrap();
    assert_eq!(back.to_edge_list(), g.to_edge_list());
    assert_eq!(parse_edge_list(&g.to_edge_list()).unwrap().to_json(), g.to_json());
}

#[test]
fn path_enumeration_counts() {
    let g = named_graph("petersen").unwrap();
    assert_eq!(nb_paths(&g, None, 1).len(), 30);
    assert_eq!(nb_paths(&g, None, 3).len(), 120);
    for x in 0..g.vertex_count() {
        let p = nb_paths(&g, Some(x), 0);
        assert_eq!(p.len(), 1);
        assert!(p[0].is_empty());
    }
}

/// Brute-force enumeration of non-backtracking edge sequences.
fn brute_paths(g: &RegularGraph, k: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0..g.edge_count()).map(|e| vec![e]).collect();
    for _ in 1..k {
        let mut next = Vec::new();
        for p in &out {
            let last = *p.last().unwrap();
            for f in 0..g.edge_count() {
                if g.iota(f) == g.tau(last) && f != g.reverse(last) {
                    let mut q = p.clone();
                    q.push(f);
                    next.push(q);
                }
            }
        }
        out = next;
    }
    out
}

#[test]
fn path_index_is_a_bijection_onto_brute_force_paths() {
    for name in ["k4", "petersen", "k33"] {
        let g = named_graph(name).unwrap();
        for k in 1..=4 {
            let mut brute = brute_paths(&g, k);
            brute.sort();
            let mut ours: Vec<Vec<usize>> = (0..g.path_count(k)).map(|i| g.path_from_index(i, k)).collect();
            for (i, p) in ours.iter().enumerate() {
                assert_eq!(g.path_index(p), i);
            }
            ours.sort();
            assert_eq!(ours, brute, "{name} k={k}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_graphs_are_valid(half in 3usize..15, seed in 0u64..1000) {
        let g = random_regular(2 * half, 3, seed).unwrap();
        check_structure(&g);
        prop_assert_eq!(g.path_count(3), g.edge_count() * g.q() * g.q());
    }

    #[test]
    fn path_index_round_trip(seed in 0u64..200, k in 1usize..5, pick in 0usize..10_000) {
        let g = random_regular(12, 3, seed).unwrap();
        let i = pick % g.path_count(k);
        let p = g.path_from_index(i, k);
        prop_assert!(g.is_nb_path(&p));
        prop_assert_eq!(g.path_index(&p), i);
    }
}
