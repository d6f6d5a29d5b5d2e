//! Finite `(q+1)`-regular graphs and their non-backtracking edge structure.
//!
//! Undirected edges are normalized to `u < v` and sorted; undirected edge `i`
//! produces the directed edges `2i = u -> v` and `2i + 1 = v -> u`, so
//! `reverse(e) = e ^ 1`. Out-edge and successor tables are sorted by terminal
//! vertex, which fixes the enumeration order of non-backtracking paths.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rejection budget for the pairing model.
pub const RANDOM_RETRY_BUDGET: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularGraph {
    vertex_count: usize,
    q: usize,
    /// `(iota, tau)` per directed edge.
    edges: Vec<(usize, usize)>,
    /// Outgoing edges per vertex, sorted by terminal vertex.
    out_edges: Vec<Vec<usize>>,
    /// Successors `e'` of `e` (`tau(e) = iota(e')`, `e' != reverse(e)`), sorted by terminal vertex.
    successors: Vec<Vec<usize>>,
    /// Predecessors of `e`, sorted by initial vertex.
    predecessors: Vec<Vec<usize>>,
    /// Position of `e` within `out_edges[iota(e)]`.
    out_rank: Vec<usize>,
    /// Position of `e` within `successors[p]` for any predecessor `p` of `e`.
    succ_rank: Vec<Vec<(usize, usize)>>,
}

/// A non-backtracking path: a base vertex and `k >= 0` chained edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NBPath {
    pub base: usize,
    pub edges: Vec<usize>,
}

impl NBPath {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    v: usize,
    q: usize,
    edges: Vec<[usize; 2]>,
}

impl RegularGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn degree(&self) -> usize {
        self.q + 1
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn iota(&self, e: usize) -> usize {
        self.edges[e].0
    }

    pub fn tau(&self, e: usize) -> usize {
        self.edges[e].1
    }

    pub fn reverse(&self, e: usize) -> usize {
        e ^ 1
    }

    pub fn directed_edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn out_edges(&self, x: usize) -> &[usize] {
        &self.out_edges[x]
    }

    pub fn successors(&self, e: usize) -> &[usize] {
        &self.successors[e]
    }

    pub fn predecessors(&self, e: usize) -> &[usize] {
        &self.predecessors[e]
    }

    /// Incoming edges at `x`, i.e. reversals of the outgoing ones.
    pub fn in_edges(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.out_edges[x].iter().map(|&e| e ^ 1)
    }

    pub fn find_edge(&self, u: usize, v: usize) -> Option<usize> {
        self.out_edges
            .get(u)?
            .iter()
            .copied()
            .find(|&e| self.edges[e].1 == v)
    }

    /// Undirected edges `(u, v)` with `u < v`, in index order.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        self.edges.iter().step_by(2).copied().collect()
    }

    /// Number of non-backtracking paths of length `k` from a single base.
    pub fn paths_per_base(&self, k: usize) -> usize {
        if k == 0 {
            1
        } else {
            (self.q + 1) * self.q.pow(k as u32 - 1)
        }
    }

    /// Number of non-backtracking paths of length `k` over all bases.
    pub fn path_count(&self, k: usize) -> usize {
        self.vertex_count * self.paths_per_base(k)
    }

    /// Flat index of a path of length `k >= 1` given by its edges.
    ///
    /// The index is the mixed-radix number built from the out-edge position
    /// `iota(e_1) * (q+1) + rank` followed by the successor ranks, so the
    /// order agrees with [`nb_paths`].
    pub fn path_index(&self, edges: &[usize]) -> usize {
        debug_assert!(!edges.is_empty());
        let e1 = edges[0];
        let mut idx = self.edges[e1].0 * (self.q + 1) + self.out_rank[e1];
        for w in edges.windows(2) {
            idx = idx * self.q + self.successor_rank(w[0], w[1]);
        }
        idx
    }

    /// Rank of `next` among the successors of `prev`.
    pub fn successor_rank(&self, prev: usize, next: usize) -> usize {
        self.succ_rank[next]
            .iter()
            .find(|(p, _)| *p == prev)
            .map(|(_, r)| *r)
            .expect("edges do not form a non-backtracking step")
    }

    /// Inverse of [`path_index`] for length `k >= 1`.
    pub fn path_from_index(&self, mut idx: usize, k: usize) -> Vec<usize> {
        let mut ranks = vec![0; k];
        for r in ranks.iter_mut().skip(1).rev() {
            *r = idx % self.q;
            idx /= self.q;
        }
        let x = idx / (self.q + 1);
        let mut edges = Vec::with_capacity(k);
        edges.push(self.out_edges[x][idx % (self.q + 1)]);
        for &r in &ranks[1..] {
            let prev = *edges.last().unwrap();
            edges.push(self.successors[prev][r]);
        }
        edges
    }

    /// Whether `edges` is a chained non-backtracking sequence.
    pub fn is_nb_path(&self, edges: &[usize]) -> bool {
        edges.iter().all(|&e| e < self.edges.len())
            && edges
                .windows(2)
                .all(|w| self.edges[w[0]].1 == self.edges[w[1]].0 && w[1] != w[0] ^ 1)
    }

    /// Edge-list text: a header comment and one `u v` line per undirected edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("# v={} q={}\n", self.vertex_count, self.q);
        for (u, v) in self.undirected_edges() {
            writeln!(s, "{u} {v}").unwrap();
        }
        s
    }

    pub fn to_json(&self) -> String {
        let g = GraphJson {
            v: self.vertex_count,
            q: self.q,
            edges: self.undirected_edges().into_iter().map(|(u, v)| [u, v]).collect(),
        };
        serde_json::to_string(&g).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: GraphJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let edges: Vec<(usize, usize)> = g.edges.iter().map(|e| (e[0], e[1])).collect();
        let graph = build_graph_with_count(g.v, &edges, Some(g.q))?;
        Ok(graph)
    }

    /// Adjacency matrix, row-major.
    pub fn adjacency(&self) -> Vec<f64> {
        let n = self.vertex_count;
        let mut a = vec![0.0; n * n];
        for &(u, v) in &self.edges {
            a[u * n + v] = 1.0;
        }
        a
    }

    /// Breadth-first distances from `root`.
    pub fn distances_from(&self, root: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.vertex_count];
        dist[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for &e in &self.out_edges[x] {
                let y = self.edges[e].1;
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    pub fn diameter(&self) -> usize {
        (0..self.vertex_count)
            .map(|x| *self.distances_from(x).iter().max().unwrap())
            .max()
            .unwrap_or(0)
    }
}

/// Builds a graph from undirected edges over vertices `0..V`, where `V` is one
/// more than the largest vertex mentioned.
pub fn build_graph(edge_list: &[(usize, usize)], expected_q: Option<usize>) -> Result<RegularGraph> {
    let v = edge_list.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
    build_graph_with_count(v, edge_list, expected_q)
}

/// Builds a graph over exactly `vertex_count` vertices.
pub fn build_graph_with_count(
    vertex_count: usize,
    edge_list: &[(usize, usize)],
    expected_q: Option<usize>,
) -> Result<RegularGraph> {
    let mut undirected = BTreeSet::new();
    for &(a, b) in edge_list {
        for x in [a, b] {
            if x >= vertex_count {
                return Err(Error::VertexOutOfRange {
                    vertex: x,
                    count: vertex_count,
                });
            }
        }
        if a == b {
            return Err(Error::NotSimple(format!("loop at vertex {a}")));
        }
        if !undirected.insert((a.min(b), a.max(b))) {
            return Err(Error::NotSimple(format!("repeated edge {{{a}, {b}}}")));
        }
    }
    if vertex_count == 0 {
        return Err(Error::NotConnected);
    }
    let mut degree = vec![0usize; vertex_count];
    for &(a, b) in &undirected {
        degree[a] += 1;
        degree[b] += 1;
    }
    let d = match expected_q {
        Some(q) => q + 1,
        None => degree[0],
    };
    if let Some((vertex, &deg)) = degree.iter().enumerate().find(|(_, &x)| x != d) {
        return Err(Error::NotRegular {
            vertex,
            degree: deg,
            expected: d,
        });
    }
    if d < 3 {
        return Err(Error::QTooSmall(d.saturating_sub(1)));
    }
    let q = d - 1;

    let mut edges = Vec::with_capacity(2 * undirected.len());
    for &(a, b) in &undirected {
        edges.push((a, b));
        edges.push((b, a));
    }
    let mut out_edges = vec![Vec::with_capacity(d); vertex_count];
    for (e, &(a, _)) in edges.iter().enumerate() {
        out_edges[a].push(e);
    }
    for list in &mut out_edges {
        list.sort_by_key(|&e| edges[e].1);
    }
    let mut out_rank = vec![0; edges.len()];
    for list in &out_edges {
        for (r, &e) in list.iter().enumerate() {
            out_rank[e] = r;
        }
    }
    let successors: Vec<Vec<usize>> = (0..edges.len())
        .map(|e| {
            out_edges[edges[e].1]
                .iter()
                .copied()
                .filter(|&f| f != e ^ 1)
                .collect()
        })
        .collect();
    let mut predecessors = vec![Vec::with_capacity(q); edges.len()];
    let mut succ_rank = vec![Vec::with_capacity(q); edges.len()];
    for (e, succ) in successors.iter().enumerate() {
        for (r, &f) in succ.iter().enumerate() {
            predecessors[f].push(e);
            succ_rank[f].push((e, r));
        }
    }
    for list in &mut predecessors {
        list.sort_by_key(|&e| edges[e].0);
    }

    let graph = RegularGraph {
        vertex_count,
        q,
        edges,
        out_edges,
        successors,
        predecessors,
        out_rank,
        succ_rank,
    };
    if graph.distances_from(0).contains(&usize::MAX) {
        return Err(Error::NotConnected);
    }
    Ok(graph)
}

/// Parses the edge-list text format: one `u v` pair per line, `#` comments.
pub fn parse_edge_list(text: &str) -> Result<RegularGraph> {
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<&str> = line.split_whitespace().collect();
        if nums.len() != 2 {
            return Err(Error::Parse(format!("line {}: expected two vertices", lineno + 1)));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
        };
        edges.push((parse(nums[0])?, parse(nums[1])?));
    }
    build_graph(&edges, None)
}

/// Names accepted by [`named_graph`].
pub const GRAPH_NAMES: &[&str] = &[
    "k4",
    "petersen",
    "cube",
    "k33",
    "complete_bipartite_k33",
    "k5",
    "heawood",
    "prism3",
];

/// Deterministic constructions of small named regular graphs.
pub fn named_graph(name: &str) -> Result<RegularGraph> {
    let edges: Vec<(usize, usize)> = match name {
        "k4" => complete(4),
        "k5" => complete(5),
        "petersen" => (0..5)
            .flat_map(|i| [(i, (i + 1) % 5), (i, i + 5), (5 + i, 5 + (i + 2) % 5)])
            .collect(),
        "cube" => (0..8usize)
            .flat_map(|x| (0..3).map(move |b| (x, x ^ (1 << b))))
            .filter(|&(a, b)| a < b)
            .collect(),
        "k33" | "complete_bipartite_k33" => {
            (0..3).flat_map(|a| (3..6).map(move |b| (a, b))).collect()
        }
        "heawood" => (0..14usize)
            .flat_map(|i| {
                let mut v = vec![(i, (i + 1) % 14)];
                if i % 2 == 0 {
                    v.push((i, (i + 5) % 14));
                }
                v
            })
            .collect(),
        "prism3" => vec![(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3), (1, 4), (2, 5)],
        _ => return Err(Error::UnknownName(name.to_string())),
    };
    build_graph(&edges, None)
}

fn complete(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
        .collect()
}

/// Pairing-model sample of a simple connected `degree`-regular graph.
///
/// Samples are rejected and redrawn from the same seeded stream until one is
/// simple and connected.
pub fn random_regular(v: usize, degree: usize, seed: u64) -> Result<RegularGraph> {
    if !(v * degree).is_multiple_of(2) {
        return Err(Error::ParityError { v, degree });
    }
    if degree < 3 {
        return Err(Error::QTooSmall(degree.saturating_sub(1)));
    }
    if v <= degree {
        return Err(Error::InvalidRequest(format!(
            "{v} vertices cannot carry a simple {degree}-regular graph"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<usize> = (0..v).flat_map(|x| std::iter::repeat_n(x, degree)).collect();
    'attempt: for _ in 0..RANDOM_RETRY_BUDGET {
        points.shuffle(&mut rng);
        let mut seen = BTreeSet::new();
        for pair in points.chunks(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a == b || !seen.insert((a, b)) {
                continue 'attempt;
            }
        }
        let edges: Vec<(usize, usize)> = seen.into_iter().collect();
        match build_graph_with_count(v, &edges, Some(degree - 1)) {
            Ok(g) => return Ok(g),
            Err(Error::NotConnected) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::RetryExhausted(RANDOM_RETRY_BUDGET))
}

/// All non-backtracking paths of length `k` from `base` (or from every vertex
/// when `base` is `None`), in flat-index order.
pub fn nb_paths(g: &RegularGraph, base: Option<usize>, k: usize) -> Vec<NBPath> {
    let bases: Vec<usize> = match base {
        Some(x) => vec![x],
        None => (0..g.vertex_count()).collect(),
    };
    let mut out = Vec::new();
    for x in bases {
        if k == 0 {
            out.push(NBPath {
                base: x,
                edges: Vec::new(),
            });
            continue;
        }
        let mut stack: Vec<Vec<usize>> = g.out_edges(x).iter().rev().map(|&e| vec![e]).collect();
        while let Some(path) = stack.pop() {
            if path.len() == k {
                out.push(NBPath { base: x, edges: path });
                continue;
            }
            let last = *path.last().unwrap();
            for &f in g.successors(last).iter().rev() {
                let mut p = path.clone();
                p.push(f);
                stack.push(p);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k4_shape() {
        let g = named_graph("k4").unwrap();
        assert_eq!((g.vertex_count(), g.q(), g.edge_count()), (4, 2, 12));
    }

    #[test]
    fn rejects_triangle_and_k4_minus_edge() {
        assert_eq!(build_graph(&[(0, 1), (1, 2), (2, 0)], None), Err(Error::QTooSmall(1)));
        let k4m = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)];
        assert!(matches!(build_graph(&k4m, None), Err(Error::NotRegular { .. })));
    }

    #[test]
    fn rejects_loops_multi_edges_and_disconnected() {
        assert!(matches!(build_graph(&[(0, 0)], None), Err(Error::NotSimple(_))));
        assert!(matches!(build_graph(&[(0, 1), (1, 0)], None), Err(Error::NotSimple(_))));
        let two_k4: Vec<_> = complete(4)
            .into_iter()
            .chain(complete(4).into_iter().map(|(a, b)| (a + 4, b + 4)))
            .collect();
        assert_eq!(build_graph(&two_k4, None), Err(Error::NotConnected));
    }

    #[test]
    fn named_sizes() {
        for (name, v) in [("petersen", 10), ("cube", 8), ("k33", 6), ("heawood", 14), ("prism3", 6)] {
            let g = named_graph(name).unwrap();
            assert_eq!(g.vertex_count(), v, "{name}");
            assert_eq!(g.q(), 2);
        }
        assert_eq!(named_graph("k5").unwrap().q(), 3);
        assert!(matches!(named_graph("nope"), Err(Error::UnknownName(_))));
    }

    #[test]
    fn reverse_pairing() {
        let g = named_graph("petersen").unwrap();
        for e in 0..g.edge_count() {
            let r = g.reverse(e);
            assert_eq!(g.reverse(r), e);
            assert_eq!(g.iota(r), g.tau(e));
            assert_eq!(g.tau(r), g.iota(e));
        }
    }

    #[test]
    fn path_index_matches_enumeration() {
        let g = named_graph("petersen").unwrap();
        for k in 1..=4 {
            let paths = nb_paths(&g, None, k);
            assert_eq!(paths.len(), g.path_count(k));
            for (i, p) in paths.iter().enumerate() {
                assert_eq!(g.path_index(&p.edges), i);
                assert_eq!(g.path_from_index(i, k), p.edges);
            }
        }
    }

    #[test]
    fn random_parity_and_determinism() {
        assert_eq!(random_regular(5, 3, 9), Err(Error::ParityError { v: 5, degree: 3 }));
        let a = random_regular(10, 3, 1).unwrap();
        let b = random_regular(10, 3, 1).unwrap();
        assert_eq!(a.to_edge_list(), b.to_edge_list());
    }
}
