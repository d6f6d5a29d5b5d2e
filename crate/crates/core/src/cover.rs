//! Truncated universal cover: the classical side of every identity.
//!
//! The cover is the radius-`R` ball of the `(q+1)`-regular tree around a root
//! `o`, unfolded from the graph along non-backtracking paths. Boundary
//! cylinders are the depth-`R` vertices; boundary-value measures, Poisson
//! transforms, Radon transforms and the horocycle intertwiner are all exact
//! finite sums over them.
//!
//! Cylinder sums are grouped by the vertex where the ray from `x` meets the
//! ray from `o`: the horocycle bracket only depends on that vertex, so each
//! group reduces to a subtree mass.

use std::collections::VecDeque;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::graph::RegularGraph;
use crate::spectral::SpectralParameter;
use crate::symbols::CylinderSymbol;

/// Largest number of tree vertices a cover may hold.
pub const VERTEX_BUDGET: usize = 1_000_000;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct TruncatedCover {
    radius: usize,
    q: usize,
    root: usize,
    parent: Vec<usize>,
    depth: Vec<usize>,
    children: Vec<Vec<usize>>,
    /// Graph edge projected from the tree edge `parent -> v`.
    in_edge: Vec<usize>,
    projection: Vec<usize>,
    canonical: Vec<bool>,
    lift_of: Vec<usize>,
    level_start: Vec<usize>,
}

/// The cylinder `Omega(o, y)` of boundary points whose ray from the root passes
/// through the tree vertex `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoundaryCylinder {
    pub vertex: usize,
    pub depth: usize,
}

/// Number of tree vertices within distance `radius` of a vertex.
pub fn ball_size(q: usize, radius: usize) -> usize {
    let mut total = 1usize;
    let mut sphere = q + 1;
    for _ in 0..radius {
        total = total.saturating_add(sphere);
        sphere = sphere.saturating_mul(q);
    }
    total
}

/// Default radius: diameter plus symbol depth plus three.
pub fn default_radius(g: &RegularGraph, symbol_depth: usize) -> usize {
    g.diameter() + symbol_depth + 3
}

pub fn build_cover(g: &RegularGraph, root: usize, radius: usize) -> Result<TruncatedCover> {
    assert!(radius >= 1, "cover radius must be positive");
    let size = ball_size(g.q(), radius);
    if size > VERTEX_BUDGET {
        return Err(Error::DepthTooLarge(size));
    }
    let mut cov = TruncatedCover {
        radius,
        q: g.q(),
        root: 0,
        parent: Vec::with_capacity(size),
        depth: Vec::with_capacity(size),
        children: Vec::with_capacity(size),
        in_edge: Vec::with_capacity(size),
        projection: Vec::with_capacity(size),
        canonical: Vec::new(),
        lift_of: Vec::new(),
        level_start: vec![0],
    };
    cov.push(NONE, 0, NONE, root);
    let mut level = vec![0usize];
    for d in 0..radius {
        cov.level_start.push(cov.parent.len());
        let mut next = Vec::with_capacity(level.len() * g.q());
        for &v in &level {
            let edges: Vec<usize> = if d == 0 {
                g.out_edges(root).to_vec()
            } else {
                g.successors(cov.in_edge[v]).to_vec()
            };
            for e in edges {
                let c = cov.push(v, d + 1, e, g.tau(e));
                cov.children[v].push(c);
                next.push(c);
            }
        }
        level = next;
    }
    cov.level_start.push(cov.parent.len());
    cov.set_canonical_lifts(g, root)?;
    Ok(cov)
}

impl TruncatedCover {
    fn push(&mut self, parent: usize, depth: usize, in_edge: usize, proj: usize) -> usize {
        self.parent.push(parent);
        self.depth.push(depth);
        self.children.push(Vec::new());
        self.in_edge.push(in_edge);
        self.projection.push(proj);
        self.parent.len() - 1
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        (self.parent[v] != NONE).then_some(self.parent[v])
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn projection(&self, v: usize) -> usize {
        self.projection[v]
    }

    pub fn is_canonical(&self, v: usize) -> bool {
        self.canonical[v]
    }

    /// Canonical lift of each graph vertex.
    pub fn canonical_lifts(&self) -> &[usize] {
        &self.lift_of
    }

    pub fn max_lift_depth(&self) -> usize {
        self.lift_of.iter().map(|&v| self.depth[v]).max().unwrap_or(0)
    }

    /// Tree vertices at distance `d` from the root.
    pub fn level(&self, d: usize) -> std::ops::Range<usize> {
        self.level_start[d]..self.level_start[d + 1]
    }

    /// Cylinders of depth `d >= 1`.
    pub fn cylinders(&self, d: usize) -> Vec<BoundaryCylinder> {
        self.level(d)
            .map(|vertex| BoundaryCylinder { vertex, depth: d })
            .collect()
    }

    /// Tree neighbours: parent (if any) followed by children.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.parent(v).into_iter().chain(self.children[v].iter().copied())
    }

    /// Graph edge projected from the tree step `a -> b` between neighbours.
    pub fn step_edge(&self, a: usize, b: usize) -> usize {
        if self.parent[b] == a {
            self.in_edge[b]
        } else {
            debug_assert_eq!(self.parent[a], b);
            self.in_edge[a] ^ 1
        }
    }

    /// Tree neighbour of `v` reached along the graph edge `e` leaving `pi(v)`.
    pub fn follow(&self, v: usize, e: usize) -> Option<usize> {
        if self.parent[v] != NONE && self.in_edge[v] ^ 1 == e {
            return Some(self.parent[v]);
        }
        self.children[v].iter().copied().find(|&c| self.in_edge[c] == e)
    }

    /// Lifts a graph vertex function to the tree.
    pub fn lift(&self, phi: &[C64]) -> Vec<C64> {
        self.projection.iter().map(|&x| phi[x]).collect()
    }

    /// Chooses canonical lifts from a breadth-first spanning tree of the graph
    /// rooted at `spanning_root`. The lift of `spanning_root` is reached from
    /// the cover root along a breadth-first path, and every other vertex is
    /// lifted along the spanning tree from there.
    pub fn set_canonical_lifts(&mut self, g: &RegularGraph, spanning_root: usize) -> Result<()> {
        let root_vertex = self.projection[self.root];
        let to_start = bfs_parent_edges(g, root_vertex);
        let mut start = self.root;
        for e in path_edges(g, &to_start, root_vertex, spanning_root) {
            start = self.follow(start, e).ok_or(Error::DepthTooSmall {
                radius: self.radius,
                needed: self.radius + 1,
            })?;
        }
        let tree = bfs_parent_edges(g, spanning_root);
        let mut lift_of = vec![NONE; g.vertex_count()];
        lift_of[spanning_root] = start;
        let order = bfs_order(g, spanning_root);
        for &x in order.iter().skip(1) {
            let e = tree[x];
            let from = lift_of[g.iota(e)];
            lift_of[x] = self.follow(from, e).ok_or(Error::DepthTooSmall {
                radius: self.radius,
                needed: self.radius + 1,
            })?;
        }
        self.canonical = vec![false; self.vertex_count()];
        for &v in &lift_of {
            self.canonical[v] = true;
        }
        self.lift_of = lift_of;
        Ok(())
    }

    pub fn lca(&self, mut a: usize, mut b: usize) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a];
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b];
        }
        while a != b {
            a = self.parent[a];
            b = self.parent[b];
        }
        a
    }

    pub fn distance(&self, a: usize, b: usize) -> usize {
        let l = self.lca(a, b);
        self.depth[a] + self.depth[b] - 2 * self.depth[l]
    }

    /// Tree path from `a` to `b`, both ends included.
    pub fn path(&self, a: usize, b: usize) -> Vec<usize> {
        let l = self.lca(a, b);
        let mut up = vec![a];
        let mut v = a;
        while v != l {
            v = self.parent[v];
            up.push(v);
        }
        let mut down = Vec::new();
        let mut v = b;
        while v != l {
            down.push(v);
            v = self.parent[v];
        }
        up.extend(down.into_iter().rev());
        up
    }

    fn ancestors(&self, v: usize) -> Vec<usize> {
        let mut out = vec![v];
        let mut x = v;
        while self.parent[x] != NONE {
            x = self.parent[x];
            out.push(x);
        }
        out.reverse();
        out
    }

    /// Graph edges projected from a tree vertex sequence.
    pub fn project_path(&self, verts: &[usize]) -> Vec<usize> {
        verts.windows(2).map(|w| self.step_edge(w[0], w[1])).collect()
    }
}

fn bfs_parent_edges(g: &RegularGraph, root: usize) -> Vec<usize> {
    let mut parent = vec![NONE; g.vertex_count()];
    let mut seen = vec![false; g.vertex_count()];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(x) = queue.pop_front() {
        for &e in g.out_edges(x) {
            let y = g.tau(e);
            if !seen[y] {
                seen[y] = true;
                parent[y] = e;
                queue.push_back(y);
            }
        }
    }
    parent
}

fn bfs_order(g: &RegularGraph, root: usize) -> Vec<usize> {
    let mut order = vec![root];
    let mut seen = vec![false; g.vertex_count()];
    seen[root] = true;
    let mut i = 0;
    while i < order.len() {
        let x = order[i];
        for &e in g.out_edges(x) {
            let y = g.tau(e);
            if !seen[y] {
                seen[y] = true;
                order.push(y);
            }
        }
        i += 1;
    }
    order
}

fn path_edges(g: &RegularGraph, parent: &[usize], root: usize, target: usize) -> Vec<usize> {
    let mut edges = Vec::new();
    let mut x = target;
    while x != root {
        let e = parent[x];
        edges.push(e);
        x = g.iota(e);
    }
    edges.reverse();
    edges
}

/// `<x, omega> = d(o, y) - d(x, y)` for `omega` in the cylinder of `y`.
pub fn horocycle_bracket(cov: &TruncatedCover, x: usize, c: BoundaryCylinder) -> Result<i64> {
    let dx = cov.depth(x);
    if c.depth <= dx + 1 {
        return Err(Error::CylinderTooShallow {
            depth: c.depth,
            vertex_depth: dx,
        });
    }
    Ok(c.depth as i64 - cov.distance(x, c.vertex) as i64)
}

/// Boundary value of `phi_lift` with eigenvalue `mu` on `c`:
/// `mu^{-(d-1)} (phi(y) - phi(parent y) / mu) / (mu - 1/mu)`.
pub fn boundary_measure_mu(cov: &TruncatedCover, phi_lift: &[C64], mu: C64, c: BoundaryCylinder) -> C64 {
    let y = c.vertex;
    let p = cov.parent[y];
    mu.powi(-(c.depth as i32 - 1)) * (phi_lift[y] - phi_lift[p] / mu) / (mu - 1.0 / mu)
}

pub fn boundary_measure(
    cov: &TruncatedCover,
    phi_lift: &[C64],
    sp: &SpectralParameter,
    c: BoundaryCylinder,
) -> Result<C64> {
    if sp.is_exceptional() {
        return Err(Error::ExceptionalParameter(format!("{}", sp.mu)));
    }
    Ok(boundary_measure_mu(cov, phi_lift, sp.mu, c))
}

/// Measures of every depth-`R` cylinder, in level order.
pub fn measure_table(cov: &TruncatedCover, phi_lift: &[C64], mu: C64) -> Vec<C64> {
    let r = cov.radius();
    cov.level(r)
        .map(|y| boundary_measure_mu(cov, phi_lift, mu, BoundaryCylinder { vertex: y, depth: r }))
        .collect()
}

/// Harmonic measure `nu_o`: each depth-`R` cylinder has mass `1/((q+1) q^{R-1})`.
pub fn harmonic_table(cov: &TruncatedCover) -> Vec<C64> {
    let r = cov.radius();
    let mass = 1.0 / ((cov.q() + 1) as f64 * (cov.q() as f64).powi(r as i32 - 1));
    vec![C64::new(mass, 0.0); cov.level(r).len()]
}

/// A finitely additive boundary measure given on depth-`R` cylinders, with
/// the subtree totals needed for grouped cylinder sums.
#[derive(Debug, Clone)]
pub struct BoundaryMeasure {
    /// Total measure of the cylinders below each tree vertex.
    mass: Vec<C64>,
}

impl BoundaryMeasure {
    pub fn new(cov: &TruncatedCover, table: &[C64]) -> Self {
        let r = cov.radius();
        assert_eq!(table.len(), cov.level(r).len(), "measure table must cover depth R");
        let mut mass = vec![C64::new(0.0, 0.0); cov.vertex_count()];
        let start = cov.level(r).start;
        for (i, m) in table.iter().enumerate() {
            mass[start + i] = *m;
        }
        for v in (1..cov.vertex_count()).rev() {
            let p = cov.parent[v];
            let m = mass[v];
            mass[p] += m;
        }
        Self { mass }
    }

    /// Total measure of the cylinders below `v`.
    pub fn mass(&self, v: usize) -> C64 {
        self.mass[v]
    }

    /// `sum of kappa^{<x, C>} m(C)` over the cylinders below the root but not
    /// below `cut`, where `top` is an ancestor of `x` (or `x` itself) and `cut`
    /// is the child of `top` towards `x` (`None` when `top = x`). The cylinders
    /// are grouped by their meeting depth `j` with the chain root..top, which
    /// fixes the bracket at `2j - d(o, x)`.
    fn ancestor_sum(&self, cov: &TruncatedCover, x: usize, top: usize, cut: Option<usize>, kappa: C64) -> C64 {
        let dx = cov.depth(x) as i32;
        let chain = cov.ancestors(top);
        let mut total = C64::new(0.0, 0.0);
        for (j, &a) in chain.iter().enumerate() {
            let below = if j + 1 < chain.len() {
                self.mass[chain[j + 1]]
            } else {
                cut.map(|c| self.mass[c]).unwrap_or(C64::new(0.0, 0.0))
            };
            total += kappa.powi(2 * j as i32 - dx) * (self.mass[a] - below);
        }
        total
    }

    /// Weighted mass `sum kappa^{<x, C>} m(C)` over the cylinders whose ray from
    /// `x` starts with the tree path `ray` (`ray[0] = x`).
    pub fn cell_sum(&self, cov: &TruncatedCover, ray: &[usize], kappa: C64) -> C64 {
        let x = ray[0];
        if ray.len() == 1 {
            return self.ancestor_sum(cov, x, x, None, kappa);
        }
        let v = *ray.last().unwrap();
        let prev = ray[ray.len() - 2];
        if cov.parent[v] == prev {
            let l = cov.depth(cov.lca(x, v)) as i32;
            kappa.powi(2 * l - cov.depth(x) as i32) * self.mass[v]
        } else {
            self.ancestor_sum(cov, x, v, Some(prev), kappa)
        }
    }
}

/// Poisson transform at `x` of a measure given on depth-`R` cylinders:
/// `sum over C of m(C) mu^{<x, C>}`.
pub fn poisson_forward(cov: &TruncatedCover, table: &[C64], sp: &SpectralParameter, x: usize) -> Result<C64> {
    check_depth(cov, x)?;
    Ok(BoundaryMeasure::new(cov, table).cell_sum(cov, &[x], sp.mu))
}

/// Poisson transform at every vertex of depth below `R - 1`.
pub fn poisson_forward_all(cov: &TruncatedCover, table: &[C64], mu: C64) -> Vec<(usize, C64)> {
    let m = BoundaryMeasure::new(cov, table);
    (0..cov.level(cov.radius() - 1).start)
        .map(|x| (x, m.cell_sum(cov, &[x], mu)))
        .collect()
}

/// The Poisson sum term by term over depth-`R` cylinders.
pub fn poisson_forward_direct(cov: &TruncatedCover, table: &[C64], mu: C64, x: usize) -> Result<C64> {
    let r = cov.radius();
    let mut total = C64::new(0.0, 0.0);
    for (i, c) in cov.cylinders(r).into_iter().enumerate() {
        total += table[i] * mu.powi(horocycle_bracket(cov, x, c)? as i32);
    }
    Ok(total)
}

fn check_depth(cov: &TruncatedCover, x: usize) -> Result<()> {
    if cov.depth(x) + 1 >= cov.radius() {
        return Err(Error::CylinderTooShallow {
            depth: cov.radius(),
            vertex_depth: cov.depth(x),
        });
    }
    Ok(())
}

type RayEval<'a> = Box<dyn Fn(&[usize]) -> Result<C64> + 'a>;

/// A locally constant function on the tree's phase space: its value at
/// `(x, omega)` depends on the first `ray_len` steps of the ray from `x`
/// towards `omega`, passed as the tree vertex list `ray` with `ray[0] = x`.
pub struct PhaseFunction<'a> {
    pub ray_len: usize,
    eval: RayEval<'a>,
}

impl<'a> PhaseFunction<'a> {
    pub fn new(ray_len: usize, eval: impl Fn(&[usize]) -> Result<C64> + 'a) -> Self {
        Self {
            ray_len,
            eval: Box::new(eval),
        }
    }

    /// Evaluates on a ray of at least `ray_len` steps.
    pub fn eval(&self, ray: &[usize]) -> Result<C64> {
        (self.eval)(&ray[..=self.ray_len])
    }
}

/// `Xi * (a o pi)`: the symbol read along the projected ray, cut off to the
/// canonical lifts.
pub fn lifted_symbol<'a>(cov: &'a TruncatedCover, g: &'a RegularGraph, a: &'a CylinderSymbol) -> PhaseFunction<'a> {
    PhaseFunction::new(a.depth.max(1), move |ray| {
        let x = ray[0];
        if !cov.is_canonical(x) {
            return Ok(C64::new(0.0, 0.0));
        }
        let edges = cov.project_path(&ray[..=a.depth.max(1)]);
        Ok(a.at(g, cov.projection(x), &edges))
    })
}

/// All non-backtracking tree rays of `len` steps from `x`.
pub fn rays_from(cov: &TruncatedCover, x: usize, len: usize) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut stack = vec![vec![x]];
    while let Some(ray) = stack.pop() {
        if ray.len() == len + 1 {
            out.push(ray);
            continue;
        }
        let v = *ray.last().unwrap();
        let back = (ray.len() >= 2).then(|| ray[ray.len() - 2]);
        let next: Vec<usize> = cov.neighbors(v).filter(|&w| Some(w) != back).collect();
        if next.len() < cov.q() {
            return Err(Error::DepthTooSmall {
                radius: cov.radius(),
                needed: cov.radius() + 1,
            });
        }
        for w in next.into_iter().rev() {
            let mut r = ray.clone();
            r.push(w);
            stack.push(r);
        }
    }
    Ok(out)
}

/// `sum over x in xs of sum over boundary pairs (w1, w2) whose geodesic passes
/// through x of F(x, w1) mu^{<x,w1>} mu_fwd(w1) mu_w^{<x,w2>} mu_bwd(w2)`.
///
/// This is the Radon-transform pairing of `mu_fwd ⊗ mu_bwd` with `F`, summed
/// over the cylinders at depth `R`.
pub fn radon_pairing(
    cov: &TruncatedCover,
    f: &PhaseFunction,
    xs: &[usize],
    fwd: &BoundaryMeasure,
    mu: C64,
    bwd: &BoundaryMeasure,
    mu_w: C64,
) -> Result<C64> {
    let mut total = C64::new(0.0, 0.0);
    for &x in xs {
        if cov.depth(x) + f.ray_len + 1 > cov.radius() {
            return Err(Error::DepthTooSmall {
                radius: cov.radius(),
                needed: cov.depth(x) + f.ray_len + 1,
            });
        }
        let dirs: Vec<usize> = cov.neighbors(x).collect();
        let mut fa = vec![C64::new(0.0, 0.0); dirs.len()];
        for ray in rays_from(cov, x, f.ray_len)? {
            let value = f.eval(&ray)?;
            if value == C64::new(0.0, 0.0) {
                continue;
            }
            let d = dirs.iter().position(|&w| w == ray[1]).unwrap();
            fa[d] += value * fwd.cell_sum(cov, &ray, mu);
        }
        let fb: Vec<C64> = dirs.iter().map(|&w| bwd.cell_sum(cov, &[x, w], mu_w)).collect();
        let sum_b: C64 = fb.iter().sum();
        for (a, b) in fa.iter().zip(&fb) {
            total += a * (sum_b - b);
        }
    }
    Ok(total)
}

/// Weighted Radon transform of `F` on the geodesic between two disjoint
/// depth-`R` cylinders: `sum over x on the geodesic of F(x, w1) p_s(x, w1)
/// p_{-conj s'}(x, w2)`. Vertices too close to the truncation to carry a
/// full ray are assumed to lie outside the support of `F`.
pub fn radon_transform(
    cov: &TruncatedCover,
    f: &PhaseFunction,
    mu: C64,
    mu_w: C64,
    c1: BoundaryCylinder,
    c2: BoundaryCylinder,
) -> Result<C64> {
    if c1.vertex == c2.vertex || cov.lca(c1.vertex, c2.vertex) == c1.vertex || cov.lca(c1.vertex, c2.vertex) == c2.vertex {
        return Err(Error::CylindersOverlap);
    }
    let geodesic = cov.path(c1.vertex, c2.vertex);
    let mut total = C64::new(0.0, 0.0);
    for (i, &x) in geodesic.iter().enumerate() {
        if cov.depth(x) + 1 >= c1.depth.min(c2.depth) || i < f.ray_len {
            continue;
        }
        let ray: Vec<usize> = geodesic[i - f.ray_len..=i].iter().rev().copied().collect();
        let value = f.eval(&ray)?;
        if value == C64::new(0.0, 0.0) {
            continue;
        }
        let b1 = horocycle_bracket(cov, x, c1)? as i32;
        let b2 = horocycle_bracket(cov, x, c2)? as i32;
        total += value * mu.powi(b1) * mu_w.powi(b2);
    }
    Ok(total)
}

/// Smallest radius for which [`classical_ps`] is exact at symbol depth `k`.
pub fn required_radius(cov: &TruncatedCover, k: usize) -> usize {
    cov.max_lift_depth() + k.max(1) + 2
}

/// Classical Patterson-Sullivan distribution: the Radon pairing of the
/// boundary values of `phi` and `conj(phi')` with `Xi * (a o pi)`.
pub fn classical_ps(
    cov: &TruncatedCover,
    g: &RegularGraph,
    a: &CylinderSymbol,
    ctx: &crate::distributions::DistributionContext,
) -> Result<C64> {
    let needed = required_radius(cov, a.depth);
    if cov.radius() < needed {
        return Err(Error::DepthTooSmall {
            radius: cov.radius(),
            needed,
        });
    }
    let (fwd, bwd) = context_measures(cov, ctx);
    let f = lifted_symbol(cov, g, a);
    radon_pairing(cov, &f, cov.canonical_lifts(), &fwd, ctx.mu(), &bwd, ctx.mu_w())
}

/// Boundary values of `phi` (eigenvalue `mu`) and of `conj(phi')` (eigenvalue
/// `mu_w`) as subtree-aggregated measures.
pub fn context_measures(
    cov: &TruncatedCover,
    ctx: &crate::distributions::DistributionContext,
) -> (BoundaryMeasure, BoundaryMeasure) {
    let phi = cov.lift(&ctx.phi);
    let phi_bar: Vec<C64> = cov.lift(&ctx.phi_prime).iter().map(|z| z.conj()).collect();
    (
        BoundaryMeasure::new(cov, &measure_table(cov, &phi, ctx.mu())),
        BoundaryMeasure::new(cov, &measure_table(cov, &phi_bar, ctx.mu_w())),
    )
}

/// Literal double sum over ordered pairs of distinct depth-`R` cylinders.
pub fn classical_ps_by_pairs(
    cov: &TruncatedCover,
    g: &RegularGraph,
    a: &CylinderSymbol,
    ctx: &crate::distributions::DistributionContext,
) -> Result<C64> {
    let r = cov.radius();
    let phi = cov.lift(&ctx.phi);
    let phi_bar: Vec<C64> = cov.lift(&ctx.phi_prime).iter().map(|z| z.conj()).collect();
    let m1 = measure_table(cov, &phi, ctx.mu());
    let m2 = measure_table(cov, &phi_bar, ctx.mu_w());
    let f = lifted_symbol(cov, g, a);
    let cyl = cov.cylinders(r);
    let mut total = C64::new(0.0, 0.0);
    for (i, &c1) in cyl.iter().enumerate() {
        for (j, &c2) in cyl.iter().enumerate() {
            if i == j {
                continue;
            }
            total += m1[i] * m2[j] * radon_transform(cov, &f, ctx.mu(), ctx.mu_w(), c1, c2)?;
        }
    }
    Ok(total)
}

/// Horocycle intertwiner
/// `(I_n F)(x, omega) = sum over m <= n and h on the horocycle of x through
/// omega with d(h, x) = 2m of mu_w^{-2m} F(h, omega)`.
///
/// The points `h` are reached by walking `m` steps along the ray towards
/// `omega` to a vertex `v`, leaving `v` by an edge that points neither back
/// nor towards `omega`, and continuing `m - 1` non-backtracking steps.
pub fn intertwiner<'a>(
    cov: &'a TruncatedCover,
    f: &'a PhaseFunction<'a>,
    mu_w: C64,
    n: usize,
) -> PhaseFunction<'a> {
    let ray_len = f.ray_len.max(n + 1);
    PhaseFunction::new(ray_len, move |ray| {
        let mut total = f.eval(ray)?;
        for m in 1..=n {
            let weight = mu_w.powi(-2 * m as i32);
            let mut sum = C64::new(0.0, 0.0);
            for h_path in horocycle_paths(cov, ray, m)? {
                // h_path runs from v down to h; the ray from h reverses it and
                // continues along the ray from x beyond v.
                let mut h_ray: Vec<usize> = h_path.iter().rev().copied().collect();
                h_ray.extend_from_slice(&ray[m + 1..]);
                if h_ray.len() < f.ray_len + 1 {
                    return Err(Error::SupportTooWide);
                }
                sum += f.eval(&h_ray)?;
            }
            total += weight * sum;
        }
        Ok(total)
    })
}

/// Paths `v = ray[m], ..., h` of `m` steps leaving `v` away from both
/// `ray[m-1]` and `ray[m+1]`.
fn horocycle_paths(cov: &TruncatedCover, ray: &[usize], m: usize) -> Result<Vec<Vec<usize>>> {
    let v = ray[m];
    let mut out = Vec::new();
    let mut stack: Vec<Vec<usize>> = Vec::new();
    if cov.depth(v) == cov.radius() {
        return Err(Error::SupportTooWide);
    }
    for w in cov.neighbors(v) {
        if w != ray[m - 1] && w != ray[m + 1] {
            stack.push(vec![v, w]);
        }
    }
    while let Some(path) = stack.pop() {
        if path.len() == m + 1 {
            out.push(path);
            continue;
        }
        let tip = *path.last().unwrap();
        if cov.depth(tip) == cov.radius() {
            return Err(Error::SupportTooWide);
        }
        let back = path[path.len() - 2];
        for w in cov.neighbors(tip) {
            if w != back {
                let mut p = path.clone();
                p.push(w);
                stack.push(p);
            }
        }
    }
    Ok(out)
}

/// Tree vertices within distance `r` of some canonical lift.
pub fn lift_neighborhood(cov: &TruncatedCover, r: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; cov.vertex_count()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &v in cov.canonical_lifts() {
        dist[v] = 0;
        queue.push_back(v);
    }
    while let Some(v) = queue.pop_front() {
        if dist[v] == r {
            continue;
        }
        for w in cov.neighbors(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    (0..cov.vertex_count()).filter(|&v| dist[v] != usize::MAX).collect()
}

/// Cover side of the off-diagonal identity:
/// the Radon pairing of `mu_phi ⊗ conj(mu_phi')` with `I_n(Xi (a o pi))`.
pub fn intertwined_ps(
    cov: &TruncatedCover,
    g: &RegularGraph,
    a: &CylinderSymbol,
    ctx: &crate::distributions::DistributionContext,
    n: usize,
) -> Result<C64> {
    let (fwd, bwd) = context_measures(cov, ctx);
    let f = lifted_symbol(cov, g, a);
    let fi = intertwiner(cov, &f, ctx.mu_w(), n);
    let xs = lift_neighborhood(cov, 2 * n);
    radon_pairing(cov, &fi, &xs, &fwd, ctx.mu(), &bwd, ctx.mu_w())
}

/// Radius for which [`intertwined_ps`] is exact at symbol depth `k` and level `n`.
pub fn intertwiner_radius(max_lift_depth: usize, k: usize, n: usize) -> usize {
    max_lift_depth + 4 * n + k.max(1) + 2
}

/// `Op(a) phi(x)` from the boundary value based at the root:
/// `sum over C of mu^{<x, C>} a(pi x, ray x -> C) mu_o(C)`.
pub fn op_apply_cover(
    cov: &TruncatedCover,
    g: &RegularGraph,
    a: &CylinderSymbol,
    phi: &[C64],
    sp: &SpectralParameter,
    x: usize,
) -> Result<C64> {
    check_depth(cov, x)?;
    if cov.depth(x) + a.depth + 1 > cov.radius() {
        return Err(Error::DepthTooSmall {
            radius: cov.radius(),
            needed: cov.depth(x) + a.depth + 1,
        });
    }
    let lift = cov.lift(phi);
    let m = BoundaryMeasure::new(cov, &measure_table(cov, &lift, sp.mu));
    if a.depth == 0 {
        return Ok(a.values[cov.projection(x)] * m.cell_sum(cov, &[x], sp.mu));
    }
    let mut total = C64::new(0.0, 0.0);
    for ray in rays_from(cov, x, a.depth)? {
        let edges = cov.project_path(&ray);
        total += a.at(g, cov.projection(x), &edges) * m.cell_sum(cov, &ray, sp.mu);
    }
    Ok(total)
}

/// One approximant of the measure-recovery limit, with the alternative
/// published prefactor reported beside the corrected one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureLimit {
    pub n: usize,
    /// `mu^{-n} sum over X_n(U) of phi`.
    pub raw: C64,
    /// `(z^2 - 1) / (z^2 - 1/q)`, the factor that recovers the measure.
    pub prefactor: C64,
    /// `(z^2 - 1/q) / (z^2 - 1)`, the reciprocal factor.
    pub published_prefactor: C64,
    /// `prefactor * raw`.
    pub value: C64,
    /// `published_prefactor * raw`.
    pub published_value: C64,
}

/// Approximates the measure of `U` from the Poisson transform of the stored
/// measure on the vertices of `U` at distance `n` from the root.
pub fn measure_limit(
    cov: &TruncatedCover,
    table: &[C64],
    sp: &SpectralParameter,
    u: BoundaryCylinder,
    n: usize,
) -> Result<MeasureLimit> {
    if sp.z.norm() <= 1.0 + 1e-12 {
        return Err(Error::TemperedParameter);
    }
    if n + 2 > cov.radius() || n < u.depth {
        return Err(Error::DepthTooSmall {
            radius: cov.radius(),
            needed: n + 2,
        });
    }
    let m = BoundaryMeasure::new(cov, table);
    let mut sum = C64::new(0.0, 0.0);
    for x in cov.level(n) {
        let mut a = x;
        while cov.depth(a) > u.depth {
            a = cov.parent[a];
        }
        if a == u.vertex {
            sum += m.cell_sum(cov, &[x], sp.mu);
        }
    }
    let raw = sp.mu.powi(-(n as i32)) * sum;
    let z2 = sp.z * sp.z;
    let inv_q = 1.0 / sp.q as f64;
    let prefactor = (z2 - 1.0) / (z2 - inv_q);
    let published_prefactor = (z2 - inv_q) / (z2 - 1.0);
    Ok(MeasureLimit {
        n,
        raw,
        prefactor,
        published_prefactor,
        value: prefactor * raw,
        published_value: published_prefactor * raw,
    })
}
