use num_complex::Complex64 as C64;
use proptest::prelude::*;
use psgraph::distributions::{
    c_function, op_apply, patterson_sullivan, ruelle_distribution, ruelle_invariance, wigner, wigner_ps_relation,
    DistributionContext, RuelleProjector,
};
use psgraph::graph::{named_graph, nb_paths, RegularGraph};
use psgraph::resonant::{cylinder_value, RANK_TOL};
use psgraph::spectral::{complexify, eigh_decompose, spectral_parameter, EigenSpace, SpectralParameter, GROUP_TOL};
use psgraph::symbols::{branch_sum, refine, refine_to, symbol_constant, symbol_random, transfer_pow, CylinderSymbol};
use psgraph::Error;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn one() -> C64 {
    c(1.0, 0.0)
}

fn admissible(g: &RegularGraph) -> Vec<EigenSpace> {
    eigh_decompose(g, GROUP_TOL)
        .unwrap()
        .into_iter()
        .filter(|s| s.parameter.is_admissible())
        .collect()
}

fn space_near(g: &RegularGraph, lambda: f64) -> EigenSpace {
    admissible(g)
        .into_iter()
        .find(|s| (s.parameter.lambda - lambda).abs() < 1e-9)
        .unwrap()
}

fn close(a: C64, b: C64, rel: f64) -> bool {
    (a - b).norm() <= rel * a.norm().max(b.norm()).max(1e-300)
}

#[test]
fn constant_and_random_symbols() {
    let g = named_graph("petersen").unwrap();
    assert_eq!(symbol_constant(&g, 0, one()).values, vec![one(); 10]);
    assert_eq!(symbol_constant(&g, 2, c(0.0, 0.0)).values.len(), 60);
    assert_eq!(symbol_random(&g, 2, 3), symbol_random(&g, 2, 3));
    assert_ne!(symbol_random(&g, 2, 3), symbol_random(&g, 2, 4));
    let many = symbol_random(&g, 7, 9);
    let mean = many.values[..1000].iter().map(|z| z.norm()).sum::<f64>() / 1000.0;
    assert!((0.3..=1.2).contains(&mean), "{mean}");
    assert!(matches!(
        CylinderSymbol::new(&g, 1, vec![one(); 7]),
        Err(Error::SymbolMismatch { expected: 30, found: 7 })
    ));
}

#[test]
fn refinement() {
    let g = named_graph("petersen").unwrap();
    let a = symbol_random(&g, 0, 1);
    let r = refine(&g, &a);
    for x in 0..10 {
        for (j, &e) in g.out_edges(x).iter().enumerate() {
            assert_eq!(r.values[g.path_index(&[e])], a.values[x]);
            assert_eq!(r.values[x * 3 + j], a.values[x]);
        }
    }
    for k in 1..4 {
        let a = symbol_random(&g, k, k as u64);
        assert_eq!(refine(&g, &a).values.len(), a.values.len() * g.q());
    }
}

/// `(L^n a)(p)` for `n < k` as the sum of `a` over length-`k` paths ending in `p`.
fn brute_transfer(g: &RegularGraph, a: &CylinderSymbol, n: usize) -> Vec<C64> {
    let k = a.depth;
    let out_depth = k - n;
    let mut out = vec![c(0.0, 0.0); g.path_count(out_depth)];
    for p in nb_paths(g, None, k) {
        out[g.path_index(&p.edges[n..])] += a.values[g.path_index(&p.edges)];
    }
    out
}

#[test]
fn transfer_matches_brute_force() {
    let g = named_graph("petersen").unwrap();
    let a = symbol_random(&g, 3, 17);
    let fast = transfer_pow(&g, &a, 2);
    assert_eq!(fast.depth, 1);
    for (x, y) in fast.values.iter().zip(brute_transfer(&g, &a, 2)) {
        assert!((x - y).norm() < 1e-12);
    }
    let b = symbol_random(&g, 1, 5);
    let lb = transfer_pow(&g, &b, 1);
    for e in 0..g.edge_count() {
        let expect: C64 = (0..g.edge_count())
            .filter(|&f| g.successors(f).contains(&e))
            .map(|f| b.values[g.path_index(&[f])])
            .sum();
        assert!((lb.values[g.path_index(&[e])] - expect).norm() < 1e-12);
    }
    for k in 0..3 {
        for n in 0..4 {
            let out = transfer_pow(&g, &symbol_constant(&g, k, one()), n);
            assert!(out.values.iter().all(|v| (v - c(2f64.powi(n as i32), 0.0)).norm() < 1e-12));
        }
    }
}

/// `H_m(a)` by enumerating every edge tuple `(g_1, ..., g_m)`.
fn brute_branch(g: &RegularGraph, a: &CylinderSymbol, m: usize) -> Vec<C64> {
    let k = a.depth;
    let depth = (m + 1).max(k);
    let ne = g.edge_count();
    (0..g.path_count(depth))
        .map(|i| {
            let p = g.path_from_index(i, depth);
            let mut total = c(0.0, 0.0);
            for code in 0..ne.pow(m as u32) {
                let tuple: Vec<usize> = (0..m).map(|j| (code / ne.pow(j as u32)) % ne).collect();
                let gm = tuple[m - 1];
                if g.tau(gm) != g.iota(p[m]) || g.iota(gm) == g.iota(p[m - 1]) || g.iota(gm) == g.tau(p[m]) {
                    continue;
                }
                let chain_ok = tuple
                    .windows(2)
                    .all(|w| g.tau(w[0]) == g.iota(w[1]) && w[1] != g.reverse(w[0]));
                if !chain_ok {
                    continue;
                }
                let mut full = tuple.clone();
                full.extend_from_slice(&p[m..]);
                total += if k == 0 {
                    a.values[g.iota(full[0])]
                } else {
                    a.values[g.path_index(&full[..k])]
                };
            }
            total
        })
        .collect()
}

#[test]
fn branch_operator_matches_brute_force() {
    let g = named_graph("petersen").unwrap();
    for m in 1..=2 {
        let a = symbol_random(&g, 1, 23);
        let fast = branch_sum(&g, &a, m);
        for (x, y) in fast.values.iter().zip(brute_branch(&g, &a, m)) {
            assert!((x - y).norm() < 1e-12, "m={m}");
        }
    }
    let k4 = named_graph("k4").unwrap();
    for (k, m) in [(0, 1), (2, 1), (2, 3), (3, 2)] {
        let a = symbol_random(&k4, k, 31);
        let fast = branch_sum(&k4, &a, m);
        for (x, y) in fast.values.iter().zip(brute_branch(&k4, &a, m)) {
            assert!((x - y).norm() < 1e-12, "k={k} m={m}");
        }
    }
    let a = symbol_random(&g, 2, 1);
    assert_eq!(branch_sum(&g, &a, 0), a);
    for m in 1..4 {
        let h = branch_sum(&g, &symbol_constant(&g, 1, one()), m);
        let expect = 2f64.powi(m as i32 - 1);
        assert!(h.values.iter().all(|v| (v - c(expect, 0.0)).norm() < 1e-12));
    }
}

#[test]
fn op_basics() {
    let g = named_graph("petersen").unwrap();
    for s in admissible(&g) {
        let phi = complexify(&s.basis[0]);
        let sp = s.parameter;
        let id = op_apply(&g, &symbol_constant(&g, 2, one()), &phi, &sp).unwrap();
        for (a, b) in id.iter().zip(&phi) {
            assert!((a - b).norm() < 1e-12);
        }
        let d0 = symbol_random(&g, 0, 4);
        let prod = op_apply(&g, &d0, &phi, &sp).unwrap();
        for x in 0..10 {
            assert!((prod[x] - d0.values[x] * phi[x]).norm() < 1e-12);
        }
        let a = symbol_random(&g, 2, 8);
        let base = op_apply(&g, &a, &phi, &sp).unwrap();
        let fine = op_apply(&g, &refine_to(&g, &a, 4), &phi, &sp).unwrap();
        for (x, y) in base.iter().zip(&fine) {
            assert!((x - y).norm() < 1e-12);
        }
    }
}

#[test]
fn wigner_basics() {
    let g = named_graph("petersen").unwrap();
    let s = space_near(&g, 1.0 / 3.0);
    let phi = complexify(&s.basis[0]);
    let phi2 = complexify(&s.basis[1]);
    let diag = DistributionContext::diagonal(&g, phi.clone(), s.parameter).unwrap();
    assert!((wigner(&g, &symbol_constant(&g, 1, one()), &diag) - one()).norm() < 1e-12);
    let off = DistributionContext::new(&g, phi.clone(), s.parameter, phi2.clone(), s.parameter.conjugate()).unwrap();
    assert!(wigner(&g, &symbol_constant(&g, 1, one()), &off).norm() < 1e-12);
    let mut ind = symbol_constant(&g, 0, c(0.0, 0.0));
    ind.values[3] = one();
    let w = wigner(&g, &ind, &off);
    assert!((w - phi[3] * phi2[3].conj()).norm() < 1e-12);
}

/// PS by explicit enumeration of paths and incoming edges.
fn brute_ps(g: &RegularGraph, a: &CylinderSymbol, ctx: &DistributionContext) -> C64 {
    assert!(a.depth >= 1);
    let mut total = c(0.0, 0.0);
    for p in nb_paths(g, None, a.depth) {
        let first = p.edges[0];
        let wsum: C64 = (0..g.edge_count())
            .filter(|&f| g.tau(f) == g.iota(first) && f != g.reverse(first))
            .map(|f| ctx.w.v[f])
            .sum();
        total += a.values[g.path_index(&p.edges)] * cylinder_value(&ctx.u, &p.edges) * wsum;
    }
    total
}

#[test]
fn patterson_sullivan_examples() {
    let g = named_graph("petersen").unwrap();
    let s = space_near(&g, 1.0 / 3.0);
    let ctx = DistributionContext::diagonal(&g, complexify(&s.basis[0]), s.parameter).unwrap();
    let ps1 = patterson_sullivan(&g, &symbol_constant(&g, 0, one()), &ctx);
    let z = s.parameter.z;
    let qz2 = 2.0 * z * z;
    let closed = (qz2 - 2.0) / (qz2 - 1.0);
    assert!((ps1 - closed).norm() < 1e-12);
    assert!((ps1 - c(1.3125, 0.16536)).norm() < 1e-5);
    for k in 1..=3 {
        let a = symbol_random(&g, k, 40 + k as u64);
        let fast = patterson_sullivan(&g, &a, &ctx);
        assert!(close(fast, brute_ps(&g, &a, &ctx), 1e-12));
        let fine = patterson_sullivan(&g, &refine(&g, &a), &ctx);
        assert!((fast - fine).norm() < 1e-11);
    }
    let a0 = symbol_random(&g, 0, 2);
    assert!((patterson_sullivan(&g, &a0, &ctx) - patterson_sullivan(&g, &refine(&g, &a0), &ctx)).norm() < 1e-11);

    let t = space_near(&g, -2.0 / 3.0);
    let mixed = DistributionContext::new(&g, complexify(&s.basis[0]), s.parameter, complexify(&t.basis[0]), t.parameter)
        .unwrap();
    assert!(patterson_sullivan(&g, &symbol_constant(&g, 0, one()), &mixed).norm() < 1e-9);
    let same = DistributionContext::new(
        &g,
        complexify(&s.basis[0]),
        s.parameter,
        complexify(&s.basis[1]),
        s.parameter.conjugate(),
    )
    .unwrap();
    assert!(patterson_sullivan(&g, &symbol_constant(&g, 0, one()), &same).norm() < 1e-9);
}

#[test]
fn c_function_values() {
    let sp = spectral_parameter(1.0 / 3.0, 2);
    assert!((c_function(&sp).unwrap() - c(0.5, -0.062994)).norm() < 1e-6);
    assert!(matches!(c_function(&SpectralParameter::from_z(one(), 2)), Err(Error::BandEdge)));
    for j in 0..50 {
        let theta = 0.05 + 3.0 * j as f64 / 50.0;
        for q in [2usize, 3, 5] {
            let z = C64::from_polar(1.0, theta);
            let sp = SpectralParameter::from_z(z, q);
            let qf = q as f64;
            let lhs = c_function(&sp).unwrap() * (1.0 + 1.0 / qf);
            let rhs = (qf * z * z - 1.0) / (qf * (z * z - 1.0));
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }
}

#[test]
fn basic_example_relation() {
    for name in ["k4", "petersen", "cube", "heawood"] {
        let g = named_graph(name).unwrap();
        for s in admissible(&g) {
            for b in &s.basis {
                let ctx = DistributionContext::diagonal(&g, complexify(b), s.parameter).unwrap();
                let w1 = wigner(&g, &symbol_constant(&g, 0, one()), &ctx);
                let cs = c_function(&s.parameter).unwrap() * (1.0 + 1.0 / g.q() as f64);
                let ps = patterson_sullivan(&g, &symbol_constant(&g, 0, cs), &ctx);
                assert!(close(w1, ps, 1e-10), "{name}");
                assert!((w1 - one()).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn ruelle_distribution_on_petersen() {
    let g = named_graph("petersen").unwrap();
    for lambda in [1.0 / 3.0, -2.0 / 3.0] {
        let s = space_near(&g, lambda);
        let sp = s.parameter;
        let proj = RuelleProjector::new(&g, &sp, RANK_TOL).unwrap();
        assert_eq!(proj.multiplicity(), s.multiplicity);
        let t1 = proj.eval(&g, &symbol_constant(&g, 0, one()));
        assert!((t1 - c(s.multiplicity as f64, 0.0)).norm() < 1e-9);
        let m2 = sp.mu * sp.mu;
        let factor = (m2 - 1.0) / (m2 - 2.0);
        for seed in 0..4 {
            let f = symbol_random(&g, 2, seed);
            let sum: C64 = s
                .basis
                .iter()
                .map(|b| patterson_sullivan(&g, &f, &DistributionContext::diagonal(&g, complexify(b), sp).unwrap()))
                .sum();
            assert!(close(proj.eval(&g, &f), factor * sum, 1e-8));
            assert!(close(ruelle_distribution(&g, &f, &sp).unwrap(), factor * sum, 1e-8));
            let (l, r) = ruelle_invariance(&g, &proj, &f);
            assert!(close(l, r, 1e-8));
        }
    }
    let top = spectral_parameter(1.0, 2);
    assert!(RuelleProjector::new(&g, &top, RANK_TOL).is_err());
}

#[test]
fn wigner_ps_relation_levels() {
    let g = named_graph("cube").unwrap();
    let spaces = admissible(&g);
    let a_space = &spaces[0];
    let b_space = spaces.last().unwrap();
    let contexts = [
        DistributionContext::diagonal(&g, complexify(&a_space.basis[0]), a_space.parameter).unwrap(),
        DistributionContext::new(
            &g,
            complexify(&a_space.basis[0]),
            a_space.parameter,
            complexify(&b_space.basis[0]),
            b_space.parameter,
        )
        .unwrap(),
    ];
    for ctx in &contexts {
        for seed in 0..3 {
            let a = symbol_random(&g, 2, seed);
            let (l0, r0) = wigner_ps_relation(&g, &a, ctx, 0);
            assert!(l0.norm() <= 1e-12 && r0.norm() <= 1e-12);
            for n in 1..=3 {
                let (l, r) = wigner_ps_relation(&g, &a, ctx, n);
                assert!(close(l, r, 1e-8), "n={n}: {l} vs {r}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn distributions_are_linear(s1 in 0u64..1000, s2 in 0u64..1000, k in 0usize..3, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let g = named_graph("k4").unwrap();
        let s = admissible(&g).remove(0);
        let ctx = DistributionContext::diagonal(&g, complexify(&s.basis[0]), s.parameter).unwrap();
        let a = symbol_random(&g, k, s1);
        let b = symbol_random(&g, 2, s2);
        let alpha = c(re, im);
        let combo = a.combine(&g, alpha, &b, one());
        let ps = patterson_sullivan(&g, &combo, &ctx);
        let ps_parts = alpha * patterson_sullivan(&g, &a, &ctx) + patterson_sullivan(&g, &b, &ctx);
        prop_assert!((ps - ps_parts).norm() < 1e-11);
        let w = wigner(&g, &combo, &ctx);
        let w_parts = alpha * wigner(&g, &a, &ctx) + wigner(&g, &b, &ctx);
        prop_assert!((w - w_parts).norm() < 1e-11);
    }

    #[test]
    fn refinement_preserves_distributions(seed in 0u64..1000, k in 0usize..3, steps in 1usize..3) {
        let g = named_graph("petersen").unwrap();
        let s = admissible(&g).remove(0);
        let ctx = DistributionContext::diagonal(&g, complexify(&s.basis[1]), s.parameter).unwrap();
        let a = symbol_random(&g, k, seed);
        let fine = refine_to(&g, &a, k + steps);
        prop_assert!((patterson_sullivan(&g, &a, &ctx) - patterson_sullivan(&g, &fine, &ctx)).norm() < 1e-11);
        prop_assert!((wigner(&g, &a, &ctx) - wigner(&g, &fine, &ctx)).norm() < 1e-11);
    }
}
