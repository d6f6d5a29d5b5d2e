//! Identity suites and machine-readable verification reports.
//!
//! Each suite walks every admissible eigenpair of a graph (and a seeded family
//! of random symbols where relevant), evaluates both sides of one identity and
//! records the residuals.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{
    build_cover, classical_ps, default_radius, harmonic_table, intertwined_ps, intertwiner_radius,
    measure_limit, measure_table, op_apply_cover, poisson_forward_all, ball_size, VERTEX_BUDGET,
};
use crate::distributions::{
    c_function, off_diagonal_part, op_apply, patterson_sullivan, ruelle_invariance, wigner,
    wigner_ps_relation, DistributionContext, RuelleProjector,
};
use crate::error::Result;
use crate::graph::RegularGraph;
use crate::resonant::{
    cylinder_value, eigen_equation_residual, resonance_kernel, resonant_state, RANK_TOL,
};
use crate::spectral::{complexify, eigen_residual, eigh_decompose, EigenSpace, SpectralParameter};
use crate::symbols::{symbol_constant, symbol_random, CylinderSymbol};

/// Absolute floor for zero-target identities.
pub const ABS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Pairing,
    PsModern,
    Ruelle,
    WignerPs,
    Cfun,
    PoissonRoundtrip,
    MeasureLimit,
    Basepoint,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Pairing,
        Suite::PsModern,
        Suite::Ruelle,
        Suite::WignerPs,
        Suite::Cfun,
        Suite::PoissonRoundtrip,
        Suite::MeasureLimit,
        Suite::Basepoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Pairing => "pairing",
            Suite::PsModern => "ps_modern",
            Suite::Ruelle => "ruelle",
            Suite::WignerPs => "wigner_ps",
            Suite::Cfun => "cfun",
            Suite::PoissonRoundtrip => "poisson_roundtrip",
            Suite::MeasureLimit => "measure_limit",
            Suite::Basepoint => "basepoint",
        }
    }

    pub fn parse(name: &str) -> Option<Suite> {
        Suite::ALL.iter().copied().find(|s| s.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchPolicy {
    Principal,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Principal,
    Conjugate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Number of random symbols per suite.
    pub symbols: usize,
    /// Largest random symbol depth.
    pub max_depth: usize,
    /// Largest level `n` in the Wigner/PS relation.
    pub n_max: usize,
    /// Largest level for the cover-side intertwiner check.
    pub intertwiner_n_max: usize,
    /// Relative tolerance for identities.
    pub identity_rel: f64,
    /// Tolerance for eigen-equation residuals.
    pub eigen_residual: f64,
    pub group_tol: f64,
    pub branch: BranchPolicy,
    /// Cover radius override (defaults are computed per check).
    pub radius: Option<usize>,
    /// Test hook: perturb one forward amplitude in the pairing suite.
    #[serde(default)]
    pub corrupt_amplitude: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            symbols: 10,
            max_depth: 2,
            n_max: 3,
            intertwiner_n_max: 2,
            identity_rel: 1e-8,
            eigen_residual: 1e-10,
            group_tol: crate::spectral::GROUP_TOL,
            branch: BranchPolicy::Principal,
            radius: None,
            corrupt_amplitude: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub suite: String,
    pub identity: String,
    pub graph: String,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_prime: Option<f64>,
    pub branch: Branch,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_or_m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol_seed: Option<u64>,
    pub lhs: [f64; 2],
    pub rhs: [f64; 2],
    pub abs_residual: f64,
    pub rel_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub graph: String,
    pub suites: Vec<String>,
    pub records: Vec<Record>,
    pub summary: Summary,
    pub warnings: Vec<String>,
    pub environment: Environment,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }
}

/// Residuals of `lhs` against `rhs`: absolute difference and the difference
/// relative to the larger magnitude.
pub fn residuals(lhs: C64, rhs: C64) -> (f64, f64) {
    let abs = (lhs - rhs).norm();
    let scale = lhs.norm().max(rhs.norm());
    let rel = if scale > 0.0 { abs / scale } else { 0.0 };
    (abs, rel)
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// Shared per-record metadata.
#[derive(Clone)]
struct Tag<'a> {
    suite: Suite,
    graph: &'a str,
    lambda: f64,
    lambda_prime: Option<f64>,
    branch: Branch,
}

impl Tag<'_> {
    fn record(
        &self,
        identity: &str,
        n_or_m: Option<usize>,
        symbol_seed: Option<u64>,
        lhs: C64,
        rhs: C64,
        pass: impl FnOnce(f64, f64) -> bool,
    ) -> Record {
        let (abs, rel) = residuals(lhs, rhs);
        Record {
            suite: self.suite.name().to_string(),
            identity: identity.to_string(),
            graph: self.graph.to_string(),
            lambda: self.lambda,
            lambda_prime: self.lambda_prime,
            branch: self.branch,
            n_or_m,
            symbol_seed,
            lhs: pair(lhs),
            rhs: pair(rhs),
            abs_residual: abs,
            rel_residual: rel,
            pass: pass(abs, rel),
        }
    }
}

/// One eigenfunction with its parameter on the chosen branch.
#[derive(Clone)]
struct Eigenpair {
    space: usize,
    phi: Vec<C64>,
    sp: SpectralParameter,
}

fn admissible_pairs(spaces: &[EigenSpace], branch: Branch) -> Vec<Eigenpair> {
    let mut out = Vec::new();
    for (i, s) in spaces.iter().enumerate() {
        if !s.parameter.is_admissible() {
            continue;
        }
        let sp = match branch {
            Branch::Principal => s.parameter,
            Branch::Conjugate => s.parameter.other_branch(),
        };
        for b in &s.basis {
            out.push(Eigenpair {
                space: i,
                phi: complexify(b),
                sp,
            });
        }
    }
    out
}

fn context(g: &RegularGraph, a: &Eigenpair, b: &Eigenpair, same: bool) -> Result<DistributionContext> {
    if same {
        DistributionContext::diagonal(g, a.phi.clone(), a.sp)
    } else {
        DistributionContext::new(g, a.phi.clone(), a.sp, b.phi.clone(), b.sp)
    }
}

/// Deterministic family of random symbols with depths cycling through
/// `0..=max_depth`.
pub fn symbol_family(g: &RegularGraph, cfg: &VerifyConfig) -> Vec<(u64, CylinderSymbol)> {
    (0..cfg.symbols)
        .map(|i| {
            let seed = cfg.seed.wrapping_mul(1000).wrapping_add(i as u64);
            (seed, symbol_random(g, i % (cfg.max_depth + 1), seed))
        })
        .collect()
}

/// Sum of the absolute values of the terms of the geodesic pairing, used as
/// the scale for zero-target pairings.
fn pairing_scale(g: &RegularGraph, ctx: &DistributionContext) -> f64 {
    (0..g.vertex_count())
        .map(|x| {
            let out = g.out_edges(x);
            let su: f64 = out.iter().map(|&e| ctx.u.v[e].norm()).sum();
            let sw: f64 = out.iter().map(|&e| ctx.w.v[e ^ 1].norm()).sum();
            su * sw
        })
        .sum()
}

/// Runs `suites` on `g` and assembles a report.
pub fn run_suites(g: &RegularGraph, graph_name: &str, cfg: &VerifyConfig, suites: &[Suite]) -> Result<VerificationReport> {
    let spaces = eigh_decompose(g, cfg.group_tol)?;
    run_suites_on(g, graph_name, cfg, &spaces, suites)
}

/// [`run_suites`] over a given list of eigenspaces.
pub fn run_suites_on(
    g: &RegularGraph,
    graph_name: &str,
    cfg: &VerifyConfig,
    spaces: &[EigenSpace],
    suites: &[Suite],
) -> Result<VerificationReport> {
    let branches: &[Branch] = match cfg.branch {
        BranchPolicy::Principal => &[Branch::Principal],
        BranchPolicy::Both => &[Branch::Principal, Branch::Conjugate],
    };
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    if admissible_pairs(spaces, Branch::Principal).is_empty() {
        warnings.push("no admissible parameters".to_string());
    }
    for &suite in suites {
        let mut worst = Vec::new();
        for &branch in branches {
            let start = records.len();
            run_suite(g, graph_name, cfg, spaces, suite, branch, &mut records)?;
            let max_rel = records[start..]
                .iter()
                .map(|r| r.rel_residual)
                .fold(0.0, f64::max);
            worst.push(max_rel);
        }
        if worst.len() == 2 {
            let (a, b) = (worst[0], worst[1]);
            let (hi, lo) = (a.max(b), a.min(b));
            if hi > 1e-3 * cfg.identity_rel && hi > 10.0 * lo {
                warnings.push(format!(
                    "{}: branch-dependent residuals (principal {a:.3e}, conjugate {b:.3e})",
                    suite.name()
                ));
            }
        }
    }
    let passed = records.iter().filter(|r| r.pass).count();
    Ok(VerificationReport {
        graph: graph_name.to_string(),
        suites: suites.iter().map(|s| s.name().to_string()).collect(),
        summary: Summary {
            total: records.len(),
            passed,
            failed: records.len() - passed,
        },
        records,
        warnings,
        environment: Environment {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed,
        },
    })
}

fn run_suite(
    g: &RegularGraph,
    graph_name: &str,
    cfg: &VerifyConfig,
    spaces: &[EigenSpace],
    suite: Suite,
    branch: Branch,
    out: &mut Vec<Record>,
) -> Result<()> {
    let pairs = admissible_pairs(spaces, branch);
    let tag = |a: &Eigenpair, b: Option<&Eigenpair>| Tag {
        suite,
        graph: graph_name,
        lambda: spaces[a.space].parameter.lambda,
        lambda_prime: b.map(|b| spaces[b.space].parameter.lambda),
        branch,
    };
    let tol = cfg.identity_rel;
    match suite {
        Suite::Pairing => {
            for (i, a) in pairs.iter().enumerate() {
                let t = tag(a, None);
                let res = eigen_residual(g, &a.phi, a.sp.lambda);
                out.push(t.record("laplace_eigen_residual", None, None, C64::new(res, 0.0), C64::new(0.0, 0.0), |abs, _| abs <= cfg.eigen_residual));
                for (j, b) in pairs.iter().enumerate() {
                    let mut ctx = context(g, a, b, i == j)?;
                    if let Some(delta) = cfg.corrupt_amplitude {
                        ctx.u.v[0] += delta;
                    }
                    let ps1 = patterson_sullivan(g, &symbol_constant(g, 0, C64::new(1.0, 0.0)), &ctx);
                    let t = tag(a, Some(b));
                    if i == j {
                        let m2 = ctx.mu() * ctx.mu_w();
                        let lhs = (m2 - 1.0) * ps1;
                        let rhs = (m2 - g.q() as f64) * ctx.inner();
                        out.push(t.record("pairing_formula", None, None, lhs, rhs, |abs, rel| rel <= 1e-9 || abs <= ABS_FLOOR));
                    } else {
                        let scale = pairing_scale(g, &ctx).max(1.0);
                        out.push(t.record("pairing_orthogonality", None, None, ps1, C64::new(0.0, 0.0), |abs, _| abs <= 1e-9 * scale));
                    }
                }
            }
        }
        Suite::PsModern => {
            let symbols = symbol_family(g, cfg);
            let radius = cfg.radius.unwrap_or_else(|| default_radius(g, cfg.max_depth));
            let cov = build_cover(g, 0, radius)?;
            let batches = for_each_pair(&pairs, |i, j| {
                let (a, b) = (&pairs[i], &pairs[j]);
                let ctx = context(g, a, b, i == j)?;
                let t = tag(a, Some(b));
                let mut recs = Vec::new();
                for (seed, s) in &symbols {
                    let lhs = classical_ps(&cov, g, s, &ctx)?;
                    let rhs = patterson_sullivan(g, s, &ctx);
                    recs.push(t.record("classical_vs_dynamical_ps", None, Some(*seed), lhs, rhs, |abs, rel| rel <= tol || abs <= ABS_FLOOR));
                }
                Ok(recs)
            })?;
            out.extend(batches);
        }
        Suite::Ruelle => {
            let symbols = symbol_family(g, cfg);
            for space in spaces.iter().filter(|s| s.parameter.is_admissible()) {
                let sp = match branch {
                    Branch::Principal => space.parameter,
                    Branch::Conjugate => space.parameter.other_branch(),
                };
                let t = Tag {
                    suite,
                    graph: graph_name,
                    lambda: space.parameter.lambda,
                    lambda_prime: None,
                    branch,
                };
                let m = space.multiplicity;
                for dir in [false, true] {
                    let mu = if dir { sp.mu.conj() } else { sp.mu };
                    let dim = resonance_kernel(g, mu, dir, RANK_TOL).len();
                    let name = if dir { "backward_kernel_dimension" } else { "kernel_dimension" };
                    out.push(t.record(name, None, None, C64::new(dim as f64, 0.0), C64::new(m as f64, 0.0), |abs, _| abs == 0.0));
                }
                for phi in &space.basis {
                    let u = resonant_state(g, &complexify(phi), &sp)?;
                    let res = eigen_equation_residual(g, &u);
                    out.push(t.record("resonant_eigen_equation", None, None, C64::new(res, 0.0), C64::new(0.0, 0.0), |abs, _| abs <= cfg.eigen_residual));
                    let refine_res = refinement_residual(g, &u, 3);
                    out.push(t.record("cylinder_refinement", None, None, C64::new(refine_res, 0.0), C64::new(0.0, 0.0), |abs, _| abs <= 1e-11));
                }
                let proj = RuelleProjector::new(g, &sp, RANK_TOL)?;
                let one = symbol_constant(g, 0, C64::new(1.0, 0.0));
                out.push(t.record("ruelle_trace_of_one", None, None, proj.eval(g, &one), C64::new(m as f64, 0.0), |abs, rel| rel <= tol || abs <= ABS_FLOOR));
                let contexts: Vec<DistributionContext> = space
                    .basis
                    .iter()
                    .map(|b| DistributionContext::diagonal(g, complexify(b), sp))
                    .collect::<Result<_>>()?;
                let m2 = sp.mu * sp.mu;
                let factor = (m2 - 1.0) / (m2 - g.q() as f64);
                for (seed, s) in &symbols {
                    let lhs = proj.eval(g, s);
                    let rhs = factor * contexts.iter().map(|c| patterson_sullivan(g, s, c)).sum::<C64>();
                    out.push(t.record("ruelle_vs_ps", None, Some(*seed), lhs, rhs, |abs, rel| rel <= tol || abs <= ABS_FLOOR));
                    let (l, r) = ruelle_invariance(g, &proj, s);
                    out.push(t.record("ruelle_transfer_invariance", None, Some(*seed), l, r, |abs, rel| rel <= tol || abs <= ABS_FLOOR));
                }
            }
        }
        Suite::WignerPs => {
            let symbols = symbol_family(g, cfg);
            let lifts_depth = build_cover(g, 0, g.diameter().max(1))?.max_lift_depth();
            let covers = (0..=cfg.intertwiner_n_max)
                .map(|n| {
                    let radius = cfg.radius.unwrap_or(intertwiner_radius(lifts_depth, 1, n));
                    if ball_size(g.q(), radius) > VERTEX_BUDGET {
                        Ok(None)
                    } else {
                        build_cover(g, 0, radius).map(Some)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let batches = for_each_pair(&pairs, |i, j| {
                let (a, b) = (&pairs[i], &pairs[j]);
                let ctx = context(g, a, b, i == j)?;
                let t = tag(a, Some(b));
                let mut recs = Vec::new();
                for (seed, s) in &symbols {
                    for n in 0..=cfg.n_max {
                        let (lhs, rhs) = wigner_ps_relation(g, s, &ctx, n);
                        if n == 0 {
                            recs.push(t.record("wigner_ps_relation_n0", Some(0), Some(*seed), lhs, C64::new(0.0, 0.0), |abs, _| abs <= ABS_FLOOR && rhs.norm() <= ABS_FLOOR));
                        } else {
                            recs.push(t.record("wigner_ps_relation", Some(n), Some(*seed), lhs, rhs, |abs, rel| rel <= tol || abs <= ABS_FLOOR));
                        }
                    }
                }
                // Cover-side off-diagonal part on depth-1 symbols.
                if i == j || j == i + 1 {
                    let s = symbol_random(g, 1, cfg.seed.wrapping_add(7_000 + i as u64));
                    for (n, cov) in covers.iter().enumerate() {
                        let Some(cov) = cov else { continue };
                        let lhs = intertwined_ps(cov, g, &s, &ctx, n)?;
                        let rhs = off_diagonal_part(g, &s, &ctx, n);
                        recs.push(t.record("off_diagonal_intertwiner", Some(n), None, lhs, rhs, |abs, rel| rel <= tol || abs <= ABS_FLOOR));
                    }
                }
                Ok(recs)
            })?;
            out.extend(batches);
        }
        Suite::Cfun => {
            for a in &pairs {
                let ctx = DistributionContext::diagonal(g, a.phi.clone(), a.sp)?;
                let t = tag(a, None);
                let one = symbol_constant(g, 0, C64::new(1.0, 0.0));
                let w1 = wigner(g, &one, &ctx);
                let c = c_function(&a.sp)?;
                let rhs = patterson_sullivan(g, &one.scale(c * (1.0 + 1.0 / g.q() as f64)), &ctx);
                out.push(t.record("basic_example", None, None, w1, rhs, |abs, rel| rel <= 1e-10 || abs <= ABS_FLOOR));
                out.push(t.record("wigner_of_one", None, None, w1, ctx.inner(), |abs, rel| rel <= 1e-10 || abs <= ABS_FLOOR));
            }
        }
        Suite::PoissonRoundtrip => {
            let radius = cfg.radius.unwrap_or_else(|| default_radius(g, 1));
            let cov = build_cover(g, 0, radius)?;
            for a in &pairs {
                let t = tag(a, None);
                let lift = cov.lift(&a.phi);
                let table = measure_table(&cov, &lift, a.sp.mu);
                let worst = poisson_forward_all(&cov, &table, a.sp.mu)
                    .into_iter()
                    .map(|(x, v)| (v - lift[x]).norm())
                    .fold(0.0, f64::max);
                out.push(t.record("poisson_round_trip", None, None, C64::new(worst, 0.0), C64::new(0.0, 0.0), |abs, _| abs <= 1e-10));
            }
        }
        Suite::MeasureLimit => {
            let q = g.q();
            let sp = SpectralParameter::from_z(C64::new(3.0, 0.0), q);
            let mut n_top = 12;
            while n_top > 4 && ball_size(q, n_top + 2) > VERTEX_BUDGET {
                n_top -= 1;
            }
            let cov = build_cover(g, 0, n_top + 2)?;
            let table = harmonic_table(&cov);
            let target = C64::new(1.0 / (q + 1) as f64, 0.0);
            let u = cov.cylinders(1)[0];
            let t = Tag {
                suite,
                graph: graph_name,
                lambda: sp.lambda,
                lambda_prime: None,
                branch,
            };
            let mut prev = f64::INFINITY;
            for n in 4..=n_top {
                let m = measure_limit(&cov, &table, &sp, u, n)?;
                let err = (m.value - target).norm();
                let monotone = err < prev || err <= 1e-14;
                prev = err;
                let final_step = n == n_top;
                out.push(t.record("measure_recovery", Some(n), None, m.value, target, |abs, _| monotone && (!final_step || abs <= 1e-3)));
            }
        }
        Suite::Basepoint => {
            let radius = cfg.radius.unwrap_or_else(|| default_radius(g, cfg.max_depth.max(1)));
            let cov = build_cover(g, 0, radius)?;
            let symbols: Vec<(u64, CylinderSymbol)> = (0..cfg.symbols.min(4))
                .map(|i| {
                    let seed = cfg.seed.wrapping_add(500 + i as u64);
                    (seed, symbol_random(g, 1 + i % cfg.max_depth.max(1), seed))
                })
                .collect();
            for a in &pairs {
                let t = tag(a, None);
                for (seed, s) in &symbols {
                    let dynamical = op_apply(g, s, &a.phi, &a.sp)?;
                    for (x, &lift) in cov.canonical_lifts().iter().enumerate() {
                        let lhs = op_apply_cover(&cov, g, s, &a.phi, &a.sp, lift)?;
                        out.push(t.record("op_base_point", None, Some(*seed), lhs, dynamical[x], |abs, _| abs <= 1e-9));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Evaluates `f` on every ordered pair of indices in parallel and
/// concatenates the results in row-major order.
fn for_each_pair<T, F>(pairs: &[T], f: F) -> Result<Vec<Record>>
where
    T: Sync,
    F: Fn(usize, usize) -> Result<Vec<Record>> + Sync,
{
    let n = pairs.len();
    let batches = (0..n * n)
        .into_par_iter()
        .map(|ij| f(ij / n, ij % n))
        .collect::<Result<Vec<_>>>()?;
    Ok(batches.into_iter().flatten().collect())
}

/// Largest `|sum over one-edge extensions of cyl(p e) - cyl(p)|` over all
/// paths of length `1..=k_max`.
pub fn refinement_residual(g: &RegularGraph, u: &crate::resonant::ResonantState, k_max: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 1..=k_max {
        for i in 0..g.path_count(k) {
            let p = g.path_from_index(i, k);
            let whole = cylinder_value(u, &p);
            let last = p[k - 1];
            let parts: C64 = g
                .successors(last)
                .iter()
                .map(|&f| {
                    let mut ext = p.clone();
                    ext.push(f);
                    cylinder_value(u, &ext)
                })
                .sum();
            worst = worst.max((parts - whole).norm());
        }
    }
    worst
}
