//! Wigner, Patterson-Sullivan and invariant Ruelle distributions on cylinder
//! symbols.
//!
//! Every distribution here is an exact finite sum over non-backtracking paths
//! of the quotient graph, built from resonant-state cylinder values.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::graph::RegularGraph;
use crate::linalg::{inverse, CMatrix};
use crate::resonant::{
    coresonant_state, jordan_probe, pairing_tables, resonance_kernel, resonant_state,
    ResonantState,
};
use crate::spectral::SpectralParameter;
use crate::symbols::{branch_sum, transfer_pow, CylinderSymbol};

/// Relative pivot tolerance for inverting the pairing Gram matrix.
pub const GRAM_TOL: f64 = 1e-8;

/// Forward data `(phi, sp)`, backward data `(phi', sp')`, and the states built
/// from them. The backward state uses `conj(phi')` with the conjugate branch
/// `conj(z')`, so its eigenvalue is `conj(mu')`.
#[derive(Debug, Clone)]
pub struct DistributionContext {
    pub phi: Vec<C64>,
    pub sp: SpectralParameter,
    pub phi_prime: Vec<C64>,
    pub sp_prime: SpectralParameter,
    pub u: ResonantState,
    pub w: ResonantState,
}

impl DistributionContext {
    pub fn new(
        g: &RegularGraph,
        phi: Vec<C64>,
        sp: SpectralParameter,
        phi_prime: Vec<C64>,
        sp_prime: SpectralParameter,
    ) -> Result<Self> {
        let u = resonant_state(g, &phi, &sp)?;
        let phi_bar: Vec<C64> = phi_prime.iter().map(|z| z.conj()).collect();
        let w = coresonant_state(g, &phi_bar, &sp_prime.conjugate())?;
        Ok(Self {
            phi,
            sp,
            phi_prime,
            sp_prime,
            u,
            w,
        })
    }

    /// `phi' = phi` with `z' = conj(z)`, so both states share the eigenvalue `mu`.
    pub fn diagonal(g: &RegularGraph, phi: Vec<C64>, sp: SpectralParameter) -> Result<Self> {
        let conj = sp.conjugate();
        Self::new(g, phi.clone(), sp, phi, conj)
    }

    /// Eigenvalue of the forward state, `q^{1/2 + is}`.
    pub fn mu(&self) -> C64 {
        self.u.mu
    }

    /// Eigenvalue of the backward state, `q^{1/2 - i conj(s')}`.
    pub fn mu_w(&self) -> C64 {
        self.w.mu
    }

    /// `sum_x phi(x) conj(phi'(x))`.
    pub fn inner(&self) -> C64 {
        self.phi
            .iter()
            .zip(&self.phi_prime)
            .map(|(a, b)| a * b.conj())
            .sum()
    }
}

/// `Op(a) phi(x) = sum over paths p from x of a(p) * cyl(u, p)`; pointwise
/// product for depth 0.
pub fn op_apply_state(g: &RegularGraph, a: &CylinderSymbol, u: &ResonantState) -> Vec<C64> {
    let k = a.depth;
    if k == 0 {
        return (0..g.vertex_count())
            .map(|x| a.values[x] * g.out_edges(x).iter().map(|&e| u.v[e]).sum::<C64>())
            .collect();
    }
    let per_base = g.paths_per_base(k);
    let scale = u.mu.powi(-(k as i32 - 1));
    (0..g.vertex_count())
        .map(|x| {
            (x * per_base..(x + 1) * per_base)
                .map(|i| a.values[i] * u.v[last_edge(g, i, k)])
                .sum::<C64>()
                * scale
        })
        .collect()
}

/// `Op(a) phi` through the resonant state of `(phi, sp)`.
pub fn op_apply(g: &RegularGraph, a: &CylinderSymbol, phi: &[C64], sp: &SpectralParameter) -> Result<Vec<C64>> {
    let u = resonant_state(g, phi, sp)?;
    Ok(op_apply_state(g, a, &u))
}

/// Last edge of the path with flat index `i` and length `k >= 1`.
fn last_edge(g: &RegularGraph, i: usize, k: usize) -> usize {
    if k == 1 {
        let x = i / g.degree();
        g.out_edges(x)[i % g.degree()]
    } else {
        let prefix = last_edge(g, i / g.q(), k - 1);
        g.successors(prefix)[i % g.q()]
    }
}

/// First edge of the path with flat index `i` and length `k >= 1`.
fn first_edge(g: &RegularGraph, i: usize, k: usize) -> usize {
    let head = i / g.q().pow(k as u32 - 1);
    g.out_edges(head / g.degree())[head % g.degree()]
}

/// `W(a) = <Op(a) phi, phi'>`.
pub fn wigner(g: &RegularGraph, a: &CylinderSymbol, ctx: &DistributionContext) -> C64 {
    op_apply_state(g, a, &ctx.u)
        .iter()
        .zip(&ctx.phi_prime)
        .map(|(o, p)| o * p.conj())
        .sum()
}

/// Tensor `(u ⊗ w)(a)` for edge tables `u` (eigenvalue `mu`) and `w`.
pub fn ps_tensor(g: &RegularGraph, a: &CylinderSymbol, u: &[C64], mu: C64, w: &[C64]) -> C64 {
    let k = a.depth;
    if k == 0 {
        return (0..g.vertex_count())
            .map(|x| {
                let out = g.out_edges(x);
                let su: C64 = out.iter().map(|&e| u[e]).sum();
                let sw: C64 = out.iter().map(|&e| w[e ^ 1]).sum();
                let diag: C64 = out.iter().map(|&e| u[e] * w[e ^ 1]).sum();
                a.values[x] * (su * sw - diag)
            })
            .sum();
    }
    // Incoming mass at iota(p_1) from edges other than reverse(p_1).
    let incoming: Vec<C64> = (0..g.edge_count())
        .map(|e| {
            let x = g.iota(e);
            g.in_edges(x).filter(|&f| f != e ^ 1).map(|f| w[f]).sum()
        })
        .collect();
    let scale = mu.powi(-(k as i32 - 1));
    (0..a.values.len())
        .map(|i| a.values[i] * u[last_edge(g, i, k)] * incoming[first_edge(g, i, k)])
        .sum::<C64>()
        * scale
}

/// Dynamical Patterson-Sullivan distribution `PS_{phi, phi'}(a)`.
pub fn patterson_sullivan(g: &RegularGraph, a: &CylinderSymbol, ctx: &DistributionContext) -> C64 {
    ps_tensor(g, a, &ctx.u.v, ctx.u.mu, &ctx.w.v)
}

/// Tensor of `u` (eigenvalue `mu`) and `w` on the test function obtained by
/// letting the transfer operator act on the forward factor of `f * 1_P`.
///
/// The transferred function lives on pairs `(e_b, p)` where a single edge
/// `e0` with `e_b -> e0 -> p_1` has been summed out, so the value is
/// `sum over paths (e_b, e0, p_1, ..., p_j) of f((e0, p)[..k]) w(e_b)
/// mu^{-(j-1)} u(p_j)` with `j = max(k - 1, 1)`.
pub fn transferred_tensor(g: &RegularGraph, f: &CylinderSymbol, u: &[C64], mu: C64, w: &[C64]) -> C64 {
    let f = if f.depth == 0 {
        crate::symbols::refine(g, f)
    } else {
        f.clone()
    };
    let k = f.depth;
    let j = k.saturating_sub(1).max(1);
    let len = j + 2;
    let scale = mu.powi(-(j as i32 - 1));
    (0..g.path_count(len))
        .map(|i| {
            let p = g.path_from_index(i, len);
            f.values[g.path_index(&p[1..=k])] * w[p[0]] * u[p[len - 1]]
        })
        .sum::<C64>()
        * scale
}

/// `c(s) = sqrt(q)/(q+1) * (mu - 1/mu) / (z - 1/z)`.
pub fn c_function(sp: &SpectralParameter) -> Result<C64> {
    if sp.is_band_edge() {
        return Err(Error::BandEdge);
    }
    let q = sp.q as f64;
    Ok(q.sqrt() / (q + 1.0) * (sp.mu - 1.0 / sp.mu) / (sp.z - 1.0 / sp.z))
}

/// Closed form of `PS(1)`: `(mu mu_w - q) / (mu mu_w - 1) * <phi, phi'>` when
/// `mu_w = mu`, zero otherwise.
pub fn pairing_prediction(ctx: &DistributionContext, q: usize) -> C64 {
    let mu = ctx.mu();
    if (ctx.mu_w() - mu).norm() > 1e-9 * mu.norm() {
        return C64::new(0.0, 0.0);
    }
    let m2 = mu * mu;
    (m2 - q as f64) / (m2 - 1.0) * ctx.inner()
}

/// Both sides of the Wigner/Patterson-Sullivan relation at level `n`:
/// `W(a - k^n L^n a)` and `PS(sum_m mu_w^{-2m} H_m(a) - k^n L^n a)` with
/// `k = (mu mu_w)^{-1}`.
pub fn wigner_ps_relation(
    g: &RegularGraph,
    a: &CylinderSymbol,
    ctx: &DistributionContext,
    n: usize,
) -> (C64, C64) {
    let one = C64::new(1.0, 0.0);
    let kn = (ctx.mu() * ctx.mu_w()).powi(-(n as i32));
    let ln = transfer_pow(g, a, n);
    let lhs_symbol = a.combine(g, one, &ln, -kn);
    let lhs = wigner(g, &lhs_symbol, ctx);
    let mut rhs_symbol = ln.scale(-kn);
    for m in 0..=n {
        let hm = branch_sum(g, a, m);
        let weight = ctx.mu_w().powi(-2 * m as i32);
        rhs_symbol = rhs_symbol.combine(g, one, &hm, weight);
    }
    let rhs = patterson_sullivan(g, &rhs_symbol, ctx);
    (lhs, rhs)
}

/// Off-diagonal part `sum_{m <= n} mu_w^{-2m} PS(H_m(a))`.
pub fn off_diagonal_part(g: &RegularGraph, a: &CylinderSymbol, ctx: &DistributionContext, n: usize) -> C64 {
    (0..=n)
        .map(|m| ctx.mu_w().powi(-2 * m as i32) * patterson_sullivan(g, &branch_sum(g, a, m), ctx))
        .sum()
}

/// Spectral projector data for the invariant Ruelle distribution at `mu`:
/// kernel bases of `B - mu` and of `B^T - mu`, the latter biorthogonalized
/// against the former under the geodesic pairing.
#[derive(Debug, Clone)]
pub struct RuelleProjector {
    pub mu: C64,
    pub forward: Vec<Vec<C64>>,
    pub dual: Vec<Vec<C64>>,
}

impl RuelleProjector {
    /// Builds the projector for the Laplace eigenvalue carried by `sp`.
    ///
    /// The backward basis is extracted from `ker(B^T - conj(mu))` and
    /// conjugated entrywise, which realizes the conjugated co-resonant states
    /// (eigenvalue `mu`, since `B` is real).
    pub fn new(g: &RegularGraph, sp: &SpectralParameter, rank_tol: f64) -> Result<Self> {
        if !sp.is_admissible() {
            return Err(if sp.is_band_edge() {
                Error::BandEdge
            } else {
                Error::ExceptionalParameter(format!("{}", sp.mu))
            });
        }
        let mu = sp.mu;
        let (kernel, kernel_sq) = jordan_probe(g, mu, rank_tol);
        if kernel != kernel_sq {
            return Err(Error::JordanBlock { kernel, kernel_sq });
        }
        let forward = resonance_kernel(g, mu, false, rank_tol);
        let backward: Vec<Vec<C64>> = resonance_kernel(g, mu.conj(), true, rank_tol)
            .into_iter()
            .map(|v| v.into_iter().map(|z| z.conj()).collect())
            .collect();
        if forward.len() != backward.len() || forward.is_empty() {
            return Err(Error::SingularGram);
        }
        let m = forward.len();
        let mut gram = CMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                gram[(i, j)] = pairing_tables(g, &forward[i], &backward[j]);
            }
        }
        let ginv = inverse(&gram, GRAM_TOL).ok_or(Error::SingularGram)?;
        let dual = (0..m)
            .map(|j| {
                (0..g.edge_count())
                    .map(|e| (0..m).map(|l| backward[l][e] * ginv[(l, j)]).sum())
                    .collect()
            })
            .collect();
        Ok(Self { mu, forward, dual })
    }

    pub fn multiplicity(&self) -> usize {
        self.forward.len()
    }

    /// `T(f) = sum_i (u_i ⊗ w~_i)(f)`.
    pub fn eval(&self, g: &RegularGraph, f: &CylinderSymbol) -> C64 {
        self.forward
            .iter()
            .zip(&self.dual)
            .map(|(u, w)| ps_tensor(g, f, u, self.mu, w))
            .sum()
    }

    /// `T` on the transferred test function of [`transferred_tensor`].
    pub fn eval_transferred(&self, g: &RegularGraph, f: &CylinderSymbol) -> C64 {
        self.forward
            .iter()
            .zip(&self.dual)
            .map(|(u, w)| transferred_tensor(g, f, u, self.mu, w))
            .sum()
    }
}

/// Invariant Ruelle distribution at the Laplace eigenvalue `lambda`.
pub fn ruelle_distribution(g: &RegularGraph, f: &CylinderSymbol, sp: &SpectralParameter) -> Result<C64> {
    Ok(RuelleProjector::new(g, sp, crate::resonant::RANK_TOL)?.eval(g, f))
}

/// Both sides of the transfer invariance `T(L f) = mu T(f)`, with `L` acting
/// on the forward factor of `f * 1_P`.
pub fn ruelle_invariance(g: &RegularGraph, proj: &RuelleProjector, f: &CylinderSymbol) -> (C64, C64) {
    (proj.eval_transferred(g, f), proj.mu * proj.eval(g, f))
}
