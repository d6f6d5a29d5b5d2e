//! Resonant and co-resonant states of the non-backtracking transfer operator.
//!
//! A forward state `u` is a right eigenvector of the Hashimoto matrix `B`
//! (`B[e][e'] = 1` iff `e` feeds `e'`), a backward state `w` is a right
//! eigenvector of `B^T`. Both are built in closed form from a Laplace
//! eigenfunction; [`resonance_kernel`] provides the independent kernel route.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::RegularGraph;
use crate::linalg::{nullspace, CMatrix};
use crate::spectral::{eigen_residual, SpectralParameter};

/// Default relative rank tolerance for kernel extraction.
pub const RANK_TOL: f64 = 1e-8;
/// Largest eigen-equation residual accepted for input eigenfunctions.
pub const EIGENFUNCTION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonantState {
    pub orientation: Orientation,
    pub mu: C64,
    /// Depth-1 cylinder values, indexed by directed edge.
    pub v: Vec<C64>,
}

fn check_input(g: &RegularGraph, phi: &[C64], sp: &SpectralParameter) -> Result<()> {
    if sp.is_exceptional() {
        return Err(Error::ExceptionalParameter(format!("{}", sp.mu)));
    }
    assert_eq!(phi.len(), g.vertex_count(), "vertex function has wrong length");
    let lambda = crate::spectral::chi_of(sp.z, sp.q);
    let scale = phi.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let res = if lambda.im.abs() > 1e-12 {
        f64::INFINITY
    } else {
        eigen_residual(g, phi, lambda.re)
    };
    if res > EIGENFUNCTION_TOL * scale {
        return Err(Error::NotAnEigenfunction(res));
    }
    Ok(())
}

/// Forward state `v(e) = (phi(tau e) - phi(iota e) / mu) / (mu - 1/mu)`.
pub fn resonant_state(g: &RegularGraph, phi: &[C64], sp: &SpectralParameter) -> Result<ResonantState> {
    check_input(g, phi, sp)?;
    let mu = sp.mu;
    let denom = mu - 1.0 / mu;
    let v = g
        .directed_edges()
        .iter()
        .map(|&(a, b)| (phi[b] - phi[a] / mu) / denom)
        .collect();
    Ok(ResonantState {
        orientation: Orientation::Forward,
        mu,
        v,
    })
}

/// Backward state `v(e) = (phi_bar(iota e) - phi_bar(tau e) / mu) / (mu - 1/mu)`
/// with `mu` the backward eigenvalue carried by `sp`.
pub fn coresonant_state(
    g: &RegularGraph,
    phi_bar: &[C64],
    sp: &SpectralParameter,
) -> Result<ResonantState> {
    check_input(g, phi_bar, sp)?;
    let mu = sp.mu;
    let denom = mu - 1.0 / mu;
    let v = g
        .directed_edges()
        .iter()
        .map(|&(a, b)| (phi_bar[a] - phi_bar[b] / mu) / denom)
        .collect();
    Ok(ResonantState {
        orientation: Orientation::Backward,
        mu,
        v,
    })
}

/// Value of a state on the cylinder of chains determined by `edges`.
///
/// Forward paths are read from the base outward and the value is
/// `mu^{-(k-1)} v(e_k)`. Backward paths are listed in travel order ending at
/// the base, so the far edge is `edges[0]` and the value is
/// `mu^{-(k-1)} v(edges[0])`.
pub fn cylinder_value(state: &ResonantState, edges: &[usize]) -> C64 {
    assert!(!edges.is_empty(), "cylinder needs at least one edge");
    let far = match state.orientation {
        Orientation::Forward => *edges.last().unwrap(),
        Orientation::Backward => edges[0],
    };
    state.v[far] * state.mu.powi(-(edges.len() as i32 - 1))
}

/// Dense 0/1 non-backtracking matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HashimotoMatrix {
    pub size: usize,
    pub entries: Vec<u8>,
}

impl HashimotoMatrix {
    pub fn get(&self, e: usize, f: usize) -> u8 {
        self.entries[e * self.size + f]
    }

    pub fn to_cmatrix(&self) -> CMatrix {
        let data: Vec<f64> = self.entries.iter().map(|&b| b as f64).collect();
        CMatrix::from_real(self.size, self.size, &data)
    }
}

pub fn hashimoto_matrix(g: &RegularGraph) -> HashimotoMatrix {
    let n = g.edge_count();
    let mut entries = vec![0u8; n * n];
    for e in 0..n {
        for &f in g.successors(e) {
            entries[e * n + f] = 1;
        }
    }
    HashimotoMatrix { size: n, entries }
}

/// `(B v)(e) = sum of v over successors of e`.
pub fn apply_b(g: &RegularGraph, v: &[C64]) -> Vec<C64> {
    (0..g.edge_count())
        .map(|e| g.successors(e).iter().map(|&f| v[f]).sum())
        .collect()
}

/// `(B^T v)(e) = sum of v over predecessors of e`.
pub fn apply_bt(g: &RegularGraph, v: &[C64]) -> Vec<C64> {
    (0..g.edge_count())
        .map(|e| g.predecessors(e).iter().map(|&f| v[f]).sum())
        .collect()
}

/// Maximum entry of `|B v - mu v|` (forward) or `|B^T v - mu v|` (backward).
pub fn eigen_equation_residual(g: &RegularGraph, state: &ResonantState) -> f64 {
    let bv = match state.orientation {
        Orientation::Forward => apply_b(g, &state.v),
        Orientation::Backward => apply_bt(g, &state.v),
    };
    bv.iter()
        .zip(&state.v)
        .map(|(a, b)| (a - state.mu * b).norm())
        .fold(0.0, f64::max)
}

/// Vertex function obtained by summing the state over edges leaving each
/// vertex (forward) or entering it (backward).
pub fn pushforward(g: &RegularGraph, state: &ResonantState) -> Vec<C64> {
    (0..g.vertex_count())
        .map(|x| match state.orientation {
            Orientation::Forward => g.out_edges(x).iter().map(|&e| state.v[e]).sum(),
            Orientation::Backward => g.in_edges(x).map(|e| state.v[e]).sum(),
        })
        .collect()
}

/// Kernel basis of `B - mu I`, or of `B^T - mu I` when `transpose` is set.
pub fn resonance_kernel(g: &RegularGraph, mu: C64, transpose: bool, rank_tol: f64) -> Vec<Vec<C64>> {
    let b = hashimoto_matrix(g).to_cmatrix();
    let b = if transpose { b.transpose() } else { b };
    nullspace(&b.shifted(mu), rank_tol)
}

/// Dimensions of `ker(B - mu)` and `ker((B - mu)^2)`; they differ exactly
/// when `mu` carries a Jordan block.
pub fn jordan_probe(g: &RegularGraph, mu: C64, rank_tol: f64) -> (usize, usize) {
    let shifted = hashimoto_matrix(g).to_cmatrix().shifted(mu);
    let sq = shifted.mul(&shifted);
    (nullspace(&shifted, rank_tol).len(), nullspace(&sq, rank_tol).len())
}

/// `sum_x sum_{e != e' leaving x} u(e) w(reverse e')`.
pub fn geodesic_pairing(g: &RegularGraph, u: &ResonantState, w: &ResonantState) -> C64 {
    pairing_tables(g, &u.v, &w.v)
}

/// The geodesic pairing on raw edge tables.
pub fn pairing_tables(g: &RegularGraph, u: &[C64], w: &[C64]) -> C64 {
    let mut total = C64::new(0.0, 0.0);
    for x in 0..g.vertex_count() {
        let out = g.out_edges(x);
        let su: C64 = out.iter().map(|&e| u[e]).sum();
        let sw: C64 = out.iter().map(|&e| w[e ^ 1]).sum();
        let diag: C64 = out.iter().map(|&e| u[e] * w[e ^ 1]).sum();
        total += su * sw - diag;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::named_graph;
    use crate::spectral::{complexify, eigh_decompose, GROUP_TOL};

    #[test]
    fn hashimoto_counts() {
        let g = named_graph("k4").unwrap();
        let b = hashimoto_matrix(&g);
        assert_eq!(b.entries.iter().filter(|&&x| x == 1).count(), 24);
        for e in 0..g.edge_count() {
            assert_eq!(b.get(e, g.reverse(e)), 0);
        }
    }

    #[test]
    fn constant_function_is_exceptional() {
        let g = named_graph("petersen").unwrap();
        let spaces = eigh_decompose(&g, GROUP_TOL).unwrap();
        let top = &spaces[0];
        let phi = complexify(&top.basis[0]);
        assert!(matches!(
            resonant_state(&g, &phi, &top.parameter),
            Err(Error::ExceptionalParameter(_))
        ));
    }

    #[test]
    fn rejects_non_eigenfunction() {
        let g = named_graph("k4").unwrap();
        let sp = crate::spectral::spectral_parameter(-1.0 / 3.0, 2);
        let phi = complexify(&[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(resonant_state(&g, &phi, &sp), Err(Error::NotAnEigenfunction(_))));
    }
}
