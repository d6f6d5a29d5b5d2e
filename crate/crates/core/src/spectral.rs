//! Normalized Laplacian, its eigendecomposition, and spectral parameters.
//!
//! For an eigenvalue `lambda` of `A / (q+1)` the parameter `z = q^{is}` solves
//! `z^2 - ((q+1) lambda / sqrt q) z + 1 = 0`, and `mu = sqrt(q) z` is the
//! matching eigenvalue of the non-backtracking operator.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::RegularGraph;
use crate::linalg::jacobi_eigh;

/// Default tolerance for merging nearby eigenvalues into one eigenspace.
pub const GROUP_TOL: f64 = 1e-8;
/// Sweep cap for the Jacobi solver.
pub const MAX_SWEEPS: usize = 100;
/// Tolerance used by the classification predicates.
pub const CLASSIFY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Tempered,
    Untempered,
    Exceptional,
    BandEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParameter {
    pub lambda: f64,
    pub q: usize,
    pub z: C64,
    pub mu: C64,
    pub classification: Classification,
}

impl SpectralParameter {
    /// Parameter determined by `z` directly; `lambda` is the real part of
    /// `chi(z)`, which may lie outside `[-1, 1]`.
    pub fn from_z(z: C64, q: usize) -> Self {
        let mu = z * (q as f64).sqrt();
        Self {
            lambda: chi_of(z, q).re,
            q,
            z,
            mu,
            classification: classify(z, q),
        }
    }

    /// The other root `1/z` of the same quadratic.
    pub fn other_branch(&self) -> Self {
        Self::from_z(1.0 / self.z, self.q)
    }

    /// The parameter with `z` replaced by its conjugate.
    pub fn conjugate(&self) -> Self {
        Self::from_z(self.z.conj(), self.q)
    }

    pub fn is_exceptional(&self) -> bool {
        self.classification == Classification::Exceptional
    }

    pub fn is_band_edge(&self) -> bool {
        self.classification == Classification::BandEdge
    }

    /// Neither exceptional nor a band edge.
    pub fn is_admissible(&self) -> bool {
        !self.is_exceptional() && !self.is_band_edge()
    }
}

fn classify(z: C64, q: usize) -> Classification {
    let mu = z * (q as f64).sqrt();
    let qf = q as f64;
    let near = |a: C64, b: f64| (a - C64::new(b, 0.0)).norm() <= CLASSIFY_TOL * (1.0 + b.abs());
    if near(z, 1.0) || near(z, -1.0) {
        Classification::BandEdge
    } else if [1.0, -1.0, qf, -qf].iter().any(|&b| near(mu, b)) {
        Classification::Exceptional
    } else if (z.norm() - 1.0).abs() <= CLASSIFY_TOL {
        Classification::Tempered
    } else {
        Classification::Untempered
    }
}

/// `chi(z) = sqrt(q) / (q+1) * (z + 1/z)`.
pub fn chi_of(z: C64, q: usize) -> C64 {
    let qf = q as f64;
    qf.sqrt() / (qf + 1.0) * (z + 1.0 / z)
}

/// Solves for `z` with the branch rule: `Im z > 0` preferred, otherwise
/// `|z| >= 1`.
pub fn spectral_parameter(lambda: f64, q: usize) -> SpectralParameter {
    let qf = q as f64;
    let b = (qf + 1.0) * lambda / qf.sqrt();
    let mut disc = b * b - 4.0;
    if disc.abs() <= 1e-12 {
        disc = 0.0;
    }
    let z = if disc < 0.0 {
        C64::new(b / 2.0, (-disc).sqrt() / 2.0)
    } else {
        let r = disc.sqrt();
        let big = if b >= 0.0 { (b + r) / 2.0 } else { (b - r) / 2.0 };
        C64::new(big, 0.0)
    };
    let mut sp = SpectralParameter::from_z(z, q);
    sp.lambda = lambda;
    sp
}

/// `A / (q+1)`, row-major.
pub fn laplace_matrix(g: &RegularGraph) -> Vec<f64> {
    let d = g.degree() as f64;
    g.adjacency().into_iter().map(|a| a / d).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpace {
    pub parameter: SpectralParameter,
    pub multiplicity: usize,
    /// Orthonormal real eigenfunctions, one `Vec` per basis vector.
    pub basis: Vec<Vec<f64>>,
}

/// Full spectrum grouped into eigenspaces, eigenvalues descending.
pub fn eigh_decompose(g: &RegularGraph, group_tol: f64) -> Result<Vec<EigenSpace>> {
    let n = g.vertex_count();
    let lap = laplace_matrix(g);
    let (values, vectors) = jacobi_eigh(&lap, n, MAX_SWEEPS)?;
    let mut spaces: Vec<EigenSpace> = Vec::new();
    let mut i = n;
    while i > 0 {
        let top = values[i - 1];
        let mut j = i - 1;
        while j > 0 && (values[j - 1] - top).abs() <= group_tol {
            j -= 1;
        }
        let cols: Vec<Vec<f64>> = (j..i)
            .rev()
            .map(|c| (0..n).map(|r| vectors[r * n + c]).collect())
            .collect();
        let lambda = values[j..i].iter().sum::<f64>() / (i - j) as f64;
        let basis = orthonormalize(cols);
        spaces.push(EigenSpace {
            parameter: spectral_parameter(lambda.clamp(-1.0, 1.0), g.q()),
            multiplicity: basis.len(),
            basis,
        });
        i = j;
    }
    Ok(spaces)
}

/// Modified Gram-Schmidt with one reorthogonalization pass.
fn orthonormalize(mut cols: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    for i in 0..cols.len() {
        for _ in 0..2 {
            for j in 0..i {
                let dot: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                let (head, tail) = cols.split_at_mut(i);
                for (a, b) in tail[0].iter_mut().zip(&head[j]) {
                    *a -= dot * b;
                }
            }
        }
        let norm = cols[i].iter().map(|a| a * a).sum::<f64>().sqrt();
        cols[i].iter_mut().for_each(|a| *a /= norm);
    }
    cols
}

/// Maximum of `|(L phi)(x) - lambda phi(x)|`.
pub fn eigen_residual(g: &RegularGraph, phi: &[C64], lambda: f64) -> f64 {
    let d = g.degree() as f64;
    (0..g.vertex_count())
        .map(|x| {
            let avg: C64 = g.out_edges(x).iter().map(|&e| phi[g.tau(e)]).sum::<C64>() / d;
            (avg - lambda * phi[x]).norm()
        })
        .fold(0.0, f64::max)
}

/// Promotes a real vertex function to complex.
pub fn complexify(v: &[f64]) -> Vec<C64> {
    v.iter().map(|&x| C64::new(x, 0.0)).collect()
}
