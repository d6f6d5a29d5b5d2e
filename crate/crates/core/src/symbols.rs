//! Locally constant phase-space symbols on non-backtracking paths.
//!
//! A symbol of depth `k` assigns a complex number to each non-backtracking path
//! of length `k` (to each vertex when `k = 0`), stored in the flat path order
//! of [`RegularGraph::path_index`].

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::RegularGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct CylinderSymbol {
    pub depth: usize,
    pub values: Vec<C64>,
}

impl CylinderSymbol {
    pub fn new(g: &RegularGraph, depth: usize, values: Vec<C64>) -> Result<Self> {
        let expected = g.path_count(depth);
        if values.len() != expected {
            return Err(Error::SymbolMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(Self { depth, values })
    }

    /// Value on a path; `edges` must have length `depth` (ignored when the
    /// depth is zero, where `base` is used).
    pub fn at(&self, g: &RegularGraph, base: usize, edges: &[usize]) -> C64 {
        if self.depth == 0 {
            self.values[base]
        } else {
            self.values[g.path_index(&edges[..self.depth])]
        }
    }

    /// Entrywise `a * self + b * other` after refining both to a common depth.
    pub fn combine(&self, g: &RegularGraph, a: C64, other: &CylinderSymbol, b: C64) -> CylinderSymbol {
        let depth = self.depth.max(other.depth);
        let x = refine_to(g, self, depth);
        let y = refine_to(g, other, depth);
        CylinderSymbol {
            depth,
            values: x.values.iter().zip(&y.values).map(|(p, r)| a * p + b * r).collect(),
        }
    }

    pub fn scale(&self, c: C64) -> CylinderSymbol {
        CylinderSymbol {
            depth: self.depth,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn to_json(&self, g: &RegularGraph) -> String {
        let entries = (0..self.values.len())
            .map(|i| SymbolEntry {
                path: if self.depth == 0 {
                    Vec::new()
                } else {
                    g.path_from_index(i, self.depth)
                },
                base: if self.depth == 0 { Some(i) } else { None },
                re: self.values[i].re,
                im: self.values[i].im,
            })
            .collect();
        serde_json::to_string(&SymbolJson {
            depth: self.depth,
            entries,
        })
        .expect("symbol serializes")
    }

    pub fn from_json(g: &RegularGraph, text: &str) -> Result<Self> {
        let s: SymbolJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let n = g.path_count(s.depth);
        let mut values = vec![C64::new(0.0, 0.0); n];
        let mut seen = vec![false; n];
        for entry in s.entries {
            let idx = if s.depth == 0 {
                entry
                    .base
                    .ok_or_else(|| Error::Parse("depth-0 entry without base".into()))?
            } else {
                if entry.path.len() != s.depth || !g.is_nb_path(&entry.path) {
                    return Err(Error::Parse(format!("invalid path {:?}", entry.path)));
                }
                g.path_index(&entry.path)
            };
            if idx >= n {
                return Err(Error::Parse(format!("entry index {idx} out of range")));
            }
            values[idx] = C64::new(entry.re, entry.im);
            seen[idx] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Parse("symbol table is not total".into()));
        }
        Ok(Self { depth: s.depth, values })
    }
}

#[derive(Serialize, Deserialize)]
struct SymbolEntry {
    path: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    base: Option<usize>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct SymbolJson {
    depth: usize,
    entries: Vec<SymbolEntry>,
}

pub fn symbol_constant(g: &RegularGraph, k: usize, c: C64) -> CylinderSymbol {
    CylinderSymbol {
        depth: k,
        values: vec![c; g.path_count(k)],
    }
}

/// Entries with real and imaginary parts uniform in `[-1, 1]`.
pub fn symbol_random(g: &RegularGraph, k: usize, seed: u64) -> CylinderSymbol {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CylinderSymbol {
        depth: k,
        values: (0..g.path_count(k))
            .map(|_| C64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
            .collect(),
    }
}

/// One refinement step: each depth-`k+1` path takes the value of its prefix.
pub fn refine(g: &RegularGraph, a: &CylinderSymbol) -> CylinderSymbol {
    let k = a.depth;
    let values = if k == 0 {
        (0..g.path_count(1))
            .map(|i| a.values[i / g.degree()])
            .collect()
    } else {
        (0..g.path_count(k + 1)).map(|i| a.values[i / g.q()]).collect()
    };
    CylinderSymbol { depth: k + 1, values }
}

/// Refines `a` until it has depth `depth` (no-op if already that deep).
pub fn refine_to(g: &RegularGraph, a: &CylinderSymbol, depth: usize) -> CylinderSymbol {
    assert!(depth >= a.depth, "cannot coarsen a symbol");
    let mut out = a.clone();
    while out.depth < depth {
        out = refine(g, &out);
    }
    out
}

/// One transfer step: `(L a)(p) = sum over predecessors e0 of p_1 of
/// a(e0, p_1, ..., p_{k-1})`, output depth `max(k - 1, 1)`.
fn transfer_step(g: &RegularGraph, a: &CylinderSymbol) -> CylinderSymbol {
    let k = a.depth;
    let out_depth = k.saturating_sub(1).max(1);
    let values = (0..g.path_count(out_depth))
        .map(|i| {
            let p = g.path_from_index(i, out_depth);
            g.predecessors(p[0])
                .iter()
                .map(|&e0| {
                    if k == 0 {
                        a.values[g.iota(e0)]
                    } else {
                        let mut path = Vec::with_capacity(k);
                        path.push(e0);
                        path.extend_from_slice(&p[..k - 1]);
                        a.values[g.path_index(&path)]
                    }
                })
                .sum()
        })
        .collect();
    CylinderSymbol {
        depth: out_depth,
        values,
    }
}

/// `L^n a`; depth `max(k - n, 1)` for `n >= 1`, `a` itself for `n = 0`.
pub fn transfer_pow(g: &RegularGraph, a: &CylinderSymbol, n: usize) -> CylinderSymbol {
    let mut out = a.clone();
    for _ in 0..n {
        out = transfer_step(g, &out);
    }
    out
}

/// Branch operator `H_m(a)`, output depth `max(m + 1, k)`; `H_0(a) = a`.
///
/// For a path with vertices `x_1, x_2, ...` the value is the sum of `a` over
/// non-backtracking sequences `(y_1, ..., y_m, x_{m+1}, x_{m+2}, ...)` with
/// `y_m != x_m`, read from base `y_1` along its first `k` edges.
pub fn branch_sum(g: &RegularGraph, a: &CylinderSymbol, m: usize) -> CylinderSymbol {
    if m == 0 {
        return a.clone();
    }
    let k = a.depth;
    let depth = (m + 1).max(k);
    let values = (0..g.path_count(depth))
        .map(|i| {
            let p = g.path_from_index(i, depth);
            let mut total = C64::new(0.0, 0.0);
            // Branch edges g_1..g_m end at x_{m+1}; g_m precedes p_{m+1} and differs from p_m.
            let mut stack: Vec<Vec<usize>> = g
                .predecessors(p[m])
                .iter()
                .filter(|&&e| e != p[m - 1])
                .map(|&e| vec![e])
                .collect();
            while let Some(rev) = stack.pop() {
                if rev.len() == m {
                    let mut full: Vec<usize> = rev.iter().rev().copied().collect();
                    full.extend_from_slice(&p[m..]);
                    total += if k == 0 {
                        a.values[g.iota(full[0])]
                    } else {
                        a.values[g.path_index(&full[..k])]
                    };
                    continue;
                }
                let first = *rev.last().unwrap();
                for &e in g.predecessors(first) {
                    let mut next = rev.clone();
                    next.push(e);
                    stack.push(next);
                }
            }
            total
        })
        .collect();
    CylinderSymbol { depth, values }
}
