//! Run configuration: JSON file values overlaid by command-line flags.

use std::path::{Path, PathBuf};

use psgraph::graph::{named_graph, parse_edge_list, random_regular, RegularGraph};
use psgraph::verify::{BranchPolicy, Suite, VerifyConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MAX_SYMBOL_DEPTH: usize = 3;
pub const MAX_RELATION_N: usize = 3;

/// Every field is optional so a config file may set any subset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub graph: Option<String>,
    pub suites: Option<Vec<String>>,
    pub depth: Option<usize>,
    pub n: Option<usize>,
    pub identity_rel: Option<f64>,
    pub eigen_residual: Option<f64>,
    pub group_tol: Option<f64>,
    pub branch: Option<BranchPolicy>,
    pub radius: Option<usize>,
    pub symbols: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub corrupt_amplitude: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(self, other: RunConfig) -> RunConfig {
        RunConfig {
            graph: other.graph.or(self.graph),
            suites: other.suites.or(self.suites),
            depth: other.depth.or(self.depth),
            n: other.n.or(self.n),
            identity_rel: other.identity_rel.or(self.identity_rel),
            eigen_residual: other.eigen_residual.or(self.eigen_residual),
            group_tol: other.group_tol.or(self.group_tol),
            branch: other.branch.or(self.branch),
            radius: other.radius.or(self.radius),
            symbols: other.symbols.or(self.symbols),
            seed: other.seed.or(self.seed),
            out: other.out.or(self.out),
            corrupt_amplitude: other.corrupt_amplitude.or(self.corrupt_amplitude),
        }
    }

    pub fn graph_spec(&self) -> Result<&str, CliError> {
        self.graph
            .as_deref()
            .ok_or_else(|| CliError::Usage("no graph given (use --graph or the config file)".into()))
    }

    /// Validated verification settings.
    pub fn verify_config(&self) -> Result<VerifyConfig, CliError> {
        let mut cfg = VerifyConfig::default();
        if let Some(d) = self.depth {
            if d > MAX_SYMBOL_DEPTH {
                return Err(CliError::Usage(format!("symbol depth {d} exceeds {MAX_SYMBOL_DEPTH}")));
            }
            cfg.max_depth = d;
        }
        if let Some(n) = self.n {
            if n > MAX_RELATION_N {
                return Err(CliError::Usage(format!("relation level {n} exceeds {MAX_RELATION_N}")));
            }
            cfg.n_max = n;
        }
        for (name, value, slot) in [
            ("tol", self.identity_rel, &mut cfg.identity_rel),
            ("eigen-tol", self.eigen_residual, &mut cfg.eigen_residual),
            ("group-tol", self.group_tol, &mut cfg.group_tol),
        ] {
            if let Some(v) = value {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Usage(format!("{name} must be positive, got {v}")));
                }
                *slot = v;
            }
        }
        if let Some(b) = self.branch {
            cfg.branch = b;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(s) = self.symbols {
            cfg.symbols = s;
        }
        cfg.radius = self.radius;
        cfg.corrupt_amplitude = self.corrupt_amplitude;
        Ok(cfg)
    }

    pub fn suites(&self) -> Result<Vec<Suite>, CliError> {
        let Some(names) = &self.suites else {
            return Ok(Suite::ALL.to_vec());
        };
        if names.iter().any(|n| n == "all") {
            return Ok(Suite::ALL.to_vec());
        }
        names
            .iter()
            .map(|n| Suite::parse(n).ok_or_else(|| CliError::Usage(format!("unknown suite `{n}`"))))
            .collect()
    }
}

/// Loads a graph from a name, a file path (JSON or edge list), or
/// `random:v,d,seed`.
pub fn load_graph(spec: &str) -> Result<RegularGraph, CliError> {
    if let Some(rest) = spec.strip_prefix("random:") {
        let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
        let nums: Option<Vec<u64>> = parts.iter().map(|p| p.parse().ok()).collect();
        return match nums.as_deref() {
            Some(&[v, d, seed]) => Ok(random_regular(v as usize, d as usize, seed)?),
            _ => Err(CliError::Usage(format!("expected random:v,d,seed, got `{spec}`"))),
        };
    }
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {spec}: {e}")))?;
        return Ok(if text.trim_start().starts_with('{') {
            RegularGraph::from_json(&text)?
        } else {
            parse_edge_list(&text)?
        });
    }
    Ok(named_graph(spec)?)
}
