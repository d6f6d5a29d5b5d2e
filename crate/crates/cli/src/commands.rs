//! The `spectrum`, `verify` and `analyze` commands.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use psgraph::distributions::{c_function, patterson_sullivan, wigner, DistributionContext};
use psgraph::graph::RegularGraph;
use psgraph::spectral::{complexify, eigh_decompose, Classification, SpectralParameter};
use psgraph::verify::{run_suites, symbol_family, Branch, BranchPolicy, Environment, VerificationReport};
use serde::Serialize;

use crate::config::{load_graph, RunConfig};
use crate::CliError;

/// Number of tempered-band samples in the c-function table.
pub const CFUN_SAMPLES: usize = 64;

#[derive(Debug, Serialize)]
pub struct SpectrumEntry {
    pub lambda: f64,
    pub multiplicity: usize,
    pub z: [f64; 2],
    pub mu: [f64; 2],
    pub classification: Classification,
    pub admissible: bool,
}

#[derive(Debug, Serialize)]
pub struct SpectrumReport {
    pub graph: String,
    pub vertex_count: usize,
    pub q: usize,
    pub eigenspaces: Vec<SpectrumEntry>,
    pub environment: Environment,
}

fn environment(seed: u64) -> Environment {
    Environment {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
    }
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            Ok(())
        }
    }
}

pub fn spectrum(cfg: &RunConfig) -> Result<i32, CliError> {
    let name = cfg.graph_spec()?;
    let g = load_graph(name)?;
    let vcfg = cfg.verify_config()?;
    let spaces = eigh_decompose(&g, vcfg.group_tol)?;
    let report = SpectrumReport {
        graph: name.to_string(),
        vertex_count: g.vertex_count(),
        q: g.q(),
        eigenspaces: spaces
            .iter()
            .map(|s| {
                let p = &s.parameter;
                SpectrumEntry {
                    lambda: p.lambda,
                    multiplicity: s.multiplicity,
                    z: [p.z.re, p.z.im],
                    mu: [p.mu.re, p.mu.im],
                    classification: p.classification,
                    admissible: p.is_admissible(),
                }
            })
            .collect(),
        environment: environment(vcfg.seed),
    };
    write_json(&report, cfg.out.as_deref())?;
    Ok(0)
}

pub fn verify(cfg: &RunConfig) -> Result<i32, CliError> {
    let name = cfg.graph_spec()?;
    let g = load_graph(name)?;
    let vcfg = cfg.verify_config()?;
    let suites = cfg.suites()?;
    let report: VerificationReport = run_suites(&g, name, &vcfg, &suites)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "{}: {} records, {} passed, {} failed",
        name, report.summary.total, report.summary.passed, report.summary.failed
    );
    write_json(&report, cfg.out.as_deref())?;
    Ok(if report.all_pass() { 0 } else { 1 })
}

fn branches(policy: BranchPolicy) -> &'static [Branch] {
    match policy {
        BranchPolicy::Principal => &[Branch::Principal],
        BranchPolicy::Both => &[Branch::Principal, Branch::Conjugate],
    }
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Principal => "principal",
        Branch::Conjugate => "conjugate",
    }
}

fn csv_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("cannot write {}: {e}", path.display()))
}

/// Writes `ps_wigner.csv` and `cfun.csv` into the output directory and
/// returns their paths.
pub fn analyze_to(g: &RegularGraph, cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let vcfg = cfg.verify_config()?;
    std::fs::create_dir_all(dir).map_err(|e| csv_error(dir, e))?;
    let spaces = eigh_decompose(g, vcfg.group_tol)?;
    let symbols = symbol_family(g, &vcfg);

    let ps_path = dir.join("ps_wigner.csv");
    let mut w = csv::Writer::from_path(&ps_path).map_err(|e| csv_error(&ps_path, e))?;
    w.write_record([
        "lambda", "multiplicity", "branch", "symbol_seed", "symbol_depth", "wigner_re", "wigner_im", "ps_re", "ps_im",
    ])
    .map_err(|e| csv_error(&ps_path, e))?;
    for space in spaces.iter().filter(|s| s.parameter.is_admissible()) {
        for &branch in branches(vcfg.branch) {
            let sp = match branch {
                Branch::Principal => space.parameter,
                Branch::Conjugate => space.parameter.other_branch(),
            };
            let contexts = space
                .basis
                .iter()
                .map(|b| DistributionContext::diagonal(g, complexify(b), sp))
                .collect::<psgraph::Result<Vec<_>>>()?;
            for (seed, s) in &symbols {
                let wv: C64 = contexts.iter().map(|c| wigner(g, s, c)).sum();
                let pv: C64 = contexts.iter().map(|c| patterson_sullivan(g, s, c)).sum();
                w.write_record([
                    format!("{:.17e}", space.parameter.lambda),
                    space.multiplicity.to_string(),
                    branch_name(branch).to_string(),
                    seed.to_string(),
                    s.depth.to_string(),
                    format!("{:.17e}", wv.re),
                    format!("{:.17e}", wv.im),
                    format!("{:.17e}", pv.re),
                    format!("{:.17e}", pv.im),
                ])
                .map_err(|e| csv_error(&ps_path, e))?;
            }
        }
    }
    w.flush().map_err(|e| csv_error(&ps_path, e))?;

    let cf_path = dir.join("cfun.csv");
    let mut w = csv::Writer::from_path(&cf_path).map_err(|e| csv_error(&cf_path, e))?;
    w.write_record(["kind", "lambda", "theta", "c_re", "c_im"])
        .map_err(|e| csv_error(&cf_path, e))?;
    let q = g.q();
    let mut rows: Vec<(&str, SpectralParameter)> = (0..CFUN_SAMPLES)
        .map(|j| {
            let theta = PI * (j as f64 + 0.5) / CFUN_SAMPLES as f64;
            ("sample", SpectralParameter::from_z(C64::from_polar(1.0, theta), q))
        })
        .collect();
    rows.extend(
        spaces
            .iter()
            .filter(|s| s.parameter.is_admissible() && s.parameter.classification == Classification::Tempered)
            .map(|s| ("eigenvalue", s.parameter)),
    );
    for (kind, sp) in rows {
        let c = c_function(&sp)?;
        w.write_record([
            kind.to_string(),
            format!("{:.17e}", sp.lambda),
            format!("{:.17e}", sp.z.arg()),
            format!("{:.17e}", c.re),
            format!("{:.17e}", c.im),
        ])
        .map_err(|e| csv_error(&cf_path, e))?;
    }
    w.flush().map_err(|e| csv_error(&cf_path, e))?;
    Ok(vec![ps_path, cf_path])
}

pub fn analyze(cfg: &RunConfig) -> Result<i32, CliError> {
    let g = load_graph(cfg.graph_spec()?)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    for p in analyze_to(&g, cfg, &dir)? {
        eprintln!("wrote {}", p.display());
    }
    Ok(0)
}
