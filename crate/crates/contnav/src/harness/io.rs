//! On-disk artifacts: domain bundles, run checkpoints, matrix tables.
//!
//! Every file carries a schema version and the benchmark hash. Bundles
//! and checkpoints are JSON (floats round-trip exactly); result matrices
//! are tab-separated text with `#`-prefixed header metadata, one row per
//! `(s, i, metric, value)`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{DomainMeans, Metric, ResultMatrix};
use crate::policy::{AdamState, AdapterParams};
use crate::scalar::Scalar;
use crate::sim::{Benchmark, Flavor, SceneDomain};
use crate::strategies::ReplayMemory;

pub const BUNDLE_SCHEMA_VERSION: u32 = 1;
pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;
pub const MATRIX_SCHEMA_VERSION: u32 = 1;

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(tmp.display().to_string(), e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Domain bundles
// ---------------------------------------------------------------------------

/// One scene domain as stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct DomainBundle<S: Scalar> {
    pub schema_version: u32,
    pub benchmark_hash: String,
    pub flavor: String,
    pub domain: SceneDomain<S>,
}

pub fn bundle_path(dir: &Path, domain_id: u32) -> PathBuf {
    dir.join(format!("domain_{domain_id:03}.json"))
}

pub fn write_domain_bundle<S: Scalar>(
    dir: &Path,
    benchmark_hash: &str,
    flavor: Flavor,
    domain: &SceneDomain<S>,
) -> Result<PathBuf> {
    let bundle = DomainBundle {
        schema_version: BUNDLE_SCHEMA_VERSION,
        benchmark_hash: benchmark_hash.to_string(),
        flavor: flavor.short().to_string(),
        domain: domain.clone(),
    };
    let path = bundle_path(dir, domain.domain_id);
    write_atomic(&path, &serde_json::to_vec_pretty(&bundle).expect("serializable"))?;
    Ok(path)
}

pub fn read_domain_bundle<S: Scalar>(path: &Path) -> Result<DomainBundle<S>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let bundle: DomainBundle<S> = serde_json::from_slice(&bytes)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    if bundle.schema_version != BUNDLE_SCHEMA_VERSION {
        return Err(Error::parse(
            path.display().to_string(),
            format!("unsupported bundle schema {}", bundle.schema_version),
        ));
    }
    Ok(bundle)
}

/// Load a benchmark from a directory of bundles, verifying the hash.
pub fn read_benchmark<S: Scalar>(
    dir: &Path,
    expect_hash: &str,
    num_domains: usize,
) -> Result<Benchmark<S>> {
    let mut domains = Vec::with_capacity(num_domains);
    let mut flavor = None;
    for id in 0..num_domains as u32 {
        let bundle = read_domain_bundle::<S>(&bundle_path(dir, id))?;
        if bundle.benchmark_hash != expect_hash {
            return Err(Error::Config(format!(
                "bundle {} was generated under config {} but this run uses {}",
                id, bundle.benchmark_hash, expect_hash
            )));
        }
        flavor = Some(Flavor::parse(&bundle.flavor)?);
        domains.push(bundle.domain);
    }
    Ok(Benchmark {
        flavor: flavor.ok_or_else(|| Error::Config("benchmark has no domains".into()))?,
        domains,
    })
}

// ---------------------------------------------------------------------------
// Run checkpoints
// ---------------------------------------------------------------------------

/// Everything needed to resume a sequential run after a kill: flattened
/// parameters, optimizer state, replay memory, adapters, the matrix so
/// far, and the seed all random streams derive from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct RunCheckpoint<S: Scalar> {
    pub schema_version: u32,
    pub benchmark_hash: String,
    pub strategy_key: String,
    pub label: String,
    pub capacity: usize,
    pub curriculum_seed: u64,
    /// Base seed of the derived random streams (the full RNG state:
    /// every stream is a pure function of this seed and its coordinates,
    /// and `domains_done` fixes how far the run has advanced).
    pub rng_seed: u64,
    pub domains_done: usize,
    pub theta: Vec<S>,
    pub adam: AdamState<S>,
    pub anchor: Option<Vec<S>>,
    pub adapters: Vec<AdapterParams<S>>,
    pub memory: ReplayMemory<S>,
    pub matrix: ResultMatrix,
}

pub fn checkpoint_path(dir: &Path, run_stem: &str) -> PathBuf {
    dir.join(format!("checkpoint_{run_stem}.json"))
}

pub fn write_checkpoint<S: Scalar>(path: &Path, ckpt: &RunCheckpoint<S>) -> Result<()> {
    write_atomic(path, &serde_json::to_vec(ckpt).expect("serializable"))
}

pub fn read_checkpoint<S: Scalar>(path: &Path) -> Result<RunCheckpoint<S>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let ckpt: RunCheckpoint<S> = serde_json::from_slice(&bytes)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    if ckpt.schema_version != CHECKPOINT_SCHEMA_VERSION {
        return Err(Error::parse(
            path.display().to_string(),
            format!("unsupported checkpoint schema {}", ckpt.schema_version),
        ));
    }
    Ok(ckpt)
}

// ---------------------------------------------------------------------------
// Matrix tables
// ---------------------------------------------------------------------------

/// A result matrix plus the run metadata carried in its file header.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub benchmark_hash: String,
    pub label: String,
    pub capacity: usize,
    pub matrix: ResultMatrix,
}

pub fn matrix_path(dir: &Path, run_stem: &str) -> PathBuf {
    dir.join(format!("matrix_{run_stem}.tsv"))
}

pub fn write_matrix(path: &Path, file: &MatrixFile) -> Result<()> {
    let m = &file.matrix;
    let mut out = String::new();
    out.push_str(&format!("# schema_version\t{MATRIX_SCHEMA_VERSION}\n"));
    out.push_str(&format!("# benchmark_hash\t{}\n", file.benchmark_hash));
    out.push_str(&format!("# strategy\t{}\n", m.strategy));
    out.push_str(&format!("# label\t{}\n", file.label));
    out.push_str(&format!("# capacity\t{}\n", file.capacity));
    out.push_str(&format!("# curriculum_seed\t{}\n", m.curriculum_seed));
    out.push_str(&format!("# flavor\t{}\n", m.flavor));
    out.push_str(&format!(
        "# domain_order\t{}\n",
        m.domain_order
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",")
    ));
    out.push_str("s\ti\tmetric\tvalue\n");
    let mut cells = m.cells.clone();
    cells.sort_by_key(|c| (c.after, c.domain_pos));
    for cell in &cells {
        for metric in Metric::ALL {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                cell.after,
                cell.domain_pos,
                metric.key(),
                cell.means.get(metric)
            ));
        }
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_matrix(path: &Path) -> Result<MatrixFile> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let p = || path.display().to_string();
    let mut benchmark_hash = String::new();
    let mut strategy = String::new();
    let mut label = String::new();
    let mut capacity = 0usize;
    let mut curriculum_seed = 0u64;
    let mut flavor = String::new();
    let mut domain_order: Vec<u32> = Vec::new();
    let mut cells: std::collections::BTreeMap<(usize, usize), DomainMeans> = Default::default();

    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# ") {
            let (key, value) = rest
                .split_once('\t')
                .ok_or_else(|| Error::parse(p(), format!("bad header line {line:?}")))?;
            match key {
                "schema_version" => {
                    let v: u32 = value
                        .parse()
                        .map_err(|_| Error::parse(p(), "bad schema version"))?;
                    if v != MATRIX_SCHEMA_VERSION {
                        return Err(Error::parse(p(), format!("unsupported matrix schema {v}")));
                    }
                }
                "benchmark_hash" => benchmark_hash = value.to_string(),
                "strategy" => strategy = value.to_string(),
                "label" => label = value.to_string(),
                "capacity" => {
                    capacity = value.parse().map_err(|_| Error::parse(p(), "bad capacity"))?
                }
                "curriculum_seed" => {
                    curriculum_seed =
                        value.parse().map_err(|_| Error::parse(p(), "bad seed"))?
                }
                "flavor" => flavor = value.to_string(),
                "domain_order" => {
                    domain_order = value
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse().map_err(|_| Error::parse(p(), "bad domain order")))
                        .collect::<Result<_>>()?
                }
                other => return Err(Error::parse(p(), format!("unknown header key {other:?}"))),
            }
        } else if !line.starts_with("s\t") && !line.trim().is_empty() {
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 4 {
                return Err(Error::parse(p(), format!("bad row {line:?}")));
            }
            let after: usize = parts[0].parse().map_err(|_| Error::parse(p(), "bad s"))?;
            let dpos: usize = parts[1].parse().map_err(|_| Error::parse(p(), "bad i"))?;
            let metric = Metric::parse(parts[2])?;
            let value: f64 = parts[3].parse().map_err(|_| Error::parse(p(), "bad value"))?;
            let entry = cells.entry((after, dpos)).or_insert(DomainMeans {
                sr: 0.0,
                spl: 0.0,
                ne: 0.0,
                gp: 0.0,
            });
            match metric {
                Metric::Sr => entry.sr = value,
                Metric::Spl => entry.spl = value,
                Metric::Ne => entry.ne = value,
                Metric::Gp => entry.gp = value,
            }
        }
    }

    let mut matrix = ResultMatrix::new(strategy, curriculum_seed, flavor, domain_order);
    for ((after, dpos), means) in cells {
        matrix.set(after, dpos, means);
    }
    Ok(MatrixFile {
        benchmark_hash,
        label,
        capacity,
        matrix,
    })
}

/// All matrix files in a directory, sorted by file name.
pub fn read_matrix_dir(dir: &Path) -> Result<Vec<MatrixFile>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir.display().to_string(), e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("matrix_") && n.ends_with(".tsv"))
        })
        .collect();
    paths.sort();
    paths.iter().map(|p| read_matrix(p)).collect()
}
