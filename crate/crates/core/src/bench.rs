//! Benchmark harness: runs every (instance, engine, seed) cell of a plan and
//! aggregates the outcomes.
//!
//! Cell seeds come from a stable hash of the plan seed, instance id, engine
//! id and seed index, so adding or removing instances or engines never
//! changes the other cells. Wall-clock time is recorded only when the plan
//! asks for it; otherwise `wall_ms` is 0 and reports are byte-reproducible.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{run_hill_climb, run_sa, BaselineConfig};
use crate::cnf::{generate_random_ksat, read_dimacs_file, CnfFormula};
use crate::eda::{run_eda, EdaConfig, RunResult};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid plan:\n  {}", .0.join("\n  "))]
    InvalidPlan(Vec<String>),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSource {
    /// DIMACS files; relative paths resolve against the plan's directory.
    Files(Vec<PathBuf>),
    /// `count` random k-SAT formulas with seeds `seed, seed + 1, ...`.
    Generate {
        n: usize,
        m: usize,
        k: usize,
        count: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "snake_case")]
pub enum EngineSpec {
    Eda {
        #[serde(default)]
        id: Option<String>,
        #[serde(default)]
        config: EdaConfig,
    },
    Sa {
        #[serde(default)]
        id: Option<String>,
        #[serde(default)]
        config: BaselineConfig,
    },
    Hc {
        #[serde(default)]
        id: Option<String>,
        #[serde(default)]
        config: BaselineConfig,
    },
}

impl EngineSpec {
    pub fn id(&self) -> &str {
        match self {
            EngineSpec::Eda { id, .. } => id.as_deref().unwrap_or("eda"),
            EngineSpec::Sa { id, .. } => id.as_deref().unwrap_or("sa"),
            EngineSpec::Hc { id, .. } => id.as_deref().unwrap_or("hc"),
        }
    }

    /// Runs the engine with the plan's budget and the cell's seed.
    pub fn run(&self, formula: &CnfFormula, max_iterations: u64, seed: u64) -> RunResult {
        let result = match self {
            EngineSpec::Eda { config, .. } => {
                run_eda(formula, &config.clone().with_max_iterations(max_iterations).with_seed(seed))
            }
            EngineSpec::Sa { config, .. } => {
                run_sa(formula, &config.clone().with_max_iterations(max_iterations).with_seed(seed))
            }
            EngineSpec::Hc { config, .. } => run_hill_climb(
                formula,
                &config.clone().with_max_iterations(max_iterations).with_seed(seed),
            ),
        };
        // configs are validated with the plan before any cell runs
        result.expect("validated engine config")
    }

    fn validate(&self, max_iterations: u64) -> Result<(), String> {
        let r = match self {
            EngineSpec::Eda { config, .. } => {
                config.clone().with_max_iterations(max_iterations).validate().map_err(|e| e.to_string())
            }
            EngineSpec::Sa { config, .. } | EngineSpec::Hc { config, .. } => {
                config.clone().with_max_iterations(max_iterations).validate().map_err(|e| e.to_string())
            }
        };
        r.map_err(|e| format!("engine `{}`: {e}", self.id()))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPlan {
    pub seed: u64,
    pub seeds_per_instance: usize,
    pub max_iterations: u64,
    pub instances: InstanceSource,
    pub engines: Vec<EngineSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub record_wall_time: bool,
    /// Directory relative instance paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl BenchPlan {
    /// Every problem with the plan, collected rather than stopping at the first.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut problems = Vec::new();
        if self.seeds_per_instance == 0 {
            problems.push("seeds_per_instance must be >= 1".to_string());
        }
        if self.max_iterations == 0 {
            problems.push("max_iterations must be >= 1".to_string());
        }
        if let InstanceSource::Generate { n, k, .. } = self.instances {
            if k == 0 || k > n {
                problems.push(format!("generator needs 1 <= k <= n (n = {n}, k = {k})"));
            }
        }
        let mut seen = HashSet::new();
        for engine in &self.engines {
            if !seen.insert(engine.id()) {
                problems.push(format!("duplicate engine id `{}`", engine.id()));
            }
            if self.max_iterations > 0 {
                if let Err(e) = engine.validate(self.max_iterations) {
                    problems.push(e);
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }

    /// Resolves a relative path against the plan's directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }
}

/// Reads and validates a JSON plan; relative paths resolve against its directory.
pub fn load_plan(path: impl AsRef<Path>) -> Result<BenchPlan, BenchError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut plan: BenchPlan = serde_json::from_str(&text)?;
    plan.base_dir = path.parent().map(Path::to_path_buf);
    plan.validate().map_err(BenchError::InvalidPlan)?;
    Ok(plan)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub instance_id: String,
    pub engine: String,
    pub seed: u64,
    pub solved: bool,
    pub iterations: u64,
    pub best_energy: usize,
    pub accepts: u64,
    pub rejects: u64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub instance_id: String,
    pub engine: String,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Iterations-to-solution statistics over successful runs only.
    pub median_iterations: Option<f64>,
    pub q1_iterations: Option<f64>,
    pub q3_iterations: Option<f64>,
    pub iqr_iterations: Option<f64>,
    /// Lowest energy reached by a failed run.
    pub best_energy_failures: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceError {
    pub instance_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub plan: BenchPlan,
    pub aggregates: Vec<Aggregate>,
    pub rows: Vec<RunRow>,
    pub errors: Vec<InstanceError>,
}

/// FNV-1a over the cell coordinates, finished with a SplitMix64 mix.
pub fn cell_seed(plan_seed: u64, instance_id: &str, engine_id: &str, index: usize) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(PRIME);
        }
    };
    feed(&plan_seed.to_le_bytes());
    feed(&[0xff]);
    feed(instance_id.as_bytes());
    feed(&[0xff]);
    feed(engine_id.as_bytes());
    feed(&[0xff]);
    feed(&(index as u64).to_le_bytes());
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn load_instances(plan: &BenchPlan) -> Vec<(String, Result<CnfFormula, String>)> {
    match &plan.instances {
        InstanceSource::Files(paths) => paths
            .iter()
            .map(|p| {
                let id = p.display().to_string();
                let loaded = read_dimacs_file(plan.resolve(p)).map_err(|e| e.to_string());
                (id, loaded)
            })
            .collect(),
        &InstanceSource::Generate { n, m, k, count, seed } => (0..count)
            .map(|i| {
                let s = seed.wrapping_add(i as u64);
                let id = format!("gen-n{n}-m{m}-k{k}-s{s}");
                (id, generate_random_ksat(n, m, k, s).map_err(|e| e.to_string()))
            })
            .collect(),
    }
}

/// Executes every cell. Rows come out in (instance, engine, seed index)
/// order regardless of how the cells were scheduled.
pub fn run_bench(plan: &BenchPlan) -> Result<BenchReport, BenchError> {
    plan.validate().map_err(BenchError::InvalidPlan)?;
    let instances = load_instances(plan);
    let mut errors = Vec::new();
    let mut loaded = Vec::new();
    for (id, result) in instances {
        match result {
            Ok(formula) => loaded.push((id, formula)),
            Err(message) => errors.push(InstanceError { instance_id: id, message }),
        }
    }

    let cells: Vec<(usize, usize, usize)> = (0..loaded.len())
        .flat_map(|i| {
            (0..plan.engines.len())
                .flat_map(move |e| (0..plan.seeds_per_instance).map(move |s| (i, e, s)))
        })
        .collect();

    let rows: Vec<RunRow> = cells
        .par_iter()
        .map(|&(i, e, s)| {
            let (id, formula) = &loaded[i];
            let engine = &plan.engines[e];
            let seed = cell_seed(plan.seed, id, engine.id(), s);
            let start = Instant::now();
            let result = engine.run(formula, plan.max_iterations, seed);
            let wall_ms = if plan.record_wall_time {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            RunRow {
                instance_id: id.clone(),
                engine: engine.id().to_string(),
                seed,
                solved: result.solved,
                iterations: result.iterations_used,
                best_energy: result.best_energy,
                accepts: result.accept_count,
                rejects: result.reject_count,
                wall_ms,
            }
        })
        .collect();

    Ok(BenchReport { plan: plan.clone(), aggregates: aggregate(&rows), rows, errors })
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[u64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] as f64 + (sorted[hi] as f64 - sorted[lo] as f64) * frac
}

/// Per (instance, engine) summaries, in first-appearance order of the rows.
pub fn aggregate(rows: &[RunRow]) -> Vec<Aggregate> {
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for row in rows {
        let key = (row.instance_id.as_str(), row.engine.as_str());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(instance, engine)| {
            let group: Vec<&RunRow> = rows
                .iter()
                .filter(|r| r.instance_id == instance && r.engine == engine)
                .collect();
            let mut its: Vec<u64> = group.iter().filter(|r| r.solved).map(|r| r.iterations).collect();
            its.sort_unstable();
            let stat = |q| (!its.is_empty()).then(|| quantile(&its, q));
            let (q1, q3) = (stat(0.25), stat(0.75));
            Aggregate {
                instance_id: instance.to_string(),
                engine: engine.to_string(),
                runs: group.len(),
                successes: its.len(),
                success_rate: its.len() as f64 / group.len() as f64,
                median_iterations: stat(0.5),
                q1_iterations: q1,
                q3_iterations: q3,
                iqr_iterations: q1.zip(q3).map(|(a, b)| b - a),
                best_energy_failures: group.iter().filter(|r| !r.solved).map(|r| r.best_energy).min(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// One row per run, fixed header.
    Csv,
    /// Plan, aggregates, rows and errors nested in one document.
    Json,
}

pub const CSV_HEADER: [&str; 9] = [
    "instance_id",
    "engine",
    "seed",
    "solved",
    "iterations",
    "best_energy",
    "accepts",
    "rejects",
    "wall_ms",
];

pub fn rows_to_csv(rows: &[RunRow]) -> Result<String, BenchError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Io {
        path: "<memory>".into(),
        source: e.into_error(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_rows_csv(text: &str) -> Result<Vec<RunRow>, BenchError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(BenchError::InvalidPlan(vec![format!("unexpected CSV header {header:?}")]));
    }
    r.deserialize().map(|row| row.map_err(BenchError::from)).collect()
}

pub fn report_to_json(report: &BenchReport) -> Result<String, BenchError> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn read_report_json(text: &str) -> Result<BenchReport, BenchError> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_report(
    report: &BenchReport,
    format: ReportFormat,
    path: impl AsRef<Path>,
) -> Result<(), BenchError> {
    let path = path.as_ref();
    let text = match format {
        ReportFormat::Csv => rows_to_csv(&report.rows)?,
        ReportFormat::Json => report_to_json(report)?,
    };
    fs::write(path, text).map_err(io_err(path))
}
