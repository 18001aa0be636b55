//! Parallel execution of parameter sweeps.

use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use telecode_core::estimators::{aggregate, Evaluator, Protocol, SampleRecord, SCHEMA_MAJOR};
use telecode_core::rng::task_seed;
use telecode_core::sampler::SeedPath;
use telecode_core::{ProtocolParams, Replica};

use crate::config::{effective_workers, BackendChoice, SweepConfig};
use crate::error::{CliError, Result};
use crate::records::{completed_keys, file_sha256, read_records, repair_tail, task_key, task_key_of, write_aggregate, RecordWriter};

/// Rule used to derive per-task seeds, echoed into the manifest.
pub const SEED_RULE: &str = "seed = task_seed(global_seed, d, t_index, theta_index, sample); seed_path = (seed, sample); replica points use (0, 0)";

/// One parameter point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub params: ProtocolParams,
    pub protocol: Protocol,
    pub t_index: usize,
    pub theta_index: usize,
    pub evaluator: Evaluator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Task {
    pub point: usize,
    pub seed_path: SeedPath,
}

/// A task that raised an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFailure {
    pub t_over_pi: f64,
    pub theta_over_pi: f64,
    pub d: usize,
    pub n_replica: Replica,
    pub protocol: Protocol,
    pub seed_path: SeedPath,
    pub error: String,
}

pub fn build_point(params: ProtocolParams, protocol: Protocol, t_index: usize, theta_index: usize, backend: BackendChoice) -> Result<SweepPoint> {
    let ev = Evaluator::new(&params)?;
    let evaluator = match backend {
        BackendChoice::Auto => ev,
        BackendChoice::Mps => ev.with_mps(),
    };
    Ok(SweepPoint {
        params,
        protocol,
        t_index,
        theta_index,
        evaluator,
    })
}

/// Points and tasks of a configuration, in a fixed order.
pub fn plan(cfg: &SweepConfig) -> Result<(Vec<SweepPoint>, Vec<Task>)> {
    let mut points = Vec::new();
    let mut tasks = Vec::new();
    for &protocol in &cfg.protocols {
        for &n in &cfg.n_replica {
            for (theta_index, &theta) in cfg.theta_values().iter().enumerate() {
                for &d in &cfg.d {
                    for (t_index, &t) in cfg.t_values().iter().enumerate() {
                        let point = points.len();
                        points.push(build_point(cfg.params(t, theta, d, n), protocol, t_index, theta_index, cfg.backend)?);
                        if n == Replica::One {
                            for sample in 0..cfg.samples {
                                let seed = task_seed(cfg.seed, d, t_index, theta_index, sample);
                                tasks.push(Task {
                                    point,
                                    seed_path: SeedPath { seed, sample },
                                });
                            }
                        } else {
                            tasks.push(Task {
                                point,
                                seed_path: SeedPath { seed: 0, sample: 0 },
                            });
                        }
                    }
                }
            }
        }
    }
    Ok((points, tasks))
}

pub fn run_task(point: &SweepPoint, seed_path: SeedPath) -> std::result::Result<SampleRecord, TaskFailure> {
    let start = Instant::now();
    let ev = &point.evaluator;
    let result = match (point.protocol, point.params.n_replica) {
        (Protocol::Passive, _) => ev.sample_passive(seed_path),
        (Protocol::Active, Replica::One) => ev.sample(seed_path),
        (Protocol::Active, _) => ev.replica_record(),
    };
    match result {
        Ok(mut r) => {
            r.wall_time = start.elapsed().as_secs_f64();
            Ok(r)
        }
        Err(e) => Err(TaskFailure {
            t_over_pi: point.params.t_over_pi,
            theta_over_pi: point.params.theta_over_pi,
            d: point.params.d,
            n_replica: point.params.n_replica,
            protocol: point.protocol,
            seed_path,
            error: e.to_string(),
        }),
    }
}

fn point_key(point: &SweepPoint, seed_path: SeedPath) -> String {
    let p = &point.params;
    task_key(point.protocol, p.n_replica, p.theta_over_pi, p.d, p.t_over_pi, seed_path)
}

/// Run `tasks` on `workers` threads; one writer thread owns both output
/// files. Returns the number of failures.
pub fn execute(points: &[SweepPoint], tasks: &[Task], workers: usize, records: &Path, failures: &Path) -> Result<usize> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::config("workers", e.to_string()))?;
    let mut rec_out = RecordWriter::append(records)?;
    let mut fail_out: Option<RecordWriter> = None;
    let (tx, rx) = mpsc::sync_channel::<std::result::Result<SampleRecord, TaskFailure>>(4 * workers.max(1));
    std::thread::scope(|scope| {
        let writer = scope.spawn(move || -> Result<usize> {
            let mut n_failed = 0;
            for msg in rx {
                match msg {
                    Ok(r) => rec_out.write(&r)?,
                    Err(f) => {
                        n_failed += 1;
                        if fail_out.is_none() {
                            fail_out = Some(RecordWriter::append(failures)?);
                        }
                        if let Some(w) = fail_out.as_mut() {
                            w.write(&f)?;
                        }
                    }
                }
            }
            Ok(n_failed)
        });
        pool.install(|| {
            tasks.par_iter().for_each_with(tx, |tx, task| {
                let _ = tx.send(run_task(&points[task.point], task.seed_path));
            });
        });
        writer.join().unwrap_or_else(|_| Err(CliError::config("workers", "writer thread panicked")))
    })
}

/// Provenance of one sweep run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: SweepConfig,
    pub code_version: String,
    pub schema: u32,
    pub global_seed: u64,
    pub seed_rule: String,
    pub outputs: ManifestOutputs,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub workers: usize,
    pub n_tasks: usize,
    pub n_resumed: usize,
    pub n_failed: usize,
    pub aggregate_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestOutputs {
    pub records: PathBuf,
    pub aggregate: PathBuf,
    pub failures: PathBuf,
    pub manifest: PathBuf,
}

impl ManifestOutputs {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            records: dir.join("records.jsonl"),
            aggregate: dir.join("aggregate.csv"),
            failures: dir.join("failures.jsonl"),
            manifest: dir.join("manifest.json"),
        }
    }
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let m: RunManifest = serde_json::from_str(&text).map_err(|e| CliError::Parse {
            path: path.to_owned(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if m.schema != SCHEMA_MAJOR {
            return Err(CliError::Schema {
                path: path.to_owned(),
                found: m.schema,
                expected: SCHEMA_MAJOR,
            });
        }
        m.config.validate()?;
        Ok(m)
    }
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOptions {
    pub resume: bool,
    /// Overrides the configured worker count, below `TELECODE_WORKERS`.
    pub workers: Option<usize>,
}

/// Run a sweep, writing records, aggregate and manifest into the output
/// directory. Task failures are logged and reported after all outputs exist.
pub fn run_sweep(cfg: &SweepConfig, opts: SweepOptions) -> Result<RunManifest> {
    cfg.validate()?;
    let workers = effective_workers(opts.workers.unwrap_or(cfg.workers))?;
    let started = unix_now();
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let out = ManifestOutputs::in_dir(dir);
    for stale in [&out.failures, &out.aggregate, &out.manifest] {
        if stale.exists() {
            std::fs::remove_file(stale).map_err(|e| CliError::io(stale, e))?;
        }
    }
    let done = if opts.resume && out.records.exists() {
        repair_tail(&out.records)?;
        completed_keys(&read_records(&out.records)?)
    } else {
        if out.records.exists() {
            std::fs::remove_file(&out.records).map_err(|e| CliError::io(&out.records, e))?;
        }
        Default::default()
    };
    let (points, tasks) = plan(cfg)?;
    let n_tasks = tasks.len();
    let todo: Vec<Task> = tasks.into_iter().filter(|t| !done.contains(&point_key(&points[t.point], t.seed_path))).collect();
    let n_resumed = n_tasks - todo.len();
    let n_failed = execute(&points, &todo, workers, &out.records, &out.failures)?;
    let records = read_records(&out.records)?;
    let mut seen = std::collections::BTreeSet::new();
    let unique: Vec<SampleRecord> = records.into_iter().filter(|r| seen.insert(task_key_of(r))).collect();
    write_aggregate(&out.aggregate, &aggregate(&unique)?)?;
    let manifest = RunManifest {
        config: cfg.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        schema: SCHEMA_MAJOR,
        global_seed: cfg.seed,
        seed_rule: SEED_RULE.to_string(),
        aggregate_sha256: file_sha256(&out.aggregate)?,
        outputs: out.clone(),
        started_unix: started,
        finished_unix: unix_now(),
        workers,
        n_tasks,
        n_resumed,
        n_failed,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Parse {
        path: out.manifest.clone(),
        line: 0,
        message: e.to_string(),
    })?;
    std::fs::write(&out.manifest, text + "\n").map_err(|e| CliError::io(&out.manifest, e))?;
    if n_failed > 0 {
        return Err(CliError::TasksFailed {
            failed: n_failed,
            total: n_tasks,
            log: out.failures,
        });
    }
    Ok(manifest)
}
