use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use telecode_core::estimators::{aggregate, coherent_info_born, decode_from_kappa, renyi2_from_replica, DecodeStatus, LogicalCorrection, Protocol};
use telecode_core::lattice::build_planar_code;
use telecode_core::oracle::{coherent_info_exact, enumerate_outcomes, postselected_von_neumann, prepare_logical_bell};
use telecode_core::rng::task_seed;
use telecode_core::sampler::SeedPath;
use telecode_core::scaling::{central_charge, CollapseOptions};
use telecode_core::tn::entropy::steady_state_profile;
use telecode_core::tn::Truncation;
use telecode_core::{ProtocolParams, Replica, TelecodeError};

use telecode::config::{effective_workers, BackendChoice, SweepConfig};
use telecode::error::{CliError, Result};
use telecode::export::{collapse_parallel, export_plotdata, write_collapsed, ExportKind};
use telecode::records::{read_records, read_scaling_dataset, RecordWriter};
use telecode::sweep::{build_point, execute, run_sweep, RunManifest, SweepOptions, Task};

/// Teleportation of a planar surface code through weak Bell measurements.
///
/// Strengths and angles are given in units of π. The worker count may be
/// overridden with TELECODE_WORKERS.
#[derive(Parser)]
#[command(name = "telecode", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct PointArgs {
    /// Code distance.
    #[arg(long)]
    d: usize,
    /// Measurement strength t/π in [0, 1/4].
    #[arg(long)]
    t: f64,
    /// Measurement axis angle θ/π in [0, 1/2].
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Maximum boundary bond dimension.
    #[arg(long, default_value_t = 256)]
    chi_max: usize,
    /// Relative singular-value cutoff.
    #[arg(long, default_value_t = 1e-10)]
    svd_cutoff: f64,
}

/// Parameters from the command line; domain errors are usage errors.
fn checked(p: ProtocolParams) -> Result<ProtocolParams> {
    p.validate().map_err(|e| CliError::config("arguments", e.to_string()))?;
    Ok(p)
}

impl PointArgs {
    fn params(&self, n: Replica, seed: u64) -> Result<ProtocolParams> {
        checked(ProtocolParams {
            t_over_pi: self.t,
            theta_over_pi: self.theta,
            phi_over_pi: 0.0,
            d: self.d,
            n_replica: n,
            seed,
            chi_max: self.chi_max,
            svd_cutoff: self.svd_cutoff,
        })
    }
}

fn parse_replica(s: &str) -> std::result::Result<Replica, String> {
    s.parse().map_err(|e: telecode_core::TelecodeError| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Print the lattice of a distance-d code.
    Lattice {
        #[arg(long)]
        d: usize,
        /// Print the full site and bond tables.
        #[arg(long)]
        dump: bool,
    },
    /// Exact coherent information by dense enumeration (d <= 3).
    Oracle {
        #[arg(long)]
        d: usize,
        /// Measurement strength t/π.
        #[arg(long)]
        t: f64,
        /// Axis angle θ/π.
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        /// Azimuth φ/π.
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
        /// Replica index: 1, 2 or inf.
        #[arg(long, default_value = "1", value_parser = parse_replica)]
        n: Replica,
        /// Per-outcome table as JSON lines.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw Born samples at one point and write SampleRecords.
    Sample {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 1000)]
        n_samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output JSON-lines file, appended to.
        #[arg(long)]
        out: PathBuf,
        /// Sample the passive protocol instead (θ = 0 only).
        #[arg(long)]
        passive: bool,
        /// Use the boundary MPS even where the exact spin sum applies.
        #[arg(long)]
        mps: bool,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Run a sweep from a TOML config or a previous manifest.json.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Keep existing records and run only the missing tasks.
        #[arg(long)]
        resume: bool,
        /// Override the configured worker count.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Two-replica coherent information from one doubled contraction.
    Renyi2 {
        #[command(flatten)]
        point: PointArgs,
        /// Also contract a strip of this many rows and report the boundary
        /// entanglement profile with its central-charge fit.
        #[arg(long)]
        profile_rows: Option<usize>,
    },
    /// Active-decoder fidelity over Born samples.
    Decode {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 1000)]
        n_samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Finite-size-scaling collapse of an aggregate CSV.
    Collapse {
        /// Aggregate or collapse CSV with columns d, t_over_pi, mean, se.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        tc0: f64,
        #[arg(long)]
        nu0: f64,
        #[arg(long, default_value_t = 200)]
        bootstrap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep only rows at this θ/π.
        #[arg(long)]
        theta: Option<f64>,
        /// Keep only rows with this replica index.
        #[arg(long, value_parser = parse_replica)]
        n: Option<Replica>,
        /// Keep only passive-protocol rows.
        #[arg(long)]
        passive: bool,
        /// Collapse-transformed CSV, default <in>.collapse.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export plot tables from a JSON-lines record file.
    Export {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: ExportKind,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        bootstrap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn print_json<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).unwrap_or_default());
}

fn init_pool(workers: usize) -> Result<usize> {
    let n = effective_workers(workers)?;
    // The global pool may already exist; ignore that case.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(n)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Lattice { d, dump } => {
            let lat = build_planar_code(d).map_err(|e| CliError::config("d", e.to_string()))?;
            if dump {
                print!("{}", lat.dump());
            } else {
                println!(
                    "d = {} qubits = {} spins = {} slice_width = {} layers = {}",
                    lat.d,
                    lat.n_qubits(),
                    lat.n_spins(),
                    lat.slice_width,
                    lat.contraction_rows.len()
                );
            }
        }
        Command::Oracle { d, t, theta, phi, n, out } => {
            let params = checked(ProtocolParams {
                phi_over_pi: phi,
                ..ProtocolParams::new(t, theta, d, n)
            })?;
            let state = prepare_logical_bell(d).map_err(|e| CliError::config("d", e.to_string()))?;
            let outcomes = enumerate_outcomes(&state, params.t(), params.theta(), params.phi())?;
            let ic = coherent_info_exact(&outcomes, n);
            #[derive(Serialize)]
            struct Summary {
                d: usize,
                t_over_pi: f64,
                theta_over_pi: f64,
                phi_over_pi: f64,
                n_replica: Replica,
                coherent_info: f64,
                coherent_info_bits: f64,
                von_neumann_all_plus: f64,
                n_outcomes: usize,
            }
            print_json(&Summary {
                d,
                t_over_pi: t,
                theta_over_pi: theta,
                phi_over_pi: phi,
                n_replica: n,
                coherent_info: ic,
                coherent_info_bits: ic / std::f64::consts::LN_2,
                von_neumann_all_plus: postselected_von_neumann(&outcomes),
                n_outcomes: outcomes.len(),
            });
            if let Some(path) = out {
                #[derive(Serialize)]
                struct Row<'a> {
                    values: &'a [i8],
                    prob: f64,
                    kappa: [f64; 3],
                    entropy: f64,
                }
                let _ = std::fs::remove_file(&path);
                let mut w = RecordWriter::append(&path)?;
                for o in &outcomes {
                    w.write(&Row {
                        values: &o.values,
                        prob: o.prob,
                        kappa: o.kappa(),
                        entropy: o.von_neumann(),
                    })?;
                }
            }
        }
        Command::Sample {
            point,
            n_samples,
            seed,
            out,
            passive,
            mps,
            workers,
        } => {
            let workers = effective_workers(workers)?;
            let protocol = if passive { Protocol::Passive } else { Protocol::Active };
            let backend = if mps { BackendChoice::Mps } else { BackendChoice::Auto };
            let sp = build_point(point.params(Replica::One, seed)?, protocol, 0, 0, backend)?;
            let tasks: Vec<Task> = (0..n_samples)
                .map(|sample| Task {
                    point: 0,
                    seed_path: SeedPath {
                        seed: task_seed(seed, point.d, 0, 0, sample),
                        sample,
                    },
                })
                .collect();
            let failures = out.with_extension("failures.jsonl");
            let failed = execute(std::slice::from_ref(&sp), &tasks, workers, &out, &failures)?;
            let records = read_records(&out)?;
            for row in aggregate(&records)? {
                print_json(&row);
            }
            if failed > 0 {
                return Err(CliError::TasksFailed {
                    failed,
                    total: tasks.len(),
                    log: failures,
                });
            }
        }
        Command::Sweep { config, resume, workers } => {
            let cfg = if config.extension().is_some_and(|e| e == "json") {
                RunManifest::load(&config)?.config
            } else {
                SweepConfig::load(&config)?
            };
            let m = run_sweep(&cfg, SweepOptions { resume, workers })?;
            println!(
                "tasks = {} resumed = {} failed = {} workers = {}\naggregate = {} sha256 = {}",
                m.n_tasks,
                m.n_resumed,
                m.n_failed,
                m.workers,
                m.outputs.aggregate.display(),
                m.aggregate_sha256
            );
        }
        Command::Renyi2 { point, profile_rows } => {
            let params = point.params(Replica::Two, 0)?;
            let lat = build_planar_code(point.d)?;
            let r = renyi2_from_replica(&lat, &params)?;
            #[derive(Serialize)]
            struct Out {
                d: usize,
                t_over_pi: f64,
                theta_over_pi: f64,
                kappa_sq: f64,
                coherent_info_2: f64,
                chi_used: usize,
                discarded_weight: f64,
                #[serde(skip_serializing_if = "Option::is_none")]
                profile: Option<Profile>,
            }
            #[derive(Serialize)]
            struct Profile {
                rows: usize,
                cuts: Vec<(usize, f64)>,
                drift: f64,
                converged: bool,
                central_charge: f64,
                fit_residual: f64,
            }
            let profile = match profile_rows {
                Some(rows) => {
                    let trunc = Truncation::new(params.chi_max, params.svd_cutoff);
                    let p = steady_state_profile(point.d, rows, &params.couplings()?, Replica::Two, &trunc).map_err(|e| match e {
                        TelecodeError::InvalidDistance(_) => CliError::config("profile_rows", "needs at least 2 rows"),
                        e => e.into(),
                    })?;
                    let cc = central_charge(&p.profile, point.d)?;
                    Some(Profile {
                        rows,
                        drift: p.drift,
                        converged: p.converged,
                        central_charge: cc.c,
                        fit_residual: cc.residual,
                        cuts: p.profile,
                    })
                }
                None => None,
            };
            print_json(&Out {
                d: point.d,
                t_over_pi: point.t,
                theta_over_pi: point.theta,
                kappa_sq: r.kappa_sq,
                coherent_info_2: r.ic2,
                chi_used: r.chi_used,
                discarded_weight: r.discarded_weight,
                profile,
            });
        }
        Command::Decode { point, n_samples, seed } => {
            init_pool(1)?;
            let sp = build_point(point.params(Replica::One, seed)?, Protocol::Active, 0, 0, BackendChoice::Auto)?;
            use rayon::prelude::*;
            let records = (0..n_samples)
                .into_par_iter()
                .map(|sample| {
                    let path = SeedPath {
                        seed: task_seed(seed, point.d, 0, 0, sample),
                        sample,
                    };
                    sp.evaluator.sample(path)
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let decodes: Vec<_> = records.iter().map(|r| decode_from_kappa(r.kappa_x, r.kappa_z)).collect();
            let n = decodes.len().max(1) as f64;
            #[derive(Serialize)]
            struct Out {
                d: usize,
                t_over_pi: f64,
                theta_over_pi: f64,
                n_samples: usize,
                mean_fidelity: f64,
                flip_fraction: f64,
                logical_collapse: usize,
                coherent_info: f64,
                coherent_info_se: f64,
            }
            let ic = coherent_info_born(&records)?;
            print_json(&Out {
                d: point.d,
                t_over_pi: point.t,
                theta_over_pi: point.theta,
                n_samples: decodes.len(),
                mean_fidelity: decodes.iter().map(|d| d.fidelity).sum::<f64>() / n,
                flip_fraction: decodes.iter().filter(|d| d.correction == LogicalCorrection::FlipX).count() as f64 / n,
                logical_collapse: decodes.iter().filter(|d| d.status == DecodeStatus::LogicalCollapse).count(),
                coherent_info: ic.mean,
                coherent_info_se: ic.se,
            });
        }
        Command::Collapse {
            input,
            tc0,
            nu0,
            bootstrap,
            seed,
            theta,
            n,
            passive,
            out,
        } => {
            init_pool(1)?;
            let protocol = passive.then_some(Protocol::Passive);
            let ds = read_scaling_dataset(&input, theta, n, protocol)?;
            ds.validate().map_err(|e| CliError::config(input.display().to_string(), e.to_string()))?;
            let res = collapse_parallel(
                &ds,
                tc0,
                nu0,
                &CollapseOptions {
                    bootstrap,
                    seed,
                    ..Default::default()
                },
            )?;
            print_json(&res);
            let path = out.unwrap_or_else(|| default_collapse_path(&input));
            write_collapsed(&path, &ds, res.fit.t_c, res.fit.nu)?;
            eprintln!("collapsed points written to {}", path.display());
        }
        Command::Export {
            input,
            kind,
            out,
            bootstrap,
            seed,
        } => {
            init_pool(1)?;
            let records = read_records(&input)?;
            let files = export_plotdata(
                &records,
                kind,
                &out,
                &CollapseOptions {
                    bootstrap,
                    seed,
                    ..Default::default()
                },
            )?;
            for f in files {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}

fn default_collapse_path(input: &Path) -> PathBuf {
    input.with_extension("collapse.csv")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
