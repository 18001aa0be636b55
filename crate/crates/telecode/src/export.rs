//! Plot-data export and threshold tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use telecode_core::estimators::{aggregate, AggregateRow, Protocol, SampleRecord};
use telecode_core::scaling::{bootstrap_refit, collapsed_points, find_crossing, fit_collapse, summarize_bootstrap, Collapse, CollapseOptions, ScalingDataset};
use telecode_core::Replica;

use crate::error::{CliError, Result};
use crate::records::{protocol_name, write_aggregate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportKind {
    Curves,
    Collapse,
    PhaseDiagram,
}

/// [`telecode_core::scaling::collapse`] with the bootstrap refits spread over
/// the rayon pool; results do not depend on the number of threads.
pub fn collapse_parallel(ds: &ScalingDataset, t_c0: f64, nu0: f64, opts: &CollapseOptions) -> Result<Collapse> {
    let fit = fit_collapse(ds, t_c0, nu0, opts.max_iter)?;
    let draws: Vec<_> = (0..opts.bootstrap).into_par_iter().map(|b| bootstrap_refit(ds, &fit, opts, b)).collect();
    Ok(summarize_bootstrap(fit, &draws))
}

/// Rows grouped by `(protocol, n, θ)`.
pub fn groups(rows: &[AggregateRow]) -> Vec<ScalingDataset> {
    let mut map: BTreeMap<(Protocol, u8, u64), Vec<AggregateRow>> = BTreeMap::new();
    for r in rows {
        let rank = match r.n_replica {
            Replica::One => 1,
            Replica::Two => 2,
            Replica::Infinite => u8::MAX,
        };
        map.entry((r.protocol, rank, r.theta_over_pi.to_bits())).or_default().push(r.clone());
    }
    map.values().filter_map(|g| ScalingDataset::from_rows(g, "coherent_information").ok()).collect()
}

/// Threshold estimate of one curve family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub theta_over_pi: f64,
    pub n_replica: Replica,
    pub protocol: Protocol,
    pub t_c: Option<f64>,
    pub t_c_err: Option<f64>,
    pub nu: Option<f64>,
    pub nu_err: Option<f64>,
    /// `collapse`, `crossing` or `none`.
    pub method: String,
    pub converged: bool,
}

fn mid_t(ds: &ScalingDataset) -> f64 {
    let mut ts: Vec<f64> = ds.points.iter().map(|p| p.t_over_pi).collect();
    ts.sort_by(f64::total_cmp);
    ts[ts.len() / 2]
}

/// Collapse for sampled curves with valid errors, extrapolated crossing
/// otherwise. The crossing error is the spread of the pairwise
/// crossings around the extrapolation.
pub fn estimate_threshold(ds: &ScalingDataset, opts: &CollapseOptions, nu0: f64) -> Threshold {
    let crossing = find_crossing(ds).ok();
    let mut th = Threshold {
        theta_over_pi: ds.theta_over_pi.unwrap_or(f64::NAN),
        n_replica: ds.n_replica.unwrap_or(Replica::One),
        protocol: ds.protocol.unwrap_or_default(),
        t_c: None,
        t_c_err: None,
        nu: None,
        nu_err: None,
        method: "none".into(),
        converged: false,
    };
    let sampled = ds.n_replica.is_none_or(|n| n == Replica::One);
    if sampled && ds.validate().is_ok() {
        let tc0 = crossing.as_ref().and_then(|c| c.t_cross).filter(|t| t.is_finite()).unwrap_or_else(|| mid_t(ds));
        if let Ok(c) = collapse_parallel(ds, tc0, nu0, opts) {
            th.t_c = Some(c.fit.t_c);
            th.t_c_err = Some(c.t_c_err);
            th.nu = Some(c.fit.nu);
            th.nu_err = Some(c.nu_err);
            th.method = "collapse".into();
            th.converged = c.converged();
            return th;
        }
    }
    if let Some(c) = crossing.filter(|c| c.found()) {
        let t = c.t_cross.unwrap_or(f64::NAN);
        let spread = c
            .pairs
            .iter()
            .filter_map(|p| p.t_cross)
            .map(|x| (x - t).abs())
            .fold(0.0, f64::max);
        th.t_c = Some(t);
        th.t_c_err = Some(spread);
        th.method = "crossing".into();
        th.converged = true;
    }
    th
}

#[derive(Serialize)]
struct CollapseRow {
    d: usize,
    t_over_pi: f64,
    x: f64,
    mean: f64,
    se: f64,
}

#[derive(Serialize)]
struct PhaseRow<'a> {
    theta_over_pi: f64,
    n_replica: String,
    protocol: &'a str,
    t_c: Option<f64>,
    t_c_err: Option<f64>,
    nu: Option<f64>,
    nu_err: Option<f64>,
    method: &'a str,
    converged: bool,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let err = |e: csv::Error| CliError::Parse {
        path: path.to_owned(),
        line: 0,
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Write a collapse-transformed table `d, t_over_pi, x, mean, se`.
pub fn write_collapsed(path: &Path, ds: &ScalingDataset, t_c: f64, nu: f64) -> Result<()> {
    let rows = ds.points.iter().zip(collapsed_points(ds, t_c, nu)).map(|(p, c)| CollapseRow {
        d: p.d,
        t_over_pi: p.t_over_pi,
        x: c.1,
        mean: p.mean,
        se: p.se,
    });
    write_csv(path, rows)
}

fn group_stem(ds: &ScalingDataset) -> String {
    format!(
        "{}_n{}_theta{}",
        protocol_name(ds.protocol.unwrap_or_default()),
        ds.n_replica.unwrap_or(Replica::One),
        ds.theta_over_pi.unwrap_or(0.0)
    )
}

/// Write the plot tables of `kind` into `dir` and return their paths.
///
/// `curves.csv` repeats the aggregate schema; `collapse_<group>.csv` holds
/// `d, t_over_pi, x, mean, se` for every family that collapses, with the fit
/// in `collapse_summary.csv`; `phase_diagram.csv` holds
/// `theta_over_pi, n_replica, protocol, t_c, t_c_err, nu, nu_err, method,
/// converged`.
pub fn export_plotdata(records: &[SampleRecord], kind: ExportKind, dir: &Path, opts: &CollapseOptions) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(CliError::config("records", "no records to export"));
    }
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let rows = aggregate(records)?;
    match kind {
        ExportKind::Curves => {
            let path = dir.join("curves.csv");
            write_aggregate(&path, &rows)?;
            Ok(vec![path])
        }
        ExportKind::Collapse => {
            let mut out = Vec::new();
            let mut summary = Vec::new();
            for ds in groups(&rows) {
                let th = estimate_threshold(&ds, opts, 1.5);
                if th.method != "collapse" {
                    continue;
                }
                let (Some(t_c), Some(nu)) = (th.t_c, th.nu) else {
                    continue;
                };
                let path = dir.join(format!("collapse_{}.csv", group_stem(&ds)));
                write_collapsed(&path, &ds, t_c, nu)?;
                out.push(path);
                summary.push(th);
            }
            let path = dir.join("collapse_summary.csv");
            write_csv(&path, summary.iter().map(phase_row))?;
            out.push(path);
            Ok(out)
        }
        ExportKind::PhaseDiagram => {
            let table: Vec<Threshold> = groups(&rows).iter().map(|ds| estimate_threshold(ds, opts, 1.5)).collect();
            let path = dir.join("phase_diagram.csv");
            write_csv(&path, table.iter().map(phase_row))?;
            Ok(vec![path])
        }
    }
}

fn phase_row(t: &Threshold) -> PhaseRow<'_> {
    PhaseRow {
        theta_over_pi: t.theta_over_pi,
        n_replica: t.n_replica.to_string(),
        protocol: protocol_name(t.protocol),
        t_c: t.t_c,
        t_c_err: t.t_c_err,
        nu: t.nu,
        nu_err: t.nu_err,
        method: &t.method,
        converged: t.converged,
    }
}
