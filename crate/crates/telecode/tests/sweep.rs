use std::io::Write;
use std::path::Path;

use telecode::config::SweepConfig;
use telecode::export::{export_plotdata, groups, ExportKind};
use telecode::records::{read_aggregate, read_records, read_scaling_dataset, task_key_of};
use telecode::{run_sweep, SweepOptions};
use telecode_core::estimators::{aggregate, SampleRecord};
use telecode_core::oracle::{coherent_info_exact, enumerate_outcomes, prepare_logical_bell};
use telecode_core::scaling::CollapseOptions;
use telecode_core::Replica;

fn cfg(dir: &Path, body: &str) -> SweepConfig {
    let text = format!("{body}\n[output]\ndir = \"{}\"\n", dir.display());
    SweepConfig::from_toml(&text).unwrap()
}

const MIXED: &str = r#"
t_over_pi = [0.1, 0.16, 0.22]
theta_over_pi = [0.0, 0.125]
d = [3, 4]
n_replica = [1, 2, "inf"]
samples = 12
chi_max = 64
svd_cutoff = 1e-10
seed = 2024
"#;

fn normalized(records: &[SampleRecord]) -> Vec<(String, SampleRecord)> {
    let mut v: Vec<_> = records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.wall_time = 0.0;
            (task_key_of(&r), r)
        })
        .collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v
}

#[test]
fn aggregate_is_identical_across_worker_counts() {
    let base = tempfile::tempdir().unwrap();
    let mut hashes = Vec::new();
    let mut sets = Vec::new();
    for workers in [1, 4, 8] {
        let c = cfg(&base.path().join(format!("w{workers}")), MIXED);
        let m = run_sweep(&c, SweepOptions { resume: false, workers: Some(workers) }).unwrap();
        assert_eq!(m.workers, workers);
        assert_eq!(m.n_failed, 0);
        hashes.push(m.aggregate_sha256.clone());
        sets.push(normalized(&read_records(&m.outputs.records).unwrap()));
    }
    assert!(hashes.windows(2).all(|w| w[0] == w[1]), "{hashes:?}");
    assert!(sets.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(sets[0].len(), 2 * 2 * 3 * 12 + 2 * 2 * 2 * 3);
}

#[test]
fn resume_after_interruption_restores_the_record_set() {
    let base = tempfile::tempdir().unwrap();
    let full = run_sweep(&cfg(&base.path().join("full"), MIXED), SweepOptions::default()).unwrap();
    let expected = normalized(&read_records(&full.outputs.records).unwrap());

    let c = cfg(&base.path().join("cut"), MIXED);
    let first = run_sweep(&c, SweepOptions::default()).unwrap();
    let text = std::fs::read_to_string(&first.outputs.records).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let keep = lines.len() / 3;
    let mut f = std::fs::File::create(&first.outputs.records).unwrap();
    for l in &lines[..keep] {
        writeln!(f, "{l}").unwrap();
    }
    write!(f, "{}", &lines[keep][..lines[keep].len() / 2]).unwrap();
    drop(f);

    let resumed = run_sweep(&c, SweepOptions { resume: true, workers: Some(3) }).unwrap();
    assert_eq!(resumed.n_resumed, keep);
    assert_eq!(normalized(&read_records(&resumed.outputs.records).unwrap()), expected);
    assert_eq!(resumed.aggregate_sha256, full.aggregate_sha256);
}

#[test]
fn oracle_scale_curves_are_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
        t_over_pi = { start = 0.0, stop = 0.25, points = 6 }
        theta_over_pi = [0.0]
        d = [2]
        n_replica = [1]
        samples = 4000
        chi_max = 16
        svd_cutoff = 1e-10
        seed = 5
    "#;
    let m = run_sweep(&cfg(dir.path(), body), SweepOptions::default()).unwrap();
    let files = export_plotdata(&read_records(&m.outputs.records).unwrap(), ExportKind::Curves, &dir.path().join("plots"), &CollapseOptions::default()).unwrap();
    let rows = read_aggregate(&files[0]).unwrap();
    assert_eq!(rows.len(), 6);
    let state = prepare_logical_bell(2).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].mean <= w[0].mean, "{} then {}", w[0].mean, w[1].mean);
    }
    for r in &rows {
        let exact = coherent_info_exact(&enumerate_outcomes(&state, r.t_over_pi * std::f64::consts::PI, 0.0, 0.0).unwrap(), Replica::One);
        assert!((r.mean - exact).abs() <= 4.0 * r.se + 1e-12, "t/pi {} mean {} exact {exact}", r.t_over_pi, r.mean);
    }
}

#[test]
fn collapse_export_round_trips_through_the_parser() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
        t_over_pi = { start = 0.1, stop = 0.2, points = 6 }
        theta_over_pi = [0.0]
        d = [3, 4, 5]
        n_replica = [1]
        samples = 150
        chi_max = 16
        svd_cutoff = 1e-10
        seed = 9
    "#;
    let m = run_sweep(&cfg(dir.path(), body), SweepOptions::default()).unwrap();
    let records = read_records(&m.outputs.records).unwrap();
    let opts = CollapseOptions { bootstrap: 10, seed: 1, ..Default::default() };
    let files = export_plotdata(&records, ExportKind::Collapse, &dir.path().join("plots"), &opts).unwrap();
    let table = files.iter().find(|f| f.file_name().unwrap().to_str().unwrap().starts_with("collapse_active")).unwrap();
    let parsed = read_scaling_dataset(table, None, None, None).unwrap();
    let original = &groups(&aggregate(&records).unwrap())[0];
    assert_eq!(parsed.points, original.points);
    parsed.validate().unwrap();

    let phase = export_plotdata(&records, ExportKind::PhaseDiagram, &dir.path().join("plots"), &opts).unwrap();
    let text = std::fs::read_to_string(&phase[0]).unwrap();
    assert!(text.starts_with("theta_over_pi,n_replica,protocol,t_c,t_c_err"));
}
