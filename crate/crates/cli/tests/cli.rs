use std::path::Path;
use std::process::{Command, Output};

use colsem::perf::parse_table_csv;
use colsem::storage::Snapshot;

fn colsem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_colsem")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("bubble.toml");
    std::fs::write(&path, format!("nx = 2\nny = 2\nnz = 3\norder = 2\n{extra}")).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn no_arguments_prints_usage() {
    let o = colsem(&[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&colsem(&["mesh", "--bogus"])), 2);
    assert_eq!(code(&colsem(&["frobnicate"])), 2);
    assert_eq!(code(&colsem(&["mesh", "--nx", "3"])), 2);
    assert_eq!(code(&colsem(&["perfmodel", "--preset", "table9"])), 2);
    assert_eq!(code(&colsem(&["run", "--config", "/nonexistent/x.toml"])), 2);
    assert_eq!(code(&colsem(&["--help"])), 0);
}

#[test]
fn mesh_partition_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = colsem(&["mesh", "--nx", "4", "--ny", "4", "--layers", "3", "--parts", "4", "--out", out]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("elements        48"));
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| l.split_whitespace().count() == 4 && l.trim_start().starts_with(|c: char| c.is_ascii_digit()))
        .collect();
    assert_eq!(rows.len(), 4);
    for r in rows {
        assert_eq!(r.split_whitespace().nth(2), Some("12"));
    }
    let csv = std::fs::read_to_string(dir.path().join("partitions.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn perfmodel_preset_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = colsem(&["perfmodel", "--preset", "table1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    for want in ["1.08", "0.93", "0.86", "97.94", "113.18", "163.45", "14.99"] {
        assert!(text.contains(want), "missing {want}");
    }
    let csv = std::fs::read_to_string(dir.path().join("perf_table.csv")).unwrap();
    let cols = parse_table_csv(&csv).unwrap();
    assert_eq!(cols.len(), 3);
    assert_eq!(cols[0].read_gb, 2129.42);
}

#[test]
fn perfmodel_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.toml");
    std::fs::write(&path, "order = 4\nex = 32\ney = 32\nez = 20\nmachine_nodes = 1\nsteps = 10\nscheme = \"dg\"\n").unwrap();
    let o = colsem(&[
        "perfmodel",
        "--config",
        path.to_str().unwrap(),
        "--bandwidth",
        "1e11",
        "--penalty",
        "off",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("raw analytic counts"));
    let raw = parse_table_csv(&std::fs::read_to_string(dir.path().join("perf_table_raw.csv")).unwrap()).unwrap();
    assert_eq!(raw.len(), 1);
    assert_eq!(raw[0].label, "DG");
    std::fs::write(&path, "order = 4\nbandwith = 3\n").unwrap();
    assert_eq!(code(&colsem(&["perfmodel", "--config", path.to_str().unwrap()])), 2);
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "steps = 2\nsnapshot_every = 1\n");
    let out = dir.path().join("out");
    let o = colsem(&["run", "--config", &cfg, "--parts", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let diag = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 4);
    let snap = Snapshot::read_from(std::fs::File::open(out.join("final.bin")).unwrap()).unwrap();
    assert_eq!(snap.step, 2);
    assert!(out.join("snapshot_000001.bin").exists());
    let nodes = std::fs::read_to_string(out.join("final_nodes.csv")).unwrap();
    assert_eq!(nodes.lines().next(), Some("x,y,z,theta_prime"));
    assert_eq!(nodes.lines().count() as u64, snap.n_nodes + 1);
}

#[test]
fn diverged_run_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "courant_h = 40\ncourant_v = 40\ntheta_c = 20\nsteps = 50\n");
    let out = dir.path().join("out");
    let o = colsem(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).contains("DIVERGED"));
    assert!(out.join("diagnostics.csv").exists());
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "stpes = 2\n");
    assert_eq!(code(&colsem(&["run", "--config", &cfg])), 2);
    let cfg = small_config(dir.path(), "center_z = 990\n");
    assert_eq!(code(&colsem(&["run", "--config", &cfg])), 2);
}

#[test]
fn scale_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let o = colsem(&["scale", "--config", &cfg, "--threads", "1,2", "--steps", "2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("scaling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("1,"));
}

#[test]
fn sweep_order_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = colsem(&["sweep-order", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 7);
    assert_eq!(code(&colsem(&["sweep-order", "--min-order", "0"])), 2);
    assert_eq!(code(&colsem(&["sweep-order", "--min-order", "5", "--max-order", "3"])), 2);
}
