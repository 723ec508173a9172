#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::path::Path;
use std::process::{Command, Output};

fn pdwg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdwg")).args(args).env_remove("PDWG_THREADS").output().unwrap()
}

fn csv_rows(dir: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(dir.join("convergence.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn example_one_rates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = pdwg(&["--example", "1", "--k", "1", "--levels", "5", "--tau", "1", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(dir.path());
    assert_eq!(rows.len(), 5);
    let rate: f64 = rows[4][9].parse().unwrap();
    assert!((0.85..=1.25).contains(&rate), "{rate}");
    assert!(String::from_utf8_lossy(&o.stdout).contains("|u-uh|_0"));
}

#[test]
fn curved_examples_need_a_mesh() {
    let o = pdwg(&["--example", "2", "--k", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("curved-interface meshes must be imported"));

    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("disc.mesh");
    support::disc_mesh(8).export(&mesh).unwrap();
    let o = pdwg(&["--example", "2", "--k", "1", "--mesh", mesh.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_rows(dir.path()).len(), 1);
}

#[test]
fn rough_example_exports_fields_without_error_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = pdwg(&["--example", "6", "--k", "1", "--levels", "3", "--out", out, "--export", "vtk", "--export", "csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let vtk = std::fs::read_to_string(dir.path().join("solution.vtk")).unwrap();
    assert!(vtk.contains("SCALARS u_h double 1"));
    let samples = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert_eq!(samples.lines().count(), 101 * 101 + 1);
    for row in csv_rows(dir.path()) {
        assert!(row[8].is_empty() && row[9].is_empty());
        assert!(!row[2].is_empty());
    }
}

#[test]
fn json_mirrors_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = pdwg(&["--example", "1", "--k", "2", "--levels", "2", "--out", out, "--export", "json"]);
    assert!(o.status.success());
    let json = std::fs::read_to_string(dir.path().join("convergence.json")).unwrap();
    let rows = csv_rows(dir.path());
    let first = &rows[1];
    assert!(json.contains(&format!("\"rate_u\": {}", first[9])), "{json}");
}

#[test]
fn identical_runs_give_identical_csv() {
    let run = |threads: Option<&str>| {
        let dir = tempfile::tempdir().unwrap();
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_pdwg"));
        cmd.args(["--example", "7", "--k", "2", "--levels", "2", "--out", dir.path().to_str().unwrap()]);
        match threads {
            Some(t) => cmd.env("PDWG_THREADS", t),
            None => cmd.env_remove("PDWG_THREADS"),
        };
        assert!(cmd.output().unwrap().status.success());
        std::fs::read(dir.path().join("convergence.csv")).unwrap()
    };
    let a = run(None);
    assert_eq!(a, run(None));
    assert_eq!(a, run(Some("3")));
}

#[test]
fn user_problem_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.toml");
    std::fs::write(
        &cfg,
        "name = \"affine\"\n[mesh]\nn = 4\nsquare = [0.25, 0.75, 0.25, 0.75]\n\
         [[subdomain]]\nid = 1\na = \"2\"\nexact = \"x + y\"\n\
         [[subdomain]]\nid = 2\na = \"1\"\nc = \"1\"\nexact = \"1 - x\"\n",
    )
    .unwrap();
    let o = pdwg(&["--problem", cfg.to_str().unwrap(), "--k", "2", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let err: f64 = csv_rows(dir.path())[0][8].parse().unwrap();
    assert!(err < 1e-9, "{err}");

    std::fs::write(&cfg, "[mesh]\nn = 4\n[[subdomain]]\nid = 1\na = \"1 +\"\nf = \"0\"\n").unwrap();
    let o = pdwg(&["--problem", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["--k", "1"],
        vec!["--example", "9"],
        vec!["--example", "1", "--k", "0"],
        vec!["--example", "1", "--export", "vtk"],
        vec!["--example", "1", "--problem", "x.toml"],
        vec!["--example", "1", "--bogus"],
    ] {
        assert_eq!(pdwg(&args).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(pdwg(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_with_one() {
    assert_eq!(pdwg(&["--example", "1", "--quadrature-degree", "99"]).status.code(), Some(1));
    assert_eq!(pdwg(&["--example", "1", "--mesh", "/nonexistent.mesh"]).status.code(), Some(1));
    assert_eq!(pdwg(&["--example", "1", "--tau", "0"]).status.code(), Some(1));
}
