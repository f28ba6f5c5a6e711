use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bmfsim::io::parse_matrix;
use bmfsim::linalg::orthonormality_error;
use nalgebra::DMatrix;

fn bmfsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bmfsim")).args(args).current_dir(dir).output().expect("spawn bmfsim")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Rows of column-major draws back into `m × r` matrices.
fn draws(text: &str, m: usize, r: usize) -> Vec<DMatrix<f64>> {
    let table = parse_matrix(text, Path::new("stdout")).unwrap();
    assert_eq!(table.ncols(), m * r);
    table.row_iter().map(|row| DMatrix::from_iterator(m, r, row.iter().copied())).collect()
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = bmfsim(&["--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    for cmd in ["sample-mf", "sample-bmf", "bench-rejection", "eigenmodel-fit"] {
        assert!(stdout(&o).contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("c.csv"), "1,0\n0,1\n0,0\n").unwrap();
    let cases: &[&[&str]] = &[
        &["no-such-command"],
        &["sample-mf"],
        &["sample-mf", "--C", "c.csv", "--method", "metropolis"],
        &["sample-mf", "--C", "c.csv", "--thin", "0"],
        &["sample-bmf", "--n", "3"],
        &["sample-bmf", "--m", "2", "--R", "3"],
        &["sample-bmf", "--C", "c.csv", "--m", "4"],
        &["bench-rejection", "--cells", "10:2"],
        &["eigenmodel-fit", "--input", "c.csv", "--R", "1"],
    ];
    for args in cases {
        let o = bmfsim(args, p);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn runtime_errors_exit_one_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = bmfsim(&["sample-mf", "--C", "missing.csv"], p);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.csv"));

    fs::write(p.join("bad.csv"), "1,2\n3,oops\n").unwrap();
    let o = bmfsim(&["sample-mf", "--C", "bad.csv"], p);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    // square MF Gibbs is reducible
    fs::write(p.join("sq.csv"), "1,0\n0,1\n").unwrap();
    let o = bmfsim(&["sample-mf", "--C", "sq.csv", "--method", "gibbs"], p);
    assert_eq!(o.status.code(), Some(1));

    // cap reached
    fs::write(p.join("big.csv"), "200,0\n0,200\n0,0\n").unwrap();
    let o = bmfsim(&["sample-mf", "--C", "big.csv", "--n", "5", "--max-proposals", "1"], p);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sample_mf_writes_orthonormal_draws_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("c.csv"), "4,0\n0,2\n0,0\n1,1\n").unwrap();
    for method in ["rejection", "gibbs"] {
        let out = format!("{method}.csv");
        let o =
            bmfsim(&["sample-mf", "--C", "c.csv", "--n", "25", "--method", method, "--burn", "20", "--out", &out], p);
        assert!(o.status.success(), "{}", stderr(&o));
        let xs = draws(&fs::read_to_string(p.join(&out)).unwrap(), 4, 2);
        assert_eq!(xs.len(), 25);
        assert!(xs.iter().all(|x| orthonormality_error(x) < 1e-10));
        let man = manifest(&p.join(format!("{out}.manifest.json")));
        assert_eq!(man["command"], "sample-mf");
        assert_eq!(man["config"]["method"], method);
        assert_eq!(man["counters"]["draws"], 25.0);
        if method == "rejection" {
            assert!(man["counters"]["mean_rejections"].as_f64().unwrap() >= 0.0);
        }
    }
}

#[test]
fn stdout_output_writes_no_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("c.csv"), "1\n0\n0\n").unwrap();
    let o = bmfsim(&["sample-mf", "--C", "c.csv", "--n", "4"], p);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 4);
    let entries: Vec<_> = fs::read_dir(p).unwrap().collect();
    assert_eq!(entries.len(), 1);
}

#[test]
fn json_samples_have_layout() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = bmfsim(&["--format", "json", "sample-bmf", "--m", "5", "--R", "2", "--n", "3"], p);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["rows"], 5);
    assert_eq!(doc["cols"], 2);
    assert_eq!(doc["layout"], "column-major");
    assert_eq!(doc["samples"].as_array().unwrap().len(), 3);
}

#[test]
fn sample_bmf_routes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("a.csv"), "2,0,0\n0,0,0\n0,0,-2\n").unwrap();
    fs::write(p.join("b.csv"), "3,0,0\n0,1,0\n0,0,0\n").unwrap();
    let o = bmfsim(
        &["sample-bmf", "--A", "a.csv", "--B", "b.csv", "--n", "10", "--burn", "5", "--thin", "2", "--out", "sq.csv"],
        p,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let man = manifest(&p.join("sq.csv.manifest.json"));
    assert_eq!(man["config"]["m"], 3);
    assert_eq!(man["config"]["R"], 3);
    assert!(man["counters"]["pair_updates"].as_f64().unwrap() > 0.0);
    assert!(man["notes"][0].as_str().unwrap().contains("pair"));
    let xs = draws(&fs::read_to_string(p.join("sq.csv")).unwrap(), 3, 3);
    assert!(xs.iter().all(|x| orthonormality_error(x) < 1e-10));

    let o = bmfsim(&["sample-bmf", "--m", "4", "--R", "2", "--n", "5", "--out", "u.csv"], p);
    assert!(o.status.success());
    let man = manifest(&p.join("u.csv.manifest.json"));
    assert!(man["notes"][0].as_str().unwrap().contains("uniform"));

    // non-diagonal B is refused
    fs::write(p.join("bad_b.csv"), "1,1\n1,1\n").unwrap();
    let o = bmfsim(&["sample-bmf", "--m", "3", "--B", "bad_b.csv"], p);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_rejection_table() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = bmfsim(&["bench-rejection", "--n", "20", "--cells", "10:2:5,10:6:20", "--budget", "50"], p);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,R,d,n,mean_rejections,se,status");
    assert!(lines[1].starts_with("10,2,") && lines[1].ends_with(",ok"));
    assert!(lines[2].ends_with(",skipped"));
}

#[test]
fn bench_cell_does_not_depend_on_grid() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let alone = stdout(&bmfsim(&["bench-rejection", "--n", "30", "--cells", "20:4:10", "--seed", "5"], p));
    let mixed = stdout(&bmfsim(&["bench-rejection", "--n", "30", "--cells", "10:2:5,20:4:10", "--seed", "5"], p));
    assert_eq!(alone.lines().nth(1), mixed.lines().nth(2));
}

#[test]
fn eigenmodel_fit_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    // two blocks of five nodes, one pair unobserved
    let mut edges = String::from("# nodes 10\n");
    for i in 1..=10 {
        for j in (i + 1)..=10 {
            let same = (i <= 5) == (j <= 5);
            if (i, j) == (1, 2) {
                continue;
            }
            edges.push_str(&format!("{i} {j} {}\n", u8::from(same)));
        }
    }
    fs::write(p.join("net.txt"), edges).unwrap();
    let o = bmfsim(
        &[
            "eigenmodel-fit",
            "--input",
            "net.txt",
            "--unlisted",
            "missing",
            "--R",
            "2",
            "--n-iter",
            "120",
            "--burn-in",
            "20",
            "--thin",
            "5",
            "--out",
            "fit",
            "--seed",
            "11",
        ],
        p,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let fit = p.join("fit");
    for name in [
        "trace_chain0.csv",
        "trace_chain1.csv",
        "posterior_mean.csv",
        "link_probability.csv",
        "convergence.csv",
        "manifest.json",
    ] {
        assert!(fit.join(name).exists(), "{name}");
    }
    let trace = fs::read_to_string(fit.join("trace_chain0.csv")).unwrap();
    assert!(trace.starts_with("iteration,lambda_1,lambda_2,c\n"));
    assert_eq!(trace.lines().count(), 1 + 20);
    let link = parse_matrix(&fs::read_to_string(fit.join("link_probability.csv")).unwrap(), &fit).unwrap();
    assert_eq!(link.shape(), (10, 10));
    assert!(link.iter().all(|&v| (0.0..=1.0).contains(&v)));
    let man = manifest(&fit.join("manifest.json"));
    assert_eq!(man["counters"]["observed_pairs"], 44.0);
    assert_eq!(man["counters"]["constraint_violations"], 0.0);
    assert_eq!(man["config"]["chain_inits"], serde_json::json!(["spectral", "random"]));
}
