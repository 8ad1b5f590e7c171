use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gellmann")).args(args).current_dir(dir).output().expect("spawn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn dims_table_for_so5() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["dims", "--n", "5", "--max", "1"], tmp.path());
    assert!(o.status.success());
    let rows: Vec<(String, usize)> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f[0].to_string(), f[1].parse().unwrap())
        })
        .collect();
    let want = [("(0,0)", 1), ("(1/2,0)", 4), ("(1/2,1/2)", 5), ("(1,0)", 10), ("(1,1/2)", 16), ("(1,1)", 14)];
    assert_eq!(rows.len(), want.len());
    for (w, g) in want.iter().zip(&rows) {
        assert_eq!((w.0, w.1), (g.0.as_str(), g.1));
    }
}

#[test]
fn dims_for_so3_are_2j_plus_1() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["dims", "--n", "3", "--max", "3/2"], tmp.path());
    let dims: Vec<usize> = stdout(&o).lines().skip(1).map(|l| l.split('\t').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(dims, vec![1, 2, 3, 4]);
}

#[test]
fn verify_sl3_gen_passes_and_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--suite", "sl3-gen", "--cutoff", "6", "--out", "r.json"], tmp.path());
    assert!(o.status.success(), "{}", stdout(&o));
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(rep["suite"], "sl3-gen");
    assert_eq!(rep["pass"], true);
    assert_eq!(rep["params"].as_array().unwrap().len(), 5);
    let closure = rep["checks"].as_array().unwrap().iter().find(|c| c["name"] == "sl3 closure draw 0").unwrap();
    assert!(closure["value"].as_f64().unwrap() <= 1e-10);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("r.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["outputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn residual_above_tolerance_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--suite", "sl3-original", "--cutoff", "3", "--tol", "1e-40"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_and_budget_errors() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&["verify", "--suite", "nope"], tmp.path()).status.code(), Some(2));
    assert_eq!(run(&["dims", "--n", "7"], tmp.path()).status.code(), Some(2));
    let o = run(&["build", "--algebra", "sl3", "--cutoff", "6", "--state-budget", "10"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn build_sl3_writes_five_operators_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |out: &'static str| vec!["build", "--algebra", "sl3", "--cutoff", "3", "--params", "sigma=1.5,delta=-0.5", "--out", out];
    assert!(run(&args("a"), tmp.path()).status.success());
    assert!(run(&args("b"), tmp.path()).status.success());
    let mut ops: Vec<String> = fs::read_dir(tmp.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("T_"))
        .collect();
    ops.sort();
    assert_eq!(ops.len(), 5);
    for name in ops.iter().chain(["params.json".to_string()].iter()) {
        assert_eq!(fs::read(tmp.path().join("a").join(name)).unwrap(), fs::read(tmp.path().join("b").join(name)).unwrap(), "{name}");
    }
    let text = fs::read_to_string(tmp.path().join("a").join(&ops[0])).unwrap();
    let header: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(header["n"], 3);
    assert_eq!(header["nnz"].as_u64().unwrap() as usize, text.lines().count() - 1);
}

#[test]
fn verify_reports_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["x.json", "y.json"] {
        assert!(run(&["verify", "--suite", "contraction", "--seed", "3", "--out", out], tmp.path()).status.success());
    }
    let load = |p: &str| {
        let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join(p)).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timings");
        v
    };
    assert_eq!(load("x.json"), load("y.json"));
}

#[test]
fn cg_so5_table_reports_rho() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["cg", "--algebra", "so5", "--a", "1,1", "--b", "1,0", "--c", "1,0", "--out", "t.tsv"], tmp.path());
    assert!(o.status.success());
    let text = fs::read_to_string(tmp.path().join("t.tsv")).unwrap();
    let rho: usize = text.lines().next().unwrap().trim_start_matches("# rho=").parse().unwrap();
    assert!(rho >= 1);
    assert!(text.lines().filter(|l| !l.starts_with('#')).count() > 1);
}

#[test]
fn branch_lists_shear_content() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["branch", "--label", "1,1"], tmp.path());
    let mut labels: Vec<String> = stdout(&o).lines().skip(1).map(|l| l.split('\t').next().unwrap().to_string()).collect();
    labels.sort();
    assert_eq!(labels, vec!["(0,0)", "(1,1)", "(1/2,1/2)"]);
}

#[test]
fn config_file_defaults_and_flag_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), "seed = 7\ncutoff = \"4\"\n").unwrap();
    let o = run(&["--config", "c.toml", "verify", "--suite", "sl3-gen", "--seed", "9", "--out", "r.json"], tmp.path());
    assert!(o.status.success());
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(rep["seed"], 9);
    assert_eq!(rep["cutoff"], "4");
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("r.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["input_hashes"].as_array().unwrap().len(), 1);
    fs::write(tmp.path().join("bad.toml"), "colour = 1\n").unwrap();
    assert_eq!(run(&["--config", "bad.toml", "dims", "--n", "3"], tmp.path()).status.code(), Some(2));
}
