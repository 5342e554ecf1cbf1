use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const DGP: &str = "n = 80\np = 6\nvar_design = \"banded\"\ninnovation = \"t2.1\"\nfactors = \"var1\"\nr = 1\nsigma_eps = \"identity\"\n";

fn tfavar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfavar")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = tfavar(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn setup() -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let dgp = dir.path().join("dgp.toml");
    fs::write(&dgp, DGP).unwrap();
    (dir, dgp)
}

#[test]
fn simulate_twice_is_byte_identical() {
    let (dir, dgp) = setup();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&["simulate", "--dgp", s(&dgp), "--reps", "5", "--seed", "7", "--out", s(out)]);
    }
    for rep in 0..5 {
        for f in ["x.csv", "a.csv", "chi.csv", "xi.csv", "loadings.csv", "factors.csv"] {
            let rel = format!("rep_{rep:03}/{f}");
            assert_eq!(fs::read(a.join(&rel)).unwrap(), fs::read(b.join(&rel)).unwrap(), "{rel}");
        }
    }
    assert_eq!(fs::read(a.join("seeds.csv")).unwrap(), fs::read(b.join("seeds.csv")).unwrap());
    assert_ne!(fs::read(a.join("rep_000/x.csv")).unwrap(), fs::read(a.join("rep_001/x.csv")).unwrap());
}

#[test]
fn estimate_artifact_layout() {
    let (dir, dgp) = setup();
    let sim = dir.path().join("sim");
    ok(&["simulate", "--dgp", s(&dgp), "--out", s(&sim)]);
    let est = dir.path().join("est");
    let x = sim.join("rep_000/x.csv");
    let stdout = ok(&["estimate", "--input", s(&x), "--r", "3", "--d", "1", "--tau-cv", "--out", s(&est)]);
    assert!(stdout.contains("lambda"));
    for f in ["loadings.csv", "factors.csv", "A_1.csv", "summary.txt", "sparsity.csv", "tau_cv.csv", "lambda_cv.csv", "manifest.toml", "config.toml"] {
        assert!(est.join(f).is_file(), "{f} missing");
    }
    let loadings = fs::read_to_string(est.join("loadings.csv")).unwrap();
    assert!(loadings.starts_with("F1,F2,F3\n"));
    assert_eq!(loadings.lines().count(), 7);

    let manifest: toml::Table = toml::from_str(&fs::read_to_string(est.join("manifest.toml")).unwrap()).unwrap();
    assert_eq!(manifest["command"].as_str(), Some("estimate"));
    assert!(manifest["threads"].as_integer().unwrap() >= 1);
    let listed: Vec<&str> = manifest["file"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap()).collect();
    assert!(listed.contains(&"A_1.csv") && listed.contains(&"config.toml"));

    // The snapshot alone reproduces the run.
    let again = dir.path().join("again");
    ok(&["estimate", "--config", s(&est.join("config.toml")), "--out", s(&again)]);
    for f in ["A_1.csv", "loadings.csv", "tau_cv.csv", "lambda_cv.csv"] {
        assert_eq!(fs::read(est.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn evaluate_prints_table_row() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    fs::write(&a, "replication,max,l2_col_max\n0,1.0,2.0\n1,2.0,2.0\n").unwrap();
    fs::write(&b, "replication,max,l2_col_max\n0,2.0,1.0\n1,4.0,1.0\n").unwrap();
    let line = ok(&["evaluate", "--metric", "rme", "--norm", "max", "--a", s(&a), "--b", s(&b), "--label", "V1 t2.1 (100,50)"]);
    assert_eq!(line.trim_end(), format!("{:<24} {:<12} {:>7.3}  (n=2)", "V1 t2.1 (100,50)", "max", 0.5));
    let line = ok(&["evaluate", "--metric", "rme", "--norm", "l2_col_max", "--a", s(&a), "--b", s(&b)]);
    assert!(line.contains(" 2.000"));
}

#[test]
fn failures_print_one_parsable_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = tfavar(&["estimate", "--input", s(&dir.path().join("missing.csv")), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error: category=io stage=- message="));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "a,b\n1,2\n3,oops\n").unwrap();
    let out = tfavar(&["estimate", "--input", s(&bad), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8(out.stderr).unwrap().contains("category=input"));

    let flat = dir.path().join("flat.csv");
    fs::write(&flat, "a,b\n1,2\n1,3\n1,2\n1,5\n1,2\n1,2\n").unwrap();
    let out = tfavar(&["estimate", "--input", s(&flat), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8(out.stderr).unwrap().contains("category=data stage=scales"));

    let out = tfavar(&["estimate", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_resumes_to_same_result() {
    let (dir, dgp) = setup();
    let common = ["--seed", "3", "--n-lambda", "8", "--folds", "3"];
    let fresh = dir.path().join("fresh");
    let mut args = vec!["experiment", "--dgp", s(&dgp), "--reps", "6", "--out", s(&fresh)];
    args.extend(common);
    ok(&args);

    let resumed = dir.path().join("resumed");
    let mut first = vec!["experiment", "--dgp", s(&dgp), "--reps", "2", "--out", s(&resumed)];
    first.extend(common);
    ok(&first);
    let mut second = vec!["experiment", "--dgp", s(&dgp), "--reps", "6", "--out", s(&resumed)];
    second.extend(common);
    let out = tfavar(&second);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("resuming: 2"));
    for f in ["replications.csv", "rme.csv", "errors_trunc.csv", "errors_plain.csv", "summary.txt"] {
        assert_eq!(fs::read(fresh.join(f)).unwrap(), fs::read(resumed.join(f)).unwrap(), "{f}");
    }

    // A different experiment may not reuse the directory.
    let mut clash = vec!["experiment", "--dgp", s(&dgp), "--reps", "6", "--seed", "4", "--out", s(&resumed)];
    clash.extend(["--n-lambda", "8", "--folds", "3"]);
    assert_eq!(tfavar(&clash).status.code(), Some(2));
}

#[test]
fn forecast_and_fluctuation_outputs() {
    let (dir, dgp) = setup();
    let sim = dir.path().join("sim");
    ok(&["simulate", "--dgp", s(&dgp), "--out", s(&sim)]);
    let fc = dir.path().join("fc");
    let x = sim.join("rep_000/x.csv");
    ok(&["forecast", "--input", s(&x), "--window", "50", "--order", "1", "--factors", "1", "--baseline", "--fixed-tau", "--n-lambda", "8", "--folds", "3", "--out", s(&fc)]);
    let fe = fs::read_to_string(fc.join("fe.csv")).unwrap();
    assert!(fe.starts_with("origin,target,V1,"));
    assert_eq!(fe.lines().count(), 1 + 30);
    let params = fs::read_to_string(fc.join("params.csv")).unwrap();
    let taus: std::collections::BTreeSet<&str> = params.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(taus.len(), 1, "--fixed-tau reuses one level");

    let fl = dir.path().join("fl");
    let stdout = ok(&["evaluate", "--metric", "fluctuation", "--mu", "0.3", "--plot", "--a", s(&fc.join("fe.csv")), "--b", s(&fc.join("fe_baseline.csv")), "--out", s(&fl)]);
    assert!(stdout.contains("variable(s) reject"));
    let paths = fs::read_to_string(fl.join("fluctuation_paths.csv")).unwrap();
    // L = 30, m = 9: 22 windows.
    assert_eq!(paths.lines().count(), 1 + 22);
    assert!(fl.join("plots/V1.svg").is_file());
}
