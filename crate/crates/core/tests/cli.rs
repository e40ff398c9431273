use std::path::Path;
use std::process::{Command, Output};

fn hglearn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hglearn")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Vec<u8> {
    let out = hglearn(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

/// generate, train, eval and analyze in a fresh directory; returns every
/// byte written to stdout and to files.
fn pipeline(dir: &Path) -> Vec<Vec<u8>> {
    let mut seen = vec![
        ok(dir, &["generate", "--reference", "--seed", "3", "-o", "train.tsv", "--csv", "counts.csv"]),
        ok(dir, &["generate", "--resample", "400", "--seed", "4", "-o", "test.tsv"]),
    ];
    for (learner, model) in [("perceptron", "p.model"), ("gla", "g.model"), ("maxent", "m.model"), ("cd", "c.model")] {
        seen.push(ok(dir, &["train", learner, "--train", "train.tsv", "-o", model, "--epochs", "3", "--seed", "9"]));
        seen.push(ok(
            dir,
            &["eval", "--model", model, "--test", "test.tsv", "--baselines", "--train", "train.tsv", "--distributions",
              "--samples", "100", "-o", "report.json", "--distributions-csv", "dist.csv"],
        ));
        seen.push(std::fs::read(dir.join("report.json")).unwrap());
        seen.push(std::fs::read(dir.join("dist.csv")).unwrap());
    }
    seen.push(ok(dir, &["analyze", "--model", "p.model", "--pattern", "t f t", "--scan"]));
    for f in ["train.tsv", "counts.csv", "test.tsv", "p.model", "g.model", "m.model", "c.model"] {
        seen.push(std::fs::read(dir.join(f)).unwrap());
    }
    seen
}

#[test]
fn pipeline_is_byte_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = pipeline(a.path());
    let second = pipeline(b.path());
    assert_eq!(first.len(), second.len());
    for (k, (x, y)) in first.iter().zip(&second).enumerate() {
        assert!(x == y, "artifact {k} differs");
    }
}

#[test]
fn analyze_reports_tableaux_for_fixed_weights() {
    let dir = tempfile::tempdir().unwrap();
    let weights = [5.96, 7.18, 5.68, 3.40, 6.99, 8.63, 11.26, 9.36, 15.60, 7.21, 8.36, 10.39];
    let names = ["S-L", "S-R", "V-L", "V-R", "O-L", "O-R", "T-L", "T-R", "C-L", "C-R", "F-L", "F-R"];
    let mut text = String::from("kind=HG\n");
    for (n, w) in names.iter().zip(weights) {
        text.push_str(&format!("weight {n} {w}\n"));
    }
    std::fs::write(dir.path().join("w.model"), text).unwrap();
    let out = ok(dir.path(), &["analyze", "--model", "w.model", "--pattern", "t,f,t", "--candidates", "SVO,SOV"]);
    let out = String::from_utf8(out).unwrap();
    assert!(out.contains("winner: SVO"), "{out}");
    assert!(out.contains("+4.20"), "{out}");
}

fn assert_one_line_failure(dir: &Path, args: &[&str]) {
    let out = hglearn(dir, args);
    assert!(!out.status.success(), "{args:?} should fail");
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{args:?}: {err:?}");
    assert!(err.starts_with("hglearn: "), "{err:?}");
}

#[test]
fn errors_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.tsv"), "t f t\tSVO\nx y z\tSVO\n").unwrap();
    std::fs::write(d.join("bad.model"), "kind=HG\nweight S-L 1\n").unwrap();
    ok(d, &["generate", "--resample", "50", "-o", "ok.tsv"]);
    ok(d, &["train", "cd", "--train", "ok.tsv", "-o", "cd.model", "--epochs", "2"]);
    for args in [
        &["train"][..],
        &["frobnicate"],
        &["train", "perceptron", "--train", "missing.tsv", "-o", "m"],
        &["train", "perceptron", "--train", "bad.tsv", "-o", "m"],
        &["train", "perceptron", "--train", "ok.tsv", "-o", "m", "--epochs", "0"],
        &["train", "gla", "--train", "ok.tsv", "-o", "m", "--plasticity", "-1"],
        &["eval", "--model", "bad.model", "--test", "ok.tsv"],
        &["eval", "--model", "cd.model", "--test", "ok.tsv", "--regime", "hg-ml"],
        &["eval", "--model", "cd.model", "--test", "ok.tsv", "--regime", "bogus"],
        &["analyze", "--model", "cd.model", "--pattern", "t f t"],
        &["repro", "--seeds", "0"],
    ] {
        assert_one_line_failure(d, args);
    }
}

#[test]
fn success_paths_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = hglearn(dir.path(), &["--help"]);
    assert!(out.status.success());
    let out = hglearn(dir.path(), &["generate", "--reference"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().filter(|l| !l.starts_with('#')).count(), 2955);
}
