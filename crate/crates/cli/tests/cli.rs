use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fairfront(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairfront"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn frontier_on_metrics_file_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("m.csv");
    fs::write(&input, "id,fairness,accuracy\na,1.0,0.5\nb,0.9,0.7\nc,0.8,0.9\n").unwrap();
    let o = fairfront(
        &["frontier", "--input", input.to_str().unwrap(), "--set", "weights=step:0.8,uniform", "--oracle"],
        &dir.path().join("out"),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("fauc=0.6"), "{stdout}");
    for f in ["taf_points.csv", "report.json", "frontier.svg"] {
        assert!(dir.path().join("out").join(f).exists(), "missing {f}");
    }
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    let missing = fairfront(&["frontier", "--input", "/nonexistent/m.csv"], &out);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).starts_with("level=error code="), "{}", stderr(&missing));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "id,fairness,accuracy\na,1.0,0.5\nb,1.7,0.7\n").unwrap();
    let o = fairfront(&["frontier", "--input", bad.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 2"), "{}", stderr(&o));

    let unfair = dir.path().join("unfair.csv");
    fs::write(&unfair, "id,fairness,accuracy\na,0.9,0.5\n").unwrap();
    let o = fairfront(
        &["frontier", "--input", unfair.to_str().unwrap(), "--set", "append_constant_model=false"],
        &out,
    );
    assert_eq!(o.status.code(), Some(2));

    let o = fairfront(&["synth", "--set", "no_such_key=1"], &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn synth_then_audit_runs() {
    let dir = tempfile::tempdir().unwrap();
    let synth = fairfront(&["synth", "--set", "synth_n=600", "--set", "synth_k=4"], &dir.path().join("s"));
    assert!(synth.status.success(), "{}", stderr(&synth));
    let input = dir.path().join("s").join("predictions.csv");
    let o = fairfront(
        &["audit", "--input", input.to_str().unwrap(), "--set", "alpha=1"],
        &dir.path().join("a"),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("a").join("audit.csv").exists());
}
