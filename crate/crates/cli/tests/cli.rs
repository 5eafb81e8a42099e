use std::path::Path;
use std::process::{Command, Output};

fn evident(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evident"))
        .args(args)
        .env("EVIDENT_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = evident(args, "0");
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn documented_outputs() {
    assert_eq!(stdout(&["nml-constants", "--n", "3"]), "1:2 2:5/2 3:26/9\n");
    assert_eq!(
        stdout(&["sample-complexity", "--alpha", "0.01", "--mu", "0.05"]),
        "92.1\n"
    );
}

#[test]
fn exit_codes() {
    assert_eq!(evident(&["no-such-command"], "0").status.code(), Some(1));
    assert_eq!(
        evident(&["sample-complexity", "--alpha", "x", "--mu", "1"], "0")
            .status
            .code(),
        Some(1)
    );
    assert_eq!(evident(&["--help"], "0").status.code(), Some(0));
    assert_eq!(
        evident(
            &["validity", "max(bet_heads, bet_tails)", "--depth", "1"],
            "0"
        )
        .status
        .code(),
        Some(0)
    );
    assert_eq!(
        evident(
            &[
                "validity",
                "max(bet_heads, bet_tails)",
                "--depth",
                "1",
                "--expect-pass"
            ],
            "0"
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        evident(&["validity", "kt(0.5)", "--expect-pass"], "0")
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        evident(&["validity", "scale(2, kt(0.5))"], "0")
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        evident(&["sample-complexity", "--alpha", "1.5", "--mu", "1"], "0")
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn validity_json_schema() {
    let text = stdout(&[
        "validity",
        "mix(0.5:lr(0.65,0.5), 0.5:lr(0.35,0.5))",
        "--depth",
        "4",
    ]);
    for key in [
        "\"combinator\"",
        "\"depth\": 4",
        "\"max_expectation\"",
        "\"worst_history\"",
        "\"pass\": true",
    ] {
        assert!(text.contains(key), "{text}");
    }
}

#[test]
fn liftability_reports_exact_fraction() {
    let text = stdout(&["liftability", "nml-seq", "--depth", "3"]);
    assert!(text.contains("\"mass_numerator\": 40"));
    assert!(text.contains("\"mass_denominator\": 39"));
    let kt = stdout(&["liftability", "kt", "--depth", "5", "--format", "csv"]);
    assert_eq!(kt, "prefix,mass,mass_numerator,mass_denominator\n");
    let nml = stdout(&["liftability", "nml-seq", "--depth", "3", "--format", "csv"]);
    assert!(
        nml.lines()
            .any(|l| l.starts_with("0 1,") && l.ends_with(",40,39")),
        "{nml}"
    );
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["experiment", "type1", "--reps", "2000", "--seed", "7"];
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let mut full: Vec<&str> = args.to_vec();
        let d = dir.path().to_str().unwrap();
        full.extend(["--out", d]);
        assert!(evident(&full, threads).status.success());
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa.len(), 1);
    assert_eq!(fa, fb);
}

#[test]
fn seed_changes_output() {
    let x = stdout(&["experiment", "accumulation", "--reps", "40", "--seed", "1"]);
    let y = stdout(&["experiment", "accumulation", "--reps", "40", "--seed", "2"]);
    assert_ne!(x, y);
}
