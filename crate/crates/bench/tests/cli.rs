use std::fs;
use std::process::Command;

use coordesc_bench::read_records;

fn cdbench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cdbench"))
}

#[test]
fn solve_writes_one_row_per_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lasso.csv");
    let status = cdbench()
        .args([
            "solve",
            "--problem",
            "lasso",
            "--rule",
            "gs-s",
            "--epochs",
            "12",
            "--m",
            "20",
            "--n",
            "40",
        ])
        .args(["--k", "4", "--lambda", "10", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let rec = read_records(&out).unwrap();
    assert_eq!(rec.rows.len(), 13);
    assert!(rec.rows.last().unwrap().objective < rec.rows[0].objective);
}

#[test]
fn repeated_runs_are_byte_identical_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = cdbench()
            .args([
                "solve",
                "--problem",
                "logistic",
                "--rule",
                "random",
                "--epochs",
                "5",
                "--trials",
                "3",
            ])
            .args(["--seed", "9", "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        read_records(&out).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x.objective.to_bits(), y.objective.to_bits());
        assert_eq!(x.flops, y.flops);
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    let out = dir.path().join("q.csv");
    fs::write(
        &cfg,
        "# quadratic demo\nproblem = quadratic\nrule = cyclic\nepochs = 50\n",
    )
    .unwrap();
    let status = cdbench()
        .arg("--config")
        .arg(&cfg)
        .args(["solve", "--epochs", "3", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(read_records(&out).unwrap().rows.len(), 4);
}

#[test]
fn bad_input_exits_with_code_two() {
    let status = cdbench()
        .args(["solve", "--problem", "lasso", "--rule", "no-such-rule"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn prox_check_passes_on_a_small_run() {
    let out = cdbench()
        .args(["prox-check", "--cases", "10"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with(" ok")).count(), 5);
}
