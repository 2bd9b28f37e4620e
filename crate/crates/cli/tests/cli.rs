use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_starisac"));
    c.env("STARISAC_WORKERS", "1");
    c
}

const SMALL: &[&str] = &[
    "--set",
    "system.nx=2",
    "--set",
    "system.nz=2",
    "--set",
    "partition.n_part=2",
    "--set",
    "monte_carlo.eval_samples=50",
];

#[test]
fn selftest_passes() {
    let out = bin().arg("selftest").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 7);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn run_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let json = dir.path().join("run.json");
    let out = bin()
        .args(["run", "--scheme", "proposed", "--seed", "3"])
        .args(SMALL)
        .arg("--csv")
        .arg(&csv)
        .arg("--json")
        .arg(&json)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scheme,seed,axis_value,rate_total,rate_prep,rate_comm,assnr_min,power,iters,wall_ms,feasible"
    );
    assert!(lines.next().unwrap().starts_with("proposed,3,"));
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(parsed.as_array().unwrap().len(), 1);
}

#[test]
fn repeated_sweeps_are_byte_identical() {
    let run = || {
        let out = bin()
            .args([
                "sweep", "--axis", "power", "--grid", "10,20", "--seeds", "1", "--scheme",
                "cps-star",
            ])
            .args(SMALL)
            .output()
            .unwrap();
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    let a = run();
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 3);
    assert_eq!(a, run());
}

#[test]
fn errors_exit_one() {
    let out = bin().args(["run", "--scheme", "bogus"]).output().unwrap();
    assert_ne!(out.status.code(), Some(0));
    let out = bin()
        .args(["run", "--set", "system.nope=1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin()
        .args(["sweep", "--axis", "elements", "--grid", "abc"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unreachable_sensing_exits_two() {
    let out = bin()
        .args(["run", "--seed", "1", "--set", "sensing.delta_db=200"])
        .args(SMALL)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
