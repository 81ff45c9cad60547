use std::path::Path;
use std::process::Command;

fn revq(args: &[&str]) -> (i32, String, String) {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let out = Command::new(env!("CARGO_BIN_EXE_revq"))
        .current_dir(corpus)
        .args(args)
        .output()
        .expect("spawn revq");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn hadamard_run() {
    let (code, out, _) = revq(&["run", "hadamard.qrev", "--arg", "inl *"]);
    assert_eq!(code, 0);
    assert_eq!(out, "1/sqrt2 * inl * + 1/sqrt2 * inr *\n");
}

#[test]
fn loop_runs_out_of_fuel() {
    let (code, out, _) = revq(&["run", "loop.rev", "--fuel", "50"]);
    assert_eq!(code, 0);
    assert_eq!(out, "out-of-fuel after 50 steps\n");
}

#[test]
fn hadamard_matrix_is_unitary() {
    let (code, out, _) = revq(&["matrix", "hadamard.qrev"]);
    assert_eq!(code, 0);
    assert!(out.lines().any(|l| l == "unitary: yes (residual 0.0e0)"), "{out}");
}

#[test]
fn exit_codes() {
    let (code, _, err) = revq(&["run", "hadamard.qrev", "--arg", "inl * + inr *"]);
    assert_eq!(code, 1, "{err}");
    assert!(err.contains("E104"), "{err}");
    assert_eq!(revq(&["run"]).0, 2);
    assert_eq!(revq(&["matrix", "missing.qrev"]).0, 2);
}

#[test]
fn eps_override() {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let out = Command::new(env!("CARGO_BIN_EXE_revq"))
        .current_dir(&corpus)
        .env("REVQ_EPS", "nonsense")
        .args(["check", "hadamard.qrev"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_revq"))
        .current_dir(&corpus)
        .env("REVQ_EPS", "1e-6")
        .args(["check", "hadamard.qrev"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}
