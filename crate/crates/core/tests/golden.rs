//! CLI output on the corpus, compared against `corpus/expected`.
//! Run with `REVQ_BLESS=1` to rewrite the expected files.

use std::path::{Path, PathBuf};

const CASES: &[(&str, &[&str])] = &[
    ("check_hadamard", &["check", "hadamard.qrev"]),
    ("run_hadamard", &["run", "hadamard.qrev", "--arg", "inl *"]),
    ("run_hadamard_inr", &["run", "hadamard.qrev", "--arg", "inr *"]),
    (
        "invert_hadamard",
        &[
            "invert",
            "hadamard.qrev",
            "--value",
            "1/sqrt2 * inl * - 1/sqrt2 * inr *",
        ],
    ),
    ("matrix_hadamard", &["matrix", "hadamard.qrev"]),
    ("matrix_swap", &["matrix", "swap.qrev"]),
    ("matrix_not", &["matrix", "not.qrev"]),
    ("check_bell", &["check", "bell.qrev"]),
    ("run_bell", &["run", "bell.qrev", "--arg", "(inl *, inl *)"]),
    ("matrix_bell", &["matrix", "bell.qrev"]),
    ("run_loop", &["run", "loop.rev", "--fuel", "50"]),
    ("run_map_succ", &["run", "map_succ.rev"]),
    ("run_cantor", &["run", "cantor.rev", "--arg", "(#2, #1)"]),
    ("invert_cantor", &["invert", "cantor.rev", "--value", "#7"]),
    ("pinj_cantor", &["pinj", "cantor.rev", "--bound", "4"]),
    ("run_dup", &["run", "dup_nat.rev", "--arg", "#3"]),
    ("pinj_dup", &["pinj", "dup_nat.rev", "--bound", "3"]),
    ("check_rtm", &["check", "rtm_increment.rev"]),
    ("gen_hadamard", &["gen", "hadamard"]),
    ("gen_dup", &["gen", "dup", "[I + I]"]),
];

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn render(args: &[&str]) -> String {
    let dir = corpus();
    let mut argv = vec!["revq".to_string()];
    for (i, a) in args.iter().enumerate() {
        let file = dir.join(a);
        if i == 1 && args[0] != "gen" && file.exists() {
            argv.push(file.to_string_lossy().into_owned());
        } else {
            argv.push(a.to_string());
        }
    }
    let out = revq::cli::run_args(argv);
    let prefix = format!("{}/", dir.display());
    format!("exit: {}\n{}{}", out.code, out.stdout, out.stderr.replace(&prefix, ""))
}

#[test]
fn corpus_outputs_match() {
    let bless = std::env::var_os("REVQ_BLESS").is_some();
    let expected_dir = corpus().join("expected");
    let mut failures = Vec::new();
    for (name, args) in CASES {
        let got = render(args);
        let path = expected_dir.join(format!("{name}.out"));
        if bless {
            std::fs::create_dir_all(&expected_dir).unwrap();
            std::fs::write(&path, &got).unwrap();
            continue;
        }
        let want = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
        if got != want {
            failures.push(format!("{name}:\n--- expected\n{want}--- got\n{got}"));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn generated_sources_match_corpus() {
    for (file, program, args) in [
        ("hadamard.qrev", "hadamard", vec![]),
        ("swap.qrev", "swap", vec![]),
        ("not.qrev", "not", vec![]),
        ("cantor.rev", "cantor", vec![]),
        ("dup_nat.rev", "dup", vec!["nat".to_string()]),
        ("rtm_increment.rev", "rtm-exact", vec!["increment".to_string()]),
    ] {
        let id = revq::stdlib::ProgramId::from_args(program, &args).unwrap();
        let text = revq::stdlib::generate_source(&id).unwrap();
        assert_eq!(text, std::fs::read_to_string(corpus().join(file)).unwrap(), "{file}");
    }
}

#[test]
fn output_is_deterministic() {
    for (_, args) in CASES.iter().take(6) {
        assert_eq!(render(args), render(args));
    }
}
