//! Compiles a small C program against the generated header and the cdylib.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "revq.h"

int main(void) {
    const char *src = "iso not : I + I <-> I + I = {| inl * <-> inr * | inr * <-> inl * };";
    RevqProgram *p = NULL;
    if (revq_program_parse(src, REVQ_DIALECT_QUANTUM, &p) != REVQ_STATUS_OK) return 1;
    char *out = NULL;
    if (revq_program_run(p, "inl *", 10, &out) != REVQ_STATUS_OK) return 2;
    int ok = strcmp(out, "inr *") == 0;
    revq_string_free(out);
    RevqProgram *bad = NULL;
    if (revq_program_parse("main = inl * + inr *;", REVQ_DIALECT_QUANTUM, &bad) != REVQ_STATUS_REJECTED) return 3;
    if (strstr(revq_last_error(), "E104") == NULL) return 4;
    revq_program_free(p);
    return ok ? 0 : 5;
}
"#;

fn cdylib_dir() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?.to_path_buf();
    let name = format!(
        "{}revq_ffi{}",
        std::env::consts::DLL_PREFIX,
        std::env::consts::DLL_SUFFIX
    );
    dir.join(&name).exists().then_some(dir)
}

#[test]
fn header_compiles_and_links() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("revq.h").exists(), "header not generated");
    let Some(lib) = cdylib_dir() else {
        eprintln!("skipping: cdylib not built next to the test binary");
        return;
    };
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    let tmp = std::env::temp_dir().join(format!("revq-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&tmp).unwrap();
    let src = tmp.join("smoke.c");
    let bin = tmp.join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg(format!("-I{}", include.display()))
        .arg(format!("-L{}", lib.display()))
        .arg("-lrevq_ffi")
        .arg(format!("-Wl,-rpath,{}", lib.display()))
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let run = Command::new(&bin).status().unwrap();
    assert_eq!(run.code(), Some(0));
}
