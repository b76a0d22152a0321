//! Compiles and runs a small C program against the generated header and the
//! static library. Skipped when no C compiler is on PATH.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "regretlab.h"

int main(void) {
    double s = 0, a = 0;
    if (rl_exact_counterexample(1000, 1000, 0.5, &s, &a) != RL_STATUS_OK) return 1;
    if (a < 249.74 || a > 249.76) return 2;
    RlModel *m = NULL;
    if (rl_model_named("heaven_hell", NULL, &m) != RL_STATUS_OK) return 3;
    RlClassification c;
    if (rl_model_classify(m, 1000000, &c) != RL_STATUS_OK) return 4;
    if (c.communicating || c.weakly_communicating) return 5;
    double g[3];
    size_t need = 0;
    if (rl_model_optimal_gain(m, RL_GAIN_METHOD_RELATIVE_VI, g, 3, &need) != RL_STATUS_CONTRACT) return 6;
    if (rl_last_error() == NULL || strstr(rl_last_error(), "weakly") == NULL) return 7;
    rl_model_free(m);
    printf("ok %s\n", rl_version());
    return 0;
}
"#;

fn compiler() -> Option<&'static str> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
}

/// `target/<profile>` next to this test binary.
fn profile_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_is_checked_in() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/regretlab.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["rl_model_named", "rl_experiment_run", "RL_STATUS_OK", "RlClassification", "RL_GAIN_METHOD_BRUTE_FORCE"] {
        assert!(text.contains(name), "{name} missing from header");
    }
}

#[test]
fn c_program_links() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let lib = profile_dir().join("libregretlab_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built, skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
