//! Compiles and runs a small C program against the generated header and the
//! static library, proving the ABI is usable from C.

use std::path::PathBuf;
use std::process::Command;

fn target_dir() -> PathBuf {
    if let Ok(dir) = std::env::var("CARGO_TARGET_DIR") {
        return PathBuf::from(dir);
    }
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target")
}

#[test]
fn c_program_links_and_runs() {
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    let lib = target_dir().join(profile).join("libriseflight_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: static library not found at {}", lib.display());
        return;
    }
    let cc = ["cc", "gcc", "clang"]
        .iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok());
    let Some(cc) = cc else {
        eprintln!("skipping: no C compiler available");
        return;
    };

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <assert.h>
#include <stdio.h>
#include "riseflight.h"

int main(void) {
    RfConfig *cfg = rf_config_benchmark(RfController_Rise, 0.0, 7);
    assert(cfg != NULL);
    assert(rf_config_set_duration(cfg, 0.5) == RfStatus_Ok);
    RfTrace *trace = rf_run(cfg);
    assert(trace != NULL);
    assert(rf_trace_len(trace) == 500);
    double sample[5];
    assert(rf_trace_sample(trace, 499, sample) == RfStatus_Ok);
    printf("t=%f mass_hat=%f\n", sample[0], sample[4]);
    assert(sample[0] > 0.49 && sample[0] < 0.51);
    rf_trace_free(trace);
    rf_config_free(cfg);
    return 0;
}
"#,
    )
    .unwrap();

    let exe = dir.path().join("smoke");
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let compile = Command::new(cc)
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .output()
        .expect("compiler invocation");
    assert!(
        compile.status.success(),
        "C compilation failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&exe).output().expect("smoke binary");
    assert!(
        run.status.success(),
        "smoke binary failed:\n{}",
        String::from_utf8_lossy(&run.stderr)
    );
}
