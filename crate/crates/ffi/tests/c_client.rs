//! Compiles a small C program against the generated header and static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "fracdelta.h"

int main(void) {
    char *s = NULL;
    if (fd_delta("27/2", FD_BOUNDARY_RULE_HIGH, &s) != FD_STATUS_OK) return 10;
    if (strcmp(s, "83/4") != 0) return 11;
    fd_string_free(s);

    FdOrbit *o = NULL;
    if (fd_orbit_new("616136875/407730749", 29, FD_BOUNDARY_RULE_HIGH, &o) != FD_STATUS_OK) return 20;
    if (fd_orbit_len(o) != 30) return 21;
    if (fd_orbit_value(o, 29, &s) != FD_STATUS_OK) return 22;
    if (strcmp(s, "616136875/407730749") != 0) return 23;
    fd_string_free(s);
    fd_orbit_free(o);

    int64_t t = 0, p = 0;
    if (fd_classify("616136875/407730749", 1000, &t, &p) != FD_STATUS_OK) return 30;
    if (t != 7 || p != 0) return 31;

    if (fd_delta("x", FD_BOUNDARY_RULE_LOW, &s) != FD_STATUS_PARSE) return 40;
    if (strlen(fd_last_error()) == 0) return 41;
    printf("ok %s\n", fd_version());
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // test binaries live in target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libfracdelta_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());

    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("client.c");
    let bin = tmp.path().join("client");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .expect("a C compiler on PATH");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
