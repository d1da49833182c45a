use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "blowup.h"

int main(void) {
    if (fabs(blowup_kappa(5.0) - pow(0.75, 0.25)) > 1e-12) return 10;
    double re, im;
    if (blowup_gamma(0.5, 0.0, &re, &im) != BLOWUP_STATUS_OK) return 11;
    if (fabs(re - sqrt(M_PI)) > 1e-12) return 12;
    BlowupExpr *e = NULL;
    if (blowup_expr_parse("damping", &e) != BLOWUP_STATUS_OK) return 13;
    double u[2] = {1, 0}, v[2] = {3, -1}, w[2] = {0, 0}, out[2];
    if (blowup_expr_eval(e, 1.0, 0.0, u, v, w, out) != BLOWUP_STATUS_OK) return 14;
    if (out[0] != 3.0 || out[1] != -1.0) return 15;
    blowup_expr_free(e);
    if (blowup_expr_parse("u +", &e) != BLOWUP_STATUS_PARSE) return 16;
    if (blowup_last_error_message()[0] == '\0') return 17;
    BlowupSim *s = NULL;
    if (blowup_sim_new(3.0, 1.0, 0.5, "zero", 16, &s) != BLOWUP_STATUS_OK) return 18;
    if (blowup_sim_advance(s, 0.5, 0.0) != BLOWUP_STATUS_OK) return 19;
    double th, cr, cg, rem;
    if (blowup_sim_project(s, &th, &cr, &cg, &rem) != BLOWUP_STATUS_OK) return 20;
    if (fabs(cg) > 1e-12 || fabs(rem) > 1e-12) return 21;
    blowup_sim_free(s);
    printf("ok\n");
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libblowup_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let bin = dir.path().join("main");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-D_DEFAULT_SOURCE")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl"])
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap_or_else(|e| panic!("cannot run C compiler `{cc}`: {e}"));
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "C program failed: {:?}", out);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "ok\n");
}
