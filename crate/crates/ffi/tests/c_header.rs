//! Builds a small C program against the generated header and the static
//! library. Skipped when no C compiler is on the path.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "hyperdomino.h"

int main(void) {
    HdTileSet *ts = NULL;
    HdPatch *p = NULL;
    size_t bad = 1;
    if (hd_tileset_mantilla(&ts) != HD_STATUS_OK) return 10;
    if (hd_grow_mantilla(5, 2, &p) != HD_STATUS_OK) return 11;
    if (hd_check_patch(ts, p, &bad) != HD_STATUS_OK || bad != 0) return 12;
    HdSolveResult r;
    if (hd_solve_ball(ts, 1, 1000000, &r, NULL) != HD_STATUS_OK || r != HD_SOLVE_RESULT_SAT) return 13;
    if (hd_tileset_parse("garbage", &ts) != HD_STATUS_PARSE || strlen(hd_last_error()) == 0) return 14;
    char *text = NULL;
    if (hd_patch_to_text(p, &text) != HD_STATUS_OK) return 15;
    printf("%zu %zu\n", hd_tileset_len(ts), hd_patch_len(p));
    hd_string_free(text);
    hd_patch_free(p);
    hd_tileset_free(ts);
    return 0;
}
"#;

fn profile_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_header() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler, skipping");
        return;
    }
    let lib = profile_dir().join("libhyperdomino_ffi.a");
    assert!(lib.is_file(), "{} missing", lib.display());
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    let exe = tmp.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let built = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(built.status.success(), "{}", String::from_utf8_lossy(&built.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let out = String::from_utf8(run.stdout).unwrap();
    let mut it = out.split_whitespace().map(|x| x.parse::<usize>().unwrap());
    assert_eq!(it.next(), Some(21));
    assert!(it.next().unwrap() >= 29);
}
