use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use cssr_ffi::*;

const EVEN: &str = include_str!("../../core/specs/even.spec");

fn last_error() -> String {
    let p = cssr_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn from_text(text: &str) -> *mut CssrMachine {
    let c = CString::new(text).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { cssr_machine_from_text(c.as_ptr(), &mut m) }, CssrStatus::Ok);
    m
}

#[test]
fn infer_simulated_even_process() {
    unsafe {
        let truth = from_text(EVEN);
        let mut data = ptr::null_mut();
        assert_eq!(cssr_machine_simulate(truth, 10_000, 5, &mut data), CssrStatus::Ok);
        let mut cfg = std::mem::zeroed();
        assert_eq!(cssr_infer_config_default(&mut cfg), CssrStatus::Ok);
        cfg.l_max = 4;
        let alphabet = CString::new("AB").unwrap();
        let mut learned = ptr::null_mut();
        assert_eq!(cssr_infer(data, alphabet.as_ptr(), &cfg, &mut learned), CssrStatus::Ok);
        cssr_string_free(data);

        let mut n = 0usize;
        assert_eq!(cssr_machine_num_states(learned, &mut n), CssrStatus::Ok);
        assert_eq!(n, 2);
        let mut h = 0.0;
        assert_eq!(cssr_machine_entropy_rate(learned, &mut h), CssrStatus::Ok);
        assert!((h - 2.0 / 3.0).abs() < 0.02);
        let mut d = 0.0;
        assert_eq!(cssr_machine_tv_distance(learned, truth, 10, &mut d), CssrStatus::Ok);
        assert!(d < 0.1, "tv {d}");

        let mut text = ptr::null_mut();
        assert_eq!(cssr_machine_to_text(learned, &mut text), CssrStatus::Ok);
        let round = from_text(CStr::from_ptr(text).to_str().unwrap());
        cssr_string_free(text);
        assert_eq!(cssr_machine_tv_distance(learned, round, 10, &mut d), CssrStatus::Ok);
        assert!(d < 1e-12);

        cssr_machine_free(round);
        cssr_machine_free(learned);
        cssr_machine_free(truth);
    }
}

#[test]
fn predict_and_unsynchronized_fallback() {
    unsafe {
        let m = from_text(EVEN);
        let mut probs = [0.0f64; 2];
        let h = CString::new("ABB").unwrap();
        assert_eq!(cssr_machine_predict(m, h.as_ptr(), probs.as_mut_ptr(), 2), CssrStatus::Ok);
        assert_eq!(probs, [0.5, 0.5]);
        let h = CString::new("BB").unwrap();
        assert_eq!(cssr_machine_predict(m, h.as_ptr(), probs.as_mut_ptr(), 2), CssrStatus::Unsynchronized);
        assert!((probs[0] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(cssr_machine_predict(m, h.as_ptr(), probs.as_mut_ptr(), 1), CssrStatus::BufferTooSmall);
        cssr_machine_free(m);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(cssr_machine_from_text(ptr::null(), &mut m), CssrStatus::NullPointer);
        assert!(m.is_null());
        assert!(last_error().contains("null"));

        let bad = CString::new("alphabet: A B\nx A 0.7 x\n").unwrap();
        assert_eq!(cssr_machine_from_text(bad.as_ptr(), &mut m), CssrStatus::InvalidInput);
        assert!(!last_error().is_empty());

        let mut cfg = std::mem::zeroed();
        cssr_infer_config_default(&mut cfg);
        let data = CString::new("AAAAAAAA").unwrap();
        assert_eq!(cssr_infer(data.as_ptr(), ptr::null(), &cfg, &mut m), CssrStatus::DegenerateAlphabet);
        let empty = CString::new("").unwrap();
        assert_eq!(cssr_infer(empty.as_ptr(), ptr::null(), &cfg, &mut m), CssrStatus::InvalidInput);
        cfg.test = 9;
        let data = CString::new("ABAB").unwrap();
        assert_eq!(cssr_infer(data.as_ptr(), ptr::null(), &cfg, &mut m), CssrStatus::InvalidInput);

        let mut n = 0usize;
        assert_eq!(cssr_machine_num_states(ptr::null(), &mut n), CssrStatus::NullPointer);

        // A successful call clears the message.
        let ok = from_text(EVEN);
        assert!(cssr_last_error_message().is_null());
        cssr_machine_free(ok);
        cssr_machine_free(ptr::null_mut());
        cssr_string_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/cssr.h")).unwrap();
    for name in [
        "cssr_last_error_message",
        "cssr_infer_config_default",
        "cssr_infer(",
        "cssr_machine_from_text",
        "cssr_machine_free",
        "cssr_machine_num_states",
        "cssr_machine_entropy_rate",
        "cssr_machine_to_text",
        "cssr_machine_simulate",
        "cssr_machine_tv_distance",
        "cssr_machine_predict",
        "cssr_string_free",
        "typedef struct CssrMachine CssrMachine",
        "CSSR_STATUS_UNSYNCHRONIZED = 4",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

/// Compiles and runs a small C program against the static library when a
/// C compiler and the archive are available.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let target = std::env::var_os("CARGO_TARGET_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| manifest.join("../../target"));
    let archive = ["debug", "release"]
        .iter()
        .map(|p| target.join(p).join("libcssr_ffi.a"))
        .filter(|p| p.exists())
        .max_by_key(|p| p.metadata().and_then(|m| m.modified()).ok());
    let Some(archive) = archive else {
        eprintln!("skipping: static library not built");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "cssr.h"
int main(void) {
    const char *spec = "alphabet: A B\n1 A 1/2 1\n1 B 1/2 2\n2 B 1 1\n";
    CssrMachine *m = NULL;
    if (cssr_machine_from_text(spec, &m) != CSSR_STATUS_OK) return 1;
    size_t n = 0;
    cssr_machine_num_states(m, &n);
    char *text = NULL;
    cssr_machine_simulate(m, 20, 1, &text);
    printf("%zu %s\n", n, text);
    cssr_string_free(text);
    cssr_machine_free(m);
    CssrMachine *bad = NULL;
    if (cssr_machine_from_text(NULL, &bad) != CSSR_STATUS_NULL_POINTER) return 2;
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let compiled = std::process::Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status();
    match compiled {
        Ok(s) if s.success() => {}
        Ok(s) => panic!("C compilation failed: {s}"),
        Err(_) => {
            eprintln!("skipping: no C compiler");
            return;
        }
    }
    let out = std::process::Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("2 "), "{stdout}");
    assert_eq!(stdout.trim().len(), 2 + 20);
}
