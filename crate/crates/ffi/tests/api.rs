use std::ffi::{CStr, CString};
use std::ptr;

use hyperdomino_ffi::*;

fn owned(s: *mut std::ffi::c_char) -> String {
    let t = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { hd_string_free(s) };
    t
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(hd_last_error()) }.to_str().unwrap().to_string()
}

#[test]
fn mantilla_round_trips_through_text() {
    unsafe {
        let mut ts = ptr::null_mut();
        assert_eq!(hd_tileset_mantilla(&mut ts), HdStatus::Ok);
        assert_eq!(hd_tileset_len(ts), 21);
        let mut text = ptr::null_mut();
        assert_eq!(hd_tileset_to_text(ts, &mut text), HdStatus::Ok);
        let text = CString::new(owned(text)).unwrap();
        let mut again = ptr::null_mut();
        assert_eq!(hd_tileset_parse(text.as_ptr(), &mut again), HdStatus::Ok);
        assert_eq!(hd_tileset_len(again), 21);
        hd_tileset_free(again);
        hd_tileset_free(ts);
    }
}

#[test]
fn grown_patch_checks_and_renders() {
    unsafe {
        let (mut ts, mut p) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(hd_tileset_mantilla(&mut ts), HdStatus::Ok);
        assert_eq!(hd_grow_mantilla(3, 2, &mut p), HdStatus::Ok);
        assert!(hd_patch_len(p) >= 29);
        let mut n = usize::MAX;
        assert_eq!(hd_check_patch(ts, p, &mut n), HdStatus::Ok);
        assert_eq!(n, 0);

        let mut text = ptr::null_mut();
        assert_eq!(hd_patch_to_text(p, &mut text), HdStatus::Ok);
        let text = CString::new(owned(text)).unwrap();
        let mut q = ptr::null_mut();
        assert_eq!(hd_patch_parse(text.as_ptr(), &mut q), HdStatus::Ok);
        assert_eq!(hd_patch_len(q), hd_patch_len(p));

        let mut svg = ptr::null_mut();
        assert_eq!(hd_render_svg(q, ts, &mut svg), HdStatus::Ok);
        assert_eq!(owned(svg).matches("<polygon").count(), hd_patch_len(p));
        hd_patch_free(q);
        hd_patch_free(p);
        hd_tileset_free(ts);
    }
}

#[test]
fn solve_ball_returns_a_tiling() {
    unsafe {
        let mut ts = ptr::null_mut();
        hd_tileset_mantilla(&mut ts);
        let mut r = HdSolveResult::Exhausted;
        let mut p = ptr::null_mut();
        assert_eq!(hd_solve_ball(ts, 1, 1_000_000, &mut r, &mut p), HdStatus::Ok);
        assert_eq!(r, HdSolveResult::Sat);
        assert_eq!(hd_patch_len(p), 8);
        // without a tiling out-parameter
        assert_eq!(hd_solve_ball(ts, 1, 1_000_000, &mut r, ptr::null_mut()), HdStatus::Ok);
        hd_patch_free(p);
        hd_tileset_free(ts);
    }
}

#[test]
fn unsat_is_a_result() {
    let src = CString::new("tileset clash\ntile a kind=Computation edges=N1,N2,N1,N2,N1,N2,N1 vertices=.,.,.,.,.,.,.\n").unwrap();
    unsafe {
        let mut ts = ptr::null_mut();
        assert_eq!(hd_tileset_parse(src.as_ptr(), &mut ts), HdStatus::Ok, "{}", last_error());
        let mut r = HdSolveResult::Sat;
        assert_eq!(hd_solve_ball(ts, 1, 1_000_000, &mut r, ptr::null_mut()), HdStatus::Ok);
        assert_eq!(r, HdSolveResult::Unsat);
        hd_tileset_free(ts);
    }
}

#[test]
fn machines_run_and_reduce() {
    unsafe {
        let name = CString::new("halting3").unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(hd_machine_shipped(name.as_ptr(), &mut m), HdStatus::Ok);
        let mut trace = ptr::null_mut();
        assert_eq!(hd_run_tm(m, 10, &mut trace), HdStatus::Ok);
        assert_eq!(owned(trace).lines().count(), 4);
        let radii = [5u32];
        let mut report = ptr::null_mut();
        assert_eq!(hd_reduce(m, radii.as_ptr(), 1, 0, 9, 1_000_000, &mut report), HdStatus::Ok);
        assert!(owned(report).contains("radius 5: Unsat certified"));
        hd_machine_free(m);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut ts = ptr::null_mut();
        assert_eq!(hd_tileset_parse(ptr::null(), &mut ts), HdStatus::NullPointer);
        assert!(ts.is_null());
        let bad = CString::new("this is not a tile set").unwrap();
        assert_eq!(hd_tileset_parse(bad.as_ptr(), &mut ts), HdStatus::Parse);
        assert!(!last_error().is_empty());
        let nope = CString::new("nope").unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(hd_machine_shipped(nope.as_ptr(), &mut m), HdStatus::Domain);
        assert!(last_error().contains("nope"));
        let latin1 = [0xffu8, 0];
        assert_eq!(hd_machine_shipped(latin1.as_ptr().cast(), &mut m), HdStatus::InvalidUtf8);
        assert_eq!(hd_tileset_mantilla(ptr::null_mut()), HdStatus::NullPointer);
        assert_eq!(hd_patch_len(ptr::null()), 0);
        hd_patch_free(ptr::null_mut());
        hd_string_free(ptr::null_mut());
    }
}
