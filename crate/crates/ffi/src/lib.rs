//! C interface to hyperdomino.
//!
//! Objects cross the boundary as opaque handles created by `hd_*` constructors
//! and released with the matching `hd_*_free`. Every fallible call returns an
//! [`HdStatus`]; on failure `hd_last_error` describes the problem. Strings
//! returned through `char **` out-parameters are owned by the caller and must
//! be released with `hd_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use hyperdomino::cli::{render_svg, RenderStyle};
use hyperdomino::harp::{format_trace, shipped_machines, tm_run, TuringMachine};
use hyperdomino::heptagrid::{Region, TileAddress};
use hyperdomino::mantilla::{grow, mantilla_tileset, shipped_grammar};
use hyperdomino::reduction::run_reduction;
use hyperdomino::tiles::format::{parse_patch, parse_tileset, write_patch, write_tileset};
use hyperdomino::tiles::{check_patch, solve_region, Patch, SolveMode, SolveOutcome, TileSet};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed tile set, patch or machine text.
    Parse = 3,
    /// A well-formed request the library rejected.
    Domain = 4,
    /// Internal panic caught at the boundary.
    Panic = 5,
}

/// Answer of `hd_solve_ball`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HdSolveResult {
    Sat = 0,
    Unsat = 1,
    Exhausted = 2,
}

/// Opaque tile set.
pub struct HdTileSet(TileSet);

/// Opaque patch of placed tiles.
pub struct HdPatch(Patch);

/// Opaque Turing machine.
pub struct HdMachine {
    name: String,
    machine: TuringMachine,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(HdStatus, String);

fn parse_err(e: impl std::fmt::Display) -> Fail {
    Fail(HdStatus::Parse, e.to_string())
}

fn domain(e: impl std::fmt::Display) -> Fail {
    Fail(HdStatus::Domain, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HdStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            HdStatus::Panic
        }
    }
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(Fail(HdStatus::NullPointer, "null string".into()));
    }
    CStr::from_ptr(s).to_str().map_err(|e| Fail(HdStatus::InvalidUtf8, e.to_string()))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(HdStatus::NullPointer, "null handle".into()))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(HdStatus::NullPointer, "null out-parameter".into()));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(HdStatus::NullPointer, "null out-parameter".into()));
    }
    *out = CString::new(s).map_err(domain)?.into_raw();
    Ok(())
}

unsafe fn put_value<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(HdStatus::NullPointer, "null out-parameter".into()));
    }
    *out = value;
    Ok(())
}

/// Message of the last failed call on this thread. Valid until the next
/// failing call on the same thread; never null.
#[no_mangle]
pub extern "C" fn hd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The 21 mantilla tiles.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_tileset_mantilla(out: *mut *mut HdTileSet) -> HdStatus {
    guard(|| put(out, HdTileSet(mantilla_tileset())))
}

/// # Safety
/// `src` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_tileset_parse(src: *const c_char, out: *mut *mut HdTileSet) -> HdStatus {
    guard(|| put(out, HdTileSet(parse_tileset(text(src)?).map_err(parse_err)?)))
}

/// # Safety
/// `ts` must be a live tile set handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_tileset_to_text(ts: *const HdTileSet, out: *mut *mut c_char) -> HdStatus {
    guard(|| put_string(out, write_tileset(&handle(ts)?.0)))
}

/// Number of tile types, or 0 for a null handle.
///
/// # Safety
/// `ts` must be null or a live tile set handle.
#[no_mangle]
pub unsafe extern "C" fn hd_tileset_len(ts: *const HdTileSet) -> usize {
    ts.as_ref().map_or(0, |t| t.0.types.len())
}

/// # Safety
/// `ts` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hd_tileset_free(ts: *mut HdTileSet) {
    if !ts.is_null() {
        drop(Box::from_raw(ts));
    }
}

/// Grows a mantilla patch containing the ball of the given radius.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_grow_mantilla(seed: u64, radius: u32, out: *mut *mut HdPatch) -> HdStatus {
    guard(|| {
        let p = grow(&mantilla_tileset(), &shipped_grammar(), seed, radius as usize).map_err(domain)?;
        put(out, HdPatch(p))
    })
}

/// # Safety
/// `src` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_patch_parse(src: *const c_char, out: *mut *mut HdPatch) -> HdStatus {
    guard(|| put(out, HdPatch(parse_patch(text(src)?).map_err(parse_err)?)))
}

/// # Safety
/// `p` must be a live patch handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_patch_to_text(p: *const HdPatch, out: *mut *mut c_char) -> HdStatus {
    guard(|| put_string(out, write_patch(&handle(p)?.0)))
}

/// Number of placements, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live patch handle.
#[no_mangle]
pub unsafe extern "C" fn hd_patch_len(p: *const HdPatch) -> usize {
    p.as_ref().map_or(0, |p| p.0.len())
}

/// # Safety
/// `p` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hd_patch_free(p: *mut HdPatch) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Counts the matching violations of `p` under `ts`.
///
/// # Safety
/// Handles must be live; `violations` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_check_patch(ts: *const HdTileSet, p: *const HdPatch, violations: *mut usize) -> HdStatus {
    guard(|| {
        let n = check_patch(&handle(ts)?.0, &handle(p)?.0).map_err(domain)?.len();
        put_value(violations, n)
    })
}

/// Tiles Ball(Center, radius). On `Sat`, `*tiling` receives the patch when
/// `tiling` is not null; otherwise it is left untouched.
///
/// # Safety
/// `ts` must be live; `result` must be valid for writes; `tiling` null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_solve_ball(
    ts: *const HdTileSet,
    radius: u32,
    budget: u64,
    result: *mut HdSolveResult,
    tiling: *mut *mut HdPatch,
) -> HdStatus {
    guard(|| {
        let region = Region::Ball { center: TileAddress::Center, radius: radius as usize };
        let out = solve_region(&handle(ts)?.0, &region, &Patch::new(), budget, SolveMode::First).map_err(domain)?;
        let r = match out {
            SolveOutcome::Sat(p) => {
                if !tiling.is_null() {
                    put(tiling, HdPatch(p))?;
                }
                HdSolveResult::Sat
            }
            SolveOutcome::Unsat { .. } => HdSolveResult::Unsat,
            SolveOutcome::Exhausted { .. } | SolveOutcome::Count { .. } => HdSolveResult::Exhausted,
        };
        put_value(result, r)
    })
}

/// Parses a machine description.
///
/// # Safety
/// Strings must be NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_machine_parse(name: *const c_char, src: *const c_char, out: *mut *mut HdMachine) -> HdStatus {
    guard(|| {
        let machine = text(src)?.parse().map_err(parse_err)?;
        put(out, HdMachine { name: text(name)?.to_string(), machine })
    })
}

/// One of the bundled machines: writer, zigzag, counter, halting3, halting4.
///
/// # Safety
/// `name` must be NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_machine_shipped(name: *const c_char, out: *mut *mut HdMachine) -> HdStatus {
    guard(|| {
        let name = text(name)?;
        let (n, machine) = shipped_machines()
            .into_iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| domain(format!("no shipped machine {}", name)))?;
        put(out, HdMachine { name: n.to_string(), machine })
    })
}

/// # Safety
/// `m` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hd_machine_free(m: *mut HdMachine) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// The configurations of the first `steps` steps, one per line.
///
/// # Safety
/// `m` must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_run_tm(m: *const HdMachine, steps: u32, out: *mut *mut c_char) -> HdStatus {
    guard(|| {
        let trace = tm_run(&handle(m)?.machine, steps as usize).map_err(domain)?;
        put_string(out, format_trace(&trace))
    })
}

/// Runs the reduction at the given radii and returns the text report.
///
/// # Safety
/// `m` must be live; `radii` must point to `n_radii` values; `out` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_reduce(
    m: *const HdMachine,
    radii: *const u32,
    n_radii: usize,
    seed: u64,
    max_depth: u32,
    budget: u64,
    out: *mut *mut c_char,
) -> HdStatus {
    guard(|| {
        let m = handle(m)?;
        if radii.is_null() && n_radii > 0 {
            return Err(Fail(HdStatus::NullPointer, "null radii".into()));
        }
        let rs: Vec<usize> = if n_radii == 0 { Vec::new() } else { std::slice::from_raw_parts(radii, n_radii).iter().map(|&r| r as usize).collect() };
        let report = run_reduction(&m.name, &m.machine, &rs, seed, max_depth as usize, budget).map_err(domain)?;
        put_string(out, report.to_string())
    })
}

/// SVG picture of `p` in the default style.
///
/// # Safety
/// Handles must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hd_render_svg(p: *const HdPatch, ts: *const HdTileSet, out: *mut *mut c_char) -> HdStatus {
    guard(|| {
        let svg = render_svg(&handle(p)?.0, &handle(ts)?.0, &RenderStyle::default()).map_err(domain)?;
        put_string(out, svg)
    })
}
