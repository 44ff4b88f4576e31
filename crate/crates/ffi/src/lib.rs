//! C interface to `bergman-lab`.
//!
//! Every function returns a [`BkStatus`]; on failure the message is kept per thread and can be
//! read with [`bk_last_error`]. Objects are opaque handles released by their `_free` function.
//! Complex numbers travel as interleaved `(re, im)` pairs of doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use bergman_lab::cli::{self, ExperimentConfig, Format, Report};
use bergman_lab::coefficients::compute_coefficients;
use bergman_lab::projective::{cp1_point_geometry, make_section_space, ProjectiveModel, SectionSpace, Selector};
use bergman_lab::{asymptotics, Error, C64};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    EmptySubspace = 3,
    FixedPoint = 4,
    Numerical = 5,
    Unsupported = 6,
    Config = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Projective examples.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BkModel {
    Cp1O2 = 0,
    Cp2O2LevelHalf = 1,
}

/// Which subspace of sections a kernel is built from.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BkSelector {
    Full = 0,
    Invariant = 1,
    /// Uses the `weight` argument.
    Weight = 2,
}

/// Opaque section space at a fixed level.
pub struct BkSectionSpace(SectionSpace);

/// Opaque experiment report.
pub struct BkReport(Report);

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| {
        let mut v = msg.into_bytes();
        v.retain(|&b| b != 0);
        *e.borrow_mut() = v;
    });
}

fn status_of(e: &Error) -> BkStatus {
    match e {
        Error::EmptySubspace => BkStatus::EmptySubspace,
        Error::FixedPoint => BkStatus::FixedPoint,
        Error::Unsupported(_) => BkStatus::Unsupported,
        Error::InvalidConfig(_) | Error::UnknownExperiment(_) | Error::Json(_) => BkStatus::Config,
        Error::Io(_) | Error::Csv(_) => BkStatus::Io,
        Error::IllConditioned(_) | Error::Quadrature(_) | Error::NonIntegrable(_) => BkStatus::Numerical,
        _ => BkStatus::InvalidArgument,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (BkStatus, String)>>(f: F) -> BkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BkStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            BkStatus::Panic
        }
    }
}

fn lib<T>(r: bergman_lab::Result<T>) -> Result<T, (BkStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (BkStatus, String) {
    (BkStatus::NullPointer, format!("`{what}` is null"))
}

fn bad(msg: impl Into<String>) -> (BkStatus, String) {
    (BkStatus::InvalidArgument, msg.into())
}

unsafe fn points(ptr: *const f64, n: usize, what: &str) -> Result<Vec<C64>, (BkStatus, String)> {
    if ptr.is_null() && n > 0 {
        return Err(null(what));
    }
    if n == 0 {
        return Ok(vec![]);
    }
    let raw = std::slice::from_raw_parts(ptr, 2 * n);
    Ok(raw.chunks(2).map(|c| C64::new(c[0], c[1])).collect())
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), (BkStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn put_c(out: *mut f64, v: C64) -> Result<(), (BkStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(v.re);
    out.add(1).write(v.im);
    Ok(())
}

// Enum arguments arrive as plain integers: an out-of-range C enum must not become a Rust enum.
fn model_of(m: i32) -> Result<ProjectiveModel, (BkStatus, String)> {
    match m {
        x if x == BkModel::Cp1O2 as i32 => Ok(ProjectiveModel::Cp1O2),
        x if x == BkModel::Cp2O2LevelHalf as i32 => Ok(ProjectiveModel::Cp2O2LevelHalf),
        _ => Err(bad(format!("unknown model code {m}"))),
    }
}

fn selector_of(s: i32, weight: i64) -> Result<Selector, (BkStatus, String)> {
    match s {
        x if x == BkSelector::Full as i32 => Ok(Selector::Full),
        x if x == BkSelector::Invariant as i32 => Ok(Selector::Invariant),
        x if x == BkSelector::Weight as i32 => Ok(Selector::Weight(weight)),
        _ => Err(bad(format!("unknown selector code {s}"))),
    }
}

/// Copies `src` plus a terminating zero into `buf`; `needed` receives the full size.
unsafe fn copy_out(src: &[u8], buf: *mut c_char, cap: usize, needed: *mut usize) -> Result<(), (BkStatus, String)> {
    if !needed.is_null() {
        needed.write(src.len() + 1);
    }
    if buf.is_null() || cap < src.len() + 1 {
        return Err((BkStatus::BufferTooSmall, format!("need {} bytes", src.len() + 1)));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), buf as *mut u8, src.len());
    buf.add(src.len()).write(0);
    Ok(())
}

/// Library version as a static zero-terminated string.
#[no_mangle]
pub extern "C" fn bk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the last error message of this thread into `buf`.
///
/// # Safety
/// `buf` must hold `cap` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn bk_last_error(buf: *mut c_char, cap: usize, needed: *mut usize) -> BkStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    match copy_out(&msg, buf, cap, needed) {
        Ok(()) => BkStatus::Ok,
        Err((s, _)) => s,
    }
}

/// Builds the space of holomorphic sections at level `p`; `model` is a [`BkModel`] code.
///
/// # Safety
/// `out` must be a valid pointer; the handle is released with [`bk_section_space_free`].
#[no_mangle]
pub unsafe extern "C" fn bk_section_space_new(model: i32, p: u32, out: *mut *mut BkSectionSpace) -> BkStatus {
    guard(|| {
        if p > 100_000 {
            return Err(bad("level above 100000"));
        }
        let space = Box::new(BkSectionSpace(make_section_space(model_of(model)?, p)));
        put(out, Box::into_raw(space), "out")
    })
}

/// # Safety
/// `space` must come from [`bk_section_space_new`] and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn bk_section_space_free(space: *mut BkSectionSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Dimension of the full space and of its invariant part.
///
/// # Safety
/// `space` must be a live handle; either output may be null.
#[no_mangle]
pub unsafe extern "C" fn bk_section_space_dims(space: *const BkSectionSpace, dim: *mut usize, invariant_dim: *mut usize) -> BkStatus {
    guard(|| {
        let s = &space.as_ref().ok_or_else(|| null("space"))?.0;
        if !dim.is_null() {
            dim.write(s.dim());
        }
        if !invariant_dim.is_null() {
            invariant_dim.write(s.invariant_dimension());
        }
        Ok(())
    })
}

/// Bergman kernel of the subspace picked by the [`BkSelector`] code at chart points `u`, `v` (each `n` complex numbers,
/// `n` the complex dimension), in the unitary frame. Writes one complex number to `out`.
///
/// # Safety
/// `u`, `v` must hold `2n` doubles, `out` two.
#[no_mangle]
pub unsafe extern "C" fn bk_bergman_kernel(
    space: *const BkSectionSpace,
    selector: i32,
    weight: i64,
    u: *const f64,
    v: *const f64,
    n: usize,
    out: *mut f64,
) -> BkStatus {
    guard(|| {
        let s = &space.as_ref().ok_or_else(|| null("space"))?.0;
        if n != s.n {
            return Err(bad(format!("points need {} coordinates, got {n}", s.n)));
        }
        let (u, v) = (points(u, n, "u")?, points(v, n, "v")?);
        put_c(out, lib(s.bergman_kernel(selector_of(selector, weight)?, &u, &v))?)
    })
}

/// Average of the full kernel over the circle action, with `order` trapezoid nodes.
///
/// # Safety
/// As for [`bk_bergman_kernel`].
#[no_mangle]
pub unsafe extern "C" fn bk_group_average_kernel(
    space: *const BkSectionSpace,
    u: *const f64,
    v: *const f64,
    n: usize,
    order: usize,
    out: *mut f64,
) -> BkStatus {
    guard(|| {
        let s = &space.as_ref().ok_or_else(|| null("space"))?.0;
        if n != s.n || order == 0 {
            return Err(bad("wrong point length or zero order"));
        }
        let (u, v) = (points(u, n, "u")?, points(v, n, "v")?);
        put_c(out, lib(s.group_average_kernel(&u, &v, order))?)
    })
}

/// Rescaled invariant diagonal kernel on the zero level; `rest` holds the `n - 1` chart
/// coordinates after the first.
///
/// # Safety
/// `rest` must hold `2 * rest_len` doubles, `out` one.
#[no_mangle]
pub unsafe extern "C" fn bk_rescaled_diagonal(model: i32, p: u32, rest: *const f64, rest_len: usize, out: *mut f64) -> BkStatus {
    guard(|| {
        let rest = points(rest, rest_len, "rest")?;
        put(out, lib(asymptotics::rescaled_diagonal(model_of(model)?, p, &rest))?, "out")
    })
}

/// Second expansion coefficient at the origin of the sphere example: engine value and closed form.
///
/// # Safety
/// Each output must hold two doubles.
#[no_mangle]
pub unsafe extern "C" fn bk_cp1_second_coefficient(engine: *mut f64, closed: *mut f64) -> BkStatus {
    guard(|| {
        let r = lib(cp1_point_geometry().and_then(|g| compute_coefficients(&g, None)))?;
        put_c(engine, r.p2_zero_engine)?;
        put_c(closed, r.p2_zero_closed)
    })
}

/// Runs an experiment from a JSON configuration (same schema as the command line tool).
///
/// # Safety
/// `config_json` must be zero-terminated UTF-8; release the report with [`bk_report_free`].
#[no_mangle]
pub unsafe extern "C" fn bk_run_experiment(config_json: *const c_char, out: *mut *mut BkReport) -> BkStatus {
    guard(|| {
        if config_json.is_null() {
            return Err(null("config_json"));
        }
        let text = CStr::from_ptr(config_json).to_str().map_err(|_| bad("config is not UTF-8"))?;
        let cfg = lib(ExperimentConfig::from_json(text))?;
        let report = lib(cli::run_experiment(&cfg))?;
        put(out, Box::into_raw(Box::new(BkReport(report))), "out")
    })
}

/// # Safety
/// `report` must come from [`bk_run_experiment`] and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn bk_report_free(report: *mut BkReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of rows and whether every verdict passed (1) or not (0).
///
/// # Safety
/// `report` must be a live handle; either output may be null.
#[no_mangle]
pub unsafe extern "C" fn bk_report_summary(report: *const BkReport, rows: *mut usize, passed: *mut i32) -> BkStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        if !rows.is_null() {
            rows.write(r.rows.len());
        }
        if !passed.is_null() {
            passed.write(r.passed() as i32);
        }
        Ok(())
    })
}

/// Serialises the report as CSV (`json == 0`) or JSON into `buf`. With a null or short buffer the
/// call returns `BK_STATUS_BUFFER_TOO_SMALL` and `needed` still receives the size.
///
/// # Safety
/// `buf` must hold `cap` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn bk_report_write(report: *const BkReport, json: i32, buf: *mut c_char, cap: usize, needed: *mut usize) -> BkStatus {
    guard(|| {
        let r = &report.as_ref().ok_or_else(|| null("report"))?.0;
        let bytes = lib(cli::emit_report(r, if json != 0 { Format::Json } else { Format::Csv }))?;
        copy_out(&bytes, buf, cap, needed)
    })
}
