//! C ABI for `wolffkit`.
//!
//! Objects cross the boundary as opaque handles created by `wk_*_new` or
//! `wk_*_from_json` and released by the matching `wk_*_free`. Every fallible
//! call returns a [`WkStatus`]; on failure `wk_last_error` yields a message
//! owned by the calling thread and valid until its next failing call.
//! Strings returned through `out` parameters are released with
//! `wk_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wolffkit::input::{grid_function_from_str, measure_from_str, params_from_str};
use wolffkit::measures::Measure;
use wolffkit::oracles::radial_plap_solution;
use wolffkit::params::{cp, iteration_constants, make_params, Params};
use wolffkit::potentials::{dyadic_wolff, riesz_truncated, wolff_truncated, GenerationWindow};
use wolffkit::solver::{picard_solve, SolveOptions};
use wolffkit::verifiers::{pointwise_condition, PointwiseConfig};
use wolffkit::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    Regime = 5,
    Config = 6,
    NonConvergence = 7,
    Divergence = 8,
    Unsupported = 9,
    Panic = 10,
}

/// Opaque exponent bundle.
pub struct WkParams(Params);

/// Opaque nonnegative measure.
pub struct WkMeasure(Measure);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> WkStatus {
    match e {
        Error::Regime(_) => WkStatus::Regime,
        Error::Validation(_) => WkStatus::Validation,
        Error::Config(_) => WkStatus::Config,
        Error::NonConvergence { .. } => WkStatus::NonConvergence,
        Error::Divergence { .. } => WkStatus::Divergence,
        Error::Unsupported(_) => WkStatus::Unsupported,
        Error::Parse { .. } => WkStatus::Parse,
    }
}

enum Fail {
    Null(&'static str),
    Utf8,
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> WkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WkStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            WkStatus::NullPointer
        }
        Ok(Err(Fail::Utf8)) => {
            set_error("string is not valid UTF-8".into());
            WkStatus::InvalidUtf8
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            WkStatus::Panic
        }
    }
}

unsafe fn text<'a>(s: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| Fail::Utf8)
}

unsafe fn handle<'a, T>(h: *const T, what: &'static str) -> Result<&'a T, Fail> {
    h.as_ref().ok_or(Fail::Null(what))
}

unsafe fn point<'a>(x: *const f64, len: usize) -> Result<&'a [f64], Fail> {
    if x.is_null() {
        return Err(Fail::Null("x"));
    }
    Ok(std::slice::from_raw_parts(x, len))
}

unsafe fn put<T>(out: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    *out = v;
    Ok(())
}

/// Message of the last failure on this thread, or null.
#[no_mangle]
pub extern "C" fn wk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` is null or a pointer obtained from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Quasilinear exponents `(n, alpha, p, q)`.
///
/// # Safety
/// `out` is a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn wk_params_new(n: usize, alpha: f64, p: f64, q: f64, out: *mut *mut WkParams) -> WkStatus {
    guard(|| {
        let params = make_params(n, alpha, p, q)?;
        put(out, Box::into_raw(Box::new(WkParams(params))), "out")
    })
}

/// Exponents from `n=3,p=2,q=5` or `n=5,k=1,q=5`.
///
/// # Safety
/// `descr` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn wk_params_parse(descr: *const c_char, out: *mut *mut WkParams) -> WkStatus {
    guard(|| {
        let params = params_from_str(text(descr, "descr")?)?;
        put(out, Box::into_raw(Box::new(WkParams(params))), "out")
    })
}

/// # Safety
/// `p` is null or a handle from `wk_params_new`/`wk_params_parse`.
#[no_mangle]
pub unsafe extern "C" fn wk_params_free(p: *mut WkParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Measure from its JSON form; `n = 0` infers the dimension.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn wk_measure_from_json(json: *const c_char, n: usize, out: *mut *mut WkMeasure) -> WkStatus {
    guard(|| {
        let dim = if n == 0 { None } else { Some(n) };
        let mu = measure_from_str(text(json, "json")?, dim)?;
        put(out, Box::into_raw(Box::new(WkMeasure(mu))), "out")
    })
}

/// # Safety
/// `m` is null or a handle from `wk_measure_from_json`.
#[no_mangle]
pub unsafe extern "C" fn wk_measure_free(m: *mut WkMeasure) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` is a live measure handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn wk_measure_total_mass(m: *const WkMeasure, out: *mut f64) -> WkStatus {
    guard(|| {
        let mu = handle(m, "measure")?;
        put(out, mu.0.total_mass(), "out")
    })
}

/// `W^r_{alpha,p} mu(x)`; `r` may be `INFINITY` and the result may be `INFINITY`.
///
/// # Safety
/// Handles are live; `x` points to `len` reals; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn wk_wolff_truncated(
    m: *const WkMeasure,
    params: *const WkParams,
    x: *const f64,
    len: usize,
    r: f64,
    out: *mut f64,
) -> WkStatus {
    guard(|| {
        let mu = handle(m, "measure")?;
        let p = handle(params, "params")?;
        let v = wolff_truncated(&mu.0, point(x, len)?, &p.0, r)?;
        put(out, v.value(), "out")
    })
}

/// `I^r_{alpha p} mu(x)`.
///
/// # Safety
/// Handles are live; `x` points to `len` reals; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn wk_riesz_truncated(
    m: *const WkMeasure,
    params: *const WkParams,
    x: *const f64,
    len: usize,
    r: f64,
    out: *mut f64,
) -> WkStatus {
    guard(|| {
        let mu = handle(m, "measure")?;
        let p = handle(params, "params")?;
        let v = riesz_truncated(&mu.0, point(x, len)?, p.0.alpha() * p.0.p(), r)?;
        put(out, v.value(), "out")
    })
}

/// Dyadic Wolff potential over generations `g_min..=g_max`.
///
/// # Safety
/// Handles are live; `x` points to `len` reals; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn wk_dyadic_wolff(
    m: *const WkMeasure,
    params: *const WkParams,
    x: *const f64,
    len: usize,
    g_min: i32,
    g_max: i32,
    out: *mut f64,
) -> WkStatus {
    guard(|| {
        let mu = handle(m, "measure")?;
        let p = handle(params, "params")?;
        let w = GenerationWindow::new(g_min, g_max)?;
        put(out, dyadic_wolff(&mu.0, point(x, len)?, &p.0, &w)?, "out")
    })
}

/// `c(p) = max{1, 2^{p'-2}}`.
#[no_mangle]
pub extern "C" fn wk_cp(p: f64) -> f64 {
    cp(p)
}

/// Closed-form `eps` and `x0` of the Picard scheme for the constant `c`.
///
/// # Safety
/// `params` is live; `eps` and `x0` are writable.
#[no_mangle]
pub unsafe extern "C" fn wk_iteration_constants(
    params: *const WkParams,
    c: f64,
    eps: *mut f64,
    x0: *mut f64,
) -> WkStatus {
    guard(|| {
        let p = handle(params, "params")?;
        let k = iteration_constants(&p.0, c)?;
        put(eps, k.eps, "eps")?;
        put(x0, k.x0, "x0")
    })
}

/// Best constant of the iterated pointwise condition over `count` points
/// stored contiguously in `xs`.
///
/// # Safety
/// Handles are live; `xs` holds `count * n` reals; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn wk_pointwise_condition(
    m: *const WkMeasure,
    params: *const WkParams,
    xs: *const f64,
    count: usize,
    r: f64,
    out: *mut f64,
) -> WkStatus {
    guard(|| {
        let mu = handle(m, "measure")?;
        let p = handle(params, "params")?;
        let n = p.0.n();
        let flat = point(xs, count * n)?;
        let pts: Vec<Vec<f64>> = flat.chunks(n).map(<[f64]>::to_vec).collect();
        let rep = pointwise_condition(&mu.0, &pts, &p.0, r, &PointwiseConfig::default())?;
        put(out, rep.best_constant, "out")
    })
}

/// Closed-form radial solution `c |x|^exponent` of `-Δ_p u = u^q`.
///
/// # Safety
/// `params` is live; `c` and `exponent` are writable.
#[no_mangle]
pub unsafe extern "C" fn wk_radial_plap_solution(
    params: *const WkParams,
    c: *mut f64,
    exponent: *mut f64,
) -> WkStatus {
    guard(|| {
        let p = handle(params, "params")?;
        let s = radial_plap_solution(&p.0)?;
        put(c, s.c, "c")?;
        put(exponent, s.exponent, "exponent")
    })
}

/// Picard solve of `u = W(u^q) + eps f` for a grid function given as JSON;
/// writes the solution and certificate as a JSON string.
///
/// # Safety
/// `f_json` is a NUL-terminated string; `params` is live; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn wk_solve(
    f_json: *const c_char,
    params: *const WkParams,
    g_min: i32,
    g_max: i32,
    out: *mut *mut c_char,
) -> WkStatus {
    guard(|| {
        let p = handle(params, "params")?;
        let f = grid_function_from_str(text(f_json, "f_json")?)?;
        let w = GenerationWindow::new(g_min, g_max)?;
        let (u, cert) = picard_solve(&f, &p.0, &w, &SolveOptions::default())?;
        let doc = serde_json::json!({"solution": u, "certificate": cert});
        let s = wolffkit::json::to_string(&doc)?;
        let c = CString::new(s).map_err(|_| Fail::Utf8)?;
        put(out, c.into_raw(), "out")
    })
}
