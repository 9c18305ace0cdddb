//! C interface to plurilab.
//!
//! Every function returns a [`PlStatus`]; on failure the message is available
//! from [`pl_last_error`] on the same thread. Handles are opaque and owned by
//! the caller, who releases them with the matching `*_free` function. Strings
//! returned through `char **` are released with [`pl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use plurilab::catalog::{catalog_entries, catalog_params, scenario_entries};
use plurilab::geometry::{sample, ComplexPoint, GridDomain};
use plurilab::pipeline::{run_extension, PipelineParams, Scenario};
use plurilab::viscosity::{certify_psh, certify_subharmonic, Status};
use plurilab::{Error, Function, ScalarField, SingularSet};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Parse = 4,
    Numerical = 5,
    Internal = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlVerdict {
    Pass = 0,
    Fail = 1,
    Inconclusive = 2,
}

/// Grid samples of a closed-form function.
pub struct PlField {
    field: ScalarField,
}

/// Closed singular set.
pub struct PlSet {
    set: SingularSet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> PlStatus {
    match e {
        Error::Config(_) | Error::Argument(_) | Error::Domain(_) | Error::Stencil { .. } => {
            PlStatus::InvalidArgument
        }
        Error::Parse { .. } => PlStatus::Parse,
        Error::Sampling { .. }
        | Error::Convergence { .. }
        | Error::Selection(_)
        | Error::Estimation(_) => PlStatus::Numerical,
        Error::Internal(_) => PlStatus::Internal,
    }
}

struct Failure(PlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(PlStatus::Parse, e.to_string())
    }
}

/// Runs `body`, records any error or panic, and returns the status.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> PlStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PlStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            PlStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(PlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(PlStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|e| Failure(PlStatus::Internal, e.to_string()))
}

fn verdict(s: Status) -> PlVerdict {
    match s {
        Status::Pass => PlVerdict::Pass,
        Status::Fail => PlVerdict::Fail,
        Status::Inconclusive => PlVerdict::Inconclusive,
    }
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Samples `expr` on the grid of `points_per_axis^(2n)` nodes covering the
/// ball of radius `2 delta` around `center` (`2n` doubles, or null for the origin).
///
/// # Safety
/// `expr` must be a valid C string, `center` null or `2n` readable doubles,
/// `out_field` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_field_from_expr(
    expr: *const c_char,
    n: usize,
    center: *const f64,
    delta: f64,
    points_per_axis: usize,
    out_field: *mut *mut PlField,
) -> PlStatus {
    guard(|| {
        let slot = out(out_field, "out_field")?;
        *slot = ptr::null_mut();
        let f = Function::parse(text(expr, "expr")?)?;
        f.check_dimension(n)?;
        let center = if center.is_null() {
            ComplexPoint::origin(n)
        } else {
            ComplexPoint::new(std::slice::from_raw_parts(center, 2 * n).to_vec())?
        };
        let domain = GridDomain::new(n, center, delta, points_per_axis)?;
        let field = sample(&f, &domain)?;
        *slot = Box::into_raw(Box::new(PlField { field }));
        Ok(())
    })
}

/// # Safety
/// `field` must come from [`pl_field_from_expr`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pl_field_free(field: *mut PlField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// # Safety
/// `field` must be a live handle and `out_count` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_field_node_count(
    field: *const PlField,
    out_count: *mut usize,
) -> PlStatus {
    guard(|| {
        let f = field.as_ref().ok_or_else(|| null("field"))?;
        *out(out_count, "out_count")? = f.field.domain().node_count();
        Ok(())
    })
}

/// Copies the node values in row-major order into `buffer`, which must hold
/// exactly the node count.
///
/// # Safety
/// `field` must be a live handle and `buffer` hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pl_field_values(
    field: *const PlField,
    buffer: *mut f64,
    len: usize,
) -> PlStatus {
    guard(|| {
        let f = field.as_ref().ok_or_else(|| null("field"))?;
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        let values = f.field.values();
        if len != values.len() {
            return Err(Failure(
                PlStatus::InvalidArgument,
                format!("buffer holds {len} values, need {}", values.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buffer, len).copy_from_slice(values);
        Ok(())
    })
}

/// Mean-value test on every node whose circles fit; radii `h` and `2h`.
///
/// # Safety
/// `field` must be a live handle and `out_verdict` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_certify_subharmonic(
    field: *const PlField,
    seed: u64,
    out_verdict: *mut PlVerdict,
) -> PlStatus {
    guard(|| {
        let f = field.as_ref().ok_or_else(|| null("field"))?;
        let slot = out(out_verdict, "out_verdict")?;
        let v = certify_subharmonic(&f.field, &catalog_params(f.field.domain(), seed))?;
        *slot = verdict(v.status);
        Ok(())
    })
}

/// Complex-line mean-value test; nodes within `margin` of `set` are skipped.
/// A null `set` tests every node.
///
/// # Safety
/// `field` must be a live handle, `set` null or a live handle, `out_verdict` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_certify_psh(
    field: *const PlField,
    set: *const PlSet,
    margin: f64,
    seed: u64,
    out_verdict: *mut PlVerdict,
) -> PlStatus {
    guard(|| {
        let f = field.as_ref().ok_or_else(|| null("field"))?;
        let slot = out(out_verdict, "out_verdict")?;
        let empty = SingularSet::Empty;
        let s = set.as_ref().map_or(&empty, |s| &s.set);
        let v = certify_psh(&f.field, s, margin, &catalog_params(f.field.domain(), seed))?;
        *slot = verdict(v.status);
        Ok(())
    })
}

/// Parses a singular set from its JSON form.
///
/// # Safety
/// `json` must be a valid C string and `out_set` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_set_from_json(
    json: *const c_char,
    out_set: *mut *mut PlSet,
) -> PlStatus {
    guard(|| {
        let slot = out(out_set, "out_set")?;
        *slot = ptr::null_mut();
        let set: SingularSet = serde_json::from_str(text(json, "json")?)?;
        *slot = Box::into_raw(Box::new(PlSet { set }));
        Ok(())
    })
}

/// # Safety
/// `set` must come from [`pl_set_from_json`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pl_set_free(set: *mut PlSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Whether the point (`len` real coordinates) lies within `margin` of the set.
///
/// # Safety
/// `set` must be a live handle, `coords` hold `len` doubles, `out_inside` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_set_contains(
    set: *const PlSet,
    coords: *const f64,
    len: usize,
    margin: f64,
    out_inside: *mut bool,
) -> PlStatus {
    guard(|| {
        let s = set.as_ref().ok_or_else(|| null("set"))?;
        if coords.is_null() {
            return Err(null("coords"));
        }
        let slot = out(out_inside, "out_inside")?;
        let p = ComplexPoint::new(std::slice::from_raw_parts(coords, len).to_vec())?;
        *slot = s.set.contains(&p, margin)?;
        Ok(())
    })
}

/// Runs the extension pipeline on a JSON scenario; `params_json` may be null
/// for the defaults. The report is written to `out_json` as JSON.
///
/// # Safety
/// String arguments must be valid C strings (or null where allowed) and
/// `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_run_scenario(
    scenario_json: *const c_char,
    params_json: *const c_char,
    out_json: *mut *mut c_char,
) -> PlStatus {
    guard(|| {
        let slot = out(out_json, "out_json")?;
        *slot = ptr::null_mut();
        let scenario: Scenario = serde_json::from_str(text(scenario_json, "scenario_json")?)?;
        let params: PipelineParams = if params_json.is_null() {
            PipelineParams::default()
        } else {
            serde_json::from_str(text(params_json, "params_json")?)?
        };
        let report = run_extension(&scenario, &params)?;
        *slot = to_c_string(serde_json::to_string(&report)?)?;
        Ok(())
    })
}

/// Catalog entries and the scenario table for dimension `n`, as JSON.
///
/// # Safety
/// `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_catalog_json(n: usize, out_json: *mut *mut c_char) -> PlStatus {
    guard(|| {
        let slot = out(out_json, "out_json")?;
        *slot = ptr::null_mut();
        if !(1..=4).contains(&n) {
            return Err(Failure(
                PlStatus::InvalidArgument,
                format!("n must be between 1 and 4, got {n}"),
            ));
        }
        let doc = serde_json::json!({
            "entries": catalog_entries(),
            "scenarios": scenario_entries(n),
        });
        *slot = to_c_string(doc.to_string())?;
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
