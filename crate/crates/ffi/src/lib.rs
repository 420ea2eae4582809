//! C ABI over `heatwalk`.
//!
//! Every fallible call returns an [`HwStatus`] and writes results through out-pointers; the
//! message of the most recent failure on the calling thread is available from
//! [`hw_last_error`]. Terminal conditions and q-tables are opaque handles owned by the caller
//! and released with their `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use heatwalk::bridge::{build_qtable, QBudget};
use heatwalk::exact_heat::{u_exact, HeatParams, QuadratureSpec};
use heatwalk::exit_mc::estimators::tail_bound_rhs;
use heatwalk::exit_mc::tau::sample_tau_unit;
use heatwalk::exit_mc::RngStream;
use heatwalk::lab::{self, McBudget};
use heatwalk::lattice::{total_error, un_binomial, un_recursion, LatticeParams};
use heatwalk::projections::QTable;
use heatwalk::terminal::{self, TerminalCondition};
use heatwalk::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    TimeOutOfRange = 3,
    Config = 4,
    Io = 5,
    WindowTooSmall = 6,
    /// Quadrature tolerance, series convergence or divergent tail norm.
    Numerical = 7,
    InvalidUtf8 = 8,
    Panic = 99,
}

/// Opaque terminal condition.
pub struct HwTerminal(TerminalCondition);

/// Opaque q-table.
pub struct HwQTable(QTable);

/// One error decomposition; `closes` is 1 when `|residual| <= tolerance`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HwErrorReport {
    pub n_theta: usize,
    pub total: f64,
    pub adj: f64,
    pub loc: f64,
    pub loc_uncertainty: f64,
    pub glob: f64,
    pub glob_uncertainty: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub closes: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> HwStatus {
    match e {
        Error::InvalidParameter(_) => HwStatus::InvalidParameter,
        Error::TimeOutOfRange { .. } => HwStatus::TimeOutOfRange,
        Error::Config(_) => HwStatus::Config,
        Error::Io(_) => HwStatus::Io,
        Error::WindowTooSmall(_) => HwStatus::WindowTooSmall,
        Error::ToleranceNotMet { .. } | Error::SeriesNotConverged { .. } | Error::Divergent { .. } => HwStatus::Numerical,
    }
}

enum Fail {
    Null,
    Utf8,
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f`, mapping errors and panics to a status and recording the message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HwStatus::Ok,
        Ok(Err(Fail::Null)) => {
            set_last_error("null pointer argument");
            HwStatus::NullPointer
        }
        Ok(Err(Fail::Utf8)) => {
            set_last_error("string argument is not valid UTF-8");
            HwStatus::InvalidUtf8
        }
        Ok(Err(Fail::Lib(e))) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            HwStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null);
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Utf8)
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null)
}

unsafe fn terminal<'a>(g: *const HwTerminal) -> Result<&'a TerminalCondition, Fail> {
    g.as_ref().map(|h| &h.0).ok_or(Fail::Null)
}

fn lattice(n: usize, horizon: f64, sigma: f64) -> Result<LatticeParams, Fail> {
    Ok(LatticeParams::new(n, horizon, sigma)?)
}

/// Message of the last failed call on this thread; empty if none. Valid until the next call
/// on the same thread.
#[no_mangle]
pub extern "C" fn hw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Looks up a built-in terminal condition by name.
///
/// # Safety
/// `name` must be a NUL-terminated string; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_terminal_catalog(name: *const c_char, out_handle: *mut *mut HwTerminal) -> HwStatus {
    guard(|| {
        let slot = out(out_handle)?;
        let name = str_arg(name)?;
        let g = terminal::catalog(name).ok_or_else(|| Error::Config(format!("unknown catalog entry `{name}`")))?;
        *slot = Box::into_raw(Box::new(HwTerminal(g)));
        Ok(())
    })
}

/// Parses a terminal condition from TOML text.
///
/// # Safety
/// `text` must be a NUL-terminated string; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_terminal_from_toml(text: *const c_char, out_handle: *mut *mut HwTerminal) -> HwStatus {
    guard(|| {
        let slot = out(out_handle)?;
        let g = terminal::from_toml_str(str_arg(text)?)?;
        *slot = Box::into_raw(Box::new(HwTerminal(g)));
        Ok(())
    })
}

/// Loads a terminal condition from a `.toml` or `.json` file.
///
/// # Safety
/// `path` must be a NUL-terminated string; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_terminal_load(path: *const c_char, out_handle: *mut *mut HwTerminal) -> HwStatus {
    guard(|| {
        let slot = out(out_handle)?;
        let g = terminal::load(Path::new(str_arg(path)?))?;
        *slot = Box::into_raw(Box::new(HwTerminal(g)));
        Ok(())
    })
}

/// # Safety
/// `g` must come from one of the `hw_terminal_*` constructors and not be freed yet; null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn hw_terminal_free(g: *mut HwTerminal) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// `g(x)`.
///
/// # Safety
/// `g` must be a live handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_terminal_eval(g: *const HwTerminal, x: f64, out_value: *mut f64) -> HwStatus {
    guard(|| {
        *out(out_value)? = terminal(g)?.evaluate(x);
        Ok(())
    })
}

/// Exact solution `u(t, x)` of the backward heat equation with terminal condition `g` at `T`.
///
/// # Safety
/// `g` must be a live handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_u_exact(
    g: *const HwTerminal,
    t: f64,
    x: f64,
    horizon: f64,
    sigma: f64,
    out_value: *mut f64,
) -> HwStatus {
    guard(|| {
        let slot = out(out_value)?;
        *slot = u_exact(terminal(g)?, t, x, &HeatParams::new(horizon, sigma)?, &QuadratureSpec::default())?;
        Ok(())
    })
}

/// Scheme value `u^n(t, x)` from the closed binomial sum.
///
/// # Safety
/// `g` must be a live handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_un_binomial(
    g: *const HwTerminal,
    t: f64,
    x: f64,
    n: usize,
    horizon: f64,
    sigma: f64,
    out_value: *mut f64,
) -> HwStatus {
    guard(|| {
        let slot = out(out_value)?;
        *slot = un_binomial(terminal(g)?, t, x, &lattice(n, horizon, sigma)?)?;
        Ok(())
    })
}

/// Scheme value `u^n(t, x)` from the backward recursion.
///
/// # Safety
/// `g` must be a live handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_un_recursion(
    g: *const HwTerminal,
    t: f64,
    x: f64,
    n: usize,
    horizon: f64,
    sigma: f64,
    out_value: *mut f64,
) -> HwStatus {
    guard(|| {
        let slot = out(out_value)?;
        *slot = un_recursion(terminal(g)?, t, x, &lattice(n, horizon, sigma)?)?;
        Ok(())
    })
}

/// `u^n(t, x) - u(t, x)`.
///
/// # Safety
/// `g` must be a live handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_total_error(
    g: *const HwTerminal,
    t: f64,
    x: f64,
    n: usize,
    horizon: f64,
    sigma: f64,
    out_value: *mut f64,
) -> HwStatus {
    guard(|| {
        let slot = out(out_value)?;
        *slot = total_error(terminal(g)?, t, x, &lattice(n, horizon, sigma)?, &QuadratureSpec::default())?;
        Ok(())
    })
}

/// Simulates a q-table on `[0, max(h, 8 sigma sqrt theta)]` at pitch `h/8`.
///
/// # Safety
/// Out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_qtable_build(
    h: f64,
    theta: f64,
    sigma: f64,
    paths: usize,
    steps: usize,
    seed: u64,
    out_handle: *mut *mut HwQTable,
) -> HwStatus {
    guard(|| {
        let slot = out(out_handle)?;
        let qt = build_qtable(h, theta, sigma, &QBudget { paths, steps, seed })?;
        *slot = Box::into_raw(Box::new(HwQTable(qt)));
        Ok(())
    })
}

/// Loads a q-table saved by the CLI (`bridge --qtable-out`).
///
/// # Safety
/// `path` must be a NUL-terminated string; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_qtable_load(path: *const c_char, out_handle: *mut *mut HwQTable) -> HwStatus {
    guard(|| {
        let slot = out(out_handle)?;
        let qt = QTable::load(Path::new(str_arg(path)?))?;
        *slot = Box::into_raw(Box::new(HwQTable(qt)));
        Ok(())
    })
}

/// Interpolated `q(y)`.
///
/// # Safety
/// `qt` must be a live handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_qtable_q(qt: *const HwQTable, y: f64, out_value: *mut f64) -> HwStatus {
    guard(|| {
        let slot = out(out_value)?;
        *slot = qt.as_ref().ok_or(Fail::Null)?.0.q(y);
        Ok(())
    })
}

/// # Safety
/// `qt` must come from `hw_qtable_build` or `hw_qtable_load` and not be freed yet; null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn hw_qtable_free(qt: *mut HwQTable) {
    if !qt.is_null() {
        drop(Box::from_raw(qt));
    }
}

/// Splits `u^n(t, x) - u(t, x)` into adjustment, local and global parts. `qt` may be null, in
/// which case a table is simulated with `q_paths` bridges per grid point.
///
/// # Safety
/// `g` must be a live handle, `qt` null or a live handle, `out_report` writable.
#[no_mangle]
pub unsafe extern "C" fn hw_decompose(
    g: *const HwTerminal,
    t: f64,
    x: f64,
    n: usize,
    horizon: f64,
    sigma: f64,
    paths: usize,
    seed: u64,
    q_paths: usize,
    qt: *const HwQTable,
    out_report: *mut HwErrorReport,
) -> HwStatus {
    guard(|| {
        let slot = out(out_report)?;
        let g = terminal(g)?;
        let lp = lattice(n, horizon, sigma)?;
        let budget = McBudget { paths, seed, q_paths, ..McBudget::default() };
        let qt = qt.as_ref().map(|q| &q.0);
        let r = lab::decompose(g, t, x, &lp, &budget, qt, &QuadratureSpec::default())?;
        *slot = HwErrorReport {
            n_theta: r.n_theta,
            total: r.total,
            adj: r.adj,
            loc: r.loc.value,
            loc_uncertainty: r.loc.uncertainty,
            glob: r.glob.value,
            glob_uncertainty: r.glob.uncertainty,
            residual: r.residual,
            tolerance: r.tolerance,
            closes: i32::from(r.closes),
        };
        Ok(())
    })
}

/// Fills `buf[0..len]` with exit times of `(-1, 1)` by a standard Brownian motion.
///
/// # Safety
/// `buf` must point to `len` writable doubles (may be null when `len == 0`).
#[no_mangle]
pub unsafe extern "C" fn hw_sample_exit_times(seed: u64, stream: u64, buf: *mut f64, len: usize) -> HwStatus {
    guard(|| {
        if len == 0 {
            return Ok(());
        }
        if buf.is_null() {
            return Err(Fail::Null);
        }
        let dst = std::slice::from_raw_parts_mut(buf, len);
        let mut rng = RngStream::new(seed, stream).rng();
        for v in dst {
            *v = sample_tau_unit(&mut rng);
        }
        Ok(())
    })
}

/// Upper and lower tail bounds for `J` at `n_theta (1 +- delta)`.
///
/// # Safety
/// `upper` and `lower` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hw_tail_bound(delta: f64, n_theta: usize, upper: *mut f64, lower: *mut f64) -> HwStatus {
    guard(|| {
        let (u, l) = (out(upper)?, out(lower)?);
        (*u, *l) = tail_bound_rhs(delta, n_theta)?;
        Ok(())
    })
}
