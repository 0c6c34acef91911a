//! C ABI over `noclick-core`.
//!
//! Every function returns a [`NoclickStatus`]; on failure the message is
//! kept per thread and read back with [`noclick_last_error`]. Configs and
//! records are opaque heap handles owned by the caller.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use noclick_core::mpemba::{CriterionVerdict, CrossingKind};
use noclick_core::run::{self, ParamSet, ProtocolKind, RunConfig, RunRecord};
use noclick_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoclickStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    InvalidArgument = 4,
    Numerical = 5,
    Io = 6,
    OutOfRange = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoclickProtocol {
    Xy = 0,
    Ssh = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoclickParam {
    Kappa = 0,
    H = 1,
    HEv = 2,
    Gamma = 3,
}

/// One time-series sample. Oracle fields are NaN when the oracle is off.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NoclickRow {
    pub t: f64,
    pub s_n: f64,
    pub ds_n: f64,
    pub z_residual: f64,
    pub oracle_s_n: f64,
    pub oracle_ds_n: f64,
}

/// Crossing summary. `t_m` is NaN without a crossing; `verdict` is -1 when
/// no criterion was available, else 0 consistent, 1 inconsistent, 2 mixed.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NoclickCrossing {
    pub crossed: bool,
    pub t_m: f64,
    pub crossings: u32,
    pub equal_curves: bool,
    pub verdict: i32,
}

pub struct NoclickConfig(RunConfig);

pub struct NoclickRecord(RunRecord);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> NoclickStatus {
    match e {
        Error::Config { .. } | Error::Json(_) => NoclickStatus::Config,
        Error::Invalid(_) | Error::Domain(_) => NoclickStatus::InvalidArgument,
        Error::Io(_) | Error::Csv(_) => NoclickStatus::Io,
        Error::RemovableSingularity { .. }
        | Error::DegenerateGround { .. }
        | Error::NormUnderflow { .. }
        | Error::Quadrature { .. }
        | Error::Linalg(_) => NoclickStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), NoclickStatus>) -> NoclickStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NoclickStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            NoclickStatus::Panic
        }
    }
}

fn fail(e: Error) -> NoclickStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn null(what: &str) -> NoclickStatus {
    set_error(&format!("{what} is null"));
    NoclickStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, NoclickStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(&format!("{what} is not UTF-8"));
        NoclickStatus::InvalidUtf8
    })
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, NoclickStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn handle_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, NoclickStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

fn into_c_string(s: String) -> Result<*mut c_char, NoclickStatus> {
    CString::new(s).map(CString::into_raw).map_err(|_| {
        set_error("output contains a NUL byte");
        NoclickStatus::Io
    })
}

/// Copies the last error of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn noclick_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let bytes = e.borrow();
        let bytes = bytes.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Version of the output schema, static storage.
#[no_mangle]
pub extern "C" fn noclick_schema() -> *const c_char {
    c"noclick-run/v1".as_ptr()
}

/// New config with default grids and no parameters set. `protocol` is a
/// [`NoclickProtocol`] value.
///
/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn noclick_config_new(protocol: u32, ell: u32, out: *mut *mut NoclickConfig) -> NoclickStatus {
    guard(|| {
        let out = handle_mut(out, "out")?;
        let kind = match protocol {
            p if p == NoclickProtocol::Xy as u32 => ProtocolKind::Xy,
            p if p == NoclickProtocol::Ssh as u32 => ProtocolKind::Ssh,
            p => return Err(fail(Error::config("protocol", format!("unknown protocol code {p}")))),
        };
        let c = RunConfig::new(kind, ParamSet::default(), ell as usize);
        *out = Box::into_raw(Box::new(NoclickConfig(c)));
        Ok(())
    })
}

/// Parses a JSON run configuration (same schema as the CLI `--config`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn noclick_config_from_json(json: *const c_char, out: *mut *mut NoclickConfig) -> NoclickStatus {
    guard(|| {
        let out = handle_mut(out, "out")?;
        let text = str_arg(json, "json")?;
        let c = RunConfig::from_json(text).map_err(fail)?;
        *out = Box::into_raw(Box::new(NoclickConfig(c)));
        Ok(())
    })
}

/// Sets one physical parameter (a [`NoclickParam`] value); `second`
/// selects the crossing partner.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn noclick_config_set_param(
    cfg: *mut NoclickConfig,
    second: bool,
    param: u32,
    value: f64,
) -> NoclickStatus {
    guard(|| {
        let c = &mut handle_mut(cfg, "cfg")?.0;
        let set = if second { c.params_b.get_or_insert(c.params) } else { &mut c.params };
        let slot = match param {
            p if p == NoclickParam::Kappa as u32 => &mut set.kappa,
            p if p == NoclickParam::H as u32 => &mut set.h,
            p if p == NoclickParam::HEv as u32 => &mut set.h_ev,
            p if p == NoclickParam::Gamma as u32 => &mut set.gamma,
            p => return Err(fail(Error::config("param", format!("unknown parameter code {p}")))),
        };
        *slot = Some(value);
        Ok(())
    })
}

/// Sets `t_max`, `dt`, the momentum count and the α-node count
/// (0 keeps the default for `n_alpha`).
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn noclick_config_set_grid(
    cfg: *mut NoclickConfig,
    t_max: f64,
    dt: f64,
    nk: u32,
    n_alpha: u32,
) -> NoclickStatus {
    guard(|| {
        let c = &mut handle_mut(cfg, "cfg")?.0;
        c.t_max = Some(t_max);
        c.dt = dt;
        c.nk = nk as usize;
        c.n_alpha = (n_alpha > 0).then_some(n_alpha as usize);
        Ok(())
    })
}

/// Switches to a ring of `l` sites (0 means thermodynamic) and toggles the
/// exact-diagonalization oracle.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn noclick_config_set_finite(cfg: *mut NoclickConfig, l: u32, oracle: bool) -> NoclickStatus {
    guard(|| {
        let c = &mut handle_mut(cfg, "cfg")?.0;
        c.finite_l = (l > 0).then_some(l as usize);
        c.oracle = oracle;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn noclick_config_set_renyi(cfg: *mut NoclickConfig, n: u32) -> NoclickStatus {
    guard(|| {
        handle_mut(cfg, "cfg")?.0.n = n;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn noclick_config_free(cfg: *mut NoclickConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn noclick_run_timeseries(
    cfg: *const NoclickConfig,
    out: *mut *mut NoclickRecord,
) -> NoclickStatus {
    guard(|| {
        let c = &handle(cfg, "cfg")?.0;
        let out = handle_mut(out, "out")?;
        let r = run::run_timeseries(c).map_err(fail)?;
        *out = Box::into_raw(Box::new(NoclickRecord(r)));
        Ok(())
    })
}

/// Runs both parameter sets of `cfg` and analyses their crossing.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn noclick_run_crossing(
    cfg: *const NoclickConfig,
    out: *mut *mut NoclickRecord,
) -> NoclickStatus {
    guard(|| {
        let c = &handle(cfg, "cfg")?.0;
        let out = handle_mut(out, "out")?;
        let r = run::run_crossing(c).map_err(fail)?;
        *out = Box::into_raw(Box::new(NoclickRecord(r)));
        Ok(())
    })
}

/// Number of rows; `series` 1 selects the crossing partner (0 when absent).
///
/// # Safety
/// `rec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn noclick_record_len(rec: *const NoclickRecord, series: u32) -> usize {
    match rec.as_ref() {
        Some(r) => rows_of(&r.0, series).map_or(0, <[_]>::len),
        None => 0,
    }
}

fn rows_of(r: &RunRecord, series: u32) -> Option<&[run::Row]> {
    match series {
        0 => Some(&r.rows),
        1 => r.rows_b.as_deref(),
        _ => None,
    }
}

/// # Safety
/// `rec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn noclick_record_row(
    rec: *const NoclickRecord,
    series: u32,
    index: usize,
    out: *mut NoclickRow,
) -> NoclickStatus {
    guard(|| {
        let r = &handle(rec, "rec")?.0;
        let out = handle_mut(out, "out")?;
        let row = rows_of(r, series).and_then(|rows| rows.get(index)).ok_or_else(|| {
            set_error(&format!("no row {index} in series {series}"));
            NoclickStatus::OutOfRange
        })?;
        *out = NoclickRow {
            t: row.t,
            s_n: row.s_n,
            ds_n: row.ds_n,
            z_residual: row.z_residual,
            oracle_s_n: row.oracle_s_n.unwrap_or(f64::NAN),
            oracle_ds_n: row.oracle_ds_n.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Largest |Gaussian − exact| over the series; NaN without the oracle.
///
/// # Safety
/// `rec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn noclick_record_oracle_deviation(rec: *const NoclickRecord) -> f64 {
    rec.as_ref().and_then(|r| r.0.analysis.oracle_max_deviation).unwrap_or(f64::NAN)
}

/// # Safety
/// `rec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn noclick_record_crossing(
    rec: *const NoclickRecord,
    out: *mut NoclickCrossing,
) -> NoclickStatus {
    guard(|| {
        let r = &handle(rec, "rec")?.0;
        let out = handle_mut(out, "out")?;
        let x = r.crossing.as_ref().ok_or_else(|| {
            set_error("record has no crossing analysis");
            NoclickStatus::InvalidArgument
        })?;
        *out = NoclickCrossing {
            crossed: x.report.crossed,
            t_m: x.report.t_m.unwrap_or(f64::NAN),
            crossings: x.report.crossing_times.len() as u32,
            equal_curves: x.report.kind == CrossingKind::EqualCurves,
            verdict: match x.report.criterion_verdict {
                None => -1,
                Some(CriterionVerdict::Consistent) => 0,
                Some(CriterionVerdict::Inconsistent) => 1,
                Some(CriterionVerdict::Mixed) => 2,
            },
        };
        Ok(())
    })
}

/// CSV v1 of one series; free with [`noclick_string_free`].
///
/// # Safety
/// `rec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn noclick_record_to_csv(
    rec: *const NoclickRecord,
    series: u32,
    out: *mut *mut c_char,
) -> NoclickStatus {
    guard(|| {
        let r = &handle(rec, "rec")?.0;
        let out = handle_mut(out, "out")?;
        let rows = rows_of(r, series).ok_or_else(|| {
            set_error(&format!("no series {series}"));
            NoclickStatus::OutOfRange
        })?;
        let mut buf = Vec::new();
        run::write_csv(rows, &mut buf).map_err(fail)?;
        *out = into_c_string(String::from_utf8(buf).expect("csv writer emits UTF-8"))?;
        Ok(())
    })
}

/// Full JSON record; free with [`noclick_string_free`].
///
/// # Safety
/// `rec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn noclick_record_to_json(rec: *const NoclickRecord, out: *mut *mut c_char) -> NoclickStatus {
    guard(|| {
        let r = &handle(rec, "rec")?.0;
        let out = handle_mut(out, "out")?;
        *out = into_c_string(run::to_json(r).map_err(fail)?)?;
        Ok(())
    })
}

/// # Safety
/// `rec` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn noclick_record_free(rec: *mut NoclickRecord) {
    if !rec.is_null() {
        drop(Box::from_raw(rec));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn noclick_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
