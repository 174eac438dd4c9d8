//! C ABI over the `graphbal` balance tests.
//!
//! Datasets and reports are opaque heap handles released with their `_free`
//! function. Every fallible call returns a `GbStatus`; on failure the message
//! is available from `gb_last_error_message` on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use graphbal::htest::{balance_test, BalanceConfig, Method, TestForm, TestReport};
use graphbal::io::{read_csv_dataset, to_canonical_json, CsvSchema};
use graphbal::nngraph::KnnBackend;
use graphbal::paths::PathMethod;
use graphbal::{Covariates, Dataset, Error, Metric};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    InvalidLabels = 3,
    Config = 4,
    Degenerate = 5,
    Capacity = 6,
    Domain = 7,
    Io = 8,
    Parse = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GbMethod {
    Knn = 0,
    Crossmatch = 1,
    Runs = 2,
    Ranks = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GbForm {
    /// Wald for knn, crossmatch and ranks; min for runs.
    Default = 0,
    Wald = 1,
    Max = 2,
    Min = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GbPath {
    GreedyEdge = 0,
    NnChain = 1,
    Hilbert = 2,
    Exact = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GbMetric {
    Euclidean = 0,
    StandardizedEuclidean = 1,
}

/// Test options; obtain defaults from `gb_config_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GbConfig {
    pub method: GbMethod,
    pub form: GbForm,
    /// Neighbours per unit for knn; 0 means floor(0.1 N).
    pub k: usize,
    pub path: GbPath,
    pub metric: GbMetric,
    pub n_mc: usize,
    pub permutation_draws: usize,
    pub seed: u64,
}

/// Opaque dataset handle.
pub struct GbDataset(Dataset);

/// Opaque test report handle.
pub struct GbReport(TestReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GbStatus {
    match e {
        Error::Input(_) | Error::ZeroVariance { .. } => GbStatus::InvalidInput,
        Error::Labels(_) => GbStatus::InvalidLabels,
        Error::Config(_) | Error::MissingColumn(_) => GbStatus::Config,
        Error::Degenerate(_) => GbStatus::Degenerate,
        Error::Capacity(_) => GbStatus::Capacity,
        Error::Domain(_) => GbStatus::Domain,
        Error::Io { .. } | Error::Write(_) => GbStatus::Io,
        Error::Parse { .. } | Error::Csv(_) | Error::Json(_) => GbStatus::Parse,
    }
}

/// Run `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (GbStatus, String)>) -> GbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GbStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            GbStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (GbStatus, String) {
    (status_of(&e), e.to_string())
}

fn null_err(what: &str) -> (GbStatus, String) {
    (GbStatus::NullPointer, format!("{what} is null"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (GbStatus, String)> {
    if p.is_null() {
        return Err(null_err(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (GbStatus::InvalidInput, format!("{what} is not UTF-8")))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn gb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn gb_config_default() -> GbConfig {
    let d = BalanceConfig::default();
    GbConfig {
        method: GbMethod::Knn,
        form: GbForm::Default,
        k: 0,
        path: GbPath::GreedyEdge,
        metric: GbMetric::Euclidean,
        n_mc: d.n_mc,
        permutation_draws: d.permutation_draws,
        seed: 0,
    }
}

/// Build a dataset from a row-major `rows` x `cols` covariate matrix and
/// 1-based group labels covering 1..G.
///
/// # Safety
/// `values` must point to `rows * cols` doubles, `labels` to `rows` integers,
/// and `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn gb_dataset_new(
    values: *const f64,
    rows: usize,
    cols: usize,
    labels: *const i64,
    out: *mut *mut GbDataset,
) -> GbStatus {
    guard(|| {
        if values.is_null() || labels.is_null() || out.is_null() {
            return Err(null_err("values, labels, or out"));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| (GbStatus::InvalidInput, "rows * cols overflows".to_string()))?;
        let v = std::slice::from_raw_parts(values, len).to_vec();
        let l = std::slice::from_raw_parts(labels, rows);
        let ds = Dataset::new(Covariates::new(v, rows, cols).map_err(lib_err)?, l).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(GbDataset(ds)));
        Ok(())
    })
}

/// Read a CSV file; every column except `group_column` is a covariate.
/// Labels are numbered 1..G by first appearance.
///
/// # Safety
/// `path` and `group_column` must be NUL-terminated strings and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gb_dataset_from_csv(
    path: *const c_char,
    group_column: *const c_char,
    seed: u64,
    out: *mut *mut GbDataset,
) -> GbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_err("out"));
        }
        let path = c_str(path, "path")?;
        let group = c_str(group_column, "group_column")?;
        let loaded = read_csv_dataset(path, &CsvSchema::new(group), seed).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(GbDataset(loaded.dataset)));
        Ok(())
    })
}

/// # Safety
/// `ds` must come from a `gb_dataset_*` constructor or be NULL.
#[no_mangle]
pub unsafe extern "C" fn gb_dataset_free(ds: *mut GbDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of units, or 0 for NULL.
///
/// # Safety
/// `ds` must be a live dataset handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn gb_dataset_n(ds: *const GbDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.n())
}

/// Number of groups, or 0 for NULL.
///
/// # Safety
/// `ds` must be a live dataset handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn gb_dataset_num_groups(ds: *const GbDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.num_groups())
}

fn to_balance(c: &GbConfig) -> (Method, TestForm, BalanceConfig) {
    let method = match c.method {
        GbMethod::Knn => Method::Knn,
        GbMethod::Crossmatch => Method::Crossmatch,
        GbMethod::Runs => Method::Runs,
        GbMethod::Ranks => Method::Ranks,
    };
    let form = match c.form {
        GbForm::Default => method.default_form(),
        GbForm::Wald => TestForm::Wald,
        GbForm::Max => TestForm::Max,
        GbForm::Min => TestForm::Min,
    };
    let path_method = match c.path {
        GbPath::GreedyEdge => PathMethod::GreedyEdge,
        GbPath::NnChain => PathMethod::NnChain,
        GbPath::Hilbert => PathMethod::Hilbert,
        GbPath::Exact => PathMethod::Exact,
    };
    let metric = match c.metric {
        GbMetric::Euclidean => Metric::Euclidean,
        GbMetric::StandardizedEuclidean => Metric::StandardizedEuclidean,
    };
    let config = BalanceConfig {
        k: (c.k > 0).then_some(c.k),
        path_method,
        metric,
        knn_backend: KnnBackend::KdTree,
        n_mc: c.n_mc,
        permutation_draws: c.permutation_draws,
        seed: c.seed,
    };
    (method, form, config)
}

/// Run one balance test.
///
/// # Safety
/// `ds` must be a live dataset handle, `config` readable, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gb_balance_test(
    ds: *const GbDataset,
    config: *const GbConfig,
    out: *mut *mut GbReport,
) -> GbStatus {
    guard(|| {
        let (Some(ds), Some(config)) = (ds.as_ref(), config.as_ref()) else {
            return Err(null_err("dataset or config"));
        };
        if out.is_null() {
            return Err(null_err("out"));
        }
        let (method, form, cfg) = to_balance(config);
        let report = balance_test(&ds.0, method, form, &cfg).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(GbReport(report)));
        Ok(())
    })
}

/// # Safety
/// `r` must be a live report handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn gb_report_p_value(r: *const GbReport) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.p_value)
}

/// # Safety
/// `r` must be a live report handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn gb_report_statistic(r: *const GbReport) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.statistic)
}

/// Full report as canonical JSON; release with `gb_string_free`.
///
/// # Safety
/// `r` must be a live report handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gb_report_to_json(r: *const GbReport, out: *mut *mut c_char) -> GbStatus {
    guard(|| {
        let Some(r) = r.as_ref() else {
            return Err(null_err("report"));
        };
        if out.is_null() {
            return Err(null_err("out"));
        }
        let json = to_canonical_json(&r.0).map_err(lib_err)?;
        *out = CString::new(json).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `r` must come from `gb_balance_test` or be NULL.
#[no_mangle]
pub unsafe extern "C" fn gb_report_free(r: *mut GbReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn gb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
