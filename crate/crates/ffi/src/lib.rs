//! C interface to `qnm-core`.
//!
//! Objects are opaque handles created by `qnm_*_new`/`qnm_*_from_*`
//! functions and released with the matching `qnm_*_free`. Every fallible
//! call returns a [`QnmStatus`]; the message for the last failure on the
//! calling thread is available from [`qnm_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use qnm_core::jordan::{build_block, JordanBlock};
use qnm_core::model::{builtin_double_pole_model, load_model, parse_model, SystemModel};
use qnm_core::spectral::{SearchBox, SpectrumReport, Wronskian};
use qnm_core::{ptmodel, Error};

/// Result codes. Values 2 to 4 match the exit codes of the `qnm` tool.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QnmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Numerical = 3,
    Internal = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QnmComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for QnmComplex {
    fn from(z: Complex64) -> Self {
        QnmComplex { re: z.re, im: z.im }
    }
}

impl From<QnmComplex> for Complex64 {
    fn from(z: QnmComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// One zero of the Wronskian.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QnmZero {
    pub omega: QnmComplex,
    pub multiplicity: usize,
    /// Leading Taylor coefficient of W at the zero.
    pub w_lead: QnmComplex,
    pub residual: f64,
}

pub struct QnmModel {
    inner: SystemModel,
}

pub struct QnmSpectrum {
    inner: SpectrumReport,
}

pub struct QnmBlock {
    inner: JordanBlock,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QnmStatus {
    match qnm_core::cli::exit_code(e) {
        2 => QnmStatus::InvalidInput,
        3 => QnmStatus::Numerical,
        _ => QnmStatus::Internal,
    }
}

/// Runs `f`, recording errors and converting panics.
fn guard(f: impl FnOnce() -> Result<(), (QnmStatus, String)>) -> QnmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QnmStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            QnmStatus::Panic
        }
    }
}

fn core<T>(r: qnm_core::Result<T>) -> Result<T, (QnmStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (QnmStatus, String) {
    (QnmStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` is null or points to a valid `T`.
unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (QnmStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `p` is null or valid for a write of `T`.
unsafe fn store<T>(p: *mut T, v: T, what: &str) -> Result<(), (QnmStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// # Safety
/// `s` is null or a NUL-terminated string.
unsafe fn string<'a>(s: *const c_char, what: &str) -> Result<&'a str, (QnmStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (QnmStatus::InvalidInput, format!("{what} is not valid UTF-8")))
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qnm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qnm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a model from structured text.
///
/// # Safety
/// `text` is a NUL-terminated string and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnm_model_from_str(text: *const c_char, out: *mut *mut QnmModel) -> QnmStatus {
    guard(|| {
        let m = core(parse_model(string(text, "text")?))?;
        store(out, Box::into_raw(Box::new(QnmModel { inner: m })), "out")
    })
}

/// Loads a model file.
///
/// # Safety
/// `path` is a NUL-terminated string and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnm_model_from_file(path: *const c_char, out: *mut *mut QnmModel) -> QnmStatus {
    guard(|| {
        let m = core(load_model(string(path, "path")?))?;
        store(out, Box::into_raw(Box::new(QnmModel { inner: m })), "out")
    })
}

/// The built-in cavity with a double pole at `−iγ(K)`.
///
/// # Safety
/// `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnm_model_double_pole(k: f64, out: *mut *mut QnmModel) -> QnmStatus {
    guard(|| {
        let m = core(builtin_double_pole_model(k))?;
        store(out, Box::into_raw(Box::new(QnmModel { inner: m })), "out")
    })
}

/// # Safety
/// `model` is null or was returned by a `qnm_model_*` constructor and not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn qnm_model_free(model: *mut QnmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// `W(ω)`.
///
/// # Safety
/// `model` is a live handle and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnm_wronskian(model: *const QnmModel, omega: QnmComplex, out: *mut QnmComplex) -> QnmStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let w = Wronskian::new(&m.inner).eval(omega.into());
        store(out, w.into(), "out")
    })
}

/// All zeros in the box `[re_min, re_max] × [im_min, im_max]`.
///
/// # Safety
/// `model` is a live handle and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnm_spectrum(
    model: *const QnmModel,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    out: *mut *mut QnmSpectrum,
) -> QnmStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let b = core(SearchBox::new(re_min, re_max, im_min, im_max))?;
        let rep = core(qnm_core::spectral::spectrum(&m.inner, &b))?;
        store(out, Box::into_raw(Box::new(QnmSpectrum { inner: rep })), "out")
    })
}

/// Number of distinct zeros; 0 for a null handle.
///
/// # Safety
/// `spectrum` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qnm_spectrum_len(spectrum: *const QnmSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.inner.zeros.len())
}

/// # Safety
/// `spectrum` is a live handle and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnm_spectrum_zero(spectrum: *const QnmSpectrum, index: usize, out: *mut QnmZero) -> QnmStatus {
    guard(|| {
        let s = deref(spectrum, "spectrum")?;
        let z = s.inner.zeros.get(index).ok_or_else(|| {
            (
                QnmStatus::InvalidInput,
                format!("index {index} out of range for {} zeros", s.inner.zeros.len()),
            )
        })?;
        store(
            out,
            QnmZero {
                omega: z.omega.into(),
                multiplicity: z.multiplicity,
                w_lead: z.w_lead.into(),
                residual: z.residual,
            },
            "out",
        )
    })
}

/// # Safety
/// `spectrum` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qnm_spectrum_free(spectrum: *mut QnmSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Jordan block of size `multiplicity` at the zero `omega`.
///
/// # Safety
/// `model` is a live handle and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnm_block_new(
    model: *const QnmModel,
    omega: QnmComplex,
    multiplicity: usize,
    out: *mut *mut QnmBlock,
) -> QnmStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let b = core(build_block(&m.inner, omega.into(), multiplicity))?;
        store(out, Box::into_raw(Box::new(QnmBlock { inner: b })), "out")
    })
}

/// Block size; 0 for a null handle.
///
/// # Safety
/// `block` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qnm_block_size(block: *const QnmBlock) -> usize {
    block.as_ref().map_or(0, |b| b.inner.size())
}

/// `ω_j` and `W_{j,M}`.
///
/// # Safety
/// `block` is a live handle; `omega` and `w_lead` are valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnm_block_info(block: *const QnmBlock, omega: *mut QnmComplex, w_lead: *mut QnmComplex) -> QnmStatus {
    guard(|| {
        let b = deref(block, "block")?;
        store(omega, b.inner.omega().into(), "omega")?;
        store(w_lead, b.inner.w_lead().into(), "w_lead")
    })
}

/// `f_{j,n}(x)` and `f_{j,n}′(x)`.
///
/// # Safety
/// `block` is a live handle; `value` and `slope` are valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnm_block_field(
    block: *const QnmBlock,
    n: usize,
    x: f64,
    value: *mut QnmComplex,
    slope: *mut QnmComplex,
) -> QnmStatus {
    guard(|| {
        let b = deref(block, "block")?;
        if n >= b.inner.size() {
            return Err((
                QnmStatus::InvalidInput,
                format!("member {n} out of range for block of size {}", b.inner.size()),
            ));
        }
        if !x.is_finite() {
            return Err((QnmStatus::InvalidInput, format!("position {x} is not finite")));
        }
        let [f, fp] = b.inner.field(n, x);
        store(value, f.into(), "value")?;
        store(slope, fp.into(), "slope")
    })
}

/// `(f_{j,a}, f_{j,b})` as a row-major `M×M` array.
///
/// # Safety
/// `block` is a live handle and `out` is valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn qnm_block_products(block: *const QnmBlock, out: *mut QnmComplex, len: usize) -> QnmStatus {
    guard(|| {
        let b = deref(block, "block")?;
        let m = b.inner.size();
        if out.is_null() {
            return Err(null("out"));
        }
        if len < m * m {
            return Err((QnmStatus::InvalidInput, format!("buffer holds {len} values, {} needed", m * m)));
        }
        let pm = b.inner.product_matrix();
        for r in 0..m {
            for c in 0..m {
                out.add(r * m + c).write(pm[(r, c)].into());
            }
        }
        Ok(())
    })
}

/// # Safety
/// `block` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qnm_block_free(block: *mut QnmBlock) {
    if !block.is_null() {
        drop(Box::from_raw(block));
    }
}

/// Critical point of the Pöschl–Teller potential truncated to `[−L, L]`.
///
/// # Safety
/// `v0` and `omega` are valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qnm_pt_critical_point(l: f64, v0: *mut f64, omega: *mut QnmComplex) -> QnmStatus {
    guard(|| {
        let cp = core(ptmodel::pt_critical_point(l))?;
        store(v0, cp.v0, "v0")?;
        store(omega, cp.omega.into(), "omega")
    })
}
