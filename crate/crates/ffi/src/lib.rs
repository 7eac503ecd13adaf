//! C ABI over `jacobi-gl`.
//!
//! Objects are opaque heap handles created by `*_new`/`jgl_forward`/`jgl_invert` and released
//! with the matching `*_free`. Every fallible call returns a [`JglStatus`]; on failure the
//! message is available from [`jgl_last_error`] until the next failing call on the same thread.
//! Node indices are 1-based, as in the Rust API.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use jacobi_gl::recovery::forward_data;
use jacobi_gl::{
    eigensolve, extract_right_spectral_data, extract_spectral_data, invert, Error, Grid,
    InversionProblem, InvertOptions, JacobiOperator, Method, Orientation, RecoveredSystem,
    SpectralData,
};

/// Result codes. The numeric values match the command-line exit codes where they overlap.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JglStatus {
    Ok = 0,
    /// Null pointer, short buffer, index out of range or unknown enum value.
    InvalidArgument = 1,
    /// Inadmissible operator or spectral data.
    InvalidInput = 2,
    /// Eigensolver, recurrence or recursion failure.
    Numerical = 3,
    /// The Gel'fand-Levitan system is singular or too ill-conditioned.
    NonInvertible = 4,
    /// A Rust panic was caught at the boundary.
    Internal = 99,
}

/// Which edge the weight factors are taken at.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JglOrientation {
    Left = 0,
    Right = 1,
}

/// Recovery route for [`jgl_invert`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JglMethod {
    Synthesis = 0,
    Recursion = 1,
    Both = 2,
}

/// Three-diagonal operator.
pub struct JglOperator(JacobiOperator);

/// Levels and weight factors.
pub struct JglSpectralData(SpectralData);

/// Output of an inversion.
pub struct JglRecovered(RecoveredSystem);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(JglStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::NonInvertible { .. } => JglStatus::NonInvertible,
            e if e.is_input_error() => JglStatus::InvalidInput,
            _ => JglStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn bad_arg(message: &str) -> Failure {
    Failure(JglStatus::InvalidArgument, message.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> JglStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => JglStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal error: panic in jacobi-gl".into());
            JglStatus::Internal
        }
    }
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(bad_arg(&format!("{what} is null")));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| bad_arg(&format!("{what} is null")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(bad_arg("output pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out(src: &[f64], dst: *mut f64, len: usize) -> Result<(), Failure> {
    if dst.is_null() || len < src.len() {
        return Err(bad_arg(&format!(
            "output buffer needs {} entries",
            src.len()
        )));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

fn orientation(o: u32) -> Result<Orientation, Failure> {
    match o {
        0 => Ok(Orientation::Left),
        1 => Ok(Orientation::Right),
        _ => Err(bad_arg(&format!("unknown orientation {o}"))),
    }
}

fn method(m: u32) -> Result<Method, Failure> {
    match m {
        0 => Ok(Method::Synthesis),
        1 => Ok(Method::Recursion),
        2 => Ok(Method::Both),
        _ => Err(bad_arg(&format!("unknown method {m}"))),
    }
}

/// Message of the last failure on this thread, or null. Owned by the library.
#[no_mangle]
pub extern "C" fn jgl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Operator with `n` potentials `v` and `n - 1` couplings `u`.
///
/// # Safety
/// `v` must point to `n` doubles, `u` to `n - 1` doubles, `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn jgl_operator_new(
    n: usize,
    v: *const f64,
    u: *const f64,
    u_edge: f64,
    out: *mut *mut JglOperator,
) -> JglStatus {
    guard(|| {
        let v = input(v, n, "v")?.to_vec();
        let u = input(u, n.saturating_sub(1), "u")?.to_vec();
        let op = JacobiOperator::new(Grid::new(n)?, v, u, u_edge)?;
        put(out, JglOperator(op))
    })
}

/// Free well (`V = u = 0`) on `n` nodes.
///
/// # Safety
/// `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn jgl_operator_free_well(n: usize, out: *mut *mut JglOperator) -> JglStatus {
    guard(|| put(out, JglOperator(JacobiOperator::free(n)?)))
}

/// # Safety
/// `op` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn jgl_operator_free(op: *mut JglOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `op` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn jgl_operator_len(op: *const JglOperator) -> usize {
    op.as_ref().map_or(0, |o| o.0.len())
}

/// Copies `V` (`n` entries) into `buf`.
///
/// # Safety
/// `op` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn jgl_operator_potential(
    op: *const JglOperator,
    buf: *mut f64,
    len: usize,
) -> JglStatus {
    guard(|| copy_out(handle(op, "operator")?.0.v(), buf, len))
}

/// Copies `u` (`n - 1` entries) into `buf`.
///
/// # Safety
/// `op` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn jgl_operator_coupling(
    op: *const JglOperator,
    buf: *mut f64,
    len: usize,
) -> JglStatus {
    guard(|| copy_out(handle(op, "operator")?.0.u(), buf, len))
}

/// Spectral data from levels and weight factors; checked like any loaded data.
///
/// # Safety
/// `levels` and `weights` must point to `n` doubles; `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn jgl_spectral_new(
    n: usize,
    levels: *const f64,
    weights: *const f64,
    orientation_code: u32,
    out: *mut *mut JglSpectralData,
) -> JglStatus {
    guard(|| {
        let levels = input(levels, n, "levels")?.to_vec();
        let weights = input(weights, n, "weights")?.to_vec();
        let data = SpectralData::new(
            Grid::new(n)?,
            levels,
            weights,
            orientation(orientation_code)?,
        )?;
        put(out, JglSpectralData(data))
    })
}

/// # Safety
/// `data` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn jgl_spectral_free(data: *mut JglSpectralData) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// # Safety
/// `data` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn jgl_spectral_len(data: *const JglSpectralData) -> usize {
    data.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `data` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn jgl_spectral_levels(
    data: *const JglSpectralData,
    buf: *mut f64,
    len: usize,
) -> JglStatus {
    guard(|| copy_out(handle(data, "spectral data")?.0.levels(), buf, len))
}

/// # Safety
/// `data` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn jgl_spectral_weights(
    data: *const JglSpectralData,
    buf: *mut f64,
    len: usize,
) -> JglStatus {
    guard(|| copy_out(handle(data, "spectral data")?.0.weights(), buf, len))
}

/// Eigenvalues and weight factors of `op` at the given edge.
///
/// # Safety
/// `op` must be a live handle; `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn jgl_forward(
    op: *const JglOperator,
    orientation_code: u32,
    out: *mut *mut JglSpectralData,
) -> JglStatus {
    guard(|| {
        let op = &handle(op, "operator")?.0;
        let es = eigensolve(op)?;
        let data = match orientation(orientation_code)? {
            Orientation::Left => extract_spectral_data(&es, op.grid())?,
            Orientation::Right => extract_right_spectral_data(&es, op.grid())?,
        };
        put(out, JglSpectralData(data))
    })
}

/// Recovers the operator whose data is `target` relative to `reference`.
///
/// `reference_data` may be null, in which case it is computed from `reference` at the
/// target's edge. Default thresholds apply.
///
/// # Safety
/// Non-null handles must be live; `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn jgl_invert(
    reference: *const JglOperator,
    reference_data: *const JglSpectralData,
    target: *const JglSpectralData,
    method_code: u32,
    out: *mut *mut JglRecovered,
) -> JglStatus {
    guard(|| {
        let reference = handle(reference, "reference")?.0.clone();
        let target = handle(target, "target data")?.0.clone();
        let problem = match reference_data.as_ref() {
            Some(d) => InversionProblem::new(reference, d.0.clone(), target)?,
            None => InversionProblem::from_reference(reference, target)?,
        };
        let options = InvertOptions {
            method: method(method_code)?,
            ..InvertOptions::default()
        };
        put(out, JglRecovered(invert(&problem, &options)?))
    })
}

/// Convenience: invert `target`'s own forward data against the free well.
///
/// # Safety
/// `target` must be a live handle; `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn jgl_roundtrip(
    target: *const JglOperator,
    out: *mut *mut JglRecovered,
) -> JglStatus {
    guard(|| {
        let target = &handle(target, "target")?.0;
        let free = JacobiOperator::free(target.len())?;
        let problem = InversionProblem::from_reference(free, forward_data(target)?)?;
        put(
            out,
            JglRecovered(invert(&problem, &InvertOptions::default())?),
        )
    })
}

/// # Safety
/// `rec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn jgl_recovered_free(rec: *mut JglRecovered) {
    if !rec.is_null() {
        drop(Box::from_raw(rec));
    }
}

/// Copy of the recovered operator as a new handle.
///
/// # Safety
/// `rec` must be a live handle; `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn jgl_recovered_operator(
    rec: *const JglRecovered,
    out: *mut *mut JglOperator,
) -> JglStatus {
    guard(|| {
        let op = handle(rec, "recovered system")?.0.operator.clone();
        put(out, JglOperator(op))
    })
}

/// Unit-leading transformation kernel `K(m, n)` for `1 ≤ n ≤ m ≤ N`; the diagonal follows
/// the default convention.
///
/// # Safety
/// `rec` must be a live handle; `value` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn jgl_recovered_kernel(
    rec: *const JglRecovered,
    m: usize,
    n: usize,
    value: *mut f64,
) -> JglStatus {
    guard(|| {
        let k = &handle(rec, "recovered system")?.0.kernel;
        if n == 0 || n > m || m > k.len() {
            return Err(bad_arg(&format!(
                "kernel index ({m}, {n}) outside 1 ≤ n ≤ m ≤ {}",
                k.len()
            )));
        }
        if value.is_null() {
            return Err(bad_arg("value is null"));
        }
        *value = if m == n { k.diag(m) } else { k.get(m, n) };
        Ok(())
    })
}

/// Scalar diagnostics of an inversion. Fields that were not computed are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct JglDiagnostics {
    pub gl_residual: f64,
    pub gl_condition: f64,
    pub kernel_max: f64,
    pub orthonormality_defect: f64,
    pub leakage: f64,
    pub h_norm: f64,
    pub recursion_gap: f64,
    pub level_error: f64,
    pub weight_error: f64,
    /// 1 if the inversion ran from the right edge.
    pub right_frame: u32,
}

/// # Safety
/// `rec` must be a live handle; `out` must point to a writable `JglDiagnostics`.
#[no_mangle]
pub unsafe extern "C" fn jgl_recovered_diagnostics(
    rec: *const JglRecovered,
    out: *mut JglDiagnostics,
) -> JglStatus {
    guard(|| {
        let r = &handle(rec, "recovered system")?.0;
        if out.is_null() {
            return Err(bad_arg("output pointer is null"));
        }
        let d = &r.diagnostics;
        *out = JglDiagnostics {
            gl_residual: d.gl_residual,
            gl_condition: d.gl_condition,
            kernel_max: d.kernel_max,
            orthonormality_defect: d.orthonormality_defect,
            leakage: d.leakage.unwrap_or(f64::NAN),
            h_norm: d.h_norm.unwrap_or(f64::NAN),
            recursion_gap: d.recursion_gap.unwrap_or(f64::NAN),
            level_error: d.level_error,
            weight_error: d.weight_error,
            right_frame: u32::from(r.frame == Orientation::Right),
        };
        Ok(())
    })
}
