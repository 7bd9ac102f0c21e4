//! C ABI for `qrenyi`.
//!
//! States live behind the opaque [`QrDensity`] handle. Every function returns
//! a [`QrStatus`]; results go through out-pointers. On failure the message is
//! kept per thread and can be read with [`qr_last_error_message`].
//! Divergences equal to +∞ are reported as `INFINITY`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qrenyi::divergences::{
    petz_divergence, rev_relative_entropy, rsand_divergence, sand_divergence, umegaki,
};
use qrenyi::exponents::{hoeffding_exponent, stein_exponent};
use qrenyi::matrix::{DensityMatrix, C64};
use qrenyi::testing::{alpha_nr, beta_neps};
use qrenyi::Error;

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QrStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// Input is not a valid density matrix (shape, Hermiticity, trace, positivity).
    InvalidState = 2,
    /// Argument out of range, e.g. a Rényi order of 1.
    InvalidArgument = 3,
    /// Outside the mathematical domain, e.g. a rate above the reverse relative entropy.
    Domain = 4,
    /// A size limit would be exceeded.
    Resource = 5,
    /// The problem is degenerate (affine cumulant, no unique optimizer).
    Degenerate = 6,
    /// An iterative routine failed to converge.
    NonConvergence = 7,
    /// Internal panic; the library state is unchanged.
    Internal = 8,
}

/// Opaque density-matrix handle.
pub struct QrDensity {
    inner: DensityMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QrStatus {
    match e {
        Error::NotSquare { .. }
        | Error::Empty
        | Error::DimensionMismatch(..)
        | Error::NotHermitian(_)
        | Error::InvalidTrace(_)
        | Error::NotPsd(_) => QrStatus::InvalidState,
        Error::Argument(_) => QrStatus::InvalidArgument,
        Error::Domain(_) => QrStatus::Domain,
        Error::Resource { .. } => QrStatus::Resource,
        Error::Degenerate(_) => QrStatus::Degenerate,
        Error::NonConvergence { .. } | Error::EigenNoConvergence { .. } => QrStatus::NonConvergence,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard<F: FnOnce() -> Result<(), QrFailure>>(f: F) -> QrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QrStatus::Ok,
        Ok(Err(QrFailure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            QrStatus::Internal
        }
    }
}

struct QrFailure(QrStatus, String);

impl From<Error> for QrFailure {
    fn from(e: Error) -> Self {
        QrFailure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> QrFailure {
    QrFailure(QrStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn state<'a>(p: *const QrDensity, what: &str) -> Result<&'a DensityMatrix, QrFailure> {
    p.as_ref().map(|h| &h.inner).ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), QrFailure> {
    if out.is_null() {
        return Err(null(what));
    }
    *out = value;
    Ok(())
}

/// Creates a state from `dim × dim` row-major real and imaginary parts.
/// `im` may be null for a real matrix. On success `*out` owns a handle that
/// must be released with [`qr_density_free`].
///
/// # Safety
/// `re` (and `im` if non-null) must point to `dim * dim` doubles; `out` must
/// be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qr_density_new(
    dim: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut QrDensity,
) -> QrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if re.is_null() {
            return Err(null("re"));
        }
        let len = dim
            .checked_mul(dim)
            .ok_or_else(|| QrFailure(QrStatus::InvalidArgument, "dimension overflows".into()))?;
        let re = std::slice::from_raw_parts(re, len);
        let im = if im.is_null() {
            None
        } else {
            Some(std::slice::from_raw_parts(im, len))
        };
        let m = nalgebra::DMatrix::from_fn(dim, dim, |i, j| {
            C64::new(re[i * dim + j], im.map_or(0.0, |v| v[i * dim + j]))
        });
        let inner = DensityMatrix::from_matrix(m)?;
        *out = Box::into_raw(Box::new(QrDensity { inner }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `p` must come from [`qr_density_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn qr_density_free(p: *mut QrDensity) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Dimension of a state, 0 for null.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qr_density_dim(p: *const QrDensity) -> usize {
    p.as_ref().map_or(0, |h| h.inner.dim())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL,
/// or 0 if there is none.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qr_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Umegaki relative entropy in bits.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qr_umegaki(rho: *const QrDensity, sigma: *const QrDensity, out: *mut f64) -> QrStatus {
    guard(|| {
        let v = umegaki(state(rho, "rho")?, state(sigma, "sigma")?)?;
        write(out, v.to_f64(), "out")
    })
}

/// Petz Rényi divergence of order `alpha` in bits.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qr_petz(
    rho: *const QrDensity,
    sigma: *const QrDensity,
    alpha: f64,
    out: *mut f64,
) -> QrStatus {
    guard(|| {
        let v = petz_divergence(state(rho, "rho")?, state(sigma, "sigma")?, alpha)?;
        write(out, v.to_f64(), "out")
    })
}

/// Sandwiched Rényi divergence of order `alpha` in bits.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qr_sandwiched(
    rho: *const QrDensity,
    sigma: *const QrDensity,
    alpha: f64,
    out: *mut f64,
) -> QrStatus {
    guard(|| {
        let v = sand_divergence(state(rho, "rho")?, state(sigma, "sigma")?, alpha)?;
        write(out, v.to_f64(), "out")
    })
}

/// Reverse sandwiched Rényi divergence of order `alpha` in bits.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qr_reverse_sandwiched(
    rho: *const QrDensity,
    sigma: *const QrDensity,
    alpha: f64,
    out: *mut f64,
) -> QrStatus {
    guard(|| {
        let v = rsand_divergence(state(rho, "rho")?, state(sigma, "sigma")?, alpha)?;
        write(out, v.to_f64(), "out")
    })
}

/// Reverse relative entropy in bits (full-rank states).
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qr_reverse_relative_entropy(
    rho: *const QrDensity,
    sigma: *const QrDensity,
    out: *mut f64,
) -> QrStatus {
    guard(|| {
        let v = rev_relative_entropy(state(rho, "rho")?, state(sigma, "sigma")?)?;
        write(out, v.to_f64(), "out")
    })
}

/// Hoeffding exponent at Type-II rate `r`. `optimizer_alpha` may be null.
///
/// # Safety
/// Handles must be live; `exponent` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qr_hoeffding_exponent(
    rho: *const QrDensity,
    sigma: *const QrDensity,
    r: f64,
    exponent: *mut f64,
    optimizer_alpha: *mut f64,
) -> QrStatus {
    guard(|| {
        let h = hoeffding_exponent(state(rho, "rho")?, state(sigma, "sigma")?, r)?;
        write(exponent, h.exponent, "exponent")?;
        if !optimizer_alpha.is_null() {
            *optimizer_alpha = h.optimizer_alpha;
        }
        Ok(())
    })
}

/// Stein exponent (the reverse relative entropy) in bits.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qr_stein_exponent(
    rho: *const QrDensity,
    sigma: *const QrDensity,
    out: *mut f64,
) -> QrStatus {
    guard(|| {
        let v = stein_exponent(state(rho, "rho")?, state(sigma, "sigma")?)?;
        write(out, v.to_f64(), "out")
    })
}

/// Minimal Type-I error over `n` copies with Type-II error at most `2^{-n r}`.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qr_alpha_nr(
    rho: *const QrDensity,
    sigma: *const QrDensity,
    n: usize,
    r: f64,
    out: *mut f64,
) -> QrStatus {
    guard(|| {
        let v = alpha_nr(state(rho, "rho")?, state(sigma, "sigma")?, n, r)?;
        write(out, v, "out")
    })
}

/// Minimal Type-II error over `n` copies with Type-I error at most `epsilon`.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qr_beta_neps(
    rho: *const QrDensity,
    sigma: *const QrDensity,
    n: usize,
    epsilon: f64,
    out: *mut f64,
) -> QrStatus {
    guard(|| {
        let v = beta_neps(state(rho, "rho")?, state(sigma, "sigma")?, n, epsilon)?;
        write(out, v, "out")
    })
}
