//! C interface to the stationary operator analysis and the cylinder functions.
//!
//! Every fallible function returns a [`CwStatus`] and writes results through
//! out-pointers only on success. A human-readable message for the last
//! failure on the calling thread is available from [`cw_last_error`].

// Range checks are written `!(x > a)` so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use conewave::normal_ops::{
    dirac_coulomb_gap, indicial_roots, is_non_indicial, spectral_admissibility_scan, thresholds,
    upper_half_circle, weight_window, NormalOpsError, OperatorSpec, ScanSettings, ScanVerdict,
};
use conewave::specfun::{self, CylinderValue, SpecfunError};
use conewave::tfun::RealFn;
use num_complex::Complex64;
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwVerdict {
    Admissible = 0,
    NotAdmissible = 1,
    Inconclusive = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CwComplex {
    pub re: f64,
    pub im: f64,
}

impl From<CwComplex> for Complex64 {
    fn from(z: CwComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

impl From<Complex64> for CwComplex {
    fn from(z: Complex64) -> Self {
        CwComplex { re: z.re, im: z.im }
    }
}

/// Opaque operator handle.
pub struct CwOperator(OperatorSpec);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(CwStatus, String);

impl From<NormalOpsError> for Failure {
    fn from(e: NormalOpsError) -> Self {
        let status = match e {
            NormalOpsError::MatchRadiusTooSmall { .. } => CwStatus::Numerical,
            _ => CwStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<SpecfunError> for Failure {
    fn from(e: SpecfunError) -> Self {
        Failure(CwStatus::Numerical, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(CwStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CwStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CwStatus::Panic
        }
    }
}

unsafe fn op_ref<'a>(op: *const CwOperator) -> Result<&'a OperatorSpec, Failure> {
    op.as_ref().map(|h| &h.0).ok_or_else(|| Failure(CwStatus::NullPointer, "null operator handle".into()))
}

fn check_out<T>(p: *mut T) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(CwStatus::NullPointer, "null output pointer".into()))
    } else {
        Ok(())
    }
}

fn finite(name: &str, x: f64) -> Result<f64, Failure> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

fn into_handle(spec: OperatorSpec, out: *mut *mut CwOperator) -> Result<(), Failure> {
    spec.validate()?;
    // SAFETY: `out` was checked to be non-null by the caller of this helper.
    unsafe { *out = Box::into_raw(Box::new(CwOperator(spec))) };
    Ok(())
}

/// Creates a scalar operator with constant coefficients `b`, `V₀`, `a₀` and
/// cross-section scale `c`.
///
/// # Safety
/// `out` must be valid for writes. The handle is released with
/// [`cw_operator_free`].
#[no_mangle]
pub unsafe extern "C" fn cw_operator_new_scalar(
    n: u32,
    b: CwComplex,
    v0: CwComplex,
    a0: CwComplex,
    c: f64,
    out: *mut *mut CwOperator,
) -> CwStatus {
    guard(|| {
        check_out(out)?;
        for (name, x) in [("b", b), ("v0", v0), ("a0", a0)] {
            finite(name, x.re)?;
            finite(name, x.im)?;
        }
        if !(finite("c", c)? > 0.0) {
            return Err(invalid("c must be positive"));
        }
        let mut spec = OperatorSpec::scalar(n, v0.into(), a0.into())?;
        spec.b = b.into();
        spec.c = RealFn::Const(c);
        into_handle(spec, out)
    })
}

/// Creates the squared Dirac–Coulomb operator with charge `z`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_operator_new_dirac_coulomb(z: f64, out: *mut *mut CwOperator) -> CwStatus {
    guard(|| {
        check_out(out)?;
        into_handle(OperatorSpec::dirac_coulomb(finite("z", z)?), out)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `op` must be null or a handle from one of the constructors, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cw_operator_free(op: *mut CwOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Open interval of admissible weights `ℓ` at time `t0`.
///
/// # Safety
/// `op` must be a live handle; `lower` and `upper` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_weight_window(
    op: *const CwOperator,
    t0: f64,
    lower: *mut f64,
    upper: *mut f64,
) -> CwStatus {
    guard(|| {
        let spec = op_ref(op)?;
        check_out(lower)?;
        check_out(upper)?;
        let w = weight_window(spec, finite("t0", t0)?)?;
        *lower = w.lower;
        *upper = w.upper;
        Ok(())
    })
}

/// Indicial roots of mode `j`; `plus` has the larger real part.
///
/// # Safety
/// `op` must be a live scalar handle; `plus` and `minus` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_indicial_roots(
    op: *const CwOperator,
    t0: f64,
    j: u32,
    plus: *mut CwComplex,
    minus: *mut CwComplex,
) -> CwStatus {
    guard(|| {
        let spec = op_ref(op)?;
        check_out(plus)?;
        check_out(minus)?;
        if !spec.is_scalar() {
            return Err(NormalOpsError::NotScalar.into());
        }
        let r = indicial_roots(spec, finite("t0", t0)?, j);
        *plus = r.plus.into();
        *minus = r.minus.into();
        Ok(())
    })
}

/// Writes whether no indicial root lies on the line of weight `ell`.
///
/// # Safety
/// `op` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_is_non_indicial(op: *const CwOperator, t0: f64, ell: f64, out: *mut bool) -> CwStatus {
    guard(|| {
        let spec = op_ref(op)?;
        check_out(out)?;
        *out = is_non_indicial(spec, finite("t0", t0)?, finite("ell", ell)?);
        Ok(())
    })
}

/// Incoming and outgoing radial-set thresholds.
///
/// # Safety
/// `op` must be a live handle; `theta_in` and `theta_out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_thresholds(
    op: *const CwOperator,
    t0: f64,
    theta_in: *mut f64,
    theta_out: *mut f64,
) -> CwStatus {
    guard(|| {
        let spec = op_ref(op)?;
        check_out(theta_in)?;
        check_out(theta_out)?;
        let th = thresholds(spec, finite("t0", t0)?, 0.0);
        *theta_in = th.theta_in;
        *theta_out = th.theta_out;
        Ok(())
    })
}

/// `min over κ ≠ 0` of `|½ − √(κ² − Z²)|`.
#[no_mangle]
pub extern "C" fn cw_dirac_coulomb_gap(z: f64) -> f64 {
    dirac_coulomb_gap(z)
}

/// Spectral admissibility scan over modes `0..=j_max` and `samples`
/// frequencies on the closed upper half circle. `min_measure` receives the
/// smallest scattering measure, or infinity when no mode was examined.
///
/// # Safety
/// `op` must be a live scalar handle; `verdict` and `min_measure` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_admissibility_scan(
    op: *const CwOperator,
    t0: f64,
    ell: f64,
    j_max: u32,
    samples: usize,
    verdict: *mut CwVerdict,
    min_measure: *mut f64,
) -> CwStatus {
    guard(|| {
        let spec = op_ref(op)?;
        check_out(verdict)?;
        check_out(min_measure)?;
        if !spec.is_scalar() {
            return Err(NormalOpsError::NotScalar.into());
        }
        if !(2..=4097).contains(&samples) {
            return Err(invalid("samples must lie in [2, 4097]"));
        }
        if j_max > 256 {
            return Err(invalid("j_max must be at most 256"));
        }
        let settings = ScanSettings { j_max, samples, ..ScanSettings::default() };
        let (t0, ell) = (finite("t0", t0)?, finite("ell", ell)?);
        let scan = spectral_admissibility_scan(spec, t0, ell, &upper_half_circle(samples), &settings)?;
        *verdict = match scan.verdict {
            ScanVerdict::Admissible => CwVerdict::Admissible,
            ScanVerdict::NotAdmissible { .. } => CwVerdict::NotAdmissible,
            ScanVerdict::Inconclusive { .. } => CwVerdict::Inconclusive,
        };
        *min_measure =
            scan.entries.iter().map(|e| e.direct_measure.min(e.adjoint_measure)).fold(f64::INFINITY, f64::min);
        Ok(())
    })
}

unsafe fn cylinder(
    f: fn(Complex64, Complex64) -> Result<CylinderValue, SpecfunError>,
    nu: CwComplex,
    z: CwComplex,
    value: *mut CwComplex,
    deriv: *mut CwComplex,
) -> CwStatus {
    guard(|| {
        check_out(value)?;
        check_out(deriv)?;
        let v = f(nu.into(), z.into())?;
        *value = v.value.into();
        *deriv = v.deriv.into();
        Ok(())
    })
}

/// `J_ν(z)` and its derivative.
///
/// # Safety
/// `value` and `deriv` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_bessel_j(nu: CwComplex, z: CwComplex, value: *mut CwComplex, deriv: *mut CwComplex) -> CwStatus {
    cylinder(specfun::bessel_j, nu, z, value, deriv)
}

/// `H⁽¹⁾_ν(z)` and its derivative.
///
/// # Safety
/// `value` and `deriv` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_hankel1(nu: CwComplex, z: CwComplex, value: *mut CwComplex, deriv: *mut CwComplex) -> CwStatus {
    cylinder(specfun::hankel1, nu, z, value, deriv)
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn cw_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
