//! C ABI over `lattice-kernel`.
//!
//! Objects are opaque heap handles released by their `*_free` function.
//! Every fallible call returns an [`LkStatus`]; on failure the message is
//! available from [`lk_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lattice_kernel::fem::DiffusionModel;
use lattice_kernel::lattice::{cbc_construct, criterion_S};
use lattice_kernel::weights::{derive, PdeWeightInput, WeightKind};
use lattice_kernel::{DerivedParams, Error, Interpolant, KernelSpec, Lattice};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LkWeightKind {
    Product = 0,
    Pod = 1,
    Spod = 2,
}

/// Derived weights with their kernel.
pub struct LkWeights {
    params: DerivedParams,
    spec: KernelSpec,
}

pub struct LkLattice(Lattice);

pub struct LkInterpolant(Interpolant);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: LkStatus, msg: &str) -> LkStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> LkStatus {
    let status = if e.is_numerical() { LkStatus::Numerical } else { LkStatus::InvalidArgument };
    fail(status, &e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), LkStatus>) -> LkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LkStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(LkStatus::Panic, "internal panic"),
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), LkStatus> {
    if p.is_null() {
        Err(fail(LkStatus::NullPointer, &format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], LkStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts(p, len))
}

fn lift<T, E: Into<Error>>(r: Result<T, E>) -> Result<T, LkStatus> {
    r.map_err(|e| from_error(e.into()))
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Derives weights for the periodic diffusion model with `b_j ∝ c j^{−θ}`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn lk_weights_derive(
    kind: LkWeightKind,
    theta: f64,
    c: f64,
    p: f64,
    delta: f64,
    s: usize,
    out: *mut *mut LkWeights,
) -> LkStatus {
    guard(|| {
        non_null(out, "out")?;
        let kind = match kind {
            LkWeightKind::Product => WeightKind::Product,
            LkWeightKind::Pod => WeightKind::Pod,
            LkWeightKind::Spod => WeightKind::Spod,
        };
        let model = lift(DiffusionModel::new(c, theta, s))?;
        let input = lift(PdeWeightInput::new(p, model.decay_sequence(s), delta))?;
        let params = lift(derive(kind, &input, s))?;
        let spec = lift(KernelSpec::new(params.alpha, &params.scheme, s))?;
        *out = Box::into_raw(Box::new(LkWeights { params, spec }));
        Ok(())
    })
}

/// Smoothness `α` of the derived kernel, or 0 for a null handle.
///
/// # Safety
/// `w` must be null or a live handle from [`lk_weights_derive`].
#[no_mangle]
pub unsafe extern "C" fn lk_weights_alpha(w: *const LkWeights) -> u32 {
    w.as_ref().map_or(0, |w| w.params.alpha)
}

/// Theoretical convergence rate of the derived weights, or NaN for a null handle.
///
/// # Safety
/// `w` must be null or a live handle from [`lk_weights_derive`].
#[no_mangle]
pub unsafe extern "C" fn lk_weights_rate(w: *const LkWeights) -> f64 {
    w.as_ref().map_or(f64::NAN, |w| w.params.rate)
}

/// # Safety
/// `w` must be null or a handle from [`lk_weights_derive`] not freed before.
#[no_mangle]
pub unsafe extern "C" fn lk_weights_free(w: *mut LkWeights) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Lattice from an explicit generating vector of length `s`.
///
/// # Safety
/// `z` must point to `s` readable values and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn lk_lattice_new(n: u64, z: *const u64, s: usize, out: *mut *mut LkLattice) -> LkStatus {
    guard(|| {
        non_null(out, "out")?;
        non_null(z, "z")?;
        let z = std::slice::from_raw_parts(z, s).to_vec();
        let lat = lift(Lattice::new(n, z))?;
        *out = Box::into_raw(Box::new(LkLattice(lat)));
        Ok(())
    })
}

/// CBC construction of an `n`-point lattice in the first `s` dimensions of `w`.
///
/// # Safety
/// `w` must be a live weights handle and `out` valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn lk_lattice_cbc(w: *const LkWeights, n: u64, s: usize, out: *mut *mut LkLattice) -> LkStatus {
    guard(|| {
        non_null(w, "weights")?;
        non_null(out, "out")?;
        let report = lift(cbc_construct(&(*w).spec, n, s))?;
        *out = Box::into_raw(Box::new(LkLattice(report.lattice())));
        Ok(())
    })
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `lat` must be null or a live lattice handle.
#[no_mangle]
pub unsafe extern "C" fn lk_lattice_n(lat: *const LkLattice) -> u64 {
    lat.as_ref().map_or(0, |l| l.0.n())
}

/// Dimension, or 0 for a null handle.
///
/// # Safety
/// `lat` must be null or a live lattice handle.
#[no_mangle]
pub unsafe extern "C" fn lk_lattice_dim(lat: *const LkLattice) -> usize {
    lat.as_ref().map_or(0, |l| l.0.s())
}

/// Copies the generating vector into `out[0..len]`; `len` must equal the dimension.
///
/// # Safety
/// `out` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn lk_lattice_z(lat: *const LkLattice, out: *mut u64, len: usize) -> LkStatus {
    guard(|| {
        non_null(lat, "lattice")?;
        non_null(out, "out")?;
        let z = (*lat).0.z();
        if len != z.len() {
            return Err(fail(LkStatus::InvalidArgument, &format!("buffer holds {len} entries, need {}", z.len())));
        }
        ptr::copy_nonoverlapping(z.as_ptr(), out, len);
        Ok(())
    })
}

/// # Safety
/// `lat` must be null or a lattice handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn lk_lattice_free(lat: *mut LkLattice) {
    if !lat.is_null() {
        drop(Box::from_raw(lat));
    }
}

/// CBC criterion value of `lat` under the kernel of `w` (restricted to the lattice dimension).
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lk_criterion(w: *const LkWeights, lat: *const LkLattice, out: *mut f64) -> LkStatus {
    guard(|| {
        non_null(w, "weights")?;
        non_null(lat, "lattice")?;
        non_null(out, "out")?;
        let lat = &(*lat).0;
        let spec = lift(KernelSpec::new((*w).spec.alpha(), (*w).spec.scheme(), lat.s()))?;
        *out = lift(criterion_S(&spec, lat))?;
        Ok(())
    })
}

/// Kernel interpolant of `values[k-1] = f(t_k)`, `k = 1..=n`.
///
/// # Safety
/// Handles must be live, `values` must hold `len` readable values, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lk_interpolant_build(
    w: *const LkWeights,
    lat: *const LkLattice,
    values: *const f64,
    len: usize,
    out: *mut *mut LkInterpolant,
) -> LkStatus {
    guard(|| {
        non_null(w, "weights")?;
        non_null(lat, "lattice")?;
        non_null(out, "out")?;
        let lat = &(*lat).0;
        let values = slice(values, len, "values")?;
        let spec = lift(KernelSpec::new((*w).spec.alpha(), (*w).spec.scheme(), lat.s()))?;
        let itp = lift(Interpolant::build(&spec, lat, values))?;
        *out = Box::into_raw(Box::new(LkInterpolant(itp)));
        Ok(())
    })
}

/// `f_n(y)` for a point `y` of length `dim`.
///
/// # Safety
/// `itp` must be live, `y` must hold `dim` values, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lk_interpolant_eval(itp: *const LkInterpolant, y: *const f64, dim: usize, out: *mut f64) -> LkStatus {
    guard(|| {
        non_null(itp, "interpolant")?;
        non_null(out, "out")?;
        let y = slice(y, dim, "y")?;
        *out = lift((*itp).0.evaluate(y))?;
        Ok(())
    })
}

/// `[f_n(y + t_k)]_{k=1..=n}` into `out[0..len]`, `len = n`.
///
/// # Safety
/// `itp` must be live, `y` must hold `dim` values, `out` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn lk_interpolant_eval_shifted(
    itp: *const LkInterpolant,
    y: *const f64,
    dim: usize,
    out: *mut f64,
    len: usize,
) -> LkStatus {
    guard(|| {
        non_null(itp, "interpolant")?;
        non_null(out, "out")?;
        let y = slice(y, dim, "y")?;
        let vals = lift((*itp).0.evaluate_shifted_union(y))?;
        if len != vals.len() {
            return Err(fail(LkStatus::InvalidArgument, &format!("buffer holds {len} entries, need {}", vals.len())));
        }
        ptr::copy_nonoverlapping(vals.as_ptr(), out, len);
        Ok(())
    })
}

/// # Safety
/// `itp` must be null or an interpolant handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn lk_interpolant_free(itp: *mut LkInterpolant) {
    if !itp.is_null() {
        drop(Box::from_raw(itp));
    }
}
