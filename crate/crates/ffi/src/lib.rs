//! C ABI over `bliss_moser`.
//!
//! Functions return a [`BmStatus`]; on failure a message is available from
//! [`bm_last_error`] until the next failing call on the same thread. Grid
//! functions are opaque handles created by `bm_gridfn_*` constructors and
//! released with [`bm_gridfn_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bliss_moser::gridfn::Dim;
use bliss_moser::sequences::moser_w;
use bliss_moser::series::{series_bound, SeriesConfig};
use bliss_moser::special::{bliss_constant, bliss_limit};
use bliss_moser::{
    eval_functional, grad_slopes, Error, GridFn, Perturbation, QuadConfig, WeightSpec,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numeric = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BmPerturbation {
    None = 0,
    TripleLog = 1,
}

/// `W(s) = beta·log(e/s) + gamma·log log(e/s) + h(1/s)`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BmWeight {
    pub beta: f64,
    pub gamma: f64,
    pub perturbation: BmPerturbation,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BmQuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub panels_used: usize,
    pub converged: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BmMaxRatio {
    pub a: f64,
    pub max_value: f64,
    pub delta: f64,
    pub degenerate: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BmSeriesBound {
    pub value: f64,
    pub terms: u64,
    pub tail_estimate: f64,
    pub tail_converged: bool,
}

/// Opaque piecewise-linear function with `v(0) = 0`.
pub struct BmGridFn(GridFn);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> BmStatus {
    match e {
        Error::NonFiniteExponent { .. } | Error::Overflow(_) => BmStatus::Numeric,
        _ => BmStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), BmStatus>) -> BmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BmStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            BmStatus::Panic
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, BmStatus>;
}

impl<T> OrStatus<T> for bliss_moser::Result<T> {
    fn or_status(self) -> Result<T, BmStatus> {
        self.map_err(|e| {
            set_error(e.to_string());
            status_of(&e)
        })
    }
}

fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, BmStatus> {
    // SAFETY: callers pass pointers obtained from this library or valid C objects.
    unsafe { p.as_ref() }.ok_or_else(|| {
        set_error(format!("{what} is null"));
        BmStatus::NullPointer
    })
}

fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, BmStatus> {
    // SAFETY: as above, for writable output locations.
    unsafe { p.as_mut() }.ok_or_else(|| {
        set_error(format!("{what} is null"));
        BmStatus::NullPointer
    })
}

fn dim(n: u32) -> Result<Dim, BmStatus> {
    Dim::new(n).or_status()
}

fn weight(w: &BmWeight) -> WeightSpec {
    let p = match w.perturbation {
        BmPerturbation::None => Perturbation::None,
        BmPerturbation::TripleLog => Perturbation::TripleLog,
    };
    WeightSpec::new(w.beta, w.gamma, p)
}

fn quad(rel_tol: f64, abs_tol: f64) -> Result<QuadConfig, BmStatus> {
    let cfg = QuadConfig::default()
        .with_rel_tol(rel_tol)
        .with_abs_tol(abs_tol);
    cfg.validate().or_status()?;
    Ok(cfg)
}

fn boxed(f: GridFn, out: *mut *mut BmGridFn) -> Result<(), BmStatus> {
    *out_ptr(out, "out")? = Box::into_raw(Box::new(BmGridFn(f)));
    Ok(())
}

/// Message for the last failing call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a function from `len` nodes; `xs` must start at 0, end at 1 and
/// increase strictly, and `vs[0]` must be 0.
///
/// # Safety
/// `xs` and `vs` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_gridfn_new(
    xs: *const f64,
    vs: *const f64,
    len: usize,
    out: *mut *mut BmGridFn,
) -> BmStatus {
    guard(|| {
        non_null(xs, "xs")?;
        non_null(vs, "vs")?;
        let xs = std::slice::from_raw_parts(xs, len);
        let vs = std::slice::from_raw_parts(vs, len);
        let nodes: Vec<(f64, f64)> = xs.iter().copied().zip(vs.iter().copied()).collect();
        boxed(GridFn::new(&nodes).or_status()?, out)
    })
}

/// The infinitesimal Moser function `w_j` in dimension `n`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_gridfn_moser(j: f64, n: u32, out: *mut *mut BmGridFn) -> BmStatus {
    guard(|| boxed(moser_w(j, dim(n)?).or_status()?, out))
}

/// Copy of `f` rescaled to unit energy.
///
/// # Safety
/// `f` must be a live handle or null; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_gridfn_normalize(
    f: *const BmGridFn,
    n: u32,
    out: *mut *mut BmGridFn,
) -> BmStatus {
    guard(|| {
        let f = non_null(f, "f")?;
        boxed(f.0.normalize(dim(n)?).or_status()?, out)
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `f` must come from a `bm_gridfn_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bm_gridfn_free(f: *mut BmGridFn) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `f` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bm_gridfn_len(f: *const BmGridFn) -> usize {
    f.as_ref().map_or(0, |f| f.0.xs().len())
}

/// Copies the nodes into `xs` and `vs`, each holding `cap` doubles.
///
/// # Safety
/// `f` must be a live handle; `xs` and `vs` must have room for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn bm_gridfn_nodes(
    f: *const BmGridFn,
    xs: *mut f64,
    vs: *mut f64,
    cap: usize,
) -> BmStatus {
    guard(|| {
        let f = non_null(f, "f")?;
        out_ptr(xs, "xs")?;
        out_ptr(vs, "vs")?;
        let len = f.0.xs().len();
        if cap < len {
            set_error(format!("need room for {len} nodes, got {cap}"));
            return Err(BmStatus::BufferTooSmall);
        }
        ptr::copy_nonoverlapping(f.0.xs().as_ptr(), xs, len);
        ptr::copy_nonoverlapping(f.0.values().as_ptr(), vs, len);
        Ok(())
    })
}

/// `∫₀¹ |v'|^n`.
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_gridfn_energy(f: *const BmGridFn, n: u32, out: *mut f64) -> BmStatus {
    guard(|| {
        let f = non_null(f, "f")?;
        *out_ptr(out, "out")? = f.0.energy(dim(n)?);
        Ok(())
    })
}

/// Maximizer of `|v|^n / s^(n-1)`.
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_gridfn_max_ratio(
    f: *const BmGridFn,
    n: u32,
    out: *mut BmMaxRatio,
) -> BmStatus {
    guard(|| {
        let f = non_null(f, "f")?;
        let r = f.0.max_ratio(dim(n)?);
        *out_ptr(out, "out")? = BmMaxRatio {
            a: r.a,
            max_value: r.max_value,
            delta: r.delta,
            degenerate: r.degenerate,
        };
        Ok(())
    })
}

/// `∫₀¹ exp(W(s) |v|^n / s^(n-1)) ds`. A run that exhausts its panel budget
/// still returns `BM_STATUS_OK` with `converged = false`.
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_eval_functional(
    f: *const BmGridFn,
    w: BmWeight,
    n: u32,
    rel_tol: f64,
    abs_tol: f64,
    out: *mut BmQuadResult,
) -> BmStatus {
    guard(|| {
        let f = non_null(f, "f")?;
        let r =
            eval_functional(&f.0, &weight(&w), dim(n)?, &quad(rel_tol, abs_tol)?).or_status()?;
        *out_ptr(out, "out")? = BmQuadResult {
            value: r.value,
            error_estimate: r.error_estimate,
            panels_used: r.panels_used,
            converged: r.converged,
        };
        Ok(())
    })
}

/// Derivative of the functional with respect to each segment slope;
/// `out` must hold `bm_gridfn_len(f) - 1` doubles.
///
/// # Safety
/// `f` must be a live handle; `out` must have room for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn bm_grad_slopes(
    f: *const BmGridFn,
    w: BmWeight,
    n: u32,
    rel_tol: f64,
    abs_tol: f64,
    out: *mut f64,
    cap: usize,
) -> BmStatus {
    guard(|| {
        let f = non_null(f, "f")?;
        out_ptr(out, "out")?;
        let m = f.0.segments();
        if cap < m {
            set_error(format!("need room for {m} slopes, got {cap}"));
            return Err(BmStatus::BufferTooSmall);
        }
        let g = grad_slopes(&f.0, &weight(&w), dim(n)?, &quad(rel_tol, abs_tol)?).or_status()?;
        ptr::copy_nonoverlapping(g.as_ptr(), out, m);
        Ok(())
    })
}

/// Sharp Bliss constant `C_{n,k}`, `k ≥ 1`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_bliss_constant(n: u32, k: f64, out: *mut f64) -> BmStatus {
    guard(|| {
        *out_ptr(out, "out")? = bliss_constant(dim(n)?, k).or_status()?;
        Ok(())
    })
}

/// `lim k·C_{n,k} = e^{H_{n-1}} / (n-1)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_bliss_limit(n: u32, out: *mut f64) -> BmStatus {
    guard(|| {
        *out_ptr(out, "out")? = bliss_limit(dim(n)?);
        Ok(())
    })
}

/// Taylor-series upper bound for the supremum of `I_beta`, `0 ≤ beta < 1`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bm_series_bound(n: u32, beta: f64, out: *mut BmSeriesBound) -> BmStatus {
    guard(|| {
        let b = series_bound(dim(n)?, beta, &SeriesConfig::default()).or_status()?;
        *out_ptr(out, "out")? = BmSeriesBound {
            value: b.value,
            terms: b.terms,
            tail_estimate: b.tail_estimate,
            tail_converged: b.tail_converged,
        };
        Ok(())
    })
}
