//! C ABI over glkit: load an instance from JSON, solve it, read the
//! allocation back, compare with the brute-force value.
//!
//! Every function returns a [`GlkitStatus`]. On failure the message is kept
//! per thread and can be read with [`glkit_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use glkit::cli::{Instance, InstanceFile, ThetaSpec};
use glkit::glpg::{self, GLOutput, SolveOptions};
use glkit::reference;
use glkit::GlError;

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlkitStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    BadInput = 3,
    SolverFailure = 4,
    OutOfRange = 5,
    TooLarge = 6,
    Panic = 7,
}

/// Opaque instance handle.
pub struct GlkitInstance {
    inner: Instance,
}

/// Opaque solution handle.
pub struct GlkitSolution {
    output: GLOutput,
    dim: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("no interior nul")));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn guard(f: impl FnOnce() -> Result<(), (GlkitStatus, String)>) -> GlkitStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GlkitStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside glkit");
            GlkitStatus::Panic
        }
    }
}

fn solver_error(e: GlError) -> (GlkitStatus, String) {
    let status = match e {
        GlError::TooLarge { .. } => GlkitStatus::TooLarge,
        _ => GlkitStatus::SolverFailure,
    };
    (status, e.to_string())
}

fn null(name: &str) -> (GlkitStatus, String) {
    (GlkitStatus::NullPointer, format!("{name} is null"))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next glkit call on the same thread.
#[no_mangle]
pub extern "C" fn glkit_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses an instance file (JSON, UTF-8, nul-terminated).
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn glkit_instance_from_json(json: *const c_char, out: *mut *mut GlkitInstance) -> GlkitStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = CStr::from_ptr(json).to_str().map_err(|e| (GlkitStatus::InvalidUtf8, e.to_string()))?;
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| (GlkitStatus::BadInput, e.to_string()))?;
        let inner = file.into_instance("instance").map_err(|e| (GlkitStatus::BadInput, e.to_string()))?;
        *out = Box::into_raw(Box::new(GlkitInstance { inner }));
        Ok(())
    })
}

/// # Safety
/// `inst` must come from `glkit_instance_from_json` or be null.
#[no_mangle]
pub unsafe extern "C" fn glkit_instance_free(inst: *mut GlkitInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Number of coordinates of the instance.
///
/// # Safety
/// `inst` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn glkit_instance_dim(inst: *const GlkitInstance, out: *mut usize) -> GlkitStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = inst.inner.set.dim();
        Ok(())
    })
}

/// Runs GLPG with accuracy `delta` and default options otherwise.
///
/// # Safety
/// `inst` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn glkit_solve(inst: *const GlkitInstance, delta: f64, out: *mut *mut GlkitSolution) -> GlkitStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if !(delta > 0.0 && delta.is_finite()) {
            return Err((GlkitStatus::BadInput, format!("delta must be positive, got {delta}")));
        }
        let opts = SolveOptions { delta, ..SolveOptions::default() };
        let set = &inst.inner.set;
        let output = match &inst.inner.theta {
            ThetaSpec::Integer(theta) => glpg::solve_covered(set, theta, &opts).map_err(solver_error)?,
            ThetaSpec::Real { values, epsilon } => glpg::solve_real(set, values, *epsilon, &opts).map_err(solver_error)?.output,
        };
        *out = Box::into_raw(Box::new(GlkitSolution { output, dim: set.dim() }));
        Ok(())
    })
}

/// # Safety
/// `sol` must come from `glkit_solve` or be null.
#[no_mangle]
pub unsafe extern "C" fn glkit_solution_free(sol: *mut GlkitSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// `Σ_k α_k Δ_{x^k}` of the allocation.
///
/// # Safety
/// `sol` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn glkit_solution_objective(sol: *const GlkitSolution, out: *mut f64) -> GlkitStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = sol.output.objective;
        Ok(())
    })
}

/// Certified largest constraint violation of the allocation.
///
/// # Safety
/// `sol` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn glkit_solution_violation(sol: *const GlkitSolution, out: *mut f64) -> GlkitStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = sol.output.certified_max_violation;
        Ok(())
    })
}

/// Number of decisions in the allocation.
///
/// # Safety
/// `sol` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn glkit_solution_num_atoms(sol: *const GlkitSolution, out: *mut usize) -> GlkitStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = sol.output.atoms.len();
        Ok(())
    })
}

/// Copies atom `k` into `bits` (length `len`, at least the dimension) and
/// its weight into `weight`.
///
/// # Safety
/// `sol` and `weight` must be valid; `bits` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn glkit_solution_atom(
    sol: *const GlkitSolution,
    k: usize,
    bits: *mut u8,
    len: usize,
    weight: *mut f64,
) -> GlkitStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        if bits.is_null() {
            return Err(null("bits"));
        }
        let weight = weight.as_mut().ok_or_else(|| null("weight"))?;
        let atom = sol
            .output
            .atoms
            .get(k)
            .ok_or_else(|| (GlkitStatus::OutOfRange, format!("atom {k} of {}", sol.output.atoms.len())))?;
        if len < sol.dim {
            return Err((GlkitStatus::OutOfRange, format!("buffer of {len} bytes for dimension {}", sol.dim)));
        }
        ptr::copy_nonoverlapping(atom.bits().as_ptr(), bits, sol.dim);
        *weight = sol.output.weights[k];
        Ok(())
    })
}

/// Solution as JSON. Release the string with `glkit_string_free`.
///
/// # Safety
/// `sol` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn glkit_solution_to_json(sol: *const GlkitSolution, out: *mut *mut c_char) -> GlkitStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = serde_json::to_string(&sol.output).map_err(|e| (GlkitStatus::SolverFailure, e.to_string()))?;
        *out = CString::new(text).expect("JSON has no nul").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from a glkit function returning an owned string, or be null.
#[no_mangle]
pub unsafe extern "C" fn glkit_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Brute-force `C(θ)` for instances with at most 500 decisions.
///
/// # Safety
/// `inst` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn glkit_brute_force(inst: *const GlkitInstance, out: *mut f64) -> GlkitStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = reference::brute_force_gl(&inst.inner.set, &inst.inner.theta.as_f64(), 1e-9).map_err(solver_error)?;
        *out = r.c;
        Ok(())
    })
}
