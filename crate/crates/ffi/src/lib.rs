//! C ABI for the critwave numerical laboratory: opaque handles, integer
//! status codes, and a thread-local last-error message. Every function is
//! panic-safe at the boundary.
//!
//! Status codes: 0 success, 1 null pointer, 2 invalid argument,
//! 3 computation failure, 4 internal panic.

use critwave::bubble_decomposition::{
    extract_bubbles_with, CaseTag, DecompositionResult, ExtractionConfig,
};
use critwave::core_fields::{GridScheme, RadialGrid, RadialProfile, StatePair};
use critwave::elliptic::{build_phi, solve_w_star, EllipticSolution};
use critwave::estimates_lab::{bootstrap_recursion_check, BootstrapConstants};
use critwave::ground_state::{self, Bubble};
use critwave::linear_radiation::{
    concentration_tau, data_from_profile, free_wave_from_profile, profile_from_data,
    RadiationProfile,
};
use libc::{c_char, c_int, size_t};
use std::cell::RefCell;
use std::ffi::CString;
use std::panic::{catch_unwind, AssertUnwindSafe};

pub const CRITWAVE_OK: c_int = 0;
pub const CRITWAVE_NULL_POINTER: c_int = 1;
pub const CRITWAVE_INVALID_ARGUMENT: c_int = 2;
pub const CRITWAVE_COMPUTATION_FAILED: c_int = 3;
pub const CRITWAVE_PANIC: c_int = 4;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let cleaned: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(cleaned).unwrap());
}

fn fail(code: c_int, msg: &str) -> c_int {
    set_error(msg);
    code
}

fn guarded<F: FnOnce() -> c_int>(f: F) -> c_int {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => fail(CRITWAVE_PANIC, "internal panic across the FFI boundary"),
    }
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn critwave_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn critwave_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

// ---------------------------------------------------------------------------
// Ground state
// ---------------------------------------------------------------------------

/// Signed dilated ground state value at radius r.
#[no_mangle]
pub extern "C" fn critwave_eval_w(r: f64, sign: c_int, lambda: f64, out: *mut f64) -> c_int {
    guarded(|| {
        if out.is_null() {
            return fail(CRITWAVE_NULL_POINTER, "out is null");
        }
        match Bubble::new(sign as i8, lambda) {
            Ok(b) => {
                unsafe { *out = ground_state::eval_w(r, &b) };
                CRITWAVE_OK
            }
            Err(e) => fail(CRITWAVE_INVALID_ARGUMENT, &e.to_string()),
        }
    })
}

/// F(u) = |u|^4 u.
#[no_mangle]
pub extern "C" fn critwave_nonlinearity(u: f64) -> f64 {
    ground_state::nonlinearity(u)
}

/// (3/4)^(1/4) (t_plus - t)^(-1/2); fails when t >= t_plus.
#[no_mangle]
pub extern "C" fn critwave_type_one_reference(t: f64, t_plus: f64, out: *mut f64) -> c_int {
    guarded(|| {
        if out.is_null() {
            return fail(CRITWAVE_NULL_POINTER, "out is null");
        }
        match critwave::nonlinear_evolution::type_one_reference(t, t_plus) {
            Ok(v) => {
                unsafe { *out = v };
                CRITWAVE_OK
            }
            Err(e) => fail(CRITWAVE_INVALID_ARGUMENT, &e.to_string()),
        }
    })
}

// ---------------------------------------------------------------------------
// Grids and states
// ---------------------------------------------------------------------------

pub struct CwGrid {
    inner: RadialGrid,
}

pub struct CwState {
    inner: StatePair,
}

pub struct CwRadiationProfile {
    inner: RadiationProfile,
}

pub struct CwElliptic {
    inner: EllipticSolution,
}

pub struct CwDecomposition {
    inner: DecompositionResult,
}

/// Builds a radial grid; scheme 0 = uniform, 1 = logarithmic.
#[no_mangle]
pub extern "C" fn critwave_grid_new(
    r_min: f64,
    r_max: f64,
    n: size_t,
    scheme: c_int,
    out: *mut *mut CwGrid,
) -> c_int {
    guarded(|| {
        if out.is_null() {
            return fail(CRITWAVE_NULL_POINTER, "out is null");
        }
        let scheme = match scheme {
            0 => GridScheme::Uniform,
            1 => GridScheme::Logarithmic,
            _ => return fail(CRITWAVE_INVALID_ARGUMENT, "scheme must be 0 or 1"),
        };
        match critwave::core_fields::make_grid(r_min, r_max, n, scheme) {
            Ok(g) => {
                unsafe { *out = Box::into_raw(Box::new(CwGrid { inner: g })) };
                CRITWAVE_OK
            }
            Err(e) => fail(CRITWAVE_INVALID_ARGUMENT, &e.to_string()),
        }
    })
}

/// # Safety
/// `grid` must be a pointer from `critwave_grid_new`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn critwave_grid_free(grid: *mut CwGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// # Safety
/// `grid` must be a live grid handle.
#[no_mangle]
pub unsafe extern "C" fn critwave_grid_len(grid: *const CwGrid) -> size_t {
    if grid.is_null() {
        return 0;
    }
    (*grid).inner.len()
}

/// Copies the node radii into `buf` (length `len` >= grid length).
/// # Safety
/// `grid` must be live; `buf` must point to at least `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn critwave_grid_nodes(
    grid: *const CwGrid,
    buf: *mut f64,
    len: size_t,
) -> c_int {
    guarded(|| {
        if grid.is_null() || buf.is_null() {
            return fail(CRITWAVE_NULL_POINTER, "grid or buf is null");
        }
        let nodes = unsafe { (*grid).inner.nodes() };
        if len < nodes.len() {
            return fail(CRITWAVE_INVALID_ARGUMENT, "buffer too short");
        }
        unsafe { std::ptr::copy_nonoverlapping(nodes.as_ptr(), buf, nodes.len()) };
        CRITWAVE_OK
    })
}

/// Builds an energy-space pair from sampled (u0, u1) on the grid. Tail
/// exponents extend integrals beyond the grid; pass NaN for none.
/// # Safety
/// `grid` must be live; `u0`/`u1` must point to `len` doubles each with
/// `len` equal to the grid length.
#[no_mangle]
pub unsafe extern "C" fn critwave_state_new(
    grid: *const CwGrid,
    u0: *const f64,
    u1: *const f64,
    len: size_t,
    u0_tail_exponent: f64,
    u1_tail_exponent: f64,
    out: *mut *mut CwState,
) -> c_int {
    guarded(|| {
        if grid.is_null() || u0.is_null() || u1.is_null() || out.is_null() {
            return fail(CRITWAVE_NULL_POINTER, "null argument");
        }
        let g = unsafe { &(*grid).inner };
        if len != g.len() {
            return fail(CRITWAVE_INVALID_ARGUMENT, "len does not match grid length");
        }
        let u0v = unsafe { std::slice::from_raw_parts(u0, len) }.to_vec();
        let u1v = unsafe { std::slice::from_raw_parts(u1, len) }.to_vec();
        let t0 = if u0_tail_exponent.is_nan() {
            None
        } else {
            Some(u0_tail_exponent)
        };
        let t1 = if u1_tail_exponent.is_nan() {
            None
        } else {
            Some(u1_tail_exponent)
        };
        let build = || -> Result<StatePair, critwave::core_fields::FieldError> {
            let p0 = RadialProfile::new(g.clone(), u0v, t0)?;
            let p1 = RadialProfile::new(g.clone(), u1v, t1)?;
            StatePair::new(p0, p1)
        };
        match build() {
            Ok(s) => {
                unsafe { *out = Box::into_raw(Box::new(CwState { inner: s })) };
                CRITWAVE_OK
            }
            Err(e) => fail(CRITWAVE_INVALID_ARGUMENT, &e.to_string()),
        }
    })
}

/// # Safety
/// `state` must be a pointer from a critwave constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn critwave_state_free(state: *mut CwState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Exterior energy norm of the state outside `radius`.
/// # Safety
/// `state` must be live.
#[no_mangle]
pub unsafe extern "C" fn critwave_h_norm(
    state: *const CwState,
    radius: f64,
    out: *mut f64,
) -> c_int {
    guarded(|| {
        if state.is_null() || out.is_null() {
            return fail(CRITWAVE_NULL_POINTER, "null argument");
        }
        match critwave::core_fields::h_norm(unsafe { &(*state).inner }, radius) {
            Ok(v) => {
                unsafe { *out = v };
                CRITWAVE_OK
            }
            Err(e) => fail(CRITWAVE_COMPUTATION_FAILED, &e.to_string()),
        }
    })
}

/// Conserved energy of the state.
/// # Safety
/// `state` must be live.
#[no_mangle]
pub unsafe extern "C" fn critwave_energy(state: *const CwState, out: *mut f64) -> c_int {
    guarded(|| {
        if state.is_null() || out.is_null() {
            return fail(CRITWAVE_NULL_POINTER, "null argument");
        }
        match ground_state::energy(unsafe { &(*state).inner }) {
            Ok(v) => {
                unsafe { *out = v };
                CRITWAVE_OK
            }
            Err(e) => fail(CRITWAVE_COMPUTATION_FAILED, &e.to_string()),
        }
    })
}

// ---------------------------------------------------------------------------
// Radiation profiles
// ---------------------------------------------------------------------------

/// Builds a radiation profile from samples of s and G(s).
/// # Safety
/// `s` and `g` must point to `len` doubles each.
#[no_mangle]
pub unsafe extern "C" fn critwave_radiation_profile_new(
    s: *const f64,
    g: *const f64,
    len: size_t,
    exterior_radius: f64,
    residue: f64,
    out: *mut *mut CwRadiationProfile,
) -> c_int {
    guarded(|| {
        if s.is_null() || g.is_null() || out.is_null() {
            return fail(CRITWAVE_NULL_POINTER, "null argument");
        }
        let sv = unsafe { std::slice::from_raw_parts(s, len) }.to_vec();
        let gv = unsafe { std::slice::from_raw_parts(g, len) }.to_vec();
        match RadiationProfile::new(sv, gv, exterior_radius, residue) {
            Ok(p) => {
                unsafe { *out = Box::into_raw(Box::new(CwRadiationProfile { inner: p })) };
                CRITWAVE_OK
            }
            Err(e) => fail(CRITWAVE_INVALID_ARGUMENT, &e.to_string()),
        }
    })
}

/// # Safety
/// `profile` must be a pointer from a critwave constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn critwave_radiation_profile_free(profile: *mut CwRadiationProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Initial data of the free wave with this profile, sampled on the grid.
/// # Safety
/// `profile` and `grid` must be live.
#[no_mangle]
pub unsafe extern "C" fn critwave_data_from_profile(
    profile: *const CwRadiationProfile,
    grid: *const CwGrid,
    out: *mut *mut CwState,
) -> c_int {
    guarded(|| {
        if profile.is_null() || grid.is_null() || out.is_null() {
            return fail(CRITWAVE_NULL_POINTER, "null argument");
        }
        match data_from_profile(unsafe { &(*profile).inner }, unsafe { &(*grid).inner }) {
            Ok(st) => {
                unsafe { *out = Box::into_raw(Box::new(CwState { inner: st })) };
                CRITWAVE_OK
            }
            Err(e) => fail(CRITWAVE_COMPUTATION_FAILED, &e.to_string()),
        }
    })
}

/// Recovers the radiation profile of a state restricted to |x| > radius.
/// # Safety
/// `state` must be live.
#[no_mangle]
pub unsafe extern "C" fn critwave_profile_from_data(
    state: *const CwState,
    radius: f64,
    out: *mut *mut CwRadiationProfile,
) -> c_int {
    guarded(|| {
        if state.is_null() || out.is_null() {
            return fail(CRITWAVE_NULL_POINTER, "null argument");
        }
        match profile_from_data(unsafe { &(*state).inner }, radius) {
            Ok(p) => {
                unsafe { *out = Box::into_raw(Box::new(CwRadiationProfile { inner: p })) };
                CRITWAVE_OK
            }
            Err(e) => fail(CRITWAVE_COMPUTATION_FAILED, &e.to_string()),
        }
    })
}

/// # Safety
/// `profile` must be live.
#[no_mangle]
pub unsafe extern "C" fn critwave_profile_residue(
    profile: *const CwRadiationProfile,
    out: *mut f64,
) -> c_int {
    guarded(|| {
        if profile.is_null() || out.is_null() {
            return fail(CRITWAVE_NULL_POINTER, "null argument");
        }
        unsafe { *out = (*profile).inner.residue() };
        CRITWAVE_OK
    })
}

/// L2 mass of the profile over |s| > radius.
/// # Safety
/// `profile` must be live.
#[no_mangle]
pub unsafe extern "C" fn critwave_profile_l2_mass_outside(
    profile: *const CwRadiationProfile,
    radius: f64,
    out: *mut f64,
) -> c_int {
    guarded(|| {
        if profile.is_null() || out.is_null() {
            return fail(CRITWAVE_NULL_POINTER, "null argument");
        }
        unsafe { *out = (*profile).inner.l2_mass_outside(radius) };
        CRITWAVE_OK
    })
}

/// Free-wave values u, du/dt, du/dr at (r, t) for this profile.
/// # Safety
/// `profile` must be live; output pointers may be null to skip a component.
#[no_mangle]
pub unsafe extern "C" fn critwave_free_wave_eval(
    profile: *const CwRadiationProfile,
    r: f64,
    t: f64,
    u: *mut f64,
    u_t: *mut f64,
    u_r: *mut f64,
) -> c_int {
    guarded(|| {
        if profile.is_null() {
            return fail(CRITWAVE_NULL_POINTER, "profile is null");
        }
        let wave = free_wave_from_profile(unsafe { &(*profile).inner });
        let fill = |ptr: *mut f64,
                    v: Result<f64, critwave::linear_radiation::RadiationError>|
         -> Result<(), critwave::linear_radiation::RadiationError> {
            if ptr.is_null() {
                return Ok(());
            }
            let x = v?;
            unsafe { *ptr = x };
            Ok(())
        };
        let res = fill(u, wave.u(r, t))
            .and_then(|_| fill(u_t, wave.u_t(r, t)))
            .and_then(|_| fill(u_r, wave.u_r(r, t)));
        match res {
            Ok(()) => CRITWAVE_OK,
            Err(e) => fail(CRITWAVE_COMPUTATION_FAILED, &e.to_string()),
        }
    })
}

/// The concentration functional at scale lambda: windowed-L2 term, L1 term
/// and the total (with the supplied Strichartz value added in).
/// # Safety
/// `profile` must be live; output pointers may be null to skip a component.
#[no_mangle]
pub unsafe extern "C" fn critwave_concentration_tau(
    profile: *const CwRadiationProfile,
    y_norm_vl: f64,
    lambda: f64,
    sup_window: *mut f64,
    l1_sup: *mut f64,
    total: *mut f64,
) -> c_int {
    guarded(|| {
        if profile.is_null() {
            return fail(CRITWAVE_NULL_POINTER, "profile is null");
        }
        match concentration_tau(unsafe { &(*profile).inner }, y_norm_vl, lambda) {
            Ok(rep) => {
                if !sup_window.is_null() {
                    unsafe { *sup_window = rep.term_sup_window };
                }
                if !l1_sup.is_null() {
                    unsafe { *l1_sup = rep.term_l1_sup };
                }
                if !total.is_null() {
                    unsafe { *total = rep.total };
                }
                CRITWAVE_OK
            }
            Err(e) => fail(CRITWAVE_COMPUTATION_FAILED, &e.to_string()),
        }
    })
}

// ---------------------------------------------------------------------------
// Elliptic corrector
// ---------------------------------------------------------------------------

/// Solves the linearized elliptic problem and assembles phi with phi(c) = 0.
#[no_mangle]
pub extern "C" fn critwave_solve_elliptic(
    c: f64,
    r_infinity: f64,
    tol: f64,
    out: *mut *mut CwElliptic,
) -> c_int {
    guarded(|| {
        if out.is_null() {
            return fail(CRITWAVE_NULL_POINTER, "out is null");
        }
        let run = || -> Result<EllipticSolution, critwave::elliptic::EllipticError> {
            build_phi(c, solve_w_star(r_infinity, tol)?)
        };
        match run() {
            Ok(sol) => {
                unsafe { *out = Box::into_raw(Box::new(CwElliptic { inner: sol })) };
                CRITWAVE_OK
            }
            Err(e) => fail(CRITWAVE_COMPUTATION_FAILED, &e.to_string()),
        }
    })
}

/// # Safety
/// `sol` must be a pointer from `critwave_solve_elliptic`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn critwave_elliptic_free(sol: *mut CwElliptic) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// mu0 = w*(0) and beta = -w*(c)/v(c).
/// # Safety
/// `sol` must be live; output pointers may be null to skip a component.
#[no_mangle]
pub unsafe extern "C" fn critwave_elliptic_constants(
    sol: *const CwElliptic,
    mu0: *mut f64,
    beta: *mut f64,
) -> c_int {
    guarded(|| {
        if sol.is_null() {
            return fail(CRITWAVE_NULL_POINTER, "sol is null");
        }
        if !mu0.is_null() {
            unsafe { *mu0 = (*sol).inner.mu0() };
        }
        if !beta.is_null() {
            unsafe { *beta = (*sol).inner.beta() };
        }
        CRITWAVE_OK
    })
}

/// phi(r) = (w*(r) + beta v(r)) / r.
/// # Safety
/// `sol` must be live.
#[no_mangle]
pub unsafe extern "C" fn critwave_elliptic_phi(
    sol: *const CwElliptic,
    r: f64,
    out: *mut f64,
) -> c_int {
    guarded(|| {
        if sol.is_null() || out.is_null() {
            return fail(CRITWAVE_NULL_POINTER, "null argument");
        }
        if !(r > 0.0) {
            return fail(CRITWAVE_INVALID_ARGUMENT, "r must be positive");
        }
        unsafe { *out = (*sol).inner.phi(r) };
        CRITWAVE_OK
    })
}

// ---------------------------------------------------------------------------
// Decomposition
// ---------------------------------------------------------------------------

/// Extracts bubbles from a state (optionally subtracting a radiation trace).
/// `refine_sweeps = 0` reproduces the plain inductive pass.
/// # Safety
/// `state` must be live; `vl_state` may be null.
#[no_mangle]
pub unsafe extern "C" fn critwave_extract_bubbles(
    state: *const CwState,
    vl_state: *const CwState,
    c2: f64,
    n_max: size_t,
    refine_sweeps: size_t,
    out: *mut *mut CwDecomposition,
) -> c_int {
    guarded(|| {
        if state.is_null() || out.is_null() {
            return fail(CRITWAVE_NULL_POINTER, "null argument");
        }
        let vl = if vl_state.is_null() {
            None
        } else {
            Some(unsafe { &(*vl_state).inner })
        };
        let config = ExtractionConfig {
            c2,
            n_max,
            refine_sweeps,
            ..Default::default()
        };
        match extract_bubbles_with(unsafe { &(*state).inner }, vl, &config) {
            Ok(d) => {
                unsafe { *out = Box::into_raw(Box::new(CwDecomposition { inner: d })) };
                CRITWAVE_OK
            }
            Err(e) => fail(CRITWAVE_COMPUTATION_FAILED, &e.to_string()),
        }
    })
}

/// # Safety
/// `d` must be a pointer from `critwave_extract_bubbles`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn critwave_decomposition_free(d: *mut CwDecomposition) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// # Safety
/// `d` must be live.
#[no_mangle]
pub unsafe extern "C" fn critwave_decomposition_len(d: *const CwDecomposition) -> size_t {
    if d.is_null() {
        return 0;
    }
    (*d).inner.bubbles.len()
}

/// Case tag: 0 = complete resolution, 1 = exterior (bubbles remain), -1 null.
/// # Safety
/// `d` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn critwave_decomposition_case(d: *const CwDecomposition) -> c_int {
    if d.is_null() {
        return -1;
    }
    match (*d).inner.case_tag {
        CaseTag::CompleteA => 0,
        CaseTag::ExteriorB => 1,
    }
}

/// Sign and scale of bubble `index`.
/// # Safety
/// `d` must be live; output pointers may be null to skip a component.
#[no_mangle]
pub unsafe extern "C" fn critwave_decomposition_bubble(
    d: *const CwDecomposition,
    index: size_t,
    sign: *mut c_int,
    scale: *mut f64,
) -> c_int {
    guarded(|| {
        if d.is_null() {
            return fail(CRITWAVE_NULL_POINTER, "d is null");
        }
        let bubbles = unsafe { (*d).inner.bubbles.bubbles() };
        let Some(b) = bubbles.get(index) else {
            return fail(CRITWAVE_INVALID_ARGUMENT, "bubble index out of range");
        };
        if !sign.is_null() {
            unsafe { *sign = b.sign() as c_int };
        }
        if !scale.is_null() {
            unsafe { *scale = b.scale() };
        }
        CRITWAVE_OK
    })
}

/// The resolution residual (full-space or exterior, per the case tag).
/// # Safety
/// `d` must be live.
#[no_mangle]
pub unsafe extern "C" fn critwave_decomposition_residual(
    d: *const CwDecomposition,
    out: *mut f64,
) -> c_int {
    guarded(|| {
        if d.is_null() || out.is_null() {
            return fail(CRITWAVE_NULL_POINTER, "null argument");
        }
        let r = unsafe {
            (*d).inner
                .residual_full
                .or((*d).inner.residual_exterior)
                .unwrap_or(f64::NAN)
        };
        unsafe { *out = r };
        CRITWAVE_OK
    })
}

// ---------------------------------------------------------------------------
// Bootstrap recursion
// ---------------------------------------------------------------------------

/// Runs the envelope recursion; fails with an invalid-argument status when
/// the constants violate an admissibility condition.
/// # Safety
/// Output pointers may be null to skip a component.
#[no_mangle]
pub unsafe extern "C" fn critwave_bootstrap_check(
    c0_star: f64,
    c1_star: f64,
    c2_star: f64,
    c3_star: f64,
    gamma: f64,
    c1: f64,
    c2: f64,
    k: size_t,
    tau: f64,
    m_final: *mut f64,
    iterations: *mut size_t,
    max_ratio: *mut f64,
) -> c_int {
    guarded(|| {
        let constants = BootstrapConstants {
            c0_star,
            c1_star,
            c2_star,
            c3_star,
            gamma,
            c1,
            c2,
        };
        match bootstrap_recursion_check(&constants, k, tau) {
            Ok(out) => {
                if !m_final.is_null() {
                    unsafe { *m_final = out.m_final };
                }
                if !iterations.is_null() {
                    unsafe { *iterations = out.iterations };
                }
                if !max_ratio.is_null() {
                    unsafe { *max_ratio = out.max_ratio };
                }
                CRITWAVE_OK
            }
            Err(e) => fail(CRITWAVE_INVALID_ARGUMENT, &e.to_string()),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_w_through_abi() {
        let mut v = 0.0;
        assert_eq!(critwave_eval_w(0.0, 1, 1.0, &mut v), CRITWAVE_OK);
        assert!((v - 3.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(
            critwave_eval_w(0.0, 1, -1.0, &mut v),
            CRITWAVE_INVALID_ARGUMENT
        );
        let msg = unsafe { std::ffi::CStr::from_ptr(critwave_last_error()) };
        assert!(!msg.to_bytes().is_empty());
    }

    #[test]
    fn grid_state_norm_round_trip() {
        unsafe {
            let mut grid: *mut CwGrid = std::ptr::null_mut();
            assert_eq!(critwave_grid_new(1e-4, 1e4, 1025, 1, &mut grid), CRITWAVE_OK);
            let n = critwave_grid_len(grid);
            assert_eq!(n, 1025);
            let mut nodes = vec![0.0; n];
            assert_eq!(critwave_grid_nodes(grid, nodes.as_mut_ptr(), n), CRITWAVE_OK);

            let u0: Vec<f64> = nodes
                .iter()
                .map(|&r| (1.0f64 / 3.0 + r * r).powf(-0.5))
                .collect();
            let u1 = vec![0.0; n];
            let mut state: *mut CwState = std::ptr::null_mut();
            assert_eq!(
                critwave_state_new(grid, u0.as_ptr(), u1.as_ptr(), n, 1.0, f64::NAN, &mut state),
                CRITWAVE_OK
            );
            let mut h = 0.0;
            assert_eq!(critwave_h_norm(state, 0.0, &mut h), CRITWAVE_OK);
            let exact = (3.0 * 3.0f64.sqrt() * std::f64::consts::PI.powi(2) / 4.0).sqrt();
            assert!((h - exact).abs() < 1e-3 * exact, "h={h}");
            let mut e = 0.0;
            assert_eq!(critwave_energy(state, &mut e), CRITWAVE_OK);
            assert!((e - exact * exact / 3.0).abs() < 1e-2 * e.abs());

            critwave_state_free(state);
            critwave_grid_free(grid);
        }
    }

    #[test]
    fn radiation_isometry_through_abi() {
        unsafe {
            let n = 2001usize;
            let s: Vec<f64> = (0..n)
                .map(|i| -4.0 + 8.0 * i as f64 / (n - 1) as f64)
                .collect();
            let g: Vec<f64> = s.iter().map(|&x| (-x * x).exp()).collect();
            let mut profile: *mut CwRadiationProfile = std::ptr::null_mut();
            assert_eq!(
                critwave_radiation_profile_new(s.as_ptr(), g.as_ptr(), n, 0.0, 0.0, &mut profile),
                CRITWAVE_OK
            );
            let mut grid: *mut CwGrid = std::ptr::null_mut();
            assert_eq!(critwave_grid_new(1e-3, 30.0, 30001, 0, &mut grid), CRITWAVE_OK);
            let mut state: *mut CwState = std::ptr::null_mut();
            assert_eq!(
                critwave_data_from_profile(profile, grid, &mut state),
                CRITWAVE_OK
            );
            let mut h = 0.0;
            assert_eq!(critwave_h_norm(state, 0.0, &mut h), CRITWAVE_OK);
            let mut mass = 0.0;
            assert_eq!(
                critwave_profile_l2_mass_outside(profile, 0.0, &mut mass),
                CRITWAVE_OK
            );
            let rhs = (8.0 * std::f64::consts::PI * mass).sqrt();
            assert!((h - rhs).abs() < 1e-6 * rhs, "h={h} rhs={rhs}");

            let mut recovered: *mut CwRadiationProfile = std::ptr::null_mut();
            assert_eq!(
                critwave_profile_from_data(state, 0.5, &mut recovered),
                CRITWAVE_OK
            );
            let mut residue = 0.0;
            assert_eq!(critwave_profile_residue(recovered, &mut residue), CRITWAVE_OK);
            assert!(residue.is_finite());

            critwave_radiation_profile_free(recovered);
            critwave_state_free(state);
            critwave_grid_free(grid);
            critwave_radiation_profile_free(profile);
        }
    }

    #[test]
    fn decomposition_through_abi() {
        unsafe {
            let mut grid: *mut CwGrid = std::ptr::null_mut();
            assert_eq!(critwave_grid_new(1e-7, 1e4, 1409, 1, &mut grid), CRITWAVE_OK);
            let n = critwave_grid_len(grid);
            let mut nodes = vec![0.0; n];
            critwave_grid_nodes(grid, nodes.as_mut_ptr(), n);
            let w = |r: f64, l: f64| l.powf(-0.5) * (1.0f64 / 3.0 + (r / l) * (r / l)).powf(-0.5);
            let u0: Vec<f64> = nodes.iter().map(|&r| w(r, 1.0) + w(r, 1e-4)).collect();
            let u1 = vec![0.0; n];
            let mut state: *mut CwState = std::ptr::null_mut();
            assert_eq!(
                critwave_state_new(grid, u0.as_ptr(), u1.as_ptr(), n, 1.0, f64::NAN, &mut state),
                CRITWAVE_OK
            );
            let mut d: *mut CwDecomposition = std::ptr::null_mut();
            assert_eq!(
                critwave_extract_bubbles(state, std::ptr::null(), 100.0, 5, 4, &mut d),
                CRITWAVE_OK
            );
            assert_eq!(critwave_decomposition_len(d), 2);
            assert_eq!(critwave_decomposition_case(d), 0);
            let (mut sign, mut scale) = (0, 0.0);
            assert_eq!(
                critwave_decomposition_bubble(d, 1, &mut sign, &mut scale),
                CRITWAVE_OK
            );
            assert_eq!(sign, 1);
            assert!((scale - 1e-4).abs() < 1e-6);
            critwave_decomposition_free(d);
            critwave_state_free(state);
            critwave_grid_free(grid);
        }
    }

    #[test]
    fn elliptic_and_bootstrap_through_abi() {
        unsafe {
            let mut sol: *mut CwElliptic = std::ptr::null_mut();
            assert_eq!(
                critwave_solve_elliptic(100.0, 1e4, 1e-12, &mut sol),
                CRITWAVE_OK
            );
            let (mut mu0, mut beta) = (0.0, 0.0);
            assert_eq!(critwave_elliptic_constants(sol, &mut mu0, &mut beta), CRITWAVE_OK);
            assert!(mu0.abs() > 0.1);
            let mut phi_c = 0.0;
            assert_eq!(critwave_elliptic_phi(sol, 100.0, &mut phi_c), CRITWAVE_OK);
            assert!(phi_c.abs() < 1e-10);
            critwave_elliptic_free(sol);

            let (mut m, mut iters, mut ratio) = (1.0, 0usize, 0.0);
            assert_eq!(
                critwave_bootstrap_check(
                    1.0, 1.0, 1.0, 1.0, 25.0, 1e-7, 100.0, 10, 1e-3, &mut m, &mut iters,
                    &mut ratio
                ),
                CRITWAVE_OK
            );
            assert!(m <= 1e-12);
            assert!(ratio <= 0.4 + 1e-9);
            assert_eq!(
                critwave_bootstrap_check(
                    1.0, 1.0, 1.0, 1.0, 25.0, 0.9, 100.0, 10, 1e-3, &mut m, &mut iters,
                    &mut ratio
                ),
                CRITWAVE_INVALID_ARGUMENT
            );
        }
    }
}
