//! C ABI for the distdesign library: opaque handles, integer status
//! codes, and a cbindgen-generated header (`include/distdesign.h`).
//!
//! Conventions:
//! - Constructors write an owned handle through an out-pointer and return
//!   a [`DdStatus`]; every handle must be released with the matching
//!   `*_free` function.
//! - On any non-`Ok` status, `dd_last_error_message` returns a
//!   descriptive string valid until the next failing call on the same
//!   thread.
//! - Coordinate buffers are row-major `n x d` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

use distdesign::design::{
    dist_targeted_design, lhs_design, lhsbeta_design, maximin_design, one_dim_uniform,
    phi_p_design, random_design, Design,
};
use distdesign::dist::{ksd, phi_p, DistanceTarget};
use distdesign::error::Error;
use distdesign::gp::{mle_theta, GpModel};
use distdesign::tuner::catalog_lookup;

/// Call outcome. Zero is success; everything else is an error whose
/// message is available from `dd_last_error_message`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    ParseError = 3,
    NumericFailure = 4,
    DegenerateData = 5,
    InvalidUtf8 = 6,
}

/// Design construction methods.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdMethod {
    Random = 0,
    Lhs = 1,
    Maximin = 2,
    Phip = 3,
    Unifdist = 4,
    Betadist = 5,
    Lhsbeta = 6,
}

/// Distance-target families for KS evaluation.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdTargetFamily {
    Uniform = 0,
    Beta = 1,
}

/// Opaque design handle.
pub struct DdDesign {
    inner: Design,
}

/// Opaque fitted-GP handle.
pub struct DdGp {
    model: GpModel,
    loglik: f64,
    theta_at_bound: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> DdStatus {
    set_error(&err.to_string());
    match err {
        Error::InvalidInput(_) => DdStatus::InvalidInput,
        Error::Io(_) | Error::Parse { .. } => DdStatus::ParseError,
        Error::Numeric(_) => DdStatus::NumericFailure,
        Error::DegenerateData(_) => DdStatus::DegenerateData,
    }
}

fn null_error(what: &str) -> DdStatus {
    set_error(&format!("null pointer: {what}"));
    DdStatus::NullPointer
}

/// Message describing the most recent failure on this thread. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn dd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Builds a design. `alpha`/`beta` apply to the betadist and lhsbeta
/// methods, `p` to phip, `iterations` to every stochastic search.
///
/// # Safety
/// `out` must be a valid pointer to a `*mut DdDesign` slot.
#[no_mangle]
pub unsafe extern "C" fn dd_design_generate(
    method: DdMethod,
    n: usize,
    d: usize,
    alpha: f64,
    beta: f64,
    p: f64,
    iterations: u64,
    seed: u64,
    out: *mut *mut DdDesign,
) -> DdStatus {
    if out.is_null() {
        return null_error("out");
    }
    let built = match method {
        DdMethod::Random => random_design(n, d, seed),
        DdMethod::Lhs => lhs_design(n, d, seed),
        DdMethod::Maximin => maximin_design(n, d, iterations, seed),
        DdMethod::Phip => phi_p_design(n, d, p, iterations, seed),
        DdMethod::Unifdist => {
            dist_targeted_design(n, d, &DistanceTarget::uniform(d), iterations, seed)
        }
        DdMethod::Betadist => DistanceTarget::beta(alpha, beta, d)
            .and_then(|t| dist_targeted_design(n, d, &t, iterations, seed)),
        DdMethod::Lhsbeta => DistanceTarget::beta(alpha, beta, d)
            .and_then(|t| lhsbeta_design(n, d, &t, iterations, seed)),
    };
    match built {
        Ok(design) => {
            unsafe { *out = Box::into_raw(Box::new(DdDesign { inner: design })) };
            DdStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

unsafe fn path_from(ptr: *const c_char) -> Result<String, DdStatus> {
    if ptr.is_null() {
        return Err(null_error("path"));
    }
    match unsafe { CStr::from_ptr(ptr) }.to_str() {
        Ok(s) => Ok(s.to_owned()),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(DdStatus::InvalidUtf8)
        }
    }
}

/// Reads a headerless coordinate CSV.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn dd_design_load_csv(
    path: *const c_char,
    out: *mut *mut DdDesign,
) -> DdStatus {
    if out.is_null() {
        return null_error("out");
    }
    let path = match unsafe { path_from(path) } {
        Ok(p) => p,
        Err(s) => return s,
    };
    match Design::load_csv(std::path::Path::new(&path)) {
        Ok(design) => {
            unsafe { *out = Box::into_raw(Box::new(DdDesign { inner: design })) };
            DdStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Writes the design as headerless CSV (17-significant-digit decimals).
///
/// # Safety
/// `design` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dd_design_save_csv(
    design: *const DdDesign,
    path: *const c_char,
) -> DdStatus {
    let Some(design) = (unsafe { design.as_ref() }) else {
        return null_error("design");
    };
    let path = match unsafe { path_from(path) } {
        Ok(p) => p,
        Err(s) => return s,
    };
    match design.inner.save_csv(std::path::Path::new(&path)) {
        Ok(()) => DdStatus::Ok,
        Err(e) => status_of(&e),
    }
}

/// Number of points; 0 for a null handle.
///
/// # Safety
/// `design` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dd_design_n(design: *const DdDesign) -> usize {
    unsafe { design.as_ref() }.map_or(0, |d| d.inner.n())
}

/// Input dimension; 0 for a null handle.
///
/// # Safety
/// `design` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dd_design_d(design: *const DdDesign) -> usize {
    unsafe { design.as_ref() }.map_or(0, |d| d.inner.d())
}

/// Copies the row-major coordinates into `out`, which must hold at least
/// `dd_design_n * dd_design_d` doubles.
///
/// # Safety
/// `design` must be a live handle and `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dd_design_copy_coords(
    design: *const DdDesign,
    out: *mut f64,
    len: usize,
) -> DdStatus {
    let Some(design) = (unsafe { design.as_ref() }) else {
        return null_error("design");
    };
    if out.is_null() {
        return null_error("out");
    }
    let coords = design.inner.coords();
    if len < coords.len() {
        set_error(&format!(
            "buffer holds {len} doubles, need {}",
            coords.len()
        ));
        return DdStatus::InvalidInput;
    }
    unsafe { std::ptr::copy_nonoverlapping(coords.as_ptr(), out, coords.len()) };
    DdStatus::Ok
}

/// Kolmogorov-Smirnov distance between the design's pairwise-distance
/// distribution and a Beta/Uniform target scaled to [0, sqrt(d)].
///
/// # Safety
/// `design` must be a live handle and `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn dd_design_ksd(
    design: *const DdDesign,
    family: DdTargetFamily,
    alpha: f64,
    beta: f64,
    out: *mut f64,
) -> DdStatus {
    let Some(design) = (unsafe { design.as_ref() }) else {
        return null_error("design");
    };
    if out.is_null() {
        return null_error("out");
    }
    let target = match family {
        DdTargetFamily::Uniform => Ok(DistanceTarget::uniform(design.inner.d())),
        DdTargetFamily::Beta => DistanceTarget::beta(alpha, beta, design.inner.d()),
    };
    let target = match target {
        Ok(t) => t,
        Err(e) => return status_of(&e),
    };
    match design.inner.distances() {
        Ok(set) => {
            unsafe { *out = ksd(&set, &target) };
            DdStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Smallest pairwise distance.
///
/// # Safety
/// `design` must be a live handle and `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn dd_design_min_distance(
    design: *const DdDesign,
    out: *mut f64,
) -> DdStatus {
    let Some(design) = (unsafe { design.as_ref() }) else {
        return null_error("design");
    };
    if out.is_null() {
        return null_error("out");
    }
    match design.inner.distances() {
        Ok(set) => {
            unsafe { *out = set.min_distance() };
            DdStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// The phi_p distance criterion; infinite when points coincide.
///
/// # Safety
/// `design` must be a live handle and `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn dd_design_phi_p(
    design: *const DdDesign,
    p: f64,
    out: *mut f64,
) -> DdStatus {
    let Some(design) = (unsafe { design.as_ref() }) else {
        return null_error("design");
    };
    if out.is_null() {
        return null_error("out");
    }
    match design.inner.distances() {
        Ok(set) => {
            unsafe { *out = phi_p(&set, p) };
            DdStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Whether every 1d projection has exactly one point per width-1/n bin.
///
/// # Safety
/// `design` must be a live handle and `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn dd_design_one_dim_uniform(
    design: *const DdDesign,
    out: *mut bool,
) -> DdStatus {
    let Some(design) = (unsafe { design.as_ref() }) else {
        return null_error("design");
    };
    if out.is_null() {
        return null_error("out");
    }
    unsafe { *out = one_dim_uniform(&design.inner) };
    DdStatus::Ok
}

/// Releases a design handle; null is ignored.
///
/// # Safety
/// `design` must be null or a handle returned by this library that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn dd_design_free(design: *mut DdDesign) {
    if !design.is_null() {
        drop(unsafe { Box::from_raw(design) });
    }
}

/// Fits an isotropic Gaussian GP by bounded maximum likelihood on the
/// lengthscale (optionally with a nugget) and caches the factorization
/// for prediction. Inputs are row-major `n x d`.
///
/// # Safety
/// `x` must hold `n * d` doubles, `y` must hold `n`, and `out` must be a
/// valid slot.
#[no_mangle]
pub unsafe extern "C" fn dd_gp_fit(
    x: *const f64,
    n: usize,
    d: usize,
    y: *const f64,
    theta_lo: f64,
    theta_hi: f64,
    with_nugget: bool,
    out: *mut *mut DdGp,
) -> DdStatus {
    if x.is_null() || y.is_null() {
        return null_error("x/y");
    }
    if out.is_null() {
        return null_error("out");
    }
    let xs = unsafe { std::slice::from_raw_parts(x, n * d) };
    let ys = unsafe { std::slice::from_raw_parts(y, n) };
    let fitted = mle_theta(xs, n, d, ys, (theta_lo, theta_hi), with_nugget).and_then(|fit| {
        GpModel::fit(xs, n, d, ys, fit.kernel).map(|model| DdGp {
            model,
            loglik: fit.loglik,
            theta_at_bound: fit.theta_at_bound,
        })
    });
    match fitted {
        Ok(gp) => {
            unsafe { *out = Box::into_raw(Box::new(gp)) };
            DdStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Predictive mean and variance at `m` row-major points. `var_out` may
/// be null when only means are needed.
///
/// # Safety
/// `gp` must be a live handle; `xnew` must hold `m * d` doubles;
/// `mean_out` (and `var_out` when non-null) must hold `m` doubles.
#[no_mangle]
pub unsafe extern "C" fn dd_gp_predict(
    gp: *const DdGp,
    xnew: *const f64,
    m: usize,
    mean_out: *mut f64,
    var_out: *mut f64,
) -> DdStatus {
    let Some(gp) = (unsafe { gp.as_ref() }) else {
        return null_error("gp");
    };
    if xnew.is_null() || mean_out.is_null() {
        return null_error("xnew/mean_out");
    }
    let xs = unsafe { std::slice::from_raw_parts(xnew, m * gp.model.dim()) };
    if var_out.is_null() {
        match gp.model.predict_mean(xs, m) {
            Ok(mean) => {
                unsafe { std::ptr::copy_nonoverlapping(mean.as_ptr(), mean_out, m) };
                DdStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    } else {
        match gp.model.predict(xs, m) {
            Ok((mean, var)) => {
                unsafe {
                    std::ptr::copy_nonoverlapping(mean.as_ptr(), mean_out, m);
                    std::ptr::copy_nonoverlapping(var.as_ptr(), var_out, m);
                }
                DdStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    }
}

/// Fitted lengthscale; NaN for a null handle.
///
/// # Safety
/// `gp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dd_gp_theta(gp: *const DdGp) -> f64 {
    unsafe { gp.as_ref() }.map_or(f64::NAN, |g| g.model.kernel().theta)
}

/// Fitted amplitude; NaN for a null handle.
///
/// # Safety
/// `gp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dd_gp_tau2(gp: *const DdGp) -> f64 {
    unsafe { gp.as_ref() }.map_or(f64::NAN, |g| g.model.kernel().tau2)
}

/// Fitted absolute nugget; NaN for a null handle.
///
/// # Safety
/// `gp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dd_gp_nugget(gp: *const DdGp) -> f64 {
    unsafe { gp.as_ref() }.map_or(f64::NAN, |g| g.model.kernel().nugget)
}

/// Concentrated log-likelihood at the optimum; NaN for a null handle.
///
/// # Safety
/// `gp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dd_gp_loglik(gp: *const DdGp) -> f64 {
    unsafe { gp.as_ref() }.map_or(f64::NAN, |g| g.loglik)
}

/// Whether the lengthscale landed on a search bound.
///
/// # Safety
/// `gp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dd_gp_theta_at_bound(gp: *const DdGp) -> bool {
    unsafe { gp.as_ref() }.is_some_and(|g| g.theta_at_bound)
}

/// Releases a GP handle; null is ignored.
///
/// # Safety
/// `gp` must be null or a handle returned by this library that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn dd_gp_free(gp: *mut DdGp) {
    if !gp.is_null() {
        drop(unsafe { Box::from_raw(gp) });
    }
}

/// Tuned Beta shape for a design size and dimension; nearest catalog key
/// when there is no exact entry (`extrapolated` is set in that case).
///
/// # Safety
/// All out-pointers must be valid slots.
#[no_mangle]
pub unsafe extern "C" fn dd_catalog_lookup(
    n: usize,
    d: usize,
    alpha_out: *mut f64,
    beta_out: *mut f64,
    extrapolated_out: *mut bool,
) -> DdStatus {
    if alpha_out.is_null() || beta_out.is_null() || extrapolated_out.is_null() {
        return null_error("out");
    }
    let entry = catalog_lookup(n, d);
    unsafe {
        *alpha_out = entry.alpha;
        *beta_out = entry.beta;
        *extrapolated_out = entry.extrapolated;
    }
    DdStatus::Ok
}

/// Expected improvement under a Gaussian predictive distribution.
#[no_mangle]
pub extern "C" fn dd_expected_improvement(mu: f64, sigma: f64, mu_min: f64) -> f64 {
    distdesign::tuner::expected_improvement(mu, sigma.max(0.0), mu_min)
}

/// Lower-tail paired t-test p-value for mean(x - y) < 0.
///
/// # Safety
/// `x` and `y` must each hold `len` doubles; `out` must be a valid slot.
#[no_mangle]
pub unsafe extern "C" fn dd_paired_ttest(
    x: *const f64,
    y: *const f64,
    len: usize,
    out: *mut f64,
) -> DdStatus {
    if x.is_null() || y.is_null() || out.is_null() {
        return null_error("x/y/out");
    }
    let xs = unsafe { std::slice::from_raw_parts(x, len) };
    let ys = unsafe { std::slice::from_raw_parts(y, len) };
    match distdesign::bench::paired_ttest(xs, ys) {
        Ok(p) => {
            unsafe { *out = p };
            DdStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn generate_inspect_free_roundtrip() {
        let mut handle: *mut DdDesign = ptr::null_mut();
        let status = unsafe {
            dd_design_generate(DdMethod::Lhsbeta, 16, 2, 2.0, 4.0, 2.0, 2_000, 7, &mut handle)
        };
        assert_eq!(status, DdStatus::Ok);
        assert!(!handle.is_null());
        unsafe {
            assert_eq!(dd_design_n(handle), 16);
            assert_eq!(dd_design_d(handle), 2);

            let mut buf = vec![0.0; 32];
            assert_eq!(
                dd_design_copy_coords(handle, buf.as_mut_ptr(), 32),
                DdStatus::Ok
            );
            assert!(buf.iter().all(|v| (0.0..=1.0).contains(v)));

            let mut is_lhs = false;
            assert_eq!(dd_design_one_dim_uniform(handle, &mut is_lhs), DdStatus::Ok);
            assert!(is_lhs);

            let mut stat = f64::NAN;
            assert_eq!(
                dd_design_ksd(handle, DdTargetFamily::Beta, 2.0, 4.0, &mut stat),
                DdStatus::Ok
            );
            assert!((0.0..=1.0).contains(&stat));

            let mut min = f64::NAN;
            assert_eq!(dd_design_min_distance(handle, &mut min), DdStatus::Ok);
            assert!(min > 0.0);

            dd_design_free(handle);
        }
    }

    #[test]
    fn invalid_inputs_report_errors() {
        let mut handle: *mut DdDesign = ptr::null_mut();
        // beta shape below 1 is rejected
        let status = unsafe {
            dd_design_generate(DdMethod::Betadist, 8, 2, 0.2, 4.0, 2.0, 100, 1, &mut handle)
        };
        assert_eq!(status, DdStatus::InvalidInput);
        let msg = unsafe { CStr::from_ptr(dd_last_error_message()) };
        assert!(!msg.to_bytes().is_empty());

        assert_eq!(
            unsafe {
                dd_design_generate(DdMethod::Random, 4, 2, 0.0, 0.0, 2.0, 0, 1, ptr::null_mut())
            },
            DdStatus::NullPointer
        );
        assert_eq!(unsafe { dd_design_n(ptr::null()) }, 0);
        assert!(unsafe { dd_gp_theta(ptr::null()) }.is_nan());
    }

    #[test]
    fn csv_roundtrip_through_the_abi() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("design.csv");
        let cpath = CString::new(path.to_str().unwrap()).unwrap();

        let mut handle: *mut DdDesign = ptr::null_mut();
        unsafe {
            assert_eq!(
                dd_design_generate(DdMethod::Random, 6, 3, 0.0, 0.0, 2.0, 0, 3, &mut handle),
                DdStatus::Ok
            );
            assert_eq!(dd_design_save_csv(handle, cpath.as_ptr()), DdStatus::Ok);

            let mut loaded: *mut DdDesign = ptr::null_mut();
            assert_eq!(dd_design_load_csv(cpath.as_ptr(), &mut loaded), DdStatus::Ok);
            let mut a = vec![0.0; 18];
            let mut b = vec![0.0; 18];
            assert_eq!(dd_design_copy_coords(handle, a.as_mut_ptr(), 18), DdStatus::Ok);
            assert_eq!(dd_design_copy_coords(loaded, b.as_mut_ptr(), 18), DdStatus::Ok);
            assert_eq!(a, b);
            dd_design_free(handle);
            dd_design_free(loaded);
        }

        let missing = CString::new("/nonexistent/nowhere.csv").unwrap();
        let mut bad: *mut DdDesign = ptr::null_mut();
        assert_eq!(
            unsafe { dd_design_load_csv(missing.as_ptr(), &mut bad) },
            DdStatus::ParseError
        );
    }

    #[test]
    fn gp_fit_and_predict_through_the_abi() {
        // deterministic smooth data
        let n = 10;
        let x: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| (3.0 * v).sin()).collect();
        let mut gp: *mut DdGp = ptr::null_mut();
        unsafe {
            assert_eq!(
                dd_gp_fit(x.as_ptr(), n, 1, y.as_ptr(), 1e-8, 10.0, false, &mut gp),
                DdStatus::Ok
            );
            assert!(dd_gp_theta(gp) > 0.0);
            assert!(dd_gp_tau2(gp) > 0.0);
            assert!(dd_gp_loglik(gp).is_finite());

            // interpolation at a training point
            let mut mean = [0.0];
            let mut var = [f64::NAN];
            assert_eq!(
                dd_gp_predict(gp, x[3..4].as_ptr(), 1, mean.as_mut_ptr(), var.as_mut_ptr()),
                DdStatus::Ok
            );
            assert!((mean[0] - y[3]).abs() < 1e-6);
            assert!(var[0] < 1e-6);
            dd_gp_free(gp);
        }

        // constant responses are degenerate
        let flat = vec![2.0; n];
        let mut gp2: *mut DdGp = ptr::null_mut();
        assert_eq!(
            unsafe { dd_gp_fit(x.as_ptr(), n, 1, flat.as_ptr(), 1e-8, 10.0, false, &mut gp2) },
            DdStatus::DegenerateData
        );
    }

    #[test]
    fn catalog_and_ei_and_ttest() {
        let (mut a, mut b, mut ex) = (0.0, 0.0, false);
        unsafe {
            assert_eq!(dd_catalog_lookup(16, 2, &mut a, &mut b, &mut ex), DdStatus::Ok);
        }
        assert_eq!((a, b, ex), (2.0, 4.0, false));
        unsafe {
            assert_eq!(dd_catalog_lookup(20, 2, &mut a, &mut b, &mut ex), DdStatus::Ok);
        }
        assert!(ex);

        let ei = dd_expected_improvement(1.0, 1.0, 1.0);
        assert!((ei - 0.3989422804014327).abs() < 1e-12);

        let x = [1.0, 2.0, 3.0];
        let y = [2.0, 3.0, 4.0];
        let mut p = f64::NAN;
        unsafe {
            assert_eq!(dd_paired_ttest(x.as_ptr(), y.as_ptr(), 3, &mut p), DdStatus::Ok);
        }
        assert_eq!(p, 0.0); // constant -1 difference, zero variance
    }
}
