//! Isotropic Gaussian-kernel Gaussian process: covariance construction,
//! multivariate-normal simulation, closed-form prediction, concentrated
//! log-likelihood, and bounded maximum-likelihood estimation of the
//! lengthscale (optionally jointly with a nugget).
//!
//! Covariance entries follow
//! `K[i][j] = tau2 * exp(-||x_i - x_j||^2 / theta) + nugget * 1{i = j}`.
//! Inputs are assumed to live in the unit hypercube; callers that work on
//! other boxes code their inputs down to [0, 1]^d first.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::logspace;

/// Smallest admissible lengthscale: the square root of machine precision.
pub const THETA_FLOOR: f64 = 1e-8;

/// Jitter escalation for failed factorizations: start at `1e-10 * tau2`,
/// multiply by 10 until `1e-4 * tau2`, then give up.
const JITTER_START_REL: f64 = 1e-10;
const JITTER_MAX_REL: f64 = 1e-4;

/// Isotropic Gaussian kernel hyperparameters.
///
/// `theta` is the lengthscale (squared input distance units), `tau2` the
/// amplitude, `nugget` an absolute diagonal noise variance (0 for
/// deterministic interpolation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub theta: f64,
    pub tau2: f64,
    pub nugget: f64,
}

impl Kernel {
    pub fn new(theta: f64, tau2: f64, nugget: f64) -> Result<Self> {
        if !theta.is_finite() || theta <= THETA_FLOOR {
            return Err(Error::invalid(format!(
                "lengthscale must exceed {THETA_FLOOR}, got {theta}"
            )));
        }
        if !tau2.is_finite() || tau2 <= 0.0 {
            return Err(Error::invalid(format!("tau2 must be positive, got {tau2}")));
        }
        if !nugget.is_finite() || nugget < 0.0 {
            return Err(Error::invalid(format!(
                "nugget must be nonnegative, got {nugget}"
            )));
        }
        Ok(Kernel {
            theta,
            tau2,
            nugget,
        })
    }

    /// Unit-amplitude interpolating kernel.
    pub fn interpolating(theta: f64) -> Result<Self> {
        Kernel::new(theta, 1.0, 0.0)
    }

    /// Covariance between two points (no nugget; that lives on the
    /// training diagonal only).
    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for (x, y) in a.iter().zip(b) {
            let t = x - y;
            s += t * t;
        }
        self.tau2 * (-s / self.theta).exp()
    }
}

fn check_points(x: &[f64], n: usize, d: usize) -> Result<()> {
    if n == 0 || d == 0 {
        return Err(Error::invalid("empty design"));
    }
    if x.len() != n * d {
        return Err(Error::invalid(format!(
            "design buffer has {} entries, expected {}",
            x.len(),
            n * d
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("nonfinite coordinate in design"));
    }
    Ok(())
}

/// Dense covariance matrix of a row-major n x d design.
pub fn cov_matrix(x: &[f64], n: usize, d: usize, kernel: &Kernel) -> Result<DMatrix<f64>> {
    check_points(x, n, d)?;
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = kernel.tau2 + kernel.nugget;
        for j in (i + 1)..n {
            let v = kernel.eval(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Correlation-scale matrix `C + g I` (unit amplitude, relative nugget g),
/// the object the concentrated likelihood works with.
fn corr_matrix(x: &[f64], n: usize, d: usize, theta: f64, rel_nugget: f64) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0 + rel_nugget;
        for j in (i + 1)..n {
            let mut s = 0.0;
            for t in 0..d {
                let diff = x[i * d + t] - x[j * d + t];
                s += diff * diff;
            }
            let v = (-s / theta).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Cholesky factorization with diagonal jitter escalation. Returns the
/// factorization and the jitter actually applied (0 when none was needed).
/// `scale` sets the jitter ladder, normally the kernel amplitude.
fn cholesky_with_jitter(k: &DMatrix<f64>, scale: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    if let Some(c) = Cholesky::new(k.clone()) {
        return Ok((c, 0.0));
    }
    let mut jitter = JITTER_START_REL * scale;
    let max = JITTER_MAX_REL * scale;
    while jitter <= max * (1.0 + 1e-12) {
        let mut kj = k.clone();
        for i in 0..kj.nrows() {
            kj[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(kj) {
            return Ok((c, jitter));
        }
        jitter *= 10.0;
    }
    Err(Error::numeric(format!(
        "covariance factorization failed after jitter escalation to {max:e}"
    )))
}

/// Draws one realization of N(0, K) for the covariance induced by
/// `kernel` on the design, as `L z` with `z` standard normal.
/// Deterministic given the RNG state.
pub fn simulate_mvn<R: Rng + ?Sized>(
    x: &[f64],
    n: usize,
    d: usize,
    kernel: &Kernel,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let z: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    mvn_from_normals(x, n, d, kernel, &z)
}

/// `L z` for caller-supplied standard normals; lets paired comparisons
/// push the same draws through different designs.
pub fn mvn_from_normals(x: &[f64], n: usize, d: usize, kernel: &Kernel, z: &[f64]) -> Result<Vec<f64>> {
    if z.len() != n {
        return Err(Error::invalid("normal draw length mismatch"));
    }
    let k = cov_matrix(x, n, d, kernel)?;
    let (chol, _) = cholesky_with_jitter(&k, kernel.tau2)?;
    let y = chol.l() * DVector::from_column_slice(z);
    Ok(y.iter().copied().collect())
}

/// Fitted GP surrogate with cached factorization.
#[derive(Debug, Clone)]
pub struct GpModel {
    x: Vec<f64>,
    n: usize,
    d: usize,
    y: Vec<f64>,
    kernel: Kernel,
    /// Lower Cholesky factor of K_n (after any jitter).
    l: DMatrix<f64>,
    /// K_n^{-1} Y.
    alpha: DVector<f64>,
    jitter: f64,
}

impl GpModel {
    /// Factorizes the covariance at fixed hyperparameters and caches
    /// everything prediction needs.
    pub fn fit(x: &[f64], n: usize, d: usize, y: &[f64], kernel: Kernel) -> Result<Self> {
        Self::fit_with_noise_weights(x, n, d, y, kernel, None)
    }

    /// As [`GpModel::fit`] but with a per-observation scaling of the nugget:
    /// the i-th training diagonal gets `nugget * weights[i]`. Used for
    /// replicate-averaged observations where the noise variance of a mean
    /// of J replicates is nugget/J.
    pub fn fit_with_noise_weights(
        x: &[f64],
        n: usize,
        d: usize,
        y: &[f64],
        kernel: Kernel,
        noise_weights: Option<&[f64]>,
    ) -> Result<Self> {
        check_points(x, n, d)?;
        if y.len() != n {
            return Err(Error::invalid(format!(
                "response length {} does not match design size {n}",
                y.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("nonfinite response value"));
        }
        let mut k = cov_matrix(x, n, d, &kernel)?;
        if let Some(w) = noise_weights {
            if w.len() != n {
                return Err(Error::invalid("noise weight length mismatch"));
            }
            for i in 0..n {
                k[(i, i)] = kernel.tau2 + kernel.nugget * w[i];
            }
        }
        let (chol, jitter) = cholesky_with_jitter(&k, kernel.tau2)?;
        let yv = DVector::from_column_slice(y);
        let alpha = chol.solve(&yv);
        Ok(GpModel {
            x: x.to_vec(),
            n,
            d,
            y: y.to_vec(),
            kernel,
            l: chol.l(),
            alpha,
            jitter,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn design(&self) -> &[f64] {
        &self.x
    }

    pub fn responses(&self) -> &[f64] {
        &self.y
    }

    /// Jitter added to the diagonal during factorization, 0 if none.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    fn kvec(&self, point: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| {
            self.kernel.eval(point, &self.x[i * self.d..(i + 1) * self.d])
        })
    }

    /// Predictive mean and variance at `m` row-major points.
    ///
    /// mean = k(x)' K^{-1} Y, var = tau2 - k(x)' K^{-1} k(x); the variance
    /// is of the latent surface (no nugget term) and tiny negative values
    /// from roundoff are clamped to 0.
    pub fn predict(&self, xnew: &[f64], m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_new(xnew, m)?;
        let mut mean = Vec::with_capacity(m);
        let mut var = Vec::with_capacity(m);
        for i in 0..m {
            let k = self.kvec(&xnew[i * self.d..(i + 1) * self.d]);
            mean.push(k.dot(&self.alpha));
            let v = self
                .l
                .solve_lower_triangular(&k)
                .ok_or_else(|| Error::numeric("triangular solve failed"))?;
            let raw = self.kernel.tau2 - v.norm_squared();
            var.push(if raw < 0.0 { 0.0 } else { raw });
        }
        Ok((mean, var))
    }

    /// Predictive mean only; the cheap path for prediction-error sweeps.
    pub fn predict_mean(&self, xnew: &[f64], m: usize) -> Result<Vec<f64>> {
        self.check_new(xnew, m)?;
        let mut mean = Vec::with_capacity(m);
        for i in 0..m {
            let k = self.kvec(&xnew[i * self.d..(i + 1) * self.d]);
            mean.push(k.dot(&self.alpha));
        }
        Ok(mean)
    }

    fn check_new(&self, xnew: &[f64], m: usize) -> Result<()> {
        if xnew.len() != m * self.d {
            return Err(Error::invalid(format!(
                "prediction points have {} entries, expected {} ({} x {})",
                xnew.len(),
                m * self.d,
                m,
                self.d
            )));
        }
        if xnew.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("nonfinite prediction point"));
        }
        Ok(())
    }
}

/// Concentrated (profile) log-likelihood of the lengthscale.
///
/// With `Kbar = C(theta) + g I` on the correlation scale and the amplitude
/// profiled out as `tau2_hat = Y' Kbar^{-1} Y / n`, the likelihood reduces
/// (dropping additive constants `-n/2 (1 + ln 2 pi)` that do not depend on
/// theta) to
///
/// `l(theta, g) = -(n/2) ln(tau2_hat) - (1/2) ln |Kbar|`.
///
/// `rel_nugget` is the nugget relative to the amplitude (g = nugget/tau2).
pub fn concentrated_loglik(
    x: &[f64],
    n: usize,
    d: usize,
    y: &[f64],
    theta: f64,
    rel_nugget: f64,
) -> Result<f64> {
    check_points(x, n, d)?;
    if y.len() != n {
        return Err(Error::invalid("response length mismatch"));
    }
    conc_loglik_weighted(x, n, d, y, theta, rel_nugget, None)
}

fn conc_loglik_weighted(
    x: &[f64],
    n: usize,
    d: usize,
    y: &[f64],
    theta: f64,
    rel_nugget: f64,
    noise_weights: Option<&[f64]>,
) -> Result<f64> {
    let mut kbar = corr_matrix(x, n, d, theta, rel_nugget);
    if let Some(w) = noise_weights {
        for i in 0..n {
            kbar[(i, i)] = 1.0 + rel_nugget * w[i];
        }
    }
    let (chol, _) = cholesky_with_jitter(&kbar, 1.0)?;
    let yv = DVector::from_column_slice(y);
    let kinv_y = chol.solve(&yv);
    let tau2_hat = yv.dot(&kinv_y) / n as f64;
    if !(tau2_hat > 0.0) || !tau2_hat.is_finite() {
        return Err(Error::numeric(format!(
            "profiled amplitude is not positive ({tau2_hat})"
        )));
    }
    let ln_det: f64 = (0..n).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>() * 2.0;
    Ok(-0.5 * n as f64 * tau2_hat.ln() - 0.5 * ln_det)
}

/// Search settings for [`mle_theta_opts`].
#[derive(Debug, Clone)]
pub struct MleOptions {
    /// Lengthscale search interval; the lower end must be >= 1e-8.
    pub theta_bounds: (f64, f64),
    /// Estimate a relative nugget jointly with theta.
    pub with_nugget: bool,
    /// Relative-nugget search interval.
    pub nugget_bounds: (f64, f64),
    /// Coarse log-spaced grid size per scalar search.
    pub grid_size: usize,
    /// Local refinements launched from the best grid points.
    pub restarts: usize,
    /// Golden-section interval tolerance, in log parameter space.
    pub golden_tol: f64,
    /// Maximum coordinate sweeps for the joint (theta, nugget) search.
    pub max_sweeps: usize,
    /// Relative-change convergence threshold between sweeps.
    pub sweep_rel_tol: f64,
}

impl MleOptions {
    pub fn new(theta_lo: f64, theta_hi: f64) -> Self {
        MleOptions {
            theta_bounds: (theta_lo, theta_hi),
            with_nugget: false,
            nugget_bounds: (1e-8, 1.0),
            grid_size: 20,
            restarts: 5,
            golden_tol: 1e-7,
            max_sweeps: 50,
            sweep_rel_tol: 1e-6,
        }
    }

    pub fn with_nugget(mut self, yes: bool) -> Self {
        self.with_nugget = yes;
        self
    }

    /// Cheaper settings for per-step refits inside sequential loops.
    pub fn fast(mut self) -> Self {
        self.restarts = 1;
        self.golden_tol = 1e-4;
        self
    }
}

/// Result of a bounded MLE search.
#[derive(Debug, Clone)]
pub struct MleFit {
    /// Kernel with the profiled amplitude and the absolute nugget
    /// (`tau2_hat * g_hat`) filled in.
    pub kernel: Kernel,
    /// Concentrated log-likelihood at the optimum.
    pub loglik: f64,
    /// Lengthscale landed on a search bound.
    pub theta_at_bound: bool,
    /// Relative nugget g (0 when `with_nugget` is off).
    pub rel_nugget: f64,
}

/// Golden-section maximization on [a, b]; returns (argmax, max).
fn golden_max(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.6180339887498949;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// One bounded scalar search in log space: coarse grid, then golden-section
/// refinement from the `restarts` best grid cells. Returns (argmax, max).
fn scalar_search(
    f: &mut impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    grid_size: usize,
    restarts: usize,
    tol: f64,
) -> (f64, f64) {
    let grid = logspace(lo, hi, grid_size);
    let vals: Vec<f64> = grid.iter().map(|&g| f(g)).collect();
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap_or(std::cmp::Ordering::Equal));

    let mut best_x = grid[order[0]];
    let mut best_v = vals[order[0]];
    let mut g = |ln_x: f64| f(ln_x.exp());
    for &idx in order.iter().take(restarts.max(1)) {
        let left = if idx == 0 { grid[0] } else { grid[idx - 1] };
        let right = if idx + 1 == grid.len() {
            grid[grid.len() - 1]
        } else {
            grid[idx + 1]
        };
        if right <= left {
            continue;
        }
        let (ln_x, v) = golden_max(&mut g, left.ln(), right.ln(), tol);
        if v > best_v {
            best_v = v;
            best_x = ln_x.exp();
        }
    }
    (best_x, best_v)
}

/// Local 1d climb in log space: expand a bracket from `x0` in the
/// improving direction, then golden-section refine. Stays inside the
/// basin of attraction around `x0`, like a warm-started quasi-Newton
/// update would.
fn climb_1d(f: &mut impl FnMut(f64) -> f64, x0: f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (llo, lhi) = (lo.ln(), hi.ln());
    let lx0 = x0.ln().clamp(llo, lhi);
    let f0 = f(lx0.exp());
    let step0 = 0.3_f64.min((lhi - llo) / 4.0);

    let up = (lx0 + step0).min(lhi);
    let down = (lx0 - step0).max(llo);
    let fup = if up > lx0 { f(up.exp()) } else { f64::NEG_INFINITY };
    let fdown = if down < lx0 { f(down.exp()) } else { f64::NEG_INFINITY };

    let (a, b);
    if f0 >= fup && f0 >= fdown {
        a = down;
        b = up;
    } else {
        // expand in the winning direction until the value drops or a
        // bound is hit
        let dir = if fup > fdown { 1.0 } else { -1.0 };
        let mut prev = lx0;
        let mut cur = if dir > 0.0 { up } else { down };
        let mut fcur = if dir > 0.0 { fup } else { fdown };
        let mut step = step0;
        loop {
            let next = (cur + dir * step).clamp(llo, lhi);
            if next == cur {
                break; // at a bound
            }
            let fnext = f(next.exp());
            if fnext <= fcur {
                a = prev.min(next);
                b = prev.max(next);
                let mut g = |lx: f64| f(lx.exp());
                let (lx, v) = golden_max(&mut g, a, b, tol);
                return (lx.exp(), v);
            }
            prev = cur;
            cur = next;
            fcur = fnext;
            step *= 2.0;
        }
        a = prev.min(cur);
        b = prev.max(cur);
    }
    let mut g = |lx: f64| f(lx.exp());
    let (lx, v) = golden_max(&mut g, a, b, tol);
    (lx.exp(), v)
}

/// Warm-started local MLE update from the previous hyperparameter values:
/// alternating local climbs on the lengthscale and (when enabled) the
/// relative nugget, converging to the optimum of the basin containing
/// the starting point rather than the global one. This mirrors how
/// sequential loops update hyperparameters after each acquisition.
pub fn mle_theta_update(
    x: &[f64],
    n: usize,
    d: usize,
    y: &[f64],
    theta0: f64,
    rel_nugget0: f64,
    opts: &MleOptions,
) -> Result<MleFit> {
    check_points(x, n, d)?;
    if y.len() != n {
        return Err(Error::invalid("response length mismatch"));
    }
    let (lo, hi) = opts.theta_bounds;
    let ymin = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let ymax = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if ymax == ymin {
        return Err(Error::degenerate(
            "response vector is constant; lengthscale is unidentifiable",
        ));
    }
    let eval = |theta: f64, g: f64| {
        conc_loglik_weighted(x, n, d, y, theta, g, None).unwrap_or(f64::NEG_INFINITY)
    };
    let mut theta_cur = theta0.clamp(lo, hi);
    let mut g_cur = if opts.with_nugget {
        rel_nugget0.clamp(opts.nugget_bounds.0, opts.nugget_bounds.1)
    } else {
        rel_nugget0.max(0.0)
    };
    let mut ll = eval(theta_cur, g_cur);
    for _ in 0..opts.max_sweeps {
        let g_fixed = g_cur;
        let mut f_t = |t: f64| eval(t, g_fixed);
        let (theta_new, ll_t) = climb_1d(&mut f_t, theta_cur, lo, hi, opts.golden_tol);
        ll = ll_t;
        let mut g_new = g_cur;
        if opts.with_nugget {
            let t_fixed = theta_new;
            let mut f_g = |g: f64| eval(t_fixed, g);
            let (gn, ll_g) = climb_1d(
                &mut f_g,
                g_cur,
                opts.nugget_bounds.0,
                opts.nugget_bounds.1,
                opts.golden_tol,
            );
            g_new = gn;
            ll = ll_g;
        }
        let rel_t = (theta_new - theta_cur).abs() / theta_cur.max(1e-300);
        let rel_g = (g_new - g_cur).abs() / g_cur.max(1e-300);
        theta_cur = theta_new;
        g_cur = g_new;
        if rel_t < opts.sweep_rel_tol && (!opts.with_nugget || rel_g < opts.sweep_rel_tol) {
            break;
        }
    }
    if !ll.is_finite() {
        return Err(Error::numeric("log-likelihood not finite near the warm start"));
    }
    let kbar = corr_matrix(x, n, d, theta_cur, g_cur);
    let (chol, _) = cholesky_with_jitter(&kbar, 1.0)?;
    let yv = DVector::from_column_slice(y);
    let tau2_hat = yv.dot(&chol.solve(&yv)) / n as f64;
    let log_span = (hi / lo).ln();
    let at_bound = (theta_cur / lo).ln().abs() < 1e-5 * log_span
        || (hi / theta_cur).ln().abs() < 1e-5 * log_span;
    Ok(MleFit {
        kernel: Kernel::new(
            theta_cur.max(THETA_FLOOR * (1.0 + 1e-9)),
            tau2_hat,
            tau2_hat * g_cur,
        )?,
        loglik: ll,
        theta_at_bound: at_bound,
        rel_nugget: g_cur,
    })
}

/// Bounded MLE of the lengthscale (and optionally a relative nugget) by
/// maximizing the concentrated log-likelihood. See spec of
/// [`concentrated_loglik`] for the objective.
pub fn mle_theta(
    x: &[f64],
    n: usize,
    d: usize,
    y: &[f64],
    bounds: (f64, f64),
    with_nugget: bool,
) -> Result<MleFit> {
    mle_theta_opts(
        x,
        n,
        d,
        y,
        &MleOptions::new(bounds.0, bounds.1).with_nugget(with_nugget),
    )
}

pub fn mle_theta_opts(x: &[f64], n: usize, d: usize, y: &[f64], opts: &MleOptions) -> Result<MleFit> {
    mle_weighted(x, n, d, y, opts, None)
}

/// MLE with optional per-observation nugget scaling (see
/// [`GpModel::fit_with_noise_weights`]).
pub fn mle_weighted(
    x: &[f64],
    n: usize,
    d: usize,
    y: &[f64],
    opts: &MleOptions,
    noise_weights: Option<&[f64]>,
) -> Result<MleFit> {
    check_points(x, n, d)?;
    if y.len() != n {
        return Err(Error::invalid("response length mismatch"));
    }
    let (lo, hi) = opts.theta_bounds;
    if lo < THETA_FLOOR {
        return Err(Error::invalid(format!(
            "lengthscale lower bound must be >= {THETA_FLOOR}"
        )));
    }
    if !(hi > lo) {
        return Err(Error::invalid("empty lengthscale search interval"));
    }
    let ymin = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let ymax = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if ymax == ymin {
        return Err(Error::degenerate(
            "response vector is constant; lengthscale is unidentifiable",
        ));
    }

    let eval = |theta: f64, g: f64| {
        conc_loglik_weighted(x, n, d, y, theta, g, noise_weights).unwrap_or(f64::NEG_INFINITY)
    };

    let mut g_cur = if opts.with_nugget { 0.01 } else { 0.0 };
    let mut f_theta = |theta: f64| eval(theta, g_cur);
    let (mut theta_cur, mut ll) = scalar_search(
        &mut f_theta,
        lo,
        hi,
        opts.grid_size,
        opts.restarts,
        opts.golden_tol,
    );

    if opts.with_nugget {
        let (glo, ghi) = opts.nugget_bounds;
        for _ in 0..opts.max_sweeps {
            let theta_fixed = theta_cur;
            let mut f_g = |g: f64| eval(theta_fixed, g);
            let (g_new, _) = scalar_search(
                &mut f_g,
                glo,
                ghi,
                opts.grid_size,
                opts.restarts,
                opts.golden_tol,
            );
            let g_fixed = g_new;
            let mut f_t = |theta: f64| eval(theta, g_fixed);
            let (theta_new, ll_new) = scalar_search(
                &mut f_t,
                lo,
                hi,
                opts.grid_size,
                opts.restarts,
                opts.golden_tol,
            );
            let rel_t = (theta_new - theta_cur).abs() / theta_cur.max(1e-300);
            let rel_g = (g_new - g_cur).abs() / g_cur.max(1e-300);
            theta_cur = theta_new;
            g_cur = g_new;
            ll = ll_new;
            if rel_t < opts.sweep_rel_tol && rel_g < opts.sweep_rel_tol {
                break;
            }
        }
    }

    if !ll.is_finite() {
        return Err(Error::numeric(
            "concentrated log-likelihood not finite anywhere in the search range",
        ));
    }

    // profiled amplitude at the optimum
    let kbar = {
        let mut k = corr_matrix(x, n, d, theta_cur, g_cur);
        if let Some(w) = noise_weights {
            for i in 0..n {
                k[(i, i)] = 1.0 + g_cur * w[i];
            }
        }
        k
    };
    let (chol, _) = cholesky_with_jitter(&kbar, 1.0)?;
    let yv = DVector::from_column_slice(y);
    let tau2_hat = yv.dot(&chol.solve(&yv)) / n as f64;

    let log_span = (hi / lo).ln();
    let at_low = (theta_cur / lo).ln().abs() < 1e-5 * log_span;
    let at_high = (hi / theta_cur).ln().abs() < 1e-5 * log_span;

    Ok(MleFit {
        kernel: Kernel::new(theta_cur.max(THETA_FLOOR * (1.0 + 1e-9)), tau2_hat, tau2_hat * g_cur)?,
        loglik: ll,
        theta_at_bound: at_low || at_high,
        rel_nugget: g_cur,
    })
}
