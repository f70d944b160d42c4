//! Beta-shape tuning: the deRIMSE criterion (detrended, standardized
//! lengthscale-estimation error averaged over a theta grid), its detrending
//! surface, expected improvement, and a small Bayesian-optimization loop
//! over (alpha, beta) in [1, 10]^2. Ships the catalog of near-optimal
//! shapes per (n, d).

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::dist_targeted_design;
use crate::dist::DistanceTarget;
use crate::error::{Error, Result};
use crate::gp::{mle_theta, mle_weighted, simulate_mvn, GpModel, Kernel, MleOptions};
use crate::optim::nelder_mead_max;
use crate::rng::{child_seed, stream};
use crate::special::{norm_cdf, norm_pdf};
use crate::util::{linspace, mad, mean, median};

/// Shape-space box searched by the tuner.
pub const SHAPE_BOX: ((f64, f64), (f64, f64)) = ((1.0, 10.0), (1.0, 10.0));

const SIGMA_FLOOR: f64 = 1e-6;

// seed-path tags
const TAG_DESIGN: u64 = 1;
const TAG_SIM: u64 = 2;
const TAG_DETREND: u64 = 3;
const TAG_INIT_EVAL: u64 = 4;
const TAG_ACQ_EVAL: u64 = 5;
const TAG_SITES: u64 = 6;

/// Configuration of one deRIMSE study cell family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RimseConfig {
    /// Design size.
    pub n: usize,
    /// Input dimension.
    pub d: usize,
    /// Theta-grid size T.
    pub t_grid: usize,
    /// Random-shape replicate batches R for detrending.
    pub r_batches: usize,
    /// Designs per (alpha, beta, theta) cell, D.
    pub designs_per_cell: usize,
    /// Equally spaced grid from 0.1 to sqrt(d), T values.
    pub theta_grid: Vec<f64>,
    /// Stochastic-search iterations used to build each betadist design.
    pub search_iters: u64,
}

impl RimseConfig {
    /// Defaults: T = R = 30, D = 5.
    pub fn new(n: usize, d: usize) -> Self {
        Self::with_grid(n, d, 30, 30, 5)
    }

    pub fn with_grid(n: usize, d: usize, t_grid: usize, r_batches: usize, designs: usize) -> Self {
        let theta_grid = linspace(0.1, (d as f64).sqrt(), t_grid);
        RimseConfig {
            n,
            d,
            t_grid,
            r_batches,
            designs_per_cell: designs,
            theta_grid,
            search_iters: 10_000,
        }
    }

    pub fn search_iters(mut self, s: u64) -> Self {
        self.search_iters = s;
        self
    }

    fn theta_bounds(&self) -> (f64, f64) {
        (1e-8, (self.d as f64).sqrt())
    }
}

fn check_shape(alpha: f64, beta: f64) -> Result<()> {
    let ((alo, ahi), (blo, bhi)) = SHAPE_BOX;
    if !(alo..=ahi).contains(&alpha) || !(blo..=bhi).contains(&beta) {
        return Err(Error::invalid(format!(
            "shape ({alpha}, {beta}) outside the search box [1,10]^2"
        )));
    }
    Ok(())
}

/// Root-mean-square lengthscale-estimation error at one theta-grid cell:
/// D betadist designs are built for (alpha, beta), one response vector is
/// simulated per design at theta_grid[t_index] with unit amplitude, and
/// the MLE lengthscale is fit on (1e-8, sqrt(d)].
///
/// A degenerate simulation (constant response) is retried with a fresh
/// draw up to 3 times before the error propagates.
pub fn rmse_at(config: &RimseConfig, alpha: f64, beta: f64, t_index: usize, seed: u64) -> Result<f64> {
    rmse_at_with(config, alpha, beta, t_index, seed, &mle_estimator(config))
}

/// Lengthscale estimator used by the criterion; injectable for tests.
pub type ThetaEstimator<'a> = dyn Fn(&[f64], usize, usize, &[f64], f64) -> Result<f64> + Sync + 'a;

fn mle_estimator(config: &RimseConfig) -> impl Fn(&[f64], usize, usize, &[f64], f64) -> Result<f64> + Sync {
    let bounds = config.theta_bounds();
    move |x: &[f64], n: usize, d: usize, y: &[f64], _theta_true: f64| {
        Ok(mle_theta(x, n, d, y, bounds, false)?.kernel.theta)
    }
}

pub fn rmse_at_with(
    config: &RimseConfig,
    alpha: f64,
    beta: f64,
    t_index: usize,
    seed: u64,
    estimator: &ThetaEstimator<'_>,
) -> Result<f64> {
    check_shape(alpha, beta)?;
    if t_index >= config.theta_grid.len() {
        return Err(Error::invalid(format!(
            "theta index {t_index} out of 0..{}",
            config.theta_grid.len()
        )));
    }
    let theta_true = config.theta_grid[t_index];
    let target = DistanceTarget::beta(alpha, beta, config.d)?;
    let kernel = Kernel::interpolating(theta_true)?;
    let dcells = config.designs_per_cell;
    let mut sum_sq = 0.0;
    for i in 0..dcells {
        let design_seed = child_seed(seed, &[TAG_DESIGN, t_index as u64, i as u64]);
        let design = dist_targeted_design(config.n, config.d, &target, config.search_iters, design_seed)?;
        let mut last_err: Option<Error> = None;
        let mut theta_hat = None;
        for retry in 0..3u64 {
            let mut rng = stream(seed, &[TAG_SIM, t_index as u64, i as u64, retry]);
            let y = simulate_mvn(design.coords(), config.n, config.d, &kernel, &mut rng)?;
            match estimator(design.coords(), config.n, config.d, &y, theta_true) {
                Ok(th) => {
                    theta_hat = Some(th);
                    break;
                }
                Err(e @ Error::DegenerateData(_)) => last_err = Some(e),
                Err(e) => return Err(e),
            }
        }
        let theta_hat = match theta_hat {
            Some(t) => t,
            None => return Err(last_err.unwrap()),
        };
        let err = theta_hat - theta_true;
        sum_sq += err * err;
    }
    Ok((sum_sq / dcells as f64).sqrt())
}

/// Location/scale estimates of the RMSE level at each theta-grid point,
/// used to detrend and standardize criterion evaluations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetrendSurface {
    pub theta_grid: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl DetrendSurface {
    pub fn standardize(&self, t_index: usize, value: f64) -> f64 {
        (value - self.mu[t_index]) / self.sigma[t_index]
    }

    /// Builds the surface from a T x R replicate matrix: per-grid-point
    /// median and scaled MAD (floored), then both curves smoothed by a 1d
    /// GP over the theta grid.
    pub fn from_replicates(theta_grid: &[f64], values: &[Vec<f64>]) -> Self {
        assert_eq!(theta_grid.len(), values.len());
        let mu_raw: Vec<f64> = values.iter().map(|row| median(row)).collect();
        let sigma_raw: Vec<f64> = values
            .iter()
            .map(|row| mad(row).max(SIGMA_FLOOR))
            .collect();
        let mu = smooth_1d(theta_grid, &mu_raw);
        let sigma: Vec<f64> = smooth_1d(theta_grid, &sigma_raw)
            .into_iter()
            .map(|s| s.max(SIGMA_FLOOR))
            .collect();
        DetrendSurface {
            theta_grid: theta_grid.to_vec(),
            mu,
            sigma,
        }
    }
}

/// GP smoother on a 1d grid: inputs normalized to [0, 1], response
/// centered, lengthscale and nugget estimated jointly. Falls back to the
/// raw values when the data are constant or the fit fails.
fn smooth_1d(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let lo = xs[0];
    let hi = xs[n - 1];
    if !(hi > lo) {
        return ys.to_vec();
    }
    let coded: Vec<f64> = xs.iter().map(|&x| (x - lo) / (hi - lo)).collect();
    let center = mean(ys);
    let resid: Vec<f64> = ys.iter().map(|&y| y - center).collect();
    if resid.iter().all(|&r| r.abs() < 1e-14) {
        return ys.to_vec();
    }
    let opts = MleOptions::new(1e-8, 1.0).with_nugget(true).fast();
    let fit = match mle_weighted(&coded, n, 1, &resid, &opts, None) {
        Ok(f) => f,
        Err(_) => return ys.to_vec(),
    };
    let model = match GpModel::fit(&coded, n, 1, &resid, fit.kernel) {
        Ok(m) => m,
        Err(_) => return ys.to_vec(),
    };
    match model.predict_mean(&coded, n) {
        Ok(sm) => sm.into_iter().map(|v| v + center).collect(),
        Err(_) => ys.to_vec(),
    }
}

/// Builds the detrending surface by drawing R random shapes uniformly in
/// [1, 10]^2 and collecting RMSE at every grid point for each.
pub fn build_detrend(config: &RimseConfig, seed: u64) -> Result<DetrendSurface> {
    build_detrend_with(config, seed, &mle_estimator(config))
}

pub fn build_detrend_with(
    config: &RimseConfig,
    seed: u64,
    estimator: &ThetaEstimator<'_>,
) -> Result<DetrendSurface> {
    if config.r_batches < 5 {
        return Err(Error::invalid("detrending needs at least 5 replicate batches"));
    }
    let shapes: Vec<(f64, f64)> = {
        let mut rng = stream(seed, &[TAG_DETREND]);
        (0..config.r_batches)
            .map(|_| {
                (
                    1.0 + 9.0 * rng.random::<f64>(),
                    1.0 + 9.0 * rng.random::<f64>(),
                )
            })
            .collect()
    };
    let t = config.theta_grid.len();
    let cells: Vec<(usize, usize)> = (0..t)
        .flat_map(|ti| (0..config.r_batches).map(move |r| (ti, r)))
        .collect();
    let flat: Vec<f64> = cells
        .par_iter()
        .map(|&(ti, r)| {
            let (a, b) = shapes[r];
            rmse_at_with(
                config,
                a,
                b,
                ti,
                child_seed(seed, &[TAG_DETREND, r as u64]),
                estimator,
            )
        })
        .collect::<Result<_>>()?;
    let mut values = vec![Vec::with_capacity(config.r_batches); t];
    for (idx, &(ti, _)) in cells.iter().enumerate() {
        values[ti].push(flat[idx]);
    }
    Ok(DetrendSurface::from_replicates(&config.theta_grid, &values))
}

/// The detrended, standardized criterion: mean over the theta grid of
/// (RMSE(t) - mu_t) / sigma_t. Stochastic; repeated calls with different
/// seeds give independent noisy evaluations.
pub fn derimse(
    config: &RimseConfig,
    detrend: &DetrendSurface,
    alpha: f64,
    beta: f64,
    seed: u64,
) -> Result<f64> {
    derimse_with(config, detrend, alpha, beta, seed, &mle_estimator(config))
}

pub fn derimse_with(
    config: &RimseConfig,
    detrend: &DetrendSurface,
    alpha: f64,
    beta: f64,
    seed: u64,
    estimator: &ThetaEstimator<'_>,
) -> Result<f64> {
    check_shape(alpha, beta)?;
    if detrend.theta_grid.len() != config.theta_grid.len() {
        return Err(Error::invalid("detrend surface grid does not match config"));
    }
    let t = config.theta_grid.len();
    let vals: Vec<f64> = (0..t)
        .into_par_iter()
        .map(|ti| {
            rmse_at_with(config, alpha, beta, ti, seed, estimator)
                .map(|r| detrend.standardize(ti, r))
        })
        .collect::<Result<_>>()?;
    Ok(mean(&vals))
}

/// Expected improvement under a Gaussian predictive distribution:
/// `EI = (mu_min - mu) Phi(z) + sigma phi(z)` with
/// `z = (mu_min - mu) / sigma`; at sigma = 0 this degenerates to
/// `max(mu_min - mu, 0)`.
pub fn expected_improvement(mu: f64, sigma: f64, mu_min: f64) -> f64 {
    debug_assert!(sigma >= 0.0);
    let diff = mu_min - mu;
    if sigma <= 0.0 {
        return diff.max(0.0);
    }
    let z = diff / sigma;
    (diff * norm_cdf(z) + sigma * norm_pdf(z)).max(0.0)
}

/// One aggregated criterion site: mean value over its replicates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeEval {
    pub alpha: f64,
    pub beta: f64,
    pub value: f64,
    pub replicates: usize,
}

/// A band member within 5% of the predicted minimum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NearOptimal {
    pub alpha: f64,
    pub beta: f64,
    pub predicted: f64,
}

/// Outcome of the shape search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuneResult {
    pub evaluations: Vec<ShapeEval>,
    /// Minimizer of the fitted predictive mean over [1, 10]^2.
    pub best: (f64, f64),
    pub best_predicted: f64,
    /// Evaluated sites whose predicted mean lies within 5% of the best
    /// (relative band on the predicted-mean scale).
    pub near_optimal: Vec<NearOptimal>,
    /// Band member with the smallest alpha + beta, the shape to reuse.
    pub selected: (f64, f64),
}

/// Criterion handle: (alpha, beta, evaluation seed) -> value.
pub type Criterion<'a> = dyn Fn(f64, f64, u64) -> Result<f64> + Sync + 'a;

/// Deterministic synthetic criterion with its minimum at (3, 6.5); handy
/// for exercising the optimizer without paying for real simulations.
pub fn quadratic_oracle(alpha: f64, beta: f64) -> f64 {
    0.08 * ((alpha - 3.0).powi(2) + (beta - 6.5).powi(2)) - 1.0
}

/// Tunes (alpha, beta) for the configured (n, d) with the real deRIMSE
/// criterion: builds a detrending surface, seeds the search with a
/// 20-site maximin design carrying 10 replicates each, then spends
/// `budget` EI-driven acquisitions.
pub fn tune_shapes(config: &RimseConfig, budget: usize, seed: u64) -> Result<TuneResult> {
    let detrend = build_detrend(config, child_seed(seed, &[TAG_DETREND]))?;
    let criterion = |a: f64, b: f64, s: u64| derimse(config, &detrend, a, b, s);
    tune_shapes_with(&criterion, budget, seed)
}

/// The BO loop against an arbitrary criterion.
pub fn tune_shapes_with(criterion: &Criterion<'_>, budget: usize, seed: u64) -> Result<TuneResult> {
    let ((alo, ahi), (blo, bhi)) = SHAPE_BOX;
    let box2 = [(alo, ahi), (blo, bhi)];

    // 20-site maximin seed design in shape space, 10 replicates per site
    let site_design = crate::design::maximin_design(20, 2, 20_000, child_seed(seed, &[TAG_SITES]))?;
    let mut sites: Vec<ShapeEval> = Vec::new();
    for i in 0..site_design.n() {
        let row = site_design.row(i);
        let alpha = alo + row[0] * (ahi - alo);
        let beta = blo + row[1] * (bhi - blo);
        sites.push(ShapeEval {
            alpha,
            beta,
            value: 0.0,
            replicates: 0,
        });
    }
    for rep in 0..10u64 {
        // common random numbers across sites within a replicate sweep
        let eval_seed = child_seed(seed, &[TAG_INIT_EVAL, rep]);
        let new_vals: Vec<f64> = sites
            .par_iter()
            .map(|s| criterion(s.alpha, s.beta, eval_seed))
            .collect::<Result<_>>()?;
        for (site, v) in sites.iter_mut().zip(new_vals) {
            site.value = (site.value * site.replicates as f64 + v) / (site.replicates + 1) as f64;
            site.replicates += 1;
        }
    }

    for step in 0..budget {
        let surrogate = fit_shape_surrogate(&sites)?;
        let mu_min = surrogate.continuum_mu_min(&sites, &box2);

        // discrete pass over observed sites, then continuous refinement
        let mut cand: Vec<(Vec<f64>, f64)> = sites
            .iter()
            .map(|s| {
                let p = vec![s.alpha, s.beta];
                let ei = surrogate.ei(&p, mu_min);
                (p, ei)
            })
            .collect();
        let mut rng = stream(seed, &[TAG_ACQ_EVAL, step as u64, 0]);
        for _ in 0..4 {
            let p = vec![
                alo + (ahi - alo) * rng.random::<f64>(),
                blo + (bhi - blo) * rng.random::<f64>(),
            ];
            let ei = surrogate.ei(&p, mu_min);
            cand.push((p, ei));
        }
        cand.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        let mut best_x = cand[0].0.clone();
        let mut best_ei = cand[0].1;
        for (start, _) in cand.iter().take(3) {
            let mut f = |p: &[f64]| surrogate.ei(p, mu_min);
            let (x, v) = nelder_mead_max(&mut f, start, &box2, 200, 1e-10);
            if v > best_ei {
                best_ei = v;
                best_x = x;
            }
        }

        let eval_seed = child_seed(seed, &[TAG_ACQ_EVAL, step as u64]);
        let value = criterion(best_x[0], best_x[1], eval_seed)?;
        merge_eval(&mut sites, best_x[0], best_x[1], value);
    }

    // final surrogate and predictive-mean minimization
    let surrogate = fit_shape_surrogate(&sites)?;
    let mut best = (vec![sites[0].alpha, sites[0].beta], f64::INFINITY);
    for s in &sites {
        let p = vec![s.alpha, s.beta];
        let m = surrogate.mean(&p);
        if m < best.1 {
            best = (p, m);
        }
    }
    {
        let starts: Vec<Vec<f64>> = sites.iter().map(|s| vec![s.alpha, s.beta]).collect();
        for start in starts {
            let mut f = |p: &[f64]| -surrogate.mean(p);
            let (x, neg) = nelder_mead_max(&mut f, &start, &box2, 300, 1e-10);
            if -neg < best.1 {
                best = (x, -neg);
            }
        }
    }
    let (best_x, best_mean) = best;

    let band = best_mean + 0.05 * best_mean.abs();
    let mut near: Vec<NearOptimal> = sites
        .iter()
        .filter_map(|s| {
            let m = surrogate.mean(&[s.alpha, s.beta]);
            (m <= band).then_some(NearOptimal {
                alpha: s.alpha,
                beta: s.beta,
                predicted: m,
            })
        })
        .collect();
    near.sort_by(|a, b| (a.alpha + a.beta).partial_cmp(&(b.alpha + b.beta)).unwrap());
    let selected = near
        .first()
        .map(|s| (s.alpha, s.beta))
        .unwrap_or((best_x[0], best_x[1]));

    Ok(TuneResult {
        evaluations: sites,
        best: (best_x[0], best_x[1]),
        best_predicted: best_mean,
        near_optimal: near,
        selected,
    })
}

fn merge_eval(sites: &mut Vec<ShapeEval>, alpha: f64, beta: f64, value: f64) {
    for s in sites.iter_mut() {
        if (s.alpha - alpha).abs() < 1e-9 && (s.beta - beta).abs() < 1e-9 {
            s.value = (s.value * s.replicates as f64 + value) / (s.replicates + 1) as f64;
            s.replicates += 1;
            return;
        }
    }
    sites.push(ShapeEval {
        alpha,
        beta,
        value,
        replicates: 1,
    });
}

/// GP over shape space fit to replicate-averaged criterion values, with
/// the diagonal noise scaled by 1/replicates per site.
struct ShapeSurrogate {
    model: GpModel,
    center: f64,
    site_means: Vec<f64>,
}

impl ShapeSurrogate {
    fn code(p: &[f64]) -> Vec<f64> {
        let ((alo, ahi), (blo, bhi)) = SHAPE_BOX;
        vec![(p[0] - alo) / (ahi - alo), (p[1] - blo) / (bhi - blo)]
    }

    fn mean(&self, p: &[f64]) -> f64 {
        let c = Self::code(p);
        self.model
            .predict_mean(&c, 1)
            .map(|m| m[0] + self.center)
            .unwrap_or(f64::INFINITY)
    }

    fn ei(&self, p: &[f64], mu_min: f64) -> f64 {
        let c = Self::code(p);
        match self.model.predict(&c, 1) {
            Ok((m, v)) => expected_improvement(m[0] + self.center, v[0].sqrt(), mu_min),
            Err(_) => 0.0,
        }
    }

    /// mu_min of the EI formula: the predictive-mean minimum over the
    /// box, found by descent from the best observed site.
    fn continuum_mu_min(&self, sites: &[ShapeEval], box2: &[(f64, f64)]) -> f64 {
        let mut mu_min = f64::INFINITY;
        let mut best_site = 0;
        for (i, &m) in self.site_means.iter().enumerate() {
            if m < mu_min {
                mu_min = m;
                best_site = i;
            }
        }
        let start = [sites[best_site].alpha, sites[best_site].beta];
        let mut f = |p: &[f64]| -self.mean(p);
        let (_, neg) = nelder_mead_max(&mut f, &start, box2, 200, 1e-10);
        mu_min.min(-neg)
    }
}

fn fit_shape_surrogate(sites: &[ShapeEval]) -> Result<ShapeSurrogate> {
    let n = sites.len();
    let mut x = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for s in sites {
        let c = ShapeSurrogate::code(&[s.alpha, s.beta]);
        x.extend_from_slice(&c);
        y.push(s.value);
        w.push(1.0 / s.replicates.max(1) as f64);
    }
    let center = mean(&y);
    let resid: Vec<f64> = y.iter().map(|v| v - center).collect();
    let opts = MleOptions::new(1e-8, 2.0).with_nugget(true);
    let fit = mle_weighted(&x, n, 2, &resid, &opts, Some(&w))?;
    let model = GpModel::fit_with_noise_weights(&x, n, 2, &resid, fit.kernel, Some(&w))?;
    let site_means: Vec<f64> = model
        .predict_mean(&x, n)?
        .into_iter()
        .map(|m| m + center)
        .collect();
    Ok(ShapeSurrogate {
        model,
        center,
        site_means,
    })
}

/// Near-optimal (alpha, beta) catalog keyed by (n, d).
pub const SHAPE_CATALOG: [(usize, usize, (f64, f64)); 9] = [
    (8, 2, (1.5, 5.0)),
    (16, 2, (2.0, 4.0)),
    (16, 3, (2.5, 5.0)),
    (32, 3, (3.0, 5.0)),
    (32, 4, (1.5, 3.5)),
    (64, 4, (3.0, 6.0)),
    (64, 5, (2.0, 6.0)),
    (128, 5, (1.0, 3.0)),
    (128, 6, (2.0, 4.0)),
];

/// A catalog query result; `extrapolated` marks a nearest-key fallback.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub alpha: f64,
    pub beta: f64,
    pub extrapolated: bool,
}

/// Returns the catalog shape for (n, d), or the entry of the nearest key
/// in (log2 n, d) space flagged as extrapolated.
pub fn catalog_lookup(n: usize, d: usize) -> CatalogEntry {
    for &(cn, cd, (alpha, beta)) in SHAPE_CATALOG.iter() {
        if cn == n && cd == d {
            return CatalogEntry {
                alpha,
                beta,
                extrapolated: false,
            };
        }
    }
    let key = ((n.max(1) as f64).log2(), d as f64);
    let mut best = SHAPE_CATALOG[0];
    let mut best_dist = f64::INFINITY;
    for &entry in SHAPE_CATALOG.iter() {
        let (cn, cd, _) = entry;
        let dn = (cn as f64).log2() - key.0;
        let dd = cd as f64 - key.1;
        let dist = dn * dn + dd * dd;
        if dist < best_dist {
            best_dist = dist;
            best = entry;
        }
    }
    CatalogEntry {
        alpha: best.2 .0,
        beta: best.2 .1,
        extrapolated: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand_distr::StandardNormal;

    #[test]
    fn ei_symmetric_case() {
        let ei = expected_improvement(1.0, 1.0, 1.0);
        assert_relative_eq!(ei, 0.3989422804014327, epsilon = 1e-12);
    }

    #[test]
    fn ei_zero_sigma() {
        assert_eq!(expected_improvement(2.0, 0.0, 1.0), 0.0);
        assert_relative_eq!(expected_improvement(0.25, 0.0, 1.0), 0.75);
    }

    #[test]
    fn ei_table_value() {
        // mu_min - mu = 1, sigma = 1: Phi(1) + phi(1)
        let ei = expected_improvement(0.0, 1.0, 1.0);
        assert_relative_eq!(ei, 0.8413447460685429 + 0.24197072451914337, epsilon = 1e-9);
        assert!((ei - 1.083316).abs() < 1e-6);
    }

    #[test]
    fn ei_matches_monte_carlo() {
        let mut rng = crate::rng::rng_from_seed(5);
        for trial in 0..5 {
            let mu = rng.random::<f64>() * 4.0 - 2.0;
            let sigma = 0.2 + rng.random::<f64>();
            let mu_min = rng.random::<f64>() * 4.0 - 2.0;
            let closed = expected_improvement(mu, sigma, mu_min);
            let n = 200_000;
            let mut acc = 0.0;
            let mut acc2 = 0.0;
            for _ in 0..n {
                let draw = mu + sigma * rng.sample::<f64, _>(StandardNormal);
                let imp = (mu_min - draw).max(0.0);
                acc += imp;
                acc2 += imp * imp;
            }
            let est = acc / n as f64;
            let se = ((acc2 / n as f64 - est * est) / n as f64).sqrt();
            assert!(
                (closed - est).abs() <= 3.0 * se.max(1e-12),
                "trial {trial}: closed {closed} vs mc {est} (se {se})"
            );
        }
    }

    fn tiny_config() -> RimseConfig {
        RimseConfig::with_grid(16, 2, 10, 5, 2).search_iters(300)
    }

    #[test]
    fn rmse_zero_when_estimator_is_perfect() {
        let config = tiny_config();
        let perfect: &ThetaEstimator<'_> = &|_x, _n, _d, _y, theta_true| Ok(theta_true);
        let r = rmse_at_with(&config, 2.0, 4.0, 3, 7, perfect).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn rmse_single_design_is_absolute_error() {
        let mut config = tiny_config();
        config.designs_per_cell = 1;
        let theta_true = config.theta_grid[4];
        let biased: &ThetaEstimator<'_> = &|_x, _n, _d, _y, tt| Ok(tt + 0.125);
        let r = rmse_at_with(&config, 2.0, 4.0, 4, 7, biased).unwrap();
        assert_relative_eq!(r, 0.125, epsilon = 1e-12);
        assert!(theta_true > 0.0);
    }

    #[test]
    fn rmse_rejects_shape_outside_box() {
        let config = tiny_config();
        assert!(rmse_at(&config, 0.5, 4.0, 0, 1).is_err());
        assert!(rmse_at(&config, 2.0, 11.0, 0, 1).is_err());
    }

    #[test]
    fn rmse_trend_increases_with_theta() {
        // mean RMSE over the grid rises with theta, Spearman > 0.5
        let config = RimseConfig::with_grid(16, 2, 10, 5, 1).search_iters(300);
        let reps = 60;
        let means: Vec<f64> = (0..config.theta_grid.len())
            .map(|ti| {
                let vals: Vec<f64> = (0..reps)
                    .into_par_iter()
                    .map(|r| rmse_at(&config, 2.0, 4.0, ti, 9_000 + r as u64).unwrap())
                    .collect();
                mean(&vals)
            })
            .collect();
        let idx: Vec<f64> = (0..means.len()).map(|i| i as f64).collect();
        let rho = crate::dist::spearman(&idx, &means);
        assert!(rho > 0.5, "Spearman {rho}, means {means:?}");
    }

    #[test]
    fn detrend_constant_injection() {
        let config = tiny_config();
        let flat: &ThetaEstimator<'_> = &|_x, _n, _d, _y, tt| Ok(tt + 0.25);
        // constant rmse = 0.25 at every cell
        let surface = build_detrend_with(&config, 11, flat).unwrap();
        for t in 0..config.theta_grid.len() {
            assert_relative_eq!(surface.mu[t], 0.25, epsilon = 1e-9);
            assert_relative_eq!(surface.sigma[t], SIGMA_FLOOR, epsilon = 1e-12);
        }
    }

    #[test]
    fn detrend_mu_trend_follows_theta() {
        let config = RimseConfig::with_grid(16, 2, 10, 30, 1).search_iters(300);
        let surface = build_detrend(&config, 13).unwrap();
        let idx: Vec<f64> = (0..surface.mu.len()).map(|i| i as f64).collect();
        let tau = crate::dist::kendall_tau(&idx, &surface.mu);
        assert!(tau > 0.3, "Kendall tau {tau}, mu {:?}", surface.mu);
        assert!(surface.sigma.iter().all(|&s| s >= SIGMA_FLOOR));
    }

    #[test]
    fn derimse_injection_identities() {
        let config = tiny_config();
        let t = config.theta_grid.len();
        let detrend = DetrendSurface {
            theta_grid: config.theta_grid.clone(),
            mu: vec![0.3; t],
            sigma: vec![0.07; t],
        };
        // injected rmse == mu everywhere -> 0
        let at_mu: &ThetaEstimator<'_> = &|_x, _n, _d, _y, tt| Ok(tt + 0.3);
        // the estimator error is constant 0.3, so rmse = 0.3 = mu
        let v = derimse_with(&config, &detrend, 2.0, 4.0, 3, at_mu).unwrap();
        assert_relative_eq!(v, 0.0, epsilon = 1e-9);

        // rmse == mu + c sigma -> exactly c
        for &c in &[1.0, -0.5, 2.25] {
            let shifted: &ThetaEstimator<'_> = &move |_x, _n, _d, _y, tt| Ok(tt + 0.3 + c * 0.07);
            let v = derimse_with(&config, &detrend, 2.0, 4.0, 3, shifted).unwrap();
            assert_relative_eq!(v, c, epsilon = 1e-9);
        }
    }

    #[test]
    fn derimse_good_shape_beats_random_baseline() {
        // (2, 4) at n=16, d=2 sits below the random-shape detrend level
        let config = RimseConfig::with_grid(16, 2, 10, 10, 2).search_iters(1_000);
        let detrend = build_detrend(&config, 17).unwrap();
        let vals: Vec<f64> = (0..20)
            .into_par_iter()
            .map(|s| derimse(&config, &detrend, 2.0, 4.0, 500 + s as u64).unwrap())
            .collect();
        let m = mean(&vals);
        assert!(m < 0.0, "mean deRIMSE {m} not below baseline; values {vals:?}");
    }

    #[test]
    fn tune_budget_zero_uses_seed_sites_only() {
        let criterion = |a: f64, b: f64, _s: u64| Ok(quadratic_oracle(a, b));
        let res = tune_shapes_with(&criterion, 0, 23).unwrap();
        assert_eq!(res.evaluations.len(), 20);
        assert!(res.evaluations.iter().all(|e| e.replicates == 10));
        for e in &res.evaluations {
            assert!((1.0..=10.0).contains(&e.alpha) && (1.0..=10.0).contains(&e.beta));
        }
    }

    #[test]
    fn tune_recovers_quadratic_minimum() {
        let criterion = |a: f64, b: f64, _s: u64| Ok(quadratic_oracle(a, b));
        let res = tune_shapes_with(&criterion, 50, 29).unwrap();
        assert!(
            (res.best.0 - 3.0).abs() <= 0.5 && (res.best.1 - 6.5).abs() <= 0.5,
            "recovered {:?}",
            res.best
        );
        // all evaluations stayed inside the box
        for e in &res.evaluations {
            assert!((1.0..=10.0).contains(&e.alpha) && (1.0..=10.0).contains(&e.beta));
        }
        assert!(!res.near_optimal.is_empty());
    }

    #[test]
    fn catalog_exact_entries() {
        let expect = [
            ((8, 2), (1.5, 5.0)),
            ((16, 2), (2.0, 4.0)),
            ((16, 3), (2.5, 5.0)),
            ((32, 3), (3.0, 5.0)),
            ((32, 4), (1.5, 3.5)),
            ((64, 4), (3.0, 6.0)),
            ((64, 5), (2.0, 6.0)),
            ((128, 5), (1.0, 3.0)),
            ((128, 6), (2.0, 4.0)),
        ];
        assert_eq!(SHAPE_CATALOG.len(), 9);
        for ((n, d), (a, b)) in expect {
            let e = catalog_lookup(n, d);
            assert!(!e.extrapolated, "({n},{d}) should be an exact hit");
            assert_eq!((e.alpha, e.beta), (a, b));
        }
    }

    #[test]
    fn catalog_nearest_key_fallback() {
        let e = catalog_lookup(20, 2);
        assert!(e.extrapolated);
        assert_eq!((e.alpha, e.beta), (2.0, 4.0)); // nearest key (16, 2)
    }
}
