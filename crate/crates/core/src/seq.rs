//! Sequential design loops seeded by any design: ALM (acquire where the
//! predictive variance is largest) and expected-improvement Bayesian
//! optimization, both with multistart derivative-free inner searches.
//!
//! The GP always operates on inputs coded to the unit hypercube; the
//! objective is evaluated in natural units. Lengthscale bounds therefore
//! refer to the coded scale.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::design::Design;
use crate::error::{Error, Result};
use crate::gp::{mle_theta_update, GpModel, Kernel, MleOptions};
use crate::optim::nelder_mead_max;
use crate::rng::rng_from_seed;
use crate::tuner::expected_improvement;

/// What happens to the hyperparameters after each acquisition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefitPolicy {
    /// Re-estimate by MLE after every acquisition.
    EveryStep,
    /// Keep the kernel obtained from the initial design.
    FreezeAfterInit,
}

/// Black-box objective in natural units.
pub type Objective<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// Settings for a sequential loop.
#[derive(Debug, Clone)]
pub struct SeqConfig {
    /// Input box, one (lo, hi) pair per dimension.
    pub bounds: Vec<(f64, f64)>,
    pub refit: RefitPolicy,
    /// Lengthscale search interval on the coded unit cube.
    pub theta_bounds: (f64, f64),
    /// Estimate a nugget jointly with the lengthscale.
    pub with_nugget: bool,
    /// Observation noise added to objective evaluations.
    pub noise_sd: f64,
    /// Warm start for the initial hyperparameter climb (theta, relative
    /// nugget) on the coded scale. Both the initial fit and the per-step
    /// updates are local searches from the current values, the way a
    /// warm-started quasi-Newton fit behaves. `None` derives the start
    /// from the design itself (the 0.1 quantile of squared pairwise
    /// distances, the customary data-driven initialization).
    pub init_hyper: Option<(f64, f64)>,
}

impl SeqConfig {
    /// Data-driven lengthscale start: the 0.1 quantile of the squared
    /// pairwise distances of the coded design.
    pub fn data_driven_start(x_coded: &[f64], n: usize, d: usize) -> f64 {
        let mut sq = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                sq.push(sq_dist(
                    &x_coded[i * d..(i + 1) * d],
                    &x_coded[j * d..(j + 1) * d],
                ));
            }
        }
        crate::util::quantile(&sq, 0.1).max(1e-6)
    }
}

impl SeqConfig {
    fn decode(&self, x_coded: &[f64]) -> Vec<f64> {
        x_coded
            .iter()
            .zip(&self.bounds)
            .map(|(v, &(lo, hi))| lo + v * (hi - lo))
            .collect()
    }
}

/// One sequential acquisition loop: fitted model plus the full (x, y)
/// history in acquisition order.
pub struct SeqState<'a> {
    objective: Objective<'a>,
    config: SeqConfig,
    /// Coded design rows backing the model.
    x_coded: Vec<f64>,
    y: Vec<f64>,
    model: GpModel,
    /// (x, y) in natural units, initial design first.
    history: Vec<(Vec<f64>, f64)>,
    frozen: Option<Kernel>,
    mle_opts: MleOptions,
    /// Current (theta, relative nugget); refits climb locally from here,
    /// the way a warm-started optimizer updates after each acquisition.
    hyper: (f64, f64),
}

/// Result of one acquisition step, in natural units.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub x: Vec<f64>,
    pub y: f64,
    /// Acquisition value at the chosen point (variance for ALM, EI for BO).
    pub acq_value: f64,
    /// The acquisition surface was flat at zero; the first start was
    /// returned instead of an argmax.
    pub zero_acquisition: bool,
    /// Multistart initializations and their acquisition values.
    pub starts: Vec<Vec<f64>>,
    pub start_values: Vec<f64>,
}

impl<'a> SeqState<'a> {
    /// Evaluates the objective over `init` and fits the first model.
    pub fn from_design<R: Rng + ?Sized>(
        objective: Objective<'a>,
        init: &Design,
        config: SeqConfig,
        rng: &mut R,
    ) -> Result<Self> {
        if config.bounds.len() != init.d() {
            return Err(Error::invalid("bounds dimension does not match design"));
        }
        let n = init.n();
        let d = init.d();
        let mut x_coded = Vec::with_capacity(n * d);
        let mut y = Vec::with_capacity(n);
        let mut history = Vec::with_capacity(n);
        for i in 0..n {
            let coded = init.row(i).to_vec();
            let nat = config.decode(&coded);
            let mut val = (objective)(&nat);
            if !val.is_finite() {
                return Err(Error::numeric("objective returned a nonfinite value"));
            }
            if config.noise_sd > 0.0 {
                val += config.noise_sd * rng.sample::<f64, _>(StandardNormal);
            }
            x_coded.extend_from_slice(&coded);
            y.push(val);
            history.push((nat, val));
        }

        let mle_opts = MleOptions::new(config.theta_bounds.0, config.theta_bounds.1)
            .with_nugget(config.with_nugget)
            .fast();
        let (theta0, g0) = config.init_hyper.unwrap_or_else(|| {
            (SeqConfig::data_driven_start(&x_coded, n, d), 0.01)
        });
        let fit = mle_theta_update(&x_coded, n, d, &y, theta0, g0, &mle_opts)?;
        let model = GpModel::fit(&x_coded, n, d, &y, fit.kernel)?;
        let frozen = match config.refit {
            RefitPolicy::FreezeAfterInit => Some(fit.kernel),
            RefitPolicy::EveryStep => None,
        };
        let hyper = (fit.kernel.theta, fit.rel_nugget);
        Ok(SeqState {
            objective,
            config,
            x_coded,
            y,
            model,
            history,
            frozen,
            mle_opts,
            hyper,
        })
    }

    pub fn model(&self) -> &GpModel {
        &self.model
    }

    pub fn history(&self) -> &[(Vec<f64>, f64)] {
        &self.history
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn dim(&self) -> usize {
        self.config.bounds.len()
    }

    fn var_at(&self, coded: &[f64]) -> f64 {
        self.model.predict(coded, 1).map(|(_, v)| v[0]).unwrap_or(0.0)
    }

    /// Root mean squared prediction error against a noise-free test grid
    /// given in natural units.
    pub fn rmspe(&self, grid: &TestGrid) -> Result<f64> {
        let preds = self.model.predict_mean(&grid.coded, grid.m)?;
        let mse = preds
            .iter()
            .zip(&grid.truth)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / grid.m as f64;
        Ok(mse.sqrt())
    }

    /// Greedy sequential-maximin start points from a random candidate pool:
    /// each start maximizes its minimum distance to the design and to the
    /// starts already chosen.
    fn maximin_starts<R: Rng + ?Sized>(
        &self,
        n_starts: usize,
        pool_size: usize,
        rng: &mut R,
    ) -> Vec<Vec<f64>> {
        let d = self.dim();
        let n = self.len();
        let pool: Vec<Vec<f64>> = (0..pool_size)
            .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
            .collect();
        // min squared distance from each candidate to the design
        let mut min_sq: Vec<f64> = pool
            .iter()
            .map(|c| {
                (0..n)
                    .map(|i| sq_dist(c, &self.x_coded[i * d..(i + 1) * d]))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let mut chosen = Vec::with_capacity(n_starts);
        let mut used = vec![false; pool.len()];
        for _ in 0..n_starts.min(pool.len()) {
            let mut best = usize::MAX;
            for idx in 0..pool.len() {
                if used[idx] {
                    continue;
                }
                if best == usize::MAX || min_sq[idx] > min_sq[best] {
                    best = idx;
                }
            }
            used[best] = true;
            let picked = pool[best].clone();
            for idx in 0..pool.len() {
                if !used[idx] {
                    min_sq[idx] = min_sq[idx].min(sq_dist(&pool[idx], &picked));
                }
            }
            chosen.push(picked);
        }
        chosen
    }

    fn evaluate_and_update<R: Rng + ?Sized>(&mut self, coded: Vec<f64>, rng: &mut R) -> Result<f64> {
        let nat = self.config.decode(&coded);
        let mut val = (self.objective)(&nat);
        if !val.is_finite() {
            // state deliberately untouched on failure
            return Err(Error::numeric("objective returned a nonfinite value"));
        }
        if self.config.noise_sd > 0.0 {
            val += self.config.noise_sd * rng.sample::<f64, _>(StandardNormal);
        }
        let d = self.dim();
        let n = self.len() + 1;
        self.x_coded.extend_from_slice(&coded);
        self.y.push(val);
        self.history.push((nat, val));

        let kernel = match self.frozen {
            Some(k) => k,
            None => {
                let fit = mle_theta_update(
                    &self.x_coded,
                    n,
                    d,
                    &self.y,
                    self.hyper.0,
                    self.hyper.1,
                    &self.mle_opts,
                )?;
                self.hyper = (fit.kernel.theta, fit.rel_nugget);
                fit.kernel
            }
        };
        self.model = GpModel::fit(&self.x_coded, n, d, &self.y, kernel)?;
        Ok(val)
    }

    /// One ALM acquisition: maximize the predictive variance over the box
    /// from `n_starts` sequential-maximin starts, evaluate the objective
    /// there, and refit per policy.
    pub fn alm_step<R: Rng + ?Sized>(&mut self, n_starts: usize, rng: &mut R) -> Result<StepOutcome> {
        let d = self.dim();
        let box_coded: Vec<(f64, f64)> = vec![(0.0, 1.0); d];
        let starts = self.maximin_starts(n_starts.max(1), 512, rng);
        let start_values: Vec<f64> = starts.iter().map(|s| self.var_at(s)).collect();

        let mut best_x = starts[0].clone();
        let mut best_v = f64::NEG_INFINITY;
        for s in &starts {
            let mut f = |p: &[f64]| self.var_at(p);
            let (x, v) = nelder_mead_max(&mut f, s, &box_coded, 200, 1e-11);
            if v > best_v {
                best_v = v;
                best_x = x;
            }
        }

        let y = self.evaluate_and_update(best_x.clone(), rng)?;
        Ok(StepOutcome {
            x: self.config.decode(&best_x),
            y,
            acq_value: best_v,
            zero_acquisition: false,
            starts: starts.iter().map(|s| self.config.decode(s)).collect(),
            start_values,
        })
    }

    /// mu_min of the EI formula: the smallest predictive mean over the
    /// observed inputs (robust to noise), and the site attaining it.
    fn incumbent(&self) -> Result<(Vec<f64>, f64)> {
        let n = self.len();
        let d = self.dim();
        let means = self.model.predict_mean(&self.x_coded, n)?;
        let mut best = 0;
        for i in 1..n {
            if means[i] < means[best] {
                best = i;
            }
        }
        Ok((self.x_coded[best * d..(best + 1) * d].to_vec(), means[best]))
    }

    /// One EI acquisition: maximize expected improvement from `n_starts`
    /// random starts plus the predictive-mean minimizer. A surface that is
    /// flat at zero returns the first start, flagged.
    pub fn ei_step<R: Rng + ?Sized>(&mut self, n_starts: usize, rng: &mut R) -> Result<StepOutcome> {
        let d = self.dim();
        let box_coded: Vec<(f64, f64)> = vec![(0.0, 1.0); d];
        let (incumbent_x, mu_min) = self.incumbent()?;

        let mut starts: Vec<Vec<f64>> = (0..n_starts)
            .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
            .collect();
        starts.push(incumbent_x);

        let ei_at = |state: &Self, p: &[f64]| -> f64 {
            match state.model.predict(p, 1) {
                Ok((m, v)) => expected_improvement(m[0], v[0].sqrt(), mu_min),
                Err(_) => 0.0,
            }
        };
        let start_values: Vec<f64> = starts.iter().map(|s| ei_at(self, s)).collect();

        let mut best_x: Option<Vec<f64>> = None;
        let mut best_v = 0.0;
        for s in &starts {
            let mut f = |p: &[f64]| ei_at(self, p);
            let (x, v) = nelder_mead_max(&mut f, s, &box_coded, 200, 1e-12);
            if v > best_v {
                best_v = v;
                best_x = Some(x);
            }
        }

        let (chosen, zero) = match best_x {
            Some(x) => (x, false),
            None => (starts[0].clone(), true),
        };
        let y = self.evaluate_and_update(chosen.clone(), rng)?;
        Ok(StepOutcome {
            x: self.config.decode(&chosen),
            y,
            acq_value: best_v,
            zero_acquisition: zero,
            starts: starts.iter().map(|s| self.config.decode(s)).collect(),
            start_values,
        })
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A noise-free evaluation grid for prediction error, in natural units.
pub struct TestGrid {
    coded: Vec<f64>,
    truth: Vec<f64>,
    m: usize,
}

impl TestGrid {
    /// Regular grid with `per_dim` points per axis, endpoints included.
    pub fn regular(
        objective: Objective<'_>,
        bounds: &[(f64, f64)],
        per_dim: usize,
    ) -> Self {
        let d = bounds.len();
        let axes: Vec<Vec<f64>> = bounds
            .iter()
            .map(|&(lo, hi)| crate::util::linspace(lo, hi, per_dim))
            .collect();
        let m = per_dim.pow(d as u32);
        let mut coded = Vec::with_capacity(m * d);
        let mut truth = Vec::with_capacity(m);
        let mut idx = vec![0usize; d];
        for _ in 0..m {
            let nat: Vec<f64> = (0..d).map(|k| axes[k][idx[k]]).collect();
            truth.push(objective(&nat));
            for k in 0..d {
                coded.push((nat[k] - bounds[k].0) / (bounds[k].1 - bounds[k].0));
            }
            // odometer increment
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < per_dim {
                    break;
                }
                idx[k] = 0;
            }
        }
        TestGrid { coded, truth, m }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }
}

/// Per-step record of an ALM run; `x`/`y` are `None` for the row that
/// describes the initial fit.
#[derive(Debug, Clone)]
pub struct AlmRecord {
    pub n: usize,
    pub x: Option<Vec<f64>>,
    pub y: Option<f64>,
    pub rmspe: f64,
}

/// Full ALM loop: noisy objective, per-step joint (theta, nugget) refits,
/// `n`-factor sequential-maximin multistart variance maximization, RMSPE
/// tracked on a noise-free test grid. Returns one record for the initial
/// fit plus one per acquisition.
pub fn run_alm(
    objective: Objective<'_>,
    init: &Design,
    bounds: &[(f64, f64)],
    total_n: usize,
    noise_sd: f64,
    grid: &TestGrid,
    seed: u64,
) -> Result<Vec<AlmRecord>> {
    if total_n < init.n() {
        return Err(Error::invalid("total_n smaller than the initial design"));
    }
    let d = init.d();
    let config = SeqConfig {
        bounds: bounds.to_vec(),
        refit: RefitPolicy::EveryStep,
        theta_bounds: (1e-8, (d as f64).sqrt()),
        with_nugget: true,
        noise_sd,
        init_hyper: None,
    };
    let mut rng = rng_from_seed(seed);
    let mut state = SeqState::from_design(objective, init, config, &mut rng)?;
    let mut records = Vec::with_capacity(total_n - init.n() + 1);
    records.push(AlmRecord {
        n: state.len(),
        x: None,
        y: None,
        rmspe: state.rmspe(grid)?,
    });
    while state.len() < total_n {
        let n_starts = state.len();
        let out = state.alm_step(n_starts, &mut rng)?;
        records.push(AlmRecord {
            n: state.len(),
            x: Some(out.x),
            y: Some(out.y),
            rmspe: state.rmspe(grid)?,
        });
    }
    Ok(records)
}

/// Per-step record of a BO run; `best` is the running minimum of the
/// observed objective values.
#[derive(Debug, Clone)]
pub struct BoRecord {
    pub n: usize,
    pub x: Option<Vec<f64>>,
    pub y: Option<f64>,
    pub best: f64,
}

/// Full EI loop on a noise-free objective with the lengthscale frozen at
/// the value estimated from the initial design. Acquisitions use four
/// random starts plus the incumbent (a five-start scheme). The best-so-far
/// trace is nonincreasing by construction.
///
/// The lengthscale is searched on (0, 10 sqrt(d)] in *natural* input
/// units, so the cap is meaningful whatever the box size; internally the
/// bound is rescaled to the coded unit cube. The box must have equal
/// widths per dimension (the kernel is isotropic).
pub fn run_bo(
    objective: Objective<'_>,
    init: &Design,
    bounds: &[(f64, f64)],
    total_n: usize,
    seed: u64,
) -> Result<Vec<BoRecord>> {
    if total_n < init.n() {
        return Err(Error::invalid("total_n smaller than the initial design"));
    }
    let d = init.d();
    let width = bounds[0].1 - bounds[0].0;
    if !(width > 0.0) {
        return Err(Error::invalid("degenerate input box"));
    }
    if bounds
        .iter()
        .any(|&(lo, hi)| ((hi - lo) - width).abs() > 1e-9 * width)
    {
        return Err(Error::invalid(
            "isotropic search needs equal box widths per dimension",
        ));
    }
    let theta_hi_coded = (10.0 * (d as f64).sqrt() / (width * width)).clamp(1e-6, 1e8);
    let config = SeqConfig {
        bounds: bounds.to_vec(),
        refit: RefitPolicy::FreezeAfterInit,
        theta_bounds: (1e-8, theta_hi_coded),
        with_nugget: false,
        noise_sd: 0.0,
        init_hyper: None,
    };
    let mut rng = rng_from_seed(seed);
    let mut state = SeqState::from_design(objective, init, config, &mut rng)?;
    let mut best = state
        .history()
        .iter()
        .map(|(_, y)| *y)
        .fold(f64::INFINITY, f64::min);
    let mut records = Vec::with_capacity(total_n - init.n() + 1);
    records.push(BoRecord {
        n: state.len(),
        x: None,
        y: None,
        best,
    });
    while state.len() < total_n {
        let out = state.ei_step(4, &mut rng)?;
        best = best.min(out.y);
        records.push(BoRecord {
            n: state.len(),
            x: Some(out.x),
            y: Some(out.y),
            best,
        });
    }
    Ok(records)
}

/// Writes a sequential trace as CSV: step index, x coordinates, y, metric.
pub fn write_trace_csv<W: std::io::Write>(
    mut w: W,
    d: usize,
    metric_name: &str,
    rows: impl Iterator<Item = (usize, Option<Vec<f64>>, Option<f64>, f64)>,
) -> Result<()> {
    let coords: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
    writeln!(w, "step,{},y,{metric_name}", coords.join(","))?;
    for (n, x, y, metric) in rows {
        let xs = match &x {
            Some(v) => v.iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(","),
            None => vec![String::new(); d].join(","),
        };
        let ys = y.map(|v| format!("{v}")).unwrap_or_default();
        writeln!(w, "{n},{xs},{ys},{metric}")?;
    }
    Ok(())
}
