//! Benchmark harness for the three studies: lengthscale-estimation
//! accuracy over a theta grid (logMSE), sequential active learning on the
//! bump surface (ALM / RMSPE), and expected-improvement optimization of
//! the Griewank function with paired t-tests at checkpoints.
//!
//! Every Monte Carlo cell derives its RNG stream from the master seed and
//! its cell coordinates via [`crate::rng::child_seed`], so cells can run
//! in any order or in parallel and the outputs stay bit-identical.
//! Pairing works through shared streams: the logMSE study pushes the same
//! standard-normal draws through every method's design at a given
//! (theta, rep) cell, and the BO study holds the Griewank half-width b
//! fixed across methods within a rep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::MethodSpec;
use crate::dist::spearman;
use crate::error::{Error, Result};
use crate::gp::{mle_theta, mvn_from_normals, Kernel};
use crate::rng::{child_seed, stream};
use crate::seq::{run_alm, run_bo, TestGrid};
use crate::special::student_t_cdf;
use crate::testfns::{gramacy_lee, griewank, GRAMACY_LEE_BOUNDS};
use crate::tuner::{catalog_lookup, DetrendSurface};
use crate::util::{linspace, mean, quantile, sd};

// seed-path tags
const TAG_LOGMSE_Z: u64 = 1;
const TAG_LOGMSE_DESIGN: u64 = 2;
const TAG_ALM_DESIGN: u64 = 3;
const TAG_ALM_RUN: u64 = 4;
const TAG_BO_B: u64 = 5;
const TAG_BO_DESIGN: u64 = 6;
const TAG_BO_RUN: u64 = 7;

/// Floor applied before taking the log of a summed squared error; a
/// perfect estimator would otherwise produce log(0).
pub const LOGMSE_FLOOR: f64 = 1e-12;

/// Scale and comparator settings shared by the three studies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyConfig {
    pub master_seed: u64,
    /// Monte Carlo repetitions per cell.
    pub reps: usize,
    /// Stochastic-search iterations for constructed designs.
    pub search_iters: u64,
    /// Input dimensions for the logMSE study (design size is 2^(d+1)).
    pub dims: Vec<usize>,
    /// Theta-grid size for the logMSE study.
    pub theta_grid_size: usize,
    /// Initial design size for the sequential studies.
    pub n_init: usize,
    /// Final design size for the ALM study.
    pub total_n: usize,
    /// Observation noise for the ALM study.
    pub noise_sd: f64,
    /// Test grid resolution per axis for RMSPE.
    pub test_grid_per_dim: usize,
    /// Beta shape used by the ALM comparators.
    pub alm_shape: (f64, f64),
    /// Input dimension for the BO study.
    pub bo_d: usize,
    /// Design sizes at which the BO study reports p-value tables.
    pub checkpoints: Vec<usize>,
    /// Comparator designs; empty means the study-specific default set.
    #[serde(default)]
    pub methods: Vec<MethodSpec>,
}

impl StudyConfig {
    /// Desk-scale defaults; `--paper-scale` style runs raise `reps` to
    /// 1000 and `search_iters` to 1e5.
    pub fn new(master_seed: u64) -> Self {
        StudyConfig {
            master_seed,
            reps: 200,
            search_iters: 5_000,
            dims: vec![2],
            theta_grid_size: 30,
            n_init: 8,
            total_n: 64,
            noise_sd: 0.01,
            test_grid_per_dim: 100,
            alm_shape: (2.0, 5.0),
            bo_d: 2,
            checkpoints: vec![25, 70],
            methods: Vec::new(),
        }
    }

    pub fn paper_scale(mut self) -> Self {
        self.reps = 1000;
        self.search_iters = 100_000;
        self
    }

    /// The seven logMSE comparators, with Beta shapes from the catalog
    /// for this (n, d).
    pub fn logmse_methods(&self, n: usize, d: usize) -> Vec<MethodSpec> {
        if !self.methods.is_empty() {
            return self.methods.clone();
        }
        let s = self.search_iters;
        let cat = catalog_lookup(n, d);
        vec![
            MethodSpec::Random,
            MethodSpec::Lhs,
            MethodSpec::Maximin { s },
            MethodSpec::Phip { p: 2.0, s },
            MethodSpec::Unifdist { s },
            MethodSpec::Betadist {
                alpha: cat.alpha,
                beta: cat.beta,
                s,
            },
            MethodSpec::Lhsbeta {
                alpha: cat.alpha,
                beta: cat.beta,
                s,
            },
        ]
    }

    /// Sequential-study comparators: random, LHS, betadist, lhsbeta,
    /// maximin. The ALM study takes its shape from `alm_shape`; the BO
    /// study uses the catalog entry for (n_init, d).
    pub fn seq_methods(&self, shape: (f64, f64)) -> Vec<MethodSpec> {
        if !self.methods.is_empty() {
            return self.methods.clone();
        }
        let s = self.search_iters;
        vec![
            MethodSpec::Random,
            MethodSpec::Lhs,
            MethodSpec::Betadist {
                alpha: shape.0,
                beta: shape.1,
                s,
            },
            MethodSpec::Lhsbeta {
                alpha: shape.0,
                beta: shape.1,
                s,
            },
            MethodSpec::Maximin { s },
        ]
    }
}

/// One Monte Carlo repetition's result for one method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRecord {
    pub method: String,
    pub rep: usize,
    /// Records sharing a pairing key consumed the same shared randomness
    /// (normal draws or Griewank half-width) and are comparable pairwise.
    pub pairing_key: u64,
    pub metric: Metric,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Metric {
    /// Squared lengthscale-estimation errors per theta-grid point
    /// (NaN marks a failed fit).
    ThetaSqErr(Vec<f64>),
    /// RMSPE after the initial fit and after each acquisition.
    RmspeTrace(Vec<f64>),
    /// Running best objective value per design size.
    BestTrace(Vec<f64>),
}

/// Lower-tail paired t-test: p = P(T_{n-1} <= t) for the hypothesis
/// mean(x - y) < 0. Zero-variance differences resolve by sign, with the
/// all-zero case reported as 0.5.
pub fn paired_ttest(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid("paired samples must have equal length"));
    }
    if x.len() < 2 {
        return Err(Error::invalid("paired t-test needs at least 2 pairs"));
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let m = mean(&diffs);
    let s = sd(&diffs);
    if s == 0.0 {
        return Ok(if m < 0.0 {
            0.0
        } else if m > 0.0 {
            1.0
        } else {
            0.5
        });
    }
    let t = m / (s / (diffs.len() as f64).sqrt());
    Ok(student_t_cdf(t, (diffs.len() - 1) as f64))
}

// ---------------------------------------------------------------------
// logMSE study
// ---------------------------------------------------------------------

/// Aggregated logMSE table for one dimension.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogMseTable {
    pub d: usize,
    pub n: usize,
    pub theta_grid: Vec<f64>,
    pub methods: Vec<String>,
    /// log of the summed squared error per method per grid point.
    pub raw: Vec<Vec<f64>>,
    /// Detrend-standardized residuals, same shape.
    pub standardized: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Fit failures per method (cells dropped pairwise across methods).
    pub failures: Vec<usize>,
    pub records: Vec<BenchRecord>,
}

impl LogMseTable {
    /// Paired comparison of two methods on mean standardized logMSE,
    /// pairing on the theta-grid points. Small p favors `a`.
    pub fn compare_standardized(&self, a: &str, b: &str) -> Result<f64> {
        let ia = self.method_index(a)?;
        let ib = self.method_index(b)?;
        paired_ttest(&self.standardized[ia], &self.standardized[ib])
    }

    pub fn method_index(&self, label: &str) -> Result<usize> {
        self.methods
            .iter()
            .position(|m| m == label)
            .ok_or_else(|| Error::invalid(format!("unknown method label {label}")))
    }

    /// Spearman correlation of raw logMSE with theta, per method.
    pub fn raw_trends(&self) -> Vec<f64> {
        self.raw
            .iter()
            .map(|row| spearman(&self.theta_grid, row))
            .collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let mut header = vec!["theta".to_string(), "mu".into(), "sigma".into()];
        for m in &self.methods {
            header.push(format!("raw_{m}"));
        }
        for m in &self.methods {
            header.push(format!("std_{m}"));
        }
        writeln!(w, "{}", header.join(","))?;
        for t in 0..self.theta_grid.len() {
            let mut row = vec![
                format!("{}", self.theta_grid[t]),
                format!("{}", self.mu[t]),
                format!("{}", self.sigma[t]),
            ];
            for m in 0..self.methods.len() {
                row.push(format!("{}", self.raw[m][t]));
            }
            for m in 0..self.methods.len() {
                row.push(format!("{}", self.standardized[m][t]));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Runs the lengthscale-accuracy study for every configured dimension:
/// designs of size 2^(d+1), responses simulated on a 30-point theta grid
/// with unit amplitude, lengthscale refit on (1e-8, sqrt(d)], squared
/// errors summed over reps on the log scale, then standardized against a
/// pooled detrending surface.
pub fn logmse_study(config: &StudyConfig) -> Result<Vec<LogMseTable>> {
    logmse_study_with(config, None)
}

/// As [`logmse_study`] with an injectable lengthscale estimator
/// (x, n, d, y, theta_true) -> theta_hat.
pub fn logmse_study_with(
    config: &StudyConfig,
    estimator: Option<&crate::tuner::ThetaEstimator<'_>>,
) -> Result<Vec<LogMseTable>> {
    config
        .dims
        .iter()
        .map(|&d| logmse_one_dim(config, d, estimator))
        .collect()
}

fn logmse_one_dim(
    config: &StudyConfig,
    d: usize,
    estimator: Option<&crate::tuner::ThetaEstimator<'_>>,
) -> Result<LogMseTable> {
    let n = 1usize << (d + 1);
    let theta_grid = linspace(0.1, (d as f64).sqrt(), config.theta_grid_size);
    let methods = config.logmse_methods(n, d);
    let labels: Vec<String> = methods.iter().map(|m| m.label()).collect();
    let reps = config.reps;
    let t_count = theta_grid.len();
    let bounds = (1e-8, (d as f64).sqrt());
    let master = config.master_seed;

    // per-method, per-rep squared error vectors over the grid
    let records: Vec<BenchRecord> = methods
        .par_iter()
        .enumerate()
        .flat_map(|(mi, method)| {
            let theta_grid = &theta_grid;
            let labels = &labels;
            (0..reps).into_par_iter().map(move |rep| {
                let mut sq = Vec::with_capacity(t_count);
                for (ti, &theta) in theta_grid.iter().enumerate() {
                    let cell = (|| -> Result<f64> {
                        let design_seed = child_seed(
                            master,
                            &[TAG_LOGMSE_DESIGN, d as u64, mi as u64, ti as u64, rep as u64],
                        );
                        let design = method.generate(n, d, design_seed)?;
                        // shared draws across methods: pairing on (theta, rep)
                        let mut zrng =
                            stream(master, &[TAG_LOGMSE_Z, d as u64, ti as u64, rep as u64]);
                        let z: Vec<f64> = (0..n)
                            .map(|_| {
                                rand::Rng::sample::<f64, _>(&mut zrng, rand_distr::StandardNormal)
                            })
                            .collect();
                        let kernel = Kernel::interpolating(theta)?;
                        let y = mvn_from_normals(design.coords(), n, d, &kernel, &z)?;
                        let theta_hat = match estimator {
                            Some(f) => f(design.coords(), n, d, &y, theta)?,
                            None => mle_theta(design.coords(), n, d, &y, bounds, false)?
                                .kernel
                                .theta,
                        };
                        Ok((theta_hat - theta) * (theta_hat - theta))
                    })();
                    sq.push(cell.unwrap_or(f64::NAN));
                }
                BenchRecord {
                    method: labels[mi].clone(),
                    rep,
                    pairing_key: rep as u64,
                    metric: Metric::ThetaSqErr(sq),
                }
            })
        })
        .collect();

    // pairwise dropping: a (theta, rep) cell failed for any method is
    // excluded for all methods
    let m_count = labels.len();
    let mut valid = vec![vec![true; reps]; t_count];
    let mut failures = vec![0usize; m_count];
    for rec in &records {
        let mi = labels.iter().position(|l| *l == rec.method).unwrap();
        if let Metric::ThetaSqErr(sq) = &rec.metric {
            for (ti, v) in sq.iter().enumerate() {
                if v.is_nan() {
                    failures[mi] += 1;
                    valid[ti][rec.rep] = false;
                }
            }
        }
    }

    let mut raw = vec![vec![0.0; t_count]; m_count];
    for rec in &records {
        let mi = labels.iter().position(|l| *l == rec.method).unwrap();
        if let Metric::ThetaSqErr(sq) = &rec.metric {
            for (ti, v) in sq.iter().enumerate() {
                if valid[ti][rec.rep] {
                    raw[mi][ti] += v;
                }
            }
        }
    }
    for row in raw.iter_mut() {
        for v in row.iter_mut() {
            *v = v.max(LOGMSE_FLOOR).ln();
        }
    }

    // pooled detrending: the per-grid-point replicate set is the method values
    let pooled: Vec<Vec<f64>> = (0..t_count)
        .map(|ti| (0..m_count).map(|mi| raw[mi][ti]).collect())
        .collect();
    let detrend = DetrendSurface::from_replicates(&theta_grid, &pooled);
    let standardized: Vec<Vec<f64>> = raw
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(ti, &v)| detrend.standardize(ti, v))
                .collect()
        })
        .collect();

    Ok(LogMseTable {
        d,
        n,
        theta_grid,
        methods: labels,
        raw,
        standardized,
        mu: detrend.mu,
        sigma: detrend.sigma,
        failures,
        records,
    })
}

// ---------------------------------------------------------------------
// ALM study
// ---------------------------------------------------------------------

/// Mean and upper-90%-quantile RMSPE traces per method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlmTable {
    pub methods: Vec<String>,
    /// Design sizes, n_init..=total_n.
    pub steps: Vec<usize>,
    pub mean: Vec<Vec<f64>>,
    pub q90: Vec<Vec<f64>>,
    /// Reps dropped because some method's run failed.
    pub dropped_reps: usize,
    pub records: Vec<BenchRecord>,
}

impl AlmTable {
    pub fn method_index(&self, label: &str) -> Result<usize> {
        self.methods
            .iter()
            .position(|m| m == label)
            .ok_or_else(|| Error::invalid(format!("unknown method label {label}")))
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let mut header = vec!["n".to_string()];
        for m in &self.methods {
            header.push(format!("mean_{m}"));
        }
        for m in &self.methods {
            header.push(format!("q90_{m}"));
        }
        writeln!(w, "{}", header.join(","))?;
        for (si, &step) in self.steps.iter().enumerate() {
            let mut row = vec![format!("{step}")];
            for mi in 0..self.methods.len() {
                row.push(format!("{}", self.mean[mi][si]));
            }
            for mi in 0..self.methods.len() {
                row.push(format!("{}", self.q90[mi][si]));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Sequential active-learning study on the bump surface observed under
/// N(0, noise_sd^2) noise: every method seeds an ALM loop from n_init to
/// total_n points with per-step joint (theta, nugget) refits, and RMSPE
/// is tracked on a regular noise-free test grid.
pub fn alm_study(config: &StudyConfig) -> Result<AlmTable> {
    let methods = config.seq_methods(config.alm_shape);
    let labels: Vec<String> = methods.iter().map(|m| m.label()).collect();
    let bounds = [GRAMACY_LEE_BOUNDS, GRAMACY_LEE_BOUNDS];
    let objective = |x: &[f64]| gramacy_lee(x);
    let grid = TestGrid::regular(&objective, &bounds, config.test_grid_per_dim);
    let master = config.master_seed;
    let reps = config.reps;
    let trace_len = config.total_n - config.n_init + 1;

    let cells: Vec<(usize, usize)> = (0..methods.len())
        .flat_map(|mi| (0..reps).map(move |rep| (mi, rep)))
        .collect();
    let traces: Vec<Option<Vec<f64>>> = cells
        .par_iter()
        .map(|&(mi, rep)| {
            let run = || -> Result<Vec<f64>> {
                let design_seed = child_seed(master, &[TAG_ALM_DESIGN, mi as u64, rep as u64]);
                let init = methods[mi].generate(config.n_init, 2, design_seed)?;
                let run_seed = child_seed(master, &[TAG_ALM_RUN, mi as u64, rep as u64]);
                let records = run_alm(
                    &objective,
                    &init,
                    &bounds,
                    config.total_n,
                    config.noise_sd,
                    &grid,
                    run_seed,
                )?;
                Ok(records.into_iter().map(|r| r.rmspe).collect())
            };
            run().ok()
        })
        .collect();

    // drop whole reps on any failure to keep methods paired
    let mut rep_ok = vec![true; reps];
    for (idx, trace) in traces.iter().enumerate() {
        if trace.is_none() {
            rep_ok[cells[idx].1] = false;
        }
    }
    let dropped_reps = rep_ok.iter().filter(|ok| !**ok).count();
    if rep_ok.iter().all(|ok| !ok) {
        return Err(Error::numeric("every ALM repetition failed"));
    }

    let mut records = Vec::new();
    let mut per_method: Vec<Vec<&Vec<f64>>> = vec![Vec::new(); methods.len()];
    for (idx, trace) in traces.iter().enumerate() {
        let (mi, rep) = cells[idx];
        if !rep_ok[rep] {
            continue;
        }
        let trace = trace.as_ref().unwrap();
        per_method[mi].push(trace);
        records.push(BenchRecord {
            method: labels[mi].clone(),
            rep,
            pairing_key: rep as u64,
            metric: Metric::RmspeTrace(trace.clone()),
        });
    }

    let steps: Vec<usize> = (config.n_init..=config.total_n).collect();
    let mut mean_tr = vec![vec![0.0; trace_len]; methods.len()];
    let mut q90_tr = vec![vec![0.0; trace_len]; methods.len()];
    for mi in 0..methods.len() {
        for si in 0..trace_len {
            let vals: Vec<f64> = per_method[mi].iter().map(|t| t[si]).collect();
            mean_tr[mi][si] = mean(&vals);
            q90_tr[mi][si] = quantile(&vals, 0.90);
        }
    }

    Ok(AlmTable {
        methods: labels,
        steps,
        mean: mean_tr,
        q90: q90_tr,
        dropped_reps,
        records,
    })
}

// ---------------------------------------------------------------------
// BO study
// ---------------------------------------------------------------------

/// Best-objective values at the checkpoints plus lower-tail paired
/// t-test matrices (row method beats column method when the entry is
/// small).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoTable {
    pub methods: Vec<String>,
    pub checkpoints: Vec<usize>,
    /// best[c][m][rep]: best objective at checkpoint c for method m.
    pub best: Vec<Vec<Vec<f64>>>,
    /// pvals[c][i][j] = P(mean(best_i - best_j) < 0); NaN on the diagonal.
    pub pvals: Vec<Vec<Vec<f64>>>,
    pub dropped_reps: usize,
    pub records: Vec<BenchRecord>,
}

impl BoTable {
    pub fn method_index(&self, label: &str) -> Result<usize> {
        self.methods
            .iter()
            .position(|m| m == label)
            .ok_or_else(|| Error::invalid(format!("unknown method label {label}")))
    }

    pub fn pval(&self, checkpoint: usize, a: &str, b: &str) -> Result<f64> {
        let ci = self
            .checkpoints
            .iter()
            .position(|&c| c == checkpoint)
            .ok_or_else(|| Error::invalid(format!("no checkpoint {checkpoint}")))?;
        Ok(self.pvals[ci][self.method_index(a)?][self.method_index(b)?])
    }

    /// One p-value matrix as CSV, `NA` on the diagonal.
    pub fn write_pvals_csv<W: std::io::Write>(&self, mut w: W, checkpoint: usize) -> Result<()> {
        let ci = self
            .checkpoints
            .iter()
            .position(|&c| c == checkpoint)
            .ok_or_else(|| Error::invalid(format!("no checkpoint {checkpoint}")))?;
        writeln!(w, "method,{}", self.methods.join(","))?;
        for (i, m) in self.methods.iter().enumerate() {
            let mut row = vec![m.clone()];
            for j in 0..self.methods.len() {
                if i == j {
                    row.push("NA".into());
                } else {
                    row.push(format!("{}", self.pvals[ci][i][j]));
                }
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Mean best-so-far per method per checkpoint.
    pub fn write_summary_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let mut header = vec!["n".to_string()];
        for m in &self.methods {
            header.push(format!("mean_best_{m}"));
        }
        writeln!(w, "{}", header.join(","))?;
        for (ci, &c) in self.checkpoints.iter().enumerate() {
            let mut row = vec![format!("{c}")];
            for mi in 0..self.methods.len() {
                row.push(format!("{}", mean(&self.best[ci][mi])));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Expected-improvement study on the Griewank function: each rep draws a
/// half-width b ~ Unif(0, 10) shared by all methods, runs a frozen-theta
/// EI loop from each method's initial design, and compares best-so-far
/// values at the checkpoints with lower-tail paired t-tests.
pub fn bo_study(config: &StudyConfig) -> Result<BoTable> {
    let d = config.bo_d;
    let cat = catalog_lookup(config.n_init, d);
    let methods = config.seq_methods((cat.alpha, cat.beta));
    let labels: Vec<String> = methods.iter().map(|m| m.label()).collect();
    let master = config.master_seed;
    let reps = config.reps;
    let total_n = *config
        .checkpoints
        .iter()
        .max()
        .ok_or_else(|| Error::invalid("bo study needs at least one checkpoint"))?;
    if config.checkpoints.iter().any(|&c| c < config.n_init) {
        return Err(Error::invalid("checkpoint below the initial design size"));
    }

    let cells: Vec<(usize, usize)> = (0..methods.len())
        .flat_map(|mi| (0..reps).map(move |rep| (mi, rep)))
        .collect();
    let traces: Vec<Option<Vec<f64>>> = cells
        .par_iter()
        .map(|&(mi, rep)| {
            let run = || -> Result<Vec<f64>> {
                let mut brng = stream(master, &[TAG_BO_B, rep as u64]);
                let b = 10.0 * rand::Rng::random::<f64>(&mut brng).max(1e-9);
                let bounds = vec![(-b, b); d];
                let objective = |x: &[f64]| griewank(x);
                let design_seed = child_seed(master, &[TAG_BO_DESIGN, mi as u64, rep as u64]);
                let init = methods[mi].generate(config.n_init, d, design_seed)?;
                let run_seed = child_seed(master, &[TAG_BO_RUN, mi as u64, rep as u64]);
                let recs = run_bo(&objective, &init, &bounds, total_n, run_seed)?;
                Ok(recs.into_iter().map(|r| r.best).collect())
            };
            run().ok()
        })
        .collect();

    let mut rep_ok = vec![true; reps];
    for (idx, trace) in traces.iter().enumerate() {
        if trace.is_none() {
            rep_ok[cells[idx].1] = false;
        }
    }
    let dropped_reps = rep_ok.iter().filter(|ok| !**ok).count();
    let kept: Vec<usize> = (0..reps).filter(|&r| rep_ok[r]).collect();
    if kept.len() < 2 {
        return Err(Error::numeric("too few successful BO repetitions"));
    }

    let mut records = Vec::new();
    // best[c][m][rep kept]
    let mut best = vec![vec![vec![0.0; kept.len()]; methods.len()]; config.checkpoints.len()];
    for (idx, trace) in traces.iter().enumerate() {
        let (mi, rep) = cells[idx];
        if !rep_ok[rep] {
            continue;
        }
        let trace = trace.as_ref().unwrap();
        let kept_idx = kept.iter().position(|&r| r == rep).unwrap();
        for (ci, &c) in config.checkpoints.iter().enumerate() {
            best[ci][mi][kept_idx] = trace[c - config.n_init];
        }
        records.push(BenchRecord {
            method: labels[mi].clone(),
            rep,
            pairing_key: rep as u64,
            metric: Metric::BestTrace(trace.clone()),
        });
    }

    let m_count = methods.len();
    let mut pvals = vec![vec![vec![f64::NAN; m_count]; m_count]; config.checkpoints.len()];
    for ci in 0..config.checkpoints.len() {
        for i in 0..m_count {
            for j in 0..m_count {
                if i != j {
                    pvals[ci][i][j] = paired_ttest(&best[ci][i], &best[ci][j])?;
                }
            }
        }
    }

    Ok(BoTable {
        methods: labels,
        checkpoints: config.checkpoints.clone(),
        best,
        pvals,
        dropped_reps,
        records,
    })
}

/// Output naming contract: `study-<name>-d<d>-n<n>.csv`.
pub fn csv_filename(study: &str, d: usize, n: usize) -> String {
    format!("study-{study}-d{d}-n{n}.csv")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ttest_dominant_negative_mean() {
        let x: Vec<f64> = (0..10).map(|i| -1.0 + 1e-6 * ((i % 2) as f64 - 0.5)).collect();
        let y = vec![0.0; 10];
        let p = paired_ttest(&x, &y).unwrap();
        assert!(p < 1e-6, "p = {p}");
    }

    #[test]
    fn ttest_alternating_is_half() {
        let x: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1e-3 } else { -1e-3 }).collect();
        let y = vec![0.0; 10];
        let p = paired_ttest(&x, &y).unwrap();
        assert_relative_eq!(p, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn ttest_matches_hand_computation() {
        // x - y = {-1, ..., -10}: t = mean / (sd / sqrt(10)), df = 9
        let x: Vec<f64> = (1..=10).map(|i| -(i as f64)).collect();
        let y = vec![0.0; 10];
        let m = mean(&x);
        let s = sd(&x);
        let t = m / (s / 10.0_f64.sqrt());
        let oracle = student_t_cdf(t, 9.0);
        let p = paired_ttest(&x, &y).unwrap();
        assert_relative_eq!(p, oracle, epsilon = 1e-12);
        // t = -5.744 at df 9: p around 1.4e-4
        assert!((p - 1.39e-4).abs() < 1e-5, "sanity scale: {p}");
    }

    #[test]
    fn ttest_zero_variance_conventions() {
        assert_eq!(paired_ttest(&[1.0, 1.0], &[2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(paired_ttest(&[3.0, 3.0], &[2.0, 2.0]).unwrap(), 1.0);
        assert_eq!(paired_ttest(&[2.0, 2.0], &[2.0, 2.0]).unwrap(), 0.5);
    }

    #[test]
    fn ttest_complement_identity() {
        let x = [0.3, -0.2, 0.9, 1.4, -0.5];
        let y = [0.1, 0.2, 0.3, 0.4, 0.5];
        let p_xy = paired_ttest(&x, &y).unwrap();
        let p_yx = paired_ttest(&y, &x).unwrap();
        assert_relative_eq!(p_xy + p_yx, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn logmse_perfect_estimator_hits_floor() {
        let mut config = StudyConfig::new(4);
        config.reps = 1;
        config.dims = vec![2];
        config.theta_grid_size = 5;
        config.search_iters = 50;
        let perfect: &crate::tuner::ThetaEstimator<'_> = &|_x, _n, _d, _y, tt| Ok(tt);
        let tables = logmse_study_with(&config, Some(perfect)).unwrap();
        for row in &tables[0].raw {
            for &v in row {
                assert_relative_eq!(v, LOGMSE_FLOOR.ln(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn logmse_study_is_reproducible() {
        let mut config = StudyConfig::new(9);
        config.reps = 3;
        config.dims = vec![2];
        config.theta_grid_size = 4;
        config.search_iters = 100;
        let a = logmse_study(&config).unwrap();
        let b = logmse_study(&config).unwrap();
        assert_eq!(a[0].raw, b[0].raw);
        assert_eq!(a[0].standardized, b[0].standardized);
    }

    #[test]
    fn logmse_table_shape_and_headers() {
        let mut config = StudyConfig::new(10);
        config.reps = 2;
        config.dims = vec![2];
        config.theta_grid_size = 4;
        config.search_iters = 100;
        let tables = logmse_study(&config).unwrap();
        let t = &tables[0];
        assert_eq!(t.n, 8);
        assert_eq!(t.methods.len(), 7);
        assert_eq!(t.raw.len(), 7);
        assert_eq!(t.raw[0].len(), 4);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().next().unwrap().contains("raw_betadist"));
        assert!(text.lines().next().unwrap().contains("std_minphi2"));
    }

    #[test]
    fn alm_single_rep_quantile_equals_mean() {
        let mut config = StudyConfig::new(11);
        config.reps = 1;
        config.n_init = 6;
        config.total_n = 8;
        config.test_grid_per_dim = 15;
        config.search_iters = 200;
        let table = alm_study(&config).unwrap();
        assert_eq!(table.steps.len(), 3);
        for mi in 0..table.methods.len() {
            for si in 0..table.steps.len() {
                assert_relative_eq!(table.mean[mi][si], table.q90[mi][si], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn bo_study_smoke_and_pval_complement() {
        let mut config = StudyConfig::new(12);
        config.reps = 4;
        config.n_init = 6;
        config.checkpoints = vec![9];
        config.search_iters = 200;
        let table = bo_study(&config).unwrap();
        assert_eq!(table.methods.len(), 5);
        for i in 0..5 {
            for j in 0..5 {
                if i == j {
                    assert!(table.pvals[0][i][j].is_nan());
                } else {
                    let sum = table.pvals[0][i][j] + table.pvals[0][j][i];
                    assert_relative_eq!(sum, 1.0, epsilon = 1e-9);
                }
            }
        }
        let mut buf = Vec::new();
        table.write_pvals_csv(&mut buf, 9).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.contains("NA"));
    }

    #[test]
    fn csv_filename_contract() {
        assert_eq!(csv_filename("logmse", 2, 8), "study-logmse-d2-n8.csv");
    }
}
