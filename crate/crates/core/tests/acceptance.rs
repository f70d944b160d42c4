//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `cargo test --test acceptance -- --nocapture`
//! to see them all). Heavy study tables are computed once and shared.

use std::sync::LazyLock;

use rand::Rng;
use rand_distr::StandardNormal;

use distdesign::bench::{alm_study, bo_study, logmse_study, LogMseTable, StudyConfig};
use distdesign::design::{
    dist_targeted_design_traced, lhsbeta_design, lhsbeta_design_traced, one_dim_uniform,
    random_design,
};
use distdesign::dist::{pairwise_distances, spearman, DistanceTarget, TrackedDistances};
use distdesign::gp::{concentrated_loglik, cov_matrix, simulate_mvn, GpModel, Kernel};
use distdesign::rng::{child_seed, rng_from_seed, stream};
use distdesign::tuner::{catalog_lookup, expected_improvement, tune_shapes_with};
use distdesign::util::{linspace, logspace, mean};

fn report(criterion: usize, pass: bool, detail: &str) {
    println!(
        "criterion {criterion:2}: {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

/// Criteria 4 and 5 share one 200-rep logMSE study (d=2, n=8).
static LOGMSE: LazyLock<LogMseTable> = LazyLock::new(|| {
    let mut config = StudyConfig::new(42);
    config.reps = 200;
    config.dims = vec![2];
    config.search_iters = 5_000;
    logmse_study(&config).unwrap().remove(0)
});

#[test]
fn criterion_01_ks_oracle_equivalence() {
    let mut rng = rng_from_seed(101);
    let mut worst = 0.0_f64;
    for rep in 0..100u64 {
        let n = rng.random_range(4..=12);
        let d = rng.random_range(1..=3);
        let design = random_design(n, d, 7_000 + rep).unwrap();
        let target = if rep % 2 == 0 {
            DistanceTarget::uniform(d)
        } else {
            DistanceTarget::beta(
                1.0 + 9.0 * rng.random::<f64>(),
                1.0 + 9.0 * rng.random::<f64>(),
                d,
            )
            .unwrap()
        };

        // incremental path: replay random single-point moves through the
        // tracker, then compare its statistic against a dense-grid oracle
        let mut x = design.coords().to_vec();
        let mut tracker = TrackedDistances::new(&x, n, d, &target).unwrap();
        for _ in 0..50 {
            let i = rng.random_range(0..n);
            let mut removed: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| dist_rows(&x, d, i, j))
                .collect();
            for k in 0..d {
                x[i * d + k] = rng.random::<f64>();
            }
            let mut added: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| dist_rows(&x, d, i, j))
                .collect();
            tracker.apply_swap(&mut removed, &mut added);
        }
        let incremental = tracker.ksd();

        let set = pairwise_distances(&x, n, d).unwrap();
        let xs = set.distances();
        let k = xs.len() as f64;
        let ecdf = |v: f64| xs.partition_point(|&u| u <= v) as f64 / k;
        let mut oracle = 0.0_f64;
        for g in 0..=10_000 {
            let v = target.scale * g as f64 / 10_000.0;
            oracle = oracle.max((ecdf(v) - target.cdf(v)).abs());
        }
        for &v in xs {
            let eps = (v.abs() * 1e-12).max(1e-300);
            oracle = oracle.max((ecdf(v - eps) - target.cdf(v - eps)).abs());
            oracle = oracle.max((ecdf(v) - target.cdf(v)).abs());
        }
        worst = worst.max((incremental - oracle).abs());
    }
    report(
        1,
        worst < 1e-9,
        &format!("incremental KSD vs dense-grid oracle, max abs diff {worst:.2e} over 100 designs"),
    );
}

fn dist_rows(x: &[f64], d: usize, i: usize, j: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..d {
        let t = x[i * d + k] - x[j * d + k];
        s += t * t;
    }
    s.sqrt()
}

#[test]
fn criterion_02_greedy_monotonicity() {
    let s = 10_000;
    let mut checked = 0;
    for d in [2usize, 3] {
        let target = DistanceTarget::beta(2.0, 4.0, d).unwrap();
        for seed in 0..25u64 {
            let a = dist_targeted_design_traced(16, d, &target, s, 900 + seed).unwrap();
            assert!(
                a.trace.windows(2).all(|w| w[1] <= w[0] + 1e-15),
                "betadist trace rose at d={d}, seed={seed}"
            );
            let b = lhsbeta_design_traced(16, d, &target, s, 950 + seed).unwrap();
            assert!(
                b.trace.windows(2).all(|w| w[1] <= w[0] + 1e-15),
                "lhsbeta trace rose at d={d}, seed={seed}"
            );
            checked += 2;
        }
    }
    report(
        2,
        checked == 100,
        &format!("{checked} KSD traces nonincreasing (n=16, d in {{2,3}}, S=1e4)"),
    );
}

#[test]
fn criterion_03_lhs_preservation() {
    let target = DistanceTarget::beta(2.5, 5.0, 3).unwrap();
    let mut ok = 0;
    for seed in 0..100u64 {
        let des = lhsbeta_design(16, 3, &target, 2_000, 1_200 + seed).unwrap();
        if one_dim_uniform(&des) {
            ok += 1;
        }
    }
    report(
        3,
        ok == 100,
        &format!("{ok}/100 hybrid designs keep exact one-point-per-bin marginals"),
    );
}

#[test]
fn criterion_04_logmse_trend() {
    let table = &*LOGMSE;
    let trends = table.raw_trends();
    let min_rho = trends.iter().cloned().fold(f64::INFINITY, f64::min);
    let detail: Vec<String> = table
        .methods
        .iter()
        .zip(&trends)
        .map(|(m, r)| format!("{m}={r:.2}"))
        .collect();
    report(
        4,
        min_rho > 0.5,
        &format!("raw logMSE Spearman vs theta: {}", detail.join(" ")),
    );
}

#[test]
fn criterion_05_logmse_ordering() {
    let table = &*LOGMSE;
    let p_beta = table.compare_standardized("betadist", "maximin").unwrap();
    let p_lhsbeta = table.compare_standardized("lhsbeta", "maximin").unwrap();
    report(
        5,
        p_beta < 0.05 && p_lhsbeta < 0.05,
        &format!("paired lower-tail p vs maximin: betadist {p_beta:.2e}, lhsbeta {p_lhsbeta:.2e}"),
    );
}

#[test]
fn criterion_06_ei_closed_form() {
    // analytic identity at mu = mu_min
    let mut analytic_ok = true;
    for &sigma in &[0.2, 1.0, 3.5] {
        let ei = expected_improvement(0.7, sigma, 0.7);
        let expect = sigma / (2.0 * std::f64::consts::PI).sqrt();
        if (ei - expect).abs() > 1e-12 * expect {
            analytic_ok = false;
        }
    }

    // Monte Carlo agreement on 20 random triples
    let mut rng = rng_from_seed(606);
    let mut worst_z = 0.0_f64;
    for _ in 0..20 {
        let mu = 4.0 * rng.random::<f64>() - 2.0;
        let sigma = 0.1 + 2.0 * rng.random::<f64>();
        let mu_min = 4.0 * rng.random::<f64>() - 2.0;
        let closed = expected_improvement(mu, sigma, mu_min);
        let n = 1_000_000usize;
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for _ in 0..n {
            let imp = (mu_min - (mu + sigma * rng.sample::<f64, _>(StandardNormal))).max(0.0);
            acc += imp;
            acc2 += imp * imp;
        }
        let est = acc / n as f64;
        let se = ((acc2 / n as f64 - est * est) / n as f64).sqrt().max(1e-12);
        worst_z = worst_z.max((closed - est).abs() / se);
    }
    report(
        6,
        analytic_ok && worst_z <= 3.0,
        &format!("sigma/sqrt(2pi) identity exact; worst MC z-score {worst_z:.2} over 20 triples"),
    );
}

#[test]
fn criterion_07_shape_tuner_recovers_synthetic_optimum() {
    let criterion =
        |a: f64, b: f64, _s: u64| Ok(distdesign::tuner::quadratic_oracle(a, b));
    let mut hits = 0;
    for seed in 0..10u64 {
        let res = tune_shapes_with(&criterion, 50, 2_900 + seed).unwrap();
        if (res.best.0 - 3.0).abs() <= 0.5 && (res.best.1 - 6.5).abs() <= 0.5 {
            hits += 1;
        }
    }
    report(
        7,
        hits >= 9,
        &format!("{hits}/10 seeded runs recover (3, 6.5) within +/-0.5"),
    );
}

#[test]
fn criterion_08_alm_study_orderings() {
    let mut config = StudyConfig::new(808);
    config.reps = 100;
    config.search_iters = 5_000;
    let table = alm_study(&config).unwrap();
    let last = table.steps.len() - 1;
    let mm = table.method_index("maximin").unwrap();
    let bd = table.method_index("betadist").unwrap();
    let lb = table.method_index("lhsbeta").unwrap();
    let mean_ok = table.mean[bd][last] < table.mean[mm][last]
        && table.mean[lb][last] < table.mean[mm][last];
    let q90_ok = table.q90[mm][last] > table.q90[bd][last];
    report(
        8,
        mean_ok && q90_ok,
        &format!(
            "RMSPE at n=64: mean betadist {:.4} / lhsbeta {:.4} vs maximin {:.4}; q90 betadist {:.4} vs maximin {:.4} ({} reps dropped)",
            table.mean[bd][last],
            table.mean[lb][last],
            table.mean[mm][last],
            table.q90[bd][last],
            table.q90[mm][last],
            table.dropped_reps,
        ),
    );
}

#[test]
fn criterion_09_bo_study_orderings() {
    let mut config = StudyConfig::new(909);
    config.reps = 200;
    config.checkpoints = vec![25];
    config.search_iters = 5_000;
    let table = bo_study(&config).unwrap();
    let p_lhsbeta = table.pval(25, "lhsbeta", "maximin").unwrap();
    let p_betadist = table.pval(25, "betadist", "maximin").unwrap();
    report(
        9,
        p_lhsbeta < 0.05 && p_betadist < 0.05,
        &format!(
            "paired lower-tail p vs maximin at n=25: lhsbeta {p_lhsbeta:.3}, betadist {p_betadist:.3} ({} reps dropped)",
            table.dropped_reps
        ),
    );
}

#[test]
fn criterion_10_gp_core_identities() {
    // interpolation
    let n = 12;
    let d = 2;
    let x: Vec<f64> = {
        let mut rng = rng_from_seed(1_010);
        (0..n * d).map(|_| rng.random::<f64>()).collect()
    };
    let kernel = Kernel::interpolating(0.4).unwrap();
    let y = simulate_mvn(&x, n, d, &kernel, &mut rng_from_seed(1_011)).unwrap();
    let model = GpModel::fit(&x, n, d, &y, kernel).unwrap();
    let (mean_hat, var_hat) = model.predict(&x, n).unwrap();
    let interp_ok = mean_hat
        .iter()
        .zip(&y)
        .all(|(m, t)| (m - t).abs() < 1e-8)
        && var_hat.iter().all(|&v| v < 1e-8);

    // profile-likelihood argmax invariance under response scaling
    let grid = logspace(0.01, 2.0, 30);
    let lls: Vec<f64> = grid
        .iter()
        .map(|&t| concentrated_loglik(&x, n, d, &y, t, 0.0).unwrap())
        .collect();
    let y_scaled: Vec<f64> = y.iter().map(|v| 11.3 * v).collect();
    let lls_scaled: Vec<f64> = grid
        .iter()
        .map(|&t| concentrated_loglik(&x, n, d, &y_scaled, t, 0.0).unwrap())
        .collect();
    let argmax = |v: &[f64]| {
        v.iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0
    };
    let shift = lls_scaled[0] - lls[0];
    let scale_ok = argmax(&lls) == argmax(&lls_scaled)
        && lls
            .iter()
            .zip(&lls_scaled)
            .all(|(a, b)| ((b - a) - shift).abs() < 1e-7);

    // MVN sample covariance, n <= 4, 1e5 draws, 5% relative
    let xs = [0.05, 0.4, 0.75, 0.95];
    let k4 = Kernel::interpolating(0.5).unwrap();
    let km = cov_matrix(&xs, 4, 1, &k4).unwrap();
    let mut acc = [[0.0_f64; 4]; 4];
    let mut rng = rng_from_seed(1_012);
    let reps = 100_000;
    for _ in 0..reps {
        let draw = simulate_mvn(&xs, 4, 1, &k4, &mut rng).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                acc[i][j] += draw[i] * draw[j];
            }
        }
    }
    let mut cov_ok = true;
    for i in 0..4 {
        for j in 0..4 {
            let emp = acc[i][j] / reps as f64;
            if (emp - km[(i, j)]).abs() / km[(i, j)].abs() > 0.05 {
                cov_ok = false;
            }
        }
    }

    report(
        10,
        interp_ok && scale_ok && cov_ok,
        &format!("interpolation {interp_ok}, loglik scale invariance {scale_ok}, MVN covariance {cov_ok}"),
    );
}

#[test]
fn criterion_11_catalog_fidelity() {
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
    let mut ok = true;
    for ((n, d), (a, b)) in expect {
        let e = catalog_lookup(n, d);
        if e.extrapolated || e.alpha != a || e.beta != b {
            ok = false;
        }
    }
    report(11, ok, "all nine tuned-shape entries exact");
}

/// Companion check at the criterion-8 scale: a betadist-seeded active
/// learning run improves its prediction error from n=8 to n=64 in at
/// least 95 of 100 seeded repetitions.
#[test]
fn alm_betadist_improvement_rate() {
    use distdesign::bench::Metric;
    let mut config = StudyConfig::new(808);
    config.reps = 100;
    config.search_iters = 5_000;
    config.methods = vec![distdesign::design::MethodSpec::Betadist {
        alpha: 2.0,
        beta: 5.0,
        s: 5_000,
    }];
    let table = alm_study(&config).unwrap();
    let mut improved = 0;
    let mut total = 0;
    for rec in &table.records {
        if let Metric::RmspeTrace(trace) = &rec.metric {
            total += 1;
            if trace.last().unwrap() < trace.first().unwrap() {
                improved += 1;
            }
        }
    }
    println!("betadist ALM improvement rate: {improved}/{total}");
    assert!(
        improved * 100 >= total * 95,
        "only {improved}/{total} betadist runs improved RMSPE from n=8 to n=64"
    );
}

/// The logMSE study honors the n = 2^(d+1) size rule.
#[test]
fn logmse_size_rule() {
    let mut config = StudyConfig::new(3);
    config.reps = 1;
    config.dims = vec![2, 3];
    config.theta_grid_size = 3;
    config.search_iters = 50;
    let tables = logmse_study(&config).unwrap();
    assert_eq!(tables[0].n, 8);
    assert_eq!(tables[1].n, 16);
    // theta grid spans 0.1 to sqrt(d)
    assert_eq!(tables[1].theta_grid[0], 0.1);
    let hi = tables[1].theta_grid.last().unwrap();
    assert!((hi - 3.0_f64.sqrt()).abs() < 1e-12);
    let expected = linspace(0.1, 3.0_f64.sqrt(), 3);
    assert_eq!(tables[1].theta_grid, expected);
}

/// Studies reproduce bit-identically from the master seed, including
/// their paired stream structure.
#[test]
fn study_reproducibility() {
    let mut config = StudyConfig::new(77);
    config.reps = 3;
    config.dims = vec![2];
    config.theta_grid_size = 4;
    config.search_iters = 200;
    let a = logmse_study(&config).unwrap();
    let b = logmse_study(&config).unwrap();
    assert_eq!(a[0].raw, b[0].raw);

    // pairing keys mark shared randomness
    let seed_a = child_seed(77, &[1, 2]);
    let seed_b = child_seed(77, &[1, 2]);
    assert_eq!(seed_a, seed_b);
    let mut s1 = stream(77, &[9]);
    let mut s2 = stream(77, &[9]);
    assert_eq!(s1.random::<u64>(), s2.random::<u64>());
}

/// Sanity link between the two halves of criterion 5's machinery: the
/// pooled standardization leaves per-theta method values mean-centered
/// near zero on average.
#[test]
fn logmse_standardization_is_centered() {
    let table = &*LOGMSE;
    let overall: f64 = table
        .standardized
        .iter()
        .map(|row| mean(row))
        .sum::<f64>()
        / table.methods.len() as f64;
    assert!(
        overall.abs() < 1.0,
        "pooled standardized values drifted: {overall}"
    );
    // sanity: the target spread floor respected
    assert!(table.sigma.iter().all(|&s| s >= 1e-6));
    // final ordering context for criterion 5
    let means: Vec<(String, f64)> = table
        .methods
        .iter()
        .cloned()
        .zip(table.standardized.iter().map(|row| mean(row)))
        .collect();
    println!("standardized means: {means:?}");
    let grid = &table.theta_grid;
    assert!(spearman(grid, &table.mu) > 0.0, "detrend mean should rise");
}
