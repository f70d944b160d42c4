//! Pairwise-distance extraction, parametric distance targets on [0, sqrt(d)],
//! and the one-sample Kolmogorov-Smirnov distance (KSD) between a design's
//! empirical distance distribution and a target.
//!
//! The KS statistic is evaluated exactly at the ECDF step points (both
//! one-sided gaps at every sorted distance), not on a grid. Searches that
//! move one design point at a time use [`TrackedDistances`], which replaces
//! the n-1 affected distances by a sorted merge instead of recomputing all
//! n(n-1)/2 of them; the full recompute serves as the test oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{beta_cf, betainc, ln_beta};

/// Sorted multiset of the pairwise Euclidean distances of a design.
///
/// Ties are kept as repeated entries; the ECDF jumps by multiplicity/K at
/// a tied value.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSet {
    sorted: Vec<f64>,
}

impl DistanceSet {
    /// Builds a set from raw distances (sorts them).
    pub fn new(mut distances: Vec<f64>) -> Self {
        distances.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        DistanceSet { sorted: distances }
    }

    /// The distances, ascending.
    pub fn distances(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Unique distances with their multiplicities J_k.
    pub fn multiplicities(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &v in &self.sorted {
            match out.last_mut() {
                Some((u, m)) if *u == v => *m += 1,
                _ => out.push((v, 1)),
            }
        }
        out
    }

    /// Smallest pairwise distance.
    pub fn min_distance(&self) -> f64 {
        self.sorted.first().copied().unwrap_or(f64::INFINITY)
    }
}

/// Distance criterion phi_p = [sum_k J_k d_k^(-p)]^(1/p).
///
/// Any zero distance (coincident points) makes the criterion infinite.
pub fn phi_p(dist: &DistanceSet, p: f64) -> f64 {
    let sum: f64 = dist.distances().iter().map(|&d| d.powf(-p)).sum();
    sum.powf(1.0 / p)
}

/// Parametric family of a [`DistanceTarget`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum TargetFamily {
    Uniform,
    Beta { alpha: f64, beta: f64 },
}

/// A reference distance distribution scaled to the support [0, sqrt(d)].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceTarget {
    #[serde(flatten)]
    pub family: TargetFamily,
    /// Upper end of the support, sqrt(d) for designs in the unit hypercube.
    pub scale: f64,
}

impl DistanceTarget {
    /// Uniform target on [0, sqrt(d)].
    pub fn uniform(d: usize) -> Self {
        DistanceTarget {
            family: TargetFamily::Uniform,
            scale: (d as f64).sqrt(),
        }
    }

    /// Beta(alpha, beta) target scaled to [0, sqrt(d)]. Shapes below 1
    /// (non-unimodal densities) are rejected.
    pub fn beta(alpha: f64, beta: f64, d: usize) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) || alpha < 1.0 || beta < 1.0 {
            return Err(Error::invalid(format!(
                "beta target shapes must be finite and >= 1, got ({alpha}, {beta})"
            )));
        }
        Ok(DistanceTarget {
            family: TargetFamily::Beta { alpha, beta },
            scale: (d as f64).sqrt(),
        })
    }

    /// CDF of the target at a distance value; 0 below the support and 1
    /// above it.
    pub fn cdf(&self, x: f64) -> f64 {
        let u = (x / self.scale).clamp(0.0, 1.0);
        match self.family {
            TargetFamily::Uniform => u,
            TargetFamily::Beta { alpha, beta } => betainc(alpha, beta, u),
        }
    }

    /// CDF with the log-normalizer precomputed; hot path for searches.
    fn cdf_cached(&self, ln_b: f64, x: f64) -> f64 {
        let u = (x / self.scale).clamp(0.0, 1.0);
        match self.family {
            TargetFamily::Uniform => u,
            TargetFamily::Beta { alpha, beta } => betainc_cached(alpha, beta, ln_b, u),
        }
    }

    fn ln_normalizer(&self) -> f64 {
        match self.family {
            TargetFamily::Uniform => 0.0,
            TargetFamily::Beta { alpha, beta } => ln_beta(alpha, beta),
        }
    }
}

/// `betainc` with ln B(a, b) supplied by the caller.
fn betainc_cached(a: f64, b: f64, ln_b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let bt = (a * x.ln() + b * (1.0 - x).ln() - ln_b).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        bt * beta_cf(a, b, x) / a
    } else {
        1.0 - bt * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Euclidean distance between two coordinate slices.
#[inline]
pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let t = x - y;
        s += t * t;
    }
    s.sqrt()
}

/// All n(n-1)/2 pairwise Euclidean distances of a row-major n x d point set,
/// sorted ascending.
pub fn pairwise_distances(x: &[f64], n: usize, d: usize) -> Result<DistanceSet> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 points for pairwise distances, got {n}"
        )));
    }
    if x.len() != n * d {
        return Err(Error::invalid(format!(
            "point buffer has {} entries, expected {}",
            x.len(),
            n * d
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("nonfinite coordinate in point set"));
    }
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(euclid(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]));
        }
    }
    Ok(DistanceSet::new(out))
}

/// One-sample KS statistic between the empirical CDF of `dist` and the
/// target: sup over x of |F_hat(x) - F(x)|, evaluated exactly at the step
/// points (both one-sided gaps).
pub fn ksd(dist: &DistanceSet, target: &DistanceTarget) -> f64 {
    ksd_with_cdf(dist, |x| {
        let v = target.cdf(x);
        (v, v)
    })
}

/// KS statistic against an arbitrary target CDF given as both one-sided
/// limits `x -> (F(x-), F(x))`. Continuous targets return the same value
/// twice; a step target (e.g. an ECDF) supplies its own left limits.
pub fn ksd_with_cdf(dist: &DistanceSet, cdf: impl Fn(f64) -> (f64, f64)) -> f64 {
    let xs = dist.distances();
    assert!(!xs.is_empty(), "KSD of an empty distance set");
    let k = xs.len() as f64;
    let mut sup = 0.0_f64;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i + 1;
        while j < xs.len() && xs[j] == xs[i] {
            j += 1;
        }
        let (f_left, f_right) = cdf(xs[i]);
        let below = i as f64 / k;
        let at = j as f64 / k;
        sup = sup.max((f_left - below).abs()).max((at - f_right).abs());
        i = j;
    }
    sup
}

/// Sorted pairwise distances of a design with cached target-CDF values,
/// supporting O(K + n log n) single-point updates.
#[derive(Debug, Clone)]
pub struct TrackedDistances {
    target: DistanceTarget,
    ln_b: f64,
    dists: Vec<f64>,
    cdfs: Vec<f64>,
    scratch_d: Vec<f64>,
    scratch_c: Vec<f64>,
}

impl TrackedDistances {
    pub fn new(x: &[f64], n: usize, d: usize, target: &DistanceTarget) -> Result<Self> {
        let set = pairwise_distances(x, n, d)?;
        let ln_b = target.ln_normalizer();
        let cdfs = set
            .distances()
            .iter()
            .map(|&v| target.cdf_cached(ln_b, v))
            .collect();
        Ok(TrackedDistances {
            target: *target,
            ln_b,
            dists: set.sorted,
            cdfs,
            scratch_d: Vec::new(),
            scratch_c: Vec::new(),
        })
    }

    /// Current KS statistic against the tracked target.
    pub fn ksd(&self) -> f64 {
        ksd_of_sorted(&self.dists, &self.cdfs)
    }

    /// Stages the multiset update that removes `removed` and inserts
    /// `added`, and returns the KS statistic of the staged state. Call
    /// [`TrackedDistances::commit`] to adopt it; otherwise the staged
    /// buffers are simply overwritten by the next preview.
    ///
    /// `removed` must contain values currently present (bit-exact, as
    /// produced by the same computation that filled the tracker). Both
    /// inputs are sorted in place.
    pub fn preview_swap(&mut self, removed: &mut [f64], added: &mut [f64]) -> f64 {
        removed.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        added.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());

        self.scratch_d.clear();
        self.scratch_c.clear();
        self.scratch_d.reserve(self.dists.len());
        self.scratch_c.reserve(self.dists.len());

        let mut rm = 0;
        let mut ad = 0;
        for (idx, &v) in self.dists.iter().enumerate() {
            // flush pending additions that sort before v
            while ad < added.len() && added[ad] < v {
                let a = added[ad];
                self.scratch_d.push(a);
                self.scratch_c.push(self.target.cdf_cached(self.ln_b, a));
                ad += 1;
            }
            if rm < removed.len() && removed[rm] == v {
                rm += 1; // drop this entry
            } else {
                self.scratch_d.push(v);
                self.scratch_c.push(self.cdfs[idx]);
            }
        }
        while ad < added.len() {
            let a = added[ad];
            self.scratch_d.push(a);
            self.scratch_c.push(self.target.cdf_cached(self.ln_b, a));
            ad += 1;
        }
        debug_assert_eq!(rm, removed.len(), "stale distance passed to preview_swap");

        ksd_of_sorted(&self.scratch_d, &self.scratch_c)
    }

    /// Adopts the state staged by the last [`TrackedDistances::preview_swap`].
    pub fn commit(&mut self) {
        std::mem::swap(&mut self.dists, &mut self.scratch_d);
        std::mem::swap(&mut self.cdfs, &mut self.scratch_c);
    }

    /// Replaces entries and commits in one step.
    pub fn apply_swap(&mut self, removed: &mut [f64], added: &mut [f64]) -> f64 {
        let k = self.preview_swap(removed, added);
        self.commit();
        k
    }

    pub fn distance_set(&self) -> DistanceSet {
        DistanceSet {
            sorted: self.dists.clone(),
        }
    }
}

/// KS statistic from parallel sorted distances / target-CDF values.
fn ksd_of_sorted(dists: &[f64], cdfs: &[f64]) -> f64 {
    let k = dists.len() as f64;
    let mut sup = 0.0_f64;
    let mut i = 0;
    while i < dists.len() {
        let mut j = i + 1;
        while j < dists.len() && dists[j] == dists[i] {
            j += 1;
        }
        let f = cdfs[i];
        sup = sup.max((f - i as f64 / k).abs()).max((j as f64 / k - f).abs());
        i = j;
    }
    sup
}

/// Spearman rank correlation; average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let rx = ranks(x);
    let ry = ranks(y);
    pearson(&rx, &ry)
}

/// Kendall tau-a rank correlation.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += ((x[j] - x[i]).signum() * (y[j] - y[i]).signum()) as f64;
        }
    }
    s / (n * (n - 1) / 2) as f64
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && v[idx[j]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j - 1) as f64 / 2.0 + 1.0;
        for &k in &idx[i..j] {
            r[k] = avg;
        }
        i = j;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn uniform_points(n: usize, d: usize, seed: u64) -> Vec<f64> {
        let mut rng = crate::rng::rng_from_seed(seed);
        (0..n * d).map(|_| rng.random::<f64>()).collect()
    }

    #[test]
    fn single_pair_distance() {
        let x = vec![0.0, 0.0, 1.0, 1.0];
        let set = pairwise_distances(&x, 2, 2).unwrap();
        assert_eq!(set.len(), 1);
        assert_relative_eq!(set.distances()[0], 2.0_f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn right_triangle_distances() {
        let x = vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let set = pairwise_distances(&x, 3, 2).unwrap();
        let expect = [1.0, 1.0, 2.0_f64.sqrt()];
        for (a, b) in set.distances().iter().zip(expect.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn five_points_give_ten_distances() {
        let x = uniform_points(5, 3, 1);
        assert_eq!(pairwise_distances(&x, 5, 3).unwrap().len(), 10);
    }

    #[test]
    fn too_few_points_is_invalid() {
        let x = vec![0.3];
        assert!(matches!(
            pairwise_distances(&x, 1, 1),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn permutation_invariance() {
        let x = uniform_points(7, 2, 3);
        let set = pairwise_distances(&x, 7, 2).unwrap();
        // reverse the row order
        let mut rev = Vec::with_capacity(x.len());
        for i in (0..7).rev() {
            rev.extend_from_slice(&x[i * 2..(i + 1) * 2]);
        }
        let set_rev = pairwise_distances(&rev, 7, 2).unwrap();
        assert_eq!(set, set_rev);
    }

    #[test]
    fn uniform_cdf_midpoint() {
        let t = DistanceTarget::uniform(2);
        assert_relative_eq!(t.cdf(2.0_f64.sqrt() / 2.0), 0.5, epsilon = 1e-15);
        assert_eq!(t.cdf(-0.1), 0.0);
        assert_eq!(t.cdf(10.0), 1.0);
    }

    #[test]
    fn beta_1_1_is_uniform() {
        let b = DistanceTarget::beta(1.0, 1.0, 3).unwrap();
        let u = DistanceTarget::uniform(3);
        for i in 0..=1000 {
            let x = 3.0_f64.sqrt() * i as f64 / 1000.0;
            assert!((b.cdf(x) - u.cdf(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_cdf_matches_unscaled_betainc() {
        let t = DistanceTarget::beta(2.5, 4.0, 2).unwrap();
        let x = 0.5 * 2.0_f64.sqrt();
        assert_relative_eq!(t.cdf(x), betainc(2.5, 4.0, 0.5), epsilon = 1e-14);
    }

    #[test]
    fn invalid_beta_shapes_rejected() {
        assert!(DistanceTarget::beta(0.5, 2.0, 2).is_err());
        assert!(DistanceTarget::beta(2.0, f64::NAN, 2).is_err());
    }

    #[test]
    fn ksd_single_point_against_uniform() {
        let d = 2;
        let set = DistanceSet::new(vec![(d as f64).sqrt() / 2.0]);
        let t = DistanceTarget::uniform(d);
        assert_relative_eq!(ksd(&set, &t), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn ksd_at_uniform_quantiles() {
        // distances at sqrt(d) * (2i-1)/(2K), K = 5: both gaps are 0.1
        let d = 3;
        let scale = (d as f64).sqrt();
        let k = 5;
        let xs: Vec<f64> = (1..=k)
            .map(|i| scale * (2.0 * i as f64 - 1.0) / (2.0 * k as f64))
            .collect();
        let set = DistanceSet::new(xs);
        let t = DistanceTarget::uniform(d);
        assert_relative_eq!(ksd(&set, &t), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn ksd_self_match_is_zero() {
        let x = uniform_points(9, 2, 11);
        let set = pairwise_distances(&x, 9, 2).unwrap();
        let sorted = set.distances().to_vec();
        let k = sorted.len() as f64;
        let stat = ksd_with_cdf(&set, |v| {
            let below = sorted.partition_point(|&u| u < v) as f64 / k;
            let at = sorted.partition_point(|&u| u <= v) as f64 / k;
            (below, at)
        });
        assert_eq!(stat, 0.0);
    }

    /// Brute-force oracle: |ECDF - F| on a dense grid plus the exact step
    /// evaluation points.
    fn ksd_grid_oracle(set: &DistanceSet, target: &DistanceTarget, grid: usize) -> f64 {
        let xs = set.distances();
        let k = xs.len() as f64;
        let ecdf = |v: f64| xs.partition_point(|&u| u <= v) as f64 / k;
        let mut sup = 0.0_f64;
        for i in 0..=grid {
            let v = target.scale * i as f64 / grid as f64;
            sup = sup.max((ecdf(v) - target.cdf(v)).abs());
        }
        // a grid alone misses the left limits; sample just below each step
        for &v in xs {
            let eps = (v.abs() * 1e-12).max(1e-300);
            sup = sup.max((ecdf(v - eps) - target.cdf(v - eps)).abs());
            sup = sup.max((ecdf(v) - target.cdf(v)).abs());
        }
        sup
    }

    #[test]
    fn ksd_matches_grid_oracle() {
        let mut rng = crate::rng::rng_from_seed(5);
        for rep in 0..100 {
            let n = rng.random_range(2..=12);
            let d = rng.random_range(1..=3);
            let x = uniform_points(n, d, 100 + rep);
            let set = pairwise_distances(&x, n, d).unwrap();
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
            let fast = ksd(&set, &target);
            let slow = ksd_grid_oracle(&set, &target, 10_000);
            assert!(
                (fast - slow).abs() < 1e-9,
                "rep {rep}: fast {fast} vs oracle {slow}"
            );
            assert!((0.0..=1.0).contains(&fast));
        }
    }

    #[test]
    fn tracked_swap_matches_full_recompute() {
        let n = 10;
        let d = 3;
        let mut x = uniform_points(n, d, 21);
        let target = DistanceTarget::beta(2.5, 4.0, d).unwrap();
        let mut tracked = TrackedDistances::new(&x, n, d, &target).unwrap();
        let mut rng = crate::rng::rng_from_seed(22);
        for _ in 0..200 {
            let i = rng.random_range(0..n);
            let mut removed: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| euclid(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]))
                .collect();
            for k in 0..d {
                x[i * d + k] = rng.random::<f64>();
            }
            let mut added: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| euclid(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]))
                .collect();
            tracked.apply_swap(&mut removed, &mut added);

            let fresh = TrackedDistances::new(&x, n, d, &target).unwrap();
            assert_eq!(tracked.dists, fresh.dists);
            assert_relative_eq!(tracked.ksd(), fresh.ksd(), epsilon = 1e-12);
        }
    }

    #[test]
    fn phi_p_hand_values() {
        let one = DistanceSet::new(vec![0.5]);
        assert_relative_eq!(phi_p(&one, 1.0), 2.0, epsilon = 1e-15);
        assert_relative_eq!(phi_p(&one, 7.0), 2.0, epsilon = 1e-12);

        let two = DistanceSet::new(vec![1.0, 1.0]);
        assert_relative_eq!(phi_p(&two, 2.0), 2.0_f64.sqrt(), epsilon = 1e-15);

        // p -> infinity limit: phi_p -> 1/min distance
        let mix = DistanceSet::new(vec![0.5, 1.0]);
        assert_relative_eq!(phi_p(&mix, 64.0), 2.0, max_relative = 0.01);

        let dup = DistanceSet::new(vec![0.0, 1.0]);
        assert!(phi_p(&dup, 2.0).is_infinite());
    }

    #[test]
    fn target_cdf_nondecreasing() {
        let mut rng = crate::rng::rng_from_seed(77);
        for _ in 0..20 {
            let t = DistanceTarget::beta(
                1.0 + 9.0 * rng.random::<f64>(),
                1.0 + 9.0 * rng.random::<f64>(),
                4,
            )
            .unwrap();
            let mut xs: Vec<f64> = (0..200).map(|_| rng.random::<f64>() * 2.5).collect();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for w in xs.windows(2) {
                assert!(t.cdf(w[1]) >= t.cdf(w[0]));
            }
        }
    }

    #[test]
    fn rank_correlations() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [1.0, 4.0, 9.0, 16.0, 25.0];
        assert_relative_eq!(spearman(&x, &y), 1.0, epsilon = 1e-12);
        assert_relative_eq!(kendall_tau(&x, &y), 1.0, epsilon = 1e-12);
        let z = [5.0, 4.0, 3.0, 2.0, 1.0];
        assert_relative_eq!(spearman(&x, &z), -1.0, epsilon = 1e-12);
    }
}
