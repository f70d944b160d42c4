//! Design constructors: random, Latin hypercube, maximin and phi_p swap
//! searches, distance-targeted stochastic search, and the hybrid that keeps
//! Latin-hypercube marginals while matching a distance target.
//!
//! All generators produce coordinates in the unit hypercube and are
//! deterministic given (parameters, seed). The greedy searches accept a
//! proposal only on strict improvement, so objective traces are monotone.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{euclid, pairwise_distances, DistanceSet, DistanceTarget, TrackedDistances};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Tag identifying how a design was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignMethod {
    Random,
    Lhs,
    Maximin,
    Phip,
    Unifdist,
    Betadist,
    Lhsbeta,
    /// Loaded from a coordinate file; construction parameters unknown.
    External,
}

impl std::fmt::Display for DesignMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DesignMethod::Random => "random",
            DesignMethod::Lhs => "lhs",
            DesignMethod::Maximin => "maximin",
            DesignMethod::Phip => "phip",
            DesignMethod::Unifdist => "unifdist",
            DesignMethod::Betadist => "betadist",
            DesignMethod::Lhsbeta => "lhsbeta",
            DesignMethod::External => "external",
        };
        f.write_str(s)
    }
}

/// Everything needed to regenerate a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub method: DesignMethod,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iterations: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target: Option<DistanceTarget>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<f64>,
}

impl Provenance {
    fn basic(method: DesignMethod, n: usize, d: usize, seed: u64) -> Self {
        Provenance {
            method,
            n,
            d,
            seed,
            iterations: None,
            target: None,
            p: None,
        }
    }
}

/// An n x d point set in the unit hypercube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DesignJson", into = "DesignJson")]
pub struct Design {
    n: usize,
    d: usize,
    /// Row-major coordinates.
    x: Vec<f64>,
    provenance: Provenance,
}

/// JSON wire form: points as nested rows.
#[derive(Serialize, Deserialize)]
struct DesignJson {
    n: usize,
    d: usize,
    provenance: Provenance,
    points: Vec<Vec<f64>>,
}

impl From<Design> for DesignJson {
    fn from(design: Design) -> Self {
        let points = (0..design.n)
            .map(|i| design.x[i * design.d..(i + 1) * design.d].to_vec())
            .collect();
        DesignJson {
            n: design.n,
            d: design.d,
            provenance: design.provenance,
            points,
        }
    }
}

impl TryFrom<DesignJson> for Design {
    type Error = Error;

    fn try_from(j: DesignJson) -> Result<Self> {
        if j.points.len() != j.n {
            return Err(Error::invalid(format!(
                "design declares n={} but has {} rows",
                j.n,
                j.points.len()
            )));
        }
        let mut x = Vec::with_capacity(j.n * j.d);
        for row in &j.points {
            if row.len() != j.d {
                return Err(Error::invalid("ragged design rows"));
            }
            x.extend_from_slice(row);
        }
        Design::from_coords(x, j.n, j.d, j.provenance)
    }
}

impl Design {
    /// Wraps raw coordinates, enforcing the unit-hypercube invariant.
    pub fn from_coords(x: Vec<f64>, n: usize, d: usize, provenance: Provenance) -> Result<Self> {
        if n < 1 || d < 1 {
            return Err(Error::invalid(format!("degenerate design shape {n} x {d}")));
        }
        if x.len() != n * d {
            return Err(Error::invalid(format!(
                "coordinate buffer has {} entries, expected {}",
                x.len(),
                n * d
            )));
        }
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(
                "design coordinates must lie in the unit hypercube",
            ));
        }
        Ok(Design {
            n,
            d,
            x,
            provenance,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn coords(&self) -> &[f64] {
        &self.x
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn distances(&self) -> Result<DistanceSet> {
        pairwise_distances(&self.x, self.n, self.d)
    }

    /// Writes the headerless CSV form: one row per point, 17-significant-
    /// digit decimals (enough to round-trip every f64 exactly).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Reads a headerless coordinate CSV. Parse failures report the
    /// offending 1-based line.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut x = Vec::new();
        let mut d = None;
        let mut n = 0;
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let vals: Vec<f64> = trimmed
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::parse(line_no, format!("bad number {tok:?}")))
                })
                .collect::<Result<_>>()?;
            match d {
                None => d = Some(vals.len()),
                Some(cols) if cols != vals.len() => {
                    return Err(Error::parse(
                        line_no,
                        format!("expected {cols} columns, found {}", vals.len()),
                    ));
                }
                _ => {}
            }
            if vals.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::parse(
                    line_no,
                    "coordinate outside the unit hypercube",
                ));
            }
            x.extend_from_slice(&vals);
            n += 1;
        }
        let d = d.ok_or_else(|| Error::parse(1, "empty design file"))?;
        Design::from_coords(x, n, d, Provenance::basic(DesignMethod::External, n, d, 0))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::numeric(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::parse(0, e.to_string()))
    }
}

/// Checks the Latin-hypercube one-dimensional-uniformity property: every
/// column has exactly one point per width-1/n bin.
pub fn one_dim_uniform(design: &Design) -> bool {
    let n = design.n;
    for k in 0..design.d {
        let mut counts = vec![0usize; n];
        for i in 0..n {
            let v = design.x[i * design.d + k];
            let bin = ((v * n as f64).floor() as usize).min(n - 1);
            counts[bin] += 1;
        }
        if counts.iter().any(|&c| c != 1) {
            return false;
        }
    }
    true
}

/// A design search result with its per-iteration objective trace
/// (initial value first, then one entry per proposal).
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub design: Design,
    pub trace: Vec<f64>,
}

fn uniform_coords<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Vec<f64> {
    (0..n * d).map(|_| rng.random::<f64>()).collect()
}

/// i.i.d. uniform design on the unit hypercube.
pub fn random_design(n: usize, d: usize, seed: u64) -> Result<Design> {
    if n < 1 || d < 1 {
        return Err(Error::invalid("design needs n >= 1 and d >= 1"));
    }
    let mut rng = rng_from_seed(seed);
    let x = uniform_coords(n, d, &mut rng);
    Design::from_coords(x, n, d, Provenance::basic(DesignMethod::Random, n, d, seed))
}

/// Latin squares: per-column bin permutations plus within-bin jitter.
#[derive(Debug, Clone)]
pub struct LatinSquares {
    n: usize,
    d: usize,
    /// Bin indices in 1..=n, column-major storage, each column a permutation.
    l: Vec<usize>,
    /// Within-bin uniform offsets in [0, 1), same layout as `l`.
    jitter: Vec<f64>,
}

impl LatinSquares {
    /// Samples fresh permutations and jitter.
    pub fn sample<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Self {
        let mut l = Vec::with_capacity(n * d);
        for _ in 0..d {
            let mut perm: Vec<usize> = (1..=n).collect();
            perm.shuffle(rng);
            l.extend_from_slice(&perm);
        }
        let jitter = (0..n * d).map(|_| rng.random::<f64>()).collect();
        LatinSquares { n, d, l, jitter }
    }

    #[inline]
    fn idx(&self, i: usize, k: usize) -> usize {
        k * self.n + i
    }

    /// Coordinate of point i in dimension k: (L - 1 + jitter) / n.
    #[inline]
    pub fn coord(&self, i: usize, k: usize) -> f64 {
        let at = self.idx(i, k);
        (self.l[at] as f64 - 1.0 + self.jitter[at]) / self.n as f64
    }

    /// Row-major coordinate buffer.
    pub fn coords(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.n * self.d);
        for i in 0..self.n {
            for k in 0..self.d {
                x.push(self.coord(i, k));
            }
        }
        x
    }

    /// Swaps the bins of points i and j in dimension k and re-jitters both
    /// points in every dimension (2d fresh uniforms).
    pub fn swap_and_rejitter<R: Rng + ?Sized>(&mut self, i: usize, j: usize, k: usize, rng: &mut R) {
        let (a, b) = (self.idx(i, k), self.idx(j, k));
        self.l.swap(a, b);
        for dim in 0..self.d {
            let at = self.idx(i, dim);
            self.jitter[at] = rng.random::<f64>();
        }
        for dim in 0..self.d {
            let at = self.idx(j, dim);
            self.jitter[at] = rng.random::<f64>();
        }
    }

    /// True when every column of L is a permutation of 1..=n.
    pub fn columns_are_permutations(&self) -> bool {
        for k in 0..self.d {
            let mut seen = vec![false; self.n];
            for i in 0..self.n {
                let v = self.l[self.idx(i, k)];
                if v < 1 || v > self.n || seen[v - 1] {
                    return false;
                }
                seen[v - 1] = true;
            }
        }
        true
    }
}

/// Latin hypercube sample.
pub fn lhs_design(n: usize, d: usize, seed: u64) -> Result<Design> {
    if n < 1 || d < 1 {
        return Err(Error::invalid("design needs n >= 1 and d >= 1"));
    }
    let mut rng = rng_from_seed(seed);
    let squares = LatinSquares::sample(n, d, &mut rng);
    Design::from_coords(
        squares.coords(),
        n,
        d,
        Provenance::basic(DesignMethod::Lhs, n, d, seed),
    )
}

fn check_search_args(n: usize, d: usize) -> Result<()> {
    if n < 2 || d < 1 {
        return Err(Error::invalid("search designs need n >= 2 and d >= 1"));
    }
    Ok(())
}

/// Distances from point i to every other row of x.
fn distances_from(x: &[f64], n: usize, d: usize, i: usize) -> Vec<f64> {
    (0..n)
        .filter(|&j| j != i)
        .map(|j| euclid(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]))
        .collect()
}

/// Greedy random-swap maximin search: a proposal replaces one point with a
/// uniform draw and is accepted when it improves the ascending distance
/// vector lexicographically (larger minimum first, ties broken by the next
/// smallest distance). The minimum distance never decreases.
pub fn maximin_design(n: usize, d: usize, s: u64, seed: u64) -> Result<Design> {
    Ok(maximin_design_traced(n, d, s, seed)?.design)
}

pub fn maximin_design_traced(n: usize, d: usize, s: u64, seed: u64) -> Result<SearchResult> {
    check_search_args(n, d)?;
    let mut rng = rng_from_seed(seed);
    let mut x = uniform_coords(n, d, &mut rng);
    let mut dists = pairwise_distances(&x, n, d)?.distances().to_vec();
    let mut scratch: Vec<f64> = Vec::with_capacity(dists.len());
    let mut trace = Vec::with_capacity(s as usize + 1);
    trace.push(dists[0]);

    let mut proposal = vec![0.0; d];
    for _ in 0..s {
        let i = rng.random_range(0..n);
        for v in proposal.iter_mut() {
            *v = rng.random::<f64>();
        }
        let mut removed = distances_from(&x, n, d, i);
        let old_row: Vec<f64> = x[i * d..(i + 1) * d].to_vec();
        x[i * d..(i + 1) * d].copy_from_slice(&proposal);
        let mut added = distances_from(&x, n, d, i);
        merge_swap(&dists, &mut removed, &mut added, &mut scratch);

        if lex_greater(&scratch, &dists) {
            std::mem::swap(&mut dists, &mut scratch);
        } else {
            x[i * d..(i + 1) * d].copy_from_slice(&old_row);
        }
        trace.push(dists[0]);
    }

    let mut provenance = Provenance::basic(DesignMethod::Maximin, n, d, seed);
    provenance.iterations = Some(s);
    Ok(SearchResult {
        design: Design::from_coords(x, n, d, provenance)?,
        trace,
    })
}

/// Rebuilds `current` minus `removed` plus `added` (sorted) into `out`.
fn merge_swap(current: &[f64], removed: &mut [f64], added: &mut [f64], out: &mut Vec<f64>) {
    removed.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    added.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    out.clear();
    let mut rm = 0;
    let mut ad = 0;
    for &v in current {
        while ad < added.len() && added[ad] < v {
            out.push(added[ad]);
            ad += 1;
        }
        if rm < removed.len() && removed[rm] == v {
            rm += 1;
        } else {
            out.push(v);
        }
    }
    out.extend_from_slice(&added[ad..]);
    debug_assert_eq!(rm, removed.len());
}

/// Ascending distance vectors compared for "more maximin": true when `a`
/// is strictly lexicographically greater than `b`.
fn lex_greater(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return true;
        }
        if x < y {
            return false;
        }
    }
    false
}

/// Greedy random-swap search minimizing phi_p. Coincident points make the
/// criterion infinite, so such proposals are never accepted.
pub fn phi_p_design(n: usize, d: usize, p: f64, s: u64, seed: u64) -> Result<Design> {
    Ok(phi_p_design_traced(n, d, p, s, seed)?.design)
}

pub fn phi_p_design_traced(n: usize, d: usize, p: f64, s: u64, seed: u64) -> Result<SearchResult> {
    check_search_args(n, d)?;
    if !(p >= 1.0) {
        return Err(Error::invalid(format!("phi_p needs p >= 1, got {p}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut x = uniform_coords(n, d, &mut rng);
    let mut sum: f64 = pairwise_distances(&x, n, d)?
        .distances()
        .iter()
        .map(|&v| v.powf(-p))
        .sum();
    let mut trace = Vec::with_capacity(s as usize + 1);
    trace.push(sum.powf(1.0 / p));

    let mut proposal = vec![0.0; d];
    for _ in 0..s {
        let i = rng.random_range(0..n);
        for v in proposal.iter_mut() {
            *v = rng.random::<f64>();
        }
        let removed: f64 = distances_from(&x, n, d, i).iter().map(|&v| v.powf(-p)).sum();
        let old_row: Vec<f64> = x[i * d..(i + 1) * d].to_vec();
        x[i * d..(i + 1) * d].copy_from_slice(&proposal);
        let added: f64 = distances_from(&x, n, d, i).iter().map(|&v| v.powf(-p)).sum();
        let new_sum = sum - removed + added;
        if new_sum < sum {
            // exact recompute on accept keeps incremental drift out
            sum = pairwise_distances(&x, n, d)?
                .distances()
                .iter()
                .map(|&v| v.powf(-p))
                .sum();
        } else {
            x[i * d..(i + 1) * d].copy_from_slice(&old_row);
        }
        trace.push(sum.powf(1.0 / p));
    }

    let mut provenance = Provenance::basic(DesignMethod::Phip, n, d, seed);
    provenance.iterations = Some(s);
    provenance.p = Some(p);
    Ok(SearchResult {
        design: Design::from_coords(x, n, d, provenance)?,
        trace,
    })
}

/// Stochastic search for a design whose pairwise-distance distribution
/// matches `target`: starting from a random design, each iteration redraws
/// one point uniformly and keeps it only when the KS distance to the target
/// strictly decreases.
pub fn dist_targeted_design(
    n: usize,
    d: usize,
    target: &DistanceTarget,
    s: u64,
    seed: u64,
) -> Result<Design> {
    Ok(dist_targeted_design_traced(n, d, target, s, seed)?.design)
}

pub fn dist_targeted_design_traced(
    n: usize,
    d: usize,
    target: &DistanceTarget,
    s: u64,
    seed: u64,
) -> Result<SearchResult> {
    check_search_args(n, d)?;
    let mut rng = rng_from_seed(seed);
    let mut x = uniform_coords(n, d, &mut rng);
    let mut tracked = TrackedDistances::new(&x, n, d, target)?;
    let mut ksd_cur = tracked.ksd();
    let mut trace = Vec::with_capacity(s as usize + 1);
    trace.push(ksd_cur);

    let mut proposal = vec![0.0; d];
    for _ in 0..s {
        let i = rng.random_range(0..n);
        for v in proposal.iter_mut() {
            *v = rng.random::<f64>();
        }
        let mut removed = distances_from(&x, n, d, i);
        let old_row: Vec<f64> = x[i * d..(i + 1) * d].to_vec();
        x[i * d..(i + 1) * d].copy_from_slice(&proposal);
        let mut added = distances_from(&x, n, d, i);

        let ksd_new = tracked.preview_swap(&mut removed, &mut added);
        if ksd_new < ksd_cur {
            tracked.commit();
            ksd_cur = ksd_new;
        } else {
            x[i * d..(i + 1) * d].copy_from_slice(&old_row);
        }
        trace.push(ksd_cur);
    }

    let method = match target.family {
        crate::dist::TargetFamily::Uniform => DesignMethod::Unifdist,
        crate::dist::TargetFamily::Beta { .. } => DesignMethod::Betadist,
    };
    let mut provenance = Provenance::basic(method, n, d, seed);
    provenance.iterations = Some(s);
    provenance.target = Some(*target);
    Ok(SearchResult {
        design: Design::from_coords(x, n, d, provenance)?,
        trace,
    })
}

/// Hybrid search: a Latin hypercube whose within-column bin swaps (plus
/// re-jitter of the two touched points) are accepted only when the KS
/// distance to `target` strictly decreases. Marginal one-dimensional
/// uniformity holds at every iteration because column permutations are
/// preserved by construction.
pub fn lhsbeta_design(
    n: usize,
    d: usize,
    target: &DistanceTarget,
    s: u64,
    seed: u64,
) -> Result<Design> {
    Ok(lhsbeta_design_traced(n, d, target, s, seed)?.design)
}

pub fn lhsbeta_design_traced(
    n: usize,
    d: usize,
    target: &DistanceTarget,
    s: u64,
    seed: u64,
) -> Result<SearchResult> {
    check_search_args(n, d)?;
    let mut rng = rng_from_seed(seed);
    let mut squares = LatinSquares::sample(n, d, &mut rng);
    let mut x = squares.coords();
    let mut tracked = TrackedDistances::new(&x, n, d, target)?;
    let mut ksd_cur = tracked.ksd();
    let mut trace = Vec::with_capacity(s as usize + 1);
    trace.push(ksd_cur);

    for _ in 0..s {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let k = rng.random_range(0..d);

        let saved = squares.clone_rows(i, j);
        let mut removed = pair_distances(&x, n, d, i, j);
        squares.swap_and_rejitter(i, j, k, &mut rng);
        for dim in 0..d {
            x[i * d + dim] = squares.coord(i, dim);
            x[j * d + dim] = squares.coord(j, dim);
        }
        let mut added = pair_distances(&x, n, d, i, j);

        let ksd_new = tracked.preview_swap(&mut removed, &mut added);
        if ksd_new < ksd_cur {
            tracked.commit();
            ksd_cur = ksd_new;
        } else {
            squares.restore_rows(i, j, saved);
            for dim in 0..d {
                x[i * d + dim] = squares.coord(i, dim);
                x[j * d + dim] = squares.coord(j, dim);
            }
        }
        trace.push(ksd_cur);
    }

    let mut provenance = Provenance::basic(DesignMethod::Lhsbeta, n, d, seed);
    provenance.iterations = Some(s);
    provenance.target = Some(*target);
    Ok(SearchResult {
        design: Design::from_coords(x, n, d, provenance)?,
        trace,
    })
}

/// Distances involving rows i or j: every pair (i, other), (j, other) for
/// other not in {i, j}, plus the (i, j) pair once.
fn pair_distances(x: &[f64], n: usize, d: usize, i: usize, j: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * n - 3);
    for other in 0..n {
        if other == i || other == j {
            continue;
        }
        out.push(euclid(&x[i * d..(i + 1) * d], &x[other * d..(other + 1) * d]));
        out.push(euclid(&x[j * d..(j + 1) * d], &x[other * d..(other + 1) * d]));
    }
    out.push(euclid(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]));
    out
}

impl LatinSquares {
    /// Saved bins and jitter of two rows, for cheap proposal rollback.
    fn clone_rows(&self, i: usize, j: usize) -> RowBackup {
        let mut bins = Vec::with_capacity(2 * self.d);
        let mut jit = Vec::with_capacity(2 * self.d);
        for k in 0..self.d {
            bins.push(self.l[self.idx(i, k)]);
            jit.push(self.jitter[self.idx(i, k)]);
        }
        for k in 0..self.d {
            bins.push(self.l[self.idx(j, k)]);
            jit.push(self.jitter[self.idx(j, k)]);
        }
        RowBackup { bins, jit }
    }

    fn restore_rows(&mut self, i: usize, j: usize, backup: RowBackup) {
        for k in 0..self.d {
            let at = self.idx(i, k);
            self.l[at] = backup.bins[k];
            self.jitter[at] = backup.jit[k];
        }
        for k in 0..self.d {
            let at = self.idx(j, k);
            self.l[at] = backup.bins[self.d + k];
            self.jitter[at] = backup.jit[self.d + k];
        }
    }
}

struct RowBackup {
    bins: Vec<usize>,
    jit: Vec<f64>,
}

/// Convenience dispatcher used by the CLI and the benchmark harness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum MethodSpec {
    Random,
    Lhs,
    Maximin { s: u64 },
    Phip { p: f64, s: u64 },
    Unifdist { s: u64 },
    Betadist { alpha: f64, beta: f64, s: u64 },
    Lhsbeta { alpha: f64, beta: f64, s: u64 },
}

impl MethodSpec {
    /// Short label for CSV columns and reports.
    pub fn label(&self) -> String {
        match self {
            MethodSpec::Random => "random".into(),
            MethodSpec::Lhs => "lhs".into(),
            MethodSpec::Maximin { .. } => "maximin".into(),
            MethodSpec::Phip { p, .. } => format!("minphi{p:.0}"),
            MethodSpec::Unifdist { .. } => "unifdist".into(),
            MethodSpec::Betadist { .. } => "betadist".into(),
            MethodSpec::Lhsbeta { .. } => "lhsbeta".into(),
        }
    }

    /// Builds a design of shape (n, d) with this method.
    pub fn generate(&self, n: usize, d: usize, seed: u64) -> Result<Design> {
        match *self {
            MethodSpec::Random => random_design(n, d, seed),
            MethodSpec::Lhs => lhs_design(n, d, seed),
            MethodSpec::Maximin { s } => maximin_design(n, d, s, seed),
            MethodSpec::Phip { p, s } => phi_p_design(n, d, p, s, seed),
            MethodSpec::Unifdist { s } => {
                dist_targeted_design(n, d, &DistanceTarget::uniform(d), s, seed)
            }
            MethodSpec::Betadist { alpha, beta, s } => {
                dist_targeted_design(n, d, &DistanceTarget::beta(alpha, beta, d)?, s, seed)
            }
            MethodSpec::Lhsbeta { alpha, beta, s } => {
                lhsbeta_design(n, d, &DistanceTarget::beta(alpha, beta, d)?, s, seed)
            }
        }
    }
}
