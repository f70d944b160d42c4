//! Derivative-free local maximization inside a box, used by the inner
//! acquisition searches: Nelder-Mead for d >= 2 and golden-section for
//! d = 1. Bounds are enforced by clamping.

/// Golden-section maximization of a 1d function on [lo, hi].
pub fn golden_section_max(
    f: &mut impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> (f64, f64) {
    const INVPHI: f64 = 0.6180339887498949;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INVPHI * (b - a);
    let mut x2 = a + INVPHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INVPHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INVPHI * (b - a);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn clamp_to(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

/// Nelder-Mead maximization from `start`, clamped to `bounds`.
/// Returns (argmax, max). Standard reflection/expansion/contraction
/// coefficients; the initial simplex steps 5% of each box width.
pub fn nelder_mead_max(
    f: &mut impl FnMut(&[f64]) -> f64,
    start: &[f64],
    bounds: &[(f64, f64)],
    max_iter: usize,
    tol: f64,
) -> (Vec<f64>, f64) {
    let d = start.len();
    if d == 1 {
        let mut g = |x: f64| f(&[x]);
        let span = bounds[0].1 - bounds[0].0;
        let lo = (start[0] - 0.2 * span).max(bounds[0].0);
        let hi = (start[0] + 0.2 * span).min(bounds[0].1);
        let (x, v) = golden_section_max(&mut g, lo, hi, tol * span.max(1e-30));
        return (vec![x], v);
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    simplex.push(start.to_vec());
    for k in 0..d {
        let mut p = start.to_vec();
        let span = bounds[k].1 - bounds[k].0;
        let step = 0.05 * span;
        p[k] = if p[k] + step <= bounds[k].1 {
            p[k] + step
        } else {
            p[k] - step
        };
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

    for _ in 0..max_iter {
        // sort descending by value (best first)
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal));
        let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let revalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalues;

        // convergence on simplex spread
        let spread = values[0] - values[d];
        let mut geom = 0.0_f64;
        for k in 0..d {
            geom = geom.max((simplex[0][k] - simplex[d][k]).abs());
        }
        if spread.abs() < tol && geom < tol {
            break;
        }

        // centroid of all but the worst
        let mut centroid = vec![0.0; d];
        for p in simplex.iter().take(d) {
            for k in 0..d {
                centroid[k] += p[k] / d as f64;
            }
        }

        let worst = values[d];
        let second_worst = values[d - 1];
        let best = values[0];

        let mut reflected: Vec<f64> = (0..d)
            .map(|k| centroid[k] + alpha * (centroid[k] - simplex[d][k]))
            .collect();
        clamp_to(&mut reflected, bounds);
        let fr = f(&reflected);

        if fr > best {
            let mut expanded: Vec<f64> = (0..d)
                .map(|k| centroid[k] + gamma * (reflected[k] - centroid[k]))
                .collect();
            clamp_to(&mut expanded, bounds);
            let fe = f(&expanded);
            if fe > fr {
                simplex[d] = expanded;
                values[d] = fe;
            } else {
                simplex[d] = reflected;
                values[d] = fr;
            }
        } else if fr > second_worst {
            simplex[d] = reflected;
            values[d] = fr;
        } else {
            let mut contracted: Vec<f64> = (0..d)
                .map(|k| centroid[k] + rho * (simplex[d][k] - centroid[k]))
                .collect();
            clamp_to(&mut contracted, bounds);
            let fc = f(&contracted);
            if fc > worst {
                simplex[d] = contracted;
                values[d] = fc;
            } else {
                // shrink toward the best vertex
                for i in 1..=d {
                    for k in 0..d {
                        simplex[i][k] = simplex[0][k] + sigma * (simplex[i][k] - simplex[0][k]);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }

    let mut best_idx = 0;
    for i in 1..=d {
        if values[i] > values[best_idx] {
            best_idx = i;
        }
    }
    (simplex[best_idx].clone(), values[best_idx])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn golden_finds_parabola_peak() {
        let mut f = |x: f64| -(x - 0.37) * (x - 0.37);
        let (x, _) = golden_section_max(&mut f, 0.0, 1.0, 1e-10);
        assert_relative_eq!(x, 0.37, epsilon = 1e-8);
    }

    #[test]
    fn nelder_mead_finds_quadratic_peak() {
        let mut f = |p: &[f64]| -(p[0] - 0.3).powi(2) - 2.0 * (p[1] - 0.7).powi(2);
        let bounds = [(0.0, 1.0), (0.0, 1.0)];
        let (x, _) = nelder_mead_max(&mut f, &[0.9, 0.1], &bounds, 400, 1e-12);
        assert_relative_eq!(x[0], 0.3, epsilon = 1e-5);
        assert_relative_eq!(x[1], 0.7, epsilon = 1e-5);
    }

    #[test]
    fn nelder_mead_respects_bounds() {
        // unconstrained peak outside the box: lands on the boundary
        let mut f = |p: &[f64]| -(p[0] - 2.0).powi(2) - (p[1] - 0.5).powi(2);
        let bounds = [(0.0, 1.0), (0.0, 1.0)];
        let (x, _) = nelder_mead_max(&mut f, &[0.5, 0.5], &bounds, 400, 1e-12);
        assert!(x[0] <= 1.0 && x[0] > 0.98, "x0 {}", x[0]);
    }
}
