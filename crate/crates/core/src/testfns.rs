//! Benchmark objective functions for the sequential-design studies.

/// Two-dimensional bump surface `x1 * exp(-x1^2 - x2^2)`, the classic
/// active-learning benchmark, usually run on [-2, 4]^2.
pub fn gramacy_lee(x: &[f64]) -> f64 {
    assert_eq!(x.len(), 2, "gramacy_lee is a 2d function");
    x[0] * (-x[0] * x[0] - x[1] * x[1]).exp()
}

/// The domain the bump surface is conventionally studied on.
pub const GRAMACY_LEE_BOUNDS: (f64, f64) = (-2.0, 4.0);

/// Griewank function in d dimensions:
/// `sum(x_i^2) / 4000 - prod(cos(x_i / sqrt(i))) + 1`, global minimum 0 at
/// the origin. The box half-width b tunes the number of local minima.
pub fn griewank(x: &[f64]) -> f64 {
    let sum: f64 = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
    let prod: f64 = x
        .iter()
        .enumerate()
        .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
        .product();
    sum - prod + 1.0
}
