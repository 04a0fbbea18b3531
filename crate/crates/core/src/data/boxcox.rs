//! Box-Cox power transform with profile-likelihood λ selection on a grid.

/// Candidate λ values: −2.00, −1.99, …, 2.00.
pub const LAMBDA_GRID: (i32, i32, f64) = (-200, 200, 0.01);

fn grid() -> impl Iterator<Item = f64> {
    let (lo, hi, _) = LAMBDA_GRID;
    // integer steps so that λ = 0 and λ = 1 are hit exactly
    (lo..=hi).map(|k| f64::from(k) / 100.0)
}

#[inline]
pub fn boxcox(v: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        v.ln()
    } else {
        (v.powf(lambda) - 1.0) / lambda
    }
}

#[inline]
pub fn inverse_boxcox(t: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        t.exp()
    } else {
        (lambda * t + 1.0).powf(1.0 / lambda)
    }
}

/// Profile log-likelihood of a Box-Cox λ for strictly positive data,
/// up to an additive constant:
/// `(λ − 1) Σ ln v − n/2 · ln σ̂²(λ)` with σ̂² the 1/n variance of the
/// transformed values.
pub fn boxcox_log_likelihood(values: &[f64], lambda: f64) -> f64 {
    let n = values.len() as f64;
    let log_sum: f64 = values.iter().map(|v| v.ln()).sum();
    let transformed: Vec<f64> = values.iter().map(|&v| boxcox(v, lambda)).collect();
    let mean = transformed.iter().sum::<f64>() / n;
    let var = transformed.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    (lambda - 1.0) * log_sum - 0.5 * n * var.ln()
}

/// Grid maximiser of [`boxcox_log_likelihood`]; the first (smallest) λ wins
/// ties. Values are sorted first so the result does not depend on row order.
pub fn fit_boxcox_lambda(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best = (f64::NEG_INFINITY, 1.0);
    for lambda in grid() {
        let ll = boxcox_log_likelihood(&sorted, lambda);
        if ll > best.0 {
            best = (ll, lambda);
        }
    }
    best.1
}
