use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Ordinary least squares with an intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.check_width(self.coefficients.len())?;
        Ok(x.rows_iter()
            .map(|r| self.intercept + r.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum::<f64>())
            .collect())
    }
}

/// Least squares through an SVD of the centred design; singular values below
/// `max(n, d)·σ_max·ε` are dropped, which yields the minimum-norm solution
/// when columns are collinear.
pub fn fit_linear(x: &Matrix, y: &[f64]) -> Result<LinearModel> {
    let (n, d) = (x.nrows(), x.ncols());
    if n == 0 {
        return Err(Error::EmptyDataset("no training rows".into()));
    }
    if y.len() != n {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    let y_mean = y.iter().sum::<f64>() / n as f64;
    if d == 0 {
        return Ok(LinearModel { coefficients: Vec::new(), intercept: y_mean });
    }
    let means: Vec<f64> = (0..d)
        .map(|j| x.rows_iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let a = DMatrix::from_fn(n, d, |i, j| x.get(i, j) - means[j]);
    let b = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let svd = a.svd(true, true);
    let sigma_max = svd.singular_values.max();
    let coefficients: Vec<f64> = if sigma_max == 0.0 {
        vec![0.0; d]
    } else {
        let eps = n.max(d) as f64 * sigma_max * f64::EPSILON;
        let beta = svd
            .solve(&b, eps)
            .map_err(|e| Error::InvalidArgument(format!("least squares failed: {e}")))?;
        beta.iter().copied().collect()
    };
    let intercept = y_mean - coefficients.iter().zip(&means).map(|(c, m)| c * m).sum::<f64>();
    Ok(LinearModel { coefficients, intercept })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = xs.iter().map(|v| 2.0 * v + 1.0).collect();
        let m = fit_linear(&Matrix::column_vector(&xs), &y).unwrap();
        assert!((m.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((m.intercept - 1.0).abs() < 1e-12);
        let pred = m.predict(&Matrix::column_vector(&xs)).unwrap();
        assert!(pred.iter().zip(&y).all(|(p, v)| (p - v).abs() < 1e-12));
    }

    #[test]
    fn zero_design_gives_mean() {
        let m = fit_linear(&Matrix::zeros(4, 2), &[1.0, 2.0, 3.0, 6.0]).unwrap();
        assert_eq!(m.coefficients, vec![0.0, 0.0]);
        assert_eq!(m.intercept, 3.0);
    }

    #[test]
    fn duplicated_column_keeps_fitted_values() {
        let xs = [0.3, 1.2, 2.0, 3.7, 4.1, 5.5];
        let y = [1.0, 2.5, 2.9, 4.8, 5.0, 7.1];
        let single = fit_linear(&Matrix::column_vector(&xs), &y).unwrap();
        let rows: Vec<[f64; 2]> = xs.iter().map(|&v| [v, v]).collect();
        let dup_x = Matrix::from_rows(&rows).unwrap();
        let dup = fit_linear(&dup_x, &y).unwrap();
        assert!(dup.coefficients.iter().all(|c| c.is_finite()));
        // minimum norm splits the slope evenly
        assert!((dup.coefficients[0] - dup.coefficients[1]).abs() < 1e-9);
        let a = single.predict(&Matrix::column_vector(&xs)).unwrap();
        let b = dup.predict(&dup_x).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-9);
        }
    }
}
