use serde::{Deserialize, Serialize};

use super::special::chi_squared_sf;
use crate::error::{Error, Result};

/// Two-tailed Nemenyi critical values `q_{0.05}` for 2..=10 methods
/// (studentized range at infinite df divided by √2).
const NEMENYI_Q_05: [f64; 9] = [1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164];

pub fn nemenyi_q(methods: usize) -> Option<f64> {
    (2..=10).contains(&methods).then(|| NEMENYI_Q_05[methods - 2])
}

/// Ranks within each row, 1 = smallest value; ties share their average rank.
pub fn rank_rows(matrix: &[Vec<f64>]) -> Vec<Vec<f64>> {
    matrix
        .iter()
        .map(|row| {
            let mut idx: Vec<usize> = (0..row.len()).collect();
            idx.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
            let mut ranks = vec![0.0; row.len()];
            let mut i = 0;
            while i < idx.len() {
                let mut j = i;
                while j + 1 < idx.len() && row[idx[j + 1]] == row[idx[i]] {
                    j += 1;
                }
                let avg = (i + j) as f64 / 2.0 + 1.0;
                for &k in &idx[i..=j] {
                    ranks[k] = avg;
                }
                i = j + 1;
            }
            ranks
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanNemenyi {
    pub mean_ranks: Vec<f64>,
    pub friedman_stat: f64,
    pub p: f64,
    /// `None` when no q constant is tabulated for this many methods.
    pub critical_difference: Option<f64>,
}

/// Friedman χ² over a `D × M` RMSE matrix and the Nemenyi critical
/// difference at α = 0.05.
pub fn friedman_nemenyi(rmse_matrix: &[Vec<f64>]) -> Result<FriedmanNemenyi> {
    let d = rmse_matrix.len();
    let m = rmse_matrix.first().map_or(0, Vec::len);
    if d < 2 || m < 2 {
        return Err(Error::InvalidArgument(format!(
            "Friedman test needs at least 2 datasets and 2 methods, got {d} × {m}"
        )));
    }
    if rmse_matrix.iter().any(|r| r.len() != m || r.iter().any(|v| !v.is_finite())) {
        return Err(Error::MissingCells("RMSE matrix has missing entries".into()));
    }
    let ranks = rank_rows(rmse_matrix);
    let mean_ranks: Vec<f64> = (0..m)
        .map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / d as f64)
        .collect();
    let (df, mf) = (d as f64, m as f64);
    let sum_sq: f64 = mean_ranks.iter().map(|r| r * r).sum();
    let stat = 12.0 * df / (mf * (mf + 1.0)) * (sum_sq - mf * (mf + 1.0).powi(2) / 4.0);
    // rounding can leave a tiny negative value when all ranks are equal
    let stat = stat.max(0.0);
    let critical_difference = nemenyi_q(m).map(|q| q * (mf * (mf + 1.0) / (6.0 * df)).sqrt());
    Ok(FriedmanNemenyi {
        mean_ranks,
        friedman_stat: stat,
        p: chi_squared_sf(stat, mf - 1.0),
        critical_difference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_columns() {
        let m = vec![vec![0.3, 0.3], vec![0.5, 0.5], vec![0.1, 0.1]];
        let r = friedman_nemenyi(&m).unwrap();
        assert_eq!(r.mean_ranks, vec![1.5, 1.5]);
        assert_eq!(r.friedman_stat, 0.0);
        assert!((r.p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_method_always_better() {
        let m: Vec<Vec<f64>> = (0..10).map(|i| vec![0.1 * i as f64, 0.1 * i as f64 + 0.05]).collect();
        let r = friedman_nemenyi(&m).unwrap();
        assert_eq!(r.mean_ranks, vec![1.0, 2.0]);
        // 12·10/6 · (1 + 4 − 4.5) = 10
        assert!((r.friedman_stat - 10.0).abs() < 1e-12);
    }

    #[test]
    fn three_by_three_by_hand() {
        // ranks: [1,2,3], [1,3,2], [2,1,3] → means 4/3, 2, 8/3
        // χ² = 12·3/(3·4) · (16/9 + 4 + 64/9 − 12) = 3 · 8/9 = 8/3
        let m = vec![vec![0.1, 0.2, 0.3], vec![0.1, 0.3, 0.2], vec![0.2, 0.1, 0.3]];
        let r = friedman_nemenyi(&m).unwrap();
        assert!((r.friedman_stat - 8.0 / 3.0).abs() < 1e-12);
        assert!((r.p - (-4.0f64 / 3.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn ties_average() {
        assert_eq!(rank_rows(&[vec![0.5, 0.1, 0.5, 0.2]]), vec![vec![3.5, 1.0, 3.5, 2.0]]);
    }

    #[test]
    fn q_table_covers_two_to_ten() {
        assert_eq!(nemenyi_q(5), Some(2.728));
        assert_eq!(nemenyi_q(10), Some(3.164));
        assert_eq!(nemenyi_q(11), None);
        assert_eq!(nemenyi_q(1), None);
    }

    #[test]
    fn missing_entries_rejected() {
        assert!(friedman_nemenyi(&[vec![0.1, f64::NAN], vec![0.2, 0.3]]).is_err());
        assert!(friedman_nemenyi(&[vec![0.1, 0.2]]).is_err());
    }

    proptest! {
        #[test]
        fn rank_rows_sum_to_triangle(m in prop::collection::vec(prop::collection::vec(0u8..4, 5), 1..8)) {
            let rows: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect();
            for r in rank_rows(&rows) {
                prop_assert!((r.iter().sum::<f64>() - 15.0).abs() < 1e-12);
            }
        }

        #[test]
        fn monotone_transform_keeps_statistic(
            m in prop::collection::vec(prop::collection::vec(0.01f64..2.0, 4), 2..10)
        ) {
            let a = friedman_nemenyi(&m).unwrap();
            let t: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|v| v.ln() * 3.0 + 7.0).collect()).collect();
            let b = friedman_nemenyi(&t).unwrap();
            prop_assert_eq!(a.mean_ranks, b.mean_ranks);
            prop_assert_eq!(a.friedman_stat, b.friedman_stat);
        }
    }
}
