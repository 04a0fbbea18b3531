use serde::{Deserialize, Serialize};

use super::special::student_t_two_sided_p;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTTest {
    /// `mean(d)/(sd(d)/√k)` with `d = a − b`; 0 for a tie.
    pub t: f64,
    pub p: f64,
    pub df: usize,
    pub mean_difference: f64,
    /// Differences had zero variance; reported as a tie with `p = 1`.
    pub degenerate: bool,
}

impl PairedTTest {
    pub fn significant(&self, alpha: f64) -> bool {
        !self.degenerate && self.p < alpha
    }

    pub fn significant_at_5pct(&self) -> bool {
        self.significant(0.05)
    }
}

/// Two-sided paired t-test on matched samples.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTTest> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    let k = a.len();
    if k < 2 {
        return Err(Error::InvalidArgument("paired t-test needs at least two pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / k as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    let df = k - 1;
    // constant differences (including all zero) carry no variance to test against
    if d.windows(2).all(|w| w[0] == w[1]) || var == 0.0 {
        return Ok(PairedTTest { t: 0.0, p: 1.0, df, mean_difference: mean, degenerate: true });
    }
    let t = mean / (var.sqrt() / (k as f64).sqrt());
    Ok(PairedTTest {
        t,
        p: student_t_two_sided_p(t, df as f64),
        df,
        mean_difference: mean,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_arms_tie() {
        let a = [0.3, 0.4, 0.5];
        let r = paired_t_test(&a, &a).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p, 1.0);
        assert!(!r.significant_at_5pct());
    }

    #[test]
    fn constant_difference_is_a_tie() {
        let a = [2.0; 10];
        let b = [1.0; 10];
        let r = paired_t_test(&a, &b).unwrap();
        assert!(r.degenerate && !r.significant_at_5pct());
    }

    #[test]
    fn strongly_shifted_differences() {
        let d = [0.9, 1.1, 1.0, 0.8, 1.2, 1.05, 0.95, 1.0, 1.1, 0.9];
        let zeros = [0.0; 10];
        let r = paired_t_test(&d, &zeros).unwrap();
        // mean 1.0, sd 0.117851 → t = 26.8328 (oracle: scipy ttest_rel)
        assert!((r.t - 26.832_815_729_997_48).abs() < 1e-9, "t = {}", r.t);
        assert!(r.p < 1e-9);
        assert!((r.p - 6.711_229_525_810_668e-10).abs() < 1e-18);
        assert_eq!(r.df, 9);
    }

    #[test]
    fn length_errors() {
        assert!(paired_t_test(&[1.0], &[1.0]).is_err());
        assert!(paired_t_test(&[1.0, 2.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn swapping_arms_negates_t(a in prop::collection::vec(0.0f64..1.0, 3..12), shift in prop::collection::vec(-0.2f64..0.2, 12)) {
            let b: Vec<f64> = a.iter().zip(&shift).map(|(x, s)| x + s).collect();
            let ab = paired_t_test(&a, &b).unwrap();
            let ba = paired_t_test(&b, &a).unwrap();
            prop_assert!((ab.t + ba.t).abs() < 1e-9 * (1.0 + ab.t.abs()));
            prop_assert!((ab.p - ba.p).abs() < 1e-12);
        }
    }
}
