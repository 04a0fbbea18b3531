//! Seeded synthetic regression problems.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Cell, ColumnKind, Dataset, FeatureTable};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// `y = sin(6 x₁) + 0.1 ε`, `x ~ U[0, 1]^d`.
    Sine,
    /// `y = x₁ + 0.1 ε`, `x ~ U[0, 1]^d`.
    Linear,
    /// Friedman #1: `10 sin(π x₁ x₂) + 20 (x₃ − ½)² + 10 x₄ + 5 x₅ + ε`, `d ≥ 5`.
    Friedman1,
    /// `y = exp(x₁ + 0.5 ε)` with `x ~ N(0, 1)^d`.
    #[serde(rename = "lognormal")]
    LogNormal,
    /// Numeric `x₁` and a three-level category shifting the mean.
    Categorical,
}

impl Generator {
    pub const ALL: [Generator; 5] =
        [Generator::Sine, Generator::Linear, Generator::Friedman1, Generator::LogNormal, Generator::Categorical];

    pub fn as_str(&self) -> &'static str {
        match self {
            Generator::Sine => "sine",
            Generator::Linear => "linear",
            Generator::Friedman1 => "friedman1",
            Generator::LogNormal => "lognormal",
            Generator::Categorical => "categorical",
        }
    }
}

impl std::str::FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Generator::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown generator `{s}`")))
    }
}

pub fn generate(generator: Generator, n: usize, d: usize, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument("synthetic data needs n ≥ 1 and d ≥ 1".into()));
    }
    let mut rng = seed::rng(seed::derive_str(seed, generator.as_str()));
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let name = generator.as_str();
    match generator {
        Generator::Sine | Generator::Linear | Generator::Friedman1 => {
            if generator == Generator::Friedman1 && d < 5 {
                return Err(Error::InvalidArgument("friedman1 needs d ≥ 5".into()));
            }
            let mut data = Vec::with_capacity(n * d);
            let mut y = Vec::with_capacity(n);
            for _ in 0..n {
                let row: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
                let e: f64 = noise.sample(&mut rng);
                y.push(match generator {
                    Generator::Sine => (6.0 * row[0]).sin() + 0.1 * e,
                    Generator::Linear => row[0] + 0.1 * e,
                    _ => {
                        10.0 * (std::f64::consts::PI * row[0] * row[1]).sin()
                            + 20.0 * (row[2] - 0.5).powi(2)
                            + 10.0 * row[3]
                            + 5.0 * row[4]
                            + e
                    }
                });
                data.extend(row);
            }
            Dataset::from_matrix(name, &Matrix::from_vec(n, d, data)?, y)
        }
        Generator::LogNormal => {
            let mut data = Vec::with_capacity(n * d);
            let mut y = Vec::with_capacity(n);
            for _ in 0..n {
                let row: Vec<f64> = (0..d).map(|_| noise.sample(&mut rng)).collect();
                let e: f64 = noise.sample(&mut rng);
                y.push((row[0] + 0.5 * e).exp());
                data.extend(row);
            }
            Dataset::from_matrix(name, &Matrix::from_vec(n, d, data)?, y)
        }
        Generator::Categorical => {
            const LEVELS: [(&str, f64); 3] = [("a", -1.0), ("b", 0.0), ("c", 2.0)];
            let mut names = vec!["group".to_string()];
            let mut kinds = vec![ColumnKind::Categorical];
            for j in 1..=d {
                names.push(format!("x{j}"));
                kinds.push(ColumnKind::Numeric);
            }
            let mut rows = Vec::with_capacity(n);
            let mut y = Vec::with_capacity(n);
            for _ in 0..n {
                let (level, shift) = LEVELS[rng.gen_range(0..LEVELS.len())];
                let xs: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
                let e: f64 = noise.sample(&mut rng);
                y.push(shift + 2.0 * xs[0] + 0.2 * e);
                let mut row = vec![Cell::Category(level.to_string())];
                row.extend(xs.into_iter().map(Cell::Numeric));
                rows.push(row);
            }
            Dataset::new(name, FeatureTable { names, kinds, rows }, y)
        }
    }
}
