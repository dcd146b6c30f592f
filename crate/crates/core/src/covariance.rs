use ndarray::{Array2, Axis};

use crate::error::{LoveError, Result};
use crate::model::Dataset;

/// A symmetric p x p covariance, either a model's population Σ or a sample Σ̂.
#[derive(Clone, Debug, PartialEq)]
pub struct CovMatrix {
    pub values: Array2<f64>,
    /// Number of samples behind the estimate; 0 for population matrices.
    pub n_used: usize,
    pub centered: bool,
}

impl CovMatrix {
    pub fn population(values: Array2<f64>) -> Self {
        Self {
            values,
            n_used: 0,
            centered: false,
        }
    }

    pub fn p(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    /// Rows and columns restricted to `idx`, in that order.
    pub fn submatrix(&self, idx: &[usize]) -> Array2<f64> {
        self.values.select(Axis(0), idx).select(Axis(1), idx)
    }
}

/// Σ̂ = (1/n) Σᵢ xᵢxᵢᵀ, optionally after subtracting the sample mean.
///
/// Always divides by n, centered or not.
pub fn sample_covariance(data: &Dataset, center: bool) -> Result<CovMatrix> {
    let n = data.n();
    if center && n < 2 {
        return Err(LoveError::Parameter(format!(
            "centered covariance needs at least 2 samples, got {n}"
        )));
    }
    let x = if center {
        let mean = data.samples.mean_axis(Axis(0)).expect("n >= 1");
        &data.samples - &mean
    } else {
        data.samples.clone()
    };
    let mut values = x.t().dot(&x) / n as f64;
    // Mirror the upper triangle so the result is symmetric bit for bit.
    let p = values.nrows();
    for i in 0..p {
        for j in (i + 1)..p {
            values[[j, i]] = values[[i, j]];
        }
    }
    Ok(CovMatrix {
        values,
        n_used: n,
        centered: center,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    fn ds(x: Array2<f64>) -> Dataset {
        Dataset::new(x).unwrap()
    }

    #[test]
    fn single_sample_is_outer_product() {
        let d = ds(array![[1.0, -2.0, 3.0]]);
        let s = sample_covariance(&d, false).unwrap();
        let x = array![1.0, -2.0, 3.0];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(s.values[[i, j]], x[i] * x[j]);
            }
        }
    }

    #[test]
    fn mirrored_pair_gives_outer_product() {
        let d = ds(array![[1.0, 2.0], [-1.0, -2.0]]);
        let s = sample_covariance(&d, false).unwrap();
        assert_eq!(s.values, array![[1.0, 2.0], [2.0, 4.0]]);
    }

    #[test]
    fn centering_needs_two_rows() {
        let d = ds(array![[1.0, 2.0]]);
        assert!(matches!(sample_covariance(&d, true), Err(LoveError::Parameter(_))));
    }

    #[test]
    fn centered_covariance_ignores_shift() {
        let x = array![[1.0, 0.5, -1.0], [2.0, -0.5, 0.0], [0.0, 1.5, 3.0], [-1.0, 0.0, 1.0]];
        let shifted = &x + &Array1::from(vec![10.0, -3.0, 7.5]);
        let a = sample_covariance(&ds(x), true).unwrap();
        let b = sample_covariance(&ds(shifted), true).unwrap();
        for (u, v) in a.values.iter().zip(b.values.iter()) {
            assert!((u - v).abs() < 1e-12);
        }
        assert!(a.centered && a.n_used == 4);
    }
}
