//! Small hand-built models with known answers.

use ndarray::{array, Array1, Array2};

use crate::model::FactorModel;

/// Eight variables, three uncorrelated factors of variance `tau`.
///
/// Variables 1..6 are pure with groups {1,2}, {3,4}, {5,6} and sign
/// patterns (+,−), (+,+), (−,−). Variable 7 loads (0.4, 0.6, 0) and
/// variable 8 loads (−0.5, 0, 0.4). Unit noise variances.
pub fn overlap_example(tau: f64) -> FactorModel {
    let a = array![
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, -1.0],
        [0.0, 0.0, -1.0],
        [0.4, 0.6, 0.0],
        [-0.5, 0.0, 0.4],
    ];
    let c = Array2::eye(3) * tau;
    FactorModel::new(a, c, Array1::ones(8)).expect("consistent shapes")
}

/// A rotation `Q` with `Q C Qᵀ = C` for `C = diag(1, 2, 3)`, used to show
/// that without pure rows a loading row can be re-expressed with a
/// different sparsity pattern.
pub struct RotationCounterexample {
    pub c: Array2<f64>,
    pub q: Array2<f64>,
    /// A loading row satisfying the ℓ₁ bound.
    pub row: Array1<f64>,
    /// Closed form of `row · Q`.
    pub rotated_row: Array1<f64>,
}

pub fn rotation_counterexample() -> RotationCounterexample {
    let r38 = (3.0_f64 / 8.0).sqrt();
    let r23 = (2.0_f64 / 3.0).sqrt();
    let r32 = (3.0_f64 / 2.0).sqrt();
    RotationCounterexample {
        c: Array2::from_diag(&array![1.0, 2.0, 3.0]),
        q: array![[0.5, r38, 0.0], [-2.0 * r38, 0.5, 0.0], [0.0, 0.0, 1.0]],
        row: array![0.25, r23 / 8.0, 0.75 - r23 / 8.0],
        rotated_row: array![0.0, r32 / 8.0 + r23 / 16.0, 0.75 - r23 / 8.0],
    }
}
