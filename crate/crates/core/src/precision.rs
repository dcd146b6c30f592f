//! Precision-matrix estimate Ω̂ of C⁻¹ from the linear program
//!
//! ```text
//! minimize t  over symmetric Ω and t ≥ 0
//! subject to ‖ΩĈ − I‖∞ ≤ λt   (entrywise)
//!            ‖Ω‖∞,1   ≤ t     (max row ℓ₁-norm)
//! ```
//!
//! Symmetry is built into the parametrization: one pair of nonnegative
//! columns `(Ω⁺_ab, Ω⁻_ab)` per `a ≤ b`, shared by `Ω_ab` and `Ω_ba`. The row
//! ℓ₁-norms are bounded through `Σ_b (Ω⁺_ab + Ω⁻_ab) ≤ t`, which is exact at
//! the optimum.

use ndarray::Array2;

use crate::error::{LoveError, Result};
use crate::linalg;
use crate::lp::{lp_solve, LinearProgram, LpStatus, Relation};
use crate::moments::FactorCov;

#[derive(Clone, Debug, PartialEq)]
pub struct PrecisionEstimate {
    pub omega: Array2<f64>,
    pub t_hat: f64,
    pub lambda: f64,
    /// ‖Ω̂Ĉ − I‖∞ attained.
    pub residual: f64,
}

impl PrecisionEstimate {
    /// ‖Ω̂‖∞,1.
    pub fn inf_one_norm(&self) -> f64 {
        linalg::inf_one_norm(self.omega.view())
    }
}

fn pair_index(k: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    // Row-major upper triangle.
    a * k - a * (a + 1) / 2 + b
}

/// Builds the linear program for a given Ĉ and λ. Variable layout:
/// `2·pair` and `2·pair + 1` are `Ω⁺` and `Ω⁻` of each upper-triangular
/// pair, and the last variable is `t`.
pub fn precision_program(c_hat: &FactorCov, lambda: f64) -> LinearProgram {
    let k = c_hat.k();
    let n_pairs = k * (k + 1) / 2;
    let t = 2 * n_pairs;
    let mut objective = vec![0.0; t + 1];
    objective[t] = 1.0;
    let mut lp = LinearProgram::new(objective);
    let c = &c_hat.values;
    for a in 0..k {
        for col in 0..k {
            // (ΩĈ)_{a,col} = Σ_b Ω_ab Ĉ_{b,col}
            let mut plus = Vec::with_capacity(2 * k + 1);
            for b in 0..k {
                let v = c[[b, col]];
                if v != 0.0 {
                    let p = pair_index(k, a, b);
                    plus.push((2 * p, v));
                    plus.push((2 * p + 1, -v));
                }
            }
            let target = if a == col { 1.0 } else { 0.0 };
            let mut minus: Vec<(usize, f64)> = plus.iter().map(|&(j, v)| (j, -v)).collect();
            plus.push((t, -lambda));
            minus.push((t, -lambda));
            lp.add(plus, Relation::Le, target);
            lp.add(minus, Relation::Le, -target);
        }
    }
    for a in 0..k {
        let mut row = Vec::with_capacity(2 * k + 1);
        for b in 0..k {
            let p = pair_index(k, a, b);
            row.push((2 * p, 1.0));
            row.push((2 * p + 1, 1.0));
        }
        row.push((t, -1.0));
        lp.add(row, Relation::Le, 0.0);
    }
    lp
}

pub fn estimate_precision(c_hat: &FactorCov, lambda: f64) -> Result<PrecisionEstimate> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(LoveError::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    if c_hat.values.iter().any(|v| !v.is_finite()) {
        return Err(LoveError::Parameter("Ĉ has non-finite entries".into()));
    }
    let k = c_hat.k();
    if k == 0 {
        return Err(LoveError::Dimension("empty factor covariance".into()));
    }
    let lp = precision_program(c_hat, lambda);
    let sol = lp_solve(&lp);
    if sol.status != LpStatus::Optimal {
        return Err(LoveError::Solver {
            status: sol.status,
            detail: format!("precision program with K = {k}, lambda = {lambda}"),
        });
    }
    let mut omega = Array2::zeros((k, k));
    for a in 0..k {
        for b in 0..k {
            let p = pair_index(k, a, b);
            omega[[a, b]] = sol.x[2 * p] - sol.x[2 * p + 1];
        }
    }
    let t_hat = sol.x[2 * k * (k + 1) / 2];
    let mut resid = omega.dot(&c_hat.values);
    for a in 0..k {
        resid[[a, a]] -= 1.0;
    }
    Ok(PrecisionEstimate {
        omega,
        t_hat,
        lambda,
        residual: linalg::max_abs(resid.view()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn cov(values: Array2<f64>) -> FactorCov {
        FactorCov { values }
    }

    #[test]
    fn pair_index_covers_upper_triangle() {
        let k = 5;
        let mut seen = vec![false; k * (k + 1) / 2];
        for a in 0..k {
            for b in a..k {
                let p = pair_index(k, a, b);
                assert!(!seen[p]);
                seen[p] = true;
                assert_eq!(p, pair_index(k, b, a));
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn identity_closed_form() {
        for lambda in [0.01, 0.1, 1.0, 3.0] {
            let est = estimate_precision(&cov(Array2::eye(4)), lambda).unwrap();
            let expected = 1.0 / (1.0 + lambda);
            assert!((est.t_hat - expected).abs() < 1e-9, "t = {}", est.t_hat);
            for a in 0..4 {
                for b in 0..4 {
                    let target = if a == b { expected } else { 0.0 };
                    assert!((est.omega[[a, b]] - target).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn huge_lambda_gives_near_zero() {
        let c = array![[2.0, 0.3], [0.3, 1.0]];
        let est = estimate_precision(&cov(c), 1e6).unwrap();
        assert!(est.t_hat <= 1e-6 + 1e-12);
        assert!(linalg::max_abs(est.omega.view()) <= 1e-6 + 1e-12);
    }

    #[test]
    fn tiny_lambda_inverts() {
        let c = array![[2.0, -0.6, 0.18], [-0.6, 2.1, -0.63], [0.18, -0.63, 2.2]];
        let inv = linalg::inverse(c.view()).unwrap();
        let est = estimate_precision(&cov(c), 1e-8).unwrap();
        for (x, y) in est.omega.iter().zip(inv.iter()) {
            assert!((x - y).abs() < 1e-4);
        }
    }

    #[test]
    fn rejects_nonpositive_lambda() {
        assert!(estimate_precision(&cov(Array2::eye(2)), 0.0).is_err());
        assert!(estimate_precision(&cov(Array2::eye(2)), -1.0).is_err());
    }
}
