//! Estimation of the non-pure rows of A and assembly of the full Â.
//!
//! Each non-pure row starts from the pre-estimate `β̄ = Ω̂ θ̂` and is then
//! either soft-thresholded (the solution of `min ‖β‖₁ s.t. ‖β − β̄‖∞ ≤ μ`) or
//! hard-thresholded at `μ`.

use std::collections::BTreeMap;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{LoveError, Result};
use crate::model::PurePartition;
use crate::moments::ThetaVector;
use crate::precision::PrecisionEstimate;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowMethod {
    #[default]
    SoftProject,
    HardThreshold,
}

impl FromStr for RowMethod {
    type Err = LoveError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft_project" | "soft" => Ok(Self::SoftProject),
            "hard_threshold" | "hard" => Ok(Self::HardThreshold),
            other => Err(LoveError::Config(format!("unknown row method `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RowEstimate {
    pub beta_bar: Array1<f64>,
    pub beta_hat: Array1<f64>,
    pub method: RowMethod,
    pub mu: f64,
}

impl RowEstimate {
    pub fn new(beta_bar: Array1<f64>, mu: f64, method: RowMethod) -> Self {
        let beta_hat = match method {
            RowMethod::SoftProject => sparse_project(beta_bar.view(), mu),
            RowMethod::HardThreshold => hard_threshold(beta_bar.view(), mu),
        };
        Self {
            beta_bar,
            beta_hat,
            method,
            mu,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadingEstimate {
    pub a_hat: Array2<f64>,
    pub k_hat: usize,
    pub partition: PurePartition,
    pub row_method: RowMethod,
}

/// `β̄ = Ω̂ θ̂`.
pub fn pre_estimate_row(omega: &PrecisionEstimate, theta: &ThetaVector) -> Result<Array1<f64>> {
    if omega.omega.ncols() != theta.values.len() {
        return Err(LoveError::Dimension(format!(
            "Ω̂ is {}x{} but θ̂ has length {}",
            omega.omega.nrows(),
            omega.omega.ncols(),
            theta.values.len()
        )));
    }
    Ok(omega.omega.dot(&theta.values))
}

/// Coordinatewise soft threshold `sign(β̄_a) · max(|β̄_a| − μ, 0)`.
pub fn sparse_project(beta_bar: ArrayView1<f64>, mu: f64) -> Array1<f64> {
    beta_bar.mapv(|b| {
        let shrunk = b.abs() - mu;
        if shrunk > 0.0 {
            shrunk.copysign(b)
        } else {
            0.0
        }
    })
}

/// Keeps `β̄_a` where `|β̄_a| > μ`, zero elsewhere.
pub fn hard_threshold(beta_bar: ArrayView1<f64>, mu: f64) -> Array1<f64> {
    beta_bar.mapv(|b| if b.abs() > mu { b } else { 0.0 })
}

/// Stacks signed pure rows and estimated non-pure rows into a p x K̂ matrix.
pub fn assemble_a(
    pure: &PurePartition,
    non_pure: &BTreeMap<usize, RowEstimate>,
    p: usize,
    k_hat: usize,
) -> Result<LoadingEstimate> {
    if pure.k() != k_hat {
        return Err(LoveError::Structure(format!(
            "partition has {} groups but K̂ = {k_hat}",
            pure.k()
        )));
    }
    let mut covered = vec![false; p];
    let mut a_hat = Array2::zeros((p, k_hat));
    for (a, group) in pure.groups.iter().enumerate() {
        for &i in group {
            if i >= p || covered[i] {
                return Err(LoveError::Structure(format!("pure row {} out of range or repeated", i + 1)));
            }
            covered[i] = true;
            a_hat[[i, a]] = pure.sign(i)?;
        }
    }
    let mut method = RowMethod::SoftProject;
    for (&j, est) in non_pure {
        if j >= p || covered[j] {
            return Err(LoveError::Structure(format!("row {} out of range or repeated", j + 1)));
        }
        if est.beta_hat.len() != k_hat {
            return Err(LoveError::Dimension(format!(
                "row {} has length {} instead of {k_hat}",
                j + 1,
                est.beta_hat.len()
            )));
        }
        covered[j] = true;
        a_hat.row_mut(j).assign(&est.beta_hat);
        method = est.method;
    }
    if let Some(missing) = covered.iter().position(|c| !c) {
        return Err(LoveError::Structure(format!("row {} was not estimated", missing + 1)));
    }
    Ok(LoadingEstimate {
        a_hat,
        k_hat,
        partition: pure.clone(),
        row_method: method,
    })
}
