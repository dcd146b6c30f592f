//! Data-driven choice of δ, λ and μ.
//!
//! δ is picked by split-sample cross-validation: the pure partition and Ĉ
//! are estimated on one half for every grid value, and the fitted block
//! `Â_Î Ĉ Â_Îᵀ` is compared off-diagonally with the other half's covariance.
//! λ defaults to the selected δ and can optionally be cross-validated with
//! the Gaussian likelihood loss. μ is the plug-in `‖Ω̂‖∞,1 · δ`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{sample_covariance, CovMatrix};
use crate::error::{LoveError, Result};
use crate::linalg;
use crate::model::{Dataset, PurePartition};
use crate::moments::{estimate_c, FactorCov};
use crate::precision::{estimate_precision, PrecisionEstimate};
use crate::pure::{estimate_pure_rows, find_pure_variables};

pub const DEFAULT_GRID_SIZE: usize = 50;
pub const DEFAULT_GRID_MIN: f64 = 0.25;
pub const DEFAULT_GRID_MAX: f64 = 2.5;

/// How λ is chosen once δ is known.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    /// λ = δ.
    #[default]
    Recommended,
    /// Likelihood-loss cross-validation over a grid in [δ, 3δ].
    CrossValidated,
    /// λ = 2δ′ and μ = 5‖Ω̂‖∞,1 δ′ with the plug-in δ′ from Ĉ.
    Theoretical,
}

impl std::str::FromStr for LambdaMode {
    type Err = LoveError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recommended" => Ok(Self::Recommended),
            "cv" | "cross_validated" => Ok(Self::CrossValidated),
            "theoretical" => Ok(Self::Theoretical),
            other => Err(LoveError::Config(format!("unknown lambda mode `{other}`"))),
        }
    }
}

/// One row of the δ cross-validation trace. Infinite values serialize as
/// JSON `null`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CvPoint {
    pub c: f64,
    pub delta: f64,
    pub k_hat: usize,
    pub i_size: usize,
    /// `+∞` when the grid value yields no usable partition.
    pub cv_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningParams {
    pub delta: f64,
    pub lambda: f64,
    pub mu: f64,
    pub lambda_mode: LambdaMode,
    pub grid_constants: Vec<f64>,
    pub delta_grid: Vec<f64>,
    /// Held-out criterion per grid value; `None` where it was infinite.
    pub cv_curve: Vec<Option<f64>>,
    pub split_seed: u64,
    /// Present when λ was cross-validated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_cv: Option<LambdaSelection>,
    /// Whether the final fit used the full sample after selecting δ.
    pub refit_on_full_sample: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSelection {
    pub lambda: f64,
    pub grid: Vec<f64>,
    /// Held-out loss per grid value; `None` where Ω̂ was not positive definite.
    pub losses: Vec<Option<f64>>,
    pub fell_back: bool,
}

#[derive(Clone, Debug)]
pub struct CvDelta {
    pub delta_cv: f64,
    pub constant: f64,
    pub trace: Vec<CvPoint>,
}

/// `c · √(log(max(p, n)) / n)` per grid constant.
pub fn delta_grid(constants: &[f64], n: usize, p: usize) -> Vec<f64> {
    let rate = ((n.max(p) as f64).ln() / n as f64).sqrt();
    constants.iter().map(|c| c * rate).collect()
}

/// `count` log-spaced constants from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

pub fn default_grid_constants() -> Vec<f64> {
    log_spaced(DEFAULT_GRID_MIN, DEFAULT_GRID_MAX, DEFAULT_GRID_SIZE)
}

/// Seeded shuffle of `0..n`; the first `n / 2` indices form the first half.
pub fn split_halves(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let second = idx.split_off(n / 2);
    (idx, second)
}

/// Off-diagonal Frobenius distance between the held-out covariance on Î and
/// `Â_Î Ĉ Â_Îᵀ`, scaled by `√(|Î|(|Î| − 1))`. `+∞` when `|Î| < 2`.
pub fn cv_criterion(sigma_holdout: &CovMatrix, partition: &PurePartition, c_hat: &FactorCov) -> Result<f64> {
    let pure = partition.pure_set();
    let m = pure.len();
    if m < 2 {
        return Ok(f64::INFINITY);
    }
    let block = partition.signed_block()?;
    let fitted = block.dot(&c_hat.values).dot(&block.t());
    let mut ss = 0.0;
    for (r, &i) in pure.iter().enumerate() {
        for (s, &j) in pure.iter().enumerate() {
            if r != s {
                let d = sigma_holdout.get(i, j) - fitted[[r, s]];
                ss += d * d;
            }
        }
    }
    Ok(ss.sqrt() / ((m * (m - 1)) as f64).sqrt())
}

fn score_delta(fit_sigma: &CovMatrix, holdout: &CovMatrix, c: f64, delta: f64) -> Result<CvPoint> {
    let det = find_pure_variables(fit_sigma, delta)?;
    let mut point = CvPoint {
        c,
        delta,
        k_hat: det.k_hat(),
        i_size: det.partition.pure_set().len(),
        cv_value: f64::INFINITY,
    };
    if det.is_empty() {
        return Ok(point);
    }
    let rows = estimate_pure_rows(fit_sigma, &det.partition)?;
    let c_hat = estimate_c(fit_sigma, &rows.partition)?;
    point.cv_value = cv_criterion(holdout, &rows.partition, &c_hat)?;
    Ok(point)
}

/// Cross-validated δ on a random half split. Partitions are estimated on the
/// second half and scored against the first half's covariance.
pub fn cv_delta(data: &Dataset, grid_constants: &[f64], seed: u64, center: bool) -> Result<CvDelta> {
    let n = data.n();
    if n < 4 {
        return Err(LoveError::Parameter(format!("cross-validation needs n >= 4, got {n}")));
    }
    if grid_constants.is_empty() {
        return Err(LoveError::Parameter("empty δ grid".into()));
    }
    let (first, second) = split_halves(n, seed);
    let sigma_one = sample_covariance(&data.select_rows(&first), center)?;
    let sigma_two = sample_covariance(&data.select_rows(&second), center)?;
    let deltas = delta_grid(grid_constants, n, data.p());
    cv_delta_from_covariances(&sigma_two, &sigma_one, grid_constants, &deltas)
}

/// δ selection from precomputed halves: `fit_sigma` drives the estimation,
/// `holdout` the scoring.
pub fn cv_delta_from_covariances(
    fit_sigma: &CovMatrix,
    holdout: &CovMatrix,
    grid_constants: &[f64],
    deltas: &[f64],
) -> Result<CvDelta> {
    let trace: Vec<CvPoint> = grid_constants
        .par_iter()
        .zip(deltas.par_iter())
        .map(|(&c, &d)| score_delta(fit_sigma, holdout, c, d))
        .collect::<Result<Vec<_>>>()?;
    let best = trace
        .iter()
        .filter(|pt| pt.cv_value.is_finite())
        .min_by(|a, b| a.cv_value.total_cmp(&b.cv_value).then(a.c.total_cmp(&b.c)));
    match best {
        Some(pt) => Ok(CvDelta {
            delta_cv: pt.delta,
            constant: pt.c,
            trace: trace.clone(),
        }),
        None => Err(LoveError::CvFailed {
            message: "no grid value produced a pure partition; widen the δ grid towards smaller constants"
                .into(),
            trace,
        }),
    }
}

/// `L(Ω, C) = ⟨Ω, C⟩ − log det Ω`, or `None` when Ω is not positive definite.
pub fn likelihood_loss(omega: &ndarray::Array2<f64>, c: &ndarray::Array2<f64>) -> Option<f64> {
    let log_det = linalg::log_det_pd(omega.view())?;
    let inner: f64 = omega.iter().zip(c.iter()).map(|(a, b)| a * b).sum();
    Some(inner - log_det)
}

/// Evenly spaced grid on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Fits Ω̂ on `c_train` for each λ in `grid` and scores it against `c_test`.
/// Falls back to `fallback` if no candidate is positive definite.
pub fn cv_lambda(c_train: &FactorCov, c_test: &FactorCov, grid: &[f64], fallback: f64) -> Result<LambdaSelection> {
    if c_train.k() != c_test.k() {
        return Err(LoveError::Dimension("Ĉ halves differ in size".into()));
    }
    let losses: Vec<Option<f64>> = grid
        .par_iter()
        .map(|&lambda| {
            estimate_precision(c_train, lambda).map(|est| likelihood_loss(&est.omega, &c_test.values))
        })
        .collect::<Result<Vec<_>>>()?;
    let best = losses
        .iter()
        .zip(grid)
        .filter_map(|(l, g)| l.map(|v| (v, *g)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(match best {
        Some((_, lambda)) => LambdaSelection {
            lambda,
            grid: grid.to_vec(),
            losses,
            fell_back: false,
        },
        None => LambdaSelection {
            lambda: fallback,
            grid: grid.to_vec(),
            losses,
            fell_back: true,
        },
    })
}

/// `μ = ‖Ω̂‖∞,1 · δ`.
pub fn choose_mu(omega: &PrecisionEstimate, delta: f64) -> f64 {
    omega.inf_one_norm() * delta
}

/// `μ = 5 ‖Ω̂‖∞,1 · δ′`.
pub fn choose_mu_theoretical(omega: &PrecisionEstimate, delta_prime: f64) -> f64 {
    5.0 * omega.inf_one_norm() * delta_prime
}
