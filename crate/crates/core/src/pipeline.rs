//! End-to-end estimation: covariance, δ selection, pure variables, Ĉ, Ω̂,
//! non-pure rows, Â and clusters.

use serde::{Deserialize, Serialize};

use crate::clusters::{clusters_from_a, ClusterSet};
use crate::covariance::{sample_covariance, CovMatrix};
use crate::error::{LoveError, Result};
use crate::linalg;
use crate::model::{self, Dataset, PurePartition};
use crate::moments::{estimate_c, estimate_theta_all, FactorCov};
use crate::precision::{estimate_precision, PrecisionEstimate};
use crate::pure::{estimate_pure_rows, find_pure_variables, PureDetection};
use crate::rows::{assemble_a, LoadingEstimate, RowEstimate, RowMethod};
use crate::tuning::{
    self, choose_mu, choose_mu_theoretical, cv_delta, cv_lambda, default_grid_constants, linear_grid, split_halves,
    CvPoint, LambdaMode, LambdaSelection, TuningParams,
};

pub const DEFAULT_SPLIT_SEED: u64 = 20_180_507;

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub center: bool,
    /// Fixed δ; skips cross-validation.
    pub delta: Option<f64>,
    /// Fixed λ; overrides `lambda_mode`.
    pub lambda: Option<f64>,
    /// Fixed μ.
    pub mu: Option<f64>,
    pub grid_constants: Vec<f64>,
    pub split_seed: u64,
    pub lambda_mode: LambdaMode,
    /// Number of λ values tried on `[δ, 3δ]` in cross-validated mode.
    pub lambda_grid_points: usize,
    pub row_method: RowMethod,
    /// Entries of Â at or below this magnitude are left out of clusters.
    pub zero_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            center: true,
            delta: None,
            lambda: None,
            mu: None,
            grid_constants: default_grid_constants(),
            split_seed: DEFAULT_SPLIT_SEED,
            lambda_mode: LambdaMode::Recommended,
            lambda_grid_points: 5,
            row_method: RowMethod::SoftProject,
            zero_tol: 0.0,
        }
    }
}

impl FitConfig {
    /// Fixed tuning for exact-covariance runs.
    pub fn fixed(delta: f64, lambda: f64, mu: f64) -> Self {
        Self {
            delta: Some(delta),
            lambda: Some(lambda),
            mu: Some(mu),
            center: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("delta", self.delta), ("lambda", self.lambda), ("mu", self.mu)] {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(LoveError::Config(format!("{name} must be finite and nonnegative, got {v}")));
                }
            }
        }
        if self.lambda == Some(0.0) {
            return Err(LoveError::Config("lambda must be positive".into()));
        }
        if self.delta.is_none() && self.grid_constants.is_empty() {
            return Err(LoveError::Config("δ grid is empty".into()));
        }
        if self.grid_constants.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return Err(LoveError::Config("grid constants must be positive".into()));
        }
        if self.lambda_mode == LambdaMode::CrossValidated && self.lambda.is_none() && self.lambda_grid_points == 0 {
            return Err(LoveError::Config("λ grid is empty".into()));
        }
        if !(self.zero_tol >= 0.0) {
            return Err(LoveError::Config("zero tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Everything produced by one fit.
#[derive(Clone, Debug)]
pub struct Fit {
    pub loading: LoadingEstimate,
    pub clusters: ClusterSet,
    pub tuning: TuningParams,
    pub c_hat: FactorCov,
    pub precision: PrecisionEstimate,
    pub detection: PureDetection,
    pub cv_trace: Vec<CvPoint>,
    pub warnings: Vec<String>,
    pub names: Option<Vec<String>>,
}

impl Fit {
    pub fn k_hat(&self) -> usize {
        self.loading.k_hat
    }

    pub fn report(&self) -> FitReport {
        let sep = model::separation(self.c_hat.values.view());
        let named_clusters = self.names.as_ref().map(|names| {
            self.clusters
                .groups
                .iter()
                .map(|g| g.iter().map(|&i| names[i].clone()).collect())
                .collect()
        });
        FitReport {
            k: self.k_hat(),
            pure_partition: self.loading.partition.clone(),
            a_hat: linalg::rows_of(self.loading.a_hat.view()),
            clusters: self.clusters.clone(),
            tuning: self.tuning.clone(),
            diagnostics: FitDiagnostics {
                c_hat: linalg::rows_of(self.c_hat.values.view()),
                omega_hat: linalg::rows_of(self.precision.omega.view()),
                t_hat: self.precision.t_hat,
                lp_residual: self.precision.residual,
                separation_hat: finite(sep),
                validity_bound: finite(2.0 * self.tuning.mu + 4.0 * self.tuning.delta / sep),
                row_method: self.loading.row_method,
                pure_scan: self.detection.diagnostic_json(),
                warnings: self.warnings.clone(),
                variable_names: self.names.clone(),
                named_clusters,
            },
        }
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// The JSON artifact of a fit. Indices are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    #[serde(rename = "K")]
    pub k: usize,
    pub pure_partition: PurePartition,
    #[serde(rename = "A_hat")]
    pub a_hat: Vec<Vec<f64>>,
    pub clusters: ClusterSet,
    pub tuning: TuningParams,
    pub diagnostics: FitDiagnostics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    #[serde(rename = "C_hat")]
    pub c_hat: Vec<Vec<f64>>,
    pub omega_hat: Vec<Vec<f64>>,
    pub t_hat: f64,
    pub lp_residual: f64,
    /// Δ(Ĉ); `None` when K̂ = 1.
    pub separation_hat: Option<f64>,
    /// `2μ + 4δ/Δ(Ĉ)`, which should be below 1 for the rate guarantees.
    pub validity_bound: Option<f64>,
    pub row_method: RowMethod,
    pub pure_scan: serde_json::Value,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub named_clusters: Option<Vec<Vec<String>>>,
}

impl FitReport {
    pub fn a_hat(&self) -> Result<ndarray::Array2<f64>> {
        if self.a_hat.is_empty() {
            return Ok(ndarray::Array2::zeros((0, self.k)));
        }
        linalg::from_rows(&self.a_hat)
    }
}

/// Runs the whole procedure on a data matrix. δ is cross-validated unless
/// fixed in `config`; the final fit always uses the full-sample covariance.
pub fn fit_pipeline(data: &Dataset, config: &FitConfig) -> Result<Fit> {
    config.validate()?;
    let sigma = sample_covariance(data, config.center)?;
    let (delta, grid, trace) = match config.delta {
        Some(d) => (d, Vec::new(), Vec::new()),
        None => {
            let cv = cv_delta(data, &config.grid_constants, config.split_seed, config.center)?;
            (cv.delta_cv, config.grid_constants.clone(), cv.trace)
        }
    };
    let mut fit = fit_stages(&sigma, delta, config, Some(data)).map_err(|e| match e {
        LoveError::NoPureVariables(message) if !trace.is_empty() => LoveError::CvFailed {
            message,
            trace: trace.clone(),
        },
        other => other,
    })?;
    fit.tuning.delta_grid = tuning::delta_grid(&grid, data.n(), data.p());
    fit.tuning.grid_constants = grid;
    fit.tuning.cv_curve = trace.iter().map(|pt| finite(pt.cv_value)).collect();
    fit.tuning.refit_on_full_sample = config.delta.is_none();
    fit.cv_trace = trace;
    fit.names = data.names.clone();
    Ok(fit)
}

/// Runs the procedure on a given covariance matrix with a fixed δ. Used for
/// exact-covariance runs; cross-validated λ is unavailable here.
pub fn fit_covariance(sigma: &CovMatrix, delta: f64, config: &FitConfig) -> Result<Fit> {
    config.validate()?;
    fit_stages(sigma, delta, config, None)
}

fn fit_stages(sigma: &CovMatrix, delta: f64, config: &FitConfig, data: Option<&Dataset>) -> Result<Fit> {
    let detection = find_pure_variables(sigma, delta)?;
    if detection.is_empty() {
        return Err(LoveError::NoPureVariables(format!(
            "no pure variables at δ = {delta:.6}; the covariance shows no factor structure at this threshold"
        )));
    }
    let pure_rows = estimate_pure_rows(sigma, &detection.partition)?;
    let partition = pure_rows.partition.clone();
    let c_hat = estimate_c(sigma, &partition)?;
    let mut warnings = pure_rows.warnings.clone();

    let mode = config.lambda_mode;
    let delta_prime = if mode == LambdaMode::Theoretical {
        let sep = model::separation(c_hat.values.view());
        if !(sep > 0.0) {
            return Err(LoveError::Numeric(format!(
                "Δ(Ĉ) = {sep} is not positive; the theoretical tuning is undefined"
            )));
        }
        Some(model::delta_prime(c_hat.values.view(), delta))
    } else {
        None
    };
    let mut lambda_cv: Option<LambdaSelection> = None;
    let lambda = match (config.lambda, mode, delta_prime) {
        (Some(l), _, _) => l,
        (None, LambdaMode::Theoretical, Some(dp)) => 2.0 * dp,
        (None, LambdaMode::CrossValidated, _) => {
            let data = data.ok_or_else(|| LoveError::Config("cross-validated λ needs a data matrix".into()))?;
            let sel = select_lambda(data, &partition, delta, config)?;
            if sel.fell_back {
                warnings.push("no λ candidate gave a positive definite Ω̂; using λ = δ".into());
            }
            let l = sel.lambda;
            lambda_cv = Some(sel);
            l
        }
        _ => delta,
    };
    if !(lambda > 0.0) {
        return Err(LoveError::Parameter(format!(
            "λ must be positive, got {lambda}; set λ explicitly when δ = 0"
        )));
    }
    let precision = estimate_precision(&c_hat, lambda)?;
    let mu = match (config.mu, delta_prime) {
        (Some(m), _) => m,
        (None, Some(dp)) => choose_mu_theoretical(&precision, dp),
        (None, None) => choose_mu(&precision, delta),
    };

    let (rest, theta) = estimate_theta_all(sigma, &partition)?;
    // Rows of Θ Ω̂ are β̄ʲᵀ since Ω̂ is symmetric.
    let beta_bar = theta.dot(&precision.omega);
    let rows = rest
        .iter()
        .zip(beta_bar.rows())
        .map(|(&j, b)| (j, RowEstimate::new(b.to_owned(), mu, config.row_method)))
        .collect();
    let mut loading = assemble_a(&partition, &rows, sigma.p(), partition.k())?;
    loading.row_method = config.row_method;
    let clusters = clusters_from_a(loading.a_hat.view(), config.zero_tol);

    let tuning = TuningParams {
        delta,
        lambda,
        mu,
        lambda_mode: mode,
        grid_constants: Vec::new(),
        delta_grid: Vec::new(),
        cv_curve: Vec::new(),
        split_seed: config.split_seed,
        lambda_cv,
        refit_on_full_sample: false,
    };
    Ok(Fit {
        loading,
        clusters,
        tuning,
        c_hat,
        precision,
        detection,
        cv_trace: Vec::new(),
        warnings,
        names: None,
    })
}

/// λ chosen by likelihood loss: Ω̂ fitted on the first half's Ĉ, scored on
/// the second's. Both use the full-sample partition and signs.
fn select_lambda(data: &Dataset, partition: &PurePartition, delta: f64, config: &FitConfig) -> Result<LambdaSelection> {
    let (first, second) = split_halves(data.n(), config.split_seed);
    let c_train = estimate_c(&sample_covariance(&data.select_rows(&first), config.center)?, partition)?;
    let c_test = estimate_c(&sample_covariance(&data.select_rows(&second), config.center)?, partition)?;
    let grid = linear_grid(delta, 3.0 * delta, config.lambda_grid_points);
    cv_lambda(&c_train, &c_test, &grid, delta)
}
