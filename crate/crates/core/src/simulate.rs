//! Replicated simulation runs on the benchmark design.
//!
//! Each replication draws a fresh design from its own seed and reuses it for
//! every sample size, so results at different `n` are paired.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LoveError, Result};
use crate::eval::{evaluate, EvalOptions, EvalReport};
use crate::model::FactorModel;
use crate::pipeline::{fit_pipeline, FitConfig};

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub p: usize,
    pub ns: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub fit: FitConfig,
}

impl SimConfig {
    pub fn new(p: usize, ns: Vec<usize>, replications: usize, seed: u64) -> Self {
        Self {
            p,
            ns,
            replications,
            seed,
            fit: FitConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.replications == 0 || self.ns.is_empty() || self.ns.contains(&0) {
            return Err(LoveError::Config("p, n and replications must be positive".into()));
        }
        self.fit.validate()
    }
}

/// SplitMix64 finalizer; spreads (base, stream, index) into independent seeds.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const DESIGN_STREAM: u64 = 1;
const SAMPLE_STREAM: u64 = 2;
const SPLIT_STREAM: u64 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub replication: usize,
    pub n: usize,
    pub design_seed: u64,
    pub sample_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_hat: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<EvalReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub seconds: f64,
}

impl ReplicationResult {
    pub fn scaled_l1(&self) -> Option<f64> {
        self.report.as_ref().and_then(|r| r.scaled_l1)
    }

    pub fn scaled_frobenius(&self) -> Option<f64> {
        self.report.as_ref().and_then(|r| r.scaled_frobenius)
    }

    pub fn k_correct(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.k_correct)
    }
}

/// Mean and sample standard deviation over replications for one `(p, n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub p: usize,
    pub n: usize,
    pub replications: usize,
    pub failures: usize,
    pub k_correct_fraction: f64,
    pub l1_mean: Option<f64>,
    pub l1_std: Option<f64>,
    pub frobenius_mean: Option<f64>,
    pub frobenius_std: Option<f64>,
    pub tfpp_mean: Option<f64>,
    pub tfnp_mean: Option<f64>,
    pub dfpp_mean: Option<f64>,
    pub dfnp_mean: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub p: usize,
    pub seed: u64,
    pub results: Vec<ReplicationResult>,
    pub summary: Vec<SummaryRow>,
}

/// Runs one replication at one sample size. Estimation failures are
/// recorded in the result rather than returned.
pub fn run_replication(config: &SimConfig, replication: usize, n: usize) -> ReplicationResult {
    let start = Instant::now();
    let design_seed = derive_seed(config.seed, DESIGN_STREAM, replication as u64);
    let sample_seed = derive_seed(config.seed, SAMPLE_STREAM, replication as u64);
    let mut result = ReplicationResult {
        replication,
        n,
        design_seed,
        sample_seed,
        k_hat: None,
        delta: None,
        report: None,
        error: None,
        seconds: 0.0,
    };
    let outcome = (|| -> Result<(usize, f64, EvalReport)> {
        let model = FactorModel::benchmark_design(config.p, design_seed)?;
        let data = model.sample(n, sample_seed)?;
        let mut fit_cfg = config.fit.clone();
        fit_cfg.split_seed = derive_seed(config.seed, SPLIT_STREAM, replication as u64);
        let fit = fit_pipeline(&data, &fit_cfg)?;
        let options = EvalOptions {
            zero_tol: fit_cfg.zero_tol,
            delta_mu: Some((fit.tuning.delta, fit.tuning.mu)),
        };
        let report = evaluate(fit.loading.a_hat.view(), &model, options)?;
        Ok((fit.k_hat(), fit.tuning.delta, report))
    })();
    match outcome {
        Ok((k, d, r)) => {
            result.k_hat = Some(k);
            result.delta = Some(d);
            result.report = Some(r);
        }
        Err(e) => result.error = Some(e.to_string()),
    }
    result.seconds = start.elapsed().as_secs_f64();
    result
}

/// All replications for all sample sizes, in parallel. Results are ordered
/// by sample size, then replication.
pub fn run_simulation(config: &SimConfig) -> Result<SimulationReport> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = config
        .ns
        .iter()
        .flat_map(|&n| (0..config.replications).map(move |r| (n, r)))
        .collect();
    let results: Vec<ReplicationResult> = jobs
        .par_iter()
        .map(|&(n, r)| run_replication(config, r, n))
        .collect();
    let summary = config
        .ns
        .iter()
        .map(|&n| summarize(config.p, n, results.iter().filter(|r| r.n == n)))
        .collect();
    Ok(SimulationReport {
        p: config.p,
        seed: config.seed,
        results,
        summary,
    })
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    match values.len() {
        0 => (None, None),
        1 => (Some(values[0]), None),
        m => {
            let mean = values.iter().sum::<f64>() / m as f64;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            (Some(mean), Some(var.sqrt()))
        }
    }
}

pub fn summarize<'a>(p: usize, n: usize, results: impl Iterator<Item = &'a ReplicationResult>) -> SummaryRow {
    let results: Vec<&ReplicationResult> = results.collect();
    let collect = |f: &dyn Fn(&EvalReport) -> Option<f64>| -> Vec<f64> {
        results.iter().filter_map(|r| r.report.as_ref().and_then(f)).collect()
    };
    let (l1_mean, l1_std) = mean_std(&collect(&|r| r.scaled_l1));
    let (frobenius_mean, frobenius_std) = mean_std(&collect(&|r| r.scaled_frobenius));
    let tfpp = mean_std(&collect(&|r| r.clusters.as_ref().map(|c| c.tfpp))).0;
    let tfnp = mean_std(&collect(&|r| r.clusters.as_ref().map(|c| c.tfnp))).0;
    let dfpp = mean_std(&collect(&|r| r.direction.as_ref().map(|d| d.dfpp))).0;
    let dfnp = mean_std(&collect(&|r| r.direction.as_ref().map(|d| d.dfnp))).0;
    let correct = results.iter().filter(|r| r.k_correct()).count();
    SummaryRow {
        p,
        n,
        replications: results.len(),
        failures: results.iter().filter(|r| r.error.is_some()).count(),
        k_correct_fraction: if results.is_empty() {
            0.0
        } else {
            correct as f64 / results.len() as f64
        },
        l1_mean,
        l1_std,
        frobenius_mean,
        frobenius_std,
        tfpp_mean: tfpp,
        tfnp_mean: tfnp,
        dfpp_mean: dfpp,
        dfnp_mean: dfnp,
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Aggregate table, one row per sample size.
pub fn write_summary_csv<W: Write>(report: &SimulationReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "p",
        "n",
        "replications",
        "failures",
        "k_correct_fraction",
        "l1_mean",
        "l1_std",
        "frobenius_mean",
        "frobenius_std",
        "tfpp_mean",
        "tfnp_mean",
        "dfpp_mean",
        "dfnp_mean",
    ])?;
    for s in &report.summary {
        w.write_record([
            s.p.to_string(),
            s.n.to_string(),
            s.replications.to_string(),
            s.failures.to_string(),
            format!("{:.6}", s.k_correct_fraction),
            cell(s.l1_mean),
            cell(s.l1_std),
            cell(s.frobenius_mean),
            cell(s.frobenius_std),
            cell(s.tfpp_mean),
            cell(s.tfnp_mean),
            cell(s.dfpp_mean),
            cell(s.dfnp_mean),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per replication.
pub fn write_replications_csv<W: Write>(report: &SimulationReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "replication",
        "n",
        "design_seed",
        "sample_seed",
        "k_hat",
        "delta",
        "scaled_l1",
        "scaled_frobenius",
        "error",
    ])?;
    for r in &report.results {
        w.write_record([
            r.replication.to_string(),
            r.n.to_string(),
            r.design_seed.to_string(),
            r.sample_seed.to_string(),
            r.k_hat.map(|k| k.to_string()).unwrap_or_default(),
            cell(r.delta),
            cell(r.scaled_l1()),
            cell(r.scaled_frobenius()),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
