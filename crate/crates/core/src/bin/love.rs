use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use love::eval::{evaluate, EvalOptions};
use love::io::{self, ModelFile};
use love::model::FactorModel;
use love::pipeline::{fit_pipeline, FitConfig, FitReport};
use love::simulate::{run_simulation, write_replications_csv, write_summary_csv, SimConfig};
use love::LoveError;

#[derive(Parser)]
#[command(name = "love", version, about = "Sparse latent factor model estimation and overlapping clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replicated runs on the benchmark design.
    Simulate(SimulateArgs),
    /// Fit a data matrix.
    Fit(FitArgs),
    /// Compare a fit against a ground-truth model.
    Eval(EvalArgs),
}

#[derive(Args)]
struct TuningArgs {
    /// Flat key = value config file; command-line flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// recommended, cv or theoretical.
    #[arg(long)]
    lambda_mode: Option<String>,
    /// Comma-separated δ grid constants.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    split_seed: Option<u64>,
    /// soft_project or hard_threshold.
    #[arg(long)]
    row_method: Option<String>,
    #[arg(long, conflicts_with = "no_center")]
    center: bool,
    #[arg(long)]
    no_center: bool,
}

impl TuningArgs {
    fn fit_config(&self) -> love::Result<FitConfig> {
        let mut cfg = FitConfig::default();
        if let Some(path) = &self.config {
            let map = io::load_config(path)?;
            if let Some(k) = map.keys().find(|k| !io::FIT_KEYS.contains(&k.as_str())) {
                return Err(LoveError::Config(format!("unknown config key `{k}`")));
            }
            io::apply_fit_config(&map, &mut cfg)?;
        }
        if self.delta.is_some() {
            cfg.delta = self.delta;
        }
        if self.lambda.is_some() {
            cfg.lambda = self.lambda;
        }
        if self.mu.is_some() {
            cfg.mu = self.mu;
        }
        if let Some(m) = &self.lambda_mode {
            cfg.lambda_mode = m.parse()?;
        }
        if let Some(g) = &self.grid {
            cfg.grid_constants = io::parse_list(g)?;
        }
        if let Some(s) = self.split_seed {
            cfg.split_seed = s;
        }
        if let Some(r) = &self.row_method {
            cfg.row_method = r.parse()?;
        }
        if self.center {
            cfg.center = true;
        }
        if self.no_center {
            cfg.center = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 200)]
    p: usize,
    /// Sample sizes, comma-separated or repeated.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Also write each replication's model (JSON) and data (CSV).
    #[arg(long)]
    save_data: bool,
    #[arg(long)]
    allow_large: bool,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    /// The first line holds data, not column names.
    #[arg(long)]
    no_header: bool,
    #[arg(long)]
    out: PathBuf,
    /// Write the δ cross-validation trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    allow_large: bool,
    #[command(flatten)]
    tuning: TuningArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    fit: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Entries at or below this magnitude count as zero.
    #[arg(long, default_value_t = 0.0)]
    zero_tol: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Eval(a) => eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_failure(&e);
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &LoveError) -> u8 {
    match e {
        LoveError::NoPureVariables(_)
        | LoveError::CvFailed { .. }
        | LoveError::Solver { .. }
        | LoveError::Numeric(_) => 2,
        _ => 1,
    }
}

/// Estimation failures go to stderr as one JSON object so that callers can
/// read the attached CV trace.
fn report_failure(e: &LoveError) {
    if exit_code(e) == 2 {
        let trace = match e {
            LoveError::CvFailed { trace, .. } => serde_json::to_value(trace).unwrap_or_default(),
            _ => serde_json::Value::Null,
        };
        let doc = serde_json::json!({ "error": e.to_string(), "cv_trace": trace });
        eprintln!("{doc}");
    } else {
        eprintln!("error: {e}");
    }
}

fn simulate(a: SimulateArgs) -> love::Result<()> {
    io::check_variable_count(a.p, a.allow_large)?;
    let mut cfg = SimConfig::new(a.p, a.n.clone(), a.reps, a.seed);
    cfg.fit = a.tuning.fit_config()?;
    cfg.validate()?;
    fs::create_dir_all(&a.out)?;
    let report = run_simulation(&cfg)?;
    write_summary_csv(&report, File::create(a.out.join("summary.csv"))?)?;
    write_replications_csv(&report, File::create(a.out.join("replications.csv"))?)?;
    io::write_json(&a.out.join("report.json"), &report)?;
    if a.save_data {
        for r in &report.results {
            let model = FactorModel::benchmark_design(a.p, r.design_seed)?;
            let model_path = a.out.join(format!("model_rep{}.json", r.replication));
            if !model_path.exists() {
                io::write_json(&model_path, &ModelFile::from_model(&model))?;
            }
            let names = (1..=a.p).map(|j| format!("x{j}")).collect();
            let data = model.sample(r.n, r.sample_seed)?.with_names(names)?;
            let path = a.out.join(format!("data_n{}_rep{}.csv", r.n, r.replication));
            io::write_csv_matrix(&data, BufWriter::new(File::create(path)?))?;
        }
    }
    for s in &report.summary {
        println!(
            "n={} K-correct={:.2} l1={} frobenius={} failures={}",
            s.n,
            s.k_correct_fraction,
            fmt(s.l1_mean),
            fmt(s.frobenius_mean),
            s.failures
        );
    }
    Ok(())
}

fn fmt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.4}"))
}

fn fit(a: FitArgs) -> love::Result<()> {
    let cfg = a.tuning.fit_config()?;
    let data = io::load_csv(&a.input, !a.no_header)?;
    io::check_variable_count(data.p(), a.allow_large)?;
    let outcome = fit_pipeline(&data, &cfg);
    if let Some(path) = &a.trace {
        let trace = match &outcome {
            Ok(f) => Some(f.cv_trace.as_slice()),
            Err(LoveError::CvFailed { trace, .. }) => Some(trace.as_slice()),
            Err(_) => None,
        };
        if let Some(t) = trace {
            io::write_cv_trace_csv(t, File::create(path)?)?;
        }
    }
    let fit = outcome?;
    io::write_json(&a.out, &fit.report())?;
    println!(
        "K_hat={} pure={} delta={:.6} lambda={:.6} mu={:.6}",
        fit.k_hat(),
        fit.detection.partition.pure_set().len(),
        fit.tuning.delta,
        fit.tuning.lambda,
        fit.tuning.mu
    );
    Ok(())
}

fn eval(a: EvalArgs) -> love::Result<()> {
    let report: FitReport = io::read_json(&a.fit)?;
    let truth: ModelFile = io::read_json(&a.truth)?;
    let model = truth.to_model()?;
    let a_hat = report.a_hat()?;
    let options = EvalOptions {
        zero_tol: a.zero_tol,
        delta_mu: Some((report.tuning.delta, report.tuning.mu)),
    };
    let out = evaluate(a_hat.view(), &model, options)?;
    io::write_json(&a.out, &out)?;
    println!("K={} K_hat={} scaled_l1={}", out.k, out.k_hat, fmt(out.scaled_l1));
    Ok(())
}
