//! Fit a CSV file with named columns and print the overlapping clusters.

use std::fs::File;

use love::io::{load_csv, write_csv_matrix};
use love::model::FactorModel;
use love::pipeline::{fit_pipeline, FitConfig};

fn main() -> love::Result<()> {
    let path = match std::env::args().nth(1) {
        Some(p) => p.into(),
        None => {
            // No input given: write a synthetic file first.
            let model = FactorModel::benchmark_design(200, 5)?;
            let names = (1..=200).map(|j| format!("gene{j}")).collect();
            let data = model.sample(1000, 6)?.with_names(names)?;
            let path = std::env::temp_dir().join("love_fit_csv_example.csv");
            write_csv_matrix(&data, File::create(&path)?)?;
            path
        }
    };
    let data = load_csv(&path, true)?;
    let fit = fit_pipeline(&data, &FitConfig::default())?;
    let report = fit.report();
    println!("K_hat = {}, delta = {:.4}, mu = {:.4}", report.k, report.tuning.delta, report.tuning.mu);
    if let Some(named) = &report.diagnostics.named_clusters {
        for (a, g) in named.iter().enumerate().take(5) {
            println!("cluster {}: {}", a + 1, g.join(" "));
        }
    }
    Ok(())
}
