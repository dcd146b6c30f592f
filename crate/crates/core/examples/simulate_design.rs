//! Small replicated sweep on the benchmark design (p = 200, K = 20).

use love::simulate::{run_simulation, write_summary_csv, SimConfig};

fn main() -> love::Result<()> {
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let cfg = SimConfig::new(200, vec![300, 1000], reps, 7);
    let report = run_simulation(&cfg)?;
    for r in &report.results {
        println!(
            "n = {:4}, rep {}: K_hat = {:?}, scaled l1 = {:?}",
            r.n,
            r.replication,
            r.k_hat,
            r.scaled_l1()
        );
    }
    write_summary_csv(&report, std::io::stdout())
}
