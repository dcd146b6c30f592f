//! The δ cross-validation curve on one simulated data set.

use love::model::FactorModel;
use love::tuning::{cv_delta, default_grid_constants};

fn main() -> love::Result<()> {
    let model = FactorModel::benchmark_design(200, 11)?;
    let data = model.sample(1000, 12)?;
    let cv = cv_delta(&data, &default_grid_constants(), 3, true)?;
    println!("{:>6} {:>8} {:>5} {:>5} {:>8}", "c", "delta", "K", "|I|", "CV");
    for pt in cv.trace.iter().step_by(5) {
        println!("{:6.3} {:8.4} {:5} {:5} {:8.4}", pt.c, pt.delta, pt.k_hat, pt.i_size, pt.cv_value);
    }
    println!("selected c = {:.3}, delta = {:.4}", cv.constant, cv.delta_cv);
    Ok(())
}
