//! The precision-matrix linear program against the plain inverse.

use love::linalg::{inf_one_norm, inverse, max_abs};
use love::moments::FactorCov;
use love::precision::estimate_precision;
use ndarray::array;

fn main() -> love::Result<()> {
    let c = FactorCov {
        values: array![[2.0, 0.3, -0.1], [0.3, 1.5, 0.2], [-0.1, 0.2, 1.0]],
    };
    let inv = inverse(c.values.view())?;
    println!("||C^-1||_inf,1 = {:.6}", inf_one_norm(inv.view()));
    for lambda in [1e-8, 0.01, 0.1, 0.5] {
        let est = estimate_precision(&c, lambda)?;
        println!(
            "lambda = {lambda:<6}: t_hat = {:.6}, ||Omega - C^-1||_max = {:.2e}, residual = {:.2e}",
            est.t_hat,
            max_abs((&est.omega - &inv).view()),
            est.residual
        );
    }
    Ok(())
}
