//! Alignment and metrics: a permuted, sign-flipped and perturbed copy of A
//! is matched back to the truth before errors are computed.

use love::eval::{align_signed_permutation, evaluate, EvalOptions};
use love::fixtures::overlap_example;

fn main() -> love::Result<()> {
    let model = overlap_example(1.0);
    // Columns reordered (2, 0, 1), the middle one negated, one entry nudged.
    let mut a_hat = model.a.select(ndarray::Axis(1), &[2, 0, 1]);
    a_hat.column_mut(1).mapv_inplace(|v| -v);
    a_hat[[6, 1]] += 0.05;
    let alignment = align_signed_permutation(a_hat.view(), model.a.view())?;
    println!("alignment: {alignment:?}");
    let report = evaluate(a_hat.view(), &model, EvalOptions::default())?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
