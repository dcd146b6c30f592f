//! Without pure variables the loading matrix is not identifiable: a
//! rotation that preserves C changes a row's sparsity pattern.

use love::fixtures::rotation_counterexample;
use love::linalg::{l1, max_abs};

fn main() {
    let ex = rotation_counterexample();
    let qcq = ex.q.dot(&ex.c).dot(&ex.q.t());
    println!("max |Q C Q' - C| = {:.1e}", max_abs((&qcq - &ex.c).view()));
    let rotated = ex.row.dot(&ex.q);
    println!("row         = {:.6}, l1 = {:.6}", ex.row, l1(ex.row.view()));
    println!("row Q       = {:.6}, l1 = {:.6}", rotated, l1(rotated.view()));
    println!("closed form = {:.6}", ex.rotated_row);
}
