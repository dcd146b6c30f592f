//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use love::lp::{LinearProgram, Relation};
use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `min cᵀx` over `G x ≤ h`, `x ≥ 0`, by enumerating every vertex. Returns
/// `None` when no vertex is feasible. Only meaningful for bounded programs.
pub fn vertex_enumeration(c: &[f64], g: &[Vec<f64>], h: &[f64]) -> Option<f64> {
    let n = c.len();
    // All constraints as rows `a x ≤ b`, including `−x ≤ 0`.
    let mut rows: Vec<(Vec<f64>, f64)> = g.iter().cloned().zip(h.iter().copied()).collect();
    for i in 0..n {
        let mut r = vec![0.0; n];
        r[i] = -1.0;
        rows.push((r, 0.0));
    }
    let mut best: Option<f64> = None;
    let mut pick = vec![0usize; n];
    fn next(pick: &mut [usize], m: usize) -> bool {
        let n = pick.len();
        let mut i = n;
        while i > 0 {
            i -= 1;
            if pick[i] < m - (n - i) {
                pick[i] += 1;
                for j in i + 1..n {
                    pick[j] = pick[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
    for (i, p) in pick.iter_mut().enumerate() {
        *p = i;
    }
    loop {
        let a = DMatrix::from_fn(n, n, |r, col| rows[pick[r]].0[col]);
        let b = DVector::from_fn(n, |r, _| rows[pick[r]].1);
        if let Some(x) = a.lu().solve(&b) {
            let feasible = rows
                .iter()
                .all(|(r, rhs)| r.iter().zip(x.iter()).map(|(u, v)| u * v).sum::<f64>() <= rhs + 1e-9);
            if feasible && x.iter().all(|v| v.is_finite()) {
                let val: f64 = c.iter().zip(x.iter()).map(|(u, v)| u * v).sum();
                best = Some(best.map_or(val, |b: f64| b.min(val)));
            }
        }
        if !next(&mut pick, rows.len()) {
            break;
        }
    }
    best
}

pub fn dense_lp(c: &[f64], g: &[Vec<f64>], h: &[f64]) -> LinearProgram {
    let mut lp = LinearProgram::new(c.to_vec());
    for (row, &rhs) in g.iter().zip(h) {
        lp.add(row.iter().copied().enumerate().collect(), Relation::Le, rhs);
    }
    lp
}

/// `min ‖β‖₁` subject to `‖β − β̄‖∞ ≤ μ`, written as an LP in `(u, v)` with
/// `β = u − v`.
pub fn soft_projection_lp(beta_bar: &[f64], mu: f64) -> LinearProgram {
    let k = beta_bar.len();
    let mut lp = LinearProgram::new(vec![1.0; 2 * k]);
    for (a, &b) in beta_bar.iter().enumerate() {
        lp.add(vec![(a, 1.0), (k + a, -1.0)], Relation::Le, b + mu);
        lp.add(vec![(a, 1.0), (k + a, -1.0)], Relation::Ge, b - mu);
    }
    lp
}

/// Exhaustive minimum of `‖A − Â P‖_F²` over all signed permutations.
/// Returns the loss and `(perm, signs)` in the convention that aligned
/// column `b` is `signs[b] · Â[:, perm[b]]`.
pub fn brute_force_alignment(a_hat: &Array2<f64>, a: &Array2<f64>) -> (f64, Vec<usize>, Vec<i8>) {
    let k = a.ncols();
    let mut best = (f64::INFINITY, Vec::new(), Vec::new());
    let mut perm: Vec<usize> = (0..k).collect();
    permutations(&mut perm, 0, &mut |perm| {
        for mask in 0..(1u32 << k) {
            let signs: Vec<i8> = (0..k).map(|b| if mask >> b & 1 == 1 { -1 } else { 1 }).collect();
            let mut loss = 0.0;
            for b in 0..k {
                for i in 0..a.nrows() {
                    let d = a[[i, b]] - signs[b] as f64 * a_hat[[i, perm[b]]];
                    loss += d * d;
                }
            }
            if loss < best.0 {
                best = (loss, perm.to_vec(), signs);
            }
        }
    });
    best
}

fn permutations(v: &mut Vec<usize>, start: usize, f: &mut dyn FnMut(&[usize])) {
    if start == v.len() {
        f(v);
        return;
    }
    for i in start..v.len() {
        v.swap(start, i);
        permutations(v, start + 1, f);
        v.swap(start, i);
    }
}

/// Random symmetric positive-definite K x K matrix with positive
/// separation: strictly diagonally dominant with off-diagonal entries well
/// below the smaller diagonal.
pub fn random_separated_pd(k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let diag: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..3.0)).collect();
    let mut c = Array2::from_diag(&Array1::from(diag.clone()));
    let scale = 0.9 / k.max(2) as f64;
    for a in 0..k {
        for b in a + 1..k {
            let v = rng.random_range(-1.0..1.0) * scale * diag[a].min(diag[b]);
            c[[a, b]] = v;
            c[[b, a]] = v;
        }
    }
    c
}

/// Symmetric off-diagonal perturbation with entries in `[−ε, ε]`.
pub fn perturb_off_diagonal(sigma: &Array2<f64>, eps: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut s = sigma.clone();
    let p = s.nrows();
    for i in 0..p {
        for j in i + 1..p {
            let e = rng.random_range(-eps..=eps);
            s[[i, j]] += e;
            s[[j, i]] += e;
        }
    }
    s
}

/// Members of `groups` as co-membership counts over `j < k`, by direct
/// enumeration: `(tp, tn, fp, fn)`.
pub fn naive_pair_counts(est: &[Vec<usize>], truth: &[Vec<usize>], p: usize) -> (usize, usize, usize, usize) {
    let together = |gs: &[Vec<usize>], j: usize, k: usize| gs.iter().any(|g| g.contains(&j) && g.contains(&k));
    let (mut tp, mut tn, mut fp, mut fneg) = (0, 0, 0, 0);
    for j in 0..p {
        for k in 0..p {
            if j >= k {
                continue;
            }
            match (together(truth, j, k), together(est, j, k)) {
                (true, true) => tp += 1,
                (false, false) => tn += 1,
                (false, true) => fp += 1,
                (true, false) => fneg += 1,
            }
        }
    }
    (tp, tn, fp, fneg)
}
