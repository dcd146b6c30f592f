//! Minimum-cost square assignment (Hungarian method with potentials, O(n³)).

/// Returns `col_of[row]`, a permutation minimizing `Σ cost[row][col_of[row]]`.
///
/// Among optimal assignments the result is pushed towards the identity: any
/// pair swap that keeps the total cost (up to rounding) and moves a row
/// onto a smaller column index is applied until none remains.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    assert!(cost.iter().all(|r| r.len() == n), "cost matrix must be square");
    // 1-based arrays with a sentinel column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    prefer_identity(cost, &mut col_of);
    col_of
}

fn prefer_identity(cost: &[Vec<f64>], col_of: &mut [usize]) {
    let n = col_of.len();
    let scale: f64 = cost.iter().flatten().fold(1.0, |m, c| m.max(c.abs()));
    let tol = 1e-12 * scale;
    let mut changed = true;
    while changed {
        changed = false;
        for r in 0..n {
            for s in r + 1..n {
                let (cr, cs) = (col_of[r], col_of[s]);
                if cs >= cr {
                    continue;
                }
                let before = cost[r][cr] + cost[s][cs];
                let after = cost[r][cs] + cost[s][cr];
                if after <= before + tol {
                    col_of.swap(r, s);
                    changed = true;
                }
            }
        }
    }
}

/// Total cost of an assignment.
pub fn assignment_cost(cost: &[Vec<f64>], col_of: &[usize]) -> f64 {
    col_of.iter().enumerate().map(|(r, &c)| cost[r][c]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(cost: &[Vec<f64>]) -> f64 {
        fn rec(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == cost.len() {
                *best = best.min(acc);
                return;
            }
            for c in 0..cost.len() {
                if !used[c] {
                    used[c] = true;
                    rec(cost, row + 1, used, acc + cost[row][c], best);
                    used[c] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, 0, &mut vec![false; cost.len()], 0.0, &mut best);
        best
    }

    #[test]
    fn textbook_instance() {
        let cost = vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ];
        let a = min_cost_assignment(&cost);
        assert_eq!(assignment_cost(&cost, &a), 5.0);
        assert_eq!(a, vec![1, 0, 2]);
    }

    #[test]
    fn ties_resolve_to_identity() {
        let cost = vec![vec![1.0; 4]; 4];
        assert_eq!(min_cost_assignment(&cost), vec![0, 1, 2, 3]);
    }

    #[test]
    fn matches_enumeration() {
        let mut state = 17u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for n in 1..=6 {
            for _ in 0..20 {
                let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| next() * 10.0).collect()).collect();
                let a = min_cost_assignment(&cost);
                assert!((assignment_cost(&cost, &a) - brute(&cost)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn empty_is_empty() {
        assert!(min_cost_assignment(&[]).is_empty());
    }
}
