//! Dense two-phase simplex for small linear programs.
//!
//! Problems are stated as `minimize cᵀx` subject to rows `aᵀx {≤,≥,=} b` and
//! per-variable bounds. Internally every variable is shifted, mirrored or
//! split so that the working variables are nonnegative, rows get slack,
//! surplus and artificial columns, and a full tableau is pivoted.
//!
//! Entering variables follow Dantzig's rule (most negative reduced cost,
//! lowest index on ties). After a run of degenerate pivots the solver falls
//! back to Bland's rule until the objective strictly improves again, which
//! rules out cycling. All choices are deterministic.
//!
//! Once an optimal basis is found the basic solution is recomputed from the
//! original standard-form columns with an LU solve, which removes most of
//! the drift accumulated by the tableau updates.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Reduced-cost and feasibility tolerance.
pub const LP_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-10;
const DEGENERATE_STREAK: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    /// Sparse coefficients `(variable, value)`.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Self {
        Self { coeffs, relation, rhs }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bound {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Bound {
    pub const NONNEGATIVE: Bound = Bound {
        lower: Some(0.0),
        upper: None,
    };
    pub const FREE: Bound = Bound {
        lower: None,
        upper: None,
    };
}

/// `minimize objective · x` subject to `constraints` and `bounds`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<Bound>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration budget exhausted or no usable pivot found.
    NumericalTrouble,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
}

impl LinearProgram {
    /// All variables nonnegative, no constraints yet.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            constraints: Vec::new(),
            bounds: vec![Bound::NONNEGATIVE; n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint::new(coeffs, relation, rhs));
    }

    pub fn validate(&self) -> Result<(), String> {
        let n = self.n_vars();
        if self.bounds.len() != n {
            return Err(format!("{} bounds for {} variables", self.bounds.len(), n));
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if let Some((j, _)) = c.coeffs.iter().find(|(j, _)| *j >= n) {
                return Err(format!("row {r} references variable {j} of {n}"));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|(_, v)| !v.is_finite()) {
                return Err(format!("row {r} has non-finite data"));
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err("objective has non-finite entries".into());
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if let (Some(l), Some(u)) = (b.lower, b.upper) {
                if l > u {
                    return Err(format!("variable {j} has lower bound {l} above upper bound {u}"));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump, one line per row.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let term = |out: &mut String, j: usize, v: f64| {
            let _ = write!(out, " {:+} x{}", v, j);
        };
        out.push_str("minimize");
        for (j, &v) in self.objective.iter().enumerate() {
            if v != 0.0 {
                term(&mut out, j, v);
            }
        }
        out.push_str("\nsubject to\n");
        for (r, c) in self.constraints.iter().enumerate() {
            let _ = write!(out, "  r{r}:");
            for &(j, v) in &c.coeffs {
                term(&mut out, j, v);
            }
            let op = match c.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", c.rhs);
        }
        out.push_str("bounds\n");
        for (j, b) in self.bounds.iter().enumerate() {
            let lo = b.lower.map_or("-inf".to_string(), |v| v.to_string());
            let hi = b.upper.map_or("+inf".to_string(), |v| v.to_string());
            let _ = writeln!(out, "  {lo} <= x{j} <= {hi}");
        }
        out
    }
}

/// How an original variable is expressed through nonnegative columns.
#[derive(Clone, Copy, Debug)]
enum VarMap {
    /// `x = shift + y`
    Shifted { col: usize, shift: f64 },
    /// `x = shift − y`
    Mirrored { col: usize, shift: f64 },
    /// `x = y⁺ − y⁻`
    Split { pos: usize, neg: usize },
}

struct StandardForm {
    /// m x ncols, dense, row-major.
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    m: usize,
    ncols: usize,
    /// First artificial column; artificials occupy `art_start..ncols`.
    art_start: usize,
    basis: Vec<usize>,
    maps: Vec<VarMap>,
}

fn standardize(lp: &LinearProgram) -> StandardForm {
    let mut maps = Vec::with_capacity(lp.n_vars());
    let mut ny = 0;
    let mut extra_rows: Vec<Constraint> = Vec::new();
    for b in &lp.bounds {
        match (b.lower, b.upper) {
            (Some(l), up) => {
                maps.push(VarMap::Shifted { col: ny, shift: l });
                if let Some(u) = up {
                    extra_rows.push(Constraint::new(vec![(ny, 1.0)], Relation::Le, u - l));
                }
                ny += 1;
            }
            (None, Some(u)) => {
                maps.push(VarMap::Mirrored { col: ny, shift: u });
                ny += 1;
            }
            (None, None) => {
                maps.push(VarMap::Split { pos: ny, neg: ny + 1 });
                ny += 2;
            }
        }
    }

    // Rows over the y columns.
    let mut rows: Vec<(Vec<(usize, f64)>, Relation, f64)> = Vec::new();
    for con in &lp.constraints {
        let mut coeffs = Vec::with_capacity(con.coeffs.len() + 1);
        let mut rhs = con.rhs;
        for &(j, v) in &con.coeffs {
            match maps[j] {
                VarMap::Shifted { col, shift } => {
                    coeffs.push((col, v));
                    rhs -= v * shift;
                }
                VarMap::Mirrored { col, shift } => {
                    coeffs.push((col, -v));
                    rhs -= v * shift;
                }
                VarMap::Split { pos, neg } => {
                    coeffs.push((pos, v));
                    coeffs.push((neg, -v));
                }
            }
        }
        rows.push((coeffs, con.relation, rhs));
    }
    for con in extra_rows {
        rows.push((con.coeffs, con.relation, con.rhs));
    }

    // Nonnegative right-hand sides.
    for (coeffs, rel, rhs) in rows.iter_mut() {
        if *rhs < 0.0 {
            *rhs = -*rhs;
            coeffs.iter_mut().for_each(|(_, v)| *v = -*v);
            *rel = match *rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let art_start = ny + n_slack;
    let ncols = art_start + n_art;
    let mut a = vec![0.0; m * ncols];
    let mut b = vec![0.0; m];
    let mut basis = vec![0; m];
    let mut next_slack = ny;
    let mut next_art = art_start;
    for (i, (coeffs, rel, rhs)) in rows.into_iter().enumerate() {
        let row = &mut a[i * ncols..(i + 1) * ncols];
        for (j, v) in coeffs {
            row[j] += v;
        }
        b[i] = rhs;
        match rel {
            Relation::Le => {
                row[next_slack] = 1.0;
                basis[i] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -1.0;
                next_slack += 1;
                row[next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                row[next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            }
        }
    }

    let mut c = vec![0.0; ncols];
    for (j, &v) in lp.objective.iter().enumerate() {
        match maps[j] {
            VarMap::Shifted { col, .. } => c[col] += v,
            VarMap::Mirrored { col, .. } => c[col] -= v,
            VarMap::Split { pos, neg } => {
                c[pos] += v;
                c[neg] -= v;
            }
        }
    }

    StandardForm {
        a,
        b,
        c,
        m,
        ncols,
        art_start,
        basis,
        maps,
    }
}

struct Tableau {
    t: Vec<f64>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
    obj: f64,
    m: usize,
    ncols: usize,
    basis: Vec<usize>,
    iterations: usize,
}

enum Phase {
    Optimal,
    Unbounded,
    Stalled,
}

impl Tableau {
    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.ncols;
        let piv = self.t[r * w + e];
        {
            let row = &mut self.t[r * w..(r + 1) * w];
            row.iter_mut().for_each(|v| *v /= piv);
        }
        self.rhs[r] /= piv;
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + e];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * w..(i + 1) * w];
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            row[e] = 0.0;
            self.rhs[i] -= f * pivot_rhs;
            if self.rhs[i] < 0.0 && self.rhs[i] > -LP_TOL {
                self.rhs[i] = 0.0;
            }
        }
        let f = self.cost[e];
        if f != 0.0 {
            for (v, p) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            self.cost[e] = 0.0;
            self.obj += f * pivot_rhs;
        }
        self.basis[r] = e;
        self.iterations += 1;
    }

    /// Minimizes the current cost row over columns `< allowed`.
    fn run(&mut self, allowed: usize, max_iter: usize) -> Phase {
        let w = self.ncols;
        let mut streak = 0;
        loop {
            if self.iterations >= max_iter {
                return Phase::Stalled;
            }
            let bland = streak >= DEGENERATE_STREAK;
            let entering = if bland {
                (0..allowed).find(|&j| self.cost[j] < -LP_TOL)
            } else {
                let mut best: Option<usize> = None;
                for j in 0..allowed {
                    if self.cost[j] < -LP_TOL && best.is_none_or(|b| self.cost[j] < self.cost[b]) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(e) = entering else {
                return Phase::Optimal;
            };

            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.m {
                let a = self.t[i * w + e];
                if a > PIVOT_TOL {
                    let ratio = self.rhs[i] / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            let scale = 1.0_f64.max(best_ratio.abs());
                            if ratio < best_ratio - 1e-12 * scale {
                                true
                            } else if ratio <= best_ratio + 1e-12 * scale {
                                if bland {
                                    self.basis[i] < self.basis[l]
                                } else {
                                    a > self.t[l * w + e]
                                }
                            } else {
                                false
                            }
                        }
                    };
                    if better {
                        leave = Some(i);
                        best_ratio = best_ratio.min(ratio);
                    }
                }
            }
            let Some(r) = leave else {
                return Phase::Unbounded;
            };
            let before = self.obj;
            self.pivot(r, e);
            if self.obj < before - 1e-12 * (1.0 + before.abs()) {
                streak = 0;
            } else {
                streak += 1;
            }
        }
    }
}

enum Outcome {
    Optimal { basis: Vec<usize>, y: Vec<f64> },
    Failed(LpStatus),
}

/// Relative sizes of the right-hand-side perturbation used against
/// cycling, tried in order until the perturbed basis survives refinement.
const PERTURBATIONS: [f64; 3] = [1e-7, 1e-10, 1e-13];

/// Deterministic pseudo-random value in [0.5, 1) per row.
fn jitter(i: usize) -> f64 {
    let mut z = (i as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    0.5 + 0.5 * (z >> 11) as f64 / (1u64 << 53) as f64
}

/// Solves `lp` to optimality or reports why it could not.
///
/// The simplex runs first on slightly perturbed right-hand sides, which
/// removes the degeneracy that makes dense programs cycle; the final basis
/// is then re-solved against the original data. If that basis is not
/// feasible for the original program a smaller perturbation is tried, and
/// the unperturbed method is the last resort.
pub fn lp_solve(lp: &LinearProgram) -> LpSolution {
    let failure = |status, iterations| LpSolution {
        status,
        value: f64::NAN,
        x: Vec::new(),
        iterations,
    };
    if lp.validate().is_err() {
        return failure(LpStatus::NumericalTrouble, 0);
    }
    let sf = standardize(lp);
    let mut outcome = Outcome::Failed(LpStatus::NumericalTrouble);
    let mut iterations = 0;
    for scale in PERTURBATIONS {
        let perturbed: Vec<f64> = sf
            .b
            .iter()
            .enumerate()
            .map(|(i, v)| v + scale * (1.0 + v.abs()) * jitter(i))
            .collect();
        let (o, it) = simplex(&sf, &perturbed);
        iterations += it;
        outcome = match o {
            Outcome::Optimal { basis, .. } => match refine_basic_solution(&sf, &basis) {
                Some(y) => Outcome::Optimal { basis, y },
                None => Outcome::Failed(LpStatus::NumericalTrouble),
            },
            other => other,
        };
        if !matches!(outcome, Outcome::Failed(LpStatus::NumericalTrouble)) {
            break;
        }
    }
    if !matches!(outcome, Outcome::Optimal { .. } | Outcome::Failed(LpStatus::Unbounded)) {
        let (o, it) = simplex(&sf, &sf.b);
        outcome = o;
        iterations += it;
    }
    let y = match outcome {
        Outcome::Optimal { y, .. } => y,
        Outcome::Failed(status) => return failure(status, iterations),
    };
    let x: Vec<f64> = sf
        .maps
        .iter()
        .map(|map| match *map {
            VarMap::Shifted { col, shift } => shift + y[col],
            VarMap::Mirrored { col, shift } => shift - y[col],
            VarMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>();
    LpSolution {
        status: LpStatus::Optimal,
        value,
        x,
        iterations,
    }
}

/// Two-phase simplex on the standard form with right-hand side `b`.
fn simplex(sf: &StandardForm, b: &[f64]) -> (Outcome, usize) {
    let (m, w) = (sf.m, sf.ncols);
    let max_iter = 50_000 + 50 * (m + w);

    let mut tab = Tableau {
        t: sf.a.clone(),
        rhs: b.to_vec(),
        cost: vec![0.0; w],
        obj: 0.0,
        m,
        ncols: w,
        basis: sf.basis.clone(),
        iterations: 0,
    };

    // Phase 1: minimize the sum of artificials.
    if sf.art_start < w {
        for i in 0..m {
            if tab.basis[i] >= sf.art_start {
                tab.obj += tab.rhs[i];
                for j in 0..sf.art_start {
                    tab.cost[j] -= tab.t[i * w + j];
                }
            }
        }
        match tab.run(sf.art_start, max_iter) {
            Phase::Optimal => {}
            Phase::Unbounded | Phase::Stalled => {
                return (Outcome::Failed(LpStatus::NumericalTrouble), tab.iterations)
            }
        }
        let scale = 1.0 + b.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if tab.obj > LP_TOL * scale {
            return (Outcome::Failed(LpStatus::Infeasible), tab.iterations);
        }
        // Drive remaining artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] >= sf.art_start {
                let col = (0..sf.art_start)
                    .filter(|&j| tab.t[r * w + j].abs() > PIVOT_TOL)
                    .max_by(|&x, &y| tab.t[r * w + x].abs().total_cmp(&tab.t[r * w + y].abs()));
                if let Some(e) = col {
                    tab.pivot(r, e);
                }
            }
        }
    }

    // Phase 2.
    tab.cost = sf.c.clone();
    tab.obj = 0.0;
    for i in 0..m {
        let cb = sf.c[tab.basis[i]];
        if cb != 0.0 {
            tab.obj += cb * tab.rhs[i];
            for j in 0..w {
                tab.cost[j] -= cb * tab.t[i * w + j];
            }
        }
    }
    for i in 0..m {
        tab.cost[tab.basis[i]] = 0.0;
    }
    match tab.run(sf.art_start, max_iter) {
        Phase::Optimal => {}
        Phase::Unbounded => return (Outcome::Failed(LpStatus::Unbounded), tab.iterations),
        Phase::Stalled => return (Outcome::Failed(LpStatus::NumericalTrouble), tab.iterations),
    }
    let y = refine_basic_solution(sf, &tab.basis).unwrap_or_else(|| {
        let mut y = vec![0.0; w];
        for (i, &bv) in tab.basis.iter().enumerate() {
            y[bv] = tab.rhs[i].max(0.0);
        }
        y
    });
    (
        Outcome::Optimal {
            basis: tab.basis,
            y,
        },
        tab.iterations,
    )
}

/// Solves `B y_B = b` for the final basis from the untouched columns.
fn refine_basic_solution(sf: &StandardForm, basis: &[usize]) -> Option<Vec<f64>> {
    let m = sf.m;
    if m == 0 {
        return Some(vec![0.0; sf.ncols]);
    }
    let bmat = DMatrix::from_fn(m, m, |i, k| sf.a[i * sf.ncols + basis[k]]);
    let rhs = DVector::from_column_slice(&sf.b);
    let sol = bmat.lu().solve(&rhs)?;
    let tol = 1e-7 * (1.0 + sf.b.iter().fold(0.0_f64, |a, v| a.max(v.abs())));
    let bad = |k: usize, v: f64| !v.is_finite() || v < -tol || (basis[k] >= sf.art_start && v > tol);
    if sol.iter().enumerate().any(|(k, &v)| bad(k, v)) {
        return None;
    }
    let mut y = vec![0.0; sf.ncols];
    for (k, &bv) in basis.iter().enumerate() {
        if bv < sf.art_start {
            y[bv] = sol[k].max(0.0);
        }
    }
    Some(y)
}
