//! The sparse latent factor model `X = A Z + E`.
//!
//! A [`FactorModel`] holds the ground-truth triple `(A, C, Γ)`: the p x K
//! loading matrix, the K x K factor covariance and the diagonal noise
//! variances. It is used to build population covariances, synthetic data,
//! and the truth side of every evaluation.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::covariance::CovMatrix;
use crate::error::{LoveError, Result};
use crate::linalg;

/// Slack allowed on the row ℓ₁ bound, so that rows such as (1/3, 1/3, 1/3)
/// built in floating point still count as feasible.
const ROW_L1_SLACK: f64 = 1e-12;

/// Number of factors in the benchmark design.
pub const DESIGN_FACTORS: usize = 20;
/// Pure rows per factor in the benchmark design.
pub const DESIGN_PURE_PER_FACTOR: usize = 5;

/// (positive, negative) counts of pure rows per factor in the benchmark
/// design. Each pattern is used for four factors.
pub const DESIGN_SIGN_PATTERNS: [(usize, usize); 5] = [(3, 2), (4, 1), (2, 3), (1, 4), (5, 0)];

#[derive(Clone, Debug, PartialEq)]
pub struct FactorModel {
    /// Loading matrix, p x K.
    pub a: Array2<f64>,
    /// Factor covariance `Cov(Z)`, K x K.
    pub c: Array2<f64>,
    /// Diagonal of `Cov(E)`, length p.
    pub gamma: Array1<f64>,
}

/// Pure-variable index set together with its per-factor partition.
///
/// Indices are 0-based internally. `signs` is empty until the signs have been
/// estimated (or read off a true loading matrix).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PurePartition {
    pub groups: Vec<Vec<usize>>,
    pub signs: BTreeMap<usize, i8>,
}

impl PurePartition {
    pub fn from_groups(mut groups: Vec<Vec<usize>>) -> Self {
        for g in &mut groups {
            g.sort_unstable();
        }
        Self {
            groups,
            signs: BTreeMap::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.groups.len()
    }

    /// Sorted union of all groups.
    pub fn pure_set(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.groups.iter().flatten().copied().collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    pub fn contains(&self, i: usize) -> bool {
        self.groups.iter().any(|g| g.contains(&i))
    }

    pub fn group_of(&self, i: usize) -> Option<usize> {
        self.groups.iter().position(|g| g.contains(&i))
    }

    pub fn has_signs(&self) -> bool {
        self.groups
            .iter()
            .flatten()
            .all(|i| self.signs.contains_key(i))
    }

    /// Sign of pure index `i` as ±1.0, or an error if unknown.
    pub fn sign(&self, i: usize) -> Result<f64> {
        self.signs
            .get(&i)
            .map(|&s| f64::from(s))
            .ok_or_else(|| LoveError::Structure(format!("no sign recorded for pure index {}", i + 1)))
    }

    /// The signed |I| x K block `A_I`, rows ordered as in [`pure_set`](Self::pure_set).
    pub fn signed_block(&self) -> Result<Array2<f64>> {
        let pure = self.pure_set();
        let mut block = Array2::zeros((pure.len(), self.k()));
        for (r, &i) in pure.iter().enumerate() {
            let a = self.group_of(i).expect("index taken from the partition");
            block[[r, a]] = self.sign(i)?;
        }
        Ok(block)
    }

    /// Same partition up to group order (signs ignored).
    pub fn same_groups(&self, other: &PurePartition) -> bool {
        let mut mine = self.groups.clone();
        let mut theirs = other.groups.clone();
        mine.iter_mut().for_each(|g| g.sort_unstable());
        theirs.iter_mut().for_each(|g| g.sort_unstable());
        mine.sort();
        theirs.sort();
        mine == theirs
    }
}

/// Observed samples, one row per observation.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub samples: Array2<f64>,
    pub generator_seed: Option<u64>,
    pub truth: Option<FactorModel>,
    /// Column names, when the data came with a header.
    pub names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(samples: Array2<f64>) -> Result<Self> {
        if samples.nrows() == 0 || samples.ncols() == 0 {
            return Err(LoveError::Dimension("dataset must have at least one row and one column".into()));
        }
        if let Some(((r, c), _)) = samples.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(LoveError::Parse {
                row: r + 1,
                column: c + 1,
                message: "non-finite value".into(),
            });
        }
        Ok(Self {
            samples,
            generator_seed: None,
            truth: None,
            names: None,
        })
    }

    pub fn n(&self) -> usize {
        self.samples.nrows()
    }

    pub fn p(&self) -> usize {
        self.samples.ncols()
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(LoveError::Dimension(format!(
                "{} names for {} columns",
                names.len(),
                self.p()
            )));
        }
        self.names = Some(names);
        Ok(self)
    }

    /// Dataset made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            samples: self.samples.select(Axis(0), rows),
            generator_seed: self.generator_seed,
            truth: self.truth.clone(),
            names: self.names.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// Row ℓ₁-norm above one.
    RowNorm { row: usize, norm: f64 },
    /// Fewer than two pure rows for a factor.
    TooFewPure { factor: usize, count: usize },
    /// Δ(C) not strictly positive.
    NotSeparated { separation: f64 },
    NotSymmetric { max_gap: f64 },
    NotPositiveDefinite { min_eigenvalue: f64 },
    NegativeNoise { index: usize, value: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Δ(C); `+∞` when K = 1.
    pub separation: f64,
    pub pure_counts: Vec<usize>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Quasi-pure and strong-signal sets of a true model at given tuning levels.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthDiagnostics {
    pub j1: Vec<usize>,
    pub j1_by_factor: Vec<Vec<usize>>,
    pub j2: Vec<usize>,
    pub j3: Vec<usize>,
    /// Largest number of nonzeros in a row of A.
    pub sparsity: usize,
    /// ‖C⁻¹‖∞,1.
    pub sensitivity_norm: f64,
    pub separation: f64,
    /// δ′ = (8‖C‖∞/ν − 3)δ.
    pub delta_prime: f64,
}

/// Δ(C) = min over a ≠ b of min(C_aa, C_bb) − |C_ab|, `+∞` for K = 1.
pub fn separation(c: ArrayView2<f64>) -> f64 {
    let k = c.nrows();
    let mut best = f64::INFINITY;
    for a in 0..k {
        for b in 0..k {
            if a != b {
                best = best.min(c[[a, a]].min(c[[b, b]]) - c[[a, b]].abs());
            }
        }
    }
    best
}

/// δ′ = (8‖C‖∞/ν − 3)δ, with ‖C‖∞ the largest absolute entry.
pub fn delta_prime(c: ArrayView2<f64>, delta: f64) -> f64 {
    let nu = separation(c);
    if nu.is_infinite() {
        // K = 1: 8/ν → 0 and the bracket is negative; fall back to δ.
        return delta;
    }
    (8.0 * linalg::max_abs(c) / nu - 3.0) * delta
}

/// The pure rows of a loading matrix: `I_a = {i : |A_ia| = 1, A_ib = 0 for b ≠ a}`.
///
/// Exact comparisons; meant for ground-truth matrices.
pub fn pure_set_of(a: ArrayView2<f64>) -> PurePartition {
    let k = a.ncols();
    let mut groups = vec![Vec::new(); k];
    let mut signs = BTreeMap::new();
    for (i, row) in a.rows().into_iter().enumerate() {
        let nonzero: Vec<usize> = (0..k).filter(|&b| row[b] != 0.0).collect();
        if let [only] = nonzero[..] {
            if row[only].abs() == 1.0 {
                groups[only].push(i);
                signs.insert(i, if row[only] > 0.0 { 1 } else { -1 });
            }
        }
    }
    PurePartition { groups, signs }
}

impl FactorModel {
    pub fn new(a: Array2<f64>, c: Array2<f64>, gamma: Array1<f64>) -> Result<Self> {
        let (p, k) = a.dim();
        if c.dim() != (k, k) {
            return Err(LoveError::Dimension(format!(
                "C is {}x{} but A has {} columns",
                c.nrows(),
                c.ncols(),
                k
            )));
        }
        if gamma.len() != p {
            return Err(LoveError::Dimension(format!(
                "Gamma has length {} but A has {} rows",
                gamma.len(),
                p
            )));
        }
        Ok(Self { a, c, gamma })
    }

    pub fn p(&self) -> usize {
        self.a.nrows()
    }

    pub fn k(&self) -> usize {
        self.a.ncols()
    }

    pub fn separation(&self) -> f64 {
        separation(self.c.view())
    }

    pub fn pure_partition(&self) -> PurePartition {
        pure_set_of(self.a.view())
    }

    /// Checks the three identifiability conditions plus the basic shape of C and Γ.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for (i, row) in self.a.rows().into_iter().enumerate() {
            let norm = linalg::l1(row);
            if norm > 1.0 + ROW_L1_SLACK {
                violations.push(Violation::RowNorm { row: i, norm });
            }
        }
        let partition = self.pure_partition();
        let pure_counts: Vec<usize> = partition.groups.iter().map(Vec::len).collect();
        for (factor, &count) in pure_counts.iter().enumerate() {
            if count < 2 {
                violations.push(Violation::TooFewPure { factor, count });
            }
        }
        let separation = self.separation();
        if separation <= 0.0 {
            violations.push(Violation::NotSeparated { separation });
        }
        let max_gap = linalg::max_asymmetry(self.c.view());
        if max_gap > 1e-12 {
            violations.push(Violation::NotSymmetric { max_gap });
        }
        let min_eigenvalue = linalg::symmetric_eigenvalues(linalg::symmetrize(self.c.view()).view())
            .first()
            .copied()
            .unwrap_or(f64::NAN);
        if !(min_eigenvalue > 0.0) {
            violations.push(Violation::NotPositiveDefinite { min_eigenvalue });
        }
        for (index, &value) in self.gamma.iter().enumerate() {
            if value < 0.0 {
                violations.push(Violation::NegativeNoise { index, value });
            }
        }
        ValidationReport {
            violations,
            separation,
            pure_counts,
        }
    }

    /// Σ = A C Aᵀ + diag(Γ).
    pub fn population_covariance(&self) -> CovMatrix {
        let mut sigma = self.a.dot(&self.c).dot(&self.a.t());
        for (i, g) in self.gamma.iter().enumerate() {
            sigma[[i, i]] += g;
        }
        // A C Aᵀ is symmetric in exact arithmetic; remove rounding asymmetry.
        let sigma = linalg::symmetrize(sigma.view());
        CovMatrix::population(sigma)
    }

    /// J₁, J₂, J₃ and the scalar constants of the error bounds.
    pub fn truth_diagnostics(&self, delta: f64, mu: f64) -> Result<TruthDiagnostics> {
        let nu = self.separation();
        if !(nu > 0.0) {
            return Err(LoveError::Parameter(format!("Δ(C) = {nu} is not positive")));
        }
        let c_inv = linalg::inverse(self.c.view())?;
        let eps = if nu.is_infinite() { 0.0 } else { 4.0 * delta / nu };
        let quasi_level = 1.0 - eps;
        let strong_level = (2.0 * mu).max(eps);

        let pure = self.pure_partition();
        let k = self.k();
        let mut j1 = Vec::new();
        let mut j1_by_factor = vec![Vec::new(); k];
        let mut j2 = Vec::new();
        let mut j3 = Vec::new();
        for (j, row) in self.a.rows().into_iter().enumerate() {
            if pure.contains(j) {
                continue;
            }
            let quasi: Vec<usize> = (0..k).filter(|&a| row[a].abs() >= quasi_level).collect();
            if !quasi.is_empty() {
                j1.push(j);
                for a in quasi {
                    j1_by_factor[a].push(j);
                }
            } else if row.iter().all(|&v| v == 0.0 || v.abs() > strong_level) {
                j2.push(j);
            } else {
                j3.push(j);
            }
        }
        let sparsity = self
            .a
            .rows()
            .into_iter()
            .map(|r| r.iter().filter(|v| **v != 0.0).count())
            .max()
            .unwrap_or(0);
        Ok(TruthDiagnostics {
            j1,
            j1_by_factor,
            j2,
            j3,
            sparsity,
            sensitivity_norm: linalg::inf_one_norm(c_inv.view()),
            separation: nu,
            delta_prime: delta_prime(self.c.view(), delta),
        })
    }

    /// The benchmark design with K = 20 factors and 100 pure rows.
    ///
    /// `C_aa = 2 + a/19` (0-based a) and `C_ab = (−1)^(a+b) 0.3^|a−b| min(C_aa, C_bb)`.
    /// Rows `0..100` are pure, five per factor, with (positive, negative)
    /// counts cycling through [`DESIGN_SIGN_PATTERNS`]. Each remaining row
    /// picks a support size uniformly in {2,..,5}, a uniform support, and
    /// entries `±1/s`. Noise variances are independent Uniform[1, 3].
    pub fn benchmark_design(p: usize, seed: u64) -> Result<Self> {
        let k = DESIGN_FACTORS;
        let n_pure = k * DESIGN_PURE_PER_FACTOR;
        if p < n_pure {
            return Err(LoveError::Parameter(format!(
                "the benchmark design needs p >= {n_pure}, got {p}"
            )));
        }
        let mut c = Array2::zeros((k, k));
        for a in 0..k {
            c[[a, a]] = 2.0 + a as f64 / 19.0;
        }
        for a in 0..k {
            for b in 0..k {
                if a != b {
                    let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
                    let gap = a.abs_diff(b) as i32;
                    c[[a, b]] = sign * 0.3_f64.powi(gap) * c[[a, a]].min(c[[b, b]]);
                }
            }
        }

        let mut a_mat = Array2::zeros((p, k));
        for factor in 0..k {
            let (pos, _) = DESIGN_SIGN_PATTERNS[factor % DESIGN_SIGN_PATTERNS.len()];
            for m in 0..DESIGN_PURE_PER_FACTOR {
                let row = factor * DESIGN_PURE_PER_FACTOR + m;
                a_mat[[row, factor]] = if m < pos { 1.0 } else { -1.0 };
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for j in n_pure..p {
            let s = rng.random_range(2..=5usize);
            let mut support = sample_indices(&mut rng, k, s).into_vec();
            support.sort_unstable();
            for b in support {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                a_mat[[j, b]] = sign / s as f64;
            }
        }
        let noise = Uniform::new_inclusive(1.0, 3.0).expect("valid bounds");
        let gamma = Array1::from_iter((0..p).map(|_| noise.sample(&mut rng)));
        Self::new(a_mat, c, gamma)
    }

    /// Draws `n` i.i.d. Gaussian samples `A z + e`, `z ~ N(0, C)`, `e ~ N(0, diag Γ)`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(LoveError::Parameter("sample size must be positive".into()));
        }
        let l = linalg::cholesky(self.c.view())
            .map_err(|_| LoveError::Numeric("factor covariance C is not positive definite".into()))?;
        let (p, k) = self.a.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Array2::from_shape_simple_fn((n, k), || StandardNormal.sample(&mut rng));
        let e = Array2::from_shape_simple_fn((n, p), || -> f64 { StandardNormal.sample(&mut rng) });
        let z = g.dot(&l.t());
        let mut x = z.dot(&self.a.t());
        for (mut row, noise_row) in x.rows_mut().into_iter().zip(e.rows()) {
            for j in 0..p {
                row[j] += self.gamma[j].sqrt() * noise_row[j];
            }
        }
        Ok(Dataset {
            samples: x,
            generator_seed: Some(seed),
            truth: Some(self.clone()),
            names: None,
        })
    }
}

// JSON form: 1-based indices, row-major nested arrays.

#[derive(Serialize, Deserialize)]
struct PartitionJson {
    groups: Vec<Vec<usize>>,
    #[serde(default)]
    signs: BTreeMap<String, i8>,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    #[serde(rename = "Gamma")]
    gamma: Vec<f64>,
    pure_partition: PartitionJson,
}

impl Serialize for PurePartition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PartitionJson {
            groups: self
                .groups
                .iter()
                .map(|g| g.iter().map(|i| i + 1).collect())
                .collect(),
            signs: self
                .signs
                .iter()
                .map(|(i, s)| ((i + 1).to_string(), *s))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PurePartition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let raw = PartitionJson::deserialize(d)?;
        let to_zero = |i: usize| i.checked_sub(1).ok_or_else(|| D::Error::custom("indices are 1-based"));
        let groups = raw
            .groups
            .into_iter()
            .map(|g| g.into_iter().map(to_zero).collect::<std::result::Result<Vec<_>, _>>())
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let mut signs = BTreeMap::new();
        for (key, s) in raw.signs {
            let i: usize = key.parse().map_err(D::Error::custom)?;
            if s != 1 && s != -1 {
                return Err(D::Error::custom(format!("sign {s} is not ±1")));
            }
            signs.insert(to_zero(i)?, s);
        }
        Ok(PurePartition { groups, signs })
    }
}

impl Serialize for FactorModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let partition = self.pure_partition();
        ModelJson {
            a: linalg::rows_of(self.a.view()),
            c: linalg::rows_of(self.c.view()),
            gamma: self.gamma.to_vec(),
            pure_partition: PartitionJson {
                groups: partition
                    .groups
                    .iter()
                    .map(|g| g.iter().map(|i| i + 1).collect())
                    .collect(),
                signs: partition
                    .signs
                    .iter()
                    .map(|(i, s)| ((i + 1).to_string(), *s))
                    .collect(),
            },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FactorModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let raw = ModelJson::deserialize(d)?;
        let a = linalg::from_rows(&raw.a).map_err(D::Error::custom)?;
        let c = linalg::from_rows(&raw.c).map_err(D::Error::custom)?;
        FactorModel::new(a, c, Array1::from(raw.gamma)).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use ndarray::array;

    #[test]
    fn single_factor_model_is_valid_with_infinite_separation() {
        let m = FactorModel::new(array![[1.0], [1.0]], array![[1.0]], array![1.0, 1.0]).unwrap();
        let report = m.validate();
        assert!(report.is_valid(), "{:?}", report.violations);
        assert!(report.separation.is_infinite());
        assert_eq!(report.pure_counts, vec![2]);
    }

    #[test]
    fn rotation_counterexample_lacks_pure_rows() {
        let fx = fixtures::rotation_counterexample();
        let a = Array2::from_shape_fn((4, 3), |(_, b)| fx.row[b]);
        let m = FactorModel::new(a, fx.c.clone(), Array1::ones(4)).unwrap();
        let report = m.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::TooFewPure { .. })));
    }

    #[test]
    fn boundary_separation_is_a_violation() {
        let c = array![[1.0, 1.0], [1.0, 2.0]];
        let a = array![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        let m = FactorModel::new(a, c, Array1::ones(4)).unwrap();
        let report = m.validate();
        assert_eq!(report.separation, 0.0);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NotSeparated { .. })));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let err = FactorModel::new(array![[1.0], [1.0]], array![[1.0, 0.0], [0.0, 1.0]], array![1.0, 1.0]);
        assert!(matches!(err, Err(LoveError::Dimension(_))));
        let err = FactorModel::new(array![[1.0], [1.0]], array![[1.0]], array![1.0]);
        assert!(matches!(err, Err(LoveError::Dimension(_))));
    }

    #[test]
    fn rank_one_population_covariance() {
        let m = FactorModel::new(array![[1.0], [1.0]], array![[2.5]], array![0.5, 0.5]).unwrap();
        let sigma = m.population_covariance();
        assert_eq!(sigma.values, array![[3.0, 2.5], [2.5, 3.0]]);
    }

    #[test]
    fn overlap_example_covariance_entries() {
        let m = fixtures::overlap_example(1.0);
        let s = m.population_covariance().values;
        assert!((s[[0, 6]] - 0.4).abs() < 1e-15);
        assert!((s[[2, 6]] - 0.6).abs() < 1e-15);
        assert!((s[[6, 7]] + 0.2).abs() < 1e-15);
    }

    #[test]
    fn overlap_example_pure_partition() {
        let p = fixtures::overlap_example(1.0).pure_partition();
        assert_eq!(p.groups, vec![vec![0, 1], vec![2, 3], vec![4, 5]]);
        assert_eq!(p.signs[&0], 1);
        assert_eq!(p.signs[&1], -1);
        assert_eq!(p.signs[&4], -1);
    }

    #[test]
    fn all_pure_matrix_is_fully_pure() {
        let a = array![[1.0, 0.0], [0.0, -1.0], [-1.0, 0.0], [0.0, 1.0]];
        assert_eq!(pure_set_of(a.view()).pure_set(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn design_structure() {
        let m = FactorModel::benchmark_design(200, 11).unwrap();
        assert_eq!(m.a.dim(), (200, 20));
        let part = m.pure_partition();
        assert_eq!(part.pure_set(), (0..100).collect::<Vec<_>>());
        for (factor, g) in part.groups.iter().enumerate() {
            assert_eq!(g.len(), 5);
            let pos = g.iter().filter(|i| part.signs[i] == 1).count();
            assert_eq!(pos, DESIGN_SIGN_PATTERNS[factor % 5].0);
        }
        for j in 100..200 {
            let norm = linalg::l1(m.a.row(j));
            assert!((norm - 1.0).abs() < 1e-12, "row {j} has norm {norm}");
            let s = m.a.row(j).iter().filter(|v| **v != 0.0).count();
            assert!((2..=5).contains(&s));
        }
        assert!(m.gamma.iter().all(|g| (1.0..=3.0).contains(g)));
        assert!(m.validate().is_valid());
    }

    #[test]
    fn design_separation_by_enumeration() {
        let m = FactorModel::benchmark_design(100, 0).unwrap();
        // Oracle: enumerate every pair directly from the closed-form entries.
        let mut best = f64::INFINITY;
        for a in 0..20usize {
            for b in 0..20 {
                if a != b {
                    let caa = 2.0 + a as f64 / 19.0;
                    let cbb = 2.0 + b as f64 / 19.0;
                    let cab = 0.3_f64.powi(a.abs_diff(b) as i32) * caa.min(cbb);
                    best = best.min(caa.min(cbb) - cab);
                }
            }
        }
        assert!((best - 1.4).abs() < 1e-12);
        assert!((m.separation() - 1.4).abs() < 1e-12);
    }

    #[test]
    fn design_is_deterministic() {
        let a = FactorModel::benchmark_design(150, 99).unwrap();
        let b = FactorModel::benchmark_design(150, 99).unwrap();
        assert_eq!(a, b);
        assert!(matches!(FactorModel::benchmark_design(99, 0), Err(LoveError::Parameter(_))));
    }

    #[test]
    fn sampling_is_deterministic_and_identity_model_is_standard_normal() {
        let m = FactorModel::new(Array2::eye(3), Array2::eye(3), Array1::zeros(3)).unwrap();
        let d1 = m.sample(20_000, 5).unwrap();
        let d2 = m.sample(20_000, 5).unwrap();
        assert_eq!(d1.samples, d2.samples);
        let cov = d1.samples.t().dot(&d1.samples) / 20_000.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((cov[[i, j]] - target).abs() < 0.05);
            }
        }
    }

    #[test]
    fn sampling_rejects_non_pd_factor_covariance() {
        let m = FactorModel::new(array![[1.0, 0.0], [0.0, 1.0]], array![[1.0, 2.0], [2.0, 1.0]], array![1.0, 1.0])
            .unwrap();
        match m.sample(5, 0) {
            Err(LoveError::Numeric(msg)) => assert!(msg.contains('C')),
            other => panic!("expected numeric error, got {other:?}"),
        }
    }

    #[test]
    fn diagnostics_zero_delta_has_no_quasi_pure() {
        let m = FactorModel::benchmark_design(200, 3).unwrap();
        let d = m.truth_diagnostics(0.0, 0.0).unwrap();
        assert!(d.j1.is_empty());
        assert_eq!(d.sparsity, 5);
    }

    #[test]
    fn diagnostics_on_overlap_example() {
        let m = fixtures::overlap_example(1.0);
        let d = m.truth_diagnostics(1e-3, 0.05).unwrap();
        assert_eq!(d.j2, vec![6, 7]);
        assert!(d.j1.is_empty() && d.j3.is_empty());
        assert!((d.sensitivity_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quasi_pure_boundary_row() {
        // ν = 1 for C = I, so 4δ/ν = 0.04 at δ = 0.01 and the level is 0.96.
        let a = array![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [0.99, 0.01]];
        let m = FactorModel::new(a, Array2::eye(2), Array1::ones(5)).unwrap();
        let d = m.truth_diagnostics(0.01, 0.0).unwrap();
        assert_eq!(d.j1, vec![4]);
        assert_eq!(d.j1_by_factor, vec![vec![4], vec![]]);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = FactorModel::benchmark_design(120, 4).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: FactorModel = serde_json::from_str(&text).unwrap();
        assert_eq!(m, back);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["pure_partition"]["groups"][0], serde_json::json!([1, 2, 3, 4, 5]));
        assert_eq!(v["pure_partition"]["signs"]["4"], serde_json::json!(-1));
    }
}
