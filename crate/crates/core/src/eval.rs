//! Comparison of an estimate with a known truth.
//!
//! Â and A are only comparable up to a signed permutation, so everything
//! here starts from [`align_signed_permutation`]. Cluster metrics need
//! K̂ = K; the pairwise co-membership metrics do not.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::assignment::min_cost_assignment;
use crate::clusters::{clusters_from_a, ClusterSet};
use crate::error::{LoveError, Result};
use crate::linalg;
use crate::model::{FactorModel, TruthDiagnostics};

/// Column `b` of the aligned estimate is `signs[b] · Â_·perm[b]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedPermutation {
    pub perm: Vec<usize>,
    pub signs: Vec<i8>,
}

impl SignedPermutation {
    pub fn identity(k: usize) -> Self {
        Self {
            perm: (0..k).collect(),
            signs: vec![1; k],
        }
    }

    pub fn new(perm: Vec<usize>, signs: Vec<i8>) -> Result<Self> {
        let k = perm.len();
        let mut seen = vec![false; k];
        for &p in &perm {
            if p >= k || seen[p] {
                return Err(LoveError::Structure(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        if signs.len() != k || signs.iter().any(|s| s.abs() != 1) {
            return Err(LoveError::Structure("signs must be ±1, one per column".into()));
        }
        Ok(Self { perm, signs })
    }

    pub fn k(&self) -> usize {
        self.perm.len()
    }

    pub fn inverse(&self) -> Self {
        let k = self.k();
        let mut perm = vec![0; k];
        let mut signs = vec![1; k];
        for (b, (&p, &s)) in self.perm.iter().zip(&self.signs).enumerate() {
            perm[p] = b;
            signs[p] = s;
        }
        Self { perm, signs }
    }

    /// `Â P`.
    pub fn apply(&self, a_hat: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((a_hat.nrows(), self.k()));
        for (b, (&p, &s)) in self.perm.iter().zip(&self.signs).enumerate() {
            out.column_mut(b).assign(&(&a_hat.column(p) * f64::from(s)));
        }
        out
    }

    /// Estimated clusters relabeled to match the truth's column order.
    pub fn apply_clusters(&self, est: &ClusterSet) -> ClusterSet {
        let flip: Vec<bool> = self.signs.iter().map(|&s| s < 0).collect();
        est.relabeled(&self.perm, &flip)
    }
}

impl Serialize for SignedPermutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Raw<'a> {
            perm: Vec<usize>,
            signs: &'a [i8],
        }
        Raw {
            perm: self.perm.iter().map(|p| p + 1).collect(),
            signs: &self.signs,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SignedPermutation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        #[derive(Deserialize)]
        struct Raw {
            perm: Vec<usize>,
            signs: Vec<i8>,
        }
        let raw = Raw::deserialize(d)?;
        let perm = raw
            .perm
            .into_iter()
            .map(|p| p.checked_sub(1).ok_or_else(|| D::Error::custom("indices are 1-based")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        SignedPermutation::new(perm, raw.signs).map_err(D::Error::custom)
    }
}

fn check_dims(a_hat: ArrayView2<f64>, a: ArrayView2<f64>) -> Result<()> {
    if a_hat.dim() != a.dim() {
        return Err(LoveError::Structure(format!(
            "cannot align {:?} estimate with {:?} truth",
            a_hat.dim(),
            a.dim()
        )));
    }
    Ok(())
}

/// Signed permutation minimizing `‖A − ÂP‖_F`. Columns decouple, so the
/// per-pair cost `min(‖Â_a − A_b‖², ‖Â_a + A_b‖²)` fed to an optimal
/// assignment gives the exact minimizer.
pub fn align_signed_permutation(a_hat: ArrayView2<f64>, a: ArrayView2<f64>) -> Result<SignedPermutation> {
    check_dims(a_hat, a)?;
    let k = a.ncols();
    let mut cost = vec![vec![0.0; k]; k];
    let mut sign = vec![vec![1i8; k]; k];
    for b in 0..k {
        for e in 0..k {
            let (mut plus, mut minus) = (0.0, 0.0);
            for (x, y) in a_hat.column(e).iter().zip(a.column(b)) {
                plus += (x - y) * (x - y);
                minus += (x + y) * (x + y);
            }
            // Row b is the truth column, entry e the estimated one.
            if minus < plus {
                cost[b][e] = minus;
                sign[b][e] = -1;
            } else {
                cost[b][e] = plus;
            }
        }
    }
    let perm = min_cost_assignment(&cost);
    let signs = perm.iter().enumerate().map(|(b, &e)| sign[b][e]).collect();
    Ok(SignedPermutation { perm, signs })
}

/// `‖A − ÂP‖_F²`.
pub fn aligned_sq_error(a_hat: ArrayView2<f64>, a: ArrayView2<f64>, alignment: &SignedPermutation) -> f64 {
    let aligned = alignment.apply(a_hat);
    aligned.iter().zip(a.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Max over rows of `‖(ÂP)_i − A_i‖_q`; `q = ∞` is allowed.
pub fn lq_loss(a_hat: ArrayView2<f64>, a: ArrayView2<f64>, q: f64, alignment: &SignedPermutation) -> f64 {
    let diff = alignment.apply(a_hat) - a;
    diff.rows().into_iter().map(|r| linalg::lq(r, q)).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LqLosses {
    #[serde(rename = "1")]
    pub l1: f64,
    #[serde(rename = "2")]
    pub l2: f64,
    #[serde(rename = "inf")]
    pub linf: f64,
}

/// Entrywise `‖ÂP − A‖₁ / (pK)` and `‖ÂP − A‖_F / √(pK)`.
pub fn scaled_errors(a_hat: ArrayView2<f64>, a: ArrayView2<f64>, alignment: &SignedPermutation) -> (f64, f64) {
    let diff = alignment.apply(a_hat) - a;
    let pk = diff.len() as f64;
    let l1: f64 = diff.iter().map(|d| d.abs()).sum();
    let fro = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
    (l1 / pk, fro / pk.sqrt())
}

/// `L_q / (10 s^{1/q} ‖C⁻¹‖∞,1 δ′)`, the loss relative to its rate bound.
pub fn rate_ratio(lq: f64, q: f64, sparsity: usize, sensitivity_norm: f64, delta_prime: f64) -> f64 {
    let s_term = if q.is_infinite() { 1.0 } else { (sparsity as f64).powf(1.0 / q) };
    lq / (10.0 * s_term * sensitivity_norm * delta_prime)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterMetrics {
    pub tfpp: f64,
    pub tfnp: f64,
    pub gfpp: Vec<f64>,
    pub gfnp: Vec<f64>,
}

fn membership(groups: &[Vec<usize>], p: usize) -> Vec<Vec<bool>> {
    groups
        .iter()
        .map(|g| {
            let mut m = vec![false; p];
            for &i in g {
                m[i] = true;
            }
            m
        })
        .collect()
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Group and total false positive/negative proportions. `est` must already
/// be aligned (see [`SignedPermutation::apply_clusters`]); `p` is the number
/// of variables.
pub fn cluster_metrics(est: &ClusterSet, truth: &ClusterSet, p: usize) -> Result<ClusterMetrics> {
    if est.k() != truth.k() {
        return Err(LoveError::Structure(format!(
            "cluster metrics need K̂ = K, got {} and {}",
            est.k(),
            truth.k()
        )));
    }
    let e = membership(&est.groups, p);
    let t = membership(&truth.groups, p);
    let (mut fp, mut comp, mut fneg, mut size) = (0, 0, 0, 0);
    let mut gfpp = Vec::with_capacity(t.len());
    let mut gfnp = Vec::with_capacity(t.len());
    for (ea, ta) in e.iter().zip(&t) {
        let g_size = ta.iter().filter(|&&x| x).count();
        let g_comp = p - g_size;
        let g_fp = (0..p).filter(|&i| !ta[i] && ea[i]).count();
        let g_fn = (0..p).filter(|&i| ta[i] && !ea[i]).count();
        gfpp.push(ratio(g_fp, g_comp));
        gfnp.push(ratio(g_fn, g_size));
        fp += g_fp;
        comp += g_comp;
        fneg += g_fn;
        size += g_size;
    }
    Ok(ClusterMetrics {
        tfpp: ratio(fp, comp),
        tfnp: ratio(fneg, size),
        gfpp,
        gfnp,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionMetrics {
    pub dfpp: f64,
    pub dfnp: f64,
    /// Set when a denominator was zero and the ratio defaulted to 0.
    pub degenerate: bool,
}

/// `DFPP = Σ|G_a¹ ∩ Ĝ_a²| / Σ|G_a¹|` and `DFNP = Σ|G_a² ∩ Ĝ_a¹| / Σ|G_a²|`,
/// on aligned estimates (alignment flips swap Ĝ¹ and Ĝ²).
pub fn direction_metrics(est: &ClusterSet, truth: &ClusterSet) -> Result<DirectionMetrics> {
    if est.k() != truth.k() {
        return Err(LoveError::Structure("direction metrics need K̂ = K".into()));
    }
    let count = |x: &[usize], y: &[usize]| x.iter().filter(|i| y.contains(i)).count();
    let (mut fp, mut pos, mut fneg, mut neg) = (0, 0, 0, 0);
    for ((tp, tn), (ep, en)) in truth.direction.iter().zip(&est.direction) {
        fp += count(tp, en);
        pos += tp.len();
        fneg += count(tn, ep);
        neg += tn.len();
    }
    Ok(DirectionMetrics {
        dfpp: ratio(fp, pos),
        dfnp: ratio(fneg, neg),
        degenerate: pos == 0 || neg == 0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMetrics {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub sn: f64,
    pub sp: f64,
    /// Set when a denominator was zero and the ratio defaulted to 1.
    pub degenerate: bool,
}

fn co_membership(groups: &[Vec<usize>], p: usize) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; p]; p];
    for g in groups {
        for &i in g {
            for &j in g {
                m[i][j] = true;
            }
        }
    }
    m
}

/// Sensitivity and specificity of pairwise co-membership over all `j < k`.
/// The noise cluster does not count as a cluster.
pub fn pairwise_sn_sp(est: &ClusterSet, truth: &ClusterSet, p: usize) -> PairwiseMetrics {
    let e = co_membership(&est.groups, p);
    let t = co_membership(&truth.groups, p);
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for j in 0..p {
        for k in j + 1..p {
            match (t[j][k], e[j][k]) {
                (true, true) => tp += 1,
                (false, false) => tn += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
            }
        }
    }
    let frac = |a: usize, b: usize| if a + b == 0 { 1.0 } else { a as f64 / (a + b) as f64 };
    PairwiseMetrics {
        tp,
        tn,
        fp,
        fn_,
        sn: frac(tp, fn_),
        sp: frac(tn, fp),
        degenerate: tp + fn_ == 0 || tn + fp == 0,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportCheck {
    /// supp(Â) ⊆ supp(A).
    pub support_recovered: bool,
    /// Signs agree wherever both are nonzero.
    pub sign_consistent: bool,
    /// supp(A_{J₂}) ⊆ supp(Â).
    pub j2_support_contained: bool,
    pub extra_support: usize,
    pub sign_mismatches: usize,
    pub missed_j2: usize,
}

/// Support and sign checks on an aligned estimate. Entries with magnitude
/// at most `zero_tol` count as zero.
pub fn support_sign_check(
    aligned: ArrayView2<f64>,
    model: &FactorModel,
    diagnostics: &TruthDiagnostics,
    zero_tol: f64,
) -> Result<SupportCheck> {
    check_dims(aligned, model.a.view())?;
    let nz = |v: f64| v.abs() > zero_tol;
    let (mut extra, mut mismatch, mut missed) = (0, 0, 0);
    for (&truth, &est) in model.a.iter().zip(aligned.iter()) {
        if nz(est) && truth == 0.0 {
            extra += 1;
        }
        if nz(est) && truth != 0.0 && est.signum() != truth.signum() {
            mismatch += 1;
        }
    }
    for &j in &diagnostics.j2 {
        for a in 0..model.k() {
            if model.a[[j, a]] != 0.0 && !nz(aligned[[j, a]]) {
                missed += 1;
            }
        }
    }
    Ok(SupportCheck {
        support_recovered: extra == 0,
        sign_consistent: mismatch == 0,
        j2_support_contained: missed == 0,
        extra_support: extra,
        sign_mismatches: mismatch,
        missed_j2: missed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k: usize,
    pub k_hat: usize,
    pub k_correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<SignedPermutation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lq_losses: Option<LqLosses>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled_l1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled_frobenius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<ClusterMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<DirectionMetrics>,
    pub pairwise: PairwiseMetrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<SupportCheck>,
    /// `L∞ / (10 ‖C⁻¹‖∞,1 δ′)`, present when δ was supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_ratio_inf: Option<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct EvalOptions {
    pub zero_tol: f64,
    /// δ and μ for the truth diagnostics behind the support check.
    pub delta_mu: Option<(f64, f64)>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            zero_tol: 0.0,
            delta_mu: None,
        }
    }
}

/// Full comparison of an estimated loading matrix with the true model.
pub fn evaluate(a_hat: ArrayView2<f64>, model: &FactorModel, options: EvalOptions) -> Result<EvalReport> {
    let p = model.p();
    if a_hat.nrows() != p {
        return Err(LoveError::Dimension(format!(
            "estimate has {} rows, truth has {p}",
            a_hat.nrows()
        )));
    }
    let truth_clusters = clusters_from_a(model.a.view(), 0.0);
    let est_clusters = clusters_from_a(a_hat, options.zero_tol);
    let pairwise = pairwise_sn_sp(&est_clusters, &truth_clusters, p);
    let k_hat = a_hat.ncols();
    let mut report = EvalReport {
        k: model.k(),
        k_hat,
        k_correct: k_hat == model.k(),
        alignment: None,
        lq_losses: None,
        scaled_l1: None,
        scaled_frobenius: None,
        clusters: None,
        direction: None,
        pairwise,
        support: None,
        rate_ratio_inf: None,
    };
    if !report.k_correct {
        return Ok(report);
    }
    let a = model.a.view();
    let align = align_signed_permutation(a_hat, a)?;
    let aligned_clusters = align.apply_clusters(&est_clusters);
    let lq = LqLosses {
        l1: lq_loss(a_hat, a, 1.0, &align),
        l2: lq_loss(a_hat, a, 2.0, &align),
        linf: lq_loss(a_hat, a, f64::INFINITY, &align),
    };
    let (l1, fro) = scaled_errors(a_hat, a, &align);
    report.clusters = Some(cluster_metrics(&aligned_clusters, &truth_clusters, p)?);
    report.direction = Some(direction_metrics(&aligned_clusters, &truth_clusters)?);
    if let Some((delta, mu)) = options.delta_mu {
        let diag = model.truth_diagnostics(delta, mu)?;
        let aligned = align.apply(a_hat);
        report.support = Some(support_sign_check(aligned.view(), model, &diag, options.zero_tol)?);
        report.rate_ratio_inf = Some(rate_ratio(
            lq.linf,
            f64::INFINITY,
            diag.sparsity,
            diag.sensitivity_norm,
            diag.delta_prime,
        ));
    }
    report.lq_losses = Some(lq);
    report.scaled_l1 = Some(l1);
    report.scaled_frobenius = Some(fro);
    report.alignment = Some(align);
    Ok(report)
}
