//! Pure-variable detection and the signed estimate of the pure rows of A.
//!
//! The detector scans the variables in ascending order. For each `i` it
//! collects the near-argmax set of row `i` of Σ̂, declares `i` pure when every
//! member `j` of that set has its own row maximum within `2δ` of `|Σ̂_ij|`,
//! and merges the set into the running partition: the first existing group
//! that intersects it is replaced by the intersection, otherwise the set
//! becomes a new group.

use serde::Serialize;

use crate::covariance::CovMatrix;
use crate::error::{LoveError, Result};
use crate::model::PurePartition;

/// Per-variable intermediate quantities of a detection pass.
#[derive(Clone, Debug, PartialEq)]
pub struct PureScan {
    /// `M_i = max_{j≠i} |Σ̂_ij|`.
    pub row_max: Vec<f64>,
    /// Indices attaining `M_i` exactly.
    pub argmax: Vec<Vec<usize>>,
    /// Near-argmax candidate sets, without `i` itself.
    pub candidates: Vec<Vec<usize>>,
    pub pure_flags: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Pure,
    /// `j` (1-based in JSON) has a row maximum too far from `|Σ̂_ij|`.
    NotPure { witness: usize },
    /// The whole row of Σ̂ is within `2δ` of zero.
    NoSignal,
}

#[derive(Clone, Debug)]
pub struct PureDetection {
    pub partition: PurePartition,
    pub scan: PureScan,
    pub verdicts: Vec<Verdict>,
    /// Indices removed because their group shrank below two members.
    pub dissolved: Vec<usize>,
}

impl PureDetection {
    pub fn k_hat(&self) -> usize {
        self.partition.k()
    }

    pub fn is_empty(&self) -> bool {
        self.partition.k() == 0
    }

    /// JSON diagnostic with one record per variable, 1-based.
    pub fn diagnostic_json(&self) -> serde_json::Value {
        let records: Vec<serde_json::Value> = self
            .verdicts
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut rec = serde_json::json!({ "index": i + 1, "pure": matches!(v, Verdict::Pure) });
                match v {
                    Verdict::NotPure { witness } => rec["witness"] = serde_json::json!(witness + 1),
                    Verdict::NoSignal => rec["reason"] = serde_json::json!("no_signal"),
                    Verdict::Pure => {}
                }
                rec
            })
            .collect();
        serde_json::json!({
            "variables": records,
            "dissolved": self.dissolved.iter().map(|i| i + 1).collect::<Vec<_>>(),
        })
    }
}

fn row_max(sigma: &CovMatrix, i: usize) -> f64 {
    (0..sigma.p())
        .filter(|&j| j != i)
        .map(|j| sigma.get(i, j).abs())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `{l ≠ i : max_{j≠i} |Σ̂_ij| ≤ |Σ̂_il| + 2δ}`.
pub fn candidate_set(sigma: &CovMatrix, i: usize, delta: f64) -> Vec<usize> {
    let m = row_max(sigma, i);
    (0..sigma.p())
        .filter(|&l| l != i && m <= sigma.get(i, l).abs() + 2.0 * delta)
        .collect()
}

fn merge(groups: &mut Vec<Vec<usize>>, candidate: Vec<usize>) {
    for g in groups.iter_mut() {
        if g.iter().any(|x| candidate.contains(x)) {
            g.retain(|x| candidate.contains(x));
            return;
        }
    }
    groups.push(candidate);
}

/// Estimates the pure-variable partition from a covariance matrix.
///
/// Variables whose largest off-diagonal `|Σ̂_ij|` does not exceed `2δ` are
/// never declared pure. Groups left with fewer than two members after the
/// scan are dissolved.
pub fn find_pure_variables(sigma: &CovMatrix, delta: f64) -> Result<PureDetection> {
    let p = sigma.p();
    if p < 2 {
        return Err(LoveError::Parameter(format!("need at least 2 variables, got {p}")));
    }
    if !(delta >= 0.0) {
        return Err(LoveError::Parameter(format!("delta must be nonnegative, got {delta}")));
    }
    let tol = 2.0 * delta;
    let maxima: Vec<f64> = (0..p).map(|i| row_max(sigma, i)).collect();
    let argmax: Vec<Vec<usize>> = (0..p)
        .map(|i| {
            (0..p)
                .filter(|&j| j != i && sigma.get(i, j).abs() == maxima[i])
                .collect()
        })
        .collect();

    let mut candidates = Vec::with_capacity(p);
    let mut verdicts = Vec::with_capacity(p);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..p {
        let cand: Vec<usize> = (0..p)
            .filter(|&l| l != i && maxima[i] <= sigma.get(i, l).abs() + tol)
            .collect();
        let verdict = if maxima[i] <= tol {
            Verdict::NoSignal
        } else {
            // The inner maximum runs over k ≠ j and so includes k = i.
            match cand
                .iter()
                .find(|&&j| (sigma.get(i, j).abs() - maxima[j]).abs() > tol)
            {
                Some(&witness) => Verdict::NotPure { witness },
                None => Verdict::Pure,
            }
        };
        if verdict == Verdict::Pure {
            let mut group = cand.clone();
            group.push(i);
            group.sort_unstable();
            merge(&mut groups, group);
        }
        candidates.push(cand);
        verdicts.push(verdict);
    }

    let mut dissolved = Vec::new();
    groups.retain(|g| {
        if g.len() < 2 {
            dissolved.extend_from_slice(g);
            false
        } else {
            true
        }
    });
    dissolved.sort_unstable();

    let partition = PurePartition::from_groups(groups);
    let pure_flags = (0..p).map(|i| partition.contains(i)).collect();
    Ok(PureDetection {
        partition,
        scan: PureScan {
            row_max: maxima,
            argmax,
            candidates,
            pure_flags,
        },
        verdicts,
        dissolved,
    })
}

/// Signed pure rows: the group's smallest index gets +1, every other member
/// the sign of its covariance with that anchor.
#[derive(Clone, Debug)]
pub struct PureRows {
    pub partition: PurePartition,
    /// Per group, the members sharing the anchor's sign and the rest.
    pub split: Vec<(Vec<usize>, Vec<usize>)>,
    pub warnings: Vec<String>,
}

pub fn estimate_pure_rows(sigma: &CovMatrix, partition: &PurePartition) -> Result<PureRows> {
    let mut signed = PurePartition::from_groups(partition.groups.clone());
    let mut split = Vec::with_capacity(signed.k());
    let mut warnings = Vec::new();
    for (a, group) in signed.groups.iter().enumerate() {
        if group.len() < 2 {
            return Err(LoveError::Structure(format!(
                "group {} has {} member(s); at least 2 are required",
                a + 1,
                group.len()
            )));
        }
        let anchor = group[0];
        let mut same = vec![anchor];
        let mut other = Vec::new();
        signed.signs.insert(anchor, 1);
        for &j in &group[1..] {
            let s = sigma.get(anchor, j);
            if s == 0.0 {
                warnings.push(format!(
                    "zero covariance between anchor {} and {}; sign set to +1",
                    anchor + 1,
                    j + 1
                ));
            }
            if s < 0.0 {
                signed.signs.insert(j, -1);
                other.push(j);
            } else {
                signed.signs.insert(j, 1);
                same.push(j);
            }
        }
        split.push((same, other));
    }
    Ok(PureRows {
        partition: signed,
        split,
        warnings,
    })
}
