//! Moment estimators built on the signed pure partition: the factor
//! covariance Ĉ and the per-row vectors θ̂ʲ.

use ndarray::{Array1, Array2};

use crate::covariance::CovMatrix;
use crate::error::{LoveError, Result};
use crate::model::PurePartition;

#[derive(Clone, Debug, PartialEq)]
pub struct FactorCov {
    pub values: Array2<f64>,
}

impl FactorCov {
    pub fn k(&self) -> usize {
        self.values.nrows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaVector {
    pub values: Array1<f64>,
    pub row_index: usize,
}

fn check_groups(partition: &PurePartition) -> Result<()> {
    if let Some((a, g)) = partition.groups.iter().enumerate().find(|(_, g)| g.len() < 2) {
        return Err(LoveError::Structure(format!(
            "group {} has {} member(s); at least 2 are required",
            a + 1,
            g.len()
        )));
    }
    if !partition.has_signs() {
        return Err(LoveError::Structure("pure partition has no signs".into()));
    }
    Ok(())
}

/// Ĉ_aa averages `|Σ̂_ij|` over ordered pairs `i ≠ j` in group a; Ĉ_ab
/// averages the sign-corrected `Σ̂_ij` over `i` in group a, `j` in group b.
pub fn estimate_c(sigma: &CovMatrix, partition: &PurePartition) -> Result<FactorCov> {
    check_groups(partition)?;
    let k = partition.k();
    let mut c = Array2::zeros((k, k));
    for (a, ga) in partition.groups.iter().enumerate() {
        let m = ga.len() as f64;
        let mut diag = 0.0;
        for &i in ga {
            for &j in ga {
                if i != j {
                    diag += sigma.get(i, j).abs();
                }
            }
        }
        c[[a, a]] = diag / (m * (m - 1.0));
        for (b, gb) in partition.groups.iter().enumerate().skip(a + 1) {
            let mut off = 0.0;
            for &i in ga {
                let si = partition.sign(i)?;
                for &j in gb {
                    off += si * partition.sign(j)? * sigma.get(i, j);
                }
            }
            let v = off / (m * gb.len() as f64);
            c[[a, b]] = v;
            c[[b, a]] = v;
        }
    }
    Ok(FactorCov { values: c })
}

/// θ̂ʲ_a = (1/|Î_a|) Σ_{i ∈ Î_a} Â_ia Σ̂_ij for a non-pure `j`.
pub fn estimate_theta(sigma: &CovMatrix, partition: &PurePartition, j: usize) -> Result<ThetaVector> {
    check_groups(partition)?;
    if partition.contains(j) {
        return Err(LoveError::Parameter(format!("variable {} is in the pure set", j + 1)));
    }
    theta_unchecked(sigma, partition, j).map(|values| ThetaVector { values, row_index: j })
}

fn theta_unchecked(sigma: &CovMatrix, partition: &PurePartition, j: usize) -> Result<Array1<f64>> {
    let mut theta = Array1::zeros(partition.k());
    for (a, g) in partition.groups.iter().enumerate() {
        let mut acc = 0.0;
        for &i in g {
            acc += partition.sign(i)? * sigma.get(i, j);
        }
        theta[a] = acc / g.len() as f64;
    }
    Ok(theta)
}

/// θ̂ for every variable outside the pure set, as a |Ĵ| x K̂ matrix with rows
/// in ascending variable order. Returns the row indices alongside.
pub fn estimate_theta_all(sigma: &CovMatrix, partition: &PurePartition) -> Result<(Vec<usize>, Array2<f64>)> {
    check_groups(partition)?;
    let rest: Vec<usize> = (0..sigma.p()).filter(|j| !partition.contains(*j)).collect();
    // Θ = Σ̂_{J,I} · B, where B holds sign/|Î_a| in column a.
    let pure = partition.pure_set();
    let mut weights = Array2::zeros((pure.len(), partition.k()));
    for (r, &i) in pure.iter().enumerate() {
        let a = partition.group_of(i).expect("pure index has a group");
        weights[[r, a]] = partition.sign(i)? / partition.groups[a].len() as f64;
    }
    let cross = Array2::from_shape_fn((rest.len(), pure.len()), |(r, c)| sigma.get(rest[r], pure[c]));
    Ok((rest, cross.dot(&weights)))
}
