//! Overlapping clusters read off the support of Â.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

/// Clusters `Ĝ_a = supp(Â_·a)`, the noise cluster of all-zero rows, and each
/// cluster's split by loading sign. Indices are 0-based in memory and
/// 1-based in JSON.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClusterSet {
    pub groups: Vec<Vec<usize>>,
    pub noise: Vec<usize>,
    /// `(positive, negative)` members per cluster.
    pub direction: Vec<(Vec<usize>, Vec<usize>)>,
}

impl ClusterSet {
    pub fn k(&self) -> usize {
        self.groups.len()
    }

    /// Cluster set with clusters reordered (`order[new] = old`) and the sign
    /// of each cluster optionally flipped, which swaps its direction halves.
    pub fn relabeled(&self, order: &[usize], flip: &[bool]) -> ClusterSet {
        ClusterSet {
            groups: order.iter().map(|&o| self.groups[o].clone()).collect(),
            noise: self.noise.clone(),
            direction: order
                .iter()
                .zip(flip)
                .map(|(&o, &f)| {
                    let (pos, neg) = self.direction[o].clone();
                    if f {
                        (neg, pos)
                    } else {
                        (pos, neg)
                    }
                })
                .collect(),
        }
    }
}

/// Entries with `|Â_ia| ≤ zero_tol` count as zero.
pub fn clusters_from_a(a_hat: ArrayView2<f64>, zero_tol: f64) -> ClusterSet {
    let (p, k) = a_hat.dim();
    let mut groups = vec![Vec::new(); k];
    let mut direction = vec![(Vec::new(), Vec::new()); k];
    let mut noise = Vec::new();
    for i in 0..p {
        let mut any = false;
        for a in 0..k {
            let v = a_hat[[i, a]];
            if v.abs() > zero_tol {
                any = true;
                groups[a].push(i);
                if v > 0.0 {
                    direction[a].0.push(i);
                } else {
                    direction[a].1.push(i);
                }
            }
        }
        if !any {
            noise.push(i);
        }
    }
    ClusterSet {
        groups,
        noise,
        direction,
    }
}

#[derive(Serialize, Deserialize)]
struct DirectionJson {
    pos: Vec<usize>,
    neg: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct ClusterJson {
    #[serde(rename = "K")]
    k: usize,
    groups: Vec<Vec<usize>>,
    noise: Vec<usize>,
    direction: Vec<DirectionJson>,
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|i| i + 1).collect()
}

impl Serialize for ClusterSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ClusterJson {
            k: self.k(),
            groups: self.groups.iter().map(|g| one_based(g)).collect(),
            noise: one_based(&self.noise),
            direction: self
                .direction
                .iter()
                .map(|(p, n)| DirectionJson {
                    pos: one_based(p),
                    neg: one_based(n),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClusterSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = ClusterJson::deserialize(d)?;
        let zero = |v: Vec<usize>| -> Result<Vec<usize>, D::Error> {
            v.into_iter()
                .map(|i| i.checked_sub(1).ok_or_else(|| D::Error::custom("indices are 1-based")))
                .collect()
        };
        if raw.groups.len() != raw.k || raw.direction.len() != raw.k {
            return Err(D::Error::custom("K does not match the number of groups"));
        }
        Ok(ClusterSet {
            groups: raw.groups.into_iter().map(zero).collect::<Result<_, _>>()?,
            noise: zero(raw.noise)?,
            direction: raw
                .direction
                .into_iter()
                .map(|d| Ok((zero(d.pos)?, zero(d.neg)?)))
                .collect::<Result<_, D::Error>>()?,
        })
    }
}
