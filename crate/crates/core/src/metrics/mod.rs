//! Coreference evaluation: MUC, B³, CEAF_e, LEA and the CoNLL average.
//!
//! All metrics compare a key (gold) partition with a response partition over
//! the same mentions. Any component whose denominator is zero is reported as
//! 0, and F1 is 0 when recall and precision are both 0.
//!
//! Singletons follow the reference scorer conventions:
//!
//! * MUC ignores them (a singleton contributes no links to either side).
//! * B³ and CEAF_e treat them like any other entity.
//! * LEA gives a singleton entity one self-link, resolved only when the
//!   mention is also a singleton on the other side.

mod assignment;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::clustering::UnionFind;
use crate::error::{Error, Result};

/// Disjoint, nonempty mention sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    clusters: Vec<Vec<String>>,
}

impl Partition {
    pub fn new(clusters: Vec<Vec<String>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(clusters.len());
        for mut c in clusters {
            if c.is_empty() {
                return Err(Error::InvalidPartition("empty cluster".into()));
            }
            c.sort_unstable();
            for m in &c {
                if !seen.insert(m.clone()) {
                    return Err(Error::InvalidPartition(format!("mention `{m}` appears twice")));
                }
            }
            out.push(c);
        }
        out.sort_unstable();
        Ok(Self { clusters: out })
    }

    /// Groups mentions by label.
    pub fn from_labels(labels: &BTreeMap<String, String>) -> Self {
        let mut groups: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for (m, c) in labels {
            groups.entry(c).or_default().push(m.clone());
        }
        let mut clusters: Vec<Vec<String>> = groups.into_values().collect();
        clusters.sort_unstable();
        Self { clusters }
    }

    pub fn clusters(&self) -> &[Vec<String>] {
        &self.clusters
    }

    pub fn num_mentions(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

impl Score {
    pub fn new(recall: f64, precision: f64) -> Self {
        let f1 = if recall + precision == 0.0 {
            0.0
        } else {
            2.0 * recall * precision / (recall + precision)
        };
        Self {
            recall,
            precision,
            f1,
        }
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub muc: Score,
    #[serde(rename = "b3")]
    pub b_cubed: Score,
    #[serde(rename = "ceafe")]
    pub ceaf_e: Score,
    pub lea: Score,
    pub conll_f1: f64,
}

/// Cluster sizes on both sides plus the sparse overlap matrix.
struct Contingency {
    key_sizes: Vec<usize>,
    resp_sizes: Vec<usize>,
    /// (key cluster, response cluster) -> shared mentions
    overlap: BTreeMap<(usize, usize), usize>,
}

impl Contingency {
    fn build(key: &Partition, response: &Partition) -> Result<Self> {
        let mut resp_of: HashMap<&str, usize> = HashMap::new();
        for (j, c) in response.clusters.iter().enumerate() {
            for m in c {
                resp_of.insert(m, j);
            }
        }
        if key.num_mentions() != resp_of.len() {
            return Err(Error::UniverseMismatch);
        }
        let mut overlap = BTreeMap::new();
        for (i, c) in key.clusters.iter().enumerate() {
            for m in c {
                let j = *resp_of.get(m.as_str()).ok_or(Error::UniverseMismatch)?;
                *overlap.entry((i, j)).or_default() += 1;
            }
        }
        Ok(Self {
            key_sizes: key.clusters.iter().map(Vec::len).collect(),
            resp_sizes: response.clusters.iter().map(Vec::len).collect(),
            overlap,
        })
    }

    fn transposed(&self) -> Self {
        Self {
            key_sizes: self.resp_sizes.clone(),
            resp_sizes: self.key_sizes.clone(),
            overlap: self.overlap.iter().map(|(&(i, j), &n)| ((j, i), n)).collect(),
        }
    }

    fn muc_recall(&self) -> f64 {
        let mut touched = vec![0usize; self.key_sizes.len()];
        for &(i, _) in self.overlap.keys() {
            touched[i] += 1;
        }
        let num: usize = self.key_sizes.iter().zip(&touched).map(|(s, t)| s - t).sum();
        let den: usize = self.key_sizes.iter().map(|s| s - 1).sum();
        ratio(num as f64, den as f64)
    }

    fn b_cubed_recall(&self) -> f64 {
        let total: usize = self.key_sizes.iter().sum();
        let num: f64 = self
            .overlap
            .iter()
            .map(|(&(i, _), &n)| (n * n) as f64 / self.key_sizes[i] as f64)
            .sum();
        ratio(num, total as f64)
    }

    fn lea_recall(&self) -> f64 {
        let link = |n: usize| (n * n.saturating_sub(1) / 2) as f64;
        let mut resolved = vec![0.0; self.key_sizes.len()];
        for (&(i, j), &n) in &self.overlap {
            let size = self.key_sizes[i];
            if size == 1 {
                if self.resp_sizes[j] == 1 {
                    resolved[i] = 1.0;
                }
            } else {
                resolved[i] += link(n) / link(size);
            }
        }
        let num: f64 = self
            .key_sizes
            .iter()
            .zip(&resolved)
            .map(|(&s, r)| s as f64 * r)
            .sum();
        let den: usize = self.key_sizes.iter().sum();
        ratio(num, den as f64)
    }

    /// Total φ4 similarity of the best one-to-one entity alignment.
    fn ceaf_similarity(&self) -> f64 {
        let (nk, nr) = (self.key_sizes.len(), self.resp_sizes.len());
        // Entities that share no mention have φ4 = 0, so each connected
        // component of the overlap graph can be aligned on its own.
        let mut uf = UnionFind::new(nk + nr);
        for &(i, j) in self.overlap.keys() {
            uf.union(i, nk + j);
        }
        let mut comps: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for i in 0..nk {
            comps.entry(uf.find(i)).or_default().0.push(i);
        }
        for j in 0..nr {
            comps.entry(uf.find(nk + j)).or_default().1.push(j);
        }

        let mut total = 0.0;
        for (keys, resps) in comps.values() {
            if keys.is_empty() || resps.is_empty() {
                continue;
            }
            let weights: Vec<Vec<f64>> = keys
                .iter()
                .map(|&i| {
                    resps
                        .iter()
                        .map(|&j| {
                            let n = self.overlap.get(&(i, j)).copied().unwrap_or(0);
                            phi4(n, self.key_sizes[i], self.resp_sizes[j])
                        })
                        .collect()
                })
                .collect();
            total += if keys.len() == 1 && resps.len() == 1 {
                weights[0][0]
            } else {
                assignment::max_weight_matching(&weights)
            };
        }
        total
    }
}

pub(crate) fn phi4(shared: usize, key_size: usize, resp_size: usize) -> f64 {
    2.0 * shared as f64 / (key_size + resp_size) as f64
}

pub fn muc(key: &Partition, response: &Partition) -> Result<Score> {
    let c = Contingency::build(key, response)?;
    Ok(Score::new(c.muc_recall(), c.transposed().muc_recall()))
}

pub fn b_cubed(key: &Partition, response: &Partition) -> Result<Score> {
    let c = Contingency::build(key, response)?;
    Ok(Score::new(c.b_cubed_recall(), c.transposed().b_cubed_recall()))
}

pub fn ceaf_e(key: &Partition, response: &Partition) -> Result<Score> {
    let c = Contingency::build(key, response)?;
    let sim = c.ceaf_similarity();
    Ok(Score::new(
        ratio(sim, c.key_sizes.len() as f64),
        ratio(sim, c.resp_sizes.len() as f64),
    ))
}

pub fn lea(key: &Partition, response: &Partition) -> Result<Score> {
    let c = Contingency::build(key, response)?;
    Ok(Score::new(c.lea_recall(), c.transposed().lea_recall()))
}

pub fn evaluate(key: &Partition, response: &Partition) -> Result<MetricReport> {
    let c = Contingency::build(key, response)?;
    let t = c.transposed();
    let sim = c.ceaf_similarity();
    let muc = Score::new(c.muc_recall(), t.muc_recall());
    let b_cubed = Score::new(c.b_cubed_recall(), t.b_cubed_recall());
    let ceaf_e = Score::new(
        ratio(sim, c.key_sizes.len() as f64),
        ratio(sim, c.resp_sizes.len() as f64),
    );
    let lea = Score::new(c.lea_recall(), t.lea_recall());
    Ok(MetricReport {
        muc,
        b_cubed,
        ceaf_e,
        lea,
        conll_f1: (muc.f1 + b_cubed.f1 + ceaf_e.f1) / 3.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(clusters: &[&[&str]]) -> Partition {
        Partition::new(
            clusters
                .iter()
                .map(|c| c.iter().map(|s| s.to_string()).collect())
                .collect(),
        )
        .unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn worked_example() {
        let key = part(&[&["a", "b", "c"]]);
        let resp = part(&[&["a", "b"], &["c"]]);

        let m = muc(&key, &resp).unwrap();
        assert!(close(m.recall, 0.5) && close(m.precision, 1.0) && close(m.f1, 2.0 / 3.0));

        let b = b_cubed(&key, &resp).unwrap();
        assert!(close(b.recall, 5.0 / 9.0) && close(b.precision, 1.0) && close(b.f1, 5.0 / 7.0));

        let c = ceaf_e(&key, &resp).unwrap();
        assert!(close(c.recall, 0.8) && close(c.precision, 0.4) && close(c.f1, 8.0 / 15.0));

        let l = lea(&key, &resp).unwrap();
        assert!(close(l.recall, 1.0 / 3.0));
        // {a,b} fully resolved, {c} is a response singleton inside a key
        // 3-cluster, so its self-link is unresolved
        assert!(close(l.precision, 2.0 / 3.0));

        let r = evaluate(&key, &resp).unwrap();
        assert!(close(r.conll_f1, (2.0 / 3.0 + 5.0 / 7.0 + 8.0 / 15.0) / 3.0));
    }

    #[test]
    fn perfect_response() {
        let key = part(&[&["a", "b", "c"], &["d"], &["e", "f"]]);
        let r = evaluate(&key, &key.clone()).unwrap();
        for s in [r.muc, r.b_cubed, r.ceaf_e, r.lea] {
            assert_eq!((s.recall, s.precision, s.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(r.conll_f1, 1.0);
    }

    #[test]
    fn all_singletons_have_no_muc_links() {
        let key = part(&[&["a"], &["b"], &["c"]]);
        let m = muc(&key, &key).unwrap();
        assert_eq!((m.recall, m.precision, m.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn singleton_response_against_one_cluster() {
        let key = part(&[&["a", "b", "c"]]);
        let resp = part(&[&["a"], &["b"], &["c"]]);
        let b = b_cubed(&key, &resp).unwrap();
        assert!(close(b.recall, 1.0 / 3.0) && close(b.precision, 1.0));
        let key = part(&[&["a", "b"]]);
        let resp = part(&[&["a"], &["b"]]);
        assert_eq!(lea(&key, &resp).unwrap().recall, 0.0);
    }

    #[test]
    fn empty_partitions_give_zeros() {
        let empty = Partition::new(vec![]).unwrap();
        let r = evaluate(&empty, &empty).unwrap();
        assert_eq!(r, MetricReport::default());
    }

    #[test]
    fn universe_mismatch() {
        let key = part(&[&["a", "b"]]);
        assert!(matches!(muc(&key, &part(&[&["a"]])), Err(Error::UniverseMismatch)));
        assert!(matches!(muc(&key, &part(&[&["a"], &["c"]])), Err(Error::UniverseMismatch)));
    }

    #[test]
    fn invalid_partitions() {
        assert!(Partition::new(vec![vec![]]).is_err());
        assert!(Partition::new(vec![vec!["a".into()], vec!["a".into()]]).is_err());
    }
}
