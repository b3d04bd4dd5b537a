//! Diagnostics over a pipeline run: pair-category distributions, cluster
//! impurity, and listings of wrong links and missed pairs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::clustering::ClusterAssignment;
use crate::corpus::{Corpus, GoldClusterMap, Split};
use crate::heuristic::{CategoryCounts, MatchRule, PairVerdict};
use crate::pairs::MentionPair;
use crate::scorer_bridge::ScoreRecord;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryFractions {
    pub p_easy: f64,
    pub p_hard: f64,
    pub p_fn: f64,
    pub p_tn: f64,
    pub p_recovered: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitDistribution {
    pub counts: CategoryCounts,
    pub fractions: CategoryFractions,
    pub total_pairs: usize,
    pub coreferent: usize,
    pub non_coreferent: usize,
    pub coreferent_fraction: f64,
}

pub type DistributionReport = BTreeMap<Split, SplitDistribution>;

fn frac(n: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        n as f64 / total as f64
    }
}

pub fn split_distribution(counts: &CategoryCounts) -> SplitDistribution {
    let total = counts.total();
    let coreferent = counts.coreferent();
    SplitDistribution {
        counts: *counts,
        fractions: CategoryFractions {
            p_easy: frac(counts.p_easy, total),
            p_hard: frac(counts.p_hard, total),
            p_fn: frac(counts.p_fn, total),
            p_tn: frac(counts.p_tn, total),
            p_recovered: frac(counts.p_recovered, total),
        },
        total_pairs: total,
        coreferent,
        non_coreferent: total - coreferent,
        coreferent_fraction: frac(coreferent, total),
    }
}

pub fn distribution_report(per_split: &BTreeMap<Split, CategoryCounts>) -> DistributionReport {
    per_split
        .iter()
        .map(|(s, c)| (*s, split_distribution(c)))
        .collect()
}

pub const DISTRIBUTION_CSV_HEADER: &str = "split,p_easy,p_hard,p_fn,p_tn,p_recovered,total_pairs,coreferent,non_coreferent,coreferent_fraction";

pub fn write_distribution_csv<W: Write>(report: &DistributionReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{DISTRIBUTION_CSV_HEADER}")?;
    for (split, d) in report {
        let c = &d.counts;
        writeln!(
            out,
            "{split},{},{},{},{},{},{},{},{},{}",
            c.p_easy, c.p_hard, c.p_fn, c.p_tn, c.p_recovered, d.total_pairs, d.coreferent, d.non_coreferent, d.coreferent_fraction
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurityEntry {
    pub cluster_id: String,
    /// Member pairs whose gold labels differ.
    pub impurity: usize,
    pub size: usize,
    /// `impurity / C(size, 2)`, 0 for singletons.
    pub impurity_fraction: f64,
}

/// Predicted clusters ordered by descending impurity, ties by cluster id.
pub fn purity_ranking(assignment: &ClusterAssignment, gold: &GoldClusterMap) -> Vec<PurityEntry> {
    let mut out: Vec<PurityEntry> = assignment
        .clusters()
        .into_iter()
        .map(|(id, members)| {
            let mut by_gold: HashMap<&str, usize> = HashMap::new();
            for m in &members {
                *by_gold.entry(gold.get(*m).map_or("", String::as_str)).or_default() += 1;
            }
            let pairs = |n: usize| n * n.saturating_sub(1) / 2;
            let size = members.len();
            let impurity = pairs(size) - by_gold.values().map(|&n| pairs(n)).sum::<usize>();
            PurityEntry {
                cluster_id: id.to_string(),
                impurity,
                size,
                impurity_fraction: frac(impurity, pairs(size)),
            }
        })
        .collect();
    out.sort_by(|x, y| y.impurity.cmp(&x.impurity).then_with(|| x.cluster_id.cmp(&y.cluster_id)));
    out
}

pub const PURITY_CSV_HEADER: &str = "cluster_id,impurity,size,impurity_fraction";

pub fn write_purity_csv<W: Write>(ranking: &[PurityEntry], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{PURITY_CSV_HEADER}")?;
    for e in ranking {
        writeln!(out, "{},{},{},{}", e.cluster_id, e.impurity, e.size, e.impurity_fraction)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// A predicted link between mentions of different gold clusters.
    FalsePositiveLink,
    /// A gold-coreferent pair left in different predicted clusters.
    FalseNegative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub kind: ErrorKind,
    pub a: String,
    pub b: String,
    pub trigger_a: String,
    pub trigger_b: String,
    pub sentence_a: String,
    pub sentence_b: String,
    pub predicted_a: String,
    pub predicted_b: String,
    pub gold_a: String,
    pub gold_b: String,
    pub rule: Option<MatchRule>,
    pub overlap: Option<f64>,
    pub symmetric_score: Option<f64>,
}

/// Lists wrong links among `edges` and the gold-coreferent verdict pairs that
/// ended up in different predicted clusters. False positives come first, each
/// group in pair order.
pub fn error_pairs(
    corpus: &Corpus,
    assignment: &ClusterAssignment,
    verdicts: &[PairVerdict],
    edges: &BTreeSet<MentionPair>,
    records: &[ScoreRecord],
) -> Vec<ErrorEntry> {
    let gold = corpus.gold();
    let verdict_of: HashMap<&MentionPair, &PairVerdict> = verdicts.iter().map(|v| (&v.pair, v)).collect();
    let score_of: HashMap<&MentionPair, f64> = records.iter().map(|r| (&r.pair, r.symmetric)).collect();

    let entry = |kind: ErrorKind, p: &MentionPair| -> Option<ErrorEntry> {
        let (ma, mb) = (corpus.mention(&p.a)?, corpus.mention(&p.b)?);
        let v = verdict_of.get(p);
        Some(ErrorEntry {
            kind,
            a: p.a.clone(),
            b: p.b.clone(),
            trigger_a: ma.trigger_text.clone(),
            trigger_b: mb.trigger_text.clone(),
            sentence_a: ma.sentence_lemmas.join(" "),
            sentence_b: mb.sentence_lemmas.join(" "),
            predicted_a: assignment.get(&p.a).unwrap_or_default().to_string(),
            predicted_b: assignment.get(&p.b).unwrap_or_default().to_string(),
            gold_a: gold.get(&p.a).cloned().unwrap_or_default(),
            gold_b: gold.get(&p.b).cloned().unwrap_or_default(),
            rule: v.map(|v| v.matched_rule),
            overlap: v.map(|v| v.overlap_score),
            symmetric_score: score_of.get(p).copied(),
        })
    };

    let mut out: Vec<ErrorEntry> = edges
        .iter()
        .filter(|p| gold.get(&p.a) != gold.get(&p.b))
        .filter_map(|p| entry(ErrorKind::FalsePositiveLink, p))
        .collect();
    let mut missed: Vec<&MentionPair> = verdicts
        .iter()
        .map(|v| &v.pair)
        .filter(|p| gold.get(&p.a) == gold.get(&p.b) && assignment.get(&p.a) != assignment.get(&p.b))
        .collect();
    missed.sort();
    missed.dedup();
    out.extend(missed.into_iter().filter_map(|p| entry(ErrorKind::FalseNegative, p)));
    out
}
