//! The lemma heuristic.
//!
//! A pair is a heuristic positive when its triggers match under one of four
//! rules and the stop-filtered sentence lemmas of the two mentions overlap by
//! strictly more than the configured threshold. The rules, in reporting order:
//!
//! 1. the head lemmas form a synonymous pair,
//! 2. the head lemmas are equal,
//! 3. the second trigger contains the first lemma,
//! 4. the first trigger contains the second lemma.
//!
//! Containment is a case-insensitive substring test on the raw trigger text.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::{connected_components, CorefGraph, UnionFind};
use crate::corpus::{Corpus, GoldClusterMap, Mention};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::metrics::{evaluate, Partition};
use crate::pairs::{all_pairs_with, generate_candidates_with, MentionPair, TopicKey};
use crate::syn_pairs::SynPairSet;

/// Stop lemmas shipped with the crate, one per line.
pub const DEFAULT_STOP_LEMMAS: &str = include_str!("../data/stop_lemmas_en.txt");

pub fn parse_stop_lemmas(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapMeasure {
    /// |A ∩ B| / |A ∪ B|
    #[default]
    Jaccard,
    /// |A ∩ B| / min(|A|, |B|)
    #[serde(rename = "min")]
    MinOverlap,
}

impl FromStr for OverlapMeasure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jaccard" => Ok(OverlapMeasure::Jaccard),
            "min" => Ok(OverlapMeasure::MinOverlap),
            other => Err(format!("unknown overlap measure `{other}` (expected jaccard or min)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeuristicConfig {
    pub threshold: f64,
    pub stop_lemmas: BTreeSet<String>,
    pub overlap_measure: OverlapMeasure,
    /// Treat pairs from the same sentence of the same document as negatives.
    pub exclude_same_sentence: bool,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self {
            threshold: 0.05,
            stop_lemmas: parse_stop_lemmas(DEFAULT_STOP_LEMMAS),
            overlap_measure: OverlapMeasure::Jaccard,
            exclude_same_sentence: false,
        }
    }
}

impl HeuristicConfig {
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_threshold(self.threshold)
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::InvalidThreshold(t))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchRule {
    SynPair,
    EqualLemma,
    /// The second trigger contains the first mention's lemma.
    AContainsB,
    /// The first trigger contains the second mention's lemma.
    BContainsA,
    None,
}

impl fmt::Display for MatchRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MatchRule::SynPair => "syn_pair",
            MatchRule::EqualLemma => "equal_lemma",
            MatchRule::AContainsB => "a_contains_b",
            MatchRule::BContainsA => "b_contains_a",
            MatchRule::None => "none",
        };
        f.write_str(s)
    }
}

pub fn trigger_match(a: &Mention, b: &Mention, syn: &SynPairSet) -> MatchRule {
    if syn.contains(&a.head_lemma, &b.head_lemma) {
        MatchRule::SynPair
    } else if a.head_lemma == b.head_lemma {
        MatchRule::EqualLemma
    } else if b.trigger_text.to_lowercase().contains(&a.head_lemma) {
        MatchRule::AContainsB
    } else if a.trigger_text.to_lowercase().contains(&b.head_lemma) {
        MatchRule::BContainsA
    } else {
        MatchRule::None
    }
}

/// Sorted, deduplicated sentence lemmas with stop lemmas removed.
fn content_lemmas<'a>(m: &'a Mention, stop: &BTreeSet<String>) -> Vec<&'a str> {
    let mut v: Vec<&str> = m
        .sentence_lemmas
        .iter()
        .map(String::as_str)
        .filter(|l| !stop.contains(*l))
        .collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn intersection_size(x: &[&str], y: &[&str]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < x.len() && j < y.len() {
        match x[i].cmp(y[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

fn overlap_of(x: &[&str], y: &[&str], measure: OverlapMeasure) -> f64 {
    let inter = intersection_size(x, y);
    match measure {
        OverlapMeasure::Jaccard => {
            let union = x.len() + y.len() - inter;
            if union == 0 {
                0.0
            } else {
                inter as f64 / union as f64
            }
        }
        OverlapMeasure::MinOverlap => {
            let smaller = x.len().min(y.len());
            if smaller == 0 {
                0.0
            } else {
                inter as f64 / smaller as f64
            }
        }
    }
}

pub fn sentence_overlap(a: &Mention, b: &Mention, cfg: &HeuristicConfig) -> f64 {
    overlap_of(
        &content_lemmas(a, &cfg.stop_lemmas),
        &content_lemmas(b, &cfg.stop_lemmas),
        cfg.overlap_measure,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    #[serde(flatten)]
    pub pair: MentionPair,
    #[serde(rename = "positive")]
    pub heuristic_positive: bool,
    #[serde(rename = "overlap")]
    pub overlap_score: f64,
    #[serde(rename = "rule")]
    pub matched_rule: MatchRule,
}

impl PairVerdict {
    /// Recomputes positivity at another threshold.
    pub fn positive_at(&self, threshold: f64) -> bool {
        self.matched_rule != MatchRule::None && self.overlap_score > threshold
    }
}

fn same_sentence(corpus: &Corpus, pair: &MentionPair) -> bool {
    match (corpus.mention(&pair.a), corpus.mention(&pair.b)) {
        (Some(a), Some(b)) => a.doc_id == b.doc_id && a.sentence_id == b.sentence_id,
        _ => false,
    }
}

/// Per-mention data reused across many pair evaluations.
struct Prepared<'c> {
    corpus: &'c Corpus,
    lemmas: Vec<Vec<&'c str>>,
}

impl<'c> Prepared<'c> {
    fn new(corpus: &'c Corpus, cfg: &HeuristicConfig) -> Self {
        let lemmas = corpus
            .mentions()
            .iter()
            .map(|m| content_lemmas(m, &cfg.stop_lemmas))
            .collect();
        Self { corpus, lemmas }
    }

    fn lookup(&self, id: &str) -> Result<usize> {
        self.corpus
            .position(id)
            .ok_or_else(|| Error::UnknownMentionId(id.to_string()))
    }

    fn verdict(&self, pair: &MentionPair, syn: &SynPairSet, cfg: &HeuristicConfig) -> Result<PairVerdict> {
        let (i, j) = (self.lookup(&pair.a)?, self.lookup(&pair.b)?);
        let ms = self.corpus.mentions();
        let (a, b) = (&ms[i], &ms[j]);
        let rule = trigger_match(a, b, syn);
        let overlap = overlap_of(&self.lemmas[i], &self.lemmas[j], cfg.overlap_measure);
        let same_sentence = a.doc_id == b.doc_id && a.sentence_id == b.sentence_id;
        let positive = rule != MatchRule::None
            && overlap > cfg.threshold
            && !(cfg.exclude_same_sentence && same_sentence);
        Ok(PairVerdict {
            pair: pair.clone(),
            heuristic_positive: positive,
            overlap_score: overlap,
            matched_rule: rule,
        })
    }
}

pub fn classify_pairs(
    pairs: &[MentionPair],
    corpus: &Corpus,
    syn: &SynPairSet,
    cfg: &HeuristicConfig,
) -> Result<Vec<PairVerdict>> {
    classify_pairs_with(Execution::default(), pairs, corpus, syn, cfg)
}

pub fn classify_pairs_with(
    exec: Execution,
    pairs: &[MentionPair],
    corpus: &Corpus,
    syn: &SynPairSet,
    cfg: &HeuristicConfig,
) -> Result<Vec<PairVerdict>> {
    cfg.validate()?;
    let prepared = Prepared::new(corpus, cfg);
    exec.map(pairs, |p| prepared.verdict(p, syn, cfg))
        .into_iter()
        .collect()
}

/// Where a pair lands relative to gold once the heuristic has spoken.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairCategory {
    /// Positive and gold-coreferent.
    PEasy,
    /// Positive but not gold-coreferent.
    PHard,
    /// Gold-coreferent, negative, and not reachable through positive
    /// coreferent links inside its gold cluster.
    PFalseNeg,
    /// Gold-coreferent and negative, but recovered by transitive closure.
    PEasyRecovered,
    /// Negative and not gold-coreferent.
    PTrueNeg,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub p_easy: usize,
    pub p_hard: usize,
    pub p_fn: usize,
    pub p_tn: usize,
    pub p_recovered: usize,
}

impl CategoryCounts {
    pub fn total(&self) -> usize {
        self.p_easy + self.p_hard + self.p_fn + self.p_tn + self.p_recovered
    }

    pub fn coreferent(&self) -> usize {
        self.p_easy + self.p_fn + self.p_recovered
    }

    fn add(&mut self, c: PairCategory) {
        match c {
            PairCategory::PEasy => self.p_easy += 1,
            PairCategory::PHard => self.p_hard += 1,
            PairCategory::PFalseNeg => self.p_fn += 1,
            PairCategory::PEasyRecovered => self.p_recovered += 1,
            PairCategory::PTrueNeg => self.p_tn += 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Categorization {
    /// One category per input verdict, in input order.
    pub categories: Vec<(MentionPair, PairCategory)>,
    pub counts: CategoryCounts,
}

impl Categorization {
    pub fn get(&self, pair: &MentionPair) -> Option<PairCategory> {
        self.categories
            .iter()
            .find(|(p, _)| p == pair)
            .map(|(_, c)| *c)
    }
}

/// Assigns every verdict a [`PairCategory`]. Gold-coreferent negatives count as
/// false negatives only when no chain of positive gold-coreferent pairs joins
/// their two mentions.
///
/// The verdicts must cover every within-group pair; a gold cluster whose
/// pairs are only partly present is rejected.
pub fn categorize_pairs(verdicts: &[PairVerdict], gold: &GoldClusterMap) -> Result<Categorization> {
    let label = |id: &str| -> Result<&str> {
        gold.get(id)
            .map(String::as_str)
            .ok_or_else(|| Error::UnknownMentionId(id.to_string()))
    };

    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut members: BTreeMap<&str, usize> = BTreeMap::new();
    let mut coref_pairs: BTreeMap<&str, usize> = BTreeMap::new();
    for v in verdicts {
        for id in [v.pair.a.as_str(), v.pair.b.as_str()] {
            let next = ids.len();
            if let std::collections::hash_map::Entry::Vacant(e) = ids.entry(id) {
                e.insert(next);
                *members.entry(label(id)?).or_default() += 1;
            }
        }
        let (la, lb) = (label(&v.pair.a)?, label(&v.pair.b)?);
        if la == lb {
            *coref_pairs.entry(la).or_default() += 1;
        }
    }
    for (cluster, &n) in &members {
        let have = coref_pairs.get(cluster).copied().unwrap_or(0);
        if have != n * (n - 1) / 2 {
            return Err(Error::InconsistentPairSet(cluster.to_string()));
        }
    }

    let mut uf = UnionFind::new(ids.len());
    for v in verdicts {
        if v.heuristic_positive && gold[&v.pair.a] == gold[&v.pair.b] {
            uf.union(ids[v.pair.a.as_str()], ids[v.pair.b.as_str()]);
        }
    }

    let mut counts = CategoryCounts::default();
    let categories = verdicts
        .iter()
        .map(|v| {
            let coref = gold[&v.pair.a] == gold[&v.pair.b];
            let cat = match (v.heuristic_positive, coref) {
                (true, true) => PairCategory::PEasy,
                (true, false) => PairCategory::PHard,
                (false, false) => PairCategory::PTrueNeg,
                (false, true) => {
                    if uf.find(ids[v.pair.a.as_str()]) == uf.find(ids[v.pair.b.as_str()]) {
                        PairCategory::PEasyRecovered
                    } else {
                        PairCategory::PFalseNeg
                    }
                }
            };
            counts.add(cat);
            (v.pair.clone(), cat)
        })
        .collect();
    Ok(Categorization { categories, counts })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuneObjective {
    /// CoNLL F1 of the clusters formed by heuristic positives alone.
    #[default]
    ConllF1,
    /// Negated `|P_easy - P_hard| + P_fn`: prefers a balanced positive set
    /// that loses few coreferent pairs.
    Balance,
}

impl FromStr for TuneObjective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "conll" | "conll_f1" => Ok(TuneObjective::ConllF1),
            "balance" => Ok(TuneObjective::Balance),
            other => Err(format!("unknown objective `{other}` (expected conll or balance)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub objective: TuneObjective,
    pub threshold: f64,
    /// (threshold, objective value) in ascending threshold order.
    pub grid: Vec<(f64, f64)>,
}

/// Picks the grid threshold that maximizes `objective` on `dev`; ties go to
/// the smaller threshold. `base` supplies everything but the threshold.
pub fn tune_threshold(
    dev: &Corpus,
    key: TopicKey,
    syn: &SynPairSet,
    base: &HeuristicConfig,
    grid: &[f64],
    objective: TuneObjective,
) -> Result<TuneReport> {
    tune_threshold_with(Execution::default(), dev, key, syn, base, grid, objective)
}

pub fn tune_threshold_with(
    exec: Execution,
    dev: &Corpus,
    key: TopicKey,
    syn: &SynPairSet,
    base: &HeuristicConfig,
    grid: &[f64],
    objective: TuneObjective,
) -> Result<TuneReport> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for &t in grid {
        check_threshold(t)?;
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();

    // Overlaps do not depend on the threshold, so score once at 0 and
    // re-threshold per grid point.
    let scoring = base.clone().with_threshold(0.0);
    let pairs = match objective {
        TuneObjective::ConllF1 => generate_candidates_with(exec, dev, key, None, syn)?.pairs,
        TuneObjective::Balance => all_pairs_with(exec, dev, key, None)?,
    };
    let scored = classify_pairs_with(exec, &pairs, dev, syn, &scoring)?;
    let excluded: Vec<bool> = scored
        .iter()
        .map(|v| base.exclude_same_sentence && same_sentence(dev, &v.pair))
        .collect();
    let key_partition = Partition::from_labels(dev.gold());
    let nodes: Vec<String> = dev.mentions().iter().map(|m| m.mention_id.clone()).collect();

    let values = exec.map(&sorted, |&t| -> Result<f64> {
        let rethresholded: Vec<PairVerdict> = scored
            .iter()
            .zip(&excluded)
            .map(|(v, &ex)| PairVerdict {
                heuristic_positive: !ex && v.positive_at(t),
                ..v.clone()
            })
            .collect();
        match objective {
            TuneObjective::ConllF1 => {
                let edges = rethresholded
                    .iter()
                    .filter(|v| v.heuristic_positive)
                    .map(|v| v.pair.clone());
                let graph = CorefGraph::new(nodes.clone(), edges)?;
                let response = connected_components(&graph).to_partition();
                Ok(evaluate(&key_partition, &response)?.conll_f1)
            }
            TuneObjective::Balance => {
                let c = categorize_pairs(&rethresholded, dev.gold())?.counts;
                Ok(-((c.p_easy.abs_diff(c.p_hard) + c.p_fn) as f64))
            }
        }
    });

    let mut grid_values = Vec::with_capacity(sorted.len());
    for (t, v) in sorted.iter().zip(values) {
        grid_values.push((*t, v?));
    }
    let mut best = grid_values[0];
    for &(t, v) in &grid_values[1..] {
        if v > best.1 {
            best = (t, v);
        }
    }
    Ok(TuneReport {
        objective,
        threshold: best.0,
        grid: grid_values,
    })
}
