//! Mention-pair generation within topic boundaries.
//!
//! [`all_pairs`] enumerates every within-group pair. [`generate_candidates`]
//! returns only the pairs whose triggers match under
//! [`trigger_match`](crate::heuristic::trigger_match), without visiting the
//! non-matching ones: mentions are bucketed by head lemma, and each bucket is
//! probed against itself, its synonym-paired buckets, and the mentions whose
//! trigger text contains its lemma.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Mention};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::syn_pairs::SynPairSet;

/// An unordered mention pair, stored with `a < b`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MentionPair {
    pub a: String,
    pub b: String,
}

impl MentionPair {
    /// Canonicalizes the order. Panics on a self-pair.
    pub fn new(x: impl Into<String>, y: impl Into<String>) -> Self {
        let (x, y) = (x.into(), y.into());
        assert_ne!(x, y, "a mention cannot pair with itself");
        if x < y {
            Self { a: x, b: y }
        } else {
            Self { a: y, b: x }
        }
    }
}

impl fmt::Display for MentionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a, self.b)
    }
}

/// Which mention field bounds pair generation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopicKey {
    #[default]
    Topic,
    Subtopic,
}

impl FromStr for TopicKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "topic" => Ok(TopicKey::Topic),
            "subtopic" => Ok(TopicKey::Subtopic),
            other => Err(format!("unknown topic key `{other}` (expected topic or subtopic)")),
        }
    }
}

pub(crate) fn group_key(m: &Mention, key: TopicKey) -> Result<&str> {
    match key {
        TopicKey::Topic => Ok(&m.topic_id),
        TopicKey::Subtopic => m.subtopic_id.as_deref().ok_or_else(|| Error::MissingGroupKey {
            mention_id: m.mention_id.clone(),
            key: "subtopic",
        }),
    }
}

/// mention_id → predicted topic, replacing the corpus grouping field.
pub type TopicOverride = BTreeMap<String, String>;

/// Mention positions grouped by key, groups in key order.
pub(crate) fn group_mentions(
    corpus: &Corpus,
    key: TopicKey,
    topic_override: Option<&TopicOverride>,
) -> Result<Vec<Vec<usize>>> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, m) in corpus.mentions().iter().enumerate() {
        let g = match topic_override {
            Some(map) => map.get(&m.mention_id).map(String::as_str).ok_or_else(|| {
                Error::MissingGroupKey {
                    mention_id: m.mention_id.clone(),
                    key: "predicted topic",
                }
            })?,
            None => group_key(m, key)?,
        };
        groups.entry(g).or_default().push(i);
    }
    Ok(groups.into_values().collect())
}

fn to_pairs(corpus: &Corpus, mut idx: Vec<(usize, usize)>) -> Vec<MentionPair> {
    let ms = corpus.mentions();
    idx.sort_unstable();
    idx.dedup();
    let mut out: Vec<MentionPair> = idx
        .into_iter()
        .map(|(i, j)| MentionPair::new(ms[i].mention_id.as_str(), ms[j].mention_id.as_str()))
        .collect();
    out.sort_unstable();
    out
}

/// Every within-group pair, sorted.
pub fn all_pairs(
    corpus: &Corpus,
    key: TopicKey,
    topic_override: Option<&TopicOverride>,
) -> Result<Vec<MentionPair>> {
    all_pairs_with(Execution::default(), corpus, key, topic_override)
}

pub fn all_pairs_with(
    exec: Execution,
    corpus: &Corpus,
    key: TopicKey,
    topic_override: Option<&TopicOverride>,
) -> Result<Vec<MentionPair>> {
    let groups = group_mentions(corpus, key, topic_override)?;
    let per_group = exec.map(&groups, |g| {
        let mut v = Vec::with_capacity(g.len() * g.len().saturating_sub(1) / 2);
        for (x, &i) in g.iter().enumerate() {
            for &j in &g[x + 1..] {
                v.push((i.min(j), i.max(j)));
            }
        }
        v
    });
    Ok(to_pairs(corpus, per_group.into_iter().flatten().collect()))
}

/// Candidate pairs plus the number of pair evaluations spent finding them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidates {
    pub pairs: Vec<MentionPair>,
    pub comparisons: u64,
}

/// Pairs that pass the trigger-match rules, sorted.
pub fn generate_candidates(
    corpus: &Corpus,
    key: TopicKey,
    syn: &SynPairSet,
) -> Result<Vec<MentionPair>> {
    Ok(generate_candidates_with(Execution::default(), corpus, key, None, syn)?.pairs)
}

pub fn generate_candidates_with(
    exec: Execution,
    corpus: &Corpus,
    key: TopicKey,
    topic_override: Option<&TopicOverride>,
    syn: &SynPairSet,
) -> Result<Candidates> {
    let groups = group_mentions(corpus, key, topic_override)?;
    let per_group = exec.map(&groups, |g| group_candidates(corpus.mentions(), g, syn));
    let mut comparisons = 0;
    let mut idx = Vec::new();
    for (pairs, n) in per_group {
        comparisons += n;
        idx.extend(pairs);
    }
    Ok(Candidates {
        pairs: to_pairs(corpus, idx),
        comparisons,
    })
}

fn group_candidates(ms: &[Mention], group: &[usize], syn: &SynPairSet) -> (Vec<(usize, usize)>, u64) {
    let mut buckets: HashMap<&str, Vec<usize>> = HashMap::new();
    for &i in group {
        buckets.entry(ms[i].head_lemma.as_str()).or_default().push(i);
    }

    // lemma -> mentions whose lowercased trigger contains that lemma
    let mut containing: HashMap<&str, Vec<usize>> = HashMap::new();
    for &i in group {
        let trigger = ms[i].trigger_text.to_lowercase();
        let bounds: Vec<usize> = trigger
            .char_indices()
            .map(|(p, _)| p)
            .chain(std::iter::once(trigger.len()))
            .collect();
        let mut seen = HashSet::new();
        for (s, &start) in bounds.iter().enumerate() {
            for &end in &bounds[s + 1..] {
                let sub = &trigger[start..end];
                if let Some((&lemma, _)) = buckets.get_key_value(sub) {
                    if seen.insert(lemma) {
                        containing.entry(lemma).or_default().push(i);
                    }
                }
            }
        }
    }

    let mut out = Vec::new();
    let mut comparisons = 0u64;
    let mut emit = |i: usize, j: usize| {
        comparisons += 1;
        out.push((i.min(j), i.max(j)));
    };

    for (&lemma, bucket) in &buckets {
        for (x, &i) in bucket.iter().enumerate() {
            for &j in &bucket[x + 1..] {
                emit(i, j);
            }
        }
        for other in syn.partners(lemma) {
            if lemma < other {
                if let Some(partner) = buckets.get(other) {
                    for &i in bucket {
                        for &j in partner {
                            emit(i, j);
                        }
                    }
                }
            }
        }
        if let Some(hosts) = containing.get(lemma) {
            for &j in hosts {
                if ms[j].head_lemma != lemma {
                    for &i in bucket {
                        emit(i, j);
                    }
                }
            }
        }
    }
    (out, comparisons)
}
