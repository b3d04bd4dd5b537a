//! Synonymous lemma pairs harvested from gold coreference chains.
//!
//! A pair `(x, y)` with `x != y` is counted once for every gold-coreferent
//! mention pair whose head lemmas are `x` and `y`. Only mention pairs that
//! share a grouping key are considered, mirroring the pairs that exist
//! downstream.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::corpus::{Corpus, Split};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::pairs::{group_key, TopicKey};

#[derive(Clone, Debug, Default)]
pub struct SynPairSet {
    counts: BTreeMap<(String, String), usize>,
    partners: BTreeMap<String, BTreeSet<String>>,
    min_count: usize,
}

/// Two sets are equal when they hold the same pairs with the same counts.
impl PartialEq for SynPairSet {
    fn eq(&self, other: &Self) -> bool {
        self.counts == other.counts
    }
}

fn ordered(x: &str, y: &str) -> (String, String) {
    if x <= y {
        (x.to_string(), y.to_string())
    } else {
        (y.to_string(), x.to_string())
    }
}

impl SynPairSet {
    pub fn new() -> Self {
        Self {
            min_count: 1,
            ..Self::default()
        }
    }

    /// Builds a set from explicit `(lemma, lemma, count)` triples. Identical
    /// lemmas are dropped; repeated pairs accumulate.
    pub fn from_counts<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, S, usize)>,
        S: AsRef<str>,
    {
        let mut set = Self::new();
        for (x, y, n) in entries {
            set.add(x.as_ref(), y.as_ref(), n);
        }
        if let Some(&min) = set.counts.values().min() {
            set.min_count = min;
        }
        set
    }

    fn add(&mut self, x: &str, y: &str, n: usize) {
        if x == y || n == 0 {
            return;
        }
        *self.counts.entry(ordered(x, y)).or_default() += n;
        self.partners.entry(x.to_string()).or_default().insert(y.to_string());
        self.partners.entry(y.to_string()).or_default().insert(x.to_string());
    }

    pub fn contains(&self, x: &str, y: &str) -> bool {
        x != y
            && self
                .partners
                .get(x)
                .is_some_and(|p| p.contains(y))
    }

    pub fn count(&self, x: &str, y: &str) -> usize {
        self.counts.get(&ordered(x, y)).copied().unwrap_or(0)
    }

    /// Lemmas paired with `lemma`.
    pub fn partners(&self, lemma: &str) -> impl Iterator<Item = &str> {
        self.partners
            .get(lemma)
            .into_iter()
            .flat_map(|set| set.iter().map(String::as_str))
    }

    /// Pairs in lexicographic order, each with `a < b`.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, usize)> {
        self.counts
            .iter()
            .map(|((a, b), &n)| (a.as_str(), b.as_str(), n))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (a, b, n) in self.iter() {
            writeln!(out, "{a}\t{b}\t{n}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_tsv(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let text = line.map_err(|e| Error::io("<syn pairs>", e))?;
            if text.is_empty() {
                continue;
            }
            let cols: Vec<&str> = text.split('\t').collect();
            let [a, b, n] = cols[..] else {
                return Err(Error::malformed(line_no, "<row>", "expected lemma_a, lemma_b, count"));
            };
            if a.is_empty() || b.is_empty() {
                return Err(Error::malformed(line_no, "lemma", "must be nonempty"));
            }
            if a == b {
                return Err(Error::malformed(line_no, "lemma", "pair of identical lemmas"));
            }
            let n: usize = n
                .parse()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| Error::malformed(line_no, "count", "expected a positive integer"))?;
            entries.push((a.to_string(), b.to_string(), n));
        }
        Ok(Self::from_counts(entries))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_tsv(BufReader::new(file)).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }
}

/// Harvests lemma pairs from gold-coreferent mention pairs in `splits`,
/// keeping those seen at least `min_count` times.
pub fn extract_syn_pairs(
    corpus: &Corpus,
    splits: &BTreeSet<Split>,
    key: TopicKey,
    min_count: usize,
) -> Result<SynPairSet> {
    extract_syn_pairs_with(Execution::default(), corpus, splits, key, min_count)
}

pub fn extract_syn_pairs_with(
    exec: Execution,
    corpus: &Corpus,
    splits: &BTreeSet<Split>,
    key: TopicKey,
    min_count: usize,
) -> Result<SynPairSet> {
    if splits.is_empty() {
        return Err(Error::EmptySplitSelection);
    }
    if min_count == 0 {
        return Err(Error::InvalidMinCount);
    }

    // (group, gold cluster) -> head lemmas of members
    let mut chains: BTreeMap<(&str, &str), Vec<&str>> = BTreeMap::new();
    for m in corpus.mentions().iter().filter(|m| splits.contains(&m.split)) {
        let group = group_key(m, key)?;
        let cluster = corpus.gold()[&m.mention_id].as_str();
        chains
            .entry((group, cluster))
            .or_default()
            .push(m.head_lemma.as_str());
    }
    let chains: Vec<Vec<&str>> = chains.into_values().collect();

    let partial = exec.map(&chains, |lemmas| {
        let mut counts: BTreeMap<(&str, &str), usize> = BTreeMap::new();
        for (i, x) in lemmas.iter().enumerate() {
            for y in &lemmas[i + 1..] {
                if x != y {
                    let k = if x < y { (*x, *y) } else { (*y, *x) };
                    *counts.entry(k).or_default() += 1;
                }
            }
        }
        counts
    });

    let mut total: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for counts in partial {
        for (k, n) in counts {
            *total.entry(k).or_default() += n;
        }
    }

    let mut set = SynPairSet::new();
    set.min_count = min_count;
    for ((x, y), n) in total {
        if n >= min_count {
            set.add(x, y, n);
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{corpus_from, m};

    fn train() -> BTreeSet<Split> {
        [Split::Train].into()
    }

    #[test]
    fn equal_lemmas_are_not_pairs() {
        let c = corpus_from(vec![(m("m1", "t", "die"), "c1"), (m("m2", "t", "die"), "c1")]);
        let set = extract_syn_pairs(&c, &train(), TopicKey::Topic, 1).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn single_differing_pair() {
        let c = corpus_from(vec![(m("m1", "t", "die"), "c1"), (m("m2", "t", "kill"), "c1")]);
        let set = extract_syn_pairs(&c, &train(), TopicKey::Topic, 1).unwrap();
        assert_eq!(set.len(), 1);
        assert!(set.contains("die", "kill"));
        assert!(set.contains("kill", "die"));
        assert!(!set.contains("die", "die"));
    }

    #[test]
    fn min_count_filters_rare_pairs() {
        let mut rows = Vec::new();
        for c in 0..3 {
            rows.push((m(&format!("d{c}"), "t", "die"), format!("k{c}")));
            rows.push((m(&format!("k{c}"), "t", "kill"), format!("k{c}")));
        }
        rows.push((m("p0", "t", "die"), "p".to_string()));
        rows.push((m("p1", "t", "perish"), "p".to_string()));
        let c = corpus_from(rows.iter().map(|(m, c)| (m.clone(), c.as_str())).collect());

        // brute force: count every gold-coreferent pair by lemma
        let ms = c.mentions();
        let mut expected: BTreeMap<(String, String), usize> = BTreeMap::new();
        for i in 0..ms.len() {
            for j in 0..ms.len() {
                let (a, b) = (&ms[i], &ms[j]);
                if i < j
                    && c.gold_cluster(&a.mention_id) == c.gold_cluster(&b.mention_id)
                    && a.head_lemma != b.head_lemma
                {
                    *expected.entry(ordered(&a.head_lemma, &b.head_lemma)).or_default() += 1;
                }
            }
        }
        assert_eq!(expected[&ordered("die", "kill")], 3);
        assert_eq!(expected[&ordered("die", "perish")], 1);

        let set = extract_syn_pairs(&c, &train(), TopicKey::Topic, 2).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.count("kill", "die"), 3);
        assert!(!set.contains("die", "perish"));
    }

    #[test]
    fn pairs_do_not_cross_groups() {
        let c = corpus_from(vec![(m("m1", "t1", "die"), "c1"), (m("m2", "t2", "kill"), "c1")]);
        let set = extract_syn_pairs(&c, &train(), TopicKey::Topic, 1).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn rejects_bad_arguments() {
        let c = corpus_from(vec![(m("m1", "t", "die"), "c1")]);
        assert!(matches!(
            extract_syn_pairs(&c, &BTreeSet::new(), TopicKey::Topic, 1),
            Err(Error::EmptySplitSelection)
        ));
        assert!(matches!(
            extract_syn_pairs(&c, &train(), TopicKey::Topic, 0),
            Err(Error::InvalidMinCount)
        ));
    }

    #[test]
    fn tsv_format() {
        let set = SynPairSet::from_counts([("kill", "die", 3), ("fire", "shoot", 1)]);
        let mut buf = Vec::new();
        set.write_tsv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "die\tkill\t3\nfire\tshoot\t1\n");
        assert_eq!(SynPairSet::read_tsv(buf.as_slice()).unwrap(), set);
        assert!(SynPairSet::read_tsv("a\ta\t1\n".as_bytes()).is_err());
        assert!(SynPairSet::read_tsv("a\tb\t0\n".as_bytes()).is_err());
        assert!(SynPairSet::read_tsv("a\tb\n".as_bytes()).is_err());
    }
}
