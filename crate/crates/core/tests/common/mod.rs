//! Random inputs and brute-force oracles shared by the integration tests.
//! Nothing here calls into the code paths it is used to check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use evcoref::corpus::{Corpus, GoldClusterMap, Mention, Split};
use rand::seq::SliceRandom;
use rand::Rng;

pub type Clusters = Vec<Vec<String>>;

/// A random partition of `ids` into at most `max_clusters` nonempty groups.
pub fn random_clusters<R: Rng>(rng: &mut R, ids: &[String], max_clusters: usize) -> Clusters {
    let k = rng.gen_range(1..=max_clusters.min(ids.len()).max(1));
    let mut groups: Vec<Vec<String>> = vec![Vec::new(); k];
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(rng);
    for (i, id) in shuffled.into_iter().enumerate() {
        // the first k mentions seed one group each so none is empty
        let g = if i < k { i } else { rng.gen_range(0..k) };
        groups[g].push(id);
    }
    groups
}

pub fn mention_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("m{i}")).collect()
}

fn cluster_of(clusters: &Clusters, m: &str) -> usize {
    clusters.iter().position(|c| c.iter().any(|x| x == m)).unwrap()
}

fn div(n: f64, d: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else {
        n / d
    }
}

/// MUC recall by counting, for each key entity, the response pieces it is cut into.
pub fn muc_recall(key: &Clusters, resp: &Clusters) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for k in key {
        let pieces: BTreeSet<usize> = k.iter().map(|m| cluster_of(resp, m)).collect();
        num += (k.len() - pieces.len()) as f64;
        den += (k.len() - 1) as f64;
    }
    div(num, den)
}

/// B³ recall as a mean over mentions.
pub fn b3_recall(key: &Clusters, resp: &Clusters) -> f64 {
    let mut total = 0.0;
    let mut n = 0;
    for k in key {
        for m in k {
            let r = &resp[cluster_of(resp, m)];
            let shared = k.iter().filter(|x| r.contains(x)).count();
            total += shared as f64 / k.len() as f64;
            n += 1;
        }
    }
    div(total, n as f64)
}

/// LEA recall by enumerating links; singleton entities own one self-link,
/// resolved when the mention is a singleton on the other side too.
pub fn lea_recall(key: &Clusters, resp: &Clusters) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for k in key {
        let importance = k.len() as f64;
        let resolution = if k.len() == 1 {
            if resp[cluster_of(resp, &k[0])].len() == 1 {
                1.0
            } else {
                0.0
            }
        } else {
            let mut links = 0;
            let mut common = 0;
            for i in 0..k.len() {
                for j in i + 1..k.len() {
                    links += 1;
                    if cluster_of(resp, &k[i]) == cluster_of(resp, &k[j]) {
                        common += 1;
                    }
                }
            }
            common as f64 / links as f64
        };
        num += importance * resolution;
        den += importance;
    }
    div(num, den)
}

fn phi4(k: &[String], r: &[String]) -> f64 {
    let shared = k.iter().filter(|x| r.contains(x)).count();
    2.0 * shared as f64 / (k.len() + r.len()) as f64
}

fn best_alignment(small: &Clusters, large: &Clusters, i: usize, used: &mut Vec<bool>, small_is_key: bool) -> f64 {
    if i == small.len() {
        return 0.0;
    }
    let mut best = 0.0f64;
    for j in 0..large.len() {
        if used[j] {
            continue;
        }
        used[j] = true;
        let s = if small_is_key {
            phi4(&small[i], &large[j])
        } else {
            phi4(&large[j], &small[i])
        };
        best = best.max(s + best_alignment(small, large, i + 1, used, small_is_key));
        used[j] = false;
    }
    best
}

/// Best total φ4 over every injective alignment of the smaller side.
pub fn ceaf_similarity(key: &Clusters, resp: &Clusters) -> f64 {
    if key.is_empty() || resp.is_empty() {
        return 0.0;
    }
    if key.len() <= resp.len() {
        best_alignment(key, resp, 0, &mut vec![false; resp.len()], true)
    } else {
        best_alignment(resp, key, 0, &mut vec![false; key.len()], false)
    }
}

pub fn f1(r: f64, p: f64) -> f64 {
    if r + p == 0.0 {
        0.0
    } else {
        2.0 * r * p / (r + p)
    }
}

/// Reflexive-transitive closure by Warshall's algorithm.
pub fn warshall(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(a, b) in edges {
        reach[a][b] = true;
        reach[b][a] = true;
    }
    for k in 0..n {
        let via = reach[k].clone();
        for row in reach.iter_mut() {
            if row[k] {
                for (cell, &v) in row.iter_mut().zip(&via) {
                    *cell |= v;
                }
            }
        }
    }
    reach
}

/// Lemmas and triggers drawn from a tiny alphabet so that substring
/// containment between different lemmas is common.
pub const TRICKY_LEMMAS: [&str; 9] = ["a", "b", "ab", "ba", "abc", "c", "bc", "ca", "cab"];

pub fn tricky_corpus<R: Rng>(rng: &mut R, n: usize, topics: usize, clusters: usize) -> Corpus {
    let mut mentions = Vec::new();
    let mut gold = GoldClusterMap::new();
    for i in 0..n {
        let lemma = *TRICKY_LEMMAS.choose(rng).unwrap();
        let trigger = match rng.gen_range(0..4) {
            0 => lemma.to_uppercase(),
            1 => format!("{} {}", lemma, TRICKY_LEMMAS.choose(rng).unwrap()),
            2 => format!("x{}", TRICKY_LEMMAS.choose(rng).unwrap()),
            _ => lemma.to_string(),
        };
        let id = format!("m{i:04}");
        let topic = rng.gen_range(0..topics.max(1));
        let sentence: Vec<String> = (0..rng.gen_range(1..6))
            .map(|_| format!("w{}", rng.gen_range(0..8)))
            .collect();
        gold.insert(id.clone(), format!("t{topic}c{}", rng.gen_range(0..clusters.max(1))));
        mentions.push(Mention {
            mention_id: id,
            doc_id: format!("d{}", rng.gen_range(0..4)),
            topic_id: format!("t{topic}"),
            subtopic_id: Some(format!("t{topic}s{}", rng.gen_range(0..2))),
            sentence_id: rng.gen_range(0..3),
            trigger_text: trigger,
            head_lemma: lemma.to_string(),
            sentence_lemmas: sentence,
            split: *[Split::Train, Split::Dev, Split::Test].choose(rng).unwrap(),
        });
    }
    Corpus::new(mentions, gold, None).unwrap()
}

/// Every within-topic pair by nested loops.
pub fn brute_pairs(corpus: &Corpus) -> Vec<(String, String)> {
    let ms = corpus.mentions();
    let mut out = Vec::new();
    for i in 0..ms.len() {
        for j in 0..ms.len() {
            if ms[i].topic_id == ms[j].topic_id && ms[i].mention_id < ms[j].mention_id {
                out.push((ms[i].mention_id.clone(), ms[j].mention_id.clone()));
            }
        }
    }
    out.sort();
    out
}

/// The four trigger rules written out directly.
pub fn rules_match(a: &Mention, b: &Mention, syn: &BTreeSet<(String, String)>) -> bool {
    let la = a.head_lemma.as_str();
    let lb = b.head_lemma.as_str();
    syn.contains(&(la.to_string(), lb.to_string()))
        || syn.contains(&(lb.to_string(), la.to_string()))
        || la == lb
        || b.trigger_text.to_lowercase().contains(la)
        || a.trigger_text.to_lowercase().contains(lb)
}

pub fn gold_of(corpus: &Corpus) -> BTreeMap<String, String> {
    corpus.gold().clone()
}
