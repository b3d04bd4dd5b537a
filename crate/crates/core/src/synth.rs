//! Seeded generator of small event-coreference corpora.
//!
//! Each topic holds a few subtopics; each subtopic holds gold clusters whose
//! mentions spread over the subtopic's documents. A cluster has a main event
//! lemma and an alternate one, so gold chains contain differing lemma pairs,
//! and several clusters in a topic can share a lemma, which is what makes
//! heuristic false positives. Sentences mix topic vocabulary, cluster-specific
//! context words, stop words and noise.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, DocumentMap, GoldClusterMap, Mention, Split};

const EVENTS: [(&str, &str); 20] = [
    ("shoot", "fire"),
    ("kill", "die"),
    ("attack", "strike"),
    ("arrest", "detain"),
    ("injure", "wound"),
    ("explode", "blast"),
    ("announce", "reveal"),
    ("acquire", "buy"),
    ("hire", "appoint"),
    ("resign", "quit"),
    ("win", "clinch"),
    ("release", "launch"),
    ("crash", "collide"),
    ("sentence", "jail"),
    ("rescue", "save"),
    ("quake", "tremor"),
    ("meet", "visit"),
    ("charge", "accuse"),
    ("flee", "escape"),
    ("sell", "trade"),
];

const NOUNS: [&str; 24] = [
    "police", "city", "company", "team", "court", "official", "president", "man", "woman",
    "school", "store", "airport", "hospital", "market", "village", "coast", "club", "judge",
    "worker", "student", "fan", "army", "bank", "ship",
];

const NOISE: [&str; 20] = [
    "report", "say", "early", "late", "local", "new", "week", "year", "monday", "friday",
    "news", "group", "people", "tell", "public", "state", "part", "time", "area", "night",
];

const STOPS: [&str; 8] = ["the", "a", "of", "in", "on", "and", "to", "be"];

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub topics: usize,
    pub subtopics_per_topic: usize,
    pub docs_per_subtopic: usize,
    pub clusters_per_subtopic: usize,
    pub max_cluster_size: usize,
    /// Lemmas available to the clusters of one topic.
    pub events_per_topic: usize,
    /// Chance that a mention uses its cluster's alternate lemma.
    pub alternate_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            topics: 10,
            subtopics_per_topic: 2,
            docs_per_subtopic: 3,
            clusters_per_subtopic: 5,
            max_cluster_size: 5,
            events_per_topic: 4,
            alternate_rate: 0.25,
        }
    }
}

fn split_for(topic: usize) -> Split {
    match topic % 5 {
        0..=2 => Split::Train,
        3 => Split::Dev,
        _ => Split::Test,
    }
}

fn inflect(rng: &mut ChaCha8Rng, lemma: &str) -> String {
    match rng.gen_range(0..4) {
        0 => lemma.to_string(),
        1 => format!("{lemma}s"),
        2 => format!("{lemma}ing"),
        _ => format!("{}ed", lemma.trim_end_matches('e')),
    }
}

/// Builds a corpus with documents attached. The same seed always yields the
/// same corpus.
pub fn synthetic_corpus(cfg: &SynthConfig, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mentions = Vec::new();
    let mut gold = GoldClusterMap::new();
    // doc id -> sentences in sentence_id order
    let mut docs: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();

    for t in 0..cfg.topics {
        let topic_id = format!("t{t:02}");
        let split = split_for(t);
        let events: Vec<(&str, &str)> = EVENTS
            .choose_multiple(&mut rng, cfg.events_per_topic.clamp(1, EVENTS.len()))
            .copied()
            .collect();
        let topic_words: Vec<&str> = NOUNS.choose_multiple(&mut rng, 4).copied().collect();
        let mut mention_no = 0;

        for s in 0..cfg.subtopics_per_topic {
            let subtopic_id = format!("{topic_id}_s{s}");
            let doc_ids: Vec<String> = (0..cfg.docs_per_subtopic.max(1))
                .map(|d| format!("{subtopic_id}_d{d}"))
                .collect();
            for d in &doc_ids {
                let intro: Vec<String> = NOISE.choose_multiple(&mut rng, 4).map(|w| w.to_string()).collect();
                docs.insert(d.clone(), vec![intro]);
            }

            for c in 0..cfg.clusters_per_subtopic {
                let cluster_id = format!("{subtopic_id}_c{c}");
                let (main, alt) = *events.choose(&mut rng).unwrap();
                let context: Vec<String> = (0..4).map(|k| format!("{cluster_id}_w{k}").replace('_', "")).collect();
                let size = rng.gen_range(1..=cfg.max_cluster_size.max(1));

                for _ in 0..size {
                    let lemma = if rng.gen_bool(cfg.alternate_rate) { alt } else { main };
                    let mut sentence: Vec<String> = Vec::new();
                    sentence.extend(topic_words.choose_multiple(&mut rng, 2).map(|w| w.to_string()));
                    sentence.extend(context.choose_multiple(&mut rng, 2).cloned());
                    sentence.extend(NOISE.choose_multiple(&mut rng, 2).map(|w| w.to_string()));
                    sentence.extend(STOPS.choose_multiple(&mut rng, 2).map(|w| w.to_string()));
                    sentence.shuffle(&mut rng);
                    let at = rng.gen_range(0..=sentence.len());
                    sentence.insert(at, lemma.to_string());

                    let doc_id = doc_ids.choose(&mut rng).unwrap().clone();
                    let sentences = docs.get_mut(&doc_id).unwrap();
                    let sentence_id = sentences.len() as u32;
                    sentences.push(sentence.clone());

                    let mention_id = format!("{topic_id}_m{mention_no:03}");
                    mention_no += 1;
                    gold.insert(mention_id.clone(), cluster_id.clone());
                    mentions.push(Mention {
                        mention_id,
                        doc_id,
                        topic_id: topic_id.clone(),
                        subtopic_id: Some(subtopic_id.clone()),
                        sentence_id,
                        trigger_text: inflect(&mut rng, lemma),
                        head_lemma: lemma.to_string(),
                        sentence_lemmas: sentence,
                        split,
                    });
                }
            }
        }
    }

    let documents: DocumentMap = docs
        .into_iter()
        .map(|(id, sentences)| (id, sentences.concat()))
        .collect();
    Corpus::new(mentions, gold, Some(documents)).expect("generator emits a valid corpus")
}
