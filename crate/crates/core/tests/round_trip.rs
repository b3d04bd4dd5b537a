mod common;

use std::collections::BTreeSet;

use common::*;
use evcoref::clustering::{load_clusters, save_clusters, ClusterAssignment};
use evcoref::corpus::{load_corpus, load_documents, read_corpus, save_documents, stats, write_corpus, Corpus, Split};
use evcoref::pairs::TopicKey;
use evcoref::syn_pairs::{extract_syn_pairs, SynPairSet};
use evcoref::synth::{synthetic_corpus, SynthConfig};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_cfg() -> SynthConfig {
    SynthConfig {
        topics: 5,
        ..SynthConfig::default()
    }
}

#[test]
fn synthetic_corpus_survives_files() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synthetic_corpus(&small_cfg(), 4);
    let path = dir.path().join("corpus.jsonl");
    let docs = dir.path().join("docs.jsonl");
    evcoref::corpus::save_corpus(&corpus, &path).unwrap();
    save_documents(corpus.documents().unwrap(), &docs).unwrap();
    let back = load_corpus(&path, None).unwrap().with_documents(load_documents(&docs).unwrap()).unwrap();
    assert_eq!(back, corpus);

    let dev: BTreeSet<Split> = [Split::Dev].into();
    let only_dev = load_corpus(&path, Some(&dev)).unwrap();
    assert!(only_dev.mentions().iter().all(|m| m.split == Split::Dev));
    assert_eq!(only_dev.len(), corpus.restrict(&dev).len());
}

#[test]
fn cluster_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    let a = ClusterAssignment::from_map([("m1", "m1"), ("m2", "m1"), ("m3", "m3")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect());
    save_clusters(&a, &path).unwrap();
    assert_eq!(load_clusters(&path).unwrap(), a);
}

#[test]
fn oracle_syn_set_dominates_train_set() {
    let corpus = synthetic_corpus(&SynthConfig::default(), 12);
    for min_count in 1..4 {
        let train = extract_syn_pairs(&corpus, &[Split::Train].into(), TopicKey::Topic, min_count).unwrap();
        let all = extract_syn_pairs(&corpus, &Split::ALL.into(), TopicKey::Topic, min_count).unwrap();
        for (a, b, _) in train.iter() {
            assert!(all.contains(a, b));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn corpus_jsonl_round_trip(seed in any::<u64>(), n in 1usize..50) {
        let corpus = tricky_corpus(&mut ChaCha8Rng::seed_from_u64(seed), n, 3, 3);
        let mut buf = Vec::new();
        write_corpus(&corpus, &mut buf).unwrap();
        prop_assert_eq!(read_corpus(buf.as_slice(), None).unwrap(), corpus);
    }

    #[test]
    fn syn_tsv_round_trip(entries in proptest::collection::vec(("[a-z]{1,5}", "[a-z]{1,5}", 1usize..9), 0..20)) {
        let set = SynPairSet::from_counts(entries.into_iter().filter(|(a, b, _)| a != b));
        let mut buf = Vec::new();
        set.write_tsv(&mut buf).unwrap();
        let back = SynPairSet::read_tsv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, set);
    }

    #[test]
    fn stats_ignore_mention_order(seed in any::<u64>(), n in 1usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let corpus = tricky_corpus(&mut rng, n, 3, 4);
        let mut ms = corpus.mentions().to_vec();
        ms.shuffle(&mut rng);
        let shuffled = Corpus::new(ms, corpus.gold().clone(), None).unwrap();
        prop_assert_eq!(stats(&shuffled), stats(&corpus));
    }
}
