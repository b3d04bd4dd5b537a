//! Mention-annotated corpora with gold clusters.
//!
//! The on-disk format is JSON Lines, one mention per line:
//!
//! ```text
//! {"mention_id": "m1", "doc_id": "1_1ecb", "topic_id": "1", "subtopic_id": "1_ecb",
//!  "sentence_id": 3, "trigger_text": "shot", "head_lemma": "shoot",
//!  "sentence_lemmas": ["man", "shoot", "..."], "gold_cluster_id": "c7", "split": "train"}
//! ```
//!
//! `subtopic_id` may be absent or null. Any other key is rejected. Lemmas are
//! expected to be lowercased upstream; the loader never lemmatizes.
//!
//! Full-document context for long-context scoring lives in an optional sidecar
//! file with lines `{"doc_id": ..., "token_lemmas": [...]}`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}` (expected train, dev or test)")),
        }
    }
}

/// One event trigger occurrence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub mention_id: String,
    pub doc_id: String,
    pub topic_id: String,
    pub subtopic_id: Option<String>,
    pub sentence_id: u32,
    pub trigger_text: String,
    /// Lemma of the trigger's head token, lowercase.
    pub head_lemma: String,
    /// Token lemmas of the sentence containing the trigger, lowercase.
    pub sentence_lemmas: Vec<String>,
    pub split: Split,
}

/// mention_id → gold cluster id.
pub type GoldClusterMap = BTreeMap<String, String>;

/// doc_id → token lemmas of the whole document.
pub type DocumentMap = BTreeMap<String, Vec<String>>;

/// A validated, immutable collection of mentions with gold labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    mentions: Vec<Mention>,
    gold: GoldClusterMap,
    documents: Option<DocumentMap>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(
        mentions: Vec<Mention>,
        gold: GoldClusterMap,
        documents: Option<DocumentMap>,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(mentions.len());
        for (i, m) in mentions.iter().enumerate() {
            if index.insert(m.mention_id.clone(), i).is_some() {
                return Err(Error::DuplicateMentionId(m.mention_id.clone()));
            }
            if !gold.contains_key(&m.mention_id) {
                return Err(Error::MissingGoldLabel(m.mention_id.clone()));
            }
        }
        if let Some(id) = gold.keys().find(|id| !index.contains_key(*id)) {
            return Err(Error::GoldWithoutMention(id.clone()));
        }
        if let Some(docs) = &documents {
            check_documents(&mentions, docs)?;
        }
        Ok(Self {
            mentions,
            gold,
            documents,
            index,
        })
    }

    pub fn mentions(&self) -> &[Mention] {
        &self.mentions
    }

    pub fn gold(&self) -> &GoldClusterMap {
        &self.gold
    }

    pub fn documents(&self) -> Option<&DocumentMap> {
        self.documents.as_ref()
    }

    pub fn len(&self) -> usize {
        self.mentions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mentions.is_empty()
    }

    pub fn mention(&self, id: &str) -> Option<&Mention> {
        self.index.get(id).map(|&i| &self.mentions[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn gold_cluster(&self, id: &str) -> Option<&str> {
        self.gold.get(id).map(String::as_str)
    }

    /// Attaches full-document lemma streams, checking every referenced document exists.
    pub fn with_documents(mut self, documents: DocumentMap) -> Result<Self> {
        check_documents(&self.mentions, &documents)?;
        self.documents = Some(documents);
        Ok(self)
    }

    /// Keeps only mentions from the given splits.
    pub fn restrict(&self, splits: &BTreeSet<Split>) -> Corpus {
        let mentions: Vec<Mention> = self
            .mentions
            .iter()
            .filter(|m| splits.contains(&m.split))
            .cloned()
            .collect();
        let gold = mentions
            .iter()
            .map(|m| (m.mention_id.clone(), self.gold[&m.mention_id].clone()))
            .collect();
        let documents = self.documents.as_ref().map(|docs| {
            let used: BTreeSet<&str> = mentions.iter().map(|m| m.doc_id.as_str()).collect();
            docs.iter()
                .filter(|(id, _)| used.contains(id.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect()
        });
        Corpus::new(mentions, gold, documents).expect("subset of a valid corpus is valid")
    }

    pub fn splits(&self) -> BTreeSet<Split> {
        self.mentions.iter().map(|m| m.split).collect()
    }
}

fn check_documents(mentions: &[Mention], docs: &DocumentMap) -> Result<()> {
    match mentions.iter().find(|m| !docs.contains_key(&m.doc_id)) {
        Some(m) => Err(Error::DanglingDocument {
            mention_id: m.mention_id.clone(),
            doc_id: m.doc_id.clone(),
        }),
        None => Ok(()),
    }
}

const MENTION_KEYS: [&str; 10] = [
    "mention_id",
    "doc_id",
    "topic_id",
    "subtopic_id",
    "sentence_id",
    "trigger_text",
    "head_lemma",
    "sentence_lemmas",
    "gold_cluster_id",
    "split",
];

fn required<'a>(obj: &'a Map<String, Value>, line: usize, field: &str) -> Result<&'a Value> {
    obj.get(field)
        .ok_or_else(|| Error::malformed(line, field, "missing"))
}

fn string_field(obj: &Map<String, Value>, line: usize, field: &str) -> Result<String> {
    match required(obj, line, field)? {
        Value::String(s) if !s.is_empty() => Ok(s.clone()),
        Value::String(_) => Err(Error::malformed(line, field, "must be nonempty")),
        _ => Err(Error::malformed(line, field, "expected a string")),
    }
}

fn lemma_list(obj: &Map<String, Value>, line: usize, field: &str) -> Result<Vec<String>> {
    let Value::Array(items) = required(obj, line, field)? else {
        return Err(Error::malformed(line, field, "expected an array of strings"));
    };
    items
        .iter()
        .map(|v| match v {
            Value::String(s) if is_lowercase(s) => Ok(s.clone()),
            Value::String(s) => Err(Error::malformed(
                line,
                field,
                format!("lemma `{s}` is not lowercase"),
            )),
            _ => Err(Error::malformed(line, field, "expected an array of strings")),
        })
        .collect()
}

fn is_lowercase(s: &str) -> bool {
    s.chars().all(|c| !c.is_uppercase())
}

fn parse_object(text: &str, line: usize) -> Result<Map<String, Value>> {
    match serde_json::from_str::<Value>(text) {
        Ok(Value::Object(obj)) => Ok(obj),
        Ok(_) => Err(Error::malformed(line, "<record>", "expected a JSON object")),
        Err(e) => Err(Error::malformed(line, "<record>", e.to_string())),
    }
}

fn parse_mention(text: &str, line: usize) -> Result<(Mention, Option<String>)> {
    let obj = parse_object(text, line)?;
    if let Some(extra) = obj.keys().find(|k| !MENTION_KEYS.contains(&k.as_str())) {
        return Err(Error::malformed(line, extra, "unknown key"));
    }

    let mention_id = string_field(&obj, line, "mention_id")?;
    let doc_id = string_field(&obj, line, "doc_id")?;
    let topic_id = string_field(&obj, line, "topic_id")?;
    let subtopic_id = match obj.get("subtopic_id") {
        None | Some(Value::Null) => None,
        Some(_) => Some(string_field(&obj, line, "subtopic_id")?),
    };
    let sentence_id = required(&obj, line, "sentence_id")?
        .as_u64()
        .and_then(|v| u32::try_from(v).ok())
        .ok_or_else(|| Error::malformed(line, "sentence_id", "expected a non-negative integer"))?;
    let trigger_text = string_field(&obj, line, "trigger_text")?;
    let head_lemma = string_field(&obj, line, "head_lemma")?;
    if !is_lowercase(&head_lemma) {
        return Err(Error::malformed(line, "head_lemma", "must be lowercase"));
    }
    let sentence_lemmas = lemma_list(&obj, line, "sentence_lemmas")?;
    if sentence_lemmas.is_empty() {
        return Err(Error::malformed(line, "sentence_lemmas", "must be nonempty"));
    }
    let gold = match obj.get("gold_cluster_id") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) if s.is_empty() => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(Error::malformed(line, "gold_cluster_id", "expected a string")),
    };
    let split = match required(&obj, line, "split")? {
        Value::String(s) => s
            .parse::<Split>()
            .map_err(|e| Error::malformed(line, "split", e))?,
        _ => return Err(Error::malformed(line, "split", "expected a string")),
    };

    let mention = Mention {
        mention_id,
        doc_id,
        topic_id,
        subtopic_id,
        sentence_id,
        trigger_text,
        head_lemma,
        sentence_lemmas,
        split,
    };
    Ok((mention, gold))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Reads a corpus file, keeping only mentions whose split is in `split_filter`
/// (all splits when `None`).
pub fn load_corpus(path: &Path, split_filter: Option<&BTreeSet<Split>>) -> Result<Corpus> {
    read_corpus(open(path)?, split_filter).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_corpus<R: BufRead>(reader: R, split_filter: Option<&BTreeSet<Split>>) -> Result<Corpus> {
    let mut mentions = Vec::new();
    let mut gold = GoldClusterMap::new();
    let mut seen = BTreeSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line.map_err(|e| Error::io("<corpus>", e))?;
        if text.trim().is_empty() {
            continue;
        }
        let (mention, label) = parse_mention(&text, line_no)?;
        if !seen.insert(mention.mention_id.clone()) {
            return Err(Error::DuplicateMentionId(mention.mention_id));
        }
        let Some(label) = label else {
            return Err(Error::MissingGoldLabel(mention.mention_id));
        };
        if split_filter.is_some_and(|f| !f.contains(&mention.split)) {
            continue;
        }
        gold.insert(mention.mention_id.clone(), label);
        mentions.push(mention);
    }
    Corpus::new(mentions, gold, None)
}

/// Reads the optional document sidecar file.
pub fn load_documents(path: &Path) -> Result<DocumentMap> {
    let mut docs = DocumentMap::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line_no = i + 1;
        let text = line.map_err(|e| Error::io(path, e))?;
        if text.trim().is_empty() {
            continue;
        }
        let obj = parse_object(&text, line_no)?;
        if let Some(extra) = obj.keys().find(|k| *k != "doc_id" && *k != "token_lemmas") {
            return Err(Error::malformed(line_no, extra, "unknown key"));
        }
        let doc_id = string_field(&obj, line_no, "doc_id")?;
        let tokens = lemma_list(&obj, line_no, "token_lemmas")?;
        if docs.insert(doc_id.clone(), tokens).is_some() {
            return Err(Error::malformed(line_no, "doc_id", format!("duplicate document `{doc_id}`")));
        }
    }
    Ok(docs)
}

#[derive(Serialize)]
struct MentionRecord<'a> {
    mention_id: &'a str,
    doc_id: &'a str,
    topic_id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    subtopic_id: Option<&'a str>,
    sentence_id: u32,
    trigger_text: &'a str,
    head_lemma: &'a str,
    sentence_lemmas: &'a [String],
    gold_cluster_id: &'a str,
    split: Split,
}

pub fn write_corpus<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<()> {
    for m in corpus.mentions() {
        let record = MentionRecord {
            mention_id: &m.mention_id,
            doc_id: &m.doc_id,
            topic_id: &m.topic_id,
            subtopic_id: m.subtopic_id.as_deref(),
            sentence_id: m.sentence_id,
            trigger_text: &m.trigger_text,
            head_lemma: &m.head_lemma,
            sentence_lemmas: &m.sentence_lemmas,
            gold_cluster_id: &corpus.gold()[&m.mention_id],
            split: m.split,
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_corpus(corpus, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn save_documents(documents: &DocumentMap, path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct DocRecord<'a> {
        doc_id: &'a str,
        token_lemmas: &'a [String],
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        for (doc_id, tokens) in documents {
            serde_json::to_writer(&mut *out, &DocRecord { doc_id, token_lemmas: tokens })?;
            out.write_all(b"\n")?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStats {
    pub documents: usize,
    pub mentions: usize,
    pub clusters: usize,
    pub singletons: usize,
    pub topics: usize,
    pub subtopics: usize,
}

/// Per-split corpus statistics. A singleton is a gold cluster with exactly
/// one mention in that split.
pub fn stats(corpus: &Corpus) -> BTreeMap<Split, SplitStats> {
    #[derive(Default)]
    struct Acc<'a> {
        docs: BTreeSet<&'a str>,
        topics: BTreeSet<&'a str>,
        subtopics: BTreeSet<&'a str>,
        clusters: BTreeMap<&'a str, usize>,
        mentions: usize,
    }

    let mut acc: BTreeMap<Split, Acc> = BTreeMap::new();
    for m in corpus.mentions() {
        let a = acc.entry(m.split).or_default();
        a.mentions += 1;
        a.docs.insert(&m.doc_id);
        a.topics.insert(&m.topic_id);
        if let Some(st) = &m.subtopic_id {
            a.subtopics.insert(st);
        }
        *a.clusters.entry(&corpus.gold()[&m.mention_id]).or_default() += 1;
    }
    acc.into_iter()
        .map(|(split, a)| {
            let stats = SplitStats {
                documents: a.docs.len(),
                mentions: a.mentions,
                clusters: a.clusters.len(),
                singletons: a.clusters.values().filter(|&&n| n == 1).count(),
                topics: a.topics.len(),
                subtopics: a.subtopics.len(),
            };
            (split, stats)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: &str, cluster: &str) -> String {
        format!(
            r#"{{"mention_id":"{id}","doc_id":"d1","topic_id":"t1","sentence_id":0,"trigger_text":"shot","head_lemma":"shoot","sentence_lemmas":["man","shoot"],"gold_cluster_id":"{cluster}","split":"train"}}"#
        )
    }

    fn read(text: &str) -> Result<Corpus> {
        read_corpus(text.as_bytes(), None)
    }

    #[test]
    fn loads_two_mentions() {
        let text = format!("{}\n{}\n", line("m1", "c1"), line("m2", "c1"));
        let corpus = read(&text).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.gold_cluster("m2"), Some("c1"));
        assert_eq!(corpus.mention("m1").unwrap().subtopic_id, None);
    }

    #[test]
    fn rejects_duplicate_ids() {
        let text = format!("{}\n{}\n", line("m1", "c1"), line("m1", "c2"));
        assert!(matches!(read(&text), Err(Error::DuplicateMentionId(id)) if id == "m1"));
    }

    #[test]
    fn rejects_missing_gold() {
        let text = line("m1", "");
        assert!(matches!(read(&text), Err(Error::MissingGoldLabel(_))));
        let text = line("m1", "c1").replace(r#","gold_cluster_id":"c1""#, "");
        assert!(matches!(read(&text), Err(Error::MissingGoldLabel(_))));
    }

    #[test]
    fn malformed_reports_line_and_field() {
        let text = format!(
            "{}\n{}\n",
            line("m1", "c1"),
            line("m2", "c1").replace(r#""trigger_text":"shot","#, "")
        );
        match read(&text) {
            Err(Error::MalformedRecord { line, field, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(field, "trigger_text");
            }
            other => panic!("unexpected {other:?}"),
        }
        let bad = line("m1", "c1").replace("\"sentence_id\":0", "\"sentence_id\":-1");
        match read(&bad) {
            Err(Error::MalformedRecord { line, field, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(field, "sentence_id");
            }
            other => panic!("unexpected {other:?}"),
        }
        let extra = line("m1", "c1").replace("{", r#"{"lemma":"x","#);
        assert!(matches!(read(&extra), Err(Error::MalformedRecord { field, .. }) if field == "lemma"));
        let upper = line("m1", "c1").replace("\"head_lemma\":\"shoot\"", "\"head_lemma\":\"Shoot\"");
        assert!(matches!(read(&upper), Err(Error::MalformedRecord { field, .. }) if field == "head_lemma"));
        let empty = line("m1", "c1").replace("[\"man\",\"shoot\"]", "[]");
        assert!(matches!(read(&empty), Err(Error::MalformedRecord { field, .. }) if field == "sentence_lemmas"));
    }

    #[test]
    fn split_filter_applies() {
        let text = format!("{}\n{}\n", line("m1", "c1"), line("m2", "c1").replace("train", "dev"));
        let only_dev: BTreeSet<_> = [Split::Dev].into();
        let corpus = read_corpus(text.as_bytes(), Some(&only_dev)).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus.mentions()[0].mention_id, "m2");
    }

    #[test]
    fn documents_must_cover_mentions() {
        let corpus = read(&line("m1", "c1")).unwrap();
        let err = corpus.clone().with_documents(DocumentMap::new()).unwrap_err();
        assert!(matches!(err, Error::DanglingDocument { .. }));
        let docs: DocumentMap = [("d1".to_string(), vec!["man".to_string()])].into();
        assert!(corpus.with_documents(docs).unwrap().documents().is_some());
    }

    #[test]
    fn one_cluster_has_no_singletons() {
        let text = [line("a", "c"), line("b", "c"), line("c", "c")].join("\n");
        let s = &stats(&read(&text).unwrap())[&Split::Train];
        assert_eq!(s.clusters, 1);
        assert_eq!(s.singletons, 0);
        assert_eq!(s.mentions, 3);
        assert_eq!(s.documents, 1);
        assert_eq!(s.topics, 1);
    }

    #[test]
    fn write_then_read_round_trips() {
        let text = [line("a", "c"), line("b", "d").replace("\"topic_id\":\"t1\"", "\"topic_id\":\"t1\",\"subtopic_id\":\"s1\"")].join("\n");
        let corpus = read(&text).unwrap();
        let mut buf = Vec::new();
        write_corpus(&corpus, &mut buf).unwrap();
        assert_eq!(read_corpus(buf.as_slice(), None).unwrap(), corpus);
    }
}
