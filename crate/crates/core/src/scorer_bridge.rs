//! File exchange with an external pairwise scorer.
//!
//! Heuristic-positive pairs are written as scoring requests, one JSON line per
//! pair, carrying the pair in both concatenation orders:
//!
//! ```text
//! {"pair_id":"p0","a":"m1","b":"m2",
//!  "context_ab":{"text":"...","trigger_spans":[[s,e],[s,e]]},
//!  "context_ba":{"text":"...","trigger_spans":[[s,e],[s,e]]}}
//! ```
//!
//! Each context is the first mention's context, a newline, then the second
//! mention's context. Triggers are wrapped as `<m> trigger </m>` and
//! `trigger_spans` gives the `[start, end)` character offsets of the two
//! trigger texts (markers excluded), first mention first. The scorer answers
//! with `{"pair_id":..., "score_ab":..., "score_ba":...}` per request; the
//! symmetric score is the mean of the two orders, and a pair is kept as a
//! coreference link when that mean is strictly above 0.5.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::Command;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Mention};
use crate::error::{Error, Result};
use crate::heuristic::PairVerdict;
use crate::jsonl::{load_jsonl, write_jsonl};
use crate::pairs::MentionPair;

pub const MARK_OPEN: &str = "<m>";
pub const MARK_CLOSE: &str = "</m>";

/// Symmetric scores above this are coreferent.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextMode {
    #[default]
    Sentence,
    Document,
}

impl FromStr for ContextMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sentence" => Ok(ContextMode::Sentence),
            "document" => Ok(ContextMode::Document),
            other => Err(format!("unknown context `{other}` (expected sentence or document)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairContext {
    pub text: String,
    pub trigger_spans: [[usize; 2]; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoringRequest {
    pub pair_id: String,
    pub a: String,
    pub b: String,
    pub context_ab: PairContext,
    pub context_ba: PairContext,
}

impl ScoringRequest {
    pub fn pair(&self) -> MentionPair {
        MentionPair::new(self.a.as_str(), self.b.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    #[serde(flatten)]
    pub pair: MentionPair,
    pub score_ab: f64,
    pub score_ba: f64,
    pub symmetric: f64,
}

impl ScoreRecord {
    pub fn is_coreferent(&self) -> bool {
        self.symmetric > DECISION_THRESHOLD
    }
}

/// One mention's context with its trigger marked; returns the text and the
/// character span of the trigger inside it.
fn marked_context(tokens: &[String], at: Option<usize>, trigger: &str) -> (String, [usize; 2]) {
    let mut text = String::new();
    let mut span = [0, 0];
    let mut push_trigger = |text: &mut String| {
        text.push_str(MARK_OPEN);
        text.push(' ');
        let start = text.chars().count();
        text.push_str(trigger);
        span = [start, start + trigger.chars().count()];
        text.push(' ');
        text.push_str(MARK_CLOSE);
    };
    for (i, tok) in tokens.iter().enumerate() {
        if i > 0 {
            text.push(' ');
        }
        if Some(i) == at {
            push_trigger(&mut text);
        } else {
            text.push_str(tok);
        }
    }
    if at.is_none() {
        if !text.is_empty() {
            text.push(' ');
        }
        push_trigger(&mut text);
    }
    (text, span)
}

fn find_subsequence(haystack: &[String], needle: &[String]) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    haystack.windows(needle.len()).position(|w| w == needle)
}

/// The trigger sits at the first occurrence of the head lemma in its
/// sentence; when the lemma is absent the marked trigger is appended.
fn mention_context(m: &Mention, corpus: &Corpus, mode: ContextMode) -> Result<(String, [usize; 2])> {
    let in_sentence = m.sentence_lemmas.iter().position(|t| *t == m.head_lemma);
    match mode {
        ContextMode::Sentence => Ok(marked_context(&m.sentence_lemmas, in_sentence, &m.trigger_text)),
        ContextMode::Document => {
            let doc = corpus
                .documents()
                .and_then(|d| d.get(&m.doc_id))
                .ok_or_else(|| Error::MissingDocumentText(m.doc_id.clone()))?;
            let at = match (find_subsequence(doc, &m.sentence_lemmas), in_sentence) {
                (Some(start), Some(offset)) => Some(start + offset),
                _ => doc.iter().position(|t| *t == m.head_lemma),
            };
            Ok(marked_context(doc, at, &m.trigger_text))
        }
    }
}

fn join(first: &(String, [usize; 2]), second: &(String, [usize; 2])) -> PairContext {
    let shift = first.0.chars().count() + 1;
    PairContext {
        text: format!("{}\n{}", first.0, second.0),
        trigger_spans: [first.1, [second.1[0] + shift, second.1[1] + shift]],
    }
}

/// Requests for every heuristic-positive verdict, in verdict order.
pub fn build_requests(verdicts: &[PairVerdict], corpus: &Corpus, mode: ContextMode) -> Result<Vec<ScoringRequest>> {
    let mut cache: HashMap<&str, (String, [usize; 2])> = HashMap::new();
    let mut context = |id: &str| -> Result<(String, [usize; 2])> {
        if let Some(c) = cache.get(id) {
            return Ok(c.clone());
        }
        let (key, m) = corpus
            .mention(id)
            .map(|m| (m.mention_id.as_str(), m))
            .ok_or_else(|| Error::UnknownMentionId(id.to_string()))?;
        let c = mention_context(m, corpus, mode)?;
        cache.insert(key, c.clone());
        Ok(c)
    };

    let mut out = Vec::new();
    for v in verdicts.iter().filter(|v| v.heuristic_positive) {
        let ca = context(&v.pair.a)?;
        let cb = context(&v.pair.b)?;
        out.push(ScoringRequest {
            pair_id: format!("p{}", out.len()),
            a: v.pair.a.clone(),
            b: v.pair.b.clone(),
            context_ab: join(&ca, &cb),
            context_ba: join(&cb, &ca),
        });
    }
    Ok(out)
}

pub fn write_requests<W: Write>(requests: &[ScoringRequest], out: W) -> std::io::Result<()> {
    write_jsonl(requests, out)
}

/// Writes the request file for the positive verdicts and returns the number
/// of requests written.
pub fn export_requests(verdicts: &[PairVerdict], corpus: &Corpus, mode: ContextMode, out: &Path) -> Result<usize> {
    let requests = build_requests(verdicts, corpus, mode)?;
    let file = File::create(out).map_err(|e| Error::io(out, e))?;
    write_requests(&requests, BufWriter::new(file)).map_err(|e| Error::io(out, e))?;
    Ok(requests.len())
}

pub fn read_requests(path: &Path) -> Result<Vec<ScoringRequest>> {
    load_jsonl(path)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RawScore {
    pub pair_id: String,
    pub score_ab: f64,
    pub score_ba: f64,
}

fn check_range(pair_id: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ScoreOutOfRange {
            pair_id: pair_id.to_string(),
            value,
        })
    }
}

/// Validates raw scores against the requests they answer and averages the
/// two orders. Output follows request order.
pub fn combine_scores(requests: &[ScoringRequest], scores: Vec<RawScore>) -> Result<Vec<ScoreRecord>> {
    let position: HashMap<&str, usize> = requests
        .iter()
        .enumerate()
        .map(|(i, r)| (r.pair_id.as_str(), i))
        .collect();
    let mut slots: Vec<Option<RawScore>> = vec![None; requests.len()];
    for s in scores {
        let &i = position
            .get(s.pair_id.as_str())
            .ok_or_else(|| Error::UnknownPair(s.pair_id.clone()))?;
        check_range(&s.pair_id, s.score_ab)?;
        check_range(&s.pair_id, s.score_ba)?;
        if slots[i].is_some() {
            return Err(Error::DuplicatePair(s.pair_id));
        }
        slots[i] = Some(s);
    }
    requests
        .iter()
        .zip(slots)
        .map(|(r, s)| {
            let s = s.ok_or_else(|| Error::MissingPair(r.pair_id.clone()))?;
            Ok(ScoreRecord {
                pair: r.pair(),
                score_ab: s.score_ab,
                score_ba: s.score_ba,
                symmetric: (s.score_ab + s.score_ba) / 2.0,
            })
        })
        .collect()
}

/// Reads a score file answering `requests`.
pub fn import_scores(path: &Path, requests: &[ScoringRequest]) -> Result<Vec<ScoreRecord>> {
    combine_scores(requests, load_jsonl(path)?)
}

/// Coreference links: pairs whose symmetric score exceeds 0.5.
pub fn decide(records: &[ScoreRecord]) -> BTreeSet<MentionPair> {
    records
        .iter()
        .filter(|r| r.is_coreferent())
        .map(|r| r.pair.clone())
        .collect()
}

#[derive(Serialize)]
struct DecisionRecord<'a> {
    #[serde(flatten)]
    record: &'a ScoreRecord,
    coreferent: bool,
}

pub fn write_decisions<W: Write>(records: &[ScoreRecord], out: W) -> std::io::Result<()> {
    let rows: Vec<DecisionRecord> = records
        .iter()
        .map(|r| DecisionRecord {
            record: r,
            coreferent: r.is_coreferent(),
        })
        .collect();
    write_jsonl(&rows, out)
}

#[derive(Debug, thiserror::Error)]
pub enum ScorerError {
    #[error("empty scorer command")]
    EmptyCommand,
    #[error("could not start scorer `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scorer `{command}` exited with {status}")]
    Failed {
        command: String,
        status: std::process::ExitStatus,
    },
}

/// Runs `command` (split on whitespace) with the request and score paths
/// appended as its last two arguments.
pub fn run_scorer(command: &str, requests: &Path, scores: &Path) -> Result<(), ScorerError> {
    let mut parts = command.split_whitespace();
    let program = parts.next().ok_or(ScorerError::EmptyCommand)?;
    let status = Command::new(program)
        .args(parts)
        .arg(requests)
        .arg(scores)
        .status()
        .map_err(|source| ScorerError::Spawn {
            command: command.to_string(),
            source,
        })?;
    if status.success() {
        Ok(())
    } else {
        Err(ScorerError::Failed {
            command: command.to_string(),
            status,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heuristic::MatchRule;
    use crate::test_util::{corpus_from, m_full};

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn corpus() -> Corpus {
        corpus_from(vec![
            (m_full("m1", "t", "shoot", "shot", "d1", 0, words("man shoot home")), "c"),
            (m_full("m2", "t", "shoot", "Shooting", "d2", 0, words("police say shoot")), "c"),
            (m_full("m3", "t", "fire", "fired", "d2", 1, words("he open up")), "c"),
        ])
    }

    fn positive(a: &str, b: &str) -> PairVerdict {
        PairVerdict {
            pair: MentionPair::new(a, b),
            heuristic_positive: true,
            overlap_score: 0.5,
            matched_rule: MatchRule::EqualLemma,
        }
    }

    #[test]
    fn markers_wrap_triggers() {
        let reqs = build_requests(&[positive("m1", "m2")], &corpus(), ContextMode::Sentence).unwrap();
        let r = &reqs[0];
        assert_eq!(r.context_ab.text, "man <m> shot </m> home\npolice say <m> Shooting </m>");
        assert_eq!(r.context_ba.text, "police say <m> Shooting </m>\nman <m> shot </m> home");
        let chars: Vec<char> = r.context_ab.text.chars().collect();
        let span = |s: [usize; 2]| chars[s[0]..s[1]].iter().collect::<String>();
        assert_eq!(span(r.context_ab.trigger_spans[0]), "shot");
        assert_eq!(span(r.context_ab.trigger_spans[1]), "Shooting");
    }

    #[test]
    fn absent_lemma_appends_trigger() {
        let reqs = build_requests(&[positive("m1", "m3")], &corpus(), ContextMode::Sentence).unwrap();
        assert!(reqs[0].context_ab.text.ends_with("he open up <m> fired </m>"));
    }

    #[test]
    fn only_positives_are_exported() {
        let mut neg = positive("m2", "m3");
        neg.heuristic_positive = false;
        let reqs = build_requests(&[positive("m1", "m2"), neg, positive("m1", "m3")], &corpus(), ContextMode::Sentence).unwrap();
        assert_eq!(reqs.len(), 2);
        assert_eq!(reqs[1].pair_id, "p1");
        assert!(build_requests(&[], &corpus(), ContextMode::Sentence).unwrap().is_empty());
    }

    #[test]
    fn document_context() {
        let c = corpus();
        assert!(matches!(
            build_requests(&[positive("m1", "m2")], &c, ContextMode::Document),
            Err(Error::MissingDocumentText(_))
        ));
        let docs = [
            ("d1".to_string(), words("intro man shoot home end")),
            ("d2".to_string(), words("shoot first police say shoot then he open up")),
        ]
        .into();
        let c = c.with_documents(docs).unwrap();
        let reqs = build_requests(&[positive("m1", "m2")], &c, ContextMode::Document).unwrap();
        // m2's sentence starts at token 2, so the second "shoot" is marked
        assert_eq!(
            reqs[0].context_ab.text,
            "intro man <m> shot </m> home end\nshoot first police say <m> Shooting </m> then he open up"
        );
    }

    fn requests() -> Vec<ScoringRequest> {
        build_requests(&[positive("m1", "m2"), positive("m1", "m3")], &corpus(), ContextMode::Sentence).unwrap()
    }

    fn raw(id: &str, ab: f64, ba: f64) -> RawScore {
        RawScore {
            pair_id: id.into(),
            score_ab: ab,
            score_ba: ba,
        }
    }

    #[test]
    fn symmetric_average() {
        let recs = combine_scores(&requests(), vec![raw("p1", 0.5, 0.5), raw("p0", 0.8, 0.6)]).unwrap();
        assert!((recs[0].symmetric - 0.7).abs() < 1e-12);
        assert_eq!(recs[1].symmetric, 0.5);
        assert_eq!(recs[0].pair, MentionPair::new("m1", "m2"));
    }

    #[test]
    fn score_validation() {
        let reqs = requests();
        assert!(matches!(
            combine_scores(&reqs, vec![raw("p0", 1.2, 0.5), raw("p1", 0.1, 0.1)]),
            Err(Error::ScoreOutOfRange { .. })
        ));
        assert!(matches!(
            combine_scores(&reqs, vec![raw("p0", f64::NAN, 0.5)]),
            Err(Error::ScoreOutOfRange { .. })
        ));
        assert!(matches!(combine_scores(&reqs, vec![raw("p0", 0.1, 0.1)]), Err(Error::MissingPair(id)) if id == "p1"));
        assert!(matches!(
            combine_scores(&reqs, vec![raw("p0", 0.1, 0.1), raw("p0", 0.1, 0.1)]),
            Err(Error::DuplicatePair(_))
        ));
        assert!(matches!(combine_scores(&reqs, vec![raw("p9", 0.1, 0.1)]), Err(Error::UnknownPair(_))));
    }

    #[test]
    fn decision_boundary() {
        let rec = |s: f64| ScoreRecord {
            pair: MentionPair::new("a", "b"),
            score_ab: s,
            score_ba: s,
            symmetric: s,
        };
        assert_eq!(decide(&[rec(0.51)]).len(), 1);
        assert!(decide(&[rec(0.5)]).is_empty());
    }
}
