use crate::corpus::{Corpus, Mention, Split};

pub fn m_full(
    id: &str,
    topic: &str,
    lemma: &str,
    trigger: &str,
    doc: &str,
    sentence_id: u32,
    sentence: Vec<String>,
) -> Mention {
    Mention {
        mention_id: id.to_string(),
        doc_id: doc.to_string(),
        topic_id: topic.to_string(),
        subtopic_id: None,
        sentence_id,
        trigger_text: trigger.to_string(),
        head_lemma: lemma.to_string(),
        sentence_lemmas: sentence,
        split: Split::Train,
    }
}

pub fn m_trig(id: &str, topic: &str, trigger: &str, lemma: &str) -> Mention {
    m_full(id, topic, lemma, trigger, "d", 0, vec![lemma.to_string()])
}

pub fn m(id: &str, topic: &str, lemma: &str) -> Mention {
    m_trig(id, topic, lemma, lemma)
}

pub fn corpus_from(rows: Vec<(Mention, &str)>) -> Corpus {
    let gold = rows
        .iter()
        .map(|(m, c)| (m.mention_id.clone(), c.to_string()))
        .collect();
    Corpus::new(rows.into_iter().map(|(m, _)| m).collect(), gold, None).unwrap()
}
