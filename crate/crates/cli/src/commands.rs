use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use evcoref::analysis::{distribution_report, error_pairs, purity_ranking, write_distribution_csv, write_purity_csv};
use evcoref::clustering::{connected_components, load_clusters, save_clusters, write_conll, ClusterAssignment, CorefGraph};
use evcoref::corpus::{load_corpus, load_documents, save_corpus, save_documents, stats, Corpus, Split};
use evcoref::exec::Execution;
use evcoref::heuristic::{
    categorize_pairs, classify_pairs_with, parse_stop_lemmas, tune_threshold_with, CategoryCounts, HeuristicConfig,
    PairCategory, PairVerdict, TuneObjective,
};
use evcoref::jsonl::{load_jsonl, save_jsonl, write_jsonl};
use evcoref::metrics::{evaluate, MetricReport, Partition};
use evcoref::pairs::{all_pairs_with, generate_candidates_with, MentionPair, TopicKey, TopicOverride};
use evcoref::scorer_bridge::{
    build_requests, decide, import_scores, read_requests, run_scorer, write_decisions, ContextMode, PairContext,
    ScoreRecord, ScoringRequest,
};
use evcoref::syn_pairs::{extract_syn_pairs_with, SynPairSet};
use evcoref::synth::{synthetic_corpus, SynthConfig};
use serde::{Deserialize, Serialize};

use crate::args::*;

/// A failed command, sorted by exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Scorer(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Scorer(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Data(m) => write!(f, "data error: {m}"),
            Failure::Scorer(m) => write!(f, "scorer error: {m}"),
        }
    }
}

impl From<evcoref::Error> for Failure {
    fn from(e: evcoref::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, Failure> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>) -> Outcome {
    let mut out = create(path)?;
    f(&mut out).and_then(|_| out.flush()).map_err(|e| io_failure(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn save_json<T: Serialize>(value: &T, path: &Path) -> Outcome {
    fs::write(path, to_json(value)).map_err(|e| io_failure(path, e))
}

/// Prints to stdout, or writes the file when `out` is given.
fn emit(text: &str, out: Option<&Path>) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn make_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

fn load_full(args: &CorpusArgs) -> Result<Corpus, Failure> {
    let corpus = load_corpus(&args.corpus, None)?;
    Ok(match &args.documents {
        Some(p) => corpus.with_documents(load_documents(p)?)?,
        None => corpus,
    })
}

fn select(full: &Corpus, splits: &BTreeSet<Split>) -> Result<Corpus, Failure> {
    let sub = full.restrict(splits);
    if sub.is_empty() {
        let names: Vec<&str> = splits.iter().map(|s| s.as_str()).collect();
        return Err(Failure::Data(format!("no mentions in split(s) {}", names.join(","))));
    }
    Ok(sub)
}

#[derive(Deserialize)]
struct TopicRow {
    mention_id: String,
    topic_id: String,
}

fn load_override(args: &CorpusArgs) -> Result<Option<TopicOverride>, Failure> {
    let Some(path) = &args.predicted_topics else {
        return Ok(None);
    };
    let mut map = TopicOverride::new();
    for row in load_jsonl::<TopicRow>(path)? {
        if map.insert(row.mention_id.clone(), row.topic_id).is_some() {
            return Err(evcoref::Error::DuplicateMentionId(row.mention_id).into());
        }
    }
    Ok(Some(map))
}

fn heuristic_config(h: &HeuristicArgs, threshold: f64) -> Result<HeuristicConfig, Failure> {
    let mut cfg = HeuristicConfig {
        threshold,
        overlap_measure: h.overlap.into(),
        exclude_same_sentence: h.exclude_same_sentence,
        ..HeuristicConfig::default()
    };
    if let Some(p) = &h.stop_lemmas {
        cfg.stop_lemmas = parse_stop_lemmas(&fs::read_to_string(p).map_err(|e| io_failure(p, e))?);
    }
    Ok(cfg)
}

fn syn_pairs(full: &Corpus, h: &HeuristicArgs, key: TopicKey) -> Result<SynPairSet, Failure> {
    let exec = Execution::default();
    Ok(match &h.syn {
        SynSource::Train => extract_syn_pairs_with(exec, full, &[Split::Train].into(), key, h.min_count)?,
        SynSource::Oracle => extract_syn_pairs_with(exec, full, &Split::ALL.into(), key, h.min_count)?,
        SynSource::File(p) => SynPairSet::load(p)?,
    })
}

fn syn_label(s: &SynSource) -> &'static str {
    match s {
        SynSource::Train => "train",
        SynSource::Oracle => "oracle",
        SynSource::File(_) => "file",
    }
}

fn check_context(corpus: &CorpusArgs, context: ContextArg) -> Outcome {
    if context == ContextArg::Document && corpus.documents.is_none() {
        return Err(Failure::Usage("--context document needs --documents".into()));
    }
    Ok(())
}

fn default_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 20.0).collect()
}

/// Candidate pairs of `corpus` with their verdicts.
struct Filtered {
    verdicts: Vec<PairVerdict>,
    comparisons: u64,
}

fn filter_pairs(
    corpus: &Corpus,
    key: TopicKey,
    topics: Option<&TopicOverride>,
    syn: &SynPairSet,
    cfg: &HeuristicConfig,
) -> Result<Filtered, Failure> {
    let exec = Execution::default();
    let cand = generate_candidates_with(exec, corpus, key, topics, syn)?;
    Ok(Filtered {
        verdicts: classify_pairs_with(exec, &cand.pairs, corpus, syn, cfg)?,
        comparisons: cand.comparisons,
    })
}

fn positive_edges(verdicts: &[PairVerdict]) -> impl Iterator<Item = MentionPair> + '_ {
    verdicts.iter().filter(|v| v.heuristic_positive).map(|v| v.pair.clone())
}

fn components(corpus: &Corpus, edges: impl IntoIterator<Item = MentionPair>) -> Result<ClusterAssignment, Failure> {
    let nodes = corpus.mentions().iter().map(|m| m.mention_id.clone());
    Ok(connected_components(&CorefGraph::new(nodes, edges)?))
}

fn score(corpus: &Corpus, assignment: &ClusterAssignment) -> Result<MetricReport, Failure> {
    Ok(evaluate(&Partition::from_labels(corpus.gold()), &assignment.to_partition())?)
}

/// Categories over every within-group pair, one count per split. Gold topics
/// are used even when predicted topics drive pair generation, since the
/// categories need each gold cluster's pairs in one group.
fn category_counts(
    corpus: &Corpus,
    key: TopicKey,
    syn: &SynPairSet,
    cfg: &HeuristicConfig,
) -> Result<BTreeMap<Split, CategoryCounts>, Failure> {
    let exec = Execution::default();
    let mut out = BTreeMap::new();
    for split in corpus.splits() {
        let sub = corpus.restrict(&[split].into());
        let pairs = all_pairs_with(exec, &sub, key, None)?;
        let verdicts = classify_pairs_with(exec, &pairs, &sub, syn, cfg)?;
        out.insert(split, categorize_pairs(&verdicts, sub.gold())?.counts);
    }
    Ok(out)
}

/// What the heuristic stage ran with.
struct Setup<'a> {
    corpus: &'a Corpus,
    key: TopicKey,
    syn: &'a SynPairSet,
    cfg: &'a HeuristicConfig,
}

fn write_analysis(
    dir: &Path,
    setup: &Setup,
    assignment: &ClusterAssignment,
    verdicts: &[PairVerdict],
    edges: &BTreeSet<MentionPair>,
    records: &[ScoreRecord],
) -> Outcome {
    let corpus = setup.corpus;
    let report = distribution_report(&category_counts(corpus, setup.key, setup.syn, setup.cfg)?);
    save_json(&report, &dir.join("categories.json"))?;
    write_with(&dir.join("distributions.csv"), |w| write_distribution_csv(&report, w))?;
    let ranking = purity_ranking(assignment, corpus.gold());
    write_with(&dir.join("purity.csv"), |w| write_purity_csv(&ranking, w))?;
    let errors = error_pairs(corpus, assignment, verdicts, edges, records);
    write_with(&dir.join("errors.jsonl"), |w| write_jsonl(&errors, w))
}

pub fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Stats(a) => cmd_stats(a),
        Command::SynPairs(a) => cmd_syn_pairs(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Filter(a) => cmd_filter(a),
        Command::ExportTrain(a) => cmd_export_train(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Run(a) => cmd_run(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn cmd_stats(a: StatsArgs) -> Outcome {
    let full = load_full(&a.corpus)?;
    let corpus = match &a.splits {
        Some(s) => select(&full, s)?,
        None => full,
    };
    emit(&to_json(&stats(&corpus)), a.out.as_deref())
}

fn cmd_syn_pairs(a: SynPairsArgs) -> Outcome {
    let full = load_full(&a.corpus)?;
    let set = extract_syn_pairs_with(Execution::default(), &full, &a.splits, a.corpus.topic_key.into(), a.min_count)?;
    let mut buf = Vec::new();
    set.write_tsv(&mut buf).expect("writing to memory");
    emit(&String::from_utf8(buf).expect("lemmas are utf-8"), a.out.as_deref())
}

fn cmd_tune(a: TuneArgs) -> Outcome {
    let full = load_full(&a.corpus)?;
    let key = a.corpus.topic_key.into();
    let syn = syn_pairs(&full, &a.heuristic, key)?;
    let dev = select(&full, &a.splits)?;
    let base = heuristic_config(&a.heuristic, 0.0)?;
    let grid = a.grid.unwrap_or_else(default_grid);
    let report = tune_threshold_with(Execution::default(), &dev, key, &syn, &base, &grid, a.objective.into())?;
    emit(&to_json(&report), a.out.as_deref())
}

fn cmd_filter(a: FilterArgs) -> Outcome {
    check_context(&a.corpus, a.context)?;
    let full = load_full(&a.corpus)?;
    let key = a.corpus.topic_key.into();
    let topics = load_override(&a.corpus)?;
    let syn = syn_pairs(&full, &a.heuristic, key)?;
    let corpus = select(&full, &a.splits)?;
    let cfg = heuristic_config(&a.heuristic, a.threshold)?;
    let f = filter_pairs(&corpus, key, topics.as_ref(), &syn, &cfg)?;
    let requests = build_requests(&f.verdicts, &corpus, a.context.into())?;
    make_dir(&a.out)?;
    save_jsonl(&f.verdicts, &a.out.join("verdicts.jsonl"))?;
    save_jsonl(&requests, &a.out.join("requests.jsonl"))?;
    println!(
        "candidates {} comparisons {} positives {}",
        f.verdicts.len(),
        f.comparisons,
        requests.len()
    );
    Ok(())
}

/// One labeled pair for scorer training; both concatenation orders travel together.
#[derive(Serialize, Deserialize)]
pub struct TrainingPair {
    pub pair_id: String,
    pub a: String,
    pub b: String,
    pub label: u8,
    pub category: PairCategory,
    pub context_ab: PairContext,
    pub context_ba: PairContext,
}

fn cmd_export_train(a: ExportTrainArgs) -> Outcome {
    check_context(&a.corpus, a.context)?;
    let full = load_full(&a.corpus)?;
    let key = a.corpus.topic_key.into();
    let topics = load_override(&a.corpus)?;
    let syn = syn_pairs(&full, &a.heuristic, key)?;
    let corpus = select(&full, &a.splits)?;
    let cfg = heuristic_config(&a.heuristic, a.threshold)?;
    let f = filter_pairs(&corpus, key, topics.as_ref(), &syn, &cfg)?;
    let requests = build_requests(&f.verdicts, &corpus, a.context.into())?;
    let rows: Vec<TrainingPair> = requests
        .into_iter()
        .map(|r: ScoringRequest| {
            let coref = corpus.gold_cluster(&r.a) == corpus.gold_cluster(&r.b);
            TrainingPair {
                pair_id: r.pair_id,
                a: r.a,
                b: r.b,
                label: u8::from(coref),
                category: if coref { PairCategory::PEasy } else { PairCategory::PHard },
                context_ab: r.context_ab,
                context_ba: r.context_ba,
            }
        })
        .collect();
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        make_dir(dir)?;
    }
    save_jsonl(&rows, &a.out)?;
    let easy = rows.iter().filter(|r| r.label == 1).count();
    println!("pairs {} easy {} hard {}", rows.len(), easy, rows.len() - easy);
    Ok(())
}

fn scored_edges(requests: &Path, scores: &Path) -> Result<(Vec<ScoreRecord>, BTreeSet<MentionPair>), Failure> {
    let reqs = read_requests(requests)?;
    let records = import_scores(scores, &reqs)?;
    let edges = decide(&records);
    Ok((records, edges))
}

fn cmd_cluster(a: ClusterArgs) -> Outcome {
    let full = load_full(&a.corpus)?;
    let corpus = select(&full, &a.splits)?;
    let edges: Vec<MentionPair> = match (&a.verdicts, &a.requests, &a.scores) {
        (Some(v), _, _) => positive_edges(&load_jsonl::<PairVerdict>(v)?).collect(),
        (None, Some(r), Some(s)) => scored_edges(r, s)?.1.into_iter().collect(),
        _ => return Err(Failure::Usage("give --verdicts, or --requests with --scores".into())),
    };
    let assignment = components(&corpus, edges)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        make_dir(dir)?;
    }
    save_clusters(&assignment, &a.out)?;
    println!("mentions {} clusters {}", assignment.len(), assignment.num_clusters());
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Outcome {
    let full = load_full(&a.corpus)?;
    let corpus = select(&full, &a.splits)?;
    let assignment = load_clusters(&a.clusters)?;
    emit(&to_json(&score(&corpus, &assignment)?), a.out.as_deref())
}

fn cmd_analyze(a: AnalyzeArgs) -> Outcome {
    let full = load_full(&a.corpus)?;
    let key = a.corpus.topic_key.into();
    let topics = load_override(&a.corpus)?;
    let syn = syn_pairs(&full, &a.heuristic, key)?;
    let corpus = select(&full, &a.splits)?;
    let cfg = heuristic_config(&a.heuristic, a.threshold)?;
    let f = filter_pairs(&corpus, key, topics.as_ref(), &syn, &cfg)?;
    let assignment = load_clusters(&a.clusters)?;
    let (records, edges) = match (&a.requests, &a.scores) {
        (Some(r), Some(s)) => scored_edges(r, s)?,
        _ => (Vec::new(), positive_edges(&f.verdicts).collect()),
    };
    make_dir(&a.out)?;
    let setup = Setup {
        corpus: &corpus,
        key,
        syn: &syn,
        cfg: &cfg,
    };
    write_analysis(&a.out, &setup, &assignment, &f.verdicts, &edges, &records)
}

/// Settings and headline numbers of one `run`, written as run.json.
#[derive(Serialize)]
struct RunSummary {
    splits: Vec<Split>,
    topic_key: String,
    predicted_topics: bool,
    syn_source: &'static str,
    syn_pairs: usize,
    threshold: f64,
    threshold_source: &'static str,
    overlap: String,
    exclude_same_sentence: bool,
    context: String,
    mentions: usize,
    candidates: usize,
    comparisons: u64,
    positives: usize,
    lh_conll_f1: f64,
    scorer: bool,
    links: Option<usize>,
    ap_conll_f1: Option<f64>,
}

fn write_cluster_files(dir: &Path, tag: &str, assignment: &ClusterAssignment, report: &MetricReport) -> Outcome {
    save_clusters(assignment, &dir.join(format!("clusters_{tag}.jsonl")))?;
    save_json(report, &dir.join(format!("report_{tag}.json")))?;
    write_with(&dir.join(format!("response_{tag}.conll")), |w| write_conll(assignment, "corpus", w))
}

fn cmd_run(a: RunArgs) -> Outcome {
    check_context(&a.corpus, a.context)?;
    let exec = Execution::default();
    let full = load_full(&a.corpus)?;
    let key: TopicKey = a.corpus.topic_key.into();
    let topics = load_override(&a.corpus)?;
    let syn = syn_pairs(&full, &a.heuristic, key)?;
    let corpus = select(&full, &a.splits)?;
    let out: PathBuf = a.out.clone();
    make_dir(&out)?;
    write_with(&out.join("syn_pairs.tsv"), |w| syn.write_tsv(w))?;

    let dev = full.restrict(&[Split::Dev].into());
    let (threshold, threshold_source) = match a.threshold {
        Some(t) => (t, "fixed"),
        None if !dev.is_empty() => {
            let base = heuristic_config(&a.heuristic, 0.0)?;
            let grid = a.grid.clone().unwrap_or_else(default_grid);
            let objective: TuneObjective = a.objective.into();
            let report = tune_threshold_with(exec, &dev, key, &syn, &base, &grid, objective)?;
            save_json(&report, &out.join("tune.json"))?;
            (report.threshold, "tuned")
        }
        None => (HeuristicConfig::default().threshold, "default"),
    };
    let cfg = heuristic_config(&a.heuristic, threshold)?;

    let f = filter_pairs(&corpus, key, topics.as_ref(), &syn, &cfg)?;
    save_jsonl(&f.verdicts, &out.join("verdicts.jsonl"))?;
    let lh_edges: BTreeSet<MentionPair> = positive_edges(&f.verdicts).collect();
    let lh = components(&corpus, lh_edges.iter().cloned())?;
    let lh_report = score(&corpus, &lh)?;
    write_cluster_files(&out, "lh", &lh, &lh_report)?;
    let key_clusters = ClusterAssignment::from_map(corpus.gold().clone());
    write_with(&out.join("key.conll"), |w| write_conll(&key_clusters, "corpus", w))?;

    let mode: ContextMode = a.context.into();
    let requests = build_requests(&f.verdicts, &corpus, mode)?;
    let request_path = out.join("requests.jsonl");
    save_jsonl(&requests, &request_path)?;

    let mut summary = RunSummary {
        splits: a.splits.iter().copied().collect(),
        topic_key: format!("{:?}", a.corpus.topic_key).to_lowercase(),
        predicted_topics: topics.is_some(),
        syn_source: syn_label(&a.heuristic.syn),
        syn_pairs: syn.len(),
        threshold,
        threshold_source,
        overlap: format!("{:?}", a.heuristic.overlap).to_lowercase(),
        exclude_same_sentence: a.heuristic.exclude_same_sentence,
        context: format!("{:?}", a.context).to_lowercase(),
        mentions: corpus.len(),
        candidates: f.verdicts.len(),
        comparisons: f.comparisons,
        positives: lh_edges.len(),
        lh_conll_f1: lh_report.conll_f1,
        scorer: a.scorer.is_some(),
        links: None,
        ap_conll_f1: None,
    };
    println!("LH  conll_f1 {:.4} ({} links)", lh_report.conll_f1, lh_edges.len());

    let (final_clusters, edges, records) = match &a.scorer {
        None => (lh, lh_edges, Vec::new()),
        Some(cmd) => {
            let score_path = out.join("scores.jsonl");
            run_scorer(cmd, &request_path, &score_path).map_err(|e| Failure::Scorer(e.to_string()))?;
            let records = import_scores(&score_path, &requests).map_err(|e| Failure::Scorer(e.to_string()))?;
            write_with(&out.join("decisions.jsonl"), |w| write_decisions(&records, w))?;
            let edges = decide(&records);
            let ap = components(&corpus, edges.iter().cloned())?;
            let ap_report = score(&corpus, &ap)?;
            write_cluster_files(&out, "ap", &ap, &ap_report)?;
            summary.links = Some(edges.len());
            summary.ap_conll_f1 = Some(ap_report.conll_f1);
            println!("AP  conll_f1 {:.4} ({} links)", ap_report.conll_f1, edges.len());
            (ap, edges, records)
        }
    };

    let setup = Setup {
        corpus: &corpus,
        key,
        syn: &syn,
        cfg: &cfg,
    };
    write_analysis(&out, &setup, &final_clusters, &f.verdicts, &edges, &records)?;
    save_json(&summary, &out.join("run.json"))
}

fn cmd_synth(a: SynthArgs) -> Outcome {
    let corpus = synthetic_corpus(
        &SynthConfig {
            topics: a.topics,
            ..SynthConfig::default()
        },
        a.seed,
    );
    make_dir(&a.out)?;
    save_corpus(&corpus, &a.out.join("corpus.jsonl"))?;
    if let Some(docs) = corpus.documents() {
        save_documents(docs, &a.out.join("documents.jsonl"))?;
    }
    println!("mentions {}", corpus.len());
    Ok(())
}
