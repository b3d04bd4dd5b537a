use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use evcoref::corpus::Split;
use evcoref::heuristic::{OverlapMeasure, TuneObjective};
use evcoref::pairs::TopicKey;
use evcoref::scorer_bridge::ContextMode;

#[derive(Parser, Debug)]
#[command(name = "evcoref", version, about = "Cross-document event coreference: lemma heuristic, pair scoring bridge, clustering and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Per-split corpus statistics as JSON.
    Stats(StatsArgs),
    /// Harvest synonymous lemma pairs from gold chains.
    SynPairs(SynPairsArgs),
    /// Pick the overlap threshold on a development split.
    Tune(TuneArgs),
    /// Classify candidate pairs and write verdicts plus scoring requests.
    Filter(FilterArgs),
    /// Write the labeled training pairs for the pair scorer.
    ExportTrain(ExportTrainArgs),
    /// Connected components over heuristic positives or scorer decisions.
    Cluster(ClusterArgs),
    /// Score a cluster file against gold.
    Evaluate(EvaluateArgs),
    /// Category distributions, cluster purity and error listings.
    Analyze(AnalyzeArgs),
    /// The whole pipeline into one output directory.
    Run(RunArgs),
    /// Write a seeded synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KeyArg {
    Topic,
    Subtopic,
}

impl From<KeyArg> for TopicKey {
    fn from(k: KeyArg) -> Self {
        match k {
            KeyArg::Topic => TopicKey::Topic,
            KeyArg::Subtopic => TopicKey::Subtopic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OverlapArg {
    Jaccard,
    Min,
}

impl From<OverlapArg> for OverlapMeasure {
    fn from(o: OverlapArg) -> Self {
        match o {
            OverlapArg::Jaccard => OverlapMeasure::Jaccard,
            OverlapArg::Min => OverlapMeasure::MinOverlap,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ContextArg {
    Sentence,
    Document,
}

impl From<ContextArg> for ContextMode {
    fn from(c: ContextArg) -> Self {
        match c {
            ContextArg::Sentence => ContextMode::Sentence,
            ContextArg::Document => ContextMode::Document,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Conll,
    Balance,
}

impl From<ObjectiveArg> for TuneObjective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Conll => TuneObjective::ConllF1,
            ObjectiveArg::Balance => TuneObjective::Balance,
        }
    }
}

/// Where synonymous lemma pairs come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SynSource {
    /// Gold chains of the train split.
    Train,
    /// Gold chains of every split.
    Oracle,
    File(PathBuf),
}

fn parse_syn(s: &str) -> Result<SynSource, String> {
    Ok(match s {
        "train" => SynSource::Train,
        "oracle" => SynSource::Oracle,
        "" => return Err("empty syn-pair source".into()),
        path => SynSource::File(PathBuf::from(path)),
    })
}

fn parse_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("`{s}`: {e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn parse_splits(s: &str) -> Result<BTreeSet<Split>, String> {
    let out: BTreeSet<Split> = s
        .split(',')
        .map(|p| p.trim().parse::<Split>())
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    if out.is_empty() {
        Err("no splits given".into())
    } else {
        Ok(out)
    }
}

#[derive(Args, Debug, Clone)]
pub struct CorpusArgs {
    /// Mention file, one JSON object per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Document token file, needed for document context.
    #[arg(long)]
    pub documents: Option<PathBuf>,
    /// Grouping field for pair generation.
    #[arg(long, value_enum, default_value = "topic")]
    pub topic_key: KeyArg,
    /// JSON Lines of {mention_id, topic_id} replacing the grouping field.
    #[arg(long)]
    pub predicted_topics: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct HeuristicArgs {
    /// train, oracle, or a TSV file of lemma pairs.
    #[arg(long, value_parser = parse_syn, default_value = "train")]
    pub syn: SynSource,
    /// Minimum gold co-occurrence count for harvested pairs.
    #[arg(long, default_value_t = 1)]
    pub min_count: usize,
    #[arg(long, value_enum, default_value = "jaccard")]
    pub overlap: OverlapArg,
    /// Stop lemma file, one per line; the built-in English list otherwise.
    #[arg(long)]
    pub stop_lemmas: Option<PathBuf>,
    /// Never link two mentions from the same sentence.
    #[arg(long)]
    pub exclude_same_sentence: bool,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_parser = parse_splits)]
    pub splits: Option<BTreeSet<Split>>,
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynPairsArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_parser = parse_splits, default_value = "train")]
    pub splits: BTreeSet<Split>,
    #[arg(long, default_value_t = 1)]
    pub min_count: usize,
    /// TSV output; stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub heuristic: HeuristicArgs,
    #[arg(long, value_parser = parse_splits, default_value = "dev")]
    pub splits: BTreeSet<Split>,
    /// Comma-separated thresholds in [0, 1].
    #[arg(long, value_delimiter = ',', value_parser = parse_unit)]
    pub grid: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "conll")]
    pub objective: ObjectiveArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FilterArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub heuristic: HeuristicArgs,
    #[arg(long, value_parser = parse_splits, default_value = "test")]
    pub splits: BTreeSet<Split>,
    #[arg(long, value_parser = parse_unit, default_value_t = 0.05)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value = "sentence")]
    pub context: ContextArg,
    /// Directory for verdicts.jsonl and requests.jsonl.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ExportTrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub heuristic: HeuristicArgs,
    #[arg(long, value_parser = parse_splits, default_value = "train")]
    pub splits: BTreeSet<Split>,
    #[arg(long, value_parser = parse_unit, default_value_t = 0.05)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value = "sentence")]
    pub context: ContextArg,
    /// Output JSON Lines file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_parser = parse_splits, default_value = "test")]
    pub splits: BTreeSet<Split>,
    /// Link heuristic positives from this verdict file.
    #[arg(long, conflicts_with_all = ["requests", "scores"], required_unless_present = "scores")]
    pub verdicts: Option<PathBuf>,
    /// Request file matching --scores.
    #[arg(long, requires = "scores")]
    pub requests: Option<PathBuf>,
    /// Link pairs the scorer accepted.
    #[arg(long, requires = "requests")]
    pub scores: Option<PathBuf>,
    /// Output cluster file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_parser = parse_splits, default_value = "test")]
    pub splits: BTreeSet<Split>,
    #[arg(long)]
    pub clusters: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub heuristic: HeuristicArgs,
    #[arg(long, value_parser = parse_splits, default_value = "test")]
    pub splits: BTreeSet<Split>,
    #[arg(long, value_parser = parse_unit, default_value_t = 0.05)]
    pub threshold: f64,
    /// Predicted clusters to rank and inspect.
    #[arg(long)]
    pub clusters: PathBuf,
    #[arg(long, requires = "scores")]
    pub requests: Option<PathBuf>,
    #[arg(long, requires = "requests")]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub heuristic: HeuristicArgs,
    #[arg(long, value_parser = parse_splits, default_value = "test")]
    pub splits: BTreeSet<Split>,
    /// Fixed threshold; tuned on the dev split when omitted.
    #[arg(long, value_parser = parse_unit)]
    pub threshold: Option<f64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_unit)]
    pub grid: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "conll")]
    pub objective: ObjectiveArg,
    #[arg(long, value_enum, default_value = "sentence")]
    pub context: ContextArg,
    /// Scorer executable; gets the request and score file paths as its last two arguments.
    #[arg(long)]
    pub scorer: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub topics: usize,
    /// Directory for corpus.jsonl and documents.jsonl.
    #[arg(long)]
    pub out: PathBuf,
}
