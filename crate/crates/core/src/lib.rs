//! Cross-document event coreference with a lemma heuristic in front of a
//! pairwise scorer.
//!
//! The pipeline:
//!
//! 1. [`corpus`] loads mentions with precomputed lemmas and gold clusters.
//! 2. [`syn_pairs`] harvests lemma pairs that co-occur in gold chains.
//! 3. [`pairs`] enumerates within-topic mention pairs, or only those whose
//!    triggers match, via lemma buckets.
//! 4. [`heuristic`] keeps pairs whose sentences overlap past a threshold and
//!    sorts every pair into easy, hard, missed and true-negative groups.
//! 5. [`scorer_bridge`] hands positives to an external scorer and reads back
//!    symmetric scores.
//! 6. [`clustering`] turns links into connected components; [`metrics`]
//!    scores them against gold; [`analysis`] explains the errors.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is on (the
//! default); see [`exec::Execution`].

pub mod analysis;
pub mod clustering;
pub mod corpus;
pub mod error;
pub mod exec;
pub mod heuristic;
pub mod jsonl;
pub mod metrics;
pub mod pairs;
pub mod scorer_bridge;
pub mod syn_pairs;
pub mod synth;

#[cfg(test)]
mod test_util;

pub use error::{Error, Result};
