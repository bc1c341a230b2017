//! Selective part-of-speech tagging.
//!
//! A bigram HMM tagger ([`hmm`]) trained by relative frequency ([`corpus`])
//! assigns each token a Forward-Backward posterior over its candidate tags.
//! A [`confidence`] threshold on the chosen tag's posterior rejects tokens
//! the tagger is unsure of, trading accuracy against efficiency (the share
//! of ambiguous tokens actually tagged). [`calibration`] picks the threshold
//! that reaches a target accuracy from the empirical distributions of
//! correct and incorrect tags, and [`evaluation`] measures the result.

pub mod calibration;
pub mod cli;
pub mod confidence;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod hmm;
pub mod synth;

pub use calibration::{
    build_cdfs, calibrate_threshold, collect_observations, emit_curves, AccuracyMode, CalibrationResult, EmpiricalCdf,
    ObservationSet,
};
pub use confidence::{
    apply_policy, margin_to_prob_threshold, measure_value, ConfidenceMeasure, Decision, ThresholdPolicy,
};
pub use corpus::{corpus_stats, parse_tagged, train_model, CorpusStats, TaggedCorpus, TaggedToken};
pub use error::{Error, Result};
pub use evaluation::{
    accuracy_ignore, accuracy_oracle, efficiency, overall_accuracy, rates, report, tally, EvalCounts, EvalReport, Rates,
};
pub use hmm::{
    baum_welch, forward_backward, sequence_likelihood, viterbi, HmmModel, Tag, TagId, Tagset, TokenPosterior,
};
