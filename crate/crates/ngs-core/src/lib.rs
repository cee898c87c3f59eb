//! Batch n-gram language modelling toolkit.
//!
//! The pipeline runs corpus ingestion ([`corpus`]), n-gram counting and
//! derived statistics ([`ngram_stats`]), probability estimation under six
//! smoothing methods ([`smoothing`]), marginal-distribution auditing
//! ([`marginal_audit`]) and cross-validated entropy/perplexity measurement
//! ([`evaluation`]). A seeded synthetic-corpus generator ([`synth`]) feeds
//! the large-scale tests and benchmarks.
//!
//! Everything is deterministic: identical inputs and options produce
//! byte-identical artifacts, including across repeated runs of the
//! multi-threaded evaluation harness.

pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod marginal_audit;
pub mod ngram_stats;
pub mod smoothing;
pub mod synth;

#[cfg(test)]
pub(crate) mod test_data;

pub use corpus::{
    bos_symbol, pad_corpus, pad_sentence, tokenize_and_normalize, FoldAssignment, RawCorpus,
    SentenceCorpus, TokenId, Vocabulary, EOS, UNK,
};
pub use error::{Error, Result};
pub use evaluation::{
    cross_validate, evaluate, sentence_logprob, CrossvalOptions, EvalReport, FoldReport,
};
pub use marginal_audit::{
    marginal_report, raw_joint_counts, render_table, smoothed_joint_counts,
    trigram_marginal_report, JointCountMatrix, MarginalReport, MarginalRow,
};
pub use ngram_stats::{
    count_ngrams, ContinuationTable, CountHistogram, CountMode, CountTable, Pattern,
    PatternStats, TierCounts,
};
pub use smoothing::{
    dump_model, parse_model, train_model, DiscountSet, Method, SmoothedModel, TrainOptions,
    UnigramVariant,
};
pub use synth::{generate, SynthConfig};

