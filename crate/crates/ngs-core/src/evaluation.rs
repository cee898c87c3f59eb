//! Cross-entropy and perplexity measurement, with k-fold cross-validation.
//!
//! Scoring is sentence-by-sentence: every real word and the end-of-sentence
//! sentinel are predicted, start padding is context only. Entropy is
//! `-total_log2_prob / token_count` in bits per word and perplexity is
//! `2^entropy`, so the two always satisfy that identity exactly.
//!
//! Cross-validation rebuilds the vocabulary, counts and discount estimates
//! from the training folds only; held-out tokens unknown to a fold's
//! vocabulary are scored as the unknown sentinel. Folds run in parallel and
//! are merged by index, so reports are byte-identical across runs.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::corpus::{pad_corpus, FoldAssignment, RawCorpus, TokenId, Vocabulary};
use crate::error::{Error, Result};
use crate::ngram_stats::count_ngrams;
use crate::smoothing::{train_model, Method, SmoothedModel, TrainOptions};

/// Entropy and perplexity of one evaluation, with per-fold breakdown when
/// produced by [`cross_validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Number of predicted tokens (real words plus end sentinels).
    pub token_count: u64,
    /// Sum of log2 probabilities over all predicted tokens.
    pub total_log2_prob: f64,
    /// Bits per predicted token: `-total_log2_prob / token_count`.
    pub entropy: f64,
    /// `2^entropy`.
    pub perplexity: f64,
    /// Per-fold results, in fold order; empty outside cross-validation.
    pub folds: Vec<FoldReport>,
}

/// One fold's slice of a cross-validation run.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport {
    /// Fold index, counting from zero.
    pub fold: usize,
    /// Predicted tokens in this fold's test split.
    pub token_count: u64,
    /// Sum of log2 probabilities over the fold's predictions.
    pub total_log2_prob: f64,
    /// Bits per predicted token within the fold.
    pub entropy: f64,
    /// `2^entropy` within the fold.
    pub perplexity: f64,
}

impl EvalReport {
    fn from_totals(token_count: u64, total_log2_prob: f64, folds: Vec<FoldReport>) -> Self {
        let entropy = -total_log2_prob / token_count as f64;
        EvalReport {
            token_count,
            total_log2_prob,
            entropy,
            perplexity: entropy.exp2(),
            folds,
        }
    }

    /// Serializes the report: one row per fold, then the aggregate row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("fold\ttokens\tentropy\tperplexity\n");
        for fold in &self.folds {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                fold.fold, fold.token_count, fold.entropy, fold.perplexity
            );
        }
        let _ = writeln!(
            out,
            "all\t{}\t{}\t{}",
            self.token_count, self.entropy, self.perplexity
        );
        out
    }
}

/// Scores one padded sentence: the summed log2 probability over every
/// predicted position and the number of predictions. Fails with the
/// offending n-gram when the model assigns a prediction no probability.
pub fn sentence_logprob(
    model: &SmoothedModel,
    padded: &[TokenId],
    vocab: &Vocabulary,
) -> Result<(f64, u64)> {
    let n = model.order();
    let mut log2_prob = 0.0;
    let mut predicted = 0u64;
    for at in (n - 1)..padded.len() {
        let history = &padded[at + 1 - n..at];
        let word = padded[at];
        let p = model.prob(history, word)?;
        if p <= 0.0 {
            let ngram: Vec<&str> =
                padded[at + 1 - n..=at].iter().map(|&id| vocab.token(id)).collect();
            return Err(Error::ZeroProbability { ngram: ngram.join(" ") });
        }
        log2_prob += p.log2();
        predicted += 1;
    }
    Ok((log2_prob, predicted))
}

/// Evaluates a model over padded test sentences.
pub fn evaluate(
    model: &SmoothedModel,
    padded: &[Vec<TokenId>],
    vocab: &Vocabulary,
) -> Result<EvalReport> {
    if padded.is_empty() {
        return Err(Error::InvalidArgument("test corpus is empty".into()));
    }
    if vocab.len() != model.vocab_len() {
        return Err(Error::InvalidArgument(format!(
            "vocabulary has {} tokens but the model was trained against {}",
            vocab.len(),
            model.vocab_len()
        )));
    }
    let mut total = 0.0;
    let mut count = 0u64;
    for sentence in padded {
        let (log2_prob, predicted) = sentence_logprob(model, sentence, vocab)?;
        total += log2_prob;
        count += predicted;
    }
    Ok(EvalReport::from_totals(count, total, Vec::new()))
}

/// Options for [`cross_validate`] beyond the method and order.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossvalOptions {
    /// Seed for the fold shuffle.
    pub seed: u64,
    /// Shuffle sentences before splitting; contiguous blocks otherwise.
    pub shuffle: bool,
    /// Minimum occurrences for a token to enter a fold's vocabulary.
    pub min_count: u64,
    /// Training parameters applied to every fold.
    pub train: TrainOptions,
}

impl Default for CrossvalOptions {
    fn default() -> Self {
        CrossvalOptions {
            seed: 0,
            shuffle: false,
            min_count: 1,
            train: TrainOptions::default(),
        }
    }
}

fn gather(corpus: &RawCorpus, indices: &[usize]) -> RawCorpus {
    let sentences: Vec<Vec<String>> =
        indices.iter().map(|&i| corpus.sentences[i].clone()).collect();
    let token_total = sentences.iter().map(|s| s.len() as u64).sum();
    RawCorpus { sentences, token_total }
}

/// Runs k-fold cross-validation: for each fold, vocabulary, counts and
/// discounts are rebuilt from the other folds, the fold itself is scored,
/// and the aggregate is token-weighted over all predictions.
pub fn cross_validate(
    corpus: &RawCorpus,
    k: usize,
    order: usize,
    method: Method,
    options: &CrossvalOptions,
) -> Result<EvalReport> {
    if corpus.sentences.is_empty() {
        return Err(Error::InvalidArgument("corpus is empty".into()));
    }
    let assignment =
        FoldAssignment::split(corpus.sentences.len(), k, options.seed, options.shuffle)?;
    let folds: Vec<FoldReport> = (0..k)
        .into_par_iter()
        .map(|fold| -> Result<FoldReport> {
            let train_raw = gather(corpus, &assignment.train_indices(fold));
            let test_raw = gather(corpus, &assignment.test_indices(fold));
            let vocab = Vocabulary::build(&train_raw, order, options.min_count)?;
            let train_padded = pad_corpus(&vocab.apply(&train_raw), order, &vocab)?;
            let table = count_ngrams(&train_padded, order, &vocab)?;
            let model = train_model(&table, &vocab, method, &options.train)?;
            let test_padded = pad_corpus(&vocab.apply(&test_raw), order, &vocab)?;
            let scored = evaluate(&model, &test_padded, &vocab)?;
            Ok(FoldReport {
                fold,
                token_count: scored.token_count,
                total_log2_prob: scored.total_log2_prob,
                entropy: scored.entropy,
                perplexity: scored.perplexity,
            })
        })
        .collect::<Result<Vec<FoldReport>>>()?;

    let token_count = folds.iter().map(|f| f.token_count).sum();
    let total_log2_prob = folds.iter().map(|f| f.total_log2_prob).sum();
    Ok(EvalReport::from_totals(token_count, total_log2_prob, folds))
}
