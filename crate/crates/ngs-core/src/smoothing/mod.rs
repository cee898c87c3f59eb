//! Probability estimation over count tables.
//!
//! Six estimators share one layered model shape: each interpolation level
//! stores, per observed history, a discounted (or rescaled) term for every
//! seen continuation plus one back-off weight, and the terminal level is a
//! dense distribution over the predictable vocabulary. A query walks the
//! levels bottom-up as `p = term(h, w) + gamma(h) * p_lower(w)`, falling
//! through with weight one wherever the history is unseen.
//!
//! The estimators differ in how terms, back-off weights and the terminal
//! distribution are derived; the six builder functions document their
//! constructions and [`DiscountSet`] the parameter estimation.

mod build;
mod discounts;
mod dump;

pub use build::{absolute, add_k, good_turing, kneser_ney, mdknspomd, modified_kneser_ney};
pub use dump::{dump_model, parse_model};
pub use discounts::{
    estimate_discount_single, estimate_discounts_triple, DiscountSet, DISCOUNT_MARGIN,
};

use crate::corpus::{TokenId, Vocabulary};
use crate::error::{Error, Result};
use crate::ngram_stats::{CountTable, Gram};

/// The implemented smoothing methods, named as on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Additive smoothing with pseudo-count `delta`.
    AddK,
    /// Good-Turing count re-estimation, renormalized per history.
    GoodTuring,
    /// Absolute discounting interpolated with the empirical unigram.
    Abs,
    /// Interpolated Kneser-Ney: absolute discounting over a
    /// distinct-predecessor lower distribution.
    Kns,
    /// Modified Kneser-Ney: three-tier discounts over the same lower
    /// distribution.
    Mkns,
    /// Modified Kneser-Ney with the lower distribution re-derived so the
    /// smoothed counts reproduce the original marginals.
    Mdknspomd,
}

impl Method {
    /// All methods, in the order used by reports.
    pub const ALL: [Method; 6] = [
        Method::AddK,
        Method::GoodTuring,
        Method::Abs,
        Method::Kns,
        Method::Mkns,
        Method::Mdknspomd,
    ];

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            Method::AddK => "addk",
            Method::GoodTuring => "gt",
            Method::Abs => "abs",
            Method::Kns => "kns",
            Method::Mkns => "mkns",
            Method::Mdknspomd => "mdknspomd",
        }
    }

    /// Lowest model order the method supports.
    pub fn min_order(self) -> usize {
        match self {
            Method::Mdknspomd => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown method {s:?}; expected one of addk, gt, abs, kns, mkns, mdknspomd"
                ))
            })
    }
}

/// One interpolation level: per-history back-off weights and per-n-gram
/// terms, both id-sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    order: usize,
    /// `(history, back-off weight)` for every history observed at this
    /// level.
    gammas: Vec<(Gram, f64)>,
    /// `(n-gram, term)` for every n-gram observed at this level.
    terms: Vec<(Gram, f64)>,
}

impl Level {
    pub(crate) fn new(order: usize, gammas: Vec<(Gram, f64)>, terms: Vec<(Gram, f64)>) -> Self {
        debug_assert!(gammas.windows(2).all(|w| w[0].0 < w[1].0), "histories must be sorted");
        debug_assert!(terms.windows(2).all(|w| w[0].0 < w[1].0), "terms must be sorted");
        Level { order, gammas, terms }
    }

    /// N-gram order of this level.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Back-off weight of a history, or `None` when the history was not
    /// observed at this level.
    pub fn gamma(&self, history: &[TokenId]) -> Option<f64> {
        self.gammas
            .binary_search_by(|(h, _)| h[..].cmp(history))
            .ok()
            .map(|i| self.gammas[i].1)
    }

    /// Term of `(history, word)`; zero when the n-gram was not observed.
    pub fn term(&self, history: &[TokenId], word: TokenId) -> f64 {
        self.terms
            .binary_search_by(|(g, _)| {
                let (h, w) = g.split_at(g.len() - 1);
                h.cmp(history).then_with(|| w[0].cmp(&word))
            })
            .map(|i| self.terms[i].1)
            .unwrap_or(0.0)
    }

    /// Number of observed histories.
    pub fn history_count(&self) -> usize {
        self.gammas.len()
    }

    /// Number of stored terms.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// All `(history, back-off weight)` pairs, id-sorted.
    pub fn gammas(&self) -> impl Iterator<Item = (&[TokenId], f64)> {
        self.gammas.iter().map(|(h, g)| (&h[..], *g))
    }

    /// All `(n-gram, term)` pairs, id-sorted.
    pub fn terms(&self) -> impl Iterator<Item = (&[TokenId], f64)> {
        self.terms.iter().map(|(g, t)| (&g[..], *t))
    }
}

/// How the terminal unigram distribution was derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnigramVariant {
    /// Relative frequency of each predictable token.
    Empirical,
    /// Share of distinct bigram types ending in each token.
    Continuation,
    /// Discount-weighted tiers of distinct predecessors per token,
    /// normalized by the same weighting of the whole table.
    WeightedContinuation,
    /// Share of distinct trigram-closing bigrams ending in each token.
    TrigramTerminal,
    /// Uniform over the predictable vocabulary.
    Uniform,
}

impl UnigramVariant {
    const ALL: [UnigramVariant; 5] = [
        UnigramVariant::Empirical,
        UnigramVariant::Continuation,
        UnigramVariant::WeightedContinuation,
        UnigramVariant::TrigramTerminal,
        UnigramVariant::Uniform,
    ];

    /// Name used in model dumps.
    pub fn name(self) -> &'static str {
        match self {
            UnigramVariant::Empirical => "empirical",
            UnigramVariant::Continuation => "continuation",
            UnigramVariant::WeightedContinuation => "weighted-continuation",
            UnigramVariant::TrigramTerminal => "trigram-terminal",
            UnigramVariant::Uniform => "uniform",
        }
    }

    pub(crate) fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }
}

/// Dense terminal distribution over token ids; sentence-start slots hold
/// zero.
#[derive(Debug, Clone, PartialEq)]
pub struct UnigramDistribution {
    variant: UnigramVariant,
    probs: Vec<f64>,
}

impl UnigramDistribution {
    pub(crate) fn new(variant: UnigramVariant, probs: Vec<f64>) -> Self {
        UnigramDistribution { variant, probs }
    }

    /// How this distribution was derived.
    pub fn variant(&self) -> UnigramVariant {
        self.variant
    }

    /// Probability of one token id.
    pub fn prob(&self, id: TokenId) -> f64 {
        self.probs[id as usize]
    }
}

/// A trained smoothing model: one or more interpolation levels over a
/// terminal unigram distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedModel {
    method: Method,
    order: usize,
    /// Levels from highest order down; `levels[0]` has order `order`.
    levels: Vec<Level>,
    unigram: UnigramDistribution,
    /// Flat discount parameters, highest level first; empty for methods
    /// without discounts.
    discounts: Vec<f64>,
    /// Number of pseudo-counts clipped to zero while building the
    /// continuation level; always zero for the other levels and methods.
    floored: u64,
    /// First predictable token id (ids below are sentence-start sentinels).
    first_predictable: TokenId,
    /// Vocabulary size the model was trained against.
    vocab_len: usize,
}

impl SmoothedModel {
    pub(crate) fn assemble(
        method: Method,
        levels: Vec<Level>,
        unigram: UnigramDistribution,
        discounts: Vec<f64>,
        floored: u64,
        vocab: &Vocabulary,
    ) -> Self {
        let order = levels.first().map_or(1, Level::order);
        SmoothedModel {
            method,
            order,
            levels,
            unigram,
            discounts,
            floored,
            first_predictable: (vocab.len() - vocab.predictable_count()) as TokenId,
            vocab_len: vocab.len(),
        }
    }

    /// The smoothing method this model was built with.
    pub fn method(&self) -> Method {
        self.method
    }

    /// N-gram order of the model.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Interpolation levels, highest order first.
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Terminal distribution.
    pub fn unigram(&self) -> &UnigramDistribution {
        &self.unigram
    }

    /// Flat discount parameters, highest level first.
    pub fn discounts(&self) -> &[f64] {
        &self.discounts
    }

    /// Number of pseudo-counts clipped to zero during construction.
    pub fn floored_count(&self) -> u64 {
        self.floored
    }

    /// Vocabulary size the model was trained against.
    pub fn vocab_len(&self) -> usize {
        self.vocab_len
    }

    /// Ids the model assigns probability to, ascending.
    pub fn predictable_ids(&self) -> std::ops::Range<TokenId> {
        self.first_predictable..self.vocab_len as TokenId
    }

    /// Probability of `word` after `history`.
    ///
    /// The history must hold exactly `order - 1` ids and the word must be
    /// predictable. Unseen histories fall through to lower levels with
    /// weight one, so the result is always a proper probability.
    pub fn prob(&self, history: &[TokenId], word: TokenId) -> Result<f64> {
        if history.len() + 1 != self.order {
            return Err(Error::InvalidArgument(format!(
                "history of length {} queried against an order-{} model",
                history.len(),
                self.order
            )));
        }
        if !self.predictable_ids().contains(&word) {
            return Err(Error::InvalidArgument(format!(
                "token id {word} is not predictable by this model"
            )));
        }
        let mut p = self.unigram.prob(word);
        for level in self.levels.iter().rev() {
            let h = &history[history.len() + 1 - level.order..];
            if let Some(gamma) = level.gamma(h) {
                p = level.term(h, word) + gamma * p;
            }
        }
        Ok(p)
    }

    /// Sum of [`SmoothedModel::prob`] over every predictable id; a
    /// correctness probe used by tests and audits.
    pub fn distribution_sum(&self, history: &[TokenId]) -> Result<f64> {
        let mut sum = 0.0;
        for word in self.predictable_ids() {
            sum += self.prob(history, word)?;
        }
        Ok(sum)
    }
}

/// Options accepted by [`train_model`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    /// Pseudo-count for additive smoothing.
    pub delta: f64,
    /// Discount parameters to use instead of estimating them; the expected
    /// arity depends on method and order.
    pub discounts: Option<Vec<f64>>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { delta: 1.0, discounts: None }
    }
}

/// Trains a model of the table's order with the given method, estimating
/// any discount parameters that are not supplied in `options`.
pub fn train_model(
    table: &CountTable,
    vocab: &Vocabulary,
    method: Method,
    options: &TrainOptions,
) -> Result<SmoothedModel> {
    let order = table.order();
    if order > 3 {
        return Err(Error::InvalidArgument(format!(
            "supported orders are 1-3, got {order}"
        )));
    }
    if order < method.min_order() {
        return Err(Error::InvalidArgument(format!(
            "method {method} needs order at least {}, got {order}",
            method.min_order()
        )));
    }
    let manual = options.discounts.as_deref();
    match method {
        Method::AddK => {
            if manual.is_some() {
                return Err(Error::InvalidArgument(
                    "additive smoothing takes a delta, not discounts".into(),
                ));
            }
            add_k(table, vocab, options.delta)
        }
        Method::GoodTuring => {
            if manual.is_some() {
                return Err(Error::InvalidArgument(
                    "Good-Turing smoothing takes no discounts".into(),
                ));
            }
            good_turing(table, vocab)
        }
        Method::Abs => absolute(table, vocab, manual),
        Method::Kns => kneser_ney(table, vocab, manual),
        Method::Mkns => modified_kneser_ney(table, vocab, manual),
        Method::Mdknspomd => mdknspomd(table, vocab, manual),
    }
}
