//! Shared fixtures for the criterion benchmarks: a mid-sized deterministic
//! corpus plus the vocabulary, padded sentences and count table derived
//! from it.

use ngs_core::{
    count_ngrams, generate, pad_corpus, CountTable, RawCorpus, SynthConfig, TokenId, Vocabulary,
};

/// Deterministic benchmark corpus of roughly sixty thousand tokens.
pub fn bench_corpus() -> RawCorpus {
    generate(&SynthConfig {
        seed: 17,
        sentences: 4_000,
        base_vocab: 8_000,
        ..Default::default()
    })
}

/// The benchmark corpus prepared for counting at the given order:
/// count table, vocabulary and padded sentences.
pub fn prepared(order: usize) -> (CountTable, Vocabulary, Vec<Vec<TokenId>>) {
    let corpus = bench_corpus();
    let vocab = Vocabulary::build(&corpus, order, 2).expect("vocabulary");
    let padded = pad_corpus(&vocab.apply(&corpus), order, &vocab).expect("padding");
    let table = count_ngrams(&padded, order, &vocab).expect("counting");
    (table, vocab, padded)
}
