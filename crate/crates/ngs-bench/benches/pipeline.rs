//! Stage benchmarks over a deterministic mid-sized corpus: trigram
//! counting, training each interpolated smoothing method, and scoring.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use ngs_bench::{bench_corpus, prepared};
use ngs_core::{
    count_ngrams, evaluate, pad_corpus, train_model, Method, TrainOptions, Vocabulary,
};

fn bench_counting(c: &mut Criterion) {
    let corpus = bench_corpus();
    let vocab = Vocabulary::build(&corpus, 3, 2).expect("vocabulary");
    let padded = pad_corpus(&vocab.apply(&corpus), 3, &vocab).expect("padding");
    c.bench_function("count trigrams", |b| {
        b.iter(|| count_ngrams(black_box(&padded), 3, &vocab).expect("counting"));
    });
}

fn bench_training(c: &mut Criterion) {
    let (table, vocab, _) = prepared(3);
    let options = TrainOptions::default();
    let mut group = c.benchmark_group("train trigram");
    for method in [Method::Abs, Method::Kns, Method::Mkns, Method::Mdknspomd] {
        group.bench_function(method.to_string(), |b| {
            b.iter(|| train_model(black_box(&table), &vocab, method, &options).expect("training"));
        });
    }
    group.finish();
}

fn bench_scoring(c: &mut Criterion) {
    let (table, vocab, padded) = prepared(3);
    let model =
        train_model(&table, &vocab, Method::Mdknspomd, &TrainOptions::default()).expect("training");
    c.bench_function("score corpus", |b| {
        b.iter(|| evaluate(black_box(&model), &padded, &vocab).expect("scoring"));
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = bench_counting, bench_training, bench_scoring
}
criterion_main!(benches);
