//! Constructions of the six model families over frozen count tables.
//!
//! Order 1 and 2 models are a single discounted (or rescaled) level over a
//! terminal distribution. Order 3 models recurse: the top level discounts
//! the raw trigram counts, the middle level rediscounts per-bigram
//! continuation statistics, and the terminal distribution is the share of
//! distinct closing bigrams per word. Back-off weights always equal the
//! mass actually subtracted from their history, which is what keeps every
//! distribution summing to one and the marginal-preserving variants exact.

use super::discounts::{estimate_discount_single, estimate_discounts_triple, DiscountSet};
use super::{Level, Method, SmoothedModel, UnigramDistribution, UnigramVariant};
use crate::corpus::{TokenId, Vocabulary};
use crate::error::{Error, Result};
use crate::ngram_stats::{ContinuationTable, CountTable, Gram, PatternStats};

/// Additive smoothing: every count is raised by `delta`, including the
/// `delta * |V|` mass of unseen continuations, which the back-off weight
/// routes through the uniform terminal.
pub fn add_k(table: &CountTable, vocab: &Vocabulary, delta: f64) -> Result<SmoothedModel> {
    check_order(table)?;
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "delta must be positive and finite, got {delta}"
        )));
    }
    let v = vocab.predictable_count() as f64;
    let mut gammas = Vec::with_capacity(table.context_count());
    let mut terms = Vec::with_capacity(table.entry_count());
    for (context, total, run) in table.context_runs() {
        let denom = delta * v + total as f64;
        gammas.push((Gram::from(context), delta * v / denom));
        for (gram, count) in run {
            terms.push((gram.clone(), *count as f64 / denom));
        }
    }
    let level = Level::new(table.order(), gammas, terms);
    Ok(SmoothedModel::assemble(
        Method::AddK,
        vec![level],
        uniform(vocab),
        vec![delta],
        0,
        vocab,
    ))
}

/// Good-Turing smoothing: counts are replaced by
/// `r* = (r + 1) n_{r+1} / n_r` (left unadjusted where the next bucket is
/// empty), unseen events share `0* = n_1 / n_0`, and each history is
/// renormalized so its distribution sums to one.
pub fn good_turing(table: &CountTable, vocab: &Vocabulary) -> Result<SmoothedModel> {
    check_order(table)?;
    let hist = table.histogram();
    let r_star = |r: u64| {
        let next = hist.n(r + 1);
        if next > 0 {
            (r + 1) as f64 * next as f64 / hist.n(r) as f64
        } else {
            r as f64
        }
    };
    let v = vocab.predictable_count() as u64;
    let unseen_events = table.context_count() as u64 * v - table.entry_count() as u64;
    let zero_star = if unseen_events > 0 && hist.n(1) > 0 {
        hist.n(1) as f64 / unseen_events as f64
    } else {
        0.0
    };

    let mut gammas = Vec::with_capacity(table.context_count());
    let mut terms = Vec::with_capacity(table.entry_count());
    for (context, _, run) in table.context_runs() {
        let mut z = (v - run.len() as u64) as f64 * zero_star;
        for (_, count) in run {
            z += r_star(*count);
        }
        gammas.push((Gram::from(context), v as f64 * zero_star / z));
        for (gram, count) in run {
            terms.push((gram.clone(), (r_star(*count) - zero_star) / z));
        }
    }
    let level = Level::new(table.order(), gammas, terms);
    Ok(SmoothedModel::assemble(
        Method::GoodTuring,
        vec![level],
        uniform(vocab),
        Vec::new(),
        0,
        vocab,
    ))
}

/// Absolute discounting interpolated with the empirical distribution of
/// the next-lower order.
///
/// `discounts` holds one value per discounted level, highest first
/// (`[D]` for orders 1-2, `[D_top, D_mid]` for order 3); pass `None` to
/// estimate them from the count-of-count histograms.
pub fn absolute(
    table: &CountTable,
    vocab: &Vocabulary,
    discounts: Option<&[f64]>,
) -> Result<SmoothedModel> {
    check_order(table)?;
    match table.order() {
        3 => {
            let bigrams = table.marginalize()?;
            let [d_top, d_mid] = two_singles(discounts, Method::Abs, &[table, &bigrams])?;
            let top = discounted_level(table, &DiscountSet::Single(d_top));
            let mid = discounted_level(&bigrams, &DiscountSet::Single(d_mid));
            let unigram = empirical(&bigrams.marginalize()?, vocab)?;
            Ok(SmoothedModel::assemble(
                Method::Abs,
                vec![top, mid],
                unigram,
                vec![d_top, d_mid],
                0,
                vocab,
            ))
        }
        order => {
            let [d] = one_single(discounts, Method::Abs, table)?;
            let level = discounted_level(table, &DiscountSet::Single(d));
            let unigram = if order == 2 {
                empirical(&table.marginalize()?, vocab)?
            } else {
                uniform(vocab)
            };
            Ok(SmoothedModel::assemble(Method::Abs, vec![level], unigram, vec![d], 0, vocab))
        }
    }
}

/// Interpolated Kneser-Ney: absolute discounting whose lower distribution
/// weighs each word by the share of distinct contexts it completes.
///
/// `discounts` is `[D]` for orders 1-2 or `[D_top, D_mid]` for order 3,
/// where the middle level rediscounts the integer continuation counts;
/// `None` estimates each value from the corresponding histogram.
pub fn kneser_ney(
    table: &CountTable,
    vocab: &Vocabulary,
    discounts: Option<&[f64]>,
) -> Result<SmoothedModel> {
    check_order(table)?;
    match table.order() {
        3 => {
            let cont = ContinuationTable::build(table, [0.0; 3])?;
            let d_top = match discounts {
                Some(values) => {
                    expect_arity(values, 2, Method::Kns)?;
                    values[0]
                }
                None => estimate_discount_single(&table.histogram())?,
            };
            let d_mid = match discounts {
                Some(values) => values[1],
                None => estimate_discount_single(&cont.continuation_histogram())?,
            };
            DiscountSet::Single(d_top).validate()?;
            DiscountSet::Single(d_mid).validate()?;
            let top = discounted_level(table, &DiscountSet::Single(d_top));
            let mid = continuation_level(&cont, &DiscountSet::Single(d_mid));
            let unigram = terminal(&cont, vocab);
            Ok(SmoothedModel::assemble(
                Method::Kns,
                vec![top, mid],
                unigram,
                vec![d_top, d_mid],
                0,
                vocab,
            ))
        }
        order => {
            let [d] = one_single(discounts, Method::Kns, table)?;
            let level = discounted_level(table, &DiscountSet::Single(d));
            let unigram = if order == 2 {
                continuation(&PatternStats::build(table), vocab)
            } else {
                uniform(vocab)
            };
            Ok(SmoothedModel::assemble(Method::Kns, vec![level], unigram, vec![d], 0, vocab))
        }
    }
}

/// Modified Kneser-Ney: the Kneser-Ney construction with separate
/// discounts for counts of one, two, and three or more at every
/// discounted level.
///
/// `discounts` is `[D1, D2, D3+]` for orders 1-2 or six values (top tier
/// triple, then the middle-level triple) for order 3; `None` estimates
/// them.
pub fn modified_kneser_ney(
    table: &CountTable,
    vocab: &Vocabulary,
    discounts: Option<&[f64]>,
) -> Result<SmoothedModel> {
    check_order(table)?;
    match table.order() {
        3 => {
            let cont = ContinuationTable::build(table, [0.0; 3])?;
            let (top_set, mid_set) = match discounts {
                Some(values) => {
                    expect_arity(values, 6, Method::Mkns)?;
                    (tiered_from(&values[..3]), tiered_from(&values[3..]))
                }
                None => (
                    estimate_discounts_triple(&table.histogram())?,
                    estimate_discounts_triple(&cont.continuation_histogram())?,
                ),
            };
            top_set.validate()?;
            mid_set.validate()?;
            let top = discounted_level(table, &top_set);
            let mid = continuation_level(&cont, &mid_set);
            let unigram = terminal(&cont, vocab);
            let mut values = top_set.values();
            values.extend(mid_set.values());
            Ok(SmoothedModel::assemble(Method::Mkns, vec![top, mid], unigram, values, 0, vocab))
        }
        order => {
            let set = one_triple(discounts, Method::Mkns, table)?;
            let level = discounted_level(table, &set);
            let unigram = if order == 2 {
                continuation(&PatternStats::build(table), vocab)
            } else {
                uniform(vocab)
            };
            Ok(SmoothedModel::assemble(
                Method::Mkns,
                vec![level],
                unigram,
                set.values(),
                0,
                vocab,
            ))
        }
    }
}

/// Modified Kneser-Ney with the lower distribution re-derived from the
/// subtracted mass itself, so the smoothed counts reproduce the original
/// marginal distribution of the training table.
///
/// At order 2 the terminal weighs each word's distinct-predecessor tiers
/// with the same `[D1, D2, D3+]` used on top. At order 3 the middle level
/// discounts the tier-weighted pseudo-counts by a single value, giving
/// `discounts` the shape `[D1, D2, D3+, D_mid]`; `None` estimates the
/// triple from the trigram histogram and `D_mid` from the continuation
/// histogram. Order 1 is not defined for this method.
pub fn mdknspomd(
    table: &CountTable,
    vocab: &Vocabulary,
    discounts: Option<&[f64]>,
) -> Result<SmoothedModel> {
    check_order(table)?;
    match table.order() {
        1 => Err(Error::InvalidArgument(
            "marginal-preserving smoothing needs order 2 or 3".into(),
        )),
        2 => {
            let set = one_triple(discounts, Method::Mdknspomd, table)?;
            let level = discounted_level(table, &set);
            let unigram = weighted(&PatternStats::build(table), &set, vocab);
            Ok(SmoothedModel::assemble(
                Method::Mdknspomd,
                vec![level],
                unigram,
                set.values(),
                0,
                vocab,
            ))
        }
        _ => {
            let (top_set, d_mid) = match discounts {
                Some(values) => {
                    expect_arity(values, 4, Method::Mdknspomd)?;
                    let set = tiered_from(&values[..3]);
                    set.validate()?;
                    let d_mid = values[3];
                    if !d_mid.is_finite() || d_mid < 0.0 {
                        return Err(Error::InvalidArgument(format!(
                            "middle-level discount must be non-negative and finite, got {d_mid}"
                        )));
                    }
                    (set, d_mid)
                }
                None => {
                    let set = estimate_discounts_triple(&table.histogram())?;
                    (set, f64::NAN) // resolved below, once the continuation table exists
                }
            };
            let DiscountSet::Tiered { d1, d2, d3_plus } = top_set else {
                unreachable!("triples are always tiered")
            };
            let cont = ContinuationTable::build(table, [d1, d2, d3_plus])?;
            let d_mid = if d_mid.is_nan() {
                estimate_discount_single(&cont.continuation_histogram())?
            } else {
                d_mid
            };
            let top = discounted_level(table, &top_set);
            let (mid, floored) = weighted_level(&cont, d_mid);
            let unigram = terminal(&cont, vocab);
            let mut values = top_set.values();
            values.push(d_mid);
            Ok(SmoothedModel::assemble(
                Method::Mdknspomd,
                vec![top, mid],
                unigram,
                values,
                floored,
                vocab,
            ))
        }
    }
}

fn check_order(table: &CountTable) -> Result<()> {
    if table.order() > 3 {
        return Err(Error::InvalidArgument(format!(
            "supported orders are 1-3, got {}",
            table.order()
        )));
    }
    Ok(())
}

fn expect_arity(values: &[f64], expected: usize, method: Method) -> Result<()> {
    if values.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "method {method} takes {expected} discount value(s) at this order, got {}",
            values.len()
        )));
    }
    Ok(())
}

fn tiered_from(values: &[f64]) -> DiscountSet {
    DiscountSet::Tiered { d1: values[0], d2: values[1], d3_plus: values[2] }
}

/// Resolves `[D]` for a single-discount level: manual value or histogram
/// estimate.
fn one_single(manual: Option<&[f64]>, method: Method, table: &CountTable) -> Result<[f64; 1]> {
    let d = match manual {
        Some(values) => {
            expect_arity(values, 1, method)?;
            values[0]
        }
        None => estimate_discount_single(&table.histogram())?,
    };
    DiscountSet::Single(d).validate()?;
    Ok([d])
}

/// Resolves `[D_top, D_mid]` for two single-discount levels.
fn two_singles(
    manual: Option<&[f64]>,
    method: Method,
    tables: &[&CountTable; 2],
) -> Result<[f64; 2]> {
    let values = match manual {
        Some(values) => {
            expect_arity(values, 2, method)?;
            [values[0], values[1]]
        }
        None => [
            estimate_discount_single(&tables[0].histogram())?,
            estimate_discount_single(&tables[1].histogram())?,
        ],
    };
    DiscountSet::Single(values[0]).validate()?;
    DiscountSet::Single(values[1]).validate()?;
    Ok(values)
}

/// Resolves a `[D1, D2, D3+]` triple: manual values or histogram estimate.
fn one_triple(manual: Option<&[f64]>, method: Method, table: &CountTable) -> Result<DiscountSet> {
    let set = match manual {
        Some(values) => {
            expect_arity(values, 3, method)?;
            tiered_from(values)
        }
        None => estimate_discounts_triple(&table.histogram())?,
    };
    set.validate()?;
    Ok(set)
}

/// Discounted level over raw integer counts: per history, terms are
/// `max(0, c - D(c)) / total` and the back-off weight is the subtracted
/// mass over the total.
fn discounted_level(table: &CountTable, set: &DiscountSet) -> Level {
    let stats = PatternStats::build(table);
    let mut gammas = Vec::with_capacity(table.context_count());
    let mut terms = Vec::with_capacity(table.entry_count());
    for (context, total, run) in table.context_runs() {
        let t = total as f64;
        let tiers = stats.context_tiers(context);
        gammas.push((Gram::from(context), set.subtracted_mass(&tiers) / t));
        for (gram, count) in run {
            let term = (*count as f64 - set.for_count(*count)).max(0.0) / t;
            terms.push((gram.clone(), term));
        }
    }
    Level::new(table.order(), gammas, terms)
}

/// Discounted level over integer continuation counts: the middle level of
/// the order-3 Kneser-Ney constructions.
fn continuation_level(cont: &ContinuationTable, set: &DiscountSet) -> Level {
    let mut gammas = Vec::with_capacity(cont.contexts().len());
    let mut terms = Vec::new();
    for (ctx, run) in cont.context_runs() {
        let t = ctx.predecessor_tiers.distinct() as f64;
        gammas.push((
            Gram::from(&[ctx.context][..]),
            set.subtracted_mass(&ctx.continuation_tiers) / t,
        ));
        for (bigram, tiers) in run {
            let c = tiers.distinct();
            terms.push((bigram.clone(), (c as f64 - set.for_count(c)).max(0.0) / t));
        }
    }
    Level::new(2, gammas, terms)
}

/// Discounted level over tier-weighted pseudo-counts: the middle level of
/// the order-3 marginal-preserving construction. Pseudo-counts are real
/// numbers, so subtraction can clip to zero; the back-off weight then
/// carries exactly the mass that was truly subtracted, and the number of
/// clipped entries is reported alongside the level.
fn weighted_level(cont: &ContinuationTable, d_mid: f64) -> (Level, u64) {
    let mut gammas = Vec::with_capacity(cont.contexts().len());
    let mut terms = Vec::new();
    let mut floored = 0u64;
    for (ctx, run) in cont.context_runs() {
        let total = cont.weighted_context_total(ctx);
        if total <= 0.0 {
            // All pseudo-counts of this history vanished (possible only
            // with zero discounts); queries fall through to the terminal.
            continue;
        }
        let mut subtracted = 0.0;
        for (bigram, tiers) in run {
            let a = cont.weighted_count(tiers);
            if a < d_mid {
                floored += 1;
            }
            subtracted += a.min(d_mid);
            terms.push((bigram.clone(), (a - d_mid).max(0.0) / total));
        }
        gammas.push((Gram::from(&[ctx.context][..]), subtracted / total));
    }
    (Level::new(2, gammas, terms), floored)
}

fn dense(
    vocab: &Vocabulary,
    variant: UnigramVariant,
    prob_of: impl Fn(TokenId) -> f64,
) -> UnigramDistribution {
    let mut probs = vec![0.0; vocab.len()];
    for id in vocab.predictable_ids() {
        probs[id as usize] = prob_of(id);
    }
    UnigramDistribution::new(variant, probs)
}

fn uniform(vocab: &Vocabulary) -> UnigramDistribution {
    let p = 1.0 / vocab.predictable_count() as f64;
    dense(vocab, UnigramVariant::Uniform, |_| p)
}

/// Relative frequencies of a unigram table; uniform when the table is
/// empty.
fn empirical(unigrams: &CountTable, vocab: &Vocabulary) -> Result<UnigramDistribution> {
    if unigrams.order() != 1 {
        return Err(Error::Internal(format!(
            "empirical terminal needs a unigram table, got order {}",
            unigrams.order()
        )));
    }
    let total = unigrams.total();
    if total == 0 {
        return Ok(uniform(vocab));
    }
    Ok(dense(vocab, UnigramVariant::Empirical, |id| {
        unigrams.count(&[id]) as f64 / total as f64
    }))
}

/// Share of distinct bigram types ending in each word; uniform when the
/// table is empty.
fn continuation(stats: &PatternStats, vocab: &Vocabulary) -> UnigramDistribution {
    let all = stats.global_tiers().distinct();
    if all == 0 {
        return uniform(vocab);
    }
    dense(vocab, UnigramVariant::Continuation, |id| {
        stats.suffix_tiers(&[id]).distinct() as f64 / all as f64
    })
}

/// Distinct-predecessor tiers per word, weighted with the level's own
/// discounts and normalized by the weighted global tiers; uniform when no
/// mass is subtracted anywhere.
fn weighted(stats: &PatternStats, set: &DiscountSet, vocab: &Vocabulary) -> UnigramDistribution {
    let denom = set.subtracted_mass(&stats.global_tiers());
    if denom <= 0.0 {
        return uniform(vocab);
    }
    dense(vocab, UnigramVariant::WeightedContinuation, |id| {
        set.subtracted_mass(&stats.suffix_tiers(&[id])) / denom
    })
}

/// Share of distinct trigram-closing bigrams ending in each word; uniform
/// when the continuation table is empty.
fn terminal(cont: &ContinuationTable, vocab: &Vocabulary) -> UnigramDistribution {
    let total = cont.pair_total();
    if total == 0 {
        return uniform(vocab);
    }
    dense(vocab, UnigramVariant::TrigramTerminal, |id| {
        cont.word_continuations(id) as f64 / total as f64
    })
}

#[cfg(test)]
mod tests {
    use super::super::{train_model, TrainOptions};
    use super::*;
    use crate::corpus::{pad_corpus, tokenize_and_normalize};
    use crate::test_data::desk_table;
    use approx::assert_relative_eq;

    /// Trains on a corpus at the given order via the public entry point.
    fn model_from(
        text: &str,
        n: usize,
        method: Method,
        opts: &TrainOptions,
    ) -> (SmoothedModel, CountTable, Vocabulary) {
        let raw = tokenize_and_normalize(text.as_bytes()).unwrap();
        let vocab = Vocabulary::build(&raw, n.max(2), 1).unwrap();
        let ids = vocab.apply(&raw);
        let padded = pad_corpus(&ids, n, &vocab).unwrap();
        let table = crate::ngram_stats::count_ngrams(&padded, n, &vocab).unwrap();
        let model = train_model(&table, &vocab, method, opts).unwrap();
        (model, table, vocab)
    }

    /// A small trigram corpus with repeated and singleton trigrams.
    const TRIGRAM_TEXT: &str = "x y z\nx y x\ny z x\nz x y\nx y z\ny y z\nz z x\nx z y\ny x x\nz y y\nx y y\ny z z\n";

    const DESK_D: f64 = 7.0 / 19.0;
    const DESK_D1: f64 = 7.0 / 19.0;
    const DESK_D2: f64 = 41.0 / 38.0;
    const DESK_D3: f64 = 173.0 / 95.0;

    #[test]
    fn add_k_matches_the_closed_form() {
        let (table, vocab) = desk_table();
        let model = add_k(&table, &vocab, 1.0).unwrap();
        let s = vocab.id("<s>").unwrap();
        let c = vocab.id("c").unwrap();
        let d = vocab.id("d").unwrap();
        // Seen: (5 + 1) / (11 + 7); unseen: 1 / (11 + 7).
        assert_relative_eq!(model.prob(&[s], c).unwrap(), 6.0 / 18.0, max_relative = 1e-12);
        assert_relative_eq!(model.prob(&[s], d).unwrap(), 1.0 / 18.0, max_relative = 1e-12);
        // Unseen history: uniform over the 7 predictable tokens.
        assert_relative_eq!(
            model.prob(&[vocab.eos()], c).unwrap(),
            1.0 / 7.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn add_k_unseen_event_in_a_total_ten_context() {
        let vocab =
            Vocabulary::from_parts(2, ["a", "b", "c", "d", "e"].into_iter().map(String::from))
                .unwrap();
        let a = vocab.id("a").unwrap();
        let b = vocab.id("b").unwrap();
        let c = vocab.id("c").unwrap();
        let table = CountTable::from_entries(2, vec![(vec![a, b], 10)]).unwrap();
        let model = add_k(&table, &vocab, 1.0).unwrap();
        assert_relative_eq!(model.prob(&[a], c).unwrap(), 1.0 / 17.0, max_relative = 1e-12);
    }

    #[test]
    fn add_k_rejects_non_positive_delta() {
        let (table, vocab) = desk_table();
        assert!(add_k(&table, &vocab, 0.0).is_err());
        assert!(add_k(&table, &vocab, -1.0).is_err());
        assert!(add_k(&table, &vocab, f64::INFINITY).is_err());
    }

    #[test]
    fn good_turing_reestimates_counts() {
        // Histogram of the desk matrix: n1=7, n2=6, n3=5, n4=4, n5=3, n6=1,
        // n7=1, n8=1; 14 unseen events over 6 contexts, so 0* = 7/14.
        let (table, vocab) = desk_table();
        let model = good_turing(&table, &vocab).unwrap();
        let s = vocab.id("<s>").unwrap();
        let c = vocab.id("c").unwrap();
        let a = vocab.id("a").unwrap();
        let d = vocab.id("d").unwrap();
        let p_c = model.prob(&[s], c).unwrap(); // count 5 -> 6 * n6 / n5 = 2
        let p_a = model.prob(&[s], a).unwrap(); // count 2 -> 3 * n3 / n2 = 2.5
        let p_d = model.prob(&[s], d).unwrap(); // unseen  -> 0* = 0.5
        assert_relative_eq!(p_c / p_d, 2.0 / 0.5, max_relative = 1e-12);
        assert_relative_eq!(p_a / p_d, 2.5 / 0.5, max_relative = 1e-12);
        assert_relative_eq!(model.distribution_sum(&[s]).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn good_turing_keeps_raw_counts_where_the_next_bucket_is_empty() {
        let vocab =
            Vocabulary::from_parts(2, ["a", "b", "c", "d", "e"].into_iter().map(String::from))
                .unwrap();
        let a = vocab.id("a").unwrap();
        let b = vocab.id("b").unwrap();
        let c = vocab.id("c").unwrap();
        let d = vocab.id("d").unwrap();
        let table = CountTable::from_entries(
            2,
            vec![(vec![a, b], 1), (vec![a, c], 1), (vec![a, d], 4)],
        )
        .unwrap();
        // n1 = 2, n2 = 0: 1* falls back to 1; n4 = 1, n5 = 0: 4* stays 4.
        // Unseen events: 7 - 3 = 4, so 0* = 2/4 and Z = 1 + 1 + 4 + 4*(1/2).
        let model = good_turing(&table, &vocab).unwrap();
        let e = vocab.id("e").unwrap();
        assert_relative_eq!(model.prob(&[a], b).unwrap(), 1.0 / 8.0, max_relative = 1e-12);
        assert_relative_eq!(model.prob(&[a], d).unwrap(), 4.0 / 8.0, max_relative = 1e-12);
        assert_relative_eq!(model.prob(&[a], e).unwrap(), 0.5 / 8.0, max_relative = 1e-12);
    }

    #[test]
    fn absolute_interpolates_with_the_empirical_unigram() {
        let (table, vocab) = desk_table();
        let model = absolute(&table, &vocab, None).unwrap();
        assert_eq!(model.discounts(), &[DESK_D]);
        assert_eq!(model.unigram().variant(), UnigramVariant::Empirical);
        let s = vocab.id("<s>").unwrap();
        let e = vocab.id("e").unwrap();
        let d = vocab.id("d").unwrap();
        // gamma(<s>) = D * 4 / 11; empirical p(e) = 19/86, p(d) = 6/86.
        let gamma = DESK_D * 4.0 / 11.0;
        assert_relative_eq!(
            model.prob(&[s], e).unwrap(),
            (1.0 - DESK_D) / 11.0 + gamma * (19.0 / 86.0),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            model.prob(&[s], d).unwrap(),
            gamma * (6.0 / 86.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn kneser_ney_uses_continuation_mass_below() {
        let (table, vocab) = desk_table();
        let model = kneser_ney(&table, &vocab, None).unwrap();
        assert_eq!(model.unigram().variant(), UnigramVariant::Continuation);
        let s = vocab.id("<s>").unwrap();
        let e = vocab.id("e").unwrap();
        let d = vocab.id("d").unwrap();
        // 28 distinct bigrams; e ends 4 of them, d ends 3.
        assert_relative_eq!(model.unigram().prob(e), 4.0 / 28.0, max_relative = 1e-12);
        assert_relative_eq!(model.prob(&[s], e).unwrap(), 16.0 / 209.0, max_relative = 1e-12);
        assert_relative_eq!(model.prob(&[s], d).unwrap(), 3.0 / 209.0, max_relative = 1e-12);
        // Scaled by the row total these are the published-style cells.
        assert!((model.prob(&[s], e).unwrap() * 11.0 - 0.84).abs() < 5e-3);
        assert!((model.prob(&[s], d).unwrap() * 11.0 - 0.16).abs() < 5e-3);
    }

    #[test]
    fn modified_kneser_ney_applies_tiered_discounts() {
        let (table, vocab) = desk_table();
        let model = modified_kneser_ney(&table, &vocab, None).unwrap();
        for (got, want) in model.discounts().iter().zip([DESK_D1, DESK_D2, DESK_D3]) {
            assert_relative_eq!(*got, want, max_relative = 1e-12);
        }
        let s = vocab.id("<s>").unwrap();
        let e = vocab.id("e").unwrap();
        let d = vocab.id("d").unwrap();
        // Row <s> holds one singleton (e), one doubleton (a) and two
        // higher counts (b, c).
        let gamma = (DESK_D1 + DESK_D2 + 2.0 * DESK_D3) / 11.0;
        assert_relative_eq!(
            model.prob(&[s], e).unwrap(),
            (1.0 - DESK_D1) / 11.0 + gamma * (4.0 / 28.0),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            model.prob(&[s], d).unwrap(),
            gamma * (3.0 / 28.0),
            max_relative = 1e-12
        );
        assert!((model.prob(&[s], e).unwrap() * 11.0 - 1.36).abs() < 5e-3);
        assert!((model.prob(&[s], d).unwrap() * 11.0 - 0.55).abs() < 5e-3);
    }

    #[test]
    fn mdknspomd_bigram_rebuilds_the_lower_distribution() {
        let (table, vocab) = desk_table();
        let model = mdknspomd(&table, &vocab, None).unwrap();
        assert_eq!(model.unigram().variant(), UnigramVariant::WeightedContinuation);
        let e = vocab.id("e").unwrap();
        let s = vocab.id("<s>").unwrap();
        let d = vocab.id("d").unwrap();
        // Column e: one singleton, no doubletons, three counts >= 3;
        // globally 7 / 6 / 15 => p(e) = (D1 + 3 D3+) / (7 D1 + 6 D2 + 15 D3+).
        assert_relative_eq!(model.unigram().prob(e), 554.0 / 3455.0, max_relative = 1e-12);
        assert!((model.prob(&[s], e).unwrap() * 11.0 - 1.45).abs() < 5e-3);
        assert!((model.prob(&[s], d).unwrap() * 11.0 - 0.46).abs() < 5e-3);
    }

    #[test]
    fn mdknspomd_bigram_preserves_column_marginals_exactly() {
        let (table, vocab) = desk_table();
        let model = mdknspomd(&table, &vocab, None).unwrap();
        let unigrams = table.marginalize().unwrap();
        for w in vocab.predictable_ids() {
            let mut smoothed = 0.0;
            for (context, total, _) in table.context_runs() {
                smoothed += total as f64 * model.prob(context, w).unwrap();
            }
            let original = unigrams.count(&[w]) as f64;
            assert!(
                (smoothed - original).abs() <= 1e-9 * original.max(1.0),
                "column {} drifted: {smoothed} vs {original}",
                vocab.token(w)
            );
        }
    }

    #[test]
    fn mdknspomd_trigram_preserves_top_marginals_without_flooring() {
        // Manual discounts keep every pseudo-count above the middle
        // discount: A >= 0.5 while D_mid = 0.3, so nothing floors.
        let (model, table, vocab) = model_from(
            TRIGRAM_TEXT,
            3,
            Method::Mdknspomd,
            &TrainOptions { discounts: Some(vec![0.5, 1.0, 1.5, 0.3]), ..Default::default() },
        );
        assert_eq!(model.floored_count(), 0);
        let unigrams = table.marginalize().unwrap().marginalize().unwrap();
        for w in vocab.predictable_ids() {
            let mut smoothed = 0.0;
            for (context, total, _) in table.context_runs() {
                smoothed += total as f64 * model.prob(context, w).unwrap();
            }
            let original = unigrams.count(&[w]) as f64;
            assert!(
                (smoothed - original).abs() <= 1e-9 * original.max(1.0),
                "column {} drifted: {smoothed} vs {original}",
                vocab.token(w)
            );
        }
    }

    #[test]
    fn mdknspomd_trigram_flooring_keeps_distributions_normalized() {
        // A middle discount above the smallest pseudo-count forces
        // clipping; distributions must still sum to one.
        let (model, table, _vocab) = model_from(
            TRIGRAM_TEXT,
            3,
            Method::Mdknspomd,
            &TrainOptions { discounts: Some(vec![0.5, 1.0, 1.5, 0.9]), ..Default::default() },
        );
        assert!(model.floored_count() > 0, "expected clipped pseudo-counts");
        for (context, _, _) in table.context_runs() {
            assert_relative_eq!(
                model.distribution_sum(context).unwrap(),
                1.0,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn equal_tier_discounts_collapse_to_the_single_discount_model() {
        let (table, vocab) = desk_table();
        let kns = kneser_ney(&table, &vocab, Some(&[0.4])).unwrap();
        let mkns = modified_kneser_ney(&table, &vocab, Some(&[0.4, 0.4, 0.4])).unwrap();
        for context in [vocab.id("<s>").unwrap(), vocab.id("a").unwrap(), vocab.eos()] {
            for w in vocab.predictable_ids() {
                let a = kns.prob(&[context], w).unwrap();
                let b = mkns.prob(&[context], w).unwrap();
                assert!((a - b).abs() <= 1e-12, "probabilities diverged: {a} vs {b}");
            }
        }
    }

    #[test]
    fn equal_tier_discounts_collapse_at_order_three() {
        let opts_single = TrainOptions { discounts: Some(vec![0.4, 0.3]), ..Default::default() };
        let opts_tiered = TrainOptions {
            discounts: Some(vec![0.4, 0.4, 0.4, 0.3, 0.3, 0.3]),
            ..Default::default()
        };
        let (kns, table, vocab) = model_from(TRIGRAM_TEXT, 3, Method::Kns, &opts_single);
        let (mkns, _, _) = model_from(TRIGRAM_TEXT, 3, Method::Mkns, &opts_tiered);
        for (context, _, _) in table.context_runs() {
            for w in vocab.predictable_ids() {
                let a = kns.prob(context, w).unwrap();
                let b = mkns.prob(context, w).unwrap();
                assert!((a - b).abs() <= 1e-12, "probabilities diverged: {a} vs {b}");
            }
        }
    }

    #[test]
    fn train_model_estimates_the_same_discounts_as_the_direct_builders() {
        let (table, vocab) = desk_table();
        let trained = train_model(&table, &vocab, Method::Kns, &TrainOptions::default()).unwrap();
        let direct = kneser_ney(&table, &vocab, Some(&[DESK_D])).unwrap();
        assert_eq!(trained.discounts(), direct.discounts());
        let s = vocab.id("<s>").unwrap();
        for w in vocab.predictable_ids() {
            assert_eq!(trained.prob(&[s], w).unwrap(), direct.prob(&[s], w).unwrap());
        }
    }

    #[test]
    fn train_model_rejects_misshapen_requests() {
        let (table, vocab) = desk_table();
        let with = |d: Vec<f64>| TrainOptions { discounts: Some(d), ..Default::default() };
        assert!(train_model(&table, &vocab, Method::AddK, &with(vec![0.5])).is_err());
        assert!(train_model(&table, &vocab, Method::GoodTuring, &with(vec![0.5])).is_err());
        assert!(train_model(&table, &vocab, Method::Kns, &with(vec![0.5, 0.5])).is_err());
        assert!(train_model(&table, &vocab, Method::Mkns, &with(vec![0.5])).is_err());
        assert!(train_model(&table, &vocab, Method::Mkns, &with(vec![0.5, 2.5, 1.0])).is_err());
        assert!(train_model(&table, &vocab, Method::Kns, &with(vec![-0.1])).is_err());
    }

    #[test]
    fn mdknspomd_requires_order_two_or_three() {
        let raw = tokenize_and_normalize(b"a b a\n").unwrap();
        let vocab = Vocabulary::build(&raw, 2, 1).unwrap();
        let ids = vocab.apply(&raw);
        let padded = pad_corpus(&ids, 1, &vocab).unwrap();
        let table = crate::ngram_stats::count_ngrams(&padded, 1, &vocab).unwrap();
        assert!(mdknspomd(&table, &vocab, None).is_err());
        assert!(train_model(&table, &vocab, Method::Mdknspomd, &TrainOptions::default()).is_err());
    }

    #[test]
    fn probability_queries_validate_history_and_word() {
        let (table, vocab) = desk_table();
        let model = kneser_ney(&table, &vocab, None).unwrap();
        let a = vocab.id("a").unwrap();
        assert!(model.prob(&[], a).is_err(), "history too short");
        assert!(model.prob(&[a, a], a).is_err(), "history too long");
        let bos = vocab.id("<s>").unwrap();
        assert!(model.prob(&[a], bos).is_err(), "start sentinel is not predictable");
    }

    #[test]
    fn unseen_history_falls_through_to_the_terminal() {
        let (table, vocab) = desk_table();
        let model = kneser_ney(&table, &vocab, None).unwrap();
        let eos = vocab.eos();
        for w in vocab.predictable_ids() {
            assert_eq!(model.prob(&[eos], w).unwrap(), model.unigram().prob(w));
        }
    }

    #[test]
    fn order_one_models_normalize() {
        for method in [Method::AddK, Method::GoodTuring, Method::Abs, Method::Kns, Method::Mkns]
        {
            let (model, _, _) = model_from(
                "a b a c\nb a\na a c\n",
                1,
                method,
                &TrainOptions::default(),
            );
            assert_relative_eq!(model.distribution_sum(&[]).unwrap(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn empty_tables_yield_the_uniform_terminal() {
        let raw = tokenize_and_normalize(b"").unwrap();
        let vocab = Vocabulary::build(&raw, 2, 1).unwrap();
        let table = crate::ngram_stats::count_ngrams(&[], 2, &vocab).unwrap();
        let addk = add_k(&table, &vocab, 1.0).unwrap();
        let gt = good_turing(&table, &vocab).unwrap();
        let abs = absolute(&table, &vocab, Some(&[0.5])).unwrap();
        for model in [&addk, &gt, &abs] {
            assert_relative_eq!(
                model.distribution_sum(&[vocab.eos()]).unwrap(),
                1.0,
                epsilon = 1e-12
            );
        }
        // Estimation has nothing to work with on an empty table.
        assert!(absolute(&table, &vocab, None).is_err());
    }

    #[test]
    fn all_methods_normalize_across_orders() {
        // Two extra rare words give the unigram histogram the singleton
        // and doubleton buckets that discount estimation needs.
        let text = [TRIGRAM_TEXT, "q q w\n"].concat();
        for method in Method::ALL {
            for order in method.min_order()..=3 {
                let (model, table, vocab) =
                    model_from(&text, order, method, &TrainOptions::default());
                for (context, _, _) in table.context_runs() {
                    assert_relative_eq!(
                        model.distribution_sum(context).unwrap(),
                        1.0,
                        epsilon = 1e-9
                    );
                }
                // One never-observed history per order.
                if order >= 2 {
                    let unseen = vec![vocab.eos(); order - 1];
                    assert_relative_eq!(
                        model.distribution_sum(&unseen).unwrap(),
                        1.0,
                        epsilon = 1e-9
                    );
                }
            }
        }
    }
}
