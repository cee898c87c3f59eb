//! N-gram counting and the derived statistics smoothing needs: count-of-count
//! histograms, distinct-extension tiers per context and per suffix, and the
//! continuation (distinct-predecessor) table used by the recursive trigram
//! estimators.
//!
//! Tables are frozen into id-sorted vectors once counted, so every later
//! floating-point accumulation walks them in one fixed order regardless of
//! hash-map iteration order.

use std::collections::{BTreeMap, HashMap};

use crate::corpus::{TokenId, Vocabulary};
use crate::error::{Error, Result};

/// An owned n-gram key.
pub type Gram = Box<[TokenId]>;

/// Immutable table of n-gram counts with per-context totals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    order: usize,
    /// `(gram, count)` sorted by gram; counts are always positive.
    entries: Vec<(Gram, u64)>,
    /// `(context, total)` sorted by context; one row per observed context.
    context_totals: Vec<(Gram, u64)>,
    /// Sum of all counts, i.e. the number of counted windows.
    total: u64,
}

impl CountTable {
    /// Builds a table from raw `(gram, count)` pairs.
    ///
    /// Fails on a wrong gram length, a zero count or a duplicate gram.
    pub fn from_entries(order: usize, entries: Vec<(Vec<TokenId>, u64)>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("order must be at least 1".into()));
        }
        let mut frozen: Vec<(Gram, u64)> = Vec::with_capacity(entries.len());
        for (gram, count) in entries {
            if gram.len() != order {
                return Err(Error::Data(format!(
                    "gram of length {} in a table of order {order}",
                    gram.len()
                )));
            }
            if count == 0 {
                return Err(Error::Data("zero count in count table".into()));
            }
            frozen.push((gram.into_boxed_slice(), count));
        }
        frozen.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        if let Some(pair) = frozen.windows(2).find(|p| p[0].0 == p[1].0) {
            return Err(Error::Data(format!("duplicate gram {:?}", pair[0].0)));
        }
        Ok(Self::from_sorted(order, frozen))
    }

    fn from_sorted(order: usize, entries: Vec<(Gram, u64)>) -> Self {
        let mut context_totals: Vec<(Gram, u64)> = Vec::new();
        let mut total = 0u64;
        for (gram, count) in &entries {
            total += count;
            let context = &gram[..order - 1];
            match context_totals.last_mut() {
                Some((last, sum)) if &last[..] == context => *sum += count,
                _ => context_totals.push((context.into(), *count)),
            }
        }
        CountTable { order, entries, context_totals, total }
    }

    /// N-gram order of this table.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Sum of all counts.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct grams.
    pub fn entry_count(&self) -> usize {
        self.entries.len()
    }

    /// All `(gram, count)` pairs, sorted by gram.
    pub fn entries(&self) -> &[(Gram, u64)] {
        &self.entries
    }

    /// Count of one gram; zero when unseen.
    pub fn count(&self, gram: &[TokenId]) -> u64 {
        self.entries
            .binary_search_by(|(g, _)| g[..].cmp(gram))
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    /// Total count of all grams sharing `context`; zero when the context
    /// was never observed.
    pub fn context_total(&self, context: &[TokenId]) -> u64 {
        self.context_totals
            .binary_search_by(|(c, _)| c[..].cmp(context))
            .map(|i| self.context_totals[i].1)
            .unwrap_or(0)
    }

    /// Number of observed contexts.
    pub fn context_count(&self) -> usize {
        self.context_totals.len()
    }

    /// Iterates observed contexts in sorted order, yielding the context,
    /// its total and the run of entries extending it.
    pub fn context_runs(&self) -> ContextRuns<'_> {
        ContextRuns { table: self, entry_pos: 0, context_pos: 0 }
    }

    /// Collapses the table one order down by dropping the leading token of
    /// every gram.
    pub fn marginalize(&self) -> Result<CountTable> {
        if self.order < 2 {
            return Err(Error::InvalidArgument(
                "cannot marginalize a table of order 1".into(),
            ));
        }
        let mut sums: HashMap<&[TokenId], u64> = HashMap::new();
        for (gram, count) in &self.entries {
            *sums.entry(&gram[1..]).or_insert(0) += count;
        }
        let mut entries: Vec<(Gram, u64)> =
            sums.into_iter().map(|(g, c)| (Gram::from(g), c)).collect();
        entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        Ok(Self::from_sorted(self.order - 1, entries))
    }

    /// Count-of-counts histogram over the entries.
    pub fn histogram(&self) -> CountHistogram {
        let mut buckets: BTreeMap<u64, u64> = BTreeMap::new();
        for (_, count) in &self.entries {
            *buckets.entry(*count).or_insert(0) += 1;
        }
        CountHistogram { buckets, types: self.entries.len() as u64 }
    }

    /// Serializes as TSV: a `#order=N` header, then one line per entry with
    /// space-separated tokens, a tab and the count, sorted by token ids.
    pub fn dump_tsv(&self, vocab: &Vocabulary) -> String {
        let mut out = format!("#order={}\n", self.order);
        for (gram, count) in &self.entries {
            let mut first = true;
            for &id in gram.iter() {
                if !first {
                    out.push(' ');
                }
                out.push_str(vocab.token(id));
                first = false;
            }
            out.push('\t');
            out.push_str(&count.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses the format written by [`CountTable::dump_tsv`].
    ///
    /// External count files carry no id information, so non-sentinel tokens
    /// are assigned ids in lexicographic order. Grams whose final token is a
    /// sentence-start sentinel are rejected: no counting pass produces them.
    pub fn parse_tsv(text: &str) -> Result<(CountTable, Vocabulary)> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            message: "empty count file".into(),
        })?;
        let order: usize = header
            .strip_prefix("#order=")
            .and_then(|v| v.trim().parse().ok())
            .filter(|&n| n >= 1)
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: "expected a #order=N header".into(),
            })?;

        let mut rows: Vec<(Vec<&str>, u64, usize)> = Vec::new();
        let mut token_set: BTreeMap<&str, ()> = BTreeMap::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let (gram_part, count_part) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: line_no,
                message: "expected <tokens>\\t<count>".into(),
            })?;
            let tokens: Vec<&str> = gram_part.split_whitespace().collect();
            if tokens.len() != order {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {order} tokens, found {}", tokens.len()),
                });
            }
            let count: u64 = count_part.trim().parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid count {count_part:?}"),
            })?;
            if count == 0 {
                return Err(Error::Parse { line: line_no, message: "zero count".into() });
            }
            for token in &tokens {
                token_set.entry(token).or_insert(());
            }
            rows.push((tokens, count, line_no));
        }

        let vocab = Vocabulary::from_parts(
            order.max(2),
            token_set
                .keys()
                .filter(|t| !crate::corpus::is_reserved_string(t))
                .map(|t| t.to_string()),
        )?;
        let mut entries = Vec::with_capacity(rows.len());
        for (tokens, count, line_no) in rows {
            let mut gram = Vec::with_capacity(order);
            for token in tokens {
                let id = vocab.id(token).ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: format!("unresolvable token {token:?}"),
                })?;
                gram.push(id);
            }
            if vocab.is_bos(*gram.last().expect("order >= 1")) {
                return Err(Error::Parse {
                    line: line_no,
                    message: "gram ends in a sentence-start sentinel".into(),
                });
            }
            entries.push((gram, count));
        }
        let table = CountTable::from_entries(order, entries)?;
        Ok((table, vocab))
    }
}

/// Iterator over the contexts of a [`CountTable`]; see
/// [`CountTable::context_runs`].
pub struct ContextRuns<'a> {
    table: &'a CountTable,
    entry_pos: usize,
    context_pos: usize,
}

impl<'a> Iterator for ContextRuns<'a> {
    type Item = (&'a [TokenId], u64, &'a [(Gram, u64)]);

    fn next(&mut self) -> Option<Self::Item> {
        let (context, total) = self.table.context_totals.get(self.context_pos)?;
        self.context_pos += 1;
        let start = self.entry_pos;
        let prefix = self.table.order - 1;
        while self.entry_pos < self.table.entries.len()
            && self.table.entries[self.entry_pos].0[..prefix] == context[..]
        {
            self.entry_pos += 1;
        }
        Some((context, *total, &self.table.entries[start..self.entry_pos]))
    }
}

/// Validates one padded sentence for counting at order `n`.
fn validate_padded(padded: &[TokenId], n: usize, vocab: &Vocabulary) -> Result<()> {
    let prefix = vocab.bos_padding(n)?;
    if padded.len() < n {
        return Err(Error::Data(format!(
            "padded sentence of length {} is too short for order {n}",
            padded.len()
        )));
    }
    if padded[..n - 1] != prefix[..] {
        return Err(Error::Data(
            "padded sentence does not start with the expected sentinels".into(),
        ));
    }
    let last = padded.len() - 1;
    if padded[last] != vocab.eos() {
        return Err(Error::Data("padded sentence does not end with </s>".into()));
    }
    for (i, &id) in padded.iter().enumerate().skip(n - 1) {
        if id as usize >= vocab.len() {
            return Err(Error::Data(format!("token id {id} outside the vocabulary")));
        }
        if vocab.is_bos(id) {
            return Err(Error::Data(
                "sentence-start sentinel inside the sentence body".into(),
            ));
        }
        if id == vocab.eos() && i != last {
            return Err(Error::Data("</s> before the end of the sentence".into()));
        }
    }
    Ok(())
}

/// Counts all order-`n` windows of the padded sentences.
///
/// Every window is counted, so each sentence contributes
/// `padded_len - n + 1` windows and no window ends in a sentence-start
/// sentinel.
pub fn count_ngrams(
    padded: &[Vec<TokenId>],
    n: usize,
    vocab: &Vocabulary,
) -> Result<CountTable> {
    let mut counts: HashMap<Gram, u64> = HashMap::new();
    for sentence in padded {
        validate_padded(sentence, n, vocab)?;
        for window in sentence.windows(n) {
            if let Some(slot) = counts.get_mut(window) {
                *slot += 1;
            } else {
                counts.insert(window.into(), 1);
            }
        }
    }
    let mut entries: Vec<(Gram, u64)> = counts.into_iter().collect();
    entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    Ok(CountTable::from_sorted(n, entries))
}

/// Count-of-counts histogram: how many distinct grams occur exactly `r`
/// times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountHistogram {
    buckets: BTreeMap<u64, u64>,
    types: u64,
}

impl CountHistogram {
    /// Number of distinct grams occurring exactly `r` times.
    pub fn n(&self, r: u64) -> u64 {
        self.buckets.get(&r).copied().unwrap_or(0)
    }

    /// Number of distinct grams overall.
    pub fn types(&self) -> u64 {
        self.types
    }

    /// `(r, n_r)` pairs with `n_r > 0`, ascending in `r`.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.buckets.iter().map(|(&r, &n)| (r, n))
    }

    /// Builds a histogram straight from raw occurrence counts.
    pub fn from_counts<I: IntoIterator<Item = u64>>(counts: I) -> Self {
        let mut buckets: BTreeMap<u64, u64> = BTreeMap::new();
        let mut types = 0u64;
        for c in counts {
            *buckets.entry(c).or_insert(0) += 1;
            types += 1;
        }
        CountHistogram { buckets, types }
    }
}

/// Distinct-gram counters split by occurrence count: exactly one, exactly
/// two, exactly three, and the overall number of distinct grams.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TierCounts {
    n1: u64,
    n2: u64,
    n3_exact: u64,
    total: u64,
}

impl TierCounts {
    /// Records one distinct gram with occurrence count `c >= 1`.
    pub fn observe(&mut self, c: u64) {
        self.total += 1;
        match c {
            1 => self.n1 += 1,
            2 => self.n2 += 1,
            3 => self.n3_exact += 1,
            _ => {}
        }
    }

    /// Adds another counter into this one.
    pub fn absorb(&mut self, other: &TierCounts) {
        self.n1 += other.n1;
        self.n2 += other.n2;
        self.n3_exact += other.n3_exact;
        self.total += other.total;
    }

    /// Distinct grams occurring exactly once.
    pub fn n1(&self) -> u64 {
        self.n1
    }

    /// Distinct grams occurring exactly twice.
    pub fn n2(&self) -> u64 {
        self.n2
    }

    /// Distinct grams occurring three or more times.
    pub fn n3_plus(&self) -> u64 {
        self.total - self.n1 - self.n2
    }

    /// Distinct grams occurring at least once.
    pub fn distinct(&self) -> u64 {
        self.total
    }

    fn exactly(&self, c: u64) -> Result<u64> {
        match c {
            1 => Ok(self.n1),
            2 => Ok(self.n2),
            3 => Ok(self.n3_exact),
            _ => Err(Error::InvalidArgument(format!(
                "exact pattern counts are tracked for occurrence counts 1-3, not {c}"
            ))),
        }
    }

    fn at_least(&self, c: u64) -> Result<u64> {
        match c {
            1 => Ok(self.total),
            2 => Ok(self.total - self.n1),
            3 => Ok(self.n3_plus()),
            _ => Err(Error::InvalidArgument(format!(
                "at-least pattern counts are tracked for thresholds 1-3, not {c}"
            ))),
        }
    }
}

/// Position of the wildcard in a pattern count query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern<'a> {
    /// Fixed context, wildcard final token: `N(context, •)`.
    Context(&'a [TokenId]),
    /// Wildcard leading token, fixed suffix: `N(•, suffix)`.
    Suffix(&'a [TokenId]),
    /// All positions wild: `N(•, …, •)`.
    Global,
}

/// Whether a pattern count demands an exact occurrence count or a lower
/// bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMode {
    /// Grams occurring exactly `c` times; supported for `c` in 1..=3.
    Exactly(u64),
    /// Grams occurring at least `c` times; supported for `c` in 1..=3.
    AtLeast(u64),
}

/// Pattern counts of a table: distinct-extension tiers per context, distinct-
/// predecessor tiers per suffix, and the global tiers.
#[derive(Debug, Clone)]
pub struct PatternStats {
    order: usize,
    by_context: Vec<(Gram, TierCounts)>,
    by_suffix: Vec<(Gram, TierCounts)>,
    global: TierCounts,
}

impl PatternStats {
    /// Aggregates pattern counts over a table.
    pub fn build(table: &CountTable) -> Self {
        let order = table.order();
        let mut by_context: Vec<(Gram, TierCounts)> = Vec::with_capacity(table.context_count());
        let mut suffix_map: HashMap<&[TokenId], TierCounts> = HashMap::new();
        let mut global = TierCounts::default();
        for (gram, count) in table.entries() {
            let context = &gram[..order - 1];
            match by_context.last_mut() {
                Some((last, tiers)) if last[..] == context[..] => tiers.observe(*count),
                _ => {
                    let mut tiers = TierCounts::default();
                    tiers.observe(*count);
                    by_context.push((context.into(), tiers));
                }
            }
            suffix_map.entry(&gram[1..]).or_default().observe(*count);
            global.observe(*count);
        }
        let mut by_suffix: Vec<(Gram, TierCounts)> = suffix_map
            .into_iter()
            .map(|(suffix, tiers)| (Gram::from(suffix), tiers))
            .collect();
        by_suffix.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        PatternStats { order, by_context, by_suffix, global }
    }

    /// Order of the underlying table.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Tier counters for one context; all zero when unseen.
    pub fn context_tiers(&self, context: &[TokenId]) -> TierCounts {
        lookup_tiers(&self.by_context, context)
    }

    /// Tier counters for one suffix; all zero when unseen.
    pub fn suffix_tiers(&self, suffix: &[TokenId]) -> TierCounts {
        lookup_tiers(&self.by_suffix, suffix)
    }

    /// Tier counters over the whole table.
    pub fn global_tiers(&self) -> TierCounts {
        self.global
    }

    /// Number of distinct grams matching a wildcard pattern under the given
    /// occurrence-count mode.
    ///
    /// Fixed parts must have length `order - 1`; exact and at-least modes
    /// support occurrence counts 1 through 3.
    pub fn pattern_count(&self, pattern: Pattern<'_>, mode: CountMode) -> Result<u64> {
        let tiers = match pattern {
            Pattern::Context(context) => {
                self.check_len(context)?;
                self.context_tiers(context)
            }
            Pattern::Suffix(suffix) => {
                self.check_len(suffix)?;
                self.suffix_tiers(suffix)
            }
            Pattern::Global => self.global,
        };
        match mode {
            CountMode::Exactly(c) => tiers.exactly(c),
            CountMode::AtLeast(c) => tiers.at_least(c),
        }
    }

    fn check_len(&self, fixed: &[TokenId]) -> Result<()> {
        if fixed.len() != self.order - 1 {
            return Err(Error::InvalidArgument(format!(
                "pattern fixes {} tokens but the table has order {}",
                fixed.len(),
                self.order
            )));
        }
        Ok(())
    }
}

fn lookup_tiers(rows: &[(Gram, TierCounts)], key: &[TokenId]) -> TierCounts {
    rows.binary_search_by(|(g, _)| g[..].cmp(key))
        .map(|i| rows[i].1)
        .unwrap_or_default()
}

/// Per-context aggregates of a [`ContinuationTable`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuationContext {
    /// The middle token `v` shared by the aggregated trigrams.
    pub context: TokenId,
    /// Sums of predecessor tiers over all continuations of `v`: `n1()` is
    /// the number of trigram types `(•, v, •)` seen once, and `distinct()`
    /// is the number seen at all.
    pub predecessor_tiers: TierCounts,
    /// Tiers of the continuation counts themselves: how many words follow
    /// `v` with exactly one distinct predecessor, two, three or more;
    /// `distinct()` is the number of words following `v` at all.
    pub continuation_tiers: TierCounts,
}

/// Distinct-predecessor statistics of a trigram table, keyed by the final
/// bigram of each trigram.
///
/// For each observed bigram `(v, w)` the table records how many distinct
/// leading words precede it once, twice, and three-plus times, plus the
/// discount-weighted pseudo-count formed from those tiers.
#[derive(Debug, Clone)]
pub struct ContinuationTable {
    /// `((v, w), predecessor tiers)` sorted by bigram.
    entries: Vec<(Gram, TierCounts)>,
    /// Per-`v` aggregates, sorted by `v`.
    contexts: Vec<ContinuationContext>,
    /// `(w, number of distinct (v, w) bigrams ending in w)`, sorted by `w`.
    by_word: Vec<(TokenId, u64)>,
    /// Number of distinct `(v, w)` bigrams overall.
    pair_total: u64,
    /// Tier weights applied by [`ContinuationTable::weighted_count`], in
    /// the order once / twice / three-plus.
    discounts: [f64; 3],
}

impl ContinuationTable {
    /// Aggregates a trigram table into continuation statistics, weighting
    /// pseudo-counts with the given tier discounts.
    pub fn build(table: &CountTable, discounts: [f64; 3]) -> Result<Self> {
        if table.order() != 3 {
            return Err(Error::InvalidArgument(format!(
                "continuation statistics need a trigram table, got order {}",
                table.order()
            )));
        }
        let mut tier_map: HashMap<&[TokenId], TierCounts> = HashMap::new();
        for (gram, count) in table.entries() {
            tier_map.entry(&gram[1..]).or_default().observe(*count);
        }
        let mut entries: Vec<(Gram, TierCounts)> = tier_map
            .into_iter()
            .map(|(bigram, tiers)| (Gram::from(bigram), tiers))
            .collect();
        entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));

        let mut contexts: Vec<ContinuationContext> = Vec::new();
        let mut word_map: HashMap<TokenId, u64> = HashMap::new();
        for (bigram, tiers) in &entries {
            let (v, w) = (bigram[0], bigram[1]);
            match contexts.last_mut() {
                Some(ctx) if ctx.context == v => {
                    ctx.predecessor_tiers.absorb(tiers);
                    ctx.continuation_tiers.observe(tiers.distinct());
                }
                _ => {
                    let mut continuation_tiers = TierCounts::default();
                    continuation_tiers.observe(tiers.distinct());
                    contexts.push(ContinuationContext {
                        context: v,
                        predecessor_tiers: *tiers,
                        continuation_tiers,
                    });
                }
            }
            *word_map.entry(w).or_insert(0) += 1;
        }
        let mut by_word: Vec<(TokenId, u64)> = word_map.into_iter().collect();
        by_word.sort_unstable();
        Ok(ContinuationTable {
            pair_total: entries.len() as u64,
            entries,
            contexts,
            by_word,
            discounts,
        })
    }

    /// The tier weights this table was built with.
    pub fn discounts(&self) -> [f64; 3] {
        self.discounts
    }

    /// Discount-weighted pseudo-count for one predecessor-tier counter.
    pub fn weighted_count(&self, tiers: &TierCounts) -> f64 {
        self.discounts[0] * tiers.n1() as f64
            + self.discounts[1] * tiers.n2() as f64
            + self.discounts[2] * tiers.n3_plus() as f64
    }

    /// Sum of weighted pseudo-counts over all continuations of `v`.
    pub fn weighted_context_total(&self, ctx: &ContinuationContext) -> f64 {
        self.weighted_count(&ctx.predecessor_tiers)
    }

    /// Number of distinct words preceding the bigram `(v, w)`; zero when
    /// the bigram never closed a trigram.
    pub fn continuation_count(&self, v: TokenId, w: TokenId) -> u64 {
        self.entries
            .binary_search_by(|(g, _)| g[..].cmp(&[v, w][..]))
            .map(|i| self.entries[i].1.distinct())
            .unwrap_or(0)
    }

    /// Per-context aggregates sorted by context token.
    pub fn contexts(&self) -> &[ContinuationContext] {
        &self.contexts
    }

    /// Iterates contexts in sorted order together with their entry runs.
    pub fn context_runs(
        &self,
    ) -> impl Iterator<Item = (&ContinuationContext, &[(Gram, TierCounts)])> {
        let mut start = 0usize;
        self.contexts.iter().map(move |ctx| {
            let begin = start;
            while start < self.entries.len() && self.entries[start].0[0] == ctx.context {
                start += 1;
            }
            (ctx, &self.entries[begin..start])
        })
    }

    /// Number of distinct bigrams ending in `w` that close a trigram.
    pub fn word_continuations(&self, w: TokenId) -> u64 {
        self.by_word
            .binary_search_by_key(&w, |&(word, _)| word)
            .map(|i| self.by_word[i].1)
            .unwrap_or(0)
    }

    /// Number of distinct closing bigrams overall.
    pub fn pair_total(&self) -> u64 {
        self.pair_total
    }

    /// Histogram of the continuation counts, for discount estimation at
    /// the continuation level.
    pub fn continuation_histogram(&self) -> CountHistogram {
        CountHistogram::from_counts(self.entries.iter().map(|(_, t)| t.distinct()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{pad_corpus, tokenize_and_normalize, Vocabulary};

    /// Builds `(table, vocab)` for a corpus at the given order.
    fn count_corpus(text: &str, n: usize) -> (CountTable, Vocabulary) {
        let raw = tokenize_and_normalize(text.as_bytes()).unwrap();
        let vocab = Vocabulary::build(&raw, n.max(2), 1).unwrap();
        let ids = vocab.apply(&raw);
        let padded = pad_corpus(&ids, n, &vocab).unwrap();
        let table = count_ngrams(&padded, n, &vocab).unwrap();
        (table, vocab)
    }

    use crate::test_data::{desk_table, DESK_LABELS, DESK_MATRIX};

    #[test]
    fn counts_single_sentence_bigrams() {
        let (table, vocab) = count_corpus("w\n", 2);
        let w = vocab.id("w").unwrap();
        let s = vocab.id("<s>").unwrap();
        assert_eq!(table.total(), 2);
        assert_eq!(table.count(&[s, w]), 1);
        assert_eq!(table.count(&[w, vocab.eos()]), 1);
        assert_eq!(table.context_total(&[s]), 1);
        assert_eq!(table.context_total(&[w]), 1);
        assert_eq!(table.context_total(&[vocab.eos()]), 0);
    }

    #[test]
    fn counting_rejects_malformed_padding() {
        let raw = tokenize_and_normalize(b"a b\n").unwrap();
        let vocab = Vocabulary::build(&raw, 3, 1).unwrap();
        let ids = vocab.apply(&raw);
        let a = ids.sentences[0][0];
        let b = ids.sentences[0][1];
        let s1 = vocab.id("<s>").unwrap();
        let s2 = vocab.id("<s2>").unwrap();
        let eos = vocab.eos();

        // Missing final </s>.
        assert!(count_ngrams(&[vec![s1, a, b]], 2, &vocab).is_err());
        // Start sentinel in the body.
        assert!(count_ngrams(&[vec![s1, a, s1, eos]], 2, &vocab).is_err());
        // Early </s>.
        assert!(count_ngrams(&[vec![s1, eos, b, eos]], 2, &vocab).is_err());
        // Wrong sentinel order for n = 3.
        assert!(count_ngrams(&[vec![s1, s2, a, eos]], 3, &vocab).is_err());
    }

    #[test]
    fn empty_corpus_gives_empty_table() {
        let raw = tokenize_and_normalize(b"").unwrap();
        let vocab = Vocabulary::build(&raw, 2, 1).unwrap();
        let table = count_ngrams(&[], 2, &vocab).unwrap();
        assert_eq!(table.total(), 0);
        assert_eq!(table.entry_count(), 0);
    }

    #[test]
    fn desk_matrix_row_and_grand_totals() {
        let (table, vocab) = desk_table();
        let expected_rows = [11u64, 21, 14, 15, 6, 19];
        for (label, expected) in DESK_LABELS[..6].iter().zip(expected_rows) {
            let id = vocab.id(label).unwrap();
            assert_eq!(table.context_total(&[id]), expected, "row total of {label}");
        }
        assert_eq!(table.total(), 86);
        let s = vocab.id("<s>").unwrap();
        let c = vocab.id("c").unwrap();
        assert_eq!(table.count(&[s, c]), 5);
    }

    #[test]
    fn desk_matrix_histogram() {
        let (table, _) = desk_table();
        let hist = table.histogram();
        assert_eq!(hist.n(1), 7);
        assert_eq!(hist.n(2), 6);
        assert_eq!(hist.n(3), 5);
        assert_eq!(hist.n(4), 4);
        assert_eq!(hist.types(), 28);
        let mass: u64 = hist.iter().map(|(r, n)| r * n).sum();
        assert_eq!(mass, 86);
    }

    #[test]
    fn pattern_counts_match_a_brute_force_scan() {
        let (table, vocab) = desk_table();
        let stats = PatternStats::build(&table);
        assert_eq!(stats.global_tiers().distinct(), 28);

        for (i, row_label) in DESK_LABELS.iter().enumerate() {
            let id = vocab.id(row_label).unwrap();
            for threshold in 1..=3u64 {
                let exact = DESK_MATRIX[i].iter().filter(|&&c| c == threshold).count() as u64;
                let at_least = DESK_MATRIX[i].iter().filter(|&&c| c >= threshold).count() as u64;
                assert_eq!(
                    stats.pattern_count(Pattern::Context(&[id]), CountMode::Exactly(threshold)).unwrap(),
                    exact,
                    "exactly {threshold} extensions of {row_label}"
                );
                assert_eq!(
                    stats.pattern_count(Pattern::Context(&[id]), CountMode::AtLeast(threshold)).unwrap(),
                    at_least,
                    "at least {threshold} extensions of {row_label}"
                );
            }
        }
        for (j, col_label) in DESK_LABELS.iter().enumerate() {
            let id = vocab.id(col_label).unwrap();
            for threshold in 1..=3u64 {
                let exact = (0..7).filter(|&i| DESK_MATRIX[i][j] == threshold).count() as u64;
                let at_least = (0..7).filter(|&i| DESK_MATRIX[i][j] >= threshold).count() as u64;
                assert_eq!(
                    stats.pattern_count(Pattern::Suffix(&[id]), CountMode::Exactly(threshold)).unwrap(),
                    exact,
                    "exactly {threshold} predecessors of {col_label}"
                );
                assert_eq!(
                    stats.pattern_count(Pattern::Suffix(&[id]), CountMode::AtLeast(threshold)).unwrap(),
                    at_least,
                    "at least {threshold} predecessors of {col_label}"
                );
            }
        }
    }

    #[test]
    fn pattern_counts_reject_unsupported_thresholds_and_lengths() {
        let (table, vocab) = desk_table();
        let stats = PatternStats::build(&table);
        let a = vocab.id("a").unwrap();
        assert!(stats.pattern_count(Pattern::Global, CountMode::Exactly(4)).is_err());
        assert!(stats.pattern_count(Pattern::Global, CountMode::AtLeast(4)).is_err());
        assert!(stats.pattern_count(Pattern::Context(&[a, a]), CountMode::AtLeast(1)).is_err());
    }

    #[test]
    fn marginalizing_a_trigram_table_matches_direct_bigram_counts() {
        let text = "a b c a\nb c\nc a b\na\nb b b c\n";
        let (tri, vocab) = count_corpus(text, 3);
        let direct = {
            let raw = tokenize_and_normalize(text.as_bytes()).unwrap();
            let ids = vocab.apply(&raw);
            let padded = pad_corpus(&ids, 2, &vocab).unwrap();
            count_ngrams(&padded, 2, &vocab).unwrap()
        };
        assert_eq!(tri.marginalize().unwrap(), direct);
    }

    #[test]
    fn marginalize_rejects_unigram_tables() {
        let (table, _) = count_corpus("a b\n", 1);
        assert!(table.marginalize().is_err());
    }

    #[test]
    fn continuation_statistics_for_distinct_trigrams() {
        // Four one-word sentences, all distinct: every closing bigram has
        // exactly one predecessor.
        let (tri, vocab) = count_corpus("p\nq\nr\nt\n", 3);
        let cont = ContinuationTable::build(&tri, [0.5, 1.0, 1.5]).unwrap();
        assert_eq!(cont.pair_total(), 8, "4 of (<s>, w) plus 4 of (w, </s>)");
        let s1 = vocab.id("<s>").unwrap();
        let p = vocab.id("p").unwrap();
        assert_eq!(cont.continuation_count(s1, p), 1);
        assert_eq!(cont.word_continuations(vocab.eos()), 4);
        for (_, tiers) in cont.context_runs().flat_map(|(_, run)| run) {
            assert_eq!(tiers.distinct(), 1);
            assert_eq!(cont.weighted_count(tiers), 0.5);
        }
    }

    #[test]
    fn continuation_aggregates_match_brute_force_sums() {
        let text = "a b c\nb c a\nc a b\na b c\nb a c\nc c c\na a b b\nc b a\n";
        let (tri, _vocab) = count_corpus(text, 3);
        let cont = ContinuationTable::build(&tri, [0.4, 1.1, 1.6]).unwrap();

        // Per-context sums recomputed entry by entry.
        for (ctx, run) in cont.context_runs() {
            let mut expect_weighted = 0.0f64;
            let mut expect_distinct = 0u64;
            for (_, tiers) in run {
                expect_weighted += cont.weighted_count(tiers);
                expect_distinct += tiers.distinct();
            }
            assert!((cont.weighted_context_total(ctx) - expect_weighted).abs() < 1e-12);
            assert_eq!(ctx.predecessor_tiers.distinct(), expect_distinct);
            assert_eq!(ctx.continuation_tiers.distinct(), run.len() as u64);
        }

        // Bigram-level distinct predecessors against the trigram entries.
        let total: u64 = cont
            .context_runs()
            .flat_map(|(_, run)| run)
            .map(|(_, t)| t.distinct())
            .sum();
        assert_eq!(total, tri.entry_count() as u64);
    }

    #[test]
    fn continuation_table_requires_order_three() {
        let (bi, _) = count_corpus("a b\n", 2);
        assert!(ContinuationTable::build(&bi, [0.5; 3]).is_err());
    }

    #[test]
    fn tsv_round_trip_preserves_counts() {
        let (table, vocab) = count_corpus("a b a\nb c\n", 2);
        let dump = table.dump_tsv(&vocab);
        assert!(dump.starts_with("#order=2\n"));
        let (reloaded, revocab) = CountTable::parse_tsv(&dump).unwrap();
        assert_eq!(reloaded.total(), table.total());
        assert_eq!(reloaded.entry_count(), table.entry_count());
        for (gram, count) in table.entries() {
            let names: Vec<TokenId> = gram
                .iter()
                .map(|&id| revocab.id(vocab.token(id)).unwrap())
                .collect();
            assert_eq!(reloaded.count(&names), *count);
        }
        // A second round trip is byte-stable.
        let dump2 = reloaded.dump_tsv(&revocab);
        let (again, revocab2) = CountTable::parse_tsv(&dump2).unwrap();
        assert_eq!(again.dump_tsv(&revocab2), dump2);
    }

    #[test]
    fn tsv_loader_rejects_malformed_input() {
        assert!(CountTable::parse_tsv("").is_err());
        assert!(CountTable::parse_tsv("#order=x\n").is_err());
        assert!(CountTable::parse_tsv("#order=2\na b c\t1\n").is_err());
        assert!(CountTable::parse_tsv("#order=2\na b\tzero\n").is_err());
        assert!(CountTable::parse_tsv("#order=2\na b\t0\n").is_err());
        assert!(CountTable::parse_tsv("#order=2\na b\t1\na b\t2\n").is_err());
        assert!(CountTable::parse_tsv("#order=2\na <s>\t1\n").is_err(), "start sentinel as target");
    }

    #[test]
    fn from_entries_rejects_structural_mistakes() {
        assert!(CountTable::from_entries(0, vec![]).is_err());
        assert!(CountTable::from_entries(2, vec![(vec![0], 1)]).is_err());
        assert!(CountTable::from_entries(2, vec![(vec![0, 1], 0)]).is_err());
        assert!(
            CountTable::from_entries(2, vec![(vec![0, 1], 1), (vec![0, 1], 2)]).is_err()
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        /// Random lowercase corpora over a small alphabet.
        fn corpus_strategy() -> impl Strategy<Value = String> {
            proptest::collection::vec(
                proptest::collection::vec(0u8..6, 1..12),
                1..25,
            )
            .prop_map(|sentences| {
                sentences
                    .into_iter()
                    .map(|s| {
                        s.into_iter()
                            .map(|t| ((b'a' + t) as char).to_string())
                            .collect::<Vec<_>>()
                            .join(" ")
                    })
                    .collect::<Vec<_>>()
                    .join("\n")
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn window_counts_are_consistent(text in corpus_strategy(), n in 1usize..4) {
                let raw = tokenize_and_normalize(text.as_bytes()).unwrap();
                let vocab = Vocabulary::build(&raw, 3, 1).unwrap();
                let ids = vocab.apply(&raw);
                let padded = pad_corpus(&ids, n, &vocab).unwrap();
                let table = count_ngrams(&padded, n, &vocab).unwrap();

                let windows: u64 = padded.iter().map(|s| (s.len() - n + 1) as u64).sum();
                prop_assert_eq!(table.total(), windows);
                let context_sum: u64 = table.context_runs().map(|(_, total, _)| total).sum();
                prop_assert_eq!(context_sum, windows);

                let stats = PatternStats::build(&table);
                prop_assert_eq!(stats.global_tiers().distinct(), table.entry_count() as u64);
                let per_context: u64 = table
                    .context_runs()
                    .map(|(ctx, _, _)| stats.context_tiers(ctx).distinct())
                    .sum();
                prop_assert_eq!(per_context, table.entry_count() as u64);
            }

            #[test]
            fn marginalized_trigrams_equal_direct_bigrams(text in corpus_strategy()) {
                let raw = tokenize_and_normalize(text.as_bytes()).unwrap();
                let vocab = Vocabulary::build(&raw, 3, 1).unwrap();
                let ids = vocab.apply(&raw);
                let tri = count_ngrams(&pad_corpus(&ids, 3, &vocab).unwrap(), 3, &vocab).unwrap();
                let bi = count_ngrams(&pad_corpus(&ids, 2, &vocab).unwrap(), 2, &vocab).unwrap();
                prop_assert_eq!(tri.marginalize().unwrap(), bi);
            }
        }
    }
}
