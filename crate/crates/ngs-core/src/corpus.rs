//! Text ingestion, vocabulary construction, sentence padding and fold
//! splitting.
//!
//! A corpus is one sentence per line, tokens separated by ASCII whitespace.
//! Ingestion lowercases every token. Vocabularies assign dense ids with the
//! sentinels first — sentence-start symbols, then [`EOS`], then [`UNK`] —
//! followed by the remaining tokens ordered by descending frequency (ties
//! broken lexicographically). Sentence-start ids are never predicted; they
//! exist only as left-padding context.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Dense token identifier. Ids are contiguous from zero within one
/// [`Vocabulary`].
pub type TokenId = u32;

/// End-of-sentence sentinel, predicted like an ordinary token.
pub const EOS: &str = "</s>";

/// Replacement for out-of-vocabulary tokens, predicted like an ordinary
/// token.
pub const UNK: &str = "<unk>";

/// Sentence-start sentinel for padding depth `depth` (1-based, innermost
/// first): `<s>`, `<s2>`, `<s3>`, ...
pub fn bos_symbol(depth: usize) -> String {
    if depth == 1 {
        "<s>".to_string()
    } else {
        format!("<s{depth}>")
    }
}

/// Lowercased, whitespace-split sentences before any vocabulary mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCorpus {
    /// Non-empty sentences in input order.
    pub sentences: Vec<Vec<String>>,
    /// Total token count over all sentences, excluding any padding.
    pub token_total: u64,
}

/// Sentences mapped to token ids; unpadded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceCorpus {
    /// Non-empty sentences in input order.
    pub sentences: Vec<Vec<TokenId>>,
    /// Total token count over all sentences, excluding any padding.
    pub token_total: u64,
}

/// Decodes raw bytes into sentences: one sentence per line, tokens split on
/// whitespace, every token lowercased. Empty lines are skipped.
///
/// Fails with the byte offset of the first invalid UTF-8 sequence.
pub fn tokenize_and_normalize(input: &[u8]) -> Result<RawCorpus> {
    let text = std::str::from_utf8(input)
        .map_err(|e| Error::Ingestion { offset: e.valid_up_to() })?;
    let mut sentences = Vec::new();
    let mut token_total = 0u64;
    for line in text.lines() {
        let sentence: Vec<String> =
            line.split_whitespace().map(|t| t.to_lowercase()).collect();
        if sentence.is_empty() {
            continue;
        }
        token_total += sentence.len() as u64;
        sentences.push(sentence);
    }
    Ok(RawCorpus { sentences, token_total })
}

/// Token table with reserved sentinels and frequency-ordered content words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, TokenId>,
    /// Sentence-start ids, innermost first: `bos[0]` is `<s>`.
    bos: Vec<TokenId>,
    eos: TokenId,
    unk: TokenId,
}

impl Vocabulary {
    /// Reserved token strings for a model of the given order, in id order.
    fn reserved(order: usize) -> Vec<String> {
        let bos_count = order.saturating_sub(1).max(1);
        let mut tokens: Vec<String> = (1..=bos_count).map(bos_symbol).collect();
        tokens.push(EOS.to_string());
        tokens.push(UNK.to_string());
        tokens
    }

    /// Assembles a vocabulary from the reserved sentinels for `order` plus
    /// the given non-reserved tokens, which receive ids in iteration order.
    ///
    /// Fails if a token repeats or collides with a sentinel.
    pub fn from_parts<I>(order: usize, non_reserved: I) -> Result<Self>
    where
        I: IntoIterator<Item = String>,
    {
        if order == 0 {
            return Err(Error::InvalidArgument("order must be at least 1".into()));
        }
        let reserved = Self::reserved(order);
        let bos_count = reserved.len() - 2;
        let mut tokens = reserved;
        for token in non_reserved {
            if is_reserved_string(&token) {
                return Err(Error::Data(format!(
                    "token {token:?} collides with a reserved sentinel"
                )));
            }
            tokens.push(token);
        }
        let mut ids = HashMap::with_capacity(tokens.len());
        for (id, token) in tokens.iter().enumerate() {
            if ids.insert(token.clone(), id as TokenId).is_some() {
                return Err(Error::Data(format!("duplicate token {token:?}")));
            }
        }
        let bos = (0..bos_count as TokenId).collect();
        Ok(Vocabulary {
            eos: bos_count as TokenId,
            unk: bos_count as TokenId + 1,
            tokens,
            ids,
            bos,
        })
    }

    /// Builds a vocabulary from a corpus: sentinels for `order` first, then
    /// every token occurring at least `min_count` times, ordered by
    /// descending frequency with ties broken lexicographically. Tokens that
    /// spell a sentinel are excluded (they map to [`UNK`] later).
    pub fn build(corpus: &RawCorpus, order: usize, min_count: u64) -> Result<Self> {
        if min_count == 0 {
            return Err(Error::InvalidArgument("min-count must be at least 1".into()));
        }
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for sentence in &corpus.sentences {
            for token in sentence {
                *freq.entry(token.as_str()).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<(&str, u64)> = freq
            .into_iter()
            .filter(|(t, c)| *c >= min_count && !is_reserved_string(t))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        Self::from_parts(order, kept.into_iter().map(|(t, _)| t.to_string()))
    }

    /// Number of tokens, sentinels included.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// True when the vocabulary holds nothing beyond the sentinels.
    pub fn is_empty(&self) -> bool {
        self.tokens.len() == self.bos.len() + 2
    }

    /// Highest model order this vocabulary can pad for.
    pub fn max_order(&self) -> usize {
        self.bos.len() + 1
    }

    /// Exact id of a token string, if present.
    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.ids.get(token).copied()
    }

    /// Token string for an id.
    ///
    /// # Panics
    /// Panics if the id is out of range.
    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    /// Maps one raw corpus token to its id. Out-of-vocabulary tokens and
    /// tokens spelling a sentinel map to [`UNK`].
    pub fn map_token(&self, raw: &str) -> TokenId {
        match self.ids.get(raw) {
            Some(&id) if !self.is_sentinel(id) => id,
            _ => self.unk,
        }
    }

    /// End-of-sentence id.
    pub fn eos(&self) -> TokenId {
        self.eos
    }

    /// Unknown-token id.
    pub fn unk(&self) -> TokenId {
        self.unk
    }

    /// Sentence-start ids needed to pad for order `n`, outermost first.
    /// For `n = 3` this is `[<s2>, <s>]`.
    pub fn bos_padding(&self, n: usize) -> Result<Vec<TokenId>> {
        if n == 0 {
            return Err(Error::InvalidArgument("order must be at least 1".into()));
        }
        if n - 1 > self.bos.len() {
            return Err(Error::InvalidArgument(format!(
                "vocabulary carries sentinels for order {} but order {} was requested",
                self.max_order(),
                n
            )));
        }
        Ok(self.bos[..n - 1].iter().rev().copied().collect())
    }

    /// True for sentence-start ids.
    pub fn is_bos(&self, id: TokenId) -> bool {
        (id as usize) < self.bos.len()
    }

    /// True for any sentinel id (sentence starts, [`EOS`], [`UNK`]).
    pub fn is_sentinel(&self, id: TokenId) -> bool {
        (id as usize) < self.bos.len() + 2
    }

    /// True for ids a model may assign probability to: everything except
    /// the sentence-start sentinels.
    pub fn is_predictable(&self, id: TokenId) -> bool {
        !self.is_bos(id) && (id as usize) < self.tokens.len()
    }

    /// Number of predictable ids ([`EOS`] and [`UNK`] included).
    pub fn predictable_count(&self) -> usize {
        self.tokens.len() - self.bos.len()
    }

    /// Iterates over all predictable ids in ascending order.
    pub fn predictable_ids(&self) -> std::ops::Range<TokenId> {
        self.bos.len() as TokenId..self.tokens.len() as TokenId
    }

    /// Serializes as one token per line, in id order.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for token in &self.tokens {
            out.push_str(token);
            out.push('\n');
        }
        out
    }

    /// Parses the one-token-per-line format written by
    /// [`Vocabulary::to_file_string`]. The sentinel prefix determines the
    /// order the vocabulary supports.
    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        let mut bos_count = 0usize;
        while bos_count < lines.len() && lines[bos_count] == bos_symbol(bos_count + 1) {
            bos_count += 1;
        }
        if bos_count == 0 {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected {:?} as the first token", bos_symbol(1)),
            });
        }
        if lines.get(bos_count) != Some(&EOS) || lines.get(bos_count + 1) != Some(&UNK) {
            return Err(Error::Parse {
                line: bos_count + 1,
                message: format!("expected {EOS:?} then {UNK:?} after the sentence-start sentinels"),
            });
        }
        let rest = lines[bos_count + 2..].iter().map(|t| t.to_string());
        Self::from_parts(bos_count + 1, rest)
    }

    /// Maps a raw corpus through this vocabulary; see
    /// [`Vocabulary::map_token`].
    pub fn apply(&self, corpus: &RawCorpus) -> SentenceCorpus {
        let sentences = corpus
            .sentences
            .iter()
            .map(|s| s.iter().map(|t| self.map_token(t)).collect())
            .collect();
        SentenceCorpus { sentences, token_total: corpus.token_total }
    }
}

pub(crate) fn is_reserved_string(token: &str) -> bool {
    if token == EOS || token == UNK || token == "<s>" {
        return true;
    }
    token
        .strip_prefix("<s")
        .and_then(|t| t.strip_suffix('>'))
        .is_some_and(|digits| !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()))
}

/// Pads one sentence for order `n`: `n - 1` sentence-start sentinels
/// (outermost first), the sentence, then [`EOS`].
pub fn pad_sentence(sentence: &[TokenId], n: usize, vocab: &Vocabulary) -> Result<Vec<TokenId>> {
    let mut padded = vocab.bos_padding(n)?;
    padded.reserve(sentence.len() + 1);
    padded.extend_from_slice(sentence);
    padded.push(vocab.eos());
    Ok(padded)
}

/// Pads every sentence of a corpus for order `n`.
pub fn pad_corpus(corpus: &SentenceCorpus, n: usize, vocab: &Vocabulary) -> Result<Vec<Vec<TokenId>>> {
    corpus
        .sentences
        .iter()
        .map(|s| pad_sentence(s, n, vocab))
        .collect()
}

/// Assignment of sentences to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    k: usize,
    fold_of: Vec<u32>,
}

impl FoldAssignment {
    /// Splits `sentence_count` sentences into `k` folds whose sizes differ
    /// by at most one.
    ///
    /// With `shuffle` false the folds are contiguous blocks in corpus order
    /// and `seed` is ignored; with `shuffle` true the sentences are permuted
    /// by a seeded generator first, so a given `(seed, k, sentence_count)`
    /// always yields the same assignment.
    pub fn split(sentence_count: usize, k: usize, seed: u64, shuffle: bool) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument("fold count must be at least 2".into()));
        }
        if k > sentence_count {
            return Err(Error::InvalidArgument(format!(
                "cannot split {sentence_count} sentences into {k} folds"
            )));
        }
        let mut order: Vec<usize> = (0..sentence_count).collect();
        if shuffle {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            order.shuffle(&mut rng);
        }
        let base = sentence_count / k;
        let extra = sentence_count % k;
        let mut fold_of = vec![0u32; sentence_count];
        let mut next = 0usize;
        for fold in 0..k {
            let size = base + usize::from(fold < extra);
            for &sentence in &order[next..next + size] {
                fold_of[sentence] = fold as u32;
            }
            next += size;
        }
        Ok(FoldAssignment { k, fold_of })
    }

    /// Number of folds.
    pub fn fold_count(&self) -> usize {
        self.k
    }

    /// Fold index of one sentence.
    pub fn fold_of(&self, sentence: usize) -> usize {
        self.fold_of[sentence] as usize
    }

    /// Sentence indices held out by fold `fold`, ascending.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] as usize == fold).collect()
    }

    /// Sentence indices used for training when fold `fold` is held out,
    /// ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] as usize != fold).collect()
    }
}
