//! Plain-text model serialization.
//!
//! A dump is self-contained: the terminal section lists every predictable
//! token in id order, which lets [`parse_model`] rebuild the exact
//! vocabulary (and therefore the exact token ids) before reading the
//! keyed sections. All floats are written in shortest round-trip form, so
//! dumping a parsed dump reproduces the original bytes.
//!
//! Layout, in order:
//!
//! ```text
//! #model method=kns order=2 floored=0 discounts=0.4
//! #gammas order=2 entries=<n>     one `history<TAB>weight` line each
//! #terms order=2 entries=<n>      one `history word<TAB>term` line each
//! #unigram variant=continuation entries=<n>
//! ```
//!
//! Order-3 models carry two `#gammas`/`#terms` pairs (order 3, then 2);
//! the order-1 history is the empty string.

use std::fmt::Write as _;

use super::{Level, Method, SmoothedModel, UnigramDistribution, UnigramVariant};
use crate::corpus::{TokenId, Vocabulary};
use crate::error::{Error, Result};
use crate::ngram_stats::Gram;

/// Serializes a model against the vocabulary it was trained with.
pub fn dump_model(model: &SmoothedModel, vocab: &Vocabulary) -> Result<String> {
    if vocab.len() != model.vocab_len() {
        return Err(Error::InvalidArgument(format!(
            "vocabulary has {} tokens but the model was trained against {}",
            vocab.len(),
            model.vocab_len()
        )));
    }
    let mut out = String::new();
    let discounts =
        model.discounts().iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
    let _ = writeln!(
        out,
        "#model method={} order={} floored={} discounts={}",
        model.method(),
        model.order(),
        model.floored_count(),
        discounts
    );
    for level in model.levels() {
        let _ = writeln!(out, "#gammas order={} entries={}", level.order(), level.history_count());
        for (history, gamma) in level.gammas() {
            let _ = writeln!(out, "{}\t{}", spell(history, vocab), gamma);
        }
        let _ = writeln!(out, "#terms order={} entries={}", level.order(), level.term_count());
        for (gram, term) in level.terms() {
            let _ = writeln!(out, "{}\t{}", spell(gram, vocab), term);
        }
    }
    let _ = writeln!(
        out,
        "#unigram variant={} entries={}",
        model.unigram().variant().name(),
        vocab.predictable_count()
    );
    for id in vocab.predictable_ids() {
        let _ = writeln!(out, "{}\t{}", vocab.token(id), model.unigram().prob(id));
    }
    Ok(out)
}

/// Reads a dump back into a model and the vocabulary it implies.
pub fn parse_model(text: &str) -> Result<(SmoothedModel, Vocabulary)> {
    let mut lines = text.lines().enumerate();
    let (line_no, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, message: "empty model file".into() })?;
    let header = Header::read(line_no + 1, header)?;

    // The terminal section fixes the vocabulary, so scan ahead for it
    // before decoding the keyed level sections.
    let mut level_sections = Vec::new();
    let mut unigram_section = None;
    let mut current: Option<(SectionKind, usize, Vec<(usize, &str)>)> = None;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if let Some(rest) = line.strip_prefix('#') {
            let (kind, declared) = read_section_header(line_no, rest)?;
            if let Some(finished) = current.take() {
                close_section(finished, &mut level_sections, &mut unigram_section)?;
            }
            current = Some((kind, declared, Vec::new()));
        } else {
            match current.as_mut() {
                Some((_, _, body)) => body.push((line_no, line)),
                None => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "data before the first section header".into(),
                    })
                }
            }
        }
    }
    if let Some(finished) = current.take() {
        close_section(finished, &mut level_sections, &mut unigram_section)?;
    }
    if let Some(unpaired) = level_sections.iter().find(|l| l.terms.is_none()) {
        return Err(Error::Parse {
            line: 1,
            message: format!("#gammas order={} has no #terms section", unpaired.order),
        });
    }

    let (variant, unigram_body) = unigram_section.ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing #unigram section".into(),
    })?;
    let vocab = rebuild_vocabulary(header.order, &unigram_body)?;

    let expected: Vec<usize> =
        if header.order == 3 { vec![3, 2] } else { vec![header.order] };
    let found: Vec<usize> = level_sections.iter().map(|l| l.order).collect();
    if found != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected level sections for orders {expected:?}, found {found:?}"
            ),
        });
    }

    let mut levels = Vec::with_capacity(level_sections.len());
    for section in &level_sections {
        let gammas = decode_entries(&section.gammas, section.order - 1, &vocab)?;
        let terms =
            decode_entries(section.terms.as_deref().unwrap_or_default(), section.order, &vocab)?;
        levels.push(Level::new(section.order, gammas, terms));
    }

    let mut probs = vec![0.0; vocab.len()];
    for (line_no, line) in &unigram_body {
        let (token, value) = split_entry(*line_no, line)?;
        let id = vocab.id(token).expect("unigram tokens define the vocabulary");
        probs[id as usize] = parse_float(*line_no, value)?;
    }
    let unigram = UnigramDistribution::new(variant, probs);

    let model = SmoothedModel::assemble(
        header.method,
        levels,
        unigram,
        header.discounts,
        header.floored,
        &vocab,
    );
    Ok((model, vocab))
}

/// Expected number of stored discount parameters for a method at an order.
pub(crate) fn discount_arity(method: Method, order: usize) -> usize {
    match (method, order) {
        (Method::AddK, _) => 1,
        (Method::GoodTuring, _) => 0,
        (Method::Abs | Method::Kns, 3) => 2,
        (Method::Abs | Method::Kns, _) => 1,
        (Method::Mkns, 3) => 6,
        (Method::Mkns, _) => 3,
        (Method::Mdknspomd, 3) => 4,
        (Method::Mdknspomd, _) => 3,
    }
}

fn spell(gram: &[TokenId], vocab: &Vocabulary) -> String {
    gram.iter().map(|&id| vocab.token(id)).collect::<Vec<_>>().join(" ")
}

struct Header {
    method: Method,
    order: usize,
    floored: u64,
    discounts: Vec<f64>,
}

impl Header {
    fn read(line_no: usize, line: &str) -> Result<Header> {
        let parse_err = |message: String| Error::Parse { line: line_no, message };
        let rest = line
            .strip_prefix("#model ")
            .ok_or_else(|| parse_err("expected a #model header".into()))?;
        let mut method = None;
        let mut order = None;
        let mut floored = None;
        let mut discounts = None;
        for field in rest.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| parse_err(format!("malformed header field {field:?}")))?;
            match key {
                "method" => {
                    method =
                        Some(value.parse::<Method>().map_err(|e| parse_err(e.to_string()))?);
                }
                "order" => {
                    let n: usize = value
                        .parse()
                        .map_err(|_| parse_err(format!("invalid order {value:?}")))?;
                    if !(1..=3).contains(&n) {
                        return Err(parse_err(format!("supported orders are 1-3, got {n}")));
                    }
                    order = Some(n);
                }
                "floored" => {
                    floored = Some(
                        value
                            .parse::<u64>()
                            .map_err(|_| parse_err(format!("invalid floored count {value:?}")))?,
                    );
                }
                "discounts" => {
                    let values = if value.is_empty() {
                        Vec::new()
                    } else {
                        value
                            .split(',')
                            .map(|v| parse_float(line_no, v))
                            .collect::<Result<Vec<f64>>>()?
                    };
                    discounts = Some(values);
                }
                other => return Err(parse_err(format!("unknown header field {other:?}"))),
            }
        }
        let method = method.ok_or_else(|| parse_err("header is missing method=".into()))?;
        let order = order.ok_or_else(|| parse_err("header is missing order=".into()))?;
        let floored = floored.ok_or_else(|| parse_err("header is missing floored=".into()))?;
        let discounts =
            discounts.ok_or_else(|| parse_err("header is missing discounts=".into()))?;
        if order < method.min_order() {
            return Err(parse_err(format!(
                "method {method} needs order at least {}, got {order}",
                method.min_order()
            )));
        }
        let expected = discount_arity(method, order);
        if discounts.len() != expected {
            return Err(parse_err(format!(
                "method {method} at order {order} stores {expected} discount value(s), got {}",
                discounts.len()
            )));
        }
        Ok(Header { method, order, floored, discounts })
    }
}

enum SectionKind {
    Gammas(usize),
    Terms(usize),
    Unigram(UnigramVariant),
}

fn read_section_header(line_no: usize, rest: &str) -> Result<(SectionKind, usize)> {
    let parse_err = |message: String| Error::Parse { line: line_no, message };
    let mut parts = rest.split_whitespace();
    let name = parts.next().unwrap_or_default();
    let mut fields = Vec::new();
    for field in parts {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| parse_err(format!("malformed section field {field:?}")))?;
        fields.push((key, value));
    }
    let lookup = |key: &str| {
        fields
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| parse_err(format!("#{name} section is missing {key}=")))
    };
    let entries: usize = lookup("entries")?
        .parse()
        .map_err(|_| parse_err("invalid entries count".into()))?;
    let kind = match name {
        "gammas" | "terms" => {
            let order: usize = lookup("order")?
                .parse()
                .map_err(|_| parse_err("invalid section order".into()))?;
            if !(1..=3).contains(&order) {
                return Err(parse_err(format!("invalid section order {order}")));
            }
            if name == "gammas" {
                SectionKind::Gammas(order)
            } else {
                SectionKind::Terms(order)
            }
        }
        "unigram" => {
            let variant = lookup("variant")?;
            let variant = UnigramVariant::parse(variant)
                .ok_or_else(|| parse_err(format!("unknown unigram variant {variant:?}")))?;
            SectionKind::Unigram(variant)
        }
        other => return Err(parse_err(format!("unknown section #{other}"))),
    };
    Ok((kind, entries))
}

struct LevelSection<'a> {
    order: usize,
    gammas: Vec<(usize, &'a str)>,
    /// `None` until the matching `#terms` section closes.
    terms: Option<Vec<(usize, &'a str)>>,
}

/// Files a completed section into the level list or the terminal slot,
/// enforcing the gammas-then-terms pairing and declared entry counts.
fn close_section<'a>(
    (kind, declared, body): (SectionKind, usize, Vec<(usize, &'a str)>),
    levels: &mut Vec<LevelSection<'a>>,
    unigram: &mut Option<(UnigramVariant, Vec<(usize, &'a str)>)>,
) -> Result<()> {
    if body.len() != declared {
        return Err(Error::Parse {
            line: body.first().map_or(1, |(l, _)| *l),
            message: format!("section declares {declared} entries but holds {}", body.len()),
        });
    }
    let misordered = |what: &str| Error::Parse {
        line: 1,
        message: format!("sections out of order: unexpected {what}"),
    };
    match kind {
        SectionKind::Gammas(order) => {
            if levels.last().is_some_and(|l| l.terms.is_none()) || unigram.is_some() {
                return Err(misordered("#gammas"));
            }
            levels.push(LevelSection { order, gammas: body, terms: None });
            Ok(())
        }
        SectionKind::Terms(order) => match levels.last_mut() {
            Some(level) if level.order == order && level.terms.is_none() => {
                level.terms = Some(body);
                Ok(())
            }
            _ => Err(misordered(&format!("#terms order={order}"))),
        },
        SectionKind::Unigram(variant) => {
            if unigram.is_some() || levels.last().is_some_and(|l| l.terms.is_none()) {
                return Err(misordered("#unigram"));
            }
            *unigram = Some((variant, body));
            Ok(())
        }
    }
}

/// Rebuilds the vocabulary from the terminal section: the first two
/// entries are the fixed reserved tokens, the rest are the non-reserved
/// tokens in their original id order.
fn rebuild_vocabulary(order: usize, body: &[(usize, &str)]) -> Result<Vocabulary> {
    let mut spellings = Vec::with_capacity(body.len());
    for (line_no, line) in body {
        let (token, _) = split_entry(*line_no, line)?;
        if token.is_empty() || token.contains(char::is_whitespace) {
            return Err(Error::Parse {
                line: *line_no,
                message: format!("invalid token spelling {token:?}"),
            });
        }
        spellings.push((*line_no, token));
    }
    for (idx, expected) in [(0, "</s>"), (1, "<unk>")] {
        match spellings.get(idx) {
            Some((_, tok)) if *tok == expected => {}
            other => {
                return Err(Error::Parse {
                    line: other.map_or(1, |(l, _)| *l),
                    message: format!("unigram entry {idx} must be {expected}"),
                })
            }
        }
    }
    Vocabulary::from_parts(order, spellings[2..].iter().map(|(_, t)| t.to_string()))
}

fn split_entry<'a>(line_no: usize, line: &'a str) -> Result<(&'a str, &'a str)> {
    line.split_once('\t').ok_or_else(|| Error::Parse {
        line: line_no,
        message: "expected key<TAB>value".into(),
    })
}

fn parse_float(line_no: usize, text: &str) -> Result<f64> {
    let value: f64 = text.parse().map_err(|_| Error::Parse {
        line: line_no,
        message: format!("invalid number {text:?}"),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            line: line_no,
            message: format!("non-finite number {text:?}"),
        });
    }
    Ok(value)
}

/// Decodes `token... <TAB> value` lines into id-keyed entries, requiring
/// the declared gram length and strictly ascending key order.
fn decode_entries(
    body: &[(usize, &str)],
    gram_len: usize,
    vocab: &Vocabulary,
) -> Result<Vec<(Gram, f64)>> {
    let mut out: Vec<(Gram, f64)> = Vec::with_capacity(body.len());
    for (line_no, line) in body {
        let (key, value) = split_entry(*line_no, line)?;
        let mut gram = Vec::with_capacity(gram_len);
        for token in key.split_whitespace() {
            gram.push(vocab.id(token).ok_or_else(|| Error::Parse {
                line: *line_no,
                message: format!("unknown token {token:?}"),
            })?);
        }
        if gram.len() != gram_len {
            return Err(Error::Parse {
                line: *line_no,
                message: format!("expected {gram_len} token(s), got {}", gram.len()),
            });
        }
        let gram = Gram::from(gram);
        if let Some((last, _)) = out.last() {
            if *last >= gram {
                return Err(Error::Parse {
                    line: *line_no,
                    message: "entries out of order or duplicated".into(),
                });
            }
        }
        out.push((gram, parse_float(*line_no, value)?));
    }
    Ok(out)
}
