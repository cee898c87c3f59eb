//! Auditing smoothed models against the training counts they came from.
//!
//! For a bigram model, multiplying each conditional distribution by its
//! history's original count gives a joint pseudo-count matrix directly
//! comparable to the raw count matrix. Row sums always reproduce the
//! original row totals (that is normalization); whether the *column* sums
//! survive smoothing distinguishes marginal-preserving estimators from
//! the rest, and the report produced here quantifies exactly that.
//!
//! Trigram models get the same check on their highest level, where the
//! smoothed unigram marginal is accumulated over all observed two-token
//! histories and compared against the raw unigram counts.

use std::fmt::Write as _;

use crate::corpus::{TokenId, Vocabulary};
use crate::error::{Error, Result};
use crate::ngram_stats::CountTable;
use crate::smoothing::SmoothedModel;

/// A square token-by-token matrix of (pseudo-)counts with its marginals.
///
/// Labels run sentence-start sentinel first, then the regular vocabulary
/// in id order, then the unknown-token sentinel, then the end-of-sentence
/// sentinel. The start column and the end row are structurally zero.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCountMatrix {
    labels: Vec<String>,
    ids: Vec<TokenId>,
    bos_flags: Vec<bool>,
    /// Row-major cells; `cells[i][j]` pairs history `labels[i]` with word
    /// `labels[j]`.
    cells: Vec<Vec<f64>>,
    row_totals: Vec<f64>,
    col_totals: Vec<f64>,
    grand_total: f64,
}

impl JointCountMatrix {
    pub(crate) fn from_cells(
        labels: Vec<String>,
        ids: Vec<TokenId>,
        bos_flags: Vec<bool>,
        cells: Vec<Vec<f64>>,
    ) -> Self {
        let n = labels.len();
        debug_assert_eq!(ids.len(), n);
        debug_assert_eq!(cells.len(), n);
        debug_assert!(cells.iter().all(|row| row.len() == n));
        let row_totals: Vec<f64> = cells.iter().map(|row| row.iter().sum()).collect();
        let col_totals: Vec<f64> =
            (0..n).map(|j| cells.iter().map(|row| row[j]).sum()).collect();
        let grand_total = row_totals.iter().sum();
        JointCountMatrix { labels, ids, bos_flags, cells, row_totals, col_totals, grand_total }
    }

    /// Token labels, in display order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Number of rows (and columns).
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    /// Cell pairing history row `i` with word column `j`.
    pub fn cell(&self, i: usize, j: usize) -> f64 {
        self.cells[i][j]
    }

    /// Per-row sums.
    pub fn row_totals(&self) -> &[f64] {
        &self.row_totals
    }

    /// Per-column sums.
    pub fn column_totals(&self) -> &[f64] {
        &self.col_totals
    }

    /// Sum over all cells.
    pub fn grand_total(&self) -> f64 {
        self.grand_total
    }
}

/// Display-ordered label ids for a bigram table: start sentinel, regular
/// tokens, unknown-token sentinel, end sentinel. The unknown token is
/// always a column: methods without a continuation-based lower
/// distribution leak probability mass into it even when the table never
/// saw it, and the row-total invariant only holds over the full set.
fn audit_ids(table: &CountTable, vocab: &Vocabulary) -> Result<Vec<TokenId>> {
    if table.order() != 2 {
        return Err(Error::InvalidArgument(format!(
            "the joint-count audit works on bigram tables, got order {}",
            table.order()
        )));
    }
    let limit = vocab.len() as TokenId;
    if table.entries().iter().any(|(g, _)| g.iter().any(|&id| id >= limit)) {
        return Err(Error::InvalidArgument(
            "count table references ids outside the vocabulary".into(),
        ));
    }
    let mut ids = Vec::with_capacity(vocab.len());
    if let Ok(padding) = vocab.bos_padding(2) {
        ids.extend(padding);
    }
    for id in vocab.predictable_ids() {
        if id != vocab.eos() && id != vocab.unk() {
            ids.push(id);
        }
    }
    ids.push(vocab.unk());
    ids.push(vocab.eos());
    Ok(ids)
}

fn matrix_scaffold(
    table: &CountTable,
    vocab: &Vocabulary,
) -> Result<(Vec<TokenId>, Vec<String>, Vec<bool>)> {
    let ids = audit_ids(table, vocab)?;
    let labels = ids.iter().map(|&id| vocab.token(id).to_string()).collect();
    let bos_flags = ids.iter().map(|&id| vocab.is_bos(id)).collect();
    Ok((ids, labels, bos_flags))
}

/// The raw joint counts of a bigram table, arranged for display.
pub fn raw_joint_counts(table: &CountTable, vocab: &Vocabulary) -> Result<JointCountMatrix> {
    let (ids, labels, bos_flags) = matrix_scaffold(table, vocab)?;
    let cells: Vec<Vec<f64>> = ids
        .iter()
        .map(|&x| ids.iter().map(|&y| table.count(&[x, y]) as f64).collect())
        .collect();
    Ok(JointCountMatrix::from_cells(labels, ids, bos_flags, cells))
}

/// The smoothed joint pseudo-counts of a bigram model over its training
/// table: `cell(x, y) = p(y | x) * c(x ·)`. Rows whose history was never
/// observed (the end sentinel, in particular) stay zero.
pub fn smoothed_joint_counts(
    model: &SmoothedModel,
    table: &CountTable,
    vocab: &Vocabulary,
) -> Result<JointCountMatrix> {
    if model.order() != 2 {
        return Err(Error::InvalidArgument(format!(
            "the joint-count audit works on bigram models, got order {}",
            model.order()
        )));
    }
    if model.vocab_len() != vocab.len() {
        return Err(Error::InvalidArgument(format!(
            "vocabulary has {} tokens but the model was trained against {}",
            vocab.len(),
            model.vocab_len()
        )));
    }
    let (ids, labels, bos_flags) = matrix_scaffold(table, vocab)?;
    let mut cells = vec![vec![0.0; ids.len()]; ids.len()];
    for (i, &x) in ids.iter().enumerate() {
        let total = table.context_total(&[x]) as f64;
        if total == 0.0 {
            continue;
        }
        for (j, &y) in ids.iter().enumerate() {
            if vocab.is_predictable(y) {
                cells[i][j] = model.prob(&[x], y)? * total;
            }
        }
    }
    Ok(JointCountMatrix::from_cells(labels, ids, bos_flags, cells))
}

/// One audited column of a [`MarginalReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalRow {
    /// Token label of the column.
    pub token: String,
    /// Column marginal of the original counts.
    pub original: f64,
    /// Column marginal after smoothing.
    pub smoothed: f64,
    /// `|smoothed - original|`.
    pub abs_dev: f64,
    /// Absolute deviation relative to the original marginal; equals the
    /// absolute deviation where the original is zero.
    pub rel_dev: f64,
}

/// Per-column marginal deviations of a smoothed matrix against the
/// original counts, with a preserved verdict under a relative tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalReport {
    rows: Vec<MarginalRow>,
    max_abs_dev: f64,
    max_rel_dev: f64,
    tolerance: f64,
    preserved: bool,
}

impl MarginalReport {
    fn from_rows(rows: Vec<MarginalRow>, tolerance: f64) -> Result<MarginalReport> {
        if !tolerance.is_finite() || tolerance < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be non-negative and finite, got {tolerance}"
            )));
        }
        let max_abs_dev = rows.iter().map(|r| r.abs_dev).fold(0.0, f64::max);
        let max_rel_dev = rows.iter().map(|r| r.rel_dev).fold(0.0, f64::max);
        Ok(MarginalReport {
            rows,
            max_abs_dev,
            max_rel_dev,
            tolerance,
            preserved: max_rel_dev <= tolerance,
        })
    }

    /// Audited columns, in display order.
    pub fn rows(&self) -> &[MarginalRow] {
        &self.rows
    }

    /// Largest absolute deviation over all columns.
    pub fn max_abs_dev(&self) -> f64 {
        self.max_abs_dev
    }

    /// Largest relative deviation over all columns.
    pub fn max_rel_dev(&self) -> f64 {
        self.max_rel_dev
    }

    /// True when every column's relative deviation is within tolerance.
    pub fn preserved(&self) -> bool {
        self.preserved
    }

    /// Serializes the report: one row per column, then a verdict line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("token\toriginal_marginal\tsmoothed_marginal\tabs_dev\trel_dev\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                row.token, row.original, row.smoothed, row.abs_dev, row.rel_dev
            );
        }
        let _ = writeln!(out, "max_abs_dev={} preserved={}", self.max_abs_dev, self.preserved);
        out
    }
}

fn deviation_row(token: &str, original: f64, smoothed: f64) -> MarginalRow {
    let abs_dev = (smoothed - original).abs();
    let rel_dev = if original > 0.0 { abs_dev / original } else { abs_dev };
    MarginalRow { token: token.to_string(), original, smoothed, abs_dev, rel_dev }
}

/// Compares a smoothed joint matrix against the original bigram table it
/// was derived from, column by column. The start sentinel's column is
/// structurally zero on both sides and is left out of the report.
pub fn marginal_report(
    matrix: &JointCountMatrix,
    original: &CountTable,
    vocab: &Vocabulary,
    tolerance: f64,
) -> Result<MarginalReport> {
    let raw = raw_joint_counts(original, vocab)?;
    if raw.labels != matrix.labels {
        return Err(Error::InvalidArgument(format!(
            "matrix labels {:?} do not match the original table's {:?}",
            matrix.labels, raw.labels
        )));
    }
    let rows = matrix
        .labels
        .iter()
        .enumerate()
        .filter(|(i, _)| !matrix.bos_flags[*i])
        .map(|(i, token)| deviation_row(token, raw.col_totals[i], matrix.col_totals[i]))
        .collect();
    MarginalReport::from_rows(rows, tolerance)
}

/// Audits the highest-level marginal of a trigram model: the smoothed
/// unigram mass `sum over observed histories of c(h ·) * p(w | h)` is
/// compared against the raw unigram counts of the training table.
pub fn trigram_marginal_report(
    model: &SmoothedModel,
    table: &CountTable,
    vocab: &Vocabulary,
    tolerance: f64,
) -> Result<MarginalReport> {
    if model.order() != 3 || table.order() != 3 {
        return Err(Error::InvalidArgument(format!(
            "the trigram audit needs an order-3 model and table, got orders {} and {}",
            model.order(),
            table.order()
        )));
    }
    if model.vocab_len() != vocab.len() {
        return Err(Error::InvalidArgument(format!(
            "vocabulary has {} tokens but the model was trained against {}",
            vocab.len(),
            model.vocab_len()
        )));
    }
    let unigrams = table.marginalize()?.marginalize()?;
    let mut smoothed = vec![0.0; vocab.len()];
    for (context, total, _) in table.context_runs() {
        let total = total as f64;
        for w in vocab.predictable_ids() {
            smoothed[w as usize] += total * model.prob(context, w)?;
        }
    }
    let mut rows = Vec::new();
    let mut push = |id: TokenId| {
        rows.push(deviation_row(
            vocab.token(id),
            unigrams.count(&[id]) as f64,
            smoothed[id as usize],
        ));
    };
    for id in vocab.predictable_ids() {
        if id != vocab.eos() && id != vocab.unk() {
            push(id);
        }
    }
    push(vocab.unk());
    push(vocab.eos());
    MarginalReport::from_rows(rows, tolerance)
}

/// Formats a non-negative value with a fixed number of decimals, rounding
/// half away from zero, without going through float formatting.
fn fixed_half_up(value: f64, decimals: usize) -> String {
    let scale = 10f64.powi(decimals as i32);
    let scaled = (value.abs() * scale + 0.5).floor();
    let digits = (scaled as u128).to_string();
    let sign = if value < 0.0 && scaled > 0.0 { "-" } else { "" };
    if decimals == 0 {
        return format!("{sign}{digits}");
    }
    let padded = format!("{digits:0>width$}", width = decimals + 1);
    let (int_part, frac_part) = padded.split_at(padded.len() - decimals);
    format!("{sign}{int_part}.{frac_part}")
}

/// Renders the matrix as a fixed-width text table: one row per history, a
/// final row of column sums, all values rounded half-up to `decimals`
/// places. Output is byte-identical for identical input.
pub fn render_table(matrix: &JointCountMatrix, decimals: usize) -> String {
    if matrix.labels.is_empty() {
        return String::from("\n");
    }
    const TOTAL_LABEL: &str = "total";
    let formatted: Vec<Vec<String>> = matrix
        .cells
        .iter()
        .map(|row| row.iter().map(|&v| fixed_half_up(v, decimals)).collect())
        .chain(std::iter::once(
            matrix.col_totals.iter().map(|&v| fixed_half_up(v, decimals)).collect(),
        ))
        .collect();
    let row_label_width = matrix
        .labels
        .iter()
        .map(|l| l.len())
        .chain(std::iter::once(TOTAL_LABEL.len()))
        .max()
        .unwrap_or(0);
    let col_widths: Vec<usize> = matrix
        .labels
        .iter()
        .enumerate()
        .map(|(j, label)| {
            formatted.iter().map(|row| row[j].len()).chain([label.len()]).max().unwrap_or(0)
        })
        .collect();

    let mut out = String::new();
    let mut push_row = |label: &str, values: Option<&[String]>| {
        let mut line = format!("{label:<row_label_width$}");
        for (j, width) in col_widths.iter().enumerate() {
            let text = match values {
                Some(row) => row[j].as_str(),
                None => matrix.labels[j].as_str(),
            };
            let _ = write!(line, "  {text:>width$}");
        }
        out.push_str(line.trim_end());
        out.push('\n');
    };
    push_row("", None);
    for (i, label) in matrix.labels.iter().enumerate() {
        push_row(label, Some(&formatted[i]));
    }
    push_row(TOTAL_LABEL, Some(&formatted[matrix.labels.len()]));
    out
}
