//! Shared unit-test fixture: a small joint bigram count matrix with known
//! row sums, histogram and smoothing behaviour, used as an oracle across
//! the counting, smoothing and audit tests.

use crate::corpus::Vocabulary;
use crate::ngram_stats::CountTable;

/// Row/column labels of the desk matrix, in id order.
pub(crate) const DESK_LABELS: [&str; 7] = ["<s>", "a", "b", "c", "d", "e", "</s>"];

/// Joint bigram counts: `DESK_MATRIX[i][j]` is the number of times label
/// `j` follows label `i`. Row totals are 11, 21, 14, 15, 6, 19 and the
/// grand total is 86.
pub(crate) const DESK_MATRIX: [[u64; 7]; 7] = [
    [0, 2, 3, 5, 0, 1, 0],
    [0, 4, 1, 4, 3, 8, 1],
    [0, 7, 2, 1, 0, 0, 4],
    [0, 2, 5, 2, 0, 4, 2],
    [0, 1, 0, 0, 2, 0, 3],
    [0, 5, 3, 3, 1, 6, 1],
    [0, 0, 0, 0, 0, 0, 0],
];

/// Builds the desk matrix as a bigram [`CountTable`] whose token ids follow
/// [`DESK_LABELS`] order (the labels a-e happen to be lexicographic, so the
/// frequency-independent `from_parts` layout reproduces it).
pub(crate) fn desk_table() -> (CountTable, Vocabulary) {
    let vocab =
        Vocabulary::from_parts(2, ["a", "b", "c", "d", "e"].into_iter().map(String::from))
            .unwrap();
    let id_of = |label: &str| vocab.id(label).unwrap();
    let mut entries = Vec::new();
    for (i, row) in DESK_MATRIX.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            if count > 0 {
                entries.push((vec![id_of(DESK_LABELS[i]), id_of(DESK_LABELS[j])], count));
            }
        }
    }
    (CountTable::from_entries(2, entries).unwrap(), vocab)
}
