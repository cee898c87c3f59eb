//! Discount parameters and their estimation from count-of-count
//! histograms.

use crate::error::{Error, Result};
use crate::ngram_stats::{CountHistogram, TierCounts};

/// Estimated discounts are clamped strictly inside their tier by this
/// margin, so a gram's discounted count never reaches zero through
/// estimation alone.
pub const DISCOUNT_MARGIN: f64 = 1e-9;

/// Discount parameters for one interpolation level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiscountSet {
    /// One discount subtracted from every positive count.
    Single(f64),
    /// Separate discounts for counts of exactly one, exactly two, and
    /// three or more.
    Tiered { d1: f64, d2: f64, d3_plus: f64 },
}

impl DiscountSet {
    /// The discount subtracted from a gram occurring `count` times.
    pub fn for_count(&self, count: u64) -> f64 {
        match *self {
            DiscountSet::Single(d) => d,
            DiscountSet::Tiered { d1, d2, d3_plus } => match count {
                1 => d1,
                2 => d2,
                _ => d3_plus,
            },
        }
    }

    /// Total mass subtracted from a context whose extensions have the
    /// given tier counts. Because valid discounts never exceed their tier,
    /// this closed form equals the per-gram sum of `min(discount, count)`.
    pub fn subtracted_mass(&self, tiers: &TierCounts) -> f64 {
        match *self {
            DiscountSet::Single(d) => d * tiers.distinct() as f64,
            DiscountSet::Tiered { d1, d2, d3_plus } => {
                d1 * tiers.n1() as f64
                    + d2 * tiers.n2() as f64
                    + d3_plus * tiers.n3_plus() as f64
            }
        }
    }

    /// Flat parameter list, matching the order used in model dumps and on
    /// the command line.
    pub fn values(&self) -> Vec<f64> {
        match *self {
            DiscountSet::Single(d) => vec![d],
            DiscountSet::Tiered { d1, d2, d3_plus } => vec![d1, d2, d3_plus],
        }
    }

    /// Checks that every discount is finite, non-negative and no larger
    /// than the smallest count of its tier, which keeps discounted counts
    /// non-negative without flooring.
    pub fn validate(&self) -> Result<()> {
        let check = |d: f64, tier: f64, what: &str| {
            if !d.is_finite() || d < 0.0 || d > tier {
                return Err(Error::InvalidArgument(format!(
                    "{what} discount {d} outside [0, {tier}]"
                )));
            }
            Ok(())
        };
        match *self {
            DiscountSet::Single(d) => check(d, 1.0, "single"),
            DiscountSet::Tiered { d1, d2, d3_plus } => {
                check(d1, 1.0, "count-1")?;
                check(d2, 2.0, "count-2")?;
                check(d3_plus, 3.0, "count-3+")
            }
        }
    }
}

fn clamp_to_tier(d: f64, tier: f64) -> f64 {
    d.clamp(0.0, tier - DISCOUNT_MARGIN)
}

/// Estimates the single discount `n_1 / (n_1 + 2 n_2)` from a histogram,
/// clamped into `[0, 1)`.
///
/// Fails when the histogram has neither singletons nor doubletons.
pub fn estimate_discount_single(hist: &CountHistogram) -> Result<f64> {
    let n1 = hist.n(1) as f64;
    let n2 = hist.n(2) as f64;
    if n1 + 2.0 * n2 == 0.0 {
        return Err(Error::Estimation(
            "cannot estimate a discount without singleton or doubleton counts".into(),
        ));
    }
    Ok(clamp_to_tier(n1 / (n1 + 2.0 * n2), 1.0))
}

/// Estimates the tiered discounts
/// `D1 = 1 - 2 D n_2 / n_1`, `D2 = 2 - 3 D n_3 / n_2`,
/// `D3+ = 3 - 4 D n_4 / n_3` with `D = n_1 / (n_1 + 2 n_2)`, each clamped
/// into its tier.
///
/// Degenerate histograms fall back tier by tier: an undefined `D1` takes
/// `D`, an undefined `D2` takes `2 D1`, and an undefined `D3+` extends the
/// `D1, D2` progression. Fails only when `n_1` through `n_4` are all zero.
pub fn estimate_discounts_triple(hist: &CountHistogram) -> Result<DiscountSet> {
    let n1 = hist.n(1) as f64;
    let n2 = hist.n(2) as f64;
    let n3 = hist.n(3) as f64;
    let n4 = hist.n(4) as f64;
    if n1 == 0.0 && n2 == 0.0 && n3 == 0.0 && n4 == 0.0 {
        return Err(Error::Estimation(
            "cannot estimate tiered discounts: no counts of one through four".into(),
        ));
    }
    let d = if n1 + 2.0 * n2 > 0.0 { n1 / (n1 + 2.0 * n2) } else { 0.0 };
    let d1 = if n1 > 0.0 { 1.0 - 2.0 * d * n2 / n1 } else { d };
    let d1 = clamp_to_tier(d1, 1.0);
    let d2 = if n2 > 0.0 { 2.0 - 3.0 * d * n3 / n2 } else { 2.0 * d1 };
    let d2 = clamp_to_tier(d2, 2.0);
    let d3_plus = if n3 > 0.0 { 3.0 - 4.0 * d * n4 / n3 } else { d2 + (d2 - d1) };
    let d3_plus = clamp_to_tier(d3_plus, 3.0);
    Ok(DiscountSet::Tiered { d1, d2, d3_plus })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_data::desk_table;
    use approx::assert_relative_eq;

    #[test]
    fn single_discount_from_the_desk_histogram() {
        let (table, _) = desk_table();
        let d = estimate_discount_single(&table.histogram()).unwrap();
        assert_relative_eq!(d, 7.0 / 19.0, max_relative = 1e-12);
    }

    #[test]
    fn tiered_discounts_from_the_desk_histogram() {
        let (table, _) = desk_table();
        let set = estimate_discounts_triple(&table.histogram()).unwrap();
        let DiscountSet::Tiered { d1, d2, d3_plus } = set else {
            panic!("triple estimation must yield tiered discounts");
        };
        assert_relative_eq!(d1, 7.0 / 19.0, max_relative = 1e-12);
        assert_relative_eq!(d2, 41.0 / 38.0, max_relative = 1e-12);
        assert_relative_eq!(d3_plus, 173.0 / 95.0, max_relative = 1e-12);
    }

    #[test]
    fn single_discount_clamps_when_doubletons_vanish() {
        let hist = CountHistogram::from_counts([1, 1, 1, 5]);
        let d = estimate_discount_single(&hist).unwrap();
        assert_eq!(d, 1.0 - DISCOUNT_MARGIN);
    }

    #[test]
    fn single_discount_fails_without_low_counts() {
        let hist = CountHistogram::from_counts([5, 6, 7]);
        assert!(estimate_discount_single(&hist).is_err());
    }

    #[test]
    fn tiered_discounts_fall_back_on_an_all_singleton_histogram() {
        let hist = CountHistogram::from_counts([1, 1, 1]);
        let DiscountSet::Tiered { d1, d2, d3_plus } =
            estimate_discounts_triple(&hist).unwrap()
        else {
            unreachable!()
        };
        assert_eq!(d1, 1.0 - DISCOUNT_MARGIN);
        assert_relative_eq!(d2, 2.0 * d1, max_relative = 1e-12);
        assert_relative_eq!(d3_plus, d2 + (d2 - d1), max_relative = 1e-12);
    }

    #[test]
    fn tiered_discounts_fail_only_when_all_low_tiers_vanish() {
        assert!(estimate_discounts_triple(&CountHistogram::from_counts([5, 6])).is_err());
        assert!(estimate_discounts_triple(&CountHistogram::from_counts([4, 9])).is_ok());
    }

    #[test]
    fn subtracted_mass_matches_the_per_gram_sum() {
        let mut tiers = TierCounts::default();
        for c in [1u64, 1, 2, 3, 5, 9] {
            tiers.observe(c);
        }
        let single = DiscountSet::Single(0.4);
        assert_relative_eq!(single.subtracted_mass(&tiers), 0.4 * 6.0, max_relative = 1e-12);
        let tiered = DiscountSet::Tiered { d1: 0.5, d2: 1.0, d3_plus: 1.5 };
        let per_gram: f64 = [1u64, 1, 2, 3, 5, 9]
            .iter()
            .map(|&c| tiered.for_count(c).min(c as f64))
            .sum();
        assert_relative_eq!(tiered.subtracted_mass(&tiers), per_gram, max_relative = 1e-12);
    }

    #[test]
    fn validation_enforces_tier_bounds() {
        assert!(DiscountSet::Single(1.0).validate().is_ok());
        assert!(DiscountSet::Single(-0.1).validate().is_err());
        assert!(DiscountSet::Single(1.1).validate().is_err());
        assert!(DiscountSet::Tiered { d1: 0.5, d2: 2.0, d3_plus: 3.0 }.validate().is_ok());
        assert!(DiscountSet::Tiered { d1: 0.5, d2: 2.1, d3_plus: 1.0 }.validate().is_err());
        assert!(DiscountSet::Single(f64::NAN).validate().is_err());
    }
}
