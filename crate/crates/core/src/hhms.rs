//! Closed-form entropy rate for `a = 2`, steps uniform on {−1, 0, 1}.
//!
//! With `e(i, j)` the number of subtractions the subtractive Euclidean
//! algorithm makes going from a coprime pair `(i, j)` down to `(1, 1)`, let
//! `A_n = Σ_{i<j coprime, e(i,j)=n} j·ln j` and
//! `L(z) = (1 − 3z)²·Σ_n A_n zⁿ`. Then the entropy rate in nats is
//! `H = ln 3 − (3/2)·L(1/3)`, i.e. `H / ln 2 = 0.98876587…`.
//!
//! The termination convention is the one that reproduces that value: stopping
//! at `(1, 1)`, so level 1 is `{(1, 2)}`. Stopping at a zero entry instead
//! shifts every level by one and multiplies `L(1/3)` by 3.
//!
//! Level `n` holds exactly `2^{n−1}` pairs: every pair `(i, j)` has the two
//! predecessors `(j, i + j)` and `(i, i + j)` one level up.

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::gcd;
use crate::error::{Error, Result};
use crate::scalar::KahanSum;

/// Deepest level `enumerate_levels` accepts.
pub const MAX_LEVELS: u32 = 40;

/// Subtree roots are split off at this depth for parallel enumeration.
const SPLIT_DEPTH: u32 = 10;

/// Subtractions of the subtractive Euclidean algorithm from `(i, j)` to `(1, 1)`.
pub fn euclid_subtractions(i: u64, j: u64) -> Result<u64> {
    if i == 0 || j == 0 {
        return Err(Error::InvalidArgument("entries must be positive".into()));
    }
    if gcd(i, j) != 1 {
        return Err(Error::InvalidArgument(format!("gcd({i}, {j}) ≠ 1")));
    }
    let (mut x, mut y) = (i.max(j), i.min(j));
    let mut count = 0;
    while y > 0 {
        count += x / y;
        (x, y) = (y, x % y);
    }
    // The quotient sum runs down to (1, 0); the last subtraction is not counted.
    Ok(count - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelSum {
    pub level: u32,
    pub pair_count: u64,
    /// `A_n = Σ j·ln j` over the level, in nats.
    pub a_n: f64,
    pub max_j: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    count: u64,
    sum: KahanSum,
    max_j: u64,
}

impl Acc {
    #[inline]
    fn push(&mut self, j: u64, multiplicity: u64) {
        let jf = j as f64;
        self.sum.add(multiplicity as f64 * jf * jf.ln());
        self.count += multiplicity;
        self.max_j = self.max_j.max(j);
    }

    fn merge(&mut self, other: &Acc) {
        self.count += other.count;
        self.sum.add(other.sum.value());
        self.max_j = self.max_j.max(other.max_j);
    }
}

/// Depth-first walk below `(i, j)` at `level`, filling `acc[1..=max_level]`.
/// The deepest level is read off its parents, whose two predecessors share
/// the larger entry `i + j`.
fn walk(i: u64, j: u64, level: u32, max_level: u32, acc: &mut [Acc]) {
    acc[level as usize].push(j, 1);
    if level + 1 == max_level {
        acc[max_level as usize].push(i + j, 2);
    } else if level < max_level {
        walk(j, i + j, level + 1, max_level, acc);
        walk(i, i + j, level + 1, max_level, acc);
    }
}

/// Pairs at `depth` below the root, left to right, to hand out as subtrees.
fn frontier(depth: u32) -> Vec<(u64, u64)> {
    let mut nodes = vec![(1u64, 2u64)];
    for _ in 1..depth {
        nodes = nodes
            .into_iter()
            .flat_map(|(i, j)| [(j, i + j), (i, i + j)])
            .collect();
    }
    nodes
}

/// Level sums for `n = 1..=max_level`.
pub fn enumerate_levels(max_level: u32) -> Result<Vec<LevelSum>> {
    if max_level == 0 {
        return Ok(Vec::new());
    }
    if max_level > MAX_LEVELS {
        return Err(Error::CapExceeded {
            what: "hhms level",
            got: max_level as u64,
            cap: MAX_LEVELS as u64,
        });
    }
    let len = max_level as usize + 1;
    let mut total = vec![Acc::default(); len];
    let split = SPLIT_DEPTH.min(max_level);
    // Levels above the split are small; enumerate them directly.
    let mut head = vec![Acc::default(); len];
    let mut nodes = vec![(1u64, 2u64)];
    for level in 1..split {
        for &(_, j) in &nodes {
            head[level as usize].push(j, 1);
        }
        nodes = nodes
            .into_iter()
            .flat_map(|(i, j)| [(j, i + j), (i, i + j)])
            .collect();
    }
    debug_assert_eq!(nodes, frontier(split));
    let parts: Vec<Vec<Acc>> = nodes
        .par_iter()
        .map(|&(i, j)| {
            let mut acc = vec![Acc::default(); len];
            walk(i, j, split, max_level, &mut acc);
            acc
        })
        .collect();
    for (t, h) in total.iter_mut().zip(&head) {
        t.merge(h);
    }
    for part in &parts {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok((1..=max_level)
        .map(|n| {
            let a = &total[n as usize];
            LevelSum {
                level: n,
                pair_count: a.count,
                a_n: a.sum.value(),
                max_j: a.max_j,
            }
        })
        .collect())
}

/// A single level.
pub fn enumerate_level(n: u32) -> Result<LevelSum> {
    if n == 0 {
        return Err(Error::InvalidArgument("levels start at 1".into()));
    }
    Ok(*enumerate_levels(n)?.last().expect("nonempty"))
}

/// Every pair at level `n`, by walking the predecessor tree. Exponential in
/// `n`; for consistency checks at small levels.
pub fn level_pairs(n: u32) -> Vec<(u64, u64)> {
    if n == 0 {
        return Vec::new();
    }
    frontier(n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesValue {
    pub levels: u32,
    /// Partial sum `Σ_{n≤N} b_n·3⁻ⁿ ≈ L(1/3)`.
    pub value: f64,
    /// `|term_N| + |term_{N−1}| + |term_{N−2}|`, an empirical remainder indicator.
    pub remainder: f64,
    /// `b_n·3⁻ⁿ` with `b_n = A_n − 6A_{n−1} + 9A_{n−2}`.
    pub terms: Vec<f64>,
    /// Raw `A_n·3⁻ⁿ`, which grow linearly in `n`.
    pub raw_terms: Vec<f64>,
}

/// `L(1/3)` from precomputed level sums.
pub fn series_from_levels(levels: &[LevelSum]) -> SeriesValue {
    let a = |k: usize| -> f64 {
        if k == 0 {
            0.0
        } else {
            levels[k - 1].a_n
        }
    };
    let mut terms = Vec::with_capacity(levels.len());
    let mut raw_terms = Vec::with_capacity(levels.len());
    let mut sum = KahanSum::default();
    for n in 1..=levels.len() {
        let scale = 3f64.powi(-(n as i32));
        let b = a(n) - 6.0 * a(n - 1) + 9.0 * if n >= 2 { a(n - 2) } else { 0.0 };
        let t = b * scale;
        terms.push(t);
        raw_terms.push(a(n) * scale);
        sum.add(t);
    }
    let remainder = terms.iter().rev().take(3).map(|t| t.abs()).sum();
    SeriesValue {
        levels: levels.len() as u32,
        value: sum.value(),
        remainder,
        terms,
        raw_terms,
    }
}

/// `L(1/3)` from the first `n_max` levels.
pub fn l_at_one_third(n_max: u32) -> Result<SeriesValue> {
    if n_max < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 levels, got {n_max}")));
    }
    Ok(series_from_levels(&enumerate_levels(n_max)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyRatio {
    pub levels: Vec<LevelSum>,
    pub series: SeriesValue,
    /// `H` in nats.
    pub entropy_nats: f64,
    /// `H / ln 2`.
    pub ratio: f64,
    /// `ln 2 / H`, the cutoff constant in units of `log₂ q`.
    pub cutoff_constant: f64,
}

/// `H / ln 2 = (ln 3 − 1.5·L(1/3)) / ln 2`.
pub fn entropy_ratio(n_max: u32) -> Result<EntropyRatio> {
    if n_max < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 levels, got {n_max}")));
    }
    let levels = enumerate_levels(n_max)?;
    let series = series_from_levels(&levels);
    Ok(ratio_from_series(levels, series))
}

fn ratio_from_series(levels: Vec<LevelSum>, series: SeriesValue) -> EntropyRatio {
    let h = 3f64.ln() - 1.5 * series.value;
    let ratio = h / 2f64.ln();
    EntropyRatio {
        levels,
        series,
        entropy_nats: h,
        ratio,
        cutoff_constant: 1.0 / ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fib(k: u32) -> u64 {
        let (mut a, mut b) = (0u64, 1u64);
        for _ in 0..k {
            (a, b) = (b, a + b);
        }
        a
    }

    #[test]
    fn subtraction_counts() {
        assert_eq!(euclid_subtractions(1, 1), Ok(0));
        assert_eq!(euclid_subtractions(1, 2), Ok(1));
        assert_eq!(euclid_subtractions(2, 3), Ok(2));
        assert_eq!(euclid_subtractions(3, 5), Ok(3));
        assert_eq!(euclid_subtractions(5, 3), Ok(3));
        assert_eq!(euclid_subtractions(1, 7), Ok(6));
        assert!(euclid_subtractions(4, 6).is_err());
        assert!(euclid_subtractions(0, 1).is_err());
    }

    /// Direct simulation, one subtraction at a time.
    fn slow_count(mut i: u64, mut j: u64) -> u64 {
        let mut c = 0;
        while (i, j) != (1, 1) {
            if i > j {
                i -= j;
            } else {
                j -= i;
            }
            c += 1;
        }
        c
    }

    #[test]
    fn fast_count_matches_simulation() {
        for j in 1..200u64 {
            for i in 1..=j {
                if gcd(i, j) == 1 {
                    assert_eq!(euclid_subtractions(i, j).unwrap(), slow_count(i, j));
                }
            }
        }
    }

    #[test]
    fn level_one() {
        let l = enumerate_level(1).unwrap();
        assert_eq!(l.pair_count, 1);
        assert!((l.a_n - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(l.max_j, 2);
    }

    #[test]
    fn levels_double_and_match_inverse_map() {
        let levels = enumerate_levels(20).unwrap();
        for l in &levels {
            assert_eq!(l.pair_count, 1 << (l.level - 1));
            assert_eq!(l.max_j, fib(l.level + 2));
        }
        for n in 1..=12 {
            let pairs = level_pairs(n);
            let a: f64 = pairs.iter().map(|&(_, j)| j as f64 * (j as f64).ln()).sum();
            assert!((a - levels[n as usize - 1].a_n).abs() < 1e-9 * a);
            for (i, j) in pairs {
                assert!(i < j);
                assert_eq!(euclid_subtractions(i, j).unwrap(), n as u64);
            }
        }
    }

    #[test]
    fn split_and_unsplit_enumeration_agree() {
        // max_level below the split depth takes the head-only path.
        let small = enumerate_levels(8).unwrap();
        let big = enumerate_levels(14).unwrap();
        for (a, b) in small.iter().zip(&big) {
            assert_eq!(a.pair_count, b.pair_count);
            assert!((a.a_n - b.a_n).abs() <= 1e-12 * a.a_n);
        }
    }

    #[test]
    fn brute_force_scan_matches_levels() {
        const N: u32 = 18;
        let bound = fib(N + 2);
        let mut brute: Vec<Vec<(u64, u64)>> = vec![Vec::new(); N as usize + 1];
        for j in 2..=bound {
            for i in 1..j {
                if gcd(i, j) == 1 {
                    let e = euclid_subtractions(i, j).unwrap();
                    if e <= N as u64 {
                        brute[e as usize].push((i, j));
                    }
                }
            }
        }
        for n in 1..=N {
            let mut tree = level_pairs(n);
            let b = &mut brute[n as usize];
            b.sort_unstable();
            tree.sort_unstable();
            assert_eq!(*b, tree, "level {n}");
        }
    }

    #[test]
    fn series_behaviour() {
        // Past level 24 the terms are below double-precision resolution.
        let s = l_at_one_third(24).unwrap();
        for n_max in 12..=24usize {
            assert!(s.terms[n_max - 1].abs() < s.terms[n_max - 5].abs(), "n_max = {n_max}");
        }
        // Raw terms grow by a near-constant increment.
        let diffs: Vec<f64> = s.raw_terms.windows(2).map(|w| w[1] - w[0]).collect();
        for d in &diffs[4..] {
            assert!((d - diffs[diffs.len() - 1]).abs() < 1e-3);
            assert!(*d > 0.2);
        }
        assert!(l_at_one_third(3).is_err());
        assert!(enumerate_levels(41).unwrap_err().is_cap());
    }

    #[test]
    fn ratio_stabilizes() {
        let r12 = entropy_ratio(12).unwrap();
        let r16 = entropy_ratio(16).unwrap();
        let r20 = entropy_ratio(20).unwrap();
        assert!((r12.ratio - r16.ratio).abs() < r12.series.remainder);
        assert!((r16.ratio - r20.ratio).abs() < r16.series.remainder);
        assert!((r20.ratio - 0.9887658714).abs() < 1e-8);
    }
}
