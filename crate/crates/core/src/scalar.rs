//! Scalar types a probability mass can be stored in.
//!
//! Everything on the physical side (convolution, push-forward, reduction mod q,
//! exact evolution) is generic over [`Mass`], so the same code runs in `f64`
//! for speed and in [`BigRational`] when an oracle value has to be exact.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive};

pub trait Mass: Clone + Debug + PartialOrd + Num + Signed + Send + Sync + 'static {
    /// Exact (or nearest representable) value of `num / den`.
    fn from_ratio(num: u64, den: u64) -> Self;

    fn to_f64(&self) -> f64;

    /// Whether arithmetic in this type is exact.
    const EXACT: bool;

    /// Sum of a sequence. Floating-point implementations use compensated summation.
    fn sum_of<I: IntoIterator<Item = Self>>(iter: I) -> Self {
        iter.into_iter().fold(Self::zero(), |acc, x| acc + x)
    }
}

impl Mass for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn sum_of<I: IntoIterator<Item = Self>>(iter: I) -> Self {
        let mut acc = KahanSum::default();
        for x in iter {
            acc.add(x);
        }
        acc.value()
    }
}

impl Mass for f32 {
    const EXACT: bool = false;

    fn from_ratio(num: u64, den: u64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }

    fn sum_of<I: IntoIterator<Item = Self>>(iter: I) -> Self {
        let mut acc = KahanSum::default();
        for x in iter {
            acc.add(x as f64);
        }
        acc.value() as f32
    }
}

impl Mass for BigRational {
    const EXACT: bool = true;

    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an `f64` iterator.
pub fn ksum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<KahanSum>().value()
}

/// `x·ln(1/x)` with the convention `0·ln 0 = 0`.
#[inline]
pub fn neg_xlogx(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.ln()
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_beats_naive_on_cancellation() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(ksum(xs), 2.0);
    }

    #[test]
    fn rational_sum_is_exact() {
        let third = BigRational::from_ratio(1, 3);
        let s = BigRational::sum_of(vec![third.clone(), third.clone(), third]);
        assert_eq!(s, BigRational::from_ratio(1, 1));
    }

    #[test]
    fn entropy_term_convention() {
        assert_eq!(neg_xlogx(0.0), 0.0);
        assert_eq!(neg_xlogx(1.0), 0.0);
    }
}
