use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, ToPrimitive, Zero};

/// Field element the subset kernels are written against.
///
/// `f64` accumulates with Neumaier compensation; [`BigRational`] is exact, so
/// its sums are plain.
pub trait Scalar: Num + Clone + Debug + PartialOrd + Send + Sync {
    /// Arithmetic never rounds.
    const EXACT: bool;

    /// Exact embedding of a finite `f64`.
    fn from_f64(x: f64) -> Self;

    fn from_usize(n: usize) -> Self;

    fn to_f64(&self) -> f64;

    /// Sum of the iterator, compensated where the representation rounds.
    fn sum_all<I: IntoIterator<Item = Self>>(iter: I) -> Self;

    /// Restrict a computed probability to `[0, 1]`. Only rounding can push it
    /// out, so the exact type leaves it untouched.
    fn clamp_unit(self) -> Self;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_f64(x: f64) -> Self {
        x
    }

    fn from_usize(n: usize) -> Self {
        n as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn sum_all<I: IntoIterator<Item = Self>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc.value()
    }

    fn clamp_unit(self) -> Self {
        self.clamp(0.0, 1.0)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite float")
    }

    fn from_usize(n: usize) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    /// Pairwise, so operand sizes stay balanced when denominators differ.
    fn sum_all<I: IntoIterator<Item = Self>>(iter: I) -> Self {
        let mut level: Vec<BigRational> = iter.into_iter().collect();
        if level.is_empty() {
            return BigRational::zero();
        }
        while level.len() > 1 {
            let mut next = Vec::with_capacity(level.len().div_ceil(2));
            let mut it = level.into_iter();
            while let Some(a) = it.next() {
                next.push(match it.next() {
                    Some(b) => a + b,
                    None => a,
                });
            }
            level = next;
        }
        level.pop().expect("non-empty")
    }

    fn clamp_unit(self) -> Self {
        debug_assert!(self >= BigRational::zero() && self <= BigRational::one());
        self
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let terms = [1.0, 1e100, 1.0, -1e100];
        let naive: f64 = terms.iter().sum();
        assert_eq!(naive, 0.0);
        assert_eq!(f64::sum_all(terms), 2.0);
    }

    #[test]
    fn rational_embedding_is_exact() {
        let r = BigRational::from_f64(0.1);
        assert_ne!(r, BigRational::new(1.into(), 10.into()));
        assert_eq!(Scalar::to_f64(&r), 0.1);
    }
}
