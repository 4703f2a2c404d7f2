//! Cost scalars the solvers are generic over: `i128` and `BigInt` for scaled
//! exact instances, `f64` for float instances.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::num::{common_denominator, Rational};

/// Reduced costs at or below this are treated as zero in float mode.
pub const FLOAT_TIGHT: f64 = 1e-11;

pub(crate) trait Scalar: Clone + PartialOrd + Debug + Send + Sync {
    fn zero() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    /// Whether a (nonnegative) reduced cost counts as zero.
    fn is_tight(&self) -> bool;
    /// Float round-off can push reduced costs slightly below zero.
    fn clamp_nonneg(self) -> Self;
}

impl Scalar for i128 {
    fn zero() -> Self {
        0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn is_tight(&self) -> bool {
        *self == 0
    }
    fn clamp_nonneg(self) -> Self {
        self
    }
}

impl Scalar for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn is_tight(&self) -> bool {
        self.is_zero()
    }
    fn clamp_nonneg(self) -> Self {
        self
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn is_tight(&self) -> bool {
        *self <= FLOAT_TIGHT
    }
    fn clamp_nonneg(self) -> Self {
        self.max(0.0)
    }
}

/// Exact costs scaled to integers over a common denominator.
pub(crate) enum Scaled {
    Small(Vec<i128>),
    Big(Vec<BigInt>),
}

/// Returns `(D, ints)` with `ints[k] = values[k]·D`. Uses `i128` when
/// `headroom_bits` of slack remain above the largest magnitude.
pub(crate) fn integerize(values: &[Rational], headroom_bits: u64) -> (BigInt, Scaled) {
    let den = common_denominator(values);
    let ints: Vec<BigInt> = values
        .iter()
        .map(|r| r.numer() * (&den / r.denom()))
        .collect();
    let max_bits = ints.iter().map(|v| v.bits()).max().unwrap_or(0);
    if max_bits + headroom_bits < 120 {
        let small = ints
            .iter()
            .map(|v| v.to_i128().expect("fits by bit count"))
            .collect();
        (den, Scaled::Small(small))
    } else {
        (den, Scaled::Big(ints))
    }
}

/// Bits needed to hold `n` as a multiplier, plus a margin.
pub(crate) fn headroom(n: usize) -> u64 {
    (usize::BITS - n.leading_zeros()) as u64 + 8
}
