//! Exact dyadic rationals `p / 2^k`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::Error;

/// `numerator / 2^exponent`, kept canonical: the numerator is odd, or zero with
/// exponent zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    numerator: BigInt,
    exponent: u32,
}

impl Dyadic {
    pub fn new(numerator: impl Into<BigInt>, exponent: u32) -> Self {
        let mut d = Self {
            numerator: numerator.into(),
            exponent,
        };
        d.canonicalize();
        d
    }

    pub fn zero() -> Self {
        Self::new(0, 0)
    }

    pub fn one() -> Self {
        Self::new(1, 0)
    }

    /// `2^-k`.
    pub fn pow2_neg(k: u32) -> Self {
        Self::new(1, k)
    }

    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    fn canonicalize(&mut self) {
        if self.numerator.is_zero() {
            self.exponent = 0;
            return;
        }
        let tz = self
            .numerator
            .trailing_zeros()
            .map_or(0, |t| t.min(self.exponent as u64)) as u32;
        self.numerator >>= tz as usize;
        self.exponent -= tz;
    }

    /// Numerator rescaled to denominator `2^exp` (`exp >= self.exponent`).
    fn scaled_numerator(&self, exp: u32) -> BigInt {
        &self.numerator << (exp - self.exponent) as usize
    }

    /// Multiply by `2^shift` (shift may be negative).
    pub fn mul_pow2(&self, shift: i64) -> Self {
        if shift >= 0 {
            let s = shift as u64;
            if s <= self.exponent as u64 {
                Self::new(self.numerator.clone(), self.exponent - s as u32)
            } else {
                Self::new(
                    &self.numerator << (s - self.exponent as u64) as usize,
                    0,
                )
            }
        } else {
            Self::new(self.numerator.clone(), self.exponent + (-shift) as u32)
        }
    }

    pub fn mul_int(&self, factor: u64) -> Self {
        Self::new(&self.numerator * BigInt::from(factor), self.exponent)
    }

    /// Number of integers `m >= 1` with `m / denominator < self`.
    ///
    /// This counts the positive multiples of `1/denominator` lying strictly
    /// below the value, with exact integer arithmetic.
    pub fn multiples_strictly_below(&self, denominator: &BigUint) -> BigUint {
        if !self.numerator.is_positive() {
            return BigUint::zero();
        }
        let x = self.numerator.magnitude() * denominator;
        let y = BigUint::one() << self.exponent as usize;
        let ceil = x.div_ceil(&y);
        if ceil.is_zero() {
            BigUint::zero()
        } else {
            ceil - BigUint::one()
        }
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exponent.max(other.exponent);
        self.scaled_numerator(e).cmp(&other.scaled_numerator(e))
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        let e = self.exponent.max(rhs.exponent);
        Dyadic::new(self.scaled_numerator(e) + rhs.scaled_numerator(e), e)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        let e = self.exponent.max(rhs.exponent);
        Dyadic::new(self.scaled_numerator(e) - rhs.scaled_numerator(e), e)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        &self + &rhs
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        &self - &rhs
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic::new(-self.numerator, self.exponent)
    }
}

impl std::iter::Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Self {
        iter.fold(Dyadic::zero(), |a, b| &a + &b)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.numerator, self.exponent)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::Parse(format!("invalid dyadic {s:?}; expected p/2^k"));
        let (num, den) = s.trim().split_once("/2^").ok_or_else(bad)?;
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let exp: u32 = den.trim().parse().map_err(|_| bad())?;
        Ok(Dyadic::new(num, exp))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form() {
        assert_eq!(Dyadic::new(4, 3).to_string(), "1/2^1");
        assert_eq!(Dyadic::new(0, 7).to_string(), "0/2^0");
        assert_eq!(Dyadic::new(6, 0).to_string(), "6/2^0");
        assert_eq!(Dyadic::new(3, 2), "3/2^2".parse().unwrap());
    }

    #[test]
    fn arithmetic_is_exact() {
        let a = Dyadic::pow2_neg(2);
        let b = Dyadic::pow2_neg(1);
        assert_eq!(&a + &b, Dyadic::new(3, 2));
        assert_eq!(&b - &a, a);
        assert_eq!(&a - &b, Dyadic::new(-1, 2));
        assert!(a < b);
        assert_eq!(Dyadic::new(3, 2).mul_pow2(2), Dyadic::new(3, 0));
        assert_eq!(Dyadic::new(3, 0).mul_pow2(-3), Dyadic::new(3, 3));
        assert_eq!(Dyadic::one().mul_pow2(100).mul_pow2(-100), Dyadic::one());
    }

    #[test]
    fn multiples_strictly_below_counts() {
        let den = BigUint::from(6u32);
        // 1/2 = 3/6: multiples 1/6, 2/6 lie strictly below.
        assert_eq!(Dyadic::new(1, 1).multiples_strictly_below(&den), 2u32.into());
        assert_eq!(Dyadic::zero().multiples_strictly_below(&den), 0u32.into());
        assert_eq!(Dyadic::one().multiples_strictly_below(&den), 5u32.into());
        // 1/8 < 1/6
        assert_eq!(Dyadic::new(1, 3).multiples_strictly_below(&den), 0u32.into());
        // brute force cross-check
        for num in 0..=64u32 {
            let d = Dyadic::new(num, 6);
            let mut count = 0u32;
            for m in 1..=64u32 {
                // m/6 < num/64  <=>  64 m < 6 num
                if 64 * m < 6 * num {
                    count += 1;
                }
            }
            assert_eq!(d.multiples_strictly_below(&den), count.into(), "num={num}");
        }
    }
}
