//! Exact rotation angles of the form `num * pi / 2^k`.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest denominator exponent accepted after normalisation.
pub const MAX_LOG2_DEN: u32 = 4096;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AngleError {
    #[error("denominator 2^{0} exceeds the 2^{MAX_LOG2_DEN} limit")]
    DenominatorTooLarge(u32),
    #[error("cannot parse angle `{0}`")]
    Parse(String),
}

/// An angle `num * pi / 2^log2_den`, reduced modulo `2*pi`.
///
/// The representation is canonical: `num` lies in `[0, 2^(log2_den + 1))`
/// and is odd unless the angle is zero, in which case `log2_den == 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DyadicAngle {
    num: BigUint,
    log2_den: u32,
}

impl DyadicAngle {
    pub fn zero() -> Self {
        DyadicAngle { num: BigUint::zero(), log2_den: 0 }
    }

    /// The angle `pi`.
    pub fn pi() -> Self {
        DyadicAngle { num: BigUint::one(), log2_den: 0 }
    }

    pub fn new(num: BigInt, log2_den: u32) -> Result<Self, AngleError> {
        let modulus = BigInt::one() << (log2_den as usize + 1);
        let r = num.mod_floor(&modulus);
        let mut num = r.to_biguint().expect("mod_floor is non-negative");
        let mut k = log2_den;
        if num.is_zero() {
            return Ok(Self::zero());
        }
        let tz = num.trailing_zeros().unwrap_or(0).min(k as u64) as u32;
        num >>= tz as usize;
        k -= tz;
        if k > MAX_LOG2_DEN {
            return Err(AngleError::DenominatorTooLarge(k));
        }
        Ok(DyadicAngle { num, log2_den: k })
    }

    /// Convenience constructor for small numerators.
    pub fn from_i64(num: i64, log2_den: u32) -> Result<Self, AngleError> {
        Self::new(BigInt::from(num), log2_den)
    }

    pub fn from_biguint(num: &BigUint, log2_den: u32) -> Result<Self, AngleError> {
        Self::new(BigInt::from_biguint(Sign::Plus, num.clone()), log2_den)
    }

    pub fn numerator(&self) -> &BigUint {
        &self.num
    }

    pub fn log2_den(&self) -> u32 {
        self.log2_den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let modulus = BigUint::one() << (self.log2_den as usize + 1);
        DyadicAngle { num: modulus - &self.num, log2_den: self.log2_den }
    }

    pub fn add(&self, other: &Self) -> Self {
        let k = self.log2_den.max(other.log2_den);
        let a = BigInt::from(self.scaled(k));
        let b = BigInt::from(other.scaled(k));
        Self::new(a + b, k).expect("sum denominator bounded by the operands")
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Half of the angle, taken as the representative in `[0, pi)`.
    pub fn half(&self) -> Result<Self, AngleError> {
        Self::new(BigInt::from(self.num.clone()), self.log2_den + 1)
    }

    /// Numerator in units of `pi / 2^k`; requires `k >= log2_den`.
    pub fn scaled(&self, k: u32) -> BigUint {
        assert!(k >= self.log2_den, "cannot scale 2^{} down to 2^{}", self.log2_den, k);
        &self.num << (k - self.log2_den) as usize
    }

    /// Numerator in units of `pi / 2^k` as a `u128`, when it fits.
    pub fn scaled_u128(&self, k: u32) -> Option<u128> {
        if k >= 127 || k < self.log2_den {
            return None;
        }
        let digits = self.num.to_u64_digits();
        let v: u128 = match digits.len() {
            0 => 0,
            1 => digits[0] as u128,
            2 => digits[0] as u128 | (digits[1] as u128) << 64,
            _ => return None,
        };
        Some(v << (k - self.log2_den))
    }

    /// Angle of an X-basis bit: 0 or pi.
    pub fn as_bit(&self) -> Option<bool> {
        if self.is_zero() {
            Some(false)
        } else if self.log2_den == 0 {
            Some(true)
        } else {
            None
        }
    }
}

impl fmt::Display for DyadicAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.log2_den)
    }
}

impl FromStr for DyadicAngle {
    type Err = AngleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AngleError::Parse(s.to_string());
        let (num, den) = s.trim().split_once("/2^").ok_or_else(bad)?;
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let k: u32 = den.trim().parse().map_err(|_| bad())?;
        DyadicAngle::new(num, k)
    }
}

impl TryFrom<String> for DyadicAngle {
    type Error = AngleError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<DyadicAngle> for String {
    fn from(a: DyadicAngle) -> String {
        a.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalises_even_numerators() {
        let a = DyadicAngle::from_i64(6, 3).unwrap();
        assert_eq!(a.numerator(), &BigUint::from(3u32));
        assert_eq!(a.log2_den(), 2);
    }

    #[test]
    fn reduces_mod_two_pi() {
        assert!(DyadicAngle::from_i64(4, 1).unwrap().is_zero());
        let a = DyadicAngle::from_i64(-1, 2).unwrap();
        assert_eq!(a, DyadicAngle::from_i64(7, 2).unwrap());
    }

    #[test]
    fn rejects_huge_denominators() {
        assert_eq!(
            DyadicAngle::from_i64(1, 5000),
            Err(AngleError::DenominatorTooLarge(5000))
        );
        assert!(DyadicAngle::from_i64(1 << 20, 4110).is_ok());
    }

    #[test]
    fn text_round_trip() {
        let a = DyadicAngle::from_i64(-3, 5).unwrap();
        let b: DyadicAngle = a.to_string().parse().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bits() {
        assert_eq!(DyadicAngle::pi().as_bit(), Some(true));
        assert_eq!(DyadicAngle::zero().as_bit(), Some(false));
        assert_eq!(DyadicAngle::from_i64(1, 1).unwrap().as_bit(), None);
    }
}
