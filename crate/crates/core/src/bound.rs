//! Exact probability bounds attached to randomized results.

use std::fmt;
use std::ops::Add;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

/// A probability in `[0, 1]` kept as an exact rational.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FailureBound(BigRational);

impl FailureBound {
    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn one() -> Self {
        Self(BigRational::one())
    }

    /// `min(1, num / den)`; a zero denominator yields 1.
    pub fn ratio(num: &BigUint, den: &BigUint) -> Self {
        if den.is_zero() {
            return Self::one();
        }
        let r = BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()));
        Self(r.min(BigRational::one()))
    }

    pub fn pow(&self, e: usize) -> Self {
        let mut acc = BigRational::one();
        for _ in 0..e {
            acc *= &self.0;
        }
        Self(acc)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn approx(&self) -> f64 {
        self.0.to_f64().unwrap_or(1.0)
    }
}

impl Add for FailureBound {
    type Output = FailureBound;

    /// Union bound, saturating at 1.
    fn add(self, rhs: Self) -> Self {
        Self((self.0 + rhs.0).min(BigRational::one()))
    }
}

impl std::iter::Sum for FailureBound {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}

impl fmt::Display for FailureBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for FailureBound {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("FailureBound", 2)?;
        st.serialize_field("exact", &self.0.to_string())?;
        st.serialize_field("approx", &format!("{:.3e}", self.approx()))?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_saturates_and_sums() {
        let b = FailureBound::ratio(&BigUint::from(3u32), &BigUint::from(4u32));
        assert_eq!(b.to_string(), "3/4");
        assert_eq!((b.clone() + b.clone()).to_string(), "1");
        assert_eq!(b.pow(2).to_string(), "9/16");
        assert_eq!(FailureBound::ratio(&BigUint::from(5u32), &BigUint::from(2u32)), FailureBound::one());
        let total: FailureBound = vec![FailureBound::zero(), b].into_iter().sum();
        assert_eq!(total.to_string(), "3/4");
    }
}
