//! Scalar fields used by every probe.
//!
//! Two fields are provided: a prime field `F_p` with `p > 2^31` (default
//! `p = 2^61 - 1`) and the rationals. Both sit behind the [`Ring`] and
//! [`Field`] traits so that parameterizations, elimination and probes are
//! written once.

use std::fmt::Debug;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LinalgError;

/// `2^61 - 1`, a Mersenne prime.
pub const DEFAULT_MODULUS: u64 = (1u64 << 61) - 1;

/// Default half-width of the integer box sampled in rational mode.
pub const DEFAULT_RATIONAL_BOUND: u64 = 1000;

/// Commutative ring with unity. The element type carries no context; all
/// arithmetic goes through the ring value so runtime moduli are possible.
pub trait Ring {
    type Elem: Clone + Debug + PartialEq + Send + Sync;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_i64(&self, v: i64) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;

    fn neg(&self, a: &Self::Elem) -> Self::Elem {
        self.sub(&self.zero(), a)
    }

    fn pow(&self, a: &Self::Elem, mut e: u32) -> Self::Elem {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }
}

/// A field with exact equality, uniform sampling and an elimination hook.
pub trait Field: Ring + Clone + Debug + Send + Sync {
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
    fn is_zero(&self, a: &Self::Elem) -> bool;

    /// Draws one scalar. Prime fields sample uniformly from `F_p`; the
    /// rationals sample integers from `[-B, B]`.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Elem;

    /// Size of the sampling set, used for Schwartz–Zippel reporting.
    fn sample_space(&self) -> BigUint;

    fn mode(&self) -> FieldMode;

    /// Canonical textual form used in JSON output.
    fn render(&self, a: &Self::Elem) -> String;

    /// Forward elimination to row echelon form. The default is straight
    /// Gaussian elimination taking the first nonzero entry of each column as
    /// pivot; fields may override with a fraction-free scheme.
    fn echelon(&self, rows: usize, cols: usize, data: Vec<Self::Elem>) -> super::Echelon<Self::Elem> {
        super::elim::gaussian_echelon(self, rows, cols, data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FieldMode {
    #[default]
    PrimeField,
    Rational,
}

/// User-facing field configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldCfg {
    pub modulus: u64,
    pub mode: FieldMode,
    /// Box half-width for rational-mode sampling.
    pub rational_bound: u64,
}

impl Default for FieldCfg {
    fn default() -> Self {
        Self {
            modulus: DEFAULT_MODULUS,
            mode: FieldMode::PrimeField,
            rational_bound: DEFAULT_RATIONAL_BOUND,
        }
    }
}

impl FieldCfg {
    pub fn prime(modulus: u64) -> Self {
        Self {
            modulus,
            ..Self::default()
        }
    }

    pub fn rational() -> Self {
        Self {
            mode: FieldMode::Rational,
            ..Self::default()
        }
    }

    /// Checks the invariants: modulus prime and `> 2^31` in prime mode,
    /// a positive sampling box in rational mode.
    pub fn validate(&self) -> Result<(), LinalgError> {
        match self.mode {
            FieldMode::PrimeField => {
                if self.modulus <= (1u64 << 31) {
                    return Err(LinalgError::BadModulus {
                        modulus: self.modulus,
                        reason: "must exceed 2^31",
                    });
                }
                if !is_prime_u64(self.modulus) {
                    return Err(LinalgError::BadModulus {
                        modulus: self.modulus,
                        reason: "not prime",
                    });
                }
                Ok(())
            }
            FieldMode::Rational => {
                if self.rational_bound == 0 {
                    return Err(LinalgError::BadSamplingBound);
                }
                Ok(())
            }
        }
    }
}

/// `F_p` with a runtime modulus. Elements are reduced `u64` residues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self, LinalgError> {
        FieldCfg::prime(p).validate()?;
        Ok(Self { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    /// Maps a residue to its symmetric representative.
    pub fn signed(&self, a: u64) -> i128 {
        if a > self.p / 2 {
            a as i128 - self.p as i128
        } else {
            a as i128
        }
    }

    fn reduce_i128(&self, v: i128) -> u64 {
        v.rem_euclid(self.p as i128) as u64
    }
}

impl Default for PrimeField {
    fn default() -> Self {
        Self { p: DEFAULT_MODULUS }
    }
}

impl Ring for PrimeField {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1
    }
    fn from_i64(&self, v: i64) -> u64 {
        self.reduce_i128(v as i128)
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 * *b as u128) % self.p as u128) as u64
    }
    fn neg(&self, a: &u64) -> u64 {
        if *a == 0 {
            0
        } else {
            self.p - a
        }
    }
}

impl Field for PrimeField {
    fn inv(&self, a: &u64) -> Option<u64> {
        if *a == 0 {
            return None;
        }
        // extended Euclid on (a, p)
        let (mut r0, mut r1) = (self.p as i128, *a as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Some(self.reduce_i128(t0))
    }

    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.gen_range(0..self.p)
    }

    fn sample_space(&self) -> BigUint {
        BigUint::from(self.p)
    }

    fn mode(&self) -> FieldMode {
        FieldMode::PrimeField
    }

    fn render(&self, a: &u64) -> String {
        a.to_string()
    }
}

/// The rational numbers, with integer sampling from `[-bound, bound]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rationals {
    bound: u64,
}

impl Rationals {
    pub fn new(bound: u64) -> Result<Self, LinalgError> {
        if bound == 0 {
            return Err(LinalgError::BadSamplingBound);
        }
        Ok(Self { bound })
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }
}

impl Default for Rationals {
    fn default() -> Self {
        Self {
            bound: DEFAULT_RATIONAL_BOUND,
        }
    }
}

impl Ring for Rationals {
    type Elem = BigRational;

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn from_i64(&self, v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
}

impl Field for Rationals {
    fn inv(&self, a: &BigRational) -> Option<BigRational> {
        if a.is_zero() {
            None
        } else {
            Some(a.recip())
        }
    }

    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BigRational {
        let b = self.bound as i64;
        self.from_i64(rng.gen_range(-b..=b))
    }

    fn sample_space(&self) -> BigUint {
        BigUint::from(2 * self.bound + 1)
    }

    fn mode(&self) -> FieldMode {
        FieldMode::Rational
    }

    fn render(&self, a: &BigRational) -> String {
        if a.is_integer() {
            a.numer().to_string()
        } else {
            format!("{}/{}", a.numer(), a.denom())
        }
    }

    fn echelon(&self, rows: usize, cols: usize, data: Vec<BigRational>) -> super::Echelon<BigRational> {
        super::elim::bareiss_echelon(rows, cols, data)
    }
}

/// Deterministic Miller–Rabin for all `u64`.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in SMALL {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut a: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, a);
            }
            a = mulmod(a, a);
            e >>= 1;
        }
        acc
    };
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in SMALL {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Lifts a rational that is known to be an integer into `i128`, if it fits.
pub fn rational_to_i128(a: &BigRational) -> Option<i128> {
    if !a.is_integer() {
        return None;
    }
    let n = a.numer();
    if n.abs() > BigInt::from(i128::MAX) {
        return None;
    }
    n.to_i128()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn default_modulus_is_prime() {
        assert!(is_prime_u64(DEFAULT_MODULUS));
        assert!(FieldCfg::default().validate().is_ok());
    }

    #[test]
    fn rejects_small_or_composite_modulus() {
        assert!(PrimeField::new(65_537).is_err());
        assert!(PrimeField::new((1u64 << 61) + 1).is_err());
        assert!(PrimeField::new(4_294_967_311).is_ok());
    }

    #[test]
    fn inverse_roundtrip() {
        let f = PrimeField::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = f.sample(&mut rng);
            if a == 0 {
                continue;
            }
            let b = f.inv(&a).unwrap();
            assert_eq!(f.mul(&a, &b), 1);
        }
        assert_eq!(f.inv(&0), None);
    }

    #[test]
    fn negative_lifting() {
        let f = PrimeField::default();
        assert_eq!(f.from_i64(-1), DEFAULT_MODULUS - 1);
        assert_eq!(f.signed(f.from_i64(-7)), -7);
    }

    #[test]
    fn rational_sampling_stays_in_box() {
        let q = Rationals::new(5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let v = rational_to_i128(&q.sample(&mut rng)).unwrap();
            assert!((-5..=5).contains(&v));
        }
    }
}
