//! Scalars in Z/p^K for an odd prime p: the coefficient ring everything
//! else is built on.
//!
//! A value is stored as its canonical residue in [0, p^K). The p-adic
//! valuation of the zero residue is reported as K, the precision itself:
//! "zero as far as this precision can see".

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from scalar-level arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PadicError {
    /// The prime must be odd and actually prime.
    #[error("p must be an odd prime, got {0}")]
    NotOddPrime(u64),
    /// The precision must be at least 1 and p^K must fit in 64 bits.
    #[error("precision K={precision} out of range for p={p} (need 1 <= K and p^K < 2^64)")]
    PrecisionOutOfRange { p: u64, precision: u32 },
    /// Inversion of a residue divisible by p.
    #[error("residue {value} has valuation {valuation} > 0 and is not invertible")]
    NonUnit { value: u64, valuation: u32 },
}

/// A fixed odd prime together with a working precision K; all arithmetic
/// happens modulo p^K.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeContext {
    p: u64,
    precision: u32,
    modulus: u64,
}

fn is_odd_prime(n: u64) -> bool {
    if n < 3 || n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

impl PrimeContext {
    /// Validates p (odd prime) and K (at least 1, p^K representable in u64).
    pub fn new(p: u64, precision: u32) -> Result<Self, PadicError> {
        if !is_odd_prime(p) {
            return Err(PadicError::NotOddPrime(p));
        }
        if precision == 0 {
            return Err(PadicError::PrecisionOutOfRange { p, precision });
        }
        let modulus = p
            .checked_pow(precision)
            .ok_or(PadicError::PrecisionOutOfRange { p, precision })?;
        Ok(PrimeContext {
            p,
            precision,
            modulus,
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// p^K, the modulus of the coefficient ring.
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Same prime, possibly different precision.
    pub fn with_precision(&self, precision: u32) -> Result<Self, PadicError> {
        PrimeContext::new(self.p, precision)
    }

    /// Canonical residue of a signed integer.
    pub fn reduce_i64(&self, n: i64) -> u64 {
        let m = self.modulus as i128;
        let r = (n as i128).rem_euclid(m);
        r as u64
    }

    /// Canonical residue of an unsigned integer.
    pub fn reduce_u64(&self, n: u64) -> u64 {
        n % self.modulus
    }

    /// p-adic valuation of a residue, capped at K for the zero residue.
    pub fn valuation_of(&self, value: u64) -> u32 {
        let value = self.reduce_u64(value);
        if value == 0 {
            return self.precision;
        }
        let mut v = 0;
        let mut rem = value;
        while rem.is_multiple_of(self.p) {
            rem /= self.p;
            v += 1;
        }
        v
    }

    /// p^e for e <= K, as a residue.
    pub fn p_pow(&self, e: u32) -> u64 {
        debug_assert!(e <= self.precision);
        self.p.pow(e)
    }

    pub(crate) fn add_raw(&self, a: u64, b: u64) -> u64 {
        let s = (a as u128 + b as u128) % self.modulus as u128;
        s as u64
    }

    pub(crate) fn sub_raw(&self, a: u64, b: u64) -> u64 {
        let m = self.modulus as u128;
        let s = (a as u128 + m - b as u128 % m) % m;
        s as u64
    }

    pub(crate) fn mul_raw(&self, a: u64, b: u64) -> u64 {
        let s = (a as u128 * b as u128) % self.modulus as u128;
        s as u64
    }

    pub(crate) fn neg_raw(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.modulus - a % self.modulus
        }
    }

    pub(crate) fn pow_raw(&self, base: u64, mut exp: u64) -> u64 {
        let mut base = self.reduce_u64(base);
        let mut acc = 1u64 % self.modulus;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul_raw(acc, base);
            }
            base = self.mul_raw(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Inverse of a unit residue via the extended Euclidean algorithm.
    pub(crate) fn invert_raw(&self, value: u64) -> Result<u64, PadicError> {
        let value = self.reduce_u64(value);
        let v = self.valuation_of(value);
        if v > 0 {
            return Err(PadicError::NonUnit { value, valuation: v });
        }
        let (mut r0, mut r1) = (self.modulus as i128, value as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(t0.rem_euclid(self.modulus as i128) as u64)
    }
}

impl fmt::Debug for PrimeContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z/{}^{}", self.p, self.precision)
    }
}

/// An element of Z/p^K, carrying its context.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PAdicInt {
    ctx: PrimeContext,
    value: u64,
}

impl PAdicInt {
    pub fn new(ctx: PrimeContext, value: u64) -> Self {
        PAdicInt {
            ctx,
            value: ctx.reduce_u64(value),
        }
    }

    pub fn from_i64(ctx: PrimeContext, value: i64) -> Self {
        PAdicInt {
            ctx,
            value: ctx.reduce_i64(value),
        }
    }

    pub fn zero(ctx: PrimeContext) -> Self {
        PAdicInt { ctx, value: 0 }
    }

    pub fn one(ctx: PrimeContext) -> Self {
        PAdicInt::new(ctx, 1)
    }

    /// Canonical residue in [0, p^K).
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn context(&self) -> PrimeContext {
        self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn is_unit(&self) -> bool {
        !self.value.is_multiple_of(self.ctx.p)
    }

    /// p-adic valuation; the zero residue reports K.
    pub fn valuation(&self) -> u32 {
        self.ctx.valuation_of(self.value)
    }

    /// Multiplicative inverse of a unit.
    pub fn invert(&self) -> Result<PAdicInt, PadicError> {
        Ok(PAdicInt {
            ctx: self.ctx,
            value: self.ctx.invert_raw(self.value)?,
        })
    }

    /// self^exp by binary exponentiation.
    pub fn pow(&self, exp: u64) -> PAdicInt {
        PAdicInt {
            ctx: self.ctx,
            value: self.ctx.pow_raw(self.value, exp),
        }
    }

    /// Exact division by p^e; requires valuation >= e.
    pub fn shift_down(&self, e: u32) -> PAdicInt {
        assert!(
            self.valuation() >= e,
            "shift_down({e}) on residue {} with valuation {}",
            self.value,
            self.valuation()
        );
        PAdicInt {
            ctx: self.ctx,
            value: self.value / self.ctx.p_pow(e),
        }
    }
}

fn check_ctx(a: &PAdicInt, b: &PAdicInt) {
    assert_eq!(
        a.ctx, b.ctx,
        "mixed prime contexts: {:?} vs {:?}",
        a.ctx, b.ctx
    );
}

impl Add for PAdicInt {
    type Output = PAdicInt;
    fn add(self, rhs: PAdicInt) -> PAdicInt {
        check_ctx(&self, &rhs);
        PAdicInt {
            ctx: self.ctx,
            value: self.ctx.add_raw(self.value, rhs.value),
        }
    }
}

impl AddAssign for PAdicInt {
    fn add_assign(&mut self, rhs: PAdicInt) {
        *self = *self + rhs;
    }
}

impl Sub for PAdicInt {
    type Output = PAdicInt;
    fn sub(self, rhs: PAdicInt) -> PAdicInt {
        check_ctx(&self, &rhs);
        PAdicInt {
            ctx: self.ctx,
            value: self.ctx.sub_raw(self.value, rhs.value),
        }
    }
}

impl SubAssign for PAdicInt {
    fn sub_assign(&mut self, rhs: PAdicInt) {
        *self = *self - rhs;
    }
}

impl Mul for PAdicInt {
    type Output = PAdicInt;
    fn mul(self, rhs: PAdicInt) -> PAdicInt {
        check_ctx(&self, &rhs);
        PAdicInt {
            ctx: self.ctx,
            value: self.ctx.mul_raw(self.value, rhs.value),
        }
    }
}

impl MulAssign for PAdicInt {
    fn mul_assign(&mut self, rhs: PAdicInt) {
        *self = *self * rhs;
    }
}

impl Neg for PAdicInt {
    type Output = PAdicInt;
    fn neg(self) -> PAdicInt {
        PAdicInt {
            ctx: self.ctx,
            value: self.ctx.neg_raw(self.value),
        }
    }
}

impl fmt::Debug for PAdicInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {}^{})", self.value, self.ctx.p, self.ctx.precision)
    }
}

impl fmt::Display for PAdicInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}
