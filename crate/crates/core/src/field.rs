//! Arithmetic over prime fields GF(q).
//!
//! Every element carries the order of the field it lives in, so mixing
//! elements from different fields is caught instead of silently reducing
//! with the wrong modulus. The checked methods (`checked_add`, ...) report
//! the mismatch as an error; the `std::ops` impls panic on it.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Largest supported field order. Products of two canonical values then fit
/// in a `u64`.
pub const MAX_ORDER: u64 = (1 << 31) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("field order {0} is not a prime >= 2")]
    NonPrimeOrder(u64),
    #[error("field order {0} exceeds the supported maximum {MAX_ORDER}")]
    OrderTooLarge(u64),
    #[error("operands belong to different fields (GF({left}) vs GF({right}))")]
    FieldMismatch { left: u64, right: u64 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("value {value} is not a canonical element of GF({order})")]
    ValueOutOfRange { value: u64, order: u64 },
}

/// A prime field GF(q). Cheap to copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimeField {
    order: u64,
}

impl PrimeField {
    /// Builds GF(q), rejecting composite orders and orders above [`MAX_ORDER`].
    pub fn new(order: u64) -> Result<Self, FieldError> {
        if order > MAX_ORDER {
            return Err(FieldError::OrderTooLarge(order));
        }
        if !is_prime(order) {
            return Err(FieldError::NonPrimeOrder(order));
        }
        Ok(Self { order })
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { value: 0, order: self.order }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement { value: 1, order: self.order }
    }

    /// Wraps a canonical value; values outside `[0, q)` are rejected.
    pub fn element(&self, value: u64) -> Result<FieldElement, FieldError> {
        if value >= self.order {
            return Err(FieldError::ValueOutOfRange { value, order: self.order });
        }
        Ok(FieldElement { value, order: self.order })
    }

    /// Reduces an arbitrary integer into the field.
    pub fn reduce(&self, value: u64) -> FieldElement {
        FieldElement { value: value % self.order, order: self.order }
    }

    /// Iterates over every element of the field in increasing order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.order).map(move |value| FieldElement { value, order: self.order })
    }

    pub fn vector(&self, values: &[u64]) -> Result<Vec<FieldElement>, FieldError> {
        values.iter().map(|&v| self.element(v)).collect()
    }
}

impl fmt::Display for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.order)
    }
}

/// Deterministic trial division; orders are capped at 2^31 - 1 so this is at
/// most ~46k divisions.
fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// The binary operations the codec needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl ArithOp {
    pub fn apply(self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        match self {
            ArithOp::Add => a.checked_add(b),
            ArithOp::Sub => a.checked_sub(b),
            ArithOp::Mul => a.checked_mul(b),
        }
    }
}

/// An element of GF(q) in canonical form `0 <= value < q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement {
    value: u64,
    order: u64,
}

impl FieldElement {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn field(&self) -> PrimeField {
        PrimeField { order: self.order }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn same_field(self, rhs: Self) -> Result<u64, FieldError> {
        if self.order != rhs.order {
            return Err(FieldError::FieldMismatch { left: self.order, right: rhs.order });
        }
        Ok(self.order)
    }

    pub fn checked_add(self, rhs: Self) -> Result<Self, FieldError> {
        let q = self.same_field(rhs)?;
        let s = self.value + rhs.value;
        Ok(Self { value: if s >= q { s - q } else { s }, order: q })
    }

    pub fn checked_sub(self, rhs: Self) -> Result<Self, FieldError> {
        let q = self.same_field(rhs)?;
        let value = if self.value >= rhs.value { self.value - rhs.value } else { self.value + q - rhs.value };
        Ok(Self { value, order: q })
    }

    pub fn checked_mul(self, rhs: Self) -> Result<Self, FieldError> {
        let q = self.same_field(rhs)?;
        Ok(Self { value: self.value * rhs.value % q, order: q })
    }

    /// Multiplicative inverse via the extended Euclidean algorithm.
    pub fn inverse(self) -> Result<Self, FieldError> {
        if self.value == 0 {
            return Err(FieldError::ZeroInverse);
        }
        let q = self.order as i64;
        let (mut old_r, mut r) = (self.value as i64, q);
        let (mut old_s, mut s) = (1i64, 0i64);
        while r != 0 {
            let quotient = old_r / r;
            (old_r, r) = (r, old_r - quotient * r);
            (old_s, s) = (s, old_s - quotient * s);
        }
        debug_assert_eq!(old_r, 1);
        Ok(Self { value: old_s.rem_euclid(q) as u64, order: self.order })
    }

    pub fn pow(self, mut exp: u64) -> Self {
        let mut base = self;
        let mut acc = self.field().one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            exp >>= 1;
        }
        acc
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Add for FieldElement {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.checked_add(rhs).expect("field mismatch in addition")
    }
}

impl Sub for FieldElement {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.checked_sub(rhs).expect("field mismatch in subtraction")
    }
}

impl Mul for FieldElement {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.checked_mul(rhs).expect("field mismatch in multiplication")
    }
}

impl Neg for FieldElement {
    type Output = Self;
    fn neg(self) -> Self {
        self.field().zero() - self
    }
}
