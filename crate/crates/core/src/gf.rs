//! Arithmetic in the prime field `F_q`.
//!
//! Residues are stored as `u32` in `[0, q)`. Since `q < 2^31`, every product
//! of two residues fits in a `u64` before reduction.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible modulus (exclusive).
pub const MAX_MODULUS: u64 = 1 << 31;

/// A prime modulus `q` defining scalar arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct FieldSpec {
    q: u32,
}

impl FieldSpec {
    /// Builds a field, rejecting composite or out-of-range moduli.
    pub fn new(q: u64) -> Result<Self> {
        if !(2..MAX_MODULUS).contains(&q) {
            return Err(Error::InvalidModulus(q));
        }
        if !is_prime(q) {
            return Err(Error::InvalidModulus(q));
        }
        Ok(FieldSpec { q: q as u32 })
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.q
    }

    /// Canonical residue of an arbitrary signed integer.
    #[inline]
    pub fn reduce(&self, x: i64) -> u32 {
        x.rem_euclid(self.q as i64) as u32
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a as u64 + b as u64;
        let q = self.q as u64;
        (if s >= q { s - q } else { s }) as u32
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + (self.q - b)
        }
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.q as u64) as u32
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    pub fn inv(&self, a: u32) -> Result<u32> {
        let a = a % self.q;
        if a == 0 {
            return Err(Error::DivisionByZero);
        }
        let (mut r0, mut r1) = (self.q as i64, a as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let quot = r0 / r1;
            (r0, r1) = (r1, r0 - quot * r1);
            (t0, t1) = (t1, t0 - quot * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(self.reduce(t0))
    }

    /// Element handle bound to this field.
    pub fn elem(&self, x: i64) -> Fq {
        Fq {
            value: self.reduce(x),
            field: *self,
        }
    }

    pub fn zero(&self) -> Fq {
        self.elem(0)
    }

    pub fn one(&self) -> Fq {
        self.elem(1)
    }
}

impl TryFrom<u32> for FieldSpec {
    type Error = Error;

    fn try_from(q: u32) -> Result<Self> {
        FieldSpec::new(q as u64)
    }
}

impl From<FieldSpec> for u32 {
    fn from(f: FieldSpec) -> u32 {
        f.q
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.q)
    }
}

/// Deterministic primality test for `n < 2^32` (trial division is cheap here).
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Smallest prime strictly greater than `n`.
pub fn next_prime_above(n: u64) -> u64 {
    let mut p = n + 1;
    while !is_prime(p) {
        p += 1;
    }
    p
}

/// A field element tagged with its field.
///
/// Operator impls panic when the operands live in different fields; use the
/// `checked_*` methods to get an error instead.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fq {
    value: u32,
    field: FieldSpec,
}

impl Fq {
    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn same_field(&self, other: &Fq) -> Result<()> {
        if self.field != other.field {
            return Err(Error::FieldMismatch {
                left: self.field.modulus(),
                right: other.field.modulus(),
            });
        }
        Ok(())
    }

    pub fn checked_add(self, rhs: Fq) -> Result<Fq> {
        self.same_field(&rhs)?;
        Ok(Fq {
            value: self.field.add(self.value, rhs.value),
            field: self.field,
        })
    }

    pub fn checked_sub(self, rhs: Fq) -> Result<Fq> {
        self.same_field(&rhs)?;
        Ok(Fq {
            value: self.field.sub(self.value, rhs.value),
            field: self.field,
        })
    }

    pub fn checked_mul(self, rhs: Fq) -> Result<Fq> {
        self.same_field(&rhs)?;
        Ok(Fq {
            value: self.field.mul(self.value, rhs.value),
            field: self.field,
        })
    }

    pub fn inv(self) -> Result<Fq> {
        Ok(Fq {
            value: self.field.inv(self.value)?,
            field: self.field,
        })
    }
}

impl Add for Fq {
    type Output = Fq;
    fn add(self, rhs: Fq) -> Fq {
        self.checked_add(rhs).expect("field mismatch")
    }
}

impl Sub for Fq {
    type Output = Fq;
    fn sub(self, rhs: Fq) -> Fq {
        self.checked_sub(rhs).expect("field mismatch")
    }
}

impl Mul for Fq {
    type Output = Fq;
    fn mul(self, rhs: Fq) -> Fq {
        self.checked_mul(rhs).expect("field mismatch")
    }
}

impl Neg for Fq {
    type Output = Fq;
    fn neg(self) -> Fq {
        Fq {
            value: self.field.neg(self.value),
            field: self.field,
        }
    }
}

impl fmt::Display for Fq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}
