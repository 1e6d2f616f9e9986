//! Elements of Q_p at finite relative precision with exact valuations.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{MicroError, Result};

pub const DEFAULT_PRIME: u64 = 2;
pub const DEFAULT_PREC: u32 = 64;

const TWO_64: u128 = 1u128 << 64;

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Largest N with p^N <= 2^64, so that unit products fit in u128.
pub fn max_prec(p: u64) -> u32 {
    let mut n = 0;
    let mut m: u128 = 1;
    while m * (p as u128) <= TWO_64 {
        m *= p as u128;
        n += 1;
    }
    n
}

pub fn check_params(prime: u64, prec: u32) -> Result<()> {
    if !is_prime(prime) {
        return Err(MicroError::InvalidPrime(prime));
    }
    let max = max_prec(prime);
    if prec == 0 || prec > max {
        return Err(MicroError::PrecisionUnsupported { prime, prec, max });
    }
    Ok(())
}

fn pow_u128(p: u64, e: u32) -> u128 {
    (p as u128).pow(e)
}

fn mulmod(a: u128, b: u128, m: u128) -> u128 {
    // a, b < m <= 2^64
    (a * b) % m
}

fn inv_mod(u: u128, m: u128) -> u128 {
    let (mut r0, mut r1) = (m as i128, u as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    debug_assert_eq!(r0, 1);
    t0.rem_euclid(m as i128) as u128
}

/// Strip factors of p from a nonzero integer.
fn split_i128(mut n: i128, p: u64) -> (i64, i128) {
    let p = p as i128;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    (v, n)
}

#[derive(Clone, Debug)]
pub struct PadicScalar {
    prime: u64,
    val: Option<i64>,
    unit: u128,
    prec: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalarJson {
    pub val: Option<i64>,
    pub unit: String,
    pub prec: u32,
}

impl PadicScalar {
    /// Build from raw parts; the unit is reduced modulo p^prec.
    pub fn new(prime: u64, val: i64, unit: u128, prec: u32) -> Result<Self> {
        check_params(prime, prec)?;
        let m = pow_u128(prime, prec);
        let unit = unit % m;
        if unit % prime as u128 == 0 {
            return Err(MicroError::Malformed(format!(
                "unit {unit} is divisible by {prime}"
            )));
        }
        Ok(PadicScalar {
            prime,
            val: Some(val),
            unit,
            prec,
        })
    }

    pub fn zero(prime: u64, prec: u32) -> Self {
        PadicScalar {
            prime,
            val: None,
            unit: 0,
            prec,
        }
    }

    pub fn one(prime: u64, prec: u32) -> Self {
        PadicScalar {
            prime,
            val: Some(0),
            unit: 1,
            prec,
        }
    }

    /// p^e
    pub fn p_pow(prime: u64, e: i64, prec: u32) -> Self {
        PadicScalar {
            prime,
            val: Some(e),
            unit: 1,
            prec,
        }
    }

    pub fn from_i128(prime: u64, n: i128, prec: u32) -> Self {
        if n == 0 {
            return Self::zero(prime, prec);
        }
        let (v, u) = split_i128(n, prime);
        let m = pow_u128(prime, prec) as i128;
        PadicScalar {
            prime,
            val: Some(v),
            unit: u.rem_euclid(m) as u128,
            prec,
        }
    }

    pub fn from_i64(prime: u64, n: i64, prec: u32) -> Self {
        Self::from_i128(prime, n as i128, prec)
    }

    pub fn from_bigint(prime: u64, n: &BigInt, prec: u32) -> Self {
        if let Some(small) = n.to_i128() {
            return Self::from_i128(prime, small, prec);
        }
        let pb = BigInt::from(prime);
        let mut n = n.clone();
        let mut v = 0i64;
        while (&n % &pb).is_zero() {
            n /= &pb;
            v += 1;
        }
        let m = BigInt::from(pow_u128(prime, prec));
        let u = n.mod_floor(&m).to_u128().expect("residue fits");
        PadicScalar {
            prime,
            val: Some(v),
            unit: u,
            prec,
        }
    }

    pub fn from_ratio(prime: u64, num: &BigInt, den: &BigInt, prec: u32) -> Result<Self> {
        let a = Self::from_bigint(prime, num, prec);
        let b = Self::from_bigint(prime, den, prec);
        a.div(&b)
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn valuation(&self) -> Option<i64> {
        self.val
    }

    /// Residue of the unit part modulo p^prec (0 for zero).
    pub fn unit(&self) -> u128 {
        self.unit
    }

    pub fn is_zero(&self) -> bool {
        self.val.is_none()
    }

    /// Valuation exactly zero.
    pub fn is_unit(&self) -> bool {
        self.val == Some(0)
    }

    /// Exponent e with |a| = p^e; None for zero.
    pub fn norm_exp(&self) -> Option<i64> {
        self.val.map(|v| -v)
    }

    fn same_prime(&self, other: &Self) -> Result<()> {
        if self.prime != other.prime {
            return Err(MicroError::PrimeMismatch(self.prime, other.prime));
        }
        Ok(())
    }

    fn modulus(&self) -> u128 {
        pow_u128(self.prime, self.prec)
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let m = self.modulus();
        PadicScalar {
            unit: (m - self.unit) % m,
            ..self.clone()
        }
    }

    /// Sum; `None` when cancellation leaves no known digit.
    pub fn try_add(&self, other: &Self) -> Result<Option<Self>> {
        self.same_prime(other)?;
        let (a, b) = match (self.val, other.val) {
            (None, _) => return Ok(Some(other.clone())),
            (_, None) => return Ok(Some(self.clone())),
            (Some(va), Some(vb)) => {
                if va <= vb {
                    (self, other)
                } else {
                    (other, self)
                }
            }
        };
        let va = a.val.unwrap();
        let vb = b.val.unwrap();
        let abs_a = va.checked_add(a.prec as i64).ok_or(MicroError::Overflow)?;
        let abs_b = vb.checked_add(b.prec as i64).ok_or(MicroError::Overflow)?;
        let abs = abs_a.min(abs_b);
        let r = (abs - va) as u32;
        let m = pow_u128(self.prime, r);
        let shift = vb - va;
        let mut s = a.unit % m;
        if shift < r as i64 {
            let f = pow_u128(self.prime, shift as u32);
            s = (s + mulmod(f, b.unit % m, m)) % m;
        }
        if s == 0 {
            return Ok(None);
        }
        let mut t = 0u32;
        while s % self.prime as u128 == 0 {
            s /= self.prime as u128;
            t += 1;
        }
        Ok(Some(PadicScalar {
            prime: self.prime,
            val: Some(va + t as i64),
            unit: s,
            prec: r - t,
        }))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.try_add(other)?.ok_or(MicroError::PrecisionExhausted)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_prime(other)?;
        let (va, vb) = match (self.val, other.val) {
            (Some(a), Some(b)) => (a, b),
            _ => return Ok(Self::zero(self.prime, self.prec.min(other.prec))),
        };
        let prec = self.prec.min(other.prec);
        let m = pow_u128(self.prime, prec);
        Ok(PadicScalar {
            prime: self.prime,
            val: Some(va.checked_add(vb).ok_or(MicroError::Overflow)?),
            unit: mulmod(self.unit % m, other.unit % m, m),
            prec,
        })
    }

    pub fn inv(&self) -> Result<Self> {
        let v = self.val.ok_or(MicroError::DivisionByZero)?;
        Ok(PadicScalar {
            prime: self.prime,
            val: Some(v.checked_neg().ok_or(MicroError::Overflow)?),
            unit: inv_mod(self.unit, self.modulus()),
            prec: self.prec,
        })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.mul(&other.inv()?)
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        if e < 0 {
            return self.inv()?.pow(-e);
        }
        let mut base = self.clone();
        let mut acc = Self::one(self.prime, self.prec);
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Multiply by p^e without touching the unit.
    pub fn shift(&self, e: i64) -> Result<Self> {
        match self.val {
            None => Ok(self.clone()),
            Some(v) => Ok(PadicScalar {
                val: Some(v.checked_add(e).ok_or(MicroError::Overflow)?),
                ..self.clone()
            }),
        }
    }

    /// Equal as elements of Q_p modulo the coarser of the two precisions.
    pub fn eq_value(&self, other: &Self) -> bool {
        if self.prime != other.prime || self.val != other.val {
            return false;
        }
        let m = pow_u128(self.prime, self.prec.min(other.prec));
        self.unit % m == other.unit % m
    }

    /// Small rational a/b congruent to the value, when one exists.
    pub fn to_small_rational(&self) -> Option<(i128, i128)> {
        let v = match self.val {
            None => return Some((0, 1)),
            Some(v) => v,
        };
        let m = self.modulus() as i128;
        let bound = ((m / 2) as f64).sqrt() as i128;
        let (mut r0, mut r1) = (m, self.unit as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 > bound {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        let (mut a, mut b) = (r1, t1);
        if b < 0 {
            a = -a;
            b = -b;
        }
        if b == 0 || b > bound || a.gcd(&b) != 1 {
            return None;
        }
        let pe = (self.prime as i128).checked_pow(v.unsigned_abs().try_into().ok()?)?;
        if v >= 0 {
            a = a.checked_mul(pe)?;
        } else {
            b = b.checked_mul(pe)?;
        }
        Some((a, b))
    }

    pub fn to_json(&self) -> ScalarJson {
        ScalarJson {
            val: self.val,
            unit: self.unit.to_string(),
            prec: self.prec,
        }
    }

    pub fn from_json(prime: u64, j: &ScalarJson) -> Result<Self> {
        let unit: u128 = j
            .unit
            .parse()
            .map_err(|_| MicroError::Malformed(format!("bad unit digits {:?}", j.unit)))?;
        match j.val {
            None => {
                check_params(prime, j.prec)?;
                Ok(Self::zero(prime, j.prec))
            }
            Some(v) => Self::new(prime, v, unit, j.prec),
        }
    }
}

impl PartialEq for PadicScalar {
    fn eq(&self, other: &Self) -> bool {
        self.eq_value(other)
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_small_rational() {
            Some((a, 1)) => write!(f, "{a}"),
            Some((a, b)) => write!(f, "{a}/{b}"),
            None => write!(f, "p^{}*{}", self.val.unwrap_or(0), self.unit),
        }
    }
}

/// Exact binomial coefficient C(a, l) for any integer a (generalized for a < 0).
pub fn binomial_int(a: i64, l: u64) -> BigInt {
    let mut acc = BigInt::from(1);
    for i in 0..l {
        acc *= BigInt::from(a) - BigInt::from(i);
        acc /= BigInt::from(i + 1);
    }
    acc
}

/// C(n, l) embedded in Q_p.
pub fn binomial(prime: u64, n: u64, l: u64, prec: u32) -> Result<PadicScalar> {
    if l > n {
        return Err(MicroError::InvalidArgument(format!(
            "binomial({n}, {l}) needs l <= n"
        )));
    }
    Ok(binomial_signed(prime, n as i64, l, prec))
}

/// Generalized C(a, l) = a(a-1)...(a-l+1)/l!, valid for negative a.
pub fn binomial_signed(prime: u64, a: i64, l: u64, prec: u32) -> PadicScalar {
    let mut acc: i128 = 1;
    for i in 0..l {
        match acc.checked_mul(a as i128 - i as i128) {
            Some(x) => acc = x / (i as i128 + 1),
            None => return PadicScalar::from_bigint(prime, &binomial_int(a, l), prec),
        }
    }
    PadicScalar::from_i128(prime, acc, prec)
}

/// p-adic valuation of a nonzero integer.
pub fn int_valuation(n: &BigInt, prime: u64) -> Option<i64> {
    if n.is_zero() {
        return None;
    }
    let pb = BigInt::from(prime);
    let mut n = n.abs();
    let mut v = 0;
    while (&n % &pb).is_zero() {
        n /= &pb;
        v += 1;
    }
    Some(v)
}
