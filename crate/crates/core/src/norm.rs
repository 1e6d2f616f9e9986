//! Norms as (rational) powers of p.

use std::fmt;

use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{MicroError, Result};

pub type Rational = Ratio<i64>;

pub fn rat(n: i64, d: i64) -> Rational {
    Ratio::new(n, d)
}

pub fn int(n: i64) -> Rational {
    Ratio::from_integer(n)
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || MicroError::Malformed(format!("bad rational {s:?}"));
    match s.split_once('/') {
        None => s.parse::<i64>().map(int).map_err(|_| bad()),
        Some((a, b)) => {
            let a: i64 = a.trim().parse().map_err(|_| bad())?;
            let b: i64 = b.trim().parse().map_err(|_| bad())?;
            if b == 0 {
                return Err(bad());
            }
            Ok(rat(a, b))
        }
    }
}

/// `p^e` for a rational `e`, or zero. `Zero` sorts below every power.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Norm {
    Zero,
    Pow(Rational),
}

impl Norm {
    pub fn one() -> Self {
        Norm::Pow(Rational::zero())
    }

    pub fn pow(e: i64) -> Self {
        Norm::Pow(int(e))
    }

    /// Norm of a scalar with valuation `v` (None = zero).
    pub fn from_valuation(v: Option<i64>) -> Self {
        match v {
            None => Norm::Zero,
            Some(v) => Norm::pow(-v),
        }
    }

    pub fn exp(&self) -> Option<Rational> {
        match self {
            Norm::Zero => None,
            Norm::Pow(e) => Some(*e),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Norm::Zero)
    }

    pub fn mul(self, other: Norm) -> Norm {
        match (self, other) {
            (Norm::Pow(a), Norm::Pow(b)) => Norm::Pow(a + b),
            _ => Norm::Zero,
        }
    }

    pub fn div(self, other: Norm) -> Result<Norm> {
        match (self, other) {
            (_, Norm::Zero) => Err(MicroError::DivisionByZero),
            (Norm::Zero, _) => Ok(Norm::Zero),
            (Norm::Pow(a), Norm::Pow(b)) => Ok(Norm::Pow(a - b)),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::Zero => write!(f, "0"),
            Norm::Pow(e) => write!(f, "p^{e}"),
        }
    }
}

impl Serialize for Norm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Norm::Zero => s.serialize_none(),
            Norm::Pow(e) => s.serialize_some(&e.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Norm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let o: Option<String> = Option::deserialize(d)?;
        match o {
            None => Ok(Norm::Zero),
            Some(s) => parse_rational(&s)
                .map(Norm::Pow)
                .map_err(serde::de::Error::custom),
        }
    }
}

pub mod rational_serde {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_and_arith() {
        assert!(Norm::Zero < Norm::pow(-100));
        assert!(Norm::pow(-1) < Norm::one());
        assert_eq!(Norm::pow(2).mul(Norm::pow(-3)), Norm::pow(-1));
        assert_eq!(Norm::pow(2).div(Norm::Zero), Err(MicroError::DivisionByZero));
        assert_eq!(Norm::from_valuation(Some(3)), Norm::pow(-3));
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("3/2").unwrap(), rat(3, 2));
        assert_eq!(parse_rational("-4").unwrap(), int(-4));
        assert!(parse_rational("1/0").is_err());
        let j = serde_json::to_string(&Norm::Pow(rat(1, 2))).unwrap();
        assert_eq!(j, "\"1/2\"");
        let back: Norm = serde_json::from_str(&j).unwrap();
        assert_eq!(back, Norm::Pow(rat(1, 2)));
    }
}
