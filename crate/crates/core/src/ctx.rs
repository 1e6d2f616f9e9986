use serde::{Deserialize, Serialize};

use crate::error::{MicroError, Result};
use crate::padic::{check_params, PadicScalar, DEFAULT_PREC, DEFAULT_PRIME};

pub const DEFAULT_DEG_CAP: u32 = 32;
pub const DEFAULT_WINDOW: i64 = 64;
pub const PRIME_ENV: &str = "MICRODIFF_PRIME";

/// Shared arithmetic context: dimension, prime, unit precision, degree cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ctx {
    pub dim: usize,
    pub prime: u64,
    pub prec: u32,
    pub deg_cap: u32,
}

impl Default for Ctx {
    fn default() -> Self {
        Ctx {
            dim: 1,
            prime: DEFAULT_PRIME,
            prec: DEFAULT_PREC,
            deg_cap: DEFAULT_DEG_CAP,
        }
    }
}

impl Ctx {
    pub fn new(dim: usize, prime: u64, prec: u32, deg_cap: u32) -> Result<Self> {
        if dim == 0 {
            return Err(MicroError::InvalidArgument("dimension must be >= 1".into()));
        }
        check_params(prime, prec)?;
        Ok(Ctx {
            dim,
            prime,
            prec,
            deg_cap,
        })
    }

    pub fn with_dim(dim: usize) -> Self {
        Ctx {
            dim,
            ..Ctx::default()
        }
    }

    /// Default context, with the prime taken from MICRODIFF_PRIME when set.
    pub fn from_env() -> Result<Self> {
        let mut c = Ctx::default();
        if let Ok(s) = std::env::var(PRIME_ENV) {
            let p: u64 = s
                .trim()
                .parse()
                .map_err(|_| MicroError::InvalidArgument(format!("{PRIME_ENV}={s:?}")))?;
            c.prime = p;
            c.prec = c.prec.min(crate::padic::max_prec(p));
            check_params(c.prime, c.prec)?;
        }
        Ok(c)
    }

    pub fn scalar(&self, n: i64) -> PadicScalar {
        PadicScalar::from_i64(self.prime, n, self.prec)
    }

    pub fn p_pow(&self, e: i64) -> PadicScalar {
        PadicScalar::p_pow(self.prime, e, self.prec)
    }

    pub fn zero(&self) -> PadicScalar {
        PadicScalar::zero(self.prime, self.prec)
    }

    pub fn one(&self) -> PadicScalar {
        PadicScalar::one(self.prime, self.prec)
    }

    pub fn check_compatible(&self, other: &Ctx) -> Result<()> {
        if self.dim != other.dim {
            return Err(MicroError::DimensionMismatch(self.dim, other.dim));
        }
        if self.prime != other.prime {
            return Err(MicroError::PrimeMismatch(self.prime, other.prime));
        }
        Ok(())
    }
}
