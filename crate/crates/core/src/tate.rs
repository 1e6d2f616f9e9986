//! Truncated restricted power series K<x_1..x_d> with the Gauss norm.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ctx::Ctx;
use crate::error::{MicroError, Result};
use crate::norm::Norm;
use crate::padic::{PadicScalar, ScalarJson};

pub type Monomial = Vec<u32>;

fn degree(m: &[u32]) -> u32 {
    m.iter().sum()
}

#[derive(Clone, Debug)]
pub struct TateSeries {
    ctx: Ctx,
    exact: bool,
    terms: BTreeMap<Monomial, PadicScalar>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TateTermJson {
    pub exp: Vec<u32>,
    pub coeff: ScalarJson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TateJson {
    pub dim: usize,
    pub cap: u32,
    pub exact: bool,
    pub terms: Vec<TateTermJson>,
}

fn accumulate(terms: &mut BTreeMap<Monomial, PadicScalar>, m: Monomial, c: PadicScalar) -> Result<()> {
    if c.is_zero() {
        return Ok(());
    }
    match terms.remove(&m) {
        None => {
            terms.insert(m, c);
        }
        Some(old) => {
            if let Some(s) = old.try_add(&c)? {
                terms.insert(m, s);
            }
        }
    }
    Ok(())
}

impl TateSeries {
    pub fn zero(ctx: Ctx) -> Self {
        TateSeries {
            ctx,
            exact: true,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(ctx: Ctx, c: PadicScalar) -> Self {
        let mut f = Self::zero(ctx);
        if !c.is_zero() {
            f.terms.insert(vec![0; ctx.dim], c);
        }
        f
    }

    pub fn one(ctx: Ctx) -> Self {
        Self::constant(ctx, ctx.one())
    }

    /// The coordinate x_i, with 1-based axis index.
    pub fn var(ctx: Ctx, i: usize) -> Result<Self> {
        if i == 0 || i > ctx.dim {
            return Err(MicroError::InvalidAxis { axis: i, dim: ctx.dim });
        }
        let mut m = vec![0; ctx.dim];
        m[i - 1] = 1;
        Self::monomial(ctx, m, ctx.one())
    }

    pub fn monomial(ctx: Ctx, m: Monomial, c: PadicScalar) -> Result<Self> {
        Self::from_terms(ctx, vec![(m, c)], true)
    }

    /// Builds a series; monomials above the degree cap are dropped and mark it inexact.
    pub fn from_terms(
        ctx: Ctx,
        terms: impl IntoIterator<Item = (Monomial, PadicScalar)>,
        exact: bool,
    ) -> Result<Self> {
        let mut f = Self::zero(ctx);
        f.exact = exact;
        for (m, c) in terms {
            if m.len() != ctx.dim {
                return Err(MicroError::DimensionMismatch(ctx.dim, m.len()));
            }
            if c.prime() != ctx.prime {
                return Err(MicroError::PrimeMismatch(ctx.prime, c.prime()));
            }
            if degree(&m) > ctx.deg_cap {
                if !c.is_zero() {
                    f.exact = false;
                }
                continue;
            }
            accumulate(&mut f.terms, m, c)?;
        }
        Ok(f)
    }

    pub fn ctx(&self) -> Ctx {
        self.ctx
    }

    pub fn dim(&self) -> usize {
        self.ctx.dim
    }

    pub fn degree_cap(&self) -> u32 {
        self.ctx.deg_cap
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &PadicScalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &[u32]) -> Option<&PadicScalar> {
        self.terms.get(m)
    }

    pub fn constant_term(&self) -> PadicScalar {
        self.terms
            .get(&vec![0; self.ctx.dim])
            .cloned()
            .unwrap_or_else(|| self.ctx.zero())
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| degree(m) == 0)
    }

    /// Largest total degree of a stored monomial (0 for the zero series).
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| degree(m)).max().unwrap_or(0)
    }

    /// Per-axis maximal exponent.
    pub fn axis_degrees(&self) -> Vec<u32> {
        let mut out = vec![0; self.ctx.dim];
        for m in self.terms.keys() {
            for (o, e) in out.iter_mut().zip(m) {
                *o = (*o).max(*e);
            }
        }
        out
    }

    fn check(&self, other: &Self) -> Result<()> {
        self.ctx.check_compatible(&other.ctx)
    }

    fn merged_ctx(&self, other: &Self) -> Ctx {
        Ctx {
            deg_cap: self.ctx.deg_cap.min(other.ctx.deg_cap),
            prec: self.ctx.prec.min(other.ctx.prec),
            ..self.ctx
        }
    }

    fn drop_unknown(&mut self) {
        if !self.exact {
            let cap = self.ctx.deg_cap;
            self.terms.retain(|m, _| degree(m) <= cap);
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = TateSeries {
            ctx: self.merged_ctx(other),
            exact: self.exact && other.exact,
            terms: self.terms.clone(),
        };
        for (m, c) in &other.terms {
            accumulate(&mut out.terms, m.clone(), c.clone())?;
        }
        out.drop_unknown();
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        TateSeries {
            ctx: self.ctx,
            exact: self.exact,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &PadicScalar) -> Result<Self> {
        if c.is_zero() {
            return Ok(TateSeries::zero(self.ctx));
        }
        let mut terms = BTreeMap::new();
        for (m, a) in &self.terms {
            terms.insert(m.clone(), a.mul(c)?);
        }
        Ok(TateSeries {
            ctx: self.ctx,
            exact: self.exact,
            terms,
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let ctx = self.merged_ctx(other);
        let mut exact = self.exact && other.exact;
        let mut terms = BTreeMap::new();
        for (ma, a) in &self.terms {
            for (mb, b) in &other.terms {
                let m: Monomial = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                if degree(&m) > ctx.deg_cap {
                    exact = false;
                    continue;
                }
                accumulate(&mut terms, m, a.mul(b)?)?;
            }
        }
        Ok(TateSeries { ctx, exact, terms })
    }

    /// Partial derivative along axis i (1-based).
    pub fn derive(&self, i: usize) -> Result<Self> {
        if i == 0 || i > self.ctx.dim {
            return Err(MicroError::InvalidAxis { axis: i, dim: self.ctx.dim });
        }
        let mut l = vec![0; self.ctx.dim];
        l[i - 1] = 1;
        self.derive_multi(&l)
    }

    /// Applies the derivation multi-index `l`, i.e. the product of d_i^{l_i}.
    pub fn derive_multi(&self, l: &[u32]) -> Result<Self> {
        let order: u32 = l.iter().sum();
        let mut ctx = self.ctx;
        if !self.exact {
            ctx.deg_cap = ctx.deg_cap.saturating_sub(order);
        }
        let mut terms = BTreeMap::new();
        'outer: for (m, c) in &self.terms {
            let mut factor: i128 = 1;
            let mut nm = m.clone();
            for (j, &lj) in l.iter().enumerate() {
                if m[j] < lj {
                    continue 'outer;
                }
                for t in 0..lj {
                    factor *= (m[j] - t) as i128;
                }
                nm[j] = m[j] - lj;
            }
            let f = PadicScalar::from_i128(ctx.prime, factor, ctx.prec);
            accumulate(&mut terms, nm, c.mul(&f)?)?;
        }
        let mut out = TateSeries {
            ctx,
            exact: self.exact,
            terms,
        };
        out.drop_unknown();
        Ok(out)
    }

    pub fn gauss_norm(&self) -> Norm {
        Norm::from_valuation(self.spectral_valuation())
    }

    /// v(f) with |f| = p^{-v(f)}; None for zero.
    pub fn spectral_valuation(&self) -> Option<i64> {
        self.terms.values().filter_map(|c| c.valuation()).min()
    }

    /// The constant term strictly dominates every other coefficient.
    pub fn is_unit(&self) -> Result<bool> {
        if !self.exact {
            return Err(MicroError::NotCertifiable(
                "unit test needs an exact polynomial".into(),
            ));
        }
        let zero = vec![0; self.ctx.dim];
        let v0 = match self.terms.get(&zero).and_then(|c| c.valuation()) {
            None => return Ok(false),
            Some(v) => v,
        };
        Ok(self
            .terms
            .iter()
            .filter(|(m, _)| **m != zero)
            .all(|(_, c)| c.valuation().map_or(true, |v| v > v0)))
    }

    /// Geometric-series inverse of a unit, truncated at the degree cap.
    pub fn invert_unit(&self) -> Result<Self> {
        if !self.is_unit()? {
            return Err(MicroError::NotInvertible(format!("{self} is not a unit")));
        }
        let c0 = self.constant_term();
        let c0inv = c0.inv()?;
        let h = self.sub(&TateSeries::constant(self.ctx, c0))?;
        if h.is_zero() {
            return Ok(TateSeries::constant(self.ctx, c0inv));
        }
        let minus_u = h.scale(&c0inv)?.neg();
        let mut acc = TateSeries::one(self.ctx);
        let mut power = TateSeries::one(self.ctx);
        for _ in 0..self.ctx.deg_cap {
            power = power.mul(&minus_u)?;
            if power.is_zero() {
                break;
            }
            acc = acc.add(&power)?;
        }
        let mut out = acc.scale(&c0inv)?;
        out.exact = false;
        Ok(out)
    }

    pub fn to_json(&self) -> TateJson {
        TateJson {
            dim: self.ctx.dim,
            cap: self.ctx.deg_cap,
            exact: self.exact,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| TateTermJson {
                    exp: m.clone(),
                    coeff: c.to_json(),
                })
                .collect(),
        }
    }

    pub fn from_json(ctx: Ctx, j: &TateJson) -> Result<Self> {
        if j.dim != ctx.dim {
            return Err(MicroError::DimensionMismatch(ctx.dim, j.dim));
        }
        let ctx = Ctx {
            deg_cap: j.cap,
            ..ctx
        };
        let mut terms = Vec::new();
        for t in &j.terms {
            terms.push((t.exp.clone(), PadicScalar::from_json(ctx.prime, &t.coeff)?));
        }
        Self::from_terms(ctx, terms, j.exact)
    }
}

impl PartialEq for TateSeries {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.dim == other.ctx.dim && self.exact == other.exact && self.terms == other.terms
    }
}

pub(crate) fn fmt_monomial(m: &[u32], prefix: &str) -> String {
    let mut parts = Vec::new();
    for (i, &e) in m.iter().enumerate() {
        if e == 0 {
            continue;
        }
        let name = if m.len() == 1 {
            prefix.to_string()
        } else {
            format!("{prefix}{}", i + 1)
        };
        if e == 1 {
            parts.push(name);
        } else {
            parts.push(format!("{name}^{e}"));
        }
    }
    parts.join("*")
}

fn fmt_term(c: &PadicScalar, mono: &str) -> String {
    let cs = c.to_string();
    if mono.is_empty() {
        return cs;
    }
    match cs.as_str() {
        "1" => mono.to_string(),
        "-1" => format!("-{mono}"),
        _ if cs.contains('/') || cs.contains('+') => format!("({cs})*{mono}"),
        _ => format!("{cs}*{mono}"),
    }
}

impl fmt::Display for TateSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            let t = fmt_term(c, &fmt_monomial(m, "x"));
            if first {
                write!(f, "{t}")?;
                first = false;
            } else if let Some(rest) = t.strip_prefix('-') {
                write!(f, " - {rest}")?;
            } else {
                write!(f, " + {t}")?;
            }
        }
        if !self.exact {
            write!(f, " + O(deg > {})", self.ctx.deg_cap)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx() -> Ctx {
        Ctx::default()
    }

    fn poly(terms: &[(u32, i64)]) -> TateSeries {
        let c = ctx();
        TateSeries::from_terms(c, terms.iter().map(|&(e, n)| (vec![e], c.scalar(n))), true).unwrap()
    }

    #[test]
    fn gauss_norm_examples() {
        assert_eq!(poly(&[(1, 1), (0, 2)]).gauss_norm(), Norm::one());
        assert_eq!(TateSeries::zero(ctx()).gauss_norm(), Norm::Zero);
        assert_eq!(poly(&[(3, 4), (0, 32)]).gauss_norm(), Norm::pow(-2));
    }

    #[test]
    fn spectral_valuation_examples() {
        assert_eq!(poly(&[(3, 4)]).spectral_valuation(), Some(2));
        assert_eq!(poly(&[(0, 1), (1, 2)]).spectral_valuation(), Some(0));
        assert_eq!(poly(&[(0, 8), (2, 8)]).spectral_valuation(), Some(3));
        assert_eq!(TateSeries::zero(ctx()).spectral_valuation(), None);
    }

    #[test]
    fn derive_examples() {
        assert_eq!(poly(&[(2, 1)]).derive(1).unwrap(), poly(&[(1, 2)]));
        assert!(poly(&[(0, 7)]).derive(1).unwrap().is_zero());
        assert_eq!(poly(&[(3, 1), (1, 2)]).derive(1).unwrap(), poly(&[(2, 3), (0, 2)]));
        assert!(poly(&[(0, 1)]).derive(2).is_err());
    }

    #[test]
    fn unit_examples() {
        assert!(poly(&[(0, 1), (1, 2)]).is_unit().unwrap());
        assert!(!poly(&[(1, 1)]).is_unit().unwrap());
        assert!(!poly(&[(0, 2), (1, 1)]).is_unit().unwrap());
        let inexact = TateSeries::from_terms(ctx(), vec![(vec![0], ctx().one())], false).unwrap();
        assert!(matches!(inexact.is_unit(), Err(MicroError::NotCertifiable(_))));
    }

    #[test]
    fn invert_examples() {
        let f = poly(&[(0, 1), (1, 2)]);
        let g = f.invert_unit().unwrap();
        // geometric series: coefficient of x^n is (-2)^n
        for n in 0..=ctx().deg_cap {
            let want = ctx().scalar(-2).pow(n as i64).unwrap();
            assert_eq!(g.coeff(&[n]).unwrap(), &want);
        }
        let c = poly(&[(0, 6)]);
        let ci = c.invert_unit().unwrap();
        assert_eq!(ci.constant_term(), ctx().scalar(6).inv().unwrap());
        let back = f.mul(&g).unwrap();
        assert_eq!(back.constant_term(), ctx().one());
        assert_eq!(back.num_terms(), 1);
    }

    #[test]
    fn json_round_trip() {
        let f = poly(&[(0, 3), (4, -8)]);
        let j = f.to_json();
        assert_eq!(TateSeries::from_json(ctx(), &j).unwrap(), f);
    }

    #[test]
    fn display() {
        assert_eq!(poly(&[(0, 1), (1, 2), (2, -1)]).to_string(), "1 + 2*x - x^2");
    }

    fn arb_poly() -> impl Strategy<Value = TateSeries> {
        proptest::collection::vec((0u32..5, 0u32..5, -4i64..5, prop_oneof![Just(1i64), Just(-1), Just(3), Just(5)]), 1..5)
            .prop_map(|ts| {
                let c = Ctx::with_dim(2);
                TateSeries::from_terms(
                    c,
                    ts.into_iter().map(|(a, b, v, u)| (vec![a, b], c.p_pow(v).mul(&c.scalar(u)).unwrap())),
                    true,
                )
                .unwrap()
            })
    }

    proptest! {
        #[test]
        fn gauss_norm_multiplicative(f in arb_poly(), g in arb_poly()) {
            let h = f.mul(&g).unwrap();
            prop_assert_eq!(h.gauss_norm(), f.gauss_norm().mul(g.gauss_norm()));
        }

        #[test]
        fn derivative_contracts(f in arb_poly(), i in 1usize..3) {
            prop_assert!(f.derive(i).unwrap().gauss_norm() <= f.gauss_norm());
        }

        #[test]
        fn unit_inverse_residual(v in 1i64..4, n in 1u32..4, u in 0usize..3) {
            let c = ctx();
            let units = [1i64, -1, 3];
            let f = TateSeries::from_terms(c, vec![
                (vec![0], c.scalar(units[u])),
                (vec![n], c.p_pow(v)),
            ], true).unwrap();
            prop_assert!(f.is_unit().unwrap());
            let g = f.invert_unit().unwrap();
            prop_assert_eq!(g.gauss_norm(), Norm::one());
            let r = f.mul(&g).unwrap().sub(&TateSeries::one(c)).unwrap();
            // the geometric remainder lives above the degree cap
            prop_assert!(r.is_zero());
        }
    }
}
