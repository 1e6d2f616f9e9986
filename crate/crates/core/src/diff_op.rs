//! Differential operators with raw coefficients `c_alpha` of `d^alpha`,
//! Leibniz products, level-k norms and orders.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::ctx::Ctx;
use crate::error::{MicroError, Result};
use crate::micro_op::MulConfig;
use crate::norm::{int, rational_serde, Norm, Rational};
use crate::padic::{binomial_signed, max_prec, PadicScalar};
use crate::tate::{fmt_monomial, TateJson, TateSeries};

pub type Exponent = Vec<i64>;

/// Sum of the components of an exponent.
pub fn floor(alpha: &[i64]) -> i64 {
    alpha.iter().sum()
}

/// Linear lower bound `v(c_alpha) >= t0 + t1 * n` for every discarded term,
/// where `n = floor(alpha) > start` (or `-floor(alpha) > start` for a negative tail).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailCertificate {
    pub start: i64,
    #[serde(with = "rational_serde")]
    pub t0: Rational,
    #[serde(with = "rational_serde")]
    pub t1: Rational,
    /// The discarded part is known to contain infinitely many nonzero terms.
    #[serde(default)]
    pub infinite: bool,
}

impl TailCertificate {
    pub fn new(start: i64, t0: Rational, t1: Rational) -> Self {
        TailCertificate {
            start,
            t0,
            t1,
            infinite: false,
        }
    }

    pub fn infinite(mut self) -> Self {
        self.infinite = true;
        self
    }

    /// Largest possible exponent of `|c| p^{w n}` over the discarded region,
    /// or None when the weight `w` grows at least as fast as the tail decays.
    pub fn weighted_bound(&self, w: Rational) -> Option<Rational> {
        let slope = self.t1 - w;
        if slope <= Rational::zero() {
            return None;
        }
        Some(-self.t0 - slope * int(self.start + 1))
    }
}

#[derive(Clone, Debug)]
pub struct MicroOp {
    ctx: Ctx,
    terms: BTreeMap<Exponent, TateSeries>,
    tail: Option<TailCertificate>,
    neg_tail: Option<TailCertificate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpTermJson {
    pub alpha: Vec<i64>,
    pub coeff: TateJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpJson {
    pub dim: usize,
    pub prime: u64,
    pub terms: Vec<OpTermJson>,
    pub tail: Option<TailCertificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neg_tail: Option<TailCertificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sector: Option<String>,
}

/// Result of a weighted sup-norm scan over the stored terms.
#[derive(Clone, Debug, PartialEq)]
pub struct Scan {
    pub norm: Norm,
    /// Exponents achieving the maximum.
    pub argmax: Vec<Exponent>,
}

impl Scan {
    pub fn upper_order(&self) -> Option<i64> {
        self.argmax.iter().map(|a| floor(a)).max()
    }

    pub fn lower_order(&self) -> Option<i64> {
        self.argmax.iter().map(|a| floor(a)).min()
    }
}

fn add_into(terms: &mut BTreeMap<Exponent, TateSeries>, a: Exponent, f: TateSeries) -> Result<()> {
    if f.is_zero() {
        return Ok(());
    }
    match terms.remove(&a) {
        None => {
            terms.insert(a, f);
        }
        Some(old) => {
            let s = old.add(&f)?;
            if !s.is_zero() {
                terms.insert(a, s);
            }
        }
    }
    Ok(())
}

fn rmin(a: Option<Rational>, b: Rational) -> Option<Rational> {
    Some(match a {
        None => b,
        Some(a) => a.min(b),
    })
}

impl MicroOp {
    pub fn zero(ctx: Ctx) -> Self {
        MicroOp {
            ctx,
            terms: BTreeMap::new(),
            tail: None,
            neg_tail: None,
        }
    }

    pub fn function(f: TateSeries) -> Self {
        let ctx = f.ctx();
        let mut op = Self::zero(ctx);
        if !f.is_zero() {
            op.terms.insert(vec![0; ctx.dim], f);
        }
        op
    }

    pub fn scalar(ctx: Ctx, c: PadicScalar) -> Self {
        Self::function(TateSeries::constant(ctx, c))
    }

    pub fn one(ctx: Ctx) -> Self {
        Self::scalar(ctx, ctx.one())
    }

    /// `f * d^alpha`.
    pub fn monomial(alpha: Exponent, f: TateSeries) -> Result<Self> {
        let ctx = f.ctx();
        Self::from_terms(ctx, vec![(alpha, f)])
    }

    /// `d^alpha` with unit coefficient.
    pub fn partial_pow(ctx: Ctx, alpha: Exponent) -> Result<Self> {
        Self::monomial(alpha, TateSeries::one(ctx))
    }

    /// The derivation d_i (1-based axis).
    pub fn partial(ctx: Ctx, i: usize) -> Result<Self> {
        if i == 0 || i > ctx.dim {
            return Err(MicroError::InvalidAxis { axis: i, dim: ctx.dim });
        }
        let mut a = vec![0; ctx.dim];
        a[i - 1] = 1;
        Self::partial_pow(ctx, a)
    }

    pub fn from_terms(ctx: Ctx, terms: impl IntoIterator<Item = (Exponent, TateSeries)>) -> Result<Self> {
        let mut op = Self::zero(ctx);
        for (a, f) in terms {
            if a.len() != ctx.dim {
                return Err(MicroError::DimensionMismatch(ctx.dim, a.len()));
            }
            ctx.check_compatible(&f.ctx())?;
            add_into(&mut op.terms, a, f)?;
        }
        Ok(op)
    }

    /// Constant-coefficient operator at d = 1 from (exponent, scalar) pairs.
    pub fn from_scalars(ctx: Ctx, terms: impl IntoIterator<Item = (i64, PadicScalar)>) -> Result<Self> {
        Self::from_terms(
            ctx,
            terms
                .into_iter()
                .map(|(n, c)| (vec![n], TateSeries::constant(ctx, c))),
        )
    }

    pub fn with_tail(mut self, tail: TailCertificate) -> Self {
        let m = tail.start;
        self.terms.retain(|a, _| floor(a) <= m);
        self.tail = Some(tail);
        self
    }

    pub fn with_neg_tail(mut self, tail: TailCertificate) -> Self {
        let m = tail.start;
        self.terms.retain(|a, _| -floor(a) <= m);
        self.neg_tail = Some(tail);
        self
    }

    pub fn ctx(&self) -> Ctx {
        self.ctx
    }

    pub fn dim(&self) -> usize {
        self.ctx.dim
    }

    pub fn tail(&self) -> Option<&TailCertificate> {
        self.tail.as_ref()
    }

    pub fn neg_tail(&self) -> Option<&TailCertificate> {
        self.neg_tail.as_ref()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &TateSeries)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, alpha: &[i64]) -> Option<&TateSeries> {
        self.terms.get(alpha)
    }

    /// No stored terms and no tail.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.tail.is_none() && self.neg_tail.is_none()
    }

    /// All exponents in N^d and no negative tail.
    pub fn is_positive(&self) -> bool {
        self.neg_tail.is_none() && self.terms.keys().all(|a| a.iter().all(|&e| e >= 0))
    }

    pub fn is_exact(&self) -> bool {
        self.tail.is_none() && self.neg_tail.is_none()
    }

    pub fn require_positive(&self) -> Result<()> {
        if self.is_positive() {
            Ok(())
        } else {
            Err(MicroError::NotPositive)
        }
    }

    /// (floor(alpha), v(c_alpha)) for every stored term.
    pub fn valuations(&self) -> impl Iterator<Item = (&Exponent, i64)> {
        self.terms
            .iter()
            .filter_map(|(a, f)| f.spectral_valuation().map(|v| (a, v)))
    }

    /// Largest per-axis |exponent| over stored terms.
    pub fn max_abs_exponent(&self) -> i64 {
        self.terms
            .keys()
            .flat_map(|a| a.iter().map(|e| e.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn check_window(&self, cap: i64) -> Result<()> {
        for a in self.terms.keys() {
            for &e in a {
                if e.abs() > cap {
                    return Err(MicroError::WindowOverflow { exponent: e, cap });
                }
            }
        }
        Ok(())
    }

    pub fn neg(&self) -> Self {
        MicroOp {
            ctx: self.ctx,
            terms: self.terms.iter().map(|(a, f)| (a.clone(), f.neg())).collect(),
            tail: self.tail.clone(),
            neg_tail: self.neg_tail.clone(),
        }
    }

    pub fn scale(&self, c: &PadicScalar) -> Result<Self> {
        let mut out = Self::zero(self.ctx);
        if c.is_zero() {
            return Ok(out);
        }
        for (a, f) in &self.terms {
            out.terms.insert(a.clone(), f.scale(c)?);
        }
        let shift = int(c.valuation().unwrap());
        out.tail = self.tail.clone().map(|mut t| {
            t.t0 += shift;
            t
        });
        out.neg_tail = self.neg_tail.clone().map(|mut t| {
            t.t0 += shift;
            t
        });
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.ctx.check_compatible(&other.ctx)?;
        let mut terms = self.terms.clone();
        for (a, f) in &other.terms {
            add_into(&mut terms, a.clone(), f.clone())?;
        }
        let mut out = MicroOp {
            ctx: self.ctx,
            terms,
            tail: None,
            neg_tail: None,
        };
        for dir in [1i64, -1] {
            let (ta, tb) = if dir == 1 {
                (&self.tail, &other.tail)
            } else {
                (&self.neg_tail, &other.neg_tail)
            };
            if ta.is_none() && tb.is_none() {
                continue;
            }
            let start = [ta, tb]
                .iter()
                .filter_map(|t| t.as_ref().map(|t| t.start))
                .min()
                .unwrap();
            let s = [ta, tb]
                .iter()
                .filter_map(|t| t.as_ref().map(|t| t.t1))
                .min()
                .unwrap();
            let mut b: Option<Rational> = None;
            for t in [ta, tb].into_iter().flatten() {
                b = rmin(b, t.t0 + (t.t1 - s) * int(t.start + 1));
            }
            // stored terms that fall into the discarded region of the sum
            for op in [self, other] {
                for (a, v) in op.valuations() {
                    let n = dir * floor(a);
                    if n > start {
                        b = rmin(b, int(v) - s * int(n));
                    }
                }
            }
            let infinite = [ta, tb].iter().any(|t| t.as_ref().is_some_and(|t| t.infinite));
            let cert = TailCertificate {
                start,
                t0: b.unwrap(),
                t1: s,
                infinite,
            };
            out.terms.retain(|a, _| dir * floor(a) <= start);
            if dir == 1 {
                out.tail = Some(cert);
            } else {
                out.neg_tail = Some(cert);
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// Product of positive operators.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.require_positive()?;
        other.require_positive()?;
        leibniz(self, other, &MulConfig::default())
    }

    /// Weighted sup norm: exponent of `|c_alpha| p^{w(alpha)}` with
    /// `w = wpos * floor` on `floor >= 0` and `wneg * floor` below.
    pub fn scan(&self, wpos: Rational, wneg: Rational) -> Result<Scan> {
        let weight = |a: &[i64]| {
            let f = floor(a);
            if f >= 0 {
                wpos * int(f)
            } else {
                wneg * int(f)
            }
        };
        let mut best: Option<Rational> = None;
        let mut argmax = Vec::new();
        for (a, v) in self.valuations() {
            let e = weight(a) - int(v);
            match best {
                Some(b) if e < b => {}
                Some(b) if e == b => argmax.push(a.clone()),
                _ => {
                    best = Some(e);
                    argmax = vec![a.clone()];
                }
            }
        }
        let tails = [(&self.tail, wpos, "positive"), (&self.neg_tail, -wneg, "negative")];
        for (t, w, side) in tails {
            let Some(t) = t else { continue };
            let bound = t.weighted_bound(w).ok_or_else(|| {
                MicroError::InsufficientTruncation(format!(
                    "{side} tail slope {} does not beat weight {}",
                    t.t1, w
                ))
            })?;
            match best {
                Some(b) if bound < b => {}
                _ => {
                    return Err(MicroError::InsufficientTruncation(format!(
                        "{side} tail bound p^{bound} is not below the stored maximum"
                    )))
                }
            }
        }
        Ok(Scan {
            norm: best.map_or(Norm::Zero, Norm::Pow),
            argmax,
        })
    }

    pub fn norm_k(&self, k: i64) -> Result<Norm> {
        self.require_positive()?;
        Ok(self.scan(int(k), int(k))?.norm)
    }

    #[allow(non_snake_case)]
    pub fn order_Nk(&self, k: i64) -> Result<i64> {
        self.require_positive()?;
        self.scan(int(k), int(k))?
            .upper_order()
            .ok_or(MicroError::ZeroOperator)
    }

    pub fn order_nk(&self, k: i64) -> Result<i64> {
        self.require_positive()?;
        self.scan(int(k), int(k))?
            .lower_order()
            .ok_or(MicroError::ZeroOperator)
    }

    pub fn norm_mu(&self, mu: Rational) -> Result<Norm> {
        self.require_positive()?;
        Ok(self.scan(mu, mu)?.norm)
    }

    #[allow(non_snake_case)]
    pub fn order_Nmu(&self, mu: Rational) -> Result<i64> {
        self.require_positive()?;
        self.scan(mu, mu)?.upper_order().ok_or(MicroError::ZeroOperator)
    }

    pub fn order_nmu(&self, mu: Rational) -> Result<i64> {
        self.require_positive()?;
        self.scan(mu, mu)?.lower_order().ok_or(MicroError::ZeroOperator)
    }

    /// Splits stored terms by the sign of floor(alpha); each tail follows its side.
    pub fn split_by_floor(&self) -> (MicroOp, MicroOp) {
        let mut pos = MicroOp::zero(self.ctx);
        let mut neg = MicroOp::zero(self.ctx);
        for (a, f) in &self.terms {
            let side = if floor(a) >= 0 { &mut pos } else { &mut neg };
            side.terms.insert(a.clone(), f.clone());
        }
        pos.tail = self.tail.clone();
        neg.neg_tail = self.neg_tail.clone();
        (pos, neg)
    }

    pub fn is_finite(&self) -> bool {
        self.is_exact()
    }

    /// Largest |alpha| with a nonzero coefficient, for exact nonzero operators.
    pub fn finite_order(&self) -> Option<i64> {
        if !self.is_finite() {
            return None;
        }
        self.terms.keys().map(|a| floor(a)).max()
    }

    pub fn to_json(&self) -> OpJson {
        OpJson {
            dim: self.ctx.dim,
            prime: self.ctx.prime,
            terms: self
                .terms
                .iter()
                .map(|(a, f)| OpTermJson {
                    alpha: a.clone(),
                    coeff: f.to_json(),
                })
                .collect(),
            tail: self.tail.clone(),
            neg_tail: self.neg_tail.clone(),
            sector: None,
        }
    }

    pub fn from_json(j: &OpJson) -> Result<Self> {
        let prec = j
            .terms
            .iter()
            .flat_map(|t| t.coeff.terms.iter().map(|c| c.coeff.prec))
            .max()
            .unwrap_or(max_prec(j.prime).min(crate::padic::DEFAULT_PREC));
        let cap = j
            .terms
            .iter()
            .map(|t| t.coeff.cap)
            .max()
            .unwrap_or(crate::ctx::DEFAULT_DEG_CAP);
        let ctx = Ctx::new(j.dim, j.prime, prec, cap)?;
        let mut terms = Vec::new();
        for t in &j.terms {
            terms.push((t.alpha.clone(), TateSeries::from_json(ctx, &t.coeff)?));
        }
        let mut op = Self::from_terms(ctx, terms)?;
        if let Some(t) = &j.tail {
            op = op.with_tail(t.clone());
        }
        if let Some(t) = &j.neg_tail {
            op = op.with_neg_tail(t.clone());
        }
        Ok(op)
    }
}

impl PartialEq for MicroOp {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.dim == other.ctx.dim
            && self.ctx.prime == other.ctx.prime
            && self.terms == other.terms
            && self.tail == other.tail
            && self.neg_tail == other.neg_tail
    }
}

fn fmt_partial(alpha: &[i64]) -> String {
    let mut parts = Vec::new();
    for (i, &e) in alpha.iter().enumerate() {
        if e == 0 {
            continue;
        }
        let name = if alpha.len() == 1 {
            "d".to_string()
        } else {
            format!("d{}", i + 1)
        };
        if e == 1 {
            parts.push(name);
        } else {
            parts.push(format!("{name}^{e}"));
        }
    }
    parts.join("*")
}

impl fmt::Display for MicroOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut pieces: Vec<String> = Vec::new();
        for (a, c) in &self.terms {
            let d = fmt_partial(a);
            let single = c.num_terms() == 1 && c.is_exact();
            let cs = c.to_string();
            let piece = if d.is_empty() {
                if single {
                    cs
                } else {
                    format!("({cs})")
                }
            } else if single {
                let (m, s) = c.terms().next().unwrap();
                let mono = fmt_monomial(m, "x");
                let coeff = s.to_string();
                let mut factors = Vec::new();
                let neg = coeff.starts_with('-');
                let mag = coeff.trim_start_matches('-');
                if mag != "1" {
                    factors.push(mag.to_string());
                }
                if !mono.is_empty() {
                    factors.push(mono);
                }
                factors.push(d);
                format!("{}{}", if neg { "-" } else { "" }, factors.join("*"))
            } else {
                format!("({cs})*{d}")
            };
            pieces.push(piece);
        }
        if let Some(t) = &self.tail {
            pieces.push(format!("O(v >= {} + {}*n, n > {})", t.t0, t.t1, t.start));
        }
        if let Some(t) = &self.neg_tail {
            pieces.push(format!("O(v >= {} + {}*n, -n > {})", t.t0, t.t1, t.start));
        }
        if pieces.is_empty() {
            return write!(f, "0");
        }
        write!(f, "{}", pieces[0])?;
        for p in &pieces[1..] {
            match p.strip_prefix('-') {
                Some(rest) => write!(f, " - {rest}")?,
                None => write!(f, " + {p}")?,
            }
        }
        Ok(())
    }
}

/// Cartesian product of per-axis ranges `0..=bounds[i]`.
fn multi_range(bounds: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for &b in bounds {
        let mut next = Vec::with_capacity(out.len() * (b as usize + 1));
        for prefix in &out {
            for l in 0..=b {
                let mut v = prefix.clone();
                v.push(l);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Line `v(c_alpha) >= b + s * |alpha|` valid for every term of a positive operator.
fn global_intercept(op: &MicroOp, s: Rational) -> Option<Rational> {
    let mut b = op
        .tail
        .as_ref()
        .map(|t| t.t0 + (t.t1 - s) * int(t.start + 1));
    for (a, v) in op.valuations() {
        b = rmin(b, int(v) - s * int(floor(a)));
    }
    b
}

/// Generalized Leibniz product: `d^a f = sum_l C(a, l) d^l(f) d^(a-l)`, valid for all integer a.
pub(crate) fn leibniz(p: &MicroOp, q: &MicroOp, cfg: &MulConfig) -> Result<MicroOp> {
    p.ctx.check_compatible(&q.ctx)?;
    let ctx = Ctx {
        prec: p.ctx.prec.min(q.ctx.prec),
        deg_cap: p.ctx.deg_cap.min(q.ctx.deg_cap),
        ..p.ctx
    };
    let tailed = !(p.is_exact() && q.is_exact());
    let prune = if tailed { None } else { cfg.prune };
    if tailed && !(p.is_positive() && q.is_positive() && p.neg_tail.is_none() && q.neg_tail.is_none()) {
        return Err(MicroError::InsufficientTruncation(
            "tail certificates are only propagated through products of positive operators".into(),
        ));
    }
    let mut terms: BTreeMap<Exponent, TateSeries> = BTreeMap::new();
    let mut derivs: HashMap<(Exponent, Vec<u32>), TateSeries> = HashMap::new();
    for (a, c) in &p.terms {
        for (b, d) in &q.terms {
            let degs = d.axis_degrees();
            let bounds: Vec<u32> = a
                .iter()
                .zip(&degs)
                .map(|(&ai, &di)| if ai >= 0 { di.min(ai as u32) } else { di })
                .collect();
            for l in multi_range(&bounds) {
                let mut coef = PadicScalar::one(ctx.prime, ctx.prec);
                for (&ai, &li) in a.iter().zip(&l) {
                    if li > 0 {
                        coef = coef.mul(&binomial_signed(ctx.prime, ai, li as u64, ctx.prec))?;
                    }
                }
                if coef.is_zero() {
                    continue;
                }
                let key = (b.clone(), l.clone());
                let dl = match derivs.get(&key) {
                    Some(x) => x.clone(),
                    None => {
                        let x = d.derive_multi(&l)?;
                        derivs.insert(key, x.clone());
                        x
                    }
                };
                if dl.is_zero() {
                    continue;
                }
                let gamma: Exponent = a
                    .iter()
                    .zip(b)
                    .zip(&l)
                    .map(|((&ai, &bi), &li)| ai + bi - li as i64)
                    .collect();
                let term = c.mul(&dl)?.scale(&coef)?;
                if let Some(pr) = prune {
                    let small = term.spectral_valuation().map_or(true, |v| {
                        crate::micro_op::weight(&gamma, pr.level.k, pr.level.r) - v < pr.below
                    });
                    if small {
                        continue;
                    }
                }
                for &g in &gamma {
                    if g.abs() > cfg.window {
                        return Err(MicroError::WindowOverflow {
                            exponent: g,
                            cap: cfg.window,
                        });
                    }
                }
                add_into(&mut terms, gamma, term)?;
            }
        }
    }
    let mut out = MicroOp {
        ctx,
        terms,
        tail: None,
        neg_tail: None,
    };
    if tailed {
        if p.terms.is_empty() && p.tail.is_none() || q.terms.is_empty() && q.tail.is_none() {
            return Ok(MicroOp::zero(ctx));
        }
        let s = [&p.tail, &q.tail]
            .iter()
            .filter_map(|t| t.as_ref().map(|t| t.t1))
            .min()
            .unwrap();
        if s <= Rational::zero() {
            return Err(MicroError::InsufficientTruncation(
                "tail slope must be positive to bound a product".into(),
            ));
        }
        let deg_q = q.terms.values().map(|f| f.total_degree() as i64).max().unwrap_or(0);
        let mut start = i64::MAX;
        if let Some(t) = &q.tail {
            start = start.min(t.start);
        }
        if let Some(t) = &p.tail {
            start = start.min(t.start - deg_q);
        }
        let bp = global_intercept(p, s).unwrap();
        let bq = global_intercept(q, s).unwrap();
        let infinite = p.tail.as_ref().is_some_and(|t| t.infinite) || q.tail.as_ref().is_some_and(|t| t.infinite);
        out = out.with_tail(TailCertificate {
            start,
            t0: bp + bq,
            t1: s,
            infinite,
        });
    }
    Ok(out)
}

/// `|PQ - QP|_k / (|P|_k |Q|_k)`.
pub fn quasi_abelian_defect(p: &MicroOp, q: &MicroOp, k: i64) -> Result<Norm> {
    let np = p.norm_k(k)?;
    let nq = q.norm_k(k)?;
    let comm = p.compose(q)?.sub(&q.compose(p)?)?;
    comm.norm_k(k)?.div(np.mul(nq))
}
