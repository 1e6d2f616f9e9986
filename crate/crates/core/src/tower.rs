//! Unit criteria across the ring tower and inversion by geometric series
//! around the dominant monomial.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::diff_op::{floor, Exponent, MicroOp};
use crate::error::{MicroError, Result};
use crate::micro_op::{mul, LevelParams, MulConfig, Prune};
use crate::newton::{polygon, slope_in_interval};
use crate::norm::{int, Norm, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum RingLevel {
    Dkq { k: i64 },
    Ek { k: i64 },
    Fkr { k: i64, r: i64 },
    Fir { r: i64 },
    Finf,
    Dinf,
}

impl RingLevel {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(MicroError::InvalidLevel(m));
        match *self {
            RingLevel::Dkq { k } if k < 0 => bad(format!("Dkq needs k >= 0, got {k}")),
            RingLevel::Ek { k } if k < 1 => bad(format!("Ek needs k >= 1, got {k}")),
            RingLevel::Fkr { k, r } => LevelParams::new(k, r).map(|_| ()),
            RingLevel::Fir { r } if r < 1 => bad(format!("Fir needs r >= 1, got {r}")),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for RingLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingLevel::Dkq { k } => write!(f, "Dkq(k={k})"),
            RingLevel::Ek { k } => write!(f, "Ek(k={k})"),
            RingLevel::Fkr { k, r } => write!(f, "Fkr(k={k}, r={r})"),
            RingLevel::Fir { r } => write!(f, "Fir(r={r})"),
            RingLevel::Finf => write!(f, "Finf"),
            RingLevel::Dinf => write!(f, "Dinf"),
        }
    }
}

/// Conditions of the unit criteria; each verdict names the one that failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clause {
    /// The operator is zero.
    ZeroOperator,
    /// Dkq / Dinf: the norm is carried by a term of positive order.
    OrderZero,
    /// Ek / Fkr: several coefficients reach the maximal weighted norm.
    UniqueDominant,
    /// The dominant coefficient is not a unit function.
    DominantUnit,
    /// Fkr: a lower term is not dominated at weight r.
    FkrDominance,
    /// Fir: a lower term violates |c_a| < |c_b| p^{r(|b|-|a|)}.
    FirDominance,
    /// Fir / Finf: several top-order coefficients share the maximal norm.
    TopOrderUnique,
    /// Fir / Finf / Dinf: the operator has infinitely many terms.
    NonFinite,
    /// Fir: a certified Newton slope lies in [r, infinity).
    SlopeInRange,
}

impl Clause {
    pub fn id(&self) -> &'static str {
        match self {
            Clause::ZeroOperator => "zero-operator",
            Clause::OrderZero => "order-zero",
            Clause::UniqueDominant => "unique-dominant",
            Clause::DominantUnit => "dominant-unit",
            Clause::FkrDominance => "fkr-dominance",
            Clause::FirDominance => "fir-dominance",
            Clause::TopOrderUnique => "top-order-unique",
            Clause::NonFinite => "non-finite",
            Clause::SlopeInRange => "slope-in-range",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    Dominant {
        beta: Exponent,
        /// Finite (k, r) at which the criterion holds, for Fir and Finf.
        realized_at: Option<LevelParams>,
    },
    Violated {
        clause: Clause,
        alpha: Option<Exponent>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnitVerdict {
    pub invertible: bool,
    pub level: RingLevel,
    pub witness: Witness,
}

impl UnitVerdict {
    fn yes(level: RingLevel, beta: Exponent, realized_at: Option<LevelParams>) -> Self {
        UnitVerdict {
            invertible: true,
            level,
            witness: Witness::Dominant { beta, realized_at },
        }
    }

    fn no(level: RingLevel, clause: Clause, alpha: Option<Exponent>) -> Self {
        UnitVerdict {
            invertible: false,
            level,
            witness: Witness::Violated { clause, alpha },
        }
    }

    pub fn clause(&self) -> Option<Clause> {
        match &self.witness {
            Witness::Violated { clause, .. } => Some(*clause),
            _ => None,
        }
    }

    pub fn beta(&self) -> Option<&Exponent> {
        match &self.witness {
            Witness::Dominant { beta, .. } => Some(beta),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        let witness = match &self.witness {
            Witness::Dominant { beta, realized_at } => match realized_at {
                Some(lp) => json!({"beta": beta, "realized_at": {"k": lp.k, "r": lp.r}}),
                None => json!({"beta": beta}),
            },
            Witness::Violated { clause, alpha } => json!({"violated": clause.id(), "alpha": alpha}),
        };
        json!({
            "invertible": self.invertible,
            "level": serde_json::to_value(self.level).expect("level serializes"),
            "witness": witness,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Surconvergence {
    Finite(i64),
    Infinite,
    Unknown,
}

pub fn classify_surconvergent(p: &MicroOp) -> Surconvergence {
    if p.is_exact() {
        return Surconvergence::Finite(p.finite_order().unwrap_or(0));
    }
    let flagged = [p.tail(), p.neg_tail()]
        .into_iter()
        .flatten()
        .any(|t| t.infinite);
    if flagged {
        Surconvergence::Infinite
    } else {
        Surconvergence::Unknown
    }
}

fn coeff_is_unit(p: &MicroOp, beta: &[i64]) -> Result<bool> {
    match p.coeff(beta) {
        None => Ok(false),
        Some(f) => f.is_unit(),
    }
}

/// Dominant exponent at weights (k on floor >= 0, r below), or the tie.
fn dominant(p: &MicroOp, k: i64, r: i64) -> Result<std::result::Result<Exponent, Exponent>> {
    let sc = p.scan(int(k), int(r))?;
    match sc.argmax.len() {
        0 => Err(MicroError::ZeroOperator),
        1 => Ok(Ok(sc.argmax[0].clone())),
        _ => {
            // report the tie partner of largest order as the offender
            let mut tie = sc.argmax.clone();
            tie.sort_by_key(|a| floor(a));
            Ok(Err(tie[tie.len() - 2].clone()))
        }
    }
}

fn vals(p: &MicroOp) -> Vec<(Exponent, i64)> {
    p.valuations().map(|(a, v)| (a.clone(), v)).collect()
}

fn check_ek(p: &MicroOp, k: i64, level: RingLevel) -> Result<std::result::Result<Exponent, UnitVerdict>> {
    match dominant(p, k, k)? {
        Err(alpha) => Ok(Err(UnitVerdict::no(level, Clause::UniqueDominant, Some(alpha)))),
        Ok(beta) => {
            if !coeff_is_unit(p, &beta)? {
                return Ok(Err(UnitVerdict::no(level, Clause::DominantUnit, Some(beta))));
            }
            Ok(Ok(beta))
        }
    }
}

fn check_fkr(p: &MicroOp, k: i64, r: i64, level: RingLevel) -> Result<UnitVerdict> {
    let beta = match check_ek(p, k, level)? {
        Err(v) => return Ok(v),
        Ok(b) => b,
    };
    let vb = p.coeff(&beta).and_then(|f| f.spectral_valuation()).unwrap();
    let fb = floor(&beta);
    let top = int(r * fb - vb);
    for (a, v) in vals(p) {
        if floor(&a) < fb && int(r * floor(&a) - v) >= top {
            return Ok(UnitVerdict::no(level, Clause::FkrDominance, Some(a)));
        }
    }
    if let Some(t) = p.neg_tail() {
        match t.weighted_bound(-int(r)) {
            Some(b) if b < top => {}
            _ => {
                return Err(MicroError::InsufficientTruncation(
                    "negative tail does not certify the lower-sector dominance".into(),
                ))
            }
        }
    }
    Ok(UnitVerdict::yes(level, beta, None))
}

/// Finite positive operator: the top-order dominant exponent, or the verdict that refutes it.
fn top_order(p: &MicroOp, level: RingLevel) -> Result<std::result::Result<(Exponent, i64, i64), UnitVerdict>> {
    let q = match classify_surconvergent(p) {
        Surconvergence::Finite(q) => q,
        Surconvergence::Infinite => return Ok(Err(UnitVerdict::no(level, Clause::NonFinite, None))),
        Surconvergence::Unknown => {
            return Err(MicroError::UndecidableFiniteness(
                "truncated operator without an infinite-tail certificate".into(),
            ))
        }
    };
    let mut top: Vec<(Exponent, i64)> = vals(p).into_iter().filter(|(a, _)| floor(a) == q).collect();
    top.sort_by_key(|(_, v)| *v);
    let (beta, vb) = top[0].clone();
    if top.len() > 1 && top[1].1 == vb {
        return Ok(Err(UnitVerdict::no(level, Clause::TopOrderUnique, Some(top[1].0.clone()))));
    }
    if !coeff_is_unit(p, &beta)? {
        return Ok(Err(UnitVerdict::no(level, Clause::DominantUnit, Some(beta))));
    }
    Ok(Ok((beta, q, vb)))
}

/// Smallest integer r >= 1 with v_b - v_a < r (q - |a|) for every lower term.
fn minimal_r(p: &MicroOp, q: i64, vb: i64) -> i64 {
    let mut r = 1;
    for (a, v) in vals(p) {
        let n = floor(&a);
        if n < q {
            let ratio = Rational::new(vb - v, q - n);
            r = r.max(ratio.floor().to_integer() + 1);
        }
    }
    r
}

pub fn check_unit(p: &MicroOp, level: RingLevel) -> Result<UnitVerdict> {
    level.validate()?;
    if p.is_zero() {
        return Ok(UnitVerdict::no(level, Clause::ZeroOperator, None));
    }
    match level {
        RingLevel::Dkq { k } => {
            p.require_positive()?;
            let sc = p.scan(int(k), int(k))?;
            let n = sc.upper_order().ok_or(MicroError::ZeroOperator)?;
            if n != 0 {
                let alpha = sc.argmax.iter().find(|a| floor(a) == n).cloned();
                return Ok(UnitVerdict::no(level, Clause::OrderZero, alpha));
            }
            let zero = vec![0; p.dim()];
            if !coeff_is_unit(p, &zero)? {
                return Ok(UnitVerdict::no(level, Clause::DominantUnit, Some(zero)));
            }
            Ok(UnitVerdict::yes(level, zero, None))
        }
        RingLevel::Ek { k } => Ok(match check_ek(p, k, level)? {
            Ok(beta) => UnitVerdict::yes(level, beta, None),
            Err(v) => v,
        }),
        RingLevel::Fkr { k, r } => check_fkr(p, k, r, level),
        RingLevel::Fir { r } => {
            p.require_positive()?;
            let top = match top_order(p, level) {
                Err(MicroError::UndecidableFiniteness(msg)) => {
                    // a certified slope in [r, t1) already rules out every F_{k,r}
                    return match slope_witness(p, r)? {
                        true => Ok(UnitVerdict::no(level, Clause::SlopeInRange, None)),
                        false => Err(MicroError::UndecidableFiniteness(msg)),
                    };
                }
                other => other?,
            };
            let (beta, q, vb) = match top {
                Err(v) => return Ok(v),
                Ok(t) => t,
            };
            for (a, v) in vals(p) {
                if a != beta && r * floor(&a) - v >= r * q - vb {
                    return Ok(UnitVerdict::no(level, Clause::FirDominance, Some(a)));
                }
            }
            Ok(UnitVerdict::yes(level, beta, Some(LevelParams { k: r, r })))
        }
        RingLevel::Finf => {
            p.require_positive()?;
            match top_order(p, level)? {
                Err(v) => Ok(v),
                Ok((beta, q, vb)) => {
                    let r = minimal_r(p, q, vb);
                    Ok(UnitVerdict::yes(level, beta, Some(LevelParams { k: r, r })))
                }
            }
        }
        RingLevel::Dinf => {
            p.require_positive()?;
            let zero = vec![0; p.dim()];
            if let Some((a, _)) = p.terms().find(|(a, _)| **a != zero) {
                return Ok(UnitVerdict::no(level, Clause::OrderZero, Some(a.clone())));
            }
            match classify_surconvergent(p) {
                Surconvergence::Infinite => return Ok(UnitVerdict::no(level, Clause::NonFinite, None)),
                Surconvergence::Unknown => {
                    return Err(MicroError::UndecidableFiniteness(
                        "function part known but the tail is uncertified".into(),
                    ))
                }
                Surconvergence::Finite(_) => {}
            }
            if !coeff_is_unit(p, &zero)? {
                return Ok(UnitVerdict::no(level, Clause::DominantUnit, Some(zero)));
            }
            Ok(UnitVerdict::yes(level, zero, None))
        }
    }
}

/// Some certified slope lies in [r, infinity).
fn slope_witness(p: &MicroOp, r: i64) -> Result<bool> {
    let np = polygon(p)?;
    Ok(np
        .slopes
        .iter()
        .zip(&np.certified)
        .any(|(&s, &c)| c && s >= int(r)))
}

/// True iff the Newton polygon has no slope in [r, k].
pub fn slope_criterion_check(p: &MicroOp, r: i64, k: i64) -> Result<bool> {
    Ok(!slope_in_interval(p, int(r), int(k))?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InvertConfig {
    pub window: i64,
    /// Target: residual norm at most p^{-residual}.
    pub residual: i64,
    /// Hard cap on geometric-series terms.
    pub max_terms: usize,
}

impl Default for InvertConfig {
    fn default() -> Self {
        InvertConfig {
            window: crate::ctx::DEFAULT_WINDOW,
            residual: 20,
            max_terms: 512,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Inversion {
    pub inverse: MicroOp,
    /// Number of geometric-series terms summed.
    pub terms: usize,
    /// Norm of P*S - 1 at the measuring level.
    pub residual: Norm,
    pub measured_at: LevelParams,
}

/// Right inverse S with P*S - 1 small at the level's norm.
pub fn invert(p: &MicroOp, level: RingLevel, cfg: &InvertConfig) -> Result<Inversion> {
    let verdict = check_unit(p, level)?;
    let (beta, realized) = match &verdict.witness {
        Witness::Violated { clause, alpha } => {
            return Err(MicroError::NotInvertible(match alpha {
                Some(a) => format!("{} at {:?}", clause.id(), a),
                None => clause.id().to_string(),
            }))
        }
        Witness::Dominant { beta, realized_at } => (beta.clone(), *realized_at),
    };
    let (k, r) = match level {
        RingLevel::Dkq { k } => (k, k),
        RingLevel::Ek { k } => (k, k),
        RingLevel::Fkr { k, r } => (k, r),
        RingLevel::Fir { .. } | RingLevel::Finf => {
            let lp = realized.expect("finite level recorded");
            (lp.k, lp.r)
        }
        RingLevel::Dinf => (1, 1),
    };
    let level = LevelParams { k, r };
    // contributions below the floor cannot move the residual past the target
    let floor_at = |below: i64| MulConfig {
        window: cfg.window,
        prune: Some(Prune { level, below }),
    };
    let mcfg = floor_at(-cfg.residual - 2);
    let ctx = p.ctx();
    let one = MicroOp::one(ctx);
    let cb = p.coeff(&beta).expect("dominant coefficient").invert_unit()?;
    let neg_beta: Exponent = beta.iter().map(|b| -b).collect();
    let m_inv = mul(&MicroOp::partial_pow(ctx, neg_beta)?, &MicroOp::function(cb), &mcfg)?;
    let rem = mul(&m_inv, p, &mcfg)?.sub(&one)?;
    let target = Norm::pow(-cfg.residual);
    let p_exp = match p.scan(int(k), int(r))?.norm {
        Norm::Pow(e) => e.ceil().to_integer(),
        Norm::Zero => return Err(MicroError::ZeroOperator),
    };
    let scfg = floor_at(-cfg.residual - 2 - p_exp.max(0));
    let measure = |s: &MicroOp| -> Result<Norm> {
        let res = mul(p, s, &mcfg)?.sub(&one)?;
        Ok(res.scan(int(k), int(r))?.norm)
    };
    let ratio = rem.scan(int(k), int(r))?.norm;
    let rho = match ratio {
        Norm::Zero => {
            let residual = measure(&m_inv)?;
            return Ok(Inversion {
                inverse: m_inv,
                terms: 1,
                residual,
                measured_at: level,
            });
        }
        Norm::Pow(e) => -e,
    };
    if rho <= Rational::from_integer(0) {
        return Err(MicroError::NotInvertible(format!(
            "geometric ratio {ratio} is not below 1"
        )));
    }
    // P S_J - 1 = -M (-R)^{J+1} M^{-1}, so about target / rho terms suffice
    let want = (Rational::from_integer(cfg.residual) / rho).ceil().to_integer().max(1) as usize;
    let minus_r = rem.neg();
    let mut sum = one.clone();
    let mut power = one.clone();
    let mut terms = 1usize;
    let mut goal = want.min(cfg.max_terms);
    loop {
        while terms < goal {
            power = mul(&power, &minus_r, &mcfg)?;
            sum = sum.add(&power)?;
            terms += 1;
        }
        let s = mul(&sum, &m_inv, &scfg)?;
        let residual = measure(&s)?;
        if residual <= target {
            return Ok(Inversion {
                inverse: s,
                terms,
                residual,
                measured_at: level,
            });
        }
        if terms >= cfg.max_terms {
            return Err(MicroError::InsufficientTruncation(format!(
                "residual {residual} above target after {terms} terms"
            )));
        }
        goal = (terms + (terms / 2).max(1)).min(cfg.max_terms);
    }
}
