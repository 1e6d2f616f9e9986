//! Evaluation of parsed expressions to operators.

use microdiff_core::catalog::{gauss_op, product_op, truncated_cofactor};
use microdiff_core::micro_op::mul;
use microdiff_core::padic::PadicScalar;
use microdiff_core::{Ctx, MicroOp, MulConfig, TateSeries};

use crate::expr::{CompKind, Expr, ExprKind, Symbol};
use crate::CliError;

#[derive(Clone, Copy, Debug)]
pub struct EvalConfig {
    pub ctx: Ctx,
    pub window: i64,
    /// Keep comprehensions as the finite operators they spell out, without
    /// attaching the catalog tail certificates.
    pub literal: bool,
}

impl EvalConfig {
    pub fn new(ctx: Ctx) -> Self {
        EvalConfig {
            ctx,
            window: microdiff_core::ctx::DEFAULT_WINDOW,
            literal: false,
        }
    }
}

const MAX_RANGE: i64 = 4096;

#[derive(Clone, Debug)]
enum Val {
    Int(i128),
    Op(MicroOp),
}

fn at(e: &Expr, msg: impl Into<String>) -> CliError {
    CliError::Eval {
        pos: e.span.start,
        msg: msg.into(),
    }
}

struct Eval<'a> {
    cfg: &'a EvalConfig,
    env: Vec<(String, i128)>,
}

impl Eval<'_> {
    fn ctx(&self) -> Ctx {
        self.cfg.ctx
    }

    fn mcfg(&self) -> MulConfig {
        MulConfig::new(self.cfg.window)
    }

    fn op(&self, v: Val) -> MicroOp {
        match v {
            Val::Op(o) => o,
            Val::Int(n) => {
                let c = self.ctx();
                MicroOp::scalar(c, PadicScalar::from_i128(c.prime, n, c.prec))
            }
        }
    }

    fn int(&mut self, e: &Expr, what: &str) -> Result<i64, CliError> {
        match self.eval(e)? {
            Val::Int(n) => i64::try_from(n).map_err(|_| at(e, format!("{what} out of range"))),
            Val::Op(_) => Err(at(e, format!("{what} must be an integer"))),
        }
    }

    fn axis(&self, e: &Expr, s: Symbol, i: usize) -> Result<usize, CliError> {
        let dim = self.ctx().dim;
        match i {
            0 if dim == 1 => Ok(1),
            i if i >= 1 && i <= dim => Ok(i),
            _ => Err(CliError::UnknownSymbol {
                name: s.to_string(),
                pos: e.span.start,
            }),
        }
    }

    fn symbol(&self, e: &Expr, s: Symbol) -> Result<MicroOp, CliError> {
        let c = self.ctx();
        Ok(match s {
            Symbol::P => MicroOp::scalar(c, c.p_pow(1)),
            Symbol::X(i) => MicroOp::function(TateSeries::var(c, self.axis(e, s, i)?)?),
            Symbol::D(i) | Symbol::Dinv(i) => {
                let axis = self.axis(e, s, i)?;
                let mut alpha = vec![0; c.dim];
                alpha[axis - 1] = if matches!(s, Symbol::D(_)) { 1 } else { -1 };
                MicroOp::partial_pow(c, alpha)?
            }
        })
    }

    fn eval(&mut self, e: &Expr) -> Result<Val, CliError> {
        let c = self.ctx();
        match &e.kind {
            ExprKind::Int(n) => Ok(Val::Int(*n)),
            ExprKind::Rat(a, b) => {
                let num = PadicScalar::from_i128(c.prime, *a, c.prec);
                let s = if *a == 0 { num } else { num.div(&PadicScalar::from_i128(c.prime, *b, c.prec))? };
                Ok(Val::Op(MicroOp::scalar(c, s)))
            }
            ExprKind::Sym(s) => Ok(Val::Op(self.symbol(e, *s)?)),
            ExprKind::Var(v) => {
                let n = self.env.iter().rev().find(|(name, _)| name == v).map(|(_, n)| *n);
                n.map(Val::Int).ok_or_else(|| at(e, format!("unbound index `{v}`")))
            }
            ExprKind::Neg(a) => Ok(match self.eval(a)? {
                Val::Int(n) => Val::Int(-n),
                Val::Op(o) => Val::Op(o.neg()),
            }),
            ExprKind::Add(a, b) | ExprKind::Sub(a, b) => {
                let sub = matches!(e.kind, ExprKind::Sub(..));
                let (x, y) = (self.eval(a)?, self.eval(b)?);
                if let (Val::Int(m), Val::Int(n)) = (&x, &y) {
                    let r = if sub { m.checked_sub(*n) } else { m.checked_add(*n) };
                    return r.map(Val::Int).ok_or_else(|| at(e, "integer overflow"));
                }
                let (x, y) = (self.op(x), self.op(y));
                Ok(Val::Op(if sub { x.sub(&y)? } else { x.add(&y)? }))
            }
            ExprKind::Mul(a, b) => {
                let (x, y) = (self.eval(a)?, self.eval(b)?);
                if let (Val::Int(m), Val::Int(n)) = (&x, &y) {
                    return m.checked_mul(*n).map(Val::Int).ok_or_else(|| at(e, "integer overflow"));
                }
                Ok(Val::Op(mul(&self.op(x), &self.op(y), &self.mcfg())?))
            }
            ExprKind::Pow(a, b) => {
                let n = self.int(b, "exponent")?;
                let base = self.eval(a)?;
                self.power(e, base, n)
            }
            ExprKind::Comp { kind, var, lo, hi, body } => {
                let lo = self.int(lo, "lower bound")?;
                let hi = self.int(hi, "upper bound")?;
                self.comprehension(*kind, var, lo, hi, body)
            }
        }
    }

    fn power(&mut self, e: &Expr, base: Val, n: i64) -> Result<Val, CliError> {
        let c = self.ctx();
        if let Val::Int(m) = base {
            if n >= 0 {
                let r = u32::try_from(n).ok().and_then(|n| m.checked_pow(n));
                return r.map(Val::Int).ok_or_else(|| at(e, "integer overflow"));
            }
        }
        let base = self.op(base);
        if n >= 0 {
            let mut acc = MicroOp::one(c);
            for _ in 0..n {
                acc = mul(&acc, &base, &self.mcfg())?;
            }
            return Ok(Val::Op(acc));
        }
        // negative powers of scalars and of pure derivation monomials
        let mut terms = base.terms();
        let single = match (terms.next(), terms.next()) {
            (Some(t), None) if base.is_exact() => Some(t),
            _ => None,
        };
        let Some((alpha, f)) = single else {
            return Err(at(e, "negative powers apply only to scalars and derivations"));
        };
        if !f.is_constant() {
            return Err(at(e, "negative powers apply only to scalars and derivations"));
        }
        let s = f.constant_term();
        if alpha.iter().any(|&a| a != 0) && s != c.one() {
            return Err(at(e, "negative powers apply only to scalars and derivations"));
        }
        let inv_s = s.inv()?.pow(-n)?;
        let beta: Vec<i64> = alpha.iter().map(|&a| a * n).collect();
        Ok(Val::Op(MicroOp::monomial(beta, TateSeries::constant(c, inv_s))?))
    }

    fn with_index<T>(
        &mut self,
        var: &str,
        n: i64,
        f: impl FnOnce(&mut Self) -> Result<T, CliError>,
    ) -> Result<T, CliError> {
        self.env.push((var.to_string(), n as i128));
        let r = f(self);
        self.env.pop();
        r
    }

    fn comprehension(&mut self, kind: CompKind, var: &str, lo: i64, hi: i64, body: &Expr) -> Result<Val, CliError> {
        let c = self.ctx();
        if hi.saturating_sub(lo) >= MAX_RANGE {
            return Err(CliError::Eval {
                pos: 0,
                msg: format!("comprehension range {lo}..{hi} exceeds {MAX_RANGE} terms"),
            });
        }
        let mut items = Vec::new();
        for n in lo..=hi {
            let v = self.with_index(var, n, |me| me.eval(body))?;
            items.push(self.op(v));
        }
        if !self.cfg.literal {
            if let Some(op) = self.recognize(kind, lo, hi, &items)? {
                return Ok(Val::Op(op));
            }
        }
        let mcfg = self.mcfg();
        let mut acc = match kind {
            CompKind::Prod => MicroOp::one(c),
            CompKind::Sum => MicroOp::zero(c),
        };
        for item in &items {
            acc = match kind {
                CompKind::Prod => mul(&acc, item, &mcfg)?,
                CompKind::Sum => acc.add(item)?,
            };
        }
        Ok(Val::Op(acc))
    }

    /// Truncations of the catalog operators, checked factor by factor,
    /// come back with the catalog tail certificate attached.
    fn recognize(&self, kind: CompKind, lo: i64, hi: i64, items: &[MicroOp]) -> Result<Option<MicroOp>, CliError> {
        let c = self.ctx();
        if c.dim != 1 || hi < lo.max(1) {
            return Ok(None);
        }
        let expected = |n: i64| -> Result<MicroOp, CliError> {
            Ok(match kind {
                CompKind::Prod => MicroOp::from_scalars(c, vec![(0, c.one()), (1, c.p_pow(n).neg())])?,
                CompKind::Sum => MicroOp::from_scalars(c, vec![(n, c.p_pow(n * n))])?,
            })
        };
        for (n, item) in (lo..=hi).zip(items) {
            if *item != expected(n)? {
                return Ok(None);
            }
        }
        Ok(match kind {
            CompKind::Prod if lo == 1 => Some(product_op(c, hi)?),
            CompKind::Prod if lo > 1 => Some(truncated_cofactor(c, lo - 1, hi)?),
            CompKind::Sum if lo == 0 => Some(gauss_op(c, hi)?),
            _ => None,
        })
    }
}

pub fn evaluate(e: &Expr, cfg: &EvalConfig) -> Result<MicroOp, CliError> {
    let mut ev = Eval { cfg, env: Vec::new() };
    let v = ev.eval(e)?;
    let op = ev.op(v);
    op.check_window(cfg.window)?;
    Ok(op)
}

/// Parse and evaluate in one step.
pub fn eval_str(src: &str, cfg: &EvalConfig) -> Result<MicroOp, CliError> {
    evaluate(&crate::expr::parse(src)?, cfg)
}
