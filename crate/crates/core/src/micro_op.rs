//! Laurent operators: the weight `[alpha, k, r]`, mixed products and the
//! norms of the E_k and F_{k,r} completions.

use serde::{Deserialize, Serialize};

use crate::ctx::DEFAULT_WINDOW;
use crate::diff_op::{floor, leibniz, MicroOp};
use crate::error::{MicroError, Result};
use crate::norm::{int, Norm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MulConfig {
    /// Per-axis cap on |exponent| of any output term.
    pub window: i64,
    /// Drop contributions below a weighted floor (exact operands only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prune: Option<Prune>,
}

impl MulConfig {
    pub fn new(window: i64) -> Self {
        MulConfig { window, prune: None }
    }
}

impl Default for MulConfig {
    fn default() -> Self {
        MulConfig::new(DEFAULT_WINDOW)
    }
}

/// A product contribution `c d^gamma` is dropped when
/// `weight(gamma, k, r) - v(c) < below`; the window is only enforced on
/// what is kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prune {
    pub level: LevelParams,
    pub below: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelParams {
    pub k: i64,
    pub r: i64,
}

impl LevelParams {
    pub fn new(k: i64, r: i64) -> Result<Self> {
        if !(k >= r && r >= 1) {
            return Err(MicroError::InvalidLevel(format!("need k >= r >= 1, got k={k}, r={r}")));
        }
        Ok(LevelParams { k, r })
    }
}

/// `k * floor(alpha)` when `floor(alpha) >= 0`, else `r * floor(alpha)`.
pub fn weight(alpha: &[i64], k: i64, r: i64) -> i64 {
    let f = floor(alpha);
    if f >= 0 {
        k * f
    } else {
        r * f
    }
}

pub fn mul(s: &MicroOp, t: &MicroOp, cfg: &MulConfig) -> Result<MicroOp> {
    leibniz(s, t, cfg)
}

#[allow(non_snake_case)]
pub fn norm_Ek(s: &MicroOp, k: i64) -> Result<Norm> {
    Ok(s.scan(int(k), int(k))?.norm)
}

/// Largest and smallest floor(alpha) achieving the E_k norm.
pub fn orders_ek(s: &MicroOp, k: i64) -> Result<(i64, i64)> {
    let sc = s.scan(int(k), int(k))?;
    match (sc.upper_order(), sc.lower_order()) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(MicroError::ZeroOperator),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FkrNorm {
    pub norm: Norm,
    /// Norm of the part with floor(alpha) >= 0, if its tail certifies on its own.
    pub positive: Option<Norm>,
    /// Norm of the part with floor(alpha) < 0, likewise.
    pub negative: Option<Norm>,
}

#[allow(non_snake_case)]
pub fn norm_Fkr(s: &MicroOp, lp: LevelParams) -> Result<FkrNorm> {
    let (k, r) = (int(lp.k), int(lp.r));
    let norm = s.scan(k, r)?.norm;
    let (pos, neg) = s.split_by_floor();
    Ok(FkrNorm {
        norm,
        positive: pos.scan(k, r).ok().map(|sc| sc.norm),
        negative: neg.scan(k, r).ok().map(|sc| sc.norm),
    })
}

pub fn sector_split(s: &MicroOp) -> (MicroOp, MicroOp) {
    s.split_by_floor()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctx::Ctx;
    use crate::norm::rat;
    use crate::tate::TateSeries;
    use proptest::prelude::*;

    fn c() -> Ctx {
        Ctx::default()
    }

    fn dpow(n: i64) -> MicroOp {
        MicroOp::partial_pow(c(), vec![n]).unwrap()
    }

    fn x() -> MicroOp {
        MicroOp::function(TateSeries::var(c(), 1).unwrap())
    }

    fn cfg() -> MulConfig {
        MulConfig::default()
    }

    #[test]
    fn pruning_drops_small_contributions() {
        // d^-1 x^2 = x^2 d^-1 - 2x d^-2 + 2 d^-3, norms p^-1, p^-3, p^-4 at k = r = 1
        let x2 = x().compose(&x()).unwrap();
        let full = mul(&dpow(-1), &x2, &cfg()).unwrap();
        assert_eq!(full.num_terms(), 3);
        let pruned = MulConfig {
            window: 2,
            prune: Some(Prune { level: LevelParams { k: 1, r: 1 }, below: -2 }),
        };
        let kept = mul(&dpow(-1), &x2, &pruned).unwrap();
        assert_eq!(kept.terms().map(|(a, _)| a[0]).collect::<Vec<_>>(), vec![-1]);
        // without pruning the d^-3 term trips the window
        assert!(matches!(
            mul(&dpow(-1), &x2, &MulConfig::new(2)),
            Err(MicroError::WindowOverflow { .. })
        ));
    }

    #[test]
    fn weight_examples() {
        for (k, r) in [(2, 1), (3, 1), (3, 2)] {
            assert_eq!(weight(&[2, -3], k, r), -r);
            assert_eq!(weight(&[0, 0], k, r), 0);
            assert_eq!(weight(&[-2], k, r), -2 * r);
            let c2 = Ctx::with_dim(2);
            let m = MicroOp::partial_pow(c2, vec![2, -3]).unwrap();
            let lp = LevelParams::new(k, r).unwrap();
            assert_eq!(norm_Fkr(&m, lp).unwrap().norm, Norm::pow(-r));
        }
        assert!(LevelParams::new(1, 2).is_err());
        assert!(LevelParams::new(1, 0).is_err());
    }

    #[test]
    fn mul_examples() {
        let dinv = dpow(-1);
        let got = mul(&dinv, &x(), &cfg()).unwrap();
        let want = x().compose(&dpow(0)).unwrap();
        let want = mul(&want, &dinv, &cfg()).unwrap().sub(&dpow(-2)).unwrap();
        assert_eq!(got, want);
        assert_eq!(got.to_string(), "-d^-2 + x*d^-1");
        let s = MicroOp::scalar(c(), c().scalar(5));
        assert_eq!(
            mul(&dinv, &s, &cfg()).unwrap(),
            mul(&s, &dinv, &cfg()).unwrap()
        );
        for (k, r) in [(2, 1), (3, 1), (5, 2)] {
            let a = dpow(1).scale(&c().p_pow(k)).unwrap();
            let b = dpow(-1).scale(&c().p_pow(-r)).unwrap();
            let ab = mul(&a, &b, &cfg()).unwrap();
            assert_eq!(ab, MicroOp::scalar(c(), c().p_pow(k - r)));
            let lp = LevelParams::new(k, r).unwrap();
            assert_eq!(norm_Fkr(&ab, lp).unwrap().norm, Norm::pow(r - k));
        }
    }

    #[test]
    fn window_overflow() {
        let a = dpow(40);
        assert!(matches!(
            mul(&a, &a, &cfg()),
            Err(MicroError::WindowOverflow { .. })
        ));
    }

    #[test]
    fn ek_examples() {
        for k in 1..5 {
            assert_eq!(norm_Ek(&dpow(-1), k).unwrap(), Norm::pow(-k));
            assert_eq!(norm_Ek(&MicroOp::one(c()), k).unwrap(), Norm::one());
        }
        let s = mul(&dpow(-1), &x(), &cfg()).unwrap();
        assert_eq!(norm_Ek(&s, 2).unwrap(), Norm::pow(-2));
        assert_eq!(orders_ek(&s, 2).unwrap(), (-1, -1));
    }

    #[test]
    fn fkr_examples() {
        let lp = LevelParams::new(3, 1).unwrap();
        assert_eq!(norm_Fkr(&dpow(-1), lp).unwrap().norm, Norm::pow(-1));
        for n in -10..=10 {
            let got = norm_Fkr(&dpow(n), lp).unwrap().norm;
            assert_eq!(got, Norm::pow(weight(&[n], 3, 1)));
        }
        let s = dpow(2).add(&dpow(-3).scale(&c().p_pow(-5)).unwrap()).unwrap();
        let f = norm_Fkr(&s, lp).unwrap();
        assert_eq!(f.positive, Some(Norm::pow(6)));
        assert_eq!(f.negative, Some(Norm::pow(2)));
        assert_eq!(f.norm, Norm::pow(6));
    }

    #[test]
    fn split_examples() {
        let s = MicroOp::one(c()).add(&dpow(-1)).unwrap();
        let (p, n) = sector_split(&s);
        assert_eq!(p, MicroOp::one(c()));
        assert_eq!(n, dpow(-1));
        let (p2, n2) = sector_split(&p);
        assert_eq!(p2, p);
        assert!(n2.is_zero());
        let c2 = Ctx::with_dim(2);
        let a = MicroOp::partial_pow(c2, vec![1, -2]).unwrap();
        let b = MicroOp::partial_pow(c2, vec![2, -1]).unwrap();
        let (pp, nn) = sector_split(&a.add(&b).unwrap());
        assert_eq!(pp, b);
        assert_eq!(nn, a);
        assert_eq!(pp.add(&nn).unwrap(), a.add(&b).unwrap());
    }

    #[test]
    fn negative_tail_certification() {
        let s = dpow(0).with_neg_tail(crate::diff_op::TailCertificate::new(0, int(0), rat(1, 2)));
        assert_eq!(norm_Ek(&s, 1).unwrap(), Norm::one());
        let lp = LevelParams::new(2, 1).unwrap();
        let f = norm_Fkr(&s, lp).unwrap();
        assert_eq!(f.norm, Norm::one());
        assert_eq!(f.negative, None);
        let weak = dpow(0).with_neg_tail(crate::diff_op::TailCertificate::new(0, int(-2), int(-1)));
        assert!(norm_Fkr(&weak, lp).is_err());
    }

    fn arb_laurent(lo: i64, hi: i64) -> impl Strategy<Value = MicroOp> {
        proptest::collection::vec(
            (lo..=hi, 0u32..3, -3i64..4, prop_oneof![Just(1i64), Just(-1), Just(3)]),
            1..4,
        )
        .prop_map(|ts| {
            let ctx = c();
            MicroOp::from_terms(
                ctx,
                ts.into_iter().map(|(n, e, v, u)| {
                    let f = TateSeries::monomial(ctx, vec![e], ctx.p_pow(v).mul(&ctx.scalar(u)).unwrap()).unwrap();
                    (vec![n], f)
                }),
            )
            .unwrap()
        })
        .prop_filter("nonzero", |p| !p.is_zero())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ek_multiplicative(s in arb_laurent(-3, 3), t in arb_laurent(-3, 3), k in 1i64..4) {
            let st = mul(&s, &t, &cfg()).unwrap();
            prop_assert_eq!(norm_Ek(&st, k).unwrap(), norm_Ek(&s, k).unwrap().mul(norm_Ek(&t, k).unwrap()));
        }

        #[test]
        fn fkr_submultiplicative(s in arb_laurent(-3, 3), t in arb_laurent(-3, 3), k in 1i64..4, r in 1i64..4) {
            prop_assume!(r <= k);
            let lp = LevelParams::new(k, r).unwrap();
            let st = mul(&s, &t, &cfg()).unwrap();
            prop_assert!(norm_Fkr(&st, lp).unwrap().norm <= norm_Fkr(&s, lp).unwrap().norm.mul(norm_Fkr(&t, lp).unwrap().norm));
        }

        #[test]
        fn fkr_sector_multiplicative(s in arb_laurent(-3, -1), t in arb_laurent(-3, -1), k in 1i64..4, r in 1i64..4) {
            prop_assume!(r <= k);
            let lp = LevelParams::new(k, r).unwrap();
            let st = mul(&s, &t, &cfg()).unwrap();
            prop_assert_eq!(norm_Fkr(&st, lp).unwrap().norm, norm_Fkr(&s, lp).unwrap().norm.mul(norm_Fkr(&t, lp).unwrap().norm));
        }

        #[test]
        fn level_monotonicity(s in arb_laurent(-3, 3), k in 1i64..4, r in 1i64..3) {
            prop_assume!(r <= k);
            let lo = norm_Fkr(&s, LevelParams::new(k, r).unwrap()).unwrap();
            let hi = norm_Fkr(&s, LevelParams::new(k + 1, r).unwrap()).unwrap();
            prop_assert!(lo.positive <= hi.positive);
            prop_assert_eq!(lo.negative, hi.negative);
            if r + 1 <= k {
                let r2 = norm_Fkr(&s, LevelParams::new(k, r + 1).unwrap()).unwrap();
                prop_assert!(r2.norm <= lo.norm);
            }
        }

        #[test]
        fn ek_quasi_abelian(s in arb_laurent(-3, 3), t in arb_laurent(-3, 3), k in 1i64..4) {
            let st = mul(&s, &t, &cfg()).unwrap();
            let ts = mul(&t, &s, &cfg()).unwrap();
            let c = norm_Ek(&st.sub(&ts).unwrap(), k).unwrap();
            let bound = norm_Ek(&s, k).unwrap().mul(norm_Ek(&t, k).unwrap()).mul(Norm::pow(-k));
            prop_assert!(c <= bound);
        }

        #[test]
        fn mul_associative(s in arb_laurent(-2, 2), t in arb_laurent(-2, 2), u in arb_laurent(-2, 2)) {
            let a = mul(&mul(&s, &t, &cfg()).unwrap(), &u, &cfg()).unwrap();
            let b = mul(&s, &mul(&t, &u, &cfg()).unwrap(), &cfg()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
