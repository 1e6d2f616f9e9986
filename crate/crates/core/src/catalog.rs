//! Named operators with closed-form valuations and their tail certificates.

use serde::{Deserialize, Serialize};

use crate::ctx::Ctx;
use crate::diff_op::{MicroOp, TailCertificate};
use crate::error::{MicroError, Result};
use crate::norm::{int, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum Generator {
    /// prod_{n >= 1} (1 - p^n d)
    ProductOp,
    /// sum_{n >= 0} p^{n^2} d^n
    GaussOp,
    /// prod_{n > k} (1 - p^n d)
    TruncatedCofactor { k: i64 },
}

impl Generator {
    pub fn build(&self, ctx: Ctx, m: i64) -> Result<MicroOp> {
        match *self {
            Generator::ProductOp => product_op(ctx, m),
            Generator::GaussOp => gauss_op(ctx, m),
            Generator::TruncatedCofactor { k } => truncated_cofactor(ctx, k, m),
        }
    }
}

fn one_dim(ctx: Ctx) -> Result<()> {
    if ctx.dim != 1 {
        return Err(MicroError::InvalidArgument("catalog operators live at d = 1".into()));
    }
    Ok(())
}

fn factor(ctx: Ctx, n: i64) -> Result<MicroOp> {
    MicroOp::from_scalars(ctx, vec![(0, ctx.one()), (1, ctx.p_pow(n).neg())])
}

/// prod_{n = lo}^{hi} (1 - p^n d), expanded exactly.
pub fn finite_product(ctx: Ctx, lo: i64, hi: i64) -> Result<MicroOp> {
    one_dim(ctx)?;
    let mut acc = MicroOp::one(ctx);
    for n in lo..=hi {
        acc = acc.compose(&factor(ctx, n)?)?;
    }
    Ok(acc)
}

/// Truncation at degree M of prod_{n >= 1}(1 - p^n d); beyond M, v(c_n) = n(n+1)/2 >= (M+1)n/2.
pub fn product_op(ctx: Ctx, m: i64) -> Result<MicroOp> {
    if m < 1 {
        return Err(MicroError::InvalidArgument("product_op needs M >= 1".into()));
    }
    let tail = TailCertificate::new(m, int(0), Rational::new(m + 1, 2)).infinite();
    Ok(finite_product(ctx, 1, m)?.with_tail(tail))
}

/// sum_{n <= M} p^{n^2} d^n; beyond M, v(c_n) = n^2 >= M n.
pub fn gauss_op(ctx: Ctx, m: i64) -> Result<MicroOp> {
    one_dim(ctx)?;
    if m < 1 {
        return Err(MicroError::InvalidArgument("gauss_op needs M >= 1".into()));
    }
    let op = MicroOp::from_scalars(ctx, (0..=m).map(|n| (n, ctx.p_pow(n * n))))?;
    Ok(op.with_tail(TailCertificate::new(m, int(0), int(m)).infinite()))
}

/// prod_{n = k+1}^{M} (1 - p^n d) standing for the infinite cofactor
/// prod_{n > k}; its coefficient of d^n has valuation nk + n(n+1)/2.
pub fn truncated_cofactor(ctx: Ctx, k: i64, m: i64) -> Result<MicroOp> {
    if k < 0 || m <= k {
        return Err(MicroError::InvalidArgument(format!(
            "truncated_cofactor needs 0 <= k < M, got k={k}, M={m}"
        )));
    }
    let len = m - k;
    let t1 = int(k) + Rational::new(len + 2, 2);
    let tail = TailCertificate::new(len, int(0), t1).infinite();
    Ok(finite_product(ctx, k + 1, m)?.with_tail(tail))
}

/// Least truncation M at which the generator certifies norms and orders at level k.
pub fn required_truncation(g: Generator, k: i64) -> Result<i64> {
    if k < 0 {
        return Err(MicroError::InvalidArgument(format!("level must be >= 0, got {k}")));
    }
    match g {
        // need (M+1)/2 > k; the bound -(M+1)((M+1)/2 - k) is then always below k(k-1)/2
        Generator::ProductOp => Ok((2 * k).max(1)),
        // need M > k; the bound -(M+1)(M-k) is then negative while the max is >= 0
        Generator::GaussOp => Ok(k + 1),
        Generator::TruncatedCofactor { k: k0 } => {
            // t1 = k0 + (M-k0+2)/2 > k; the stored max is 0 (constant term)
            let mut m = k0 + 1;
            loop {
                let op = truncated_cofactor(Ctx::default(), k0, m)?;
                if op.scan(int(k), int(k)).is_ok() {
                    return Ok(m);
                }
                m += 1;
            }
        }
    }
}

/// Exponent of |P_M - P_k|_m, where P_M is product_op(M) and P_k the exact
/// product of the first k factors.
pub fn cofactor_norm_check(ctx: Ctx, k: i64, m: i64, big_m: i64) -> Result<Rational> {
    if !(k > m && m >= 0) {
        return Err(MicroError::InvalidArgument(format!("need k > m >= 0, got k={k}, m={m}")));
    }
    if big_m < k || big_m < 2 * m + 2 {
        return Err(MicroError::InsufficientTruncation(format!(
            "M = {big_m} cannot certify level {m} against P_{k}"
        )));
    }
    let diff = product_op(ctx, big_m)?.sub(&finite_product(ctx, 1, k)?)?;
    diff.norm_k(m)?
        .exp()
        .ok_or_else(|| MicroError::InvalidArgument("difference vanished".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::Norm;
    use crate::tower::{check_unit, RingLevel};

    fn c() -> Ctx {
        Ctx::default()
    }

    /// Integer expansion of prod_{n in lo..=hi}(1 - 2^n X) as exact i128 coefficients.
    fn oracle_product(lo: u32, hi: u32) -> Vec<i128> {
        let mut coeffs = vec![1i128];
        for n in lo..=hi {
            let a = 1i128 << n;
            let mut next = vec![0i128; coeffs.len() + 1];
            for (i, &cf) in coeffs.iter().enumerate() {
                next[i] += cf;
                next[i + 1] -= cf * a;
            }
            coeffs = next;
        }
        coeffs
    }

    fn v2(x: i128) -> Option<i64> {
        if x == 0 {
            None
        } else {
            Some(x.trailing_zeros() as i64)
        }
    }

    #[test]
    fn product_examples() {
        let p2 = product_op(c(), 2).unwrap();
        let want = MicroOp::from_scalars(c(), vec![(0, c().one()), (1, c().scalar(-6)), (2, c().scalar(8))]).unwrap();
        assert_eq!(p2.coeff(&[1]), want.coeff(&[1]));
        assert_eq!(p2.coeff(&[2]), want.coeff(&[2]));
        let vals: Vec<i64> = p2.valuations().map(|(_, v)| v).collect();
        assert_eq!(vals, vec![0, 1, 3]);
        let p1 = product_op(c(), 1).unwrap();
        assert_eq!(p1.coeff(&[1]).unwrap().constant_term(), c().scalar(-2));
        assert!(!p1.is_finite());
    }

    #[test]
    fn product_matches_integer_oracle() {
        for m in 1..=12u32 {
            let p = product_op(c(), m as i64).unwrap();
            let o = oracle_product(1, m);
            for (n, &cf) in o.iter().enumerate() {
                let got = p.coeff(&[n as i64]).map(|f| f.constant_term()).unwrap();
                assert_eq!(got, c().scalar(0).add(&crate::padic::PadicScalar::from_i128(2, cf, 64)).unwrap());
                assert_eq!(v2(cf), Some((n * (n + 1) / 2) as i64));
            }
        }
    }

    #[test]
    fn product_recursion() {
        for m in 1..10 {
            let next = product_op(c(), m).unwrap();
            let lhs = finite_product(c(), 1, m + 1).unwrap();
            let rhs = finite_product(c(), 1, m).unwrap().compose(&factor(c(), m + 1).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
            assert_eq!(next.num_terms() as i64, m + 1);
        }
    }

    #[test]
    fn gauss_examples() {
        let g = gauss_op(c(), 5).unwrap();
        for (a, v) in g.valuations() {
            assert_eq!(v, a[0] * a[0]);
        }
        assert_eq!(g.order_Nk(4).unwrap(), 2);
        assert_eq!(g.order_nk(4).unwrap(), 2);
        assert_eq!(g.order_Nk(3).unwrap(), 2);
        assert_eq!(g.order_nk(3).unwrap(), 1);
        let g1 = gauss_op(c(), 1).unwrap();
        assert_eq!(g1.num_terms(), 2);
        assert_eq!(g1.coeff(&[1]).unwrap().constant_term(), c().scalar(2));
    }

    #[test]
    fn product_orders() {
        for k in 1..=6 {
            let p = product_op(c(), 2 * k).unwrap();
            assert_eq!(p.order_Nk(k).unwrap(), k);
            assert_eq!(p.order_nk(k).unwrap(), k - 1);
            assert_eq!(finite_product(c(), 1, k).unwrap().norm_k(k).unwrap(), Norm::pow(k * (k - 1) / 2));
        }
    }

    /// Brute force: certification succeeds exactly from the closed-form M on,
    /// and the certified order agrees with a long truncation.
    #[test]
    fn required_truncation_oracle() {
        for k in 0..=6 {
            for (g, build) in [
                (Generator::ProductOp, product_op as fn(Ctx, i64) -> Result<MicroOp>),
                (Generator::GaussOp, gauss_op),
            ] {
                let truth = build(c(), 30).unwrap();
                let truth_n = truth.order_Nk(k).unwrap();
                let mut least = None;
                for m in 1..=20 {
                    let op = build(c(), m).unwrap();
                    match op.order_Nk(k) {
                        Ok(n) => {
                            assert_eq!(n, truth_n, "{g:?} k={k} M={m}");
                            assert_eq!(op.norm_k(k).unwrap(), truth.norm_k(k).unwrap());
                            least.get_or_insert(m);
                        }
                        Err(_) => assert!(least.is_none(), "{g:?} k={k}: certification is not monotone"),
                    }
                }
                assert_eq!(least, Some(required_truncation(g, k).unwrap()), "{g:?} k={k}");
            }
        }
    }

    /// Direct integer computation of |P_M - P_k|_m.
    fn oracle_cofactor(k: u32, m: i64, big_m: u32) -> i64 {
        let a = oracle_product(1, big_m);
        let b = oracle_product(1, k);
        (0..a.len())
            .filter_map(|n| {
                let d = a[n] - b.get(n).copied().unwrap_or(0);
                v2(d).map(|v| m * n as i64 - v)
            })
            .max()
            .unwrap()
    }

    #[test]
    fn cofactor_norm_matches_oracle() {
        for k in 2..=6i64 {
            for m in 1..k {
                let big_m = 2 * k + 2;
                let got = cofactor_norm_check(c(), k, m, big_m).unwrap();
                assert_eq!(got, int(oracle_cofactor(k as u32, m, big_m as u32)));
                // closed form from the expansion P - P_k = P_k (Q_k - 1)
                assert_eq!(got, int(m * (m + 1) / 2 - k - 1), "k={k} m={m}");
            }
        }
        assert!(matches!(
            cofactor_norm_check(c(), 3, 2, 4),
            Err(MicroError::InsufficientTruncation(_))
        ));
    }

    #[test]
    fn cofactor_is_a_unit() {
        for k in 1..=6 {
            let m = required_truncation(Generator::TruncatedCofactor { k }, k).unwrap().max(2 * k + 2);
            let q = truncated_cofactor(c(), k, m).unwrap();
            let v = check_unit(&q, RingLevel::Dkq { k }).unwrap();
            assert!(v.invertible, "k={k}");
            // the cofactor valuations obey their closed form
            for (a, val) in q.valuations() {
                let n = a[0];
                assert_eq!(val, n * k + n * (n + 1) / 2);
            }
        }
    }
}
