use microdiff_core::catalog::{gauss_op, product_op};
use microdiff_core::micro_op::{mul, norm_Ek};
use microdiff_core::newton::{is_slope, polygon};
use microdiff_core::norm::{int, rat};
use microdiff_core::tower::{check_unit, invert, InvertConfig};
use microdiff_core::{Ctx, MicroError, MicroOp, MulConfig, Norm, RingLevel, TateSeries};

fn d2() -> Ctx {
    Ctx::with_dim(2)
}

fn x(ctx: Ctx, i: usize) -> MicroOp {
    MicroOp::function(TateSeries::var(ctx, i).unwrap())
}

fn d(ctx: Ctx, i: usize) -> MicroOp {
    MicroOp::partial(ctx, i).unwrap()
}

#[test]
fn two_variable_commutators() {
    let c = d2();
    let a = d(c, 1).compose(&d(c, 2)).unwrap();
    let b = d(c, 2).compose(&d(c, 1)).unwrap();
    assert_eq!(a, b);
    // [d1, x1] = 1 and [d2, x1] = 0
    let one = d(c, 1).compose(&x(c, 1)).unwrap().sub(&x(c, 1).compose(&d(c, 1)).unwrap()).unwrap();
    assert_eq!(one, MicroOp::one(c));
    let zero = d(c, 2).compose(&x(c, 1)).unwrap().sub(&x(c, 1).compose(&d(c, 2)).unwrap()).unwrap();
    assert!(zero.is_zero());
    // d1 * x2 * d2^{-1} * x1 in the microlocal setting
    let s = mul(&MicroOp::partial_pow(c, vec![0, -1]).unwrap(), &x(c, 2), &MulConfig::default()).unwrap();
    assert_eq!(norm_Ek(&s, 2).unwrap(), Norm::pow(-2));
}

#[test]
fn catalog_polygons() {
    let p = product_op(Ctx::default(), 8).unwrap();
    let np = polygon(&p).unwrap();
    assert_eq!(np.slopes, (1..=8).map(int).collect::<Vec<_>>());
    assert!(np.truncated);
    let g = gauss_op(Ctx::default(), 6).unwrap();
    let ng = polygon(&g).unwrap();
    assert_eq!(ng.slopes, (0..6).map(|n| int(2 * n + 1)).collect::<Vec<_>>());
    assert!(is_slope(&g, int(3)).unwrap());
    assert!(!is_slope(&g, int(2)).unwrap());
    assert!(!is_slope(&g, rat(5, 2)).unwrap());
}

#[test]
fn json_round_trip_keeps_tails() {
    let p = product_op(Ctx::default(), 5).unwrap();
    let text = serde_json::to_string(&p.to_json()).unwrap();
    let back = MicroOp::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
    assert_eq!(back, p);
    assert_eq!(back.tail(), p.tail());
    assert_eq!(back.norm_k(2).unwrap(), p.norm_k(2).unwrap());
}

#[test]
fn odd_prime_pipeline() {
    let c = Ctx::new(1, 3, 40, 16).unwrap();
    let p = MicroOp::from_scalars(c, vec![(0, c.one()), (1, c.scalar(-3))]).unwrap();
    assert!(!check_unit(&p, RingLevel::Ek { k: 1 }).unwrap().invertible);
    assert!(check_unit(&p, RingLevel::Ek { k: 2 }).unwrap().invertible);
    let inv = invert(&p, RingLevel::Ek { k: 2 }, &InvertConfig::default()).unwrap();
    assert!(inv.residual <= Norm::pow(-20));
    assert!(matches!(Ctx::new(1, 3, 41, 16), Err(MicroError::PrecisionUnsupported { .. })));
    assert!(matches!(Ctx::new(1, 4, 10, 16), Err(MicroError::InvalidPrime(_))));
}

#[test]
fn prime_from_environment() {
    std::env::set_var("MICRODIFF_PRIME", "5");
    let c = Ctx::from_env().unwrap();
    std::env::remove_var("MICRODIFF_PRIME");
    assert_eq!(c.prime, 5);
    assert!(c.prec <= 27);
}

#[test]
fn mixed_primes_rejected() {
    let a = MicroOp::one(Ctx::default());
    let b = MicroOp::one(Ctx::new(1, 3, 40, 16).unwrap());
    assert!(a.add(&b).is_err());
}
