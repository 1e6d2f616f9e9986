mod common;

use common::{assert_valid, bin, root};
use microdiff_cli::{eval_str, EvalConfig};
use microdiff_core::catalog::product_op;
use microdiff_core::newton::polygon;
use microdiff_core::tower::{check_unit, invert, InvertConfig};
use microdiff_core::{Ctx, RingLevel};
use serde_json::Value;

fn golden(name: &str) -> String {
    std::fs::read_to_string(root().join("crates/cli/tests/golden").join(name)).unwrap()
}

fn json(args: &[&str]) -> Value {
    let r = bin(args);
    assert_eq!(r.code, 0, "{args:?}: {}", r.stderr);
    serde_json::from_str(&r.stdout).unwrap()
}

#[test]
fn golden_check_finf() {
    let r = bin(&["check", "--level", "finf", "prod(n=1..9, 1 - p^n*d)", "--k", "4"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout, golden("check_finf_product.json"));
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["invertible"], false);
    assert_eq!(v["witness"]["violated"], "non-finite");
    assert_valid("verdict", &v);
}

#[test]
fn golden_norm_product() {
    let r = bin(&["norm", "--k", "3", "prod(n=1..7, 1 - p^n*d)"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout, golden("norm_product_k3.json"));
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    // max over n of 3n - n(n+1)/2 is reached at n = 2, 3
    let want = (0..=7).map(|n| 3 * n - n * (n + 1) / 2).max().unwrap();
    assert_eq!(v["norm"], want.to_string());
    assert_eq!(v["text"], "p^3");
    assert_valid("norm", &v);
}

#[test]
fn golden_polygon_svg() {
    let r = bin(&["polygon", "--format", "svg", "1 + p*d + p^3*d^2"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout, golden("polygon_three_points.svg"));
    assert!(r.stdout.starts_with("<svg"));
    for (n, v) in [(0, 0), (1, 1), (2, 3)] {
        assert!(r.stdout.contains(&format!("data-n=\"{n}\" data-v=\"{v}\"")));
    }
    let j = json(&["polygon", "1 + p*d + p^3*d^2"]);
    assert_eq!(j["vertices"], serde_json::json!([[0, 0], [1, 1], [2, 3]]));
    assert_eq!(j["slopes"], serde_json::json!(["1", "2"]));
    assert_valid("polygon", &j);
}

#[test]
fn exit_codes() {
    assert_eq!(bin(&["norm", "--k", "5", "prod(n=1..3, 1 - p^n*d)"]).code, 2);
    assert_eq!(bin(&["--window", "4", "norm", "--k", "1", "dinv^5"]).code, 2);
    let r = bin(&["invert", "1 - p*d", "--level", "ek", "--k", "1"]);
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("NotInvertible"));
    assert_eq!(bin(&["norm", "--k", "1", "1 +"]).code, 1);
    let r = bin(&["norm", "--k", "1", "y*d"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("UnknownSymbol"));
    assert_eq!(bin(&["norm", "--bogus", "d"]).code, 1);
    assert_eq!(bin(&["frobnicate"]).code, 1);
    assert_eq!(bin(&["check", "d", "--level", "fkr", "--k", "2"]).code, 1);
    assert_eq!(bin(&["norm", "--format", "svg", "--k", "1", "d"]).code, 1);
    assert_eq!(bin(&["--prime", "4", "norm", "--k", "1", "d"]).code, 1);
    assert_eq!(bin(&["--help"]).code, 0);
    assert_eq!(bin(&["check", "1 - p*d", "--level", "ek", "--k", "1"]).code, 0);
}

#[test]
fn every_json_output_validates() {
    let cases: Vec<(&str, Vec<&str>)> = vec![
        ("norm", vec!["norm", "--k", "2", "1 - p*d"]),
        ("norm", vec!["norm", "--k", "2", "--r", "1", "dinv*x + d"]),
        ("norm", vec!["norm", "--mu", "1/2", "1 + p*d^2"]),
        ("order", vec!["order", "--k", "3", "sum(n=0..5, p^(n^2)*d^n)"]),
        ("order", vec!["order", "--k", "2", "dinv + p*d"]),
        ("order", vec!["order", "--mu", "3/2", "1 + p*d + p^3*d^2"]),
        ("polygon", vec!["polygon", "prod(n=1..4, 1 - p^n*d)"]),
        ("verdict", vec!["check", "1 - p*d", "--level", "ek", "--k", "2"]),
        ("verdict", vec!["check", "1 - p*d", "--level", "finf"]),
        ("verdict", vec!["check", "1 - p*d", "--level", "fkr", "--k", "2", "--r", "1"]),
        ("verdict", vec!["check", "1 + p*x", "--level", "dinf"]),
        ("inversion", vec!["invert", "1 - p*d", "--level", "ek", "--k", "2"]),
        ("inversion", vec!["invert", "1 - p*d", "--level", "fir", "--r", "2", "--residual", "8"]),
        ("defect", vec!["defect", "d", "x", "--k", "2"]),
        ("operator", vec!["catalog", "gauss-op", "--M", "4"]),
        ("operator", vec!["catalog", "truncated-cofactor", "--M", "6", "--k", "2"]),
        ("operator", vec!["mul", "dinv", "x"]),
        ("operator", vec!["--dim", "2", "mul", "d1*x2", "x1*d2"]),
    ];
    for (schema, args) in cases {
        assert_valid(schema, &json(&args));
    }
}

#[test]
fn subcommands_match_library() {
    let ctx = Ctx::default();
    let cfg = EvalConfig::new(ctx);
    let p = eval_str("prod(n=1..9, 1 - p^n*d)", &cfg).unwrap();
    assert_eq!(p, product_op(ctx, 9).unwrap());
    let v = check_unit(&p, RingLevel::Finf).unwrap();
    assert_eq!(json(&["check", "--level", "finf", "prod(n=1..9, 1 - p^n*d)"]), v.to_json());
    let q = eval_str("1 + p*d + p^3*d^2", &cfg).unwrap();
    assert_eq!(json(&["polygon", "1 + p*d + p^3*d^2"]), serde_json::to_value(polygon(&q).unwrap()).unwrap());
    let r = eval_str("1 - p*d", &cfg).unwrap();
    let inv = invert(&r, RingLevel::Ek { k: 2 }, &InvertConfig::default()).unwrap();
    let j = json(&["invert", "1 - p*d", "--level", "ek", "--k", "2"]);
    assert_eq!(j["operator"], serde_json::to_value(inv.inverse.to_json()).unwrap());
    assert_eq!(j["terms"], inv.terms);
    let j = json(&["norm", "--k", "4", "sum(n=0..9, p^(n^2)*d^n)"]);
    let g = eval_str("sum(n=0..9, p^(n^2)*d^n)", &cfg).unwrap();
    assert_eq!(j["norm"], serde_json::to_value(g.norm_k(4).unwrap()).unwrap());
}

#[test]
fn in_process_run_matches_binary() {
    let args = ["norm", "--k", "3", "prod(n=1..7, 1 - p^n*d)"];
    let lib = microdiff_cli::run(std::iter::once("microdiff").chain(args));
    let b = bin(&args);
    assert_eq!((lib.code, lib.stdout), (b.code, b.stdout));
}

#[test]
fn prime_from_environment() {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_microdiff"))
        .args(["norm", "--k", "1", "p*d"])
        .env("MICRODIFF_PRIME", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["norm"], "0");
    let j = json(&["--prime", "3", "catalog", "product-op", "--M", "1"]);
    assert_eq!(j["operator"]["prime"], 3);
    assert_eq!(j["text"], "1 - 3*d + O(v >= 0 + 1*n, n > 1)");
}

#[test]
fn output_file() {
    let path = std::env::temp_dir().join(format!("microdiff-out-{}.svg", std::process::id()));
    let r = bin(&["polygon", "--format", "svg", "--out", path.to_str().unwrap(), "1 + p*d + p^3*d^2"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(written, golden("polygon_three_points.svg"));
}

#[test]
fn text_format() {
    let r = bin(&["--format", "text", "check", "1 - p*d", "--level", "fkr", "--k", "2", "--r", "1"]);
    assert_eq!(r.stdout, "not invertible at Fkr(k=2, r=1): fkr-dominance\n");
    let r = bin(&["--format", "text", "mul", "dinv", "x"]);
    assert_eq!(r.stdout, "-d^-2 + x*d^-1\n");
    let r = bin(&["--format", "text", "polygon", "prod(n=1..3, 1 - p^n*d)"]);
    assert_eq!(r.stdout, "slopes 1 2? 3?\n");
}
