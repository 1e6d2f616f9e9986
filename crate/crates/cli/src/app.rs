//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use microdiff_core::catalog::{gauss_op, product_op, truncated_cofactor};
use microdiff_core::diff_op::quasi_abelian_defect;
use microdiff_core::micro_op::{mul, norm_Ek, norm_Fkr, orders_ek};
use microdiff_core::newton::polygon;
use microdiff_core::norm::{int, parse_rational};
use microdiff_core::padic::{max_prec, DEFAULT_PREC};
use microdiff_core::tower::{check_unit, invert, InvertConfig};
use microdiff_core::{Ctx, LevelParams, MicroOp, MulConfig, Norm, Rational, RingLevel};
use serde_json::{json, Value};

use crate::eval::{eval_str, EvalConfig};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    Svg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LevelKind {
    Dkq,
    Ek,
    Fkr,
    Fir,
    Finf,
    Dinf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CatalogName {
    ProductOp,
    GaussOp,
    TruncatedCofactor,
}

#[derive(Debug, Parser)]
#[command(name = "microdiff", version, about = "Norms, Newton polygons and unit tests for p-adic microdifferential operators")]
pub struct Cli {
    /// Residue characteristic.
    #[arg(long, global = true, env = "MICRODIFF_PRIME", default_value_t = 2)]
    pub prime: u64,
    /// Number of variables.
    #[arg(long, global = true, default_value_t = 1)]
    pub dim: usize,
    /// p-adic precision in digits (defaults to the largest supported, at most 64).
    #[arg(long, global = true)]
    pub prec: Option<u32>,
    /// Total-degree cap for function coefficients.
    #[arg(long = "deg-cap", global = true, default_value_t = microdiff_core::ctx::DEFAULT_DEG_CAP)]
    pub deg_cap: u32,
    /// Largest |exponent| allowed on each derivation axis.
    #[arg(long, global = true, default_value_t = microdiff_core::ctx::DEFAULT_WINDOW)]
    pub window: i64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Do not attach catalog tail certificates to recognized comprehensions.
    #[arg(long, global = true)]
    pub literal: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct LevelArgs {
    #[arg(long)]
    pub k: Option<i64>,
    #[arg(long)]
    pub r: Option<i64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Level-k norm, F_{k,r} norm (with --r) or mu-norm (with --mu a/b).
    Norm {
        expr: String,
        #[command(flatten)]
        level: LevelArgs,
        #[arg(long)]
        mu: Option<String>,
    },
    /// Upper and lower orders at level k or at --mu.
    Order {
        expr: String,
        #[command(flatten)]
        level: LevelArgs,
        #[arg(long)]
        mu: Option<String>,
    },
    /// Newton polygon.
    Polygon { expr: String },
    /// Unit criterion at a ring level.
    Check {
        expr: String,
        #[arg(long, value_enum)]
        level: LevelKind,
        #[command(flatten)]
        params: LevelArgs,
    },
    /// Inverse by geometric series around the dominant monomial.
    Invert {
        expr: String,
        #[arg(long, value_enum)]
        level: LevelKind,
        #[command(flatten)]
        params: LevelArgs,
        /// Target residual p^-N.
        #[arg(long, default_value_t = 20)]
        residual: i64,
        #[arg(long = "max-terms", default_value_t = 512)]
        max_terms: usize,
    },
    /// Commutator norm |PQ - QP|_k / (|P|_k |Q|_k).
    Defect {
        p: String,
        q: String,
        #[arg(long)]
        k: i64,
    },
    /// Named operators with tail certificates.
    Catalog {
        #[arg(value_enum)]
        name: CatalogName,
        #[arg(long = "M")]
        m: i64,
        /// Cofactor index for truncated-cofactor.
        #[arg(long)]
        k: Option<i64>,
    },
    /// Product of two operators.
    Mul { a: String, b: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Cli {
    pub fn ctx(&self) -> Result<Ctx, CliError> {
        let prec = self.prec.unwrap_or_else(|| DEFAULT_PREC.min(max_prec(self.prime)));
        Ok(Ctx::new(self.dim, self.prime, prec, self.deg_cap)?)
    }

    pub fn eval_config(&self) -> Result<EvalConfig, CliError> {
        Ok(EvalConfig {
            ctx: self.ctx()?,
            window: self.window,
            literal: self.literal,
        })
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn need_k(l: &LevelArgs) -> Result<i64, CliError> {
    l.k.ok_or_else(|| usage("--k is required"))
}

pub fn ring_level(kind: LevelKind, l: &LevelArgs) -> Result<RingLevel, CliError> {
    Ok(match kind {
        LevelKind::Dkq => RingLevel::Dkq { k: need_k(l)? },
        LevelKind::Ek => RingLevel::Ek { k: need_k(l)? },
        LevelKind::Fkr => RingLevel::Fkr {
            k: need_k(l)?,
            r: l.r.ok_or_else(|| usage("--r is required for fkr"))?,
        },
        LevelKind::Fir => RingLevel::Fir {
            r: l.r.ok_or_else(|| usage("--r is required for fir"))?,
        },
        LevelKind::Finf => RingLevel::Finf,
        LevelKind::Dinf => RingLevel::Dinf,
    })
}

fn parse_mu(s: &str) -> Result<Rational, CliError> {
    parse_rational(s).map_err(|_| usage(format!("--mu expects a rational a/b, got {s:?}")))
}

fn norm_json(n: &Norm) -> Value {
    serde_json::to_value(n).expect("norm serializes")
}

pub fn op_json(op: &MicroOp) -> Value {
    json!({
        "operator": serde_json::to_value(op.to_json()).expect("operator serializes"),
        "text": op.to_string(),
    })
}

/// A computed result in each output format.
struct Report {
    json: Value,
    text: String,
    svg: Option<String>,
}

impl Report {
    fn new(json: Value, text: String) -> Self {
        Report { json, text, svg: None }
    }
}

fn compute(cli: &Cli) -> Result<Report, CliError> {
    let cfg = cli.eval_config()?;
    let ev = |s: &str| eval_str(s, &cfg);
    let mcfg = MulConfig::new(cli.window);
    match &cli.command {
        Command::Norm { expr, level, mu } => {
            let p = ev(expr)?;
            if let Some(mu) = mu {
                let mu = parse_mu(mu)?;
                let n = p.norm_mu(mu)?;
                return Ok(Report::new(
                    json!({"level": {"mu": mu.to_string()}, "norm": norm_json(&n), "text": n.to_string()}),
                    n.to_string(),
                ));
            }
            let k = need_k(level)?;
            match level.r {
                Some(r) => {
                    let f = norm_Fkr(&p, LevelParams::new(k, r)?)?;
                    let text = f.norm.to_string();
                    Ok(Report::new(
                        json!({
                            "level": {"k": k, "r": r},
                            "norm": norm_json(&f.norm),
                            "text": text,
                            "positive": f.positive.map(|n| norm_json(&n)),
                            "negative": f.negative.map(|n| norm_json(&n)),
                        }),
                        text,
                    ))
                }
                None => {
                    let n = if p.is_positive() { p.norm_k(k)? } else { norm_Ek(&p, k)? };
                    Ok(Report::new(
                        json!({"level": {"k": k}, "norm": norm_json(&n), "text": n.to_string()}),
                        n.to_string(),
                    ))
                }
            }
        }
        Command::Order { expr, level, mu } => {
            let p = ev(expr)?;
            let (lv, upper, lower) = if let Some(mu) = mu {
                let mu = parse_mu(mu)?;
                (json!({"mu": mu.to_string()}), p.order_Nmu(mu)?, p.order_nmu(mu)?)
            } else {
                let k = need_k(level)?;
                let (u, l) = if p.is_positive() {
                    (p.order_Nk(k)?, p.order_nk(k)?)
                } else {
                    orders_ek(&p, k)?
                };
                (json!({"k": k}), u, l)
            };
            Ok(Report::new(
                json!({"level": lv, "upper": upper, "lower": lower}),
                format!("upper {upper} lower {lower}"),
            ))
        }
        Command::Polygon { expr } => {
            let np = polygon(&ev(expr)?)?;
            let text = np
                .slopes
                .iter()
                .zip(&np.certified)
                .map(|(s, c)| if *c { s.to_string() } else { format!("{s}?") })
                .collect::<Vec<_>>()
                .join(" ");
            let mut rep = Report::new(serde_json::to_value(&np).expect("polygon serializes"), format!("slopes {text}"));
            rep.svg = Some(np.to_svg());
            Ok(rep)
        }
        Command::Check { expr, level, params } => {
            let lv = ring_level(*level, params)?;
            let v = check_unit(&ev(expr)?, lv)?;
            let text = match v.clause() {
                None => format!("invertible at {lv}, dominant {:?}", v.beta().unwrap()),
                Some(c) => format!("not invertible at {lv}: {}", c.id()),
            };
            Ok(Report::new(v.to_json(), text))
        }
        Command::Invert {
            expr,
            level,
            params,
            residual,
            max_terms,
        } => {
            let lv = ring_level(*level, params)?;
            let icfg = InvertConfig {
                window: cli.window,
                residual: *residual,
                max_terms: *max_terms,
            };
            let inv = invert(&ev(expr)?, lv, &icfg)?;
            let mut j = op_json(&inv.inverse);
            j["level"] = serde_json::to_value(lv).expect("level serializes");
            j["terms"] = json!(inv.terms);
            j["residual"] = norm_json(&inv.residual);
            j["measured_at"] = json!({"k": inv.measured_at.k, "r": inv.measured_at.r});
            Ok(Report::new(j, inv.inverse.to_string()))
        }
        Command::Defect { p, q, k } => {
            let d = quasi_abelian_defect(&ev(p)?, &ev(q)?, *k)?;
            let holds = d <= Norm::Pow(int(-k));
            Ok(Report::new(
                json!({"k": k, "defect": norm_json(&d), "bound": norm_json(&Norm::Pow(int(-k))), "holds": holds}),
                d.to_string(),
            ))
        }
        Command::Catalog { name, m, k } => {
            let ctx = cfg.ctx;
            let op = match name {
                CatalogName::ProductOp => product_op(ctx, *m)?,
                CatalogName::GaussOp => gauss_op(ctx, *m)?,
                CatalogName::TruncatedCofactor => {
                    let k = k.ok_or_else(|| usage("--k is required for truncated-cofactor"))?;
                    truncated_cofactor(ctx, k, *m)?
                }
            };
            Ok(Report::new(op_json(&op), op.to_string()))
        }
        Command::Mul { a, b } => {
            let op = mul(&ev(a)?, &ev(b)?, &mcfg)?;
            Ok(Report::new(op_json(&op), op.to_string()))
        }
    }
}

/// Runs the parsed command and renders it in the requested format.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let rep = compute(cli)?;
    Ok(match cli.format {
        Format::Json => serde_json::to_string_pretty(&rep.json).expect("json renders") + "\n",
        Format::Text => rep.text + "\n",
        Format::Svg => rep
            .svg
            .ok_or_else(|| usage("--format svg is only available for polygon"))?,
    })
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => crate::EXIT_OK,
                _ => crate::EXIT_USAGE,
            };
            let msg = e.render().to_string();
            return if code == crate::EXIT_OK {
                Outcome { code, stdout: msg, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: msg }
            };
        }
    };
    let result = execute(&cli).and_then(|out| match &cli.out {
        Some(path) => {
            std::fs::write(path, out)?;
            Ok(String::new())
        }
        None => Ok(out),
    });
    match result {
        Ok(stdout) => Outcome {
            code: crate::EXIT_OK,
            stdout,
            stderr: String::new(),
        },
        Err(e) => Outcome {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("error[{}]: {e}\n", e.kind()),
        },
    }
}
