//! Command-line front end: operator expressions and subcommands over
//! `microdiff_core`.

pub mod app;
pub mod eval;
pub mod expr;

use microdiff_core::MicroError;
use thiserror::Error;

pub use app::{execute, run, Cli, Outcome};
pub use eval::{eval_str, evaluate, EvalConfig};
pub use expr::{parse, Expr, ParseError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown symbol `{name}` at {pos}")]
    UnknownSymbol { name: String, pos: usize },
    #[error("at {pos}: {msg}")]
    Eval { pos: usize, msg: String },
    #[error(transparent)]
    Math(#[from] MicroError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_UNCERTIFIED: i32 = 2;
pub const EXIT_NOT_INVERTIBLE: i32 = 3;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Math(e) => match e {
                MicroError::InsufficientTruncation(_)
                | MicroError::UndecidableFiniteness(_)
                | MicroError::WindowOverflow { .. }
                | MicroError::NotCertifiable(_) => EXIT_UNCERTIFIED,
                MicroError::NotInvertible(_) => EXIT_NOT_INVERTIBLE,
                _ => EXIT_USAGE,
            },
            _ => EXIT_USAGE,
        }
    }

    /// Short machine-readable kind for error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(ParseError::Syntax { .. }) => "SyntaxError",
            CliError::Parse(ParseError::UnknownSymbol { .. }) | CliError::UnknownSymbol { .. } => "UnknownSymbol",
            CliError::Eval { .. } => "EvalError",
            CliError::Usage(_) => "UsageError",
            CliError::Io(_) => "IoError",
            CliError::Math(e) => match e {
                MicroError::InsufficientTruncation(_) => "InsufficientTruncation",
                MicroError::UndecidableFiniteness(_) => "UndecidableFiniteness",
                MicroError::WindowOverflow { .. } => "WindowOverflow",
                MicroError::NotCertifiable(_) => "NotCertifiable",
                MicroError::NotInvertible(_) => "NotInvertible",
                _ => "MathError",
            },
        }
    }
}
