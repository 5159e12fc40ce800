//! Script and theory front ends, the solve pipeline and the CLI.

use thiserror::Error;

use crate::bitengine::EngineError;
use crate::boolcore::BoolError;
use crate::countlab::CountError;
use crate::fol::FolError;
use crate::modelkit::ModelError;

pub mod lexer;
pub mod script;
pub mod solve;
pub mod theory;

mod cli;

pub use cli::cli_main;
pub use lexer::ParseError;
pub use script::{expand_script, parse_script, LetterNamespace, Script};
pub use solve::{Backend, SolvePipeline, SolveSummary};
pub use theory::{parse_theory, TheoryFile};

#[derive(Debug, Error)]
pub enum ShellError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Fol(#[from] FolError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] BoolError),
    #[error("{0}")]
    BadInput(String),
    #[error("{0}")]
    Usage(String),
}

impl ShellError {
    /// 2 when a feasibility cap was exceeded, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            ShellError::Engine(EngineError::CapExceeded { .. })
            | ShellError::Count(CountError::PartitionCapExceeded { .. })
            | ShellError::Count(CountError::Engine(EngineError::CapExceeded { .. })) => 2,
            _ => 1,
        }
    }
}

/// A file is a theory file when any statement starts with one of the theory
/// keywords; otherwise it is a script.
pub fn looks_like_theory(text: &str) -> bool {
    const KEYWORDS: [&str; 8] = [
        "rel",
        "fun",
        "const",
        "axiom",
        "def",
        "partition",
        "orient",
        "assume",
    ];
    let Ok(lines) = lexer::logical_lines(text) else {
        return false;
    };
    lines.iter().any(|line| {
        matches!(
            line.first(),
            Some(lexer::Token {
                kind: lexer::TokenKind::Ident(id),
                ..
            }) if KEYWORDS.contains(&id.as_str())
        )
    })
}
