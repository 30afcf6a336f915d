//! Backtracking interpreter.
//!
//! Every failed attempt leaves the observable state (position, table stacks,
//! flags, tree log) exactly as it was before the attempt. Successful
//! evaluation threads the state forward.

mod program;
mod state;
pub mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::grammar::{Diagnostic, Grammar};
use crate::packrat::{LookupRecord, MemoStats};
pub(crate) use program::Program;
pub use state::{AuditReport, ParserState, StateSnapshot};
pub use tree::SyntaxTree;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Mode {
    #[default]
    Naive,
    Packrat,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Naive => "naive",
            Mode::Packrat => "packrat",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Mode, String> {
        match s {
            "naive" => Ok(Mode::Naive),
            "packrat" => Ok(Mode::Packrat),
            _ => Err(format!("unknown mode '{s}' (expected naive or packrat)")),
        }
    }
}

/// What a failed attempt does to symbol tables.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TableRollback {
    /// Tables return to their depth at the start of the attempt.
    #[default]
    Restore,
    /// Symbols pushed by a failed attempt stay. Experimental; breaks the
    /// transactional guarantee for tables.
    Persist,
}

#[derive(Clone, Debug)]
pub struct ParseOptions {
    pub mode: Mode,
    pub require_eof: bool,
    pub build_tree: bool,
    /// `None` uses 64 * max(len, 1) * productions.
    pub step_budget: Option<u64>,
    /// Initial flag values. Unlisted flags start true.
    pub flags: BTreeMap<String, bool>,
    pub table_rollback: TableRollback,
    /// Check the rollback invariant at every failing node. Slow.
    pub audit: bool,
    pub memo_capacity: usize,
    /// Record every memo hit.
    pub memo_log: bool,
}

pub const DEFAULT_MEMO_CAPACITY: usize = 4 << 20;

impl Default for ParseOptions {
    fn default() -> ParseOptions {
        ParseOptions {
            mode: Mode::Naive,
            require_eof: false,
            build_tree: false,
            step_budget: None,
            flags: BTreeMap::new(),
            table_rollback: TableRollback::Restore,
            audit: false,
            memo_capacity: DEFAULT_MEMO_CAPACITY,
            memo_log: false,
        }
    }
}

impl ParseOptions {
    pub fn packrat() -> ParseOptions {
        ParseOptions { mode: Mode::Packrat, ..ParseOptions::default() }
    }

    pub fn with_tree(mut self) -> ParseOptions {
        self.build_tree = true;
        self
    }

    pub fn with_flag(mut self, name: &str, value: bool) -> ParseOptions {
        self.flags.insert(name.to_string(), value);
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParseOutcome {
    pub success: bool,
    /// Meaningful only on success.
    pub consumed: usize,
    /// Set on failure: the furthest offset at which a terminal failed.
    pub furthest_failure: Option<usize>,
    pub steps: u64,
    pub tree: Option<SyntaxTree>,
    pub memo: Option<MemoStats>,
    pub memo_log: Vec<LookupRecord>,
    pub audit: Option<AuditReport>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("grammar has {} error(s); first: {}", .0.len(), .0.first().map(|d| d.message.as_str()).unwrap_or(""))]
    GrammarInvalid(Vec<Diagnostic>),
    #[error("start production '{0}' is not defined")]
    UnknownStart(String),
    #[error("unknown {kind} '{name}'")]
    UnknownName { kind: &'static str, name: String },
    #[error("step budget of {0} exceeded")]
    StepLimit(u64),
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::GrammarInvalid(_) => "E_GRAMMAR_INVALID",
            EngineError::UnknownStart(_) => "E_UNDEFINED_START",
            EngineError::UnknownName { .. } => "E_UNKNOWN_NAME",
            EngineError::StepLimit(_) => "E_STEP_LIMIT",
        }
    }
}

/// A validated, compiled grammar. Reusable across parses.
#[derive(Debug)]
pub struct Parser {
    grammar: Grammar,
    program: Program,
}

impl Parser {
    pub fn new(g: &Grammar) -> Result<Parser, EngineError> {
        if let Some(errors) = crate::grammar::validation_errors(g) {
            return Err(EngineError::GrammarInvalid(errors));
        }
        Ok(Parser { grammar: g.clone(), program: Program::compile(g)? })
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn default_budget(&self, input_len: usize) -> u64 {
        64 * input_len.max(1) as u64 * self.grammar.len().max(1) as u64
    }

    /// A fresh state at position 0, for driving evaluation by hand.
    pub fn state<'a>(&'a self, input: &'a [u8], opts: &ParseOptions) -> ParserState<'a> {
        ParserState::new(&self.program, input, opts, opts.step_budget.unwrap_or(self.default_budget(input.len())))
    }

    pub fn parse(&self, start: &str, input: &[u8], opts: &ParseOptions) -> Result<ParseOutcome, EngineError> {
        let rule = self.program.rule(start).ok_or_else(|| EngineError::UnknownStart(start.to_string()))?;
        let mut state = self.state(input, opts);
        let matched = state.call(rule)?;
        let success = matched && (!opts.require_eof || state.position() == input.len());
        Ok(state.finish(success))
    }
}

/// Validates, compiles and runs `g` from `start` (the grammar's start when
/// `None`).
pub fn parse(g: &Grammar, start: Option<&str>, input: &[u8], opts: &ParseOptions) -> Result<ParseOutcome, EngineError> {
    Parser::new(g)?.parse(start.unwrap_or(g.start()), input, opts)
}
