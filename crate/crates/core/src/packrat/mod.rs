//! Memoized evaluation and the step-count benchmark harness.
//!
//! Calls are memoized per (production, position, state version, flag
//! assignment). The version changes on every symbol-table mutation, so an
//! entry can only be returned for the exact table contents it was computed
//! under. Calls during which the version changed are not stored.

mod bench;
mod generate;

use std::collections::HashMap;
use std::sync::Arc;

use crate::engine::tree::TreeEvent;
use crate::engine::{EngineError, Mode, ParseOptions, ParseOutcome, Parser};
use crate::grammar::Grammar;

pub use bench::{bench_run, linear_fit, to_csv, BenchError, BenchRecord, LinearFit, CSV_HEADER};
pub use generate::{generate_input, generate_input_seeded, generator, GenerateError, GeneratorInfo, GENERATORS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MemoKey {
    pub rule: u32,
    pub position: usize,
    pub version: u64,
    /// Interned flag assignment.
    pub flags: u32,
}

#[derive(Clone, Debug)]
pub struct MemoEntry {
    pub success: bool,
    pub end: usize,
    pub fragment: Option<Arc<[TreeEvent]>>,
    pub furthest: Option<usize>,
    /// Version the entry was computed under.
    pub version: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MemoStats {
    pub hits: u64,
    pub misses: u64,
    pub stores: u64,
    pub resets: u64,
}

/// One memo hit, as seen by the instrumented lookup log.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LookupRecord {
    pub key: MemoKey,
    pub entry_version: u64,
    pub current_version: u64,
}

#[derive(Debug)]
pub struct MemoTable {
    entries: HashMap<MemoKey, MemoEntry>,
    capacity: usize,
    stats: MemoStats,
}

impl MemoTable {
    pub fn new(capacity: usize) -> MemoTable {
        MemoTable { entries: HashMap::new(), capacity: capacity.max(1), stats: MemoStats::default() }
    }

    pub fn get(&mut self, key: &MemoKey) -> Option<&MemoEntry> {
        match self.entries.get(key) {
            Some(e) => {
                self.stats.hits += 1;
                Some(e)
            }
            None => {
                self.stats.misses += 1;
                None
            }
        }
    }

    /// Clears everything first if the table is full.
    pub fn insert(&mut self, key: MemoKey, entry: MemoEntry) {
        if self.entries.len() >= self.capacity {
            self.entries.clear();
            self.stats.resets += 1;
        }
        self.entries.insert(key, entry);
        self.stats.stores += 1;
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn stats(&self) -> MemoStats {
        self.stats
    }
}

/// [`crate::engine::parse`] with memoization forced on.
pub fn parse_packrat(
    g: &Grammar,
    start: Option<&str>,
    input: &[u8],
    opts: &ParseOptions,
) -> Result<ParseOutcome, EngineError> {
    let opts = ParseOptions { mode: Mode::Packrat, ..opts.clone() };
    Parser::new(g)?.parse(start.unwrap_or(g.start()), input, &opts)
}
