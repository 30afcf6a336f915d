//! Golden fixtures: `.nez` grammars with one JSON manifest each.
//!
//! ```json
//! { "grammar": "xml.nez",
//!   "cases": [
//!     { "name": "nested", "start": "XML", "input": "<a><b></b></a>",
//!       "expect": { "accept": 14 } },
//!     { "name": "crossed", "input": "<a></b>", "expect": "reject" } ] }
//! ```
//!
//! A case may give `input_file` instead of `input`, preset `flags`,
//! `require_eof`, and an expected `tree` in S-expression form. `"note"`
//! cases record an outcome without asserting it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::dsl::parse_grammar_text;
use crate::engine::{EngineError, Mode, ParseOptions, ParseOutcome, Parser};
use crate::grammar::Grammar;
use crate::transforms::{eliminate_conditions_with, EliminateOptions, TransformError};

#[derive(Clone, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Expectation {
    Accept(usize),
    Reject,
    Note,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    name: String,
    start: Option<String>,
    input: Option<String>,
    input_file: Option<String>,
    #[serde(default)]
    flags: BTreeMap<String, bool>,
    expect: Expectation,
    tree: Option<String>,
    #[serde(default)]
    require_eof: bool,
    note: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    grammar: String,
    cases: Vec<RawCase>,
}

#[derive(Clone, Debug)]
pub struct GoldenCase {
    pub grammar_file: String,
    pub name: String,
    pub start: String,
    pub input: Vec<u8>,
    pub flags: BTreeMap<String, bool>,
    pub expect: Expectation,
    pub tree: Option<String>,
    pub require_eof: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug)]
pub struct CorpusGrammar {
    pub file: String,
    pub grammar: Grammar,
    pub cases: Vec<GoldenCase>,
}

#[derive(Debug, Error)]
#[error("{path}: {message}")]
pub struct CorpusError {
    pub path: PathBuf,
    pub message: String,
}

impl CorpusError {
    pub fn code(&self) -> &'static str {
        "E_FIXTURE_MALFORMED"
    }

    fn new(path: &Path, message: impl Into<String>) -> CorpusError {
        CorpusError { path: path.to_path_buf(), message: message.into() }
    }
}

/// The fixtures shipped with this crate.
pub fn default_corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

/// Reads every `*.json` manifest in `dir`, in file-name order.
pub fn load_corpus(dir: &Path) -> Result<Vec<CorpusGrammar>, CorpusError> {
    let mut manifests: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CorpusError::new(dir, e.to_string()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    manifests.sort();
    manifests.iter().map(|p| load_manifest(dir, p)).collect()
}

fn load_manifest(dir: &Path, path: &Path) -> Result<CorpusGrammar, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| CorpusError::new(path, e.to_string()))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| CorpusError::new(path, e.to_string()))?;
    let grammar_path = dir.join(&manifest.grammar);
    let source = fs::read_to_string(&grammar_path).map_err(|e| CorpusError::new(&grammar_path, e.to_string()))?;
    let grammar = parse_grammar_text(&source).map_err(|diags| {
        let lines: Vec<String> = diags.iter().map(ToString::to_string).collect();
        CorpusError::new(&grammar_path, lines.join("; "))
    })?;
    let mut cases = Vec::with_capacity(manifest.cases.len());
    for raw in manifest.cases {
        let input = match (&raw.input, &raw.input_file) {
            (Some(s), None) => s.as_bytes().to_vec(),
            (None, Some(f)) => fs::read(dir.join(f)).map_err(|e| CorpusError::new(&dir.join(f), e.to_string()))?,
            _ => {
                return Err(CorpusError::new(path, format!("case {}: give exactly one of input, input_file", raw.name)))
            }
        };
        let start = raw.start.unwrap_or_else(|| grammar.start().to_string());
        if !grammar.contains(&start) {
            return Err(CorpusError::new(path, format!("case {}: unknown start {start}", raw.name)));
        }
        cases.push(GoldenCase {
            grammar_file: manifest.grammar.clone(),
            name: raw.name,
            start,
            input,
            flags: raw.flags,
            expect: raw.expect,
            tree: raw.tree,
            require_eof: raw.require_eof,
            note: raw.note,
        });
    }
    Ok(CorpusGrammar { file: manifest.grammar, grammar, cases })
}

/// Which grammar a case runs against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Original,
    /// Conditions eliminated for the case's start and flag presets.
    Eliminated,
}

#[derive(Clone, Debug)]
pub struct CaseResult {
    pub grammar_file: String,
    pub case: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct CorpusReport {
    pub results: Vec<CaseResult>,
}

impl CorpusReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseResult> {
        self.results.iter().filter(|r| !r.passed)
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// Runs one case; returns the outcome and the grammar/start actually used.
pub fn run_case(g: &Grammar, case: &GoldenCase, mode: Mode, variant: Variant) -> Result<ParseOutcome, RunError> {
    let mut opts = ParseOptions {
        mode,
        require_eof: case.require_eof,
        build_tree: case.tree.is_some(),
        flags: case.flags.clone(),
        ..ParseOptions::default()
    };
    let (grammar, start) = match variant {
        Variant::Original => (g.clone(), case.start.clone()),
        Variant::Eliminated => {
            let eopts = EliminateOptions {
                start: Some(case.start.clone()),
                presets: case.flags.clone(),
                ..EliminateOptions::default()
            };
            let out = eliminate_conditions_with(g, &eopts)?;
            opts.flags.clear();
            let start = out.start().to_string();
            (out, start)
        }
    };
    Ok(Parser::new(&grammar)?.parse(&start, &case.input, &opts)?)
}

pub fn check_case(case: &GoldenCase, out: &ParseOutcome) -> Result<String, String> {
    let got = if out.success {
        format!("accept {}", out.consumed)
    } else {
        format!("reject (fail at {})", out.furthest_failure.unwrap_or(0))
    };
    match (&case.expect, out.success) {
        (Expectation::Note, _) => return Ok(format!("note: {got}")),
        (Expectation::Accept(n), true) if *n == out.consumed => {}
        (Expectation::Reject, false) => {}
        (want, _) => return Err(format!("expected {want:?}, got {got}")),
    }
    if let Some(want) = &case.tree {
        let have = out.tree.as_ref().map(|t| t.to_sexpr()).unwrap_or_default();
        if *want != have {
            return Err(format!("tree mismatch: expected {want}, got {have}"));
        }
    }
    Ok(got)
}

pub fn run_corpus(corpus: &[CorpusGrammar], mode: Mode, variant: Variant) -> CorpusReport {
    let mut report = CorpusReport::default();
    for cg in corpus {
        for case in &cg.cases {
            let verdict = match run_case(&cg.grammar, case, mode, variant) {
                Ok(out) => check_case(case, &out),
                Err(e) => Err(e.to_string()),
            };
            let (passed, detail) = match verdict {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            report.results.push(CaseResult { grammar_file: cg.file.clone(), case: case.name.clone(), passed, detail });
        }
    }
    report
}
