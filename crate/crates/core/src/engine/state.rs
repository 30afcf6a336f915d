use std::collections::HashMap;
use std::sync::Arc;

use smallvec::SmallVec;

use super::program::{Node, Program};
use super::tree::{assemble, TreeEvent};
use super::{EngineError, Mode, ParseOptions, ParseOutcome, TableRollback};
use crate::grammar::Expr;
use crate::packrat::{LookupRecord, MemoEntry, MemoKey, MemoTable};

/// Enough to undo anything a failed attempt did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateSnapshot {
    pub position: usize,
    pub depths: SmallVec<[usize; 4]>,
    pub tree_mark: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub failures_checked: u64,
    pub violations: u64,
    pub first_violation: Option<String>,
}

type Stack = Vec<Box<[u8]>>;

/// The observable state compared by the audit.
#[derive(PartialEq)]
struct Observed {
    position: usize,
    tables: Vec<Stack>,
    flags: Vec<bool>,
    tree_len: usize,
}

pub struct ParserState<'a> {
    program: &'a Program,
    input: &'a [u8],
    pos: usize,
    tables: Vec<Stack>,
    flags: Vec<bool>,
    flag_key: u32,
    flag_keys: HashMap<Vec<bool>, u32>,
    version: u64,
    steps: u64,
    budget: u64,
    furthest: Option<usize>,
    tree: Option<Vec<TreeEvent>>,
    memo: Option<MemoTable>,
    memo_log: Option<Vec<LookupRecord>>,
    rollback: TableRollback,
    audit: Option<AuditReport>,
}

impl<'a> ParserState<'a> {
    pub(crate) fn new(program: &'a Program, input: &'a [u8], opts: &ParseOptions, budget: u64) -> ParserState<'a> {
        let flags: Vec<bool> = program.flag_names.iter().map(|f| opts.flags.get(f).copied().unwrap_or(true)).collect();
        let mut state = ParserState {
            program,
            input,
            pos: 0,
            tables: vec![Vec::new(); program.table_names.len()],
            flags,
            flag_key: 0,
            flag_keys: HashMap::new(),
            version: 0,
            steps: 0,
            budget,
            furthest: None,
            tree: opts.build_tree.then(Vec::new),
            memo: (opts.mode == Mode::Packrat).then(|| MemoTable::new(opts.memo_capacity)),
            memo_log: (opts.mode == Mode::Packrat && opts.memo_log).then(Vec::new),
            rollback: opts.table_rollback,
            audit: opts.audit.then(AuditReport::default),
        };
        state.refresh_flag_key();
        state
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn set_position(&mut self, pos: usize) {
        assert!(pos <= self.input.len(), "position past end of input");
        self.pos = pos;
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn furthest_failure(&self) -> Option<usize> {
        self.furthest
    }

    /// Symbols of `table`, latest first.
    pub fn symbols(&self, table: &str) -> Result<Vec<Vec<u8>>, EngineError> {
        let t = self.program.table(table)?;
        Ok(self.tables[t].iter().rev().map(|s| s.to_vec()).collect())
    }

    pub fn push_symbol(&mut self, table: &str, symbol: &[u8]) -> Result<(), EngineError> {
        let t = self.program.table(table)?;
        self.tables[t].push(symbol.into());
        self.version += 1;
        Ok(())
    }

    pub fn flag(&self, name: &str) -> Result<bool, EngineError> {
        Ok(self.flags[self.program.flag(name)?])
    }

    pub fn set_flag(&mut self, name: &str, value: bool) -> Result<(), EngineError> {
        let f = self.program.flag(name)?;
        self.flags[f] = value;
        self.refresh_flag_key();
        Ok(())
    }

    pub fn snapshot(&self) -> StateSnapshot {
        StateSnapshot {
            position: self.pos,
            depths: self.tables.iter().map(Vec::len).collect(),
            tree_mark: self.tree.as_ref().map_or(0, Vec::len),
        }
    }

    /// Undo to `snap` as a failed attempt would.
    pub fn restore(&mut self, snap: &StateSnapshot) {
        self.pos = snap.position;
        if let Some(tree) = &mut self.tree {
            tree.truncate(snap.tree_mark);
        }
        if self.rollback == TableRollback::Restore {
            self.truncate_tables(snap);
        }
    }

    fn truncate_tables(&mut self, snap: &StateSnapshot) {
        let mut removed = false;
        for (stack, &depth) in self.tables.iter_mut().zip(&snap.depths) {
            if stack.len() > depth {
                stack.truncate(depth);
                removed = true;
            }
        }
        if removed {
            self.version += 1;
        }
    }

    /// Evaluates an ad-hoc expression over this grammar's names.
    pub fn eval(&mut self, e: &Expr) -> Result<bool, EngineError> {
        let node = self.program.compile_expr(e)?;
        self.eval_node(&node)
    }

    /// Calls a production by name.
    pub fn eval_production(&mut self, name: &str) -> Result<bool, EngineError> {
        let rule = self
            .program
            .rule(name)
            .ok_or_else(|| EngineError::UnknownName { kind: "production", name: name.to_string() })?;
        self.call(rule)
    }

    pub(crate) fn finish(mut self, success: bool) -> ParseOutcome {
        let furthest = if success {
            None
        } else {
            Some(self.furthest.map_or(self.pos, |f| f.max(self.pos)).min(self.input.len()))
        };
        let tree = match (&self.tree, success) {
            (Some(events), true) => assemble(events, self.pos),
            _ => None,
        };
        ParseOutcome {
            success,
            consumed: if success { self.pos } else { 0 },
            furthest_failure: furthest,
            steps: self.steps,
            tree,
            memo: self.memo.as_ref().map(MemoTable::stats),
            memo_log: self.memo_log.take().unwrap_or_default(),
            audit: self.audit.take(),
        }
    }

    fn refresh_flag_key(&mut self) {
        let next = self.flag_keys.len() as u32;
        self.flag_key = *self.flag_keys.entry(self.flags.clone()).or_insert(next);
    }

    fn fail_at(&mut self, pos: usize) -> bool {
        if self.furthest.is_none_or(|f| pos > f) {
            self.furthest = Some(pos);
        }
        false
    }

    fn emit(&mut self, ev: TreeEvent) {
        if let Some(tree) = &mut self.tree {
            tree.push(ev);
        }
    }

    fn observe(&self) -> Observed {
        Observed {
            position: self.pos,
            tables: self.tables.clone(),
            flags: self.flags.clone(),
            tree_len: self.tree.as_ref().map_or(0, Vec::len),
        }
    }

    fn eval_node(&mut self, node: &Node) -> Result<bool, EngineError> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(EngineError::StepLimit(self.budget));
        }
        if self.audit.is_none() {
            return self.step(node);
        }
        let before = self.observe();
        let ok = self.step(node)?;
        if !ok {
            let clean = before == self.observe();
            let report = self.audit.as_mut().expect("audit enabled");
            report.failures_checked += 1;
            if !clean {
                report.violations += 1;
                if report.first_violation.is_none() {
                    report.first_violation = Some(format!("{node:?} at {}", before.position));
                }
            }
        }
        Ok(ok)
    }

    pub(crate) fn call(&mut self, rule: usize) -> Result<bool, EngineError> {
        let program = self.program;
        if self.memo.is_none() {
            return self.eval_node(&program.rules[rule]);
        }
        let key = MemoKey { rule: rule as u32, position: self.pos, version: self.version, flags: self.flag_key };
        if let Some(entry) = self.memo.as_mut().expect("packrat mode").get(&key) {
            let entry = entry.clone();
            self.steps += 1;
            if let Some(log) = &mut self.memo_log {
                log.push(LookupRecord { key, entry_version: entry.version, current_version: self.version });
            }
            if let Some(f) = entry.furthest {
                self.fail_at(f);
            }
            if entry.success {
                self.pos = entry.end;
                if let (Some(tree), Some(fragment)) = (&mut self.tree, &entry.fragment) {
                    tree.extend(fragment.iter().cloned());
                }
            }
            return Ok(entry.success);
        }
        let outer = self.furthest.take();
        let mark = self.tree.as_ref().map_or(0, Vec::len);
        let ok = self.eval_node(&program.rules[rule])?;
        let inner = self.furthest;
        self.furthest = outer.max(inner);
        if self.version == key.version {
            let fragment = match &self.tree {
                Some(tree) if ok && tree.len() > mark => Some(Arc::from(&tree[mark..])),
                _ => None,
            };
            let entry = MemoEntry { success: ok, end: self.pos, fragment, furthest: inner, version: key.version };
            self.memo.as_mut().expect("packrat mode").insert(key, entry);
        }
        Ok(ok)
    }

    /// Runs e^T without side effects; returns where it stopped on success.
    fn probe_table_body(&mut self, table: usize) -> Result<Option<usize>, EngineError> {
        let program = self.program;
        let Some(body) = &program.table_bodies[table] else {
            return Ok(None);
        };
        let snap = self.snapshot();
        let furthest = self.furthest;
        let ok = self.eval_node(body)?;
        let end = self.pos;
        self.pos = snap.position;
        if let Some(tree) = &mut self.tree {
            tree.truncate(snap.tree_mark);
        }
        self.truncate_tables(&snap);
        self.furthest = furthest;
        Ok(ok.then_some(end))
    }

    fn step(&mut self, node: &Node) -> Result<bool, EngineError> {
        let input = self.input;
        Ok(match node {
            Node::Empty => true,
            Node::Byte(b) => {
                if input.get(self.pos) == Some(b) {
                    self.pos += 1;
                    true
                } else {
                    self.fail_at(self.pos)
                }
            }
            Node::Class(set) => match input.get(self.pos) {
                Some(&c) if set.contains(c) => {
                    self.pos += 1;
                    true
                }
                _ => self.fail_at(self.pos),
            },
            Node::Any => {
                if self.pos < input.len() {
                    self.pos += 1;
                    true
                } else {
                    self.fail_at(self.pos)
                }
            }
            Node::Call(rule) => self.call(*rule)?,
            Node::Seq(a, b) => {
                let snap = self.snapshot();
                if !self.eval_node(a)? {
                    return Ok(false);
                }
                if !self.eval_node(b)? {
                    self.restore(&snap);
                    return Ok(false);
                }
                true
            }
            Node::Choice(a, b) => self.eval_node(a)? || self.eval_node(b)?,
            Node::Option(body) => {
                self.eval_node(body)?;
                true
            }
            Node::Repeat(body) => {
                self.repeat(body)?;
                true
            }
            Node::OneOrMore(body) => {
                if !self.eval_node(body)? {
                    return Ok(false);
                }
                self.repeat(body)?;
                true
            }
            Node::And(body) => {
                let snap = self.snapshot();
                let ok = self.eval_node(body)?;
                self.restore(&snap);
                ok
            }
            Node::Not(body) => {
                let snap = self.snapshot();
                if self.eval_node(body)? {
                    self.restore(&snap);
                    false
                } else {
                    true
                }
            }
            Node::New(body) => {
                let start = self.pos;
                let mark = self.tree.as_ref().map_or(0, Vec::len);
                self.emit(TreeEvent::Open(start));
                if self.eval_node(body)? {
                    self.emit(TreeEvent::Close(self.pos));
                    true
                } else {
                    if let Some(tree) = &mut self.tree {
                        tree.truncate(mark);
                    }
                    false
                }
            }
            Node::Link(body) => {
                let mark = self.tree.as_ref().map_or(0, Vec::len);
                self.emit(TreeEvent::LinkBegin);
                if self.eval_node(body)? {
                    self.emit(TreeEvent::LinkEnd);
                    true
                } else {
                    if let Some(tree) = &mut self.tree {
                        tree.truncate(mark);
                    }
                    false
                }
            }
            Node::Tag(tag) => {
                self.emit(TreeEvent::Tag(tag.clone()));
                true
            }
            Node::Def(table, body) => {
                let start = self.pos;
                if !self.eval_node(body)? {
                    return Ok(false);
                }
                self.tables[*table].push(input[start..self.pos].into());
                self.version += 1;
                true
            }
            Node::Exists(table) => !self.tables[*table].is_empty(),
            Node::Match(table) => match self.tables[*table].last() {
                None => false,
                Some(top) => {
                    if input[self.pos..].starts_with(top) {
                        self.pos += top.len();
                        true
                    } else {
                        self.fail_at(self.pos)
                    }
                }
            },
            Node::Is(table) | Node::Isa(table) => {
                if self.tables[*table].is_empty() {
                    return Ok(false);
                }
                let Some(end) = self.probe_table_body(*table)? else {
                    return Ok(false);
                };
                let x = &input[self.pos..end];
                let stack = &self.tables[*table];
                let found = match node {
                    Node::Is(_) => stack.last().is_some_and(|top| **top == *x),
                    _ => stack.iter().any(|s| **s == *x),
                };
                if found {
                    self.pos = end;
                }
                found
            }
            Node::Block(table, body) => {
                let depth = self.tables[*table].len();
                let ok = self.eval_node(body)?;
                if self.tables[*table].len() > depth {
                    self.tables[*table].truncate(depth);
                    self.version += 1;
                }
                ok
            }
            Node::Local(table, body) => {
                let outer = std::mem::take(&mut self.tables[*table]);
                if !outer.is_empty() {
                    self.version += 1;
                }
                let ok = self.eval_node(body);
                let inner = std::mem::replace(&mut self.tables[*table], outer);
                if !inner.is_empty() || !self.tables[*table].is_empty() {
                    self.version += 1;
                }
                ok?
            }
            Node::If(flag, negated) => self.flags[*flag] != *negated,
            Node::On(flag, negated, body) => {
                let saved = self.flags[*flag];
                let value = !*negated;
                if saved != value {
                    self.flags[*flag] = value;
                    self.refresh_flag_key();
                }
                let ok = self.eval_node(body);
                if saved != value {
                    self.flags[*flag] = saved;
                    self.refresh_flag_key();
                }
                ok?
            }
        })
    }

    /// Stops at the first failing or non-consuming iteration.
    fn repeat(&mut self, body: &Node) -> Result<(), EngineError> {
        loop {
            let start = self.pos;
            if !self.eval_node(body)? || self.pos == start {
                return Ok(());
            }
        }
    }
}
