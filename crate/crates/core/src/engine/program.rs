//! Grammars compiled to index-resolved nodes.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use super::EngineError;
use crate::grammar::{Expr, Grammar};

/// 256-bit byte set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct ByteSet([u64; 4]);

impl ByteSet {
    fn from_ranges(ranges: &[(u8, u8)]) -> ByteSet {
        let mut bits = [0u64; 4];
        for &(lo, hi) in ranges {
            for b in lo..=hi {
                bits[usize::from(b >> 6)] |= 1 << (b & 63);
            }
        }
        ByteSet(bits)
    }

    #[inline]
    pub(crate) fn contains(&self, b: u8) -> bool {
        self.0[usize::from(b >> 6)] & (1 << (b & 63)) != 0
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Node {
    Empty,
    Byte(u8),
    Class(Box<ByteSet>),
    Any,
    Call(usize),
    Seq(Box<Node>, Box<Node>),
    Choice(Box<Node>, Box<Node>),
    Option(Box<Node>),
    Repeat(Box<Node>),
    OneOrMore(Box<Node>),
    And(Box<Node>),
    Not(Box<Node>),
    New(Box<Node>),
    Link(Box<Node>),
    Tag(Arc<str>),
    Def(usize, Box<Node>),
    Exists(usize),
    Match(usize),
    Is(usize),
    Isa(usize),
    Block(usize, Box<Node>),
    Local(usize, Box<Node>),
    If(usize, bool),
    On(usize, bool, Box<Node>),
}

#[derive(Debug)]
pub(crate) struct Program {
    pub(crate) rules: Vec<Node>,
    rule_index: HashMap<String, usize>,
    pub(crate) table_names: Vec<String>,
    table_index: HashMap<String, usize>,
    /// The definition expression of each table, if it has one.
    pub(crate) table_bodies: Vec<Option<Node>>,
    pub(crate) flag_names: Vec<String>,
    flag_index: HashMap<String, usize>,
}

fn index_of(names: &[String]) -> HashMap<String, usize> {
    names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect()
}

impl Program {
    pub(crate) fn compile(g: &Grammar) -> Result<Program, EngineError> {
        let rule_names: Vec<String> = g.names().map(str::to_string).collect();
        let mut tables = BTreeSet::new();
        for (_, body) in g.productions() {
            body.walk(&mut |e| match e {
                Expr::Def(t, _)
                | Expr::Exists(t)
                | Expr::Match(t)
                | Expr::Is(t)
                | Expr::Isa(t)
                | Expr::Block(t, _)
                | Expr::Local(t, _) => {
                    tables.insert(t.clone());
                }
                _ => {}
            });
        }
        let table_names: Vec<String> = tables.into_iter().collect();
        let flag_names: Vec<String> = g.flags().iter().cloned().collect();
        let mut program = Program {
            rules: Vec::new(),
            rule_index: index_of(&rule_names),
            table_index: index_of(&table_names),
            table_names,
            table_bodies: Vec::new(),
            flag_index: index_of(&flag_names),
            flag_names,
        };
        program.rules = g.productions().map(|(_, body)| program.compile_expr(body)).collect::<Result<_, _>>()?;
        program.table_bodies = program
            .table_names
            .iter()
            .map(|t| g.table_body(t).map(|b| program.compile_expr(b)).transpose())
            .collect::<Result<_, _>>()?;
        Ok(program)
    }

    pub(crate) fn rule(&self, name: &str) -> Option<usize> {
        self.rule_index.get(name).copied()
    }

    pub(crate) fn table(&self, name: &str) -> Result<usize, EngineError> {
        self.table_index
            .get(name)
            .copied()
            .ok_or_else(|| EngineError::UnknownName { kind: "table", name: name.to_string() })
    }

    pub(crate) fn flag(&self, name: &str) -> Result<usize, EngineError> {
        self.flag_index
            .get(name)
            .copied()
            .ok_or_else(|| EngineError::UnknownName { kind: "flag", name: name.to_string() })
    }

    pub(crate) fn compile_expr(&self, e: &Expr) -> Result<Node, EngineError> {
        let sub = |b: &Expr| self.compile_expr(b).map(Box::new);
        Ok(match e {
            Expr::Empty => Node::Empty,
            Expr::Byte(b) => Node::Byte(*b),
            Expr::Class(ranges) => Node::Class(Box::new(ByteSet::from_ranges(ranges))),
            Expr::Any => Node::Any,
            Expr::NonTerminal(n) => Node::Call(
                self.rule(n).ok_or_else(|| EngineError::UnknownName { kind: "production", name: n.clone() })?,
            ),
            Expr::Seq(a, b) => Node::Seq(sub(a)?, sub(b)?),
            Expr::Choice(a, b) => Node::Choice(sub(a)?, sub(b)?),
            Expr::Option(b) => Node::Option(sub(b)?),
            Expr::Repeat(b) => Node::Repeat(sub(b)?),
            Expr::OneOrMore(b) => Node::OneOrMore(sub(b)?),
            Expr::And(b) => Node::And(sub(b)?),
            Expr::Not(b) => Node::Not(sub(b)?),
            Expr::TreeNew(b) => Node::New(sub(b)?),
            Expr::TreeLink(b) => Node::Link(sub(b)?),
            Expr::TreeTag(t) => Node::Tag(Arc::from(t.as_str())),
            Expr::Def(t, b) => Node::Def(self.table(t)?, sub(b)?),
            Expr::Exists(t) => Node::Exists(self.table(t)?),
            Expr::Match(t) => Node::Match(self.table(t)?),
            Expr::Is(t) => Node::Is(self.table(t)?),
            Expr::Isa(t) => Node::Isa(self.table(t)?),
            Expr::Block(t, b) => Node::Block(self.table(t)?, sub(b)?),
            Expr::Local(t, b) => Node::Local(self.table(t)?, sub(b)?),
            Expr::If { flag, negated } => Node::If(self.flag(flag)?, *negated),
            Expr::On { flag, negated, body } => Node::On(self.flag(flag)?, *negated, sub(body)?),
        })
    }
}
