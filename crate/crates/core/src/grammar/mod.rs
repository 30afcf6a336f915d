//! Expression and grammar data model.
//!
//! An [`Expr`] is a finite tree; recursion happens only through
//! [`Expr::NonTerminal`] names that resolve to productions of a [`Grammar`].
//! Terminals and character classes range over bytes.

mod analysis;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use indexmap::IndexMap;

pub(crate) use analysis::validation_errors;
pub use analysis::{
    check_repetition_bodies, collect_tables, desugar, desugar_expr, detect_left_recursion, nullable_productions,
    reachable_productions, validate,
};

/// A parsing expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Empty,
    Byte(u8),
    /// Inclusive byte ranges, in source order.
    Class(Vec<(u8, u8)>),
    Any,
    NonTerminal(String),
    Seq(Box<Expr>, Box<Expr>),
    Choice(Box<Expr>, Box<Expr>),
    Option(Box<Expr>),
    /// Zero or more.
    Repeat(Box<Expr>),
    OneOrMore(Box<Expr>),
    And(Box<Expr>),
    Not(Box<Expr>),
    TreeNew(Box<Expr>),
    TreeLink(Box<Expr>),
    TreeTag(String),
    Def(String, Box<Expr>),
    Exists(String),
    Match(String),
    Is(String),
    Isa(String),
    Block(String, Box<Expr>),
    Local(String, Box<Expr>),
    If {
        flag: String,
        negated: bool,
    },
    On {
        flag: String,
        negated: bool,
        body: Box<Expr>,
    },
}

impl Expr {
    pub fn nt(name: &str) -> Expr {
        Expr::NonTerminal(name.to_string())
    }

    /// Right-nested sequence of bytes; `Empty` for an empty literal.
    pub fn literal(bytes: &[u8]) -> Expr {
        match bytes.split_last() {
            None => Expr::Empty,
            Some((last, init)) => init.iter().rev().fold(Expr::Byte(*last), |acc, b| Expr::seq(Expr::Byte(*b), acc)),
        }
    }

    pub fn class(ranges: &[(u8, u8)]) -> Expr {
        Expr::Class(ranges.to_vec())
    }

    pub fn seq(a: Expr, b: Expr) -> Expr {
        Expr::Seq(Box::new(a), Box::new(b))
    }

    /// Right-nested sequence of all items; `Empty` if there are none.
    pub fn seq_all(items: impl IntoIterator<Item = Expr>) -> Expr {
        let mut items: Vec<Expr> = items.into_iter().collect();
        let Some(mut acc) = items.pop() else {
            return Expr::Empty;
        };
        while let Some(e) = items.pop() {
            acc = Expr::seq(e, acc);
        }
        acc
    }

    pub fn choice(a: Expr, b: Expr) -> Expr {
        Expr::Choice(Box::new(a), Box::new(b))
    }

    /// Right-nested ordered choice; panics on an empty list.
    pub fn choice_all(items: impl IntoIterator<Item = Expr>) -> Expr {
        let mut items: Vec<Expr> = items.into_iter().collect();
        let mut acc = items.pop().expect("choice_all needs at least one alternative");
        while let Some(e) = items.pop() {
            acc = Expr::choice(e, acc);
        }
        acc
    }

    pub fn option(e: Expr) -> Expr {
        Expr::Option(Box::new(e))
    }

    pub fn repeat(e: Expr) -> Expr {
        Expr::Repeat(Box::new(e))
    }

    pub fn one_or_more(e: Expr) -> Expr {
        Expr::OneOrMore(Box::new(e))
    }

    pub fn and(e: Expr) -> Expr {
        Expr::And(Box::new(e))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn tree_new(e: Expr) -> Expr {
        Expr::TreeNew(Box::new(e))
    }

    pub fn tree_link(e: Expr) -> Expr {
        Expr::TreeLink(Box::new(e))
    }

    pub fn tag(name: &str) -> Expr {
        Expr::TreeTag(name.to_string())
    }

    pub fn def(table: &str, body: Expr) -> Expr {
        Expr::Def(table.to_string(), Box::new(body))
    }

    pub fn exists(table: &str) -> Expr {
        Expr::Exists(table.to_string())
    }

    pub fn matches(table: &str) -> Expr {
        Expr::Match(table.to_string())
    }

    pub fn is(table: &str) -> Expr {
        Expr::Is(table.to_string())
    }

    pub fn isa(table: &str) -> Expr {
        Expr::Isa(table.to_string())
    }

    pub fn block(table: &str, body: Expr) -> Expr {
        Expr::Block(table.to_string(), Box::new(body))
    }

    pub fn local(table: &str, body: Expr) -> Expr {
        Expr::Local(table.to_string(), Box::new(body))
    }

    pub fn if_flag(flag: &str, negated: bool) -> Expr {
        Expr::If { flag: flag.to_string(), negated }
    }

    pub fn on(flag: &str, negated: bool, body: Expr) -> Expr {
        Expr::On { flag: flag.to_string(), negated, body: Box::new(body) }
    }

    /// Direct subexpressions, left to right.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Seq(a, b) | Expr::Choice(a, b) => vec![a, b],
            Expr::Option(e)
            | Expr::Repeat(e)
            | Expr::OneOrMore(e)
            | Expr::And(e)
            | Expr::Not(e)
            | Expr::TreeNew(e)
            | Expr::TreeLink(e)
            | Expr::Def(_, e)
            | Expr::Block(_, e)
            | Expr::Local(_, e)
            | Expr::On { body: e, .. } => vec![e],
            _ => Vec::new(),
        }
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        for child in self.children() {
            child.walk(f);
        }
    }

    /// Rebuilds the tree bottom-up, applying `f` to every node after its
    /// children have been rewritten.
    pub fn rewrite(&self, f: &mut impl FnMut(Expr) -> Expr) -> Expr {
        let rebuilt = match self {
            Expr::Seq(a, b) => Expr::seq(a.rewrite(f), b.rewrite(f)),
            Expr::Choice(a, b) => Expr::choice(a.rewrite(f), b.rewrite(f)),
            Expr::Option(e) => Expr::option(e.rewrite(f)),
            Expr::Repeat(e) => Expr::repeat(e.rewrite(f)),
            Expr::OneOrMore(e) => Expr::one_or_more(e.rewrite(f)),
            Expr::And(e) => Expr::and(e.rewrite(f)),
            Expr::Not(e) => Expr::not(e.rewrite(f)),
            Expr::TreeNew(e) => Expr::tree_new(e.rewrite(f)),
            Expr::TreeLink(e) => Expr::tree_link(e.rewrite(f)),
            Expr::Def(t, e) => Expr::def(t, e.rewrite(f)),
            Expr::Block(t, e) => Expr::block(t, e.rewrite(f)),
            Expr::Local(t, e) => Expr::local(t, e.rewrite(f)),
            Expr::On { flag, negated, body } => Expr::on(flag, *negated, body.rewrite(f)),
            leaf => leaf.clone(),
        };
        f(rebuilt)
    }

    /// Names of all nonterminals referenced in this expression.
    pub fn references(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| {
            if let Expr::NonTerminal(n) = e {
                out.insert(n.as_str());
            }
        });
        out
    }

    pub fn has_conditions(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if matches!(e, Expr::If { .. } | Expr::On { .. }) {
                found = true;
            }
        });
        found
    }
}

/// Location of a construct in grammar source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct SourceSpan {
    /// 1-based.
    pub line: usize,
    /// 1-based, counted in bytes.
    pub column: usize,
    pub offset: usize,
    pub length: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => f.write_str("ERROR"),
            Severity::Warning => f.write_str("WARNING"),
        }
    }
}

/// Diagnostic codes.
pub mod codes {
    pub const E_SYNTAX: &str = "E_SYNTAX";
    pub const E_DUPLICATE_PRODUCTION: &str = "E_DUPLICATE_PRODUCTION";
    pub const E_UNDEFINED_NONTERMINAL: &str = "E_UNDEFINED_NONTERMINAL";
    pub const E_UNDEFINED_START: &str = "E_UNDEFINED_START";
    pub const E_TABLE_CONFLICT: &str = "E_TABLE_CONFLICT";
    pub const E_TABLE_NO_DEF: &str = "E_TABLE_NO_DEF";
    pub const E_LEFT_RECURSION: &str = "E_LEFT_RECURSION";
    pub const E_INVALID_CLASS: &str = "E_INVALID_CLASS";
    pub const W_NULLABLE_REPETITION: &str = "W_NULLABLE_REPETITION";
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub production: Option<String>,
    pub span: Option<SourceSpan>,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: &'static str, message: impl Into<String>) -> Diagnostic {
        Diagnostic { severity: Severity::Error, code, production: None, span: None, message: message.into() }
    }

    pub fn warning(code: &'static str, message: impl Into<String>) -> Diagnostic {
        Diagnostic { severity: Severity::Warning, code, production: None, span: None, message: message.into() }
    }

    pub fn in_production(mut self, name: &str) -> Diagnostic {
        self.production = Some(name.to_string());
        self
    }

    pub fn at(mut self, span: Option<SourceSpan>) -> Diagnostic {
        self.span = span;
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (line, col) = self.span.map_or((0, 0), |s| (s.line, s.column));
        write!(f, "{} {} {}:{} {}", self.severity, self.code, line, col, self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

/// Named productions, a start symbol, the table registry and the flag universe.
///
/// The registry maps each table to the body of its `<def T e>` uses. It is
/// rebuilt on construction; conflicts are reported by [`collect_tables`] and
/// resolved here in favour of the first definition met in production order.
#[derive(Clone, Debug)]
pub struct Grammar {
    productions: IndexMap<String, Expr>,
    start: String,
    tables: BTreeMap<String, Expr>,
    flags: BTreeSet<String>,
    origins: HashMap<String, SourceSpan>,
}

impl PartialEq for Grammar {
    fn eq(&self, other: &Grammar) -> bool {
        self.start == other.start
            && self.productions.len() == other.productions.len()
            && self.productions.iter().zip(&other.productions).all(|(a, b)| a == b)
            && self.tables == other.tables
            && self.flags == other.flags
    }
}

impl Eq for Grammar {}

impl Grammar {
    /// Builds a grammar; the start defaults to the first production.
    /// Later duplicates of a production name replace earlier ones.
    pub fn new(productions: impl IntoIterator<Item = (String, Expr)>, start: Option<&str>) -> Grammar {
        let productions: IndexMap<String, Expr> = productions.into_iter().collect();
        let start = match start {
            Some(s) => s.to_string(),
            None => productions.keys().next().cloned().unwrap_or_default(),
        };
        let mut g =
            Grammar { productions, start, tables: BTreeMap::new(), flags: BTreeSet::new(), origins: HashMap::new() };
        g.refresh();
        g
    }

    pub fn with_origins(mut self, origins: HashMap<String, SourceSpan>) -> Grammar {
        self.origins = origins;
        self
    }

    fn refresh(&mut self) {
        let (registry, _) = collect_tables(self);
        self.tables = registry;
        let mut flags = BTreeSet::new();
        for body in self.productions.values() {
            body.walk(&mut |e| match e {
                Expr::If { flag, .. } | Expr::On { flag, .. } => {
                    flags.insert(flag.clone());
                }
                _ => {}
            });
        }
        self.flags = flags;
    }

    pub fn productions(&self) -> impl Iterator<Item = (&str, &Expr)> {
        self.productions.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn production(&self, name: &str) -> Option<&Expr> {
        self.productions.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.productions.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.productions.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.productions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.productions.is_empty()
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn with_start(mut self, start: &str) -> Grammar {
        self.start = start.to_string();
        self
    }

    /// Table registry: table name to its unique definition expression.
    pub fn tables(&self) -> &BTreeMap<String, Expr> {
        &self.tables
    }

    pub fn table_body(&self, table: &str) -> Option<&Expr> {
        self.tables.get(table)
    }

    /// Every flag named by an `<if>` or `<on>`.
    pub fn flags(&self) -> &BTreeSet<String> {
        &self.flags
    }

    pub fn origin(&self, production: &str) -> Option<SourceSpan> {
        self.origins.get(production).copied()
    }

    /// Applies `f` to every production body, keeping names, order and start.
    pub fn map_bodies(&self, mut f: impl FnMut(&str, &Expr) -> Expr) -> Grammar {
        let productions = self.productions.iter().map(|(k, v)| (k.clone(), f(k, v)));
        let mut g = Grammar::new(productions, Some(&self.start));
        g.origins = self.origins.clone();
        g
    }

    /// Keeps only the named productions, in their original order.
    pub fn retain(&self, keep: &BTreeSet<&str>) -> Grammar {
        let productions =
            self.productions.iter().filter(|(k, _)| keep.contains(k.as_str())).map(|(k, v)| (k.clone(), v.clone()));
        let mut g = Grammar::new(productions, Some(&self.start));
        g.origins = self.origins.clone();
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_is_right_nested() {
        assert_eq!(Expr::literal(b""), Expr::Empty);
        assert_eq!(Expr::literal(b"a"), Expr::Byte(b'a'));
        assert_eq!(Expr::literal(b"abc"), Expr::seq(Expr::Byte(b'a'), Expr::seq(Expr::Byte(b'b'), Expr::Byte(b'c'))));
    }

    #[test]
    fn start_defaults_to_first_production() {
        let g = Grammar::new(vec![("B".to_string(), Expr::Byte(b'b')), ("A".to_string(), Expr::Byte(b'a'))], None);
        assert_eq!(g.start(), "B");
        assert_eq!(g.names().collect::<Vec<_>>(), ["B", "A"]);
    }

    #[test]
    fn flag_universe_collects_if_and_on() {
        let g = Grammar::new(
            vec![
                ("A".to_string(), Expr::on("X", false, Expr::nt("B"))),
                ("B".to_string(), Expr::seq(Expr::if_flag("Y", true), Expr::Any)),
            ],
            None,
        );
        let flags: Vec<_> = g.flags().iter().map(String::as_str).collect();
        assert_eq!(flags, ["X", "Y"]);
    }

    #[test]
    fn equality_ignores_origins() {
        let a = Grammar::new(vec![("A".to_string(), Expr::Any)], None);
        let mut origins = HashMap::new();
        origins.insert("A".to_string(), SourceSpan { line: 3, column: 1, offset: 10, length: 1 });
        let b = a.clone().with_origins(origins);
        assert_eq!(a, b);
    }
}
