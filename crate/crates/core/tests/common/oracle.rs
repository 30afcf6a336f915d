//! Reference evaluator written straight from the inference rules: a pure
//! function from (expression, input, position, tables, conditions) to an
//! optional successor state. Failure returns nothing, so rollback is
//! implicit. It shares no code with the engine beyond the `Expr` type.

use std::collections::BTreeMap;

use nez_core::grammar::{Expr, Grammar};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct St {
    pub pos: usize,
    /// Table name -> symbols, oldest first.
    pub tables: BTreeMap<String, Vec<Vec<u8>>>,
    /// Declared conditions; anything absent is true.
    pub conds: BTreeMap<String, bool>,
}

impl St {
    pub fn at(pos: usize) -> St {
        St { pos, tables: BTreeMap::new(), conds: BTreeMap::new() }
    }

    fn table(&self, t: &str) -> &[Vec<u8>] {
        self.tables.get(t).map_or(&[], Vec::as_slice)
    }

    fn with_table(&self, t: &str, stack: Vec<Vec<u8>>) -> St {
        let mut s = self.clone();
        if stack.is_empty() {
            s.tables.remove(t);
        } else {
            s.tables.insert(t.to_string(), stack);
        }
        s
    }
}

pub struct Oracle<'g> {
    pub g: &'g Grammar,
    /// Body registered for each table, found by scanning the grammar.
    bodies: BTreeMap<String, Expr>,
}

impl<'g> Oracle<'g> {
    pub fn new(g: &'g Grammar) -> Oracle<'g> {
        let mut bodies = BTreeMap::new();
        for (_, body) in g.productions() {
            body.walk(&mut |e| {
                if let Expr::Def(t, b) = e {
                    bodies.entry(t.clone()).or_insert_with(|| (**b).clone());
                }
            });
        }
        Oracle { g, bodies }
    }

    /// Consumed length on success.
    pub fn parse(&self, start: &str, input: &[u8], conds: &BTreeMap<String, bool>) -> Option<usize> {
        let s = St { pos: 0, tables: BTreeMap::new(), conds: conds.clone() };
        self.eval(&Expr::nt(start), input, &s).map(|s| s.pos)
    }

    pub fn eval(&self, e: &Expr, x: &[u8], s: &St) -> Option<St> {
        let advance = |n: usize| Some(St { pos: s.pos + n, ..s.clone() });
        match e {
            Expr::Empty | Expr::TreeTag(_) => Some(s.clone()),
            Expr::Byte(b) => (x.get(s.pos) == Some(b)).then(|| advance(1)).flatten(),
            Expr::Class(ranges) => match x.get(s.pos) {
                Some(c) if ranges.iter().any(|(lo, hi)| lo <= c && c <= hi) => advance(1),
                _ => None,
            },
            Expr::Any => (s.pos < x.len()).then(|| advance(1)).flatten(),
            Expr::NonTerminal(a) => self.eval(self.g.production(a)?, x, s),
            Expr::Seq(a, b) => {
                let s1 = self.eval(a, x, s)?;
                self.eval(b, x, &s1)
            }
            Expr::Choice(a, b) => self.eval(a, x, s).or_else(|| self.eval(b, x, s)),
            Expr::Option(a) => Some(self.eval(a, x, s).unwrap_or_else(|| s.clone())),
            Expr::Repeat(a) => Some(self.star(a, x, s.clone())),
            Expr::OneOrMore(a) => {
                let s1 = self.eval(a, x, s)?;
                Some(self.star(a, x, s1))
            }
            Expr::And(a) => self.eval(a, x, s).map(|_| s.clone()),
            Expr::Not(a) => match self.eval(a, x, s) {
                Some(_) => None,
                None => Some(s.clone()),
            },
            Expr::TreeNew(a) | Expr::TreeLink(a) => self.eval(a, x, s),
            Expr::Def(t, a) => {
                let s1 = self.eval(a, x, s)?;
                let mut stack = s1.table(t).to_vec();
                stack.push(x[s.pos..s1.pos].to_vec());
                Some(s1.with_table(t, stack))
            }
            Expr::Exists(t) => (!s.table(t).is_empty()).then(|| s.clone()),
            Expr::Match(t) => {
                let top = s.table(t).last()?;
                x[s.pos..].starts_with(top).then(|| advance(top.len())).flatten()
            }
            Expr::Is(t) | Expr::Isa(t) => {
                let stack = s.table(t);
                if stack.is_empty() {
                    return None;
                }
                let s1 = self.eval(self.bodies.get(t)?, x, s)?;
                let w = &x[s.pos..s1.pos];
                let ok = match e {
                    Expr::Is(_) => stack.last().map(Vec::as_slice) == Some(w),
                    _ => stack.iter().any(|v| v == w),
                };
                ok.then(|| advance(w.len())).flatten()
            }
            Expr::Block(t, a) => {
                let saved = s.table(t).to_vec();
                let s1 = self.eval(a, x, s)?;
                Some(s1.with_table(t, saved))
            }
            Expr::Local(t, a) => {
                let saved = s.table(t).to_vec();
                let s1 = self.eval(a, x, &s.with_table(t, Vec::new()))?;
                Some(s1.with_table(t, saved))
            }
            Expr::If { flag, negated } => {
                let value = s.conds.get(flag).copied().unwrap_or(true);
                (value != *negated).then(|| s.clone())
            }
            Expr::On { flag, negated, body } => {
                let mut inner = s.clone();
                inner.conds.insert(flag.clone(), !*negated);
                let mut s1 = self.eval(body, x, &inner)?;
                s1.conds = s.conds.clone();
                Some(s1)
            }
        }
    }

    /// Iterates until failure or an iteration that consumes nothing.
    fn star(&self, a: &Expr, x: &[u8], mut s: St) -> St {
        while let Some(s1) = self.eval(a, x, &s) {
            let progressed = s1.pos != s.pos;
            s = s1;
            if !progressed {
                break;
            }
        }
        s
    }
}
