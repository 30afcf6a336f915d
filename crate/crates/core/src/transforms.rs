//! Grammar-to-grammar passes.
//!
//! [`eliminate_conditions`] clones each production once per assignment of
//! the flags its language depends on, resolving `<if>` and `<on>`
//! statically. A clone is named `Name@FLAG=t,OTHER=f` with flags in
//! lexical order; a production that depends on no flag keeps its name.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::grammar::{reachable_productions, Expr, Grammar};

pub const DEFAULT_MAX_FLAGS: usize = 12;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TransformError {
    #[error("production {production} depends on {count} flags (limit {limit})")]
    FlagExplosion { production: String, count: usize, limit: usize },
    #[error("definition body of table {table} depends on flags {flags:?}")]
    TableCondition { table: String, flags: BTreeSet<String> },
    #[error("start production '{0}' is not defined")]
    UnknownStart(String),
}

impl TransformError {
    pub fn code(&self) -> &'static str {
        match self {
            TransformError::FlagExplosion { .. } => "E_FLAG_EXPLOSION",
            TransformError::TableCondition { .. } => "E_TABLE_CONDITION",
            TransformError::UnknownStart(_) => "E_UNDEFINED_START",
        }
    }
}

/// Flags that may influence the language of `production`: every `<if C>`
/// reachable from it, minus those behind an `<on C ...>` on every path.
pub fn relevant_flags(g: &Grammar, production: &str) -> BTreeSet<String> {
    relevance(g).remove(production).unwrap_or_default()
}

fn relevance(g: &Grammar) -> HashMap<String, BTreeSet<String>> {
    let mut rel: HashMap<String, BTreeSet<String>> = g.names().map(|n| (n.to_string(), BTreeSet::new())).collect();
    loop {
        let mut changed = false;
        for (name, body) in g.productions() {
            let free = free_flags(g, body, &rel);
            let slot = rel.get_mut(name).expect("every production has a slot");
            if free.len() > slot.len() {
                *slot = free;
                changed = true;
            }
        }
        if !changed {
            return rel;
        }
    }
}

fn free_flags(g: &Grammar, e: &Expr, rel: &HashMap<String, BTreeSet<String>>) -> BTreeSet<String> {
    match e {
        Expr::If { flag, .. } => BTreeSet::from([flag.clone()]),
        Expr::On { flag, body, .. } => {
            let mut inner = free_flags(g, body, rel);
            inner.remove(flag);
            inner
        }
        Expr::NonTerminal(n) => rel.get(n).cloned().unwrap_or_default(),
        Expr::Is(t) | Expr::Isa(t) => g.table_body(t).map(|b| free_flags(g, b, rel)).unwrap_or_default(),
        _ => e.children().into_iter().flat_map(|c| free_flags(g, c, rel)).collect(),
    }
}

pub fn specialized_name(name: &str, ctx: &BTreeMap<String, bool>) -> String {
    if ctx.is_empty() {
        return name.to_string();
    }
    let parts: Vec<String> = ctx.iter().map(|(f, v)| format!("{f}={}", if *v { 't' } else { 'f' })).collect();
    format!("{name}@{}", parts.join(","))
}

#[derive(Clone, Debug)]
pub struct EliminateOptions {
    /// Only specialize what this production reaches. `None` keeps an entry
    /// for every original production.
    pub start: Option<String>,
    /// Outermost flag values; unlisted flags are true.
    pub presets: BTreeMap<String, bool>,
    pub max_flags: usize,
}

impl Default for EliminateOptions {
    fn default() -> EliminateOptions {
        EliminateOptions { start: None, presets: BTreeMap::new(), max_flags: DEFAULT_MAX_FLAGS }
    }
}

pub fn eliminate_conditions(g: &Grammar) -> Result<Grammar, TransformError> {
    eliminate_conditions_with(g, &EliminateOptions::default())
}

/// The result's start is the clone of the requested (or original) start
/// under the preset flags.
pub fn eliminate_conditions_with(g: &Grammar, opts: &EliminateOptions) -> Result<Grammar, TransformError> {
    let rel = relevance(g);
    for (name, flags) in &rel {
        if flags.len() > opts.max_flags {
            return Err(TransformError::FlagExplosion {
                production: name.clone(),
                count: flags.len(),
                limit: opts.max_flags,
            });
        }
    }
    for (table, body) in g.tables() {
        let flags = free_flags(g, body, &rel);
        if !flags.is_empty() {
            return Err(TransformError::TableCondition { table: table.clone(), flags });
        }
    }
    let start = opts.start.clone().unwrap_or_else(|| g.start().to_string());
    if !g.contains(&start) {
        return Err(TransformError::UnknownStart(start));
    }
    let env: BTreeMap<String, bool> =
        g.flags().iter().map(|f| (f.clone(), opts.presets.get(f).copied().unwrap_or(true))).collect();

    let mut spec = Specializer { g, rel: &rel, queue: VecDeque::new(), seen: HashSet::new() };
    let entry = spec.request(&start, &env);
    if opts.start.is_none() {
        for name in g.names() {
            spec.request(name, &env);
        }
    }
    let mut out = Vec::new();
    while let Some((clone, original, ctx)) = spec.queue.pop_front() {
        let mut env = env.clone();
        env.extend(ctx);
        let body = spec.expr(g.production(&original).expect("queued names exist"), &env).into_expr();
        out.push((clone, body));
    }
    Ok(Grammar::new(out, Some(&entry)))
}

/// Result of specializing a subexpression; the first two only arise from
/// resolved conditions.
enum Spec {
    Always,
    Never,
    Expr(Expr),
}

impl Spec {
    fn into_expr(self) -> Expr {
        match self {
            Spec::Always => Expr::Empty,
            Spec::Never => Expr::not(Expr::Empty),
            Spec::Expr(e) => e,
        }
    }
}

struct Specializer<'g> {
    g: &'g Grammar,
    rel: &'g HashMap<String, BTreeSet<String>>,
    queue: VecDeque<(String, String, BTreeMap<String, bool>)>,
    seen: HashSet<String>,
}

impl Specializer<'_> {
    fn request(&mut self, name: &str, env: &BTreeMap<String, bool>) -> String {
        let ctx: BTreeMap<String, bool> = self.rel[name].iter().map(|f| (f.clone(), env[f])).collect();
        let clone = specialized_name(name, &ctx);
        if self.seen.insert(clone.clone()) {
            self.queue.push_back((clone.clone(), name.to_string(), ctx));
        }
        clone
    }

    fn wrap(&mut self, body: &Expr, env: &BTreeMap<String, bool>, f: impl FnOnce(Box<Expr>) -> Expr) -> Spec {
        Spec::Expr(f(Box::new(self.expr(body, env).into_expr())))
    }

    fn expr(&mut self, e: &Expr, env: &BTreeMap<String, bool>) -> Spec {
        use Spec::{Always, Never};
        match e {
            Expr::If { flag, negated } => {
                if env.get(flag).copied().unwrap_or(true) != *negated {
                    Always
                } else {
                    Never
                }
            }
            Expr::On { flag, negated, body } => {
                let mut inner = env.clone();
                inner.insert(flag.clone(), !*negated);
                self.expr(body, &inner)
            }
            Expr::NonTerminal(n) => Spec::Expr(Expr::NonTerminal(self.request(n, env))),
            Expr::Seq(a, b) => match self.expr(a, env) {
                Never => Never,
                Always => self.expr(b, env),
                Spec::Expr(a) => match self.expr(b, env) {
                    Always => Spec::Expr(a),
                    b => Spec::Expr(Expr::seq(a, b.into_expr())),
                },
            },
            Expr::Choice(a, b) => match self.expr(a, env) {
                Never => self.expr(b, env),
                Always => Always,
                Spec::Expr(a) => match self.expr(b, env) {
                    Never => Spec::Expr(a),
                    b => Spec::Expr(Expr::choice(a, b.into_expr())),
                },
            },
            Expr::Option(b) | Expr::Repeat(b) => match self.expr(b, env) {
                Always | Never => Always,
                Spec::Expr(inner) => {
                    Spec::Expr(if matches!(e, Expr::Option(_)) { Expr::option(inner) } else { Expr::repeat(inner) })
                }
            },
            Expr::OneOrMore(b) => match self.expr(b, env) {
                Spec::Expr(inner) => Spec::Expr(Expr::one_or_more(inner)),
                resolved => resolved,
            },
            Expr::And(b) => match self.expr(b, env) {
                Spec::Expr(inner) => Spec::Expr(Expr::and(inner)),
                resolved => resolved,
            },
            Expr::Not(b) => match self.expr(b, env) {
                Always => Never,
                Never => Always,
                Spec::Expr(inner) => Spec::Expr(Expr::not(inner)),
            },
            Expr::TreeNew(b) => self.wrap(b, env, Expr::TreeNew),
            Expr::TreeLink(b) => self.wrap(b, env, Expr::TreeLink),
            Expr::Def(t, b) => self.wrap(b, env, |b| Expr::Def(t.clone(), b)),
            Expr::Block(t, b) => self.wrap(b, env, |b| Expr::Block(t.clone(), b)),
            Expr::Local(t, b) => self.wrap(b, env, |b| Expr::Local(t.clone(), b)),
            Expr::Is(t) | Expr::Isa(t) => {
                // e^T is flag-free, but may still reach renamed productions.
                if let Some(body) = self.g.table_body(t) {
                    let body = body.clone();
                    self.expr(&body, env);
                }
                Spec::Expr(e.clone())
            }
            Expr::Empty
            | Expr::Byte(_)
            | Expr::Class(_)
            | Expr::Any
            | Expr::TreeTag(_)
            | Expr::Exists(_)
            | Expr::Match(_) => Spec::Expr(e.clone()),
        }
    }
}

/// Drops productions the start cannot reach.
pub fn prune_unreachable(g: &Grammar) -> Grammar {
    let keep = reachable_productions(g, g.start());
    g.retain(&keep.iter().map(String::as_str).collect())
}

/// Number of `<if>` and `<on>` nodes.
pub fn condition_count(g: &Grammar) -> usize {
    let mut n = 0;
    for (_, body) in g.productions() {
        body.walk(&mut |e| {
            if matches!(e, Expr::If { .. } | Expr::On { .. }) {
                n += 1;
            }
        });
    }
    n
}
