//! Static checks over grammars: desugaring, the table registry, nullability,
//! left recursion and repetition well-formedness.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use super::{codes, has_errors, Diagnostic, Expr, Grammar};

/// Rewrites `e+` to `e e*` and `e?` to `e / ''`.
pub fn desugar_expr(e: &Expr) -> Expr {
    e.rewrite(&mut |node| match node {
        Expr::OneOrMore(body) => Expr::seq(*body.clone(), Expr::Repeat(body)),
        Expr::Option(body) => Expr::choice(*body, Expr::Empty),
        other => other,
    })
}

pub fn desugar(g: &Grammar) -> Grammar {
    g.map_bodies(|_, body| desugar_expr(body))
}

/// Builds the table registry and reports definition conflicts and tables
/// that are matched against without ever being defined.
///
/// Bodies are compared after desugaring. When several syntactically
/// different (but desugar-equal) bodies exist, the registry keeps the one
/// with the smallest debug rendering so the result does not depend on
/// production order.
pub fn collect_tables(g: &Grammar) -> (BTreeMap<String, Expr>, Vec<Diagnostic>) {
    let mut defs: BTreeMap<String, Vec<(&str, &Expr)>> = BTreeMap::new();
    let mut uses: BTreeMap<String, &str> = BTreeMap::new();
    for (name, body) in g.productions() {
        body.walk(&mut |e| match e {
            Expr::Def(t, b) => defs.entry(t.clone()).or_default().push((name, b)),
            Expr::Is(t) | Expr::Isa(t) | Expr::Match(t) => {
                uses.entry(t.clone()).or_insert(name);
            }
            _ => {}
        });
    }

    let mut registry = BTreeMap::new();
    let mut diags = Vec::new();
    for (table, candidates) in &defs {
        let canonical = desugar_expr(candidates[0].1);
        if let Some((prod, _)) = candidates.iter().find(|(_, b)| desugar_expr(b) != canonical) {
            diags.push(
                Diagnostic::error(
                    codes::E_TABLE_CONFLICT,
                    format!("table {table} has more than one distinct definition expression"),
                )
                .in_production(prod)
                .at(g.origin(prod)),
            );
        }
        let chosen =
            candidates.iter().map(|(_, b)| *b).min_by_key(|b| format!("{b:?}")).expect("non-empty candidate list");
        registry.insert(table.clone(), chosen.clone());
    }
    for (table, prod) in uses {
        if !defs.contains_key(&table) {
            diags.push(
                Diagnostic::error(
                    codes::E_TABLE_NO_DEF,
                    format!("table {table} is never defined with <def {table} ...>"),
                )
                .in_production(prod)
                .at(g.origin(prod)),
            );
        }
    }
    (registry, diags)
}

fn nullable_in(e: &Expr, nullable: &HashSet<String>, tables: &BTreeMap<String, Expr>) -> bool {
    match e {
        Expr::Empty
        | Expr::Option(_)
        | Expr::Repeat(_)
        | Expr::And(_)
        | Expr::Not(_)
        | Expr::TreeTag(_)
        | Expr::Exists(_)
        | Expr::Match(_)
        | Expr::If { .. } => true,
        Expr::Byte(_) | Expr::Class(_) | Expr::Any => false,
        Expr::NonTerminal(n) => nullable.contains(n),
        Expr::Seq(a, b) => nullable_in(a, nullable, tables) && nullable_in(b, nullable, tables),
        Expr::Choice(a, b) => nullable_in(a, nullable, tables) || nullable_in(b, nullable, tables),
        Expr::OneOrMore(b)
        | Expr::TreeNew(b)
        | Expr::TreeLink(b)
        | Expr::Def(_, b)
        | Expr::Block(_, b)
        | Expr::Local(_, b)
        | Expr::On { body: b, .. } => nullable_in(b, nullable, tables),
        Expr::Is(t) | Expr::Isa(t) => tables.get(t).is_some_and(|b| nullable_in(b, nullable, tables)),
    }
}

/// Productions that can succeed without consuming input (least fixpoint).
pub fn nullable_productions(g: &Grammar) -> HashSet<String> {
    let mut nullable = HashSet::new();
    loop {
        let mut changed = false;
        for (name, body) in g.productions() {
            if !nullable.contains(name) && nullable_in(body, &nullable, g.tables()) {
                nullable.insert(name.to_string());
                changed = true;
            }
        }
        if !changed {
            return nullable;
        }
    }
}

/// Nonterminals that may be called at the position where `e` starts.
fn leftmost<'a>(
    e: &'a Expr,
    nullable: &HashSet<String>,
    tables: &'a BTreeMap<String, Expr>,
    out: &mut BTreeSet<&'a str>,
) {
    match e {
        Expr::NonTerminal(n) => {
            out.insert(n);
        }
        Expr::Seq(a, b) => {
            leftmost(a, nullable, tables, out);
            if nullable_in(a, nullable, tables) {
                leftmost(b, nullable, tables, out);
            }
        }
        Expr::Choice(a, b) => {
            leftmost(a, nullable, tables, out);
            leftmost(b, nullable, tables, out);
        }
        Expr::Is(t) | Expr::Isa(t) => {
            if let Some(body) = tables.get(t) {
                leftmost(body, nullable, tables, out);
            }
        }
        other => {
            for child in other.children() {
                leftmost(child, nullable, tables, out);
            }
        }
    }
}

/// Reports every production that can reach itself without consuming input.
pub fn detect_left_recursion(g: &Grammar) -> Vec<Diagnostic> {
    let nullable = nullable_productions(g);
    let edges: BTreeMap<&str, BTreeSet<&str>> = g
        .productions()
        .map(|(name, body)| {
            let mut out = BTreeSet::new();
            leftmost(body, &nullable, g.tables(), &mut out);
            (name, out)
        })
        .collect();

    let mut diags = Vec::new();
    for name in g.names() {
        // BFS with parent links so the message can show one offending cycle.
        let mut parent: HashMap<&str, &str> = HashMap::new();
        let mut queue: VecDeque<&str> = VecDeque::new();
        let mut cycle = None;
        for &next in edges.get(name).into_iter().flatten() {
            if next == name {
                cycle = Some(vec![name, name]);
                break;
            }
            if parent.insert(next, name).is_none() {
                queue.push_back(next);
            }
        }
        while cycle.is_none() {
            let Some(cur) = queue.pop_front() else { break };
            for &next in edges.get(cur).into_iter().flatten() {
                if next == name {
                    let mut back = Vec::new();
                    let mut at = cur;
                    while at != name {
                        back.push(at);
                        at = parent[at];
                    }
                    back.reverse();
                    let mut path = vec![name];
                    path.extend(back);
                    path.push(name);
                    cycle = Some(path);
                    break;
                }
                if !parent.contains_key(next) {
                    parent.insert(next, cur);
                    queue.push_back(next);
                }
            }
        }
        if let Some(path) = cycle {
            diags.push(
                Diagnostic::error(codes::E_LEFT_RECURSION, format!("left recursion: {}", path.join(" -> ")))
                    .in_production(name)
                    .at(g.origin(name)),
            );
        }
    }
    diags
}

/// Productions whose evaluation may run a `<def>` (directly or via calls).
fn defining_productions(g: &Grammar) -> HashSet<&str> {
    let mut out: HashSet<&str> = HashSet::new();
    loop {
        let mut changed = false;
        for (name, body) in g.productions() {
            if out.contains(name) {
                continue;
            }
            let mut hit = false;
            body.walk(&mut |e| match e {
                Expr::Def(..) => hit = true,
                Expr::NonTerminal(n) if out.contains(n.as_str()) => hit = true,
                _ => {}
            });
            if hit {
                out.insert(name);
                changed = true;
            }
        }
        if !changed {
            return out;
        }
    }
}

/// Warns about repetitions whose body can succeed without consuming input
/// and without changing table state.
pub fn check_repetition_bodies(g: &Grammar) -> Vec<Diagnostic> {
    let nullable = nullable_productions(g);
    let defining = defining_productions(g);
    let mut diags = Vec::new();
    for (name, body) in g.productions() {
        body.walk(&mut |e| {
            if let Expr::Repeat(b) | Expr::OneOrMore(b) = e {
                if !nullable_in(b, &nullable, g.tables()) {
                    return;
                }
                let mut stateful = false;
                b.walk(&mut |x| match x {
                    Expr::Def(..) => stateful = true,
                    Expr::NonTerminal(n) if defining.contains(n.as_str()) => stateful = true,
                    _ => {}
                });
                if !stateful {
                    diags.push(
                        Diagnostic::warning(
                            codes::W_NULLABLE_REPETITION,
                            "repetition body can succeed without consuming input",
                        )
                        .in_production(name)
                        .at(g.origin(name)),
                    );
                }
            }
        });
    }
    diags
}

/// Transitive closure of nonterminal references from `from`, including
/// references made through the definition expressions of tables that are
/// matched with `<is>`/`<isa>`.
pub fn reachable_productions(g: &Grammar, from: &str) -> BTreeSet<String> {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut stack = vec![from.to_string()];
    while let Some(name) = stack.pop() {
        if !seen.insert(name.clone()) {
            continue;
        }
        let Some(body) = g.production(&name) else { continue };
        body.walk(&mut |e| match e {
            Expr::NonTerminal(n) if !seen.contains(n) => stack.push(n.clone()),
            Expr::Is(t) | Expr::Isa(t) => {
                if let Some(tb) = g.table_body(t) {
                    for n in tb.references() {
                        if !seen.contains(n) {
                            stack.push(n.to_string());
                        }
                    }
                }
            }
            _ => {}
        });
    }
    seen
}

/// Runs every static check. Error-severity results make the grammar unusable.
pub fn validate(g: &Grammar) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    if !g.contains(g.start()) {
        diags.push(Diagnostic::error(
            codes::E_UNDEFINED_START,
            format!("start production '{}' is not defined", g.start()),
        ));
    }
    for (name, body) in g.productions() {
        for r in body.references() {
            if !g.contains(r) {
                diags.push(
                    Diagnostic::error(codes::E_UNDEFINED_NONTERMINAL, format!("undefined nonterminal {r}"))
                        .in_production(name)
                        .at(g.origin(name)),
                );
            }
        }
        body.walk(&mut |e| {
            if let Expr::Class(ranges) = e {
                if ranges.is_empty() || ranges.iter().any(|(lo, hi)| lo > hi) {
                    diags.push(
                        Diagnostic::error(codes::E_INVALID_CLASS, "character class is empty or has an inverted range")
                            .in_production(name)
                            .at(g.origin(name)),
                    );
                }
            }
        });
    }
    diags.extend(collect_tables(g).1);
    diags.extend(detect_left_recursion(g));
    diags.extend(check_repetition_bodies(g));
    diags
}

/// Convenience used by loaders: only the errors.
pub(crate) fn validation_errors(g: &Grammar) -> Option<Vec<Diagnostic>> {
    let diags = validate(g);
    has_errors(&diags).then(|| diags.into_iter().filter(Diagnostic::is_error).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grammar(rules: &[(&str, Expr)]) -> Grammar {
        Grammar::new(rules.iter().map(|(n, e)| (n.to_string(), e.clone())), None)
    }

    fn codes_of(diags: &[Diagnostic]) -> Vec<(&'static str, String)> {
        diags.iter().map(|d| (d.code, d.production.clone().unwrap_or_default())).collect()
    }

    fn digit() -> Expr {
        Expr::class(&[(b'0', b'9')])
    }

    /// Small arithmetic grammar built by hand.
    pub(crate) fn math() -> Grammar {
        let op = |a: u8, b: u8| Expr::choice(Expr::Byte(a), Expr::Byte(b));
        grammar(&[
            ("Expr", Expr::nt("Sum")),
            ("Sum", Expr::seq(Expr::nt("Product"), Expr::repeat(Expr::seq(op(b'+', b'-'), Expr::nt("Product"))))),
            ("Product", Expr::seq(Expr::nt("Value"), Expr::repeat(Expr::seq(op(b'*', b'/'), Expr::nt("Value"))))),
            (
                "Value",
                Expr::choice(
                    Expr::one_or_more(digit()),
                    Expr::seq_all([Expr::Byte(b'('), Expr::nt("Expr"), Expr::Byte(b')')]),
                ),
            ),
        ])
    }

    #[test]
    fn desugar_rewrites_sugar_only() {
        assert_eq!(desugar_expr(&Expr::one_or_more(digit())), Expr::seq(digit(), Expr::repeat(digit())));
        assert_eq!(desugar_expr(&Expr::option(Expr::Byte(b'a'))), Expr::choice(Expr::Byte(b'a'), Expr::Empty));
        let plain = Expr::seq(Expr::not(Expr::Any), Expr::def("T", Expr::nt("A")));
        assert_eq!(desugar_expr(&plain), plain);
    }

    #[test]
    fn desugar_is_idempotent() {
        let g = math();
        let once = desugar(&g);
        assert_eq!(desugar(&once), once);
        assert_ne!(once, g);
    }

    #[test]
    fn typedef_registry() {
        let w = Expr::class(&[(b'A', b'Z'), (b'a', b'z'), (b'_', b'_'), (b'0', b'9')]);
        let g = grammar(&[
            ("TypeDef", Expr::seq(Expr::literal(b"typedef"), Expr::def("TYPE", Expr::one_or_more(Expr::nt("W"))))),
            ("TypeName", Expr::isa("TYPE")),
            ("W", w),
        ]);
        let (registry, diags) = collect_tables(&g);
        assert!(diags.is_empty(), "{diags:?}");
        assert_eq!(registry.len(), 1);
        assert_eq!(registry["TYPE"], Expr::one_or_more(Expr::nt("W")));
    }

    #[test]
    fn conflicting_definitions() {
        let g = grammar(&[
            ("A", Expr::def("T", Expr::one_or_more(digit()))),
            ("B", Expr::def("T", Expr::one_or_more(Expr::class(&[(b'a', b'z')])))),
        ]);
        let (_, diags) = collect_tables(&g);
        assert_eq!(codes_of(&diags), [(codes::E_TABLE_CONFLICT, "B".to_string())]);
    }

    #[test]
    fn identical_definitions_in_two_productions_are_allowed() {
        let g = grammar(&[
            ("A", Expr::def("T", Expr::one_or_more(digit()))),
            ("B", Expr::def("T", Expr::seq(digit(), Expr::repeat(digit())))),
        ]);
        let (registry, diags) = collect_tables(&g);
        assert!(diags.is_empty());
        assert!(registry.contains_key("T"));
    }

    #[test]
    fn is_without_def() {
        let g = grammar(&[("A", Expr::is("T"))]);
        let (_, diags) = collect_tables(&g);
        assert_eq!(codes_of(&diags), [(codes::E_TABLE_NO_DEF, "A".to_string())]);
    }

    #[test]
    fn direct_left_recursion() {
        let g = grammar(&[
            (
                "Expr",
                Expr::choice(Expr::seq_all([Expr::nt("Expr"), Expr::Byte(b'+'), Expr::nt("Num")]), Expr::nt("Num")),
            ),
            ("Num", Expr::one_or_more(digit())),
        ]);
        let diags = detect_left_recursion(&g);
        assert_eq!(codes_of(&diags), [(codes::E_LEFT_RECURSION, "Expr".to_string())]);
    }

    #[test]
    fn math_grammar_is_not_left_recursive() {
        assert!(detect_left_recursion(&math()).is_empty());
        assert!(validate(&math()).is_empty());
    }

    #[test]
    fn mutual_cycle_through_nullable_option() {
        // Oracle: B = A? is nullable and starts with A; A = B 'x' starts with B
        // and B is nullable, so A ->B ->A is a leftmost cycle.
        let g = grammar(&[("A", Expr::seq(Expr::nt("B"), Expr::Byte(b'x'))), ("B", Expr::option(Expr::nt("A")))]);
        let nullable = nullable_productions(&g);
        assert_eq!(nullable, HashSet::from(["B".to_string()]));
        let diags = detect_left_recursion(&g);
        assert_eq!(
            codes_of(&diags),
            [(codes::E_LEFT_RECURSION, "A".to_string()), (codes::E_LEFT_RECURSION, "B".to_string())]
        );
        assert!(diags[0].message.contains("A -> B -> A"), "{}", diags[0].message);
    }

    #[test]
    fn recursion_after_consumption_is_fine() {
        let g = grammar(&[("A", Expr::choice(Expr::seq(Expr::Byte(b'a'), Expr::nt("A")), Expr::Empty))]);
        assert!(detect_left_recursion(&g).is_empty());
    }

    #[test]
    fn left_recursion_through_predicates_and_scopes() {
        let g = grammar(&[("A", Expr::seq(Expr::not(Expr::Byte(b'x')), Expr::block("T", Expr::nt("A"))))]);
        assert_eq!(detect_left_recursion(&g).len(), 1);
    }

    #[test]
    fn nullable_repetitions() {
        let g = grammar(&[("A", Expr::repeat(Expr::option(Expr::Byte(b'x'))))]);
        assert_eq!(codes_of(&check_repetition_bodies(&g)), [(codes::W_NULLABLE_REPETITION, "A".to_string())]);

        let g = grammar(&[("A", Expr::repeat(Expr::Byte(b'x')))]);
        assert!(check_repetition_bodies(&g).is_empty());

        let g = grammar(&[("A", Expr::repeat(Expr::def("T", Expr::option(Expr::Byte(b'x')))))]);
        assert!(check_repetition_bodies(&g).is_empty());
    }

    #[test]
    fn reachability() {
        let g = math();
        let all: BTreeSet<String> = ["Expr", "Sum", "Product", "Value"].iter().map(|s| s.to_string()).collect();
        assert_eq!(reachable_productions(&g, "Expr"), all);
        let g = grammar(&[("Leaf", Expr::Byte(b'a')), ("Other", Expr::nt("Leaf"))]);
        assert_eq!(reachable_productions(&g, "Leaf"), BTreeSet::from(["Leaf".to_string()]));
    }

    #[test]
    fn reachability_follows_table_definitions() {
        let g = grammar(&[
            ("S", Expr::is("T")),
            ("D", Expr::def("T", Expr::nt("Name"))),
            ("Name", Expr::one_or_more(Expr::class(&[(b'a', b'z')]))),
        ]);
        let got = reachable_productions(&g, "S");
        assert!(got.contains("Name") && !got.contains("D"));
    }

    #[test]
    fn undefined_references_and_start() {
        let g = grammar(&[("A", Expr::nt("B"))]).with_start("Z");
        let diags = validate(&g);
        let got: Vec<_> = diags.iter().map(|d| d.code).collect();
        assert_eq!(got, [codes::E_UNDEFINED_START, codes::E_UNDEFINED_NONTERMINAL]);
    }
}
