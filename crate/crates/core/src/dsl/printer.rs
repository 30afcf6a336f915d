//! Canonical printer. Output re-parses to a structurally equal value.

use std::fmt::Write;

use crate::grammar::{Expr, Grammar};

pub fn print_grammar(g: &Grammar) -> String {
    let mut out = String::new();
    if g.names().next() != Some(g.start()) {
        let _ = writeln!(out, "@start {}", g.start());
    }
    for (name, body) in g.productions() {
        let _ = writeln!(out, "{name} = {}", print_expr(body));
    }
    out
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, Level::Choice, &mut out);
    out
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    Choice,
    Sequence,
    Prefix,
    Suffix,
    Primary,
}

/// Bytes of a right-nested chain of single-byte terminals.
fn byte_chain(e: &Expr) -> Option<Vec<u8>> {
    match e {
        Expr::Byte(b) => Some(vec![*b]),
        Expr::Seq(a, rest) => match a.as_ref() {
            Expr::Byte(b) => {
                let mut bytes = vec![*b];
                bytes.extend(byte_chain(rest)?);
                Some(bytes)
            }
            _ => None,
        },
        _ => None,
    }
}

fn level_of(e: &Expr) -> Level {
    match e {
        Expr::Choice(..) => Level::Choice,
        Expr::Seq(..) if byte_chain(e).is_some() => Level::Primary,
        Expr::Seq(..) => Level::Sequence,
        Expr::And(_) | Expr::Not(_) => Level::Prefix,
        Expr::Option(_) | Expr::Repeat(_) | Expr::OneOrMore(_) => Level::Suffix,
        _ => Level::Primary,
    }
}

fn write_expr(e: &Expr, min: Level, out: &mut String) {
    if level_of(e) < min {
        out.push('(');
        write_expr(e, Level::Choice, out);
        out.push(')');
        return;
    }
    match e {
        Expr::Empty => out.push_str("''"),
        Expr::Byte(b) => write_literal(&[*b], out),
        Expr::Class(ranges) => {
            out.push('[');
            for &(lo, hi) in ranges {
                write_class_byte(lo, out);
                if lo != hi {
                    out.push('-');
                    write_class_byte(hi, out);
                }
            }
            out.push(']');
        }
        Expr::Any => out.push('.'),
        Expr::NonTerminal(n) => out.push_str(n),
        Expr::Seq(..) => match byte_chain(e) {
            Some(bytes) => write_literal(&bytes, out),
            None => write_sequence(e, out),
        },
        Expr::Choice(a, b) => {
            write_expr(a, Level::Sequence, out);
            out.push_str(" / ");
            write_expr(b, Level::Choice, out);
        }
        Expr::Option(b) => suffix(b, '?', out),
        Expr::Repeat(b) => suffix(b, '*', out),
        Expr::OneOrMore(b) => suffix(b, '+', out),
        Expr::And(b) => {
            out.push('&');
            write_expr(b, Level::Prefix, out);
        }
        Expr::Not(b) => {
            out.push('!');
            write_expr(b, Level::Prefix, out);
        }
        Expr::TreeNew(b) => {
            out.push_str("{ ");
            write_expr(b, Level::Choice, out);
            out.push_str(" }");
        }
        Expr::TreeLink(b) => {
            out.push_str("$(");
            write_expr(b, Level::Choice, out);
            out.push(')');
        }
        Expr::TreeTag(t) => {
            out.push('#');
            out.push_str(t);
        }
        Expr::Def(t, b) => scoped("def", t, b, out),
        Expr::Block(t, b) => scoped("block", t, b, out),
        Expr::Local(t, b) => scoped("local", t, b, out),
        Expr::Exists(t) => bare("exists", t, out),
        Expr::Match(t) => bare("match", t, out),
        Expr::Is(t) => bare("is", t, out),
        Expr::Isa(t) => bare("isa", t, out),
        Expr::If { flag, negated } => {
            let _ = write!(out, "<if {}{flag}>", if *negated { "!" } else { "" });
        }
        Expr::On { flag, negated, body } => {
            let _ = write!(out, "<on {}{flag} ", if *negated { "!" } else { "" });
            write_expr(body, Level::Choice, out);
            out.push('>');
        }
    }
}

fn suffix(body: &Expr, op: char, out: &mut String) {
    write_expr(body, Level::Primary, out);
    out.push(op);
}

fn scoped(keyword: &str, table: &str, body: &Expr, out: &mut String) {
    let _ = write!(out, "<{keyword} {table} ");
    write_expr(body, Level::Choice, out);
    out.push('>');
}

fn bare(keyword: &str, table: &str, out: &mut String) {
    let _ = write!(out, "<{keyword} {table}>");
}

/// Flattens the right spine. Adjacent single bytes merge into one literal,
/// which the parser splits back into separate items; a nested sequence on
/// the left is parenthesized so it stays a single item.
fn write_sequence(e: &Expr, out: &mut String) {
    let mut items = Vec::new();
    let mut cur = e;
    while let Expr::Seq(a, b) = cur {
        items.push(a.as_ref());
        cur = b;
    }
    items.push(cur);

    let mut pending: Vec<u8> = Vec::new();
    let mut first = true;
    let mut sep = |out: &mut String| {
        if !first {
            out.push(' ');
        }
        first = false;
    };
    for item in items {
        if let Expr::Byte(b) = item {
            pending.push(*b);
            continue;
        }
        if !pending.is_empty() {
            sep(out);
            write_literal(&pending, out);
            pending.clear();
        }
        sep(out);
        if matches!(item, Expr::Seq(..)) {
            out.push('(');
            write_expr(item, Level::Choice, out);
            out.push(')');
        } else {
            write_expr(item, Level::Prefix, out);
        }
    }
    if !pending.is_empty() {
        sep(out);
        write_literal(&pending, out);
    }
}

fn write_escaped(b: u8, specials: &[u8], out: &mut String) {
    match b {
        b'\n' => out.push_str("\\n"),
        b'\r' => out.push_str("\\r"),
        b'\t' => out.push_str("\\t"),
        b'\\' => out.push_str("\\\\"),
        _ if specials.contains(&b) => {
            out.push('\\');
            out.push(b as char);
        }
        0x20..=0x7e => out.push(b as char),
        _ => {
            let _ = write!(out, "\\x{b:02x}");
        }
    }
}

fn write_literal(bytes: &[u8], out: &mut String) {
    out.push('\'');
    for &b in bytes {
        write_escaped(b, b"'", out);
    }
    out.push('\'');
}

fn write_class_byte(b: u8, out: &mut String) {
    write_escaped(b, b"[]-", out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_expression, parse_grammar_syntax};
    use proptest::prelude::*;

    fn roundtrip(e: &Expr) {
        let text = print_expr(e);
        let back = parse_expression(&text).unwrap_or_else(|d| panic!("{text}: {d:?}"));
        assert_eq!(&back, e, "printed as {text}");
    }

    #[test]
    fn canonical_forms() {
        let e = parse_expression("[ \\t] / <if NL> [\\n]").unwrap();
        assert_eq!(print_expr(&e), "[ \\t] / <if NL> [\\n]");
        let e = parse_expression("'<' <def TAG NAME> '>' INNER? '</' <is TAG> '>'").unwrap();
        assert_eq!(print_expr(&e), "'<' <def TAG NAME> '>' INNER? '</' <is TAG> '>'");
        let e = parse_expression("(a / b) / c").unwrap();
        assert_eq!(print_expr(&e), "(a / b) / c");
    }

    #[test]
    fn tricky_sequences() {
        roundtrip(&Expr::seq(Expr::literal(b"ab"), Expr::Byte(b'c')));
        roundtrip(&Expr::seq(Expr::Byte(b'a'), Expr::Empty));
        roundtrip(&Expr::seq(Expr::Empty, Expr::Byte(b'a')));
        roundtrip(&Expr::repeat(Expr::literal(b"ab")));
        roundtrip(&Expr::not(Expr::literal(b"ab")));
        roundtrip(&Expr::option(Expr::option(Expr::Any)));
        roundtrip(&Expr::not(Expr::not(Expr::Any)));
        roundtrip(&Expr::literal(&[0, 0xff, b'\'', b'\\', b'\n']));
        roundtrip(&Expr::class(&[(b'[', b']'), (b'-', b'-'), (0, 0x1f)]));
    }

    #[test]
    fn grammar_start_directive_only_when_needed() {
        let g = parse_grammar_syntax("A = B\nB = 'b'").unwrap();
        assert_eq!(print_grammar(&g), "A = B\nB = 'b'\n");
        let g = g.with_start("B");
        let text = print_grammar(&g);
        assert_eq!(text, "@start B\nA = B\nB = 'b'\n");
        assert_eq!(parse_grammar_syntax(&text).unwrap(), g);
    }

    fn name() -> impl Strategy<Value = String> {
        prop_oneof![Just("A"), Just("B_1"), Just("x"), Just("W@NL=t,X=f")].prop_map(String::from)
    }

    fn table() -> impl Strategy<Value = String> {
        prop_oneof![Just("T"), Just("TAG")].prop_map(String::from)
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            Just(Expr::Empty),
            any::<u8>().prop_map(Expr::Byte),
            prop::collection::vec((any::<u8>(), any::<u8>()), 1..3)
                .prop_map(|rs| Expr::Class(rs.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect())),
            Just(Expr::Any),
            name().prop_map(Expr::NonTerminal),
            Just(Expr::tag("Num")),
            table().prop_map(Expr::Exists),
            table().prop_map(Expr::Match),
            table().prop_map(Expr::Is),
            table().prop_map(Expr::Isa),
            any::<bool>().prop_map(|n| Expr::if_flag("NL", n)),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::seq(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::choice(a, b)),
                inner.clone().prop_map(Expr::option),
                inner.clone().prop_map(Expr::repeat),
                inner.clone().prop_map(Expr::one_or_more),
                inner.clone().prop_map(Expr::and),
                inner.clone().prop_map(Expr::not),
                inner.clone().prop_map(Expr::tree_new),
                inner.clone().prop_map(Expr::tree_link),
                (table(), inner.clone()).prop_map(|(t, e)| Expr::def(&t, e)),
                (table(), inner.clone()).prop_map(|(t, e)| Expr::block(&t, e)),
                (table(), inner.clone()).prop_map(|(t, e)| Expr::local(&t, e)),
                (any::<bool>(), inner).prop_map(|(n, e)| Expr::on("NL", n, e)),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_is_identity(e in arb_expr()) {
            let text = print_expr(&e);
            let back = parse_expression(&text);
            prop_assert_eq!(back.ok(), Some(e), "printed as {}", text);
        }

        #[test]
        fn grammar_roundtrip(bodies in prop::collection::vec(arb_expr(), 1..4)) {
            let names = ["S", "A@X=t", "B"];
            let g = crate::grammar::Grammar::new(
                bodies.into_iter().enumerate().map(|(i, b)| (names[i].to_string(), b)),
                None,
            );
            let text = print_grammar(&g);
            let back = parse_grammar_syntax(&text).map_err(|d| format!("{d:?}\n{text}"));
            prop_assert_eq!(back, Ok(g));
        }
    }
}
