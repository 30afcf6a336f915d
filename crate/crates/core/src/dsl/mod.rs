//! The textual grammar notation.
//!
//! ```text
//! @start XML
//! XML   = '<' <def TAG NAME> '>' INNER? '</' <is TAG> '>'
//! INNER = <block TAG XML>
//! NAME  = [A-z] [A-z0-9]*
//! ```
//!
//! Productions are `Name = expr`. Literals are quoted with `'` or `"` and
//! understand `\n \r \t \\ \' \" \xHH`. Classes are `[...]` with ranges and
//! the same escapes plus `\[ \] \-`. Choice is `/` (right-associative, lowest
//! precedence), then sequence, then the prefixes `&` and `!`, then the
//! suffixes `? * +`. Tree forms are `{ e }`, `$(e)` and `#Tag`; table and
//! condition forms are written in angle brackets. Comments are `/* */` and
//! `//`.
//!
//! Specialized production names produced by condition elimination, such as
//! `WS@NL=t`, are accepted wherever a production name is.

mod printer;

use std::collections::HashMap;

pub use crate::grammar::SourceSpan;
use crate::grammar::{codes, has_errors, validate, Diagnostic, Expr, Grammar};
pub use printer::{print_expr, print_grammar};

/// Parses and validates a grammar. On failure the returned list holds every
/// diagnostic (errors first as found, warnings included).
pub fn parse_grammar_text(text: &str) -> Result<Grammar, Vec<Diagnostic>> {
    let grammar = parse_grammar_syntax(text)?;
    let diags = validate(&grammar);
    if has_errors(&diags) {
        return Err(diags);
    }
    Ok(grammar)
}

/// Parses a grammar without running the static checks.
pub fn parse_grammar_syntax(text: &str) -> Result<Grammar, Vec<Diagnostic>> {
    let mut p = Reader::new(text);
    p.grammar()
}

/// Parses a single expression with the same rules as a production body.
pub fn parse_expression(text: &str) -> Result<Expr, Vec<Diagnostic>> {
    let mut p = Reader::new(text);
    let result = p.skip_trivia().and_then(|_| p.choice()).and_then(|e| {
        p.skip_trivia()?;
        if p.at_end() {
            Ok(e)
        } else {
            Err(p.error_here("unexpected trailing input"))
        }
    });
    result.map_err(|d| vec![d])
}

struct Reader<'a> {
    src: &'a [u8],
    pos: usize,
    line_starts: Vec<usize>,
}

type PResult<T> = Result<T, Diagnostic>;

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_ident_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Reader<'a> {
        let src = text.as_bytes();
        let mut line_starts = vec![0];
        line_starts.extend(src.iter().enumerate().filter(|(_, &b)| b == b'\n').map(|(i, _)| i + 1));
        Reader { src, pos: 0, line_starts }
    }

    fn span(&self, offset: usize, length: usize) -> SourceSpan {
        let line = self.line_starts.partition_point(|&s| s <= offset);
        let column = offset - self.line_starts[line - 1] + 1;
        let length = length.min(self.src.len().saturating_sub(offset));
        SourceSpan { line, column, offset, length }
    }

    fn error_at(&self, offset: usize, message: impl Into<String>) -> Diagnostic {
        let length = usize::from(offset < self.src.len());
        Diagnostic::error(codes::E_SYNTAX, message).at(Some(self.span(offset, length)))
    }

    fn error_here(&self, message: impl Into<String>) -> Diagnostic {
        self.error_at(self.pos, message)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<u8> {
        self.src.get(self.pos + k).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, b: u8) -> PResult<()> {
        self.skip_trivia()?;
        if self.eat(b) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected '{}'", b as char)))
        }
    }

    fn skip_trivia(&mut self) -> PResult<()> {
        loop {
            match self.peek() {
                Some(b' ' | b'\t' | b'\r' | b'\n') => self.pos += 1,
                Some(b'/') if self.peek_at(1) == Some(b'/') => {
                    while !matches!(self.peek(), None | Some(b'\n')) {
                        self.pos += 1;
                    }
                }
                Some(b'/') if self.peek_at(1) == Some(b'*') => {
                    let start = self.pos;
                    self.pos += 2;
                    loop {
                        match self.peek() {
                            None => return Err(self.error_at(start, "unterminated comment")),
                            Some(b'*') if self.peek_at(1) == Some(b'/') => {
                                self.pos += 2;
                                break;
                            }
                            _ => self.pos += 1,
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn ident(&mut self) -> PResult<String> {
        self.skip_trivia()?;
        match self.peek() {
            Some(b) if is_ident_start(b) => {
                let start = self.pos;
                while self.peek().is_some_and(is_ident_char) {
                    self.pos += 1;
                }
                Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
            }
            _ => Err(self.error_here("expected a name")),
        }
    }

    /// A production name, optionally with a specialization suffix
    /// `@FLAG=t,FLAG2=f`.
    fn production_name(&mut self) -> PResult<String> {
        let mut name = self.ident()?;
        if self.peek() == Some(b'@') && self.peek_at(1).is_some_and(is_ident_start) {
            self.pos += 1;
            name.push('@');
            loop {
                let start = self.pos;
                while self.peek().is_some_and(is_ident_char) {
                    self.pos += 1;
                }
                if start == self.pos {
                    return Err(self.error_here("expected a flag name in specialized production name"));
                }
                name.push_str(std::str::from_utf8(&self.src[start..self.pos]).expect("ascii"));
                if !self.eat(b'=') {
                    return Err(self.error_here("expected '=' in specialized production name"));
                }
                match self.peek() {
                    Some(v @ (b't' | b'f')) => {
                        self.pos += 1;
                        name.push('=');
                        name.push(v as char);
                    }
                    _ => return Err(self.error_here("expected 't' or 'f' in specialized production name")),
                }
                if self.peek() == Some(b',') && self.peek_at(1).is_some_and(is_ident_start) {
                    self.pos += 1;
                    name.push(',');
                } else {
                    break;
                }
            }
        }
        Ok(name)
    }

    /// True when the upcoming tokens are `Name =`, i.e. a new production.
    fn at_production_header(&mut self) -> bool {
        let save = self.pos;
        let header = self.production_name().is_ok() && self.skip_trivia().is_ok() && self.peek() == Some(b'=');
        self.pos = save;
        header
    }

    fn grammar(&mut self) -> Result<Grammar, Vec<Diagnostic>> {
        let mut productions: Vec<(String, Expr)> = Vec::new();
        let mut origins: HashMap<String, SourceSpan> = HashMap::new();
        let mut start: Option<String> = None;
        let mut diags = Vec::new();
        loop {
            self.skip_trivia().map_err(|d| vec![d])?;
            if self.at_end() {
                break;
            }
            if self.peek() == Some(b'@') {
                let at = self.pos;
                self.pos += 1;
                let directive = self.ident().map_err(|d| vec![d])?;
                if directive != "start" {
                    return Err(vec![self.error_at(at, format!("unknown directive @{directive}"))]);
                }
                start = Some(self.production_name().map_err(|d| vec![d])?);
                continue;
            }
            let name_at = self.pos;
            let name = self.production_name().map_err(|d| vec![d])?;
            let span = self.span(name_at, name.len());
            self.expect(b'=').map_err(|d| vec![d])?;
            let body = self.choice().map_err(|d| vec![d])?;
            if origins.contains_key(&name) {
                diags.push(
                    Diagnostic::error(codes::E_DUPLICATE_PRODUCTION, format!("production {name} is defined twice"))
                        .in_production(&name)
                        .at(Some(span)),
                );
                continue;
            }
            origins.insert(name.clone(), span);
            productions.push((name, body));
        }
        if !diags.is_empty() {
            return Err(diags);
        }
        Ok(Grammar::new(productions, start.as_deref()).with_origins(origins))
    }

    fn choice(&mut self) -> PResult<Expr> {
        let first = self.sequence()?;
        self.skip_trivia()?;
        if self.peek() == Some(b'/') {
            self.pos += 1;
            let rest = self.choice()?;
            Ok(Expr::choice(first, rest))
        } else {
            Ok(first)
        }
    }

    fn starts_item(&mut self) -> PResult<bool> {
        self.skip_trivia()?;
        Ok(match self.peek() {
            Some(b'\'' | b'"' | b'[' | b'.' | b'(' | b'{' | b'#' | b'<' | b'&' | b'!') => true,
            Some(b'$') => self.peek_at(1) == Some(b'('),
            Some(b) if is_ident_start(b) => !self.at_production_header(),
            _ => false,
        })
    }

    fn sequence(&mut self) -> PResult<Expr> {
        let mut items = Vec::new();
        while self.starts_item()? {
            let (e, bare_literal) = self.prefixed()?;
            match bare_literal {
                // A bare literal contributes its bytes as separate items so that
                // `'ab' X` and `'a' 'b' X` denote the same expression.
                Some(bytes) if bytes.is_empty() => items.push(Expr::Empty),
                Some(bytes) => items.extend(bytes.into_iter().map(Expr::Byte)),
                None => items.push(e),
            }
        }
        if items.is_empty() {
            return Err(self.error_here("expected an expression"));
        }
        Ok(Expr::seq_all(items))
    }

    /// Returns the expression and, when it is an unadorned literal, its bytes.
    fn prefixed(&mut self) -> PResult<(Expr, Option<Vec<u8>>)> {
        self.skip_trivia()?;
        match self.peek() {
            Some(b'&') => {
                self.pos += 1;
                Ok((Expr::and(self.prefixed()?.0), None))
            }
            Some(b'!') => {
                self.pos += 1;
                Ok((Expr::not(self.prefixed()?.0), None))
            }
            _ => self.suffixed(),
        }
    }

    fn suffixed(&mut self) -> PResult<(Expr, Option<Vec<u8>>)> {
        let (mut e, mut literal) = self.primary()?;
        loop {
            // Suffixes bind to the preceding primary without intervening trivia
            // being significant; `a *` and `a*` are the same.
            let save = self.pos;
            self.skip_trivia()?;
            match self.peek() {
                Some(b'?') => e = Expr::option(e),
                Some(b'*') => e = Expr::repeat(e),
                Some(b'+') => e = Expr::one_or_more(e),
                _ => {
                    self.pos = save;
                    return Ok((e, literal));
                }
            }
            self.pos += 1;
            literal = None;
        }
    }

    fn primary(&mut self) -> PResult<(Expr, Option<Vec<u8>>)> {
        self.skip_trivia()?;
        let at = self.pos;
        match self.peek() {
            Some(q @ (b'\'' | b'"')) => {
                let bytes = self.literal(q)?;
                Ok((Expr::literal(&bytes), Some(bytes)))
            }
            Some(b'[') => Ok((self.class()?, None)),
            Some(b'.') => {
                self.pos += 1;
                Ok((Expr::Any, None))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.choice()?;
                self.expect(b')')?;
                Ok((e, None))
            }
            Some(b'{') => {
                self.pos += 1;
                let e = self.choice()?;
                self.expect(b'}')?;
                Ok((Expr::tree_new(e), None))
            }
            Some(b'$') if self.peek_at(1) == Some(b'(') => {
                self.pos += 2;
                let e = self.choice()?;
                self.expect(b')')?;
                Ok((Expr::tree_link(e), None))
            }
            Some(b'#') => {
                self.pos += 1;
                if !self.peek().is_some_and(is_ident_start) {
                    return Err(self.error_here("expected a tag name after '#'"));
                }
                Ok((Expr::TreeTag(self.ident()?), None))
            }
            Some(b'<') => {
                self.pos += 1;
                let e = self.angle(at)?;
                self.expect(b'>')?;
                Ok((e, None))
            }
            Some(b) if is_ident_start(b) => Ok((Expr::NonTerminal(self.production_name()?), None)),
            None => Err(self.error_here("unexpected end of input")),
            Some(_) => Err(self.error_here("expected an expression")),
        }
    }

    fn angle(&mut self, at: usize) -> PResult<Expr> {
        let keyword = self.ident().map_err(|_| self.error_at(at, "expected a keyword after '<'"))?;
        match keyword.as_str() {
            "def" | "block" | "local" => {
                let table = self.ident()?;
                let body = self.choice()?;
                Ok(match keyword.as_str() {
                    "def" => Expr::def(&table, body),
                    "block" => Expr::block(&table, body),
                    _ => Expr::local(&table, body),
                })
            }
            "exists" => Ok(Expr::Exists(self.ident()?)),
            "match" => Ok(Expr::Match(self.ident()?)),
            "is" => Ok(Expr::Is(self.ident()?)),
            "isa" => Ok(Expr::Isa(self.ident()?)),
            "if" => {
                let (flag, negated) = self.flag()?;
                Ok(Expr::If { flag, negated })
            }
            "on" => {
                let (flag, negated) = self.flag()?;
                let body = self.choice()?;
                Ok(Expr::On { flag, negated, body: Box::new(body) })
            }
            other => Err(self.error_at(at, format!("unknown form <{other} ...>"))),
        }
    }

    fn flag(&mut self) -> PResult<(String, bool)> {
        self.skip_trivia()?;
        let negated = self.eat(b'!');
        Ok((self.ident()?, negated))
    }

    fn escape(&mut self, start: usize, in_class: bool) -> PResult<u8> {
        let Some(c) = self.peek() else {
            return Err(self.error_at(start, "unterminated escape"));
        };
        self.pos += 1;
        Ok(match c {
            b'n' => b'\n',
            b'r' => b'\r',
            b't' => b'\t',
            b'\\' | b'\'' | b'"' => c,
            b'[' | b']' | b'-' if in_class => c,
            b'x' => {
                let hex = self.src.get(self.pos..self.pos + 2).unwrap_or_default();
                let value = std::str::from_utf8(hex).ok().and_then(|h| u8::from_str_radix(h, 16).ok());
                match value {
                    Some(v) if hex.len() == 2 => {
                        self.pos += 2;
                        v
                    }
                    _ => return Err(self.error_at(self.pos - 2, "expected two hex digits after \\x")),
                }
            }
            _ => return Err(self.error_at(self.pos - 2, format!("unknown escape \\{}", c as char))),
        })
    }

    fn literal(&mut self, quote: u8) -> PResult<Vec<u8>> {
        let start = self.pos;
        self.pos += 1;
        let mut bytes = Vec::new();
        loop {
            match self.peek() {
                None | Some(b'\n') => return Err(self.error_at(start, "unterminated literal")),
                Some(q) if q == quote => {
                    self.pos += 1;
                    return Ok(bytes);
                }
                Some(b'\\') => {
                    self.pos += 1;
                    bytes.push(self.escape(start, false)?);
                }
                Some(b) => {
                    self.pos += 1;
                    bytes.push(b);
                }
            }
        }
    }

    fn class_byte(&mut self, start: usize) -> PResult<u8> {
        match self.peek() {
            None | Some(b'\n') => Err(self.error_at(start, "unterminated character class")),
            Some(b'\\') => {
                self.pos += 1;
                self.escape(start, true)
            }
            Some(b) if b >= 0x80 => Err(self.error_here("non-ASCII character in class; use \\xHH byte escapes")),
            Some(b) => {
                self.pos += 1;
                Ok(b)
            }
        }
    }

    fn class(&mut self) -> PResult<Expr> {
        let start = self.pos;
        self.pos += 1;
        let mut ranges = Vec::new();
        loop {
            match self.peek() {
                None | Some(b'\n') => return Err(self.error_at(start, "unterminated character class")),
                Some(b']') => {
                    self.pos += 1;
                    break;
                }
                _ => {}
            }
            let item_at = self.pos;
            let lo = self.class_byte(start)?;
            let hi = if self.peek() == Some(b'-') && self.peek_at(1).is_some_and(|b| b != b']') {
                self.pos += 1;
                self.class_byte(start)?
            } else {
                lo
            };
            if lo > hi {
                return Err(self.error_at(item_at, "inverted range in character class"));
            }
            ranges.push((lo, hi));
        }
        if ranges.is_empty() {
            return Err(self.error_at(start, "empty character class"));
        }
        Ok(Expr::Class(ranges))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expr(text: &str) -> Expr {
        parse_expression(text).unwrap_or_else(|d| panic!("{text}: {d:?}"))
    }

    const FIG1: &str = "
Expr    = Sum
Sum     = Product (( '+'  / '-' ) Product )*
Product = Value (( '*' / '/' ) Value )*
Value   = [0-9]+ / '(' Expr ')'
";

    #[test]
    fn math_grammar() {
        let g = parse_grammar_text(FIG1).unwrap();
        assert_eq!(g.names().collect::<Vec<_>>(), ["Expr", "Sum", "Product", "Value"]);
        assert_eq!(g.start(), "Expr");
        assert_eq!(
            g.production("Value").unwrap(),
            &Expr::choice(
                Expr::one_or_more(Expr::class(&[(b'0', b'9')])),
                Expr::seq_all([Expr::Byte(b'('), Expr::nt("Expr"), Expr::Byte(b')')])
            )
        );
        assert_eq!(g.origin("Sum").unwrap().line, 3);
    }

    #[test]
    fn unterminated_literal() {
        let diags = parse_grammar_text("A = '").unwrap_err();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, codes::E_SYNTAX);
        let span = diags[0].span.unwrap();
        assert_eq!((span.line, span.column), (1, 5));
    }

    #[test]
    fn scoped_xml() {
        let g = parse_grammar_text(
            "INNER = <block TAG XML>
             XML  = '<' <def TAG NAME> '>' INNER? '</' <is TAG> '>'
             NAME = [A-z] [A-z0-9]*",
        )
        .unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.tables().len(), 1);
        assert_eq!(g.tables()["TAG"], Expr::nt("NAME"));
    }

    #[test]
    fn whitespace_condition_example() {
        assert_eq!(
            expr("[ \\t] / <if NL> [\\n]"),
            Expr::choice(
                Expr::class(&[(0x20, 0x20), (0x09, 0x09)]),
                Expr::seq(Expr::if_flag("NL", false), Expr::class(&[(0x0a, 0x0a)]))
            )
        );
    }

    #[test]
    fn undefined_names_are_fine_in_a_lone_expression() {
        assert_eq!(expr("!e"), Expr::not(Expr::nt("e")));
    }

    #[test]
    fn nested_on() {
        assert_eq!(expr("<on !NL <on NL 'x'>>"), Expr::on("NL", true, Expr::on("NL", false, Expr::Byte(b'x'))));
    }

    #[test]
    fn precedence() {
        let (a, b, c) = (Expr::nt("a"), Expr::nt("b"), Expr::nt("c"));
        assert_eq!(expr("a b / c"), Expr::choice(Expr::seq(a.clone(), b.clone()), c.clone()));
        assert_eq!(expr("a / b / c"), Expr::choice(a.clone(), Expr::choice(b.clone(), c.clone())));
        assert_eq!(expr("!a* b"), Expr::seq(Expr::not(Expr::repeat(a.clone())), b.clone()));
        assert_eq!(expr("&a+?"), Expr::and(Expr::option(Expr::one_or_more(a))));
    }

    #[test]
    fn literal_splicing() {
        assert_eq!(expr("'ab' c"), expr("'a' 'b' c"));
        assert_eq!(expr("'ab'*"), Expr::repeat(Expr::literal(b"ab")));
        assert_eq!(expr("''"), Expr::Empty);
        assert_eq!(expr("\"async\""), Expr::literal(b"async"));
        assert_eq!(expr("'\\x41\\''"), Expr::literal(b"A'"));
        assert_eq!(expr("'é'"), Expr::literal("é".as_bytes()));
    }

    #[test]
    fn tree_forms() {
        assert_eq!(
            expr("{ $({ 'a' #A }) #B }"),
            Expr::tree_new(Expr::seq(
                Expr::tree_link(Expr::tree_new(Expr::seq(Expr::Byte(b'a'), Expr::tag("A")))),
                Expr::tag("B")
            ))
        );
    }

    #[test]
    fn table_forms() {
        assert_eq!(
            expr("<exists T> <match T> <is T> <isa T> <local T .> <if !C>"),
            Expr::seq_all([
                Expr::exists("T"),
                Expr::matches("T"),
                Expr::is("T"),
                Expr::isa("T"),
                Expr::local("T", Expr::Any),
                Expr::if_flag("C", true),
            ])
        );
    }

    #[test]
    fn class_edge_cases() {
        assert_eq!(expr("[-a]"), Expr::class(&[(b'-', b'-'), (b'a', b'a')]));
        assert_eq!(expr("[a-]"), Expr::class(&[(b'a', b'a'), (b'-', b'-')]));
        assert_eq!(expr("[\\]\\\\]"), Expr::class(&[(b']', b']'), (b'\\', b'\\')]));
        assert!(parse_expression("[]").is_err());
        assert!(parse_expression("[z-a]").is_err());
        assert!(parse_expression("[é]").is_err());
    }

    #[test]
    fn comments_and_crlf() {
        let g = parse_grammar_text("/* head */\r\nA = 'a' // tail\r\n  B\r\nB = 'b'\r\n").unwrap();
        assert_eq!(g.production("A").unwrap(), &Expr::seq(Expr::Byte(b'a'), Expr::nt("B")));
    }

    #[test]
    fn start_directive() {
        let g = parse_grammar_text("A = B\n@start B\nB = 'b'").unwrap();
        assert_eq!(g.start(), "B");
        let err = parse_grammar_text("@start Z\nA = 'a'").unwrap_err();
        assert_eq!(err[0].code, codes::E_UNDEFINED_START);
    }

    #[test]
    fn specialized_names() {
        let g = parse_grammar_syntax("WS@NL=t,X=f = [ ] / WS@NL=t,X=f").unwrap();
        assert_eq!(g.names().collect::<Vec<_>>(), ["WS@NL=t,X=f"]);
        assert_eq!(expr("A@B=t"), Expr::nt("A@B=t"));
    }

    #[test]
    fn syntax_errors_carry_spans() {
        for bad in ["A = 'a' )", "A = <frob T>", "A = [a", "A = /* x", "A = 'a\nB = 'b'", "A =", "= 'a'", "A = #"] {
            let diags = parse_grammar_text(bad).unwrap_err();
            assert!(!diags.is_empty(), "{bad}");
            for d in &diags {
                let span = d.span.expect("syntax errors have spans");
                assert!(span.offset + span.length <= bad.len(), "{bad}: {span:?}");
            }
        }
    }

    #[test]
    fn duplicate_production() {
        let diags = parse_grammar_text("A = 'a'\nA = 'b'").unwrap_err();
        assert_eq!(diags[0].code, codes::E_DUPLICATE_PRODUCTION);
        assert_eq!(diags[0].span.unwrap().line, 2);
    }
}
