//! Seeded synthetic inputs for the corpus grammars.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneratorInfo {
    pub id: &'static str,
    /// Corpus grammar file the output is valid for.
    pub grammar: &'static str,
    pub start: &'static str,
}

pub const GENERATORS: &[GeneratorInfo] = &[
    GeneratorInfo { id: "xml-nested", grammar: "xml.nez", start: "Document" },
    GeneratorInfo { id: "typedef-c-mini", grammar: "c-typedef.nez", start: "Program" },
    GeneratorInfo { id: "heredoc-mini", grammar: "heredoc.nez", start: "File" },
    GeneratorInfo { id: "indent-mini", grammar: "indent.nez", start: "File" },
    GeneratorInfo { id: "await-mini", grammar: "await.nez", start: "File" },
    GeneratorInfo { id: "anbncn", grammar: "anbncn.nez", start: "S" },
    GeneratorInfo { id: "math-expr", grammar: "math.nez", start: "Expr" },
    GeneratorInfo { id: "ws-lines", grammar: "ws.nez", start: "Lines" },
    GeneratorInfo { id: "backtrack", grammar: "backtrack.nez", start: "Quad" },
];

pub fn generator(id: &str) -> Option<&'static GeneratorInfo> {
    GENERATORS.iter().find(|g| g.id == id)
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum GenerateError {
    #[error("unknown generator '{0}'")]
    Unknown(String),
    #[error("size must be positive")]
    ZeroSize,
}

impl GenerateError {
    pub fn code(&self) -> &'static str {
        match self {
            GenerateError::Unknown(_) => "E_UNKNOWN_GENERATOR",
            GenerateError::ZeroSize => "E_INVALID_SIZE",
        }
    }
}

pub fn generate_input(kind: &str, size: usize) -> Result<Vec<u8>, GenerateError> {
    generate_input_seeded(kind, size, 0)
}

/// Roughly `size` bytes of text accepted by the generator's grammar.
pub fn generate_input_seeded(kind: &str, size: usize, seed: u64) -> Result<Vec<u8>, GenerateError> {
    if size == 0 {
        return Err(GenerateError::ZeroSize);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = match kind {
        "xml-nested" => xml(&mut rng, size),
        "typedef-c-mini" => c_program(&mut rng, size),
        "heredoc-mini" => heredoc(&mut rng, size),
        "indent-mini" => indent(&mut rng, size),
        "await-mini" => await_methods(&mut rng, size),
        "anbncn" => {
            let n = (size / 3).max(1);
            b"abc".iter().flat_map(|&c| std::iter::repeat_n(c, n)).collect()
        }
        "math-expr" => math(&mut rng, size),
        "ws-lines" => ws_lines(&mut rng, size),
        "backtrack" => {
            let mut v = vec![b'a'; size.saturating_sub(1).max(1)];
            v.push(b'y');
            v
        }
        _ => return Err(GenerateError::Unknown(kind.to_string())),
    };
    Ok(out)
}

const LOWER: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
const XML_MAX_DEPTH: usize = 12;

fn xml(rng: &mut ChaCha8Rng, size: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(size + 16);
    if size < 7 {
        out.extend_from_slice(b"<a></a>");
        return out;
    }
    let mut left = size;
    while left >= 7 {
        let budget = if left < 64 { left } else { rng.gen_range(7..=left.min(2048)) };
        left -= xml_element(rng, 0, budget, &mut out);
    }
    out
}

/// Writes one element of at most `budget` bytes; returns its length.
fn xml_element(rng: &mut ChaCha8Rng, depth: usize, budget: usize, out: &mut Vec<u8>) -> usize {
    let mut name = vec![LOWER[depth % LOWER.len()]];
    if budget > 64 {
        for _ in 0..rng.gen_range(0..3) {
            name.push(*LOWER.choose(rng).expect("non-empty"));
        }
    }
    let before = out.len();
    out.push(b'<');
    out.extend_from_slice(&name);
    out.push(b'>');
    let mut inner = budget - (5 + 2 * name.len());
    while inner >= 7 && depth + 1 < XML_MAX_DEPTH {
        let child = if inner < 14 { inner } else { rng.gen_range(7..=inner.min(4096 >> depth).max(7)) };
        inner -= xml_element(rng, depth + 1, child, out);
    }
    out.extend_from_slice(b"</");
    out.extend_from_slice(&name);
    out.push(b'>');
    out.len() - before
}

const BUILTINS: &[&str] = &["int", "long", "float", "double", "char"];

struct CGen<'r> {
    rng: &'r mut ChaCha8Rng,
    out: String,
    types: Vec<String>,
    next: usize,
}

impl CGen<'_> {
    fn fresh(&mut self, prefix: &str) -> String {
        self.next += 1;
        format!("{prefix}{}", self.next)
    }

    fn type_name(&mut self, locals: &[String]) -> String {
        let pool = self.types.len() + locals.len();
        if pool == 0 || self.rng.gen_bool(0.4) {
            return BUILTINS.choose(self.rng).expect("non-empty").to_string();
        }
        let i = self.rng.gen_range(0..pool);
        if i < self.types.len() {
            self.types[i].clone()
        } else {
            locals[i - self.types.len()].clone()
        }
    }

    fn expr(&mut self, vars: &[String], depth: usize) -> String {
        let atom = |g: &mut CGen<'_>| -> String {
            match g.rng.gen_range(0..4) {
                0 if !vars.is_empty() => vars.choose(g.rng).expect("non-empty").clone(),
                1 => "\"s%d\"".to_string(),
                _ => g.rng.gen_range(0..1000).to_string(),
            }
        };
        if depth >= 3 {
            return atom(self);
        }
        match self.rng.gen_range(0..6) {
            0 => format!("{} + {}", self.expr(vars, depth + 1), self.expr(vars, depth + 1)),
            1 => format!("({})", self.expr(vars, depth + 1)),
            2 => format!("f({}, {})", self.expr(vars, depth + 1), atom(self)),
            3 => format!("-{}", atom(self)),
            _ => atom(self),
        }
    }

    fn block(&mut self, indent: usize, depth: usize, vars: &[String], locals: &[String]) {
        let pad = "  ".repeat(indent);
        let mut scope_vars = vars.to_vec();
        let mut scope_types = locals.to_vec();
        self.out.push_str("{\n");
        for _ in 0..self.rng.gen_range(1..6) {
            self.out.push_str(&pad);
            self.out.push_str("  ");
            match self.rng.gen_range(0..8) {
                0 => {
                    let t = self.fresh("L");
                    let base = self.type_name(&scope_types);
                    self.out.push_str(&format!("typedef {base} {t};\n"));
                    scope_types.push(t);
                }
                1 | 2 => {
                    let t = self.type_name(&scope_types);
                    let v = self.fresh("v");
                    let e = self.expr(&scope_vars, 0);
                    self.out.push_str(&format!("{t} {v} = {e};\n"));
                    scope_vars.push(v);
                }
                3 if depth < 3 => {
                    let e = self.expr(&scope_vars, 1);
                    self.out.push_str(&format!("while ({e} < 10) "));
                    self.block(indent + 1, depth + 1, &scope_vars, &scope_types);
                }
                4 if depth < 3 => self.block(indent + 1, depth + 1, &scope_vars, &scope_types),
                5 => {
                    let t = self.type_name(&scope_types);
                    let e = self.expr(&scope_vars, 2);
                    self.out.push_str(&format!("x = ({t}) {e};\n"));
                }
                _ => {
                    let e = self.expr(&scope_vars, 0);
                    self.out.push_str(&format!("g({e});\n"));
                }
            }
        }
        self.out.push_str(&pad);
        self.out.push_str("}\n");
    }
}

fn c_program(rng: &mut ChaCha8Rng, size: usize) -> Vec<u8> {
    let mut g = CGen { rng, out: String::with_capacity(size + 256), types: Vec::new(), next: 0 };
    while g.out.len() < size {
        match g.rng.gen_range(0..4) {
            0 => {
                let base = g.type_name(&[]);
                let t = g.fresh("T");
                g.out.push_str(&format!("typedef {base} {t};\n"));
                g.types.push(t);
            }
            1 => {
                let ty = g.type_name(&[]);
                let v = g.fresh("gv");
                g.out.push_str(&format!("{ty} {v};\n"));
            }
            _ => {
                let ret = g.type_name(&[]);
                let f = g.fresh("fn");
                let pt = g.type_name(&[]);
                let p = g.fresh("p");
                g.out.push_str(&format!("{ret} {f}({pt} {p}) "));
                let vars = vec![p];
                g.block(0, 0, &vars, &[]);
            }
        }
    }
    g.out.into_bytes()
}

fn word(rng: &mut ChaCha8Rng, len: usize) -> String {
    (0..len).map(|_| *LOWER.choose(rng).expect("non-empty") as char).collect()
}

fn heredoc(rng: &mut ChaCha8Rng, size: usize) -> Vec<u8> {
    let mut out = String::with_capacity(size + 64);
    let mut n = 0;
    while out.len() < size {
        n += 1;
        if rng.gen_bool(0.3) {
            let delim = format!("EOS{n}");
            out.push_str(&format!("puts <<{delim}, {}\n", word(rng, 3)));
            for _ in 0..rng.gen_range(0..4) {
                let len = rng.gen_range(0..20);
                out.push_str(&format!("  {}\n", word(rng, len)));
            }
            if rng.gen_bool(0.3) {
                out.push_str(&format!("{delim}x\n"));
            }
            out.push_str(&delim);
            out.push('\n');
        } else {
            out.push_str(&format!("{} = {} << {}\n", word(rng, 4), rng.gen_range(0..100), rng.gen_range(0..9)));
        }
    }
    out.into_bytes()
}

const INDENT_MAX_DEPTH: usize = 6;

fn indent_block(rng: &mut ChaCha8Rng, depth: usize, out: &mut String, budget: usize) {
    let pad = "    ".repeat(depth);
    let start = out.len();
    let mut first = true;
    while first || (out.len() - start < budget && rng.gen_bool(0.8)) {
        first = false;
        let name = format!("{}{}", word(rng, 1), rng.gen_range(0..100));
        match rng.gen_range(0..6) {
            0 | 1 if depth + 1 < INDENT_MAX_DEPTH => {
                let kw = if rng.gen_bool(0.5) { "if" } else { "while" };
                out.push_str(&format!("{pad}{kw} {name} < {}:\n", rng.gen_range(0..10)));
                indent_block(rng, depth + 1, out, budget / 2);
                if kw == "if" && rng.gen_bool(0.3) {
                    out.push_str(&format!("{pad}else:\n"));
                    indent_block(rng, depth + 1, out, budget / 2);
                }
            }
            2 => out.push_str(&format!("{pad}{name} = (1 +\n  {name})\n")),
            3 => out.push_str(&format!("{pad}if {name}: {name} = 0\n")),
            _ => out.push_str(&format!("{pad}{name} = {name} + {}\n", rng.gen_range(0..100))),
        }
    }
}

fn indent(rng: &mut ChaCha8Rng, size: usize) -> Vec<u8> {
    let mut out = String::with_capacity(size + 64);
    while out.len() < size {
        indent_block(rng, 0, &mut out, 512.min(size));
    }
    out.into_bytes()
}

fn await_methods(rng: &mut ChaCha8Rng, size: usize) -> Vec<u8> {
    let mut out = String::with_capacity(size + 64);
    let mut n = 0;
    while out.len() < size {
        n += 1;
        let is_async = rng.gen_bool(0.5);
        out.push_str(&format!("{}m{n}() {{\n", if is_async { "async " } else { "" }));
        for _ in 0..rng.gen_range(1..5) {
            let v = word(rng, 2);
            if is_async {
                out.push_str(&format!("  {v} = await {};\n", word(rng, 3)));
            } else {
                out.push_str(&format!("  await = {v};\n"));
            }
        }
        out.push_str("  return 0;\n}\n");
    }
    out.into_bytes()
}

fn math_expr(rng: &mut ChaCha8Rng, depth: usize, out: &mut Vec<u8>, budget: usize) {
    let start = out.len();
    loop {
        let left = budget.saturating_sub(out.len() - start);
        if depth < 8 && left >= 8 && rng.gen_bool(0.2) {
            out.push(b'(');
            math_expr(rng, depth + 1, out, left / 4);
            out.push(b')');
        } else {
            out.extend(rng.gen_range(0..1000).to_string().bytes());
        }
        if out.len() - start >= budget {
            return;
        }
        out.push(*b"+-*/".choose(rng).expect("non-empty"));
    }
}

fn math(rng: &mut ChaCha8Rng, size: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(size + 16);
    math_expr(rng, 0, &mut out, size);
    out
}

fn ws_lines(rng: &mut ChaCha8Rng, size: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(size);
    while out.len() < size {
        if !out.is_empty() {
            out.push(b'\n');
        }
        for _ in 0..rng.gen_range(0..40) {
            out.push(*b"a a\t".choose(rng).expect("non-empty"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_nesting() {
        assert_eq!(generate_input("xml-nested", 14).unwrap(), b"<a><b></b></a>");
    }

    #[test]
    fn deterministic() {
        for g in GENERATORS {
            let a = generate_input_seeded(g.id, 3000, 7).unwrap();
            let b = generate_input_seeded(g.id, 3000, 7).unwrap();
            assert_eq!(a, b, "{}", g.id);
            assert!(a.len() >= 1000, "{} produced {} bytes", g.id, a.len());
        }
    }

    #[test]
    fn unknown_kind() {
        let err = generate_input("cobol", 10).unwrap_err();
        assert_eq!(err.code(), "E_UNKNOWN_GENERATOR");
    }
}
