#![allow(dead_code)]

pub mod oracle;
pub mod random;

use std::path::Path;

use nez_core::dsl::parse_grammar_text;
use nez_core::grammar::Grammar;

pub fn grammar(text: &str) -> Grammar {
    parse_grammar_text(text).unwrap_or_else(|d| panic!("{d:?}"))
}

pub fn corpus_grammar(file: &str) -> Grammar {
    let path = nez_core::corpus::default_corpus_dir().join(file);
    grammar(&std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display())))
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

/// Runs `f` on a thread with a large stack; deeply nested inputs recurse
/// deeply.
pub fn big_stack<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    std::thread::Builder::new()
        .stack_size(1 << 30)
        .spawn(f)
        .expect("spawn")
        .join()
        .unwrap_or_else(|e| std::panic::resume_unwind(e))
}

/// Every string over `alphabet` of length at most `max_len`.
pub fn all_inputs(alphabet: &[u8], max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * alphabet.len());
        for s in &layer {
            for &c in alphabet {
                let mut t: Vec<u8> = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}
