//! Seeded random grammars over a four-byte alphabet, using every operator.

use nez_core::grammar::{has_errors, validate, Expr, Grammar};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ALPHABET: &[u8] = b"ab</";
const NAMES: [&str; 3] = ["A", "B", "C"];
const TABLES: [&str; 2] = ["T", "U"];
const FLAGS: [&str; 2] = ["P", "Q"];

struct Gen {
    rng: ChaCha8Rng,
    productions: usize,
    /// Registered body of each table.
    bodies: [Expr; 2],
}

impl Gen {
    fn byte(&mut self) -> u8 {
        *ALPHABET.choose(&mut self.rng).expect("non-empty")
    }

    /// Terminal-only expression for table bodies.
    fn terminal(&mut self, depth: usize) -> Expr {
        let pick = if depth == 0 { self.rng.gen_range(0..3) } else { self.rng.gen_range(0..6) };
        match pick {
            0 => Expr::Byte(self.byte()),
            1 => {
                let (a, b) = (self.byte(), self.byte());
                Expr::class(&[(a.min(b), a.max(b))])
            }
            2 => Expr::Any,
            3 => Expr::one_or_more(self.terminal(depth - 1)),
            4 => Expr::repeat(self.terminal(depth - 1)),
            _ => Expr::seq(self.terminal(depth - 1), self.terminal(depth - 1)),
        }
    }

    fn leaf(&mut self) -> Expr {
        match self.rng.gen_range(0..15) {
            0 => Expr::Empty,
            1 | 2 => Expr::Byte(self.byte()),
            3 => {
                let (a, b) = (self.byte(), self.byte());
                Expr::class(&[(a.min(b), a.max(b))])
            }
            4 => Expr::Any,
            5 | 6 => Expr::nt(NAMES[self.rng.gen_range(0..self.productions)]),
            7 => Expr::tag("X"),
            8 => Expr::exists(TABLES.choose(&mut self.rng).expect("non-empty")),
            9 | 12 => Expr::matches(TABLES.choose(&mut self.rng).expect("non-empty")),
            10 | 13 | 14 => {
                let t = TABLES.choose(&mut self.rng).expect("non-empty");
                if self.rng.gen_bool(0.5) {
                    Expr::is(t)
                } else {
                    Expr::isa(t)
                }
            }
            _ => Expr::if_flag(FLAGS.choose(&mut self.rng).expect("non-empty"), self.rng.gen_bool(0.3)),
        }
    }

    fn expr(&mut self, depth: usize) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.25) {
            return self.leaf();
        }
        let d = depth - 1;
        match self.rng.gen_range(0..16) {
            0..=2 => Expr::seq(self.expr(d), self.expr(d)),
            3 | 4 => Expr::choice(self.expr(d), self.expr(d)),
            5 => Expr::option(self.expr(d)),
            6 => Expr::repeat(self.expr(d)),
            7 => Expr::one_or_more(self.expr(d)),
            8 => Expr::and(self.expr(d)),
            9 => Expr::not(self.expr(d)),
            10 => {
                if self.rng.gen_bool(0.5) {
                    Expr::tree_new(self.expr(d))
                } else {
                    Expr::tree_link(self.expr(d))
                }
            }
            11 | 12 => {
                let i = self.rng.gen_range(0..2);
                Expr::def(TABLES[i], self.bodies[i].clone())
            }
            13 => Expr::block(TABLES.choose(&mut self.rng).expect("non-empty"), self.expr(d)),
            14 => Expr::local(TABLES.choose(&mut self.rng).expect("non-empty"), self.expr(d)),
            _ => Expr::on(FLAGS.choose(&mut self.rng).expect("non-empty"), self.rng.gen_bool(0.4), self.expr(d)),
        }
    }
}

/// One candidate grammar; `None` when it fails validation (left recursion,
/// a table used without any definition, ...).
pub fn candidate(seed: u64) -> Option<Grammar> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let productions = rng.gen_range(1..=3);
    let mut g = Gen { rng, productions, bodies: [Expr::Empty, Expr::Empty] };
    g.bodies = [g.terminal(2), g.terminal(2)];
    let prods: Vec<(String, Expr)> = (0..productions).map(|i| (NAMES[i].to_string(), g.expr(4))).collect();
    let grammar = Grammar::new(prods, None);
    (!has_errors(&validate(&grammar))).then_some(grammar)
}

/// The first `count` valid grammars from consecutive seeds.
pub fn population(count: usize) -> Vec<(u64, Grammar)> {
    (0u64..).filter_map(|seed| candidate(seed).map(|g| (seed, g))).take(count).collect()
}
