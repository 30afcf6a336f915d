//! A parsing engine for parsing expression grammars extended with
//! declarative symbol tables (`<def>`, `<is>`, `<isa>`, `<match>`,
//! `<exists>`, `<block>`, `<local>`) and parsing conditions (`<if>`, `<on>`).
//!
//! * [`grammar`]: expression/grammar model and static checks.
//! * [`dsl`]: the textual `.nez` notation and its canonical printer.
//! * [`engine`]: the backtracking interpreter with transactional state.
//! * [`packrat`]: memoized evaluation, input generators and the step-count
//!   benchmark harness.
//! * [`transforms`]: condition elimination and pruning.
//! * [`corpus`]: golden fixture loading and execution.

pub mod corpus;
pub mod dsl;
pub mod engine;
pub mod grammar;
pub mod packrat;
pub mod transforms;
