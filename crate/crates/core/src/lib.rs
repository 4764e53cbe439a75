//! A grounder for safe answer set programs with (recursive) `#sum`,
//! `#sum+` and `#count` aggregates.
//!
//! Programs are rewritten into normal programs over reserved `#aggr<i>` and
//! `#accu<i>` predicates, split into components, grounded semi-naively with
//! on-the-fly fact elision, and finally reassembled into ground aggregates.
//!
//! ```
//! use microgringo::{ground_program, parse_program, GroundingOptions, Silent};
//!
//! let program = parse_program("e(a,b). e(b,c). t(X,Y) :- e(X,Y). t(X,Z) :- t(X,Y), e(Y,Z).").unwrap();
//! let result = ground_program(&program, GroundingOptions::default(), &mut Silent).unwrap();
//! let text: Vec<String> = result.rules.iter().map(|r| r.to_string()).collect();
//! assert!(text.contains(&"t(a,c).".to_string()));
//! ```

pub mod aggregates;
pub mod analysis;
pub mod ast;
pub mod engine;
pub mod grounder;
pub mod parser;
pub mod rewrite;
pub mod store;
pub mod trace;

pub use ast::{Rule, SymbolicAtom, Term};
pub use engine::{
    ground_program, GroundError, GroundingOptions, GroundingResult, Observer, Silent,
};
pub use parser::{parse_program, ParseError, Parser, Program};
