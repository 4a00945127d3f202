//! Partial-order infinitary term rewriting.
//!
//! Terms with an undefined constant `_|_` are kept as minimal rational term
//! graphs, so infinite regular terms such as `mu x. g(x)` are ordinary
//! values. On top of them sit rewrite systems, recorded reductions with
//! certified limits, residuals and complete developments, and Böhm trees
//! with respect to root-active terms.

pub mod boehm;
pub mod cli;
pub mod develop;
pub mod error;
pub mod reduction;
pub mod term;
pub mod trs;

pub use error::{Error, Result};
pub use term::{Depth, Label, Pos, Signature, Term, TermSequence};
pub use trs::{Rule, Trs, TrsFile};
