//! Decision procedure for EQSMT, the exists-forall fragment of many-sorted
//! second-order logic over an uninterpreted combination of theories.
//!
//! A sentence is lowered to first-order form (relation variables become
//! characteristic functions, existential functions are emulated on the
//! finite foreground, universal functions are Ackermannized), converted to
//! CNF and decided by splitting clauses between per-sort solvers. Models are
//! pulled back into a witness for the original sentence. A synthesis
//! frontend encodes bounded expression-tree search as an EQSMT sentence.

pub mod backends;
pub mod decompose;
pub mod logic;
pub mod oracle;
pub mod par;
pub mod parser;
pub mod random;
pub mod sexp;
pub mod simplify;
pub mod solve;
pub mod synth;
pub mod transform;
pub mod witness;
