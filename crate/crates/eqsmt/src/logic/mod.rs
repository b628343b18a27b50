//! Sorts, signatures, terms, formulas and sentences, plus the well-formedness validator.

mod formula;
mod sentence;
mod sort;
mod term;
mod validate;
mod value;

pub use formula::{Formula, Pred};
pub use sentence::{conjoin, Binder, Sentence};
pub use sort::{FunDecl, RelDecl, SigError, Signature, Sort, SortId, SortKind, Theory};
pub use term::{FunVar, Func, Lit, RelVar, Term, Var, VarId};
pub use validate::{sort_of, sort_of_atom_checked, validate, validate_signature, Diagnostic, Rule, SortError};
pub use value::Value;
