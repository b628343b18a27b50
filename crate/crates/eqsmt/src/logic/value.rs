use std::fmt;
use std::sync::Arc;

use super::sort::SortId;
use super::term::{Lit, Term};

/// A model value: an element of a finite universe, a boolean, or a
/// background literal kept verbatim (e.g. an integer numeral).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Elem(u32),
    Num(Arc<str>),
}

impl Value {
    pub fn to_term(&self, sort: SortId) -> Term {
        Term::Lit(match self {
            Value::Bool(b) => Lit::Bool(*b),
            Value::Elem(e) => Lit::Elem(sort, *e),
            Value::Num(n) => Lit::Num(sort, n.clone()),
        })
    }

    pub fn from_lit(l: &Lit) -> Value {
        match l {
            Lit::Bool(b) => Value::Bool(*b),
            Lit::Elem(_, e) => Value::Elem(*e),
            Lit::Num(_, n) => Value::Num(n.clone()),
        }
    }

    pub fn as_elem(&self) -> Option<u32> {
        match self {
            Value::Elem(e) => Some(*e),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Elem(e) => write!(f, "e{e}"),
            Value::Num(n) => f.write_str(n),
        }
    }
}
