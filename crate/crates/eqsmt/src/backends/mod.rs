//! Per-sort deciders for single-sorted exists-forall queries.
//!
//! Foreground, boolean and symbol-free empty-theory sorts are decided
//! internally by finite search. Arithmetic and other theories go to an
//! external SMT-LIB 2 solver run as a subprocess.

mod combined;
mod finite;
mod session;
mod smtlib;

use std::fmt;

use thiserror::Error;

use crate::logic::{Formula, Signature, SortId, SortKind, Theory, Value, Var};

pub use combined::{solve_combined, CombinedOptions, CombinedOutcome, CombinedStats};
pub use finite::{clause_table, solve_bool, solve_foreground, Finite, TableRow};
pub use session::{run_script, RunError, Session};
pub use smtlib::{parse_verdict, query_script, smt_name, External, Printer, DEFAULT_TIMEOUT};

/// Single-sorted query `exists x. forall y. AND_j OR clause_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoryQuery {
    pub sort: SortId,
    pub exists: Vec<Var>,
    pub forall: Vec<Var>,
    /// Each clause is a disjunction of atoms or negated atoms.
    pub clauses: Vec<Vec<Formula>>,
}

impl TheoryQuery {
    pub fn matrix(&self) -> Formula {
        Formula::and_all(self.clauses.iter().map(|c| Formula::or_all(c.clone())).collect())
    }

    /// Every variable and every atom argument is of the query's sort
    /// (boolean-valued atoms of other sorts are not allowed either).
    pub fn is_single_sorted(&self, sig: &Signature) -> bool {
        let vars_ok = self.exists.iter().chain(&self.forall).all(|v| v.sort == self.sort);
        let mut atoms_ok = true;
        for c in &self.clauses {
            for l in c {
                let atom = match l {
                    Formula::Not(a) => a,
                    a => a,
                };
                atoms_ok &= match crate::logic::sort_of_atom_checked(atom, sig) {
                    Ok(Some(s)) => s == self.sort,
                    Ok(None) => true,
                    Err(_) => false,
                };
            }
        }
        vars_ok && atoms_ok
    }
}

/// Values of the existential variables of one query.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SortModel {
    pub values: Vec<(Var, Value)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum QueryVerdict {
    Sat(SortModel),
    Unsat,
    Unknown(String),
}

impl QueryVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            QueryVerdict::Sat(_) => "sat",
            QueryVerdict::Unsat => "unsat",
            QueryVerdict::Unknown(_) => "unknown",
        }
    }
}

impl fmt::Display for QueryVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryVerdict::Unknown(r) => write!(f, "unknown ({r})"),
            v => f.write_str(v.label()),
        }
    }
}

pub trait Backend: Send + Sync {
    fn name(&self) -> String;
    fn solve(&self, q: &TheoryQuery, sig: &Signature) -> QueryVerdict;
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("no backend for sort `{sort}` (theory `{theory}`); set --backend or EQSMT_BACKEND_CMD")]
pub struct MissingBackend {
    pub sort: String,
    pub theory: String,
}

/// Whether the internal finite decider handles this sort.
pub fn is_internal(sig: &Signature, sort: SortId) -> bool {
    match &sig.sort(sort).kind {
        SortKind::Foreground | SortKind::Bool => true,
        SortKind::Background(Theory::Empty) => !sig.has_symbols_in(sort),
        SortKind::Background(_) => false,
    }
}

/// Backend assignment for every sort.
#[derive(Clone, Debug, Default)]
pub struct Backends {
    pub finite: Finite,
    pub external: Option<External>,
}

impl Backends {
    pub fn internal() -> Self {
        Backends::default()
    }

    pub fn with_external(external: External) -> Self {
        Backends {
            finite: Finite,
            external: Some(external),
        }
    }

    pub fn for_sort(&self, sig: &Signature, sort: SortId) -> Result<&dyn Backend, MissingBackend> {
        if is_internal(sig, sort) {
            return Ok(&self.finite);
        }
        match &self.external {
            Some(e) => Ok(e),
            None => Err(MissingBackend {
                sort: sig.sort_name(sort).to_string(),
                theory: sig.theory(sort).map_or("?", |t| t.id()).to_string(),
            }),
        }
    }
}
