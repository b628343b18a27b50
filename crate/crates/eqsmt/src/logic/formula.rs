use std::collections::HashMap;
use std::sync::Arc;

use super::sort::SortId;
use super::term::{RelVar, Term, VarId};

/// Relation symbol of the signature, or a built-in arithmetic comparison.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pred {
    Lt,
    Le,
    Gt,
    Ge,
    User(Arc<str>),
}

impl Pred {
    pub fn name(&self) -> &str {
        match self {
            Pred::Lt => "<",
            Pred::Le => "<=",
            Pred::Gt => ">",
            Pred::Ge => ">=",
            Pred::User(n) => n,
        }
    }
}

/// Quantifier-free formula. Derived connectives are kept structurally.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Eq(Term, Term),
    /// Signature relation or comparison; the sort is the argument sort.
    Rel(Pred, SortId, Vec<Term>),
    RelVar(RelVar, Vec<Term>),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Eq(a, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// Conjunction; the empty conjunction is `true`, a singleton is itself.
    pub fn and_all(mut fs: Vec<Formula>) -> Formula {
        match fs.len() {
            0 => Formula::True,
            1 => fs.pop().unwrap(),
            _ => Formula::And(fs),
        }
    }

    /// Disjunction; the empty disjunction is `false`, a singleton is itself.
    pub fn or_all(mut fs: Vec<Formula>) -> Formula {
        match fs.len() {
            0 => Formula::False,
            1 => fs.pop().unwrap(),
            _ => Formula::Or(fs),
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(
            self,
            Formula::True | Formula::False | Formula::Eq(..) | Formula::Rel(..) | Formula::RelVar(..)
        )
    }

    /// Direct sub-formulas of a connective.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Not(a) => vec![a],
            Formula::And(fs) | Formula::Or(fs) => fs.iter().collect(),
            Formula::Implies(a, b) | Formula::Iff(a, b) => vec![a, b],
            _ => vec![],
        }
    }

    /// Calls `f` on every atom.
    pub fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        if self.is_atom() {
            f(self)
        } else {
            for c in self.children() {
                c.visit_atoms(f);
            }
        }
    }

    /// Calls `f` on every top-level argument term of every atom.
    pub fn visit_terms<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        self.visit_atoms(&mut |a| match a {
            Formula::Eq(x, y) => {
                f(x);
                f(y);
            }
            Formula::Rel(_, _, ts) | Formula::RelVar(_, ts) => ts.iter().for_each(&mut *f),
            _ => {}
        });
    }

    /// Rebuild with every atom replaced by `f(atom)`.
    pub fn map_atoms(&self, f: &mut impl FnMut(&Formula) -> Formula) -> Formula {
        match self {
            Formula::Not(a) => Formula::not(a.map_atoms(f)),
            Formula::And(fs) => Formula::And(fs.iter().map(|x| x.map_atoms(f)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|x| x.map_atoms(f)).collect()),
            Formula::Implies(a, b) => Formula::implies(a.map_atoms(f), b.map_atoms(f)),
            Formula::Iff(a, b) => Formula::iff(a.map_atoms(f), b.map_atoms(f)),
            atom => f(atom),
        }
    }

    /// Rebuild with every top-level atom argument replaced by `f(term)`.
    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Formula {
        self.map_atoms(&mut |a| match a {
            Formula::Eq(x, y) => Formula::Eq(f(x), f(y)),
            Formula::Rel(p, s, ts) => Formula::Rel(p.clone(), *s, ts.iter().map(&mut *f).collect()),
            Formula::RelVar(r, ts) => Formula::RelVar(r.clone(), ts.iter().map(&mut *f).collect()),
            other => other.clone(),
        })
    }

    pub fn substitute(&self, map: &HashMap<VarId, Term>) -> Formula {
        if map.is_empty() {
            return self.clone();
        }
        self.map_terms(&mut |t| t.substitute(map))
    }

    /// Number of nodes, used for size guards and statistics.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }
}
