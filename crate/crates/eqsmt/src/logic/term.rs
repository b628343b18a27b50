use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU32, Ordering as AtomicOrdering};
use std::sync::Arc;

use super::sort::SortId;

static NEXT_ID: AtomicU32 = AtomicU32::new(1);

/// Globally unique identity of a bound variable (first-order or second-order).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(u32);

impl VarId {
    pub fn fresh() -> Self {
        VarId(NEXT_ID.fetch_add(1, AtomicOrdering::Relaxed))
    }

    pub fn raw(self) -> u32 {
        self.0
    }
}

macro_rules! identity_by_id {
    ($t:ty) => {
        impl PartialEq for $t {
            fn eq(&self, other: &Self) -> bool {
                self.id == other.id
            }
        }
        impl Eq for $t {}
        impl Hash for $t {
            fn hash<H: Hasher>(&self, state: &mut H) {
                self.id.hash(state)
            }
        }
        impl PartialOrd for $t {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for $t {
            fn cmp(&self, other: &Self) -> Ordering {
                self.id.cmp(&other.id)
            }
        }
    };
}

/// First-order variable. Equality and ordering go by id only.
#[derive(Clone, Debug)]
pub struct Var {
    pub id: VarId,
    pub name: Arc<str>,
    pub sort: SortId,
}

identity_by_id!(Var);

impl Var {
    pub fn new(name: &str, sort: SortId) -> Var {
        Var {
            id: VarId::fresh(),
            name: name.into(),
            sort,
        }
    }

    pub fn term(&self) -> Term {
        Term::Var(self.clone())
    }
}

/// Function variable `F : (args) -> result`.
#[derive(Clone, Debug)]
pub struct FunVar {
    pub id: VarId,
    pub name: Arc<str>,
    pub args: Arc<[SortId]>,
    pub result: SortId,
}

identity_by_id!(FunVar);

impl FunVar {
    pub fn new(name: &str, args: Vec<SortId>, result: SortId) -> FunVar {
        FunVar {
            id: VarId::fresh(),
            name: name.into(),
            args: args.into(),
            result,
        }
    }

    pub fn apply(&self, args: Vec<Term>) -> Term {
        Term::FApp(self.clone(), args)
    }
}

/// Relation variable `R : (args)`.
#[derive(Clone, Debug)]
pub struct RelVar {
    pub id: VarId,
    pub name: Arc<str>,
    pub args: Arc<[SortId]>,
}

identity_by_id!(RelVar);

impl RelVar {
    pub fn new(name: &str, args: Vec<SortId>) -> RelVar {
        RelVar {
            id: VarId::fresh(),
            name: name.into(),
            args: args.into(),
        }
    }
}

/// Constant of a sort.
///
/// `Num` holds a background numeral verbatim; it is only interpreted when the
/// theory is known. `Elem` names an element of a finite universe and never
/// appears in parsed input.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lit {
    Bool(bool),
    Num(SortId, Arc<str>),
    Elem(SortId, u32),
}

impl Lit {
    pub fn sort(&self) -> SortId {
        match self {
            Lit::Bool(_) => SortId::BOOL,
            Lit::Num(s, _) | Lit::Elem(s, _) => *s,
        }
    }
}

/// Function symbol of the signature, or a built-in arithmetic operator.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Add,
    Sub,
    Neg,
    Mul,
    User(Arc<str>),
}

impl Func {
    pub fn name(&self) -> &str {
        match self {
            Func::Add => "+",
            Func::Sub | Func::Neg => "-",
            Func::Mul => "*",
            Func::User(n) => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    Lit(Lit),
    /// Application of a signature symbol; the sort is the result sort.
    App(Func, SortId, Vec<Term>),
    /// Application of a function variable.
    FApp(FunVar, Vec<Term>),
}

impl Term {
    pub fn top() -> Term {
        Term::Lit(Lit::Bool(true))
    }

    pub fn bot() -> Term {
        Term::Lit(Lit::Bool(false))
    }

    pub fn num(sort: SortId, text: &str) -> Term {
        Term::Lit(Lit::Num(sort, text.into()))
    }

    /// Result sort as recorded at construction. See [`super::sort_of`] for the checked version.
    pub fn sort(&self) -> SortId {
        match self {
            Term::Var(v) => v.sort,
            Term::Lit(l) => l.sort(),
            Term::App(_, s, _) => *s,
            Term::FApp(f, _) => f.result,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::App(_, _, a) | Term::FApp(_, a) => a,
            _ => &[],
        }
    }

    /// Pre-order visit of every subterm, including `self`.
    pub fn visit(&self, f: &mut impl FnMut(&Term)) {
        f(self);
        for a in self.args() {
            a.visit(f);
        }
    }

    /// Rebuild bottom-up: children first, then `f` on the rebuilt node.
    pub fn map_bottom_up(&self, f: &mut impl FnMut(Term) -> Term) -> Term {
        let node = match self {
            Term::App(g, s, args) => Term::App(g.clone(), *s, args.iter().map(|a| a.map_bottom_up(f)).collect()),
            Term::FApp(g, args) => Term::FApp(g.clone(), args.iter().map(|a| a.map_bottom_up(f)).collect()),
            other => other.clone(),
        };
        f(node)
    }

    pub fn substitute(&self, map: &HashMap<VarId, Term>) -> Term {
        if map.is_empty() {
            return self.clone();
        }
        self.map_bottom_up(&mut |t| match &t {
            Term::Var(v) => map.get(&v.id).cloned().unwrap_or(t),
            _ => t,
        })
    }

    pub fn has_fapp(&self) -> bool {
        let mut found = false;
        self.visit(&mut |t| found |= matches!(t, Term::FApp(..)));
        found
    }

    pub fn mentions(&self, pred: &impl Fn(VarId) -> bool) -> bool {
        let mut found = false;
        self.visit(&mut |t| {
            if let Term::Var(v) = t {
                found |= pred(v.id);
            }
        });
        found
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        self.visit(&mut |t| {
            if let Term::Var(v) = t {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        });
    }
}

impl From<&Var> for Term {
    fn from(v: &Var) -> Term {
        Term::Var(v.clone())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(&v.name),
            Term::Lit(Lit::Bool(b)) => write!(f, "{b}"),
            Term::Lit(Lit::Num(_, n)) => f.write_str(n),
            Term::Lit(Lit::Elem(_, e)) => write!(f, "@{e}"),
            Term::App(g, _, args) if args.is_empty() => f.write_str(g.name()),
            Term::App(g, _, args) => {
                write!(f, "({}", g.name())?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            Term::FApp(g, args) => {
                write!(f, "({}", g.name)?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_by_id() {
        let a = Var::new("x", SortId(1));
        let b = Var::new("x", SortId(1));
        assert_ne!(a, b);
        assert_eq!(a, a.clone());
    }

    #[test]
    fn substitute_replaces_nested_vars() {
        let int = SortId(2);
        let x = Var::new("x", int);
        let y = Var::new("y", int);
        let t = Term::App(Func::Add, int, vec![x.term(), Term::num(int, "1")]);
        let map = HashMap::from([(x.id, y.term())]);
        assert_eq!(t.substitute(&map).to_string(), "(+ y 1)");
    }

    #[test]
    fn fapp_detection() {
        let fg = SortId(1);
        let g = FunVar::new("G", vec![fg], fg);
        let a = Var::new("a", fg);
        assert!(g.apply(vec![a.term()]).has_fapp());
        assert!(!a.term().has_fapp());
    }
}
