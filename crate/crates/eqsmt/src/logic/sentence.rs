use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use super::formula::Formula;
use super::term::{FunVar, RelVar, Term, Var, VarId};

/// One quantified symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Binder {
    Var(Var),
    Fun(FunVar),
    Rel(RelVar),
}

impl Binder {
    pub fn id(&self) -> VarId {
        match self {
            Binder::Var(v) => v.id,
            Binder::Fun(f) => f.id,
            Binder::Rel(r) => r.id,
        }
    }

    pub fn name(&self) -> &Arc<str> {
        match self {
            Binder::Var(v) => &v.name,
            Binder::Fun(f) => &f.name,
            Binder::Rel(r) => &r.name,
        }
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Binder::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_fun(&self) -> Option<&FunVar> {
        match self {
            Binder::Fun(f) => Some(f),
            _ => None,
        }
    }

    pub fn as_rel(&self) -> Option<&RelVar> {
        match self {
            Binder::Rel(r) => Some(r),
            _ => None,
        }
    }
}

/// `∃ exists ∀ forall . matrix`, binders kept in declaration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub exists: Vec<Binder>,
    pub forall: Vec<Binder>,
    pub matrix: Formula,
}

impl Sentence {
    pub fn new(exists: Vec<Binder>, forall: Vec<Binder>, matrix: Formula) -> Self {
        Sentence { exists, forall, matrix }
    }

    pub fn exists_vars(&self) -> impl Iterator<Item = &Var> {
        self.exists.iter().filter_map(Binder::as_var)
    }

    pub fn exists_funs(&self) -> impl Iterator<Item = &FunVar> {
        self.exists.iter().filter_map(Binder::as_fun)
    }

    pub fn exists_rels(&self) -> impl Iterator<Item = &RelVar> {
        self.exists.iter().filter_map(Binder::as_rel)
    }

    pub fn forall_vars(&self) -> impl Iterator<Item = &Var> {
        self.forall.iter().filter_map(Binder::as_var)
    }

    pub fn forall_funs(&self) -> impl Iterator<Item = &FunVar> {
        self.forall.iter().filter_map(Binder::as_fun)
    }

    pub fn forall_rels(&self) -> impl Iterator<Item = &RelVar> {
        self.forall.iter().filter_map(Binder::as_rel)
    }

    pub fn binders(&self) -> impl Iterator<Item = &Binder> {
        self.exists.iter().chain(&self.forall)
    }

    /// No function or relation variables are bound.
    pub fn is_first_order(&self) -> bool {
        self.binders().all(|b| matches!(b, Binder::Var(_)))
    }

    /// Copy with every bound symbol replaced by a fresh one of the same name.
    pub fn freshen(&self) -> Sentence {
        let mut ren = Renaming::default();
        let mut fresh = |b: &Binder| ren.fresh(b);
        let exists = self.exists.iter().map(&mut fresh).collect();
        let forall = self.forall.iter().map(&mut fresh).collect();
        let matrix = ren.apply(&self.matrix);
        Sentence { exists, forall, matrix }
    }
}

/// Id-based renaming of bound symbols.
#[derive(Default)]
struct Renaming {
    vars: HashMap<VarId, Term>,
    funs: HashMap<VarId, FunVar>,
    rels: HashMap<VarId, RelVar>,
}

impl Renaming {
    fn fresh(&mut self, b: &Binder) -> Binder {
        match b {
            Binder::Var(v) => {
                let nv = Var::new(&v.name, v.sort);
                self.vars.insert(v.id, nv.term());
                Binder::Var(nv)
            }
            Binder::Fun(f) => {
                let nf = FunVar::new(&f.name, f.args.to_vec(), f.result);
                self.funs.insert(f.id, nf.clone());
                Binder::Fun(nf)
            }
            Binder::Rel(r) => {
                let nr = RelVar::new(&r.name, r.args.to_vec());
                self.rels.insert(r.id, nr.clone());
                Binder::Rel(nr)
            }
        }
    }

    fn term(&self, t: &Term) -> Term {
        t.map_bottom_up(&mut |t| match t {
            Term::Var(v) => self.vars.get(&v.id).cloned().unwrap_or(Term::Var(v)),
            Term::FApp(f, args) => {
                let f = self.funs.get(&f.id).cloned().unwrap_or(f);
                Term::FApp(f, args)
            }
            other => other,
        })
    }

    fn apply(&self, f: &Formula) -> Formula {
        f.map_atoms(&mut |a| match a {
            Formula::RelVar(r, ts) => Formula::RelVar(
                self.rels.get(&r.id).cloned().unwrap_or_else(|| r.clone()),
                ts.iter().map(|t| self.term(t)).collect(),
            ),
            other => other.map_terms(&mut |t| self.term(t)),
        })
    }
}

/// Positive conjunction of sentences: prefixes merged, matrices conjoined.
///
/// Sentences whose binders collide with an earlier one (same ids, e.g. the
/// same sentence twice) are renamed apart first.
pub fn conjoin(sentences: &[Sentence]) -> Sentence {
    if sentences.len() == 1 {
        return sentences[0].clone();
    }
    let mut seen: HashSet<VarId> = HashSet::new();
    let mut out = Sentence::new(vec![], vec![], Formula::True);
    let mut matrices = vec![];
    for s in sentences {
        let s = if s.binders().any(|b| seen.contains(&b.id())) {
            s.freshen()
        } else {
            s.clone()
        };
        seen.extend(s.binders().map(Binder::id));
        out.exists.extend(s.exists);
        out.forall.extend(s.forall);
        matrices.push(s.matrix);
    }
    out.matrix = Formula::and_all(matrices);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::SortId;

    fn tiny() -> Sentence {
        let fg = SortId(1);
        let a = Var::new("a", fg);
        let y = Var::new("y", fg);
        Sentence::new(
            vec![Binder::Var(a.clone())],
            vec![Binder::Var(y.clone())],
            Formula::eq(a.term(), y.term()),
        )
    }

    #[test]
    fn conjoin_singleton_is_identity() {
        let s = tiny();
        assert_eq!(conjoin(std::slice::from_ref(&s)), s);
    }

    #[test]
    fn conjoin_merges_prefixes() {
        let (s1, s2) = (tiny(), tiny());
        let c = conjoin(&[s1, s2]);
        assert_eq!(c.exists.len(), 2);
        assert_eq!(c.forall.len(), 2);
        assert!(matches!(c.matrix, Formula::And(ref v) if v.len() == 2));
    }

    #[test]
    fn conjoin_renames_shared_binders() {
        let s = tiny();
        let c = conjoin(&[s.clone(), s.clone()]);
        let ids: HashSet<VarId> = c.binders().map(Binder::id).collect();
        assert_eq!(ids.len(), 4);
        let Formula::And(ms) = &c.matrix else { panic!() };
        assert_ne!(ms[0], ms[1]);
    }

    #[test]
    fn freshen_keeps_names() {
        let s = tiny();
        let f = s.freshen();
        assert_eq!(f.exists[0].name(), s.exists[0].name());
        assert_ne!(f.exists[0].id(), s.exists[0].id());
    }
}
