//! Seeded generator of small sentences over the foreground and the booleans,
//! used by the property suites and the acceptance corpus.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::logic::{validate, Binder, Formula, FunVar, RelVar, Sentence, Signature, SortId, Term, Var};
use crate::oracle::search_space;
use crate::transform::{lower, to_cnf, TransformOptions};

#[derive(Clone, Debug)]
pub struct Params {
    pub max_exists_fg: usize,
    pub max_exists_bool: usize,
    pub max_forall: usize,
    pub max_second_order: usize,
    pub max_arity: usize,
    /// Cap on function-variable applications in the matrix.
    pub max_apps: usize,
    pub max_depth: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            max_exists_fg: 3,
            max_exists_bool: 1,
            max_forall: 2,
            max_second_order: 2,
            max_arity: 2,
            max_apps: 3,
            max_depth: 3,
        }
    }
}

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
    fg: SortId,
    vars: Vec<Var>,
    funs: Vec<FunVar>,
    rels: Vec<RelVar>,
    apps_left: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn has_terms(&self, sort: SortId) -> bool {
        sort == SortId::BOOL || self.vars.iter().any(|v| v.sort == sort)
    }

    fn term(&mut self, sort: SortId, depth: usize) -> Term {
        let apps: Vec<FunVar> = self
            .funs
            .iter()
            .filter(|f| f.result == sort && f.args.iter().all(|&a| self.has_terms(a)))
            .cloned()
            .collect();
        if depth > 0 && self.apps_left > 0 && !apps.is_empty() && self.rng.gen_bool(0.4) {
            self.apps_left -= 1;
            let f = apps.choose(self.rng).unwrap().clone();
            let args = f.args.iter().map(|&a| self.term(a, depth - 1)).collect();
            return f.apply(args);
        }
        let vars: Vec<&Var> = self.vars.iter().filter(|v| v.sort == sort).collect();
        if sort == SortId::BOOL && (vars.is_empty() || self.rng.gen_bool(0.3)) {
            return Term::Lit(crate::logic::Lit::Bool(self.rng.gen()));
        }
        vars.choose(self.rng).expect("sort has variables").term()
    }

    fn atom(&mut self) -> Formula {
        let rels: Vec<RelVar> = self
            .rels
            .iter()
            .filter(|r| r.args.iter().all(|&a| self.has_terms(a)))
            .cloned()
            .collect();
        if !rels.is_empty() && self.apps_left > 0 && self.rng.gen_bool(0.3) {
            self.apps_left -= 1;
            let r = rels.choose(self.rng).unwrap().clone();
            let args = r.args.iter().map(|&a| self.term(a, 1)).collect();
            return Formula::RelVar(r, args);
        }
        let sort = if self.has_terms(self.fg) && self.rng.gen_bool(0.6) {
            self.fg
        } else {
            SortId::BOOL
        };
        let a = self.term(sort, 2);
        let b = self.term(sort, 2);
        Formula::eq(a, b)
    }

    fn formula(&mut self, depth: usize) -> Formula {
        if depth == 0 || self.rng.gen_bool(0.3) {
            return self.atom();
        }
        match self.rng.gen_range(0..5) {
            0 => Formula::not(self.formula(depth - 1)),
            1 | 2 => {
                let n = self.rng.gen_range(2..=3);
                let parts = (0..n).map(|_| self.formula(depth - 1)).collect();
                if self.rng.gen() {
                    Formula::And(parts)
                } else {
                    Formula::Or(parts)
                }
            }
            3 => Formula::implies(self.formula(depth - 1), self.formula(depth - 1)),
            _ => Formula::iff(self.formula(depth - 1), self.formula(depth - 1)),
        }
    }
}

/// A random validated sentence over `{FG, Bool}`.
pub fn random_sentence(rng: &mut impl Rng, p: &Params) -> (Signature, Sentence) {
    let (sig, fg) = Signature::with_foreground();
    let mut exists: Vec<Binder> = vec![];
    let mut forall: Vec<Binder> = vec![];
    let n_fg = rng.gen_range(0..=p.max_exists_fg);
    for i in 0..n_fg {
        exists.push(Binder::Var(Var::new(&format!("a{i}"), fg)));
    }
    for i in 0..rng.gen_range(0..=p.max_exists_bool) {
        exists.push(Binder::Var(Var::new(&format!("p{i}"), SortId::BOOL)));
    }
    for i in 0..rng.gen_range(0..=p.max_forall) {
        let sort = if rng.gen_bool(0.6) { fg } else { SortId::BOOL };
        forall.push(Binder::Var(Var::new(&format!("y{i}"), sort)));
    }
    let any_fg = exists
        .iter()
        .chain(&forall)
        .any(|b| b.as_var().is_some_and(|v| v.sort == fg));
    for i in 0..rng.gen_range(0..=p.max_second_order) {
        let arity = rng.gen_range(1..=p.max_arity);
        let existential = any_fg && rng.gen_bool(0.5);
        let relation = rng.gen_bool(0.5);
        let pick = |rng: &mut dyn rand::RngCore| if any_fg && rng.gen_bool(0.7) { fg } else { SortId::BOOL };
        if existential {
            let args = vec![fg; arity];
            if relation {
                exists.push(Binder::Rel(RelVar::new(&format!("R{i}"), args)));
            } else {
                exists.push(Binder::Fun(FunVar::new(&format!("F{i}"), args, SortId::BOOL)));
            }
        } else {
            let args: Vec<SortId> = (0..arity).map(|_| pick(rng)).collect();
            if relation {
                forall.push(Binder::Rel(RelVar::new(&format!("P{i}"), args)));
            } else {
                let result = pick(rng);
                forall.push(Binder::Fun(FunVar::new(&format!("G{i}"), args, result)));
            }
        }
    }
    let vars = exists
        .iter()
        .chain(&forall)
        .filter_map(|b| b.as_var().cloned())
        .collect();
    let funs = exists
        .iter()
        .chain(&forall)
        .filter_map(|b| b.as_fun().cloned())
        .collect();
    let rels = exists
        .iter()
        .chain(&forall)
        .filter_map(|b| b.as_rel().cloned())
        .collect();
    let mut g = Gen {
        rng,
        fg,
        vars,
        funs,
        rels,
        apps_left: p.max_apps,
    };
    let matrix = g.formula(p.max_depth);
    let s = Sentence::new(exists, forall, matrix);
    debug_assert!(validate(&s, &sig).is_empty(), "{:?}", validate(&s, &sig));
    (sig, s)
}

/// Whether the instance stays within the budgets used by the test corpus:
/// the pipeline's CNF fits `clause_budget` and the oracle's search space
/// fits `oracle_limit` with the foreground bounded by 3.
pub fn fits(sig: &Signature, s: &Sentence, clause_budget: usize, oracle_limit: u128) -> bool {
    let Ok(l) = lower(s, sig, &TransformOptions::default()) else {
        return false;
    };
    if to_cnf(&l.ack, clause_budget).is_err() {
        return false;
    }
    let bounds = HashMap::from([(sig.foreground().expect("foreground"), 3)]);
    matches!(search_space(s, sig, &bounds), Ok(n) if n <= oracle_limit)
}

/// Deterministic corpus instance: draws from `seed` until [`fits`] holds.
/// Returns the instance and the number of rejected draws.
pub fn corpus_instance(seed: u64) -> (Signature, Sentence, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = Params::default();
    let mut rejected = 0;
    loop {
        let (sig, s) = random_sentence(&mut rng, &p);
        if fits(&sig, &s, 20_000, 2_000_000) {
            return (sig, s, rejected);
        }
        rejected += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_valid() {
        for seed in 0..50 {
            let (sig, s, _) = corpus_instance(seed);
            assert!(validate(&s, &sig).is_empty());
            let (_, again, _) = corpus_instance(seed);
            assert_eq!(
                crate::parser::print_sentence(&s, &sig),
                crate::parser::print_sentence(&again, &sig)
            );
            assert!(s.exists_vars().filter(|v| v.sort != SortId::BOOL).count() <= 3);
            assert!(s.forall_vars().count() <= 2);
            assert!(
                s.exists_funs().count() + s.exists_rels().count() + s.forall_funs().count() + s.forall_rels().count()
                    <= 2
            );
        }
    }
}
