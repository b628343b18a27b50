use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::logic::{Binder, Formula, FunVar, RelVar, Sentence, Signature, SortId, Term, Var, VarId};

/// Default cap on `n^m` fresh variables per eliminated function.
pub const DEFAULT_TUPLE_BUDGET: usize = 4096;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TransformError {
    #[error("eliminating `{fun}` needs {n}^{m} fresh variables, above the budget of {budget}")]
    TupleBudget {
        fun: String,
        n: usize,
        m: usize,
        budget: usize,
    },
}

/// One existential function eliminated by emulation on the foreground.
#[derive(Clone, Debug)]
pub struct FunElim {
    pub fun: FunVar,
    /// Argument tuples as indices into [`TransformTrace::x0`], lexicographic.
    pub tuples: Vec<Vec<usize>>,
    /// `vars[i]` stands for `fun(tuples[i])`.
    pub vars: Vec<Var>,
    pub emulator: FunVar,
}

/// One universal function application replaced by a fresh variable.
#[derive(Clone, Debug)]
pub struct AckApp {
    pub fun: FunVar,
    pub app: Term,
    pub var: Var,
}

/// Symbols introduced by each step, for witness pullback and statistics.
#[derive(Clone, Debug, Default)]
pub struct TransformTrace {
    /// Relation variable to its characteristic function.
    pub step1: Vec<(RelVar, FunVar)>,
    /// Existential foreground variables after Step 1, in declaration order.
    pub x0: Vec<Var>,
    /// Foreground variable added when no existential foreground variable exists.
    pub witness_var: Option<Var>,
    /// Number of conjuncts in the foreground restriction.
    pub restrict_terms: usize,
    pub step2: Vec<FunElim>,
    pub step3: Vec<AckApp>,
    /// Ackermann implications emitted per universal function, in binder order.
    pub ack_pairs: Vec<(FunVar, usize)>,
}

impl TransformTrace {
    /// Ids of the variables introduced by Ackermannization.
    pub fn ack_vars(&self) -> HashSet<VarId> {
        self.step3.iter().map(|a| a.var.id).collect()
    }

    pub fn char_fun(&self, r: &RelVar) -> Option<&FunVar> {
        self.step1.iter().find(|(q, _)| q == r).map(|(_, f)| f)
    }

    pub fn elim(&self, f: &FunVar) -> Option<&FunElim> {
        self.step2.iter().find(|e| &e.fun == f)
    }
}

fn rename_funs(t: &Term, map: &HashMap<VarId, FunVar>) -> Term {
    t.map_bottom_up(&mut |t| match t {
        Term::FApp(f, args) => Term::FApp(map.get(&f.id).cloned().unwrap_or(f), args),
        other => other,
    })
}

/// Replaces every relation variable `R` by a function `f_R : w -> Bool` and
/// every atom `R(t)` by `f_R(t) = true`.
pub fn step1_eliminate_relvars(s: &Sentence, trace: &mut TransformTrace) -> Sentence {
    let mut map: HashMap<VarId, FunVar> = HashMap::new();
    let mut convert = |bs: &[Binder]| -> Vec<Binder> {
        bs.iter()
            .map(|b| match b {
                Binder::Rel(r) => {
                    let f = FunVar::new(&format!("f_{}", r.name), r.args.to_vec(), SortId::BOOL);
                    trace.step1.push((r.clone(), f.clone()));
                    map.insert(r.id, f.clone());
                    Binder::Fun(f)
                }
                other => other.clone(),
            })
            .collect()
    };
    let exists = convert(&s.exists);
    let forall = convert(&s.forall);
    if map.is_empty() {
        return s.clone();
    }
    let matrix = s.matrix.map_atoms(&mut |a| match a {
        Formula::RelVar(r, ts) => Formula::eq(Term::FApp(map[&r.id].clone(), ts.clone()), Term::top()),
        other => other.clone(),
    });
    Sentence::new(exists, forall, matrix)
}

/// Conjoins the restriction of every foreground term to the existential
/// foreground variables: `AND_{t in T0} OR_{x in x0} t = x`.
///
/// `T0` holds the bound foreground variables and every foreground subterm of
/// the matrix. When `x0` is empty but `T0` is not, a fresh existential
/// foreground variable is added (universes are non-empty, so one exists).
pub fn step2_restrict_foreground(s: &Sentence, sig: &Signature, trace: &mut TransformTrace) -> Sentence {
    let Some(fg) = sig.foreground() else {
        return s.clone();
    };
    let mut t0: Vec<Term> = vec![];
    let mut seen: HashSet<Term> = HashSet::new();
    let mut push = |t: Term, t0: &mut Vec<Term>| {
        if seen.insert(t.clone()) {
            t0.push(t);
        }
    };
    for v in s.exists_vars().chain(s.forall_vars()).filter(|v| v.sort == fg) {
        push(v.term(), &mut t0);
    }
    s.matrix.visit_terms(&mut |t| {
        t.visit(&mut |u| {
            if u.sort() == fg {
                push(u.clone(), &mut t0);
            }
        })
    });
    let mut out = s.clone();
    let mut x0: Vec<Var> = s.exists_vars().filter(|v| v.sort == fg).cloned().collect();
    if t0.is_empty() {
        trace.x0 = x0;
        return out;
    }
    if x0.is_empty() {
        let w = Var::new("w0", fg);
        out.exists.push(Binder::Var(w.clone()));
        trace.witness_var = Some(w.clone());
        x0.push(w);
    }
    let restrict = Formula::and_all(
        t0.iter()
            .map(|t| Formula::or_all(x0.iter().map(|x| Formula::eq(t.clone(), x.term())).collect()))
            .collect(),
    );
    trace.restrict_terms = t0.len();
    trace.x0 = x0;
    out.matrix = Formula::And(vec![restrict, s.matrix.clone()]);
    out
}

fn tuple_name(f: &FunVar, tuple: &[usize], x0: &[Var]) -> String {
    let mut n = format!("x_{}", f.name);
    for &i in tuple {
        n.push('_');
        n.push_str(&x0[i].name);
    }
    n
}

/// Conjunction of coordinate equalities, skipping syntactically equal pairs.
fn args_equal(a: &[Term], b: &[Term]) -> Formula {
    Formula::and_all(
        a.iter()
            .zip(b)
            .filter(|(x, y)| x != y)
            .map(|(x, y)| Formula::eq(x.clone(), y.clone()))
            .collect(),
    )
}

/// Replaces each existential `F : FG^m -> s` by `n^m` existentials `x_F_t`
/// and a universal emulator `G_F`, guarding the matrix with
/// `AND_t G_F(t) = x_F_t`.
///
/// The guard alone is vacuous when two representatives coincide in a model
/// but their images differ, so the consistency of the fresh variables
/// (`t = t' => x_F_t = x_F_t'`) is conjoined outside the guard.
pub fn step2_eliminate_existential_funs(
    s: &Sentence,
    budget: usize,
    trace: &mut TransformTrace,
) -> Result<Sentence, TransformError> {
    let funs: Vec<FunVar> = s.exists_funs().cloned().collect();
    if funs.is_empty() {
        return Ok(s.clone());
    }
    let x0 = trace.x0.clone();
    let n = x0.len();
    let mut rename: HashMap<VarId, FunVar> = HashMap::new();
    let mut fresh_exists: HashMap<VarId, Vec<Binder>> = HashMap::new();
    let mut emulators = vec![];
    let mut guards = vec![];
    for f in &funs {
        let m = f.args.len();
        let count = n.checked_pow(m as u32).unwrap_or(usize::MAX);
        if count > budget {
            return Err(TransformError::TupleBudget {
                fun: f.name.to_string(),
                n,
                m,
                budget,
            });
        }
        let mut tuples: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..m {
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    (0..n).map(move |i| {
                        let mut t = t.clone();
                        t.push(i);
                        t
                    })
                })
                .collect();
        }
        let vars: Vec<Var> = tuples
            .iter()
            .map(|t| Var::new(&tuple_name(f, t, &x0), f.result))
            .collect();
        let g = FunVar::new(&format!("G_{}", f.name), f.args.to_vec(), f.result);
        let arg_terms: Vec<Vec<Term>> = tuples
            .iter()
            .map(|t| t.iter().map(|&i| x0[i].term()).collect())
            .collect();
        let emulate = Formula::and_all(
            arg_terms
                .iter()
                .zip(&vars)
                .map(|(args, x)| Formula::eq(g.apply(args.clone()), x.term()))
                .collect(),
        );
        let mut fc = vec![];
        for i in 0..vars.len() {
            for j in i + 1..vars.len() {
                fc.push(Formula::implies(
                    args_equal(&arg_terms[i], &arg_terms[j]),
                    Formula::eq(vars[i].term(), vars[j].term()),
                ));
            }
        }
        guards.push((Formula::and_all(fc), emulate));
        fresh_exists.insert(f.id, vars.iter().cloned().map(Binder::Var).collect());
        rename.insert(f.id, g.clone());
        emulators.push(Binder::Fun(g.clone()));
        trace.step2.push(FunElim {
            fun: f.clone(),
            tuples,
            vars,
            emulator: g,
        });
    }
    let mut matrix = s.matrix.map_terms(&mut |t| rename_funs(t, &rename));
    for (fc, emulate) in guards {
        let guarded = Formula::implies(emulate, matrix);
        matrix = match fc {
            Formula::True => guarded,
            fc => Formula::And(vec![fc, guarded]),
        };
    }
    let exists = s
        .exists
        .iter()
        .flat_map(|b| fresh_exists.remove(&b.id()).unwrap_or_else(|| vec![b.clone()]))
        .collect();
    let mut forall = s.forall.clone();
    forall.extend(emulators);
    Ok(Sentence::new(exists, forall, matrix))
}

/// Replaces every universal function application by a fresh universal
/// variable, innermost first, and guards the matrix with the functional
/// consistency implications of each function.
pub fn step3_ackermannize(s: &Sentence, trace: &mut TransformTrace) -> Sentence {
    let funs: Vec<FunVar> = s.forall_funs().cloned().collect();
    if funs.is_empty() {
        return s.clone();
    }
    let mut apps: HashMap<Term, Var> = HashMap::new();
    let mut order: Vec<AckApp> = vec![];
    let mut counter: HashMap<VarId, usize> = HashMap::new();
    let matrix = s.matrix.map_terms(&mut |t| {
        t.map_bottom_up(&mut |u| match &u {
            Term::FApp(f, _) => {
                if let Some(v) = apps.get(&u) {
                    return v.term();
                }
                let k = counter.entry(f.id).or_insert(0);
                *k += 1;
                let v = Var::new(&format!("y_{}_{}", f.name, k), f.result);
                apps.insert(u.clone(), v.clone());
                order.push(AckApp {
                    fun: f.clone(),
                    app: u.clone(),
                    var: v.clone(),
                });
                v.term()
            }
            _ => u,
        })
    });
    let mut ack = vec![];
    for f in &funs {
        let mine: Vec<&AckApp> = order.iter().filter(|a| &a.fun == f).collect();
        let mut pairs = 0;
        for i in 0..mine.len() {
            for j in i + 1..mine.len() {
                ack.push(Formula::implies(
                    args_equal(mine[i].app.args(), mine[j].app.args()),
                    Formula::eq(mine[i].var.term(), mine[j].var.term()),
                ));
                pairs += 1;
            }
        }
        trace.ack_pairs.push((f.clone(), pairs));
    }
    let matrix = match Formula::and_all(ack) {
        Formula::True => matrix,
        ack => Formula::implies(ack, matrix),
    };
    let mut forall: Vec<Binder> = s
        .forall
        .iter()
        .filter(|b| !matches!(b, Binder::Fun(_)))
        .cloned()
        .collect();
    forall.extend(order.iter().map(|a| Binder::Var(a.var.clone())));
    trace.step3.extend(order);
    Sentence::new(s.exists.clone(), forall, matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn problem(body: &str) -> (Signature, Sentence) {
        let p = parse(&format!(
            "(declare-sort FG :foreground)(declare-sort Int :background lia){body}"
        ))
        .unwrap();
        let s = p.sentence();
        (p.sig, s)
    }

    #[test]
    fn step1_replaces_relation_atoms() {
        let (_, s) = problem("(assert-eqsmt (exists ((a FG) (b FG) (R (Rel FG FG))) (R a b)))");
        let mut tr = TransformTrace::default();
        let out = step1_eliminate_relvars(&s, &mut tr);
        assert_eq!(out.exists_rels().count(), 0);
        assert_eq!(out.exists_funs().count(), 1);
        let Formula::Eq(Term::FApp(f, args), Term::Lit(_)) = &out.matrix else {
            panic!("{:?}", out.matrix)
        };
        assert_eq!(&*f.name, "f_R");
        assert_eq!(f.result, SortId::BOOL);
        assert_eq!(args.len(), 2);
    }

    #[test]
    fn step1_identity_without_relations() {
        let (_, s) = problem("(assert-eqsmt (exists ((a FG)) (= a a)))");
        let mut tr = TransformTrace::default();
        assert_eq!(step1_eliminate_relvars(&s, &mut tr), s);
    }

    #[test]
    fn restrict_covers_vars_and_subterms() {
        let (sig, s) = problem("(assert-eqsmt (exists ((a FG)) (forall ((y FG) (G (-> FG FG))) (= (G y) a))))");
        let mut tr = TransformTrace::default();
        let out = step2_restrict_foreground(&s, &sig, &mut tr);
        let Formula::And(parts) = &out.matrix else { panic!() };
        let Formula::And(restrict) = &parts[0] else { panic!() };
        let shown: Vec<String> = restrict
            .iter()
            .map(|f| match f {
                Formula::Eq(t, x) => format!("{t}={x}"),
                _ => panic!(),
            })
            .collect();
        assert_eq!(shown, vec!["a=a", "y=a", "(G y)=a"]);
    }

    #[test]
    fn restrict_without_foreground_terms_is_identity() {
        let (sig, s) = problem("(assert-eqsmt (exists ((x Int)) (< x 0)))");
        let mut tr = TransformTrace::default();
        assert_eq!(step2_restrict_foreground(&s, &sig, &mut tr), s);
    }

    #[test]
    fn restrict_adds_witness_when_no_existential_foreground() {
        let (sig, s) = problem("(assert-eqsmt (forall ((y FG)) (= y y)))");
        let mut tr = TransformTrace::default();
        let out = step2_restrict_foreground(&s, &sig, &mut tr);
        assert!(tr.witness_var.is_some());
        assert_eq!(out.exists_vars().count(), 1);
    }

    #[test]
    fn step2_counts_n_to_the_m() {
        let (sig, s) =
            problem("(assert-eqsmt (exists ((a FG) (b FG) (F (-> FG Bool)) (H (-> FG FG Int))) (= (F a) (F b))))");
        let mut tr = TransformTrace::default();
        let r = step2_restrict_foreground(&s, &sig, &mut tr);
        let out = step2_eliminate_existential_funs(&r, DEFAULT_TUPLE_BUDGET, &mut tr).unwrap();
        assert_eq!(tr.step2[0].vars.len(), 2);
        assert_eq!(tr.step2[1].vars.len(), 4);
        assert_eq!(out.exists_vars().count(), 2 + 2 + 4);
        assert_eq!(out.forall_funs().count(), 2);
        let names: Vec<&str> = tr.step2[1].vars.iter().map(|v| &*v.name).collect();
        assert_eq!(names, vec!["x_H_a_a", "x_H_a_b", "x_H_b_a", "x_H_b_b"]);
    }

    #[test]
    fn step2_budget() {
        let (sig, s) = problem("(assert-eqsmt (exists ((a FG) (b FG) (H (-> FG FG Int))) true))");
        let mut tr = TransformTrace::default();
        let r = step2_restrict_foreground(&s, &sig, &mut tr);
        let err = step2_eliminate_existential_funs(&r, 3, &mut tr).unwrap_err();
        assert_eq!(
            err,
            TransformError::TupleBudget {
                fun: "H".into(),
                n: 2,
                m: 2,
                budget: 3
            }
        );
    }

    #[test]
    fn step3_single_pair() {
        let (_, s) = problem("(assert-eqsmt (exists ((a FG) (b FG)) (forall ((G (-> FG Int))) (= (G a) (G b)))))");
        let mut tr = TransformTrace::default();
        let out = step3_ackermannize(&s, &mut tr);
        assert!(out.is_first_order());
        assert_eq!(tr.step3.len(), 2);
        assert_eq!(tr.ack_pairs[0].1, 1);
        let Formula::Implies(ack, _) = &out.matrix else {
            panic!()
        };
        let Formula::Implies(ante, _) = &**ack else { panic!() };
        assert!(matches!(&**ante, Formula::Eq(..)));
    }

    #[test]
    fn step3_single_application_has_no_guard() {
        let (_, s) = problem("(assert-eqsmt (exists ((a FG)) (forall ((G (-> FG Int))) (= (G a) 0))))");
        let mut tr = TransformTrace::default();
        let out = step3_ackermannize(&s, &mut tr);
        assert!(matches!(out.matrix, Formula::Eq(..)));
        assert_eq!(tr.ack_pairs[0].1, 0);
    }

    #[test]
    fn step3_nested_innermost_first() {
        let (_, s) =
            problem("(assert-eqsmt (exists ((a FG)) (forall ((G (-> FG FG)) (H (-> FG Int))) (= (H (G a)) (H a)))))");
        let mut tr = TransformTrace::default();
        let out = step3_ackermannize(&s, &mut tr);
        assert!(out.is_first_order());
        let shown: Vec<String> = tr.step3.iter().map(|a| a.app.to_string()).collect();
        assert_eq!(shown, vec!["(G a)", "(H y_G_1)", "(H a)"]);
        assert_eq!(
            tr.ack_pairs,
            vec![(tr.step3[0].fun.clone(), 0), (tr.step3[1].fun.clone(), 1)]
        );
    }
}
