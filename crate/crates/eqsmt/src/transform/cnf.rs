use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::logic::{Formula, Lit, Sentence, Term, Var};

/// Default cap on the number of clauses.
pub const DEFAULT_CLAUSE_BUDGET: usize = 100_000;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum CnfError {
    #[error("CNF conversion exceeds the budget of {budget} clauses")]
    Budget { budget: usize },
    #[error("CNF conversion needs a first-order sentence")]
    NotFirstOrder,
}

/// Possibly negated reference into [`CnfSentence::atoms`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub atom: u32,
    pub positive: bool,
}

/// Sorted, duplicate-free disjunction of literals.
pub type Clause = Vec<Literal>;

/// First-order sentence with a CNF matrix over interned atoms.
#[derive(Clone, Debug)]
pub struct CnfSentence {
    pub exists: Vec<Var>,
    pub forall: Vec<Var>,
    /// `Eq` or `Rel` atoms only.
    pub atoms: Vec<Formula>,
    pub clauses: Vec<Clause>,
}

impl CnfSentence {
    pub fn literal_formula(&self, l: Literal) -> Formula {
        let a = self.atoms[l.atom as usize].clone();
        if l.positive {
            a
        } else {
            Formula::not(a)
        }
    }

    pub fn clause_formula(&self, c: &Clause) -> Formula {
        Formula::Or(c.iter().map(|&l| self.literal_formula(l)).collect())
    }

    pub fn to_sentence(&self) -> Sentence {
        Sentence::new(
            self.exists.iter().cloned().map(crate::logic::Binder::Var).collect(),
            self.forall.iter().cloned().map(crate::logic::Binder::Var).collect(),
            Formula::And(self.clauses.iter().map(|c| self.clause_formula(c)).collect()),
        )
    }
}

/// Truth value fixed by the atom alone: reflexive equality, or equality of
/// the two distinct boolean constants.
fn fixed_value(a: &Formula) -> Option<bool> {
    match a {
        Formula::True => Some(true),
        Formula::False => Some(false),
        Formula::Eq(x, y) if x == y => Some(true),
        Formula::Eq(Term::Lit(Lit::Bool(p)), Term::Lit(Lit::Bool(q))) => Some(p == q),
        _ => None,
    }
}

/// Orientation-independent key for atoms.
fn atom_key(a: &Formula) -> Formula {
    match a {
        Formula::Eq(x, y) if y < x => Formula::Eq(y.clone(), x.clone()),
        other => other.clone(),
    }
}

#[derive(Default)]
struct Interner {
    index: HashMap<Formula, u32>,
    atoms: Vec<Formula>,
}

impl Interner {
    fn intern(&mut self, a: &Formula) -> u32 {
        let key = atom_key(a);
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.atoms.len() as u32;
        self.atoms.push(a.clone());
        self.index.insert(key, i);
        i
    }
}

enum Nnf {
    Const(bool),
    Lit(Literal),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
}

fn junction(and: bool, parts: Vec<Nnf>) -> Nnf {
    let mut kept = vec![];
    for p in parts {
        match p {
            Nnf::Const(b) if b == and => {}
            Nnf::Const(b) => return Nnf::Const(b),
            other => kept.push(other),
        }
    }
    match kept.len() {
        0 => Nnf::Const(and),
        1 => kept.pop().unwrap(),
        _ if and => Nnf::And(kept),
        _ => Nnf::Or(kept),
    }
}

fn nnf(f: &Formula, pos: bool, atoms: &mut Interner) -> Nnf {
    match f {
        Formula::Not(a) => nnf(a, !pos, atoms),
        Formula::And(fs) => {
            let parts = fs.iter().map(|g| nnf(g, pos, atoms)).collect();
            junction(pos, parts)
        }
        Formula::Or(fs) => {
            let parts = fs.iter().map(|g| nnf(g, pos, atoms)).collect();
            junction(!pos, parts)
        }
        Formula::Implies(a, b) => {
            let parts = vec![nnf(a, !pos, atoms), nnf(b, pos, atoms)];
            junction(!pos, parts)
        }
        Formula::Iff(a, b) => {
            let (a1, b1) = (nnf(a, false, atoms), nnf(b, pos, atoms));
            let (a2, b2) = (nnf(a, true, atoms), nnf(b, !pos, atoms));
            junction(true, vec![junction(false, vec![a1, b1]), junction(false, vec![a2, b2])])
        }
        atom => match fixed_value(atom) {
            Some(v) => Nnf::Const(v == pos),
            None => Nnf::Lit(Literal {
                atom: atoms.intern(atom),
                positive: pos,
            }),
        },
    }
}

fn is_tautology(c: &Clause) -> bool {
    c.windows(2).any(|w| w[0].atom == w[1].atom)
}

fn subset(small: &Clause, big: &Clause) -> bool {
    let mut j = 0;
    for l in small {
        while j < big.len() && big[j] < *l {
            j += 1;
        }
        if j == big.len() || big[j] != *l {
            return false;
        }
        j += 1;
    }
    true
}

/// Subset tests one `reduce` call may spend on subsumption; past it only
/// duplicates are dropped, which keeps the result equivalent.
const SUBSUMPTION_WORK: usize = 20_000_000;

/// Drops tautologies, duplicates and subsumed clauses. Order of survivors is stable.
fn reduce(mut clauses: Vec<Clause>) -> Vec<Clause> {
    clauses.retain(|c| !is_tautology(c));
    if clauses.iter().any(|c| c.is_empty()) {
        return vec![vec![]];
    }
    let mut order: Vec<usize> = (0..clauses.len()).collect();
    order.sort_by_key(|&i| clauses[i].len());
    let mut by_first: HashMap<Literal, Vec<usize>> = HashMap::new();
    let mut keep = vec![false; clauses.len()];
    let mut seen: HashSet<&Clause> = HashSet::new();
    let mut work = 0usize;
    for &i in &order {
        let c = &clauses[i];
        if !seen.insert(c) {
            continue;
        }
        let subsumed = work < SUBSUMPTION_WORK
            && c.iter().any(|l| {
                by_first.get(l).is_some_and(|ds| {
                    work += ds.len();
                    ds.iter().any(|&d| subset(&clauses[d], c))
                })
            });
        if !subsumed {
            keep[i] = true;
            by_first.entry(c[0]).or_default().push(i);
        }
    }
    clauses
        .into_iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then_some(c))
        .collect()
}

fn merge(a: &Clause, b: &Clause) -> Clause {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn clauses_of(n: &Nnf, budget: usize) -> Result<Vec<Clause>, CnfError> {
    match n {
        Nnf::Const(true) => Ok(vec![]),
        Nnf::Const(false) => Ok(vec![vec![]]),
        Nnf::Lit(l) => Ok(vec![vec![*l]]),
        Nnf::And(parts) => {
            let mut all = vec![];
            // Reducing only when the size doubles keeps the total work linear.
            let mut limit = budget;
            for p in parts {
                all.extend(clauses_of(p, budget)?);
                if all.len() > limit {
                    all = reduce(all);
                    if all.len() > budget {
                        return Err(CnfError::Budget { budget });
                    }
                    limit = budget.max(2 * all.len());
                }
            }
            Ok(reduce(all))
        }
        Nnf::Or(parts) => {
            let mut sets = parts
                .iter()
                .map(|p| clauses_of(p, budget))
                .collect::<Result<Vec<_>, _>>()?;
            sets.sort_by_key(|s| s.len());
            let mut acc: Vec<Clause> = vec![vec![]];
            for s in sets {
                if acc.len().saturating_mul(s.len()) > budget.saturating_mul(4) {
                    return Err(CnfError::Budget { budget });
                }
                let mut next = Vec::with_capacity(acc.len() * s.len());
                for a in &acc {
                    for b in &s {
                        let c = merge(a, b);
                        if !is_tautology(&c) {
                            next.push(c);
                        }
                    }
                }
                acc = reduce(next);
                if acc.len() > budget {
                    return Err(CnfError::Budget { budget });
                }
            }
            Ok(acc)
        }
    }
}

/// Equivalent CNF of a first-order sentence's matrix, by distribution.
///
/// Atoms are kept verbatim (an equality is identified with its mirror
/// image); tautological clauses, duplicate literals and subsumed clauses are
/// removed. No fresh variables are introduced.
pub fn to_cnf(s: &Sentence, budget: usize) -> Result<CnfSentence, CnfError> {
    if !s.is_first_order() {
        return Err(CnfError::NotFirstOrder);
    }
    let mut atoms = Interner::default();
    let n = nnf(&s.matrix, true, &mut atoms);
    let clauses = clauses_of(&n, budget)?;
    Ok(CnfSentence {
        exists: s.exists_vars().cloned().collect(),
        forall: s.forall_vars().cloned().collect(),
        atoms: atoms.atoms,
        clauses,
    })
}

fn eval_prop(f: &Formula, val: &dyn Fn(&Formula) -> bool) -> bool {
    match f {
        Formula::Not(a) => !eval_prop(a, val),
        Formula::And(fs) => fs.iter().all(|g| eval_prop(g, val)),
        Formula::Or(fs) => fs.iter().any(|g| eval_prop(g, val)),
        Formula::Implies(a, b) => !eval_prop(a, val) || eval_prop(b, val),
        Formula::Iff(a, b) => eval_prop(a, val) == eval_prop(b, val),
        atom => fixed_value(atom).unwrap_or_else(|| val(atom)),
    }
}

/// Compares `matrix` and `cnf` on every assignment to the atoms of `matrix`,
/// treating atoms as propositional variables. Returns `None` when there are
/// more than `max_atoms` free atoms.
pub fn truth_table_equivalent(matrix: &Formula, cnf: &CnfSentence, max_atoms: usize) -> Option<bool> {
    let mut keys: Vec<Formula> = vec![];
    matrix.visit_atoms(&mut |a| {
        if fixed_value(a).is_none() {
            let k = atom_key(a);
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
    });
    if keys.len() > max_atoms {
        return None;
    }
    let index: HashMap<Formula, usize> = keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
    let cnf_index: Vec<usize> = cnf.atoms.iter().map(|a| index[&atom_key(a)]).collect();
    for bits in 0u64..(1u64 << keys.len()) {
        let val = |a: &Formula| bits >> index[&atom_key(a)] & 1 == 1;
        let lhs = eval_prop(matrix, &val);
        let rhs = cnf.clauses.iter().all(|c| {
            c.iter()
                .any(|l| (bits >> cnf_index[l.atom as usize] & 1 == 1) == l.positive)
        });
        if lhs != rhs {
            return Some(false);
        }
    }
    Some(true)
}
