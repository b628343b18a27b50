//! Brute-force finite-model enumeration for sentences over finitely
//! enumerable sorts.
//!
//! Every interpretation of the existential symbols (variables, function
//! tables, relation sets) over bounded universes is tried against every
//! interpretation of the universal symbols. The matrix evaluator is written
//! twice, once as a recursive interpreter and once as compiled atoms plus a
//! postfix boolean program, so the two can be checked against each other.

use std::collections::HashMap;

use thiserror::Error;

use crate::logic::{Binder, Formula, Lit, Sentence, Signature, SortId, SortKind, Term, Theory, VarId};

/// Default cap on the number of interpretations examined.
pub const SEARCH_LIMIT: u128 = 10_000_000;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("the oracle only handles foreground, boolean and empty-theory sorts: {0}")]
    Unsupported(String),
    #[error("no bound given for sort `{0}`")]
    MissingBound(String),
    #[error("search space of {space} interpretations exceeds the limit of {limit}")]
    TooLarge { space: u128, limit: u128 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    /// Universe sizes of the first model found; sizes are tried in
    /// increasing order, so these are minimal for the first sort.
    Sat {
        sizes: Vec<(SortId, usize)>,
    },
    Unsat,
}

impl OracleVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, OracleVerdict::Sat { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Evaluator {
    Recursive,
    Table,
}

/// One quantified symbol: `cells` table entries, each ranging over `0..range`.
#[derive(Clone, Debug)]
struct Slot {
    args: Vec<SortId>,
    cells: usize,
    range: u32,
}

struct Layout {
    slot_of: HashMap<VarId, usize>,
    slots: Vec<Slot>,
    n_exists: usize,
}

fn binder_shape(b: &Binder) -> (Vec<SortId>, SortId) {
    match b {
        Binder::Var(v) => (vec![], v.sort),
        Binder::Fun(f) => (f.args.to_vec(), f.result),
        Binder::Rel(r) => (r.args.to_vec(), SortId::BOOL),
    }
}

fn layout(s: &Sentence, size: &impl Fn(SortId) -> u32) -> Layout {
    let mut slot_of = HashMap::new();
    let mut slots = vec![];
    for b in s.exists.iter().chain(&s.forall) {
        let (args, result) = binder_shape(b);
        let cells = args.iter().map(|&a| size(a) as usize).product();
        slot_of.insert(b.id(), slots.len());
        slots.push(Slot {
            args,
            cells,
            range: size(result),
        });
    }
    Layout {
        slot_of,
        slots,
        n_exists: s.exists.len(),
    }
}

fn check_supported(s: &Sentence, sig: &Signature) -> Result<(), OracleError> {
    for sort in sig.sort_ids() {
        if let SortKind::Background(t) = &sig.sort(sort).kind {
            if *t != Theory::Empty && uses_sort(s, sort) {
                return Err(OracleError::Unsupported(format!(
                    "sort `{}` has theory `{}`",
                    sig.sort_name(sort),
                    t.id()
                )));
            }
        }
    }
    let mut bad = None;
    s.matrix.visit_atoms(&mut |a| {
        if let Formula::Rel(p, _, _) = a {
            bad.get_or_insert_with(|| format!("relation symbol `{}`", p.name()));
        }
    });
    s.matrix.visit_terms(&mut |t| {
        t.visit(&mut |u| match u {
            Term::App(f, _, _) => {
                bad.get_or_insert_with(|| format!("function symbol `{}`", f.name()));
            }
            Term::Lit(Lit::Num(_, n)) => {
                bad.get_or_insert_with(|| format!("numeral `{n}`"));
            }
            _ => {}
        })
    });
    match bad {
        Some(b) => Err(OracleError::Unsupported(b)),
        None => Ok(()),
    }
}

fn uses_sort(s: &Sentence, sort: SortId) -> bool {
    s.binders().any(|b| {
        let (args, result) = binder_shape(b);
        result == sort || args.contains(&sort)
    }) || {
        let mut used = false;
        s.matrix
            .visit_terms(&mut |t| t.visit(&mut |u| used |= u.sort() == sort));
        used
    }
}

fn space(l: &Layout) -> u128 {
    l.slots.iter().fold(1u128, |acc, sl| {
        acc.saturating_mul((sl.range as u128).saturating_pow(sl.cells.min(u32::MAX as usize) as u32))
    })
}

struct Env<'a> {
    layout: &'a Layout,
    size: &'a dyn Fn(SortId) -> u32,
    values: Vec<Vec<u32>>,
}

impl Env<'_> {
    fn cell(&self, slot: usize, args: &[u32]) -> u32 {
        let sl = &self.layout.slots[slot];
        let mut idx = 0usize;
        for (a, &s) in args.iter().zip(&sl.args) {
            idx = idx * (self.size)(s) as usize + *a as usize;
        }
        self.values[slot][idx]
    }

    fn term(&self, t: &Term) -> u32 {
        match t {
            Term::Var(v) => self.values[self.layout.slot_of[&v.id]][0],
            Term::Lit(Lit::Bool(b)) => *b as u32,
            Term::Lit(Lit::Elem(_, e)) => *e,
            Term::FApp(f, args) => {
                let vals: Vec<u32> = args.iter().map(|a| self.term(a)).collect();
                self.cell(self.layout.slot_of[&f.id], &vals)
            }
            _ => unreachable!("rejected by check_supported"),
        }
    }

    fn formula(&self, f: &Formula) -> bool {
        match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Eq(a, b) => self.term(a) == self.term(b),
            Formula::RelVar(r, args) => {
                let vals: Vec<u32> = args.iter().map(|a| self.term(a)).collect();
                self.cell(self.layout.slot_of[&r.id], &vals) == 1
            }
            Formula::Not(a) => !self.formula(a),
            Formula::And(fs) => fs.iter().all(|g| self.formula(g)),
            Formula::Or(fs) => fs.iter().any(|g| self.formula(g)),
            Formula::Implies(a, b) => !self.formula(a) || self.formula(b),
            Formula::Iff(a, b) => self.formula(a) == self.formula(b),
            Formula::Rel(..) => unreachable!("rejected by check_supported"),
        }
    }
}

/// Term compiled against a fixed layout.
enum CTerm {
    Cell(usize),
    Const(u32),
    App {
        slot: usize,
        radix: Vec<usize>,
        args: Vec<CTerm>,
    },
}

enum CAtom {
    Eq(CTerm, CTerm),
    Rel(CTerm),
}

enum Op {
    Push(bool),
    Atom(usize),
    Not,
    And(usize),
    Or(usize),
    Implies,
    Iff,
}

struct Program {
    atoms: Vec<CAtom>,
    ops: Vec<Op>,
}

fn compile_term(t: &Term, l: &Layout, size: &dyn Fn(SortId) -> u32) -> CTerm {
    match t {
        Term::Var(v) => CTerm::Cell(l.slot_of[&v.id]),
        Term::Lit(Lit::Bool(b)) => CTerm::Const(*b as u32),
        Term::Lit(Lit::Elem(_, e)) => CTerm::Const(*e),
        Term::FApp(f, args) => {
            let slot = l.slot_of[&f.id];
            let sl = &l.slots[slot];
            let mut radix = vec![1usize; sl.args.len()];
            for i in (0..sl.args.len().saturating_sub(1)).rev() {
                radix[i] = radix[i + 1] * size(sl.args[i + 1]) as usize;
            }
            CTerm::App {
                slot,
                radix,
                args: args.iter().map(|a| compile_term(a, l, size)).collect(),
            }
        }
        _ => unreachable!("rejected by check_supported"),
    }
}

fn compile(f: &Formula, l: &Layout, size: &dyn Fn(SortId) -> u32, p: &mut Program) {
    match f {
        Formula::True => p.ops.push(Op::Push(true)),
        Formula::False => p.ops.push(Op::Push(false)),
        Formula::Eq(a, b) => {
            p.atoms
                .push(CAtom::Eq(compile_term(a, l, size), compile_term(b, l, size)));
            p.ops.push(Op::Atom(p.atoms.len() - 1));
        }
        Formula::RelVar(r, args) => {
            let app = Term::FApp(
                crate::logic::FunVar {
                    id: r.id,
                    name: r.name.clone(),
                    args: r.args.clone(),
                    result: SortId::BOOL,
                },
                args.clone(),
            );
            p.atoms.push(CAtom::Rel(compile_term(&app, l, size)));
            p.ops.push(Op::Atom(p.atoms.len() - 1));
        }
        Formula::Not(a) => {
            compile(a, l, size, p);
            p.ops.push(Op::Not);
        }
        Formula::And(fs) | Formula::Or(fs) => {
            for g in fs {
                compile(g, l, size, p);
            }
            p.ops.push(if matches!(f, Formula::And(_)) {
                Op::And(fs.len())
            } else {
                Op::Or(fs.len())
            });
        }
        Formula::Implies(a, b) | Formula::Iff(a, b) => {
            compile(a, l, size, p);
            compile(b, l, size, p);
            p.ops.push(if matches!(f, Formula::Implies(..)) {
                Op::Implies
            } else {
                Op::Iff
            });
        }
        Formula::Rel(..) => unreachable!("rejected by check_supported"),
    }
}

impl Program {
    fn term(t: &CTerm, values: &[Vec<u32>]) -> u32 {
        match t {
            CTerm::Cell(s) => values[*s][0],
            CTerm::Const(c) => *c,
            CTerm::App { slot, radix, args } => {
                let idx: usize = args
                    .iter()
                    .zip(radix)
                    .map(|(a, r)| Program::term(a, values) as usize * r)
                    .sum();
                values[*slot][idx]
            }
        }
    }

    fn run(&self, values: &[Vec<u32>], atoms: &mut Vec<bool>, stack: &mut Vec<bool>) -> bool {
        atoms.clear();
        for a in &self.atoms {
            atoms.push(match a {
                CAtom::Eq(x, y) => Program::term(x, values) == Program::term(y, values),
                CAtom::Rel(x) => Program::term(x, values) == 1,
            });
        }
        stack.clear();
        for op in &self.ops {
            match op {
                Op::Push(b) => stack.push(*b),
                Op::Atom(i) => stack.push(atoms[*i]),
                Op::Not => {
                    let a = stack.pop().unwrap();
                    stack.push(!a);
                }
                Op::And(n) | Op::Or(n) => {
                    let at = stack.len() - n;
                    let v = if matches!(op, Op::And(_)) {
                        stack[at..].iter().all(|&b| b)
                    } else {
                        stack[at..].iter().any(|&b| b)
                    };
                    stack.truncate(at);
                    stack.push(v);
                }
                Op::Implies | Op::Iff => {
                    let b = stack.pop().unwrap();
                    let a = stack.pop().unwrap();
                    stack.push(if matches!(op, Op::Implies) { !a || b } else { a == b });
                }
            }
        }
        stack.pop().unwrap()
    }
}

/// Advances the digits of `slots` as one odometer; false after the last value.
fn advance(values: &mut [Vec<u32>], slots: &[Slot], range: std::ops::Range<usize>) -> bool {
    for s in range.rev() {
        for c in (0..slots[s].cells).rev() {
            values[s][c] += 1;
            if values[s][c] < slots[s].range {
                return true;
            }
            values[s][c] = 0;
        }
    }
    false
}

fn search(s: &Sentence, l: &Layout, size: &dyn Fn(SortId) -> u32, eval: Evaluator) -> bool {
    let mut values: Vec<Vec<u32>> = l.slots.iter().map(|sl| vec![0; sl.cells]).collect();
    if l.slots.iter().any(|sl| sl.range == 0 && sl.cells > 0) {
        return false;
    }
    let mut program = Program {
        atoms: vec![],
        ops: vec![],
    };
    if eval == Evaluator::Table {
        compile(&s.matrix, l, size, &mut program);
    }
    let (mut atoms, mut stack) = (vec![], vec![]);
    let n = l.slots.len();
    loop {
        for sl in &mut values[l.n_exists..] {
            sl.iter_mut().for_each(|v| *v = 0);
        }
        let all = loop {
            let ok = match eval {
                Evaluator::Recursive => Env {
                    layout: l,
                    size,
                    values: values.clone(),
                }
                .formula(&s.matrix),
                Evaluator::Table => program.run(&values, &mut atoms, &mut stack),
            };
            if !ok {
                break false;
            }
            if !advance(&mut values, &l.slots, l.n_exists..n) {
                break true;
            }
        };
        if all {
            return true;
        }
        if !advance(&mut values, &l.slots, 0..l.n_exists) {
            return false;
        }
    }
}

/// Decides `s` over all universes with sizes `1..=bound` for every finite
/// sort it uses (booleans have exactly two elements).
pub fn brute_force_sat(
    s: &Sentence,
    sig: &Signature,
    bounds: &HashMap<SortId, usize>,
) -> Result<OracleVerdict, OracleError> {
    brute_force_sat_with(s, sig, bounds, Evaluator::Table, SEARCH_LIMIT)
}

/// Finite sorts used by `s` (other than the booleans) with their bounds.
fn bounded_sorts(
    s: &Sentence,
    sig: &Signature,
    bounds: &HashMap<SortId, usize>,
) -> Result<Vec<(SortId, usize)>, OracleError> {
    check_supported(s, sig)?;
    sig.sort_ids()
        .filter(|&x| x != SortId::BOOL && uses_sort(s, x))
        .map(|x| match bounds.get(&x) {
            Some(&b) if b >= 1 => Ok((x, b)),
            _ => Err(OracleError::MissingBound(sig.sort_name(x).to_string())),
        })
        .collect()
}

/// Universe size assignments in search order.
fn combos(sorts: &[(SortId, usize)]) -> Vec<Vec<usize>> {
    let mut combos: Vec<Vec<usize>> = vec![vec![]];
    for &(_, m) in sorts {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                (1..=m).map(move |k| {
                    let mut c = c.clone();
                    c.push(k);
                    c
                })
            })
            .collect();
    }
    combos
}

fn size_fn(sorts: &[(SortId, usize)], combo: &[usize]) -> impl Fn(SortId) -> u32 {
    let map: HashMap<SortId, u32> = sorts.iter().zip(combo).map(|(&(x, _), &k)| (x, k as u32)).collect();
    move |x: SortId| {
        if x == SortId::BOOL {
            2
        } else {
            map.get(&x).copied().unwrap_or(1)
        }
    }
}

/// Number of interpretations the oracle would examine in the worst case.
pub fn search_space(s: &Sentence, sig: &Signature, bounds: &HashMap<SortId, usize>) -> Result<u128, OracleError> {
    let sorts = bounded_sorts(s, sig, bounds)?;
    Ok(combos(&sorts).iter().fold(0u128, |acc, c| {
        acc.saturating_add(space(&layout(s, &size_fn(&sorts, c))))
    }))
}

pub fn brute_force_sat_with(
    s: &Sentence,
    sig: &Signature,
    bounds: &HashMap<SortId, usize>,
    eval: Evaluator,
    limit: u128,
) -> Result<OracleVerdict, OracleError> {
    let total = search_space(s, sig, bounds)?;
    if total > limit {
        return Err(OracleError::TooLarge { space: total, limit });
    }
    let sorts = bounded_sorts(s, sig, bounds)?;
    for c in combos(&sorts) {
        let size = size_fn(&sorts, &c);
        let l = layout(s, &size);
        if search(s, &l, &size, eval) {
            return Ok(OracleVerdict::Sat {
                sizes: sorts.iter().map(|&(x, _)| x).zip(c.iter().copied()).collect(),
            });
        }
    }
    Ok(OracleVerdict::Unsat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn run(text: &str, bound: usize) -> OracleVerdict {
        let p = parse(text).unwrap();
        let fg = p.sig.foreground().unwrap();
        let bounds = HashMap::from([(fg, bound)]);
        let s = p.sentence();
        let a = brute_force_sat_with(&s, &p.sig, &bounds, Evaluator::Recursive, SEARCH_LIMIT).unwrap();
        let b = brute_force_sat_with(&s, &p.sig, &bounds, Evaluator::Table, SEARCH_LIMIT).unwrap();
        assert_eq!(a, b);
        a
    }

    #[test]
    fn characteristic_relation() {
        let v = run(
            "(declare-sort FG :foreground)(assert-eqsmt (exists ((R (Rel FG)) (a FG)) (forall ((y FG)) (iff (R y) (= y a)))))",
            2,
        );
        assert!(v.is_sat());
    }

    #[test]
    fn false_matrix() {
        let v = run("(declare-sort FG :foreground)(assert-eqsmt (exists ((a FG)) false))", 3);
        assert_eq!(v, OracleVerdict::Unsat);
    }

    #[test]
    fn constant_true_table() {
        let v = run(
            "(declare-sort FG :foreground)(assert-eqsmt (exists ((F (-> FG Bool))) (forall ((y FG)) (= (F y) true))))",
            1,
        );
        assert_eq!(
            v,
            OracleVerdict::Sat {
                sizes: vec![(SortId(1), 1)]
            }
        );
    }

    #[test]
    fn minimal_sizes_reported() {
        let v = run(
            "(declare-sort FG :foreground)(assert-eqsmt (exists ((a FG) (b FG)) (not (= a b))))",
            3,
        );
        assert_eq!(
            v,
            OracleVerdict::Sat {
                sizes: vec![(SortId(1), 2)]
            }
        );
    }

    #[test]
    fn universal_function() {
        // Some G maps a to something other than b once the universe has two elements.
        let v = run(
            "(declare-sort FG :foreground)(assert-eqsmt (exists ((a FG) (b FG)) (forall ((G (-> FG FG))) (= (G a) b))))",
            3,
        );
        assert_eq!(
            v,
            OracleVerdict::Sat {
                sizes: vec![(SortId(1), 1)]
            }
        );
    }

    #[test]
    fn guard_and_unsupported() {
        let p = parse(
            "(declare-sort FG :foreground)(assert-eqsmt (exists ((F (-> FG FG Bool)) (H (-> FG FG Bool))) true))",
        )
        .unwrap();
        let fg = p.sig.foreground().unwrap();
        let err =
            brute_force_sat_with(&p.sentence(), &p.sig, &HashMap::from([(fg, 4)]), Evaluator::Table, 1000).unwrap_err();
        assert!(matches!(err, OracleError::TooLarge { .. }));
        let p = parse(
            "(declare-sort FG :foreground)(declare-sort Int :background lia)(assert-eqsmt (exists ((x Int)) (< x 0)))",
        )
        .unwrap();
        assert!(matches!(
            brute_force_sat(&p.sentence(), &p.sig, &HashMap::new()),
            Err(OracleError::Unsupported(_))
        ));
    }
}
