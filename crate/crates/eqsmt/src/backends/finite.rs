use crate::logic::{Formula, Lit, Signature, SortId, Term, Value};

use super::{Backend, QueryVerdict, SortModel, TheoryQuery};

/// Internal decider for the foreground sort, symbol-free empty-theory
/// sorts and the booleans.
#[derive(Clone, Copy, Debug, Default)]
pub struct Finite;

impl Backend for Finite {
    fn name(&self) -> String {
        "internal".into()
    }

    fn solve(&self, q: &TheoryQuery, _sig: &Signature) -> QueryVerdict {
        if q.sort == SortId::BOOL {
            solve_bool(q)
        } else {
            solve_foreground(q)
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Operand {
    E(usize),
    U(usize),
    C(u32),
}

#[derive(Clone, Copy, Debug)]
struct CLit {
    a: Operand,
    b: Operand,
    positive: bool,
}

struct CClause {
    lits: Vec<CLit>,
    universals: Vec<usize>,
    /// Highest existential index used, if any.
    last_exist: Option<usize>,
}

fn operand(t: &Term, q: &TheoryQuery, boolean: bool) -> Result<Operand, String> {
    match t {
        Term::Var(v) => {
            if let Some(i) = q.exists.iter().position(|x| x == v) {
                Ok(Operand::E(i))
            } else if let Some(j) = q.forall.iter().position(|x| x == v) {
                Ok(Operand::U(j))
            } else {
                Err(format!("unbound variable `{}`", v.name))
            }
        }
        Term::Lit(Lit::Bool(b)) if boolean => Ok(Operand::C(*b as u32)),
        other => Err(format!("unsupported term `{other}` in a finite query")),
    }
}

fn compile_lit(l: &Formula, q: &TheoryQuery, boolean: bool) -> Result<CLit, String> {
    let (atom, positive) = match l {
        Formula::Not(a) => (&**a, false),
        a => (a, true),
    };
    let (a, b) = match atom {
        Formula::True => (Operand::C(0), Operand::C(0)),
        Formula::False => (Operand::C(0), Operand::C(1)),
        Formula::Eq(x, y) => (operand(x, q, boolean)?, operand(y, q, boolean)?),
        other => return Err(format!("unsupported atom {other:?} in a finite query")),
    };
    Ok(CLit { a, b, positive })
}

fn compile(q: &TheoryQuery, boolean: bool) -> Result<Vec<CClause>, String> {
    q.clauses
        .iter()
        .map(|c| {
            let lits = c
                .iter()
                .map(|l| compile_lit(l, q, boolean))
                .collect::<Result<Vec<_>, _>>()?;
            let mut universals = vec![];
            let mut last_exist = None;
            for l in &lits {
                for op in [l.a, l.b] {
                    match op {
                        Operand::U(j) if !universals.contains(&j) => universals.push(j),
                        Operand::E(i) => last_exist = last_exist.max(Some(i)),
                        _ => {}
                    }
                }
            }
            Ok(CClause {
                lits,
                universals,
                last_exist,
            })
        })
        .collect()
}

/// Whether some values in `{0, 1}` for the universals make every literal of
/// `c` false. Each false literal fixes the parity of its two sides, so this
/// is a parity union-find; node `n` (one past the universals) is the value 0.
fn falsifiable_binary(c: &CClause, ex: &[u32], n: usize) -> bool {
    let mut parent: Vec<usize> = (0..=n).collect();
    let mut parity = vec![0u32; n + 1];
    fn find(parent: &mut [usize], parity: &mut [u32], x: usize) -> (usize, u32) {
        let mut root = x;
        let mut p = 0;
        while parent[root] != root {
            p ^= parity[root];
            root = parent[root];
        }
        let (mut y, mut q) = (x, p);
        while parent[y] != root {
            let next = parent[y];
            let qn = q ^ parity[y];
            parent[y] = root;
            parity[y] = q;
            y = next;
            q = qn;
        }
        (root, p)
    }
    let node = |op: Operand| match op {
        Operand::E(i) => (n, ex[i]),
        Operand::U(j) => (j, 0),
        Operand::C(k) => (n, k),
    };
    for l in &c.lits {
        let ((a, pa), (b, pb)) = (node(l.a), node(l.b));
        let (ra, xa) = find(&mut parent, &mut parity, a);
        let (rb, xb) = find(&mut parent, &mut parity, b);
        // A false positive literal needs a != b, a false negative one a = b.
        let want = l.positive as u32;
        let have = xa ^ pa ^ xb ^ pb;
        if ra == rb {
            if have != want {
                return false;
            }
        } else {
            parent[ra] = rb;
            parity[ra] = have ^ want;
        }
    }
    true
}

/// Whether `c` holds for every value of its universals in `0..size`.
fn clause_holds(c: &CClause, ex: &[u32], size: u32, uvals: &mut [u32]) -> bool {
    if size == 2 && !c.universals.is_empty() {
        return !falsifiable_binary(c, ex, uvals.len());
    }
    let val = |op: Operand, uvals: &[u32]| match op {
        Operand::E(i) => ex[i],
        Operand::U(j) => uvals[j],
        Operand::C(k) => k,
    };
    let k = c.universals.len();
    for &j in &c.universals {
        uvals[j] = 0;
    }
    loop {
        if !c
            .lits
            .iter()
            .any(|l| (val(l.a, uvals) == val(l.b, uvals)) == l.positive)
        {
            return false;
        }
        let mut d = 0;
        loop {
            if d == k {
                return true;
            }
            let j = c.universals[d];
            uvals[j] += 1;
            if uvals[j] < size {
                break;
            }
            uvals[j] = 0;
            d += 1;
        }
    }
}

struct Search<'a> {
    clauses: &'a [CClause],
    /// Clauses checked as soon as existential `i` is assigned.
    ready: Vec<Vec<usize>>,
    boolean: bool,
    cap: u32,
    ex: Vec<u32>,
    uvals: Vec<u32>,
}

impl Search<'_> {
    fn size(&self, used: u32) -> u32 {
        if self.boolean {
            2
        } else {
            used.max(1)
        }
    }

    /// Restricted-growth enumeration: existential `i` takes an element
    /// already used or the next fresh one, so each equality pattern is
    /// visited once and the universe is exactly the image of the existentials.
    fn dfs(&mut self, i: usize, used: u32) -> bool {
        if i == self.ex.len() {
            let size = self.size(used);
            let clauses = self.clauses;
            return clauses.iter().all(|c| clause_holds(c, &self.ex, size, &mut self.uvals));
        }
        let limit = if self.boolean { 2 } else { (used + 1).min(self.cap) };
        for v in 0..limit {
            self.ex[i] = v;
            let used2 = if self.boolean { used } else { used.max(v + 1) };
            let size = self.size(used2);
            let clauses = self.clauses;
            let early_ok = self.ready[i]
                .iter()
                .all(|&c| clause_holds(&clauses[c], &self.ex, size, &mut self.uvals));
            if early_ok && self.dfs(i + 1, used2) {
                return true;
            }
        }
        false
    }
}

fn decide(q: &TheoryQuery, boolean: bool) -> QueryVerdict {
    let clauses = match compile(q, boolean) {
        Ok(c) => c,
        Err(e) => return QueryVerdict::Unknown(e),
    };
    let mut ready = vec![vec![]; q.exists.len()];
    for (k, c) in clauses.iter().enumerate() {
        if let Some(i) = c.last_exist {
            ready[i].push(k);
        }
    }
    let mut s = Search {
        clauses: &clauses,
        ready,
        boolean,
        cap: q.exists.len().max(1) as u32,
        ex: vec![0; q.exists.len()],
        uvals: vec![0; q.forall.len()],
    };
    if !s.dfs(0, 0) {
        return QueryVerdict::Unsat;
    }
    let values = q
        .exists
        .iter()
        .zip(&s.ex)
        .map(|(v, &e)| (v.clone(), if boolean { Value::Bool(e == 1) } else { Value::Elem(e) }))
        .collect();
    QueryVerdict::Sat(SortModel { values })
}

/// One row of a [`clause_table`]: the clauses a model satisfies.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub clauses: Vec<u64>,
    pub model: SortModel,
}

/// Clause sets satisfied by the candidate models of a finite query: one
/// bitset per model (same enumeration as the decider), bit `k` set when
/// clause `k` holds for every value of its universals. Rows contained in
/// another row are dropped. A subset of the clauses is satisfiable exactly
/// when some row contains it. `None` when the query is outside the finite
/// fragment or has more than `limit` models.
pub fn clause_table(q: &TheoryQuery, limit: usize) -> Option<Vec<TableRow>> {
    struct Enum<'a> {
        clauses: &'a [CClause],
        boolean: bool,
        words: usize,
        limit: usize,
        ex: Vec<u32>,
        uvals: Vec<u32>,
        rows: Vec<(Vec<u64>, Vec<u32>)>,
    }
    impl Enum<'_> {
        fn go(&mut self, i: usize, used: u32) -> bool {
            if i == self.ex.len() {
                if self.rows.len() == self.limit {
                    return false;
                }
                let size = if self.boolean { 2 } else { used.max(1) };
                let mut row = vec![0u64; self.words];
                for (k, c) in self.clauses.iter().enumerate() {
                    if clause_holds(c, &self.ex, size, &mut self.uvals) {
                        row[k / 64] |= 1 << (k % 64);
                    }
                }
                self.rows.push((row, self.ex.clone()));
                return true;
            }
            let limit = if self.boolean { 2 } else { used + 1 };
            for v in 0..limit {
                self.ex[i] = v;
                let used2 = if self.boolean { used } else { used.max(v + 1) };
                if !self.go(i + 1, used2) {
                    return false;
                }
            }
            true
        }
    }
    let boolean = q.sort == SortId::BOOL;
    let clauses = compile(q, boolean).ok()?;
    let mut e = Enum {
        clauses: &clauses,
        boolean,
        words: clauses.len().div_ceil(64).max(1),
        limit,
        ex: vec![0; q.exists.len()],
        uvals: vec![0; q.forall.len()],
        rows: vec![],
    };
    if !e.go(0, 0) {
        return None;
    }
    let mut rows = e.rows;
    rows.sort_by_key(|(r, _)| std::cmp::Reverse(r.iter().map(|w| w.count_ones()).sum::<u32>()));
    let mut kept: Vec<(Vec<u64>, Vec<u32>)> = vec![];
    for (r, ex) in rows {
        if !kept.iter().any(|(k, _)| r.iter().zip(k).all(|(a, b)| a & !b == 0)) {
            kept.push((r, ex));
        }
    }
    Some(
        kept.into_iter()
            .map(|(clauses, ex)| TableRow {
                clauses,
                model: SortModel {
                    values: q
                        .exists
                        .iter()
                        .zip(ex)
                        .map(|(v, e)| (v.clone(), if boolean { Value::Bool(e == 1) } else { Value::Elem(e) }))
                        .collect(),
                },
            })
            .collect(),
    )
}

/// Decides a query over the foreground (or a symbol-free empty-theory sort).
///
/// Atoms must be equalities between variables. Universes of size
/// `1..=max(1, |exists|)` are searched, which is complete by the small-model
/// property; the model's universe is the image of the existentials.
pub fn solve_foreground(q: &TheoryQuery) -> QueryVerdict {
    decide(q, false)
}

/// Decides a query over the booleans by exhaustive search over `{true, false}`.
pub fn solve_bool(q: &TheoryQuery) -> QueryVerdict {
    decide(q, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Var;
    use proptest::prelude::*;

    const FG: SortId = SortId(1);

    fn eq(a: &Var, b: &Var) -> Formula {
        Formula::eq(a.term(), b.term())
    }

    fn neq(a: &Var, b: &Var) -> Formula {
        Formula::not(eq(a, b))
    }

    fn q(sort: SortId, exists: &[&Var], forall: &[&Var], clauses: Vec<Vec<Formula>>) -> TheoryQuery {
        TheoryQuery {
            sort,
            exists: exists.iter().map(|v| (*v).clone()).collect(),
            forall: forall.iter().map(|v| (*v).clone()).collect(),
            clauses,
        }
    }

    fn universe(v: &QueryVerdict) -> usize {
        let QueryVerdict::Sat(m) = v else { panic!("{v:?}") };
        let mut seen: Vec<&Value> = m.values.iter().map(|(_, x)| x).collect();
        seen.sort();
        seen.dedup();
        seen.len().max(1)
    }

    #[test]
    fn two_distinct_covering_elements() {
        let (a, b, y) = (Var::new("a", FG), Var::new("b", FG), Var::new("y", FG));
        let r = solve_foreground(&q(
            FG,
            &[&a, &b],
            &[&y],
            vec![vec![eq(&y, &a), eq(&y, &b)], vec![neq(&a, &b)]],
        ));
        assert_eq!(universe(&r), 2);
    }

    #[test]
    fn nonempty_universe_forces_instantiation() {
        let (a, y) = (Var::new("a", FG), Var::new("y", FG));
        assert_eq!(
            solve_foreground(&q(FG, &[&a], &[&y], vec![vec![neq(&y, &a)]])),
            QueryVerdict::Unsat
        );
    }

    #[test]
    fn reflexive_is_sat_with_one_element() {
        let a = Var::new("a", FG);
        let r = solve_foreground(&q(FG, &[&a], &[], vec![vec![eq(&a, &a)]]));
        assert_eq!(universe(&r), 1);
    }

    #[test]
    fn bool_cases() {
        let (x, y) = (Var::new("x", SortId::BOOL), Var::new("y", SortId::BOOL));
        let top = Formula::eq(x.term(), Term::top());
        let r = solve_bool(&q(SortId::BOOL, &[&x], &[], vec![vec![top]]));
        assert_eq!(
            r,
            QueryVerdict::Sat(SortModel {
                values: vec![(x.clone(), Value::Bool(true))]
            })
        );
        assert_eq!(
            solve_bool(&q(SortId::BOOL, &[&x], &[&y], vec![vec![eq(&x, &y)]])),
            QueryVerdict::Unsat
        );
        let axiom = vec![Formula::eq(y.term(), Term::top()), Formula::eq(y.term(), Term::bot())];
        assert!(matches!(
            solve_bool(&q(SortId::BOOL, &[], &[&y], vec![axiom])),
            QueryVerdict::Sat(_)
        ));
    }

    #[test]
    fn empty_clause_is_unsat() {
        let a = Var::new("a", FG);
        assert_eq!(solve_foreground(&q(FG, &[&a], &[], vec![vec![]])), QueryVerdict::Unsat);
    }

    #[test]
    fn refuses_non_equality_atoms() {
        let a = Var::new("a", FG);
        let bad = Formula::eq(Term::Lit(Lit::Elem(FG, 0)), a.term());
        assert!(matches!(
            solve_foreground(&q(FG, &[&a], &[], vec![vec![bad]])),
            QueryVerdict::Unknown(_)
        ));
    }

    /// Brute force over full assignments for every universe size, evaluating
    /// the whole matrix; written independently of the decider above.
    fn naive(q: &TheoryQuery, boolean: bool) -> Option<usize> {
        fn eval(f: &Formula, q: &TheoryQuery, ex: &[u32], un: &[u32]) -> bool {
            let val = |t: &Term| match t {
                Term::Var(v) => match q.exists.iter().position(|x| x == v) {
                    Some(i) => ex[i],
                    None => un[q.forall.iter().position(|x| x == v).unwrap()],
                },
                Term::Lit(Lit::Bool(b)) => *b as u32,
                Term::Lit(Lit::Elem(_, e)) => *e,
                _ => unreachable!(),
            };
            match f {
                Formula::True => true,
                Formula::False => false,
                Formula::Eq(a, b) => val(a) == val(b),
                Formula::Not(a) => !eval(a, q, ex, un),
                Formula::And(fs) => fs.iter().all(|g| eval(g, q, ex, un)),
                Formula::Or(fs) => fs.iter().any(|g| eval(g, q, ex, un)),
                _ => unreachable!(),
            }
        }
        fn tuples(len: usize, size: u32) -> Vec<Vec<u32>> {
            (0..len).fold(vec![vec![]], |acc, _| {
                acc.into_iter()
                    .flat_map(|t| {
                        (0..size).map(move |v| {
                            let mut t = t.clone();
                            t.push(v);
                            t
                        })
                    })
                    .collect()
            })
        }
        let m = q.matrix();
        let sizes: Vec<u32> = if boolean {
            vec![2]
        } else {
            (1..=q.exists.len().max(1) as u32).collect()
        };
        for size in sizes {
            for ex in tuples(q.exists.len(), size) {
                if tuples(q.forall.len(), size).iter().all(|un| eval(&m, q, &ex, un)) {
                    return Some(size as usize);
                }
            }
        }
        None
    }

    fn arb_query(boolean: bool) -> impl Strategy<Value = TheoryQuery> {
        let sort = if boolean { SortId::BOOL } else { FG };
        (0usize..=3, 0usize..=4).prop_flat_map(move |(ne, nu)| {
            let nv = ne + nu;
            let operand = if boolean { 0..nv + 2 } else { 0..nv.max(1) };
            let lit = (operand.clone(), operand, any::<bool>());
            prop::collection::vec(prop::collection::vec(lit, 0..=3), 0..=4).prop_map(move |cs| {
                let vars: Vec<Var> = (0..nv).map(|i| Var::new(&format!("v{i}"), sort)).collect();
                let term = |k: usize| {
                    if k < nv {
                        vars[k].term()
                    } else {
                        Term::Lit(Lit::Bool(k == nv))
                    }
                };
                let clauses = cs
                    .into_iter()
                    .map(|c| {
                        c.into_iter()
                            .filter(|_| nv > 0 || boolean)
                            .map(|(a, b, pos)| {
                                let f = Formula::eq(term(a), term(b));
                                if pos {
                                    f
                                } else {
                                    Formula::not(f)
                                }
                            })
                            .collect()
                    })
                    .collect();
                TheoryQuery {
                    sort,
                    exists: vars[..ne].to_vec(),
                    forall: vars[ne..].to_vec(),
                    clauses,
                }
            })
        })
    }

    proptest! {
        #[test]
        fn foreground_agrees_with_naive(q in arb_query(false)) {
            let r = solve_foreground(&q);
            let expected = naive(&q, false);
            prop_assert_eq!(matches!(r, QueryVerdict::Sat(_)), expected.is_some());
            if let Some(min) = expected {
                prop_assert!(universe(&r) <= q.exists.len().max(1));
                prop_assert!(min <= universe(&r));
            }
        }

        #[test]
        fn bool_agrees_with_naive(q in arb_query(true)) {
            let r = solve_bool(&q);
            prop_assert_eq!(matches!(r, QueryVerdict::Sat(_)), naive(&q, true).is_some());
        }

        #[test]
        fn table_agrees_with_decider(q in prop_oneof![arb_query(false), arb_query(true)]) {
            let table = clause_table(&q, 1 << 12).unwrap();
            for mask in 0u64..1 << q.clauses.len() {
                let sub = TheoryQuery {
                    clauses: (0..q.clauses.len()).filter(|k| mask >> k & 1 == 1).map(|k| q.clauses[k].clone()).collect(),
                    ..q.clone()
                };
                let decided = matches!(decide(&sub, q.sort == SortId::BOOL), QueryVerdict::Sat(_));
                let row = table.iter().find(|r| mask & !r.clauses[0] == 0);
                prop_assert_eq!(row.is_some(), decided);
                if let Some(r) = row {
                    let fixed: Vec<Vec<Formula>> = sub.clauses.iter().map(|c| c.iter().map(|l| {
                        l.substitute(&r.model.values.iter().map(|(v, x)| (v.id, x.to_term(v.sort))).collect())
                    }).collect()).collect();
                    let check = TheoryQuery { exists: vec![], clauses: fixed, ..q.clone() };
                    prop_assert_eq!(naive(&check, q.sort == SortId::BOOL).is_some(), true);
                }
            }
        }
    }
}
