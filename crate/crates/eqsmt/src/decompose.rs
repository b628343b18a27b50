//! Clause-to-sort contracts: CNF clauses are split by sort and each sort's
//! share is decided on its own.
//!
//! A contract `L` assigns every clause to one sort; the sentence is
//! satisfiable iff for some contract every per-sort query
//! `exists x_s. forall y_s. AND_{L(j) = s} clause_j restricted to s`
//! is satisfiable. Contracts are searched depth first in a fixed order with
//! monotone pruning: adding clauses to an unsatisfiable query keeps it
//! unsatisfiable, so partial contracts are checked as they grow.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::backends::{
    clause_table, is_internal, Backends, MissingBackend, QueryVerdict, SortModel, TableRow, TheoryQuery,
};
use crate::logic::{sort_of_atom_checked, Formula, Signature, SortId, SortKind, Theory, Value, Var, VarId};
use crate::par;
use crate::transform::{Clause, CnfSentence};

/// Sort of every clause, indexed by clause position.
pub type Contract = Vec<SortId>;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum DecomposeError {
    #[error(transparent)]
    MissingBackend(#[from] MissingBackend),
    #[error("internal: {0}")]
    Atom(String),
}

/// The single sort of a CNF atom.
pub fn sort_of_atom(atom: &Formula, sig: &Signature) -> Result<SortId, DecomposeError> {
    match sort_of_atom_checked(atom, sig) {
        Ok(Some(s)) => Ok(s),
        Ok(None) => Err(DecomposeError::Atom(format!("atom without a sort: {atom:?}"))),
        Err(e) => Err(DecomposeError::Atom(format!("mixed-sort atom: {e}"))),
    }
}

/// Literals of `clause` whose atom has sort `sort`, as formulas. The empty
/// disjunction stands for false.
pub fn split_clause(cnf: &CnfSentence, clause: &Clause, atom_sorts: &[SortId], sort: SortId) -> Vec<Formula> {
    clause
        .iter()
        .filter(|l| atom_sorts[l.atom as usize] == sort)
        .map(|&l| cnf.literal_formula(l))
        .collect()
}

pub fn atom_sorts(cnf: &CnfSentence, sig: &Signature) -> Result<Vec<SortId>, DecomposeError> {
    cnf.atoms.iter().map(|a| sort_of_atom(a, sig)).collect()
}

/// Sorts each clause may be assigned to. Pruned: only sorts with at least
/// one literal in the clause, in signature order. Unpruned: every sort.
pub fn candidate_sorts(cnf: &CnfSentence, sig: &Signature, atom_sorts: &[SortId], pruned: bool) -> Vec<Vec<SortId>> {
    cnf.clauses
        .iter()
        .map(|c| {
            sig.sort_ids()
                .filter(|&s| !pruned || c.iter().any(|l| atom_sorts[l.atom as usize] == s))
                .collect()
        })
        .collect()
}

/// Clause indices, most constrained (fewest candidate sorts) first.
pub fn search_order(cands: &[Vec<SortId>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by_key(|&i| (cands[i].len(), i));
    order
}

/// Every contract in search order (an odometer over the candidate sorts,
/// last clause in the order varying fastest). At most `|S|^r` items.
pub fn enumerate_contracts(cands: &[Vec<SortId>]) -> impl Iterator<Item = Contract> + '_ {
    let order = search_order(cands);
    let r = cands.len();
    let mut digits = vec![0usize; r];
    let mut done = cands.iter().any(|c| c.is_empty());
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let mut contract = vec![SortId::BOOL; r];
        for (k, &c) in order.iter().enumerate() {
            contract[c] = cands[c][digits[k]];
        }
        done = true;
        for k in (0..r).rev() {
            digits[k] += 1;
            if digits[k] < cands[order[k]].len() {
                done = false;
                break;
            }
            digits[k] = 0;
        }
        Some(contract)
    })
}

#[derive(Clone, Debug)]
pub struct DecomposeOptions {
    pub pruned: bool,
    pub jobs: usize,
    /// Cap on clause-to-sort assignment steps.
    pub max_contracts: Option<usize>,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            pruned: true,
            jobs: 1,
            max_contracts: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    /// Satisfying contract and values of every existential variable.
    Sat {
        contract: Contract,
        model: HashMap<VarId, Value>,
    },
    Unsat,
    Unknown(String),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Sat { .. } => "sat",
            Verdict::Unsat => "unsat",
            Verdict::Unknown(_) => "unknown",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DecomposeStats {
    pub steps: usize,
    pub leaves: usize,
    pub backend_calls: usize,
    pub cache_hits: usize,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub verdict: Verdict,
    pub stats: DecomposeStats,
    /// One line per assignment step and per complete contract.
    pub log: Vec<String>,
}

type Bits = Vec<u64>;

fn bit_set(b: &mut Bits, i: usize) {
    b[i / 64] |= 1 << (i % 64);
}

fn bit_clear(b: &mut Bits, i: usize) {
    b[i / 64] &= !(1 << (i % 64));
}

fn subset(a: &Bits, b: &Bits) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

#[derive(Default)]
struct SortCache {
    exact: HashMap<Bits, QueryVerdict>,
    sat: Vec<(Bits, SortModel)>,
    unsat: Vec<Bits>,
}

struct Shared<'a> {
    cnf: &'a CnfSentence,
    sig: &'a Signature,
    backends: &'a Backends,
    atom_sorts: Vec<SortId>,
    cands: Vec<Vec<SortId>>,
    order: Vec<usize>,
    exists: HashMap<SortId, Vec<Var>>,
    forall: HashMap<SortId, Vec<Var>>,
    cache: Mutex<HashMap<SortId, SortCache>>,
    steps: AtomicUsize,
    calls: AtomicUsize,
    hits: AtomicUsize,
    leaves: AtomicUsize,
    max_steps: usize,
    best: AtomicUsize,
    lookahead: Lookahead,
}

/// Exact feasibility test for the internally decided sorts, from their
/// clause tables (see [`clause_table`]).
struct Lookahead {
    /// Sort, its table rows, and the clauses having it as a candidate.
    tables: Vec<(SortId, Vec<TableRow>, Bits)>,
    /// Clauses whose every candidate sort has a table.
    covered_only: Bits,
}

const TABLE_ROWS: usize = 1 << 13;
const LOOKAHEAD_COMBOS: usize = 1 << 16;

impl Lookahead {
    fn new(
        cnf: &CnfSentence,
        sig: &Signature,
        atom_sorts: &[SortId],
        cands: &[Vec<SortId>],
        exists: &HashMap<SortId, Vec<Var>>,
        forall: &HashMap<SortId, Vec<Var>>,
    ) -> Self {
        let words = cnf.clauses.len().div_ceil(64).max(1);
        let mut tables = vec![];
        for s in sig.sort_ids() {
            if !is_internal(sig, s) || !cands.iter().any(|c| c.contains(&s)) {
                continue;
            }
            let q = TheoryQuery {
                sort: s,
                exists: exists.get(&s).cloned().unwrap_or_default(),
                forall: forall.get(&s).cloned().unwrap_or_default(),
                clauses: cnf
                    .clauses
                    .iter()
                    .map(|c| split_clause(cnf, c, atom_sorts, s))
                    .collect(),
            };
            if let Some(rows) = clause_table(&q, TABLE_ROWS) {
                let mut mask = vec![0; words];
                for (i, c) in cands.iter().enumerate() {
                    if c.contains(&s) {
                        bit_set(&mut mask, i);
                    }
                }
                tables.push((s, rows, mask));
            }
        }
        let mut covered_only = vec![0; words];
        for (i, c) in cands.iter().enumerate() {
            if c.iter().all(|s| tables.iter().any(|(t, _, _)| t == s)) {
                bit_set(&mut covered_only, i);
            }
        }
        Lookahead { tables, covered_only }
    }

    /// The query verdict of a tabled sort, read off its table.
    fn query(&self, sort: SortId, set: &Bits) -> Option<QueryVerdict> {
        let (_, rows, _) = self.tables.iter().find(|(s, _, _)| *s == sort)?;
        Some(match rows.iter().find(|r| subset(set, &r.clauses)) {
            Some(r) => QueryVerdict::Sat(r.model.clone()),
            None => QueryVerdict::Unsat,
        })
    }

    /// Whether some choice of one row per tabled sort, each containing the
    /// clauses already sent to that sort, covers every unassigned clause
    /// that only tabled sorts can take. `true` when undecided.
    fn feasible(&self, sets: &HashMap<SortId, Bits>) -> bool {
        if self.tables.is_empty() {
            return true;
        }
        let words = self.covered_only.len();
        let mut need = self.covered_only.clone();
        for set in sets.values() {
            for (n, s) in need.iter_mut().zip(set) {
                *n &= !s;
            }
        }
        let mut options: Vec<Vec<Bits>> = vec![];
        let mut combos = 1usize;
        for (s, rows, mask) in &self.tables {
            let opts: Vec<Bits> = rows
                .iter()
                .filter(|r| sets.get(s).is_none_or(|set| subset(set, &r.clauses)))
                .map(|r| r.clauses.iter().zip(mask).map(|(a, b)| a & b).collect())
                .collect();
            if opts.is_empty() {
                return false;
            }
            combos = combos.saturating_mul(opts.len());
            options.push(opts);
        }
        if combos > LOOKAHEAD_COMBOS {
            return true;
        }
        fn cover(options: &[Vec<Bits>], acc: &Bits, need: &Bits) -> bool {
            match options.split_first() {
                None => subset(need, acc),
                Some((first, rest)) => first.iter().any(|r| {
                    let acc: Bits = acc.iter().zip(r).map(|(a, b)| a | b).collect();
                    cover(rest, &acc, need)
                }),
            }
        }
        cover(&options, &vec![0; words], &need)
    }
}

enum Outcome {
    Sat(Contract, HashMap<VarId, Value>),
    Exhausted { unknown: Option<String> },
}

impl Shared<'_> {
    fn query(&self, sort: SortId, set: &Bits) -> QueryVerdict {
        if let Some(v) = self.lookahead.query(sort, set) {
            self.calls.fetch_add(1, Ordering::Relaxed);
            return v;
        }
        {
            let mut cache = self.cache.lock().unwrap();
            let c = cache.entry(sort).or_default();
            let hit = c
                .exact
                .get(set)
                .cloned()
                .or_else(|| c.unsat.iter().any(|u| subset(u, set)).then_some(QueryVerdict::Unsat))
                .or_else(|| {
                    c.sat
                        .iter()
                        .find(|(s, _)| subset(set, s))
                        .map(|(_, m)| QueryVerdict::Sat(m.clone()))
                });
            if let Some(v) = hit {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return v;
            }
        }
        let clauses: Vec<Vec<Formula>> = (0..self.cnf.clauses.len())
            .filter(|&i| set[i / 64] >> (i % 64) & 1 == 1)
            .map(|i| split_clause(self.cnf, &self.cnf.clauses[i], &self.atom_sorts, sort))
            .collect();
        let q = TheoryQuery {
            sort,
            exists: self.exists.get(&sort).cloned().unwrap_or_default(),
            forall: self.forall.get(&sort).cloned().unwrap_or_default(),
            clauses,
        };
        let v = match self.backends.for_sort(self.sig, sort) {
            Ok(b) => {
                self.calls.fetch_add(1, Ordering::Relaxed);
                b.solve(&q, self.sig)
            }
            // Only reachable in unpruned mode, where the split is empty.
            Err(_) if q.clauses.iter().any(|c| c.is_empty()) => QueryVerdict::Unsat,
            Err(e) => QueryVerdict::Unknown(e.to_string()),
        };
        let mut cache = self.cache.lock().unwrap();
        let c = cache.entry(sort).or_default();
        match &v {
            QueryVerdict::Sat(m) => c.sat.push((set.clone(), m.clone())),
            QueryVerdict::Unsat => c.unsat.push(set.clone()),
            QueryVerdict::Unknown(_) => {}
        }
        c.exact.insert(set.clone(), v.clone());
        v
    }

    fn default_value(&self, sort: SortId) -> Value {
        match &self.sig.sort(sort).kind {
            SortKind::Bool => Value::Bool(false),
            SortKind::Foreground | SortKind::Background(Theory::Empty)
                if crate::backends::is_internal(self.sig, sort) =>
            {
                Value::Elem(0)
            }
            _ => Value::Num("0".into()),
        }
    }

    fn sort_name(&self, s: SortId) -> &str {
        self.sig.sort_name(s)
    }
}

struct Worker<'s, 'a> {
    sh: &'s Shared<'a>,
    index: usize,
    prefix: Vec<SortId>,
    sets: HashMap<SortId, Bits>,
    verdicts: HashMap<SortId, QueryVerdict>,
    assigned: Vec<Option<SortId>>,
    unknown: Option<String>,
    log: Vec<String>,
    aborted: bool,
}

impl Worker<'_, '_> {
    fn contract_text(&self) -> String {
        let parts: Vec<String> = self
            .assigned
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|s| format!("{i}:{}", self.sh.sort_name(s))))
            .collect();
        format!("[{}]", parts.join(" "))
    }

    fn dfs(&mut self, depth: usize) -> Option<(Contract, HashMap<VarId, Value>)> {
        let sh = self.sh;
        if sh.best.load(Ordering::Relaxed) < self.index {
            self.aborted = true;
            return None;
        }
        if depth == sh.order.len() {
            sh.leaves.fetch_add(1, Ordering::Relaxed);
            let mut sorts: Vec<&SortId> = self.verdicts.keys().collect();
            sorts.sort();
            let summary: Vec<String> = sorts
                .iter()
                .map(|s| format!("{}={}", sh.sort_name(**s), self.verdicts[s].label()))
                .collect();
            if let Some(why) = self.verdicts.values().find_map(|v| match v {
                QueryVerdict::Unknown(w) => Some(w.clone()),
                _ => None,
            }) {
                self.log.push(format!(
                    "contract {} {} => unknown",
                    self.contract_text(),
                    summary.join(" ")
                ));
                self.unknown.get_or_insert(why);
                return None;
            }
            self.log.push(format!(
                "contract {} {} => sat",
                self.contract_text(),
                summary.join(" ")
            ));
            let mut model = HashMap::new();
            for (s, vars) in &sh.exists {
                match self.verdicts.get(s) {
                    Some(QueryVerdict::Sat(m)) => {
                        for (v, x) in &m.values {
                            model.insert(v.id, x.clone());
                        }
                    }
                    _ => {
                        for v in vars {
                            model.insert(v.id, sh.default_value(*s));
                        }
                    }
                }
            }
            let contract = self.assigned.iter().map(|s| s.expect("total contract")).collect();
            return Some((contract, model));
        }
        let clause = sh.order[depth];
        let choices: Vec<SortId> = match self.prefix.get(depth) {
            Some(&s) => vec![s],
            None => sh.cands[clause].clone(),
        };
        for s in choices {
            let step = sh.steps.fetch_add(1, Ordering::Relaxed) + 1;
            if step > sh.max_steps {
                self.unknown
                    .get_or_insert_with(|| format!("contract budget of {} steps exhausted", sh.max_steps));
                self.aborted = true;
                return None;
            }
            let words = sh.cnf.clauses.len().div_ceil(64).max(1);
            let set = self.sets.entry(s).or_insert_with(|| vec![0; words]);
            bit_set(set, clause);
            let set = set.clone();
            let prev = self.verdicts.get(&s).cloned();
            let v = sh.query(s, &set);
            self.log
                .push(format!("step clause {clause} -> {}: {}", sh.sort_name(s), v));
            self.assigned[clause] = Some(s);
            if v != QueryVerdict::Unsat && sh.lookahead.feasible(&self.sets) {
                self.verdicts.insert(s, v);
                if let Some(found) = self.dfs(depth + 1) {
                    return Some(found);
                }
                if self.aborted {
                    return None;
                }
            }
            self.assigned[clause] = None;
            bit_clear(self.sets.get_mut(&s).unwrap(), clause);
            match prev {
                Some(p) => self.verdicts.insert(s, p),
                None => self.verdicts.remove(&s),
            };
        }
        None
    }

    fn run(mut self) -> (Outcome, Vec<String>) {
        if !self.sh.lookahead.feasible(&self.sets) {
            self.log
                .push("lookahead: no choice of finite models covers the clauses".into());
            return (Outcome::Exhausted { unknown: None }, self.log);
        }
        match self.dfs(0) {
            Some((c, m)) => {
                self.sh.best.fetch_min(self.index, Ordering::Relaxed);
                (Outcome::Sat(c, m), self.log)
            }
            None => (Outcome::Exhausted { unknown: self.unknown }, self.log),
        }
    }
}

/// Prefixes of the search order used as independent parallel subtrees.
fn subtrees(cands: &[Vec<SortId>], order: &[usize], jobs: usize) -> Vec<Vec<SortId>> {
    let mut prefixes: Vec<Vec<SortId>> = vec![vec![]];
    if jobs <= 1 {
        return prefixes;
    }
    for &c in order {
        if prefixes.len() >= jobs * 4 || prefixes.len() * cands[c].len() > jobs * 64 {
            break;
        }
        prefixes = prefixes
            .into_iter()
            .flat_map(|p| {
                cands[c].iter().map(move |&s| {
                    let mut p = p.clone();
                    p.push(s);
                    p
                })
            })
            .collect();
    }
    prefixes
}

/// Searches for a contract making every per-sort query satisfiable.
///
/// The reported contract is the first successful one in search order, also
/// when subtrees run in parallel.
pub fn solve_cnf(
    cnf: &CnfSentence,
    sig: &Signature,
    backends: &Backends,
    opts: &DecomposeOptions,
) -> Result<Decomposition, DecomposeError> {
    let atom_sorts = atom_sorts(cnf, sig)?;
    let cands = candidate_sorts(cnf, sig, &atom_sorts, opts.pruned);
    for &a in &atom_sorts {
        backends.for_sort(sig, a)?;
    }
    // Both modes follow the pruned order: a clause sent to a sort without
    // literals of that sort fails at once, so unpruned search only adds
    // immediate rejections to the pruned tree.
    let order = if opts.pruned {
        search_order(&cands)
    } else {
        search_order(&candidate_sorts(cnf, sig, &atom_sorts, true))
    };
    let mut exists: HashMap<SortId, Vec<Var>> = HashMap::new();
    for v in &cnf.exists {
        exists.entry(v.sort).or_default().push(v.clone());
    }
    let mut forall: HashMap<SortId, Vec<Var>> = HashMap::new();
    for v in &cnf.forall {
        forall.entry(v.sort).or_default().push(v.clone());
    }
    let lookahead = Lookahead::new(cnf, sig, &atom_sorts, &cands, &exists, &forall);
    let sh = Shared {
        cnf,
        sig,
        backends,
        atom_sorts,
        cands,
        order,
        exists,
        forall,
        cache: Mutex::new(HashMap::new()),
        steps: AtomicUsize::new(0),
        calls: AtomicUsize::new(0),
        hits: AtomicUsize::new(0),
        leaves: AtomicUsize::new(0),
        max_steps: opts.max_contracts.unwrap_or(usize::MAX),
        best: AtomicUsize::new(usize::MAX),
        lookahead,
    };
    let prefixes = subtrees(&sh.cands, &sh.order, opts.jobs);
    let results = par::map(&prefixes, opts.jobs, |i, p| {
        Worker {
            sh: &sh,
            index: i,
            prefix: p.clone(),
            sets: HashMap::new(),
            verdicts: HashMap::new(),
            assigned: vec![None; cnf.clauses.len()],
            unknown: None,
            log: vec![],
            aborted: false,
        }
        .run()
    });
    let mut log = vec![];
    let mut verdict = None;
    let mut unknown = None;
    for (outcome, lines) in results {
        log.extend(lines);
        match outcome {
            Outcome::Sat(contract, model) => {
                verdict = Some(Verdict::Sat { contract, model });
                break;
            }
            Outcome::Exhausted { unknown: u } => {
                if unknown.is_none() {
                    unknown = u;
                }
            }
        }
    }
    let verdict = verdict.unwrap_or(match unknown {
        Some(why) => Verdict::Unknown(why),
        None => Verdict::Unsat,
    });
    Ok(Decomposition {
        verdict,
        stats: DecomposeStats {
            steps: sh.steps.load(Ordering::Relaxed),
            leaves: sh.leaves.load(Ordering::Relaxed),
            backend_calls: sh.calls.load(Ordering::Relaxed),
            cache_hits: sh.hits.load(Ordering::Relaxed),
        },
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use crate::transform::{to_cnf, DEFAULT_CLAUSE_BUDGET};

    fn cnf(text: &str) -> (Signature, CnfSentence) {
        let p = parse(text).unwrap();
        let c = to_cnf(&p.sentence(), DEFAULT_CLAUSE_BUDGET).unwrap();
        (p.sig, c)
    }

    fn verdict(text: &str, pruned: bool, jobs: usize) -> Verdict {
        let (sig, c) = cnf(text);
        let opts = DecomposeOptions {
            pruned,
            jobs,
            max_contracts: None,
        };
        solve_cnf(&c, &sig, &Backends::internal(), &opts).unwrap().verdict
    }

    const MIXED: &str = "(declare-sort FG :foreground)(declare-sort Int :background lia)";

    #[test]
    fn contract_counts() {
        let (sig, c) = cnf(&format!(
            "{MIXED}(assert-eqsmt (exists ((a FG) (b FG) (p Bool) (q Bool) (x Int) (y Int)) (and (or (= a b) p (< x 0)) (or (= b a) q (> y 0)))))"
        ));
        let sorts = atom_sorts(&c, &sig).unwrap();
        let cands = candidate_sorts(&c, &sig, &sorts, true);
        assert_eq!(enumerate_contracts(&cands).count(), 9);
        let (sig, c) = cnf(&format!(
            "{MIXED}(assert-eqsmt (exists ((a FG) (b FG) (p Bool) (x Int)) (and (< x 0) (or (= b a) p (> x 0)))))"
        ));
        let sorts = atom_sorts(&c, &sig).unwrap();
        let cands = candidate_sorts(&c, &sig, &sorts, true);
        assert_eq!(enumerate_contracts(&cands).count(), 3);
        let unpruned = candidate_sorts(&c, &sig, &sorts, false);
        assert_eq!(enumerate_contracts(&unpruned).count(), 9);
    }

    #[test]
    fn split_covers_clause() {
        let (sig, c) = cnf(&format!(
            "{MIXED}(assert-eqsmt (exists ((a FG) (b FG) (x Int)) (or (= a b) (< x 0))))"
        ));
        let sorts = atom_sorts(&c, &sig).unwrap();
        let int = sig.sort_by_name("Int").unwrap();
        let fg = sig.foreground().unwrap();
        assert_eq!(split_clause(&c, &c.clauses[0], &sorts, int).len(), 1);
        assert_eq!(split_clause(&c, &c.clauses[0], &sorts, fg).len(), 1);
        assert!(split_clause(&c, &c.clauses[0], &sorts, SortId::BOOL).is_empty());
    }

    #[test]
    fn reflexive_foreground_clause_is_sat() {
        let text = "(declare-sort FG :foreground)(assert-eqsmt (exists ((a FG) (b FG)) (forall ((y FG)) (or (= y a) (= y b)))))";
        assert!(matches!(verdict(text, true, 1), Verdict::Sat { .. }));
    }

    #[test]
    fn cross_sort_split() {
        let text = "(declare-sort FG :foreground)(assert-eqsmt (exists ((a FG) (p Bool)) (forall ((y FG) (q Bool)) (and (or (= y a) (= q p)) (or (not (= y a)) (= p true))))))";
        let Verdict::Sat { contract, model } = verdict(text, true, 1) else {
            panic!()
        };
        assert_eq!(contract.len(), 2);
        assert_eq!(model.len(), 2);
        for jobs in [1, 4] {
            for pruned in [true, false] {
                assert!(matches!(verdict(text, pruned, jobs), Verdict::Sat { .. }));
            }
        }
    }

    #[test]
    fn unsat_all_contracts() {
        let text = "(declare-sort FG :foreground)(assert-eqsmt (exists ((a FG) (p Bool)) (forall ((y FG) (q Bool)) (and (or (not (= y a)) (= q p)) (= p q)))))";
        for jobs in [1, 3] {
            for pruned in [true, false] {
                assert_eq!(verdict(text, pruned, jobs), Verdict::Unsat);
            }
        }
    }

    #[test]
    fn missing_backend_names_theory() {
        let (sig, c) = cnf(&format!("{MIXED}(assert-eqsmt (exists ((x Int)) (< x 0)))"));
        let err = solve_cnf(&c, &sig, &Backends::internal(), &DecomposeOptions::default()).unwrap_err();
        assert!(err.to_string().contains("lia"));
    }

    #[test]
    fn budget_gives_unknown() {
        let text = "(declare-sort FG :foreground)(assert-eqsmt (exists ((a FG) (p Bool)) (forall ((y FG) (q Bool)) (and (or (= y a) (= q p)) (or (not (= y a)) (= p true))))))";
        let (sig, c) = cnf(text);
        let opts = DecomposeOptions {
            max_contracts: Some(1),
            ..Default::default()
        };
        let d = solve_cnf(&c, &sig, &Backends::internal(), &opts).unwrap();
        assert!(matches!(d.verdict, Verdict::Unknown(_)));
    }

    #[test]
    fn parallel_reports_least_contract() {
        let text = "(declare-sort FG :foreground)(assert-eqsmt (exists ((a FG) (b FG) (p Bool) (r Bool)) (and (or (= a b) p) (or (not (= a b)) r) (or (= a b) (not p) r))))";
        let seq = verdict(text, true, 1);
        for jobs in [2, 4, 8] {
            let Verdict::Sat { contract, .. } = verdict(text, true, jobs) else {
                panic!()
            };
            let Verdict::Sat { contract: c1, .. } = &seq else {
                panic!()
            };
            assert_eq!(&contract, c1);
        }
    }
}
