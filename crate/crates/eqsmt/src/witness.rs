//! Models of the original sentence, pulled back from the models of the
//! lowered first-order sentence, and an independent checker for them.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::backends::{parse_verdict, smt_name, External, Printer, QueryVerdict};
use crate::logic::{
    Formula, FunVar, Lit, RelVar, Sentence, Signature, SortId, SortKind, Term, Theory, Value, Var, VarId,
};
use crate::simplify::{simplify, simplify_term};
use crate::transform::TransformTrace;

/// Function table row: argument tuple and value.
pub type Row = (Vec<u32>, Value);

/// Finite foreground universe `e0 .. e(n-1)` plus interpretations of every
/// existential symbol of the original sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub universe: u32,
    pub values: Vec<(Var, Value)>,
    /// Total tables; rows in lexicographic order of the argument tuples.
    pub functions: Vec<(FunVar, Vec<Row>)>,
    pub relations: Vec<(RelVar, Vec<Vec<u32>>)>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum WitnessError {
    #[error("internal: no model value for `{0}`")]
    MissingValue(String),
    #[error("internal: foreground variable `{0}` has a non-element value")]
    NotElement(String),
}

/// All tuples of length `m` over `0..n`, lexicographic.
pub fn tuples(n: u32, m: usize) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..n).map(move |e| {
                    let mut t = t.clone();
                    t.push(e);
                    t
                })
            })
            .collect();
    }
    out
}

/// Value used for symbols the lowered sentence never constrains.
pub fn default_value(sig: &Signature, sort: SortId) -> Value {
    if sort == SortId::BOOL {
        Value::Bool(false)
    } else if finite_like(sig, sort) {
        Value::Elem(0)
    } else {
        Value::Num("0".into())
    }
}

fn finite_like(sig: &Signature, sort: SortId) -> bool {
    match sig.sort(sort).kind {
        SortKind::Foreground | SortKind::Bool => true,
        SortKind::Background(Theory::Empty) => !sig.has_symbols_in(sort),
        _ => false,
    }
}

fn row_index(n: u32, args: &[u32]) -> usize {
    args.iter().fold(0usize, |acc, &a| acc * n as usize + a as usize)
}

impl Witness {
    pub fn value(&self, name: &str) -> Option<&Value> {
        self.values.iter().find(|(v, _)| &*v.name == name).map(|(_, x)| x)
    }

    pub fn function(&self, name: &str) -> Option<&[(Vec<u32>, Value)]> {
        self.functions
            .iter()
            .find(|(f, _)| &*f.name == name)
            .map(|(_, t)| t.as_slice())
    }

    pub fn relation(&self, name: &str) -> Option<&[Vec<u32>]> {
        self.relations
            .iter()
            .find(|(r, _)| &*r.name == name)
            .map(|(_, t)| t.as_slice())
    }

    /// `F(args)` for an existential function of the witness.
    pub fn apply(&self, f: VarId, args: &[u32]) -> Option<&Value> {
        let (_, table) = self.functions.iter().find(|(g, _)| g.id == f)?;
        table.get(row_index(self.universe, args)).map(|(_, v)| v)
    }

    pub fn holds(&self, r: VarId, args: &[u32]) -> Option<bool> {
        let (_, set) = self.relations.iter().find(|(q, _)| q.id == r)?;
        Some(set.iter().any(|t| t == args))
    }

    pub fn to_json(&self, sig: &Signature) -> Json {
        let elem = |e: &u32| json!(format!("e{e}"));
        let sorts = |xs: &[SortId]| xs.iter().map(|&s| sig.sort_name(s)).collect::<Vec<_>>();
        json!({
            "version": 1,
            "foreground": {
                "sort": sig.foreground().map(|s| sig.sort_name(s)),
                "universe": (0..self.universe).map(|e| elem(&e)).collect::<Vec<_>>(),
            },
            "values": self.values.iter().map(|(v, x)| json!({
                "name": &*v.name,
                "sort": sig.sort_name(v.sort),
                "value": value_json(x),
            })).collect::<Vec<_>>(),
            "functions": self.functions.iter().map(|(f, t)| json!({
                "name": &*f.name,
                "args": sorts(&f.args),
                "result": sig.sort_name(f.result),
                "table": t.iter().map(|(a, x)| json!({
                    "args": a.iter().map(elem).collect::<Vec<_>>(),
                    "value": value_json(x),
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "relations": self.relations.iter().map(|(r, t)| json!({
                "name": &*r.name,
                "args": sorts(&r.args),
                "tuples": t.iter().map(|a| a.iter().map(elem).collect::<Vec<_>>()).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }
}

pub fn value_json(v: &Value) -> Json {
    match v {
        Value::Bool(b) => json!(b),
        Value::Elem(e) => json!(format!("e{e}")),
        Value::Num(n) => json!(&**n),
    }
}

/// Builds a model of `original` from a model of its lowering. Foreground
/// elements are the equality classes of the `x0` representatives; every
/// function row is read off the fresh variable of the representative tuple.
pub fn pull_back(
    model: &HashMap<VarId, Value>,
    trace: &TransformTrace,
    original: &Sentence,
    sig: &Signature,
) -> Result<Witness, WitnessError> {
    let lookup = |v: &Var| {
        model
            .get(&v.id)
            .cloned()
            .ok_or_else(|| WitnessError::MissingValue(v.name.to_string()))
    };
    // class of each x0 variable, and one representative x0 index per class
    let mut classes: Vec<u32> = vec![];
    let mut of_x0: Vec<usize> = vec![];
    for v in &trace.x0 {
        let e = lookup(v)?
            .as_elem()
            .ok_or_else(|| WitnessError::NotElement(v.name.to_string()))?;
        let c = match classes.iter().position(|&x| x == e) {
            Some(c) => c,
            None => {
                classes.push(e);
                classes.len() - 1
            }
        };
        of_x0.push(c);
    }
    let universe = classes.len().max(1) as u32;
    let rep: Vec<usize> = (0..classes.len())
        .map(|c| of_x0.iter().position(|&k| k == c).unwrap())
        .collect();
    let x0_pos: HashMap<VarId, usize> = trace.x0.iter().enumerate().map(|(i, v)| (v.id, i)).collect();

    let fg = sig.foreground();
    let mut values = vec![];
    for v in original.exists_vars() {
        let x = match x0_pos.get(&v.id) {
            Some(&i) if Some(v.sort) == fg => Value::Elem(of_x0[i] as u32),
            _ => lookup(v)?,
        };
        values.push((v.clone(), x));
    }

    let table = |f: &FunVar| -> Result<Vec<(Vec<u32>, Value)>, WitnessError> {
        let elim = trace.elim(f);
        tuples(universe, f.args.len())
            .into_iter()
            .map(|t| {
                let want: Vec<usize> = t.iter().map(|&c| rep.get(c as usize).copied().unwrap_or(0)).collect();
                let x = match elim.and_then(|e| e.tuples.iter().position(|u| *u == want).map(|i| &e.vars[i])) {
                    Some(var) => lookup(var)?,
                    None => default_value(sig, f.result),
                };
                Ok((t, x))
            })
            .collect()
    };
    let mut functions = vec![];
    for f in original.exists_funs() {
        functions.push((f.clone(), table(f)?));
    }
    let mut relations = vec![];
    for r in original.exists_rels() {
        let set = match trace.char_fun(r) {
            Some(f) => table(f)?
                .into_iter()
                .filter(|(_, x)| *x == Value::Bool(true))
                .map(|(t, _)| t)
                .collect(),
            None => vec![],
        };
        relations.push((r.clone(), set));
    }
    Ok(Witness {
        universe,
        values,
        functions,
        relations,
    })
}

/// Outcome of [`validate_witness`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Report {
    Pass,
    /// A universal instantiation falsifying the matrix.
    Fail(String),
    Inconclusive(String),
}

impl Report {
    pub fn is_pass(&self) -> bool {
        matches!(self, Report::Pass)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Report::Pass => f.write_str("pass"),
            Report::Fail(i) => write!(f, "fail: {i}"),
            Report::Inconclusive(why) => write!(f, "inconclusive: {why}"),
        }
    }
}

/// Cap on enumerated first-order universal instantiations.
pub const MAX_INSTANCES: u128 = 1_000_000;

/// Key of a universal function or relation cell: symbol and argument terms.
type Cell = (VarId, Vec<Term>);

enum Stuck {
    /// A finite-range cell with ground arguments that needs a value.
    Need(Cell, SortId),
    Unsupported(String),
}

struct Checker<'a> {
    sig: &'a Signature,
    w: &'a Witness,
    universes: HashMap<SortId, Vec<u32>>,
    exists: HashMap<VarId, Value>,
    forall_funs: HashMap<VarId, FunVar>,
    forall_rels: HashSet<VarId>,
    /// Finite universal variables and cells of the current instantiation.
    fo: HashMap<VarId, Value>,
    cells: Vec<(Cell, Value)>,
    /// Background-valued cells, shared by every instantiation.
    symbolic: Vec<(Cell, Var)>,
    residual: Vec<(String, Formula)>,
}

fn elem_of(t: &Term) -> Option<u32> {
    match t {
        Term::Lit(Lit::Elem(_, e)) => Some(*e),
        _ => None,
    }
}

fn is_ground(t: &Term) -> bool {
    matches!(t, Term::Lit(_))
}

impl Checker<'_> {
    fn universe(&self, sort: SortId) -> Vec<Value> {
        if sort == SortId::BOOL {
            return vec![Value::Bool(false), Value::Bool(true)];
        }
        self.universes[&sort].iter().map(|&e| Value::Elem(e)).collect()
    }

    fn cell(&self, key: &Cell) -> Option<&Value> {
        self.cells.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    fn term(&mut self, t: &Term) -> Result<Term, Stuck> {
        let out = match t {
            Term::Var(v) => match self.exists.get(&v.id).or_else(|| self.fo.get(&v.id)) {
                Some(x) => x.to_term(v.sort),
                None => t.clone(),
            },
            Term::Lit(_) => t.clone(),
            Term::App(f, s, args) => {
                let args = args.iter().map(|a| self.term(a)).collect::<Result<_, _>>()?;
                simplify_term(&Term::App(f.clone(), *s, args))
            }
            Term::FApp(f, args) => {
                let args: Vec<Term> = args.iter().map(|a| self.term(a)).collect::<Result<_, _>>()?;
                if !self.forall_funs.contains_key(&f.id) {
                    let row: Option<Vec<u32>> = args.iter().map(elem_of).collect();
                    let row = row.ok_or_else(|| Stuck::Unsupported(format!("non-ground argument of `{}`", f.name)))?;
                    let x = self
                        .w
                        .apply(f.id, &row)
                        .ok_or_else(|| Stuck::Unsupported(format!("no table for `{}`", f.name)))?;
                    return Ok(x.to_term(f.result));
                }
                let key = (f.id, args);
                if finite_like(self.sig, f.result) {
                    if !key.1.iter().all(is_ground) {
                        return Err(Stuck::Unsupported(format!(
                            "`{}` has a finite range but non-ground arguments",
                            f.name
                        )));
                    }
                    return match self.cell(&key) {
                        Some(x) => Ok(x.to_term(f.result)),
                        None => Err(Stuck::Need(key, f.result)),
                    };
                }
                match self.symbolic.iter().find(|(k, _)| *k == key) {
                    Some((_, v)) => v.term(),
                    None => {
                        let v = Var::new(&format!("{}_{}", f.name, self.symbolic.len()), f.result);
                        self.symbolic.push((key, v.clone()));
                        v.term()
                    }
                }
            }
        };
        Ok(out)
    }

    fn formula(&mut self, f: &Formula) -> Result<Formula, Stuck> {
        Ok(match f {
            Formula::True | Formula::False => f.clone(),
            Formula::Eq(a, b) => Formula::Eq(self.term(a)?, self.term(b)?),
            Formula::Rel(p, s, ts) => Formula::Rel(
                p.clone(),
                *s,
                ts.iter().map(|t| self.term(t)).collect::<Result<_, _>>()?,
            ),
            Formula::RelVar(r, ts) => {
                let args: Vec<Term> = ts.iter().map(|t| self.term(t)).collect::<Result<_, _>>()?;
                if !self.forall_rels.contains(&r.id) {
                    let row: Option<Vec<u32>> = args.iter().map(elem_of).collect();
                    let row = row.ok_or_else(|| Stuck::Unsupported(format!("non-ground argument of `{}`", r.name)))?;
                    let holds = self.w.holds(r.id, &row).unwrap_or(false);
                    return Ok(if holds { Formula::True } else { Formula::False });
                }
                if !args.iter().all(is_ground) {
                    return Err(Stuck::Unsupported(format!(
                        "`{}` applied to non-ground arguments",
                        r.name
                    )));
                }
                let key = (r.id, args);
                match self.cell(&key) {
                    Some(Value::Bool(true)) => Formula::True,
                    Some(_) => Formula::False,
                    None => return Err(Stuck::Need(key, SortId::BOOL)),
                }
            }
            Formula::Not(a) => Formula::not(self.formula(a)?),
            Formula::And(xs) => Formula::And(xs.iter().map(|x| self.formula(x)).collect::<Result<_, _>>()?),
            Formula::Or(xs) => Formula::Or(xs.iter().map(|x| self.formula(x)).collect::<Result<_, _>>()?),
            Formula::Implies(a, b) => Formula::implies(self.formula(a)?, self.formula(b)?),
            Formula::Iff(a, b) => Formula::iff(self.formula(a)?, self.formula(b)?),
        })
    }

    fn describe(&self, names: &HashMap<VarId, String>) -> String {
        let mut parts: Vec<String> = vec![];
        let mut fo: Vec<_> = self.fo.iter().collect();
        fo.sort_by_key(|(id, _)| names.get(id).cloned());
        for (id, x) in fo {
            parts.push(format!("{}={x}", names.get(id).map_or("?", String::as_str)));
        }
        for ((id, args), x) in &self.cells {
            let args: Vec<String> = args
                .iter()
                .map(|t| match t {
                    Term::Lit(l) => Value::from_lit(l).to_string(),
                    t => t.to_string(),
                })
                .collect();
            parts.push(format!(
                "{}({})={x}",
                names.get(id).map_or("?", String::as_str),
                args.join(", ")
            ));
        }
        if parts.is_empty() {
            "the empty instantiation".into()
        } else {
            parts.join(", ")
        }
    }

    /// Branches on the finite cells the matrix needs; true on a falsifying branch.
    fn explore(&mut self, matrix: &Formula, names: &HashMap<VarId, String>) -> Result<Option<String>, String> {
        match self.formula(matrix) {
            Err(Stuck::Unsupported(why)) => Err(why),
            Err(Stuck::Need(key, sort)) => {
                for x in self.universe(sort) {
                    self.cells.push((key.clone(), x));
                    let r = self.explore(matrix, names);
                    self.cells.pop();
                    if !matches!(r, Ok(None)) {
                        return r;
                    }
                }
                Ok(None)
            }
            Ok(f) => match simplify(&f) {
                Formula::True => Ok(None),
                Formula::False => Ok(Some(self.describe(names))),
                rest => {
                    let d = self.describe(names);
                    self.residual.push((d, rest));
                    Ok(None)
                }
            },
        }
    }
}

fn elements_of(sort: SortId, f: &FunVar, out: &mut HashMap<SortId, Vec<u32>>, table: &[(Vec<u32>, Value)]) {
    if f.result == sort {
        for (_, x) in table {
            if let Some(e) = x.as_elem() {
                out.entry(sort).or_default().push(e);
            }
        }
    }
}

/// Checks that `w` satisfies `original`: every finite universal
/// instantiation is enumerated (universal function cells lazily), and what
/// remains over background sorts is discharged by one query asking the
/// backend for a counterexample.
pub fn validate_witness(w: &Witness, original: &Sentence, sig: &Signature, backend: Option<&External>) -> Report {
    let fg = sig.foreground();
    let mut universes: HashMap<SortId, Vec<u32>> = HashMap::new();
    if let Some(fg) = fg {
        universes.insert(fg, (0..w.universe).collect());
    }
    for (v, x) in &w.values {
        if let (Some(e), true) = (x.as_elem(), Some(v.sort) != fg) {
            universes.entry(v.sort).or_default().push(e);
        }
    }
    for s in sig.sort_ids() {
        if Some(s) == fg || s == SortId::BOOL || !finite_like(sig, s) {
            continue;
        }
        for (f, t) in &w.functions {
            elements_of(s, f, &mut universes, t);
        }
        let u = universes.entry(s).or_default();
        u.sort_unstable();
        u.dedup();
        if u.is_empty() {
            u.push(0);
        }
    }

    let names: HashMap<VarId, String> = original.binders().map(|b| (b.id(), b.name().to_string())).collect();
    let mut c = Checker {
        sig,
        w,
        universes,
        exists: w.values.iter().map(|(v, x)| (v.id, x.clone())).collect(),
        forall_funs: original.forall_funs().map(|f| (f.id, f.clone())).collect(),
        forall_rels: original.forall_rels().map(|r| r.id).collect(),
        fo: HashMap::new(),
        cells: vec![],
        symbolic: vec![],
        residual: vec![],
    };

    let finite: Vec<&Var> = original.forall_vars().filter(|v| finite_like(sig, v.sort)).collect();
    let symbolic_vars: Vec<Var> = original
        .forall_vars()
        .filter(|v| !finite_like(sig, v.sort))
        .cloned()
        .collect();
    let domains: Vec<Vec<Value>> = finite.iter().map(|v| c.universe(v.sort)).collect();
    let total = domains.iter().fold(1u128, |acc, d| acc.saturating_mul(d.len() as u128));
    if total > MAX_INSTANCES {
        return Report::Inconclusive(format!("{total} universal instantiations exceed {MAX_INSTANCES}"));
    }
    let mut digits = vec![0usize; finite.len()];
    loop {
        c.fo = finite
            .iter()
            .zip(&digits)
            .zip(&domains)
            .map(|((v, &d), dom)| (v.id, dom[d].clone()))
            .collect();
        match c.explore(&original.matrix, &names) {
            Err(why) => return Report::Inconclusive(why),
            Ok(Some(inst)) => return Report::Fail(inst),
            Ok(None) => {}
        }
        let mut i = 0;
        while i < digits.len() {
            digits[i] += 1;
            if digits[i] < domains[i].len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        if i == digits.len() {
            break;
        }
    }
    if c.residual.is_empty() {
        return Report::Pass;
    }
    let Some(ext) = backend else {
        return Report::Inconclusive("background constraints remain and no backend is configured".into());
    };
    residual_query(&c, &symbolic_vars, ext)
}

/// Asks whether some residual instance can be falsified, with functional
/// consistency of the background-valued cells as hypotheses.
fn residual_query(c: &Checker<'_>, vars: &[Var], ext: &External) -> Report {
    let p = Printer {
        sig: c.sig,
        embed_finite: false,
    };
    let mut hyps = vec![];
    for (i, ((f, a), x)) in c.symbolic.iter().enumerate() {
        for ((g, b), y) in &c.symbolic[i + 1..] {
            if f == g {
                let same = Formula::and_all(
                    a.iter()
                        .zip(b)
                        .map(|(s, t)| Formula::eq(s.clone(), t.clone()))
                        .collect(),
                );
                hyps.push(simplify(&Formula::implies(same, Formula::eq(x.term(), y.term()))));
            }
        }
    }
    let negated = Formula::or_all(c.residual.iter().map(|(_, f)| Formula::not(f.clone())).collect());
    let consts: Vec<Var> = vars
        .iter()
        .cloned()
        .chain(c.symbolic.iter().map(|(_, v)| v.clone()))
        .collect();
    let mut sorts: Vec<SortId> = consts.iter().map(|v| v.sort).collect();
    sorts.sort();
    sorts.dedup();

    let mut script = String::from("(set-option :produce-models true)\n(set-logic ALL)\n");
    p.declarations(&sorts, &mut script);
    for v in &consts {
        script.push_str(&format!("(declare-const {} {})\n", smt_name(v), p.sort(v.sort)));
    }
    for f in hyps.iter().chain(std::iter::once(&negated)) {
        match p.formula(f) {
            Ok(body) => script.push_str(&format!("(assert {body})\n")),
            Err(e) => return Report::Inconclusive(e),
        }
    }
    script.push_str("(check-sat)\n");
    if !consts.is_empty() {
        let names: Vec<String> = consts.iter().map(smt_name).collect();
        script.push_str(&format!("(get-value ({}))\n", names.join(" ")));
    }
    script.push_str("(exit)\n");
    let out = match ext.run("witness", &script) {
        Ok(o) => o,
        Err(e) => return Report::Inconclusive(e.to_string()),
    };
    let r = parse_verdict(&out);
    match r.verdict {
        QueryVerdict::Unsat => Report::Pass,
        QueryVerdict::Unknown(why) => Report::Inconclusive(why),
        QueryVerdict::Sat(_) => {
            let shown: Vec<String> = consts
                .iter()
                .filter_map(|v| {
                    let n = smt_name(v);
                    r.values
                        .iter()
                        .find(|(m, _)| *m == n)
                        .map(|(_, x)| format!("{}={x}", v.name))
                })
                .collect();
            let at = if c.residual.len() == 1 {
                format!(" at {}", c.residual[0].0)
            } else {
                String::new()
            };
            Report::Fail(format!("background counterexample{at}: {}", shown.join(", ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use crate::transform::{lower, TransformOptions};

    fn problem(text: &str) -> (Signature, Sentence) {
        let p = parse(text).unwrap();
        let s = p.sentence();
        (p.sig, s)
    }

    fn model(pairs: &[(&Var, Value)]) -> HashMap<VarId, Value> {
        pairs.iter().map(|(v, x)| (v.id, x.clone())).collect()
    }

    #[test]
    fn collapse_to_one_element() {
        let (sig, s) = problem(
            "(declare-sort FG :foreground)
             (assert-eqsmt (exists ((a FG) (b FG) (F (-> FG Bool))) (= (F a) (F b))))",
        );
        let l = lower(&s, &sig, &TransformOptions::default()).unwrap();
        let tr = &l.trace;
        let (a, b) = (&tr.x0[0], &tr.x0[1]);
        let e = &tr.step2[0];
        let mut m = model(&[(a, Value::Elem(0)), (b, Value::Elem(0))]);
        for (i, v) in e.vars.iter().enumerate() {
            m.insert(v.id, Value::Bool(i == 0));
        }
        let w = pull_back(&m, tr, &s, &sig).unwrap();
        assert_eq!(w.universe, 1);
        assert_eq!(w.function("F").unwrap(), &[(vec![0], Value::Bool(true))]);
        assert_eq!(validate_witness(&w, &s, &sig, None), Report::Pass);
    }

    #[test]
    fn relation_from_characteristic_function() {
        let (sig, s) = problem(
            "(declare-sort FG :foreground)
             (assert-eqsmt (exists ((a FG) (b FG) (R (Rel FG FG))) (and (R a b) (not (R b a)))))",
        );
        let l = lower(&s, &sig, &TransformOptions::default()).unwrap();
        let tr = &l.trace;
        let e = &tr.step2[0];
        let mut m = model(&[(&tr.x0[0], Value::Elem(0)), (&tr.x0[1], Value::Elem(1))]);
        for (t, v) in e.tuples.iter().zip(&e.vars) {
            m.insert(v.id, Value::Bool(*t == vec![0, 1]));
        }
        let w = pull_back(&m, tr, &s, &sig).unwrap();
        assert_eq!(w.relation("R").unwrap(), &[vec![0, 1]]);
        assert!(validate_witness(&w, &s, &sig, None).is_pass());

        let mut bad = w.clone();
        bad.relations[0].1.push(vec![1, 0]);
        assert!(matches!(validate_witness(&bad, &s, &sig, None), Report::Fail(_)));
    }

    #[test]
    fn universal_function_cells_are_enumerated() {
        let (sig, s) = problem(
            "(declare-sort FG :foreground)
             (assert-eqsmt (exists ((a FG) (b FG)) (forall ((G (-> FG FG))) (or (= (G a) a) (= (G a) b)))))",
        );
        let a = s.exists_vars().next().unwrap().clone();
        let b = s.exists_vars().nth(1).unwrap().clone();
        let two = Witness {
            universe: 2,
            values: vec![(a.clone(), Value::Elem(0)), (b.clone(), Value::Elem(1))],
            functions: vec![],
            relations: vec![],
        };
        assert!(validate_witness(&two, &s, &sig, None).is_pass());
        let one = Witness {
            universe: 3,
            values: vec![(a, Value::Elem(0)), (b, Value::Elem(0))],
            ..two
        };
        match validate_witness(&one, &s, &sig, None) {
            Report::Fail(inst) => assert!(inst.contains("G(e0)=e1"), "{inst}"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn background_residual_needs_a_backend() {
        let (sig, s) = problem(
            "(declare-sort FG :foreground)
             (declare-sort Int :background lia)
             (assert-eqsmt (exists ((x Int)) (forall ((y Int)) (or (<= x y) (< y 0)))))",
        );
        let x = s.exists_vars().next().unwrap().clone();
        let w = Witness {
            universe: 1,
            values: vec![(x, Value::Num("0".into()))],
            functions: vec![],
            relations: vec![],
        };
        assert!(matches!(validate_witness(&w, &s, &sig, None), Report::Inconclusive(_)));
    }

    #[test]
    fn json_shape() {
        let (sig, _) = problem("(declare-sort FG :foreground)");
        let w = Witness {
            universe: 2,
            values: vec![(Var::new("p", SortId::BOOL), Value::Bool(true))],
            functions: vec![],
            relations: vec![(RelVar::new("R", vec![sig.foreground().unwrap()]), vec![vec![1]])],
        };
        let j = w.to_json(&sig);
        assert_eq!(j["version"], 1);
        assert_eq!(j["foreground"]["universe"], json!(["e0", "e1"]));
        assert_eq!(j["values"][0]["value"], json!(true));
        assert_eq!(j["relations"][0]["tuples"], json!([["e1"]]));
    }

    #[test]
    fn tuples_are_lexicographic() {
        assert_eq!(tuples(2, 2), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(row_index(3, &[2, 1]), 7);
    }
}
