//! Exists-forall solving of a whole first-order sentence with
//! quantifier-free external queries.
//!
//! Candidates for the existentials come from one incremental solver session
//! that accumulates instances of the matrix; each candidate is verified
//! exactly by a separate query for a counterexample. The foreground and
//! symbol-free empty-theory sorts are embedded as integer ranges
//! `[0, max(1, #existentials of the sort))`; universals of those sorts range
//! over the image of the existentials.
//!
//! Instances come in two kinds. An exact instance fixes every universal to
//! counterexample values. An optimistic instance fixes only the input
//! universals and treats the auxiliary ones (Ackermann variables) as fresh
//! unknowns, with implications whose antecedent mentions them asserted as
//! facts. Optimistic instances are not implied by the matrix, so running out
//! of candidates after one was added gives unknown, not unsat.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use crate::logic::{Formula, Sentence, Signature, SortId, SortKind, Term, Theory, Value, Var, VarId};
use crate::simplify::simplify;

use super::session::Session;
use super::smtlib::{parse_verdict, smt_name, to_value, External, Printer};
use super::QueryVerdict;

#[derive(Clone, Debug)]
pub struct CombinedOptions {
    pub max_iterations: usize,
    pub deadline: Option<Instant>,
}

impl Default for CombinedOptions {
    fn default() -> Self {
        CombinedOptions {
            max_iterations: 100_000,
            deadline: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CombinedStats {
    pub iterations: usize,
    pub exact_instances: usize,
    pub optimistic_instances: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CombinedOutcome {
    /// Values of every existential variable, verified against the matrix.
    Sat(HashMap<VarId, Value>),
    Unsat,
    Unknown(String),
}

fn mentions(f: &Formula, set: &HashSet<VarId>) -> bool {
    let mut m = false;
    f.visit_terms(&mut |t| m |= t.mentions(&|id| set.contains(&id)));
    m
}

fn push_hyps(f: &Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::And(fs) => fs.iter().for_each(|g| push_hyps(g, out)),
        Formula::True => {}
        other => out.push(other.clone()),
    }
}

/// Records `y = t` for an unsubstituted auxiliary `y` and aux-free `t`.
fn learn(h: &Formula, aux: &HashSet<VarId>, subst: &mut HashMap<VarId, Term>) {
    if let Formula::Eq(a, b) = h {
        for (x, t) in [(a, b), (b, a)] {
            if let Term::Var(y) = x {
                if aux.contains(&y.id) && !subst.contains_key(&y.id) && !t.mentions(&|id| aux.contains(&id)) {
                    subst.insert(y.id, t.clone());
                    return;
                }
            }
        }
    }
}

/// Conjuncts of the optimistic reading of `f`; returns whether any
/// antecedent was turned into facts. Guards are read outside in: equalities
/// learned from an outer antecedent are substituted into inner ones first,
/// so an implication whose antecedent no longer mentions auxiliaries stays
/// an implication.
fn flatten(f: &Formula, aux: &HashSet<VarId>, subst: &mut HashMap<VarId, Term>, out: &mut Vec<Formula>) -> bool {
    match f {
        Formula::And(fs) => fs.iter().fold(false, |acc, g| flatten(g, aux, subst, out) | acc),
        Formula::Implies(a, b) => {
            let a = a.substitute(subst);
            if !mentions(&a, aux) {
                out.push(f.clone());
                return false;
            }
            let mut hyps = vec![];
            push_hyps(&a, &mut hyps);
            for h in &hyps {
                learn(h, aux, subst);
            }
            out.extend(hyps);
            flatten(b, aux, subst, out);
            true
        }
        Formula::True => false,
        other => {
            out.push(other.clone());
            false
        }
    }
}

fn collect_vars(fs: &[Formula]) -> Vec<Var> {
    let mut out = vec![];
    for f in fs {
        f.visit_terms(&mut |t| t.collect_vars(&mut out));
    }
    out
}

struct Embedding<'a> {
    sig: &'a Signature,
    /// Range size of each embedded finite sort.
    ranges: HashMap<SortId, u32>,
}

impl Embedding<'_> {
    fn printer(&self) -> Printer<'_> {
        Printer {
            sig: self.sig,
            embed_finite: true,
        }
    }

    fn declare(&self, v: &Var, out: &mut String) {
        let n = smt_name(v);
        out.push_str(&format!("(declare-const {n} {})\n", self.printer().sort(v.sort)));
        if let Some(k) = self.ranges.get(&v.sort) {
            out.push_str(&format!("(assert (and (<= 0 {n}) (< {n} {k})))\n"));
        }
    }

    /// Declares `v` constrained to one of `image`.
    fn declare_in(&self, v: &Var, image: &[u32], out: &mut String) {
        let n = smt_name(v);
        out.push_str(&format!("(declare-const {n} Int)\n"));
        let alts: Vec<String> = image.iter().map(|e| format!("(= {n} {e})")).collect();
        out.push_str(&format!("(assert (or {}))\n", alts.join(" ")));
    }

    fn default_value(&self, v: &Var) -> Value {
        if v.sort == SortId::BOOL {
            Value::Bool(false)
        } else if self.ranges.contains_key(&v.sort) {
            Value::Elem(0)
        } else {
            Value::Num("0".into())
        }
    }
}

fn embeddable(sig: &Signature) -> Result<HashSet<SortId>, String> {
    if sig.funs().next().is_some() || sig.rels().next().is_some() {
        return Err("the combined strategy does not support signature symbols".into());
    }
    let mut finite = HashSet::new();
    for s in sig.sort_ids() {
        match &sig.sort(s).kind {
            SortKind::Bool => {}
            SortKind::Foreground | SortKind::Background(Theory::Empty) => {
                finite.insert(s);
            }
            SortKind::Background(t) if t.smt_sort().is_some() => {}
            SortKind::Background(t) => return Err(format!("the combined strategy cannot embed theory `{}`", t.id())),
        }
    }
    Ok(finite)
}

struct Loop<'a> {
    emb: Embedding<'a>,
    ext: &'a External,
    session: Session,
    exists: Vec<Var>,
    inputs: Vec<Var>,
    aux: Vec<Var>,
    matrix: &'a Formula,
    dynamic: Vec<Formula>,
    asserted: HashSet<String>,
    copies: usize,
    deadline: Option<Instant>,
    /// Everything sent to the candidate session, kept for `--trace`.
    transcript: String,
}

impl Drop for Loop<'_> {
    fn drop(&mut self) {
        if self.ext.trace_dir.is_some() {
            let _ = self.ext.log("candidate", &self.transcript);
        }
    }
}

impl Loop<'_> {
    fn send(&mut self, text: &str) -> Result<(), String> {
        if self.ext.trace_dir.is_some() {
            self.transcript.push_str(text);
        }
        self.session.send(text).map_err(|e| e.to_string())
    }

    fn ask(&mut self, cmd: &str) -> Result<String, String> {
        if self.ext.trace_dir.is_some() {
            self.transcript.push_str(cmd);
            self.transcript.push('\n');
        }
        self.session.ask(cmd, self.deadline).map_err(|e| e.to_string())
    }

    fn assert(&mut self, f: &Formula) -> Result<(), String> {
        let text = self.emb.printer().formula(f)?;
        if self.asserted.insert(text.clone()) {
            self.send(&format!("(assert {text})\n"))?;
        }
        Ok(())
    }

    fn check_candidate(&mut self) -> Result<Option<HashMap<VarId, Term>>, String> {
        let r = self.ask("(check-sat)")?;
        match parse_verdict(&r).verdict {
            QueryVerdict::Unsat => return Ok(None),
            QueryVerdict::Unknown(why) => return Err(why),
            QueryVerdict::Sat(_) => {}
        }
        let mut cand = HashMap::new();
        if self.exists.is_empty() {
            return Ok(Some(cand));
        }
        let names: Vec<String> = self.exists.iter().map(smt_name).collect();
        let r = self.ask(&format!("(get-value ({}))", names.join(" ")))?;
        let values = parse_verdict(&format!("sat\n{r}")).values;
        for (v, n) in self.exists.iter().zip(&names) {
            let text = values
                .iter()
                .find(|(m, _)| m == n)
                .map(|(_, t)| t.as_str())
                .ok_or_else(|| format!("protocol: no value for `{n}`"))?;
            cand.insert(v.id, to_value(self.emb.sig, v.sort, text, true).to_term(v.sort));
        }
        Ok(Some(cand))
    }

    /// Searches for universal values falsifying the matrix under `cand`.
    fn verify(&mut self, cand: &HashMap<VarId, Term>) -> Result<Option<HashMap<VarId, Term>>, String> {
        let neg = simplify(&Formula::not(self.matrix.substitute(cand)));
        if neg == Formula::False {
            return Ok(None);
        }
        let mut images: HashMap<SortId, Vec<u32>> = HashMap::new();
        for v in &self.exists {
            if let Some(Term::Lit(crate::logic::Lit::Elem(_, e))) = cand.get(&v.id) {
                let img = images.entry(v.sort).or_default();
                if !img.contains(e) {
                    img.push(*e);
                }
            }
        }
        let vars = collect_vars(std::slice::from_ref(&neg));
        let mut script = String::from("(set-option :produce-models true)\n(set-logic ALL)\n");
        for v in &vars {
            if self.emb.ranges.contains_key(&v.sort) {
                let img = images.get(&v.sort).cloned().unwrap_or_else(|| vec![0]);
                self.emb.declare_in(v, &img, &mut script);
            } else {
                self.emb.declare(v, &mut script);
            }
        }
        script.push_str(&format!(
            "(assert {})\n(check-sat)\n",
            self.emb.printer().formula(&neg)?
        ));
        if !vars.is_empty() {
            let names: Vec<String> = vars.iter().map(smt_name).collect();
            script.push_str(&format!("(get-value ({}))\n", names.join(" ")));
        }
        let mut ext = self.ext.clone();
        if let Some(d) = self.deadline {
            let left = d.saturating_duration_since(Instant::now());
            ext.timeout = Some(ext.timeout.map_or(left, |t| t.min(left)));
        }
        let out = ext.run("verify", &script).map_err(|e| e.to_string())?;
        let r = parse_verdict(&out);
        match r.verdict {
            QueryVerdict::Unsat => Ok(None),
            QueryVerdict::Unknown(why) => Err(why),
            QueryVerdict::Sat(_) => {
                let mut cex = HashMap::new();
                for v in self.inputs.iter().chain(&self.aux) {
                    let n = smt_name(v);
                    let val = match r.values.iter().find(|(m, _)| *m == n) {
                        Some((_, t)) => to_value(self.emb.sig, v.sort, t, true),
                        None => match images.get(&v.sort) {
                            Some(img) => Value::Elem(img[0]),
                            None => self.emb.default_value(v),
                        },
                    };
                    cex.insert(v.id, val.to_term(v.sort));
                }
                Ok(Some(cex))
            }
        }
    }

    fn exact_instance(&mut self, cex: &HashMap<VarId, Term>) -> Result<(), String> {
        let inst = simplify(&self.matrix.substitute(cex));
        let mut parts = vec![];
        push_hyps(&inst, &mut parts);
        for p in &parts {
            self.assert(p)?;
        }
        Ok(())
    }

    fn optimistic_instance(&mut self, cex: &HashMap<VarId, Term>) -> Result<(), String> {
        self.copies += 1;
        let mut map: HashMap<VarId, Term> = self.inputs.iter().map(|v| (v.id, cex[&v.id].clone())).collect();
        let copies: Vec<Var> = self
            .aux
            .iter()
            .map(|y| Var::new(&format!("{}_i{}", y.name, self.copies), y.sort))
            .collect();
        for (y, c) in self.aux.iter().zip(&copies) {
            map.insert(y.id, c.term());
        }
        let parts: Vec<Formula> = self
            .dynamic
            .iter()
            .map(|f| simplify(&f.substitute(&map)))
            .filter(|f| *f != Formula::True)
            .collect();
        let used: HashSet<VarId> = collect_vars(&parts).into_iter().map(|v| v.id).collect();
        let mut decls = String::new();
        for c in copies.iter().filter(|c| used.contains(&c.id)) {
            self.emb.declare(c, &mut decls);
        }
        if !decls.is_empty() {
            self.send(&decls)?;
        }
        for p in &parts {
            self.assert(p)?;
        }
        Ok(())
    }
}

/// Decides a first-order exists-forall sentence. `aux` holds the universal
/// variables introduced by Ackermannization.
pub fn solve_combined(
    s: &Sentence,
    aux: &HashSet<VarId>,
    sig: &Signature,
    ext: &External,
    opts: &CombinedOptions,
) -> (CombinedOutcome, CombinedStats) {
    let mut stats = CombinedStats::default();
    match run(s, aux, sig, ext, opts, &mut stats) {
        Ok(o) => (o, stats),
        Err(why) => (CombinedOutcome::Unknown(why), stats),
    }
}

fn run(
    s: &Sentence,
    aux_ids: &HashSet<VarId>,
    sig: &Signature,
    ext: &External,
    opts: &CombinedOptions,
    stats: &mut CombinedStats,
) -> Result<CombinedOutcome, String> {
    if !s.is_first_order() {
        return Err("the combined strategy needs a first-order sentence".into());
    }
    let finite = embeddable(sig)?;
    let exists: Vec<Var> = s.exists_vars().cloned().collect();
    let inputs: Vec<Var> = s.forall_vars().filter(|v| !aux_ids.contains(&v.id)).cloned().collect();
    let aux: Vec<Var> = s.forall_vars().filter(|v| aux_ids.contains(&v.id)).cloned().collect();
    let mut ranges = HashMap::new();
    for &f in &finite {
        let n = exists.iter().filter(|v| v.sort == f).count();
        ranges.insert(f, n.max(1) as u32);
    }
    let emb = Embedding { sig, ranges };

    let mut conjuncts = vec![];
    let mut subst: HashMap<VarId, Term> = HashMap::new();
    let optimistic = flatten(&s.matrix, aux_ids, &mut subst, &mut conjuncts);
    let universal: HashSet<VarId> = s.forall_vars().map(|v| v.id).collect();
    let mut statics = vec![];
    let mut dynamic = vec![];
    for c in &conjuncts {
        match simplify(&c.substitute(&subst)) {
            Formula::True => {}
            f if mentions(&f, &universal) => dynamic.push(f),
            f => statics.push(f),
        }
    }

    let session = Session::start(&ext.argv).map_err(|e| e.to_string())?;
    let mut lp = Loop {
        emb,
        ext,
        session,
        exists,
        inputs,
        aux,
        matrix: &s.matrix,
        dynamic,
        asserted: HashSet::new(),
        copies: 0,
        deadline: opts.deadline,
        transcript: String::new(),
    };
    let mut header = String::from("(set-option :produce-models true)\n(set-logic ALL)\n");
    for v in &lp.exists {
        lp.emb.declare(v, &mut header);
    }
    lp.send(&header)?;
    for f in &statics {
        lp.assert(f)?;
    }
    let mut exact = !optimistic;
    let mut seen: HashSet<Vec<Term>> = HashSet::new();
    loop {
        if stats.iterations >= opts.max_iterations {
            return Ok(CombinedOutcome::Unknown(format!(
                "iteration limit {} reached",
                opts.max_iterations
            )));
        }
        if opts.deadline.is_some_and(|d| Instant::now() >= d) {
            return Ok(CombinedOutcome::Unknown("timeout".into()));
        }
        stats.iterations += 1;
        let Some(cand) = lp.check_candidate()? else {
            return Ok(if exact {
                CombinedOutcome::Unsat
            } else {
                CombinedOutcome::Unknown("no candidate left under optimistic instances".into())
            });
        };
        let Some(cex) = lp.verify(&cand)? else {
            let model = lp
                .exists
                .iter()
                .map(|v| {
                    let value = match &cand[&v.id] {
                        Term::Lit(l) => Value::from_lit(l),
                        _ => unreachable!("candidate values are literals"),
                    };
                    (v.id, value)
                })
                .collect();
            return Ok(CombinedOutcome::Sat(model));
        };
        let key: Vec<Term> = lp.inputs.iter().map(|v| cex[&v.id].clone()).collect();
        if lp.aux.is_empty() || !seen.insert(key) {
            stats.exact_instances += 1;
            lp.exact_instance(&cex)?;
        } else {
            stats.optimistic_instances += 1;
            exact = false;
            lp.optimistic_instance(&cex)?;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_keeps_input_guards() {
        let int = SortId(2);
        let (x, y) = (Var::new("x", int), Var::new("y", int));
        let aux: HashSet<VarId> = [y.id].into();
        let zero = Term::num(int, "0");
        let guard = Formula::Rel(crate::logic::Pred::Gt, int, vec![x.term(), zero.clone()]);
        let f = Formula::implies(
            Formula::eq(y.term(), x.term()),
            Formula::And(vec![Formula::implies(
                guard.clone(),
                Formula::eq(y.term(), zero.clone()),
            )]),
        );
        let mut out = vec![];
        let mut subst = HashMap::new();
        assert!(flatten(&f, &aux, &mut subst, &mut out));
        assert_eq!(
            out,
            vec![
                Formula::eq(y.term(), x.term()),
                Formula::implies(guard, Formula::eq(y.term(), zero))
            ]
        );
        assert_eq!(subst.get(&y.id), Some(&x.term()));
    }

    #[test]
    fn inner_guards_see_outer_equalities() {
        let int = SortId(2);
        let (x, y) = (Var::new("x", int), Var::new("y", int));
        let aux: HashSet<VarId> = [y.id].into();
        let one = Term::num(int, "1");
        let inner = Formula::implies(Formula::eq(y.term(), one.clone()), Formula::False);
        let f = Formula::implies(Formula::eq(y.term(), x.term()), inner.clone());
        let (mut out, mut subst) = (vec![], HashMap::new());
        flatten(&f, &aux, &mut subst, &mut out);
        assert_eq!(out, vec![Formula::eq(y.term(), x.term()), inner]);
    }
}
