use std::collections::hash_map::DefaultHasher;
use std::fs;
use std::hash::{Hash, Hasher};
use std::path::PathBuf;
use std::time::Duration;

use crate::logic::{Formula, Func, Lit, Pred, Signature, SortId, SortKind, Term, Theory, Value, Var};
use crate::sexp::{is_simple_symbol, parse_all, Sexp};

use super::session::{run_script, RunError};
use super::{Backend, QueryVerdict, SortModel, TheoryQuery};

/// Default per-query timeout.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

/// SMT-LIB name of a bound variable: sanitized display name plus id.
pub fn smt_name(v: &Var) -> String {
    let mut s: String = v
        .name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        s.insert(0, 'v');
    }
    format!("{s}_{}", v.id.raw())
}

fn symbol(name: &str) -> String {
    if is_simple_symbol(name) {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

/// Prints terms and formulas as SMT-LIB 2.
///
/// With `embed_finite`, the foreground and empty-theory sorts are printed as
/// `Int` and their elements as numerals.
#[derive(Clone, Copy)]
pub struct Printer<'a> {
    pub sig: &'a Signature,
    pub embed_finite: bool,
}

impl Printer<'_> {
    fn is_finite_like(&self, s: SortId) -> bool {
        matches!(
            self.sig.sort(s).kind,
            SortKind::Foreground | SortKind::Background(Theory::Empty)
        )
    }

    fn is_real(&self, s: SortId) -> bool {
        self.sig.theory(s).and_then(|t| t.smt_sort()) == Some("Real")
    }

    pub fn sort(&self, s: SortId) -> String {
        if s == SortId::BOOL {
            return "Bool".into();
        }
        if self.embed_finite && self.is_finite_like(s) {
            return "Int".into();
        }
        match self.sig.theory(s).and_then(|t| t.smt_sort()) {
            Some(n) => n.into(),
            None => symbol(self.sig.sort_name(s)),
        }
    }

    /// Sorts that must be introduced with `declare-sort`.
    pub fn declared_sorts(&self, sorts: &[SortId]) -> Vec<SortId> {
        let mut out: Vec<SortId> = vec![];
        for &s in sorts {
            let native = s == SortId::BOOL
                || (self.embed_finite && self.is_finite_like(s))
                || self.sig.theory(s).and_then(|t| t.smt_sort()).is_some();
            if !native && !out.contains(&s) {
                out.push(s);
            }
        }
        out
    }

    pub fn numeral(&self, sort: SortId, text: &str) -> String {
        if let Some(rest) = text.strip_prefix('-') {
            return format!("(- {})", self.numeral(sort, rest));
        }
        if let Some((n, d)) = text.split_once('/') {
            return format!("(/ {} {})", self.numeral(sort, n), self.numeral(sort, d));
        }
        if self.is_real(sort) && !text.contains('.') {
            format!("{text}.0")
        } else {
            text.to_string()
        }
    }

    pub fn term(&self, t: &Term, out: &mut String) -> Result<(), String> {
        match t {
            Term::Var(v) => out.push_str(&smt_name(v)),
            Term::Lit(Lit::Bool(b)) => out.push_str(if *b { "true" } else { "false" }),
            Term::Lit(Lit::Num(s, n)) => out.push_str(&self.numeral(*s, n)),
            Term::Lit(Lit::Elem(s, e)) => {
                if !self.embed_finite {
                    return Err(format!("element constant of sort {}", self.sig.sort_name(*s)));
                }
                out.push_str(&e.to_string())
            }
            Term::App(f, _, args) if args.is_empty() => out.push_str(&symbol(f.name())),
            Term::App(f, _, args) => {
                out.push('(');
                out.push_str(&match f {
                    Func::User(n) => symbol(n),
                    other => other.name().to_string(),
                });
                for a in args {
                    out.push(' ');
                    self.term(a, out)?;
                }
                out.push(')');
            }
            Term::FApp(f, _) => return Err(format!("function variable `{}` in a first-order query", f.name)),
        }
        Ok(())
    }

    fn list(&self, head: &str, fs: &[&Formula], out: &mut String) -> Result<(), String> {
        out.push('(');
        out.push_str(head);
        for f in fs {
            out.push(' ');
            self.formula_into(f, out)?;
        }
        out.push(')');
        Ok(())
    }

    fn formula_into(&self, f: &Formula, out: &mut String) -> Result<(), String> {
        match f {
            Formula::True => out.push_str("true"),
            Formula::False => out.push_str("false"),
            Formula::Eq(a, b) => {
                out.push_str("(= ");
                self.term(a, out)?;
                out.push(' ');
                self.term(b, out)?;
                out.push(')');
            }
            Formula::Rel(p, _, ts) => {
                let head = match p {
                    Pred::User(n) => symbol(n),
                    other => other.name().to_string(),
                };
                if ts.is_empty() {
                    out.push_str(&head);
                } else {
                    out.push('(');
                    out.push_str(&head);
                    for t in ts {
                        out.push(' ');
                        self.term(t, out)?;
                    }
                    out.push(')');
                }
            }
            Formula::RelVar(r, _) => return Err(format!("relation variable `{}` in a first-order query", r.name)),
            Formula::Not(a) => self.list("not", &[a], out)?,
            Formula::And(fs) if fs.is_empty() => out.push_str("true"),
            Formula::Or(fs) if fs.is_empty() => out.push_str("false"),
            Formula::And(fs) if fs.len() == 1 => self.formula_into(&fs[0], out)?,
            Formula::Or(fs) if fs.len() == 1 => self.formula_into(&fs[0], out)?,
            Formula::And(fs) => self.list("and", &fs.iter().collect::<Vec<_>>(), out)?,
            Formula::Or(fs) => self.list("or", &fs.iter().collect::<Vec<_>>(), out)?,
            Formula::Implies(a, b) => self.list("=>", &[a, b], out)?,
            Formula::Iff(a, b) => self.list("=", &[a, b], out)?,
        }
        Ok(())
    }

    pub fn formula(&self, f: &Formula) -> Result<String, String> {
        let mut out = String::new();
        self.formula_into(f, &mut out)?;
        Ok(out)
    }

    /// `declare-sort` for uninterpreted sorts plus every signature symbol over them.
    pub fn declarations(&self, sorts: &[SortId], out: &mut String) {
        for s in self.declared_sorts(sorts) {
            out.push_str(&format!("(declare-sort {} 0)\n", self.sort(s)));
        }
        for f in self.sig.funs() {
            if sorts.contains(&f.result) {
                let args: Vec<String> = f.args.iter().map(|&a| self.sort(a)).collect();
                out.push_str(&format!(
                    "(declare-fun {} ({}) {})\n",
                    symbol(&f.name),
                    args.join(" "),
                    self.sort(f.result)
                ));
            }
        }
        for r in self.sig.rels() {
            if r.args.first().is_some_and(|a| sorts.contains(a)) {
                let args: Vec<String> = r.args.iter().map(|&a| self.sort(a)).collect();
                out.push_str(&format!(
                    "(declare-fun {} ({}) Bool)\n",
                    symbol(&r.name),
                    args.join(" ")
                ));
            }
        }
    }

    pub fn binders(&self, vars: &[Var]) -> String {
        vars.iter()
            .map(|v| format!("({} {})", smt_name(v), self.sort(v.sort)))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Script for a single-sorted query: existentials as constants, one
/// quantified assertion, `check-sat` and `get-value`.
pub fn query_script(q: &TheoryQuery, sig: &Signature, logic: Option<&str>) -> Result<String, String> {
    let p = Printer {
        sig,
        embed_finite: false,
    };
    let logic = logic.unwrap_or_else(|| sig.theory(q.sort).map_or("UF", |t| t.logic()));
    let mut out = format!("(set-option :produce-models true)\n(set-logic {logic})\n");
    p.declarations(&[q.sort], &mut out);
    for v in &q.exists {
        out.push_str(&format!("(declare-const {} {})\n", smt_name(v), p.sort(v.sort)));
    }
    let body = p.formula(&q.matrix())?;
    if q.forall.is_empty() {
        out.push_str(&format!("(assert {body})\n"));
    } else {
        out.push_str(&format!("(assert (forall ({}) {body}))\n", p.binders(&q.forall)));
    }
    out.push_str("(check-sat)\n");
    if !q.exists.is_empty() {
        let names: Vec<String> = q.exists.iter().map(smt_name).collect();
        out.push_str(&format!("(get-value ({}))\n", names.join(" ")));
    }
    out.push_str("(exit)\n");
    Ok(out)
}

fn value_text(s: &Sexp) -> Option<String> {
    match s {
        Sexp::Atom(a, _) => Some(a.clone()),
        Sexp::List(items, _) => match (items.first().and_then(Sexp::atom), items.len()) {
            (Some("-"), 2) => value_text(&items[1]).map(|v| match v.strip_prefix('-') {
                Some(pos) => pos.to_string(),
                None => format!("-{v}"),
            }),
            (Some("/"), 3) => {
                let (n, d) = (value_text(&items[1])?, value_text(&items[2])?);
                let (neg, n) = match n.strip_prefix('-') {
                    Some(n) => (true, n.to_string()),
                    None => (false, n),
                };
                let frac = format!("{}/{}", n.trim_end_matches(".0"), d.trim_end_matches(".0"));
                Some(if neg { format!("-{frac}") } else { frac })
            }
            _ => None,
        },
        Sexp::Str(..) => None,
    }
}

/// Solver answer with `get-value` results as `(name, value text)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Response {
    pub verdict: QueryVerdict,
    pub values: Vec<(String, String)>,
}

/// Parses a solver transcript: the first `sat`/`unsat`/`unknown`, then the
/// `get-value` list when sat. Errors before the verdict make it unknown.
pub fn parse_verdict(out: &str) -> Response {
    let unknown = |why: String| Response {
        verdict: QueryVerdict::Unknown(why),
        values: vec![],
    };
    let items = match parse_all(out) {
        Ok(i) => i,
        Err(e) => return unknown(format!("protocol: unparsable output ({e}): {}", out.trim())),
    };
    let mut it = items.iter();
    for s in it.by_ref() {
        match s.atom() {
            Some("sat") => {
                let mut values = vec![];
                if let Some(Sexp::List(pairs, _)) = it.next() {
                    for p in pairs {
                        let Some([name, val]) = p.list().and_then(|l| <&[Sexp; 2]>::try_from(l).ok()) else {
                            continue;
                        };
                        if let (Some(n), Some(v)) = (name.atom(), value_text(val)) {
                            values.push((n.to_string(), v));
                        }
                    }
                }
                return Response {
                    verdict: QueryVerdict::Sat(SortModel::default()),
                    values,
                };
            }
            Some("unsat") => {
                return Response {
                    verdict: QueryVerdict::Unsat,
                    values: vec![],
                }
            }
            Some("unknown") => return unknown("solver returned unknown".into()),
            _ if s.head() == Some("error") => {
                let msg = s.list().and_then(|l| l.get(1)).map_or(String::new(), |m| match m {
                    Sexp::Str(t, _) | Sexp::Atom(t, _) => t.clone(),
                    other => other.to_string(),
                });
                return unknown(format!("solver error: {msg}"));
            }
            _ => {}
        }
    }
    unknown(format!("protocol: no verdict in output: {}", out.trim()))
}

/// Converts a solver value of `sort` into a model value.
pub fn to_value(sig: &Signature, sort: SortId, text: &str, embed_finite: bool) -> Value {
    if sort == SortId::BOOL {
        return Value::Bool(text == "true");
    }
    let finite_like = matches!(
        sig.sort(sort).kind,
        SortKind::Foreground | SortKind::Background(Theory::Empty)
    );
    match (finite_like && embed_finite, text.parse::<u32>()) {
        (true, Ok(e)) => Value::Elem(e),
        _ => Value::Num(text.trim_end_matches(".0").into()),
    }
}

/// External SMT-LIB 2 solver reading a script on stdin, e.g. `z3 -in`.
#[derive(Clone, Debug)]
pub struct External {
    pub argv: Vec<String>,
    pub timeout: Option<Duration>,
    /// Overrides the logic derived from the theory id.
    pub logic: Option<String>,
    /// Directory receiving `query-<sort>-<hash>.smt2` files.
    pub trace_dir: Option<PathBuf>,
}

impl External {
    pub fn from_command(cmd: &str) -> Result<External, String> {
        let argv = shlex::split(cmd).ok_or_else(|| format!("cannot split backend command `{cmd}`"))?;
        if argv.is_empty() {
            return Err("empty backend command".into());
        }
        Ok(External {
            argv,
            timeout: Some(DEFAULT_TIMEOUT),
            logic: None,
            trace_dir: None,
        })
    }

    pub fn command(&self) -> String {
        shlex::try_join(self.argv.iter().map(String::as_str)).unwrap_or_else(|_| self.argv.join(" "))
    }

    /// Writes `query-<label>-<hash>.smt2` under the trace directory.
    pub fn log(&self, label: &str, script: &str) -> std::io::Result<()> {
        let Some(dir) = &self.trace_dir else { return Ok(()) };
        let mut h = DefaultHasher::new();
        script.hash(&mut h);
        let label: String = label
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect();
        fs::write(dir.join(format!("query-{label}-{:016x}.smt2", h.finish())), script)
    }

    /// Runs a complete script, logging it under the trace directory.
    pub fn run(&self, label: &str, script: &str) -> Result<String, RunError> {
        let _ = self.log(label, script);
        run_script(&self.argv, script, self.timeout)
    }
}

impl Backend for External {
    fn name(&self) -> String {
        self.command()
    }

    fn solve(&self, q: &TheoryQuery, sig: &Signature) -> QueryVerdict {
        let script = match query_script(q, sig, self.logic.as_deref()) {
            Ok(s) => s,
            Err(e) => return QueryVerdict::Unknown(e),
        };
        let out = match self.run(sig.sort_name(q.sort), &script) {
            Ok(o) => o,
            Err(e) => return QueryVerdict::Unknown(e.to_string()),
        };
        let r = parse_verdict(&out);
        match r.verdict {
            QueryVerdict::Sat(_) => {
                let mut values = vec![];
                for v in &q.exists {
                    let name = smt_name(v);
                    match r.values.iter().find(|(n, _)| *n == name) {
                        Some((_, text)) => values.push((v.clone(), to_value(sig, v.sort, text, false))),
                        None => return QueryVerdict::Unknown(format!("protocol: no value for `{name}`")),
                    }
                }
                QueryVerdict::Sat(SortModel { values })
            }
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::SortKind;

    fn lia() -> (Signature, SortId) {
        let mut sig = Signature::new();
        let int = sig.add_sort("Int", SortKind::Background(Theory::Lia)).unwrap();
        (sig, int)
    }

    #[test]
    fn numerals() {
        let mut sig = Signature::new();
        let int = sig.add_sort("Int", SortKind::Background(Theory::Lia)).unwrap();
        let real = sig.add_sort("Real", SortKind::Background(Theory::Lra)).unwrap();
        let p = Printer {
            sig: &sig,
            embed_finite: false,
        };
        assert_eq!(p.numeral(int, "-16"), "(- 16)");
        assert_eq!(p.numeral(real, "2"), "2.0");
        assert_eq!(p.numeral(real, "-1/2"), "(- (/ 1.0 2.0))");
    }

    #[test]
    fn script_shape() {
        let (sig, int) = lia();
        let x = Var::new("x", int);
        let y = Var::new("y", int);
        let q = TheoryQuery {
            sort: int,
            exists: vec![x.clone()],
            forall: vec![y.clone()],
            clauses: vec![vec![
                Formula::Rel(Pred::Le, int, vec![x.term(), y.term()]),
                Formula::Rel(Pred::Lt, int, vec![y.term(), Term::num(int, "0")]),
            ]],
        };
        let s = query_script(&q, &sig, None).unwrap();
        let (xn, yn) = (smt_name(&x), smt_name(&y));
        assert!(s.contains("(set-logic LIA)"));
        assert!(s.contains(&format!("(declare-const {xn} Int)")));
        assert!(s.contains(&format!(
            "(assert (forall (({yn} Int)) (or (<= {xn} {yn}) (< {yn} 0))))"
        )));
        assert!(s.contains(&format!("(get-value ({xn}))")));
    }

    #[test]
    fn names_are_sanitized_and_unique() {
        let a = Var::new("x^F a", SortId::BOOL);
        let b = Var::new("x^F a", SortId::BOOL);
        assert!(is_simple_symbol(&smt_name(&a)));
        assert_ne!(smt_name(&a), smt_name(&b));
        assert!(smt_name(&Var::new("1x", SortId::BOOL)).starts_with('v'));
    }

    #[test]
    fn responses() {
        let r = parse_verdict("sat\n((x_1 (- 16))\n (y_2 (/ 1.0 2.0)) (b_3 true))\n");
        assert!(matches!(r.verdict, QueryVerdict::Sat(_)));
        assert_eq!(
            r.values,
            vec![
                ("x_1".into(), "-16".into()),
                ("y_2".into(), "1/2".into()),
                ("b_3".into(), "true".into())
            ]
        );
        assert_eq!(
            parse_verdict("unsat\n(error \"model is not available\")").verdict,
            QueryVerdict::Unsat
        );
        assert!(matches!(parse_verdict("unknown").verdict, QueryVerdict::Unknown(_)));
        let e = parse_verdict("(error \"line 3: logic does not support nonlinear arithmetic\")\nsat\n");
        assert!(matches!(e.verdict, QueryVerdict::Unknown(ref m) if m.contains("nonlinear")));
        assert!(matches!(parse_verdict("garbage").verdict, QueryVerdict::Unknown(_)));
    }

    #[test]
    fn fake_solver_round_trip() {
        let (sig, int) = lia();
        let x = Var::new("x", int);
        let q = TheoryQuery {
            sort: int,
            exists: vec![x.clone()],
            forall: vec![],
            clauses: vec![vec![Formula::Rel(Pred::Lt, int, vec![x.term(), Term::num(int, "0")])]],
        };
        let cmd = format!("sh -c 'cat > /dev/null; echo sat; echo \"(({} (- 3)))\"'", smt_name(&x));
        let ext = External::from_command(&cmd).unwrap();
        assert_eq!(
            ext.solve(&q, &sig),
            QueryVerdict::Sat(SortModel {
                values: vec![(x, Value::Num("-3".into()))]
            })
        );
    }
}
