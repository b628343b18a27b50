use std::collections::{HashMap, HashSet};
use std::fmt::Write;

use crate::logic::{Binder, Formula, Func, Lit, Sentence, Signature, SortKind, Term, VarId};
use crate::sexp::is_simple_symbol;

const RESERVED: &[&str] = &[
    "true", "false", "exists", "forall", "and", "or", "not", "=>", "iff", "=", "distinct", "+", "-", "*", "<", "<=",
    ">", ">=", "Rel", "->", "ite",
];

/// Assigns every bound symbol a unique, parseable display name.
#[derive(Default)]
pub struct Namer {
    names: HashMap<VarId, String>,
    used: HashSet<String>,
}

impl Namer {
    pub fn new(sig: &Signature) -> Self {
        let mut used: HashSet<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        used.extend(sig.funs().map(|f| f.name.to_string()));
        used.extend(sig.rels().map(|r| r.name.to_string()));
        used.extend(sig.sort_ids().map(|s| sig.sort_name(s).to_string()));
        Namer {
            names: HashMap::new(),
            used,
        }
    }

    pub fn name(&mut self, id: VarId, base: &str) -> String {
        if let Some(n) = self.names.get(&id) {
            return n.clone();
        }
        let mut clean: String = base
            .chars()
            .map(|c| {
                if is_simple_symbol(&c.to_string()) || c.is_ascii_digit() {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        if !is_simple_symbol(&clean) {
            clean = format!("v_{clean}");
        }
        let mut cand = clean.clone();
        let mut k = 1;
        while self.used.contains(&cand) {
            cand = format!("{clean}_{k}");
            k += 1;
        }
        self.used.insert(cand.clone());
        self.names.insert(id, cand.clone());
        cand
    }

    fn get(&self, id: VarId, fallback: &str) -> String {
        self.names.get(&id).cloned().unwrap_or_else(|| fallback.to_string())
    }
}

pub fn print_term(t: &Term, names: &Namer, out: &mut String) {
    match t {
        Term::Var(v) => out.push_str(&names.get(v.id, &v.name)),
        Term::Lit(Lit::Bool(b)) => write!(out, "{b}").unwrap(),
        Term::Lit(Lit::Num(_, n)) => out.push_str(n),
        Term::Lit(Lit::Elem(_, e)) => write!(out, "|@{e}|").unwrap(),
        Term::App(Func::User(n), _, args) if args.is_empty() => out.push_str(n),
        Term::App(f, _, args) => {
            out.push('(');
            out.push_str(f.name());
            for a in args {
                out.push(' ');
                print_term(a, names, out);
            }
            out.push(')');
        }
        Term::FApp(f, args) => {
            out.push('(');
            out.push_str(&names.get(f.id, &f.name));
            for a in args {
                out.push(' ');
                print_term(a, names, out);
            }
            out.push(')');
        }
    }
}

fn inline(f: &Formula, names: &Namer, out: &mut String) {
    let app = |out: &mut String, head: &str, ts: &[Term]| {
        out.push('(');
        out.push_str(head);
        for t in ts {
            out.push(' ');
            print_term(t, names, out);
        }
        out.push(')');
    };
    let conn = |out: &mut String, head: &str, fs: &[&Formula]| {
        out.push('(');
        out.push_str(head);
        for g in fs {
            out.push(' ');
            inline(g, names, out);
        }
        out.push(')');
    };
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Eq(a, b) => app(out, "=", &[a.clone(), b.clone()]),
        Formula::Rel(p, _, ts) => app(out, p.name(), ts),
        Formula::RelVar(r, ts) => app(out, &names.get(r.id, &r.name), ts),
        Formula::Not(a) => conn(out, "not", &[a]),
        Formula::And(fs) => conn(out, "and", &fs.iter().collect::<Vec<_>>()),
        Formula::Or(fs) => conn(out, "or", &fs.iter().collect::<Vec<_>>()),
        Formula::Implies(a, b) => conn(out, "=>", &[a, b]),
        Formula::Iff(a, b) => conn(out, "iff", &[a, b]),
    }
}

fn pretty(f: &Formula, names: &Namer, indent: usize, out: &mut String) {
    let kids = f.children();
    if kids.is_empty() || f.size() <= 8 {
        inline(f, names, out);
        return;
    }
    let head = match f {
        Formula::Not(_) => "not",
        Formula::And(_) => "and",
        Formula::Or(_) => "or",
        Formula::Implies(..) => "=>",
        _ => "iff",
    };
    out.push('(');
    out.push_str(head);
    for k in kids {
        out.push('\n');
        out.push_str(&" ".repeat(indent + 2));
        pretty(k, names, indent + 2, out);
    }
    out.push(')');
}

/// Formula text; multi-line for large formulas.
pub fn print_formula(f: &Formula, names: &Namer) -> String {
    let mut out = String::new();
    pretty(f, names, 0, &mut out);
    out
}

fn binder_list(bs: &[Binder], sig: &Signature, names: &mut Namer) -> String {
    let mut out = String::from("(");
    for (i, b) in bs.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let n = names.name(b.id(), b.name());
        match b {
            Binder::Var(v) => write!(out, "({n} {})", sig.sort_name(v.sort)).unwrap(),
            Binder::Fun(f) => {
                write!(out, "({n} (->").unwrap();
                for a in f.args.iter() {
                    write!(out, " {}", sig.sort_name(*a)).unwrap();
                }
                write!(out, " {}))", sig.sort_name(f.result)).unwrap();
            }
            Binder::Rel(r) => {
                write!(out, "({n} (Rel").unwrap();
                for a in r.args.iter() {
                    write!(out, " {}", sig.sort_name(*a)).unwrap();
                }
                out.push_str("))");
            }
        }
    }
    out.push(')');
    out
}

/// `(assert-eqsmt ...)` form of a sentence. Empty blocks print without a quantifier wrapper.
pub fn print_sentence(s: &Sentence, sig: &Signature) -> String {
    let mut names = Namer::new(sig);
    let ex = binder_list(&s.exists, sig, &mut names);
    let fa = binder_list(&s.forall, sig, &mut names);
    let mut out = String::from("(assert-eqsmt");
    let mut depth = 1;
    let mut indent = 2;
    if !s.exists.is_empty() {
        write!(out, "\n{}(exists {ex}", " ".repeat(indent)).unwrap();
        depth += 1;
        indent += 2;
    }
    if !s.forall.is_empty() {
        write!(out, "\n{}(forall {fa}", " ".repeat(indent)).unwrap();
        depth += 1;
        indent += 2;
    }
    let mut body = String::new();
    pretty(&s.matrix, &names, indent, &mut body);
    write!(out, "\n{}{body}", " ".repeat(indent)).unwrap();
    out.push_str(&")".repeat(depth));
    out.push('\n');
    out
}

/// Declarations followed by one `assert-eqsmt` per sentence; parses back with [`super::parse`].
pub fn print_problem(sig: &Signature, sentences: &[Sentence]) -> String {
    let mut out = String::new();
    for id in sig.sort_ids() {
        let s = sig.sort(id);
        match &s.kind {
            SortKind::Bool => {}
            SortKind::Foreground => writeln!(out, "(declare-sort {} :foreground)", s.name).unwrap(),
            SortKind::Background(t) => writeln!(out, "(declare-sort {} :background {})", s.name, t.id()).unwrap(),
        }
    }
    for f in sig.funs() {
        let args: Vec<&str> = f.args.iter().map(|a| sig.sort_name(*a)).collect();
        writeln!(
            out,
            "(declare-fun {} ({}) {})",
            f.name,
            args.join(" "),
            sig.sort_name(f.result)
        )
        .unwrap();
    }
    for r in sig.rels() {
        let args: Vec<&str> = r.args.iter().map(|a| sig.sort_name(*a)).collect();
        writeln!(out, "(declare-rel {} ({}))", r.name, args.join(" ")).unwrap();
    }
    for s in sentences {
        out.push_str(&print_sentence(s, sig));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn round_trip(text: &str) {
        let p = parse(text).unwrap();
        let printed = print_problem(&p.sig, &p.sentences);
        let q = parse(&printed).unwrap_or_else(|e| panic!("{e}\n{printed}"));
        assert_eq!(print_problem(&q.sig, &q.sentences), printed);
    }

    #[test]
    fn empty_forall_block_has_no_wrapper() {
        let p = parse("(declare-sort FG :foreground)(assert-eqsmt (exists ((a FG)) (= a a)))").unwrap();
        let out = print_problem(&p.sig, &p.sentences);
        assert!(!out.contains("forall"));
        assert!(out.contains("(exists ((a FG))"));
    }

    #[test]
    fn boolean_constants() {
        let p = parse("(declare-sort FG :foreground)(assert-eqsmt (exists ((p Bool)) (or (= p true) (= p false))))")
            .unwrap();
        let out = print_problem(&p.sig, &p.sentences);
        assert!(out.contains("(= p true)") && out.contains("(= p false)"));
    }

    #[test]
    fn clashing_names_are_disambiguated() {
        let p = parse(
            "(declare-sort FG :foreground)
             (assert-eqsmt (exists ((x FG)) (forall ((y FG)) (= x y))))
             (assert-eqsmt (exists ((x FG)) (= x x)))",
        )
        .unwrap();
        let s = p.sentence();
        let out = print_problem(&p.sig, &[s]);
        assert!(out.contains("(x FG) (x_1 FG)"), "{out}");
        round_trip(&out);
    }

    #[test]
    fn golden_round_trips() {
        round_trip(
            "(declare-sort FG :foreground)
             (declare-sort Int :background lia)
             (declare-sort L :background empty)
             (declare-fun k () Int)
             (declare-rel P (Int Int))
             (assert-eqsmt
               (exists ((a FG) (b FG) (F (-> FG Int)) (R (Rel FG FG)) (l L))
                 (forall ((y FG) (x Int) (G (-> Int Int)) (Q (Rel Int)))
                   (and (=> (R a y) (< (F a) (+ (F y) -3 k)))
                        (iff (Q x) (P (G x) (- x)))
                        (not (= l l))
                        (or)
                        (and)))))",
        );
    }
}
