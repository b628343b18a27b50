use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use super::formula::{Formula, Pred};
use super::sentence::{Binder, Sentence};
use super::sort::{Signature, SortId};
use super::term::{Func, Lit, Term, VarId};

/// Well-formedness rule violated by a sentence or signature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    NoForeground,
    ImpureSymbol,
    ForegroundSymbol,
    ExistsRelOverBackground,
    ExistsFunForegroundRange,
    ExistsFunNonForegroundDomain,
    NullarySecondOrder,
    DuplicateBinder,
    Unbound,
    IllSorted,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::NoForeground => "signature without foreground sort",
            Rule::ImpureSymbol => "symbol over more than one sort",
            Rule::ForegroundSymbol => "symbol involving the foreground sort",
            Rule::ExistsRelOverBackground => "existential relation variable over background sort",
            Rule::ExistsFunForegroundRange => "existential function variable with foreground range",
            Rule::ExistsFunNonForegroundDomain => "existential function variable over non-foreground domain",
            Rule::NullarySecondOrder => "function or relation variable without arguments",
            Rule::DuplicateBinder => "symbol bound twice",
            Rule::Unbound => "unbound symbol",
            Rule::IllSorted => "ill-sorted term or atom",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub rule: Rule,
    pub symbol: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.symbol.as_str() {
            "" => write!(f, "{}: {}", self.rule, self.message),
            sym => write!(f, "{} `{}`: {}", self.rule, sym, self.message),
        }
    }
}

/// Ill-sorted term; `path` lists child indices from the root to the culprit.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("ill-sorted term at path {path:?}: {message}")]
pub struct SortError {
    pub path: Vec<usize>,
    pub message: String,
}

fn sort_err(path: &[usize], message: String) -> SortError {
    SortError {
        path: path.to_vec(),
        message,
    }
}

/// Sort of a term, checking every application against the signature.
pub fn sort_of(t: &Term, sig: &Signature) -> Result<SortId, SortError> {
    let mut path = vec![];
    sort_at(t, sig, &mut path)
}

fn check_args(
    args: &[Term],
    expected: &[SortId],
    name: &str,
    sig: &Signature,
    path: &mut Vec<usize>,
) -> Result<(), SortError> {
    if args.len() != expected.len() {
        return Err(sort_err(
            path,
            format!("`{name}` expects {} arguments, got {}", expected.len(), args.len()),
        ));
    }
    for (i, (a, &want)) in args.iter().zip(expected).enumerate() {
        path.push(i);
        let got = sort_at(a, sig, path)?;
        if got != want {
            return Err(sort_err(
                path,
                format!(
                    "argument of `{name}` has sort {} but {} is expected",
                    sig.sort_name(got),
                    sig.sort_name(want)
                ),
            ));
        }
        path.pop();
    }
    Ok(())
}

fn sort_at(t: &Term, sig: &Signature, path: &mut Vec<usize>) -> Result<SortId, SortError> {
    match t {
        Term::Var(v) => Ok(v.sort),
        Term::Lit(Lit::Bool(_)) => Ok(SortId::BOOL),
        Term::Lit(Lit::Num(s, n)) => {
            if sig.is_arithmetic(*s) {
                Ok(*s)
            } else {
                Err(sort_err(
                    path,
                    format!("numeral {n} in non-arithmetic sort {}", sig.sort_name(*s)),
                ))
            }
        }
        Term::Lit(Lit::Elem(s, _)) => {
            if sig.is_finite(*s) {
                Ok(*s)
            } else {
                Err(sort_err(path, "element constant in an infinite sort".into()))
            }
        }
        Term::App(Func::User(name), s, args) => {
            let decl = sig
                .fun(name)
                .ok_or_else(|| sort_err(path, format!("unknown function symbol `{name}`")))?;
            check_args(args, &decl.args, name, sig, path)?;
            if decl.result != *s {
                return Err(sort_err(path, format!("result sort of `{name}` mismatch")));
            }
            Ok(*s)
        }
        Term::App(op, s, args) => {
            if !sig.is_arithmetic(*s) {
                return Err(sort_err(
                    path,
                    format!("`{}` used outside an arithmetic sort", op.name()),
                ));
            }
            let ok_arity = match op {
                Func::Neg => args.len() == 1,
                _ => args.len() >= 2,
            };
            if !ok_arity {
                return Err(sort_err(path, format!("bad arity for `{}`", op.name())));
            }
            let expected = vec![*s; args.len()];
            check_args(args, &expected, op.name(), sig, path)?;
            Ok(*s)
        }
        Term::FApp(f, args) => {
            check_args(args, &f.args, &f.name, sig, path)?;
            Ok(f.result)
        }
    }
}

/// Sort of an atom; `None` for `true`/`false`.
pub fn sort_of_atom_checked(a: &Formula, sig: &Signature) -> Result<Option<SortId>, SortError> {
    let mut path = vec![];
    match a {
        Formula::True | Formula::False => Ok(None),
        Formula::Eq(x, y) => {
            path.push(0);
            let sx = sort_at(x, sig, &mut path)?;
            path[0] = 1;
            let sy = sort_at(y, sig, &mut path)?;
            if sx != sy {
                return Err(sort_err(
                    &[],
                    format!("equality between sorts {} and {}", sig.sort_name(sx), sig.sort_name(sy)),
                ));
            }
            Ok(Some(sx))
        }
        Formula::Rel(Pred::User(name), s, ts) => {
            let decl = sig
                .rel(name)
                .ok_or_else(|| sort_err(&[], format!("unknown relation symbol `{name}`")))?;
            check_args(ts, &decl.args, name, sig, &mut path)?;
            Ok(Some(*s))
        }
        Formula::Rel(p, s, ts) => {
            if !sig.is_arithmetic(*s) || ts.len() != 2 {
                return Err(sort_err(&[], format!("bad use of `{}`", p.name())));
            }
            check_args(ts, &[*s, *s], p.name(), sig, &mut path)?;
            Ok(Some(*s))
        }
        Formula::RelVar(r, ts) => {
            check_args(ts, &r.args, &r.name, sig, &mut path)?;
            r.args
                .first()
                .copied()
                .map(Some)
                .ok_or_else(|| sort_err(&[], "nullary relation".into()))
        }
        _ => Ok(None),
    }
}

/// Purity diagnostics for the signature itself.
pub fn validate_signature(sig: &Signature) -> Vec<Diagnostic> {
    let mut out = vec![];
    let fg = sig.foreground();
    if fg.is_none() {
        out.push(Diagnostic {
            rule: Rule::NoForeground,
            symbol: String::new(),
            message: "declare one sort with `:foreground`".into(),
        });
    }
    let mut check = |name: &str, sorts: Vec<SortId>| {
        if sorts.windows(2).any(|w| w[0] != w[1]) {
            out.push(Diagnostic {
                rule: Rule::ImpureSymbol,
                symbol: name.into(),
                message: "all argument and result sorts must coincide".into(),
            });
        }
        if sorts.iter().any(|s| Some(*s) == fg) {
            out.push(Diagnostic {
                rule: Rule::ForegroundSymbol,
                symbol: name.into(),
                message: "the foreground sort carries no symbols".into(),
            });
        }
    };
    for f in sig.funs() {
        let mut sorts = f.args.clone();
        sorts.push(f.result);
        check(&f.name, sorts);
    }
    for r in sig.rels() {
        check(&r.name, r.args.clone());
    }
    out
}

/// All well-formedness diagnostics; empty iff `s` is an EQSMT sentence over a pure signature.
pub fn validate(s: &Sentence, sig: &Signature) -> Vec<Diagnostic> {
    let mut out = validate_signature(sig);
    let fg = sig.foreground();
    let is_fg = |x: &SortId| Some(*x) == fg;
    let mut bound: HashSet<VarId> = HashSet::new();
    let diag = |rule, symbol: &str, message: String| Diagnostic {
        rule,
        symbol: symbol.to_string(),
        message,
    };

    for (b, existential) in s
        .exists
        .iter()
        .map(|b| (b, true))
        .chain(s.forall.iter().map(|b| (b, false)))
    {
        if !bound.insert(b.id()) {
            out.push(diag(Rule::DuplicateBinder, b.name(), "bound twice".into()));
        }
        match b {
            Binder::Var(_) => {}
            Binder::Rel(r) => {
                if r.args.is_empty() {
                    out.push(diag(Rule::NullarySecondOrder, &r.name, "use a boolean variable".into()));
                }
                if existential && !r.args.iter().all(is_fg) {
                    out.push(diag(
                        Rule::ExistsRelOverBackground,
                        &r.name,
                        "existential relations range over foreground tuples".into(),
                    ));
                }
            }
            Binder::Fun(f) => {
                if f.args.is_empty() {
                    out.push(diag(
                        Rule::NullarySecondOrder,
                        &f.name,
                        "use a first-order variable".into(),
                    ));
                }
                if existential && is_fg(&f.result) {
                    out.push(diag(
                        Rule::ExistsFunForegroundRange,
                        &f.name,
                        "existential functions return a background or boolean value".into(),
                    ));
                }
                if existential && !f.args.iter().all(is_fg) {
                    out.push(diag(
                        Rule::ExistsFunNonForegroundDomain,
                        &f.name,
                        "existential functions take foreground arguments".into(),
                    ));
                }
            }
        }
    }

    let unbound = |id: VarId, name: &str, out: &mut Vec<Diagnostic>| {
        if !bound.contains(&id) && !out.iter().any(|d| d.rule == Rule::Unbound && d.symbol == name) {
            out.push(diag(Rule::Unbound, name, "not quantified in this sentence".into()));
        }
    };
    s.matrix.visit_atoms(&mut |a| {
        if let Formula::RelVar(r, _) = a {
            unbound(r.id, &r.name, &mut out);
        }
        if let Err(e) = sort_of_atom_checked(a, sig) {
            out.push(diag(Rule::IllSorted, &atom_head(a), e.to_string()));
        }
    });
    s.matrix.visit_terms(&mut |t| {
        t.visit(&mut |u| match u {
            Term::Var(v) => unbound(v.id, &v.name, &mut out),
            Term::FApp(f, _) => unbound(f.id, &f.name, &mut out),
            _ => {}
        })
    });
    out
}

fn atom_head(a: &Formula) -> String {
    match a {
        Formula::Eq(..) => "=".into(),
        Formula::Rel(p, _, _) => p.name().into(),
        Formula::RelVar(r, _) => r.name.to_string(),
        _ => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{FunVar, RelVar, SortKind, Theory, Var};

    fn sig() -> (Signature, SortId, SortId) {
        let (mut sig, fg) = Signature::with_foreground();
        let int = sig.add_sort("Int", SortKind::Background(Theory::Lia)).unwrap();
        (sig, fg, int)
    }

    #[test]
    fn sort_of_cases() {
        let (sig, fg, int) = sig();
        let a = Var::new("a", fg);
        let x = Var::new("x", int);
        assert_eq!(sort_of(&a.term(), &sig), Ok(fg));
        let plus = Term::App(Func::Add, int, vec![x.term(), Term::num(int, "1")]);
        assert_eq!(sort_of(&plus, &sig), Ok(int));
        let f = FunVar::new("F", vec![fg], int);
        assert_eq!(sort_of(&f.apply(vec![a.term()]), &sig), Ok(int));
    }

    #[test]
    fn sort_of_reports_path() {
        let (sig, fg, int) = sig();
        let a = Var::new("a", fg);
        let x = Var::new("x", int);
        let bad = Term::App(Func::Add, int, vec![x.term(), a.term()]);
        let err = sort_of(&bad, &sig).unwrap_err();
        assert_eq!(err.path, vec![1]);
    }

    #[test]
    fn existential_function_with_foreground_range() {
        let (sig, fg, _) = sig();
        let f = FunVar::new("F", vec![fg], fg);
        let a = Var::new("a", fg);
        let s = Sentence::new(
            vec![Binder::Var(a.clone()), Binder::Fun(f.clone())],
            vec![],
            Formula::eq(f.apply(vec![a.term()]), a.term()),
        );
        let d = validate(&s, &sig);
        assert!(d
            .iter()
            .any(|d| d.rule == Rule::ExistsFunForegroundRange && d.symbol == "F"));
    }

    #[test]
    fn existential_relation_over_background() {
        let (sig, _, int) = sig();
        let r = RelVar::new("R", vec![int, int]);
        let s = Sentence::new(vec![Binder::Rel(r)], vec![], Formula::True);
        let d = validate(&s, &sig);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].rule, Rule::ExistsRelOverBackground);
    }

    #[test]
    fn impure_signature_symbols() {
        let (mut sig, fg, int) = sig();
        sig.add_fun("mix", vec![int], SortId::BOOL).unwrap();
        sig.add_rel("onfg", vec![fg]).unwrap();
        let rules: Vec<Rule> = validate_signature(&sig).iter().map(|d| d.rule).collect();
        assert_eq!(rules, vec![Rule::ImpureSymbol, Rule::ForegroundSymbol]);
    }

    #[test]
    fn unbound_and_cross_sort_equality() {
        let (sig, fg, int) = sig();
        let a = Var::new("a", fg);
        let x = Var::new("x", int);
        let s = Sentence::new(vec![Binder::Var(a.clone())], vec![], Formula::eq(a.term(), x.term()));
        let rules: HashSet<Rule> = validate(&s, &sig).iter().map(|d| d.rule).collect();
        assert!(rules.contains(&Rule::Unbound));
        assert!(rules.contains(&Rule::IllSorted));
    }
}
