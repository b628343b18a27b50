use std::collections::HashMap;

use crate::logic::{Formula, FunVar, Func, Lit, Pred, RelVar, Signature, SortId, Term, Var};
use crate::sexp::{Sexp, Span};

use super::ParseError;

/// What a name in scope refers to.
#[derive(Clone, Debug)]
pub enum Entry {
    Var(Var),
    Fun(FunVar),
    Rel(RelVar),
}

/// Turns S-expressions into terms and formulas over a signature and a scope of bound names.
pub struct Elaborator<'a> {
    pub sig: &'a Signature,
    scope: HashMap<String, Entry>,
}

pub(crate) fn is_numeral(s: &str) -> bool {
    let digits = s.strip_prefix('-').unwrap_or(s);
    let mut parts = digits.splitn(2, '.');
    let int = parts.next().unwrap_or("");
    let frac_ok = parts
        .next()
        .is_none_or(|f| !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()));
    !int.is_empty() && int.bytes().all(|b| b.is_ascii_digit()) && frac_ok
}

fn syntax<T>(span: Span, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Syntax {
        span,
        message: message.into(),
    })
}

impl<'a> Elaborator<'a> {
    pub fn new(sig: &'a Signature) -> Self {
        Elaborator {
            sig,
            scope: HashMap::new(),
        }
    }

    pub fn bind(&mut self, name: &str, e: Entry) {
        self.scope.insert(name.to_string(), e);
    }

    pub fn lookup(&self, name: &str) -> Option<&Entry> {
        self.scope.get(name)
    }

    /// Sort of a term without building it; `None` for bare numerals.
    fn peek_sort(&self, s: &Sexp) -> Option<SortId> {
        match s {
            Sexp::Atom(a, _) => match a.as_str() {
                "true" | "false" => Some(SortId::BOOL),
                a if is_numeral(a) => None,
                a => match self.scope.get(a) {
                    Some(Entry::Var(v)) => Some(v.sort),
                    _ => self.sig.fun(a).map(|f| f.result),
                },
            },
            Sexp::List(items, _) => {
                let head = items.first()?.atom()?;
                match head {
                    "+" | "-" | "*" => items[1..].iter().find_map(|x| self.peek_sort(x)),
                    h => match self.scope.get(h) {
                        Some(Entry::Fun(f)) => Some(f.result),
                        _ => self.sig.fun(h).map(|f| f.result),
                    },
                }
            }
            Sexp::Str(..) => None,
        }
    }

    fn numeral_sort(&self, hint: Option<SortId>, span: Span) -> Result<SortId, ParseError> {
        if let Some(h) = hint {
            if self.sig.is_arithmetic(h) {
                return Ok(h);
            }
            return Err(ParseError::Sort {
                span,
                message: format!("numeral used at non-arithmetic sort {}", self.sig.sort_name(h)),
            });
        }
        let arith: Vec<SortId> = self.sig.sort_ids().filter(|&s| self.sig.is_arithmetic(s)).collect();
        match arith.as_slice() {
            [one] => Ok(*one),
            [] => Err(ParseError::Sort {
                span,
                message: "numeral without an arithmetic sort".into(),
            }),
            _ => Err(ParseError::Sort {
                span,
                message: "cannot infer the sort of this numeral".into(),
            }),
        }
    }

    fn expect_sort(&self, t: &Term, want: SortId, span: Span) -> Result<(), ParseError> {
        if t.sort() != want {
            return Err(ParseError::Sort {
                span,
                message: format!(
                    "expected sort {}, found {}",
                    self.sig.sort_name(want),
                    self.sig.sort_name(t.sort())
                ),
            });
        }
        Ok(())
    }

    fn args(&self, items: &[Sexp], sorts: &[SortId], name: &str, span: Span) -> Result<Vec<Term>, ParseError> {
        if items.len() != sorts.len() {
            return Err(ParseError::Arity {
                span,
                name: name.to_string(),
                expected: sorts.len(),
                got: items.len(),
            });
        }
        items
            .iter()
            .zip(sorts)
            .map(|(x, &s)| {
                let t = self.term(x, Some(s))?;
                self.expect_sort(&t, s, x.span())?;
                Ok(t)
            })
            .collect()
    }

    pub fn term(&self, s: &Sexp, hint: Option<SortId>) -> Result<Term, ParseError> {
        match s {
            Sexp::Str(_, span) => syntax(*span, "string literal in term position"),
            Sexp::Atom(a, span) => match a.as_str() {
                "true" => Ok(Term::top()),
                "false" => Ok(Term::bot()),
                a if is_numeral(a) => Ok(Term::Lit(Lit::Num(self.numeral_sort(hint, *span)?, a.into()))),
                a => match self.scope.get(a) {
                    Some(Entry::Var(v)) => Ok(v.term()),
                    Some(_) => syntax(*span, format!("`{a}` needs arguments")),
                    None => match self.sig.fun(a) {
                        Some(f) if f.args.is_empty() => Ok(Term::App(Func::User(f.name.clone()), f.result, vec![])),
                        Some(f) => Err(ParseError::Arity {
                            span: *span,
                            name: a.to_string(),
                            expected: f.args.len(),
                            got: 0,
                        }),
                        None => Err(ParseError::UnknownSymbol {
                            span: *span,
                            name: a.to_string(),
                        }),
                    },
                },
            },
            Sexp::List(items, span) => {
                let Some(head) = items.first().and_then(Sexp::atom) else {
                    return syntax(*span, "expected a function application");
                };
                let rest = &items[1..];
                match head {
                    "+" | "-" | "*" => {
                        if rest.is_empty() || (head != "-" && rest.len() < 2) {
                            return syntax(*span, format!("`{head}` needs more arguments"));
                        }
                        let sort = match rest.iter().find_map(|x| self.peek_sort(x)).or(hint) {
                            Some(s) => s,
                            None => self.numeral_sort(None, *span)?,
                        };
                        if !self.sig.is_arithmetic(sort) {
                            return Err(ParseError::Sort {
                                span: *span,
                                message: format!("`{head}` over non-arithmetic sort {}", self.sig.sort_name(sort)),
                            });
                        }
                        let args = self.args(rest, &vec![sort; rest.len()], head, *span)?;
                        let op = match (head, args.len()) {
                            ("-", 1) => Func::Neg,
                            ("-", _) => Func::Sub,
                            ("+", _) => Func::Add,
                            _ => Func::Mul,
                        };
                        Ok(Term::App(op, sort, args))
                    }
                    h => match self.scope.get(h) {
                        Some(Entry::Fun(f)) => Ok(Term::FApp(f.clone(), self.args(rest, &f.args, h, *span)?)),
                        Some(_) => syntax(*span, format!("`{h}` is not a function")),
                        None => match self.sig.fun(h) {
                            Some(f) => {
                                let args = self.args(rest, &f.args, h, *span)?;
                                Ok(Term::App(Func::User(f.name.clone()), f.result, args))
                            }
                            None => Err(ParseError::UnknownSymbol {
                                span: items[0].span(),
                                name: h.to_string(),
                            }),
                        },
                    },
                }
            }
        }
    }

    /// Elaborates two terms that must share a sort, inferring numeral sorts from either side.
    fn same_sort_pair(&self, items: &[Sexp]) -> Result<Vec<Term>, ParseError> {
        let hint = items.iter().find_map(|x| self.peek_sort(x));
        let terms: Vec<Term> = items.iter().map(|x| self.term(x, hint)).collect::<Result<_, _>>()?;
        let s0 = terms[0].sort();
        for (t, x) in terms.iter().zip(items) {
            self.expect_sort(t, s0, x.span())?;
        }
        Ok(terms)
    }

    pub fn formula(&self, s: &Sexp) -> Result<Formula, ParseError> {
        match s {
            Sexp::Str(_, span) => syntax(*span, "string literal in formula position"),
            Sexp::Atom(a, span) => match a.as_str() {
                "true" => Ok(Formula::True),
                "false" => Ok(Formula::False),
                _ => {
                    let t = self.term(s, Some(SortId::BOOL))?;
                    self.expect_sort(&t, SortId::BOOL, *span)?;
                    Ok(Formula::eq(t, Term::top()))
                }
            },
            Sexp::List(items, span) => {
                let Some(head) = items.first().and_then(Sexp::atom) else {
                    return syntax(*span, "expected a formula");
                };
                let rest = &items[1..];
                let need = |n: usize| -> Result<(), ParseError> {
                    if rest.len() < n {
                        syntax(*span, format!("`{head}` needs at least {n} arguments"))
                    } else {
                        Ok(())
                    }
                };
                match head {
                    "not" => {
                        if rest.len() != 1 {
                            return syntax(*span, "`not` takes one argument");
                        }
                        Ok(Formula::not(self.formula(&rest[0])?))
                    }
                    "and" => Ok(Formula::And(
                        rest.iter().map(|x| self.formula(x)).collect::<Result<_, _>>()?,
                    )),
                    "or" => Ok(Formula::Or(
                        rest.iter().map(|x| self.formula(x)).collect::<Result<_, _>>()?,
                    )),
                    "=>" => {
                        need(2)?;
                        let mut fs: Vec<Formula> = rest.iter().map(|x| self.formula(x)).collect::<Result<_, _>>()?;
                        let mut acc = fs.pop().unwrap();
                        while let Some(f) = fs.pop() {
                            acc = Formula::implies(f, acc);
                        }
                        Ok(acc)
                    }
                    "iff" => {
                        if rest.len() != 2 {
                            return syntax(*span, "`iff` takes two arguments");
                        }
                        Ok(Formula::iff(self.formula(&rest[0])?, self.formula(&rest[1])?))
                    }
                    "=" | "distinct" => {
                        need(2)?;
                        let ts = self.same_sort_pair(rest)?;
                        let mut out = vec![];
                        if head == "=" {
                            for w in ts.windows(2) {
                                out.push(Formula::eq(w[0].clone(), w[1].clone()));
                            }
                        } else {
                            for i in 0..ts.len() {
                                for j in i + 1..ts.len() {
                                    out.push(Formula::not(Formula::eq(ts[i].clone(), ts[j].clone())));
                                }
                            }
                        }
                        Ok(Formula::and_all(out))
                    }
                    "<" | "<=" | ">" | ">=" => {
                        if rest.len() != 2 {
                            return syntax(*span, format!("`{head}` takes two arguments"));
                        }
                        let ts = self.same_sort_pair(rest)?;
                        let sort = ts[0].sort();
                        if !self.sig.is_arithmetic(sort) {
                            return Err(ParseError::Sort {
                                span: *span,
                                message: format!("`{head}` over non-arithmetic sort"),
                            });
                        }
                        let p = match head {
                            "<" => Pred::Lt,
                            "<=" => Pred::Le,
                            ">" => Pred::Gt,
                            _ => Pred::Ge,
                        };
                        Ok(Formula::Rel(p, sort, ts))
                    }
                    h => match self.scope.get(h) {
                        Some(Entry::Rel(r)) => Ok(Formula::RelVar(r.clone(), self.args(rest, &r.args, h, *span)?)),
                        Some(Entry::Fun(f)) if f.result == SortId::BOOL => {
                            let t = Term::FApp(f.clone(), self.args(rest, &f.args, h, *span)?);
                            Ok(Formula::eq(t, Term::top()))
                        }
                        Some(_) => syntax(*span, format!("`{h}` is not a relation")),
                        None => {
                            if let Some(r) = self.sig.rel(h) {
                                let ts = self.args(rest, &r.args, h, *span)?;
                                let sort = r.args.first().copied().unwrap_or(SortId::BOOL);
                                Ok(Formula::Rel(Pred::User(r.name.clone()), sort, ts))
                            } else if self.sig.fun(h).is_some_and(|f| f.result == SortId::BOOL) {
                                let t = self.term(s, Some(SortId::BOOL))?;
                                Ok(Formula::eq(t, Term::top()))
                            } else {
                                Err(ParseError::UnknownSymbol {
                                    span: items[0].span(),
                                    name: h.to_string(),
                                })
                            }
                        }
                    },
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{SortKind, Theory};
    use crate::sexp::parse_one;

    fn setup() -> (Signature, SortId, SortId) {
        let (mut sig, fg) = Signature::with_foreground();
        let int = sig.add_sort("Int", SortKind::Background(Theory::Lia)).unwrap();
        (sig, fg, int)
    }

    #[test]
    fn numerals() {
        assert!(is_numeral("12"));
        assert!(is_numeral("-3"));
        assert!(is_numeral("1.5"));
        assert!(!is_numeral("-"));
        assert!(!is_numeral("1."));
        assert!(!is_numeral("x1"));
    }

    #[test]
    fn numeral_sort_from_other_side() {
        let (sig, _, int) = setup();
        let mut e = Elaborator::new(&sig);
        e.bind("x", Entry::Var(Var::new("x", int)));
        let f = e.formula(&parse_one("(< 0 (+ x 1))").unwrap()).unwrap();
        let Formula::Rel(Pred::Lt, s, ts) = f else { panic!() };
        assert_eq!(s, int);
        assert_eq!(ts[0].sort(), int);
    }

    #[test]
    fn bool_sugar() {
        let (sig, fg, _) = setup();
        let mut e = Elaborator::new(&sig);
        let f = FunVar::new("F", vec![fg], SortId::BOOL);
        e.bind("F", Entry::Fun(f));
        e.bind("a", Entry::Var(Var::new("a", fg)));
        let got = e.formula(&parse_one("(F a)").unwrap()).unwrap();
        assert!(matches!(got, Formula::Eq(Term::FApp(..), Term::Lit(Lit::Bool(true)))));
    }

    #[test]
    fn cross_sort_equality_rejected() {
        let (sig, fg, int) = setup();
        let mut e = Elaborator::new(&sig);
        e.bind("a", Entry::Var(Var::new("a", fg)));
        e.bind("x", Entry::Var(Var::new("x", int)));
        assert!(matches!(
            e.formula(&parse_one("(= a x)").unwrap()),
            Err(ParseError::Sort { .. })
        ));
    }

    #[test]
    fn arity_mismatch() {
        let (mut sig, _, int) = setup();
        sig.add_fun("f", vec![int], int).unwrap();
        let e = Elaborator::new(&sig);
        assert!(matches!(
            e.term(&parse_one("(f 1 2)").unwrap(), None),
            Err(ParseError::Arity {
                expected: 1,
                got: 2,
                ..
            })
        ));
    }
}
