//! Constant folding for ground and partially ground formulas.
//!
//! Integer numerals are folded through `+ - *` and the comparisons; other
//! numerals are only compared syntactically. Elements and booleans are
//! folded by identity.

use crate::logic::{Formula, Func, Lit, Pred, Term};

/// Integer value of a numeral, if it is one.
pub fn int_value(text: &str) -> Option<i128> {
    text.parse().ok()
}

fn int_of(t: &Term) -> Option<i128> {
    match t {
        Term::Lit(Lit::Num(_, n)) => int_value(n),
        _ => None,
    }
}

pub fn simplify_term(t: &Term) -> Term {
    t.map_bottom_up(&mut |t| match &t {
        Term::App(f @ (Func::Add | Func::Sub | Func::Mul | Func::Neg), s, args) => {
            let vals: Option<Vec<i128>> = args.iter().map(int_of).collect();
            let Some(vals) = vals else { return t };
            let folded = match f {
                Func::Neg => vals.first().and_then(|v| v.checked_neg()),
                Func::Add => vals.iter().try_fold(0i128, |a, &b| a.checked_add(b)),
                Func::Mul => vals.iter().try_fold(1i128, |a, &b| a.checked_mul(b)),
                Func::Sub if vals.len() == 1 => vals[0].checked_neg(),
                Func::Sub => vals[1..].iter().try_fold(vals[0], |a, &b| a.checked_sub(b)),
                Func::User(_) => None,
            };
            match folded {
                Some(v) => Term::num(*s, &v.to_string()),
                None => t,
            }
        }
        _ => t,
    })
}

/// Truth value of an equality between two terms, when it is determined.
fn fold_eq(a: &Term, b: &Term) -> Option<bool> {
    if a == b {
        return Some(true);
    }
    match (a, b) {
        (Term::Lit(Lit::Num(_, x)), Term::Lit(Lit::Num(_, y))) => match (int_value(x), int_value(y)) {
            (Some(x), Some(y)) => Some(x == y),
            _ => None,
        },
        (Term::Lit(x), Term::Lit(y)) => Some(x == y),
        _ => None,
    }
}

fn fold_cmp(p: &Pred, args: &[Term]) -> Option<bool> {
    let vals: Option<Vec<i128>> = args.iter().map(int_of).collect();
    let vals = vals?;
    let ok = |f: fn(&i128, &i128) -> bool| vals.windows(2).all(|w| f(&w[0], &w[1]));
    match p {
        Pred::Lt => Some(ok(i128::lt)),
        Pred::Le => Some(ok(i128::le)),
        Pred::Gt => Some(ok(i128::gt)),
        Pred::Ge => Some(ok(i128::ge)),
        Pred::User(_) => None,
    }
}

fn constant(b: bool) -> Formula {
    if b {
        Formula::True
    } else {
        Formula::False
    }
}

fn negate(f: Formula) -> Formula {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Not(a) => *a,
        other => Formula::not(other),
    }
}

fn junction(and: bool, parts: impl Iterator<Item = Formula>) -> Formula {
    let (unit, zero) = if and {
        (Formula::True, Formula::False)
    } else {
        (Formula::False, Formula::True)
    };
    let mut kept: Vec<Formula> = vec![];
    for p in parts {
        if p == unit {
            continue;
        }
        if p == zero {
            return zero;
        }
        match p {
            Formula::And(inner) if and => kept.extend(inner),
            Formula::Or(inner) if !and => kept.extend(inner),
            other => kept.push(other),
        }
    }
    if and {
        Formula::and_all(kept)
    } else {
        Formula::or_all(kept)
    }
}

/// Folds constants bottom-up. The result is equivalent to the input.
pub fn simplify(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Eq(a, b) => {
            let (a, b) = (simplify_term(a), simplify_term(b));
            match fold_eq(&a, &b) {
                Some(v) => constant(v),
                None => Formula::Eq(a, b),
            }
        }
        Formula::Rel(p, s, ts) => {
            let ts: Vec<Term> = ts.iter().map(simplify_term).collect();
            match fold_cmp(p, &ts) {
                Some(v) => constant(v),
                None => Formula::Rel(p.clone(), *s, ts),
            }
        }
        Formula::RelVar(r, ts) => Formula::RelVar(r.clone(), ts.iter().map(simplify_term).collect()),
        Formula::Not(a) => negate(simplify(a)),
        Formula::And(fs) => junction(true, fs.iter().map(simplify)),
        Formula::Or(fs) => junction(false, fs.iter().map(simplify)),
        Formula::Implies(a, b) => {
            let a = simplify(a);
            match a {
                Formula::False => Formula::True,
                Formula::True => simplify(b),
                a => match simplify(b) {
                    Formula::True => Formula::True,
                    Formula::False => negate(a),
                    b => Formula::implies(a, b),
                },
            }
        }
        Formula::Iff(a, b) => match (simplify(a), simplify(b)) {
            (Formula::True, x) | (x, Formula::True) => x,
            (Formula::False, x) | (x, Formula::False) => negate(x),
            (x, y) if x == y => Formula::True,
            (x, y) => Formula::iff(x, y),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{SortId, Var};

    const INT: SortId = SortId(2);

    fn n(v: &str) -> Term {
        Term::num(INT, v)
    }

    #[test]
    fn arithmetic_folds() {
        let t = Term::App(
            Func::Sub,
            INT,
            vec![Term::App(Func::Add, INT, vec![n("40"), n("3")]), n("-16")],
        );
        assert_eq!(simplify_term(&t), n("59"));
        let neg = Term::App(Func::Neg, INT, vec![n("5")]);
        assert_eq!(simplify_term(&neg), n("-5"));
    }

    #[test]
    fn comparisons_and_equalities_fold() {
        assert_eq!(
            simplify(&Formula::Rel(Pred::Lt, INT, vec![n("1"), n("2")])),
            Formula::True
        );
        assert_eq!(simplify(&Formula::eq(n("-0"), n("0"))), Formula::True);
        assert_eq!(simplify(&Formula::eq(Term::top(), Term::bot())), Formula::False);
        let x = Var::new("x", INT);
        assert_eq!(simplify(&Formula::eq(x.term(), x.term())), Formula::True);
        let open = Formula::eq(x.term(), n("1"));
        assert_eq!(simplify(&open), open);
    }

    #[test]
    fn connectives_fold() {
        let x = Var::new("x", INT);
        let open = Formula::eq(x.term(), n("1"));
        let f = Formula::And(vec![
            Formula::implies(Formula::False, Formula::False),
            Formula::Or(vec![Formula::False, open.clone()]),
            Formula::iff(Formula::False, Formula::False),
        ]);
        assert_eq!(simplify(&f), open);
        assert_eq!(
            simplify(&Formula::implies(open.clone(), Formula::False)),
            Formula::not(open.clone())
        );
        assert_eq!(simplify(&Formula::not(Formula::not(open.clone()))), open);
    }

    #[test]
    fn non_integer_numerals_stay_symbolic() {
        let f = Formula::eq(n("1.0"), n("1"));
        assert_eq!(simplify(&f), f);
        assert_eq!(simplify(&Formula::eq(n("1.5"), n("1.5"))), Formula::True);
    }
}
