//! The `.eqsmt` problem format: an SMT-LIB flavoured S-expression syntax.
//!
//! ```text
//! (declare-sort FG :foreground)
//! (declare-sort Int :background lia)
//! (declare-fun k () Int)
//! (declare-rel P (Int))
//! (set-option :timeout 30)
//! (assert-eqsmt
//!   (exists ((a FG) (F (-> FG Int)) (R (Rel FG FG)))
//!     (forall ((y FG))
//!       (=> (R a y) (= (F a) (F y))))))
//! ```

mod elab;
pub(crate) use elab::is_numeral;
mod print;

use serde_json::json;
use thiserror::Error;

use crate::logic::{
    conjoin, validate, Binder, Diagnostic, FunVar, RelVar, Sentence, SigError, Signature, SortId, SortKind, Theory, Var,
};
use crate::sexp::{parse_all, Sexp, SexpError, Span};

pub use elab::{Elaborator, Entry};
pub use print::{print_formula, print_problem, print_sentence, print_term, Namer};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("{span}: syntax error: {message}")]
    Syntax { span: Span, message: String },
    #[error("{span}: unknown sort `{name}`")]
    UnknownSort { span: Span, name: String },
    #[error("{span}: unknown symbol `{name}`")]
    UnknownSymbol { span: Span, name: String },
    #[error("{span}: duplicate declaration of `{name}`")]
    Duplicate { span: Span, name: String },
    #[error("{span}: `{name}` expects {expected} arguments, got {got}")]
    Arity {
        span: Span,
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("{span}: sort error: {message}")]
    Sort { span: Span, message: String },
    #[error("{span}: invalid sentence: {}", .diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid { span: Span, diagnostics: Vec<Diagnostic> },
}

impl From<SexpError> for ParseError {
    fn from(e: SexpError) -> Self {
        ParseError::Syntax {
            span: e.span,
            message: e.message,
        }
    }
}

impl ParseError {
    pub fn span(&self) -> Span {
        match self {
            ParseError::Syntax { span, .. }
            | ParseError::UnknownSort { span, .. }
            | ParseError::UnknownSymbol { span, .. }
            | ParseError::Duplicate { span, .. }
            | ParseError::Arity { span, .. }
            | ParseError::Sort { span, .. }
            | ParseError::Invalid { span, .. } => *span,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ParseError::Syntax { .. } => "syntax",
            ParseError::UnknownSort { .. } => "unknown-sort",
            ParseError::UnknownSymbol { .. } => "unknown-symbol",
            ParseError::Duplicate { .. } => "duplicate-declaration",
            ParseError::Arity { .. } => "arity-mismatch",
            ParseError::Sort { .. } => "sort-error",
            ParseError::Invalid { .. } => "invalid-sentence",
        }
    }

    /// Machine-readable diagnostic.
    pub fn to_json(&self) -> serde_json::Value {
        let span = self.span();
        let mut v = json!({
            "kind": self.kind(),
            "line": span.line,
            "column": span.col,
            "message": self.to_string(),
        });
        if let ParseError::Invalid { diagnostics, .. } = self {
            v["diagnostics"] = diagnostics
                .iter()
                .map(|d| json!({"rule": d.rule.to_string(), "symbol": d.symbol, "message": d.message}))
                .collect();
        }
        v
    }
}

/// Solver directives given with `set-option` / `set-goal`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Directives {
    pub goal: Option<String>,
    pub timeout_secs: Option<f64>,
    pub backend: Option<String>,
    pub max_contracts: Option<u64>,
    pub strategy: Option<String>,
}

#[derive(Clone, Debug)]
pub struct ProblemFile {
    pub sig: Signature,
    pub sentences: Vec<Sentence>,
    pub directives: Directives,
}

impl ProblemFile {
    /// All asserted sentences as one (their conjunction).
    pub fn sentence(&self) -> Sentence {
        if self.sentences.is_empty() {
            Sentence::new(vec![], vec![], crate::logic::Formula::True)
        } else {
            conjoin(&self.sentences)
        }
    }
}

fn syntax<T>(span: Span, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Syntax {
        span,
        message: message.into(),
    })
}

fn sig_error(span: Span, e: SigError) -> ParseError {
    match e {
        SigError::DuplicateSort(name) | SigError::DuplicateSymbol(name) => ParseError::Duplicate { span, name },
        other => ParseError::Syntax {
            span,
            message: other.to_string(),
        },
    }
}

fn sort_ref(sig: &Signature, s: &Sexp) -> Result<SortId, ParseError> {
    match s {
        Sexp::Atom(name, span) => sig.sort_by_name(name).ok_or_else(|| ParseError::UnknownSort {
            span: *span,
            name: name.clone(),
        }),
        other => syntax(other.span(), "expected a sort name"),
    }
}

fn sort_list(sig: &Signature, s: &Sexp) -> Result<Vec<SortId>, ParseError> {
    match s.list() {
        Some(items) => items.iter().map(|x| sort_ref(sig, x)).collect(),
        None => syntax(s.span(), "expected a list of sorts"),
    }
}

/// Parses one binder `(name SORT)`, `(name (-> S.. S))` or `(name (Rel S..))`.
fn binder(sig: &Signature, s: &Sexp) -> Result<Binder, ParseError> {
    let Some(items) = s.list() else {
        return syntax(s.span(), "expected a binder `(name sort)`");
    };
    let name = match items.first() {
        Some(Sexp::Atom(n, _)) => n.clone(),
        _ => return syntax(s.span(), "expected a binder name"),
    };
    let Some(ty) = items.get(1) else {
        let end = Span {
            line: s.span().line,
            col: s.span().col + 1 + name.len() as u32,
        };
        return syntax(end, "missing sort in binder");
    };
    if items.len() > 2 {
        return syntax(items[2].span(), "unexpected token in binder");
    }
    match ty {
        Sexp::Atom(..) => Ok(Binder::Var(Var::new(&name, sort_ref(sig, ty)?))),
        Sexp::List(parts, span) => match parts.first().and_then(Sexp::atom) {
            Some("->") => {
                if parts.len() < 3 {
                    return syntax(*span, "function type needs argument sorts and a result sort");
                }
                let sorts: Vec<SortId> = parts[1..].iter().map(|x| sort_ref(sig, x)).collect::<Result<_, _>>()?;
                let (result, args) = sorts.split_last().unwrap();
                Ok(Binder::Fun(FunVar::new(&name, args.to_vec(), *result)))
            }
            Some("Rel") => {
                if parts.len() < 2 {
                    return syntax(*span, "relation type needs argument sorts");
                }
                let sorts = parts[1..].iter().map(|x| sort_ref(sig, x)).collect::<Result<_, _>>()?;
                Ok(Binder::Rel(RelVar::new(&name, sorts)))
            }
            _ => syntax(*span, "expected a sort, `(-> ...)` or `(Rel ...)`"),
        },
        Sexp::Str(_, span) => syntax(*span, "expected a sort"),
    }
}

fn binders(sig: &Signature, s: &Sexp) -> Result<Vec<Binder>, ParseError> {
    match s.list() {
        Some(items) => items.iter().map(|b| binder(sig, b)).collect(),
        None => syntax(s.span(), "expected a binder list"),
    }
}

/// Parses `(exists (..) (forall (..) matrix))` and the shapes it degenerates to.
pub fn parse_sentence(sig: &Signature, s: &Sexp) -> Result<Sentence, ParseError> {
    let mut exists = vec![];
    let mut forall = vec![];
    let mut cur = s;
    let mut seen_forall = false;
    while let Some(q @ ("exists" | "forall")) = cur.head() {
        let items = cur.list().unwrap();
        if items.len() != 3 {
            return syntax(cur.span(), format!("`{q}` takes a binder list and a body"));
        }
        let bs = binders(sig, &items[1])?;
        if q == "exists" {
            if seen_forall {
                return syntax(cur.span(), "`exists` under `forall` leaves the exists-forall fragment");
            }
            exists.extend(bs);
        } else {
            seen_forall = true;
            forall.extend(bs);
        }
        cur = &items[2];
    }
    let mut el = Elaborator::new(sig);
    for b in exists.iter().chain(&forall) {
        let e = match b {
            Binder::Var(v) => Entry::Var(v.clone()),
            Binder::Fun(f) => Entry::Fun(f.clone()),
            Binder::Rel(r) => Entry::Rel(r.clone()),
        };
        el.bind(b.name(), e);
    }
    let matrix = el.formula(cur)?;
    Ok(Sentence::new(exists, forall, matrix))
}

fn keyword_value(items: &[Sexp], span: Span) -> Result<(&str, &Sexp), ParseError> {
    match items {
        [_, Sexp::Atom(k, _), v] if k.starts_with(':') => Ok((k.as_str(), v)),
        _ => syntax(span, "expected `(set-option :key value)`"),
    }
}

fn number<T: std::str::FromStr>(s: &Sexp) -> Result<T, ParseError> {
    s.atom().and_then(|a| a.parse().ok()).ok_or_else(|| ParseError::Syntax {
        span: s.span(),
        message: "expected a number".into(),
    })
}

/// Parses and validates a whole problem file.
pub fn parse(text: &str) -> Result<ProblemFile, ParseError> {
    let mut sig = Signature::new();
    let mut sentences = vec![];
    let mut directives = Directives::default();
    for cmd in parse_all(text)? {
        let span = cmd.span();
        let Some(items) = cmd.list() else {
            return syntax(span, "expected a command");
        };
        let Some(head) = items.first().and_then(Sexp::atom) else {
            return syntax(span, "expected a command name");
        };
        let name_at = |i: usize| -> Result<&str, ParseError> {
            match items.get(i) {
                Some(Sexp::Atom(n, _)) => Ok(n.as_str()),
                Some(other) => syntax(other.span(), "expected a name"),
                None => syntax(span, format!("`{head}` is missing arguments")),
            }
        };
        match head {
            "declare-sort" => {
                let name = name_at(1)?;
                let kind =
                    match (items.get(2).and_then(Sexp::atom), items.get(3)) {
                        (Some(":foreground"), None) => SortKind::Foreground,
                        (Some(":background"), Some(Sexp::Atom(th, _))) if items.len() == 4 => {
                            SortKind::Background(Theory::from_id(th))
                        }
                        (Some(":bool"), None) => SortKind::Bool,
                        _ => return syntax(
                            span,
                            "expected `(declare-sort NAME :foreground)` or `(declare-sort NAME :background THEORY)`",
                        ),
                    };
                sig.add_sort(name, kind).map_err(|e| sig_error(span, e))?;
            }
            "declare-fun" | "declare-const" => {
                let name = name_at(1)?;
                let (args, result) = if head == "declare-const" {
                    if items.len() != 3 {
                        return syntax(span, "expected `(declare-const NAME SORT)`");
                    }
                    (vec![], sort_ref(&sig, &items[2])?)
                } else {
                    if items.len() != 4 {
                        return syntax(span, "expected `(declare-fun NAME (SORTS) SORT)`");
                    }
                    (sort_list(&sig, &items[2])?, sort_ref(&sig, &items[3])?)
                };
                sig.add_fun(name, args, result).map_err(|e| sig_error(span, e))?;
            }
            "declare-rel" => {
                let name = name_at(1)?;
                if items.len() != 3 {
                    return syntax(span, "expected `(declare-rel NAME (SORTS))`");
                }
                let args = sort_list(&sig, &items[2])?;
                if args.is_empty() {
                    return syntax(span, "relations need at least one argument");
                }
                sig.add_rel(name, args).map_err(|e| sig_error(span, e))?;
            }
            "assert-eqsmt" => {
                if items.len() != 2 {
                    return syntax(span, "expected `(assert-eqsmt SENTENCE)`");
                }
                let s = parse_sentence(&sig, &items[1])?;
                let diagnostics = validate(&s, &sig);
                if !diagnostics.is_empty() {
                    return Err(ParseError::Invalid { span, diagnostics });
                }
                sentences.push(s);
            }
            "set-option" => {
                let (key, value) = keyword_value(items, span)?;
                match key {
                    ":timeout" => directives.timeout_secs = Some(number(value)?),
                    ":max-contracts" => directives.max_contracts = Some(number(value)?),
                    ":backend" => match value {
                        Sexp::Str(s, _) => directives.backend = Some(s.clone()),
                        other => return syntax(other.span(), "expected a quoted command line"),
                    },
                    ":strategy" => directives.strategy = Some(name_at(2)?.to_string()),
                    _ => return syntax(items[1].span(), format!("unknown option `{key}`")),
                }
            }
            "set-goal" => {
                let goal = name_at(1)?;
                if goal != "solve" && goal != "synth" {
                    return syntax(span, "goal is `solve` or `synth`");
                }
                directives.goal = Some(goal.to_string());
            }
            "check-sat" | "set-info" | "exit" => {}
            other => return syntax(span, format!("unknown command `{other}`")),
        }
    }
    if sig.foreground().is_none() && !sentences.is_empty() {
        let diagnostics = crate::logic::validate_signature(&sig);
        return Err(ParseError::Invalid {
            span: Span { line: 1, col: 1 },
            diagnostics,
        });
    }
    Ok(ProblemFile {
        sig,
        sentences,
        directives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{Formula, Rule, Term};

    const HEADER: &str = "(declare-sort FG :foreground)\n(declare-sort Int :background lia)\n";

    #[test]
    fn two_sort_signature() {
        let p = parse(HEADER).unwrap();
        assert_eq!(p.sig.num_sorts(), 3);
        assert!(p.sentences.is_empty());
    }

    #[test]
    fn existential_function_sentence() {
        let text =
            format!("{HEADER}(assert-eqsmt (exists ((a FG) (F (-> FG Int))) (forall ((y FG)) (= (F a) (F y)))))");
        let p = parse(&text).unwrap();
        let s = &p.sentences[0];
        assert_eq!(s.exists_funs().count(), 1);
        assert_eq!(s.forall_vars().count(), 1);
        assert!(matches!(&s.matrix, Formula::Eq(Term::FApp(..), Term::FApp(..))));
    }

    #[test]
    fn empty_sort_position() {
        let text = format!("{HEADER}(assert-eqsmt (exists ((a)) true))");
        let err = parse(&text).unwrap_err();
        assert_eq!(err.kind(), "syntax");
        assert_eq!(err.span(), Span { line: 3, col: 26 });
    }

    #[test]
    fn unknown_sort_and_duplicates() {
        let err = parse("(declare-sort FG :foreground)(assert-eqsmt (exists ((a Q)) true))").unwrap_err();
        assert!(matches!(err, ParseError::UnknownSort { ref name, .. } if name == "Q"));
        let err = parse("(declare-sort FG :foreground)(declare-sort FG :background lia)").unwrap_err();
        assert!(matches!(err, ParseError::Duplicate { .. }));
    }

    #[test]
    fn alternation_rejected() {
        let text = format!("{HEADER}(assert-eqsmt (forall ((y FG)) (exists ((a FG)) (= a y))))");
        assert!(parse(&text).is_err());
    }

    #[test]
    fn validation_runs_on_assert() {
        let text = format!("{HEADER}(assert-eqsmt (exists ((F (-> FG FG)) (a FG)) (= (F a) a)))");
        let err = parse(&text).unwrap_err();
        let ParseError::Invalid { diagnostics, .. } = err else {
            panic!()
        };
        assert_eq!(diagnostics[0].rule, Rule::ExistsFunForegroundRange);
    }

    #[test]
    fn directives() {
        let text = format!("{HEADER}(set-option :timeout 5)(set-option :backend \"z3 -in\")(set-goal solve)");
        let p = parse(&text).unwrap();
        assert_eq!(p.directives.timeout_secs, Some(5.0));
        assert_eq!(p.directives.backend.as_deref(), Some("z3 -in"));
        assert_eq!(p.directives.goal.as_deref(), Some("solve"));
    }

    #[test]
    fn json_diagnostic_carries_position() {
        let err = parse("(declare-sort FG :foreground)\n(oops)").unwrap_err();
        let j = err.to_json();
        assert_eq!(j["line"], 2);
        assert_eq!(j["kind"], "syntax");
    }
}
