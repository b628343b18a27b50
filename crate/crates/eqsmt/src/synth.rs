//! Bounded expression-tree synthesis as EQSMT satisfiability.
//!
//! A ternary skeleton of foreground nodes `n0, n00, n01, ...` is labelled by
//! an existential function `f_label` into an uninterpreted label sort; child
//! edges are the existential relations `Left`, `Mid`, `Right`. Universal
//! valuation functions `g0, g1, ...` give every node a value per recursive
//! call of the specification. A model decodes into a program term.

use std::collections::HashMap;
use std::fmt;

use serde::Deserialize;
use thiserror::Error;

use crate::backends::{parse_verdict, Backends, External, QueryVerdict};
use crate::logic::{
    validate, Binder, Formula, FunVar, Func, Pred, RelVar, Sentence, Signature, SortId, SortKind, Term, Theory, Value,
    Var,
};
use crate::parser::is_numeral;
use crate::sexp::{parse_one, Sexp, Span};
use crate::solve::{solve, Answer, SolveError, SolveOptions, SolveResult};
use crate::witness::{Report, Witness};

/// Cap on skeleton nodes (depth 5 has 364).
pub const MAX_NODES: usize = 400;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("problem file: {0}")]
    Json(String),
    #[error("operator `{0}` has arity {1}; the skeleton is ternary")]
    Arity(String, usize),
    #[error("depth {0} gives {1} nodes, above the limit of {MAX_NODES}")]
    TooLarge(usize, usize),
    #[error("template `{template}`: {message}")]
    Template { template: String, message: String },
    #[error("encoding does not validate: {0}")]
    Invalid(String),
    #[error("decode: {0}")]
    Decode(String),
    #[error("program: {0}")]
    Eval(String),
}

/// One grammar production as written in `problem.json`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub label: String,
    #[serde(default)]
    pub arity: usize,
    /// Nonterminal produced, e.g. `term` or `pred`.
    #[serde(default)]
    pub kind: Option<String>,
    /// Nonterminal of each child; empty means untyped.
    #[serde(default)]
    pub children: Vec<String>,
    /// Formula over `val`, `arg0..arg2`, `in`, constants and inputs.
    pub semantics: String,
    /// Program text over `arg0..arg2`, constants and the input.
    pub render: String,
}

/// `problem.json`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_value_sort")]
    pub value_sort: String,
    #[serde(default = "default_theory")]
    pub theory: String,
    pub max_depth: usize,
    /// The program input, universally quantified.
    pub input: String,
    /// Synthesized constants of the value sort.
    #[serde(default)]
    pub constants: Vec<String>,
    pub operators: Vec<OperatorSpec>,
    /// Nonterminal of the root.
    #[serde(default)]
    pub root: Option<String>,
    /// Value bound to `in` for each valuation function `g0, g1, ...`; may use
    /// the input and `(g j)`, the root value under valuation `j`.
    pub valuations: Vec<String>,
    /// Formula over the input and `(g i)`.
    pub spec: String,
}

fn default_value_sort() -> String {
    "Int".into()
}

fn default_theory() -> String {
    "lia".into()
}

#[derive(Clone, Debug)]
pub struct Operator {
    pub label: String,
    pub arity: usize,
    pub kind: Option<String>,
    pub children: Vec<String>,
    pub semantics: Sexp,
    pub render: Sexp,
}

/// Parsed and checked synthesis problem.
#[derive(Clone, Debug)]
pub struct SynthesisProblem {
    pub name: String,
    pub value_sort: String,
    pub theory: Theory,
    pub max_depth: usize,
    pub input: String,
    pub constants: Vec<String>,
    pub operators: Vec<Operator>,
    pub root: Option<String>,
    pub valuations: Vec<Sexp>,
    pub spec: Sexp,
}

fn template(text: &str) -> Result<Sexp, SynthError> {
    parse_one(text).map_err(|e| SynthError::Template {
        template: text.into(),
        message: e.to_string(),
    })
}

impl SynthesisProblem {
    pub fn from_json(text: &str) -> Result<SynthesisProblem, SynthError> {
        let spec: ProblemSpec = serde_json::from_str(text).map_err(|e| SynthError::Json(e.to_string()))?;
        SynthesisProblem::new(spec)
    }

    pub fn new(p: ProblemSpec) -> Result<SynthesisProblem, SynthError> {
        let mut operators = vec![];
        for o in p.operators {
            let arity = o.arity.max(o.children.len());
            if arity > 3 {
                return Err(SynthError::Arity(o.label, arity));
            }
            if !o.children.is_empty() && o.children.len() != arity {
                return Err(SynthError::Json(format!(
                    "`{}`: children kinds do not match the arity",
                    o.label
                )));
            }
            operators.push(Operator {
                semantics: template(&o.semantics)?,
                render: template(&o.render)?,
                label: o.label,
                arity,
                kind: o.kind,
                children: o.children,
            });
        }
        if operators.is_empty() {
            return Err(SynthError::Json("no operators".into()));
        }
        if p.valuations.is_empty() {
            return Err(SynthError::Json("at least one valuation is needed".into()));
        }
        let n = node_count(p.max_depth);
        if n > MAX_NODES {
            return Err(SynthError::TooLarge(p.max_depth, n));
        }
        let problem = SynthesisProblem {
            name: p.name.unwrap_or_else(|| "problem".into()),
            value_sort: p.value_sort,
            theory: Theory::from_id(&p.theory),
            max_depth: p.max_depth,
            input: p.input,
            constants: p.constants,
            operators,
            root: p.root,
            valuations: p.valuations.iter().map(|t| template(t)).collect::<Result<_, _>>()?,
            spec: template(&p.spec)?,
        };
        // elaborating once checks every template
        encode(&problem, &EncodeOptions::default())?;
        Ok(problem)
    }

    pub fn operator(&self, label: &str) -> Option<&Operator> {
        self.operators.iter().find(|o| o.label == label)
    }

    fn value_is_bool(&self) -> bool {
        self.value_sort == "Bool"
    }
}

/// `(3^(d+1) - 1) / 2`.
pub fn node_count(depth: usize) -> usize {
    (3usize.pow(depth as u32 + 1) - 1) / 2
}

/// Skeleton paths in pre-order: `0, 00, 000, ..., 01, ...`.
pub fn skeleton_paths(depth: usize) -> Vec<String> {
    fn go(p: String, depth: usize, out: &mut Vec<String>) {
        let d = p.len() - 1;
        out.push(p.clone());
        if d < depth {
            for k in ['0', '1', '2'] {
                go(format!("{p}{k}"), depth, out);
            }
        }
    }
    let mut out = vec![];
    go("0".into(), depth, &mut out);
    out
}

const CHILD_RELS: [&str; 3] = ["Left", "Mid", "Right"];

#[derive(Clone, Debug, Default)]
pub struct EncodeOptions {
    /// Emit the operator semantics for every tuple of nodes rather than only
    /// for skeleton children. Sat-equivalent, since the well-formedness part
    /// fixes the child relations; much larger.
    pub all_node_tuples: bool,
}

/// The sentence and the symbols needed to decode a witness.
#[derive(Clone, Debug)]
pub struct Encoding {
    pub sig: Signature,
    pub sentence: Sentence,
    pub paths: Vec<String>,
    pub nodes: Vec<Var>,
    pub labels: Vec<Var>,
    pub constants: Vec<Var>,
    pub input: Var,
    pub f_label: FunVar,
    pub children: Vec<RelVar>,
    pub valuations: Vec<FunVar>,
    pub value_sort: SortId,
    pub label_sort: SortId,
}

/// Symbols a template may mention.
struct Env<'a> {
    value_sort: SortId,
    val: Option<Term>,
    args: &'a [Term],
    input_binding: Option<Term>,
    names: &'a HashMap<String, Term>,
    roots: &'a [Term],
}

fn terr(t: &Sexp, message: impl Into<String>) -> SynthError {
    SynthError::Template {
        template: sexp_text(t),
        message: message.into(),
    }
}

fn numeral(text: &str) -> Option<&str> {
    let digits = text.strip_prefix('-').unwrap_or(text);
    is_numeral(digits).then_some(text)
}

impl Env<'_> {
    fn term(&self, t: &Sexp) -> Result<Term, SynthError> {
        let s = self.value_sort;
        match t {
            Sexp::Atom(a, _) => {
                if let Some(n) = numeral(a) {
                    return Ok(match n.strip_prefix('-') {
                        Some(pos) => Term::App(Func::Neg, s, vec![Term::num(s, pos)]),
                        None => Term::num(s, n),
                    });
                }
                match a.as_str() {
                    "true" => return Ok(Term::top()),
                    "false" => return Ok(Term::bot()),
                    "val" => return self.val.clone().ok_or_else(|| terr(t, "`val` is not available here")),
                    "in" => {
                        return self
                            .input_binding
                            .clone()
                            .ok_or_else(|| terr(t, "`in` is not available here"))
                    }
                    _ => {}
                }
                if let Some(k) = a.strip_prefix("arg").and_then(|k| k.parse::<usize>().ok()) {
                    return self
                        .args
                        .get(k)
                        .cloned()
                        .ok_or_else(|| terr(t, format!("no child {k}")));
                }
                self.names
                    .get(a)
                    .cloned()
                    .ok_or_else(|| terr(t, format!("unknown symbol `{a}`")))
            }
            Sexp::List(items, _) => {
                let head = t.head().ok_or_else(|| terr(t, "expected an operator"))?;
                let rest = &items[1..];
                if head == "g" {
                    let i = rest
                        .first()
                        .and_then(Sexp::atom)
                        .and_then(|i| i.parse::<usize>().ok())
                        .filter(|_| rest.len() == 1)
                        .ok_or_else(|| terr(t, "expected `(g INDEX)`"))?;
                    return self
                        .roots
                        .get(i)
                        .cloned()
                        .ok_or_else(|| terr(t, format!("no valuation {i}")));
                }
                let func = match head {
                    "+" => Func::Add,
                    "-" if rest.len() == 1 => Func::Neg,
                    "-" => Func::Sub,
                    "*" => Func::Mul,
                    _ => return Err(terr(t, format!("unknown function `{head}`"))),
                };
                let args = rest.iter().map(|a| self.term(a)).collect::<Result<Vec<_>, _>>()?;
                Ok(Term::App(func, s, args))
            }
            Sexp::Str(..) => Err(terr(t, "string literal")),
        }
    }

    fn formula(&self, f: &Sexp) -> Result<Formula, SynthError> {
        let s = self.value_sort;
        let Some(items) = f.list() else {
            return match f.atom() {
                Some("true") => Ok(Formula::True),
                Some("false") => Ok(Formula::False),
                _ => {
                    let t = self.term(f)?;
                    if t.sort() != SortId::BOOL {
                        return Err(terr(f, "expected a formula"));
                    }
                    Ok(Formula::eq(t, Term::top()))
                }
            };
        };
        let head = f.head().ok_or_else(|| terr(f, "expected an operator"))?;
        let rest = &items[1..];
        let fs = || rest.iter().map(|x| self.formula(x)).collect::<Result<Vec<_>, _>>();
        let two = |v: Vec<Formula>| -> Result<(Formula, Formula), SynthError> {
            let mut v = v.into_iter();
            match (v.next(), v.next(), v.next()) {
                (Some(a), Some(b), None) => Ok((a, b)),
                _ => Err(terr(f, format!("`{head}` takes two arguments"))),
            }
        };
        let terms = || rest.iter().map(|x| self.term(x)).collect::<Result<Vec<_>, _>>();
        let cmp = |p: Pred| -> Result<Formula, SynthError> {
            let ts = terms()?;
            if ts.len() != 2 {
                return Err(terr(f, format!("`{head}` takes two arguments")));
            }
            Ok(Formula::Rel(p, s, ts))
        };
        Ok(match head {
            "and" => Formula::and_all(fs()?),
            "or" => Formula::or_all(fs()?),
            "not" => {
                let mut v = fs()?;
                if v.len() != 1 {
                    return Err(terr(f, "`not` takes one argument"));
                }
                Formula::not(v.pop().unwrap())
            }
            "=>" => {
                let (a, b) = two(fs()?)?;
                Formula::implies(a, b)
            }
            "iff" => {
                let (a, b) = two(fs()?)?;
                Formula::iff(a, b)
            }
            "=" | "distinct" => {
                let ts = terms()?;
                if ts.len() != 2 || ts[0].sort() != ts[1].sort() {
                    return Err(terr(f, format!("`{head}` takes two arguments of one sort")));
                }
                let eq = Formula::eq(ts[0].clone(), ts[1].clone());
                if head == "=" {
                    eq
                } else {
                    Formula::not(eq)
                }
            }
            "<" => cmp(Pred::Lt)?,
            "<=" => cmp(Pred::Le)?,
            ">" => cmp(Pred::Gt)?,
            ">=" => cmp(Pred::Ge)?,
            _ => return Err(terr(f, format!("unknown connective `{head}`"))),
        })
    }
}

/// Builds `phi_well-formed AND forall input, g. (phi_semantics => phi_spec)`.
pub fn encode(p: &SynthesisProblem, opts: &EncodeOptions) -> Result<Encoding, SynthError> {
    let (mut sig, fg) = Signature::with_foreground();
    let label_sort = sig
        .add_sort("Label", SortKind::Background(Theory::Empty))
        .map_err(|e| SynthError::Json(e.to_string()))?;
    let value_sort = if p.value_is_bool() {
        SortId::BOOL
    } else {
        sig.add_sort(&p.value_sort, SortKind::Background(p.theory.clone()))
            .map_err(|e| SynthError::Json(e.to_string()))?
    };

    let paths = skeleton_paths(p.max_depth);
    let nodes: Vec<Var> = paths.iter().map(|r| Var::new(&format!("n{r}"), fg)).collect();
    let index: HashMap<&str, usize> = paths.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
    let children: Vec<RelVar> = CHILD_RELS.iter().map(|n| RelVar::new(n, vec![fg, fg])).collect();
    let labels: Vec<Var> = p.operators.iter().map(|o| Var::new(&o.label, label_sort)).collect();
    let constants: Vec<Var> = p.constants.iter().map(|c| Var::new(c, value_sort)).collect();
    let f_label = FunVar::new("f_label", vec![fg], label_sort);
    let input = Var::new(&p.input, value_sort);
    let valuations: Vec<FunVar> = (0..p.valuations.len())
        .map(|i| FunVar::new(&format!("g{i}"), vec![fg], value_sort))
        .collect();

    let label_of = |i: usize| f_label.apply(vec![nodes[i].term()]);
    let is = |i: usize, k: usize| Formula::eq(label_of(i), labels[k].term());
    let child =
        |r: usize, a: usize, b: usize| Formula::RelVar(children[r].clone(), vec![nodes[a].term(), nodes[b].term()]);
    let child_of = |i: usize, k: usize| -> Option<usize> { index.get(format!("{}{k}", paths[i]).as_str()).copied() };
    let leaf = |i: usize| paths[i].len() - 1 == p.max_depth;

    // well-formedness
    let mut wf = vec![];
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            wf.push(Formula::not(Formula::eq(nodes[i].term(), nodes[j].term())));
        }
    }
    for (r, _) in CHILD_RELS.iter().enumerate() {
        for i in 0..nodes.len() {
            let c = child_of(i, r);
            for j in 0..nodes.len() {
                let lit = child(r, i, j);
                wf.push(if Some(j) == c { lit } else { Formula::not(lit) });
            }
        }
    }
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            wf.push(Formula::not(Formula::eq(labels[i].term(), labels[j].term())));
        }
    }
    let kind_is = |i: usize, kind: &str| {
        Formula::or_all(
            p.operators
                .iter()
                .enumerate()
                .filter(|(_, o)| o.kind.as_deref() == Some(kind))
                .map(|(k, _)| is(i, k))
                .collect(),
        )
    };
    for i in 0..nodes.len() {
        let allowed: Vec<Formula> = p
            .operators
            .iter()
            .enumerate()
            .filter(|(_, o)| !leaf(i) || o.arity == 0)
            .map(|(k, _)| is(i, k))
            .collect();
        wf.push(Formula::or_all(allowed));
        if leaf(i) {
            continue;
        }
        for (k, o) in p.operators.iter().enumerate() {
            let typed: Vec<Formula> = o
                .children
                .iter()
                .enumerate()
                .map(|(c, kind)| kind_is(child_of(i, c).unwrap(), kind))
                .collect();
            if !typed.is_empty() {
                wf.push(Formula::implies(is(i, k), Formula::and_all(typed)));
            }
        }
    }
    if let Some(root) = &p.root {
        wf.push(kind_is(0, root));
    }

    // semantics
    let mut names: HashMap<String, Term> = HashMap::new();
    for c in &constants {
        names.insert(c.name.to_string(), c.term());
    }
    names.insert(p.input.clone(), input.term());
    let roots: Vec<Term> = valuations.iter().map(|g| g.apply(vec![nodes[0].term()])).collect();
    let base = Env {
        value_sort,
        val: None,
        args: &[],
        input_binding: None,
        names: &names,
        roots: &roots,
    };
    let bindings: Vec<Term> = p.valuations.iter().map(|b| base.term(b)).collect::<Result<_, _>>()?;
    for (b, t) in p.valuations.iter().zip(&bindings) {
        if t.sort() != value_sort {
            return Err(terr(b, "valuation binding is not of the value sort"));
        }
    }
    let mut sem = vec![];
    for (k, o) in p.operators.iter().enumerate() {
        for i in 0..nodes.len() {
            let tuples: Vec<Vec<usize>> = if o.arity == 0 {
                vec![vec![]]
            } else if leaf(i) {
                continue;
            } else if opts.all_node_tuples {
                crate::witness::tuples(nodes.len() as u32, o.arity)
                    .into_iter()
                    .map(|t| t.into_iter().map(|x| x as usize).collect())
                    .collect()
            } else {
                vec![(0..o.arity).map(|c| child_of(i, c).unwrap()).collect()]
            };
            for t in tuples {
                let mut hyp = vec![is(i, k)];
                hyp.extend(t.iter().enumerate().map(|(c, &j)| child(c, i, j)));
                let mut concl = vec![];
                for (g, binding) in valuations.iter().zip(&bindings) {
                    let args: Vec<Term> = t.iter().map(|&j| g.apply(vec![nodes[j].term()])).collect();
                    let env = Env {
                        val: Some(g.apply(vec![nodes[i].term()])),
                        args: &args,
                        input_binding: Some(binding.clone()),
                        ..base
                    };
                    concl.push(env.formula(&o.semantics)?);
                }
                sem.push(Formula::implies(Formula::and_all(hyp), Formula::and_all(concl)));
            }
        }
    }
    let spec = base.formula(&p.spec)?;

    let mut exists: Vec<Binder> = nodes.iter().cloned().map(Binder::Var).collect();
    exists.extend(children.iter().cloned().map(Binder::Rel));
    exists.extend(labels.iter().cloned().map(Binder::Var));
    exists.extend(constants.iter().cloned().map(Binder::Var));
    exists.push(Binder::Fun(f_label.clone()));
    let mut forall = vec![Binder::Var(input.clone())];
    forall.extend(valuations.iter().cloned().map(Binder::Fun));
    let matrix = Formula::And(vec![
        Formula::and_all(wf),
        Formula::implies(Formula::and_all(sem), spec),
    ]);
    let sentence = Sentence::new(exists, forall, matrix);
    let diags = validate(&sentence, &sig);
    if let Some(d) = diags.first() {
        return Err(SynthError::Invalid(d.to_string()));
    }
    Ok(Encoding {
        sig,
        sentence,
        paths,
        nodes,
        labels,
        constants,
        input,
        f_label,
        children,
        valuations,
        value_sort,
        label_sort,
    })
}

/// A synthesized program: an s-expression over the input, numerals and the
/// operators of the render templates.
#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub term: Sexp,
    /// Skeleton path and label of every reachable node, pre-order.
    pub labels: Vec<(String, String)>,
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&sexp_text(&self.term))
    }
}

pub fn sexp_text(s: &Sexp) -> String {
    match s {
        Sexp::Atom(a, _) => a.clone(),
        Sexp::Str(a, _) => format!("{a:?}"),
        Sexp::List(items, _) => format!("({})", items.iter().map(sexp_text).collect::<Vec<_>>().join(" ")),
    }
}

fn atom(s: &str) -> Sexp {
    Sexp::Atom(s.into(), Span::default())
}

fn substitute(t: &Sexp, map: &HashMap<String, Sexp>) -> Sexp {
    match t {
        Sexp::Atom(a, _) => map.get(a).cloned().unwrap_or_else(|| t.clone()),
        Sexp::List(items, sp) => Sexp::List(items.iter().map(|x| substitute(x, map)).collect(), *sp),
        other => other.clone(),
    }
}

fn value_text(v: &Value) -> String {
    match v {
        Value::Bool(b) => b.to_string(),
        Value::Elem(e) => format!("e{e}"),
        Value::Num(n) => n.to_string(),
    }
}

/// Reads the labelled tree rooted at `n0` off a witness of the encoding.
pub fn decode(w: &Witness, enc: &Encoding, p: &SynthesisProblem) -> Result<Program, SynthError> {
    let elem = |v: &Var| -> Result<Value, SynthError> {
        w.value(&v.name)
            .cloned()
            .ok_or_else(|| SynthError::Decode(format!("no value for `{}`", v.name)))
    };
    let mut label_of_value: HashMap<Value, usize> = HashMap::new();
    for (k, l) in enc.labels.iter().enumerate() {
        if label_of_value.insert(elem(l)?, k).is_some() {
            return Err(SynthError::Decode(format!(
                "label `{}` coincides with another label",
                l.name
            )));
        }
    }
    let mut consts: HashMap<String, Sexp> = HashMap::new();
    for c in &enc.constants {
        consts.insert(c.name.to_string(), atom(&value_text(&elem(c)?)));
    }
    let node_elem: Vec<u32> = enc
        .nodes
        .iter()
        .map(|n| {
            elem(n)?
                .as_elem()
                .ok_or_else(|| SynthError::Decode(format!("`{}` is not an element", n.name)))
        })
        .collect::<Result<_, _>>()?;
    let path_of = |e: u32| enc.paths[node_elem.iter().position(|&x| x == e).unwrap_or(0)].clone();

    let mut labels = vec![];
    fn build(
        e: u32,
        depth: usize,
        ctx: &(
            &Witness,
            &Encoding,
            &SynthesisProblem,
            &HashMap<Value, usize>,
            &HashMap<String, Sexp>,
        ),
        path_of: &dyn Fn(u32) -> String,
        labels: &mut Vec<(String, String)>,
    ) -> Result<Sexp, SynthError> {
        let (w, enc, p, label_of_value, consts) = *ctx;
        if depth > p.max_depth {
            return Err(SynthError::Decode(
                "child relations are deeper than the skeleton".into(),
            ));
        }
        let lv = w
            .apply(enc.f_label.id, &[e])
            .ok_or_else(|| SynthError::Decode("no f_label table".into()))?;
        let k = *label_of_value
            .get(lv)
            .ok_or_else(|| SynthError::Decode(format!("node e{e} has no operator label")))?;
        let op = &p.operators[k];
        labels.push((path_of(e), op.label.clone()));
        let mut map = consts.clone();
        for c in 0..op.arity {
            let set = w
                .relation(&enc.children[c].name)
                .ok_or_else(|| SynthError::Decode("no child relation".into()))?;
            let kids: Vec<u32> = set.iter().filter(|t| t[0] == e).map(|t| t[1]).collect();
            if kids.len() != 1 {
                return Err(SynthError::Decode(format!(
                    "node e{e} has {} `{}` children",
                    kids.len(),
                    enc.children[c].name
                )));
            }
            map.insert(format!("arg{c}"), build(kids[0], depth + 1, ctx, path_of, labels)?);
        }
        Ok(substitute(&op.render, &map))
    }
    let ctx = (w, enc, p, &label_of_value, &consts);
    let term = build(node_elem[0], 0, &ctx, &path_of, &mut labels)?;
    Ok(Program { term, labels })
}

/// Value of a program or template evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Val {
    Int(i128),
    Bool(bool),
}

fn eerr(t: &Sexp, m: &str) -> SynthError {
    SynthError::Eval(format!("{m} in `{}`", sexp_text(t)))
}

/// Evaluates a program term with the input bound to `x`.
pub fn eval(t: &Sexp, input: &str, x: Val) -> Result<Val, SynthError> {
    let int = |v: Val| match v {
        Val::Int(n) => Ok(n),
        Val::Bool(_) => Err(eerr(t, "expected an integer")),
    };
    let boolean = |v: Val| match v {
        Val::Bool(b) => Ok(b),
        Val::Int(_) => Err(eerr(t, "expected a boolean")),
    };
    match t {
        Sexp::Atom(a, _) if a == input => Ok(x),
        Sexp::Atom(a, _) if a == "true" => Ok(Val::Bool(true)),
        Sexp::Atom(a, _) if a == "false" => Ok(Val::Bool(false)),
        Sexp::Atom(a, _) => numeral(a)
            .and_then(|n| n.parse().ok())
            .map(Val::Int)
            .ok_or_else(|| eerr(t, "unknown symbol")),
        Sexp::List(items, _) => {
            let head = t.head().ok_or_else(|| eerr(t, "expected an operator"))?;
            let args = items[1..]
                .iter()
                .map(|a| eval(a, input, x))
                .collect::<Result<Vec<_>, _>>()?;
            let ints = || args.iter().map(|&a| int(a)).collect::<Result<Vec<_>, _>>();
            let bools = || args.iter().map(|&a| boolean(a)).collect::<Result<Vec<_>, _>>();
            let pair = || -> Result<(i128, i128), SynthError> {
                match ints()?.as_slice() {
                    [a, b] => Ok((*a, *b)),
                    _ => Err(eerr(t, "expected two arguments")),
                }
            };
            let overflow = || eerr(t, "integer overflow");
            Ok(match head {
                "ite" => match args.as_slice() {
                    [c, a, b] => {
                        if boolean(*c)? {
                            *a
                        } else {
                            *b
                        }
                    }
                    _ => return Err(eerr(t, "expected three arguments")),
                },
                "+" => Val::Int(
                    ints()?
                        .iter()
                        .try_fold(0i128, |a, &b| a.checked_add(b))
                        .ok_or_else(overflow)?,
                ),
                "*" => Val::Int(
                    ints()?
                        .iter()
                        .try_fold(1i128, |a, &b| a.checked_mul(b))
                        .ok_or_else(overflow)?,
                ),
                "-" => {
                    let v = ints()?;
                    match v.as_slice() {
                        [a] => Val::Int(a.checked_neg().ok_or_else(overflow)?),
                        [a, rest @ ..] => Val::Int(
                            rest.iter()
                                .try_fold(*a, |a, &b| a.checked_sub(b))
                                .ok_or_else(overflow)?,
                        ),
                        [] => return Err(eerr(t, "expected arguments")),
                    }
                }
                "<" => pair().map(|(a, b)| Val::Bool(a < b))?,
                "<=" => pair().map(|(a, b)| Val::Bool(a <= b))?,
                ">" => pair().map(|(a, b)| Val::Bool(a > b))?,
                ">=" => pair().map(|(a, b)| Val::Bool(a >= b))?,
                "=" => match args.as_slice() {
                    [a, b] => Val::Bool(a == b),
                    _ => return Err(eerr(t, "expected two arguments")),
                },
                "and" => Val::Bool(bools()?.iter().all(|&b| b)),
                "or" => Val::Bool(bools()?.iter().any(|&b| b)),
                "not" => match bools()?.as_slice() {
                    [b] => Val::Bool(!b),
                    _ => return Err(eerr(t, "expected one argument")),
                },
                _ => return Err(eerr(t, "unknown operator")),
            })
        }
        Sexp::Str(..) => Err(eerr(t, "string literal")),
    }
}

/// Evaluates a template formula or term over integers and booleans, with
/// `(g i)` bound to `roots[i]` and the input to `x`.
fn eval_template(t: &Sexp, input: &str, x: Val, roots: &[Val]) -> Result<Val, SynthError> {
    match t {
        Sexp::List(items, _) if t.head() == Some("g") => {
            let i: usize = items
                .get(1)
                .and_then(Sexp::atom)
                .and_then(|i| i.parse().ok())
                .ok_or_else(|| eerr(t, "bad index"))?;
            roots.get(i).copied().ok_or_else(|| eerr(t, "no such valuation"))
        }
        Sexp::List(items, sp) => {
            let head = t.head().unwrap_or("");
            if matches!(head, "=>" | "iff" | "distinct") {
                let a = eval_template(&items[1], input, x, roots)?;
                let b = eval_template(&items[2], input, x, roots)?;
                return Ok(Val::Bool(match (head, a, b) {
                    ("=>", Val::Bool(a), Val::Bool(b)) => !a || b,
                    ("iff", Val::Bool(a), Val::Bool(b)) => a == b,
                    ("distinct", a, b) => a != b,
                    _ => return Err(eerr(t, "ill-typed")),
                }));
            }
            // evaluate arguments first, then the operator on literal arguments
            let args: Vec<Sexp> = items[1..]
                .iter()
                .map(|a| eval_template(a, input, x, roots).map(val_sexp))
                .collect::<Result<_, _>>()?;
            let mut list = vec![items[0].clone()];
            list.extend(args);
            eval(&Sexp::List(list, *sp), input, x)
        }
        _ => eval(t, input, x),
    }
}

fn val_sexp(v: Val) -> Sexp {
    atom(&match v {
        Val::Int(n) => n.to_string(),
        Val::Bool(b) => b.to_string(),
    })
}

/// Runs the program through every valuation and evaluates the spec at one
/// input value.
pub fn spec_holds_at(prog: &Program, p: &SynthesisProblem, x: Val) -> Result<bool, SynthError> {
    let mut roots: Vec<Val> = vec![];
    for b in &p.valuations {
        let arg = eval_template(b, &p.input, x, &roots)?;
        roots.push(eval(&prog.term, &p.input, arg)?);
    }
    match eval_template(&p.spec, &p.input, x, &roots)? {
        Val::Bool(b) => Ok(b),
        Val::Int(_) => Err(SynthError::Eval("spec is not a formula".into())),
    }
}

fn smt(t: &Sexp, map: &dyn Fn(&str) -> Option<String>) -> String {
    match t {
        Sexp::Atom(a, _) => {
            if let Some(s) = map(a) {
                return s;
            }
            match a.strip_prefix('-') {
                Some(pos) if is_numeral(pos) => format!("(- {pos})"),
                _ => a.clone(),
            }
        }
        Sexp::List(items, _) if t.head() == Some("g") => {
            format!("g{}", items.get(1).and_then(Sexp::atom).unwrap_or("0"))
        }
        Sexp::List(items, _) => {
            let parts: Vec<String> = items.iter().map(|x| smt(x, map)).collect();
            format!("({})", parts.join(" "))
        }
        Sexp::Str(a, _) => format!("{a:?}"),
    }
}

/// SMT-LIB script whose answer is `unsat` iff the program meets the spec
/// for every input.
pub fn check_script(prog: &Program, p: &SynthesisProblem, logic: &str) -> String {
    let sort = if p.value_is_bool() {
        "Bool".to_string()
    } else {
        p.theory.smt_sort().unwrap_or("Int").to_string()
    };
    let input = format!("in_{}", p.input);
    let mut out = format!("(set-logic {logic})\n(declare-const {input} {sort})\n");
    let as_param = |a: &str| (a == p.input).then(|| "arg".to_string());
    out.push_str(&format!(
        "(define-fun prog ((arg {sort})) {sort} {})\n",
        smt(&prog.term, &as_param)
    ));
    let as_input = |a: &str| (a == p.input).then(|| input.clone());
    for (i, b) in p.valuations.iter().enumerate() {
        out.push_str(&format!("(define-fun g{i} () {sort} (prog {}))\n", smt(b, &as_input)));
    }
    out.push_str(&format!(
        "(assert (not {}))\n(check-sat)\n(get-value ({input}))\n(exit)\n",
        smt(&p.spec, &as_input)
    ));
    out
}

/// Asks the backend whether some input violates the spec.
pub fn check_program(prog: &Program, p: &SynthesisProblem, ext: &External) -> Report {
    let logic = if p.value_is_bool() {
        "QF_UF".to_string()
    } else {
        format!("QF_{}", p.theory.logic())
    };
    let logic = if logic == "QF_ALL" { "ALL".to_string() } else { logic };
    let script = check_script(prog, p, &logic);
    let out = match ext.run("check-program", &script) {
        Ok(o) => o,
        Err(e) => return Report::Inconclusive(e.to_string()),
    };
    let r = parse_verdict(&out);
    match r.verdict {
        QueryVerdict::Unsat => Report::Pass,
        QueryVerdict::Sat(_) => Report::Fail(match r.values.first() {
            Some((_, v)) => format!("{} = {v}", p.input),
            None => "counterexample".into(),
        }),
        QueryVerdict::Unknown(why) => Report::Inconclusive(why),
    }
}

/// Infix rendering for people: `ite(x > 13, x - 30, -16)`.
pub fn pretty(t: &Sexp) -> String {
    render(t, true)
}

fn render(t: &Sexp, bare: bool) -> String {
    let Sexp::List(items, _) = t else {
        return sexp_text(t);
    };
    let head = t.head().unwrap_or("");
    let args = &items[1..];
    let infix = |op: &str, a: &Sexp, b: String| {
        let s = format!("{} {op} {b}", render(a, false));
        if bare {
            s
        } else {
            format!("({s})")
        }
    };
    match (head, args) {
        ("+", [a, Sexp::Atom(b, _)]) if b.starts_with('-') && numeral(b).is_some() => infix("-", a, b[1..].to_string()),
        ("+" | "-" | "*" | "<" | "<=" | ">" | ">=" | "=" | "and" | "or", [a, b]) => infix(head, a, render(b, false)),
        ("-", [a]) => format!("-{}", render(a, false)),
        ("not", [a]) => format!("!{}", render(a, false)),
        _ => format!(
            "{head}({})",
            args.iter().map(|a| render(a, true)).collect::<Vec<_>>().join(", ")
        ),
    }
}

/// Result of [`synthesize`].
#[derive(Clone, Debug)]
pub struct Synthesis {
    pub solve: SolveResult,
    pub program: Option<Program>,
    pub check: Option<Report>,
}

/// Encodes, solves and decodes; the decoded program is checked against the
/// spec when an external backend is available.
pub fn synthesize(
    p: &SynthesisProblem,
    backends: &Backends,
    opts: &SolveOptions,
    enc_opts: &EncodeOptions,
) -> Result<Synthesis, SynthSolveError> {
    let enc = encode(p, enc_opts)?;
    let solve = solve(&enc.sentence, &enc.sig, backends, opts)?;
    let (program, check) = match (&solve.answer, &solve.witness) {
        (Answer::Sat, Some(w)) => {
            let prog = decode(w, &enc, p)?;
            let check = backends.external.as_ref().map(|e| check_program(&prog, p, e));
            (Some(prog), check)
        }
        _ => (None, None),
    };
    Ok(Synthesis { solve, program, check })
}

#[derive(Clone, Debug, Error)]
pub enum SynthSolveError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}
