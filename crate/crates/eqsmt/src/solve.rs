//! End-to-end solving: lowering, CNF, per-sort decomposition or the
//! combined exists-forall loop, witness pullback and validation.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::backends::{is_internal, solve_combined, Backends, CombinedOptions, CombinedOutcome, MissingBackend};
use crate::decompose::{solve_cnf, Contract, DecomposeError, DecomposeOptions, DecomposeStats, Verdict};
use crate::logic::{Binder, Sentence, Signature, SortId, Value, VarId};
use crate::parser::print_problem;
use crate::transform::{lower, to_cnf, CnfError, Lowered, TransformError, TransformOptions};
use crate::witness::{pull_back, validate_witness, Report, Witness};

/// How the lowered first-order sentence is decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// CNF plus contract search over per-sort queries.
    Decompose,
    /// Exists-forall loop over quantifier-free backend queries.
    Combined,
    /// Decompose, falling back to Combined when the CNF exceeds its budget,
    /// or `AUTO_CLAUSE_BUDGET` clauses if an external backend is configured.
    Auto,
}

impl Strategy {
    pub fn parse(s: &str) -> Option<Strategy> {
        match s {
            "decompose" => Some(Strategy::Decompose),
            "combined" => Some(Strategy::Combined),
            "auto" => Some(Strategy::Auto),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Decompose => "decompose",
            Strategy::Combined => "combined",
            Strategy::Auto => "auto",
        }
    }
}

/// Past this many clauses the contract search over background sorts rarely
/// finishes, while the combined loop does not depend on the CNF size.
pub const AUTO_CLAUSE_BUDGET: usize = 5_000;

fn cnf_budget(opts: &SolveOptions, backends: &Backends) -> usize {
    match opts.strategy {
        Strategy::Auto if backends.external.is_some() => opts.transform.clause_budget.min(AUTO_CLAUSE_BUDGET),
        _ => opts.transform.clause_budget,
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub strategy: Strategy,
    pub jobs: usize,
    pub max_contracts: Option<usize>,
    pub pruned: bool,
    pub transform: TransformOptions,
    /// Overall time budget of the combined loop.
    pub timeout: Option<Duration>,
    pub trace_dir: Option<PathBuf>,
    /// Run [`validate_witness`] on SAT answers.
    pub validate: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            strategy: Strategy::Auto,
            jobs: 1,
            max_contracts: None,
            pruned: true,
            transform: TransformOptions::default(),
            timeout: None,
            trace_dir: None,
            validate: true,
        }
    }
}

#[derive(Clone, Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    MissingBackend(#[from] MissingBackend),
    #[error("cannot write trace: {0}")]
    Trace(String),
    #[error("{0}")]
    Internal(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Answer {
    Sat,
    Unsat,
    Unknown(String),
}

impl Answer {
    pub fn label(&self) -> &'static str {
        match self {
            Answer::Sat => "sat",
            Answer::Unsat => "unsat",
            Answer::Unknown(_) => "unknown",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolveStats {
    pub clauses: usize,
    pub atoms: usize,
    pub decompose: DecomposeStats,
    pub combined_iterations: usize,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub answer: Answer,
    /// Strategy that produced the answer.
    pub strategy: Strategy,
    pub contract: Option<Contract>,
    pub witness: Option<Witness>,
    pub report: Option<Report>,
    pub stats: SolveStats,
}

/// Sorts mentioned by binders or terms of `s`.
pub fn sorts_used(s: &Sentence) -> BTreeSet<SortId> {
    let mut out = BTreeSet::new();
    for b in s.binders() {
        match b {
            Binder::Var(v) => {
                out.insert(v.sort);
            }
            Binder::Fun(f) => {
                out.extend(f.args.iter().copied());
                out.insert(f.result);
            }
            Binder::Rel(r) => out.extend(r.args.iter().copied()),
        }
    }
    s.matrix.visit_terms(&mut |t| {
        t.visit(&mut |u| {
            out.insert(u.sort());
        })
    });
    out
}

/// Fails when a sort needs an external backend and none is configured.
pub fn check_backends(s: &Sentence, sig: &Signature, backends: &Backends) -> Result<(), MissingBackend> {
    for sort in sorts_used(s) {
        if !is_internal(sig, sort) {
            backends.for_sort(sig, sort)?;
        }
    }
    Ok(())
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), SolveError> {
    fs::write(dir.join(name), text).map_err(|e| SolveError::Trace(format!("{}: {e}", dir.join(name).display())))
}

fn dump_stages(dir: &Path, sig: &Signature, l: &Lowered) -> Result<(), SolveError> {
    write(
        dir,
        "01-norel.eqsmt",
        &print_problem(sig, std::slice::from_ref(&l.norel)),
    )?;
    write(
        dir,
        "02-restrict.eqsmt",
        &print_problem(sig, std::slice::from_ref(&l.restricted)),
    )?;
    write(
        dir,
        "03-nofun.eqsmt",
        &print_problem(sig, std::slice::from_ref(&l.nofun)),
    )?;
    write(dir, "04-ack.eqsmt", &print_problem(sig, std::slice::from_ref(&l.ack)))
}

/// Decides `s`. SAT answers carry a witness for `s` itself.
pub fn solve(
    s: &Sentence,
    sig: &Signature,
    backends: &Backends,
    opts: &SolveOptions,
) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    check_backends(s, sig, backends)?;
    let mut backends = backends.clone();
    if let Some(dir) = &opts.trace_dir {
        fs::create_dir_all(dir).map_err(|e| SolveError::Trace(format!("{}: {e}", dir.display())))?;
        if let Some(ext) = &mut backends.external {
            ext.trace_dir = Some(dir.clone());
        }
    }
    let mut stats = SolveStats::default();
    let mut result = SolveResult {
        answer: Answer::Unknown(String::new()),
        strategy: opts.strategy,
        contract: None,
        witness: None,
        report: None,
        stats: SolveStats::default(),
    };

    let lowered = match lower(s, sig, &opts.transform) {
        Ok(l) => l,
        Err(e @ TransformError::TupleBudget { .. }) => {
            result.answer = Answer::Unknown(e.to_string());
            result.stats.elapsed = start.elapsed();
            return Ok(result);
        }
    };
    if let Some(dir) = &opts.trace_dir {
        dump_stages(dir, sig, &lowered)?;
    }

    let cnf = match opts.strategy {
        Strategy::Combined => None,
        _ => match to_cnf(&lowered.ack, cnf_budget(opts, &backends)) {
            Ok(c) => Some(c),
            Err(CnfError::Budget { budget }) if opts.strategy == Strategy::Auto && backends.external.is_some() => {
                if let Some(dir) = &opts.trace_dir {
                    write(
                        dir,
                        "05-cnf.eqsmt",
                        &format!("; CNF exceeds {budget} clauses; solved with the combined strategy\n"),
                    )?;
                }
                None
            }
            Err(e) => {
                result.answer = Answer::Unknown(e.to_string());
                result.stats.elapsed = start.elapsed();
                return Ok(result);
            }
        },
    };

    let model: Option<std::collections::HashMap<VarId, Value>> = match cnf {
        Some(cnf) => {
            result.strategy = Strategy::Decompose;
            stats.clauses = cnf.clauses.len();
            stats.atoms = cnf.atoms.len();
            if let Some(dir) = &opts.trace_dir {
                write(dir, "05-cnf.eqsmt", &print_problem(sig, &[cnf.to_sentence()]))?;
            }
            let dopts = DecomposeOptions {
                pruned: opts.pruned,
                jobs: opts.jobs,
                max_contracts: opts.max_contracts,
            };
            let d = solve_cnf(&cnf, sig, &backends, &dopts).map_err(|e| match e {
                DecomposeError::MissingBackend(m) => SolveError::MissingBackend(m),
                other => SolveError::Internal(other.to_string()),
            })?;
            if let Some(dir) = &opts.trace_dir {
                let mut log = d.log.join("\n");
                log.push('\n');
                write(dir, "contracts.log", &log)?;
            }
            stats.decompose = d.stats;
            match d.verdict {
                Verdict::Sat { contract, model } => {
                    result.contract = Some(contract);
                    Some(model)
                }
                Verdict::Unsat => {
                    result.answer = Answer::Unsat;
                    None
                }
                Verdict::Unknown(why) => {
                    result.answer = Answer::Unknown(why);
                    None
                }
            }
        }
        None => {
            result.strategy = Strategy::Combined;
            let Some(ext) = &backends.external else {
                return Err(SolveError::Internal(
                    "the combined strategy needs an external backend".into(),
                ));
            };
            let copts = CombinedOptions {
                deadline: opts.timeout.map(|t| start + t),
                ..CombinedOptions::default()
            };
            let (outcome, cstats) = solve_combined(&lowered.ack, &lowered.trace.ack_vars(), sig, ext, &copts);
            stats.combined_iterations = cstats.iterations;
            if let Some(dir) = &opts.trace_dir {
                let log = format!(
                    "combined: {} iterations, {} exact instances, {} optimistic instances => {}\n",
                    cstats.iterations,
                    cstats.exact_instances,
                    cstats.optimistic_instances,
                    match &outcome {
                        CombinedOutcome::Sat(_) => "sat",
                        CombinedOutcome::Unsat => "unsat",
                        CombinedOutcome::Unknown(_) => "unknown",
                    }
                );
                write(dir, "contracts.log", &log)?;
            }
            match outcome {
                CombinedOutcome::Sat(m) => Some(m),
                CombinedOutcome::Unsat => {
                    result.answer = Answer::Unsat;
                    None
                }
                CombinedOutcome::Unknown(why) => {
                    result.answer = Answer::Unknown(why);
                    None
                }
            }
        }
    };

    if let Some(model) = model {
        let w = pull_back(&model, &lowered.trace, s, sig).map_err(|e| SolveError::Internal(e.to_string()))?;
        if opts.validate {
            result.report = Some(validate_witness(&w, s, sig, backends.external.as_ref()));
        }
        result.witness = Some(w);
        result.answer = Answer::Sat;
    }
    stats.elapsed = start.elapsed();
    result.stats = stats;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn run(text: &str) -> SolveResult {
        let p = parse(text).unwrap();
        solve(&p.sentence(), &p.sig, &Backends::internal(), &SolveOptions::default()).unwrap()
    }

    #[test]
    fn trivial_answers() {
        let r = run("(declare-sort FG :foreground)(assert-eqsmt true)");
        assert_eq!(r.answer, Answer::Sat);
        assert_eq!(r.report, Some(Report::Pass));
        let r = run("(declare-sort FG :foreground)(assert-eqsmt false)");
        assert_eq!(r.answer, Answer::Unsat);
    }

    #[test]
    fn witness_passes_on_a_relation_problem() {
        let r = run("(declare-sort FG :foreground)
             (assert-eqsmt (exists ((a FG) (b FG) (R (Rel FG FG)))
               (forall ((y FG)) (and (not (= a b)) (R a y) (not (R b y))))))");
        assert_eq!(r.answer, Answer::Sat);
        assert_eq!(r.report, Some(Report::Pass));
        let w = r.witness.unwrap();
        assert_eq!(w.universe, 2);
        assert_eq!(w.relation("R").unwrap().len(), 2);
    }

    #[test]
    fn missing_backend_names_the_theory() {
        let p = parse(
            "(declare-sort FG :foreground)(declare-sort Int :background lia)
             (assert-eqsmt (exists ((x Int)) (= x x)))",
        )
        .unwrap();
        let err = solve(&p.sentence(), &p.sig, &Backends::internal(), &SolveOptions::default()).unwrap_err();
        assert!(err.to_string().contains("lia"), "{err}");
    }

    #[test]
    fn trace_files_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let p =
            parse("(declare-sort FG :foreground)(assert-eqsmt (exists ((a FG)) (forall ((y FG)) (= a y))))").unwrap();
        let opts = SolveOptions {
            trace_dir: Some(dir.path().to_path_buf()),
            ..SolveOptions::default()
        };
        let r = solve(&p.sentence(), &p.sig, &Backends::internal(), &opts).unwrap();
        assert_eq!(r.answer, Answer::Sat);
        for f in [
            "01-norel.eqsmt",
            "02-restrict.eqsmt",
            "03-nofun.eqsmt",
            "04-ack.eqsmt",
            "05-cnf.eqsmt",
            "contracts.log",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        for f in ["01-norel.eqsmt", "05-cnf.eqsmt"] {
            let text = fs::read_to_string(dir.path().join(f)).unwrap();
            assert!(parse(&text).is_ok(), "{f}: {text}");
        }
    }
}
