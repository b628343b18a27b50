//! Lowering of EQSMT sentences to first-order CNF.
//!
//! 1. relation variables become characteristic functions into `Bool`;
//! 2. foreground terms are restricted to the existential foreground
//!    variables and every existential function is replaced by one fresh
//!    existential per argument tuple, tied to a universal emulator;
//! 3. universal function applications are Ackermannized;
//! 4. the matrix is converted to an equivalent CNF by distribution.
//!
//! Every step returns a new sentence and records the symbols it introduced
//! in a [`TransformTrace`] so models can be pulled back.

mod cnf;
mod steps;

pub use cnf::{to_cnf, truth_table_equivalent, Clause, CnfError, CnfSentence, Literal, DEFAULT_CLAUSE_BUDGET};
pub use steps::{
    step1_eliminate_relvars, step2_eliminate_existential_funs, step2_restrict_foreground, step3_ackermannize, AckApp,
    FunElim, TransformError, TransformTrace, DEFAULT_TUPLE_BUDGET,
};

use crate::logic::{Sentence, Signature};

/// Output of Steps 1-3 together with every intermediate stage.
#[derive(Clone, Debug)]
pub struct Lowered {
    pub norel: Sentence,
    pub restricted: Sentence,
    pub nofun: Sentence,
    pub ack: Sentence,
    pub trace: TransformTrace,
}

#[derive(Clone, Copy, Debug)]
pub struct TransformOptions {
    pub tuple_budget: usize,
    pub clause_budget: usize,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions {
            tuple_budget: DEFAULT_TUPLE_BUDGET,
            clause_budget: DEFAULT_CLAUSE_BUDGET,
        }
    }
}

/// Runs Steps 1-3 on a validated sentence.
pub fn lower(s: &Sentence, sig: &Signature, opts: &TransformOptions) -> Result<Lowered, TransformError> {
    let mut trace = TransformTrace::default();
    let norel = step1_eliminate_relvars(s, &mut trace);
    let restricted = step2_restrict_foreground(&norel, sig, &mut trace);
    let nofun = step2_eliminate_existential_funs(&restricted, opts.tuple_budget, &mut trace)?;
    let ack = step3_ackermannize(&nofun, &mut trace);
    Ok(Lowered {
        norel,
        restricted,
        nofun,
        ack,
        trace,
    })
}
