use std::collections::HashMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use eqsmt::backends::Backends;
use eqsmt::decompose::{atom_sorts, candidate_sorts};
use eqsmt::logic::{Formula, Sentence, Signature, SortId};
use eqsmt::oracle::brute_force_sat;
use eqsmt::parser::{parse, print_problem};
use eqsmt::random::{random_sentence, Params};
use eqsmt::solve::{solve, Answer, SolveOptions};
use eqsmt::transform::{lower, to_cnf, truth_table_equivalent, TransformOptions};
use eqsmt::witness::Report;

fn instance(seed: u64) -> (Signature, Sentence) {
    random_sentence(&mut ChaCha8Rng::seed_from_u64(seed), &Params::default())
}

fn small(seed: u64) -> (Signature, Sentence) {
    let p = Params {
        max_exists_fg: 2,
        max_forall: 1,
        max_second_order: 1,
        max_apps: 2,
        ..Params::default()
    };
    random_sentence(&mut ChaCha8Rng::seed_from_u64(seed), &p)
}

fn ack_conjuncts(f: &Formula) -> usize {
    match f {
        Formula::Implies(a, _) => match a.as_ref() {
            Formula::And(fs) => fs.len(),
            _ => 1,
        },
        _ => 0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let (sig, s) = instance(seed);
        let text = print_problem(&sig, &[s]);
        let back = parse(&text).unwrap();
        prop_assert_eq!(print_problem(&back.sig, &back.sentences), text);
    }

    #[test]
    fn fresh_variables_and_ackermann_pairs(seed in any::<u64>()) {
        let (sig, s) = instance(seed);
        let l = lower(&s, &sig, &TransformOptions::default()).unwrap();
        let n = l.trace.x0.len();
        for e in &l.trace.step2 {
            prop_assert_eq!(e.vars.len(), n.pow(e.fun.args.len() as u32));
        }
        let mut total = 0;
        for (f, pairs) in &l.trace.ack_pairs {
            let k = l.trace.step3.iter().filter(|a| &a.fun == f).count();
            prop_assert_eq!(*pairs, k * k.saturating_sub(1) / 2);
            total += pairs;
        }
        if total > 0 {
            prop_assert_eq!(ack_conjuncts(&l.ack.matrix), total);
        }
    }

    #[test]
    fn cnf_is_equivalent(seed in any::<u64>()) {
        let (sig, s) = instance(seed);
        let l = lower(&s, &sig, &TransformOptions::default()).unwrap();
        if let Ok(cnf) = to_cnf(&l.ack, 20_000) {
            if let Some(eq) = truth_table_equivalent(&l.ack.matrix, &cnf, 14) {
                prop_assert!(eq);
            }
        }
    }

    #[test]
    fn contract_count_within_bound(seed in any::<u64>()) {
        let (sig, s) = instance(seed);
        let l = lower(&s, &sig, &TransformOptions::default()).unwrap();
        if let Ok(cnf) = to_cnf(&l.ack, 20_000) {
            let sorts = atom_sorts(&cnf, &sig).unwrap();
            let bound = (sig.num_sorts() as f64).powi(cnf.clauses.len() as i32);
            for pruned in [true, false] {
                let product: f64 = candidate_sorts(&cnf, &sig, &sorts, pruned).iter().map(|c| c.len() as f64).product();
                prop_assert!(product <= bound);
            }
        }
    }

    #[test]
    fn verdict_independent_of_jobs(seed in any::<u64>()) {
        let (sig, s) = small(seed);
        let one = solve(&s, &sig, &Backends::internal(), &SolveOptions::default()).unwrap();
        let many = solve(&s, &sig, &Backends::internal(), &SolveOptions { jobs: 4, ..SolveOptions::default() }).unwrap();
        prop_assert_eq!(one.answer.label(), many.answer.label());
        prop_assert_eq!(one.contract, many.contract);
    }

    #[test]
    fn small_instances_agree_with_oracle(seed in any::<u64>()) {
        let (sig, s) = small(seed);
        let fg = sig.foreground().unwrap();
        let r = solve(&s, &sig, &Backends::internal(), &SolveOptions::default()).unwrap();
        if let Ok(o) = brute_force_sat(&s, &sig, &HashMap::from([(fg, 3), (SortId::BOOL, 2)])) {
            match r.answer {
                Answer::Sat => {
                    prop_assert!(o.is_sat());
                    prop_assert_eq!(r.report, Some(Report::Pass));
                }
                Answer::Unsat => prop_assert!(!o.is_sat()),
                Answer::Unknown(why) => prop_assert!(false, "unknown: {}", why),
            }
        }
    }
}
