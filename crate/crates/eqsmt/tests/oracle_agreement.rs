use std::collections::HashMap;

use eqsmt::backends::Backends;
use eqsmt::logic::SortId;
use eqsmt::oracle::{brute_force_sat, OracleVerdict};
use eqsmt::parser::print_sentence;
use eqsmt::random::corpus_instance;
use eqsmt::solve::{solve, Answer, SolveOptions};
use eqsmt::witness::Report;

#[test]
fn pipeline_agrees_with_oracle_on_random_instances() {
    let mut sat = 0;
    for seed in 0..120u64 {
        let (sig, s, _) = corpus_instance(seed);
        let fg = sig.foreground().unwrap();
        let bounds = HashMap::from([(fg, 3), (SortId::BOOL, 2)]);
        let oracle = brute_force_sat(&s, &sig, &bounds).unwrap();
        let r = solve(&s, &sig, &Backends::internal(), &SolveOptions::default()).unwrap();
        let text = print_sentence(&s, &sig);
        match (&r.answer, &oracle) {
            (Answer::Sat, OracleVerdict::Sat { .. }) => {
                sat += 1;
                assert_eq!(r.report, Some(Report::Pass), "seed {seed}: {text}");
            }
            (Answer::Unsat, OracleVerdict::Unsat) => {}
            (a, o) => panic!("seed {seed}: pipeline {a:?} oracle {o:?}\n{text}"),
        }
    }
    assert!(sat > 10);
}
