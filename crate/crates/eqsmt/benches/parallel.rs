//! Sequential against rayon-parallel execution on the two data-parallel hot
//! spots: an oracle sweep over random instances, and the unpruned contract
//! search, whose top-level subtrees are independent.

use std::collections::HashMap;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use eqsmt::backends::Backends;
use eqsmt::logic::{Sentence, Signature, SortId};
use eqsmt::oracle::brute_force_sat;
use eqsmt::par;
use eqsmt::random::corpus_instance;
use eqsmt::solve::{solve, SolveOptions};

fn corpus(n: u64) -> Vec<(Signature, Sentence)> {
    (0..n).map(corpus_instance).map(|(sig, s, _)| (sig, s)).collect()
}

fn jobs() -> Vec<usize> {
    let mut js = vec![1, par::default_jobs().max(2)];
    js.dedup();
    js
}

fn oracle_sweep(c: &mut Criterion) {
    let items = corpus(40);
    let mut g = c.benchmark_group("oracle_sweep");
    for jobs in jobs() {
        g.bench_with_input(BenchmarkId::from_parameter(jobs), &jobs, |b, &jobs| {
            b.iter(|| {
                par::map(&items, jobs, |_, (sig, s)| {
                    let fg = sig.foreground().unwrap();
                    brute_force_sat(s, sig, &HashMap::from([(fg, 3), (SortId::BOOL, 2)]))
                        .unwrap()
                        .is_sat()
                })
            })
        });
    }
    g.finish();
}

fn contract_search(c: &mut Criterion) {
    let items = corpus(40);
    let mut g = c.benchmark_group("unpruned_contract_search");
    for jobs in jobs() {
        let opts = SolveOptions {
            jobs,
            pruned: false,
            validate: false,
            ..SolveOptions::default()
        };
        g.bench_with_input(BenchmarkId::from_parameter(jobs), &opts, |b, opts| {
            b.iter(|| {
                items
                    .iter()
                    .map(|(sig, s)| solve(s, sig, &Backends::internal(), opts).unwrap().answer.label())
                    .collect::<Vec<_>>()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, oracle_sweep, contract_search);
criterion_main!(benches);
