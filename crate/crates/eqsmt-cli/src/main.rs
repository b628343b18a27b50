use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value as Json};

use eqsmt::backends::{Backends, External};
use eqsmt::logic::{Sentence, Signature, SortId};
use eqsmt::oracle::{brute_force_sat, OracleVerdict};
use eqsmt::parser::{parse, Directives};
use eqsmt::solve::{solve, Answer, SolveOptions, SolveResult, Strategy};
use eqsmt::synth::{pretty, synthesize, EncodeOptions, SynthesisProblem};
use eqsmt::witness::Report;

const JSON_VERSION: u32 = 1;
const EXIT_SAT: u8 = 0;
const EXIT_UNSAT: u8 = 1;
const EXIT_UNKNOWN: u8 = 2;
const EXIT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(
    name = "eqsmt",
    version,
    about = "Decide exists-forall second-order sentences and synthesize programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide an .eqsmt file: prints sat, unsat or unknown.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Write the witness JSON here on sat.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Synthesize a program from a problem.json.
    Synth {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Write the witness JSON of the program encoding here on sat.
        #[arg(long)]
        model_out: Option<PathBuf>,
        /// Emit operator semantics for every node tuple, not only children.
        #[arg(long)]
        all_node_tuples: bool,
    },
    /// Brute-force finite model search, for cross-checking small files.
    Oracle {
        file: PathBuf,
        /// Universe bounds, e.g. `FG=2,Bool=2`.
        #[arg(long, default_value = "")]
        bound: String,
        /// Machine-readable output.
        #[arg(long)]
        json: bool,
    },
    /// Re-solve every stage file of a trace directory and compare verdicts.
    TraceReplay {
        dir: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Machine-readable output.
    #[arg(long)]
    json: bool,
    /// Dump lowering stages, contract log and backend queries here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Worker threads for the contract search.
    #[arg(long)]
    jobs: Option<usize>,
    /// Cap on clause-to-sort assignment steps.
    #[arg(long)]
    max_contracts: Option<usize>,
    /// Seconds; per backend query and for the combined loop.
    #[arg(long)]
    timeout: Option<f64>,
    /// SMT-LIB 2 solver command reading a script on stdin, e.g. `z3 -in`.
    #[arg(long)]
    backend: Option<String>,
    /// decompose, combined or auto.
    #[arg(long)]
    strategy: Option<String>,
    /// Search every contract instead of pruning by clause sorts.
    #[arg(long)]
    no_prune: bool,
    /// Skip witness validation.
    #[arg(long)]
    no_validate: bool,
}

/// Settings after applying flag > file directive > environment > default.
struct Config {
    backends: Backends,
    opts: SolveOptions,
}

fn config(c: &Common, d: &Directives) -> Result<Config, String> {
    let timeout = c.timeout.or(d.timeout_secs).map(Duration::from_secs_f64);
    let cmd = c
        .backend
        .clone()
        .or_else(|| d.backend.clone())
        .or_else(|| std::env::var("EQSMT_BACKEND_CMD").ok().filter(|s| !s.trim().is_empty()));
    let backends = match cmd {
        Some(cmd) => {
            let mut ext = External::from_command(&cmd)?;
            if timeout.is_some() {
                ext.timeout = timeout;
            }
            Backends::with_external(ext)
        }
        None => Backends::internal(),
    };
    let strategy = match c.strategy.as_deref().or(d.strategy.as_deref()) {
        Some(s) => Strategy::parse(s).ok_or_else(|| format!("unknown strategy `{s}`"))?,
        None => Strategy::Auto,
    };
    Ok(Config {
        backends,
        opts: SolveOptions {
            strategy,
            jobs: c.jobs.unwrap_or_else(eqsmt::par::default_jobs).max(1),
            max_contracts: c.max_contracts.or(d.max_contracts.map(|m| m as usize)),
            pruned: !c.no_prune,
            timeout,
            trace_dir: c.trace.clone(),
            validate: !c.no_validate,
            ..SolveOptions::default()
        },
    })
}

fn exit_for(a: &Answer) -> u8 {
    match a {
        Answer::Sat => EXIT_SAT,
        Answer::Unsat => EXIT_UNSAT,
        Answer::Unknown(_) => EXIT_UNKNOWN,
    }
}

fn fail(json: bool, command: &str, error: Json) -> ExitCode {
    if json {
        println!(
            "{}",
            json!({"version": JSON_VERSION, "command": command, "error": error})
        );
    } else {
        let msg = error
            .get("message")
            .and_then(Json::as_str)
            .map(str::to_string)
            .unwrap_or_else(|| error.to_string());
        eprintln!("error: {msg}");
        if let Some(ds) = error.get("diagnostics").and_then(Json::as_array) {
            for d in ds {
                eprintln!("  {}", d.get("message").and_then(Json::as_str).unwrap_or(""));
            }
        }
    }
    ExitCode::from(EXIT_ERROR)
}

fn message(m: impl ToString) -> Json {
    json!({"message": m.to_string()})
}

fn read(path: &Path) -> Result<String, Json> {
    fs::read_to_string(path).map_err(|e| message(format!("{}: {e}", path.display())))
}

fn report_json(r: &Option<Report>) -> Json {
    match r {
        None => Json::Null,
        Some(Report::Pass) => json!({"status": "pass"}),
        Some(Report::Fail(i)) => json!({"status": "fail", "detail": i}),
        Some(Report::Inconclusive(i)) => json!({"status": "inconclusive", "detail": i}),
    }
}

fn result_json(r: &SolveResult, sig: &Signature) -> Json {
    json!({
        "verdict": r.answer.label(),
        "reason": match &r.answer { Answer::Unknown(w) => Json::from(w.as_str()), _ => Json::Null },
        "strategy": r.strategy.name(),
        "contract": r.contract.as_ref().map(|c| c.iter().map(|&s| sig.sort_name(s)).collect::<Vec<_>>()),
        "witness_check": report_json(&r.report),
        "stats": {
            "clauses": r.stats.clauses,
            "atoms": r.stats.atoms,
            "contract_steps": r.stats.decompose.steps,
            "contracts": r.stats.decompose.leaves,
            "backend_calls": r.stats.decompose.backend_calls,
            "cache_hits": r.stats.decompose.cache_hits,
            "combined_iterations": r.stats.combined_iterations,
            "seconds": r.stats.elapsed.as_secs_f64(),
        },
    })
}

fn write_model(path: &Option<PathBuf>, r: &SolveResult, sig: &Signature) -> Result<(), Json> {
    if let (Some(p), Some(w)) = (path, &r.witness) {
        let text = serde_json::to_string_pretty(&w.to_json(sig)).expect("json");
        fs::write(p, text + "\n").map_err(|e| message(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn cmd_solve(file: &Path, c: &Common, model_out: &Option<PathBuf>) -> ExitCode {
    let text = match read(file) {
        Ok(t) => t,
        Err(e) => return fail(c.json, "solve", e),
    };
    let problem = match parse(&text) {
        Ok(p) => p,
        Err(e) => return fail(c.json, "solve", e.to_json()),
    };
    let cfg = match config(c, &problem.directives) {
        Ok(cfg) => cfg,
        Err(e) => return fail(c.json, "solve", message(e)),
    };
    let s = problem.sentence();
    let r = match solve(&s, &problem.sig, &cfg.backends, &cfg.opts) {
        Ok(r) => r,
        Err(e) => return fail(c.json, "solve", message(e)),
    };
    if let Err(e) = write_model(model_out, &r, &problem.sig) {
        return fail(c.json, "solve", e);
    }
    if c.json {
        let mut out = result_json(&r, &problem.sig);
        out["version"] = json!(JSON_VERSION);
        out["command"] = json!("solve");
        out["witness"] = r.witness.as_ref().map_or(Json::Null, |w| w.to_json(&problem.sig));
        println!("{out}");
    } else {
        println!("{}", r.answer.label());
        if let Answer::Unknown(why) = &r.answer {
            eprintln!("reason: {why}");
        }
        if let Some(rep) = &r.report {
            if !rep.is_pass() {
                eprintln!("witness check: {rep}");
            }
        }
    }
    ExitCode::from(exit_for(&r.answer))
}

fn cmd_synth(file: &Path, c: &Common, model_out: &Option<PathBuf>, all_node_tuples: bool) -> ExitCode {
    let text = match read(file) {
        Ok(t) => t,
        Err(e) => return fail(c.json, "synth", e),
    };
    let p = match SynthesisProblem::from_json(&text) {
        Ok(p) => p,
        Err(e) => return fail(c.json, "synth", message(e)),
    };
    let cfg = match config(c, &Directives::default()) {
        Ok(cfg) => cfg,
        Err(e) => return fail(c.json, "synth", message(e)),
    };
    let enc_opts = EncodeOptions { all_node_tuples };
    let s = match synthesize(&p, &cfg.backends, &cfg.opts, &enc_opts) {
        Ok(s) => s,
        Err(e) => return fail(c.json, "synth", message(e)),
    };
    let sig = eqsmt::synth::encode(&p, &enc_opts).map(|e| e.sig).unwrap_or_default();
    if let Err(e) = write_model(model_out, &s.solve, &sig) {
        return fail(c.json, "synth", e);
    }
    let checked_ok = !matches!(s.check, Some(Report::Fail(_)));
    if c.json {
        let mut out = result_json(&s.solve, &sig);
        out["version"] = json!(JSON_VERSION);
        out["command"] = json!("synth");
        out["problem"] = json!(p.name);
        out["program"] = s.program.as_ref().map_or(Json::Null, |pr| json!(pr.to_string()));
        out["pretty"] = s.program.as_ref().map_or(Json::Null, |pr| json!(pretty(&pr.term)));
        out["nodes"] = s.program.as_ref().map_or(Json::Null, |pr| {
            pr.labels
                .iter()
                .map(|(path, l)| json!({"path": path, "label": l}))
                .collect()
        });
        out["program_check"] = report_json(&s.check);
        println!("{out}");
    } else {
        match &s.program {
            Some(pr) => {
                println!("{pr}");
                println!("{}", pretty(&pr.term));
                if let Some(ch) = &s.check {
                    eprintln!("check: {ch}");
                }
            }
            None => {
                println!("{}", s.solve.answer.label());
                if let Answer::Unknown(why) = &s.solve.answer {
                    eprintln!("reason: {why}");
                }
            }
        }
    }
    if !checked_ok {
        return ExitCode::from(EXIT_UNKNOWN);
    }
    ExitCode::from(exit_for(&s.solve.answer))
}

fn parse_bounds(text: &str, sig: &Signature) -> Result<HashMap<SortId, usize>, String> {
    let mut out = HashMap::new();
    out.insert(SortId::BOOL, 2);
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, n) = part
            .split_once('=')
            .ok_or_else(|| format!("bad bound `{part}`, expected SORT=N"))?;
        let sort = match name.trim() {
            "bool" | "Bool" => SortId::BOOL,
            other => sig
                .sort_by_name(other)
                .ok_or_else(|| format!("unknown sort `{other}`"))?,
        };
        let n: usize = n.trim().parse().map_err(|_| format!("bad bound `{part}`"))?;
        out.insert(sort, n);
    }
    Ok(out)
}

fn cmd_oracle(file: &Path, bound: &str, json: bool) -> ExitCode {
    let text = match read(file) {
        Ok(t) => t,
        Err(e) => return fail(json, "oracle", e),
    };
    let problem = match parse(&text) {
        Ok(p) => p,
        Err(e) => return fail(json, "oracle", e.to_json()),
    };
    let bounds = match parse_bounds(bound, &problem.sig) {
        Ok(b) => b,
        Err(e) => return fail(json, "oracle", message(e)),
    };
    let v = match brute_force_sat(&problem.sentence(), &problem.sig, &bounds) {
        Ok(v) => v,
        Err(e) => return fail(json, "oracle", message(e)),
    };
    let (label, code, sizes) = match &v {
        OracleVerdict::Sat { sizes } => ("sat", EXIT_SAT, sizes.clone()),
        OracleVerdict::Unsat => ("unsat", EXIT_UNSAT, vec![]),
    };
    if json {
        let sizes: serde_json::Map<String, Json> = sizes
            .iter()
            .map(|&(s, n)| (problem.sig.sort_name(s).to_string(), json!(n)))
            .collect();
        println!(
            "{}",
            json!({"version": JSON_VERSION, "command": "oracle", "verdict": label, "sizes": sizes})
        );
    } else {
        println!("{label}");
    }
    ExitCode::from(code)
}

const STAGES: [&str; 5] = [
    "01-norel.eqsmt",
    "02-restrict.eqsmt",
    "03-nofun.eqsmt",
    "04-ack.eqsmt",
    "05-cnf.eqsmt",
];

fn cmd_replay(dir: &Path, c: &Common) -> ExitCode {
    let mut rows = vec![];
    let mut known: Vec<&'static str> = vec![];
    for stage in STAGES {
        let path = dir.join(stage);
        if !path.exists() {
            continue;
        }
        let text = match read(&path) {
            Ok(t) => t,
            Err(e) => return fail(c.json, "trace-replay", e),
        };
        let problem = match parse(&text) {
            Ok(p) => p,
            Err(e) => return fail(c.json, "trace-replay", json!({"message": format!("{stage}: {e}")})),
        };
        if problem.sentences.is_empty() {
            rows.push((stage, "skipped".to_string()));
            continue;
        }
        let mut local = c.clone();
        local.trace = None;
        let cfg = match config(&local, &problem.directives) {
            Ok(cfg) => cfg,
            Err(e) => return fail(c.json, "trace-replay", message(e)),
        };
        let s: Sentence = problem.sentence();
        let r = match solve(
            &s,
            &problem.sig,
            &cfg.backends,
            &SolveOptions {
                validate: false,
                ..cfg.opts
            },
        ) {
            Ok(r) => r,
            Err(e) => return fail(c.json, "trace-replay", json!({"message": format!("{stage}: {e}")})),
        };
        let label = r.answer.label();
        if label != "unknown" {
            known.push(label);
        }
        rows.push((stage, label.to_string()));
    }
    if rows.is_empty() {
        return fail(
            c.json,
            "trace-replay",
            message(format!("no stage files in {}", dir.display())),
        );
    }
    let agree = known.windows(2).all(|w| w[0] == w[1]);
    let verdict = if !agree {
        "disagree"
    } else {
        known.first().copied().unwrap_or("unknown")
    };
    if c.json {
        let stages: Vec<Json> = rows.iter().map(|(s, v)| json!({"file": s, "verdict": v})).collect();
        println!(
            "{}",
            json!({"version": JSON_VERSION, "command": "trace-replay", "stages": stages, "agree": agree, "verdict": verdict})
        );
    } else {
        for (s, v) in &rows {
            println!("{s}: {v}");
        }
        println!("{verdict}");
    }
    ExitCode::from(match verdict {
        "sat" => EXIT_SAT,
        "unsat" => EXIT_UNSAT,
        _ => EXIT_UNKNOWN,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Solve {
            file,
            common,
            model_out,
        } => cmd_solve(file, common, model_out),
        Command::Synth {
            file,
            common,
            model_out,
            all_node_tuples,
        } => cmd_synth(file, common, model_out, *all_node_tuples),
        Command::Oracle { file, bound, json } => cmd_oracle(file, bound, *json),
        Command::TraceReplay { dir, common } => cmd_replay(dir, common),
    }
}
