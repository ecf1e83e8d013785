//! Runs every acceptance criterion once and prints one PASS/FAIL line each.
//! Exits non-zero if any criterion fails.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use dynloop::harness::fuzz::{fuzz, Check, FuzzConfig, FuzzSummary};
use dynloop::harness::{parse_stream, run_stream, Mode, Stream};
use dynloop::oracle::{brute_force_dominator_sets, iterative_dominators, reducibility_test};
use dynloop::{DominanceIndex, DynamicLoopForest, EventKind, IrreduciblePolicy, Outcome};

fn corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn load(path: &PathBuf) -> Stream {
    parse_stream(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn corpus_files(dir: &str) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(corpus().join(dir))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "txt"))
        .collect();
    out.sort();
    out
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn campaign() -> (FuzzSummary, Duration) {
    let config = FuzzConfig {
        seed: 0,
        n: 64,
        vary_n: true,
        events: 500,
        cases: 10_000,
        policy: IrreduciblePolicy::Reject,
        ..Default::default()
    };
    let start = Instant::now();
    let summary = fuzz(&config);
    (summary, start.elapsed())
}

fn check_line(summary: &FuzzSummary, check: Check) -> Verdict {
    let failed = summary.failures_of(check);
    let first = summary
        .failures
        .iter()
        .find(|f| f.check == check)
        .map(|f| format!(", first at seed {}: {}", f.seed, f.detail))
        .unwrap_or_default();
    verdict(
        failed == 0,
        format!(
            "{} of {} cases failed `{check}`{first}",
            failed, summary.cases
        ),
    )
}

fn oracle_after_every_event(summary: &FuzzSummary, elapsed: Duration) -> Verdict {
    let mut v = check_line(summary, Check::Oracle);
    let others = summary.failures.len() - summary.failures_of(Check::Oracle);
    let in_time = elapsed < Duration::from_secs(300);
    v.pass &= others == 0 && in_time && summary.cases == 10_000;
    v.detail = format!(
        "{}; {} events; {others} other failures; {:.1}s (limit 300s)",
        v.detail,
        summary.stats.events,
        elapsed.as_secs_f64()
    );
    v
}

/// Replays a stream and compares every insertion outcome with the
/// reducibility test on the graph the insertion would produce.
fn irreducible_iff_rejected(stream: &Stream) -> Result<usize, String> {
    let mut f = DynamicLoopForest::new(stream.n, stream.root, IrreduciblePolicy::Reject).unwrap();
    let mut refused = 0;
    for e in &stream.events {
        let expect_refusal = e.kind == EventKind::Insert && {
            let mut g = f.graph().clone();
            g.insert_edge_raw(e.src, e.dst).unwrap();
            !reducibility_test(&g)
        };
        let outcome = f
            .apply(e)
            .map_err(|err| format!("event {}: {err}", e.seq))?
            .outcome;
        if (outcome == Outcome::IrreducibleRejected) != expect_refusal {
            return Err(format!("event {}: outcome {outcome:?}", e.seq));
        }
        refused += usize::from(expect_refusal);
    }
    Ok(refused)
}

fn irreducibility(summary: &FuzzSummary) -> Verdict {
    let mut v = check_line(summary, Check::Irreducibility);
    let mut refused = 0;
    for path in corpus_files("irreducible")
        .into_iter()
        .chain(corpus_files(""))
    {
        match irreducible_iff_rejected(&load(&path)) {
            Ok(r) => refused += r,
            Err(e) => {
                v.pass = false;
                v.detail += &format!("; {}: {e}", path.display());
            }
        }
    }
    v.pass &= summary.stats.rejected > 0 && refused >= corpus_files("irreducible").len();
    v.detail += &format!(
        "; {} fuzz refusals, {refused} corpus refusals",
        summary.stats.rejected
    );
    v
}

fn dominance() -> Verdict {
    let start = Instant::now();
    let mut wrong = Vec::new();
    let mut queries = 0usize;
    for seed in 0..1000 {
        let g = common::random_reducible(seed, 32);
        let sets = brute_force_dominator_sets(&g);
        let f = DynamicLoopForest::from_graph(g.clone(), IrreduciblePolicy::Reject).unwrap();
        let mut idx = DominanceIndex::new();
        if idx.materialize(&f).unwrap() != &iterative_dominators(&g) {
            wrong.push(format!("seed {seed}: materialized tree differs"));
        }
        for a in g.vertices() {
            for b in g.vertices() {
                let (Some(_), Some(dom_b)) = (&sets[a.index()], &sets[b.index()]) else {
                    continue;
                };
                queries += 1;
                if idx.dominates(&f, a, b).unwrap().answer != dom_b.contains(&a) {
                    wrong.push(format!("seed {seed}: {a} dom {b}"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = wrong.is_empty() && elapsed < Duration::from_secs(120);
    let first = wrong
        .first()
        .map(|w| format!(", first {w}"))
        .unwrap_or_default();
    verdict(
        pass,
        format!(
            "1000 graphs, {queries} queries, {} wrong{first}; {:.1}s (limit 120s)",
            wrong.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn work_ratio() -> Verdict {
    let stream = load(&corpus().join("nested_1000.txt"));
    let policy = IrreduciblePolicy::Reject;
    let (m, _) = run_stream(&stream, Mode::Maintain, policy).unwrap();
    let (r, _) = run_stream(&stream, Mode::Recompute, policy).unwrap();
    let incremental = m.total_k() + m.total_delta();
    let ratio = incremental as f64 / r.total_work() as f64;
    verdict(
        ratio <= 0.10 && m.digest == r.digest && stream.events.len() == 1000,
        format!(
            "sum k + sum delta = {incremental}, recompute work = {}, ratio {:.2}% (limit 10%), digests {}",
            r.total_work(),
            ratio * 100.0,
            if m.digest == r.digest { "equal" } else { "differ" }
        ),
    )
}

fn determinism() -> Verdict {
    let mut differing = Vec::new();
    let mut runs = 0;
    let files: Vec<PathBuf> = corpus_files("")
        .into_iter()
        .chain(corpus_files("irreducible"))
        .collect();
    for path in &files {
        let stream = load(path);
        for mode in [Mode::Maintain, Mode::Recompute, Mode::Differential] {
            for policy in [IrreduciblePolicy::Reject, IrreduciblePolicy::Latch] {
                let outputs: Vec<_> = (0..3)
                    .map(|_| {
                        let (report, state) = run_stream(&stream, mode, policy).unwrap();
                        (report.render(), state.lnf, state.dfst, state.dot)
                    })
                    .collect();
                runs += 3;
                if outputs.windows(2).any(|w| w[0] != w[1]) {
                    differing.push(format!("{} {mode} {policy}", path.display()));
                }
            }
        }
    }
    let config = FuzzConfig {
        seed: 42,
        n: 16,
        events: 200,
        cases: 50,
        ..Default::default()
    };
    if fuzz(&config) != fuzz(&config) {
        differing.push("fuzz summary".to_string());
    }
    verdict(
        differing.is_empty(),
        format!(
            "{runs} replays of {} streams plus a repeated fuzz campaign; {} differ",
            files.len(),
            differing.len()
        ),
    )
}

fn main() -> ExitCode {
    let (summary, elapsed) = campaign();
    let results = [
        (
            1,
            "maintained forest equals the oracle after every fuzz event",
            oracle_after_every_event(&summary, elapsed),
        ),
        (
            2,
            "an insertion is refused iff the graph would be irreducible",
            irreducibility(&summary),
        ),
        (
            3,
            "snapshot changes stay within delta and touched",
            check_line(&summary, Check::Locality),
        ),
        (
            4,
            "edge classes of live edges equal a fresh search",
            check_line(&summary, Check::Classification),
        ),
        (
            5,
            "dominance answers equal dominator sets on random graphs",
            dominance(),
        ),
        (
            6,
            "loop counts equal a full scan after every event",
            check_line(&summary, Check::Counts),
        ),
        (
            7,
            "incremental work on the nested-loop stream",
            work_ratio(),
        ),
        (8, "repeated runs are byte-identical", determinism()),
    ];
    let mut ok = true;
    for (id, name, v) in &results {
        ok &= v.pass;
        println!(
            "{} criterion {id}: {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
