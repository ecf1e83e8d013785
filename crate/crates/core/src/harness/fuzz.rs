//! Randomized differential testing of the dynamic layer.
//!
//! Each case grows a random tree skeleton and mixes in back, forward, cross
//! and self edges plus deletions of live edges. Insertions are screened with
//! the reducibility test; most irreducible candidates are dropped, a few are
//! submitted to exercise rejection. After every event the maintained state is
//! compared against fresh recomputation.

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dfst::DfstState;
use crate::engine::{DynamicLoopForest, IrreduciblePolicy, Outcome, UpdateReport};
use crate::error::Error;
use crate::graph::{Cfg, EventKind, UpdateEvent, VertexId};
use crate::harness::stream::Stream;
use crate::lnf::{LoopType, UpdateCounters};
use crate::oracle::{build_loop_forest, build_loop_forest_reversed, reducibility_test_with};

/// The properties checked after each event.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Check {
    /// Maintained forest equals the offline forest, under two search orders.
    Oracle,
    /// Insertions are refused exactly when the graph would become irreducible.
    Irreducibility,
    /// Forest changes stay inside the repair delta and the touched set.
    Locality,
    /// Tree and edge classes equal those of a fresh search.
    Classification,
    /// Maintained loop counts equal a full scan.
    Counts,
    /// Interval nesting and header-chain structure.
    Structure,
    /// A refused insertion leaves every structure as it was.
    Rejection,
}

impl Check {
    pub const ALL: [Check; 7] = [
        Check::Oracle,
        Check::Irreducibility,
        Check::Locality,
        Check::Classification,
        Check::Counts,
        Check::Structure,
        Check::Rejection,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Check::Oracle => "oracle",
            Check::Irreducibility => "irreducibility",
            Check::Locality => "locality",
            Check::Classification => "classification",
            Check::Counts => "counts",
            Check::Structure => "structure",
            Check::Rejection => "rejection",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FuzzConfig {
    pub seed: u64,
    /// Vertex count, or the upper bound of a per-case draw with `vary_n`.
    pub n: usize,
    pub vary_n: bool,
    pub events: usize,
    pub cases: usize,
    pub policy: IrreduciblePolicy,
    /// Share of irreducible candidates submitted rather than dropped.
    pub irreducible_rate: f64,
    #[doc(hidden)]
    pub inject_fault: bool,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            seed: 0,
            n: 8,
            vary_n: false,
            events: 200,
            cases: 1,
            policy: IrreduciblePolicy::Reject,
            irreducible_rate: 0.1,
            inject_fault: false,
        }
    }
}

/// A failed check with a reproducer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub seed: u64,
    pub check: Check,
    /// Index of the failing event in `minimized`.
    pub event: usize,
    /// What went wrong, as observed on `minimized`.
    pub detail: String,
    pub stream: Stream,
    /// Greedily shrunk stream that still fails the same check.
    pub minimized: Stream,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CaseStats {
    pub events: usize,
    pub inserts: usize,
    pub deletes: usize,
    pub rejected: usize,
    pub latched: usize,
    pub irreducible_expected: usize,
    pub total_k: usize,
    pub total_delta: usize,
    pub max_k: usize,
}

impl CaseStats {
    fn absorb(&mut self, other: &CaseStats) {
        self.events += other.events;
        self.inserts += other.inserts;
        self.deletes += other.deletes;
        self.rejected += other.rejected;
        self.latched += other.latched;
        self.irreducible_expected += other.irreducible_expected;
        self.total_k += other.total_k;
        self.total_delta += other.total_delta;
        self.max_k = self.max_k.max(other.max_k);
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FuzzSummary {
    pub cases: usize,
    pub stats: CaseStats,
    /// Failures in seed order; at most one per case.
    pub failures: Vec<Failure>,
}

impl FuzzSummary {
    pub fn failures_of(&self, check: Check) -> usize {
        self.failures.iter().filter(|f| f.check == check).count()
    }
}

/// Runs `config.cases` cases with seeds `config.seed..`, in parallel.
pub fn fuzz(config: &FuzzConfig) -> FuzzSummary {
    let results: Vec<(CaseStats, Option<Failure>)> = (0..config.cases as u64)
        .into_par_iter()
        .map(|i| fuzz_case(config, config.seed.wrapping_add(i)))
        .collect();
    let mut summary = FuzzSummary {
        cases: results.len(),
        ..Default::default()
    };
    for (stats, failure) in results {
        summary.stats.absorb(&stats);
        summary.failures.extend(failure);
    }
    summary
}

/// One generated case.
pub fn fuzz_case(config: &FuzzConfig, seed: u64) -> (CaseStats, Option<Failure>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = if config.vary_n {
        rng.gen_range(1..=config.n.max(1))
    } else {
        config.n.max(1)
    };
    let mut checker = Checker::new(n, VertexId::new(0), config.policy, config.inject_fault);
    let mut events: Vec<UpdateEvent> = Vec::new();
    let mut attempts = 0;
    while events.len() < config.events && attempts < config.events * 20 {
        attempts += 1;
        let Some((kind, u, v)) = propose(&mut rng, checker.engine.graph(), checker.engine.tree())
        else {
            continue;
        };
        let event = UpdateEvent {
            kind,
            src: u,
            dst: v,
            seq: events.len(),
        };
        let mut reducible = None;
        if kind == EventKind::Insert {
            let r = reducibility_test_with(checker.engine.graph(), Some((u, v)));
            if !r && !rng.gen_bool(config.irreducible_rate) {
                continue;
            }
            reducible = Some(r);
        }
        events.push(event);
        if let Err((check, detail)) = checker.step(&event, reducible) {
            let stream = Stream {
                n,
                root: VertexId::new(0),
                events,
            };
            let minimized = shrink(&stream, config.policy, config.inject_fault, check);
            let (event, detail) =
                match check_stream_with(&minimized, config.policy, config.inject_fault) {
                    Err((i, _, d)) => (i, d),
                    Ok(_) => (stream.events.len() - 1, detail),
                };
            let failure = Failure {
                seed,
                check,
                event,
                detail,
                stream,
                minimized,
            };
            return (checker.stats, Some(failure));
        }
    }
    (checker.stats, None)
}

/// Replays a stream with every check enabled; returns the first failure.
pub fn check_stream(
    stream: &Stream,
    policy: IrreduciblePolicy,
) -> Result<CaseStats, (usize, Check, String)> {
    check_stream_with(stream, policy, false)
}

fn check_stream_with(
    stream: &Stream,
    policy: IrreduciblePolicy,
    inject_fault: bool,
) -> Result<CaseStats, (usize, Check, String)> {
    let mut checker = Checker::new(stream.n, stream.root, policy, inject_fault);
    for (i, e) in stream.events.iter().enumerate() {
        checker.step(e, None).map_err(|(c, d)| (i, c, d))?;
    }
    Ok(checker.stats)
}

/// Drops events one at a time, last first, keeping each removal that leaves
/// a valid stream failing the same check; repeats until nothing changes.
fn shrink(stream: &Stream, policy: IrreduciblePolicy, inject_fault: bool, check: Check) -> Stream {
    let fails = |s: &Stream| {
        if !deletes_are_live(s) {
            return false;
        }
        matches!(check_stream_with(s, policy, inject_fault), Err((_, c, _)) if c == check)
    };
    let mut best = stream.clone();
    loop {
        let mut changed = false;
        let mut i = best.events.len();
        while i > 0 {
            i -= 1;
            let mut candidate = best.clone();
            candidate.events.remove(i);
            for (j, e) in candidate.events.iter_mut().enumerate() {
                e.seq = j;
            }
            if fails(&candidate) {
                best = candidate;
                changed = true;
            }
        }
        if !changed {
            return best;
        }
    }
}

fn deletes_are_live(s: &Stream) -> bool {
    let mut g = Cfg::with_vertices(s.n, s.root).expect("valid stream header");
    s.events.iter().all(|e| match e.kind {
        EventKind::Insert => g.insert_edge_raw(e.src, e.dst).is_ok(),
        EventKind::Delete => g.delete_edge_raw(e.src, e.dst).is_ok(),
    })
}

/// Picks the next event shape, guided by the current tree.
fn propose(
    rng: &mut ChaCha8Rng,
    g: &Cfg,
    t: &DfstState,
) -> Option<(EventKind, VertexId, VertexId)> {
    let n = g.vertex_count();
    let attached: Vec<VertexId> = t.attached_vertices().collect();
    let roll: u32 = rng.gen_range(0..100);
    let any = |rng: &mut ChaCha8Rng| VertexId::new(rng.gen_range(0..n));
    let insert = |u, v| Some((EventKind::Insert, u, v));
    match roll {
        // Grow the skeleton towards an unreachable vertex.
        0..=19 => {
            let detached: Vec<VertexId> = g.vertices().filter(|&v| !t.is_attached(v)).collect();
            let u = *attached.choose(rng)?;
            let v = *detached.choose(rng)?;
            insert(u, v)
        }
        // Back edge to an ancestor.
        20..=37 => {
            let w = *attached.choose(rng)?;
            let mut chain = vec![w];
            let mut x = w;
            while let Some(p) = t.parent(x) {
                chain.push(p);
                x = p;
            }
            insert(w, *chain.choose(rng)?)
        }
        // Forward edge into the subtree.
        38..=47 => {
            let u = *attached.choose(rng)?;
            insert(u, *t.subtree(u).choose(rng)?)
        }
        // Edge between unrelated vertices.
        48..=59 => {
            let u = *attached.choose(rng)?;
            let v = *attached.choose(rng)?;
            insert(u, v)
        }
        60..=63 => {
            let u = any(rng);
            insert(u, u)
        }
        64..=67 => insert(any(rng), any(rng)),
        _ => {
            if g.edge_count() == 0 {
                return None;
            }
            let (u, v) = g.edges().nth(rng.gen_range(0..g.edge_count()))?;
            Some((EventKind::Delete, u, v))
        }
    }
}

type Snapshot = (Vec<LoopType>, Vec<Option<VertexId>>);

struct Checker {
    engine: DynamicLoopForest,
    stats: CaseStats,
}

type CheckResult = Result<(), (Check, String)>;

fn fail(check: Check, detail: impl Into<String>) -> CheckResult {
    Err((check, detail.into()))
}

impl Checker {
    fn new(n: usize, root: VertexId, policy: IrreduciblePolicy, inject_fault: bool) -> Self {
        let mut engine = DynamicLoopForest::new(n, root, policy).expect("root within range");
        if inject_fault {
            engine.inject_fault_skip_reseeding();
        }
        Checker {
            engine,
            stats: CaseStats::default(),
        }
    }

    fn snapshot(&self) -> Option<Snapshot> {
        let lnf = self.engine.lnf().ok()?;
        Some((lnf.loop_types().to_vec(), lnf.loop_headers().to_vec()))
    }

    /// Applies one event and runs every check. `reducible` is the
    /// reducibility of the post-insert graph, if the caller already knows it.
    fn step(&mut self, e: &UpdateEvent, reducible: Option<bool>) -> CheckResult {
        let before = self.snapshot();
        let is_insert = e.kind == EventKind::Insert;
        let pre = is_insert.then(|| (self.engine.graph().clone(), self.engine.tree().clone()));
        let expect_irreducible = is_insert
            && !self.engine.is_latched()
            && !reducible.unwrap_or_else(|| {
                reducibility_test_with(self.engine.graph(), Some((e.src, e.dst)))
            });
        let report = match self.engine.apply(e) {
            Ok(r) => r,
            Err(err) => return fail(Check::Structure, format!("event {}: {err}", e.seq)),
        };
        self.record(e, &report, expect_irreducible);

        let refused = matches!(
            report.outcome,
            Outcome::IrreducibleRejected | Outcome::IrreducibleLatched
        ) && e.kind == EventKind::Insert
            && !self.latched_before(&before);
        if refused != expect_irreducible {
            return fail(
                Check::Irreducibility,
                format!(
                    "insert ({}, {}): refused={refused}, reducibility test expects {expect_irreducible}",
                    e.src, e.dst
                ),
            );
        }
        if let (Outcome::IrreducibleRejected, Some((g_before, tree_before))) =
            (report.outcome, &pre)
        {
            let g = self.engine.graph();
            let same_graph = g.edges().eq(g_before.edges());
            if !same_graph
                || !self.engine.tree().same_shape(tree_before)
                || self.snapshot() != before
            {
                return fail(Check::Rejection, "rejected insertion changed the state");
            }
        }
        if report.outcome == Outcome::IrreducibleLatched && refused {
            // Queries must refuse, reset must fail, and removing the edge
            // must make reset succeed again.
            if self.engine.lnf().is_ok() || self.engine.reset() != Err(Error::IrreducibleGraph) {
                return fail(Check::Rejection, "latched forest still answers");
            }
            if self.engine.delete_edge(e.src, e.dst).is_err() || self.engine.reset().is_err() {
                return fail(Check::Rejection, "reset after removing the edge failed");
            }
        }
        self.check_tree()?;
        self.check_forest(before.as_ref(), &report)
    }

    fn latched_before(&self, before: &Option<Snapshot>) -> bool {
        before.is_none()
    }

    fn record(&mut self, e: &UpdateEvent, r: &UpdateReport, expect_irreducible: bool) {
        let s = &mut self.stats;
        s.events += 1;
        match e.kind {
            EventKind::Insert => s.inserts += 1,
            EventKind::Delete => s.deletes += 1,
        }
        match r.outcome {
            Outcome::IrreducibleRejected => s.rejected += 1,
            Outcome::IrreducibleLatched => s.latched += 1,
            Outcome::Applied => {}
        }
        s.irreducible_expected += usize::from(expect_irreducible);
        s.total_k += r.counters.k;
        s.total_delta += r.counters.delta;
        s.max_k = s.max_k.max(r.counters.k);
    }

    fn check_tree(&self) -> CheckResult {
        let g = self.engine.graph();
        let t = self.engine.tree();
        if let Err(msg) = t.check_invariants(g) {
            return fail(Check::Structure, msg);
        }
        let fresh = DfstState::rebuild_full(g);
        if !t.same_shape(&fresh) {
            return fail(Check::Classification, "tree differs from a fresh search");
        }
        for (u, v) in g.edges() {
            if t.is_attached(u) && t.is_attached(v) {
                let (a, b) = (t.class_of(u, v, true), fresh.class_of(u, v, true));
                if a != b {
                    return fail(
                        Check::Classification,
                        format!("edge ({u}, {v}): {a} vs {b}"),
                    );
                }
            }
        }
        Ok(())
    }

    fn check_forest(&self, before: Option<&Snapshot>, report: &UpdateReport) -> CheckResult {
        let Ok(lnf) = self.engine.lnf() else {
            return Ok(());
        };
        let g = self.engine.graph();
        let t = self.engine.tree();
        let oracle = match build_loop_forest(g, t) {
            Ok(f) => f,
            Err(err) => return fail(Check::Irreducibility, format!("accepted state: {err}")),
        };
        if !lnf.verify_against(&oracle) {
            return fail(
                Check::Oracle,
                format!("maintained:\n{}offline:\n{}", lnf.dump(), oracle.dump()),
            );
        }
        match build_loop_forest_reversed(g) {
            Ok(other) if other.same_forest(&oracle) => {}
            _ => return fail(Check::Oracle, "forest depends on the search order"),
        }
        if lnf.loop_counts() != lnf.recount() {
            return fail(
                Check::Counts,
                format!(
                    "maintained {:?}, scanned {:?}",
                    lnf.loop_counts(),
                    lnf.recount()
                ),
            );
        }
        for v in g.vertices() {
            if let Some(h) = lnf.loop_header(v) {
                if lnf.loop_type(h) != LoopType::Reducible || !t.ancestor(h, v) || h == v {
                    return fail(Check::Structure, format!("vertex {v}: bad header {h}"));
                }
            }
        }
        if let Some(before) = before {
            check_locality(
                before,
                lnf.loop_types(),
                lnf.loop_headers(),
                &report.counters,
                report,
            )?;
        }
        Ok(())
    }
}

fn check_locality(
    before: &Snapshot,
    types: &[LoopType],
    headers: &[Option<VertexId>],
    counters: &UpdateCounters,
    report: &UpdateReport,
) -> CheckResult {
    let allowed: HashSet<VertexId> = report
        .repair
        .delta
        .iter()
        .chain(&counters.touched)
        .copied()
        .collect();
    for i in 0..types.len() {
        let changed = before.0.get(i) != Some(&types[i]) || before.1.get(i) != Some(&headers[i]);
        let v = VertexId::new(i);
        if changed && !allowed.contains(&v) {
            return fail(
                Check::Locality,
                format!("vertex {v} changed outside delta and touched set"),
            );
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::stream::format_stream;

    #[test]
    fn small_campaign_passes() {
        let config = FuzzConfig {
            seed: 1,
            n: 8,
            events: 200,
            cases: 20,
            ..Default::default()
        };
        let summary = fuzz(&config);
        if let Some(f) = summary.failures.first() {
            panic!(
                "seed {} {}: {}\n{}",
                f.seed,
                f.check,
                f.detail,
                format_stream(&f.minimized)
            );
        }
        assert!(summary.stats.events > 1000);
    }

    #[test]
    fn deterministic() {
        let config = FuzzConfig {
            seed: 7,
            n: 12,
            events: 100,
            cases: 3,
            ..Default::default()
        };
        assert_eq!(fuzz(&config), fuzz(&config));
    }
}
