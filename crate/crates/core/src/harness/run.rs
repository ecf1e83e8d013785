use std::fmt;
use std::str::FromStr;

use crate::dfst::{DfstState, EdgeClass};
use crate::engine::{DynamicLoopForest, IrreduciblePolicy, Outcome};
use crate::error::{Error, Result};
use crate::graph::{Cfg, EventKind, UpdateEvent};
use crate::harness::report::{digest, EventRow, Mismatch, RunReport};
use crate::harness::stream::Stream;
use crate::oracle::build_loop_forest;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub enum Mode {
    #[default]
    Maintain,
    Recompute,
    Differential,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Maintain => "maintain",
            Mode::Recompute => "recompute",
            Mode::Differential => "differential",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "maintain" => Ok(Mode::Maintain),
            "recompute" => Ok(Mode::Recompute),
            "differential" => Ok(Mode::Differential),
            _ => Err(format!("unknown mode `{s}`")),
        }
    }
}

impl FromStr for IrreduciblePolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "reject" => Ok(IrreduciblePolicy::Reject),
            "latch" => Ok(IrreduciblePolicy::Latch),
            _ => Err(format!("unknown policy `{s}`")),
        }
    }
}

/// Final state of a run, for dumps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinalState {
    /// Loop forest dump, or `None` if the run ended latched.
    pub lnf: Option<String>,
    pub dfst: String,
    pub dot: String,
}

/// Text used in place of the forest dump once a run is latched.
pub const LATCHED_DUMP: &str = "latched\n";

fn state_digest(lnf: &Option<String>) -> String {
    digest(lnf.as_deref().unwrap_or(LATCHED_DUMP))
}

/// Baseline that rebuilds the tree and the forest from scratch per event.
struct Recompute {
    g: Cfg,
    tree: DfstState,
    lnf: Option<String>,
    policy: IrreduciblePolicy,
    latched: bool,
}

impl Recompute {
    fn new(stream: &Stream, policy: IrreduciblePolicy) -> Result<Self> {
        let g = Cfg::with_vertices(stream.n, stream.root)?;
        let tree = DfstState::rebuild_full(&g);
        let lnf = Some(build_loop_forest(&g, &tree)?.dump());
        Ok(Recompute {
            g,
            tree,
            lnf,
            policy,
            latched: false,
        })
    }

    fn apply(&mut self, e: &UpdateEvent) -> Result<EventRow> {
        let mut class = None;
        match e.kind {
            EventKind::Insert => self.g.insert_edge_raw(e.src, e.dst)?,
            EventKind::Delete => {
                class = self.class(e);
                self.g.delete_edge_raw(e.src, e.dst)?;
            }
        }
        self.tree = DfstState::rebuild_full(&self.g);
        if e.kind == EventKind::Insert {
            class = self.class(e);
        }
        let mut work = self.tree.attached_vertices().count();
        let mut outcome = Outcome::Applied;
        if self.latched {
            outcome = Outcome::IrreducibleLatched;
        } else {
            match build_loop_forest(&self.g, &self.tree) {
                Ok(forest) => {
                    work += forest.work;
                    self.lnf = Some(forest.dump());
                }
                Err(Error::IrreducibleGraph) => match self.policy {
                    IrreduciblePolicy::Reject => {
                        self.g.delete_edge_raw(e.src, e.dst)?;
                        self.tree = DfstState::rebuild_full(&self.g);
                        outcome = Outcome::IrreducibleRejected;
                    }
                    IrreduciblePolicy::Latch => {
                        self.latched = true;
                        self.lnf = None;
                        outcome = Outcome::IrreducibleLatched;
                    }
                },
                Err(other) => return Err(other),
            }
        }
        Ok(EventRow {
            seq: e.seq,
            kind: e.kind,
            src: e.src,
            dst: e.dst,
            class,
            k: 0,
            delta: 0,
            work,
            outcome,
        })
    }

    fn class(&self, e: &UpdateEvent) -> Option<EdgeClass> {
        (self.tree.is_attached(e.src) && self.tree.is_attached(e.dst))
            .then(|| self.tree.class_of(e.src, e.dst, true))
    }

    fn final_state(&self) -> FinalState {
        FinalState {
            lnf: self.lnf.clone(),
            dfst: self.tree.dump(),
            dot: self.tree.to_dot(&self.g),
        }
    }
}

fn maintain_row(e: &UpdateEvent, engine: &mut DynamicLoopForest) -> Result<EventRow> {
    let r = engine.apply(e)?;
    Ok(EventRow {
        seq: e.seq,
        kind: e.kind,
        src: e.src,
        dst: e.dst,
        class: r.class,
        k: r.counters.k,
        delta: r.counters.delta,
        work: r.counters.k + r.counters.delta,
        outcome: r.outcome,
    })
}

fn engine_state(engine: &DynamicLoopForest) -> FinalState {
    FinalState {
        lnf: engine.lnf().ok().map(|l| l.dump()),
        dfst: engine.tree().dump(),
        dot: engine.tree().to_dot(engine.graph()),
    }
}

/// Replays a stream. Differential mode stops at the first event after which
/// the two forests (or outcomes) disagree.
pub fn run_stream(
    stream: &Stream,
    mode: Mode,
    policy: IrreduciblePolicy,
) -> Result<(RunReport, FinalState)> {
    let mut rows = Vec::with_capacity(stream.events.len());
    let mut mismatch = None;
    let state = match mode {
        Mode::Maintain => {
            let mut engine = DynamicLoopForest::new(stream.n, stream.root, policy)?;
            for e in &stream.events {
                rows.push(maintain_row(e, &mut engine)?);
            }
            engine_state(&engine)
        }
        Mode::Recompute => {
            let mut base = Recompute::new(stream, policy)?;
            for e in &stream.events {
                rows.push(base.apply(e)?);
            }
            base.final_state()
        }
        Mode::Differential => {
            let mut engine = DynamicLoopForest::new(stream.n, stream.root, policy)?;
            let mut base = Recompute::new(stream, policy)?;
            for e in &stream.events {
                let row = maintain_row(e, &mut engine)?;
                let other = base.apply(e)?;
                let ours = engine.lnf().ok().map(|l| l.dump());
                let same = row.outcome == other.outcome
                    && row.class == other.class
                    && ours == base.lnf
                    && engine.tree().dump() == base.tree.dump();
                rows.push(row);
                if !same {
                    mismatch = Some(Mismatch {
                        seq: e.seq,
                        maintained: ours.unwrap_or_else(|| LATCHED_DUMP.into()),
                        recomputed: base.lnf.clone().unwrap_or_else(|| LATCHED_DUMP.into()),
                    });
                    break;
                }
            }
            engine_state(&engine)
        }
    };
    let report = RunReport {
        mode: mode.to_string(),
        policy: policy.to_string(),
        rows,
        digest: state_digest(&state.lnf),
        mismatch,
    };
    Ok((report, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::stream::parse_stream;

    #[test]
    fn modes_agree_on_a_loop() {
        let s = parse_stream("n 3\nroot 0\n+ 0 1\n+ 1 2\n+ 2 1\n").unwrap();
        let (m, ms) = run_stream(&s, Mode::Maintain, IrreduciblePolicy::Reject).unwrap();
        let (r, _) = run_stream(&s, Mode::Recompute, IrreduciblePolicy::Reject).unwrap();
        let (d, _) = run_stream(&s, Mode::Differential, IrreduciblePolicy::Reject).unwrap();
        assert_eq!(m.rows.len(), 3);
        assert_eq!(m.digest, r.digest);
        assert_eq!(d.mismatch, None);
        assert_eq!(
            ms.lnf.unwrap(),
            "0 NONHEADER -\n1 REDUCIBLE -\n2 NONHEADER 1\n"
        );
    }

    #[test]
    fn rejected_last_insert() {
        let s = parse_stream("n 4\n+ 0 1\n+ 1 2\n+ 2 1\n+ 0 3\n+ 3 2\n").unwrap();
        for mode in [Mode::Maintain, Mode::Recompute, Mode::Differential] {
            let (rep, state) = run_stream(&s, mode, IrreduciblePolicy::Reject).unwrap();
            assert_eq!(rep.rows[4].outcome, Outcome::IrreducibleRejected);
            assert_eq!(rep.mismatch, None);
            assert!(state.lnf.unwrap().contains("2 NONHEADER 1"));
        }
    }

    #[test]
    fn empty_stream() {
        let s = parse_stream("n 1\n").unwrap();
        let (rep, state) = run_stream(&s, Mode::Differential, IrreduciblePolicy::Latch).unwrap();
        assert!(rep.rows.is_empty());
        assert_eq!(state.lnf.as_deref(), Some("0 NONHEADER -\n"));
    }
}
