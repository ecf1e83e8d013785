//! The update pipeline: graph mutation, tree repair, forest update.

use std::fmt;

use crate::dfst::{DfstState, EdgeClass, RepairReport};
use crate::error::{Error, Result};
use crate::graph::{Cfg, EventKind, UpdateEvent, VertexId};
use crate::lnf::{LnfState, LoopType, UpdateCounters};
use crate::oracle::build_loop_forest;

/// What happens when an insertion would make the graph irreducible.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub enum IrreduciblePolicy {
    /// Undo the insertion and report it.
    #[default]
    Reject,
    /// Keep the edge and refuse loop queries until [`DynamicLoopForest::reset`].
    Latch,
}

impl fmt::Display for IrreduciblePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IrreduciblePolicy::Reject => "reject",
            IrreduciblePolicy::Latch => "latch",
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Outcome {
    Applied,
    IrreducibleRejected,
    IrreducibleLatched,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Applied => "ok",
            Outcome::IrreducibleRejected => "irreducible-rejected",
            Outcome::IrreducibleLatched => "irreducible-latched",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateReport {
    /// Refined class of the edge in the tree it was classified against:
    /// after repair for insertions, before removal for deletions. `None`
    /// when an endpoint is unreachable.
    pub class: Option<EdgeClass>,
    pub counters: UpdateCounters,
    pub repair: RepairReport,
    pub outcome: Outcome,
}

/// A rooted graph together with its maintained tree and loop forest.
#[derive(Clone, Debug)]
pub struct DynamicLoopForest {
    g: Cfg,
    tree: DfstState,
    lnf: LnfState,
    policy: IrreduciblePolicy,
    epoch: u64,
}

impl DynamicLoopForest {
    /// Starts from `n` isolated vertices.
    pub fn new(n: usize, root: VertexId, policy: IrreduciblePolicy) -> Result<Self> {
        Self::from_graph(Cfg::with_vertices(n, root)?, policy)
    }

    /// Starts from an existing graph; fails if it is irreducible.
    pub fn from_graph(g: Cfg, policy: IrreduciblePolicy) -> Result<Self> {
        let tree = DfstState::rebuild_full(&g);
        let forest = build_loop_forest(&g, &tree)?;
        let lnf = LnfState::from_forest(&forest);
        Ok(DynamicLoopForest {
            g,
            tree,
            lnf,
            policy,
            epoch: 0,
        })
    }

    pub fn graph(&self) -> &Cfg {
        &self.g
    }

    pub fn tree(&self) -> &DfstState {
        &self.tree
    }

    pub fn policy(&self) -> IrreduciblePolicy {
        self.policy
    }

    /// Bumped by every mutation, including refused ones.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn is_latched(&self) -> bool {
        self.lnf.is_irreducible()
    }

    /// The forest, unless latched.
    pub fn lnf(&self) -> Result<&LnfState> {
        if self.lnf.is_irreducible() {
            Err(Error::Latched)
        } else {
            Ok(&self.lnf)
        }
    }

    pub fn loop_type(&self, v: VertexId) -> Result<LoopType> {
        self.check(v)?;
        Ok(self.lnf()?.loop_type(v))
    }

    pub fn loop_header(&self, v: VertexId) -> Result<Option<VertexId>> {
        self.check(v)?;
        Ok(self.lnf()?.loop_header(v))
    }

    fn check(&self, v: VertexId) -> Result<()> {
        if self.g.contains(v) {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v))
        }
    }

    #[doc(hidden)]
    pub fn inject_fault_skip_reseeding(&mut self) {
        self.lnf.inject_fault_skip_reseeding();
    }

    pub fn add_vertex(&mut self) -> VertexId {
        self.epoch += 1;
        let v = self.g.add_vertex();
        self.tree.sync_vertex_count(self.g.vertex_count());
        self.lnf.sync_vertex_count(self.g.vertex_count());
        v
    }

    pub fn apply(&mut self, event: &UpdateEvent) -> Result<UpdateReport> {
        match event.kind {
            EventKind::Insert => self.insert_edge(event.src, event.dst),
            EventKind::Delete => self.delete_edge(event.src, event.dst),
        }
    }

    /// Inserts one instance of `(u, v)`.
    ///
    /// An irreducible insertion is not an error: it is reported through
    /// [`UpdateReport::outcome`]. Under [`IrreduciblePolicy::Reject`] the
    /// graph, tree and forest are back to their prior contents afterwards.
    pub fn insert_edge(&mut self, u: VertexId, v: VertexId) -> Result<UpdateReport> {
        self.g.insert_edge_raw(u, v)?;
        self.epoch += 1;
        let repair = self.tree.repair_after_insert(&self.g, u, v);
        let class = self.class(u, v);
        if self.lnf.is_irreducible() {
            return Ok(UpdateReport {
                class,
                counters: UpdateCounters {
                    delta: repair.delta.len(),
                    ..Default::default()
                },
                repair,
                outcome: Outcome::IrreducibleLatched,
            });
        }
        match self.lnf.on_insert_edge(&self.g, &self.tree, u, v, &repair) {
            Ok(counters) => Ok(UpdateReport {
                class,
                counters,
                repair,
                outcome: Outcome::Applied,
            }),
            Err(Error::Irreducible(..)) => {
                let counters = self.lnf.rolled_back_counters().clone();
                let outcome = match self.policy {
                    IrreduciblePolicy::Reject => {
                        self.g.delete_edge_raw(u, v)?;
                        if repair.changed_topology() {
                            self.rebuild_tree();
                        }
                        Outcome::IrreducibleRejected
                    }
                    IrreduciblePolicy::Latch => {
                        self.lnf.set_irreducible(true);
                        Outcome::IrreducibleLatched
                    }
                };
                Ok(UpdateReport {
                    class,
                    counters,
                    repair,
                    outcome,
                })
            }
            Err(e) => Err(e),
        }
    }

    /// Deletes the most recently inserted instance of `(u, v)`.
    pub fn delete_edge(&mut self, u: VertexId, v: VertexId) -> Result<UpdateReport> {
        self.check(u)?;
        self.check(v)?;
        if !self.g.has_edge(u, v) {
            return Err(Error::EdgeAbsent(u, v));
        }
        self.epoch += 1;
        let class = self.class(u, v);
        let was_tree = u != v
            && self.tree.is_attached(u)
            && self.tree.parent(v) == Some(u)
            && self.g.multiplicity(u, v) == 1;
        self.g.delete_edge_raw(u, v)?;
        let repair = self.tree.repair_after_delete(&self.g, u, v, was_tree);
        let counters = if self.lnf.is_irreducible() {
            UpdateCounters {
                delta: repair.delta.len(),
                ..Default::default()
            }
        } else {
            self.lnf
                .on_delete_edge(&self.g, &self.tree, u, v, was_tree, &repair)?
        };
        let outcome = if self.lnf.is_irreducible() {
            Outcome::IrreducibleLatched
        } else {
            Outcome::Applied
        };
        Ok(UpdateReport {
            class,
            counters,
            repair,
            outcome,
        })
    }

    fn class(&self, u: VertexId, v: VertexId) -> Option<EdgeClass> {
        (self.tree.is_attached(u) && self.tree.is_attached(v))
            .then(|| self.tree.class_of(u, v, true))
    }

    /// Replaces the tree by a fresh search, keeping the epoch increasing.
    fn rebuild_tree(&mut self) {
        let epoch = self.tree.epoch();
        self.tree = DfstState::rebuild_full(&self.g);
        self.tree.bump_epoch_past(epoch);
    }

    /// Recomputes everything from scratch and clears the latch. Fails, and
    /// stays latched, while the graph is still irreducible.
    pub fn reset(&mut self) -> Result<()> {
        self.epoch += 1;
        self.rebuild_tree();
        let forest = build_loop_forest(&self.g, &self.tree)?;
        let skip = self.lnf.skip_reseeding_injected();
        self.lnf = LnfState::from_forest(&forest);
        if skip {
            self.lnf.inject_fault_skip_reseeding();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: usize) -> VertexId {
        VertexId::new(i)
    }

    fn engine(n: usize, policy: IrreduciblePolicy, edges: &[(usize, usize)]) -> DynamicLoopForest {
        let mut e = DynamicLoopForest::new(n, v(0), policy).unwrap();
        for &(a, b) in edges {
            assert_eq!(e.insert_edge(v(a), v(b)).unwrap().outcome, Outcome::Applied);
        }
        e
    }

    #[test]
    fn reject_restores_everything() {
        let mut e = engine(
            4,
            IrreduciblePolicy::Reject,
            &[(0, 1), (1, 2), (2, 1), (0, 3)],
        );
        let dump = e.lnf().unwrap().dump();
        let tree = e.tree().dump();
        let r = e.insert_edge(v(3), v(2)).unwrap();
        assert_eq!(r.outcome, Outcome::IrreducibleRejected);
        assert!(!e.graph().has_edge(v(3), v(2)));
        assert_eq!(e.lnf().unwrap().dump(), dump);
        assert_eq!(e.tree().dump(), tree);
    }

    #[test]
    fn latch_blocks_queries_until_reset() {
        let mut e = engine(
            4,
            IrreduciblePolicy::Latch,
            &[(0, 1), (1, 2), (2, 1), (0, 3)],
        );
        let r = e.insert_edge(v(3), v(2)).unwrap();
        assert_eq!(r.outcome, Outcome::IrreducibleLatched);
        assert_eq!(e.loop_type(v(1)), Err(Error::Latched));
        assert_eq!(e.reset(), Err(Error::IrreducibleGraph));
        e.delete_edge(v(3), v(2)).unwrap();
        e.reset().unwrap();
        assert_eq!(e.loop_type(v(1)), Ok(LoopType::Reducible));
    }

    #[test]
    fn deleting_absent_edge_fails_cleanly() {
        let mut e = engine(2, IrreduciblePolicy::Reject, &[(0, 1)]);
        assert_eq!(
            e.delete_edge(v(1), v(0)),
            Err(Error::EdgeAbsent(v(1), v(0)))
        );
        assert_eq!(e.insert_edge(v(0), v(9)), Err(Error::UnknownVertex(v(9))));
        assert_eq!(e.graph().edge_count(), 1);
    }

    #[test]
    fn added_vertices_join_later() {
        let mut e = engine(2, IrreduciblePolicy::Reject, &[(0, 1)]);
        let w = e.add_vertex();
        e.insert_edge(v(1), w).unwrap();
        e.insert_edge(w, v(1)).unwrap();
        assert_eq!(e.loop_header(w), Ok(Some(v(1))));
    }
}
