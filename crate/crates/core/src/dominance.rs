//! Dominance queries answered from the maintained forest where possible.
//!
//! A loop header dominates its whole body, and of two nested headers the
//! outer one dominates the inner one. Those answers come straight from the
//! header chains. Everything else goes through a dominator tree that is
//! built on demand and cached until the next update.

use crate::engine::DynamicLoopForest;
use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::lnf::{LnfState, LoopType};
use crate::oracle::DomTree;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum QuerySource {
    /// Read off the header chains.
    LnfFast,
    /// Walked in the materialized dominator tree.
    Fallback,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct DomQueryResult {
    pub answer: bool,
    pub source: QuerySource,
}

/// Whether `v` lies in the body of the loop headed by `h`.
pub fn header_dominates(s: &LnfState, h: VertexId, v: VertexId) -> Result<bool> {
    for x in [h, v] {
        if x.index() >= s.vertex_count() {
            return Err(Error::UnknownVertex(x));
        }
    }
    if s.loop_type(h) != LoopType::Reducible {
        return Err(Error::NotAHeader(h));
    }
    Ok(s.in_body(h, v))
}

/// Dominator tree cache keyed by the forest's update epoch.
#[derive(Clone, Debug, Default)]
pub struct DominanceIndex {
    cache: Option<(u64, DomTree)>,
    materializations: usize,
}

impl DominanceIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// How many times a tree was actually built.
    pub fn materializations(&self) -> usize {
        self.materializations
    }

    /// The dominator tree of the current graph, rebuilt only after updates.
    pub fn materialize(&mut self, f: &DynamicLoopForest) -> Result<&DomTree> {
        f.lnf()?;
        let stale = !matches!(&self.cache, Some((epoch, _)) if *epoch == f.epoch());
        if stale {
            self.cache = Some((f.epoch(), build(f)));
            self.materializations += 1;
        }
        Ok(&self.cache.as_ref().expect("just filled").1)
    }

    pub fn dominates(
        &mut self,
        f: &DynamicLoopForest,
        u: VertexId,
        v: VertexId,
    ) -> Result<DomQueryResult> {
        let lnf = f.lnf()?;
        for x in [u, v] {
            if !f.graph().contains(x) {
                return Err(Error::UnknownVertex(x));
            }
            if !f.tree().is_attached(x) {
                return Err(Error::Detached(x));
            }
        }
        let fast = |answer| {
            Ok(DomQueryResult {
                answer,
                source: QuerySource::LnfFast,
            })
        };
        if u == f.graph().root() || u == v {
            return fast(true);
        }
        if lnf.loop_type(u) == LoopType::Reducible && lnf.in_body(u, v) {
            return fast(true);
        }
        // A header enclosing u dominates u, so u cannot dominate it.
        if lnf.loop_type(v) == LoopType::Reducible && lnf.in_body(v, u) {
            return fast(false);
        }
        let answer = self.materialize(f)?.dominates(u, v);
        Ok(DomQueryResult {
            answer,
            source: QuerySource::Fallback,
        })
    }
}

/// One pass in reverse postorder of the maintained tree. Back edges close
/// loops whose header already dominates their source, so in a reducible
/// graph the immediate dominator of `v` is the meet of its other
/// predecessors, all of which come earlier in that order.
fn build(f: &DynamicLoopForest) -> DomTree {
    let g = f.graph();
    let t = f.tree();
    let n = g.vertex_count();
    let mut order: Vec<VertexId> = t.attached_vertices().collect();
    order.sort_by_key(|&v| std::cmp::Reverse(t.post(v)));
    let mut idom: Vec<Option<VertexId>> = vec![None; n];
    let mut depth = vec![0usize; n];
    let meet = |idom: &[Option<VertexId>], depth: &[usize], mut a: VertexId, mut b: VertexId| {
        while a != b {
            if depth[a.index()] >= depth[b.index()] {
                a = idom[a.index()].expect("non-root has an idom");
            } else {
                b = idom[b.index()].expect("non-root has an idom");
            }
        }
        a
    };
    for &v in order.iter().skip(1) {
        let mut d: Option<VertexId> = None;
        for &p in g.predecessors(v) {
            if p == v || !t.is_attached(p) || t.is_back_edge(p, v) {
                continue;
            }
            d = Some(match d {
                None => p,
                Some(cur) => meet(&idom, &depth, cur, p),
            });
        }
        let d = d.expect("attached vertex has a forward predecessor");
        idom[v.index()] = Some(d);
        depth[v.index()] = depth[d.index()] + 1;
    }
    DomTree {
        idom,
        root: g.root(),
    }
}
