//! Depth-first spanning tree of the reachable part of a [`Cfg`].
//!
//! Every vertex reachable from the root carries a `[pre, post]` interval;
//! ancestry is interval containment. Timestamps are spaced integers so that a
//! newly reachable region can be hung under an existing vertex without
//! touching anybody else's interval. When the gap under that vertex is too
//! small the whole tree is renumbered (order preserving) and the epoch bumps.
//!
//! Repairs are localized but always produce the tree that a full search in
//! successor order would produce on the updated graph:
//!
//! * inserting a forward-cross edge `(u, v)` re-runs the search inside the
//!   subtree of `nca(u, v)`;
//! * inserting an edge into an unreachable vertex hangs the newly reachable
//!   region under the source as its last child;
//! * deleting a tree edge `(u, v)` re-runs the search inside the subtree of the
//!   nearest common ancestor of `u` and every outside predecessor of the old
//!   subtree of `v`; whatever the search misses becomes detached.
//!
//! A re-run reuses the sorted old timestamps of the subtree it replaces, so a
//! vertex whose search prefix is unchanged keeps its interval verbatim.

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::graph::{Cfg, VertexId};

/// Spacing between consecutive timestamps after a full numbering.
pub const STRIDE: u64 = 64;

/// Edge taxonomy of a depth-first spanning tree.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum EdgeClass {
    Tree,
    Forward,
    SelfLoop,
    Back,
    Cross,
    ForwardCross,
    BackCross,
}

impl EdgeClass {
    /// Collapses the refined cross tags onto [`EdgeClass::Cross`].
    pub fn coarse(self) -> EdgeClass {
        match self {
            EdgeClass::ForwardCross | EdgeClass::BackCross => EdgeClass::Cross,
            other => other,
        }
    }

    pub fn is_cross(self) -> bool {
        self.coarse() == EdgeClass::Cross
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeClass::Tree => "tree",
            EdgeClass::Forward => "forward",
            EdgeClass::SelfLoop => "self",
            EdgeClass::Back => "back",
            EdgeClass::Cross => "cross",
            EdgeClass::ForwardCross => "forward-cross",
            EdgeClass::BackCross => "back-cross",
        }
    }
}

impl fmt::Display for EdgeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of a tree repair.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RepairReport {
    /// Vertices whose parent, attachment or relative interval order changed.
    pub delta: Vec<VertexId>,
    /// Vertices that became reachable.
    pub attached: Vec<VertexId>,
    /// Vertices that stopped being reachable.
    pub detached: Vec<VertexId>,
    /// Root of the re-searched region, if any.
    pub locus: Option<VertexId>,
    /// Whether the updated edge is a tree edge afterwards.
    pub tree_edge: bool,
    /// Whether the whole tree was renumbered.
    pub renumbered: bool,
    /// Vertices visited by the repair search.
    pub visited: usize,
}

impl RepairReport {
    pub fn changed_topology(&self) -> bool {
        !self.delta.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DfstState {
    parent: Vec<Option<VertexId>>,
    children: Vec<Vec<VertexId>>,
    pre: Vec<u64>,
    post: Vec<u64>,
    depth: Vec<u32>,
    attached: Vec<bool>,
    epoch: u64,
}

/// Structural view of one vertex, used to compute the repair delta.
#[derive(Clone, Copy, PartialEq, Eq)]
struct Snapshot {
    parent: Option<VertexId>,
    attached: bool,
}

impl DfstState {
    fn empty(n: usize) -> Self {
        DfstState {
            parent: vec![None; n],
            children: vec![Vec::new(); n],
            pre: vec![0; n],
            post: vec![0; n],
            depth: vec![0; n],
            attached: vec![false; n],
            epoch: 0,
        }
    }

    /// Depth-first search from the root in successor order.
    pub fn rebuild_full(g: &Cfg) -> Self {
        let mut s = DfstState::empty(g.vertex_count());
        if g.vertex_count() == 0 {
            return s;
        }
        let mut clock = 0u64;
        let mut visited = HashSet::new();
        s.search(
            g,
            g.root(),
            |_| true,
            &mut visited,
            || {
                clock += STRIDE;
                clock
            },
        );
        s
    }

    /// Grows the per-vertex arrays after vertices were added to the graph.
    pub fn sync_vertex_count(&mut self, n: usize) {
        if n > self.parent.len() {
            self.parent.resize(n, None);
            self.children.resize(n, Vec::new());
            self.pre.resize(n, 0);
            self.post.resize(n, 0);
            self.depth.resize(n, 0);
            self.attached.resize(n, false);
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Moves the epoch beyond `floor`, for trees that replace an older one.
    pub fn bump_epoch_past(&mut self, floor: u64) {
        self.epoch = self.epoch.max(floor) + 1;
    }

    pub fn is_attached(&self, v: VertexId) -> bool {
        self.attached.get(v.index()).copied().unwrap_or(false)
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.parent[v.index()]
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.children[v.index()]
    }

    pub fn pre(&self, v: VertexId) -> u64 {
        self.pre[v.index()]
    }

    pub fn post(&self, v: VertexId) -> u64 {
        self.post[v.index()]
    }

    pub fn depth(&self, v: VertexId) -> u32 {
        self.depth[v.index()]
    }

    pub fn attached_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertex_count())
            .map(VertexId::new)
            .filter(|&v| self.is_attached(v))
    }

    fn require(&self, v: VertexId) -> Result<()> {
        if v.index() >= self.vertex_count() {
            Err(Error::UnknownVertex(v))
        } else if !self.attached[v.index()] {
            Err(Error::Detached(v))
        } else {
            Ok(())
        }
    }

    /// Interval containment without attachment checks.
    #[inline]
    pub fn ancestor(&self, a: VertexId, d: VertexId) -> bool {
        let (a, d) = (a.index(), d.index());
        self.pre[a] <= self.pre[d] && self.post[d] <= self.post[a]
    }

    /// Whether `a` is an ancestor of `d`; every vertex is its own ancestor.
    pub fn is_ancestor(&self, a: VertexId, d: VertexId) -> Result<bool> {
        self.require(a)?;
        self.require(d)?;
        Ok(self.ancestor(a, d))
    }

    pub(crate) fn nca_unchecked(&self, mut u: VertexId, mut v: VertexId) -> VertexId {
        while self.depth(u) > self.depth(v) {
            u = self.parent(u).expect("depth and parent disagree");
        }
        while self.depth(v) > self.depth(u) {
            v = self.parent(v).expect("depth and parent disagree");
        }
        while u != v {
            u = self.parent(u).expect("distinct roots");
            v = self.parent(v).expect("distinct roots");
        }
        u
    }

    /// Nearest common ancestor, by climbing to equal depth then in lockstep.
    pub fn nca(&self, u: VertexId, v: VertexId) -> Result<VertexId> {
        self.require(u)?;
        self.require(v)?;
        Ok(self.nca_unchecked(u, v))
    }

    /// Classification of `(u, v)` against the current tree, without checks.
    pub fn class_of(&self, u: VertexId, v: VertexId, refined: bool) -> EdgeClass {
        if u == v {
            EdgeClass::SelfLoop
        } else if self.parent(v) == Some(u) {
            EdgeClass::Tree
        } else if self.ancestor(u, v) {
            EdgeClass::Forward
        } else if self.ancestor(v, u) {
            EdgeClass::Back
        } else if !refined {
            EdgeClass::Cross
        } else if self.post(u) < self.pre(v) {
            EdgeClass::ForwardCross
        } else {
            EdgeClass::BackCross
        }
    }

    pub fn classify_edge(&self, u: VertexId, v: VertexId, refined: bool) -> Result<EdgeClass> {
        self.require(u)?;
        self.require(v)?;
        Ok(self.class_of(u, v, refined))
    }

    /// `(w, v)` is a back edge between attached vertices; self loops excluded.
    #[inline]
    pub fn is_back_edge(&self, w: VertexId, v: VertexId) -> bool {
        w != v && self.is_attached(w) && self.is_attached(v) && self.ancestor(v, w)
    }

    /// Vertices of the subtree rooted at `v`, in preorder.
    pub fn subtree(&self, v: VertexId) -> Vec<VertexId> {
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            out.push(u);
            stack.extend(self.children(u).iter().rev());
        }
        out
    }

    /// Depth-first search from `start` over vertices admitted by `allowed` and
    /// not yet in `visited`. `start` keeps its parent and depth; stamps are
    /// drawn from `tick` in event order.
    fn search(
        &mut self,
        g: &Cfg,
        start: VertexId,
        allowed: impl Fn(VertexId) -> bool,
        visited: &mut HashSet<VertexId>,
        mut tick: impl FnMut() -> u64,
    ) -> usize {
        visited.insert(start);
        self.attached[start.index()] = true;
        self.children[start.index()].clear();
        self.pre[start.index()] = tick();
        let mut count = 1;
        let mut stack: Vec<(VertexId, usize)> = vec![(start, 0)];
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            let succ = g.successors(v);
            if *next < succ.len() {
                let w = succ[*next];
                *next += 1;
                if allowed(w) && visited.insert(w) {
                    self.parent[w.index()] = Some(v);
                    self.children[v.index()].push(w);
                    self.children[w.index()].clear();
                    self.attached[w.index()] = true;
                    self.depth[w.index()] = self.depth[v.index()] + 1;
                    self.pre[w.index()] = tick();
                    stack.push((w, 0));
                    count += 1;
                }
            } else {
                self.post[v.index()] = tick();
                stack.pop();
            }
        }
        self.epoch += 1;
        count
    }

    fn snapshot(&self, v: VertexId) -> Snapshot {
        Snapshot {
            parent: self.parent(v),
            attached: self.is_attached(v),
        }
    }

    /// Re-runs the search inside the current subtree of `locus`, reusing its
    /// timestamps. Returns the vertices of the old subtree and the visit count.
    fn research_subtree(&mut self, g: &Cfg, locus: VertexId) -> (Vec<VertexId>, usize) {
        let members = self.subtree(locus);
        let allowed: HashSet<VertexId> = members.iter().copied().collect();
        let mut slots: Vec<u64> = members
            .iter()
            .flat_map(|&v| [self.pre(v), self.post(v)])
            .collect();
        slots.sort_unstable();
        for &v in &members {
            if v != locus {
                self.parent[v.index()] = None;
                self.attached[v.index()] = false;
            }
            self.children[v.index()].clear();
        }
        let mut visited = HashSet::new();
        let mut it = slots.into_iter();
        let visits = self.search(
            g,
            locus,
            |w| allowed.contains(&w),
            &mut visited,
            || {
                it.next()
                    .expect("re-searched subtree outgrew its old interval")
            },
        );
        for &v in &members {
            if !self.attached[v.index()] {
                self.pre[v.index()] = 0;
                self.post[v.index()] = 0;
                self.depth[v.index()] = 0;
            }
        }
        (members, visits)
    }

    /// Renumbers every attached interval by walking the tree; structure is kept.
    fn renumber(&mut self, root: VertexId) {
        let mut clock = 0u64;
        let mut stack: Vec<(VertexId, usize)> = vec![(root, 0)];
        clock += STRIDE;
        self.pre[root.index()] = clock;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next < self.children[v.index()].len() {
                let c = self.children[v.index()][*next];
                *next += 1;
                clock += STRIDE;
                self.pre[c.index()] = clock;
                stack.push((c, 0));
            } else {
                clock += STRIDE;
                self.post[v.index()] = clock;
                stack.pop();
            }
        }
        self.epoch += 1;
    }

    /// Hangs the region newly reachable through `(u, v)` under `u`.
    fn attach_region(&mut self, g: &Cfg, u: VertexId, v: VertexId, report: &mut RepairReport) {
        // Structure first, with placeholder stamps, then fit the stamps.
        let detached_mask: Vec<bool> = self.attached.iter().map(|a| !a).collect();
        self.parent[v.index()] = Some(u);
        self.children[u.index()].push(v);
        self.depth[v.index()] = self.depth[u.index()] + 1;
        let mut visited = HashSet::new();
        let mut placeholder = 0u64;
        report.visited += self.search(
            g,
            v,
            |w| detached_mask[w.index()],
            &mut visited,
            || {
                placeholder += 1;
                placeholder
            },
        );
        let region = self.subtree(v);
        let lo = match self.children[u.index()].iter().rev().nth(1) {
            Some(&prev) => self.post(prev),
            None => self.pre(u),
        };
        let hi = self.post(u);
        let needed = 2 * region.len() as u64;
        if hi - lo > needed {
            // Placeholders are 1..=needed in event order; spread them over the gap.
            let step = (hi - lo) / (needed + 1);
            for &w in &region {
                self.pre[w.index()] = lo + step * self.pre[w.index()];
                self.post[w.index()] = lo + step * self.post[w.index()];
            }
        } else {
            self.renumber(g.root());
            report.renumbered = true;
        }
        report.attached = region.clone();
        report.delta = region;
        report.locus = Some(u);
    }

    /// Re-searches the subtree of `locus` and adds every vertex whose
    /// structure or stamps changed to the report's delta.
    fn research_into(&mut self, g: &Cfg, locus: VertexId, report: &mut RepairReport) {
        let before: Vec<(VertexId, Snapshot, u64, u64)> = self
            .subtree(locus)
            .into_iter()
            .map(|w| (w, self.snapshot(w), self.pre(w), self.post(w)))
            .collect();
        let (_, visits) = self.research_subtree(g, locus);
        report.visited += visits;
        report.locus = Some(locus);
        let mut seen: HashSet<VertexId> = report.delta.iter().copied().collect();
        for (w, snap, pre, post) in before {
            let changed = snap != self.snapshot(w) || pre != self.pre(w) || post != self.post(w);
            if changed && seen.insert(w) {
                report.delta.push(w);
            }
        }
    }

    /// Repairs the tree after `(u, v)` was appended to the graph.
    pub fn repair_after_insert(&mut self, g: &Cfg, u: VertexId, v: VertexId) -> RepairReport {
        self.sync_vertex_count(g.vertex_count());
        let mut report = RepairReport::default();
        if !self.is_attached(u) || u == v {
            return report;
        }
        if !self.is_attached(v) {
            self.attach_region(g, u, v, &mut report);
            // The new region may reach vertices discovered after u finished;
            // a full search would take those into the region.
            let region: HashSet<VertexId> = report.attached.iter().copied().collect();
            let mut locus = None;
            for &r in &report.attached {
                for &w in g.successors(r) {
                    if self.is_attached(w)
                        && !region.contains(&w)
                        && self.class_of(r, w, true) == EdgeClass::ForwardCross
                    {
                        locus = Some(self.nca_unchecked(locus.unwrap_or(u), w));
                    }
                }
            }
            if let Some(locus) = locus {
                self.research_into(g, locus, &mut report);
            }
        } else if self.class_of(u, v, true) == EdgeClass::ForwardCross {
            let locus = self.nca_unchecked(u, v);
            self.research_into(g, locus, &mut report);
        }
        report.tree_edge = self.parent(v) == Some(u);
        report
    }

    /// Repairs the tree after one instance of `(u, v)` was removed from the
    /// graph. `was_tree` is the instance's tree status before the removal.
    pub fn repair_after_delete(
        &mut self,
        g: &Cfg,
        u: VertexId,
        v: VertexId,
        was_tree: bool,
    ) -> RepairReport {
        let mut report = RepairReport::default();
        if !was_tree || !self.is_attached(u) || !self.is_attached(v) || u == v {
            return report;
        }
        let hanging: HashSet<VertexId> = self.subtree(v).into_iter().collect();
        let mut locus = u;
        for &s in &hanging {
            for &p in g.predecessors(s) {
                if self.is_attached(p) && !hanging.contains(&p) {
                    locus = self.nca_unchecked(locus, p);
                }
            }
        }
        let before: Vec<(VertexId, Snapshot, u64, u64)> = self
            .subtree(locus)
            .into_iter()
            .map(|w| (w, self.snapshot(w), self.pre(w), self.post(w)))
            .collect();
        let (members, visits) = self.research_subtree(g, locus);
        report.visited = visits;
        report.locus = Some(locus);
        report.detached = members
            .into_iter()
            .filter(|&w| !self.is_attached(w))
            .collect();
        report.delta = before
            .into_iter()
            .filter(|&(w, snap, pre, post)| {
                snap != self.snapshot(w) || pre != self.pre(w) || post != self.post(w)
            })
            .map(|(w, ..)| w)
            .collect();
        report
    }

    /// Same parents, children order and reachability; stamps may differ.
    pub fn same_shape(&self, other: &DfstState) -> bool {
        self.parent == other.parent
            && self.children == other.children
            && self.attached == other.attached
    }

    /// Interval nesting and parent/child consistency, by full scan.
    pub fn check_invariants(&self, g: &Cfg) -> std::result::Result<(), String> {
        let attached: Vec<VertexId> = self.attached_vertices().collect();
        for &u in &attached {
            if self.pre(u) >= self.post(u) {
                return Err(format!("vertex {u}: empty interval"));
            }
            match self.parent(u) {
                None if u != g.root() => {
                    return Err(format!("vertex {u}: attached without parent"))
                }
                Some(p) if !self.is_attached(p) || !self.children(p).contains(&u) => {
                    return Err(format!("vertex {u}: parent {p} does not list it"))
                }
                Some(p) if self.depth(u) != self.depth(p) + 1 => {
                    return Err(format!("vertex {u}: depth mismatch"))
                }
                Some(p) if !(self.pre(p) < self.pre(u) && self.post(u) < self.post(p)) => {
                    return Err(format!("vertex {u}: interval escapes parent {p}"))
                }
                _ => {}
            }
            if !self
                .children(u)
                .windows(2)
                .all(|w| self.post(w[0]) < self.pre(w[1]))
            {
                return Err(format!("vertex {u}: children out of order"));
            }
        }
        for (i, &u) in attached.iter().enumerate() {
            for &v in &attached[i + 1..] {
                let (a, b) = ((self.pre(u), self.post(u)), (self.pre(v), self.post(v)));
                let disjoint = a.1 < b.0 || b.1 < a.0;
                let nested = (a.0 < b.0 && b.1 < a.1) || (b.0 < a.0 && a.1 < b.1);
                if !(disjoint || nested) {
                    return Err(format!("intervals of {u} and {v} overlap partially"));
                }
            }
        }
        for v in g.vertices() {
            if !self.is_attached(v) && self.parent(v).is_some() {
                return Err(format!("detached vertex {v} has a parent"));
            }
        }
        Ok(())
    }

    /// Rank of each attached vertex's pre and post stamp among all stamps.
    fn ranks(&self) -> Vec<Option<(usize, usize)>> {
        let mut stamps: Vec<u64> = self
            .attached_vertices()
            .flat_map(|v| [self.pre(v), self.post(v)])
            .collect();
        stamps.sort_unstable();
        let rank = |t: u64| stamps.binary_search(&t).expect("stamp present");
        (0..self.vertex_count())
            .map(VertexId::new)
            .map(|v| {
                self.is_attached(v)
                    .then(|| (rank(self.pre(v)), rank(self.post(v))))
            })
            .collect()
    }

    /// `v parent pre post depth` per line, with stamps given as ranks so that
    /// localized and full rebuilds print identically.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, r) in self.ranks().into_iter().enumerate() {
            let v = VertexId::new(i);
            match r {
                Some((pre, post)) => {
                    let parent = self.parent(v).map_or("-".to_string(), |p| p.to_string());
                    let _ = writeln!(out, "{v} {parent} {pre} {post} {}", self.depth(v));
                }
                None => {
                    let _ = writeln!(out, "{v} detached");
                }
            }
        }
        out
    }

    /// Graphviz rendering: tree edges solid, other edges dashed and labeled.
    pub fn to_dot(&self, g: &Cfg) -> String {
        let mut out = String::from("digraph dfst {\n");
        for v in g.vertices() {
            if self.is_attached(v) {
                let _ = writeln!(out, "  {v};");
            } else {
                let _ = writeln!(out, "  {v} [style=dashed, color=gray];");
            }
        }
        for (u, v) in g.edges() {
            if self.is_attached(u) && self.is_attached(v) {
                match self.class_of(u, v, true) {
                    EdgeClass::Tree => {
                        let _ = writeln!(out, "  {u} -> {v};");
                    }
                    class => {
                        let _ = writeln!(out, "  {u} -> {v} [style=dashed, label=\"{class}\"];");
                    }
                }
            } else {
                let _ = writeln!(out, "  {u} -> {v} [color=gray, label=\"detached\"];");
            }
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: usize) -> VertexId {
        VertexId::new(i)
    }

    fn graph(n: usize, edges: &[(usize, usize)]) -> Cfg {
        let mut g = Cfg::with_vertices(n, v(0)).unwrap();
        for &(a, b) in edges {
            g.insert_edge_raw(v(a), v(b)).unwrap();
        }
        g
    }

    /// Ancestor sets from explicit parent chains.
    fn ancestors(t: &DfstState, mut x: VertexId) -> Vec<VertexId> {
        let mut out = vec![x];
        while let Some(p) = t.parent(x) {
            out.push(p);
            x = p;
        }
        out
    }

    #[test]
    fn single_vertex() {
        let t = DfstState::rebuild_full(&graph(1, &[]));
        assert!(t.pre(v(0)) < t.post(v(0)));
        assert!(t.children(v(0)).is_empty());
        assert_eq!(t.dump(), "0 - 0 1 0\n");
    }

    #[test]
    fn chain_nests() {
        let t = DfstState::rebuild_full(&graph(3, &[(0, 1), (1, 2)]));
        assert!(t.ancestor(v(1), v(2)) && t.ancestor(v(0), v(1)));
        assert!(t.pre(v(1)) < t.pre(v(2)) && t.post(v(2)) < t.post(v(1)));
        assert!(t.is_ancestor(v(0), v(2)).unwrap());
        assert!(t.is_ancestor(v(2), v(2)).unwrap());
        assert_eq!(t.class_of(v(2), v(1), true), EdgeClass::Back);
    }

    #[test]
    fn siblings_in_visit_order() {
        let g = graph(3, &[(0, 1), (0, 2), (2, 1)]);
        let t = DfstState::rebuild_full(&g);
        assert!(t.post(v(1)) < t.pre(v(2)));
        assert!(!t.is_ancestor(v(1), v(2)).unwrap());
        assert_eq!(t.nca(v(1), v(2)).unwrap(), v(0));
        assert_eq!(t.nca(v(2), v(2)).unwrap(), v(2));
        assert_eq!(
            t.classify_edge(v(2), v(1), true).unwrap(),
            EdgeClass::BackCross
        );
        assert_eq!(
            t.classify_edge(v(2), v(1), false).unwrap(),
            EdgeClass::Cross
        );
        assert_eq!(
            t.classify_edge(v(1), v(1), true).unwrap(),
            EdgeClass::SelfLoop
        );
    }

    #[test]
    fn detached_queries_error() {
        let g = graph(3, &[(0, 1)]);
        let t = DfstState::rebuild_full(&g);
        assert_eq!(t.is_ancestor(v(0), v(2)), Err(Error::Detached(v(2))));
        assert_eq!(t.nca(v(2), v(1)), Err(Error::Detached(v(2))));
        assert!(t.classify_edge(v(2), v(1), true).is_err());
        assert!(t.parent(v(2)).is_none());
    }

    #[test]
    fn back_edge_insert_keeps_tree() {
        let mut g = graph(3, &[(0, 1), (1, 2)]);
        let mut t = DfstState::rebuild_full(&g);
        let before = t.clone();
        g.insert_edge_raw(v(2), v(1)).unwrap();
        let r = t.repair_after_insert(&g, v(2), v(1));
        assert!(r.delta.is_empty());
        assert!(!r.tree_edge);
        assert_eq!(t, before);
    }

    #[test]
    fn insert_reaches_detached_vertex() {
        let mut g = graph(3, &[(0, 1)]);
        let mut t = DfstState::rebuild_full(&g);
        g.insert_edge_raw(v(0), v(2)).unwrap();
        let r = t.repair_after_insert(&g, v(0), v(2));
        assert!(r.delta.contains(&v(2)));
        assert!(r.tree_edge);
        assert!(t.is_attached(v(2)));
        assert_eq!(t.dump(), DfstState::rebuild_full(&g).dump());
        t.check_invariants(&g).unwrap();
    }

    #[test]
    fn forward_cross_insert_matches_full_rebuild() {
        // 0 -> 1 -> 3, 0 -> 2 -> 4; inserting (1, 2) re-hangs 2 under 1.
        let mut g = graph(5, &[(0, 1), (1, 3), (0, 2), (2, 4), (5 - 1, 3)]);
        let mut t = DfstState::rebuild_full(&g);
        assert_eq!(t.class_of(v(1), v(2), true), EdgeClass::ForwardCross);
        g.insert_edge_raw(v(1), v(2)).unwrap();
        let r = t.repair_after_insert(&g, v(1), v(2));
        assert_eq!(r.locus, Some(v(0)));
        assert!(r.tree_edge);
        assert!(r.delta.contains(&v(2)) && r.delta.contains(&v(4)));
        assert!(!r.delta.contains(&v(3)));
        assert_eq!(t.dump(), DfstState::rebuild_full(&g).dump());
        t.check_invariants(&g).unwrap();
    }

    #[test]
    fn tree_delete_reattaches_through_alternative() {
        let mut g = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let mut t = DfstState::rebuild_full(&g);
        assert_eq!(t.parent(v(2)), Some(v(1)));
        g.delete_edge_raw(v(1), v(2)).unwrap();
        let r = t.repair_after_delete(&g, v(1), v(2), true);
        assert_eq!(t.parent(v(2)), Some(v(0)));
        assert!(r.detached.is_empty());
        assert!(r.delta.contains(&v(2)));
        assert_eq!(t.dump(), DfstState::rebuild_full(&g).dump());
    }

    #[test]
    fn deleting_only_entry_detaches() {
        let mut g = graph(3, &[(0, 1), (1, 2)]);
        let mut t = DfstState::rebuild_full(&g);
        g.delete_edge_raw(v(0), v(1)).unwrap();
        let r = t.repair_after_delete(&g, v(0), v(1), true);
        assert_eq!(r.detached.len(), 2);
        assert!(!t.is_attached(v(1)) && !t.is_attached(v(2)));
        assert_eq!(t.dump(), DfstState::rebuild_full(&g).dump());
    }

    #[test]
    fn non_tree_delete_is_free() {
        let mut g = graph(3, &[(0, 1), (1, 2), (2, 1)]);
        let mut t = DfstState::rebuild_full(&g);
        let before = t.clone();
        g.delete_edge_raw(v(2), v(1)).unwrap();
        assert!(t
            .repair_after_delete(&g, v(2), v(1), false)
            .delta
            .is_empty());
        assert_eq!(t, before);
    }

    #[test]
    fn gap_exhaustion_renumbers() {
        // A long detached chain hung under a leaf needs more stamps than the gap.
        let n = 200;
        let mut edges: Vec<(usize, usize)> = (2..n - 1).map(|i| (i, i + 1)).collect();
        edges.push((0, 1));
        let mut g = graph(n, &edges);
        let mut t = DfstState::rebuild_full(&g);
        g.insert_edge_raw(v(1), v(2)).unwrap();
        let epoch = t.epoch();
        let r = t.repair_after_insert(&g, v(1), v(2));
        assert!(r.renumbered);
        assert!(t.epoch() > epoch);
        t.check_invariants(&g).unwrap();
        assert_eq!(t.dump(), DfstState::rebuild_full(&g).dump());
    }

    #[test]
    fn dot_labels_non_tree_edges() {
        let g = graph(3, &[(0, 1), (1, 2), (2, 1), (0, 2)]);
        let dot = DfstState::rebuild_full(&g).to_dot(&g);
        assert!(dot.starts_with("digraph dfst {"));
        assert!(dot.contains("2 -> 1 [style=dashed, label=\"back\"]"));
        assert!(dot.contains("0 -> 2 [style=dashed, label=\"forward\"]"));
        assert!(dot.contains("  0 -> 1;"));
    }

    #[test]
    fn nca_matches_ancestor_chains() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(2..30);
            let mut g = Cfg::with_vertices(n, v(0)).unwrap();
            for i in 1..n {
                g.insert_edge_raw(v(rng.gen_range(0..i)), v(i)).unwrap();
            }
            for _ in 0..n {
                g.insert_edge_raw(v(rng.gen_range(0..n)), v(rng.gen_range(0..n)))
                    .unwrap();
            }
            let t = DfstState::rebuild_full(&g);
            for a in 0..n {
                for b in 0..n {
                    let (xa, xb) = (ancestors(&t, v(a)), ancestors(&t, v(b)));
                    let brute = xa.iter().find(|x| xb.contains(x)).copied().unwrap();
                    assert_eq!(t.nca(v(a), v(b)).unwrap(), brute);
                }
            }
        }
    }
}
