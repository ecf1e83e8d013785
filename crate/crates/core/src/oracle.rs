//! Offline reference algorithms used as ground truth.
//!
//! * [`build_loop_forest`]: bottom-up loop nesting forest over a given
//!   depth-first order, collapsing finished inner loops with union-find.
//! * [`reducibility_test`]: T1/T2 collapse.
//! * [`iterative_dominators`]: reverse-postorder intersection dataflow, plus
//!   [`brute_force_dominators`] (explicit dominator sets) as a second level.
//!
//! None of these share code with the dynamic layer except [`DfstState`],
//! which supplies the depth-first order for [`build_loop_forest`].

use std::collections::BTreeSet;

use crate::dfst::DfstState;
use crate::error::{Error, Result};
use crate::graph::{Cfg, VertexId};
use crate::lnf::LoopType;

/// Loop nesting forest in the same per-vertex encoding as the maintained one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StaticLoopForest {
    pub header: Vec<Option<VertexId>>,
    pub kind: Vec<LoopType>,
    /// Vertex visits while building: one per header pass, one per flood pop.
    pub work: usize,
}

impl StaticLoopForest {
    pub fn header(&self, v: VertexId) -> Option<VertexId> {
        self.header[v.index()]
    }

    pub fn kind(&self, v: VertexId) -> LoopType {
        self.kind[v.index()]
    }

    /// Same forest, ignoring the work counter.
    pub fn same_forest(&self, other: &StaticLoopForest) -> bool {
        self.header == other.header && self.kind == other.kind
    }

    /// `v type header` lines, the format of the maintained forest's dump.
    pub fn dump(&self) -> String {
        crate::lnf::dump_maps(&self.kind, &self.header)
    }
}

/// A depth-first order: interval stamps plus the preorder sequence.
struct SearchOrder {
    pre: Vec<usize>,
    post: Vec<usize>,
    attached: Vec<bool>,
    preorder: Vec<VertexId>,
}

impl SearchOrder {
    fn from_tree(t: &DfstState) -> Self {
        let n = t.vertex_count();
        let mut preorder: Vec<VertexId> = t.attached_vertices().collect();
        preorder.sort_by_key(|&v| t.pre(v));
        let mut pre = vec![0; n];
        let mut post = vec![0; n];
        for v in t.attached_vertices() {
            pre[v.index()] = t.pre(v) as usize;
            post[v.index()] = t.post(v) as usize;
        }
        let attached = (0..n).map(|i| t.is_attached(VertexId::new(i))).collect();
        SearchOrder {
            pre,
            post,
            attached,
            preorder,
        }
    }

    /// Own search that visits successors in reverse order.
    fn reversed(g: &Cfg) -> Self {
        let n = g.vertex_count();
        let mut order = SearchOrder {
            pre: vec![0; n],
            post: vec![0; n],
            attached: vec![false; n],
            preorder: Vec::new(),
        };
        if n == 0 {
            return order;
        }
        let mut clock = 0;
        let root = g.root();
        order.attached[root.index()] = true;
        order.pre[root.index()] = clock;
        order.preorder.push(root);
        let mut stack = vec![(root, g.successors(root).len())];
        while let Some(&mut (v, ref mut remaining)) = stack.last_mut() {
            if *remaining > 0 {
                *remaining -= 1;
                let w = g.successors(v)[*remaining];
                if !order.attached[w.index()] {
                    clock += 1;
                    order.attached[w.index()] = true;
                    order.pre[w.index()] = clock;
                    order.preorder.push(w);
                    stack.push((w, g.successors(w).len()));
                }
            } else {
                clock += 1;
                order.post[v.index()] = clock;
                stack.pop();
            }
        }
        order
    }

    fn ancestor(&self, a: VertexId, d: VertexId) -> bool {
        self.pre[a.index()] <= self.pre[d.index()] && self.post[d.index()] <= self.post[a.index()]
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Merges `child` into `into`, keeping `into` as representative.
    fn union_into(&mut self, child: usize, into: usize) {
        let c = self.find(child);
        self.parent[c] = into;
    }
}

fn forest_over(g: &Cfg, order: &SearchOrder) -> Result<StaticLoopForest> {
    let n = g.vertex_count();
    let mut header = vec![None; n];
    let mut kind = vec![LoopType::NonHeader; n];
    let mut uf = UnionFind::new(n);
    let mut work = 0;
    for &w in order.preorder.iter().rev() {
        work += 1;
        let mut has_self = false;
        let mut body: BTreeSet<usize> = BTreeSet::new();
        for &z in g.predecessors(w) {
            if z == w {
                has_self = true;
            } else if order.attached[z.index()] && order.ancestor(w, z) {
                body.insert(uf.find(z.index()));
            }
        }
        let mut pending: Vec<usize> = body.iter().copied().collect();
        while let Some(p) = pending.pop() {
            work += 1;
            let pv = VertexId::new(p);
            for &q in g.predecessors(pv) {
                if q == pv || !order.attached[q.index()] || order.ancestor(pv, q) {
                    continue;
                }
                let rep = uf.find(q.index());
                if !order.ancestor(w, VertexId::new(rep)) {
                    return Err(Error::IrreducibleGraph);
                }
                if rep != w.index() && body.insert(rep) {
                    pending.push(rep);
                }
            }
        }
        for &p in &body {
            header[p] = Some(w);
            uf.union_into(p, w.index());
        }
        kind[w.index()] = if !body.is_empty() {
            LoopType::Reducible
        } else if has_self {
            LoopType::SelfLoop
        } else {
            LoopType::NonHeader
        };
    }
    Ok(StaticLoopForest { header, kind, work })
}

/// Builds the loop nesting forest from scratch over the given tree's order.
///
/// Headers are processed in reverse preorder; each one floods backwards from
/// the representatives of its back-edge sources. A flood that reaches a
/// vertex outside the header's subtree proves a second loop entry.
pub fn build_loop_forest(g: &Cfg, order: &DfstState) -> Result<StaticLoopForest> {
    forest_over(g, &SearchOrder::from_tree(order))
}

/// [`build_loop_forest`] over an independent search that visits successors
/// in reverse order. For reducible graphs the two forests coincide.
pub fn build_loop_forest_reversed(g: &Cfg) -> Result<StaticLoopForest> {
    forest_over(g, &SearchOrder::reversed(g))
}

/// Vertices reachable from the root.
pub fn reachable(g: &Cfg) -> Vec<bool> {
    let mut seen = vec![false; g.vertex_count()];
    if g.vertex_count() == 0 {
        return seen;
    }
    let mut stack = vec![g.root()];
    seen[g.root().index()] = true;
    while let Some(v) = stack.pop() {
        for &w in g.successors(v) {
            if !seen[w.index()] {
                seen[w.index()] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// Whether iterated T1 (drop a self loop) and T2 (merge a vertex into its
/// unique predecessor) collapse the reachable graph to a single vertex.
pub fn reducibility_test(g: &Cfg) -> bool {
    reducibility_test_with(g, None)
}

/// [`reducibility_test`] on `g` plus one extra edge, without copying `g`.
pub fn reducibility_test_with(g: &Cfg, extra: Option<(VertexId, VertexId)>) -> bool {
    let n = g.vertex_count();
    if n == 0 {
        return true;
    }
    let mut succs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (u, v) in g.edges().chain(extra) {
        if u != v {
            succs[u.index()].insert(v.index());
        }
    }
    let root = g.root().index();
    let mut live = vec![false; n];
    live[root] = true;
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        for &w in &succs[v] {
            if !live[w] {
                live[w] = true;
                stack.push(w);
            }
        }
    }
    let mut preds: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        if live[u] {
            for &v in &succs[u] {
                preds[v].insert(u);
            }
        } else {
            succs[u].clear();
        }
    }
    let root = g.root().index();
    let mut alive: BTreeSet<usize> = (0..n).filter(|&i| live[i]).collect();
    // T1/T2 reduction is confluent, so candidates can be merged in any order.
    let mut work: Vec<usize> = alive.iter().copied().collect();
    while let Some(v) = work.pop() {
        if v == root || !alive.contains(&v) || preds[v].len() != 1 {
            continue;
        }
        let u = *preds[v].iter().next().unwrap();
        succs[u].remove(&v);
        for w in std::mem::take(&mut succs[v]) {
            preds[w].remove(&v);
            // T1 applied eagerly: a merge that closes a cycle leaves no edge.
            if w != u {
                preds[w].insert(u);
                succs[u].insert(w);
            }
            work.push(w);
        }
        preds[v].clear();
        alive.remove(&v);
    }
    alive.len() == 1
}

/// Immediate dominators; `None` for the root and unreachable vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomTree {
    pub idom: Vec<Option<VertexId>>,
    pub root: VertexId,
}

impl DomTree {
    pub fn idom(&self, v: VertexId) -> Option<VertexId> {
        self.idom[v.index()]
    }

    /// Whether `u` dominates `v`, by walking `v`'s idom chain. Unreachable
    /// vertices dominate and are dominated by nothing.
    pub fn dominates(&self, u: VertexId, v: VertexId) -> bool {
        let reachable = |x: VertexId| x == self.root || self.idom[x.index()].is_some();
        if !reachable(u) || !reachable(v) {
            return false;
        }
        let mut x = Some(v);
        while let Some(y) = x {
            if y == u {
                return true;
            }
            x = self.idom[y.index()];
        }
        false
    }
}

/// Reverse postorder of the reachable vertices, successors in order.
fn reverse_postorder(g: &Cfg) -> Vec<VertexId> {
    let n = g.vertex_count();
    let mut seen = vec![false; n];
    let mut post = Vec::with_capacity(n);
    if n == 0 {
        return post;
    }
    let root = g.root();
    seen[root.index()] = true;
    let mut stack = vec![(root, 0usize)];
    while let Some(&mut (v, ref mut next)) = stack.last_mut() {
        if let Some(&w) = g.successors(v).get(*next) {
            *next += 1;
            if !seen[w.index()] {
                seen[w.index()] = true;
                stack.push((w, 0));
            }
        } else {
            post.push(v);
            stack.pop();
        }
    }
    post.reverse();
    post
}

/// Iterate-to-convergence dominators over reverse postorder, intersecting
/// along the partially built idom tree.
pub fn iterative_dominators(g: &Cfg) -> DomTree {
    let n = g.vertex_count();
    let rpo = reverse_postorder(g);
    let mut order = vec![usize::MAX; n];
    for (i, &v) in rpo.iter().enumerate() {
        order[v.index()] = i;
    }
    let mut idom: Vec<Option<usize>> = vec![None; n];
    if rpo.is_empty() {
        return DomTree {
            idom: vec![None; n],
            root: g.root(),
        };
    }
    idom[0] = Some(0);
    let intersect = |idom: &[Option<usize>], mut a: usize, mut b: usize| {
        while a != b {
            while a > b {
                a = idom[a].unwrap();
            }
            while b > a {
                b = idom[b].unwrap();
            }
        }
        a
    };
    let mut changed = true;
    while changed {
        changed = false;
        for (i, &v) in rpo.iter().enumerate().skip(1) {
            let mut new_idom = None;
            for &p in g.predecessors(v) {
                let pi = order[p.index()];
                if pi == usize::MAX || idom[pi].is_none() {
                    continue;
                }
                new_idom = Some(match new_idom {
                    None => pi,
                    Some(cur) => intersect(&idom, pi, cur),
                });
            }
            if new_idom != idom[i] {
                idom[i] = new_idom;
                changed = true;
            }
        }
    }
    let mut out = vec![None; n];
    for (i, &v) in rpo.iter().enumerate().skip(1) {
        out[v.index()] = idom[i].map(|d| rpo[d]);
    }
    DomTree {
        idom: out,
        root: g.root(),
    }
}

/// Explicit dominator sets from the set equation, iterated to a fixpoint.
/// `None` for unreachable vertices.
pub fn brute_force_dominator_sets(g: &Cfg) -> Vec<Option<BTreeSet<VertexId>>> {
    let n = g.vertex_count();
    let live = reachable(g);
    let all: BTreeSet<VertexId> = g.vertices().filter(|v| live[v.index()]).collect();
    let mut dom: Vec<Option<BTreeSet<VertexId>>> = g
        .vertices()
        .map(|v| live[v.index()].then(|| all.clone()))
        .collect();
    if n == 0 {
        return dom;
    }
    dom[g.root().index()] = Some(BTreeSet::from([g.root()]));
    let mut changed = true;
    while changed {
        changed = false;
        for v in g.vertices() {
            if v == g.root() || !live[v.index()] {
                continue;
            }
            let mut acc: Option<BTreeSet<VertexId>> = None;
            for &p in g.predecessors(v) {
                let Some(dp) = &dom[p.index()] else { continue };
                acc = Some(match acc {
                    None => dp.clone(),
                    Some(a) => a.intersection(dp).copied().collect(),
                });
            }
            let mut next = acc.unwrap_or_default();
            next.insert(v);
            if dom[v.index()].as_ref() != Some(&next) {
                dom[v.index()] = Some(next);
                changed = true;
            }
        }
    }
    dom
}

/// Dominator tree read off the explicit dominator sets: the immediate
/// dominator is the strict dominator with the largest set.
pub fn brute_force_dominators(g: &Cfg) -> DomTree {
    let sets = brute_force_dominator_sets(g);
    let idom = g
        .vertices()
        .map(|v| {
            let set = sets[v.index()].as_ref()?;
            set.iter()
                .filter(|&&d| d != v)
                .max_by_key(|d| sets[d.index()].as_ref().map_or(0, |s| s.len()))
                .copied()
        })
        .collect();
    DomTree {
        idom,
        root: g.root(),
    }
}
