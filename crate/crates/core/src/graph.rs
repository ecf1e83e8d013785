//! Rooted directed multigraph storage.
//!
//! Vertices are dense indices and are never removed. Edges carry a
//! multiplicity: inserting `(u, v)` twice and deleting it once leaves one
//! instance behind. Successor lists keep insertion order, which is also the
//! visit order of every depth-first search in this crate. Deletion removes the
//! most recently inserted instance of an edge so that the first instance, the
//! one a search would take, stays where it is.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Dense vertex index.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct VertexId(u32);

impl VertexId {
    pub const fn new(index: usize) -> Self {
        VertexId(index as u32)
    }

    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for VertexId {
    fn from(index: usize) -> Self {
        VertexId::new(index)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EventKind {
    Insert,
    Delete,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Insert => "+",
            EventKind::Delete => "-",
        })
    }
}

/// One edge update of a stream.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct UpdateEvent {
    pub kind: EventKind,
    pub src: VertexId,
    pub dst: VertexId,
    pub seq: usize,
}

/// A rooted control-flow graph.
#[derive(Clone, Debug)]
pub struct Cfg {
    root: VertexId,
    out_adj: Vec<Vec<VertexId>>,
    in_adj: Vec<Vec<VertexId>>,
    multiplicity: HashMap<(VertexId, VertexId), usize>,
    edge_count: usize,
}

impl Default for Cfg {
    fn default() -> Self {
        Cfg::new()
    }
}

impl Cfg {
    /// An empty graph whose first vertex will be the root.
    pub fn new() -> Self {
        Cfg {
            root: VertexId::new(0),
            out_adj: Vec::new(),
            in_adj: Vec::new(),
            multiplicity: HashMap::new(),
            edge_count: 0,
        }
    }

    /// A graph with `n` isolated vertices and the given root.
    pub fn with_vertices(n: usize, root: VertexId) -> Result<Self> {
        if root.index() >= n {
            return Err(Error::UnknownVertex(root));
        }
        let mut g = Cfg::new();
        g.root = root;
        for _ in 0..n {
            g.add_vertex();
        }
        Ok(g)
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn vertex_count(&self) -> usize {
        self.out_adj.len()
    }

    /// Total edge multiplicity.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertex_count()).map(VertexId::new)
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.index() < self.vertex_count()
    }

    fn check(&self, v: VertexId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v))
        }
    }

    pub fn add_vertex(&mut self) -> VertexId {
        let id = VertexId::new(self.out_adj.len());
        self.out_adj.push(Vec::new());
        self.in_adj.push(Vec::new());
        id
    }

    pub fn insert_edge_raw(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        self.check(u)?;
        self.check(v)?;
        self.out_adj[u.index()].push(v);
        self.in_adj[v.index()].push(u);
        *self.multiplicity.entry((u, v)).or_insert(0) += 1;
        self.edge_count += 1;
        Ok(())
    }

    /// Removes the most recently inserted instance of `(u, v)`.
    pub fn delete_edge_raw(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        self.check(u)?;
        self.check(v)?;
        let Some(count) = self.multiplicity.get_mut(&(u, v)) else {
            return Err(Error::EdgeAbsent(u, v));
        };
        *count -= 1;
        if *count == 0 {
            self.multiplicity.remove(&(u, v));
        }
        let out = &mut self.out_adj[u.index()];
        let pos = out
            .iter()
            .rposition(|&w| w == v)
            .expect("adjacency out of sync");
        out.remove(pos);
        let inc = &mut self.in_adj[v.index()];
        let pos = inc
            .iter()
            .rposition(|&w| w == u)
            .expect("adjacency out of sync");
        inc.remove(pos);
        self.edge_count -= 1;
        Ok(())
    }

    pub fn multiplicity(&self, u: VertexId, v: VertexId) -> usize {
        self.multiplicity.get(&(u, v)).copied().unwrap_or(0)
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.multiplicity(u, v) > 0
    }

    pub fn successors(&self, v: VertexId) -> &[VertexId] {
        &self.out_adj[v.index()]
    }

    /// Predecessors of `v`, repeated once per parallel edge.
    pub fn predecessors(&self, v: VertexId) -> &[VertexId] {
        &self.in_adj[v.index()]
    }

    pub fn try_predecessors(&self, v: VertexId) -> Result<&[VertexId]> {
        self.check(v)?;
        Ok(self.predecessors(v))
    }

    /// Every edge instance in successor order, grouped by source.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.vertices()
            .flat_map(move |u| self.successors(u).iter().map(move |&v| (u, v)))
    }

    /// Full scan of the adjacency invariants.
    pub fn is_consistent(&self) -> bool {
        let mut out_counts: HashMap<(VertexId, VertexId), usize> = HashMap::new();
        let mut in_counts: HashMap<(VertexId, VertexId), usize> = HashMap::new();
        for u in self.vertices() {
            for &v in self.successors(u) {
                *out_counts.entry((u, v)).or_insert(0) += 1;
            }
            for &p in self.predecessors(u) {
                *in_counts.entry((p, u)).or_insert(0) += 1;
            }
        }
        let total: usize = out_counts.values().sum();
        out_counts == in_counts && out_counts == self.multiplicity && total == self.edge_count
    }
}
