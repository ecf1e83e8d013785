//! The maintained loop nesting forest.
//!
//! Two per-vertex maps encode the forest: `loop_types[v]` says whether `v`
//! heads nothing, only a self loop, or a reducible loop, and
//! `loop_headers[v]` names the innermost loop header whose body contains `v`
//! (never `v` itself). Header links are a plain parent map; nothing is path
//! compressed, so a chain of links is the chain of enclosing loops.
//!
//! Updates run after the depth-first tree has been repaired. Every read of a
//! vertex's loop assignment and every write goes through a journal, which
//! gives the touched set reported in [`UpdateCounters`] and lets a rejected
//! insertion restore the previous state exactly.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::{self, Write as _};

use crate::dfst::{DfstState, EdgeClass, RepairReport};
use crate::error::{Error, Result};
use crate::graph::{Cfg, VertexId};
use crate::oracle::StaticLoopForest;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub enum LoopType {
    #[default]
    NonHeader,
    SelfLoop,
    Reducible,
}

impl LoopType {
    pub fn as_str(self) -> &'static str {
        match self {
            LoopType::NonHeader => "NONHEADER",
            LoopType::SelfLoop => "SELF",
            LoopType::Reducible => "REDUCIBLE",
        }
    }
}

impl fmt::Display for LoopType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A materialized loop: its header and full body, header included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Loop {
    pub header: VertexId,
    pub body: BTreeSet<VertexId>,
}

/// Per-update locality instrumentation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UpdateCounters {
    /// Loop-assignment inspections and changes, one per event (chain hops
    /// included).
    pub k: usize,
    /// Size of the tree repair delta.
    pub delta: usize,
    /// Distinct vertices whose assignment was inspected or changed.
    pub touched: Vec<VertexId>,
}

#[derive(Clone, Debug, Default)]
struct Journal {
    types: Vec<(VertexId, LoopType)>,
    headers: Vec<(VertexId, Option<VertexId>)>,
    counts: [usize; 2],
    touched: Vec<VertexId>,
    seen: HashSet<VertexId>,
    k: usize,
}

/// Reducible loop nesting forest maintained under edge updates.
#[derive(Clone, Debug)]
pub struct LnfState {
    loop_types: Vec<LoopType>,
    loop_headers: Vec<Option<VertexId>>,
    loop_counts: [usize; 2],
    irreducible: bool,
    journal: Journal,
    rolled_back: UpdateCounters,
    skip_reseeding: bool,
}

impl PartialEq for LnfState {
    fn eq(&self, other: &Self) -> bool {
        self.loop_types == other.loop_types
            && self.loop_headers == other.loop_headers
            && self.loop_counts == other.loop_counts
            && self.irreducible == other.irreducible
    }
}

impl Eq for LnfState {}

/// `v type header` lines sorted by vertex id; `-` stands for no header.
pub(crate) fn dump_maps(types: &[LoopType], headers: &[Option<VertexId>]) -> String {
    let mut out = String::new();
    for (i, (ty, h)) in types.iter().zip(headers).enumerate() {
        match h {
            Some(h) => writeln!(out, "{i} {ty} {h}"),
            None => writeln!(out, "{i} {ty} -"),
        }
        .expect("writing to a String");
    }
    out
}

impl LnfState {
    /// Forest of a graph without edges: nobody heads anything.
    pub fn new(n: usize) -> Self {
        LnfState {
            loop_types: vec![LoopType::NonHeader; n],
            loop_headers: vec![None; n],
            loop_counts: [0, 0],
            irreducible: false,
            journal: Journal::default(),
            rolled_back: UpdateCounters::default(),
            skip_reseeding: false,
        }
    }

    /// Adopts a forest computed offline.
    pub fn from_forest(forest: &StaticLoopForest) -> Self {
        let mut s = LnfState {
            loop_types: forest.kind.clone(),
            loop_headers: forest.header.clone(),
            loop_counts: [0, 0],
            irreducible: false,
            journal: Journal::default(),
            rolled_back: UpdateCounters::default(),
            skip_reseeding: false,
        };
        s.loop_counts = s.recount();
        s
    }

    pub fn sync_vertex_count(&mut self, n: usize) {
        if n > self.loop_types.len() {
            self.loop_types.resize(n, LoopType::NonHeader);
            self.loop_headers.resize(n, None);
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.loop_types.len()
    }

    pub fn loop_type(&self, v: VertexId) -> LoopType {
        self.loop_types[v.index()]
    }

    pub fn loop_header(&self, v: VertexId) -> Option<VertexId> {
        self.loop_headers[v.index()]
    }

    pub fn loop_types(&self) -> &[LoopType] {
        &self.loop_types
    }

    pub fn loop_headers(&self) -> &[Option<VertexId>] {
        &self.loop_headers
    }

    /// `[self loops, reducible loops]` as maintained.
    pub fn loop_counts(&self) -> [usize; 2] {
        self.loop_counts
    }

    /// `[self loops, reducible loops]` by full scan.
    pub fn recount(&self) -> [usize; 2] {
        let mut counts = [0, 0];
        for ty in &self.loop_types {
            match ty {
                LoopType::SelfLoop => counts[0] += 1,
                LoopType::Reducible => counts[1] += 1,
                LoopType::NonHeader => {}
            }
        }
        counts
    }

    /// Work spent by the last insertion that was undone.
    pub fn rolled_back_counters(&self) -> &UpdateCounters {
        &self.rolled_back
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }

    pub fn set_irreducible(&mut self, latched: bool) {
        self.irreducible = latched;
    }

    /// Deliberately breaks deletion handling by ignoring surviving back
    /// edges, so that checkers can show they notice.
    #[doc(hidden)]
    pub fn inject_fault_skip_reseeding(&mut self) {
        self.skip_reseeding = true;
    }

    #[doc(hidden)]
    pub fn skip_reseeding_injected(&self) -> bool {
        self.skip_reseeding
    }

    pub fn dump(&self) -> String {
        dump_maps(&self.loop_types, &self.loop_headers)
    }

    /// Whether `v`'s header chain passes through `h` (or `v == h`).
    pub fn in_body(&self, h: VertexId, v: VertexId) -> bool {
        let mut x = Some(v);
        while let Some(y) = x {
            if y == h {
                return true;
            }
            x = self.loop_header(y);
        }
        false
    }

    /// Body of the loop headed by `h`, by scanning every vertex's chain.
    pub fn loop_body(&self, h: VertexId) -> Result<BTreeSet<VertexId>> {
        if h.index() >= self.vertex_count() {
            return Err(Error::UnknownVertex(h));
        }
        if self.loop_type(h) != LoopType::Reducible {
            return Err(Error::NotAHeader(h));
        }
        Ok((0..self.vertex_count())
            .map(VertexId::new)
            .filter(|&v| self.in_body(h, v))
            .collect())
    }

    /// Every reducible loop, outermost headers first by vertex id order.
    pub fn loops(&self) -> Vec<Loop> {
        let mut bodies: HashMap<VertexId, BTreeSet<VertexId>> = HashMap::new();
        for v in (0..self.vertex_count()).map(VertexId::new) {
            if self.loop_type(v) == LoopType::Reducible {
                bodies.entry(v).or_default().insert(v);
            }
            let mut x = self.loop_header(v);
            while let Some(h) = x {
                bodies.entry(h).or_default().insert(v);
                x = self.loop_header(h);
            }
        }
        let mut loops: Vec<Loop> = bodies
            .into_iter()
            .map(|(header, body)| Loop { header, body })
            .collect();
        loops.sort_by_key(|l| l.header);
        loops
    }

    /// Per-vertex equality with an offline forest.
    pub fn verify_against(&self, oracle: &StaticLoopForest) -> bool {
        self.loop_types == oracle.kind && self.loop_headers == oracle.header
    }

    // Journaled access. Everything the update routines read or write about a
    // vertex's loop assignment goes through these.

    fn begin(&mut self) {
        self.journal = Journal {
            counts: self.loop_counts,
            ..Journal::default()
        };
    }

    fn finish(&mut self, repair: &RepairReport) -> UpdateCounters {
        let journal = std::mem::take(&mut self.journal);
        UpdateCounters {
            k: journal.k,
            delta: repair.delta.len(),
            touched: journal.touched,
        }
    }

    fn rollback(&mut self, repair: &RepairReport) {
        let journal = std::mem::take(&mut self.journal);
        self.rolled_back = UpdateCounters {
            k: journal.k,
            delta: repair.delta.len(),
            touched: journal.touched.clone(),
        };
        for &(v, ty) in journal.types.iter().rev() {
            self.loop_types[v.index()] = ty;
        }
        for &(v, h) in journal.headers.iter().rev() {
            self.loop_headers[v.index()] = h;
        }
        self.loop_counts = journal.counts;
    }

    fn touch(&mut self, v: VertexId) {
        self.journal.k += 1;
        if self.journal.seen.insert(v) {
            self.journal.touched.push(v);
        }
    }

    fn header_of(&mut self, v: VertexId) -> Option<VertexId> {
        self.touch(v);
        self.loop_headers[v.index()]
    }

    fn type_of(&mut self, v: VertexId) -> LoopType {
        self.touch(v);
        self.loop_types[v.index()]
    }

    fn set_header(&mut self, v: VertexId, h: Option<VertexId>) {
        self.touch(v);
        let old = self.loop_headers[v.index()];
        if old != h {
            self.journal.headers.push((v, old));
            self.loop_headers[v.index()] = h;
        }
    }

    fn set_type(&mut self, v: VertexId, ty: LoopType) {
        self.touch(v);
        let old = self.loop_types[v.index()];
        if old == ty {
            return;
        }
        self.journal.types.push((v, old));
        self.loop_types[v.index()] = ty;
        match old {
            LoopType::SelfLoop => self.loop_counts[0] -= 1,
            LoopType::Reducible => self.loop_counts[1] -= 1,
            LoopType::NonHeader => {}
        }
        match ty {
            LoopType::SelfLoop => self.loop_counts[0] += 1,
            LoopType::Reducible => self.loop_counts[1] += 1,
            LoopType::NonHeader => {}
        }
    }

    /// Climbs `x`'s header chain until the next link is absent or encloses
    /// `head`; returns the last vertex reached. Each hop counts towards `k`.
    pub fn find_loop_head(&mut self, t: &DfstState, x: VertexId, head: VertexId) -> VertexId {
        let mut xs = x;
        while let Some(h) = self.header_of(xs) {
            if t.ancestor(h, head) {
                break;
            }
            xs = h;
        }
        xs
    }

    /// Updates the forest after `(x, y)` was inserted and the tree repaired.
    ///
    /// On [`Error::Irreducible`] the forest is left exactly as it was before
    /// the call; the caller decides what happens to the graph and the tree.
    pub fn on_insert_edge(
        &mut self,
        g: &Cfg,
        t: &DfstState,
        x: VertexId,
        y: VertexId,
        repair: &RepairReport,
    ) -> Result<UpdateCounters> {
        if self.irreducible {
            return Err(Error::Latched);
        }
        self.sync_vertex_count(g.vertex_count());
        self.begin();
        match self.insert_with_replay(g, t, x, y, repair) {
            Ok(()) => Ok(self.finish(repair)),
            Err(e) => {
                self.rollback(repair);
                Err(e)
            }
        }
    }

    fn insert_with_replay(
        &mut self,
        g: &Cfg,
        t: &DfstState,
        x: VertexId,
        y: VertexId,
        repair: &RepairReport,
    ) -> Result<()> {
        if !t.is_attached(x) {
            return Ok(());
        }
        self.insert_case(g, t, x, y)
            .map_err(|_| Error::Irreducible(x, y))?;
        if repair.delta.is_empty() {
            return Ok(());
        }
        // Edges whose classification may have changed with the tree, or that
        // just became reachable.
        let delta: HashSet<VertexId> = repair.delta.iter().copied().collect();
        let mut edges: Vec<(VertexId, VertexId)> = Vec::new();
        for &d in &repair.delta {
            if !t.is_attached(d) {
                continue;
            }
            edges.extend(g.successors(d).iter().map(|&s| (d, s)));
            edges.extend(
                g.predecessors(d)
                    .iter()
                    .filter(|p| !delta.contains(p))
                    .map(|&p| (p, d)),
            );
        }
        edges.retain(|&(a, b)| t.is_attached(a) && t.is_attached(b));
        edges.sort_by_key(|&(a, b)| (t.pre(a), t.pre(b)));
        edges.dedup();
        for (a, b) in edges {
            self.insert_case(g, t, a, b)
                .map_err(|_| Error::Irreducible(x, y))?;
        }
        Ok(())
    }

    /// Case analysis for one inserted (or replayed) edge.
    fn insert_case(&mut self, g: &Cfg, t: &DfstState, x: VertexId, y: VertexId) -> Result<()> {
        if x == y {
            if self.type_of(x) == LoopType::NonHeader {
                self.set_type(x, LoopType::SelfLoop);
            }
            return Ok(());
        }
        if !t.is_attached(x) || !t.is_attached(y) {
            return Ok(());
        }
        let class = t.class_of(x, y, false);
        let lhy = self.header_of(y);
        let forward_or_cross = matches!(class, EdgeClass::Forward | EdgeClass::Cross);
        if forward_or_cross {
            match lhy {
                None => return Ok(()),
                Some(l) if !t.ancestor(l, x) => return Err(Error::Irreducible(x, y)),
                Some(_) => {}
            }
        }
        let (h, seeds) = if class == EdgeClass::Back {
            let rep = self.find_loop_head(t, x, y);
            if self.header_of(rep) == Some(y) {
                return Ok(());
            }
            (y, vec![rep])
        } else if let Some(l) = lhy {
            let rep = self.find_loop_head(t, x, l);
            if rep == l || self.header_of(rep) == Some(l) {
                return Ok(());
            }
            (l, vec![rep])
        } else {
            // Tree edge into a vertex outside every loop: look for back edges
            // into x and its ancestors that no loop has claimed yet.
            let top = t.nca_unchecked(x, y);
            let mut h = x;
            loop {
                let mut seeds = Vec::new();
                for &z in g.predecessors(h) {
                    if t.is_back_edge(z, h) {
                        let rep = self.find_loop_head(t, z, h);
                        if rep != h && self.header_of(rep).is_none() {
                            seeds.push(rep);
                        }
                    }
                }
                if !seeds.is_empty() {
                    break (h, seeds);
                }
                if h == top {
                    return Ok(());
                }
                match t.parent(h) {
                    Some(p) => h = p,
                    None => return Ok(()),
                }
            }
        };
        self.grow_loop(g, t, x, y, h, seeds)
    }

    /// Adds everything that reaches `seeds` without passing `h` to `h`'s loop.
    fn grow_loop(
        &mut self,
        g: &Cfg,
        t: &DfstState,
        x: VertexId,
        y: VertexId,
        h: VertexId,
        seeds: Vec<VertexId>,
    ) -> Result<()> {
        if seeds.iter().any(|&s| !t.ancestor(h, s)) {
            return Err(Error::Irreducible(x, y));
        }
        if self.type_of(h) != LoopType::Reducible {
            self.set_type(h, LoopType::Reducible);
        }
        let mut queued: HashSet<VertexId> = HashSet::new();
        let mut worklist: VecDeque<VertexId> = VecDeque::new();
        for s in seeds {
            if s != h && queued.insert(s) {
                worklist.push_back(s);
            }
        }
        while let Some(v) = worklist.pop_front() {
            self.set_header(v, Some(h));
            for &w in g.predecessors(v) {
                if w == v || !t.is_attached(w) || t.is_back_edge(w, v) {
                    continue;
                }
                let wp = self.find_loop_head(t, w, h);
                if wp == h {
                    continue;
                }
                if !t.ancestor(h, wp) {
                    return Err(Error::Irreducible(x, y));
                }
                if self.header_of(wp) != Some(h) && queued.insert(wp) {
                    worklist.push_back(wp);
                }
            }
        }
        Ok(())
    }

    /// Updates the forest after one instance of `(x, y)` was deleted and the
    /// tree repaired. `was_tree` is the instance's tree status before removal.
    pub fn on_delete_edge(
        &mut self,
        g: &Cfg,
        t: &DfstState,
        x: VertexId,
        y: VertexId,
        was_tree: bool,
        repair: &RepairReport,
    ) -> Result<UpdateCounters> {
        if self.irreducible {
            return Err(Error::Latched);
        }
        self.begin();
        if x == y {
            if self.type_of(x) == LoopType::SelfLoop && !g.has_edge(x, x) {
                self.set_type(x, LoopType::NonHeader);
            }
            return Ok(self.finish(repair));
        }
        let start = self.locate_affected_header(t, x, y, was_tree);
        // Headers that held now-unreachable vertices may have lost every
        // back-edge source with them.
        let mut orphaned: Vec<VertexId> = Vec::new();
        let mut collected: HashSet<VertexId> = HashSet::new();
        for &d in &repair.detached {
            let mut h = self.header_of(d);
            while let Some(hh) = h {
                if t.is_attached(hh) && !collected.insert(hh) {
                    break;
                }
                if t.is_attached(hh) {
                    orphaned.push(hh);
                }
                h = self.header_of(hh);
            }
        }
        orphaned.sort_by_key(|&h| std::cmp::Reverse(t.depth(h)));
        for &d in &repair.detached {
            self.set_type(d, LoopType::NonHeader);
            self.set_header(d, None);
        }
        let force_up = !repair.detached.is_empty();
        let mut visited_levels = HashSet::new();
        if let Some((h, seed)) = start {
            self.shrink_from(g, t, h, vec![seed], force_up, &mut visited_levels);
        }
        for h in orphaned {
            if !visited_levels.contains(&h) && self.loop_type(h) == LoopType::Reducible {
                self.shrink_from(g, t, h, Vec::new(), true, &mut visited_levels);
            }
        }
        Ok(self.finish(repair))
    }

    /// The four-way search for the innermost loop whose body may shrink,
    /// together with the representative of `x` inside it. Runs before the
    /// assignments of detached vertices are cleared.
    fn locate_affected_header(
        &mut self,
        t: &DfstState,
        x: VertexId,
        y: VertexId,
        was_tree: bool,
    ) -> Option<(VertexId, VertexId)> {
        if !t.is_attached(x) {
            return None;
        }
        let class = t.is_attached(y).then(|| t.class_of(x, y, true));
        if !was_tree && class == Some(EdgeClass::Forward) {
            return None;
        }
        if class == Some(EdgeClass::BackCross) && self.header_of(y).is_none() {
            return None;
        }
        let lhx = self.header_of(x)?;
        if class == Some(EdgeClass::BackCross) {
            let mut h = self.header_of(y);
            while let Some(hh) = h {
                if t.ancestor(hh, x) {
                    break;
                }
                h = self.header_of(hh);
            }
            let h = h?;
            Some((h, self.find_loop_head(t, x, h)))
        } else if lhx == y {
            Some((y, x))
        } else if self.header_of(y) == Some(x) {
            Some((x, y))
        } else {
            let mut chain_x = vec![x];
            let mut s = lhx;
            chain_x.push(s);
            while let Some(next) = self.header_of(s) {
                chain_x.push(next);
                s = next;
            }
            let mut h = Some(y);
            while let Some(hh) = h {
                if chain_x.contains(&hh) {
                    break;
                }
                h = self.header_of(hh);
            }
            let h = h?;
            Some((h, self.find_loop_head(t, x, h)))
        }
    }

    /// Rebuilds loop membership bottom-up starting at `level`. At each level
    /// the surviving back-edge sources are re-flooded; direct members that
    /// can reach an at-risk vertex but were not re-flooded move up to the
    /// enclosing header, and become the at-risk set one level higher.
    fn shrink_from(
        &mut self,
        g: &Cfg,
        t: &DfstState,
        mut level: VertexId,
        seeds: Vec<VertexId>,
        force_up: bool,
        visited_levels: &mut HashSet<VertexId>,
    ) {
        let mut at_risk: Vec<VertexId> = seeds.into_iter().filter(|&s| t.is_attached(s)).collect();
        loop {
            visited_levels.insert(level);
            let mut sources: Vec<VertexId> = Vec::new();
            let reseed = !self.skip_reseeding;
            for &z in g.predecessors(level).iter().filter(|_| reseed) {
                if t.is_back_edge(z, level) {
                    let rep = self.find_loop_head(t, z, level);
                    if rep != level && self.header_of(rep) == Some(level) && !sources.contains(&rep)
                    {
                        sources.push(rep);
                    }
                }
            }
            let downgraded = sources.is_empty();
            if downgraded && self.type_of(level) == LoopType::Reducible {
                let ty = if g.has_edge(level, level) {
                    LoopType::SelfLoop
                } else {
                    LoopType::NonHeader
                };
                self.set_type(level, ty);
            }
            // When every at-risk vertex still reaches a source down the tree
            // nobody leaves this loop. Detachment can still cost an outer loop
            // its sources, so in that case keep climbing.
            let intact = !downgraded
                && at_risk
                    .iter()
                    .all(|&z| sources.iter().any(|&w| t.ancestor(z, w)));
            if intact && !force_up {
                break;
            }
            let evicted = if intact {
                Vec::new()
            } else {
                self.evict(g, t, level, &sources, &at_risk)
            };

            let parent = self.header_of(level);
            for &e in &evicted {
                self.set_header(e, parent);
            }
            if evicted.is_empty() && !force_up {
                break;
            }
            let Some(p) = parent else { break };
            at_risk = evicted;
            at_risk.push(level);
            level = p;
        }
    }
    /// Direct members of `level` that reach an at-risk vertex but no longer
    /// reach any of `sources` inside the loop.
    fn evict(
        &mut self,
        g: &Cfg,
        t: &DfstState,
        level: VertexId,
        sources: &[VertexId],
        at_risk: &[VertexId],
    ) -> Vec<VertexId> {
        let mut marked: HashSet<VertexId> = sources.iter().copied().collect();
        let mut worklist: VecDeque<VertexId> = sources.iter().copied().collect();
        while let Some(v) = worklist.pop_front() {
            for &w in g.predecessors(v) {
                if w == v || !t.is_attached(w) || t.is_back_edge(w, v) {
                    continue;
                }
                let wp = self.find_loop_head(t, w, level);
                if wp == level || self.header_of(wp) != Some(level) {
                    continue;
                }
                if marked.insert(wp) {
                    worklist.push_back(wp);
                }
            }
        }

        let mut evicted: Vec<VertexId> = Vec::new();
        let mut seen: HashSet<VertexId> = HashSet::new();
        let mut stack: Vec<VertexId> = Vec::new();
        for &z in at_risk {
            if !marked.contains(&z) && self.header_of(z) == Some(level) && seen.insert(z) {
                stack.push(z);
            }
        }
        while let Some(v) = stack.pop() {
            evicted.push(v);
            for &w in g.predecessors(v) {
                if w == v || !t.is_attached(w) || t.is_back_edge(w, v) {
                    continue;
                }
                let wp = self.find_loop_head(t, w, level);
                if wp == level || marked.contains(&wp) || self.header_of(wp) != Some(level) {
                    continue;
                }
                if seen.insert(wp) {
                    stack.push(wp);
                }
            }
        }
        evicted
    }
}
