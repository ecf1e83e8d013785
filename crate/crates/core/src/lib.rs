//! Loop nesting forests of reducible control-flow graphs, kept up to date
//! while edges are inserted and deleted.
//!
//! The pieces stack up in the order an update flows through them:
//!
//! * [`graph`]: a rooted multigraph with edge multiplicities.
//! * [`dfst`]: a depth-first spanning tree with interval timestamps,
//!   repaired locally after each update.
//! * [`lnf`]: the loop forest as per-vertex loop types and innermost
//!   headers, updated by local searches over the affected region.
//! * [`engine`]: wires the three together and decides what happens to an
//!   insertion that would make the graph irreducible.
//! * [`dominance`]: dominance queries served from the forest, with a cached
//!   dominator tree as fallback.
//! * [`oracle`]: offline reference algorithms used to check all of the above.
//! * [`harness`]: stream replay, fuzzing and reports.
//!
//! ```
//! use dynloop::{DynamicLoopForest, IrreduciblePolicy, LoopType, VertexId};
//!
//! let v = VertexId::new;
//! let mut f = DynamicLoopForest::new(3, v(0), IrreduciblePolicy::Reject)?;
//! f.insert_edge(v(0), v(1))?;
//! f.insert_edge(v(1), v(2))?;
//! f.insert_edge(v(2), v(1))?;
//! assert_eq!(f.loop_type(v(1))?, LoopType::Reducible);
//! assert_eq!(f.loop_header(v(2))?, Some(v(1)));
//! # Ok::<(), dynloop::Error>(())
//! ```

pub mod dfst;
pub mod dominance;
pub mod engine;
pub mod error;
pub mod graph;
pub mod harness;
pub mod lnf;
pub mod oracle;

pub use dfst::{DfstState, EdgeClass, RepairReport};
pub use dominance::{DomQueryResult, DominanceIndex, QuerySource};
pub use engine::{DynamicLoopForest, IrreduciblePolicy, Outcome, UpdateReport};
pub use error::{Error, Result};
pub use graph::{Cfg, EventKind, UpdateEvent, VertexId};
pub use lnf::{LnfState, Loop, LoopType, UpdateCounters};
