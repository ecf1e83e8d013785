use thiserror::Error;

use crate::graph::VertexId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),

    #[error("edge ({0}, {1}) is not present")]
    EdgeAbsent(VertexId, VertexId),

    #[error("vertex {0} is not reachable from the root")]
    Detached(VertexId),

    /// The update would give a loop region a second entry.
    #[error("irreducible: inserting ({0}, {1}) creates a multi-entry loop")]
    Irreducible(VertexId, VertexId),

    /// Raised by the static oracle when a flood escapes its header's subtree.
    #[error("graph is irreducible")]
    IrreducibleGraph,

    #[error("vertex {0} is not a reducible loop header")]
    NotAHeader(VertexId),

    #[error("loop forest is latched irreducible; reset before querying")]
    Latched,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}
