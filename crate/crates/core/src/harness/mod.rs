//! Stream replay, fuzzing and reporting.

pub mod fuzz;
pub mod report;
pub mod run;
pub mod stream;

pub use fuzz::{check_stream, fuzz, Check, FuzzConfig, FuzzSummary};
pub use report::{EventRow, RunReport};
pub use run::{run_stream, FinalState, Mode};
pub use stream::{format_stream, parse_stream, Stream};
