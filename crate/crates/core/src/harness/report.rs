use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::dfst::EdgeClass;
use crate::engine::Outcome;
use crate::graph::{EventKind, VertexId};

/// One processed event.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventRow {
    pub seq: usize,
    pub kind: EventKind,
    pub src: VertexId,
    pub dst: VertexId,
    pub class: Option<EdgeClass>,
    pub k: usize,
    pub delta: usize,
    /// Vertices visited for this event: `k + delta` when maintaining,
    /// search plus forest visits when recomputing.
    pub work: usize,
    pub outcome: Outcome,
}

/// First disagreement found in differential mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub seq: usize,
    pub maintained: String,
    pub recomputed: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunReport {
    pub mode: String,
    pub policy: String,
    pub rows: Vec<EventRow>,
    pub digest: String,
    pub mismatch: Option<Mismatch>,
}

impl RunReport {
    pub fn total_k(&self) -> usize {
        self.rows.iter().map(|r| r.k).sum()
    }

    pub fn total_delta(&self) -> usize {
        self.rows.iter().map(|r| r.delta).sum()
    }

    pub fn total_work(&self) -> usize {
        self.rows.iter().map(|r| r.work).sum()
    }

    pub fn max_k(&self) -> usize {
        self.rows.iter().map(|r| r.k).max().unwrap_or(0)
    }

    pub fn max_delta(&self) -> usize {
        self.rows.iter().map(|r| r.delta).max().unwrap_or(0)
    }

    pub fn count(&self, outcome: Outcome) -> usize {
        self.rows.iter().filter(|r| r.outcome == outcome).count()
    }

    /// Fixed-width table, then `key=value` lines.
    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{:>6} {:>4} {:>13} {:>13} {:>8} {:>8} {:>8}  outcome",
            "seq", "kind", "edge", "class", "k", "delta", "work"
        )
        .unwrap();
        for r in &self.rows {
            let edge = format!("{}->{}", r.src, r.dst);
            let class = r.class.map_or("-", EdgeClass::as_str);
            writeln!(
                out,
                "{:>6} {:>4} {:>13} {:>13} {:>8} {:>8} {:>8}  {}",
                r.seq,
                r.kind.to_string(),
                edge,
                class,
                r.k,
                r.delta,
                r.work,
                r.outcome.as_str()
            )
            .unwrap();
        }
        writeln!(out).unwrap();
        let pairs: [(&str, String); 12] = [
            ("mode", self.mode.clone()),
            ("policy", self.policy.clone()),
            ("events", self.rows.len().to_string()),
            (
                "rejected",
                self.count(Outcome::IrreducibleRejected).to_string(),
            ),
            (
                "latched",
                self.count(Outcome::IrreducibleLatched).to_string(),
            ),
            ("total_k", self.total_k().to_string()),
            ("total_delta", self.total_delta().to_string()),
            ("total_work", self.total_work().to_string()),
            ("max_k", self.max_k().to_string()),
            ("max_delta", self.max_delta().to_string()),
            (
                "mismatch",
                self.mismatch
                    .as_ref()
                    .map_or("none".into(), |m| m.seq.to_string()),
            ),
            ("digest", self.digest.clone()),
        ];
        for (key, value) in pairs {
            writeln!(out, "{key}={value}").unwrap();
        }
        out
    }
}

/// Hex SHA-256 of a state dump.
pub fn digest(dump: &str) -> String {
    Sha256::digest(dump.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_sha256() {
        assert_eq!(
            digest(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
