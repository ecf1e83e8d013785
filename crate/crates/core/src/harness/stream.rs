//! Text format for update streams.
//!
//! ```text
//! # comment
//! n 4
//! root 0
//! + 0 1
//! - 0 1
//! ```
//!
//! `n` and `root` come first; `root` defaults to 0. Deletions must name an
//! edge that is present at that point of the stream.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{EventKind, UpdateEvent, VertexId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stream {
    pub n: usize,
    pub root: VertexId,
    pub events: Vec<UpdateEvent>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_num(line: usize, tok: Option<&str>, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("bad {what} `{tok}`")))
}

pub fn parse_stream(text: &str) -> Result<Stream> {
    let mut n: Option<usize> = None;
    let mut root: Option<usize> = None;
    let mut events = Vec::new();
    let mut live: HashMap<(usize, usize), usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let head = toks.next().expect("non-empty line");
        match head {
            "n" => {
                if n.is_some() {
                    return Err(parse_err(line, "duplicate `n`"));
                }
                if !events.is_empty() {
                    return Err(parse_err(line, "`n` after events"));
                }
                let count = parse_num(line, toks.next(), "vertex count")?;
                if count == 0 {
                    return Err(parse_err(line, "vertex count must be positive"));
                }
                n = Some(count);
            }
            "root" => {
                if root.is_some() {
                    return Err(parse_err(line, "duplicate `root`"));
                }
                if !events.is_empty() {
                    return Err(parse_err(line, "`root` after events"));
                }
                root = Some(parse_num(line, toks.next(), "root")?);
            }
            "+" | "-" => {
                let count = n.ok_or_else(|| parse_err(line, "event before `n`"))?;
                let u = parse_num(line, toks.next(), "source")?;
                let v = parse_num(line, toks.next(), "target")?;
                for w in [u, v] {
                    if w >= count {
                        return Err(parse_err(line, format!("vertex {w} out of range")));
                    }
                }
                let kind = if head == "+" {
                    *live.entry((u, v)).or_insert(0) += 1;
                    EventKind::Insert
                } else {
                    match live.get_mut(&(u, v)) {
                        Some(c) if *c > 0 => *c -= 1,
                        _ => {
                            return Err(parse_err(line, format!("deleting absent edge ({u}, {v})")))
                        }
                    }
                    EventKind::Delete
                };
                events.push(UpdateEvent {
                    kind,
                    src: VertexId::new(u),
                    dst: VertexId::new(v),
                    seq: events.len(),
                });
            }
            other => return Err(parse_err(line, format!("unknown directive `{other}`"))),
        }
        if let Some(extra) = toks.next() {
            return Err(parse_err(line, format!("trailing token `{extra}`")));
        }
    }
    let n = n.ok_or_else(|| parse_err(0, "missing `n`"))?;
    let root = root.unwrap_or(0);
    if root >= n {
        return Err(parse_err(0, format!("root {root} out of range")));
    }
    Ok(Stream {
        n,
        root: VertexId::new(root),
        events,
    })
}

/// Inverse of [`parse_stream`], without comments.
pub fn format_stream(stream: &Stream) -> String {
    let mut out = String::new();
    writeln!(out, "n {}", stream.n).unwrap();
    writeln!(out, "root {}", stream.root).unwrap();
    for e in &stream.events {
        writeln!(out, "{} {} {}", e.kind, e.src, e.dst).unwrap();
    }
    out
}
