//! Text format for scripted removals.
//!
//! ```text
//! # edge 0 is cut for two rounds
//! edge 0 absent 3..4
//! edge 2 absent 10..10
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::ring::EdgeId;

use super::RemovalMask;

pub fn parse_script(text: &str) -> Result<RemovalMask> {
    let mut mask = RemovalMask::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Script {
            line: line_no,
            msg: msg.to_string(),
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let [kw_edge, edge, kw_absent, range] = tokens[..] else {
            return Err(err("expected `edge <id> absent <start>..<end>`"));
        };
        if kw_edge != "edge" || kw_absent != "absent" {
            return Err(err("expected `edge <id> absent <start>..<end>`"));
        }
        let edge: usize = edge.parse().map_err(|_| err("edge id is not an integer"))?;
        let (start, end) = range
            .split_once("..")
            .ok_or_else(|| err("range must be `<start>..<end>`"))?;
        let start: u64 = start
            .parse()
            .map_err(|_| err("range start is not an integer"))?;
        let end: u64 = end
            .parse()
            .map_err(|_| err("range end is not an integer"))?;
        if end < start {
            return Err(err("range end precedes its start"));
        }
        mask.push(EdgeId(edge), start..=end);
    }
    Ok(mask)
}

pub fn write_script(mask: &RemovalMask) -> String {
    let mut out = String::new();
    for (e, rounds) in mask.entries() {
        let _ = writeln!(
            out,
            "edge {} absent {}..{}",
            e.0,
            rounds.start(),
            rounds.end()
        );
    }
    out
}
