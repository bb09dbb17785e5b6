//! Line-oriented STNU text format.
//!
//! ```text
//! # comment
//! node <id> <origin|task_start|task_finish|job_finish|event> [reference]
//! req <from> <to> <weight>          # t(to) - t(from) <= weight
//! cont <activation> <contingent> <lower> <upper>
//! ```
//!
//! Nodes must be listed in id order before any edge that uses them.

use super::{NodeKind, Stnu, StnuError};
use std::fmt::Write;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error(transparent)]
    Invalid(#[from] StnuError),
}

fn kind_name(k: NodeKind) -> &'static str {
    match k {
        NodeKind::Origin => "origin",
        NodeKind::TaskStart => "task_start",
        NodeKind::TaskFinish => "task_finish",
        NodeKind::JobFinish => "job_finish",
        NodeKind::Event => "event",
    }
}

pub fn write_stnu(g: &Stnu) -> String {
    let mut out = String::new();
    for n in &g.nodes {
        match n.reference {
            Some(r) => writeln!(out, "node {} {} {}", n.id, kind_name(n.kind), r),
            None => writeln!(out, "node {} {}", n.id, kind_name(n.kind)),
        }
        .unwrap();
    }
    for e in &g.requirements {
        writeln!(out, "req {} {} {}", e.from, e.to, e.weight).unwrap();
    }
    for c in &g.contingents {
        writeln!(out, "cont {} {} {} {}", c.activation, c.contingent, c.lower, c.upper).unwrap();
    }
    out
}

pub fn parse_stnu(text: &str) -> Result<Stnu, FormatError> {
    let mut g = Stnu::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let err = |reason: String| FormatError::Syntax { line, reason };
        let int = |k: usize| -> Result<i64, FormatError> {
            let tok = toks.get(k).ok_or_else(|| err(format!("missing field {k}")))?;
            tok.parse::<i64>().map_err(|_| err(format!("{tok:?} is not an integer")))
        };
        let node = |k: usize| -> Result<usize, FormatError> {
            let v = int(k)?;
            usize::try_from(v).map_err(|_| err(format!("negative node id {v}")))
        };
        let arity = |n: usize| -> Result<(), FormatError> {
            if toks.len() != n {
                return Err(err(format!("{} expects {} fields, found {}", toks[0], n - 1, toks.len() - 1)));
            }
            Ok(())
        };
        match toks[0] {
            "node" => {
                if toks.len() != 3 && toks.len() != 4 {
                    return Err(err("node expects 2 or 3 fields".into()));
                }
                let id = node(1)?;
                if id != g.nodes.len() {
                    return Err(err(format!("node {id} listed out of order")));
                }
                let kind = match toks[2] {
                    "origin" => NodeKind::Origin,
                    "task_start" => NodeKind::TaskStart,
                    "task_finish" => NodeKind::TaskFinish,
                    "job_finish" => NodeKind::JobFinish,
                    "event" => NodeKind::Event,
                    other => return Err(err(format!("unknown node kind {other:?}"))),
                };
                let reference = if toks.len() == 4 { Some(node(3)?) } else { None };
                g.add_node(kind, reference);
            }
            "req" => {
                arity(4)?;
                g.add_requirement(node(1)?, node(2)?, int(3)?);
            }
            "cont" => {
                arity(5)?;
                g.add_contingent(node(1)?, node(2)?, int(3)?, int(4)?);
            }
            other => return Err(err(format!("unknown record {other:?}"))),
        }
    }
    g.validate()?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_small() {
        let mut g = Stnu::new();
        let o = g.add_node(NodeKind::Origin, None);
        let a = g.add_node(NodeKind::TaskStart, Some(0));
        let c = g.add_node(NodeKind::TaskFinish, Some(0));
        g.add_contingent(a, c, 2, 5);
        g.add_requirement(o, c, 8);
        g.add_requirement(a, o, 0);
        let text = write_stnu(&g);
        assert_eq!(parse_stnu(&text).unwrap(), g);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(parse_stnu("node 0 origin\nreq 0 1 3\n"), Err(FormatError::Invalid(StnuError::UnknownNode(1)))));
        assert!(matches!(parse_stnu("node 1 origin\n"), Err(FormatError::Syntax { line: 1, .. })));
        assert!(matches!(parse_stnu("node 0 origin\nnode 1 event\ncont 0 1 0 3\n"), Err(FormatError::Invalid(_))));
    }
}
