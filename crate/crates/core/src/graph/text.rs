//! Line-oriented graph format.
//!
//! ```text
//! # comment
//! v 0
//! v 1
//! e 0 1 xy:1
//! boundary 0
//! ```
//!
//! Vertex ids must be `0..n` (each declared once, any order). Edges keep the
//! file order, which fixes edge ids and orientation.

use super::{Edge, FiniteGraph};
use crate::error::{Error, Result};
use std::fmt::Write;

impl FiniteGraph {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in 0..self.n_vertices {
            let _ = writeln!(out, "v {v}");
        }
        for e in &self.edges {
            let _ = writeln!(out, "e {} {} {}", e.tail, e.head, e.potential);
        }
        let _ = writeln!(out, "boundary {}", self.boundary);
        out
    }

    pub fn from_text(src: &str) -> Result<FiniteGraph> {
        let mut declared: Vec<bool> = Vec::new();
        let mut edges = Vec::new();
        let mut boundary = None;
        for (i, raw) in src.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line, msg };
            let fields: Vec<&str> = content.split_whitespace().collect();
            let parse_id = |s: &str| -> Result<usize> {
                s.parse::<usize>()
                    .map_err(|_| err(format!("expected a vertex id, found `{s}`")))
            };
            match fields.as_slice() {
                ["v", id] => {
                    let id = parse_id(id)?;
                    if declared.len() <= id {
                        declared.resize(id + 1, false);
                    }
                    if declared[id] {
                        return Err(err(format!("vertex {id} declared twice")));
                    }
                    declared[id] = true;
                }
                ["e", t, h, pot] => edges.push(Edge::new(parse_id(t)?, parse_id(h)?, *pot)),
                ["boundary", id] => {
                    if boundary.replace(parse_id(id)?).is_some() {
                        return Err(err("boundary declared twice".into()));
                    }
                }
                _ => return Err(err(format!("unrecognised line `{content}`"))),
            }
        }
        if let Some(v) = declared.iter().position(|d| !d) {
            return Err(Error::Parse {
                line: 0,
                msg: format!("vertex ids must be dense: {v} is missing"),
            });
        }
        let boundary = boundary.ok_or(Error::Parse {
            line: 0,
            msg: "missing `boundary` line".into(),
        })?;
        FiniteGraph::new(declared.len(), edges, boundary)
    }
}

#[cfg(test)]
mod tests {
    use super::super::build_torus;
    use super::*;

    #[test]
    fn round_trip() {
        let g = build_torus(3, "ivgff:0.5").unwrap();
        let text = g.to_text();
        let back = FiniteGraph::from_text(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn comments_and_errors() {
        let g = FiniteGraph::from_text("# tiny\nv 1\nv 0 # second\ne 0 1 xy:1\nboundary 1\n").unwrap();
        assert_eq!(g.boundary(), 1);
        assert!(FiniteGraph::from_text("v 0\nv 2\nboundary 0\n").is_err());
        assert!(FiniteGraph::from_text("v 0\n").is_err());
        let e = FiniteGraph::from_text("v 0\nq 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }
}
