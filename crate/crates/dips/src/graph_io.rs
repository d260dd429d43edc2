//! Edge-list graph files.
//!
//! Each graph is a header line `n m seed p` followed by `m` lines `u v`
//! (0-indexed, `u < v`). A file may hold several graphs back to back, one per
//! problem epoch in order.

use std::fs;
use std::io::Write;
use std::path::Path;

use dips_core::{gen_random_graph, Graph};
use thiserror::Error;

use crate::records::format_g17;

#[derive(Debug, Error)]
pub enum GraphFileError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("graph {index}: edges do not match regeneration from seed {seed}, p = {p}")]
    RegenerationMismatch { index: usize, seed: u64, p: f64 },
}

pub fn write_graph<W: Write>(graph: &Graph, out: &mut W) -> std::io::Result<()> {
    writeln!(
        out,
        "{} {} {} {}",
        graph.n(),
        graph.edge_count(),
        graph.seed(),
        format_g17(graph.edge_prob())
    )?;
    for (u, v) in graph.edges() {
        writeln!(out, "{u} {v}")?;
    }
    Ok(())
}

pub fn write_graphs(graphs: &[Graph], path: &Path) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for g in graphs {
        write_graph(g, &mut out)?;
    }
    out.flush()
}

fn malformed(line: usize, message: impl Into<String>) -> GraphFileError {
    GraphFileError::Malformed {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(token: Option<&str>, line: usize, what: &str) -> Result<T, GraphFileError> {
    token
        .ok_or_else(|| malformed(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| malformed(line, format!("bad {what}")))
}

/// Parses every graph in `text`. Graphs whose header carries a generator
/// probability in (0, 1) must match regeneration from their seed exactly.
pub fn parse_graphs(text: &str) -> Result<Vec<Graph>, GraphFileError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut graphs = Vec::new();
    while let Some((line, header)) = lines.next() {
        let mut tokens = header.split_whitespace();
        let n: usize = field(tokens.next(), line, "vertex count")?;
        let m: usize = field(tokens.next(), line, "edge count")?;
        let seed: u64 = field(tokens.next(), line, "seed")?;
        let p: f64 = field(tokens.next(), line, "edge probability")?;
        if tokens.next().is_some() {
            return Err(malformed(line, "header has extra fields"));
        }
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let (line, text) = lines.next().ok_or_else(|| malformed(line, "missing edge lines"))?;
            let mut tokens = text.split_whitespace();
            let u: usize = field(tokens.next(), line, "edge endpoint")?;
            let v: usize = field(tokens.next(), line, "edge endpoint")?;
            if tokens.next().is_some() {
                return Err(malformed(line, "edge line has extra fields"));
            }
            edges.push((u, v));
        }
        let graph = Graph::with_origin(n, &edges, seed, p).map_err(|e| malformed(line, e.to_string()))?;
        if graph.edge_count() != m {
            return Err(malformed(line, "duplicate edges"));
        }
        if p > 0.0 && p < 1.0 {
            let regenerated = gen_random_graph(n, p, seed).map_err(|e| malformed(line, e.to_string()))?;
            if regenerated.fingerprint() != graph.fingerprint() {
                return Err(GraphFileError::RegenerationMismatch {
                    index: graphs.len(),
                    seed,
                    p,
                });
            }
        }
        graphs.push(graph);
    }
    Ok(graphs)
}

pub fn read_graphs(path: &Path) -> Result<Vec<Graph>, GraphFileError> {
    parse_graphs(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_several_graphs() {
        let graphs = vec![
            gen_random_graph(12, 0.4, 3).unwrap(),
            gen_random_graph(1, 0.5, 4).unwrap(),
            Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap(),
        ];
        let mut buf = Vec::new();
        for g in &graphs {
            write_graph(g, &mut buf).unwrap();
        }
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(&format!("12 {} 3 0.40000000000000002\n", graphs[0].edge_count())));
        assert_eq!(parse_graphs(&text).unwrap(), graphs);
    }

    #[test]
    fn tampered_random_graph_is_detected() {
        let g = gen_random_graph(8, 0.5, 1).unwrap();
        let mut buf = Vec::new();
        write_graph(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // Drop the last edge and fix the count.
        let mut lines: Vec<&str> = text.lines().collect();
        lines.pop();
        let header = format!("8 {} 1 0.5", g.edge_count() - 1);
        lines[0] = &header;
        let err = parse_graphs(&lines.join("\n")).unwrap_err();
        assert!(matches!(err, GraphFileError::RegenerationMismatch { index: 0, .. }));
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(
            parse_graphs("3 1 0 0\n0\n"),
            Err(GraphFileError::Malformed { line: 2, .. })
        ));
        assert!(matches!(
            parse_graphs("3 2 0 0\n0 1\n"),
            Err(GraphFileError::Malformed { .. })
        ));
        assert!(matches!(
            parse_graphs("3 1 0 0\n1 1\n"),
            Err(GraphFileError::Malformed { .. })
        ));
        assert!(matches!(
            parse_graphs("x 1 0 0\n"),
            Err(GraphFileError::Malformed { line: 1, .. })
        ));
    }
}
