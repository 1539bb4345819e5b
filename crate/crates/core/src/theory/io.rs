//! Plain-text graph and cluster files.
//!
//! Edge lists hold one `i j w` triple per line and cluster files one `i c`
//! pair per line, 0-indexed. Blank lines and lines starting with `#` are
//! skipped.

use super::WeightMatrix;
use crate::error::{Error, Result};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(k, line)| {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            None
        } else {
            Some((k + 1, line.split_whitespace().collect()))
        }
    })
}

fn field<T: std::str::FromStr>(what: &'static str, line: usize, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::param(what, format!("line {line}: cannot parse {raw:?}")))
}

/// Parses an edge list. The matrix has `n` units, or one more than the
/// largest index when `n` is `None`. Repeated `(i, j)` pairs are an error.
pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<WeightMatrix> {
    let mut edges = Vec::new();
    for (line, fields) in content_lines(text) {
        if fields.len() != 3 {
            return Err(Error::param(
                "graph",
                format!("line {line}: expected `i j w`, found {} fields", fields.len()),
            ));
        }
        let i: usize = field("graph", line, fields[0])?;
        let j: usize = field("graph", line, fields[1])?;
        let w: f64 = field("graph", line, fields[2])?;
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::param("graph", format!("line {line}: weight {w} is not finite and >= 0")));
        }
        edges.push((line, i, j, w));
    }
    let size = match n {
        Some(n) => n,
        None => edges.iter().map(|e| e.1.max(e.2) + 1).max().unwrap_or(0),
    };
    let mut matrix = WeightMatrix::zeros(size);
    let mut seen = vec![false; size * size];
    for (line, i, j, w) in edges {
        if i >= size || j >= size {
            return Err(Error::param("graph", format!("line {line}: unit out of range for {size} units")));
        }
        if std::mem::replace(&mut seen[i * size + j], true) {
            return Err(Error::param("graph", format!("line {line}: repeated edge ({i}, {j})")));
        }
        matrix.set(i, j, w);
    }
    Ok(matrix)
}

/// Parses a cluster file covering exactly the units `0..n`.
pub fn parse_clusters(text: &str, n: usize) -> Result<Vec<usize>> {
    let mut labels: Vec<Option<usize>> = vec![None; n];
    for (line, fields) in content_lines(text) {
        if fields.len() != 2 {
            return Err(Error::param(
                "clusters",
                format!("line {line}: expected `i c`, found {} fields", fields.len()),
            ));
        }
        let i: usize = field("clusters", line, fields[0])?;
        let c: usize = field("clusters", line, fields[1])?;
        let slot = labels
            .get_mut(i)
            .ok_or_else(|| Error::param("clusters", format!("line {line}: unit {i} out of range for {n} units")))?;
        if slot.replace(c).is_some() {
            return Err(Error::param("clusters", format!("line {line}: unit {i} listed twice")));
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, c)| c.ok_or_else(|| Error::param("clusters", format!("unit {i} has no cluster"))))
        .collect()
}

/// Writes a matrix as an edge list of its nonzero entries.
pub fn format_edge_list(weights: &WeightMatrix) -> String {
    let mut out = String::new();
    for i in 0..weights.len() {
        for j in 0..weights.len() {
            let w = weights.get(i, j);
            if w != 0.0 {
                out.push_str(&format!("{i} {j} {w:e}\n"));
            }
        }
    }
    out
}
