//! Plain-text file formats.
//!
//! Hypergraph (`.hg`), 1-based vertex indices:
//!
//! ```text
//! n m
//! e <weight> : <tail indices> | <head indices>
//! ```
//!
//! An empty head list marks an undirected hyperedge. Arc lists use `n m`
//! followed by `m` lines `u w`. Labels are `n` lines `vertex class`, features
//! are `n` lines of decimals, and splits are three lines of vertex lists
//! (train, validation, test). Every vertex index in these files is 1-based.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hypergraph::{DirectedGraph, DirectedHypergraph, Hyperedge};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse `{tok}`")))
}

fn parse_vertex(tok: &str, n: usize, line: usize) -> Result<usize> {
    let v: usize = parse_num(tok, line)?;
    if v == 0 || v > n {
        return Err(parse_err(line, format!("vertex {v} outside 1..={n}")));
    }
    Ok(v - 1)
}

pub fn parse_hypergraph(text: &str) -> Result<DirectedHypergraph> {
    let mut lines = records(text);
    let (ln, head) = lines.next().ok_or_else(|| parse_err(1, "missing `n m` header"))?;
    let toks: Vec<&str> = head.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(parse_err(ln, "header must be `n m`"));
    }
    let n: usize = parse_num(toks[0], ln)?;
    let m: usize = parse_num(toks[1], ln)?;

    let mut edges = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for (ln, line) in lines {
        let rest = line
            .strip_prefix('e')
            .filter(|r| r.starts_with(char::is_whitespace))
            .ok_or_else(|| parse_err(ln, "hyperedge lines start with `e`"))?;
        let (w, sets) = rest
            .split_once(':')
            .ok_or_else(|| parse_err(ln, "missing `:` after weight"))?;
        let (tail, head) = sets
            .split_once('|')
            .ok_or_else(|| parse_err(ln, "missing `|` between tail and head"))?;
        let weight: f64 = parse_num(w.trim(), ln)?;
        let tail = tail
            .split_whitespace()
            .map(|t| parse_vertex(t, n, ln))
            .collect::<Result<Vec<_>>>()?;
        let head = head
            .split_whitespace()
            .map(|t| parse_vertex(t, n, ln))
            .collect::<Result<Vec<_>>>()?;
        edges.push(Hyperedge::new(tail, head));
        weights.push(weight);
    }
    if edges.len() != m {
        return Err(parse_err(
            ln,
            format!("header declares {m} hyperedges, found {}", edges.len()),
        ));
    }
    DirectedHypergraph::with_weights(n, edges, weights)
}

pub fn format_hypergraph(h: &DirectedHypergraph) -> String {
    let mut s = format!("{} {}\n", h.num_vertices(), h.num_edges());
    for (e, w) in h.edges().iter().zip(h.weights()) {
        let _ = write!(s, "e {w} :");
        for v in e.tail() {
            let _ = write!(s, " {}", v + 1);
        }
        s.push_str(" |");
        for v in e.head() {
            let _ = write!(s, " {}", v + 1);
        }
        s.push('\n');
    }
    s
}

pub fn read_hypergraph(path: impl AsRef<Path>) -> Result<DirectedHypergraph> {
    parse_hypergraph(&fs::read_to_string(path)?)
}

pub fn write_hypergraph(h: &DirectedHypergraph, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_hypergraph(h))?;
    Ok(())
}

pub fn parse_arcs(text: &str) -> Result<DirectedGraph> {
    let mut lines = records(text);
    let (ln, head) = lines.next().ok_or_else(|| parse_err(1, "missing `n m` header"))?;
    let toks: Vec<&str> = head.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(parse_err(ln, "header must be `n m`"));
    }
    let n: usize = parse_num(toks[0], ln)?;
    let m: usize = parse_num(toks[1], ln)?;
    let mut arcs = Vec::with_capacity(m);
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(ln, "arc lines must be `u w`"));
        }
        let u = parse_vertex(toks[0], n, ln)?;
        let w = parse_vertex(toks[1], n, ln)?;
        if u == w {
            return Err(parse_err(ln, "self-loops are not allowed"));
        }
        arcs.push((u, w));
    }
    if arcs.len() != m {
        return Err(parse_err(
            ln,
            format!("header declares {m} arcs, found {}", arcs.len()),
        ));
    }
    DirectedGraph::new(n, arcs)
}

pub fn format_arcs(g: &DirectedGraph) -> String {
    let mut s = format!("{} {}\n", g.num_vertices(), g.arcs().len());
    for &(u, w) in g.arcs() {
        let _ = writeln!(s, "{} {}", u + 1, w + 1);
    }
    s
}

pub fn read_arcs(path: impl AsRef<Path>) -> Result<DirectedGraph> {
    parse_arcs(&fs::read_to_string(path)?)
}

/// Labels in vertex order. Every vertex must appear exactly once.
pub fn parse_labels(text: &str, n: usize) -> Result<Vec<usize>> {
    let mut labels = vec![None; n];
    for (ln, line) in records(text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(ln, "label lines must be `vertex class`"));
        }
        let v = parse_vertex(toks[0], n, ln)?;
        let c: usize = parse_num(toks[1], ln)?;
        if labels[v].replace(c).is_some() {
            return Err(parse_err(ln, format!("vertex {} labelled twice", v + 1)));
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(v, c)| c.ok_or_else(|| parse_err(0, format!("vertex {} has no label", v + 1))))
        .collect()
}

pub fn format_labels(labels: &[usize]) -> String {
    let mut s = String::new();
    for (v, c) in labels.iter().enumerate() {
        let _ = writeln!(s, "{} {c}", v + 1);
    }
    s
}

/// Row-major `n × f` feature matrix.
pub fn parse_features(text: &str, n: usize) -> Result<(Vec<f64>, usize)> {
    let mut data = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (ln, line) in records(text) {
        let row = line
            .split_whitespace()
            .map(|t| parse_num::<f64>(t, ln))
            .collect::<Result<Vec<_>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(parse_err(ln, format!("expected {w} values, found {}", row.len())))
            }
            _ => {}
        }
        data.extend(row);
        rows += 1;
    }
    if rows != n {
        return Err(parse_err(0, format!("expected {n} feature rows, found {rows}")));
    }
    Ok((data, width.unwrap_or(0)))
}

pub fn format_features(data: &[f64], width: usize) -> String {
    let mut s = String::new();
    if width == 0 {
        return s;
    }
    for row in data.chunks(width) {
        let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

/// Train, validation and test vertex lists (0-based after parsing).
pub fn parse_splits(text: &str, n: usize) -> Result<[Vec<usize>; 3]> {
    let mut out: [Vec<usize>; 3] = Default::default();
    let mut count = 0;
    for (i, line) in text.lines().enumerate() {
        if count == 3 {
            if line.trim().is_empty() {
                continue;
            }
            return Err(parse_err(i + 1, "splits files hold exactly three lines"));
        }
        out[count] = line
            .split_whitespace()
            .map(|t| parse_vertex(t, n, i + 1))
            .collect::<Result<_>>()?;
        count += 1;
    }
    if count != 3 {
        return Err(parse_err(count + 1, "expected train, validation and test lines"));
    }
    let mut seen = vec![false; n];
    for (i, set) in out.iter().enumerate() {
        for &v in set {
            if std::mem::replace(&mut seen[v], true) {
                return Err(parse_err(i + 1, format!("vertex {} listed twice", v + 1)));
            }
        }
    }
    Ok(out)
}

pub fn format_splits(splits: &[Vec<usize>; 3]) -> String {
    let mut s = String::new();
    for set in splits {
        let line: Vec<String> = set.iter().map(|v| (v + 1).to_string()).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

/// Writes a complex number as `re+imj` / `re-imj`.
pub fn format_complex(z: Complex64) -> String {
    if z.im.is_sign_negative() {
        format!("{}-{}j", z.re, -z.im)
    } else {
        format!("{}+{}j", z.re, z.im)
    }
}

pub fn parse_complex(tok: &str) -> Option<Complex64> {
    let body = tok.strip_suffix('j')?;
    // the separator is the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'))?;
    let re: f64 = body[..split].parse().ok()?;
    let im: f64 = body[split..].parse().ok()?;
    Some(Complex64::new(re, im))
}

/// Dense matrix dump: one row per line, entries separated by spaces.
pub fn format_dense(rows: usize, cols: usize, data: &[Complex64]) -> String {
    let mut s = String::new();
    for r in 0..rows {
        let line: Vec<String> = data[r * cols..(r + 1) * cols]
            .iter()
            .map(|&z| format_complex(z))
            .collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

/// Parses a dense dump into `(rows, cols, data)`.
pub fn parse_dense(text: &str) -> Result<(usize, usize, Vec<Complex64>)> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (ln, line) in records(text) {
        let row = line
            .split_whitespace()
            .map(|t| parse_complex(t).ok_or_else(|| parse_err(ln, format!("bad entry `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(parse_err(ln, format!("expected {c} entries, found {}", row.len())))
            }
            _ => {}
        }
        data.extend(row);
        rows += 1;
    }
    Ok((rows, cols.unwrap_or(0), data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_file() {
        let h = parse_hypergraph("4 2\ne 1 : 1 | 2 3 4\ne 1 : | 1 2\n").unwrap();
        assert_eq!(h.num_vertices(), 4);
        assert!(h.edges()[0].is_directed());
        assert_eq!(h.edges()[0].tail(), &[0]);
        assert_eq!(h.edges()[0].head(), &[1, 2, 3]);
        assert!(!h.edges()[1].is_directed());
        assert_eq!(h.edges()[1].tail(), &[0, 1]);
    }

    #[test]
    fn rejects_out_of_range_vertex() {
        let err = parse_hypergraph("4 1\ne 1 : 1 | 9\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn rejects_count_mismatch_and_garbage() {
        assert!(parse_hypergraph("4 2\ne 1 : 1 2 |\n").is_err());
        assert!(parse_hypergraph("4 1\nx 1 : 1 2 |\n").is_err());
        assert!(parse_hypergraph("4 1\ne 1 1 2 |\n").is_err());
        assert!(parse_hypergraph("4 1\ne 1 : 1 | 1\n").is_err());
    }

    #[test]
    fn overlapping_triples_round_trip() {
        let h = DirectedHypergraph::new(
            4,
            vec![Hyperedge::undirected(vec![0, 1, 2]), Hyperedge::undirected(vec![1, 2, 3])],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.hg");
        write_hypergraph(&h, &p).unwrap();
        assert_eq!(read_hypergraph(&p).unwrap(), h);
    }

    #[test]
    fn complex_tokens() {
        for z in [
            Complex64::new(0.5, -0.25),
            Complex64::new(-1e-20, 3e7),
            Complex64::new(1.0 / 3.0, -0.0),
        ] {
            let back = parse_complex(&format_complex(z)).unwrap();
            assert_eq!(back.re.to_bits(), z.re.to_bits());
            assert_eq!(back.im, z.im);
        }
        assert!(parse_complex("1+2").is_none());
    }

    #[test]
    fn splits_and_labels() {
        let s = parse_splits("1 2\n3\n4\n", 4).unwrap();
        assert_eq!(s[0], vec![0, 1]);
        assert_eq!(format_splits(&s), "1 2\n3\n4\n");
        assert!(parse_splits("1\n2\n", 4).is_err());

        let l = parse_labels("2 1\n1 0\n", 2).unwrap();
        assert_eq!(l, vec![0, 1]);
        assert!(parse_labels("1 0\n", 2).is_err());
    }
}
