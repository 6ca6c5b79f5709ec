//! Plain-text polytope format.
//!
//! ```text
//! d 2 v 4 f 4
//! <x_1> <x_2>                 (one row per vertex)
//! <a_1> <a_2> <b> <i> <j> ..  (one row per facet: normal, offset, vertex ids)
//! ```
//!
//! Reals are written with 17 significant digits so the round trip is
//! bit-exact.

use std::fmt::Write;

use super::{Facet, GeometryError, Point, PolytopeV};

pub(crate) fn fmt_real(out: &mut String, x: f64) {
    write!(out, "{x:.16e}").unwrap();
}

pub(crate) fn write_reals(out: &mut String, xs: &[f64]) {
    for (i, &x) in xs.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        fmt_real(out, x);
    }
}

pub fn write_polytope(p: &PolytopeV) -> String {
    let mut out = String::new();
    writeln!(out, "d {} v {} f {}", p.dim(), p.vertices().len(), p.facets().len()).unwrap();
    for v in p.vertices() {
        write_reals(&mut out, v);
        out.push('\n');
    }
    for f in p.facets() {
        write_reals(&mut out, &f.normal);
        out.push(' ');
        fmt_real(&mut out, f.offset);
        for i in &f.vertices {
            write!(out, " {i}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Cursor over non-blank, non-comment lines with 1-based line numbers.
pub(crate) struct LineReader<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> LineReader<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        LineReader { lines: text.lines().enumerate().peekable() }
    }

    fn skip_blank(&mut self) {
        while let Some((_, l)) = self.lines.peek() {
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                self.lines.next();
            } else {
                break;
            }
        }
    }

    pub(crate) fn peek(&mut self) -> Option<&'a str> {
        self.skip_blank();
        self.lines.peek().map(|(_, l)| l.trim())
    }

    pub(crate) fn next_line(&mut self) -> Result<(usize, &'a str), GeometryError> {
        self.skip_blank();
        self.lines
            .next()
            .map(|(i, l)| (i + 1, l.trim()))
            .ok_or(GeometryError::Parse { line: 0, msg: "unexpected end of input".into() })
    }

    pub(crate) fn reals(&mut self, expect: usize) -> Result<Vec<f64>, GeometryError> {
        let (line, l) = self.next_line()?;
        let xs = parse_reals(line, l)?;
        if xs.len() != expect {
            return Err(GeometryError::Parse { line, msg: format!("expected {expect} numbers, got {}", xs.len()) });
        }
        Ok(xs)
    }
}

pub(crate) fn parse_reals(line: usize, l: &str) -> Result<Vec<f64>, GeometryError> {
    l.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| GeometryError::Parse { line, msg: format!("{t:?}: {e}") }))
        .collect()
}

/// Parses a `key value key value ...` header, checking the keys.
pub(crate) fn parse_header(line: usize, l: &str, keys: &[&str]) -> Result<Vec<usize>, GeometryError> {
    let toks: Vec<&str> = l.split_whitespace().collect();
    if toks.len() != 2 * keys.len() {
        return Err(GeometryError::Parse { line, msg: format!("bad header {l:?}") });
    }
    keys.iter()
        .enumerate()
        .map(|(i, k)| {
            if toks[2 * i] != *k {
                return Err(GeometryError::Parse { line, msg: format!("expected key {k:?}, got {:?}", toks[2 * i]) });
            }
            toks[2 * i + 1]
                .parse()
                .map_err(|_| GeometryError::Parse { line, msg: format!("bad count {:?}", toks[2 * i + 1]) })
        })
        .collect()
}

pub(crate) fn read_polytope(r: &mut LineReader<'_>) -> Result<PolytopeV, GeometryError> {
    let (line, l) = r.next_line()?;
    let h = parse_header(line, l, &["d", "v", "f"])?;
    let (d, nv, nf) = (h[0], h[1], h[2]);
    if d == 0 || d > super::MAX_DIM + 1 {
        return Err(GeometryError::UnsupportedDimension(d));
    }
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        vertices.push(Point::new(r.reals(d)?));
    }
    let mut facets = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, l) = r.next_line()?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() < d + 1 + d {
            return Err(GeometryError::Parse { line, msg: "facet row too short".into() });
        }
        let reals = parse_reals(line, &toks[..=d].join(" "))?;
        let idx: Result<Vec<usize>, _> = toks[d + 1..].iter().map(|t| t.parse::<usize>()).collect();
        let idx = idx.map_err(|e| GeometryError::Parse { line, msg: e.to_string() })?;
        if idx.iter().any(|&i| i >= nv) {
            return Err(GeometryError::Parse { line, msg: "vertex index out of range".into() });
        }
        facets.push(Facet { normal: reals[..d].to_vec(), offset: reals[d], vertices: idx });
    }
    PolytopeV::from_parts(vertices, facets)
}

pub fn parse_polytope(text: &str) -> Result<PolytopeV, GeometryError> {
    read_polytope(&mut LineReader::new(text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::convex_hull;

    #[test]
    fn round_trip_is_bit_exact() {
        let pts: Vec<Point> = (0..30)
            .map(|k| {
                let t = k as f64 * 0.7361;
                Point::from([t.cos() * 1.0 / 3.0, t.sin() * std::f64::consts::PI, (3.0 * t).sin() / 7.0])
            })
            .collect();
        let p = convex_hull(&pts).unwrap();
        let text = write_polytope(&p);
        let q = parse_polytope(&text).unwrap();
        assert_eq!(p.vertices(), q.vertices());
        assert_eq!(p.facets(), q.facets());
        assert_eq!(write_polytope(&q), text);
    }

    #[test]
    fn header_errors() {
        assert!(matches!(parse_polytope("d 2 v 3"), Err(GeometryError::Parse { line: 1, .. })));
        assert!(matches!(parse_polytope("d 2 v 1 f 0\n1 2 3\n"), Err(GeometryError::Parse { line: 2, .. })));
    }
}
