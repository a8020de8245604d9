//! Plain-text mesh format.
//!
//! ```text
//! # comment
//! nv nt ne
//! x y marker        (nv lines, marker 0 interior / 1 Dirichlet / 2 Neumann)
//! v0 v1 v2          (nt lines, 0-based, counterclockwise)
//! v0 v1 marker      (ne lines, explicit boundary edge markers)
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::{BoundaryEdge, Marker, TriMesh};
use crate::error::MeshError;
use crate::geometry::Point2;

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-empty, non-comment line with its 1-based line number.
    fn next_data(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            let line = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = line.split_whitespace().collect();
            if !toks.is_empty() {
                return Some((i + 1, toks));
            }
        }
        None
    }

    fn expect(&mut self, what: &str, last_line: usize) -> Result<(usize, Vec<&'a str>), MeshError> {
        self.next_data().ok_or_else(|| MeshError::Parse {
            line: last_line + 1,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn field<T: FromStr>(line: usize, toks: &[&str], k: usize, what: &str) -> Result<T, MeshError> {
    let tok = toks.get(k).ok_or_else(|| MeshError::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| MeshError::Parse {
        line,
        msg: format!("invalid {what} '{tok}'"),
    })
}

fn arity(line: usize, toks: &[&str], n: usize) -> Result<(), MeshError> {
    if toks.len() != n {
        return Err(MeshError::Parse {
            line,
            msg: format!("expected {n} fields, found {}", toks.len()),
        });
    }
    Ok(())
}

fn marker(line: usize, toks: &[&str], k: usize) -> Result<Marker, MeshError> {
    let code: u8 = field(line, toks, k, "marker")?;
    Marker::from_code(code).ok_or_else(|| MeshError::Parse {
        line,
        msg: format!("unknown marker {code}"),
    })
}

/// Parse a mesh from text and validate it.
pub fn parse_mesh(text: &str) -> Result<TriMesh, MeshError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (ln, toks) = lines.expect("header 'nv nt ne'", 0)?;
    arity(ln, &toks, 3)?;
    let nv: usize = field(ln, &toks, 0, "vertex count")?;
    let nt: usize = field(ln, &toks, 1, "triangle count")?;
    let ne: usize = field(ln, &toks, 2, "edge count")?;
    let mut last = ln;

    let mut vertices = Vec::with_capacity(nv);
    let mut markers = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, toks) = lines.expect("vertex line", last)?;
        arity(ln, &toks, 3)?;
        let x: f64 = field(ln, &toks, 0, "x coordinate")?;
        let y: f64 = field(ln, &toks, 1, "y coordinate")?;
        vertices.push(Point2::new(x, y));
        markers.push(marker(ln, &toks, 2)?);
        last = ln;
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, toks) = lines.expect("triangle line", last)?;
        arity(ln, &toks, 3)?;
        let mut t = [0usize; 3];
        for (k, v) in t.iter_mut().enumerate() {
            *v = field(ln, &toks, k, "vertex index")?;
        }
        triangles.push(t);
        last = ln;
    }
    let mut edges = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, toks) = lines.expect("edge line", last)?;
        arity(ln, &toks, 3)?;
        let v0: usize = field(ln, &toks, 0, "vertex index")?;
        let v1: usize = field(ln, &toks, 1, "vertex index")?;
        let m = marker(ln, &toks, 2)?;
        if m == Marker::Interior {
            return Err(MeshError::Parse {
                line: ln,
                msg: "explicit edge marker must be Dirichlet or Neumann".into(),
            });
        }
        edges.push(BoundaryEdge { v: [v0, v1], marker: m });
        last = ln;
    }
    if let Some((ln, _)) = lines.next_data() {
        return Err(MeshError::Parse {
            line: ln,
            msg: "trailing data after the declared sections".into(),
        });
    }
    TriMesh::with_edge_markers(vertices, triangles, markers, edges)
}

pub fn load_mesh<P: AsRef<Path>>(path: P) -> Result<TriMesh, MeshError> {
    let mut text = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut text)?;
    parse_mesh(&text)
}

/// Write a mesh; coordinates use the shortest round-trip representation.
pub fn write_mesh<W: Write>(mesh: &TriMesh, w: W) -> std::io::Result<()> {
    let mut w = BufWriter::new(w);
    let explicit = mesh.explicit_edges();
    writeln!(
        w,
        "{} {} {}",
        mesh.n_vertices(),
        mesh.n_triangles(),
        explicit.len()
    )?;
    for (p, m) in mesh.vertices().iter().zip(mesh.markers()) {
        writeln!(w, "{:?} {:?} {}", p.x, p.y, m.code())?;
    }
    for t in mesh.triangles() {
        writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
    }
    for e in explicit {
        writeln!(w, "{} {} {}", e.v[0], e.v[1], e.marker.code())?;
    }
    w.flush()
}

pub fn save_mesh<P: AsRef<Path>>(mesh: &TriMesh, path: P) -> Result<(), MeshError> {
    write_mesh(mesh, File::create(path)?)?;
    Ok(())
}

/// Read from any buffered source (used by the CLI for stdin).
pub fn read_mesh<R: BufRead>(mut r: R) -> Result<TriMesh, MeshError> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    parse_mesh(&text)
}
