//! Plain-text file formats.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a value
//! read back is bit-identical to the value written.

use std::fmt::Display;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::field::NodalField;
use crate::geometry::{Chord, Point2, TriMesh};
use crate::linalg::CsrMatrix;
use crate::{Error, Real, Result};

pub const MEASUREMENT_HEADER: [&str; 4] = ["chord_index", "electrode_a", "electrode_b", "value"];
pub const POTENTIAL_HEADER: [&str; 4] = ["node", "x", "y", "u"];
pub const FIELD_HEADER: [&str; 5] = ["node", "x", "y", "ex", "ey"];

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

/// Whitespace-token reader that skips blank lines and `#` comments.
struct Tokens {
    path: PathBuf,
    lines: Vec<(usize, Vec<String>)>,
    pos: usize,
}

impl Tokens {
    fn new(path: &Path, reader: impl BufRead) -> Result<Self> {
        let mut lines = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let body = line.split('#').next().unwrap_or("");
            let toks: Vec<String> = body.split_whitespace().map(str::to_owned).collect();
            if !toks.is_empty() {
                lines.push((i + 1, toks));
            }
        }
        Ok(Tokens {
            path: path.to_owned(),
            lines,
            pos: 0,
        })
    }

    fn line<V: FromStr>(&mut self, count: usize, what: &str) -> Result<(usize, Vec<V>)> {
        let Some((no, toks)) = self.lines.get(self.pos) else {
            let last = self.lines.last().map_or(0, |l| l.0);
            return Err(Error::parse(
                &self.path,
                last,
                format!("unexpected end of file, expected {what}"),
            ));
        };
        self.pos += 1;
        if toks.len() != count {
            return Err(Error::parse(
                &self.path,
                *no,
                format!("expected {count} fields for {what}, found {}", toks.len()),
            ));
        }
        let vals = toks
            .iter()
            .map(|t| {
                t.parse::<V>().map_err(|_| {
                    Error::parse(&self.path, *no, format!("invalid {what} field `{t}`"))
                })
            })
            .collect::<Result<Vec<V>>>()?;
        Ok((*no, vals))
    }

    fn finish(&self) -> Result<()> {
        match self.lines.get(self.pos) {
            Some((no, _)) => Err(Error::parse(&self.path, *no, "trailing content")),
            None => Ok(()),
        }
    }
}

/// Mesh text format: `N N_E n_boundary`, then `N` lines `x y`, `N_E` lines
/// `i1 i2 i3` and the boundary node ids, one per line.
pub fn write_mesh<T: Real>(mesh: &TriMesh<T>, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(
        out,
        "{} {} {}",
        mesh.num_nodes(),
        mesh.num_elements(),
        mesh.boundary_nodes().len()
    )?;
    for p in mesh.nodes() {
        writeln!(out, "{} {}", p.x, p.y)?;
    }
    for [a, b, c] in mesh.elements() {
        writeln!(out, "{a} {b} {c}")?;
    }
    for b in mesh.boundary_nodes() {
        writeln!(out, "{b}")?;
    }
    Ok(())
}

pub fn read_mesh<T: Real>(path: &Path, reader: impl BufRead) -> Result<TriMesh<T>> {
    let mut tok = Tokens::new(path, reader)?;
    let (_, h) = tok.line::<usize>(3, "header")?;
    let mut nodes = Vec::with_capacity(h[0]);
    for _ in 0..h[0] {
        let (_, v) = tok.line::<T>(2, "node")?;
        nodes.push(Point2::new(v[0], v[1]));
    }
    let mut elements = Vec::with_capacity(h[1]);
    for _ in 0..h[1] {
        let (_, v) = tok.line::<usize>(3, "element")?;
        elements.push([v[0], v[1], v[2]]);
    }
    let mut boundary = Vec::with_capacity(h[2]);
    for _ in 0..h[2] {
        boundary.push(tok.line::<usize>(1, "boundary node")?.1[0]);
    }
    tok.finish()?;
    TriMesh::new(nodes, elements, boundary, T::one())
}

pub fn save_mesh<T: Real>(path: &Path, mesh: &TriMesh<T>) -> Result<()> {
    let mut w = create(path)?;
    write_mesh(mesh, &mut w)
        .and_then(|_| w.flush())
        .map_err(write_err(path))
}

pub fn load_mesh<T: Real>(path: &Path) -> Result<TriMesh<T>> {
    read_mesh(path, open(path)?)
}

/// Sparse triplet format: `m 2N nnz`, then `row col value` lines sorted by
/// row and column.
pub fn write_triplets<T: Real>(matrix: &CsrMatrix<T>, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(
        out,
        "{} {} {}",
        matrix.nrows(),
        matrix.ncols(),
        matrix.nnz()
    )?;
    for (r, c, v) in matrix.triplets() {
        writeln!(out, "{r} {c} {v}")?;
    }
    Ok(())
}

pub fn read_triplets<T: Real>(path: &Path, reader: impl BufRead) -> Result<CsrMatrix<T>> {
    let mut tok = Tokens::new(path, reader)?;
    let (_, h) = tok.line::<usize>(3, "header")?;
    let mut trip = Vec::with_capacity(h[2]);
    let mut last: Option<(usize, usize)> = None;
    for _ in 0..h[2] {
        let (no, v) = tok.line::<String>(3, "triplet")?;
        let bad = |what: &str| Error::parse(path, no, format!("invalid {what}"));
        let r: usize = v[0].parse().map_err(|_| bad("row"))?;
        let c: usize = v[1].parse().map_err(|_| bad("column"))?;
        let x: T = v[2].parse().map_err(|_| bad("value"))?;
        if r >= h[0] || c >= h[1] {
            return Err(Error::parse(
                path,
                no,
                format!("entry ({r}, {c}) outside {}x{}", h[0], h[1]),
            ));
        }
        if last.is_some_and(|l| l >= (r, c)) {
            return Err(Error::parse(path, no, "entries not strictly sorted"));
        }
        last = Some((r, c));
        trip.push((r, c, x));
    }
    tok.finish()?;
    CsrMatrix::from_triplets(h[0], h[1], trip)
}

pub fn save_triplets<T: Real>(path: &Path, matrix: &CsrMatrix<T>) -> Result<()> {
    let mut w = create(path)?;
    write_triplets(matrix, &mut w)
        .and_then(|_| w.flush())
        .map_err(write_err(path))
}

pub fn load_triplets<T: Real>(path: &Path) -> Result<CsrMatrix<T>> {
    read_triplets(path, open(path)?)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::parse(path, line, format!("{kind:?}")),
    }
}

fn write_csv<W: Write>(
    path: &Path,
    out: W,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a CSV with the given header; returns `(line, fields)` per record.
fn read_csv(path: &Path, input: impl Read, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let found = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::parse(
            path,
            1,
            format!("expected header `{}`", header.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push((line, rec.iter().map(str::to_owned).collect()));
    }
    Ok(rows)
}

fn field<V: FromStr>(path: &Path, line: usize, row: &[String], k: usize, name: &str) -> Result<V> {
    row[k]
        .parse()
        .map_err(|_| Error::parse(path, line, format!("invalid {name} `{}`", row[k])))
}

fn check_index(path: &Path, line: usize, found: usize, expected: usize, name: &str) -> Result<()> {
    if found != expected {
        return Err(Error::parse(
            path,
            line,
            format!("{name} {found} out of order, expected {expected}"),
        ));
    }
    Ok(())
}

fn s<T: Display>(v: T) -> String {
    v.to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement<T> {
    pub chord_index: usize,
    pub electrodes: (usize, usize),
    pub value: T,
}

pub fn save_measurements<T: Real>(path: &Path, chords: &[Chord<T>], values: &[T]) -> Result<()> {
    if chords.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: chords.len(),
            found: values.len(),
        });
    }
    let rows = chords
        .iter()
        .zip(values)
        .enumerate()
        .map(|(k, (c, v))| vec![s(k), s(c.endpoints.0), s(c.endpoints.1), s(v)]);
    write_csv(path, create(path)?, &MEASUREMENT_HEADER, rows)
}

pub fn load_measurements<T: Real>(path: &Path) -> Result<Vec<Measurement<T>>> {
    read_csv(path, open(path)?, &MEASUREMENT_HEADER)?
        .into_iter()
        .enumerate()
        .map(|(k, (line, row))| {
            let chord_index = field(path, line, &row, 0, "chord_index")?;
            check_index(path, line, chord_index, k, "chord_index")?;
            Ok(Measurement {
                chord_index,
                electrodes: (
                    field(path, line, &row, 1, "electrode_a")?,
                    field(path, line, &row, 2, "electrode_b")?,
                ),
                value: field(path, line, &row, 3, "value")?,
            })
        })
        .collect()
}

pub fn save_potentials<T: Real>(path: &Path, mesh: &TriMesh<T>, u: &[T]) -> Result<()> {
    if u.len() != mesh.num_nodes() {
        return Err(Error::DimensionMismatch {
            expected: mesh.num_nodes(),
            found: u.len(),
        });
    }
    let rows = mesh
        .nodes()
        .iter()
        .zip(u)
        .enumerate()
        .map(|(i, (p, v))| vec![s(i), s(p.x), s(p.y), s(v)]);
    write_csv(path, create(path)?, &POTENTIAL_HEADER, rows)
}

/// Returns node positions and potentials.
pub fn load_potentials<T: Real>(path: &Path) -> Result<(Vec<Point2<T>>, Vec<T>)> {
    let mut pts = Vec::new();
    let mut u = Vec::new();
    for (k, (line, row)) in read_csv(path, open(path)?, &POTENTIAL_HEADER)?
        .into_iter()
        .enumerate()
    {
        check_index(path, line, field(path, line, &row, 0, "node")?, k, "node")?;
        pts.push(Point2::new(
            field(path, line, &row, 1, "x")?,
            field(path, line, &row, 2, "y")?,
        ));
        u.push(field(path, line, &row, 3, "u")?);
    }
    Ok((pts, u))
}

pub fn save_field<T: Real>(path: &Path, mesh: &TriMesh<T>, e: &NodalField<T>) -> Result<()> {
    if e.num_nodes() != mesh.num_nodes() {
        return Err(Error::DimensionMismatch {
            expected: mesh.num_nodes(),
            found: e.num_nodes(),
        });
    }
    let rows = mesh.nodes().iter().enumerate().map(|(i, p)| {
        let v = e.at(i);
        vec![s(i), s(p.x), s(p.y), s(v.x), s(v.y)]
    });
    write_csv(path, create(path)?, &FIELD_HEADER, rows)
}

/// Returns node positions and the field.
pub fn load_field<T: Real>(path: &Path) -> Result<(Vec<Point2<T>>, NodalField<T>)> {
    let mut pts = Vec::new();
    let (mut ex, mut ey) = (Vec::new(), Vec::new());
    for (k, (line, row)) in read_csv(path, open(path)?, &FIELD_HEADER)?
        .into_iter()
        .enumerate()
    {
        check_index(path, line, field(path, line, &row, 0, "node")?, k, "node")?;
        pts.push(Point2::new(
            field(path, line, &row, 1, "x")?,
            field(path, line, &row, 2, "y")?,
        ));
        ex.push(field(path, line, &row, 3, "ex")?);
        ey.push(field(path, line, &row, 4, "ey")?);
    }
    let f =
        NodalField::from_components(&ex, &ey).map_err(|e| Error::parse(path, 0, e.to_string()))?;
    Ok((pts, f))
}

/// Checks that field positions coincide with the mesh nodes.
pub fn check_positions<T: Real>(mesh: &TriMesh<T>, pts: &[Point2<T>], what: &str) -> Result<()> {
    if pts.len() != mesh.num_nodes() {
        return Err(Error::MeshMismatch(format!(
            "{what} has {} nodes, mesh has {}",
            pts.len(),
            mesh.num_nodes()
        )));
    }
    let tol = T::lit(1e-9) * mesh.max_edge_length();
    if let Some(i) = (0..pts.len()).find(|&i| pts[i].distance(mesh.node(i)) > tol) {
        return Err(Error::MeshMismatch(format!(
            "{what}: node {i} is not at the mesh position"
        )));
    }
    Ok(())
}

/// Ordered `key = value` pairs with line numbers.
pub fn read_key_values(path: &Path, reader: impl BufRead) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(Error::parse(path, i + 1, "expected `key = value`"));
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(Error::parse(path, i + 1, "expected `key = value`"));
        }
        if out
            .iter()
            .any(|(_, key, _): &(usize, String, String)| key == k)
        {
            return Err(Error::parse(path, i + 1, format!("duplicate key `{k}`")));
        }
        out.push((i + 1, k.to_owned(), v.to_owned()));
    }
    Ok(out)
}
