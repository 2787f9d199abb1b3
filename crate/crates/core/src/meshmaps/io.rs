use std::sync::Arc;

use super::map::{JetSource, PwAffineMap};
use super::mesh::SimplicialMesh;
use crate::error::{Error, Result};

pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn join(xs: impl Iterator<Item = String>) -> String {
    xs.collect::<Vec<_>>().join(" ")
}

/// Serialize a map with its mesh to the line-oriented text format.
pub fn write_mesh_map(u: &PwAffineMap) -> String {
    let mesh = u.mesh();
    let (n, m) = (mesh.dim(), u.target_dim());
    let mut s = format!("{n} {m} {} {}\n", mesh.num_vertices(), mesh.num_cells());
    for v in 0..mesh.num_vertices() {
        s += &join(mesh.vertex(v).iter().map(|&c| fmt_f64(c)));
        s.push('\n');
    }
    for c in 0..mesh.num_cells() {
        s += &join(mesh.cell(c).iter().map(|i| i.to_string()));
        s.push('\n');
    }
    s += &join(mesh.boundary_nodes().iter().map(|i| i.to_string()));
    s.push('\n');
    for v in 0..mesh.num_vertices() {
        s += &join(u.nodal_value(v).iter().map(|&c| fmt_f64(c)));
        s.push('\n');
    }
    s
}

pub(crate) struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    pub(crate) line: usize,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Self { inner: text.lines().enumerate(), line: 0 }
    }

    pub(crate) fn next_line(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => Err(self.err("unexpected end of input")),
        }
    }

    pub(crate) fn err(&self, msg: &str) -> Error {
        Error::Parse { line: self.line, msg: msg.to_string() }
    }

    pub(crate) fn parse_row<T: std::str::FromStr>(&mut self, expected: Option<usize>) -> Result<Vec<T>> {
        let l = self.next_line()?;
        let row: Vec<T> = l
            .split_whitespace()
            .map(|w| w.parse::<T>().map_err(|_| self.err(&format!("cannot parse `{w}`"))))
            .collect::<Result<_>>()?;
        if let Some(k) = expected {
            if row.len() != k {
                return Err(self.err(&format!("expected {k} fields, found {}", row.len())));
            }
        }
        Ok(row)
    }

    pub(crate) fn expect_end(&mut self) -> Result<()> {
        for (i, l) in self.inner.by_ref() {
            if !l.trim().is_empty() {
                return Err(Error::Parse { line: i + 1, msg: "trailing content".into() });
            }
        }
        Ok(())
    }
}

/// Parse the format produced by [`write_mesh_map`].
pub fn read_mesh_map(text: &str) -> Result<PwAffineMap> {
    let mut lines = Lines::new(text);
    let header: Vec<usize> = lines.parse_row(Some(4))?;
    let (n, m, nv, nc) = (header[0], header[1], header[2], header[3]);
    if n != 2 && n != 3 {
        return Err(lines.err("dimension must be 2 or 3"));
    }
    if nc > super::MAX_CELLS || nv > (n + 1) * super::MAX_CELLS {
        return Err(Error::Resource("mesh too large".into()));
    }
    let mut coords = Vec::with_capacity(nv * n);
    for _ in 0..nv {
        coords.extend(lines.parse_row::<f64>(Some(n))?);
    }
    let mut cells = Vec::with_capacity(nc * (n + 1));
    for _ in 0..nc {
        cells.extend(lines.parse_row::<usize>(Some(n + 1))?);
    }
    let boundary: Vec<usize> = lines.parse_row(None)?;
    let boundary_line = lines.line;
    let mut values = Vec::with_capacity(nv * m);
    for _ in 0..nv {
        values.extend(lines.parse_row::<f64>(Some(m))?);
    }
    lines.expect_end()?;
    let mesh = SimplicialMesh::new(n, coords, cells)?;
    if mesh.boundary_nodes() != boundary.as_slice() {
        return Err(Error::Parse { line: boundary_line, msg: "boundary nodes disagree with the mesh topology".into() });
    }
    PwAffineMap::new(Arc::new(mesh), m, values)
}

#[cfg(test)]
mod tests {
    use super::super::{build_box_mesh, build_disc_mesh, interpolate};
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mesh = Arc::new(build_disc_mesh(0.3).unwrap());
        let u = interpolate(|t| vec![t[0].sin() / 3.0, (t[1] * 7.1).exp(), 1e-300 * t[0]], mesh, 3).unwrap();
        let text = write_mesh_map(&u);
        let back = read_mesh_map(&text).unwrap();
        assert_eq!(write_mesh_map(&back), text);
        for (a, b) in u.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in u.mesh().coords().iter().zip(back.mesh().coords()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_bad_input() {
        let mesh = Arc::new(build_box_mesh(2, 1).unwrap());
        let u = interpolate(|t| t.to_vec(), mesh, 2).unwrap();
        let text = write_mesh_map(&u);
        let cut = &text[..text.trim_end().rfind('\n').unwrap()];
        assert!(matches!(read_mesh_map(cut), Err(Error::Parse { .. })));
        let broken = text.replacen("2 2 4 2", "2 2 4 3", 1);
        assert!(read_mesh_map(&broken).is_err());
        let garbage = text.replacen("0 1", "0 x", 1);
        assert!(matches!(read_mesh_map(&garbage), Err(Error::Parse { .. })));
    }
}
