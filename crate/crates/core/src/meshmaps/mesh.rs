use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{arg, Error, Result};
use crate::exterior::determinant;

/// Upper bound on the number of cells any builder will produce.
pub const MAX_CELLS: usize = 4_000_000;

/// Simplicial mesh of a domain in ℝ² or ℝ³.
///
/// Immutable after construction. Boundary nodes are derived from the facets
/// that belong to exactly one cell.
#[derive(Clone, Debug)]
pub struct SimplicialMesh {
    dim: usize,
    coords: Vec<f64>,
    cells: Vec<usize>,
    boundary: Vec<usize>,
    on_boundary: Vec<bool>,
    volumes: Vec<f64>,
    inv_edges: Vec<DMatrix<f64>>,
    total_volume: f64,
}

impl SimplicialMesh {
    /// Build from flat vertex coordinates (`dim` per vertex) and flat cell
    /// connectivity (`dim + 1` per cell).
    pub fn new(dim: usize, coords: Vec<f64>, cells: Vec<usize>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return arg(format!("mesh dimension must be 2 or 3, got {dim}"));
        }
        if coords.len() % dim != 0 || cells.len() % (dim + 1) != 0 {
            return arg("flat coordinate or cell arrays have the wrong length");
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return arg("non-finite vertex coordinate");
        }
        let nv = coords.len() / dim;
        let nc = cells.len() / (dim + 1);
        if nc == 0 {
            return arg("mesh has no cells");
        }
        if nc > MAX_CELLS {
            return Err(Error::Resource(format!("{nc} cells exceed the budget of {MAX_CELLS}")));
        }
        if let Some(&bad) = cells.iter().find(|&&v| v >= nv) {
            return arg(format!("cell references vertex {bad} but only {nv} exist"));
        }

        let mut volumes = Vec::with_capacity(nc);
        let mut inv_edges = Vec::with_capacity(nc);
        let factorial = if dim == 2 { 2.0 } else { 6.0 };
        for c in 0..nc {
            let vs = &cells[c * (dim + 1)..(c + 1) * (dim + 1)];
            let p0 = &coords[vs[0] * dim..vs[0] * dim + dim];
            let edges = DMatrix::from_fn(dim, dim, |i, j| coords[vs[j + 1] * dim + i] - p0[i]);
            let det = determinant(&edges);
            let vol = det.abs() / factorial;
            let scale = edges.amax().max(f64::MIN_POSITIVE);
            if !(vol > 1e-14 * scale.powi(dim as i32)) {
                return arg(format!("cell {c} is degenerate (volume {vol:e})"));
            }
            let inv = edges
                .try_inverse()
                .ok_or_else(|| Error::Argument(format!("cell {c} edge matrix is singular")))?;
            volumes.push(vol);
            inv_edges.push(inv);
        }

        // Facets shared by one cell only lie on the boundary.
        let mut facet_count: HashMap<Vec<usize>, u32> = HashMap::new();
        for c in 0..nc {
            let vs = &cells[c * (dim + 1)..(c + 1) * (dim + 1)];
            for skip in 0..=dim {
                let mut f: Vec<usize> = vs.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                f.sort_unstable();
                *facet_count.entry(f).or_default() += 1;
            }
        }
        if facet_count.values().any(|&k| k > 2) {
            return arg("mesh is not a manifold: a facet is shared by more than two cells");
        }
        let mut on_boundary = vec![false; nv];
        for (f, &k) in &facet_count {
            if k == 1 {
                for &v in f {
                    on_boundary[v] = true;
                }
            }
        }
        let boundary = (0..nv).filter(|&v| on_boundary[v]).collect();
        let total_volume = crate::reduce::pairwise_sum(&volumes);
        Ok(Self { dim, coords, cells, boundary, on_boundary, volumes, inv_edges, total_volume })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn num_cells(&self) -> usize {
        self.volumes.len()
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c * (self.dim + 1)..(c + 1) * (self.dim + 1)]
    }

    pub fn cells_flat(&self) -> &[usize] {
        &self.cells
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        self.volumes[c]
    }

    pub fn cell_volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// Total volume, summed pairwise in cell order.
    pub fn total_volume(&self) -> f64 {
        self.total_volume
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.on_boundary[v]
    }

    /// Inverse of the edge matrix `[x₁ - x₀, …, x_n - x₀]` of a cell.
    pub fn inverse_edges(&self, c: usize) -> &DMatrix<f64> {
        &self.inv_edges[c]
    }

    /// Physical point of a cell from barycentric coordinates.
    pub fn point(&self, c: usize, bary: &[f64]) -> Vec<f64> {
        let mut t = vec![0.0; self.dim];
        for (&v, &b) in self.cell(c).iter().zip(bary) {
            for (ti, xi) in t.iter_mut().zip(self.vertex(v)) {
                *ti += b * xi;
            }
        }
        t
    }

    pub fn centroid(&self, c: usize) -> Vec<f64> {
        let w = 1.0 / (self.dim + 1) as f64;
        self.point(c, &vec![w; self.dim + 1])
    }

    /// Barycentric coordinates of `t` with respect to cell `c`.
    pub fn barycentric(&self, c: usize, t: &[f64]) -> Vec<f64> {
        let p0 = self.vertex(self.cell(c)[0]);
        let d = nalgebra::DVector::from_iterator(self.dim, t.iter().zip(p0).map(|(a, b)| a - b));
        let local = &self.inv_edges[c] * d;
        let mut bary = Vec::with_capacity(self.dim + 1);
        bary.push(1.0 - local.sum());
        bary.extend(local.iter().copied());
        bary
    }

    /// Whether `t` lies in the closed cell, up to `tol` in barycentric terms.
    pub fn contains(&self, c: usize, t: &[f64], tol: f64) -> bool {
        self.barycentric(c, t).iter().all(|&b| b >= -tol)
    }

    /// The mesh with every vertex moved by `f`; connectivity is kept.
    pub fn mapped(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut coords = Vec::with_capacity(self.coords.len());
        for v in 0..self.num_vertices() {
            let p = f(self.vertex(v));
            if p.len() != self.dim {
                return arg("vertex map changed the dimension");
            }
            coords.extend(p);
        }
        Self::new(self.dim, coords, self.cells.clone())
    }
}

/// Unit square (`n = 2`) or cube (`n = 3`) with `divisions` per side; two
/// triangles per square or six tetrahedra per cube.
pub fn build_box_mesh(n: usize, divisions: usize) -> Result<SimplicialMesh> {
    if divisions == 0 {
        return arg("box mesh needs at least one division");
    }
    let breaks: Vec<f64> = (0..=divisions).map(|i| i as f64 / divisions as f64).collect();
    match n {
        2 => build_tensor_mesh(&breaks, &breaks),
        3 => build_tensor_mesh_3d(&breaks, &breaks, &breaks),
        _ => arg(format!("box mesh dimension must be 2 or 3, got {n}")),
    }
}

fn check_breaks(b: &[f64]) -> Result<()> {
    if b.len() < 2 || b.windows(2).any(|w| !(w[0] < w[1])) {
        return arg("breakpoints must be strictly increasing with at least two entries");
    }
    Ok(())
}

/// Rectangle `[x₀, x_last] × [y₀, y_last]` triangulated on the tensor grid
/// of the given breakpoints.
pub fn build_tensor_mesh(xs: &[f64], ys: &[f64]) -> Result<SimplicialMesh> {
    check_breaks(xs)?;
    check_breaks(ys)?;
    let (nx, ny) = (xs.len(), ys.len());
    if 2 * (nx - 1) * (ny - 1) > MAX_CELLS {
        return Err(Error::Resource("tensor mesh exceeds the cell budget".into()));
    }
    let mut coords = Vec::with_capacity(2 * nx * ny);
    for &y in ys {
        for &x in xs {
            coords.extend([x, y]);
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let mut cells = Vec::with_capacity(6 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            cells.extend([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            cells.extend([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    SimplicialMesh::new(2, coords, cells)
}

/// Box on a 3-D tensor grid, six tetrahedra per brick (Kuhn subdivision).
pub fn build_tensor_mesh_3d(xs: &[f64], ys: &[f64], zs: &[f64]) -> Result<SimplicialMesh> {
    check_breaks(xs)?;
    check_breaks(ys)?;
    check_breaks(zs)?;
    let (nx, ny, nz) = (xs.len(), ys.len(), zs.len());
    if 6 * (nx - 1) * (ny - 1) * (nz - 1) > MAX_CELLS {
        return Err(Error::Resource("tensor mesh exceeds the cell budget".into()));
    }
    let mut coords = Vec::with_capacity(3 * nx * ny * nz);
    for &z in zs {
        for &y in ys {
            for &x in xs {
                coords.extend([x, y, z]);
            }
        }
    }
    let id = |i: usize, j: usize, k: usize| (k * ny + j) * nx + i;
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut cells = Vec::new();
    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                for perm in PERMS {
                    let mut p = [i, j, k];
                    cells.push(id(p[0], p[1], p[2]));
                    for axis in perm {
                        p[axis] += 1;
                        cells.push(id(p[0], p[1], p[2]));
                    }
                }
            }
        }
    }
    SimplicialMesh::new(3, coords, cells)
}

/// Triangulate the strip between two concentric vertex rings by merging
/// their angular orders.
fn stitch_rings(inner: &[usize], inner_angles: &[f64], outer: &[usize], outer_angles: &[f64], cells: &mut Vec<usize>) {
    let (na, nb) = (inner.len(), outer.len());
    let next_angle = |angles: &[f64], i: usize| if i + 1 < angles.len() { angles[i + 1] } else { angles[0] + 2.0 * PI };
    let (mut i, mut k) = (0, 0);
    while i < na || k < nb {
        let advance_inner = if i == na {
            false
        } else if k == nb {
            true
        } else {
            next_angle(inner_angles, i) < next_angle(outer_angles, k)
        };
        if advance_inner {
            cells.extend([inner[i % na], inner[(i + 1) % na], outer[k % nb]]);
            i += 1;
        } else {
            cells.extend([inner[i % na], outer[(k + 1) % nb], outer[k % nb]]);
            k += 1;
        }
    }
}

/// Triangulation of a regular polygon inscribed in the unit circle, built
/// from concentric rings of spacing about `h`. No vertex sits at the origin:
/// the innermost hexagon is split so that the origin is the centroid of one
/// of its triangles.
pub fn build_disc_mesh(h: f64) -> Result<SimplicialMesh> {
    if !(h > 0.0 && h < 1.0) {
        return arg(format!("disc mesh spacing must lie in (0, 1), got {h}"));
    }
    let rings = (1.0 / h).ceil() as usize;
    let estimated = 6 * rings * rings;
    if estimated > MAX_CELLS {
        return Err(Error::Resource(format!("spacing {h} needs about {estimated} cells")));
    }
    let mut coords = Vec::new();
    let mut ring_ids: Vec<Vec<usize>> = Vec::new();
    let mut ring_angles: Vec<Vec<f64>> = Vec::new();
    for j in 1..=rings {
        let r = j as f64 / rings as f64;
        let count = 6 * j;
        let mut ids = Vec::with_capacity(count);
        let mut angles = Vec::with_capacity(count);
        for i in 0..count {
            let theta = 2.0 * PI * i as f64 / count as f64;
            ids.push(coords.len() / 2);
            angles.push(theta);
            let (s, c) = theta.sin_cos();
            coords.extend([r * c, r * s]);
        }
        ring_ids.push(ids);
        ring_angles.push(angles);
    }
    let h0 = &ring_ids[0];
    let mut cells = vec![h0[0], h0[2], h0[4], h0[0], h0[1], h0[2], h0[2], h0[3], h0[4], h0[4], h0[5], h0[0]];
    for j in 0..rings - 1 {
        stitch_rings(&ring_ids[j], &ring_angles[j], &ring_ids[j + 1], &ring_angles[j + 1], &mut cells);
    }
    SimplicialMesh::new(2, coords, cells)
}

/// Polygonal annulus `inner ≤ |t| ≤ 1` with ring spacing about `h`.
pub fn build_annulus_mesh(inner: f64, h: f64) -> Result<SimplicialMesh> {
    if !(inner > 0.0 && inner < 1.0) {
        return arg(format!("annulus inner radius must lie in (0, 1), got {inner}"));
    }
    if !(h > 0.0 && h < 1.0) {
        return arg(format!("annulus spacing must lie in (0, 1), got {h}"));
    }
    let steps = ((1.0 - inner) / h).ceil() as usize;
    let counts: Vec<usize> = (0..=steps)
        .map(|j| {
            let r = inner + (1.0 - inner) * j as f64 / steps as f64;
            ((2.0 * PI * r / h).ceil() as usize).max(6)
        })
        .collect();
    let estimated: usize = counts.iter().sum::<usize>() * 2;
    if estimated > MAX_CELLS {
        return Err(Error::Resource(format!("spacing {h} needs about {estimated} cells")));
    }
    let mut coords = Vec::new();
    let mut ring_ids = Vec::new();
    let mut ring_angles = Vec::new();
    for (j, &count) in counts.iter().enumerate() {
        let r = inner + (1.0 - inner) * j as f64 / steps as f64;
        let mut ids = Vec::with_capacity(count);
        let mut angles = Vec::with_capacity(count);
        for i in 0..count {
            let theta = 2.0 * PI * i as f64 / count as f64;
            ids.push(coords.len() / 2);
            angles.push(theta);
            let (s, c) = theta.sin_cos();
            coords.extend([r * c, r * s]);
        }
        ring_ids.push(ids);
        ring_angles.push(angles);
    }
    let mut cells = Vec::new();
    for j in 0..steps {
        stitch_rings(&ring_ids[j], &ring_angles[j], &ring_ids[j + 1], &ring_angles[j + 1], &mut cells);
    }
    SimplicialMesh::new(2, coords, cells)
}

/// Area of the regular `count`-gon inscribed in the unit circle.
pub fn inscribed_polygon_area(count: usize) -> f64 {
    let n = count as f64;
    0.5 * n * (2.0 * PI / n).sin()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_single_division() {
        let m = build_box_mesh(2, 1).unwrap();
        assert_eq!(m.num_cells(), 2);
        assert!((m.total_volume() - 1.0).abs() < 1e-15);
        assert_eq!(m.boundary_nodes().len(), 4);
    }

    #[test]
    fn square_with_four_divisions() {
        let m = build_box_mesh(2, 4).unwrap();
        assert_eq!(m.num_cells(), 32);
        assert_eq!(m.boundary_nodes().len(), 16);
    }

    #[test]
    fn cube_volume() {
        let m = build_box_mesh(3, 2).unwrap();
        assert_eq!(m.num_cells(), 48);
        assert!((m.total_volume() - 1.0).abs() < 1e-12);
        // 27 vertices, only the centre is interior.
        assert_eq!(m.boundary_nodes().len(), 26);
    }

    #[test]
    fn disc_area_below_pi() {
        let m = build_disc_mesh(0.2).unwrap();
        let a = m.total_volume();
        assert!(a > 3.0 && a < PI, "{a}");
        assert!((a - inscribed_polygon_area(30)).abs() < 1e-12);
        assert!(m.cell_volumes().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn disc_area_increases_to_pi() {
        let areas: Vec<f64> = [0.4, 0.2, 0.1, 0.05].iter().map(|&h| build_disc_mesh(h).unwrap().total_volume()).collect();
        assert!(areas.windows(2).all(|w| w[0] < w[1]));
        assert!(areas.iter().all(|&a| a < PI));
    }

    #[test]
    fn disc_origin_strictly_inside_a_cell() {
        let m = build_disc_mesh(0.25).unwrap();
        assert!((0..m.num_vertices()).all(|v| {
            let p = m.vertex(v);
            p[0].hypot(p[1]) > 0.2
        }));
        let holder: Vec<usize> = (0..m.num_cells()).filter(|&c| m.contains(c, &[0.0, 0.0], 0.0)).collect();
        assert_eq!(holder.len(), 1);
        assert!(m.barycentric(holder[0], &[0.0, 0.0]).iter().all(|&b| b > 0.1));
    }

    #[test]
    fn disc_boundary_is_outer_ring() {
        let m = build_disc_mesh(0.1).unwrap();
        assert_eq!(m.boundary_nodes().len(), 60);
        for &v in m.boundary_nodes() {
            let p = m.vertex(v);
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn annulus_has_two_boundary_rings() {
        let m = build_annulus_mesh(0.3, 0.1).unwrap();
        for &v in m.boundary_nodes() {
            let r = m.vertex(v)[0].hypot(m.vertex(v)[1]);
            assert!((r - 1.0).abs() < 1e-12 || (r - 0.3).abs() < 1e-12);
        }
        let area = PI * (1.0 - 0.09);
        assert!((m.total_volume() - area).abs() < 0.02 * area);
    }

    #[test]
    fn rejects_degenerate_cells_and_bad_spacing() {
        let coords = vec![0.0, 0.0, 1.0, 0.0, 2.0, 0.0];
        assert!(SimplicialMesh::new(2, coords, vec![0, 1, 2]).is_err());
        assert!(build_disc_mesh(0.0).is_err());
        assert!(matches!(build_disc_mesh(1e-4), Err(Error::Resource(_))));
    }

    #[test]
    fn barycentric_round_trip() {
        let m = build_box_mesh(3, 2).unwrap();
        let b = [0.1, 0.2, 0.3, 0.4];
        let t = m.point(5, &b);
        let back = m.barycentric(5, &t);
        for (x, y) in b.iter().zip(&back) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
