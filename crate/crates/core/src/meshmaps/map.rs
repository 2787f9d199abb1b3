use std::sync::Arc;

use nalgebra::DMatrix;

use super::mesh::SimplicialMesh;
use crate::error::{arg, Error, Result};
use crate::exterior::{lift_minors, MinorMatrix};

/// Anything that supplies first-order jets `(x, v)` at points of mesh cells.
pub trait JetSource: Sync {
    fn mesh(&self) -> &SimplicialMesh;

    fn shared_mesh(&self) -> Arc<SimplicialMesh>;

    fn target_dim(&self) -> usize;

    /// Value and differential at the point `t` of cell `cell` with
    /// barycentric coordinates `bary`.
    fn jet(&self, cell: usize, bary: &[f64], t: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)>;
}

/// Continuous piecewise-affine map given by one value in ℝᵐ per vertex.
#[derive(Clone, Debug)]
pub struct PwAffineMap {
    mesh: Arc<SimplicialMesh>,
    target_dim: usize,
    values: Vec<f64>,
}

impl PwAffineMap {
    pub fn new(mesh: Arc<SimplicialMesh>, target_dim: usize, values: Vec<f64>) -> Result<Self> {
        if target_dim == 0 || target_dim > crate::exterior::MAX_MAP_DIM {
            return arg(format!("target dimension {target_dim} unsupported"));
        }
        if values.len() != mesh.num_vertices() * target_dim {
            return arg(format!(
                "expected {} nodal values, got {}",
                mesh.num_vertices() * target_dim,
                values.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation("non-finite nodal value".into()));
        }
        Ok(Self { mesh, target_dim, values })
    }

    pub fn mesh_arc(&self) -> &Arc<SimplicialMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nodal_value(&self, v: usize) -> &[f64] {
        &self.values[v * self.target_dim..(v + 1) * self.target_dim]
    }

    /// Same mesh, new nodal values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.mesh.clone(), self.target_dim, values)
    }

    pub fn value_at(&self, cell: usize, bary: &[f64]) -> Vec<f64> {
        let m = self.target_dim;
        let mut x = vec![0.0; m];
        for (&v, &b) in self.mesh.cell(cell).iter().zip(bary) {
            for (xi, ui) in x.iter_mut().zip(self.nodal_value(v)) {
                *xi += b * ui;
            }
        }
        x
    }

    /// Constant differential on a cell, an `m × n` matrix.
    pub fn cell_gradient(&self, cell: usize) -> DMatrix<f64> {
        let n = self.mesh.dim();
        let vs = self.mesh.cell(cell);
        let u0 = self.nodal_value(vs[0]);
        let diffs = DMatrix::from_fn(self.target_dim, n, |i, j| self.nodal_value(vs[j + 1])[i] - u0[i]);
        diffs * self.mesh.inverse_edges(cell)
    }

    /// Cellwise `∧_l du`.
    pub fn minor_field(&self, l: usize) -> Result<Vec<MinorMatrix>> {
        (0..self.mesh.num_cells()).map(|c| lift_minors(&self.cell_gradient(c), l)).collect()
    }

    pub fn boundary_trace(&self) -> BoundaryTrace {
        let nodes = self.mesh.boundary_nodes().to_vec();
        let values = nodes.iter().flat_map(|&v| self.nodal_value(v).iter().copied()).collect();
        BoundaryTrace { target_dim: self.target_dim, nodes, values }
    }

    /// Barycentric weights of the hat functions at a point are the
    /// barycentric coordinates; their gradients are constant per cell.
    pub fn hat_gradients(&self, cell: usize) -> DMatrix<f64> {
        hat_gradients(&self.mesh, cell)
    }
}

/// `(n+1) × n` matrix whose row `i` is the gradient of the `i`-th local hat
/// function on the cell.
pub fn hat_gradients(mesh: &SimplicialMesh, cell: usize) -> DMatrix<f64> {
    let n = mesh.dim();
    let inv = mesh.inverse_edges(cell);
    let mut g = DMatrix::zeros(n + 1, n);
    for j in 0..n {
        let mut s = 0.0;
        for i in 0..n {
            g[(i + 1, j)] = inv[(i, j)];
            s += inv[(i, j)];
        }
        g[(0, j)] = -s;
    }
    g
}

impl JetSource for PwAffineMap {
    fn mesh(&self) -> &SimplicialMesh {
        &self.mesh
    }

    fn shared_mesh(&self) -> Arc<SimplicialMesh> {
        self.mesh.clone()
    }

    fn target_dim(&self) -> usize {
        self.target_dim
    }

    fn jet(&self, cell: usize, bary: &[f64], _t: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        Ok((self.value_at(cell, bary), self.cell_gradient(cell)))
    }
}

/// Boundary nodal values of a map.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace {
    pub target_dim: usize,
    pub nodes: Vec<usize>,
    pub values: Vec<f64>,
}

impl BoundaryTrace {
    /// Traces agree when they share nodes and every value is within `tol`.
    pub fn agrees_with(&self, other: &BoundaryTrace, tol: f64) -> bool {
        self.nodes == other.nodes
            && self.target_dim == other.target_dim
            && self.values.iter().zip(&other.values).all(|(a, b)| (a - b).abs() <= tol)
    }

    /// Default trace equality at `1e-12`.
    pub fn shares(&self, other: &BoundaryTrace) -> bool {
        self.agrees_with(other, 1e-12)
    }
}

/// Nodal interpolant of `f` on `mesh`.
pub fn interpolate(f: impl Fn(&[f64]) -> Vec<f64>, mesh: Arc<SimplicialMesh>, target_dim: usize) -> Result<PwAffineMap> {
    let mut values = Vec::with_capacity(mesh.num_vertices() * target_dim);
    for v in 0..mesh.num_vertices() {
        let y = f(mesh.vertex(v));
        if y.len() != target_dim {
            return arg(format!("callback returned {} components, expected {target_dim}", y.len()));
        }
        if y.iter().any(|c| !c.is_finite()) {
            return Err(Error::Evaluation(format!("non-finite value at vertex {v}")));
        }
        values.extend(y);
    }
    PwAffineMap::new(mesh, target_dim, values)
}

type ValueFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type JacobianFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// A smooth map with analytic differential, sampled at quadrature points of
/// a mesh rather than interpolated.
pub struct AnalyticMap {
    mesh: Arc<SimplicialMesh>,
    target_dim: usize,
    value: Box<ValueFn>,
    jacobian: Box<JacobianFn>,
}

impl AnalyticMap {
    pub fn new(
        mesh: Arc<SimplicialMesh>,
        target_dim: usize,
        value: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        jacobian: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { mesh, target_dim, value: Box::new(value), jacobian: Box::new(jacobian) }
    }

    pub fn value(&self, t: &[f64]) -> Vec<f64> {
        (self.value)(t)
    }

    pub fn jacobian(&self, t: &[f64]) -> DMatrix<f64> {
        (self.jacobian)(t)
    }

    pub fn interpolant(&self) -> Result<PwAffineMap> {
        interpolate(|t| (self.value)(t), self.mesh.clone(), self.target_dim)
    }
}

impl JetSource for AnalyticMap {
    fn mesh(&self) -> &SimplicialMesh {
        &self.mesh
    }

    fn shared_mesh(&self) -> Arc<SimplicialMesh> {
        self.mesh.clone()
    }

    fn target_dim(&self) -> usize {
        self.target_dim
    }

    fn jet(&self, _cell: usize, _bary: &[f64], t: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let x = (self.value)(t);
        let v = (self.jacobian)(t);
        if x.len() != self.target_dim || v.shape() != (self.target_dim, self.mesh.dim()) {
            return Err(Error::Evaluation("analytic map returned a jet of the wrong shape".into()));
        }
        if x.iter().chain(v.iter()).any(|c| !c.is_finite()) {
            return Err(Error::Evaluation(format!("non-finite jet at {t:?}")));
        }
        Ok((x, v))
    }
}
