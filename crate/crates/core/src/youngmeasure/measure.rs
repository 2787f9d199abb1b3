use std::cmp::Ordering;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{arg, Error, Result};
use crate::exterior::lift_minors_unchecked;
use crate::meshmaps::{checked_eval, Energy, JetFunction, JetSource, QuadratureRule, SimplicialMesh};
use crate::nulllag::{FormField, LVectorField, NullLagrangianSpec};
use crate::reduce::pairwise_sum;

/// One atom `(t, x, v)` of a measure on jet space.
#[derive(Clone, Debug, PartialEq)]
pub struct JetAtom {
    pub cell: usize,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub v: DMatrix<f64>,
    pub weight: f64,
}

impl JetAtom {
    /// `(t, x, v)` flattened, `v` row-major.
    pub fn flatten(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.t.len() + self.x.len() + self.v.len());
        p.extend_from_slice(&self.t);
        p.extend_from_slice(&self.x);
        for i in 0..self.v.nrows() {
            for j in 0..self.v.ncols() {
                p.push(self.v[(i, j)]);
            }
        }
        p
    }
}

fn cmp_slices(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

pub(crate) fn canonical_cmp(a: &JetAtom, b: &JetAtom) -> Ordering {
    a.cell
        .cmp(&b.cell)
        .then_with(|| cmp_slices(&a.t, &b.t))
        .then_with(|| cmp_slices(&a.x, &b.x))
        .then_with(|| cmp_slices(a.v.as_slice(), b.v.as_slice()))
        .then_with(|| a.weight.total_cmp(&b.weight))
}

/// `r_k(v) = 1 + ‖v‖ + ‖∧₂ v‖ + … + ‖∧_k v‖` in Frobenius norms.
pub fn r_k(v: &DMatrix<f64>, k: usize) -> f64 {
    let k = k.min(v.nrows()).min(v.ncols());
    let mut s = 1.0;
    for l in 1..=k {
        s += lift_minors_unchecked(v, l).into_entries().norm();
    }
    s
}

/// Finitely supported probability measure on first-order jets whose
/// t-marginal is the normalized volume of the mesh.
#[derive(Clone, Debug)]
pub struct AtomicYoungMeasure {
    mesh: Option<Arc<SimplicialMesh>>,
    domain_dim: usize,
    target_dim: usize,
    degree: usize,
    atoms: Vec<JetAtom>,
}

pub(crate) const MASS_TOL: f64 = 1e-12;

impl AtomicYoungMeasure {
    /// Validated measure of total mass one.
    pub fn new(
        mesh: Option<Arc<SimplicialMesh>>,
        domain_dim: usize,
        target_dim: usize,
        degree: usize,
        atoms: Vec<JetAtom>,
    ) -> Result<Self> {
        let eta = Self::new_unnormalized(mesh, domain_dim, target_dim, degree, atoms)?;
        let mass = eta.total_mass();
        if (mass - 1.0).abs() > MASS_TOL {
            return arg(format!("total mass {mass} differs from 1"));
        }
        Ok(eta)
    }

    /// Like [`AtomicYoungMeasure::new`] without the unit-mass requirement;
    /// used to probe the residual diagnostics on defective measures.
    pub fn new_unnormalized(
        mesh: Option<Arc<SimplicialMesh>>,
        domain_dim: usize,
        target_dim: usize,
        degree: usize,
        atoms: Vec<JetAtom>,
    ) -> Result<Self> {
        if degree == 0 || degree > domain_dim.min(target_dim) {
            return arg(format!("degree bound {degree} outside 1..={}", domain_dim.min(target_dim)));
        }
        if let Some(mesh) = &mesh {
            if mesh.dim() != domain_dim {
                return arg("mesh dimension differs from the domain dimension");
            }
        }
        for (i, a) in atoms.iter().enumerate() {
            if a.t.len() != domain_dim || a.x.len() != target_dim || a.v.shape() != (target_dim, domain_dim) {
                return arg(format!("atom {i} has the wrong shape"));
            }
            if !(a.weight > 0.0) || !a.weight.is_finite() {
                return arg(format!("atom {i} has non-positive weight"));
            }
            if a.t.iter().chain(&a.x).chain(a.v.iter()).any(|c| !c.is_finite()) {
                return arg(format!("atom {i} has a non-finite entry"));
            }
            if let Some(mesh) = &mesh {
                if a.cell >= mesh.num_cells() || !mesh.contains(a.cell, &a.t, 1e-9) {
                    return arg(format!("atom {i} does not lie in cell {}", a.cell));
                }
            }
        }
        Ok(Self { mesh, domain_dim, target_dim, degree, atoms })
    }

    pub fn mesh(&self) -> Option<&Arc<SimplicialMesh>> {
        self.mesh.as_ref()
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn atoms(&self) -> &[JetAtom] {
        &self.atoms
    }

    pub fn into_atoms(self) -> Vec<JetAtom> {
        self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        let mut w: Vec<f64> = self.atoms.iter().map(|a| a.weight).collect();
        w.sort_by(f64::total_cmp);
        pairwise_sum(&w)
    }

    /// Same atoms, a different degree bound `k`.
    pub fn with_degree(mut self, k: usize) -> Result<Self> {
        if k == 0 || k > self.domain_dim.min(self.target_dim) {
            return arg(format!("degree bound {k} outside 1..={}", self.domain_dim.min(self.target_dim)));
        }
        self.degree = k;
        Ok(self)
    }

    /// Atoms in canonical order, grouped by cell.
    pub(crate) fn sorted_cells(&self) -> Vec<Vec<&JetAtom>> {
        let mut refs: Vec<&JetAtom> = self.atoms.iter().collect();
        refs.sort_by(|a, b| canonical_cmp(a, b));
        let mut groups: Vec<Vec<&JetAtom>> = Vec::new();
        for a in refs {
            match groups.last_mut() {
                Some(g) if g[0].cell == a.cell => g.push(a),
                _ => groups.push(vec![a]),
            }
        }
        groups
    }
}

/// One atom per (cell, quadrature point): `x = u(t)`, `v = du(t)`, weight
/// `vol · w / |N|`.
pub fn from_map<S: JetSource + ?Sized>(u: &S, q: &QuadratureRule) -> Result<AtomicYoungMeasure> {
    let mesh = u.mesh();
    if q.dim() != mesh.dim() {
        return arg("quadrature rule dimension does not match the mesh");
    }
    let total = mesh.total_volume();
    let w = q.unit_weights();
    let per_cell: Vec<Vec<JetAtom>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let vol = mesh.cell_volume(c) / total;
            q.points()
                .iter()
                .zip(&w)
                .map(|(bary, wq)| {
                    let t = mesh.point(c, bary);
                    let (x, v) = u.jet(c, bary, &t)?;
                    Ok(JetAtom { cell: c, t, x, v, weight: vol * wq })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mesh_arc = u.shared_mesh();
    let k = mesh.dim().min(u.target_dim());
    AtomicYoungMeasure::new(Some(mesh_arc), mesh.dim(), u.target_dim(), k, per_cell.into_iter().flatten().collect())
}

/// Per cell and quadrature point, atoms `(t, x₀(t), A)` of weight `λ·vol·w`
/// and `(t, x₀(t), B)` of weight `(1-λ)·vol·w`, normalized by `|N|`.
pub fn laminate<S: JetSource + ?Sized>(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    lambda: f64,
    base: &S,
    q: &QuadratureRule,
) -> Result<AtomicYoungMeasure> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return arg(format!("laminate weight {lambda} outside (0, 1)"));
    }
    let shape = (base.target_dim(), base.mesh().dim());
    if a.shape() != shape || b.shape() != shape {
        return arg("laminate matrices have the wrong shape");
    }
    let point = from_map(base, q)?;
    let mut atoms = Vec::with_capacity(2 * point.atoms.len());
    for p in point.atoms.iter() {
        atoms.push(JetAtom { cell: p.cell, t: p.t.clone(), x: p.x.clone(), v: a.clone(), weight: lambda * p.weight });
        atoms.push(JetAtom { cell: p.cell, t: p.t.clone(), x: p.x.clone(), v: b.clone(), weight: (1.0 - lambda) * p.weight });
    }
    AtomicYoungMeasure::new(point.mesh, point.domain_dim, point.target_dim, point.degree, atoms)
}

/// `∫ L dη`: atoms summed sequentially within each cell in canonical order,
/// then a pairwise tree over cells.
pub fn integrate(eta: &AtomicYoungMeasure, l: &dyn JetFunction) -> Result<Energy> {
    let groups = eta.sorted_cells();
    let parts: Vec<f64> = groups
        .par_iter()
        .map(|g| {
            let mut s = 0.0;
            for a in g {
                let y = checked_eval(l, &a.t, &a.x, &a.v)?;
                if y == f64::INFINITY {
                    return Ok(f64::INFINITY);
                }
                s += a.weight * y;
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    Ok(Energy::from_sum(&parts))
}

fn finite(e: Energy, what: &str) -> Result<f64> {
    match e {
        Energy::Finite(v) => Ok(v),
        Energy::Infinite => Err(Error::Evaluation(format!("{what} is infinite"))),
    }
}

/// `max_cell |η(cell) - vol(cell)/|N||`.
pub fn marginal_residual(eta: &AtomicYoungMeasure) -> Result<f64> {
    let mesh = eta.mesh.as_ref().ok_or_else(|| Error::Argument("measure carries no mesh".into()))?;
    let total = mesh.total_volume();
    let mut mass = vec![0.0; mesh.num_cells()];
    for g in eta.sorted_cells() {
        mass[g[0].cell] = g.iter().fold(0.0, |s, a| s + a.weight);
    }
    Ok(mass
        .iter()
        .enumerate()
        .map(|(c, m)| (m - mesh.cell_volume(c) / total).abs())
        .fold(0.0, f64::max))
}

/// `|∫ F dη|` for a null Lagrangian `F`.
pub fn closedness_residual(eta: &AtomicYoungMeasure, f: &NullLagrangianSpec) -> Result<f64> {
    Ok(finite(integrate(eta, f)?, "null Lagrangian integral")?.abs())
}

/// `| |N| ∫ (dχ_x∘v·U + χ(x) div U) dη - ∫ (dχ_{u₀}∘du₀·U + χ(u₀) div U) dt |`
/// for a scalar `χ` and an unrestricted vector field `U`.
pub fn anchoring_residual<S: JetSource + ?Sized>(
    eta: &AtomicYoungMeasure,
    u0: &S,
    chi: &FormField,
    field: &LVectorField,
    q: &QuadratureRule,
) -> Result<f64> {
    if chi.degree() != 0 || field.degree() != 1 {
        return arg("anchoring needs a scalar χ and a vector field U");
    }
    let spec = NullLagrangianSpec::new(1, chi.clone(), field.clone())?;
    let total = u0.mesh().total_volume();
    let lhs = finite(integrate(eta, &spec)?, "anchoring integral")? * total;
    let rhs = finite(crate::meshmaps::integrate_energy(u0, &spec, q)?, "anchoring integral")?;
    Ok((lhs - rhs).abs())
}

/// `R ↦ sup_η ∫_{J¹ ∖ Z(R)} r_k dη` with
/// `Z(R) = {|x - x₀| ≤ R, ‖v‖ ≤ R}`.
pub fn tightness_profile(family: &[AtomicYoungMeasure], radii: &[f64], x0: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0f64; radii.len()];
    for eta in family {
        if x0.len() != eta.target_dim {
            return arg("base point has the wrong dimension");
        }
        let mut atoms: Vec<&JetAtom> = eta.atoms.iter().collect();
        atoms.sort_by(|a, b| canonical_cmp(a, b));
        let data: Vec<(f64, f64, f64)> = atoms
            .iter()
            .map(|a| {
                let dx = a.x.iter().zip(x0).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
                (dx, a.v.norm(), a.weight * r_k(&a.v, eta.degree))
            })
            .collect();
        for (o, &r) in out.iter_mut().zip(radii) {
            // Sequential sums of non-negative terms, so monotone in R.
            let tail = data.iter().filter(|d| d.0 > r || d.1 > r).fold(0.0, |s, d| s + d.2);
            *o = o.max(tail);
        }
    }
    Ok(out)
}
