use nalgebra::DMatrix;
use rayon::prelude::*;

use super::map::JetSource;
use super::quadrature::QuadratureRule;
use crate::error::{arg, Error, Result};
use crate::exterior::determinant;
use crate::nulllag::{FormField, LVectorField, NullLagrangianSpec};
use crate::reduce::pairwise_sum;

/// A scalar function on jets `(t, x, v)` with values in `ℝ ∪ {+∞}`.
pub trait JetFunction: Sync {
    fn eval_jet(&self, t: &[f64], x: &[f64], v: &DMatrix<f64>) -> f64;
}

impl<F> JetFunction for F
where
    F: Fn(&[f64], &[f64], &DMatrix<f64>) -> f64 + Sync,
{
    fn eval_jet(&self, t: &[f64], x: &[f64], v: &DMatrix<f64>) -> f64 {
        self(t, x, v)
    }
}

/// Result of integrating an extended-real integrand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Energy {
    Finite(f64),
    Infinite,
}

impl Energy {
    pub fn is_finite(&self) -> bool {
        matches!(self, Energy::Finite(_))
    }

    pub fn value(&self) -> f64 {
        match self {
            Energy::Finite(v) => *v,
            Energy::Infinite => f64::INFINITY,
        }
    }

    pub(crate) fn from_sum(parts: &[f64]) -> Energy {
        if parts.contains(&f64::INFINITY) {
            Energy::Infinite
        } else {
            Energy::Finite(pairwise_sum(parts))
        }
    }
}

/// Checked evaluation that maps NaN and `-∞` to an evaluation error.
pub(crate) fn checked_eval(l: &dyn JetFunction, t: &[f64], x: &[f64], v: &DMatrix<f64>) -> Result<f64> {
    let y = l.eval_jet(t, x, v);
    if y.is_nan() || y == f64::NEG_INFINITY {
        return Err(Error::Evaluation(format!("integrand returned {y} at t = {t:?}")));
    }
    Ok(y)
}

fn cell_energy<S: JetSource + ?Sized>(u: &S, l: &dyn JetFunction, q: &QuadratureRule, cell: usize) -> Result<f64> {
    let mesh = u.mesh();
    let vol = mesh.cell_volume(cell);
    let mut acc = 0.0;
    for (bary, w) in q.points().iter().zip(q.unit_weights()) {
        let t = mesh.point(cell, bary);
        let (x, v) = u.jet(cell, bary, &t)?;
        let y = checked_eval(l, &t, &x, &v)?;
        if y == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        acc += w * y;
    }
    Ok(vol * acc)
}

/// Per-cell contributions `vol · Σ w L(t, u(t), du)`, in cell order.
pub fn cell_energies<S: JetSource + ?Sized>(u: &S, l: &dyn JetFunction, q: &QuadratureRule) -> Result<Vec<f64>> {
    if q.dim() != u.mesh().dim() {
        return arg("quadrature rule dimension does not match the mesh");
    }
    (0..u.mesh().num_cells()).into_par_iter().map(|c| cell_energy(u, l, q, c)).collect()
}

/// `∫_N L(t, u(t), du(t)) dt` by quadrature, summed as a fixed pairwise tree
/// over cell indices.
pub fn integrate_energy<S: JetSource + ?Sized>(u: &S, l: &dyn JetFunction, q: &QuadratureRule) -> Result<Energy> {
    Ok(Energy::from_sum(&cell_energies(u, l, q)?))
}

/// Exact `∫ det du` for a planar piecewise-affine map.
pub fn exact_det_integral(u: &super::PwAffineMap) -> Result<f64> {
    let mesh = u.mesh_arc();
    if mesh.dim() != 2 || u.target_dim() != 2 {
        return arg("degree integral needs n = m = 2");
    }
    let parts: Vec<f64> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| determinant(&u.cell_gradient(c)) * mesh.cell_volume(c))
        .collect();
    Ok(pairwise_sum(&parts))
}

/// Weak-formulation residual of the degree-`l` minors of `u` against the
/// test pair `(χ, U)`:
/// `∫ dχ_u ∘ ∧_l du · U + χ_u ∘ ∧_{l-1} du · U̇`.
///
/// `U` must vanish at every boundary node of the mesh.
pub fn weak_minor_residual<S: JetSource + ?Sized>(
    u: &S,
    l: usize,
    chi: &FormField,
    field: &LVectorField,
    q: &QuadratureRule,
) -> Result<f64> {
    let mesh = u.mesh();
    let (n, m) = (mesh.dim(), u.target_dim());
    if l == 0 || l > n.min(m) {
        return arg(format!("minor degree {l} outside 1..={}", n.min(m)));
    }
    if field.domain_dim() != n || chi.target_dim() != m {
        return arg("test pair dimensions do not match the map");
    }
    for &b in mesh.boundary_nodes() {
        if field.value(mesh.vertex(b)).iter().any(|c| *c != 0.0) {
            return arg("test field does not vanish on the boundary");
        }
    }
    let spec = NullLagrangianSpec::new(l, chi.clone(), field.clone())?;
    match integrate_energy(u, &spec, q)? {
        Energy::Finite(v) => Ok(v),
        Energy::Infinite => Err(Error::Evaluation("test integrand is infinite".into())),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::super::mesh::{build_annulus_mesh, build_box_mesh, build_disc_mesh};
    use super::super::{interpolate, AnalyticMap};
    use super::*;
    use crate::exterior::WedgeVector;

    fn frob_sq(_: &[f64], _: &[f64], v: &DMatrix<f64>) -> f64 {
        v.norm_squared()
    }

    #[test]
    fn dirichlet_energy_of_identity() {
        let mesh = Arc::new(build_box_mesh(2, 4).unwrap());
        let u = interpolate(|t| t.to_vec(), mesh, 2).unwrap();
        let e = integrate_energy(&u, &frob_sq, &QuadratureRule::default_for(2).unwrap()).unwrap();
        assert!((e.value() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn det_squared_of_identity_is_polygon_area() {
        let mesh = Arc::new(build_disc_mesh(0.1).unwrap());
        let area = mesh.total_volume();
        let u = interpolate(|t| t.to_vec(), mesh, 2).unwrap();
        let l = |_: &[f64], _: &[f64], v: &DMatrix<f64>| determinant(v).powi(2);
        let e = integrate_energy(&u, &l, &QuadratureRule::default_for(2).unwrap()).unwrap();
        assert!((e.value() - area).abs() < 1e-12);
        assert!((exact_det_integral(&u).unwrap() - area).abs() < 1e-12);
    }

    #[test]
    fn annulus_radial_energy() {
        // 2π ∫_δ^1 r^{1-p} dr with p = 3/2.
        let (p, delta) = (1.5f64, 0.1f64);
        let exact = 2.0 * std::f64::consts::PI * (1.0 - delta.powf(2.0 - p)) / (2.0 - p);
        let l = move |_: &[f64], _: &[f64], v: &DMatrix<f64>| v.norm().powf(p);
        let q = QuadratureRule::new(2, 6).unwrap();
        let mut errs = Vec::new();
        for h in [0.04, 0.02] {
            let mesh = Arc::new(build_annulus_mesh(delta, h).unwrap());
            let v = AnalyticMap::new(
                mesh,
                2,
                |t| { let r = t[0].hypot(t[1]); vec![t[0] / r, t[1] / r] },
                |t| {
                    let r = t[0].hypot(t[1]);
                    let r3 = r * r * r;
                    DMatrix::from_row_slice(2, 2, &[t[1] * t[1] / r3, -t[0] * t[1] / r3, -t[0] * t[1] / r3, t[0] * t[0] / r3])
                },
            );
            errs.push((integrate_energy(&v, &l, &q).unwrap().value() - exact).abs());
        }
        assert!(errs[1] < 0.02 && errs[1] < errs[0], "{errs:?}");
        assert!((exact - 8.592).abs() < 1e-3);
    }

    #[test]
    fn infinity_and_nan() {
        let mesh = Arc::new(build_box_mesh(2, 2).unwrap());
        let u = interpolate(|t| t.to_vec(), mesh, 2).unwrap();
        let q = QuadratureRule::default_for(2).unwrap();
        let inf = |t: &[f64], _: &[f64], _: &DMatrix<f64>| if t[0] > 0.9 { f64::INFINITY } else { 0.0 };
        assert_eq!(integrate_energy(&u, &inf, &q).unwrap(), Energy::Infinite);
        let nan = |_: &[f64], _: &[f64], _: &DMatrix<f64>| f64::NAN;
        assert!(matches!(integrate_energy(&u, &nan, &q), Err(Error::Evaluation(_))));
    }

    #[test]
    fn energy_is_sum_of_cell_contributions() {
        let mesh = Arc::new(build_disc_mesh(0.15).unwrap());
        let u = interpolate(|t| vec![t[0] * t[1], t[0] - t[1] * t[1]], mesh.clone(), 2).unwrap();
        let q = QuadratureRule::default_for(2).unwrap();
        let parts = cell_energies(&u, &frob_sq, &q).unwrap();
        let total = integrate_energy(&u, &frob_sq, &q).unwrap().value();
        assert_eq!(total, pairwise_sum(&parts));
        let split = mesh.num_cells() / 3;
        let halves = pairwise_sum(&parts[..split]) + pairwise_sum(&parts[split..]);
        assert!((halves - total).abs() <= 1e-14 * total.abs());
        let again = integrate_energy(&u, &frob_sq, &q).unwrap().value();
        assert_eq!(total.to_bits(), again.to_bits());
    }

    #[test]
    fn degree_integral_depends_on_trace_only() {
        let mesh = Arc::new(build_disc_mesh(0.1).unwrap());
        let area = mesh.total_volume();
        let u = interpolate(
            |t| { let s = 1.0 - t[0] * t[0] - t[1] * t[1]; vec![t[0] + 0.4 * s * t[1], t[1] + s * s * (3.0 * t[0]).sin()] },
            mesh,
            2,
        )
        .unwrap();
        assert!((exact_det_integral(&u).unwrap() - area).abs() < 1e-10);
    }

    #[test]
    fn weak_residual_of_constant_map() {
        let mesh = Arc::new(build_box_mesh(2, 8).unwrap());
        let u = interpolate(|_| vec![0.3, -0.2], mesh, 2).unwrap();
        let w = WedgeVector::from_coords(2, 1, vec![0.7, -1.1]).unwrap();
        let field = LVectorField::bump(&[0.5, 0.5], 0.35, w).unwrap();
        let chi = FormField::trig(2, 0, &[(1.3, vec![0.4, -0.9], 0.2)]).unwrap();
        let q = QuadratureRule::new(2, 6).unwrap();
        let r = weak_minor_residual(&u, 1, &chi, &field, &q).unwrap();
        assert!(r.abs() < 1e-6, "{r}");
        assert!(weak_minor_residual(&u, 3, &chi, &field, &q).is_err());
    }
}
