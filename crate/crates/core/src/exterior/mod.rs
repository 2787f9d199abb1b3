//! Exterior algebra in small dimension.
//!
//! Index subsets are zero-based and ordered lexicographically; every wedge
//! object in the crate uses this basis.

mod det;
mod minors;
mod subset;
mod wedge;

use nalgebra::DMatrix;

pub use det::determinant;
pub use minors::{lift_minors, minor_pullback, minor_tuple, MinorMatrix, MAX_MAP_DIM};
pub(crate) use minors::lift_minors_unchecked;
pub(crate) use subset::{combos, merge_sign, rank_of_mask};
pub use subset::{basis_subsets, binomial, sigma_sign, IndexSubset, MAX_WEDGE_DIM};
pub use wedge::{interior_product, wedge_inner, WedgeForm, WedgeVector};

/// Both sides of the graph identity
///
/// `((i_U Ω) ∧ χ) ∘ ∧_n(Id ⊕ a) · λ = (-1)^{k(n-k)} χ ∘ ∧_k a · U`
///
/// for `a: E → F` given as an `m × n` matrix, `U` a `k`-vector on `E`, `χ` a
/// `k`-form on `F`, `Ω` the standard volume form and `λ = e_1 ∧ … ∧ e_n`.
/// The left side is evaluated in `E ⊕ F` (indices `0..n` then `n..n+m`).
pub fn graph_identity_sides(a: &DMatrix<f64>, u: &WedgeVector, chi: &WedgeForm) -> crate::Result<(f64, f64)> {
    let (m, n) = a.shape();
    if n > MAX_MAP_DIM || m > MAX_MAP_DIM {
        return crate::error::arg("map dimensions exceed the supported maximum");
    }
    if u.ambient_dim() != n || chi.ambient_dim() != m || u.degree() != chi.degree() {
        return crate::error::arg("graph identity operands have inconsistent shapes");
    }
    let k = u.degree();
    if k > n.min(m) {
        return crate::error::arg("degree exceeds min(n, m)");
    }

    let omega = WedgeForm::volume(n)?;
    let contracted = interior_product(u, &omega)?.embed(0, n + m)?;
    let big_form = contracted.wedge(&chi.embed(n, n + m)?)?;
    // ∧_n(Id ⊕ a) λ is the wedge of the columns of the stacked matrix [Id; a].
    let graph = DMatrix::from_fn(n + m, n, |i, j| if i < n { if i == j { 1.0 } else { 0.0 } } else { a[(i - n, j)] });
    let lam = lift_minors_unchecked(&graph, n).apply(&WedgeVector::unit_volume(n)?)?;
    let lhs = big_form.pair(&lam)?;

    let sign = if (k * (n - k)) % 2 == 0 { 1.0 } else { -1.0 };
    let rhs = sign * chi.pair(&lift_minors_unchecked(a, k).apply(u)?)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_map_gives_zero() {
        let a = DMatrix::zeros(3, 3);
        let u = WedgeVector::from_coords(3, 2, vec![1.0, -2.0, 0.5]).unwrap();
        let chi = WedgeForm::from_coords(3, 2, vec![0.3, 1.0, 2.0]).unwrap();
        assert_eq!(graph_identity_sides(&a, &u, &chi).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn planar_case_is_det() {
        let a = DMatrix::from_row_slice(2, 2, &[1.3, -0.4, 2.2, 0.7]);
        let u = WedgeVector::unit_volume(2).unwrap();
        let chi = WedgeForm::volume(2).unwrap();
        let (lhs, rhs) = graph_identity_sides(&a, &u, &chi).unwrap();
        let det = 1.3 * 0.7 + 0.4 * 2.2;
        assert!((lhs - det).abs() < 1e-14);
        assert!((rhs - det).abs() < 1e-14);
    }

    #[test]
    fn shape_errors() {
        let a = DMatrix::zeros(2, 3);
        let u = WedgeVector::zeros(2, 1).unwrap();
        let chi = WedgeForm::zeros(2, 1).unwrap();
        assert!(graph_identity_sides(&a, &u, &chi).is_err());
    }
}
