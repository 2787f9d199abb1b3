use nalgebra::DMatrix;

use super::det::sub_det;
use super::subset::{binomial, combos, IndexSubset, MAX_WEDGE_DIM};
use super::wedge::WedgeVector;
use crate::error::{arg, Result};

/// Largest source or target dimension of a linear map.
pub const MAX_MAP_DIM: usize = 8;

/// The `l`-adjoint `∧_l a` of a linear map `a: ℝⁿ → ℝᵐ`.
///
/// `entries` is the `C(m,l) × C(n,l)` matrix of `∧_l a` acting on column
/// coordinate vectors, so column `I` holds `a(e_{i₁}) ∧ … ∧ a(e_{i_l})`. For
/// `l = 1` this is the matrix of `a` itself.
#[derive(Clone, Debug, PartialEq)]
pub struct MinorMatrix {
    source_dim: usize,
    target_dim: usize,
    degree: usize,
    entries: DMatrix<f64>,
}

impl MinorMatrix {
    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    /// Entry for source subset `source` and target subset `target`: the
    /// minor of `a` with rows `target` and columns `source`.
    pub fn entry(&self, source: &IndexSubset, target: &IndexSubset) -> f64 {
        self.entries[(target.rank(), source.rank())]
    }

    pub fn apply(&self, v: &WedgeVector) -> Result<WedgeVector> {
        if v.ambient_dim() != self.source_dim || v.degree() != self.degree {
            return arg("minor matrix applied to a wedge vector of the wrong shape");
        }
        let x = nalgebra::DVector::from_column_slice(v.coords());
        let y = &self.entries * x;
        WedgeVector::from_coords(self.target_dim, self.degree, y.as_slice().to_vec())
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose(&self, first: &MinorMatrix) -> Result<MinorMatrix> {
        if first.target_dim != self.source_dim || first.degree != self.degree {
            return arg("incompatible minor matrices in composition");
        }
        Ok(MinorMatrix {
            source_dim: first.source_dim,
            target_dim: self.target_dim,
            degree: self.degree,
            entries: &self.entries * &first.entries,
        })
    }

    /// Frobenius norm of the coordinate matrix.
    pub fn norm(&self) -> f64 {
        self.entries.norm()
    }
}

/// `∧_l a` for `1 ≤ l ≤ min(n, m)` and `n, m ≤ 8`.
pub fn lift_minors(a: &DMatrix<f64>, l: usize) -> Result<MinorMatrix> {
    let (m, n) = a.shape();
    if n > MAX_MAP_DIM || m > MAX_MAP_DIM {
        return arg(format!("map dimensions {m}×{n} exceed {MAX_MAP_DIM}"));
    }
    if l == 0 || l > n.min(m) {
        return arg(format!("degree {l} outside 1..={}", n.min(m)));
    }
    Ok(lift_minors_unchecked(a, l))
}

/// Like [`lift_minors`] but accepting `l = 0` (the 1×1 matrix `[1]`) and
/// ambient dimensions up to 16.
pub(crate) fn lift_minors_unchecked(a: &DMatrix<f64>, l: usize) -> MinorMatrix {
    let (m, n) = a.shape();
    assert!(n <= MAX_WEDGE_DIM && m <= MAX_WEDGE_DIM && l <= n.min(m));
    let rows = combos(m, l);
    let cols = combos(n, l);
    let entries = if l == 1 {
        a.clone()
    } else {
        DMatrix::from_fn(binomial(m, l), binomial(n, l), |j, i| sub_det(a, rows.get(j), cols.get(i)))
    };
    MinorMatrix { source_dim: n, target_dim: m, degree: l, entries }
}

/// Tuple `(∧₁ v, …, ∧_k v)` of coordinate matrices.
pub fn minor_tuple(v: &DMatrix<f64>, k: usize) -> Vec<DMatrix<f64>> {
    (1..=k).map(|l| lift_minors_unchecked(v, l).into_entries()).collect()
}

/// Contract a cotangent `dm` to `∧_l v` back to a cotangent to `v`:
/// returns `Σ_{J,I} dm[J,I] · ∂(∧_l v)[J,I] / ∂v`.
pub fn minor_pullback(v: &DMatrix<f64>, l: usize, dm: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = v.shape();
    if l == 1 {
        return dm.clone();
    }
    let lower = lift_minors_unchecked(v, l - 1);
    let rows = combos(m, l);
    let cols = combos(n, l);
    let rows_lo = combos(m, l - 1);
    let cols_lo = combos(n, l - 1);
    let mut out = DMatrix::zeros(m, n);
    for j in 0..rows.count {
        let rj = rows.get(j);
        for i in 0..cols.count {
            let w = dm[(j, i)];
            if w == 0.0 {
                continue;
            }
            let ci = cols.get(i);
            // Laplace expansion: ∂det / ∂v[rj[p], ci[q]] = (-1)^{p+q} · minor without row p, column q.
            for (p, &a) in rj.iter().enumerate() {
                let mrow = rows.mask(j) & !(1 << a);
                let jr = super::subset::rank_of_mask(mrow, m);
                debug_assert_eq!(rows_lo.mask(jr), mrow);
                for (q, &b) in ci.iter().enumerate() {
                    let mcol = cols.mask(i) & !(1 << b);
                    let ic = super::subset::rank_of_mask(mcol, n);
                    debug_assert_eq!(cols_lo.mask(ic), mcol);
                    let s = if (p + q) % 2 == 0 { 1.0 } else { -1.0 };
                    out[(a, b)] += w * s * lower.entries()[(jr, ic)];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::subset::basis_subsets;

    #[test]
    fn identity_lifts_to_identity() {
        for n in 1..=5 {
            for l in 1..=n {
                let m = lift_minors(&DMatrix::identity(n, n), l).unwrap();
                assert_eq!(m.entries(), &DMatrix::identity(binomial(n, l), binomial(n, l)));
            }
        }
    }

    #[test]
    fn diag_two_three() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 3.0]));
        let m = lift_minors(&a, 2).unwrap();
        assert_eq!(m.entries().shape(), (1, 1));
        assert_eq!(m.entries()[(0, 0)], 6.0);
    }

    #[test]
    fn degree_one_is_the_map() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(lift_minors(&a, 1).unwrap().entries(), &a);
    }

    #[test]
    fn out_of_range_degree() {
        let a = DMatrix::<f64>::zeros(3, 2);
        assert!(lift_minors(&a, 0).is_err());
        assert!(lift_minors(&a, 3).is_err());
        assert!(lift_minors(&DMatrix::zeros(9, 9), 1).is_err());
    }

    #[test]
    fn columns_are_wedges_of_images() {
        let a = DMatrix::from_row_slice(4, 3, &[1.0, 0.5, -2.0, 0.0, 3.0, 1.0, 2.0, -1.0, 0.25, 1.5, 0.0, 2.0]);
        for l in 1..=3 {
            let lifted = lift_minors(&a, l).unwrap();
            for s in basis_subsets(3, l).unwrap() {
                let images: Vec<Vec<f64>> = s.indices().iter().map(|&i| a.column(i).iter().copied().collect()).collect();
                let want = WedgeVector::from_vectors(&images, 4).unwrap();
                let got = lifted.apply(&WedgeVector::basis(&s)).unwrap();
                for (x, y) in got.coords().iter().zip(want.coords()) {
                    assert!((x - y).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn pullback_matches_finite_differences() {
        let v = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, -0.4, 0.3, 2.0, 0.1, -0.5, 0.7, 1.5]);
        for l in 1..=3 {
            let shape = lift_minors(&v, l).unwrap().entries().shape();
            let dm = DMatrix::from_fn(shape.0, shape.1, |i, j| 0.3 + i as f64 - 0.7 * j as f64);
            let g = minor_pullback(&v, l, &dm);
            let f = |w: &DMatrix<f64>| lift_minors(w, l).unwrap().entries().dot(&dm);
            let h = 1e-6;
            for a in 0..3 {
                for b in 0..3 {
                    let mut p = v.clone();
                    p[(a, b)] += h;
                    let mut q = v.clone();
                    q[(a, b)] -= h;
                    let fd = (f(&p) - f(&q)) / (2.0 * h);
                    assert!((fd - g[(a, b)]).abs() < 1e-7, "l={l} ({a},{b}): {fd} vs {}", g[(a, b)]);
                }
            }
        }
    }
}
