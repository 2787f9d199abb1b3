use nalgebra::DMatrix;

use super::det::sub_det;
use super::subset::{binomial, combos, merge_sign, rank_of_mask, IndexSubset, MAX_WEDGE_DIM};
use crate::error::{arg, Result};

/// Coordinates of a degree-`l` element of `∧_l ℝⁿ` (or its dual) in the
/// lexicographic basis.
#[derive(Clone, Debug, PartialEq)]
struct Coords {
    degree: usize,
    dim: usize,
    coords: Vec<f64>,
}

impl Coords {
    fn zeros(dim: usize, degree: usize) -> Result<Self> {
        if dim > MAX_WEDGE_DIM || degree > dim {
            return arg(format!("no wedge space of degree {degree} over dimension {dim}"));
        }
        Ok(Self { degree, dim, coords: vec![0.0; binomial(dim, degree)] })
    }

    fn from_coords(dim: usize, degree: usize, coords: Vec<f64>) -> Result<Self> {
        let z = Self::zeros(dim, degree)?;
        if coords.len() != z.coords.len() {
            return arg(format!(
                "degree-{degree} coordinates over dimension {dim} need {} entries, got {}",
                z.coords.len(),
                coords.len()
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return arg("non-finite wedge coordinate");
        }
        Ok(Self { coords, ..z })
    }

    fn basis(s: &IndexSubset) -> Self {
        let mut z = Self::zeros(s.ambient_dim(), s.len()).expect("subset is valid");
        z.coords[s.rank()] = 1.0;
        z
    }

    fn wedge(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return arg(format!("wedge of dimensions {} and {}", self.dim, other.dim));
        }
        let n = self.dim;
        let mut out = Self::zeros(n, self.degree + other.degree)?;
        let ca = combos(n, self.degree);
        let cb = combos(n, other.degree);
        for (i, &a) in self.coords.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let ma = ca.mask(i);
            for (j, &b) in other.coords.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                let mb = cb.mask(j);
                if ma & mb != 0 {
                    continue;
                }
                out.coords[rank_of_mask(ma | mb, n)] += merge_sign(ma, mb) * a * b;
            }
        }
        Ok(out)
    }

    fn dot(&self, other: &Self) -> Result<f64> {
        if self.dim != other.dim || self.degree != other.degree {
            return arg(format!(
                "pairing of degree {} / dim {} with degree {} / dim {}",
                self.degree, self.dim, other.degree, other.dim
            ));
        }
        Ok(self.coords.iter().zip(&other.coords).map(|(a, b)| a * b).sum())
    }

    /// Re-index into a larger space, sending basis index `i` to `i + offset`.
    fn embed(&self, offset: usize, dim: usize) -> Result<Self> {
        if offset + self.dim > dim {
            return arg(format!("cannot embed dimension {} at offset {offset} into {dim}", self.dim));
        }
        let mut out = Self::zeros(dim, self.degree)?;
        let c = combos(self.dim, self.degree);
        for (i, &a) in self.coords.iter().enumerate() {
            out.coords[rank_of_mask(c.mask(i) << offset, dim)] = a;
        }
        Ok(out)
    }
}

macro_rules! wedge_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name(Coords);

        impl $name {
            pub fn zeros(ambient_dim: usize, degree: usize) -> Result<Self> {
                Coords::zeros(ambient_dim, degree).map(Self)
            }

            pub fn from_coords(ambient_dim: usize, degree: usize, coords: Vec<f64>) -> Result<Self> {
                Coords::from_coords(ambient_dim, degree, coords).map(Self)
            }

            /// The basis element indexed by `subset`.
            pub fn basis(subset: &IndexSubset) -> Self {
                Self(Coords::basis(subset))
            }

            /// Degree-zero element with value `c`.
            pub fn scalar(ambient_dim: usize, c: f64) -> Result<Self> {
                Coords::from_coords(ambient_dim, 0, vec![c]).map(Self)
            }

            pub fn degree(&self) -> usize {
                self.0.degree
            }

            pub fn ambient_dim(&self) -> usize {
                self.0.dim
            }

            pub fn coords(&self) -> &[f64] {
                &self.0.coords
            }

            pub fn coords_mut(&mut self) -> &mut [f64] {
                &mut self.0.coords
            }

            pub fn into_coords(self) -> Vec<f64> {
                self.0.coords
            }

            pub fn wedge(&self, other: &Self) -> Result<Self> {
                self.0.wedge(&other.0).map(Self)
            }

            /// Coordinate inner product.
            pub fn dot(&self, other: &Self) -> Result<f64> {
                self.0.dot(&other.0)
            }

            pub fn embed(&self, offset: usize, ambient_dim: usize) -> Result<Self> {
                self.0.embed(offset, ambient_dim).map(Self)
            }

            pub fn scale(&self, c: f64) -> Self {
                let mut out = self.clone();
                out.0.coords.iter_mut().for_each(|x| *x *= c);
                out
            }

            pub fn add(&self, other: &Self) -> Result<Self> {
                if self.0.dim != other.0.dim || self.0.degree != other.0.degree {
                    return arg("adding wedge elements of different shape");
                }
                let mut out = self.clone();
                out.0.coords.iter_mut().zip(&other.0.coords).for_each(|(a, b)| *a += b);
                Ok(out)
            }
        }
    };
}

wedge_type!(
    /// An `l`-vector.
    WedgeVector
);
wedge_type!(
    /// An alternating `l`-form, in the basis dual to [`WedgeVector`]'s:
    /// `e*_I · e_J = δ_IJ`.
    WedgeForm
);

impl WedgeVector {
    /// `v₁ ∧ … ∧ v_l` for vectors of a common dimension `n`.
    pub fn from_vectors(vs: &[Vec<f64>], ambient_dim: usize) -> Result<Self> {
        if vs.iter().any(|v| v.len() != ambient_dim) {
            return arg("vectors must all have the ambient dimension");
        }
        let l = vs.len();
        let mut out = Self::zeros(ambient_dim, l)?;
        let cols = DMatrix::from_fn(ambient_dim, l, |i, j| vs[j][i]);
        let all: Vec<usize> = (0..l).collect();
        let c = combos(ambient_dim, l);
        for i in 0..c.count {
            out.0.coords[i] = sub_det(&cols, c.get(i), &all);
        }
        Ok(out)
    }

    /// `e_1 ∧ … ∧ e_n`.
    pub fn unit_volume(ambient_dim: usize) -> Result<Self> {
        let mut v = Self::zeros(ambient_dim, ambient_dim)?;
        v.0.coords[0] = 1.0;
        Ok(v)
    }
}

impl WedgeForm {
    /// Evaluate the form on an `l`-vector of the same degree.
    pub fn pair(&self, v: &WedgeVector) -> Result<f64> {
        self.0.dot(&v.0)
    }

    /// The standard volume form `e*_1 ∧ … ∧ e*_n`.
    pub fn volume(ambient_dim: usize) -> Result<Self> {
        let mut w = Self::zeros(ambient_dim, ambient_dim)?;
        w.0.coords[0] = 1.0;
        Ok(w)
    }
}

/// Interior product `i_U ω`, defined by `(i_U ω) · v = ω · (U ∧ v)`.
pub fn interior_product(u: &WedgeVector, omega: &WedgeForm) -> Result<WedgeForm> {
    let n = u.ambient_dim();
    if omega.ambient_dim() != n {
        return arg("interior product across different ambient dimensions");
    }
    let (l, k) = (u.degree(), omega.degree());
    if l > k {
        return arg(format!("cannot contract a {l}-vector into a {k}-form"));
    }
    let mut out = WedgeForm::zeros(n, k - l)?;
    let cu = combos(n, l);
    let cr = combos(n, k - l);
    for (i, &ui) in u.coords().iter().enumerate() {
        if ui == 0.0 {
            continue;
        }
        let mi = cu.mask(i);
        for r in 0..cr.count {
            let mr = cr.mask(r);
            if mi & mr != 0 {
                continue;
            }
            let w = omega.coords()[rank_of_mask(mi | mr, n)];
            out.coords_mut()[r] += merge_sign(mi, mr) * ui * w;
        }
    }
    Ok(out)
}

/// `⟨v₁ ∧ … ∧ v_l, w₁ ∧ … ∧ w_l⟩ = det G` with `G_ij = ⟨v_i, w_j⟩`.
pub fn wedge_inner(vs: &[Vec<f64>], ws: &[Vec<f64>]) -> Result<f64> {
    if vs.len() != ws.len() {
        return arg(format!("wedge_inner of {} and {} vectors", vs.len(), ws.len()));
    }
    let l = vs.len();
    if l == 0 {
        return Ok(1.0);
    }
    let n = vs[0].len();
    if vs.iter().chain(ws).any(|v| v.len() != n) {
        return arg("wedge_inner vectors have mismatched dimensions");
    }
    if l > MAX_WEDGE_DIM {
        return arg("too many vectors");
    }
    let gram: Vec<Vec<f64>> = (0..l)
        .map(|i| (0..l).map(|j| vs[i].iter().zip(&ws[j]).map(|(a, b)| a * b).sum()).collect())
        .collect();
    // Evaluate on a canonical row order so that swapping two vectors flips
    // the sign bit and nothing else.
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| {
        gram[a].iter().zip(&gram[b]).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    let sorted = DMatrix::from_fn(l, l, |i, j| gram[order[i]][j]);
    Ok(permutation_sign(&order) * super::det::determinant(&sorted))
}

fn permutation_sign(p: &[usize]) -> f64 {
    let mut seen = vec![false; p.len()];
    let mut sign = 1.0;
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = p[i];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}
