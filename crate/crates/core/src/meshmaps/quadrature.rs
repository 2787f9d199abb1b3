use crate::error::{arg, Result};

/// Quadrature on the reference simplex in barycentric coordinates.
///
/// Weights are positive and sum to the reference volume `1/n!`; the rule
/// integrates polynomials of total degree up to `order` exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    dim: usize,
    order: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// A positive rule on the `dim`-simplex that is exact to at least `order`.
    ///
    /// Triangles use symmetric rules through order 6, tetrahedra through
    /// order 2; higher orders fall back to collapsed Gauss–Legendre products.
    pub fn new(dim: usize, order: usize) -> Result<Self> {
        match (dim, order) {
            (2, 0..=1) => Ok(Self::symmetric(2, 1, &[(1.0 / 3.0, 0.0, 1.0)], &[])),
            (2, 2) => Ok(Self::symmetric(2, 2, &[(1.0 / 6.0, 0.0, 1.0 / 3.0)], &[])),
            (2, 3..=4) => Ok(Self::symmetric(
                2,
                4,
                &[(0.445948490915965, 0.0, 0.223381589678011), (0.091576213509771, 0.0, 0.109951743655322)],
                &[],
            )),
            (2, 5..=6) => Ok(Self::symmetric(
                2,
                6,
                &[(0.249286745170910, 0.0, 0.116786275726379), (0.063089014491502, 0.0, 0.050844906370207)],
                &[(0.053145049844817, 0.310352451033784, 0.082851075618374)],
            )),
            (3, 0..=1) => Ok(Self {
                dim: 3,
                order: 1,
                points: vec![vec![0.25; 4]],
                weights: vec![1.0 / 6.0],
            }),
            (3, 2) => {
                let (a, b) = (0.585_410_196_624_968_5, 0.138_196_601_125_010_5);
                let points = (0..4).map(|i| (0..4).map(|j| if i == j { a } else { b }).collect()).collect();
                Ok(Self { dim: 3, order: 2, points, weights: vec![1.0 / 24.0; 4] })
            }
            (2 | 3, _) => Ok(Self::collapsed(dim, order)),
            _ => arg(format!("no quadrature for dimension {dim}")),
        }
    }

    /// Symmetric order-4 rule on triangles, order-3 on tetrahedra.
    pub fn default_for(dim: usize) -> Result<Self> {
        Self::new(dim, if dim == 2 { 4 } else { 3 })
    }

    // Triangle rule from orbits. `(a, _, w)` is the 3-point orbit of
    // (a, a, 1-2a); `(a, b, w)` in `six` is the 6-point orbit of (a, b, 1-a-b).
    // Weights are given normalized to unit area.
    fn symmetric(dim: usize, order: usize, three: &[(f64, f64, f64)], six: &[(f64, f64, f64)]) -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for &(a, _, w) in three {
            if (a - 1.0 / 3.0).abs() < 1e-15 {
                points.push(vec![a, a, a]);
                weights.push(w * 0.5);
                continue;
            }
            let c = 1.0 - 2.0 * a;
            for p in [[a, a, c], [a, c, a], [c, a, a]] {
                points.push(p.to_vec());
                weights.push(w * 0.5);
            }
        }
        for &(a, b, w) in six {
            let c = 1.0 - a - b;
            for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
                points.push(p.to_vec());
                weights.push(w * 0.5);
            }
        }
        Self { dim, order, points, weights }
    }

    /// Conical product (Duffy-collapsed Gauss–Legendre) rule.
    fn collapsed(dim: usize, order: usize) -> Self {
        // Jacobian adds dim-1 degrees in the first variable.
        let q = (order + dim).div_ceil(2);
        let (x, w) = gauss_legendre_unit(q);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        if dim == 2 {
            for i in 0..q {
                for j in 0..q {
                    let (u, v) = (x[i], x[j]);
                    let (px, py) = (u, (1.0 - u) * v);
                    points.push(vec![1.0 - px - py, px, py]);
                    weights.push(w[i] * w[j] * (1.0 - u));
                }
            }
        } else {
            for i in 0..q {
                for j in 0..q {
                    for k in 0..q {
                        let (u, v, s) = (x[i], x[j], x[k]);
                        let px = u;
                        let py = (1.0 - u) * v;
                        let pz = (1.0 - u) * (1.0 - v) * s;
                        points.push(vec![1.0 - px - py - pz, px, py, pz]);
                        weights.push(w[i] * w[j] * w[k] * (1.0 - u).powi(2) * (1.0 - v));
                    }
                }
            }
        }
        Self { dim, order, points, weights }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weights rescaled to sum to one, so `cell_volume × w` is the physical weight.
    pub fn unit_weights(&self) -> Vec<f64> {
        let factorial = if self.dim == 2 { 2.0 } else { 6.0 };
        self.weights.iter().map(|w| w * factorial).collect()
    }
}

/// Gauss–Legendre nodes and weights on [0, 1].
pub(crate) fn gauss_legendre_unit(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(q);
    let mut weights = Vec::with_capacity(q);
    for i in 0..q {
        // Chebyshev-like initial guess, then Newton on P_q.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=q {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if q == 0 { 1.0 } else if q == 1 { x } else { p1 };
            let pm1 = if q == 1 { 1.0 } else { p0 };
            dp = q as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}
