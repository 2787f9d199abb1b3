use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{arg, Result};
use crate::exterior::determinant;
use crate::meshmaps::{build_tensor_mesh, interpolate, PwAffineMap, QuadratureRule, SimplicialMesh};
use crate::reduce::pairwise_sum;
use crate::youngmeasure::{from_map, kr_distance, laminate, KrWeight};

const RANK_TOL: f64 = 1e-10;
const BREAK_TOL: f64 = 1e-13;

/// A rank-one pair `A - B = a ⊗ ν` in the plane with laminate weight `λ`.
///
/// Stripe maps live on the unit square in the rotated frame `(s, r)`,
/// `t = s·ν + r·ν⊥`, so their bands are aligned with mesh edges.
#[derive(Clone, Debug)]
pub struct StripePair {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    lambda: f64,
    amplitude: DVector<f64>,
    normal: [f64; 2],
}

impl StripePair {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, lambda: f64) -> Result<Self> {
        if a.shape() != (2, 2) || b.shape() != (2, 2) {
            return arg("stripe matrices must be 2×2");
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return arg(format!("λ = {lambda} outside (0, 1)"));
        }
        let diff = &a - &b;
        let scale = a.norm().max(b.norm()).max(1.0);
        let row = (0..2).max_by(|&i, &j| diff.row(i).norm().total_cmp(&diff.row(j).norm())).unwrap_or(0);
        let len = diff.row(row).norm();
        if len <= RANK_TOL * scale {
            return arg("A - B vanishes; stripes need rank(A - B) = 1");
        }
        let normal = [diff[(row, 0)] / len, diff[(row, 1)] / len];
        let nu = DVector::from_column_slice(&normal);
        let amplitude = &diff * &nu;
        let defect = (&diff - &amplitude * nu.transpose()).norm();
        if defect > RANK_TOL * scale {
            return arg(format!("rank(A - B) must be 1; rank-one defect {defect:.3e}"));
        }
        Ok(Self { a, b, lambda, amplitude, normal })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn normal(&self) -> [f64; 2] {
        self.normal
    }

    /// `λA + (1-λ)B`.
    pub fn mean(&self) -> DMatrix<f64> {
        &self.a * self.lambda + &self.b * (1.0 - self.lambda)
    }

    fn to_frame(&self, t: &[f64]) -> (f64, f64) {
        let [n0, n1] = self.normal;
        (n0 * t[0] + n1 * t[1], -n1 * t[0] + n0 * t[1])
    }

    fn from_frame(&self, s: f64, r: f64) -> Vec<f64> {
        let [n0, n1] = self.normal;
        vec![n0 * s - n1 * r, n1 * s + n0 * r]
    }

    /// `g_i(s) = (⌊is⌋λ + min({is}, λ)) / i`.
    pub fn profile(&self, i: usize, s: f64) -> f64 {
        let mut y = i as f64 * s;
        if (y - y.round()).abs() < 1e-9 {
            y = y.round();
        }
        let f = y.floor();
        let frac = y - f;
        let mut part = frac.min(self.lambda);
        if (frac - self.lambda).abs() < 1e-9 {
            part = self.lambda;
        }
        (f * self.lambda + part) / i as f64
    }

    /// Mesh of the rotated unit square with breaks at every band boundary of
    /// `u_i` plus the extra `s` and `r` breaks given.
    pub fn mesh(&self, i: usize, extra_s: &[f64], r_breaks: &[f64]) -> Result<SimplicialMesh> {
        if i == 0 {
            return arg("stripe index must be positive");
        }
        let mut s: Vec<f64> = Vec::with_capacity(2 * i + 1 + extra_s.len());
        for j in 0..=i {
            s.push(j as f64 / i as f64);
            if j < i {
                s.push((j as f64 + self.lambda) / i as f64);
            }
        }
        s.extend(extra_s.iter().copied().filter(|x| *x > 0.0 && *x < 1.0));
        s.sort_by(f64::total_cmp);
        s.dedup_by(|x, y| (*x - *y).abs() < BREAK_TOL);
        let flat = build_tensor_mesh(&s, r_breaks)?;
        flat.mapped(|p| self.from_frame(p[0], p[1]))
    }

    /// `u_i(t) = Bt + a·g_i(ν·t)`, interpolated exactly on `mesh`.
    pub fn stripe_map(&self, i: usize, mesh: Arc<SimplicialMesh>) -> Result<PwAffineMap> {
        interpolate(
            |t| {
                let (s, _) = self.to_frame(t);
                let g = self.profile(i, s);
                let bt = &self.b * DVector::from_column_slice(t);
                (bt + &self.amplitude * g).iter().copied().collect()
            },
            mesh,
            2,
        )
    }

    /// `u_∞(t) = (λA + (1-λ)B)t`.
    pub fn limit_map(&self, mesh: Arc<SimplicialMesh>) -> Result<PwAffineMap> {
        let m = self.mean();
        interpolate(|t| (&m * DVector::from_column_slice(t)).iter().copied().collect(), mesh, 2)
    }
}

/// Test functions on the rotated unit square, written in `(s, r)`.
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    Constant(f64),
    /// `b(s)b(r)·P(s, r)` with `b(y) = 16(y - ¼)(¾ - y)` on `[¼, ¾]` and
    /// zero elsewhere; `P = Σ c·s^i·r^j` for entries `(i, j, c)`.
    Tent(Vec<(u32, u32, f64)>),
    /// `(b(s)b(r))²·P(s, r)`, continuously differentiable.
    Bump(Vec<(u32, u32, f64)>),
}

fn tent(y: f64) -> f64 {
    if (0.25..=0.75).contains(&y) { 16.0 * (y - 0.25) * (0.75 - y) } else { 0.0 }
}

fn poly_eval(poly: &[(u32, u32, f64)], s: f64, r: f64) -> f64 {
    poly.iter().map(|&(i, j, c)| c * s.powi(i as i32) * r.powi(j as i32)).sum()
}

fn poly_degree(poly: &[(u32, u32, f64)]) -> usize {
    poly.iter().map(|&(i, j, _)| (i + j) as usize).max().unwrap_or(0)
}

impl TestFunction {
    pub fn eval(&self, s: f64, r: f64) -> f64 {
        match self {
            TestFunction::Constant(c) => *c,
            TestFunction::Tent(poly) => {
                let w = tent(s) * tent(r);
                if w == 0.0 { 0.0 } else { w * poly_eval(poly, s, r) }
            }
            TestFunction::Bump(poly) => {
                let w = (tent(s) * tent(r)).powi(2);
                if w == 0.0 { 0.0 } else { w * poly_eval(poly, s, r) }
            }
        }
    }

    /// Polynomial degree on each cell of a mesh with breaks at `¼` and `¾`.
    pub fn degree(&self) -> usize {
        match self {
            TestFunction::Constant(_) => 0,
            TestFunction::Tent(poly) => 4 + poly_degree(poly),
            TestFunction::Bump(poly) => 8 + poly_degree(poly),
        }
    }
}

/// One row of [`weak_minor_convergence_experiment`].
#[derive(Clone, Debug, PartialEq)]
pub struct WeakMinorRow {
    pub i: usize,
    /// `|⟨det du_i - det du_∞, ψ⟩|` for each test function.
    pub differences: Vec<f64>,
}

/// `⟨det du_i - det du_∞, ψ⟩`, exact up to rounding: `det du_i` is constant
/// per cell and `ψ` is a polynomial there.
pub fn minor_pairing_difference(pair: &StripePair, i: usize, psi: &TestFunction) -> Result<f64> {
    let mesh = Arc::new(pair.mesh(i, &[0.25, 0.75], &[0.0, 0.25, 0.75, 1.0])?);
    let u = pair.stripe_map(i, mesh.clone())?;
    let q = QuadratureRule::new(2, psi.degree())?;
    let w = q.unit_weights();
    let limit = determinant(&pair.mean());
    let parts: Vec<f64> = (0..mesh.num_cells())
        .map(|c| {
            let vol = mesh.cell_volume(c);
            let pairing: f64 = q
                .points()
                .iter()
                .zip(&w)
                .map(|(bary, wq)| {
                    let t = mesh.point(c, bary);
                    let (s, r) = pair.to_frame(&t);
                    wq * psi.eval(s, r)
                })
                .sum();
            (determinant(&u.cell_gradient(c)) - limit) * vol * pairing
        })
        .collect();
    Ok(pairwise_sum(&parts))
}

/// Pairings of the stripe minors against each `ψ` for every `i`.
pub fn weak_minor_convergence_experiment(
    pair: &StripePair,
    i_list: &[usize],
    tests: &[TestFunction],
) -> Result<Vec<WeakMinorRow>> {
    if tests.is_empty() {
        return arg("at least one test function is needed");
    }
    i_list
        .iter()
        .map(|&i| {
            let differences =
                tests.iter().map(|psi| minor_pairing_difference(pair, i, psi).map(f64::abs)).collect::<Result<_>>()?;
            Ok(WeakMinorRow { i, differences })
        })
        .collect()
}

/// Whether the values along rows with `i ≥ from` never increase by more
/// than `noise`.
pub fn decreasing_beyond(rows: &[(usize, f64)], from: usize, noise: f64) -> bool {
    let tail: Vec<f64> = rows.iter().filter(|(i, _)| *i >= from).map(|(_, v)| *v).collect();
    tail.windows(2).all(|w| w[1] <= w[0] + noise)
}

/// `(i, kr_distance(δ_{u_i}, laminate))` where both measures use the
/// centroid rule on the band mesh of `u_i`.
pub fn stripe_kr_sequence(pair: &StripePair, i_list: &[usize], weight: KrWeight) -> Result<Vec<(usize, f64)>> {
    let q = QuadratureRule::new(2, 1)?;
    i_list
        .iter()
        .map(|&i| {
            let mesh = Arc::new(pair.mesh(i, &[], &[0.0, 1.0])?);
            let u = pair.stripe_map(i, mesh.clone())?;
            let base = pair.limit_map(mesh)?;
            let mu = from_map(&u, &q)?;
            let nu = laminate(pair.a(), pair.b(), pair.lambda(), &base, &q)?;
            Ok((i, kr_distance(&mu, &nu, weight)?))
        })
        .collect()
}
