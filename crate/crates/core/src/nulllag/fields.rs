use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::profiles::{bump, bump_derivative_max, clamp, clamp_derivative};
use crate::error::{arg, Error, Result};
use crate::exterior::{binomial, combos, merge_sign, rank_of_mask, WedgeVector, MAX_MAP_DIM};
use crate::rng::component_rng;

type CoeffFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

const VALIDATION_POINTS: usize = 16;
const FD_TOL: f64 = 1e-6;

/// Where a field of `l`-vectors may be nonzero.
#[derive(Clone, Debug, PartialEq)]
pub enum Support {
    /// Open ball; the field is identically zero outside it.
    Ball { center: Vec<f64>, radius: f64 },
    /// No support restriction. The box is the region on which the field is
    /// validated and its bounds are claimed.
    Unrestricted { lo: Vec<f64>, hi: Vec<f64> },
}

impl Support {
    fn dim(&self) -> usize {
        match self {
            Support::Ball { center, .. } => center.len(),
            Support::Unrestricted { lo, .. } => lo.len(),
        }
    }

    /// Whether `t` may carry a nonzero value.
    pub fn contains(&self, t: &[f64]) -> bool {
        match self {
            Support::Ball { center, radius } => dist_sq(t, center) < radius * radius,
            Support::Unrestricted { .. } => true,
        }
    }

    fn scale(&self) -> f64 {
        match self {
            Support::Ball { radius, .. } => *radius,
            Support::Unrestricted { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).fold(0.0, f64::max),
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        match self {
            Support::Ball { center, radius } => loop {
                let p: Vec<f64> = center.iter().map(|c| c + radius * rng.gen_range(-1.0..1.0)).collect();
                if dist_sq(&p, center) < radius * radius {
                    return p;
                }
            },
            Support::Unrestricted { lo, hi } => lo.iter().zip(hi).map(|(a, b)| rng.gen_range(*a..*b)).collect(),
        }
    }
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

// Central differences of `f` at `p` compared with the claimed Jacobian
// (`rows × dim`, row-major).
fn check_derivatives(
    f: &CoeffFn,
    df: &CoeffFn,
    p: &[f64],
    rows: usize,
    h: f64,
    what: &str,
) -> Result<()> {
    let jac = df(p);
    if jac.len() != rows * p.len() {
        return arg(format!("{what}: derivative callback returned {} entries, expected {}", jac.len(), rows * p.len()));
    }
    for j in 0..p.len() {
        let mut a = p.to_vec();
        let mut b = p.to_vec();
        a[j] += h;
        b[j] -= h;
        let (fa, fb) = (f(&a), f(&b));
        for r in 0..rows {
            let fd = (fa[r] - fb[r]) / (2.0 * h);
            let an = jac[r * p.len() + j];
            if (fd - an).abs() > FD_TOL * an.abs().max(1.0) {
                return Err(Error::Argument(format!(
                    "{what}: derivative of component {r} in direction {j} is {an}, finite differences give {fd} at {p:?}"
                )));
            }
        }
    }
    Ok(())
}

/// Declared bounds of a field of `l`-vectors: `sup ‖U‖` and `sup ‖U̇‖`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldBounds {
    pub value: f64,
    pub dot: f64,
}

/// A smooth field of `l`-vectors on ℝⁿ with analytic first derivatives.
#[derive(Clone)]
pub struct LVectorField {
    degree: usize,
    dim: usize,
    coeffs: Arc<CoeffFn>,
    derivs: Arc<CoeffFn>,
    support: Support,
    bounds: FieldBounds,
}

impl fmt::Debug for LVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LVectorField")
            .field("degree", &self.degree)
            .field("dim", &self.dim)
            .field("support", &self.support)
            .field("bounds", &self.bounds)
            .finish()
    }
}

impl LVectorField {
    /// `coeffs(t)` gives the `C(n, l)` coordinates of `U(t)`; `derivs(t)`
    /// gives `∂_j U_I` row-major (`I` major). Derivatives and bounds are
    /// probed on random points of the support.
    pub fn new(
        degree: usize,
        dim: usize,
        coeffs: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        derivs: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        support: Support,
        bounds: FieldBounds,
    ) -> Result<Self> {
        if dim == 0 || dim > MAX_MAP_DIM || degree == 0 || degree > dim {
            return arg(format!("field of {degree}-vectors on ℝ^{dim} unsupported"));
        }
        if support.dim() != dim {
            return arg("support descriptor has the wrong dimension");
        }
        if let Support::Ball { radius, .. } = &support {
            if !(*radius > 0.0) {
                return arg("support radius must be positive");
            }
        }
        let field = Self { degree, dim, coeffs: Arc::new(coeffs), derivs: Arc::new(derivs), support, bounds };
        field.validate()?;
        Ok(field)
    }

    fn validate(&self) -> Result<()> {
        let rows = binomial(self.dim, self.degree);
        let mut rng = component_rng(0, "lvector-field-validation");
        let h = 1e-5 * self.support.scale();
        for _ in 0..VALIDATION_POINTS {
            let p = self.support.sample(&mut rng);
            let u = (self.coeffs)(&p);
            if u.len() != rows {
                return arg(format!("coefficient callback returned {} entries, expected {rows}", u.len()));
            }
            check_derivatives(&*self.coeffs, &*self.derivs, &p, rows, h, "l-vector field")?;
            let tol = 1e-12 * (1.0 + self.bounds.value.max(self.bounds.dot));
            if norm(&u) > self.bounds.value + tol || norm(&self.u_dot(&p)) > self.bounds.dot + tol {
                return arg(format!("declared bounds violated at {p:?}"));
            }
        }
        Ok(())
    }

    /// `φ(t) W` with `φ` the standard bump on the ball `|t - c| < r`.
    pub fn bump(center: &[f64], radius: f64, w: WedgeVector) -> Result<Self> {
        let dim = center.len();
        if w.ambient_dim() != dim {
            return arg("constant l-vector lives in the wrong dimension");
        }
        let c = center.to_vec();
        let c2 = c.clone();
        let wc = w.coords().to_vec();
        let wc2 = wc.clone();
        let wn = norm(&wc);
        let bounds = FieldBounds { value: wn, dot: wn * bump_derivative_max() / radius * (1.0 + 1e-12) };
        Self::new(
            w.degree(),
            dim,
            move |t| {
                let phi = bump(dist_sq(t, &c).sqrt() / radius);
                wc.iter().map(|x| phi * x).collect()
            },
            move |t| {
                let g = ball_bump_gradient(t, &c2, radius);
                wc2.iter().flat_map(|x| g.iter().map(move |gj| x * gj)).collect()
            },
            Support::Ball { center: center.to_vec(), radius },
            bounds,
        )
    }

    /// `U_I(t) = p(t)(W_I + Σ_j G_{Ij}(t_j - lo_j))` with
    /// `p(t) = Π_j 4(t_j - lo_j)(hi_j - t_j)/(hi_j - lo_j)²`, which vanishes
    /// on the boundary of the box. `slopes` is `G` row-major.
    pub fn box_polynomial(lo: &[f64], hi: &[f64], w: WedgeVector, slopes: &[f64]) -> Result<Self> {
        let n = lo.len();
        let rows = binomial(n, w.degree().min(n));
        if hi.len() != n || w.ambient_dim() != n || slopes.len() != rows * n {
            return arg("box polynomial operands have inconsistent shapes");
        }
        if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
            return arg("box must have positive extent");
        }
        let (lo, hi) = (lo.to_vec(), hi.to_vec());
        let support = Support::Unrestricted { lo: lo.clone(), hi: hi.clone() };
        let wc = w.coords().to_vec();
        let g = slopes.to_vec();
        let diam = lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
        let mut dot = 0.0;
        let mut value = 0.0;
        for i in 0..rows {
            let gi = norm(&g[i * n..(i + 1) * n]);
            let amp = wc[i].abs() + gi * diam;
            value += amp * amp;
            for j in 0..n {
                dot += 4.0 / (hi[j] - lo[j]) * amp + g[i * n + j].abs();
            }
        }
        let bounds = FieldBounds { value: value.sqrt(), dot: dot * (1.0 + 1e-12) };
        let poly = {
            let (lo, hi) = (lo.clone(), hi.clone());
            move |t: &[f64]| -> (f64, Vec<f64>) {
                let f: Vec<f64> = (0..n).map(|j| 4.0 * (t[j] - lo[j]) * (hi[j] - t[j]) / (hi[j] - lo[j]).powi(2)).collect();
                let df: Vec<f64> =
                    (0..n).map(|j| 4.0 * (hi[j] + lo[j] - 2.0 * t[j]) / (hi[j] - lo[j]).powi(2)).collect();
                let p: f64 = f.iter().product();
                let dp = (0..n)
                    .map(|j| df[j] * (0..n).filter(|&k| k != j).map(|k| f[k]).product::<f64>())
                    .collect();
                (p, dp)
            }
        };
        let poly2 = poly.clone();
        let (lo2, wc2, g2) = (lo.clone(), wc.clone(), g.clone());
        let lin = move |t: &[f64], lo: &[f64], wc: &[f64], g: &[f64], i: usize| {
            wc[i] + (0..n).map(|j| g[i * n + j] * (t[j] - lo[j])).sum::<f64>()
        };
        Self::new(
            w.degree(),
            n,
            move |t| {
                let (p, _) = poly(t);
                (0..rows).map(|i| p * lin(t, &lo, &wc, &g, i)).collect()
            },
            move |t| {
                let (p, dp) = poly2(t);
                (0..rows)
                    .flat_map(|i| {
                        let a = lin(t, &lo2, &wc2, &g2, i);
                        let gi = &g2[i * n..(i + 1) * n];
                        let dp = dp.clone();
                        (0..n).map(move |j| dp[j] * a + p * gi[j])
                    })
                    .collect()
            },
            support,
            bounds,
        )
    }

    /// `U(t) = M (t - c)` as a vector field, unrestricted on the box.
    pub fn linear(matrix: &[f64], center: &[f64], lo: &[f64], hi: &[f64], bounds: FieldBounds) -> Result<Self> {
        let n = center.len();
        if matrix.len() != n * n || lo.len() != n || hi.len() != n {
            return arg("linear field operands have inconsistent shapes");
        }
        let m = matrix.to_vec();
        let m2 = m.clone();
        let c = center.to_vec();
        Self::new(
            1,
            n,
            move |t| (0..n).map(|i| (0..n).map(|j| m[i * n + j] * (t[j] - c[j])).sum()).collect(),
            move |_| m2.clone(),
            Support::Unrestricted { lo: lo.to_vec(), hi: hi.to_vec() },
            bounds,
        )
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn domain_dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn bounds(&self) -> FieldBounds {
        self.bounds
    }

    /// Coordinates of `U(t)`; exactly zero outside the support.
    pub fn value(&self, t: &[f64]) -> Vec<f64> {
        if !self.support.contains(t) {
            return vec![0.0; binomial(self.dim, self.degree)];
        }
        (self.coeffs)(t)
    }

    /// `∂_j U_I(t)`, row-major with `I` major.
    pub fn jacobian(&self, t: &[f64]) -> Vec<f64> {
        if !self.support.contains(t) {
            return vec![0.0; binomial(self.dim, self.degree) * self.dim];
        }
        (self.derivs)(t)
    }

    pub fn wedge_value(&self, t: &[f64]) -> WedgeVector {
        WedgeVector::from_coords(self.dim, self.degree, self.value(t)).expect("coefficient count checked")
    }

    /// Coordinates of the `(l-1)`-vector `U̇(t)` defined by
    /// `d(i_U Ω) = (-1)^{l+1} i_{U̇} Ω`.
    pub fn u_dot(&self, t: &[f64]) -> Vec<f64> {
        u_dot_from_jacobian(self.dim, self.degree, &self.jacobian(t))
    }
}

/// `∇φ` for `φ(t) = bump(|t - c| / r)`.
pub(crate) fn ball_bump_gradient(t: &[f64], c: &[f64], r: f64) -> Vec<f64> {
    let rho_sq = dist_sq(t, c) / (r * r);
    if rho_sq >= 1.0 {
        return vec![0.0; t.len()];
    }
    let d = 1.0 - rho_sq;
    let k = -2.0 / (d * d) * (1.0 - 1.0 / d).exp() / (r * r);
    t.iter().zip(c).map(|(a, b)| k * (a - b)).collect()
}

// With i_U Ω = Σ_I U_I σ(I) e*_{I^c} and i_{e_K} Ω = σ(K) e*_{K^c}, matching
// coefficients of e*_{K^c} gives
// U̇_K = (-1)^{l+1} σ(K) Σ_{j ∉ K} σ(K ∪ j) ε(j, (K ∪ j)^c) ∂_j U_{K ∪ j}.
pub(crate) fn u_dot_from_jacobian(n: usize, l: usize, jac: &[f64]) -> Vec<f64> {
    let full = (1u32 << n) - 1;
    let lower = combos(n, l - 1);
    let parity = if l % 2 == 1 { 1.0 } else { -1.0 };
    let mut out = vec![0.0; lower.count];
    for (k, o) in out.iter_mut().enumerate() {
        let km = lower.mask(k);
        let sk = merge_sign(km, full ^ km);
        let mut acc = 0.0;
        for j in 0..n {
            if km & (1 << j) != 0 {
                continue;
            }
            let im = km | (1 << j);
            let s = merge_sign(im, full ^ im) * merge_sign(1 << j, full ^ im);
            acc += s * jac[rank_of_mask(im, n) * n + j];
        }
        *o = parity * sk * acc;
    }
    out
}

/// A smooth bounded `(l-1)`-form on ℝᵐ with analytic differential.
#[derive(Clone)]
pub struct FormField {
    degree: usize,
    target_dim: usize,
    coeffs: Arc<CoeffFn>,
    derivs: Arc<CoeffFn>,
    sup_value: f64,
    sup_diff: f64,
}

impl fmt::Debug for FormField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormField")
            .field("degree", &self.degree)
            .field("target_dim", &self.target_dim)
            .field("sup_value", &self.sup_value)
            .field("sup_diff", &self.sup_diff)
            .finish()
    }
}

/// Half-width of the cube on which form fields are probed.
const FORM_PROBE_RADIUS: f64 = 5.0;

impl FormField {
    /// `coeffs(x)` gives the `C(m, degree)` coordinates of `χ(x)`;
    /// `derivs(x)` gives `∂_j χ_K(x)` row-major. `sup_value` and `sup_diff`
    /// bound `‖χ‖` and `‖dχ‖` everywhere.
    pub fn new(
        degree: usize,
        target_dim: usize,
        coeffs: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        derivs: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        sup_value: f64,
        sup_diff: f64,
    ) -> Result<Self> {
        if target_dim == 0 || target_dim > MAX_MAP_DIM || degree >= target_dim {
            return arg(format!("{degree}-form on ℝ^{target_dim} unsupported"));
        }
        let f = Self { degree, target_dim, coeffs: Arc::new(coeffs), derivs: Arc::new(derivs), sup_value, sup_diff };
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<()> {
        let rows = binomial(self.target_dim, self.degree);
        let mut rng = component_rng(0, "form-field-validation");
        for _ in 0..VALIDATION_POINTS {
            let p: Vec<f64> =
                (0..self.target_dim).map(|_| rng.gen_range(-FORM_PROBE_RADIUS..FORM_PROBE_RADIUS)).collect();
            let c = (self.coeffs)(&p);
            if c.len() != rows {
                return arg(format!("form callback returned {} entries, expected {rows}", c.len()));
            }
            check_derivatives(&*self.coeffs, &*self.derivs, &p, rows, 1e-5, "form field")?;
            let tol = 1e-12 * (1.0 + self.sup_value.max(self.sup_diff));
            if norm(&c) > self.sup_value + tol || norm(&self.diff(&p)) > self.sup_diff + tol {
                return arg(format!("declared form bounds violated at {p:?}"));
            }
        }
        Ok(())
    }

    /// The constant function `c`.
    pub fn constant(target_dim: usize, c: f64) -> Result<Self> {
        Self::new(0, target_dim, move |_| vec![c], move |_| vec![0.0; target_dim], c.abs(), 0.0)
    }

    /// `clamp(x_i) e*_K`.
    pub fn clamp_coordinate(target_dim: usize, i: usize, form_indices: &[usize]) -> Result<Self> {
        if i >= target_dim || form_indices.iter().any(|&k| k >= target_dim) {
            return arg("clamp form index out of range");
        }
        if form_indices.windows(2).any(|w| w[0] >= w[1]) {
            return arg("form indices must be strictly increasing");
        }
        let degree = form_indices.len();
        let rows = binomial(target_dim, degree);
        let slot = rank_of_mask(form_indices.iter().fold(0u32, |m, &k| m | (1 << k)), target_dim);
        Self::new(
            degree,
            target_dim,
            move |x| {
                let mut c = vec![0.0; rows];
                c[slot] = clamp(x[i]);
                c
            },
            move |x| {
                let mut d = vec![0.0; rows * target_dim];
                d[slot * target_dim + i] = clamp_derivative(x[i]);
                d
            },
            3.0,
            1.0,
        )
    }

    /// `χ_K(x) = a_K sin(ω_K · x + c_K)`, one `(a, ω, c)` per basis element.
    pub fn trig(target_dim: usize, degree: usize, terms: &[(f64, Vec<f64>, f64)]) -> Result<Self> {
        if degree >= target_dim || target_dim > MAX_MAP_DIM {
            return arg(format!("{degree}-form on ℝ^{target_dim} unsupported"));
        }
        if terms.len() != binomial(target_dim, degree) || terms.iter().any(|t| t.1.len() != target_dim) {
            return arg("trigonometric form needs one term per basis element");
        }
        let sup_value = terms.iter().map(|t| t.0 * t.0).sum::<f64>().sqrt();
        let sup_diff = terms.iter().map(|t| t.0.abs() * norm(&t.1)).sum::<f64>();
        let a: Vec<_> = terms.to_vec();
        let b = a.clone();
        let phase = |t: &(f64, Vec<f64>, f64), x: &[f64]| t.1.iter().zip(x).map(|(w, y)| w * y).sum::<f64>() + t.2;
        Self::new(
            degree,
            target_dim,
            move |x| a.iter().map(|t| t.0 * phase(t, x).sin()).collect(),
            move |x| b.iter().flat_map(|t| { let c = t.0 * phase(t, x).cos(); t.1.iter().map(move |w| c * w) }).collect(),
            sup_value,
            sup_diff,
        )
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn sup_value(&self) -> f64 {
        self.sup_value
    }

    pub fn sup_diff(&self) -> f64 {
        self.sup_diff
    }

    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        (self.coeffs)(x)
    }

    /// Coordinates of `dχ(x) = Σ_{j,K} ∂_j χ_K e*_j ∧ e*_K`.
    pub fn diff(&self, x: &[f64]) -> Vec<f64> {
        let m = self.target_dim;
        let jac = (self.derivs)(x);
        let src = combos(m, self.degree);
        let mut out = vec![0.0; binomial(m, self.degree + 1)];
        for k in 0..src.count {
            let km = src.mask(k);
            for j in 0..m {
                if km & (1 << j) != 0 {
                    continue;
                }
                let s = merge_sign(1 << j, km);
                out[rank_of_mask(km | (1 << j), m)] += s * jac[k * m + j];
            }
        }
        out
    }
}
