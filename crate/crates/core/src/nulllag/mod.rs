//! Null Lagrangians built from a bounded form `χ` on the target and a
//! compactly supported field `U` of `l`-vectors on the domain:
//!
//! `F(t, x, v) = χ_x ∘ ∧_{l-1} v · U̇(t) + dχ_x ∘ ∧_l v · U(t)`.

mod fields;
mod profiles;

use nalgebra::DMatrix;

pub use fields::{FieldBounds, FormField, LVectorField, Support};
#[cfg(test)]
pub(crate) use fields::ball_bump_gradient;
pub use profiles::{bump, bump_derivative, bump_derivative_max, clamp, clamp_derivative};

use crate::error::{arg, Error, Result};
use crate::exterior::lift_minors_unchecked;
use crate::meshmaps::{integrate_energy, Energy, JetFunction, JetSource, QuadratureRule};

/// The null Lagrangian of a test pair `(χ, U)` with `deg χ = l - 1`,
/// `deg U = l`.
#[derive(Clone, Debug)]
pub struct NullLagrangianSpec {
    l: usize,
    chi: FormField,
    field: LVectorField,
}

impl NullLagrangianSpec {
    pub fn new(l: usize, chi: FormField, field: LVectorField) -> Result<Self> {
        if l == 0 || field.degree() != l || chi.degree() + 1 != l {
            return arg(format!(
                "degree mismatch: l = {l}, field degree {}, form degree {}",
                field.degree(),
                chi.degree()
            ));
        }
        if l > field.domain_dim().min(chi.target_dim()) {
            return arg(format!("l = {l} exceeds min(n, m)"));
        }
        Ok(Self { l, chi, field })
    }

    pub fn degree(&self) -> usize {
        self.l
    }

    pub fn form(&self) -> &FormField {
        &self.chi
    }

    pub fn field(&self) -> &LVectorField {
        &self.field
    }

    pub fn domain_dim(&self) -> usize {
        self.field.domain_dim()
    }

    pub fn target_dim(&self) -> usize {
        self.chi.target_dim()
    }

    /// `F(t, x, v)`; exactly zero for `t` outside the support of `U`.
    pub fn evaluate(&self, t: &[f64], x: &[f64], v: &DMatrix<f64>) -> f64 {
        if !self.field.support().contains(t) {
            return 0.0;
        }
        if v.shape() != (self.target_dim(), self.domain_dim()) || x.len() != self.target_dim() {
            return f64::NAN;
        }
        let lower = lift_minors_unchecked(v, self.l - 1).into_entries();
        let upper = lift_minors_unchecked(v, self.l).into_entries();
        self.pairing(t, x, &lower, &upper)
    }

    /// `𝖥(t, x, v₁, …, v_k)` on an independent tuple of minor coordinates,
    /// `tuple[i]` standing for `∧_{i+1} v`. Affine in the tuple.
    pub fn evaluate_lifted(&self, t: &[f64], x: &[f64], tuple: &[DMatrix<f64>]) -> Result<f64> {
        if tuple.len() < self.l {
            return arg(format!("tuple of length {} but l = {}", tuple.len(), self.l));
        }
        if !self.field.support().contains(t) {
            return Ok(0.0);
        }
        let one = DMatrix::from_element(1, 1, 1.0);
        let lower = if self.l == 1 { &one } else { &tuple[self.l - 2] };
        Ok(self.pairing(t, x, lower, &tuple[self.l - 1]))
    }

    fn pairing(&self, t: &[f64], x: &[f64], lower: &DMatrix<f64>, upper: &DMatrix<f64>) -> f64 {
        let udot = self.field.u_dot(t);
        let uval = self.field.value(t);
        let chi = self.chi.value(x);
        let dchi = self.chi.diff(x);
        contract(&chi, lower, &udot) + contract(&dchi, upper, &uval)
    }

    /// `sup|χ|·‖U̇‖_∞ + sup|dχ|·‖U‖_∞`, a bound for `|F| / r_k`.
    pub fn ratio_bound(&self) -> f64 {
        let b = self.field.bounds();
        self.chi.sup_value() * b.dot + self.chi.sup_diff() * b.value
    }
}

fn contract(form: &[f64], m: &DMatrix<f64>, vector: &[f64]) -> f64 {
    let mut s = 0.0;
    for (j, fj) in form.iter().enumerate() {
        if *fj == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for (i, vi) in vector.iter().enumerate() {
            row += m[(j, i)] * vi;
        }
        s += fj * row;
    }
    s
}

impl JetFunction for NullLagrangianSpec {
    fn eval_jet(&self, t: &[f64], x: &[f64], v: &DMatrix<f64>) -> f64 {
        self.evaluate(t, x, v)
    }
}

/// Build the null Lagrangian of `(χ, U)` at degree `l`.
pub fn make_null_lagrangian(l: usize, chi: FormField, field: LVectorField) -> Result<NullLagrangianSpec> {
    NullLagrangianSpec::new(l, chi, field)
}

/// Quadrature value of `∫_N F(t, u(t), du(t)) dt`.
pub fn vanishing_residual<S: JetSource + ?Sized>(f: &NullLagrangianSpec, u: &S, q: &QuadratureRule) -> Result<f64> {
    if u.mesh().dim() != f.domain_dim() || u.target_dim() != f.target_dim() {
        return arg("map dimensions do not match the null Lagrangian");
    }
    match integrate_energy(u, f, q)? {
        Energy::Finite(v) => Ok(v),
        Energy::Infinite => Err(Error::Evaluation("null Lagrangian evaluated to +∞".into())),
    }
}

/// Domain descriptors for [`divergence_one_field`].
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Annulus { center: Vec<f64>, inner: f64, outer: f64 },
}

/// A vector field with `div U ≡ 1`, `U(t) = (t - c)/n` about the centre `c`
/// of a star-shaped domain.
pub fn divergence_one_field(domain: &Domain) -> Result<LVectorField> {
    let (center, lo, hi) = match domain {
        Domain::Ball { center, radius } => {
            if !(*radius > 0.0) {
                return arg("ball radius must be positive");
            }
            let lo = center.iter().map(|c| c - radius).collect::<Vec<_>>();
            let hi = center.iter().map(|c| c + radius).collect::<Vec<_>>();
            (center.clone(), lo, hi)
        }
        Domain::Box { lo, hi } => {
            if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                return arg("box corners are inconsistent");
            }
            let c = lo.iter().zip(hi).map(|(a, b)| (a + b) / 2.0).collect();
            (c, lo.clone(), hi.clone())
        }
        Domain::Annulus { .. } => {
            return Err(Error::UnsupportedDomain("annulus is not star-shaped".into()));
        }
    };
    let n = center.len();
    let half_diag = lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a) / 4.0).sum::<f64>().sqrt();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0 / n as f64;
    }
    LVectorField::linear(&m, &center, &lo, &hi, FieldBounds { value: half_diag / n as f64 * (1.0 + 1e-12), dot: 1.0 })
}
