use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{arg, Error, Result};
use crate::exterior::{binomial, minor_pullback, minor_tuple};
use crate::meshmaps::JetFunction;
use crate::rng::component_rng;

type LiftedFn = dyn Fn(&[f64], &[f64], &[DMatrix<f64>]) -> f64 + Send + Sync;
type LiftedGradFn = dyn Fn(&[f64], &[f64], &[DMatrix<f64>]) -> (Vec<f64>, Vec<DMatrix<f64>>) + Send + Sync;
type WitnessFn = dyn Fn(f64) -> f64 + Send + Sync;

const GRADIENT_TOL: f64 = 1e-5;

/// A `k`-convex integrand `L(t, x, v) = 𝖫(t, x, v, ∧₂v, …, ∧_k v)`.
#[derive(Clone)]
pub struct IntegrandSpec {
    k: usize,
    domain_dim: usize,
    target_dim: usize,
    lifted: Arc<LiftedFn>,
    gradient: Option<Arc<LiftedGradFn>>,
    witness: Option<Arc<WitnessFn>>,
}

impl fmt::Debug for IntegrandSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntegrandSpec")
            .field("k", &self.k)
            .field("domain_dim", &self.domain_dim)
            .field("target_dim", &self.target_dim)
            .field("gradient", &self.gradient.is_some())
            .field("witness", &self.witness.is_some())
            .finish()
    }
}

impl IntegrandSpec {
    /// `lifted(t, x, tuple)` evaluates `𝖫` with `tuple[i]` standing for
    /// `∧_{i+1} v`. The optional gradient returns `(∂_x 𝖫, ∂_{tuple} 𝖫)`
    /// and is checked against central differences on random jets.
    pub fn new(
        k: usize,
        domain_dim: usize,
        target_dim: usize,
        lifted: impl Fn(&[f64], &[f64], &[DMatrix<f64>]) -> f64 + Send + Sync + 'static,
        gradient: Option<Arc<LiftedGradFn>>,
        witness: Option<Arc<WitnessFn>>,
    ) -> Result<Self> {
        if k == 0 || k > domain_dim.min(target_dim) || target_dim > crate::exterior::MAX_MAP_DIM {
            return arg(format!("k = {k} outside 1..={}", domain_dim.min(target_dim)));
        }
        let spec = Self { k, domain_dim, target_dim, lifted: Arc::new(lifted), gradient, witness };
        spec.validate_gradient()?;
        Ok(spec)
    }

    fn validate_gradient(&self) -> Result<()> {
        let Some(grad) = &self.gradient else { return Ok(()) };
        let mut rng = component_rng(0, "integrand-gradient-validation");
        let (n, m) = (self.domain_dim, self.target_dim);
        for _ in 0..8 {
            let t: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let tuple: Vec<DMatrix<f64>> = (1..=self.k)
                .map(|i| DMatrix::from_fn(binomial(m, i), binomial(n, i), |_, _| rng.gen_range(-1.5..1.5)))
                .collect();
            let f0 = (self.lifted)(&t, &x, &tuple);
            if !f0.is_finite() {
                continue;
            }
            let (gx, gv) = grad(&t, &x, &tuple);
            if gx.len() != m || gv.len() != self.k {
                return arg("gradient callback returned the wrong shape");
            }
            let h = 1e-6;
            let check = |an: f64, fd: f64, what: &str| {
                if (an - fd).abs() > GRADIENT_TOL * an.abs().max(fd.abs()).max(1.0) {
                    Err(Error::Argument(format!("gradient mismatch in {what}: analytic {an}, finite difference {fd}")))
                } else {
                    Ok(())
                }
            };
            for j in 0..m {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let fd = ((self.lifted)(&t, &xp, &tuple) - (self.lifted)(&t, &xm, &tuple)) / (2.0 * h);
                check(gx[j], fd, "x")?;
            }
            for i in 0..self.k {
                if gv[i].shape() != tuple[i].shape() {
                    return arg("gradient callback returned the wrong shape");
                }
                for r in 0..tuple[i].nrows() {
                    for c in 0..tuple[i].ncols() {
                        let mut tp = tuple.clone();
                        let mut tm = tuple.clone();
                        tp[i][(r, c)] += h;
                        tm[i][(r, c)] -= h;
                        let fd = ((self.lifted)(&t, &x, &tp) - (self.lifted)(&t, &x, &tm)) / (2.0 * h);
                        check(gv[i][(r, c)], fd, "minor coordinates")?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// `𝖫` on an independent tuple.
    pub fn lifted(&self, t: &[f64], x: &[f64], tuple: &[DMatrix<f64>]) -> f64 {
        (self.lifted)(t, x, tuple)
    }

    /// `L(t, x, v)`.
    pub fn evaluate(&self, t: &[f64], x: &[f64], v: &DMatrix<f64>) -> f64 {
        (self.lifted)(t, x, &minor_tuple(v, self.k))
    }

    /// `ℓ(s)` when a witness was declared.
    pub fn witness(&self, s: f64) -> Option<f64> {
        self.witness.as_ref().map(|w| w(s))
    }

    /// `(∂_x L, ∂_v L)` at a jet with finite value, by the chain rule
    /// through the minors, or by central differences without a gradient
    /// callback.
    pub fn jet_gradient(&self, t: &[f64], x: &[f64], v: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
        match &self.gradient {
            Some(g) => {
                let (gx, gt) = g(t, x, &minor_tuple(v, self.k));
                let mut gv = DMatrix::zeros(v.nrows(), v.ncols());
                for (i, dm) in gt.iter().enumerate() {
                    gv += minor_pullback(v, i + 1, dm);
                }
                (gx, gv)
            }
            None => {
                let h = 1e-6;
                let gx = (0..x.len())
                    .map(|j| {
                        let mut a = x.to_vec();
                        let mut b = x.to_vec();
                        a[j] += h;
                        b[j] -= h;
                        (self.evaluate(t, &a, v) - self.evaluate(t, &b, v)) / (2.0 * h)
                    })
                    .collect();
                let gv = DMatrix::from_fn(v.nrows(), v.ncols(), |r, c| {
                    let mut a = v.clone();
                    let mut b = v.clone();
                    a[(r, c)] += h;
                    b[(r, c)] -= h;
                    (self.evaluate(t, x, &a) - self.evaluate(t, x, &b)) / (2.0 * h)
                });
                (gx, gv)
            }
        }
    }
}

impl JetFunction for IntegrandSpec {
    fn eval_jet(&self, t: &[f64], x: &[f64], v: &DMatrix<f64>) -> f64 {
        self.evaluate(t, x, v)
    }
}

/// `ε(‖v‖^p + |t|⁴‖v‖⁴) + |det v|²` on planar maps, as
/// `𝖫(t, x, v₁, v₂) = ε(‖v₁‖^p + |t|⁴‖v₁‖⁴) + v₂²`.
///
/// The witness is `ℓ(s) = c·min(s^p, s²)` with `c = min(ε 2^{-p}, 1/4)`.
pub fn example_lagrangian(eps: f64, p: f64) -> Result<IntegrandSpec> {
    if !(eps > 0.0) || !eps.is_finite() {
        return arg(format!("ε = {eps} must be positive"));
    }
    if !(p > 1.0 && p < 2.0) {
        return arg(format!("p = {p} outside (1, 2)"));
    }
    let lifted = move |t: &[f64], _: &[f64], tuple: &[DMatrix<f64>]| {
        let a = tuple[0].norm();
        let t4 = (t[0] * t[0] + t[1] * t[1]).powi(2);
        let d = tuple[1][(0, 0)];
        eps * (a.powf(p) + t4 * a.powi(4)) + d * d
    };
    let gradient = move |t: &[f64], _: &[f64], tuple: &[DMatrix<f64>]| {
        let a = tuple[0].norm();
        let t4 = (t[0] * t[0] + t[1] * t[1]).powi(2);
        let coef = if a > 0.0 { eps * (p * a.powf(p - 2.0) + 4.0 * t4 * a * a) } else { 0.0 };
        let d = tuple[1][(0, 0)];
        (vec![0.0; 2], vec![&tuple[0] * coef, DMatrix::from_element(1, 1, 2.0 * d)])
    };
    let c = (eps * 2f64.powf(-p)).min(0.25);
    let witness = move |s: f64| c * s.powf(p).min(s * s);
    IntegrandSpec::new(2, 2, 2, lifted, Some(Arc::new(gradient)), Some(Arc::new(witness)))
}

/// Outcome of [`kconvexity_sample_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct KConvexityReport {
    pub passed: bool,
    pub segments_tested: usize,
    /// `(t, x, a, b, defect)` for the worst violating segment, where
    /// `defect = 𝖫(mid) - (𝖫(a) + 𝖫(b))/2 > 0`.
    pub witness: Option<ConvexityWitness>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexityWitness {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub a: Vec<DMatrix<f64>>,
    pub b: Vec<DMatrix<f64>>,
    pub defect: f64,
}

/// Midpoint convexity of `𝖫_{t,x}` along random segments in the tuple of
/// minor coordinates, treated as independent variables. A sampling check:
/// passing is necessary, not sufficient.
pub fn kconvexity_sample_check(l: &IntegrandSpec, samples: usize, segments: usize, seed: u64) -> KConvexityReport {
    let mut rng = component_rng(seed, "kconvexity");
    let (n, m) = (l.domain_dim, l.target_dim);
    let mut worst: Option<ConvexityWitness> = None;
    let mut tested = 0;
    for _ in 0..samples {
        let t: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
        for _ in 0..segments {
            let scale = 10f64.powf(rng.gen_range(-1.0..1.0));
            let mut draw = || -> Vec<DMatrix<f64>> {
                (1..=l.k)
                    .map(|i| DMatrix::from_fn(binomial(m, i), binomial(n, i), |_, _| rng.gen_range(-scale..scale)))
                    .collect()
            };
            let a = draw();
            let b = draw();
            let mid: Vec<DMatrix<f64>> = a.iter().zip(&b).map(|(p, q)| (p + q) * 0.5).collect();
            let (fa, fb, fm) = (l.lifted(&t, &x, &a), l.lifted(&t, &x, &b), l.lifted(&t, &x, &mid));
            tested += 1;
            if !(fa.is_finite() && fb.is_finite()) {
                continue;
            }
            let defect = fm - 0.5 * (fa + fb);
            let tol = 1e-12 * (1.0 + fa.abs() + fb.abs());
            if defect > tol && worst.as_ref().is_none_or(|w| defect > w.defect) {
                worst = Some(ConvexityWitness { t: t.clone(), x: x.clone(), a, b, defect });
            }
        }
    }
    KConvexityReport { passed: worst.is_none(), segments_tested: tested, witness: worst }
}

/// Outcome of [`superlinearity_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct SuperlinearityReport {
    /// `(R, min L/(‖v‖ + … + ‖∧_k v‖))` over jets with `‖v‖ = R`.
    pub rows: Vec<(f64, f64)>,
    pub non_decreasing: bool,
    /// Ratios non-decreasing and growing by at least a factor of ten over
    /// the radii; otherwise growth has stagnated.
    pub superlinear: bool,
    /// Sampled jets where `L < ℓ(‖v‖ + … + ‖∧_k v‖)`, if a witness exists.
    pub witness_violations: usize,
}

/// Ratios `L / (‖v‖ + … + ‖∧_k v‖)` at `‖v‖ = R` over a fixed random set
/// of directions and base points.
pub fn superlinearity_check(l: &IntegrandSpec, radii: &[f64], samples: usize, seed: u64) -> SuperlinearityReport {
    let mut rng = component_rng(seed, "superlinearity");
    let (n, m) = (l.domain_dim, l.target_dim);
    let dirs: Vec<(Vec<f64>, Vec<f64>, DMatrix<f64>)> = (0..samples)
        .map(|_| {
            let t: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: DMatrix<f64> = DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
            let nv = v.norm().max(1e-300);
            (t, x, v / nv)
        })
        .collect();
    let mut violations = 0;
    let rows: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| {
            let mut best = f64::INFINITY;
            for (t, x, d) in &dirs {
                let v = d * r;
                let s: f64 = minor_tuple(&v, l.k).iter().map(|mm| mm.norm()).sum();
                let y = l.evaluate(t, x, &v);
                if let Some(w) = l.witness(s) {
                    if y < w * (1.0 - 1e-12) {
                        violations += 1;
                    }
                }
                best = best.min(y / s);
            }
            (r, best)
        })
        .collect();
    let non_decreasing = rows.windows(2).all(|w| w[1].1 >= w[0].1 * (1.0 - 1e-12));
    let grew = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) => b.1 >= 10.0 * a.1 && a.1 > 0.0,
        _ => false,
    };
    SuperlinearityReport { rows, non_decreasing, superlinear: non_decreasing && grew, witness_violations: violations }
}
