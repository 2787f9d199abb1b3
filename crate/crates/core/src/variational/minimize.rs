use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use super::integrand::IntegrandSpec;
use crate::error::{arg, Error, Result};
use crate::meshmaps::{
    exact_det_integral, hat_gradients, integrate_energy, Energy, JetSource, PwAffineMap, QuadratureRule,
};
use crate::rng::component_rng;

/// Settings for [`minimize`].
#[derive(Clone, Debug, PartialEq)]
pub struct MinimizeOptions {
    /// Stop when the max-norm of the gradient on free nodes is below this.
    pub tol: f64,
    pub max_iter: usize,
    pub quadrature_order: usize,
    /// Number of starts; start 0 is `u₀`, later ones add seeded interior
    /// perturbations of size `perturbation`.
    pub starts: usize,
    pub perturbation: f64,
    pub seed: u64,
    /// Re-project free nodal values onto the unit sphere after each step.
    pub sphere_target: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 10_000,
            quadrature_order: 4,
            starts: 1,
            perturbation: 0.05,
            seed: 0,
            sphere_target: false,
        }
    }
}

/// One row of the convergence report.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
    /// Exact `∫ det du` for planar maps.
    pub degree_integral: Option<f64>,
}

/// Why the descent stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterationCap,
    LineSearchFailed,
}

#[derive(Clone, Debug)]
pub struct MinimizeResult {
    pub map: PwAffineMap,
    pub energy: f64,
    pub initial_energy: f64,
    pub termination: Termination,
    pub report: Vec<IterationRecord>,
    /// Index of the start that produced `map`.
    pub start: usize,
    /// Final energy of every start, `None` when its initial energy was
    /// infinite.
    pub start_energies: Vec<Option<f64>>,
}

fn finite_energy(u: &PwAffineMap, l: &IntegrandSpec, q: &QuadratureRule) -> Result<Option<f64>> {
    Ok(match integrate_energy(u, l, q)? {
        Energy::Finite(v) => Some(v),
        Energy::Infinite => None,
    })
}

/// Gradient of the discrete energy with respect to all nodal values,
/// flattened like [`PwAffineMap::values`].
pub fn energy_gradient(u: &PwAffineMap, l: &IntegrandSpec, q: &QuadratureRule) -> Result<Vec<f64>> {
    let mesh = u.mesh();
    let (n, m) = (mesh.dim(), u.target_dim());
    if l.domain_dim() != n || l.target_dim() != m {
        return arg("integrand dimensions do not match the map");
    }
    let w = q.unit_weights();
    let local: Vec<Vec<f64>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let vol = mesh.cell_volume(c);
            let grads = hat_gradients(mesh, c);
            let v = u.cell_gradient(c);
            let mut gv_sum = DMatrix::zeros(m, n);
            let mut out = vec![0.0; (n + 1) * m];
            for (bary, wq) in q.points().iter().zip(&w) {
                let t = mesh.point(c, bary);
                let x = u.value_at(c, bary);
                let (gx, gv) = l.jet_gradient(&t, &x, &v);
                if gx.iter().chain(gv.iter()).any(|g| !g.is_finite()) {
                    return Err(Error::Evaluation(format!("non-finite gradient in cell {c}")));
                }
                for (a, ba) in bary.iter().enumerate() {
                    for i in 0..m {
                        out[a * m + i] += vol * wq * ba * gx[i];
                    }
                }
                gv_sum += gv * (vol * wq);
            }
            for a in 0..=n {
                for i in 0..m {
                    let mut s = 0.0;
                    for j in 0..n {
                        s += gv_sum[(i, j)] * grads[(a, j)];
                    }
                    out[a * m + i] += s;
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut g = vec![0.0; u.values().len()];
    for (c, loc) in local.iter().enumerate() {
        for (a, &vtx) in mesh.cell(c).iter().enumerate() {
            for i in 0..m {
                g[vtx * m + i] += loc[a * m + i];
            }
        }
    }
    Ok(g)
}

fn degree_of(u: &PwAffineMap) -> Option<f64> {
    exact_det_integral(u).ok()
}

fn project_sphere(values: &mut [f64], m: usize, free: &[bool]) {
    for (v, chunk) in values.chunks_mut(m).enumerate() {
        if free[v] {
            let r = chunk.iter().map(|c| c * c).sum::<f64>().sqrt();
            if r > 0.0 {
                chunk.iter_mut().for_each(|c| *c /= r);
            }
        }
    }
}

struct Run {
    map: PwAffineMap,
    energy: f64,
    termination: Termination,
    report: Vec<IterationRecord>,
}

fn descend(l: &IntegrandSpec, u0: PwAffineMap, e0: f64, opts: &MinimizeOptions, q: &QuadratureRule) -> Result<Run> {
    let m = u0.target_dim();
    let mesh = u0.mesh_arc().clone();
    let free: Vec<bool> = (0..mesh.num_vertices()).map(|v| !mesh.is_boundary(v)).collect();
    let mut u = u0;
    let mut energy = e0;
    let mut step = 1.0;
    let mut report = Vec::new();
    let mut termination = Termination::IterationCap;
    for iter in 0..=opts.max_iter {
        let mut g = energy_gradient(&u, l, q)?;
        for (v, chunk) in g.chunks_mut(m).enumerate() {
            if !free[v] {
                chunk.iter_mut().for_each(|c| *c = 0.0);
            }
        }
        let gnorm = g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let g2: f64 = g.iter().map(|c| c * c).sum();
        report.push(IterationRecord { iter, energy, grad_norm: gnorm, step: if iter == 0 { 0.0 } else { step }, degree_integral: degree_of(&u) });
        if gnorm <= opts.tol {
            termination = Termination::Converged;
            break;
        }
        if iter == opts.max_iter {
            break;
        }
        // Armijo backtracking from twice the last accepted step.
        let mut s = 2.0 * step;
        let accepted = loop {
            let mut values: Vec<f64> = u.values().iter().zip(&g).map(|(x, d)| x - s * d).collect();
            if opts.sphere_target {
                project_sphere(&mut values, m, &free);
            }
            let cand = u.with_values(values)?;
            if let Some(e) = finite_energy(&cand, l, q)? {
                if e <= energy - 1e-4 * s * g2 && e <= energy {
                    break Some((cand, e));
                }
            }
            s *= 0.5;
            if s * gnorm < 1e-16 * (1.0 + u.values().iter().fold(0.0f64, |a, b| a.max(b.abs()))) {
                break None;
            }
        };
        match accepted {
            Some((cand, e)) => {
                if e > energy {
                    return Err(Error::Invariant("energy increased along the descent".into()));
                }
                u = cand;
                energy = e;
                step = s;
            }
            None => {
                termination = Termination::LineSearchFailed;
                break;
            }
        }
    }
    Ok(Run { map: u, energy, termination, report })
}

/// Gradient descent with Armijo backtracking on interior nodal values;
/// boundary nodes stay at the values of `u₀`.
pub fn minimize(l: &IntegrandSpec, u0: &PwAffineMap, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    let mesh = u0.mesh_arc().clone();
    if l.domain_dim() != mesh.dim() || l.target_dim() != u0.target_dim() {
        return arg("integrand dimensions do not match the map");
    }
    if opts.starts == 0 {
        return arg("at least one start is required");
    }
    let q = QuadratureRule::new(mesh.dim(), opts.quadrature_order)?;
    let e0 = finite_energy(u0, l, &q)?.ok_or_else(|| Error::Argument("initial energy is infinite".into()))?;
    let m = u0.target_dim();
    let starts: Vec<PwAffineMap> = (0..opts.starts)
        .map(|s| {
            if s == 0 {
                return Ok(u0.clone());
            }
            let mut rng = component_rng(opts.seed, &format!("minimize-start-{s}"));
            let values = u0
                .values()
                .iter()
                .enumerate()
                .map(|(k, x)| {
                    let d = rng.gen_range(-opts.perturbation..opts.perturbation);
                    if mesh.is_boundary(k / m) { *x } else { x + d }
                })
                .collect();
            u0.with_values(values)
        })
        .collect::<Result<_>>()?;
    let runs: Vec<Result<Option<Run>>> = starts
        .into_par_iter()
        .map(|s| match finite_energy(&s, l, &q)? {
            Some(e) => descend(l, s, e, opts, &q).map(Some),
            None => Ok(None),
        })
        .collect();
    let runs: Vec<Option<Run>> = runs.into_iter().collect::<Result<_>>()?;
    let start_energies: Vec<Option<f64>> = runs.iter().map(|r| r.as_ref().map(|r| r.energy)).collect();
    let (best, _) = start_energies
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.map(|e| (i, e)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("start 0 has finite energy");
    let run = runs.into_iter().nth(best).flatten().expect("selected start exists");
    Ok(MinimizeResult {
        map: run.map,
        energy: run.energy,
        initial_energy: e0,
        termination: run.termination,
        report: run.report,
        start: best,
        start_energies,
    })
}

/// Convergence report as CSV with header
/// `iter,energy,grad_norm,step,degree_integral`.
pub fn report_csv(report: &[IterationRecord]) -> String {
    let f = crate::meshmaps::io_support::fmt_f64;
    let mut s = String::from("iter,energy,grad_norm,step,degree_integral\n");
    for r in report {
        s += &format!(
            "{},{},{},{},{}\n",
            r.iter,
            f(r.energy),
            f(r.grad_norm),
            f(r.step),
            r.degree_integral.map(f).unwrap_or_default()
        );
    }
    s
}
