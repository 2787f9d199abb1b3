use nalgebra::DMatrix;

use super::measure::{integrate, AtomicYoungMeasure, JetAtom};
use crate::error::{arg, Error, Result};
use crate::exterior::lift_minors_unchecked;
use crate::meshmaps::{checked_eval, Energy, JetFunction};

/// Tolerance on the spread of `x` within a fiber.
pub const GRAPH_TOL: f64 = 1e-9;

/// The fiber of a graph-concentrated measure over one point `(cell, t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Fiber {
    pub cell: usize,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    /// Mass of the fiber under `η`.
    pub mass: f64,
    /// `Γ_t` as matrix atoms with probabilities summing to one.
    pub gamma: Vec<(DMatrix<f64>, f64)>,
    /// `g_i = ∫ ∧_i v dΓ_t` for `i = 1..=k`.
    pub moments: Vec<DMatrix<f64>>,
}

/// `η = dt ⊗ δ_{u(t)} ⊗ Γ_t` over the atoms' base points.
#[derive(Clone, Debug, PartialEq)]
pub struct Disintegration {
    pub degree: usize,
    pub fibers: Vec<Fiber>,
}

/// Outcome of [`disintegrate`].
#[derive(Clone, Debug, PartialEq)]
pub enum DisintegrationOutcome {
    Graph(Disintegration),
    /// Atoms over the same base point with distinct `x`.
    NonGraph { cell: usize, spread: f64 },
}

/// Group atoms by base point `(cell, t)` and test graph concentration.
pub fn disintegrate(eta: &AtomicYoungMeasure) -> DisintegrationOutcome {
    let k = eta.degree();
    let mut fibers = Vec::new();
    for cell_atoms in eta.sorted_cells() {
        let mut start = 0;
        while start < cell_atoms.len() {
            let t = &cell_atoms[start].t;
            let mut end = start + 1;
            while end < cell_atoms.len() && &cell_atoms[end].t == t {
                end += 1;
            }
            let group: &[&JetAtom] = &cell_atoms[start..end];
            let x0 = &group[0].x;
            let spread = group
                .iter()
                .map(|a| a.x.iter().zip(x0).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if spread > GRAPH_TOL {
                return DisintegrationOutcome::NonGraph { cell: group[0].cell, spread };
            }
            let mass = group.iter().fold(0.0, |s, a| s + a.weight);
            let gamma: Vec<(DMatrix<f64>, f64)> = group.iter().map(|a| (a.v.clone(), a.weight / mass)).collect();
            let moments = (1..=k)
                .map(|i| {
                    let mut g: Option<DMatrix<f64>> = None;
                    for (v, p) in &gamma {
                        let term = lift_minors_unchecked(v, i).into_entries() * *p;
                        g = Some(match g {
                            None => term,
                            Some(acc) => acc + term,
                        });
                    }
                    g.expect("fibers are non-empty")
                })
                .collect();
            fibers.push(Fiber { cell: group[0].cell, t: t.clone(), x: x0.clone(), mass, gamma, moments });
            start = end;
        }
    }
    DisintegrationOutcome::Graph(Disintegration { degree: k, fibers })
}

/// `max_{fibers, 2 ≤ i ≤ k} ‖g_i - ∧_i g₁‖`.
pub fn structure_residual(d: &Disintegration) -> f64 {
    let mut worst = 0.0f64;
    for f in &d.fibers {
        for i in 2..=d.degree {
            let lifted = lift_minors_unchecked(&f.moments[0], i).into_entries();
            worst = worst.max((&f.moments[i - 1] - lifted).norm());
        }
    }
    worst
}

/// Tolerance on the structure residual for a generalized map.
pub const STRUCTURE_TOL: f64 = 1e-9;

/// `∫ L dη - Σ_fibers mass · L(t, x, g₁)`.
pub fn jensen_gap(eta: &AtomicYoungMeasure, l: &dyn JetFunction) -> Result<f64> {
    let d = match disintegrate(eta) {
        DisintegrationOutcome::Graph(d) => d,
        DisintegrationOutcome::NonGraph { cell, .. } => {
            return arg(format!("measure is not concentrated on a graph (cell {cell})"));
        }
    };
    let s = structure_residual(&d);
    if s > STRUCTURE_TOL {
        return arg(format!("structure residual {s} exceeds {STRUCTURE_TOL}"));
    }
    let lhs = integrate(eta, l)?.value();
    let mut parts = Vec::with_capacity(d.fibers.len());
    for f in &d.fibers {
        parts.push(f.mass * checked_eval(l, &f.t, &f.x, &f.moments[0])?);
    }
    let rhs = Energy::from_sum(&parts).value();
    if lhs == f64::INFINITY && rhs == f64::INFINITY {
        return Err(Error::Evaluation("both sides of the Jensen gap are infinite".into()));
    }
    Ok(lhs - rhs)
}
