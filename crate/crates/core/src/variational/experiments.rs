use std::f64::consts::PI;
use std::sync::Arc;

use super::integrand::IntegrandSpec;
use super::minimize::{minimize, MinimizeOptions, MinimizeResult};
use crate::error::{arg, Result};
use crate::exterior::determinant;
use crate::meshmaps::{build_disc_mesh, exact_det_integral, interpolate, PwAffineMap};
use crate::reduce::pairwise_sum;

/// Exact `∫ det du` of a planar piecewise-affine map.
pub fn degree_integral(u: &PwAffineMap) -> Result<f64> {
    exact_det_integral(u)
}

/// Radial contributions to the energy of `ū(t) = t/|t|` on the unit disc,
/// split at `|t| = δ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompetitorParts {
    /// `∫‖dū‖^p` over `δ ≤ |t| ≤ 1` and over `|t| < δ`.
    pub gradient_outer: f64,
    pub gradient_inner: f64,
    /// `∫|t|⁴‖dū‖⁴` over the same pieces.
    pub weighted_outer: f64,
    pub weighted_inner: f64,
    /// `∫|det dū|² = 0`.
    pub det: f64,
}

impl CompetitorParts {
    pub fn total(&self, eps: f64) -> f64 {
        eps * (self.gradient_outer + self.gradient_inner + self.weighted_outer + self.weighted_inner) + self.det
    }
}

/// With `‖dū‖ = 1/r` and `det dū = 0`:
/// `∫‖dū‖^p = 2π/(2-p)` and `∫|t|⁴‖dū‖⁴ = π`.
pub fn competitor_parts(p: f64, delta: f64) -> Result<CompetitorParts> {
    if !(p < 2.0) {
        return arg(format!("p = {p}: the gradient term diverges for p ≥ 2"));
    }
    if !(p > 0.0) {
        return arg(format!("p = {p} must be positive"));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return arg(format!("δ = {delta} outside (0, 1/2)"));
    }
    let e = 2.0 - p;
    Ok(CompetitorParts {
        gradient_outer: 2.0 * PI * (1.0 - delta.powf(e)) / e,
        gradient_inner: 2.0 * PI * delta.powf(e) / e,
        weighted_outer: PI * (1.0 - delta * delta),
        weighted_inner: PI * delta * delta,
        det: 0.0,
    })
}

/// Energy of `ū = t/|t|` under [`super::example_lagrangian`]`(ε, p)`.
pub fn competitor_energy_semianalytic(eps: f64, p: f64, delta: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return arg(format!("ε = {eps} must be positive"));
    }
    Ok(competitor_parts(p, delta)?.total(eps))
}

/// `(h, ∫|det du_h|²)` for the interpolant of `ū`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowupRow {
    pub h: f64,
    pub det_energy: f64,
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Exact `∫|det du|²` of a planar piecewise-affine map.
pub fn det_energy(u: &PwAffineMap) -> f64 {
    let mesh = u.mesh_arc();
    let parts: Vec<f64> =
        (0..mesh.num_cells()).map(|c| determinant(&u.cell_gradient(c)).powi(2) * mesh.cell_volume(c)).collect();
    pairwise_sum(&parts)
}

/// `∫|det du_h|²` for the interpolant of `t/|t|` on disc meshes `h, h/2, h/4`
/// and the fitted exponent in `h`.
pub fn det_blowup(h: f64) -> Result<(Vec<BlowupRow>, f64)> {
    let mut rows = Vec::new();
    for s in [1.0, 0.5, 0.25] {
        let hh = h * s;
        let mesh = Arc::new(build_disc_mesh(hh)?);
        let u = interpolate(|t| { let r = t[0].hypot(t[1]); vec![t[0] / r, t[1] / r] }, mesh, 2)?;
        rows.push(BlowupRow { h: hh, det_energy: det_energy(&u) });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.det_energy).collect();
    Ok((rows, fit_exponent(&xs, &ys)))
}

/// Output of [`gap_experiment`].
#[derive(Clone, Debug)]
pub struct GapRecord {
    pub eps: f64,
    pub p: f64,
    pub h: f64,
    pub competitor_energy: f64,
    pub minimizer_energy: f64,
    pub identity_energy: f64,
    /// `|B_h|`, the area of the inscribed polygon.
    pub lower_bound: f64,
    pub degree_integral: f64,
    /// `(∫ det du)² / |B_h|` for the returned minimizer; bounds its energy
    /// from below by Cauchy–Schwarz.
    pub certified_bound: f64,
    /// `lower_bound / competitor_energy`.
    pub gap_ratio: f64,
    pub blowup: Vec<BlowupRow>,
    pub blowup_exponent: f64,
    pub minimization: MinimizeResult,
}

/// Compare the energy of `t/|t|` with discrete minimizers over maps with
/// identity boundary values on the disc.
pub fn gap_experiment(l: &IntegrandSpec, eps: f64, p: f64, h: f64, opts: &MinimizeOptions) -> Result<GapRecord> {
    if !(h > 0.0 && h < 1.0) {
        return arg(format!("h = {h} outside (0, 1)"));
    }
    let competitor = competitor_energy_semianalytic(eps, p, 0.25)?;
    let mesh = Arc::new(build_disc_mesh(h)?);
    let area = mesh.total_volume();
    let id = interpolate(|t| t.to_vec(), mesh, 2)?;
    let min = minimize(l, &id, opts)?;
    let degree = degree_integral(&min.map)?;
    let (blowup, exponent) = det_blowup(h)?;
    Ok(GapRecord {
        eps,
        p,
        h,
        competitor_energy: competitor,
        minimizer_energy: min.energy,
        identity_energy: min.initial_energy,
        lower_bound: area,
        degree_integral: degree,
        certified_bound: degree * degree / area,
        gap_ratio: area / competitor,
        blowup,
        blowup_exponent: exponent,
        minimization: min,
    })
}

/// Richardson extrapolation of a quantity with error `O(h^order)`.
pub fn richardson(coarse: f64, fine: f64, ratio: f64, order: f64) -> f64 {
    let r = ratio.powf(order);
    (r * fine - coarse) / (r - 1.0)
}

/// `|B_h|` at `h` and `h/2` combined by Richardson extrapolation. The
/// inscribed-polygon defect is `O(h²)`.
pub fn extrapolated_disc_area(h: f64) -> Result<f64> {
    let a = build_disc_mesh(h)?.total_volume();
    let b = build_disc_mesh(h / 2.0)?.total_volume();
    let ratio = (1.0 / (h / 2.0)).ceil() / (1.0 / h).ceil();
    Ok(richardson(a, b, ratio, 2.0))
}

