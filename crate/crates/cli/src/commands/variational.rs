use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use polyvar::meshmaps::{build_box_mesh, build_disc_mesh, interpolate, write_mesh_map, JetSource};
use polyvar::rng::component_rng;
use polyvar::variational::{
    decreasing_beyond, degree_integral, example_lagrangian, gap_experiment, minimize, report_csv,
    stripe_kr_sequence, weak_minor_convergence_experiment, IntegrandSpec, MinimizeOptions, StripePair, Termination,
    TestFunction,
};
use polyvar::youngmeasure::KrWeight;

use super::{one_of, perturb_interior, rank_one_pair};
use crate::cli::{GapArgs, MinimizeArgs, WeakMinorsArgs};
use crate::error::CliError;
use crate::output::{num, Run};
use crate::params::{ensure, Params};

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Converged => "converged",
        Termination::IterationCap => "iteration_cap",
        Termination::LineSearchFailed => "line_search_failed",
    }
}

/// `‖v‖²` with witness `s²`-growth, on maps into ℝᵐ.
fn dirichlet(m: usize) -> Result<IntegrandSpec, CliError> {
    let gradient = |_: &[f64], x: &[f64], tuple: &[DMatrix<f64>]| (vec![0.0; x.len()], vec![&tuple[0] * 2.0]);
    Ok(IntegrandSpec::new(
        1,
        2,
        m,
        |_: &[f64], _: &[f64], tuple: &[DMatrix<f64>]| tuple[0].norm_squared(),
        Some(Arc::new(gradient)),
        Some(Arc::new(|s: f64| s * s)),
    )?)
}

fn check_options(max_iter: usize, tol: f64, starts: usize, order: usize) -> Result<(), CliError> {
    ensure(max_iter > 0, || "--max-iter must be positive".into())?;
    ensure(tol >= 0.0, || format!("--tol {tol} must be non-negative"))?;
    ensure(starts > 0, || "--starts must be positive".into())?;
    ensure((1..=12).contains(&order), || format!("--quadrature-order {order} outside 1..=12"))
}

fn non_increasing(xs: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = xs.collect();
    v.windows(2).all(|w| w[1] <= w[0])
}

pub fn minimize_cmd(
    a: &MinimizeArgs,
    p: &mut Params,
    seed: u64,
) -> Result<impl FnOnce(&mut Run) -> Result<(), CliError> + Send, CliError> {
    let mesh_kind = one_of("mesh", &p.get("mesh", a.mesh.clone(), "disc".into())?, &["disc", "box"])?;
    let h = p.get("h", a.h, 0.1)?;
    let l_kind = one_of("L", &p.get("L", a.l.clone(), "example".into())?, &["example", "dirichlet"])?;
    let target = one_of("target", &p.get("target", a.target.clone(), "plane".into())?, &["plane", "sphere"])?;
    let eps = p.get("eps", a.eps, 1e-3)?;
    let pp = p.get("p", a.p, 1.5)?;
    let defaults = MinimizeOptions::default();
    let max_iter = p.get("max-iter", a.max_iter, 200usize)?;
    let tol = p.get("tol", a.tol, defaults.tol)?;
    let order = p.get("quadrature-order", a.quadrature_order, defaults.quadrature_order)?;
    let starts = p.get("starts", a.starts, defaults.starts)?;
    let perturbation = p.get("perturbation", a.perturbation, defaults.perturbation)?;
    let init = p.get("init-perturbation", a.init_perturbation, 0.0)?;
    ensure(h > 0.0 && h < 1.0, || format!("--h {h} outside (0, 1)"))?;
    ensure(init >= 0.0 && perturbation >= 0.0, || "perturbations must be non-negative".into())?;
    check_options(max_iter, tol, starts, order)?;
    let sphere = target == "sphere";
    ensure(!(sphere && l_kind == "example"), || "--target sphere requires --L dirichlet".into())?;
    ensure(!(sphere && mesh_kind == "box"), || "--target sphere requires --mesh disc".into())?;
    let m = if sphere { 3 } else { 2 };
    let l = if l_kind == "example" { example_lagrangian(eps, pp)? } else { dirichlet(m)? };
    let opts = MinimizeOptions { tol, max_iter, quadrature_order: order, starts, perturbation, seed, sphere_target: sphere };
    Ok(move |run: &mut Run| {
        let mesh = Arc::new(if mesh_kind == "disc" {
            build_disc_mesh(h)?
        } else {
            build_box_mesh(2, (1.0 / h).ceil() as usize)?
        });
        let id = if sphere {
            interpolate(|t| vec![t[0], t[1], (1.0 - t[0] * t[0] - t[1] * t[1]).max(0.0).sqrt()], mesh, 3)?
        } else {
            interpolate(|t| t.to_vec(), mesh, 2)?
        };
        let mut u0 = perturb_interior(&id, &mut component_rng(seed, "minimize/initial"), init)?;
        if sphere {
            let values = u0
                .values()
                .chunks(3)
                .flat_map(|x| {
                    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                    [x[0] / r, x[1] / r, x[2] / r]
                })
                .collect();
            u0 = u0.with_values(values)?;
        }
        let r = minimize(&l, &u0, &opts)?;
        run.text("report.csv", &report_csv(&r.report))?;
        run.text("map.txt", &write_mesh_map(&r.map))?;
        run.result("initial_energy", r.initial_energy);
        run.result("energy", r.energy);
        run.result("termination", termination_name(r.termination));
        run.result("iterations", r.report.last().map(|x| x.iter).unwrap_or(0));
        run.result("start", r.start);
        run.result("start_energies", r.start_energies.iter().map(|e| e.unwrap_or(f64::NAN)).collect::<Vec<_>>());
        run.check("energy_not_above_initial", r.energy <= r.initial_energy);
        run.check("report_energy_non_increasing", non_increasing(r.report.iter().map(|x| x.energy)));
        run.check("boundary_trace_preserved", r.map.boundary_trace().shares(&u0.boundary_trace()));
        if !sphere {
            let d0 = degree_integral(&u0)?;
            let d = degree_integral(&r.map)?;
            run.result("degree_integral", d);
            run.check("degree_preserved", (d - d0).abs() <= 1e-10 * d0.abs().max(1.0));
        }
        if sphere {
            let on_sphere = r.map.values().chunks(JetSource::target_dim(&r.map)).all(|x| {
                ((x.iter().map(|c| c * c).sum::<f64>()).sqrt() - 1.0).abs() <= 1e-12
            });
            run.check("values_on_sphere", on_sphere);
        }
        Ok(())
    })
}

pub fn gap(a: &GapArgs, p: &mut Params, seed: u64) -> Result<impl FnOnce(&mut Run) -> Result<(), CliError> + Send, CliError> {
    let eps = p.get("eps", a.eps, 1e-3)?;
    let pp = p.get("p", a.p, 1.5)?;
    let h = p.get("h", a.h, 0.05)?;
    let defaults = MinimizeOptions::default();
    let max_iter = p.get("max-iter", a.max_iter, 500usize)?;
    let tol = p.get("tol", a.tol, defaults.tol)?;
    let starts = p.get("starts", a.starts, defaults.starts)?;
    let order = p.get("quadrature-order", a.quadrature_order, defaults.quadrature_order)?;
    ensure(h > 0.0 && h < 1.0, || format!("--h {h} outside (0, 1)"))?;
    check_options(max_iter, tol, starts, order)?;
    let l = example_lagrangian(eps, pp)?;
    let opts = MinimizeOptions { tol, max_iter, quadrature_order: order, starts, seed, ..defaults };
    Ok(move |run: &mut Run| {
        let g = gap_experiment(&l, eps, pp, h, &opts)?;
        let rows: Vec<Vec<String>> = g.blowup.iter().map(|b| vec![num(b.h), num(b.det_energy)]).collect();
        run.csv("blowup.csv", &["h", "det_energy"], &rows)?;
        run.text("report.csv", &report_csv(&g.minimization.report))?;
        run.text("map.txt", &write_mesh_map(&g.minimization.map))?;
        run.result("competitor_energy", g.competitor_energy);
        run.result("minimizer_energy", g.minimizer_energy);
        run.result("identity_energy", g.identity_energy);
        run.result("lower_bound", g.lower_bound);
        run.result("certified_bound", g.certified_bound);
        run.result("degree_integral", g.degree_integral);
        run.result("gap_ratio", g.gap_ratio);
        run.result("blowup_exponent", g.blowup_exponent);
        run.result("termination", termination_name(g.minimization.termination));
        let scale = g.lower_bound.abs().max(1.0);
        run.check("degree_equals_area", (g.degree_integral - g.lower_bound).abs() <= 1e-10 * scale);
        run.check("minimizer_above_certified_bound", g.minimizer_energy >= g.certified_bound - 1e-8 * scale);
        run.check("minimizer_not_above_identity", g.minimizer_energy <= g.identity_energy);
        run.check("energy_gap_present", g.lower_bound > g.competitor_energy);
        run.check("blowup_exponent_near_minus_two", (-2.5..=-1.5).contains(&g.blowup_exponent));
        Ok(())
    })
}

pub fn weak_minors(
    a: &WeakMinorsArgs,
    p: &mut Params,
    seed: u64,
) -> Result<impl FnOnce(&mut Run) -> Result<(), CliError> + Send, CliError> {
    let pairs = p.get("pairs", a.pairs, 5usize)?;
    let tests = p.get("tests", a.tests, 3usize)?;
    let i_max = p.get("i-max", a.i_max, 64usize)?;
    let psi = one_of("psi", &p.get("psi", a.psi.clone(), "tent".into())?, &["tent", "bump"])?;
    ensure(pairs > 0 && tests > 0, || "--pairs and --tests must be positive".into())?;
    ensure((4..=1024).contains(&i_max) && i_max.is_power_of_two(), || format!("--i-max {i_max} is not a power of two in 4..=1024"))?;
    let i_list: Vec<usize> = (0..=i_max.trailing_zeros()).map(|e| 1usize << e).collect();
    Ok(move |run: &mut Run| {
        let mut rng = component_rng(seed, "weak-minors/tests");
        let test_fns: Vec<TestFunction> = (0..tests)
            .map(|_| {
                // The constant dominates, so P > 0 on the unit square.
                let c0 = rng.gen_range(0.5..1.5);
                let mut poly = vec![(0, 0, c0)];
                for (i, j) in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
                    poly.push((i, j, rng.gen_range(-c0 / 5.0..c0 / 5.0)));
                }
                if psi == "tent" { TestFunction::Tent(poly) } else { TestFunction::Bump(poly) }
            })
            .collect();
        let mut rng = component_rng(seed, "weak-minors/pairs");
        let mut rows = Vec::new();
        let mut kr_rows = Vec::new();
        let mut decreasing = true;
        let mut converging = true;
        let mut worst_final = 0.0f64;
        let mut kr_decreasing = true;
        for k in 0..pairs {
            let (a, b) = rank_one_pair(&mut rng, 2, 2);
            let pair = StripePair::new(a, b, rng.gen_range(0.2..0.8))?;
            let table = weak_minor_convergence_experiment(&pair, &i_list, &test_fns)?;
            for j in 0..tests {
                let col: Vec<(usize, f64)> = table.iter().map(|row| (row.i, row.differences[j])).collect();
                for (i, d) in &col {
                    rows.push(vec![k.to_string(), j.to_string(), i.to_string(), num(pair.lambda()), num(*d)]);
                }
                let (first, last) = (col[0].1, col.last().unwrap().1);
                worst_final = worst_final.max(last);
                converging &= last < first;
                if psi == "tent" {
                    decreasing &= decreasing_beyond(&col, 4, 1e-12);
                }
            }
            let seq = stripe_kr_sequence(&pair, &i_list, KrWeight::One)?;
            kr_decreasing &= seq.windows(2).all(|w| w[1].1 < w[0].1);
            kr_rows.extend(seq.iter().map(|(i, d)| vec![k.to_string(), i.to_string(), num(*d)]));
        }
        run.csv("weak_minors.csv", &["pair", "test", "i", "lambda", "difference"], &rows)?;
        run.csv("stripe_kr.csv", &["pair", "i", "distance"], &kr_rows)?;
        run.result("max_final_difference", worst_final);
        run.result("i_max", i_max);
        run.check("pairings_converge", converging);
        if psi == "tent" {
            run.check("pairings_decrease_from_i_4", decreasing);
        }
        if i_max >= 64 {
            run.check("final_pairing_below_1e-3", worst_final < 1e-3);
        }
        run.check("stripe_kr_decreasing", kr_decreasing);
        Ok(())
    })
}
