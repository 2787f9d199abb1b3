use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use polyvar::exterior::determinant;
use polyvar::meshmaps::{build_box_mesh, build_disc_mesh, interpolate, QuadratureRule};
use polyvar::rng::component_rng;
use polyvar::variational::{example_lagrangian, minimize, IntegrandSpec, MinimizeOptions};
use polyvar::youngmeasure::{
    disintegrate, from_map, jensen_gap, kr_distance, laminate, read_measure, structure_residual, tightness_profile,
    Disintegration, DisintegrationOutcome, KrWeight, STRUCTURE_TOL,
};

use super::{affine_base, matrix, one_of, perturb_interior, rank_one_pair};
use crate::cli::{JensenArgs, KrArgs, StructureArgs, TightnessArgs};
use crate::error::CliError;
use crate::output::{num, Run};
use crate::params::{ensure, Params};

pub fn structure(
    a: &StructureArgs,
    p: &mut Params,
    seed: u64,
) -> Result<impl FnOnce(&mut Run) -> Result<(), CliError> + Send, CliError> {
    let kind = one_of("laminate", &p.get("laminate", a.laminate.clone(), "rank1".into())?, &["rank1", "pmId"])?;
    let lambda = p.get("lambda", a.lambda, 0.5)?;
    let dim = p.get("dim", a.dim, 2usize)?;
    let divisions = p.get("divisions", a.divisions, 2usize)?;
    ensure(lambda > 0.0 && lambda < 1.0, || format!("--lambda {lambda} outside (0, 1)"))?;
    ensure((2..=4).contains(&dim), || format!("--dim {dim} outside 2..=4"))?;
    ensure(divisions > 0, || "--divisions must be positive".into())?;
    Ok(move |run: &mut Run| {
        let mut rng = component_rng(seed, "structure/laminate");
        let (a, b, base) = if kind == "rank1" {
            let base = affine_base(&mut rng, dim, dim, divisions)?;
            let (a, b) = rank_one_pair(&mut rng, dim, dim);
            (a, b, base)
        } else {
            let mesh = Arc::new(build_box_mesh(dim, divisions)?);
            let id = DMatrix::<f64>::identity(dim, dim);
            (id.clone(), -id, interpolate(|_| vec![0.0; dim], mesh, dim)?)
        };
        let q = QuadratureRule::new(dim, 1)?;
        let eta = laminate(&a, &b, lambda, &base, &q)?;
        let d = match disintegrate(&eta) {
            DisintegrationOutcome::Graph(d) => d,
            DisintegrationOutcome::NonGraph { cell, spread } => {
                return Err(CliError::Numerical(format!("laminate is not graph-concentrated in cell {cell} (spread {spread})")))
            }
        };
        let residual = structure_residual(&d);
        let rows: Vec<Vec<String>> = d
            .fibers
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let single = Disintegration { degree: d.degree, fibers: vec![f.clone()] };
                let mut row = vec![i.to_string(), f.cell.to_string()];
                row.extend(f.t.iter().map(|x| num(*x)));
                row.push(num(f.mass));
                row.push(num(structure_residual(&single)));
                row
            })
            .collect();
        let mut header = vec!["fiber".to_string(), "cell".to_string()];
        header.extend((0..dim).map(|j| format!("t{j}")));
        header.extend(["mass".to_string(), "residual".to_string()]);
        let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        run.csv("structure.csv", &header, &rows)?;
        run.result("residual", residual);
        run.result("fibers", d.fibers.len());
        run.result("det_a", determinant(&a));
        run.result("det_b", determinant(&b));
        if kind == "rank1" {
            run.check("rank_one_laminate_is_structured", residual <= 1e-12);
        } else {
            run.check("pm_identity_violates_structure", residual > STRUCTURE_TOL);
        }
        Ok(())
    })
}

fn random_polyconvex(rng: &mut impl Rng) -> Result<IntegrandSpec, CliError> {
    let c: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..2.0)).collect();
    let v0 = matrix(rng, 2, 2, 1.0);
    let d0 = rng.gen_range(-1.0..1.0);
    let p = rng.gen_range(1.0..3.0);
    let alpha = rng.gen_range(-1.0..1.0);
    Ok(IntegrandSpec::new(
        2,
        2,
        2,
        move |t: &[f64], x: &[f64], tu: &[DMatrix<f64>]| {
            let v = &tu[0];
            let d = tu[1][(0, 0)];
            c[0] * (v - &v0).norm().powf(p)
                + c[1] * (d - d0).powi(2)
                + c[2] * (alpha * d).exp()
                + c[3] * (1.0 + t[0] * t[0]) * (d.abs() + v.norm_squared())
                + c[4] * x[0] * (v[(0, 0)] + d)
        },
        None,
        None,
    )?)
}

const JENSEN_TOL: f64 = 1e-10;

pub fn jensen(
    a: &JensenArgs,
    p: &mut Params,
    seed: u64,
) -> Result<impl FnOnce(&mut Run) -> Result<(), CliError> + Send, CliError> {
    let kind = one_of("L", &p.get("L", a.l.clone(), "example".into())?, &["example", "polyconvex", "negdet"])?;
    let trials = p.get("trials", a.trials, 100usize)?;
    let eps = p.get("eps", a.eps, 1e-3)?;
    let pp = p.get("p", a.p, 1.5)?;
    ensure(trials > 0, || "--trials must be positive".into())?;
    let example = example_lagrangian(eps, pp)?;
    Ok(move |run: &mut Run| {
        let mut rng = component_rng(seed, "jensen/laminates");
        let mut integrands = component_rng(seed, "jensen/integrands");
        let q = QuadratureRule::new(2, 1)?;
        let negdet = |_: &[f64], _: &[f64], v: &DMatrix<f64>| -determinant(v).abs();
        let mut rows = Vec::new();
        let mut min_gap = f64::INFINITY;
        for trial in 0..trials {
            let base = affine_base(&mut rng, 2, 2, 2)?;
            let (a, b) = rank_one_pair(&mut rng, 2, 2);
            let lambda = rng.gen_range(0.1..0.9);
            let eta = laminate(&a, &b, lambda, &base, &q)?;
            let gap = match kind {
                "example" => jensen_gap(&eta, &example)?,
                "polyconvex" => jensen_gap(&eta, &random_polyconvex(&mut integrands)?)?,
                _ => jensen_gap(&eta, &negdet)?,
            };
            min_gap = min_gap.min(gap);
            rows.push(vec![trial.to_string(), num(lambda), num(determinant(&a)), num(determinant(&b)), num(gap)]);
        }
        run.csv("jensen.csv", &["trial", "lambda", "det_a", "det_b", "gap"], &rows)?;
        run.result("trials", trials);
        run.result("min_gap", min_gap);
        if kind == "negdet" {
            // diag(1, 1) and diag(1, -1) over the identity: the gap is -1.
            let mesh = Arc::new(build_box_mesh(2, 1)?);
            let id = interpolate(|t| t.to_vec(), mesh, 2)?;
            let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
            let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
            let g = jensen_gap(&laminate(&a, &b, 0.5, &id, &q)?, &negdet)?;
            run.result("counterexample_gap", g);
            run.check("counterexample_gap_is_minus_one", (g + 1.0).abs() <= 1e-12);
        } else {
            run.check("jensen_inequality", min_gap >= -JENSEN_TOL);
        }
        Ok(())
    })
}

pub fn kr(a: &KrArgs, p: &mut Params, _seed: u64) -> Result<impl FnOnce(&mut Run) -> Result<(), CliError> + Send, CliError> {
    let path_a = p.require("a", a.a.clone())?;
    let path_b = p.require("b", a.b.clone())?;
    let weight_name = one_of("weight", &p.get("weight", a.weight.clone(), "rk".into())?, &["one", "rk"])?;
    let load = |path: &str| -> Result<_, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {path}: {e}")))?;
        Ok(read_measure(&text)?)
    };
    let mu = load(&path_a)?;
    let nu = load(&path_b)?;
    let weight = if weight_name == "one" { KrWeight::One } else { KrWeight::Rk(mu.degree().min(nu.degree())) };
    Ok(move |run: &mut Run| {
        let d = kr_distance(&mu, &nu, weight)?;
        run.csv("kr.csv", &["a", "b", "weight", "distance"], &[vec![path_a, path_b, weight_name.into(), num(d)]])?;
        run.result("distance", d);
        run.result("atoms_a", mu.atoms().len());
        run.result("atoms_b", nu.atoms().len());
        run.check("distance_non_negative", d >= 0.0 && d.is_finite());
        run.print(format!("{d}"));
        Ok(())
    })
}

pub fn tightness(
    a: &TightnessArgs,
    p: &mut Params,
    seed: u64,
) -> Result<impl FnOnce(&mut Run) -> Result<(), CliError> + Send, CliError> {
    let h = p.get("h", a.h, 0.1)?;
    let eps = p.get("eps", a.eps, 1e-3)?;
    let pp = p.get("p", a.p, 1.5)?;
    let iterates = p.get("iterates", a.iterates, 5usize)?;
    let stride = p.get("stride", a.stride, 10usize)?;
    let perturbation = p.get("perturbation", a.perturbation, 0.1)?;
    let radii = p.get("radii", a.radii, 41usize)?;
    let r_max = p.get("r-max", a.r_max, 20.0)?;
    ensure(h > 0.0 && h < 1.0, || format!("--h {h} outside (0, 1)"))?;
    ensure(iterates > 0, || "--iterates must be positive".into())?;
    ensure(radii >= 2, || "--radii must be at least 2".into())?;
    ensure(r_max > 0.0, || "--r-max must be positive".into())?;
    ensure(perturbation >= 0.0, || "--perturbation must be non-negative".into())?;
    let l = example_lagrangian(eps, pp)?;
    Ok(move |run: &mut Run| {
        let mesh = Arc::new(build_disc_mesh(h)?);
        let area = mesh.total_volume();
        let id = interpolate(|t| t.to_vec(), mesh, 2)?;
        let u0 = perturb_interior(&id, &mut component_rng(seed, "tightness/start"), perturbation)?;
        let q = QuadratureRule::new(2, 2)?;
        let mut family = Vec::new();
        let mut energies = Vec::new();
        for j in 0..iterates {
            let opts = MinimizeOptions { max_iter: j * stride, tol: 0.0, seed, ..Default::default() };
            let r = minimize(&l, &u0, &opts)?;
            energies.push(r.energy);
            family.push(from_map(&r.map, &q)?);
        }
        // ∫L dη for the probability-normalized measures.
        let c = energies.iter().cloned().fold(0.0f64, f64::max) / area;
        let x_radius = family
            .iter()
            .flat_map(|eta| eta.atoms().iter().map(|a| a.x.iter().map(|x| x * x).sum::<f64>().sqrt()))
            .fold(0.0f64, f64::max);
        let rs: Vec<f64> = (0..radii).map(|i| r_max * i as f64 / (radii - 1) as f64).collect();
        let tail = tightness_profile(&family, &rs, &[0.0, 0.0])?;
        let mut rows = Vec::new();
        let mut bound_holds = true;
        for (r, t) in rs.iter().zip(&tail) {
            // Outside Z(R) with R ≥ max|x| forces s = ‖v‖ + |det v| > R,
            // where r_k = 1 + s ≤ L / A(R) with A(R) = ℓ(R) / (1 + R).
            let applies = *r >= x_radius && *r > 0.0;
            let bound = match l.witness(*r) {
                Some(w) if applies && w > 0.0 => c * (1.0 + r) / w,
                _ => f64::INFINITY,
            };
            if applies && *t > bound * (1.0 + 1e-12) {
                bound_holds = false;
            }
            rows.push(vec![num(*r), num(*t), num(bound), u8::from(applies).to_string()]);
        }
        run.csv("tightness.csv", &["R", "tail", "bound", "bound_applies"], &rows)?;
        let energy_rows: Vec<Vec<String>> =
            energies.iter().enumerate().map(|(j, e)| vec![(j * stride).to_string(), num(*e)]).collect();
        run.csv("iterates.csv", &["iter", "energy"], &energy_rows)?;
        run.result("energy_bound", c);
        run.result("x_radius", x_radius);
        run.result("tail_at_r_max", *tail.last().unwrap());
        run.check("tail_monotone", tail.windows(2).all(|w| w[1] <= w[0]));
        run.check("tail_below_coercivity_bound", bound_holds);
        run.check("energies_bounded_by_start", energies.iter().all(|e| *e <= energies[0]));
        Ok(())
    })
}
