use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use polyvar::exterior::{basis_subsets, binomial, graph_identity_sides, lift_minors, sigma_sign, WedgeForm, WedgeVector};
use polyvar::meshmaps::{build_box_mesh, AnalyticMap, QuadratureRule};
use polyvar::nulllag::{make_null_lagrangian, vanishing_residual, FormField, LVectorField};
use polyvar::rng::component_rng;
use polyvar::variational::fit_exponent;

use super::matrix;
use crate::cli::{VerifyAlgebraArgs, VerifyNulllagArgs};
use crate::error::CliError;
use crate::output::{num, Run};
use crate::params::{ensure, Params};

const ALGEBRA_TOL: f64 = 1e-10;

pub fn verify_algebra(
    a: &VerifyAlgebraArgs,
    p: &mut Params,
    seed: u64,
) -> Result<impl FnOnce(&mut Run) -> Result<(), CliError> + Send, CliError> {
    let trials = p.get("trials", a.trials, 1000usize)?;
    ensure(trials > 0, || "--trials must be positive".into())?;
    Ok(move |run: &mut Run| {
        let mut rng = component_rng(seed, "verify-algebra/graph-identity");
        let mut graph = 0.0f64;
        for _ in 0..trials {
            let n = rng.gen_range(1..=4);
            let m = rng.gen_range(1..=4);
            let k = rng.gen_range(0..=n.min(m));
            let a = matrix(&mut rng, m, n, 2.0);
            let u = WedgeVector::from_coords(n, k, (0..binomial(n, k)).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
            let chi = WedgeForm::from_coords(m, k, (0..binomial(m, k)).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
            let (lhs, rhs) = graph_identity_sides(&a, &u, &chi)?;
            graph = graph.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
        }

        let mut rng = component_rng(seed, "verify-algebra/cauchy-binet");
        let mut composition = 0.0f64;
        for _ in 0..trials {
            let (m, q, n) = (rng.gen_range(1..=4), rng.gen_range(1..=4), rng.gen_range(1..=4));
            let a = matrix(&mut rng, m, q, 2.0);
            let b = matrix(&mut rng, q, n, 2.0);
            for l in 1..=m.min(n).min(q) {
                let direct = lift_minors(&(&a * &b), l)?;
                let composed = lift_minors(&a, l)?.compose(&lift_minors(&b, l)?)?;
                let scale = direct.entries().norm();
                if scale > 1e-300 {
                    composition = composition.max((direct.entries() - composed.entries()).norm() / scale);
                }
            }
        }

        let mut subsets = 0usize;
        let mut violations = 0usize;
        for n in 0..=6 {
            for k in 0..=n {
                for s in basis_subsets(n, k)? {
                    let expected = if (k * (n - k)) % 2 == 0 { 1.0 } else { -1.0 };
                    if sigma_sign(&s.complement()) != expected * sigma_sign(&s) {
                        violations += 1;
                    }
                    subsets += 1;
                }
            }
        }

        let rows = vec![
            vec!["graph_identity".into(), trials.to_string(), num(graph), num(ALGEBRA_TOL)],
            vec!["cauchy_binet".into(), trials.to_string(), num(composition), num(ALGEBRA_TOL)],
            vec!["sign_law".into(), subsets.to_string(), num(violations as f64), num(0.0)],
        ];
        run.csv("algebra.csv", &["identity", "instances", "max_residual", "tolerance"], &rows)?;
        run.result("graph_identity_max_residual", graph);
        run.result("cauchy_binet_max_relative_error", composition);
        run.result("sign_law_subsets", subsets);
        run.result("sign_law_violations", violations);
        run.check("graph_identity", graph <= ALGEBRA_TOL);
        run.check("cauchy_binet", composition <= ALGEBRA_TOL);
        run.check("sign_law", violations == 0);
        Ok(())
    })
}

const NULLLAG_FINE_TOL: f64 = 1e-6;
const NULLLAG_MIN_ORDER: f64 = 1.9;

struct Case {
    n: usize,
    m: usize,
    l: usize,
    analytic: bool,
    divisions: [usize; 3],
    residuals: Vec<f64>,
}

/// Trigonometric χ, box-polynomial U and `u = At + β sin(Ωt + φ)`, either
/// exactly or through its interpolant, on three nested box meshes.
fn nulllag_case(rng: &mut impl Rng, n: usize, m: usize, analytic: bool, order: usize) -> Result<Case, CliError> {
    let l = rng.gen_range(1..=n.min(m));
    let terms: Vec<(f64, Vec<f64>, f64)> = (0..binomial(m, l - 1))
        .map(|_| (rng.gen_range(0.5..1.5), (0..m).map(|_| rng.gen_range(-1.5..1.5)).collect(), rng.gen_range(0.0..6.0)))
        .collect();
    let chi = FormField::trig(m, l - 1, &terms)?;
    let w = WedgeVector::from_coords(n, l, (0..binomial(n, l)).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    let slopes: Vec<f64> = (0..binomial(n, l) * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let field = LVectorField::box_polynomial(&vec![0.0; n], &vec![1.0; n], w, &slopes)?;
    let f = make_null_lagrangian(l, chi, field)?;
    let a = matrix(rng, m, n, 1.0);
    let om = matrix(rng, m, n, 2.0);
    let beta: Vec<f64> = (0..m).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let phase: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..6.0)).collect();
    let divisions = if n == 2 { [16, 32, 64] } else { [6, 12, 24] };
    let q = QuadratureRule::new(n, order)?;
    let mut residuals = Vec::new();
    for d in divisions {
        let mesh = Arc::new(build_box_mesh(n, d)?);
        let (a1, o1, b1, p1) = (a.clone(), om.clone(), beta.clone(), phase.clone());
        let (a2, o2, b2, p2) = (a.clone(), om.clone(), beta.clone(), phase.clone());
        let arg = move |o: &DMatrix<f64>, p: &[f64], t: &[f64], i: usize| (0..n).map(|j| o[(i, j)] * t[j]).sum::<f64>() + p[i];
        let u = AnalyticMap::new(
            mesh,
            m,
            move |t| (0..m).map(|i| (0..n).map(|j| a1[(i, j)] * t[j]).sum::<f64>() + b1[i] * arg(&o1, &p1, t, i).sin()).collect(),
            move |t| DMatrix::from_fn(m, n, |i, j| a2[(i, j)] + b2[i] * o2[(i, j)] * arg(&o2, &p2, t, i).cos()),
        );
        let r = if analytic { vanishing_residual(&f, &u, &q)? } else { vanishing_residual(&f, &u.interpolant()?, &q)? };
        residuals.push(r.abs());
    }
    Ok(Case { n, m, l, analytic, divisions, residuals })
}

pub fn verify_nulllag(
    a: &VerifyNulllagArgs,
    p: &mut Params,
    seed: u64,
) -> Result<impl FnOnce(&mut Run) -> Result<(), CliError> + Send, CliError> {
    let cases = p.get("cases", a.cases, 60usize)?;
    let order = p.get("quadrature-order", a.quadrature_order, 2usize)?;
    ensure(cases > 0, || "--cases must be positive".into())?;
    ensure((1..=12).contains(&order), || format!("--quadrature-order {order} outside 1..=12"))?;
    Ok(move |run: &mut Run| {
        let mut rng = component_rng(seed, "verify-nulllag/cases");
        let mut rows = Vec::new();
        let mut worst_fine = 0.0f64;
        let mut worst_order = f64::INFINITY;
        for c in 0..cases {
            let n = if c % 5 == 4 { 3 } else { 2 };
            let case = nulllag_case(&mut rng, n, 1 + c % 3, c % 2 == 0, order)?;
            let hs: Vec<f64> = case.divisions.iter().map(|d| 1.0 / *d as f64).collect();
            let fitted = if case.residuals.iter().all(|r| *r > 0.0) { fit_exponent(&hs, &case.residuals) } else { f64::NAN };
            worst_fine = worst_fine.max(*case.residuals.last().unwrap());
            worst_order = if fitted.is_nan() { f64::NAN } else { worst_order.min(fitted) };
            for (d, r) in case.divisions.iter().zip(&case.residuals) {
                rows.push(vec![
                    c.to_string(),
                    case.n.to_string(),
                    case.m.to_string(),
                    case.l.to_string(),
                    if case.analytic { "analytic" } else { "interpolant" }.into(),
                    d.to_string(),
                    num(1.0 / *d as f64),
                    num(*r),
                    num(fitted),
                ]);
            }
        }
        run.csv("nulllag.csv", &["case", "n", "m", "l", "map", "divisions", "h", "residual", "order"], &rows)?;
        run.result("cases", cases);
        run.result("max_finest_residual", worst_fine);
        run.result("min_order", worst_order);
        run.check("finest_residual_small", worst_fine <= NULLLAG_FINE_TOL);
        run.check("residual_converges", worst_order >= NULLLAG_MIN_ORDER);
        Ok(())
    })
}
