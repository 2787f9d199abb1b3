use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::*;
use crate::meshmaps::{
    build_box_mesh, build_disc_mesh, hat_gradients, JetSource, integrate_energy, interpolate, PwAffineMap, QuadratureRule,
};
use crate::rng::component_rng;
use crate::youngmeasure::KrWeight;

fn dirichlet(n: usize, m: usize) -> IntegrandSpec {
    IntegrandSpec::new(
        1,
        n,
        m,
        |_, _, tu: &[DMatrix<f64>]| tu[0].norm_squared(),
        Some(Arc::new(|_: &[f64], x: &[f64], tu: &[DMatrix<f64>]| (vec![0.0; x.len()], vec![&tu[0] * 2.0]))),
        None,
    )
    .unwrap()
}

#[test]
fn example_value_at_identity() {
    let (eps, p) = (1e-3, 1.5);
    let l = example_lagrangian(eps, p).unwrap();
    let id = DMatrix::identity(2, 2);
    let y = l.evaluate(&[0.0, 0.0], &[0.3, -0.2], &id);
    assert!((y - (eps * 2f64.powf(p / 2.0) + 1.0)).abs() < 1e-15);
    assert_eq!(l.evaluate(&[0.4, 0.1], &[0.0, 0.0], &DMatrix::zeros(2, 2)), 0.0);
    let v = DMatrix::from_row_slice(2, 2, &[0.3, -1.2, 0.7, 0.5]);
    assert_eq!(l.evaluate(&[0.4, 0.1], &[0.0, 0.0], &v), l.evaluate(&[0.4, 0.1], &[5.0, -3.0], &v));
}

#[test]
fn example_rejects_bad_parameters() {
    assert!(example_lagrangian(1e-3, 2.0).is_err());
    assert!(example_lagrangian(1e-3, 1.0).is_err());
    assert!(example_lagrangian(0.0, 1.5).is_err());
}

#[test]
fn example_dominates_det_squared() {
    let l = example_lagrangian(1e-3, 1.5).unwrap();
    let mut rng = component_rng(3, "det-dominance");
    for _ in 0..200 {
        let t = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let v = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-3.0..3.0));
        let d = v.determinant();
        assert!(l.evaluate(&t, &[0.0, 0.0], &v) >= d * d);
    }
}

#[test]
fn bad_gradient_is_rejected() {
    let r = IntegrandSpec::new(
        1,
        2,
        2,
        |_, _, tu: &[DMatrix<f64>]| tu[0].norm_squared(),
        Some(Arc::new(|_: &[f64], x: &[f64], tu: &[DMatrix<f64>]| (vec![0.0; x.len()], vec![&tu[0] * 3.0]))),
        None,
    );
    assert!(r.is_err());
}

#[test]
fn convexity_check_examples() {
    let l = example_lagrangian(1e-3, 1.5).unwrap();
    assert!(kconvexity_sample_check(&l, 20, 20, 1).passed);
    let det = IntegrandSpec::new(2, 2, 2, |_, _, tu: &[DMatrix<f64>]| tu[1][(0, 0)], None, None).unwrap();
    assert!(kconvexity_sample_check(&det, 20, 20, 1).passed);
    let concave = IntegrandSpec::new(1, 2, 2, |_, _, tu: &[DMatrix<f64>]| -tu[0].norm_squared(), None, None).unwrap();
    let r = kconvexity_sample_check(&concave, 5, 5, 1);
    assert!(!r.passed);
    assert!(r.witness.unwrap().defect > 0.0);
}

#[test]
fn superlinearity_examples() {
    let radii = [1.0, 10.0, 100.0, 1000.0];
    let l = example_lagrangian(1e-3, 1.5).unwrap();
    let r = superlinearity_check(&l, &radii, 50, 2);
    assert!(r.superlinear, "{:?}", r.rows);
    assert_eq!(r.witness_violations, 0);
    let lin = IntegrandSpec::new(1, 2, 2, |_, _, tu: &[DMatrix<f64>]| tu[0].norm(), None, None).unwrap();
    assert!(!superlinearity_check(&lin, &radii, 50, 2).superlinear);
    let quad = dirichlet(2, 2);
    let r = superlinearity_check(&quad, &radii, 50, 2);
    assert!(r.superlinear);
    for w in r.rows.windows(2) {
        let grow = w[1].1 / w[0].1;
        assert!((grow - 10.0).abs() < 1e-9, "{grow}");
    }
}

#[test]
fn energy_gradient_matches_differences() {
    let l = example_lagrangian(1e-2, 1.5).unwrap();
    let mesh = Arc::new(build_disc_mesh(0.34).unwrap());
    let mut rng = component_rng(5, "grad-fd");
    let u = interpolate(|t| vec![t[0] + 0.1 * t[1] * t[1], t[1] - 0.2 * t[0] * t[1]], mesh, 2).unwrap();
    let values: Vec<f64> = u.values().iter().map(|x| x + rng.gen_range(-0.05..0.05)).collect();
    let u = u.with_values(values).unwrap();
    let q = QuadratureRule::new(2, 4).unwrap();
    let g = energy_gradient(&u, &l, &q).unwrap();
    let e = |w: &[f64]| integrate_energy(&u.with_values(w.to_vec()).unwrap(), &l, &q).unwrap().value();
    for _ in 0..10 {
        let dir: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h = 1e-5;
        let plus: Vec<f64> = u.values().iter().zip(&dir).map(|(x, d)| x + h * d).collect();
        let minus: Vec<f64> = u.values().iter().zip(&dir).map(|(x, d)| x - h * d).collect();
        let fd = (e(&plus) - e(&minus)) / (2.0 * h);
        let an: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "{fd} vs {an}");
    }
}

#[test]
fn identity_is_harmonic_minimizer() {
    let mesh = Arc::new(build_box_mesh(2, 4).unwrap());
    let id = interpolate(|t| t.to_vec(), mesh, 2).unwrap();
    let r = minimize(&dirichlet(2, 2), &id, &MinimizeOptions::default()).unwrap();
    assert_eq!(r.termination, Termination::Converged);
    assert!((r.energy - 2.0).abs() < 1e-8);
}

fn discrete_harmonic(u0: &PwAffineMap) -> Vec<f64> {
    let mesh = u0.mesh_arc();
    let nv = mesh.num_vertices();
    let mut k = DMatrix::zeros(nv, nv);
    for c in 0..mesh.num_cells() {
        let g = hat_gradients(mesh, c);
        let loc = &g * g.transpose() * mesh.cell_volume(c);
        for (a, &va) in mesh.cell(c).iter().enumerate() {
            for (b, &vb) in mesh.cell(c).iter().enumerate() {
                k[(va, vb)] += loc[(a, b)];
            }
        }
    }
    let free: Vec<usize> = (0..nv).filter(|&v| !mesh.is_boundary(v)).collect();
    let m = JetSource::target_dim(u0);
    let mut out = u0.values().to_vec();
    for i in 0..m {
        let kff = DMatrix::from_fn(free.len(), free.len(), |a, b| k[(free[a], free[b])]);
        let rhs = DVector::from_fn(free.len(), |a, _| {
            -(0..nv).filter(|v| mesh.is_boundary(*v)).map(|v| k[(free[a], v)] * u0.values()[v * m + i]).sum::<f64>()
        });
        let x = kff.lu().solve(&rhs).unwrap();
        for (a, &v) in free.iter().enumerate() {
            out[v * m + i] = x[a];
        }
    }
    out
}

#[test]
fn bumped_start_descends_to_linear_solve() {
    let mesh = Arc::new(build_box_mesh(2, 6).unwrap());
    let u0 = interpolate(
        |t| {
            let b = 16.0 * t[0] * (1.0 - t[0]) * t[1] * (1.0 - t[1]);
            vec![t[0] + 0.3 * b, t[1] - 0.2 * b * t[0]]
        },
        mesh,
        2,
    )
    .unwrap();
    let l = dirichlet(2, 2);
    let opts = MinimizeOptions { tol: 1e-8, ..Default::default() };
    let r = minimize(&l, &u0, &opts).unwrap();
    assert_eq!(r.termination, Termination::Converged);
    assert!(r.energy < r.initial_energy);
    let exact = discrete_harmonic(&u0);
    for (a, b) in r.map.values().iter().zip(&exact) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
    assert!(r.map.boundary_trace().shares(&u0.boundary_trace()));
}

#[test]
fn descent_invariants_on_disc() {
    let l = example_lagrangian(1e-3, 1.5).unwrap();
    let mesh = Arc::new(build_disc_mesh(0.2).unwrap());
    let area = mesh.total_volume();
    let mut rng = component_rng(9, "disc-start");
    let id = interpolate(|t| t.to_vec(), mesh.clone(), 2).unwrap();
    let values: Vec<f64> = id
        .values()
        .iter()
        .enumerate()
        .map(|(k, x)| if mesh.is_boundary(k / 2) { *x } else { x + rng.gen_range(-0.05..0.05) })
        .collect();
    let u0 = id.with_values(values).unwrap();
    let opts = MinimizeOptions { max_iter: 200, ..Default::default() };
    let r = minimize(&l, &u0, &opts).unwrap();
    for w in r.report.windows(2) {
        assert!(w[1].energy <= w[0].energy);
    }
    for rec in &r.report {
        assert!((rec.degree_integral.unwrap() - area).abs() < 1e-10);
    }
    assert_eq!(r.map.boundary_trace(), u0.boundary_trace());
    assert!(r.energy >= area - 1e-8);
    assert!(r.energy <= r.initial_energy);
}

#[test]
fn multistart_is_deterministic() {
    let l = example_lagrangian(1e-3, 1.5).unwrap();
    let mesh = Arc::new(build_disc_mesh(0.34).unwrap());
    let id = interpolate(|t| t.to_vec(), mesh, 2).unwrap();
    let opts = MinimizeOptions { max_iter: 30, starts: 3, seed: 4, ..Default::default() };
    let a = minimize(&l, &id, &opts).unwrap();
    let b = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| minimize(&l, &id, &opts).unwrap());
    assert_eq!(a.map.values(), b.map.values());
    assert_eq!(a.start, b.start);
    assert_eq!(a.start_energies.len(), 3);
    assert_eq!(report_csv(&a.report), report_csv(&b.report));
}

#[test]
fn infinite_initial_energy_is_rejected() {
    let l = IntegrandSpec::new(
        1,
        2,
        2,
        |_, _, tu: &[DMatrix<f64>]| if tu[0].norm() > 1.0 { f64::INFINITY } else { tu[0].norm_squared() },
        None,
        None,
    )
    .unwrap();
    let mesh = Arc::new(build_box_mesh(2, 2).unwrap());
    let u = interpolate(|t| vec![3.0 * t[0], t[1]], mesh, 2).unwrap();
    assert!(minimize(&l, &u, &MinimizeOptions::default()).is_err());
}

#[test]
fn sphere_target_keeps_unit_values() {
    let mesh = Arc::new(build_box_mesh(2, 4).unwrap());
    let u0 = interpolate(
        |t| {
            let a = t[0] + 0.5 * t[1];
            vec![a.cos(), a.sin()]
        },
        mesh.clone(),
        2,
    )
    .unwrap();
    let opts = MinimizeOptions { sphere_target: true, max_iter: 50, ..Default::default() };
    let r = minimize(&dirichlet(2, 2), &u0, &opts).unwrap();
    for v in 0..mesh.num_vertices() {
        let x = r.map.nodal_value(v);
        assert!((x[0].hypot(x[1]) - 1.0).abs() < 1e-12);
    }
    assert!(r.energy <= r.initial_energy);
}

#[test]
fn report_csv_header() {
    let rec = IterationRecord { iter: 0, energy: 1.0, grad_norm: 0.5, step: 0.0, degree_integral: None };
    let s = report_csv(&[rec]);
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("iter,energy,grad_norm,step,degree_integral"));
    assert_eq!(lines.next().unwrap().split(',').count(), 5);
}

#[test]
fn competitor_closed_form() {
    let v = competitor_energy_semianalytic(1e-3, 1.5, 0.25).unwrap();
    assert!((v - 5.0 * PI * 1e-3).abs() < 1e-15);
    for d in [0.01, 0.1, 0.3, 0.49] {
        assert!((competitor_energy_semianalytic(1e-3, 1.5, d).unwrap() - v).abs() < 1e-10);
    }
    let small = competitor_energy_semianalytic(1e-6, 1.5, 0.25).unwrap();
    assert!((small / v - 1e-3).abs() < 1e-12);
    assert_eq!(competitor_parts(1.5, 0.2).unwrap().det, 0.0);
    assert!(competitor_energy_semianalytic(1e-3, 2.0, 0.25).is_err());
    assert!(competitor_energy_semianalytic(1e-3, 1.5, 0.5).is_err());
}

#[test]
fn competitor_matches_radial_quadrature() {
    // Midpoint sums of the radial densities on [δ, 1].
    let (p, delta) = (1.5, 0.2);
    let parts = competitor_parts(p, delta).unwrap();
    let n = 200_000;
    let h = (1.0 - delta) / n as f64;
    let (mut g, mut w) = (0.0, 0.0);
    for i in 0..n {
        let r = delta + (i as f64 + 0.5) * h;
        g += 2.0 * PI * r * r.powf(-p) * h;
        w += 2.0 * PI * r * r.powi(4) * r.powi(-4) * h;
    }
    assert!((g - parts.gradient_outer).abs() < 1e-8);
    assert!((w - parts.weighted_outer).abs() < 1e-8);
}

#[test]
fn degree_of_identity_and_double() {
    let mesh = Arc::new(build_disc_mesh(0.1).unwrap());
    let area = mesh.total_volume();
    let id = interpolate(|t| t.to_vec(), mesh.clone(), 2).unwrap();
    assert!((degree_integral(&id).unwrap() - area).abs() < 1e-12);
    let two = interpolate(|t| vec![2.0 * t[0], 2.0 * t[1]], mesh, 2).unwrap();
    assert!((degree_integral(&two).unwrap() - 4.0 * area).abs() < 1e-12);
}

#[test]
fn disc_area_extrapolation() {
    let a = build_disc_mesh(0.05).unwrap().total_volume();
    assert!((a - PI).abs() / PI < 0.01);
    let e = extrapolated_disc_area(0.05).unwrap();
    assert!((e - PI).abs() / PI < 1e-3);
    assert!((e - PI).abs() < (a - PI).abs());
}

#[test]
fn blowup_exponent_near_minus_two() {
    let (rows, e) = det_blowup(0.1).unwrap();
    assert_eq!(rows.len(), 3);
    assert!((-2.5..=-1.5).contains(&e), "{e}");
    assert!(rows.windows(2).all(|w| w[1].det_energy > w[0].det_energy));
}

#[test]
fn exponent_fit_recovers_power() {
    let xs = [1.0, 0.5, 0.25, 0.125];
    let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.7)).collect();
    assert!((fit_exponent(&xs, &ys) + 1.7).abs() < 1e-12);
}

#[test]
fn small_gap_experiment() {
    let l = example_lagrangian(1e-3, 1.5).unwrap();
    let opts = MinimizeOptions { max_iter: 40, ..Default::default() };
    let g = gap_experiment(&l, 1e-3, 1.5, 0.2, &opts).unwrap();
    assert!(g.minimizer_energy >= g.lower_bound - 1e-8);
    assert!(g.minimizer_energy <= g.identity_energy);
    assert!((g.certified_bound - g.lower_bound).abs() < 1e-10);
    assert!(g.competitor_energy < 1.0 && g.lower_bound > 1.0);
    assert!((g.gap_ratio - g.lower_bound / g.competitor_energy).abs() < 1e-12);
}

fn generic_pair() -> StripePair {
    let a = DMatrix::from_row_slice(2, 2, &[1.3, 0.4, -0.2, 0.9]);
    let rank_one = DMatrix::from_row_slice(2, 1, &[0.7, -1.1]) * DMatrix::from_row_slice(1, 2, &[0.6, 0.8]);
    StripePair::new(a.clone(), a - rank_one, 0.37).unwrap()
}

#[test]
fn stripe_pair_requires_rank_one() {
    let a = DMatrix::identity(2, 2);
    assert!(StripePair::new(a.clone(), -a.clone(), 0.5).is_err());
    assert!(StripePair::new(a.clone(), a.clone(), 0.5).is_err());
    assert!(StripePair::new(a.clone(), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]), 1.0).is_err());
    let mut r = component_rng(17, "rank-one");
    for _ in 0..100 {
        let a = DMatrix::from_fn(2, 2, |_, _| r.gen_range(-1.5..1.5));
        let col = DMatrix::from_fn(2, 1, |_, _| r.gen_range(-1.0..1.0));
        let row = DMatrix::from_fn(1, 2, |_, _| r.gen_range(-1.0..1.0));
        let b = &a - &col * &row;
        let pair = StripePair::new(a.clone(), b.clone(), 0.3).unwrap();
        let mesh = Arc::new(pair.mesh(3, &[], &[0.0, 1.0]).unwrap());
        let u = pair.stripe_map(3, mesh.clone()).unwrap();
        for c in 0..mesh.num_cells() {
            let g = u.cell_gradient(c);
            assert!((&g - &a).norm().min((&g - &b).norm()) < 1e-12);
        }
    }
}

#[test]
fn stripe_map_has_two_gradients() {
    let pair = generic_pair();
    let mesh = Arc::new(pair.mesh(5, &[], &[0.0, 0.5, 1.0]).unwrap());
    let u = pair.stripe_map(5, mesh.clone()).unwrap();
    let mut vol_a = 0.0;
    for c in 0..mesh.num_cells() {
        let g = u.cell_gradient(c);
        let (da, db) = ((&g - pair.a()).norm(), (&g - pair.b()).norm());
        assert!(da.min(db) < 1e-12, "{g}");
        if da < 1e-12 {
            vol_a += mesh.cell_volume(c);
        }
    }
    assert!((vol_a - pair.lambda()).abs() < 1e-12);
    assert!((mesh.total_volume() - 1.0).abs() < 1e-12);
}

#[test]
fn stripe_profile_values() {
    let pair = generic_pair();
    let l = pair.lambda();
    assert_eq!(pair.profile(4, 0.0), 0.0);
    assert!((pair.profile(4, 1.0) - l).abs() < 1e-15);
    assert!((pair.profile(4, 0.25) - l / 4.0).abs() < 1e-15);
    assert!((pair.profile(1, 0.9) - l).abs() < 1e-15);
    assert!((pair.profile(1, 0.2) - 0.2).abs() < 1e-15);
}

#[test]
fn constant_test_function_gives_zero() {
    let a = DMatrix::identity(2, 2);
    let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let pair = StripePair::new(a, b, 0.5).unwrap();
    let rows = weak_minor_convergence_experiment(&pair, &[1, 2, 3, 7, 16], &[TestFunction::Constant(1.0)]).unwrap();
    for r in rows {
        assert!(r.differences[0] < 1e-14, "{:?}", r);
    }
}

#[test]
fn weak_minors_converge() {
    let pair = generic_pair();
    let tests = [
        TestFunction::Tent(vec![(0, 0, 1.0)]),
        TestFunction::Tent(vec![(0, 0, 1.0), (1, 0, 0.2), (0, 2, -0.3)]),
        TestFunction::Bump(vec![(0, 0, 0.5), (1, 0, 1.2), (0, 2, -0.7)]),
    ];
    let rows = weak_minor_convergence_experiment(&pair, &[1, 2, 4, 8, 16, 32], &tests).unwrap();
    for j in 0..tests.len() {
        let col: Vec<(usize, f64)> = rows.iter().map(|r| (r.i, r.differences[j])).collect();
        if j < 2 {
            assert!(decreasing_beyond(&col, 4, 1e-12), "{col:?}");
        }
        assert!(col.last().unwrap().1 < 1e-4, "{col:?}");
    }
}

#[test]
fn bump_test_function_shape() {
    let psi = TestFunction::Bump(vec![(0, 0, 1.0)]);
    assert_eq!(psi.eval(0.1, 0.5), 0.0);
    assert!((psi.eval(0.5, 0.5) - 1.0).abs() < 1e-15);
    assert_eq!(psi.degree(), 8);
    let tent = TestFunction::Tent(vec![(0, 0, 2.0), (1, 1, 1.0)]);
    assert!((tent.eval(0.5, 0.5) - 2.25).abs() < 1e-15);
    assert!((tent.eval(0.375, 0.5) - 0.75 * (2.0 + 0.1875)).abs() < 1e-15);
    assert_eq!(tent.degree(), 6);
}

#[test]
fn stripe_kr_decreases() {
    let pair = generic_pair();
    let seq = stripe_kr_sequence(&pair, &[2, 4, 8, 16], KrWeight::One).unwrap();
    assert!(seq.windows(2).all(|w| w[1].1 < w[0].1), "{seq:?}");
}
