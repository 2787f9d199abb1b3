use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use super::*;
use crate::exterior::{determinant, WedgeVector};
use crate::meshmaps::{build_box_mesh, build_disc_mesh, integrate_energy, interpolate, QuadratureRule};
use crate::nulllag::{divergence_one_field, make_null_lagrangian, Domain, FormField, LVectorField};
use crate::rng::component_rng;

fn identity_square(divisions: usize) -> crate::meshmaps::PwAffineMap {
    let mesh = Arc::new(build_box_mesh(2, divisions).unwrap());
    interpolate(|t| t.to_vec(), mesh, 2).unwrap()
}

fn one(_: &[f64], _: &[f64], _: &DMatrix<f64>) -> f64 {
    1.0
}

#[test]
fn from_map_of_identity() {
    let u = identity_square(3);
    let eta = from_map(&u, &QuadratureRule::default_for(2).unwrap()).unwrap();
    assert!((eta.total_mass() - 1.0).abs() < 1e-14);
    assert!(eta.atoms().iter().all(|a| (&a.v - DMatrix::identity(2, 2)).amax() < 1e-14));
    assert!(marginal_residual(&eta).unwrap() < 1e-15);
    assert!((integrate(&eta, &one).unwrap().value() - 1.0).abs() < 1e-14);
    let rk = |_: &[f64], _: &[f64], v: &DMatrix<f64>| r_k(v, 2);
    let got = integrate(&eta, &rk).unwrap().value();
    assert!((got - (2.0 + 2f64.sqrt())).abs() < 1e-13, "{got}");
}

#[test]
fn measure_integral_matches_energy() {
    let mesh = Arc::new(build_disc_mesh(0.2).unwrap());
    let area = mesh.total_volume();
    let u = interpolate(|t| vec![t[0] * t[0] - t[1], t[0] * t[1] + 0.5], mesh, 2).unwrap();
    let q = QuadratureRule::default_for(2).unwrap();
    let l = |t: &[f64], x: &[f64], v: &DMatrix<f64>| v.norm_squared() + x[0] * t[1] + determinant(v).abs();
    let eta = from_map(&u, &q).unwrap();
    let a = integrate(&eta, &l).unwrap().value() * area;
    let b = integrate_energy(&u, &l, &q).unwrap().value();
    assert!((a - b).abs() <= 1e-13 * b.abs());
}

#[test]
fn integration_is_order_independent() {
    let u = identity_square(4);
    let q = QuadratureRule::default_for(2).unwrap();
    let eta = from_map(&u, &q).unwrap();
    let mut atoms = eta.atoms().to_vec();
    let mut rng = component_rng(21, "shuffle");
    for i in (1..atoms.len()).rev() {
        let j = rng.gen_range(0..=i);
        atoms.swap(i, j);
    }
    let shuffled = AtomicYoungMeasure::new(eta.mesh().cloned(), 2, 2, 2, atoms).unwrap();
    let l = |t: &[f64], _: &[f64], _: &DMatrix<f64>| (3.0 * t[0]).sin() + t[1].exp();
    assert_eq!(
        integrate(&eta, &l).unwrap().value().to_bits(),
        integrate(&shuffled, &l).unwrap().value().to_bits()
    );
}

#[test]
fn marginal_defects() {
    let u = identity_square(2);
    let q = QuadratureRule::default_for(2).unwrap();
    let eta = from_map(&u, &q).unwrap();
    let mut atoms = eta.atoms().to_vec();
    let w = atoms.pop().unwrap().weight;
    let missing = AtomicYoungMeasure::new_unnormalized(eta.mesh().cloned(), 2, 2, 2, atoms).unwrap();
    assert!((marginal_residual(&missing).unwrap() - w).abs() < 1e-15);
    let scaled: Vec<JetAtom> = eta.atoms().iter().map(|a| JetAtom { weight: a.weight * 1.01, ..a.clone() }).collect();
    let scaled = AtomicYoungMeasure::new_unnormalized(eta.mesh().cloned(), 2, 2, 2, scaled).unwrap();
    assert!((marginal_residual(&scaled).unwrap() - 0.01 * 0.125).abs() < 1e-15);
    assert!(AtomicYoungMeasure::new(eta.mesh().cloned(), 2, 2, 2, missing.into_atoms()).is_err());
}

#[test]
fn pm_identity_measure_is_not_closed() {
    let u = interpolate(|_| vec![0.0, 0.0], Arc::new(build_box_mesh(2, 16).unwrap()), 2).unwrap();
    let q = QuadratureRule::new(2, 6).unwrap();
    let id = DMatrix::<f64>::identity(2, 2);
    let pm = laminate(&id, &(-&id), 0.5, &u, &q).unwrap();
    let field = LVectorField::bump(&[0.5, 0.5], 0.4, WedgeVector::from_coords(2, 2, vec![1.0]).unwrap()).unwrap();
    let f = make_null_lagrangian(2, FormField::clamp_coordinate(2, 0, &[1]).unwrap(), field.clone()).unwrap();
    let phi = |t: &[f64], _: &[f64], _: &DMatrix<f64>| field.value(t)[0];
    let expect = integrate(&from_map(&u, &q).unwrap(), &phi).unwrap().value();
    assert!(expect > 0.05);
    assert!((closedness_residual(&pm, &f).unwrap() - expect).abs() < 1e-12);
    // the map's own measure is closed
    assert!(closedness_residual(&from_map(&u, &q).unwrap(), &f).unwrap() < 1e-12);
}

#[test]
fn anchoring_detects_trace_changes() {
    let mesh = Arc::new(build_box_mesh(2, 16).unwrap());
    let q = QuadratureRule::new(2, 6).unwrap();
    let u0 = interpolate(|t| t.to_vec(), mesh.clone(), 2).unwrap();
    let chi = FormField::clamp_coordinate(2, 0, &[]).unwrap();
    let field = divergence_one_field(&Domain::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }).unwrap();
    let same = anchoring_residual(&from_map(&u0, &q).unwrap(), &u0, &chi, &field, &q).unwrap();
    assert!(same < 1e-14);
    let bumped = interpolate(
        |t| { let b = 16.0 * t[0] * (1.0 - t[0]) * t[1] * (1.0 - t[1]); vec![t[0] + 0.3 * b, t[1] - 0.2 * b] },
        mesh.clone(),
        2,
    )
    .unwrap();
    assert!(anchoring_residual(&from_map(&bumped, &q).unwrap(), &u0, &chi, &field, &q).unwrap() < 1e-12);
    let doubled = interpolate(|t| vec![2.0 * t[0], 2.0 * t[1]], mesh, 2).unwrap();
    let r = anchoring_residual(&from_map(&doubled, &q).unwrap(), &u0, &chi, &field, &q).unwrap();
    assert!((r - 0.5).abs() < 1e-12, "{r}");
}

#[test]
fn kr_two_atom_distances() {
    let atom = |v: DMatrix<f64>| JetAtom { cell: 0, t: vec![0.2, 0.3], x: vec![1.0, 0.0], v, weight: 1.0 };
    let id = DMatrix::<f64>::identity(2, 2);
    let mu = AtomicYoungMeasure::new(None, 2, 2, 2, vec![atom(id.clone())]).unwrap();
    let nu = AtomicYoungMeasure::new(None, 2, 2, 2, vec![atom(&id * 2.0)]).unwrap();
    // min(‖Id - 2Id‖, 1) = 1 and r_2(2Id) - r_2(Id) = (1 + 2√2 + 4) - (1 + √2 + 1) = 3 + √2.
    let d = kr_distance(&mu, &nu, KrWeight::Rk(2)).unwrap();
    assert!((d - (4.0 + 2f64.sqrt())).abs() < 1e-12, "{d}");
    let d1 = kr_distance(&mu, &nu, KrWeight::One).unwrap();
    assert!((d1 - 1.0).abs() < 1e-12);
    assert_eq!(kr_distance(&mu, &mu, KrWeight::Rk(2)).unwrap(), 0.0);
    let near = AtomicYoungMeasure::new(None, 2, 2, 2, vec![atom(&id * 1.1)]).unwrap();
    let d2 = kr_distance(&mu, &near, KrWeight::One).unwrap();
    assert!((d2 - 0.1 * 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn tightness_profile_is_monotone() {
    let mesh = Arc::new(build_disc_mesh(0.2).unwrap());
    let q = QuadratureRule::default_for(2).unwrap();
    let us: Vec<_> = [1.0, 3.0, 7.0]
        .iter()
        .map(|&s| from_map(&interpolate(move |t| vec![s * t[0] * t[0], s * t[1]], mesh.clone(), 2).unwrap(), &q).unwrap())
        .collect();
    let radii: Vec<f64> = (0..40).map(|i| 0.5 * i as f64).collect();
    let prof = tightness_profile(&us, &radii, &[0.0, 0.0]).unwrap();
    assert!(prof.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(*prof.last().unwrap(), 0.0);
    assert!(prof[0] > 1.0);
}

#[test]
fn disintegration_cases() {
    let u = identity_square(2);
    let q = QuadratureRule::default_for(2).unwrap();
    let eta = from_map(&u, &q).unwrap();
    let DisintegrationOutcome::Graph(d) = disintegrate(&eta) else { panic!() };
    assert_eq!(d.fibers.len(), eta.atoms().len());
    assert!(d.fibers.iter().all(|f| f.gamma.len() == 1 && (&f.moments[0] - DMatrix::identity(2, 2)).amax() < 1e-14));
    assert!(structure_residual(&d) < 1e-12);

    let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.5, -1.0]);
    let b = &a + DMatrix::from_row_slice(2, 2, &[0.3, -0.6, 0.1, -0.2]);
    let lam = laminate(&a, &b, 0.3, &u, &q).unwrap();
    let DisintegrationOutcome::Graph(d) = disintegrate(&lam) else { panic!() };
    assert!(d.fibers.iter().all(|f| f.gamma.len() == 2 && (f.gamma[0].1 + f.gamma[1].1 - 1.0).abs() < 1e-15));
    assert!(structure_residual(&d) < 1e-12);

    let mut atoms = eta.atoms().to_vec();
    let mut extra = atoms[3].clone();
    extra.x[0] += 1e-3;
    extra.weight /= 2.0;
    atoms[3].weight /= 2.0;
    let cell = atoms[3].cell;
    atoms.push(extra);
    let split = AtomicYoungMeasure::new(eta.mesh().cloned(), 2, 2, 2, atoms).unwrap();
    assert!(matches!(disintegrate(&split), DisintegrationOutcome::NonGraph { cell: c, .. } if c == cell));
    assert!(jensen_gap(&split, &one).is_err());
}

#[test]
fn structure_and_jensen_hand_values() {
    let u = identity_square(1);
    let q = QuadratureRule::new(2, 1).unwrap();
    let id = DMatrix::<f64>::identity(2, 2);
    let pm = laminate(&id, &(-&id), 0.5, &u, &q).unwrap();
    let DisintegrationOutcome::Graph(d) = disintegrate(&pm) else { panic!() };
    assert!((structure_residual(&d) - 1.0).abs() < 1e-12);

    let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0]));
    let b = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]));
    let lam = laminate(&a, &b, 0.5, &u, &q).unwrap();
    let det_sq = |_: &[f64], _: &[f64], v: &DMatrix<f64>| determinant(v).powi(2);
    let neg_det = |_: &[f64], _: &[f64], v: &DMatrix<f64>| -determinant(v).abs();
    assert!((jensen_gap(&lam, &det_sq).unwrap() - 1.0).abs() < 1e-12);
    assert!((jensen_gap(&lam, &neg_det).unwrap() + 1.0).abs() < 1e-12);
    assert!(jensen_gap(&from_map(&u, &q).unwrap(), &det_sq).unwrap().abs() < 1e-12);
}

#[test]
fn laminate_rules() {
    let u = identity_square(2);
    let q = QuadratureRule::default_for(2).unwrap();
    let a = DMatrix::<f64>::identity(2, 2);
    assert!(laminate(&a, &a, 0.0, &u, &q).is_err());
    assert!(laminate(&a, &a, 1.0, &u, &q).is_err());
    let same = laminate(&a, &a, 0.5, &u, &q).unwrap();
    let direct = from_map(&u, &q).unwrap();
    let d = kr_distance(&same, &direct, KrWeight::Rk(2)).unwrap();
    assert!(d < 1e-11, "{d}");
    assert!((same.total_mass() - 1.0).abs() < 1e-12);
    assert!(marginal_residual(&same).unwrap() < 1e-15);

    let b = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
    let rank_two = laminate(&a, &b, 0.5, &u, &q).unwrap();
    let DisintegrationOutcome::Graph(d) = disintegrate(&rank_two) else { panic!() };
    // mean diag(1.5, 2) has det 3, mean of dets is 3.5
    assert!((structure_residual(&d) - 0.5).abs() < 1e-12);
}

#[test]
fn measure_round_trip() {
    let mesh = Arc::new(build_disc_mesh(0.4).unwrap());
    let u = interpolate(|t| vec![t[0].sin() / 7.0, t[1] * 1e10, t[0] * t[1]], mesh, 3).unwrap();
    let eta = from_map(&u, &QuadratureRule::default_for(2).unwrap()).unwrap();
    let text = write_measure(&eta);
    let back = read_measure(&text).unwrap();
    assert_eq!(back.atoms(), eta.atoms());
    assert_eq!(write_measure(&back), text);
    assert!(read_measure(&text.replacen(" ", "  x", 5)).is_err());
}
