use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;
use rqed::boson::CoherentProfile;
use rqed::kspace::{make_grid, DEFAULT_NORMALIZATION_TOL};
use rqed::linalg::{comm, max_abs, restricted_norm};
use rqed::photon::*;
use rqed::{CMat, CVec, PhysicalConstants, QuadratureGrid, WaveVector, C64};

fn wave_vector() -> impl Strategy<Value = WaveVector> {
    proptest::array::uniform3(-10.0..10.0f64).prop_map(WaveVector::from).prop_filter("nonzero", |k| k.norm() > 1e-6)
}

fn event() -> impl Strategy<Value = [f64; 4]> {
    proptest::array::uniform4(-10.0..10.0f64)
}

fn expect(z: &CVec, m: &CMat) -> f64 {
    z.dotc(&(m * z)).re
}

fn one_node(k: WaveVector) -> Arc<QuadratureGrid> {
    Arc::new(QuadratureGrid::from_nodes(vec![k], vec![1.0]).unwrap())
}

#[test]
fn mode_algebra() {
    let s = TwoModeSpace::new(5, 5);
    assert_eq!(max_abs(&comm(&s.a_h, &s.a_v)), 0.0);
    let id = CMat::identity(s.dim(), s.dim());
    let idx = s.safe_indices(4);
    assert!(restricted_norm(&(comm(&s.a_h, &s.a_h.adjoint()) - &id), &idx) < 1e-14);
    assert!(restricted_norm(&(comm(&s.a_v, &s.a_v.adjoint()) - &id), &idx) < 1e-14);
}

#[test]
fn vacuum_energy_vanishes() {
    let s = TwoModeSpace::default();
    let h = em_hamiltonian(&s, &PhysicalConstants::default()).at(&WaveVector::new(1.0, 2.0, 0.0));
    assert_eq!(expect(&s.state(0, 0), &h), 0.0);
}

#[test]
fn plane_wave_along_e3() {
    // For real z the H-mode wave along e₃ has ⟨E₁⟩ ∝ c k sin(k(x³ − x⁰)) and ⟨E₂⟩ = ⟨E₃⟩ = 0.
    let c = PhysicalConstants { c: 1.7, ..Default::default() };
    let s = TwoModeSpace::new(12, 2);
    let kz = 0.8;
    let q = WaveVector::new(0.0, 0.0, kz);
    let z = two_mode_coherent(C64::from(1.1), C64::from(0.0), &s).unwrap();
    let mut ratio = None;
    for x in [[0.1, 0.0, 0.0, 0.9], [0.4, 1.0, -2.0, 0.0], [1.3, 0.5, 0.5, -0.6], [2.0, 0.0, 0.0, 0.2]] {
        let (e, _) = e_b_operators(x, &q, &s, &c).unwrap();
        let sine = (kz * (x[3] - x[0])).sin();
        let r = expect(&z, &e[0]) / (c.c * kz * sine);
        assert!(expect(&z, &e[1]).abs() < 1e-14 && expect(&z, &e[2]).abs() < 1e-14);
        match ratio {
            None => ratio = Some(r),
            Some(r0) => assert!((r - r0).abs() < 1e-10 * r0.abs(), "{r} vs {r0}"),
        }
    }
    assert!(ratio.unwrap().abs() > 1e-6);
}

#[test]
fn magnetic_field_is_k_cross_e_over_c() {
    let c = PhysicalConstants { c: 2.5, ..Default::default() };
    let s = TwoModeSpace::new(10, 10);
    let q = WaveVector::new(0.3, -0.9, 0.4);
    let z = two_mode_coherent(C64::new(0.7, 0.2), C64::new(-0.3, 0.5), &s).unwrap();
    let x = [0.4, 1.2, -0.3, 0.8];
    let (e, b) = e_b_operators(x, &q, &s, &c).unwrap();
    let ev = Vector3::from_fn(|i, _| expect(&z, &e[i]));
    let bv = Vector3::from_fn(|i, _| expect(&z, &b[i]));
    let want = q.normalize().cross(&ev) / c.c;
    assert!((bv - want).norm() < 1e-12 * (1.0 + want.norm()));
}

#[test]
fn coherent_potential_matches_classical_field() {
    let c = PhysicalConstants { ell: 0.8, lambda: 1.4, ..Default::default() };
    let s = TwoModeSpace::new(12, 12);
    let grid = Arc::new(make_grid(2.0, 4, 4, 4).unwrap());
    let (f1, f2) = (CoherentProfile::gaussian(C64::new(0.8, 0.1), 0.7), CoherentProfile::shell(C64::new(0.0, 0.6), 1.0, 0.4));
    let field = coherent_em_field(&f1, &f2, grid.clone(), &s).unwrap();
    for x in [[0.0; 4], [0.5, -0.2, 1.0, 0.3]] {
        let q = potential_expectation(&field, x, &s, &c).unwrap();
        let cl = classical_potential(&f1, &f2, x, &grid, &c).unwrap();
        for i in 0..3 {
            assert!((q[i] - cl[i]).abs() < 1e-10, "{:?} vs {:?}", q, cl);
        }
    }
}

#[test]
fn single_photon_energy() {
    let c = PhysicalConstants { hbar: 1.3, ..Default::default() };
    let s = TwoModeSpace::new(1, 1);
    let grid = Arc::new(make_grid(7.0, 24, 6, 6).unwrap());
    let p = SinglePhotonProfile::new(|k| 0.9 * (-k.norm_squared()).exp(), |k| k.x, Polarization::V);
    let field = single_photon_field(&p, grid.clone(), &s).unwrap();
    assert!(field.is_properly_normalized(1e-12).unwrap());
    let e = photon_energy(&field, &s, &c).unwrap();
    // ħc∫d³k |k| 0.9 e^{−|k|²} = 0.9·2π ħc.
    assert!((e - 0.9 * 2.0 * PI * c.hbar).abs() < 1e-6);
    assert!((e - c.hbar * c.c * grid.integrate(|k| k.norm() * p.rho(k))).abs() < 1e-12);
}

#[test]
fn classical_amplitude_follows_sqrt_rho_one_minus_rho() {
    let c = PhysicalConstants::default();
    let s = TwoModeSpace::new(1, 1);
    let grid = one_node(WaveVector::new(0.0, 0.0, 1.0));
    let amp = |rho: f64| {
        let p = SinglePhotonProfile::new(move |_| rho, |_| 0.0, Polarization::H);
        let f = single_photon_field(&p, grid.clone(), &s).unwrap();
        potential_expectation(&f, [0.0; 4], &s, &c).unwrap()[0]
    };
    assert!(amp(0.0).abs() < 1e-16 && amp(1.0).abs() < 1e-16);
    let half = amp(0.5);
    for rho in [0.1, 0.3, 0.7, 0.95] {
        let a = amp(rho);
        assert!(a.abs() < half.abs());
        assert!((a / half - (rho * (1.0 - rho)).sqrt() / 0.5).abs() < 1e-12);
    }
}

#[test]
fn photon_spin_presets() {
    let c = PhysicalConstants::default();
    let s = TwoModeSpace::new(1, 1);
    let grid = Arc::new(make_grid(1.0, 8, 8, 8).unwrap());
    let vol = grid.weights.iter().sum::<f64>();
    let spin = |rho: fn(&WaveVector) -> f64, pol| {
        let f = single_photon_field(&SinglePhotonProfile::new(rho, |_| 0.3, pol), grid.clone(), &s).unwrap();
        photon_spin(&f, &s, &c).unwrap()
    };
    assert_eq!(spin(|_| 0.0, Polarization::CircularPlus), 0.0);
    assert!((spin(|_| 1.0, Polarization::CircularPlus) - vol).abs() < 1e-12);
    assert!((spin(|_| 1.0, Polarization::CircularMinus) + vol).abs() < 1e-12);
    let g = spin(|k| 0.5 * (-k.norm_squared()).exp(), Polarization::CircularMinus);
    assert!((g + grid.integrate(|k| 0.5 * (-k.norm_squared()).exp())).abs() < 1e-12);
    assert!(photon_energy(&KFieldVacuum::of(&grid, &s), &s, &c).unwrap() == 0.0);
}

struct KFieldVacuum;
impl KFieldVacuum {
    fn of(grid: &Arc<QuadratureGrid>, s: &TwoModeSpace) -> rqed::KField {
        rqed::KField::constant(grid.clone(), s.state(0, 0))
    }
}

#[test]
fn commutator_at_coincident_points_vanishes() {
    let s = TwoModeSpace::new(6, 6);
    let x = [0.3, 1.0, -1.0, 2.0];
    let r = a_commutator_check(x, x, &WaveVector::new(0.2, 0.4, -0.9), &s, &PhysicalConstants::default(), 5).unwrap();
    // Only rounding of the ε products remains.
    assert!(r < 1e-16);
}

#[test]
fn energy_requires_normalized_field() {
    let s = TwoModeSpace::new(1, 1);
    let grid = Arc::new(make_grid(1.0, 2, 2, 2).unwrap());
    let f = rqed::KField::constant(grid, s.state(0, 0) * C64::from(1.0 + 10.0 * DEFAULT_NORMALIZATION_TOL));
    assert!(photon_energy(&f, &s, &PhysicalConstants::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rotation_geometry(k in wave_vector()) {
        let b = polarization_basis(&k).unwrap();
        prop_assert!((b.xi * b.xi.transpose() - Matrix3::identity()).amax() < 1e-12);
        prop_assert!((b.xi.determinant() - 1.0).abs() < 1e-12);
        prop_assert!((b.xi * k - Vector3::z() * k.norm()).amax() < 1e-12 * k.norm());
        let kh = k.normalize();
        let completeness = b.eps_h * b.eps_h.transpose() + b.eps_v * b.eps_v.transpose() + kh * kh.transpose();
        prop_assert!((completeness - Matrix3::identity()).amax() < 1e-12);
        prop_assert!(b.eps_h.dot(&b.eps_v).abs() < 1e-14);
        prop_assert!(transversality_residual(&k).unwrap() < 1e-14 * k.norm().max(1.0));
    }

    #[test]
    fn potential_is_transverse_and_gauss_holds(k in wave_vector(), x in event()) {
        let s = TwoModeSpace::new(2, 2);
        let c = PhysicalConstants::default();
        let a = vector_potential_op(x, &k, &s, &c).unwrap();
        let div = &a[0] * C64::from(k.x) + &a[1] * C64::from(k.y) + &a[2] * C64::from(k.z);
        prop_assert!(max_abs(&div) < 1e-12);
        prop_assert!(gauss_residual(x, &k, &s, &c).unwrap() < 1e-12);
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn heisenberg_equation(k in wave_vector(), x in event()) {
        let s = TwoModeSpace::new(4, 4);
        prop_assert!(heisenberg_residual(x, &k, &s, &PhysicalConstants::default(), 3).unwrap() < 1e-12);
    }

    #[test]
    fn field_commutator_below_cutoff(k in wave_vector(), x in event(), y in event()) {
        let s = TwoModeSpace::new(16, 16);
        prop_assert!(a_commutator_check(x, y, &k, &s, &PhysicalConstants::default(), 12).unwrap() < 1e-12);
    }
}
