use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use rqed::boson::*;
use rqed::kspace::{expectation, make_grid, DEFAULT_NORMALIZATION_TOL};
use rqed::linalg::{max_abs, restricted_norm};
use rqed::{PhysicalConstants, WaveVector, C64};

fn consts() -> PhysicalConstants {
    PhysicalConstants { ell: 1.3, hbar: 0.7, c: 2.0, ..Default::default() }
}

#[test]
fn number_operator_spectrum() {
    let s = OscillatorSpace::new(12);
    let n = &s.adag * &s.a;
    for i in 0..s.dim() {
        assert!((n[(i, i)].re - i as f64).abs() < 1e-14);
    }
    assert!(max_abs(&(n - &s.number)) < 1e-14);
}

#[test]
fn energy_correspondence_for_three_profiles() {
    let c = consts();
    let grid = Arc::new(make_grid(8.0, 24, 8, 8).unwrap());
    let space = OscillatorSpace::default();
    // Closed forms of ħcℓ³∫d³k |k||F|².
    let s = c.hbar * c.c * c.ell3();
    let cases = [
        (CoherentProfile::gaussian(C64::new(1.5, 0.5), 0.8), s * 2.5 * 2.0 * PI * 0.8f64.powi(4)),
        (CoherentProfile::exponential(C64::new(0.0, 1.2), 0.5), s * 1.44 * 4.0 * PI * 6.0 * 0.25f64.powi(4)),
        (CoherentProfile::gaussian(C64::from(0.4), 1.1), s * 0.16 * 2.0 * PI * 1.1f64.powi(4)),
    ];
    for (profile, closed) in &cases {
        let field = coherent_field(profile, grid.clone(), &space).unwrap();
        let q = expectation(&free_hamiltonian(&space, &c), &field, &c, DEFAULT_NORMALIZATION_TOL).unwrap();
        let cl = classical_energy(profile, &grid, &c);
        assert!(q.im.abs() < 1e-14 * q.re);
        assert!(((q.re - cl) / cl).abs() < 1e-12, "{} vs {}", q.re, cl);
        assert!(((cl - closed) / closed).abs() < 1e-6, "{cl} vs {closed}");
    }
}

#[test]
fn vacuum_profile_gives_vacuum_field() {
    let grid = Arc::new(make_grid(1.0, 3, 3, 3).unwrap());
    let space = OscillatorSpace::new(8);
    let f = coherent_field(&CoherentProfile::zero(), grid, &space).unwrap();
    assert!(f.values.iter().all(|v| *v == space.fock(0)));
}

#[test]
fn coherent_field_is_an_annihilation_eigenfield() {
    let grid = Arc::new(make_grid(2.0, 4, 4, 4).unwrap());
    let space = OscillatorSpace::default();
    let profile = CoherentProfile::shell(C64::new(1.0, -1.0), 1.0, 0.3);
    let f = coherent_field(&profile, grid.clone(), &space).unwrap();
    assert!(f.is_properly_normalized(1e-12).unwrap());
    for (k, v) in grid.nodes.iter().zip(&f.values) {
        assert!(coherent_residual(profile.at(k), v, &space) < 1e-8);
    }
}

#[test]
fn single_quantum_energy() {
    let c = consts();
    let s = OscillatorSpace::new(4);
    let k = WaveVector::new(0.3, -0.4, 1.2);
    let h = free_hamiltonian(&s, &c).at(&k);
    assert!((h[(1, 1)].re - c.hbar * c.c * k.norm()).abs() < 1e-15);
}

#[test]
fn equal_time_equal_position_commutator_vanishes() {
    let s = OscillatorSpace::new(20);
    let x = [1.5, 0.2, -0.3, 0.4];
    let r = commutator_check(x, x, &WaveVector::new(0.1, 0.7, -0.3), &s, &consts());
    assert!(restricted_norm(&r, &s.levels_up_to(19)) < 1e-17);
}

#[test]
fn classical_field_is_consistent_with_operator_expectation() {
    let c = consts();
    let grid = Arc::new(make_grid(3.0, 6, 5, 6).unwrap());
    let space = OscillatorSpace::default();
    let profile = CoherentProfile::gaussian(C64::new(0.9, 0.3), 1.0);
    let field = coherent_field(&profile, grid.clone(), &space).unwrap();
    for x in [[0.0, 0.0, 0.0, 0.0], [0.7, 0.3, -1.1, 0.2], [2.0, 1.0, 1.0, 1.0]] {
        let a = classical_field(&profile, x, &grid, &c);
        let b = field_expectation(&field, x, &space, &c);
        assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "{a} vs {b}");
    }
    assert_eq!(classical_field(&CoherentProfile::zero(), [0.3, 0.1, 0.2, 0.0], &grid, &c), 0.0);
}

/// Second-order □φ at x with steps h for a shell profile.
fn box_residual(h: f64) -> f64 {
    let c = PhysicalConstants::default();
    let grid = make_grid(2.0, 10, 6, 6).unwrap();
    let profile = CoherentProfile::shell(C64::from(1.0), 1.0, 0.1);
    let x = [0.3, 0.2, -0.1, 0.4];
    let at = |mu: usize, s: f64| {
        let mut y = x;
        y[mu] += s;
        classical_field(&profile, y, &grid, &c)
    };
    let f0 = classical_field(&profile, x, &grid, &c);
    let d2 = |mu: usize| (at(mu, h) - 2.0 * f0 + at(mu, -h)) / (h * h);
    (d2(0) - d2(1) - d2(2) - d2(3)).abs() / d2(0).abs()
}

#[test]
fn shell_wave_solves_dalembert_at_second_order() {
    let (e1, e2) = (box_residual(0.2), box_residual(0.1));
    let order = (e1 / e2).log2();
    assert!((order - 2.0).abs() < 0.2, "order {order}");
}

#[test]
fn operator_dalembertian_vanishes() {
    // Finite-difference □ of node-wise matrix elements of φ_k(x).
    let c = PhysicalConstants::default();
    let s = OscillatorSpace::new(6);
    let k = WaveVector::new(0.4, -0.8, 0.3);
    let pw = field_operator_pw(&k, &s, &c);
    let x = [0.2, 0.5, -0.4, 1.0];
    let res = |h: f64| {
        let at = |mu: usize, d: f64| {
            let mut y = x;
            y[mu] += d;
            pw.eval(&y)
        };
        let mid = pw.eval(&x);
        let d2 = |mu: usize| (at(mu, h) - &mid * C64::from(2.0) + at(mu, -h)) / C64::from(h * h);
        max_abs(&(d2(0) - d2(1) - d2(2) - d2(3)))
    };
    let order = (res(0.1) / res(0.05)).log2();
    assert!((order - 2.0).abs() < 0.2, "order {order}");
}

proptest! {
    #[test]
    fn commutator_below_cutoff(
        x in proptest::array::uniform4(-5.0..5.0f64),
        y in proptest::array::uniform4(-5.0..5.0f64),
        k in proptest::array::uniform3(-3.0..3.0f64),
    ) {
        let k = WaveVector::from(k);
        prop_assume!(k.norm() > 1e-3);
        let s = OscillatorSpace::new(20);
        let r = commutator_check(x, y, &k, &s, &PhysicalConstants::default());
        prop_assert!(restricted_norm(&r, &s.levels_up_to(15)) < 1e-12);
    }

    #[test]
    fn coherent_states_are_normalized(re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let s = OscillatorSpace::default();
        let z = C64::new(re, im);
        prop_assume!(z.norm_sqr() <= s.guard());
        let v = coherent_state(z, &s).unwrap();
        prop_assert!((v.norm() - 1.0).abs() < 1e-12);
    }
}
