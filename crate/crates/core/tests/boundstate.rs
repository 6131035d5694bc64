use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rqed::boundstate::*;
use rqed::fermion::dispersion;
use rqed::suite::random_in_ball;
use rqed::{Error, PhysicalConstants, QuadratureGrid, WaveVector};

fn small_grids() -> (QuadratureGrid, QuadratureGrid) {
    (QuadratureGrid::lattice(0.5, 2, false).unwrap(), QuadratureGrid::lattice(0.4, 3, true).unwrap())
}

fn gaussian(amplitude: f64) -> A00Profile {
    A00Profile::Gaussian { amplitude, k_center: [0.1, 0.0, 0.2], sigma_k: 0.6, k0: 0.4, sigma_ph: 1.2, twist: [0.0; 3] }
}

#[test]
fn zero_profile_has_no_energy() {
    let (ph, el) = small_grids();
    let c = PhysicalConstants::default();
    let st = variational_optimum(&gaussian(0.0), &ph, &el, &c, CouplingModel::ClosedForm).unwrap();
    assert!(st.pairs.iter().all(|p| p.rho_vac == 1.0));
    let e = energies(&st, &c).unwrap();
    assert_eq!((e.e_ph, e.e_el, e.e_int, e.e_total), (0.0, 0.0, 0.0, 0.0));
    assert_eq!(e.identity_defect(), 0.0);
}

#[test]
fn energies_match_node_sums() {
    let (ph, el) = small_grids();
    let c = PhysicalConstants { ell: 1.1, hbar: 0.8, c: 1.3, ..Default::default() };
    let prof = gaussian(0.7);
    let st = variational_optimum(&prof, &ph, &el, &c, CouplingModel::ClosedForm).unwrap();
    let e = energies(&st, &c).unwrap();
    let l6 = c.ell.powi(6);
    let (mut eph, mut eel) = (0.0, 0.0);
    for (i, q) in ph.nodes.iter().enumerate() {
        for (j, k) in el.nodes.iter().enumerate() {
            let w = ph.weights[i] * el.weights[j];
            let u2 = u_perp_sq_closed(q, k, &c);
            let shifted = prof.eval(q, &(k + q)).norm_sqr();
            eph += w * c.hbar * c.c * q.norm() * u2 * shifted;
            eel += w * c.hbar * dispersion(k, &c) * (prof.eval(q, k).norm_sqr() + u2 * shifted);
        }
    }

    assert!((e.e_ph - l6 * eph).abs() < 1e-12 * e.e_ph);
    assert!((e.e_el - l6 * eel).abs() < 1e-12 * e.e_el);
    assert!((e.e_total - (e.e_el - e.e_ph)).abs() < 1e-15 * e.e_el);
    assert!(st.normalization_defect() < 1e-15);
}

/// Regression values for the small reference configuration.
#[test]
fn frozen_reference_energies() {
    let (ph, el) = small_grids();
    let c = PhysicalConstants::default();
    let st = variational_optimum(&gaussian(0.7), &ph, &el, &c, CouplingModel::ClosedForm).unwrap();
    let e = energies(&st, &c).unwrap();
    let close = |a: f64, b: f64| ((a - b) / b).abs() < 1e-12;
    assert!(close(e.e_ph, 2.450860270895421e-5), "{}", e.e_ph);
    assert!(close(e.e_el, 3.721283714975466), "{}", e.e_el);
    assert!(close(e.e_int, -4.901720541790843e-5), "{}", e.e_int);
}

#[test]
fn energies_scale_with_amplitude_and_length() {
    let (ph, el) = small_grids();
    let c = PhysicalConstants::default();
    let base = energies(&variational_optimum(&gaussian(0.3), &ph, &el, &c, CouplingModel::ClosedForm).unwrap(), &c).unwrap();
    let doubled = energies(&variational_optimum(&gaussian(0.6), &ph, &el, &c, CouplingModel::ClosedForm).unwrap(), &c).unwrap();
    assert!((doubled.e_ph / base.e_ph - 4.0).abs() < 1e-12);
    assert!((doubled.e_el / base.e_el - 4.0).abs() < 1e-12);
    // ℓ enters through ℓ⁶ and through N₀² ∝ ℓ in U²: E_ph ∝ ℓ⁵.
    let c2 = PhysicalConstants { ell: 2.0, ..c };
    let longer = energies(&variational_optimum(&gaussian(0.3), &ph, &el, &c2, CouplingModel::ClosedForm).unwrap(), &c2).unwrap();
    assert!((longer.e_ph / base.e_ph - 32.0).abs() < 1e-10);
}

#[test]
fn feasibility_shrinks_with_amplitude() {
    let (ph, el) = small_grids();
    let c = PhysicalConstants::default();
    let mut last = f64::INFINITY;
    for a in [0.1, 0.4, 0.7, 0.95] {
        let r = variational_optimum(&gaussian(a), &ph, &el, &c, CouplingModel::ClosedForm).unwrap().min_rho_vac();
        assert!(r < last);
        last = r;
    }
    match variational_optimum(&gaussian(5.0), &ph, &el, &c, CouplingModel::ClosedForm) {
        Err(Error::Infeasible { rho_vac, .. }) => assert!(rho_vac < 0.0),
        other => panic!("expected infeasible, got {:?}", other.map(|s| s.min_rho_vac())),
    }
}

#[test]
fn invalid_profiles_rejected() {
    let (ph, el) = small_grids();
    let c = PhysicalConstants::default();
    let bad = A00Profile::Shell { amplitude: 0.3, k_shell: 0.5, width: 0.0, k0: 0.2, sigma_ph: 1.0 };
    assert!(matches!(variational_optimum(&bad, &ph, &el, &c, CouplingModel::ClosedForm), Err(Error::Config(_))));
    let bad = A00Profile::Gaussian { amplitude: f64::NAN, k_center: [0.0; 3], sigma_k: 1.0, k0: 0.2, sigma_ph: 1.0, twist: [0.0; 3] };
    assert!(bad.validate().is_err());
}

#[test]
fn profiles_decay_cubically() {
    let k = WaveVector::new(0.2, 0.1, -0.3);
    for prof in [gaussian(0.5), A00Profile::Shell { amplitude: 0.3, k_shell: 0.5, width: 0.2, k0: 0.2, sigma_ph: 1.0 }] {
        for d in [WaveVector::x(), WaveVector::new(1.0, -2.0, 0.5)] {
            let p = check_decay(&prof, &k, &d, 0.01).unwrap();
            assert!((p - 3.0).abs() < 1e-3, "{p}");
        }
    }
}

#[test]
fn parallel_coupling_vanishes() {
    let c = PhysicalConstants::default();
    let k = WaveVector::new(0.3, -0.2, 0.5);
    let q = k * 0.01;
    assert_eq!(coupling(&q, &k, &c, CouplingModel::ClosedForm).unwrap().u_perp_sq(), 0.0);
    assert_eq!(u_perp_sq_closed(&q, &k, &c), 0.0);

}

#[test]
fn long_wave_expansion_is_second_order() {
    let c = PhysicalConstants::default();
    let k = WaveVector::new(0.3, -0.2, 0.5);
    let d = WaveVector::new(0.2, 0.9, -0.4).normalize();
    let pts: Vec<(f64, f64)> = geometric(1e-3, 1e-2, 6)
        .into_iter()
        .map(|s| {
            let q = d * s;
            let exact = u_perp_sq_closed(&q, &k, &c);
            (s.ln(), ((exact - u_perp_sq_long_wave(&q, &k, &c)) / exact).abs().ln())
        })
        .collect();
    let order = fit_slope(&pts);
    assert!((order - 2.0).abs() < 0.05, "{order}");
}

#[test]
fn scan_reports_slopes_and_parallel_zero() {
    let c = PhysicalConstants::default();
    let k = WaveVector::new(0.3, -0.2, 0.5);
    let dirs = [WaveVector::x(), WaveVector::y(), k];
    let scan = long_wavelength_scan(&k, &dirs, 1e-4, 1e-2, 9, &c, CouplingModel::ClosedForm).unwrap();
    assert_eq!(scan.rows.len(), 27);
    for s in &scan.slopes[..2] {
        assert!((s.unwrap() + 3.0).abs() < 0.02);
    }
    assert_eq!(scan.slopes[2], None);
    assert!(scan.rows.iter().filter(|r| r.direction == 2).all(|r| r.u_perp_sq == 0.0));
}

#[test]
fn geometric_sweep_endpoints() {
    let g = geometric(1e-4, 1e-2, 5);
    assert_eq!(g.len(), 5);
    assert!((g[0] - 1e-4).abs() < 1e-19 && (g[4] - 1e-2).abs() < 1e-15 && (g[2] - 1e-3).abs() < 1e-16);
    assert!((fit_slope(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]) - 2.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Projected closed form ≡ ε-contracted closed form, and both sit above
    /// the 4/(ωω′) bound.
    #[test]
    fn coupling_paths_agree_and_respect_bound(seed in any::<u64>(), cc in 0.5..2.0f64, kappa in 0.2..3.0f64) {
        let c = PhysicalConstants { c: cc, kappa, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            let q = random_in_ball(&mut rng, 3.0) + WaveVector::new(1e-3, 0.0, 0.0);
            let k = random_in_ball(&mut rng, 4.0);
            let a = coupling(&q, &k, &c, CouplingModel::ClosedForm).unwrap().u_perp_sq();
            let b = u_perp_sq_closed(&q, &k, &c);
            // The projection cancels |k|² down to |k_⊥|²; scale accordingly.
            let sin2 = k.cross(&q).norm_squared() / (k.norm_squared() * q.norm_squared());
            prop_assert!((a - b).abs() <= 1e-12 * b / sin2.max(1e-300), "{a} vs {b}");
            prop_assert!(b >= u_perp_sq_lower_bound(&q, &k, &c) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn closed_form_identity_holds(amp in 0.05..0.8f64, sk in 0.2..1.0f64, k0 in 0.1..1.0f64, tw in -2.0..2.0f64) {
        let (ph, el) = small_grids();
        let c = PhysicalConstants::default();
        let prof = A00Profile::Gaussian { amplitude: amp, k_center: [0.0, 0.1, 0.0], sigma_k: sk, k0, sigma_ph: 1.0, twist: [tw, 0.0, -tw] };
        let st = variational_optimum(&prof, &ph, &el, &c, CouplingModel::ClosedForm).unwrap();
        let e = energies(&st, &c).unwrap();
        prop_assert!(e.identity_defect() < 1e-10);
        prop_assert!(e.e_ph > 0.0 && e.e_total < e.e_el);
    }
}
