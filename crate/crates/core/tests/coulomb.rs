use std::f64::consts::PI;

use rqed::coulomb::*;
use rqed::PhysicalConstants;

fn open(n: usize, extent: f64) -> SpatialGrid {
    SpatialGrid::new(n, extent, Boundary::Open).unwrap()
}

/// Cube split into six pyramids over its faces; each reduces to
/// (1/8)∫∫_{[-1,1]²} (1+s²+t²)^{-1/2}, done here by composite Simpson.
#[test]
fn self_cell_integral_matches_pyramid_quadrature() {
    let n = 400;
    let h = 2.0 / n as f64;
    let w = |i: usize| if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
    let mut s = 0.0;
    for i in 0..=n {
        for j in 0..=n {
            let (x, y) = (-1.0 + i as f64 * h, -1.0 + j as f64 * h);
            s += w(i) * w(j) / (1.0 + x * x + y * y).sqrt();
        }
    }
    let pyramids = 0.75 * s * h * h / 9.0;
    assert!((self_cell_integral() - pyramids).abs() < 1e-10);
    assert!((self_cell_integral() - 2.380077364).abs() < 1e-9);
}

#[test]
fn derivative_is_exact_on_quadratics() {
    let g = open(16, 3.0);
    let f = g.sample(|x| x[0] * x[0] - 2.0 * x[1] + 0.5 * x[2] * x[2]);
    let grad = g.gradient(&f);
    for idx in 0..g.len() {
        let x = g.point(idx);
        assert!((grad[0][idx] - 2.0 * x[0]).abs() < 1e-12);
        assert!((grad[1][idx] + 2.0).abs() < 1e-12);
        assert!((grad[2][idx] - x[2]).abs() < 1e-12);
    }
    // ∇·(x, y, z) = 3, ∇×∇f = 0 away from the one-sided faces.
    let lin = [g.sample(|x| x[0]), g.sample(|x| x[1]), g.sample(|x| x[2])];
    assert!(g.divergence(&lin).iter().all(|v| (v - 3.0).abs() < 1e-12));
    let curl = g.curl(&grad);
    assert!(g.interior(1).all(|i| curl.iter().all(|c| c[i].abs() < 1e-12)));
}

#[test]
fn potential_is_linear() {
    let g = open(16, 6.0);
    let a = DensityPreset::Gaussian { charge: 1.0, sigma: 0.7, center: [0.3, 0.0, 0.0] }.sample(&g, 0.0);
    let b = DensityPreset::Dipole { charge: 2.0, sigma: 0.5, separation: 1.0 }.sample(&g, 0.0);
    let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - 0.5 * y).collect();
    let (pa, pb, pm) = (newtonian_potential(&g, &a).unwrap(), newtonian_potential(&g, &b).unwrap(), newtonian_potential(&g, &mix).unwrap());
    let scale = pm.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..g.len() {
        assert!((pm[i] - (2.0 * pa[i] - 0.5 * pb[i])).abs() < 1e-13 * scale);
    }
}

#[test]
fn single_point_charge_uses_cell_integral() {
    let g = open(16, 4.0);
    let mut j0 = vec![0.0; g.len()];
    let c = g.index(8, 8, 8);
    j0[c] = 1.0;
    let phi = newtonian_potential(&g, &j0).unwrap();
    assert!((phi[c] - self_cell_integral() * g.h * g.h).abs() < 1e-14);
    let far = g.index(8, 8, 13);
    assert!((phi[far] - g.h * g.h / 5.0).abs() < 1e-14);
}

#[test]
fn gaussian_potential_converges_at_second_order() {
    let (q, sigma) = (1.0, 0.5);
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for n in [16, 24, 32] {
        // Wide enough that the charge cut off by the box is negligible.
        let g = open(n, 12.0 * sigma);
        let j0 = DensityPreset::Gaussian { charge: q, sigma, center: [0.0; 3] }.sample(&g, 0.0);
        let phi = newtonian_potential(&g, &j0).unwrap();
        let exact = g.sample(|x| {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            q * libm::erf(r / (2f64.sqrt() * sigma)) / r
        });
        let diff: Vec<f64> = phi.iter().zip(&exact).map(|(a, b)| a - b).collect();
        let all: Vec<usize> = (0..g.len()).collect();
        hs.push(g.h);
        errs.push(relative_l2(&diff, &exact, &all));
    }
    assert!(errs[2] < 1e-2, "{errs:?}");
    let p = convergence_order(&hs, &errs);
    assert!((p - 2.0).abs() < 0.3, "{p}");
}

#[test]
fn correction_matches_analytic_field() {
    let c = PhysicalConstants { mu0: 1.7, c: 0.9, ..Default::default() };
    let (q, sigma) = (1.3, 0.5);
    let g = open(32, 12.0 * sigma);
    let j0 = DensityPreset::Gaussian { charge: q, sigma, center: [0.0; 3] }.sample(&g, 0.0);
    let e = coulomb_correction(&g, &j0, &c).unwrap();
    let s = c.mu0 * c.c / (4.0 * PI);
    let mut worst = 0.0f64;
    for idx in g.interior(2) {
        let x = g.point(idx);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if r < 2.0 * sigma {
            continue;
        }
        let er = s * gaussian_potential_gradient(q, sigma, r);
        for a in 0..3 {
            worst = worst.max((e[a][idx] - er * x[a] / r).abs() / er.abs());
        }
    }
    assert!(worst < 2e-2, "{worst}");
}

#[test]
fn gauss_law_flux_and_dipole() {
    let c = PhysicalConstants { mu0: 2.0, ..Default::default() };
    let g = open(32, 8.0);
    let mono = DensityPreset::Gaussian { charge: 1.0, sigma: 0.5, center: [0.0; 3] }.sample(&g, 0.0);
    let flux = boundary_flux(&g, &coulomb_correction(&g, &mono, &c).unwrap());
    let expected = -c.mu0 * c.c;
    // Face sums are midpoint rules on the outermost cell centers: O(h).
    assert!(((flux - expected) / expected).abs() < 5e-2, "{flux}");
    let di = DensityPreset::Dipole { charge: 1.0, sigma: 0.5, separation: 1.0 }.sample(&g, 0.0);
    let flux = boundary_flux(&g, &coulomb_correction(&g, &di, &c).unwrap());
    assert!(flux.abs() < 1e-3 * expected.abs(), "{flux}");
}

#[test]
fn add_remove_round_trip_and_maxwell_report() {
    let c = PhysicalConstants::default();
    let g = open(24, 6.0);
    let j0 = DensityPreset::Gaussian { charge: 1.0, sigma: 1.0, center: [0.2, -0.1, 0.0] }.sample(&g, 0.0);
    let mut f = ClassicalFieldSet::with_density(g, j0);
    f.e[0] = g.sample(|x| (x[1] * 0.7).sin()); // divergence-free background
    f.b[2] = g.sample(|x| x[0]);
    let cor = add_coulomb(&f, &c).unwrap();
    let back = remove_coulomb(&cor, &c).unwrap();
    for a in 0..3 {
        for i in 0..g.len() {
            assert!((back.e[a][i] - f.e[a][i]).abs() < 1e-12);
        }
        assert_eq!(cor.b[a], f.b[a]);
    }
    let m = verify_maxwell(&f, &cor, &c);
    assert!(m.gauss < 5e-2, "{m:?}");
    assert!(m.curl_correction < 1e-12 && m.div_b < 1e-12, "{m:?}");
}

#[test]
fn periodic_box_removes_mean() {
    let c = PhysicalConstants::default();
    let g = SpatialGrid::new(24, 2.0 * PI, Boundary::Periodic).unwrap();
    let j0 = g.sample(|x| 1.0 + x[0].cos() * x[1].sin());
    let phi = newtonian_potential(&g, &j0).unwrap();
    assert!(phi.iter().sum::<f64>().abs() < 1e-10);
    // −∇²Φ = 4π(j⁰ − 1) for a single Fourier mode: Φ = 2π cos x sin y.
    for i in 0..g.len() {
        let x = g.point(i);
        assert!((phi[i] - 2.0 * PI * x[0].cos() * x[1].sin()).abs() < 1e-11);
    }
    let cor = add_coulomb(&ClassicalFieldSet::with_density(g, j0.clone()), &c).unwrap();
    let m = verify_maxwell(&ClassicalFieldSet::with_density(g, j0), &cor, &c);
    assert!(m.gauss < 3e-2, "{m:?}");
}

#[test]
fn zero_density_and_bad_input() {
    let g = open(16, 4.0);
    assert!(newtonian_potential(&g, &vec![0.0; g.len()]).unwrap().iter().all(|&v| v == 0.0));
    assert!(newtonian_potential(&g, &[0.0; 10]).is_err());
    let mut bad = vec![0.0; g.len()];
    bad[3] = f64::NAN;
    assert!(newtonian_potential(&g, &bad).is_err());
    assert!(SpatialGrid::new(32, -1.0, Boundary::Open).is_err());
}

/// With ∂₀ resolved finely the residual is the spatial discretization of
/// ∇²Φ = −4πj⁰, which falls off as h².
#[test]
fn translating_density_continuity_order() {
    let sigma = 0.6;
    let d = DensityPreset::TranslatingGaussian { charge: 1.0, sigma, center: [0.0; 3], velocity: [0.3, 0.0, 0.1] };
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for n in [24, 32, 48] {
        let g = open(n, 8.0 * sigma);
        hs.push(g.h);
        errs.push(continuity_residual(&g, &d, 0.0, 1e-3).unwrap());
    }
    let p = convergence_order(&hs, &errs);
    assert!((p - 2.0).abs() < 0.3, "{p} {errs:?}");
}

#[test]
fn volume_round_trip() {
    let g = open(16, 2.0);
    let a = g.sample(|x| x[0] + 2.0 * x[1]);
    let b = g.sample(|x| x[2].exp());
    let mut buf = Vec::new();
    write_volume(&mut buf, &g, &[&a, &b]).unwrap();
    assert_eq!(buf.len(), 48 + 8 * 2 * g.len());
    assert_eq!(&buf[..8], VOLUME_MAGIC);
    let (dims, h, comps) = read_volume(buf.as_slice()).unwrap();
    assert_eq!((dims, h), ([16; 3], g.h));
    assert_eq!(comps, vec![a, b]);
    assert!(read_volume(&buf[..100]).is_err());
    let mut wrong = buf.clone();
    wrong[0] = b'X';
    assert!(read_volume(wrong.as_slice()).is_err());
}

#[test]
fn slice_csv_layout() {
    let g = open(16, 2.0);
    let f = g.sample(|x| x[0] * 10.0 + x[2]);
    let mut buf = Vec::new();
    write_slice_csv(&mut buf, &g, &[&f], 1, 4).unwrap();
    let mut rdr = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(rdr.headers().unwrap(), vec!["x3", "x1", "f0"]);
    let rows: Vec<Vec<f64>> = rdr.records().map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 256);
    for r in &rows {
        assert!((r[2] - (r[1] * 10.0 + r[0])).abs() < 1e-12);
    }
    assert!(write_slice_csv(Vec::new(), &g, &[&f], 1, 16).is_err());
}
