//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use rqed::boundstate::A00Profile;
use rqed::coulomb::{Boundary, DensityPreset, SpatialGrid};
use rqed::interaction::ProductState;
use rqed::suite::random_product_state;
use rqed::QuadratureGrid;

/// Photon lattice of 26 nodes and an electron lattice of (2·hw+1)³ nodes.
pub fn lattices(electron_half_width: i64) -> (Arc<QuadratureGrid>, Arc<QuadratureGrid>) {
    (
        Arc::new(QuadratureGrid::lattice(0.25, 1, false).expect("photon lattice")),
        Arc::new(QuadratureGrid::lattice(0.25, electron_half_width, true).expect("electron lattice")),
    )
}

pub fn product_state(electron_half_width: i64) -> ProductState {
    let (ph, el) = lattices(electron_half_width);
    random_product_state(ph, el, 1)
}

pub fn gaussian_density(n: usize) -> (SpatialGrid, Vec<f64>) {
    let g = SpatialGrid::new(n, 6.0, Boundary::Open).expect("grid");
    let rho = DensityPreset::Gaussian { charge: 1.0, sigma: 1.0, center: [0.0; 3] }.sample(&g, 0.0);
    (g, rho)
}

pub fn profile() -> A00Profile {
    A00Profile::default()
}
