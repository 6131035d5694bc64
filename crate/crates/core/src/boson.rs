//! A scalar boson field: one truncated oscillator per wave vector.

use std::f64::consts::PI;
use std::io::Read;
use std::sync::Arc;

use rayon::prelude::*;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::kspace::{DiagonalOperator, KField, QuadratureGrid, WaveVector};
use crate::linalg::{comm, CMat, CVec, PlaneWaveOp, C64};
use crate::reduce::pairwise_sum;

pub const DEFAULT_CUTOFF: usize = 32;

/// Fock levels 0..=n_max with ladder matrices.
#[derive(Clone, Debug)]
pub struct OscillatorSpace {
    pub n_max: usize,
    pub a: CMat,
    pub adag: CMat,
    pub number: CMat,
}

impl OscillatorSpace {
    pub fn new(n_max: usize) -> Self {
        let d = n_max + 1;
        let mut a = CMat::zeros(d, d);
        for n in 1..d {
            a[(n - 1, n)] = C64::from((n as f64).sqrt());
        }
        let adag = a.adjoint();
        let number = CMat::from_diagonal(&CVec::from_iterator(d, (0..d).map(|n| C64::from(n as f64))));
        Self { n_max, a, adag, number }
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn fock(&self, n: usize) -> CVec {
        crate::linalg::basis(self.dim(), n)
    }

    /// Levels 0..=n, clipped to the space.
    pub fn levels_up_to(&self, n: usize) -> Vec<usize> {
        (0..=n.min(self.n_max)).collect()
    }

    /// Largest amplitude squared accepted by [`coherent_state`].
    pub fn guard(&self) -> f64 {
        self.n_max as f64 / 4.0
    }
}

impl Default for OscillatorSpace {
    fn default() -> Self {
        Self::new(DEFAULT_CUTOFF)
    }
}

/// e^{-|z|²/2} Σ zⁿ/√n! |n⟩ truncated at the cutoff and renormalized.
pub fn coherent_state(z: C64, space: &OscillatorSpace) -> Result<CVec> {
    let norm_sq = z.norm_sqr();
    if norm_sq > space.guard() {
        return Err(Error::Truncation { norm_sq, limit: space.guard(), cutoff: space.n_max });
    }
    let mut v = CVec::zeros(space.dim());
    let mut term = C64::from((-0.5 * norm_sq).exp());
    v[0] = term;
    for n in 1..space.dim() {
        term *= z / (n as f64).sqrt();
        v[n] = term;
    }
    let nrm = v.norm();
    Ok(v / C64::from(nrm))
}

/// ‖a|z⟩ − z|z⟩‖.
pub fn coherent_residual(z: C64, state: &CVec, space: &OscillatorSpace) -> f64 {
    (&space.a * state - state * z).norm()
}

/// A dimensionless amplitude profile F(k); the physical profile is f = ℓ^{3/2} F.
#[derive(Clone)]
pub struct CoherentProfile {
    rule: Arc<dyn Fn(&WaveVector) -> C64 + Send + Sync>,
}

impl std::fmt::Debug for CoherentProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("CoherentProfile")
    }
}

impl CoherentProfile {
    pub fn from_fn<F>(rule: F) -> Self
    where
        F: Fn(&WaveVector) -> C64 + Send + Sync + 'static,
    {
        Self { rule: Arc::new(rule) }
    }

    pub fn zero() -> Self {
        Self::from_fn(|_| C64::new(0.0, 0.0))
    }

    /// F(k) = amplitude · exp(−|k|²/(2 width²)).
    pub fn gaussian(amplitude: C64, width: f64) -> Self {
        Self::from_fn(move |k| amplitude * (-k.norm_squared() / (2.0 * width * width)).exp())
    }

    /// F(k) = amplitude · exp(−(|k| − k0)²/(2 width²)).
    pub fn shell(amplitude: C64, k0: f64, width: f64) -> Self {
        Self::from_fn(move |k| amplitude * (-(k.norm() - k0).powi(2) / (2.0 * width * width)).exp())
    }

    /// F(k) = amplitude · exp(−|k|/scale).
    pub fn exponential(amplitude: C64, scale: f64) -> Self {
        Self::from_fn(move |k| amplitude * (-k.norm() / scale).exp())
    }

    /// Table with columns k_x,k_y,k_z,re,im. Lookups snap to the nearest
    /// tabulated wave vector within `tol`; elsewhere F = 0.
    pub fn from_csv<R: Read>(reader: R, tol: f64) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut nodes = Vec::new();
        let mut vals = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 5 {
                return Err(Error::Config(format!("profile csv rows need 5 columns, got {}", rec.len())));
            }
            let num = |i: usize| -> Result<f64> {
                rec[i].trim().parse::<f64>().map_err(|e| Error::Config(format!("profile csv: {e}")))
            };
            nodes.push(WaveVector::new(num(0)?, num(1)?, num(2)?));
            vals.push(C64::new(num(3)?, num(4)?));
        }
        let weights = vec![1.0; nodes.len()];
        let table = QuadratureGrid::from_nodes(nodes, weights)?;
        Ok(Self::from_fn(move |k| match table.find_node(k, tol) {
            Some((i, _)) => vals[i],
            None => C64::new(0.0, 0.0),
        }))
    }

    pub fn at(&self, k: &WaveVector) -> C64 {
        (self.rule)(k)
    }

    /// f(k) = ℓ^{3/2} F(k).
    pub fn physical(&self, k: &WaveVector, consts: &PhysicalConstants) -> C64 {
        self.at(k) * consts.ell.powf(1.5)
    }
}

/// The field k ↦ |F(k)⟩ᶜ.
pub fn coherent_field(profile: &CoherentProfile, grid: Arc<QuadratureGrid>, space: &OscillatorSpace) -> Result<KField> {
    let values: Result<Vec<CVec>> = grid.nodes.par_iter().map(|k| coherent_state(profile.at(k), space)).collect();
    KField::new(grid, values?)
}

/// H_k = ħc|k| a†a, without a zero-point term.
pub fn free_hamiltonian(space: &OscillatorSpace, consts: &PhysicalConstants) -> DiagonalOperator {
    let number = space.number.clone();
    let scale = consts.hbar * consts.c;
    DiagonalOperator::from_fn(space.dim(), move |k| &number * C64::from(scale * k.norm()))
}

/// N₀(k) = √((2π)³ 2|k| ℓ).
pub fn normalization(k_abs: f64, consts: &PhysicalConstants) -> f64 {
    ((2.0 * PI).powi(3) * 2.0 * k_abs * consts.ell).sqrt()
}

/// φ_k(x) = (1/N₀)(e^{−ik·x} a + e^{ik·x} a†) with k⁰ = |k|.
pub fn field_operator_pw(k: &WaveVector, space: &OscillatorSpace, consts: &PhysicalConstants) -> PlaneWaveOp {
    let kn = k.norm();
    let inv = C64::from(1.0 / normalization(kn, consts));
    PlaneWaveOp { k: [kn, k.x, k.y, k.z], minus: &space.a * inv, plus: &space.adag * inv }
}

/// φ̂(x) sampled at every node of a grid.
#[derive(Clone, Debug)]
pub struct ScalarFieldOperatorSample {
    pub x: [f64; 4],
    pub mats: Vec<CMat>,
}

pub fn field_operator(x: [f64; 4], grid: &QuadratureGrid, space: &OscillatorSpace, consts: &PhysicalConstants) -> ScalarFieldOperatorSample {
    let mats = grid.nodes.par_iter().map(|k| field_operator_pw(k, space, consts).eval(&x)).collect();
    ScalarFieldOperatorSample { x, mats }
}

/// [φ_k(x), φ_k(y)] − i sin(k_μ(y−x)^μ)/((2π)³ℓ|k|)·I. The truncation
/// only spoils the top Fock level.
pub fn commutator_check(x: [f64; 4], y: [f64; 4], k: &WaveVector, space: &OscillatorSpace, consts: &PhysicalConstants) -> CMat {
    let pw = field_operator_pw(k, space, consts);
    let lhs = comm(&pw.eval(&x), &pw.eval(&y));
    let d = [y[0] - x[0], y[1] - x[1], y[2] - x[2], y[3] - x[3]];
    let ph = crate::linalg::minkowski_dot(&pw.k, &d);
    let pred = C64::new(0.0, ph.sin() / ((2.0 * PI).powi(3) * consts.ell * k.norm()));
    lhs - CMat::identity(space.dim(), space.dim()) * pred
}

/// Classical solution φ(x) = 2 Re Σ_k w_k (ℓ^{3/2}/N₀) f(k) e^{−ik·x}.
pub fn classical_field(profile: &CoherentProfile, x: [f64; 4], grid: &QuadratureGrid, consts: &PhysicalConstants) -> f64 {
    let ell32 = consts.ell.powf(1.5);
    let vals: Vec<f64> = grid
        .nodes
        .par_iter()
        .zip(&grid.weights)
        .map(|(k, w)| {
            let kn = k.norm();
            let ph = kn * x[0] - k.dot(&WaveVector::new(x[1], x[2], x[3]));
            let t = profile.physical(k, consts) * C64::from_polar(1.0, -ph) * (ell32 / normalization(kn, consts));
            2.0 * w * t.re
        })
        .collect();
    pairwise_sum(&vals)
}

/// ℓ³ Σ_k w_k ⟨ζ_k|φ_k(x) ζ_k⟩ — the same quantity through operator matrices.
pub fn field_expectation(field: &KField, x: [f64; 4], space: &OscillatorSpace, consts: &PhysicalConstants) -> f64 {
    let vals: Vec<f64> = field
        .grid
        .nodes
        .par_iter()
        .zip(&field.grid.weights)
        .zip(&field.values)
        .map(|((k, w), z)| w * z.dotc(&(field_operator_pw(k, space, consts).eval(&x) * z)).re)
        .collect();
    consts.ell3() * pairwise_sum(&vals)
}

/// The classical energy Σ_k w_k ħc|k||f(k)|².
pub fn classical_energy(profile: &CoherentProfile, grid: &QuadratureGrid, consts: &PhysicalConstants) -> f64 {
    grid.integrate(|k| consts.hbar * consts.c * k.norm() * profile.physical(k, consts).norm_sqr())
}
