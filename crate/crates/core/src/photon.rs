//! Transverse photons: two oscillators per wave vector, one for each
//! polarization orthogonal to k.

use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::boson::{coherent_state, normalization, CoherentProfile, OscillatorSpace};
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::kspace::{expectation, DiagonalOperator, KField, QuadratureGrid, WaveVector, DEFAULT_NORMALIZATION_TOL};
use crate::linalg::{comm, kron, restricted_norm, CMat, CVec, PlaneWaveOp, C64, I};
use crate::reduce::pairwise_sum;

pub const DEFAULT_MODE_CUTOFF: usize = 8;

/// Rotation Ξ with Ξ k = |k| e₃; its first two rows are the polarizations.
#[derive(Clone, Copy, Debug)]
pub struct PolarizationBasis {
    pub xi: Matrix3<f64>,
    pub eps_h: Vector3<f64>,
    pub eps_v: Vector3<f64>,
}

impl PolarizationBasis {
    pub fn eps(&self, pol: usize) -> Vector3<f64> {
        if pol == 0 {
            self.eps_h
        } else {
            self.eps_v
        }
    }
}

/// Rotation about the axis a×b taking unit a to unit b (requires a·b > −1).
fn minimal_rotation(a: &Vector3<f64>, b: &Vector3<f64>) -> Matrix3<f64> {
    let v = a.cross(b);
    let c = a.dot(b);
    let vx = Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0);
    Matrix3::identity() * c + vx + v * v.transpose() / (1.0 + c)
}

/// Ξ is the minimal rotation k̂ → e₃ on the northern side. Close to −e₃ that
/// rotation degenerates, so for k̂₃ ≤ −1/2 we first rotate by π about e₁
/// and then take the minimal rotation; at k̂ = −e₃ this is exactly the
/// rotation by π about e₁.
pub fn polarization_basis(k: &WaveVector) -> Result<PolarizationBasis> {
    let n = k.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Domain("photon wave vector must be nonzero".into()));
    }
    let kh = k / n;
    let e3 = Vector3::z();
    let xi = if kh.z > -0.5 {
        minimal_rotation(&kh, &e3)
    } else {
        let flip = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0));
        minimal_rotation(&(flip * kh), &e3) * flip
    };
    Ok(PolarizationBasis {
        xi,
        eps_h: xi.row(0).transpose(),
        eps_v: xi.row(1).transpose(),
    })
}

/// Largest of |k·ε^H|, |k·ε^V|.
pub fn transversality_residual(k: &WaveVector) -> Result<f64> {
    let b = polarization_basis(k)?;
    Ok(k.dot(&b.eps_h).abs().max(k.dot(&b.eps_v).abs()))
}

/// H ⊗ V oscillators; basis index m·(n_v+1) + n for |m, n⟩.
#[derive(Clone, Debug)]
pub struct TwoModeSpace {
    pub cutoff_h: usize,
    pub cutoff_v: usize,
    pub a_h: CMat,
    pub a_v: CMat,
    pub n_h: CMat,
    pub n_v: CMat,
}

impl TwoModeSpace {
    pub fn new(cutoff_h: usize, cutoff_v: usize) -> Self {
        let h = OscillatorSpace::new(cutoff_h);
        let v = OscillatorSpace::new(cutoff_v);
        let ih = CMat::identity(h.dim(), h.dim());
        let iv = CMat::identity(v.dim(), v.dim());
        Self {
            cutoff_h,
            cutoff_v,
            a_h: kron(&h.a, &iv),
            a_v: kron(&ih, &v.a),
            n_h: kron(&h.number, &iv),
            n_v: kron(&ih, &v.number),
        }
    }

    pub fn dim(&self) -> usize {
        (self.cutoff_h + 1) * (self.cutoff_v + 1)
    }

    pub fn index(&self, m: usize, n: usize) -> usize {
        m * (self.cutoff_v + 1) + n
    }

    pub fn state(&self, m: usize, n: usize) -> CVec {
        crate::linalg::basis(self.dim(), self.index(m, n))
    }

    /// Indices of |m,n⟩ with m, n ≤ level.
    pub fn safe_indices(&self, level: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for m in 0..=level.min(self.cutoff_h) {
            for n in 0..=level.min(self.cutoff_v) {
                out.push(self.index(m, n));
            }
        }
        out
    }

    /// Ladder operator of polarization 0 (H) or 1 (V).
    pub fn a(&self, pol: usize) -> &CMat {
        if pol == 0 {
            &self.a_h
        } else {
            &self.a_v
        }
    }
}

impl Default for TwoModeSpace {
    fn default() -> Self {
        Self::new(DEFAULT_MODE_CUTOFF, DEFAULT_MODE_CUTOFF)
    }
}

/// A_α = λ/(2N₀) Σ_pol ε_α (e^{−ik·x} a + e^{ik·x} a†), α = 1..3; A₀ ≡ 0.
pub fn vector_potential_pw(q: &WaveVector, space: &TwoModeSpace, consts: &PhysicalConstants) -> Result<[PlaneWaveOp; 3]> {
    let b = polarization_basis(q)?;
    let qn = q.norm();
    let pref = consts.lambda / (2.0 * normalization(qn, consts));
    Ok(std::array::from_fn(|alpha| {
        let minus = (&space.a_h * C64::from(b.eps_h[alpha]) + &space.a_v * C64::from(b.eps_v[alpha])) * C64::from(pref);
        PlaneWaveOp { k: [qn, q.x, q.y, q.z], plus: minus.adjoint(), minus }
    }))
}

pub fn vector_potential_op(x: [f64; 4], q: &WaveVector, space: &TwoModeSpace, consts: &PhysicalConstants) -> Result<[CMat; 3]> {
    let a = vector_potential_pw(q, space, consts)?;
    Ok(std::array::from_fn(|i| a[i].eval(&x)))
}

/// E_α = −c ∂₀A_α and B = ∇ × A, as plane waves.
pub fn e_b_pw(q: &WaveVector, space: &TwoModeSpace, consts: &PhysicalConstants) -> Result<([PlaneWaveOp; 3], [PlaneWaveOp; 3])> {
    let a = vector_potential_pw(q, space, consts)?;
    let e = std::array::from_fn(|i| a[i].deriv(0).scale(C64::from(-consts.c)));
    // B_α = ∂_β A_γ − ∂_γ A_β for cyclic (α, β, γ); spatial index β ↦ x^{β+1}.
    let b = std::array::from_fn(|alpha| {
        let beta = (alpha + 1) % 3;
        let gamma = (alpha + 2) % 3;
        a[gamma].deriv(beta + 1).add(&a[beta].deriv(gamma + 1).scale(C64::from(-1.0)))
    });
    Ok((e, b))
}

pub fn e_b_operators(x: [f64; 4], q: &WaveVector, space: &TwoModeSpace, consts: &PhysicalConstants) -> Result<([CMat; 3], [CMat; 3])> {
    let (e, b) = e_b_pw(q, space, consts)?;
    Ok((std::array::from_fn(|i| e[i].eval(&x)), std::array::from_fn(|i| b[i].eval(&x))))
}

/// Largest entry of Σ_α ∂_α E_α at x.
pub fn gauss_residual(x: [f64; 4], q: &WaveVector, space: &TwoModeSpace, consts: &PhysicalConstants) -> Result<f64> {
    let (e, _) = e_b_pw(q, space, consts)?;
    let div = e[0].deriv(1).add(&e[1].deriv(2)).add(&e[2].deriv(3)).eval(&x);
    Ok(crate::linalg::max_abs(&div))
}

/// H_k = ħc|k|(a†_H a_H + a†_V a_V).
pub fn em_hamiltonian(space: &TwoModeSpace, consts: &PhysicalConstants) -> DiagonalOperator {
    let n = &space.n_h + &space.n_v;
    let s = consts.hbar * consts.c;
    DiagonalOperator::from_fn(space.dim(), move |k| &n * C64::from(s * k.norm()))
}

/// max_α ‖iħc ∂₀A_α − [A_α, H]‖ on |m,n⟩ with m, n ≤ level.
pub fn heisenberg_residual(x: [f64; 4], q: &WaveVector, space: &TwoModeSpace, consts: &PhysicalConstants, level: usize) -> Result<f64> {
    let a = vector_potential_pw(q, space, consts)?;
    let h = em_hamiltonian(space, consts).at(q);
    let idx = space.safe_indices(level);
    let mut worst: f64 = 0.0;
    for comp in &a {
        let lhs = comp.deriv(0).eval(&x) * (I * consts.hbar * consts.c);
        let rhs = comm(&comp.eval(&x), &h);
        worst = worst.max(restricted_norm(&(lhs - rhs), &idx));
    }
    Ok(worst)
}

/// [A_α(x), A_β(y)] minus −iλ² sin(k(x−y))/((2π)³4|k|ℓ)·(ε^H_αε^H_β + ε^V_αε^V_β),
/// largest norm over α, β on levels ≤ level.
pub fn a_commutator_check(x: [f64; 4], y: [f64; 4], q: &WaveVector, space: &TwoModeSpace, consts: &PhysicalConstants, level: usize) -> Result<f64> {
    let a = vector_potential_pw(q, space, consts)?;
    let b = polarization_basis(q)?;
    let qn = q.norm();
    let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2], x[3] - y[3]];
    let s = crate::linalg::minkowski_dot(&a[0].k, &d).sin();
    let amp = -consts.lambda.powi(2) * s / ((2.0 * std::f64::consts::PI).powi(3) * 4.0 * qn * consts.ell);
    let idx = space.safe_indices(level);
    let eye = CMat::identity(space.dim(), space.dim());
    let mut worst: f64 = 0.0;
    for al in 0..3 {
        for be in 0..3 {
            let proj = b.eps_h[al] * b.eps_h[be] + b.eps_v[al] * b.eps_v[be];
            let r = comm(&a[al].eval(&x), &a[be].eval(&y)) - &eye * C64::new(0.0, amp * proj);
            worst = worst.max(restricted_norm(&r, &idx));
        }
    }
    Ok(worst)
}

/// |z_H⟩ ⊗ |z_V⟩.
pub fn two_mode_coherent(z_h: C64, z_v: C64, space: &TwoModeSpace) -> Result<CVec> {
    let h = coherent_state(z_h, &OscillatorSpace::new(space.cutoff_h))?;
    let v = coherent_state(z_v, &OscillatorSpace::new(space.cutoff_v))?;
    Ok(h.kronecker(&v))
}

pub fn coherent_em_field(f1: &CoherentProfile, f2: &CoherentProfile, grid: Arc<QuadratureGrid>, space: &TwoModeSpace) -> Result<KField> {
    let values: Result<Vec<CVec>> = grid.nodes.par_iter().map(|k| two_mode_coherent(f1.at(k), f2.at(k), space)).collect();
    KField::new(grid, values?)
}

/// Σ_k w_k ħc|k|(|f₁|² + |f₂|²).
pub fn classical_em_energy(f1: &CoherentProfile, f2: &CoherentProfile, grid: &QuadratureGrid, consts: &PhysicalConstants) -> f64 {
    grid.integrate(|k| {
        consts.hbar * consts.c * k.norm() * (f1.physical(k, consts).norm_sqr() + f2.physical(k, consts).norm_sqr())
    })
}

/// ℓ³ Σ_k w_k ⟨ζ_k|A_α(x) ζ_k⟩.
pub fn potential_expectation(field: &KField, x: [f64; 4], space: &TwoModeSpace, consts: &PhysicalConstants) -> Result<[f64; 3]> {
    let per_node: Result<Vec<[f64; 3]>> = field
        .grid
        .nodes
        .par_iter()
        .zip(&field.grid.weights)
        .zip(&field.values)
        .map(|((k, w), z)| {
            let a = vector_potential_op(x, k, space, consts)?;
            Ok(std::array::from_fn(|i| w * z.dotc(&(&a[i] * z)).re))
        })
        .collect();
    let per_node = per_node?;
    Ok(std::array::from_fn(|i| {
        consts.ell3() * pairwise_sum(&per_node.iter().map(|v| v[i]).collect::<Vec<_>>())
    }))
}

/// Classical potential ℓ^{3/2} Σ_k w_k (λ/N₀) Re[(ε^H f₁ + ε^V f₂) e^{−ik·x}].
pub fn classical_potential(f1: &CoherentProfile, f2: &CoherentProfile, x: [f64; 4], grid: &QuadratureGrid, consts: &PhysicalConstants) -> Result<[f64; 3]> {
    let mut acc = [Vec::new(), Vec::new(), Vec::new()];
    for (k, w) in grid.nodes.iter().zip(&grid.weights) {
        let b = polarization_basis(k)?;
        let kn = k.norm();
        let ph = kn * x[0] - k.dot(&WaveVector::new(x[1], x[2], x[3]));
        let e = C64::from_polar(1.0, -ph);
        let pref = consts.ell.powf(1.5) * consts.lambda / normalization(kn, consts);
        for (a, slot) in acc.iter_mut().enumerate() {
            let amp = f1.physical(k, consts) * b.eps_h[a] + f2.physical(k, consts) * b.eps_v[a];
            slot.push(w * pref * (amp * e).re);
        }
    }
    Ok(std::array::from_fn(|i| pairwise_sum(&acc[i])))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarization {
    H,
    V,
    /// (|1,0⟩ + i|0,1⟩)/√2, spin +1.
    CircularPlus,
    /// (|1,0⟩ − i|0,1⟩)/√2, spin −1.
    CircularMinus,
}

/// ρ(k) ∈ [0,1], a phase φ(k) and a polarization.
#[derive(Clone)]
pub struct SinglePhotonProfile {
    rho: Arc<dyn Fn(&WaveVector) -> f64 + Send + Sync>,
    phase: Arc<dyn Fn(&WaveVector) -> f64 + Send + Sync>,
    pub polarization: Polarization,
}

impl SinglePhotonProfile {
    pub fn new<R, P>(rho: R, phase: P, polarization: Polarization) -> Self
    where
        R: Fn(&WaveVector) -> f64 + Send + Sync + 'static,
        P: Fn(&WaveVector) -> f64 + Send + Sync + 'static,
    {
        Self { rho: Arc::new(rho), phase: Arc::new(phase), polarization }
    }

    pub fn rho(&self, k: &WaveVector) -> f64 {
        (self.rho)(k)
    }

    pub fn phase(&self, k: &WaveVector) -> f64 {
        (self.phase)(k)
    }
}

/// ζ_k = √(1−ρ)|0,0⟩ + √ρ e^{iφ}|photon⟩.
pub fn single_photon_field(profile: &SinglePhotonProfile, grid: Arc<QuadratureGrid>, space: &TwoModeSpace) -> Result<KField> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let one = match profile.polarization {
        Polarization::H => space.state(1, 0),
        Polarization::V => space.state(0, 1),
        Polarization::CircularPlus => (space.state(1, 0) + space.state(0, 1) * I) * C64::from(s),
        Polarization::CircularMinus => (space.state(1, 0) - space.state(0, 1) * I) * C64::from(s),
    };
    let vac = space.state(0, 0);
    let values: Result<Vec<CVec>> = grid
        .nodes
        .iter()
        .map(|k| {
            let r = profile.rho(k);
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Domain(format!("rho = {r} outside [0, 1] at k = {:?}", k.as_slice())));
            }
            Ok(&vac * C64::from((1.0 - r).sqrt()) + &one * C64::from_polar(r.sqrt(), profile.phase(k)))
        })
        .collect();
    KField::new(grid, values?)
}

/// S = −i(a†_H a_V − a†_V a_H); +1 on the spin-plus photon.
pub fn spin_operator(space: &TwoModeSpace) -> CMat {
    (space.a_h.adjoint() * &space.a_v - space.a_v.adjoint() * &space.a_h) * (-I)
}

/// ℓ³ Σ_k w_k ⟨ζ_k|S ζ_k⟩.
pub fn photon_spin(field: &KField, space: &TwoModeSpace, consts: &PhysicalConstants) -> Result<f64> {
    let op = DiagonalOperator::constant(spin_operator(space));
    Ok(expectation(&op, field, consts, DEFAULT_NORMALIZATION_TOL)?.re)
}

pub fn photon_energy(field: &KField, space: &TwoModeSpace, consts: &PhysicalConstants) -> Result<f64> {
    Ok(expectation(&em_hamiltonian(space, consts), field, consts, DEFAULT_NORMALIZATION_TOL)?.re)
}
