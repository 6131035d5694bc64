//! Fermions: the two-level Larmor model, the Clifford-16 space of the
//! electron/positron field, Dirac spinors, charge conjugation and the current.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use nalgebra::SymmetricEigen;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::kspace::{DiagonalOperator, KField, QuadratureGrid, WaveVector};
use crate::linalg::{anticomm, comm, kron, max_abs, minkowski_dot, pauli, CMat, CVec, PlaneWaveOp, C64, I};
use crate::reduce::pairwise_sum;

/// ω(k) = c √(κ² + |k|²).
pub fn dispersion(k: &WaveVector, consts: &PhysicalConstants) -> f64 {
    consts.c * (consts.kappa * consts.kappa + k.norm_squared()).sqrt()
}

/// N(k) = √((2π)³ 2ℓω/c).
pub fn normalization(k: &WaveVector, consts: &PhysicalConstants) -> f64 {
    ((2.0 * PI).powi(3) * 2.0 * consts.ell * dispersion(k, consts) / consts.c).sqrt()
}

/// Contravariant (k⁰, k) with k⁰ = ω/c.
pub fn four_vector(k: &WaveVector, consts: &PhysicalConstants) -> [f64; 4] {
    [dispersion(k, consts) / consts.c, k.x, k.y, k.z]
}

// ---------------------------------------------------------------------------
// Two-level model

/// σ₊ lowers presence to absence in the (absent, present) basis.
pub fn sigma_plus() -> CMat {
    CMat::from_row_slice(2, 2, &[C64::from(0.0), C64::from(1.0), C64::from(0.0), C64::from(0.0)])
}

pub fn sigma_minus() -> CMat {
    sigma_plus().transpose()
}

/// ‖e^{iHt/ħ} σ₁ e^{−iHt/ħ} − (σ₁ cos ωt + σ₂ sin ωt)‖ for H = −(ħω/2)σ₃,
/// with the evolution computed as a matrix exponential.
pub fn larmor_residual(omega: f64, t: f64, consts: &PhysicalConstants) -> f64 {
    let [s1, s2, s3] = pauli();
    let h = &s3 * C64::from(-0.5 * consts.hbar * omega);
    let fwd = (&h * (I * t / consts.hbar)).exp();
    let back = (&h * (-I * t / consts.hbar)).exp();
    let evolved = fwd * s1.clone() * back;
    let expected = s1 * C64::from((omega * t).cos()) + s2 * C64::from((omega * t).sin());
    max_abs(&(evolved - expected))
}

/// H_k = ½ħω(k)(I − σ₃): zero when empty, ħω when occupied.
pub fn two_level_hamiltonian(consts: &PhysicalConstants) -> DiagonalOperator {
    let [_, _, s3] = pauli();
    let m = CMat::identity(2, 2) - s3;
    let c = *consts;
    DiagonalOperator::from_fn(2, move |k| &m * C64::from(0.5 * c.hbar * dispersion(k, &c)))
}

/// ρ(k) ∈ [0,1] with phases χ(k) (empty) and ξ(k) (occupied).
#[derive(Clone)]
pub struct FermionProfile {
    rho: Arc<dyn Fn(&WaveVector) -> f64 + Send + Sync>,
    chi: Arc<dyn Fn(&WaveVector) -> f64 + Send + Sync>,
    xi: Arc<dyn Fn(&WaveVector) -> f64 + Send + Sync>,
}

impl FermionProfile {
    pub fn new<R, A, B>(rho: R, chi: A, xi: B) -> Self
    where
        R: Fn(&WaveVector) -> f64 + Send + Sync + 'static,
        A: Fn(&WaveVector) -> f64 + Send + Sync + 'static,
        B: Fn(&WaveVector) -> f64 + Send + Sync + 'static,
    {
        Self { rho: Arc::new(rho), chi: Arc::new(chi), xi: Arc::new(xi) }
    }

    pub fn rho(&self, k: &WaveVector) -> f64 {
        (self.rho)(k)
    }

    /// (√(1−ρ) e^{iχ}, √ρ e^{iξ}).
    pub fn state(&self, k: &WaveVector) -> Result<CVec> {
        let r = self.rho(k);
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Domain(format!("fermion density {r} outside [0, 1]")));
        }
        Ok(CVec::from_vec(vec![C64::from_polar((1.0 - r).sqrt(), (self.chi)(k)), C64::from_polar(r.sqrt(), (self.xi)(k))]))
    }
}

pub fn two_level_field(profile: &FermionProfile, grid: Arc<QuadratureGrid>) -> Result<KField> {
    let values: Result<Vec<CVec>> = grid.nodes.iter().map(|k| profile.state(k)).collect();
    KField::new(grid, values?)
}

/// φ⁺_k(x) = σ₊ e^{−ik·x}/N(k) and φ⁻ = (φ⁺)†, as plane waves.
pub fn scalar_fermion_pw(k: &WaveVector, consts: &PhysicalConstants) -> (PlaneWaveOp, PlaneWaveOp) {
    let n = normalization(k, consts);
    let plus = PlaneWaveOp {
        k: four_vector(k, consts),
        minus: sigma_plus() * C64::from(1.0 / n),
        plus: CMat::zeros(2, 2),
    };
    let minus = plus.adjoint();
    (plus, minus)
}

pub fn scalar_fermion_ops(x: [f64; 4], k: &WaveVector, consts: &PhysicalConstants) -> (CMat, CMat) {
    let (p, m) = scalar_fermion_pw(k, consts);
    (p.eval(&x), m.eval(&x))
}

/// {φ⁺_k(x), φ⁻_{k'}(y)} minus e^{−ik·x} e^{ik'·y}/(N(k)N(k'))·I; at k = k'
/// the amplitude is c/(2(2π)³ℓω).
pub fn scalar_car_residual(x: [f64; 4], y: [f64; 4], k: &WaveVector, kp: &WaveVector, consts: &PhysicalConstants) -> f64 {
    let (p, _) = scalar_fermion_ops(x, k, consts);
    let (_, m) = scalar_fermion_ops(y, kp, consts);
    let ph = -minkowski_dot(&four_vector(k, consts), &x) + minkowski_dot(&four_vector(kp, consts), &y);
    let amp = C64::from_polar(1.0 / (normalization(k, consts) * normalization(kp, consts)), ph);
    max_abs(&(anticomm(&p, &m) - CMat::identity(2, 2) * amp))
}

/// ℓ³ Σ_k w_k ℓ^{0}/N(k) · √(ρ(1−ρ)) 2Re[e^{−i(χ−ξ)} e^{−ik·x}].
pub fn two_level_classical_field(profile: &FermionProfile, x: [f64; 4], grid: &QuadratureGrid, consts: &PhysicalConstants) -> f64 {
    let terms: Vec<f64> = grid
        .nodes
        .iter()
        .zip(&grid.weights)
        .map(|(k, w)| {
            let r = profile.rho(k);
            let ph = (profile.chi)(k) - (profile.xi)(k) + minkowski_dot(&four_vector(k, consts), &x);
            w * consts.ell3() / normalization(k, consts) * (r * (1.0 - r)).sqrt() * 2.0 * ph.cos()
        })
        .collect();
    pairwise_sum(&terms)
}

// ---------------------------------------------------------------------------
// Clifford-16

/// Four fermionic modes; s = 1, 2 electron spin up/down, s = 3, 4 positron.
/// Basis index of |Λ⟩ is Σ_{s∈Λ} 2^{s−1}.
#[derive(Clone, Debug)]
pub struct Clifford16 {
    /// σ_s^(+), annihilation.
    pub plus: [CMat; 4],
    /// σ_s^(−), creation.
    pub minus: [CMat; 4],
    pub number: [CMat; 4],
}

impl Clifford16 {
    /// Jordan–Wigner with the parity string on the higher modes, so that
    /// creating in ascending mode order carries no sign.
    pub fn new() -> Self {
        let plus: [CMat; 4] = std::array::from_fn(|b| {
            let mut m = CMat::zeros(16, 16);
            for mask in 0..16usize {
                if mask & (1 << b) != 0 {
                    let sign = if (mask >> (b + 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    m[(mask ^ (1 << b), mask)] = C64::from(sign);
                }
            }
            m
        });
        let minus: [CMat; 4] = std::array::from_fn(|b| plus[b].transpose());
        let number = std::array::from_fn(|b| &minus[b] * &plus[b]);
        Self { plus, minus, number }
    }

    pub fn vacuum() -> CVec {
        crate::linalg::basis(16, 0)
    }

    /// |Λ⟩ = σ_4^(−)…σ_1^(−)|∅⟩ restricted to the members of Λ (1-based).
    pub fn state(&self, lambda: &[usize]) -> CVec {
        let mut sorted = lambda.to_vec();
        sorted.sort_unstable();
        let mut v = Self::vacuum();
        for s in sorted {
            v = &self.minus[s - 1] * v;
        }
        v
    }

    pub fn mask(lambda: &[usize]) -> usize {
        lambda.iter().map(|s| 1usize << (s - 1)).sum()
    }

    /// Q/q_el = N₁ + N₂ − N₃ − N₄.
    pub fn charge(&self) -> CMat {
        &self.number[0] + &self.number[1] - &self.number[2] - &self.number[3]
    }

    /// Σ_s N_s.
    pub fn total_number(&self) -> CMat {
        &self.number[0] + &self.number[1] + &self.number[2] + &self.number[3]
    }
}

impl Default for Clifford16 {
    fn default() -> Self {
        Self::new()
    }
}

/// Largest deviation from {σ⁺_s,σ⁺_t} = 0 and {σ⁺_s,σ⁻_t} = δ_st over all pairs.
pub fn clifford_residual(cl: &Clifford16) -> f64 {
    let id = CMat::identity(16, 16);
    let mut worst: f64 = 0.0;
    for s in 0..4 {
        for t in 0..4 {
            worst = worst.max(max_abs(&anticomm(&cl.plus[s], &cl.plus[t])));
            let target = if s == t { id.clone() } else { CMat::zeros(16, 16) };
            worst = worst.max(max_abs(&(anticomm(&cl.plus[s], &cl.minus[t]) - target)));
        }
    }
    worst
}

/// H_k = ħω(k) Σ_s N_s.
pub fn dirac_hamiltonian(cl: &Clifford16, consts: &PhysicalConstants) -> DiagonalOperator {
    let n = cl.total_number();
    let c = *consts;
    DiagonalOperator::from_fn(16, move |k| &n * C64::from(c.hbar * dispersion(k, &c)))
}

// ---------------------------------------------------------------------------
// Gamma matrices and spinors

pub const METRIC: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

/// Standard representation: γ⁰ = diag(I, −I), γ^α = [[0, σ_α], [−σ_α, 0]].
pub fn gammas() -> [CMat; 4] {
    let s = pauli();
    let z = CMat::zeros(2, 2);
    let id = CMat::identity(2, 2);
    let block = |a: &CMat, b: &CMat, c: &CMat, d: &CMat| {
        let mut m = CMat::zeros(4, 4);
        m.view_mut((0, 0), (2, 2)).copy_from(a);
        m.view_mut((0, 2), (2, 2)).copy_from(b);
        m.view_mut((2, 0), (2, 2)).copy_from(c);
        m.view_mut((2, 2), (2, 2)).copy_from(d);
        m
    };
    [
        block(&id, &z, &z, &(-&id)),
        block(&z, &s[0], &(-&s[0]), &z),
        block(&z, &s[1], &(-&s[1]), &z),
        block(&z, &s[2], &(-&s[2]), &z),
    ]
}

/// Largest deviation from {γ^μ,γ^ν} = 2g^{μν} and (γ^μ)†γ⁰ = γ⁰γ^μ.
pub fn gamma_residual() -> f64 {
    let g = gammas();
    let mut worst: f64 = 0.0;
    for mu in 0..4 {
        for nu in 0..4 {
            let target = if mu == nu { CMat::identity(4, 4) * C64::from(2.0 * METRIC[mu]) } else { CMat::zeros(4, 4) };
            worst = worst.max(max_abs(&(anticomm(&g[mu], &g[nu]) - target)));
        }
        worst = worst.max(max_abs(&(g[mu].adjoint() * &g[0] - &g[0] * &g[mu])));
    }
    worst
}

/// γ^μ k_μ for contravariant k.
pub fn slash(k4: &[f64; 4]) -> CMat {
    let g = gammas();
    (0..4).fold(CMat::zeros(4, 4), |acc, mu| acc + &g[mu] * C64::from(METRIC[mu] * k4[mu]))
}

/// C = iγ²γ⁰.
pub fn conjugation_matrix() -> CMat {
    let g = gammas();
    &g[2] * &g[0] * I
}

/// u^(1), u^(2) (γ^μk_μ u = κu) and v^(3), v^(4) (γ^μk_μ v = −κv), unit norm.
#[derive(Clone, Debug)]
pub struct SpinorSet {
    pub k: WaveVector,
    pub k4: [f64; 4],
    pub u: [CVec; 2],
    pub v: [CVec; 2],
}

impl SpinorSet {
    /// [u^(1) u^(2)] as a 4×2 matrix.
    pub fn u_mat(&self) -> CMat {
        CMat::from_columns(&[self.u[0].clone(), self.u[1].clone()])
    }

    /// [v^(3) v^(4)] as a 4×2 matrix.
    pub fn v_mat(&self) -> CMat {
        CMat::from_columns(&[self.v[0].clone(), self.v[1].clone()])
    }
}

/// u^(s)(k) = √((k⁰+κ)/2k⁰) (χ_s, σ·k χ_s/(k⁰+κ)).
fn boosted_u(k: &WaveVector, consts: &PhysicalConstants) -> [CVec; 2] {
    let k0 = dispersion(k, consts) / consts.c;
    let kap = consts.kappa;
    let n = ((k0 + kap) / (2.0 * k0)).sqrt();
    let s = pauli();
    let sk = &s[0] * C64::from(k.x) + &s[1] * C64::from(k.y) + &s[2] * C64::from(k.z);
    std::array::from_fn(|i| {
        let chi = crate::linalg::basis(2, i);
        let lower = &sk * &chi / C64::from(k0 + kap);
        CVec::from_iterator(4, chi.iter().chain(lower.iter()).map(|z| z * n))
    })
}

/// The boosted positive-energy spinors; v fixed from u by charge
/// conjugation, v^(4)(k) = C ū^(1)(−k), v^(3)(k) = C ū^(2)(−k).
pub fn solve_spinors(k: &WaveVector, consts: &PhysicalConstants) -> Result<SpinorSet> {
    if !(consts.kappa > 0.0) {
        return Err(Error::Unsupported("massless fermion spinors".into()));
    }
    let u = boosted_u(k, consts);
    let um = boosted_u(&(-k), consts);
    let c = conjugation_matrix();
    let v = [&c * um[1].conjugate(), &c * um[0].conjugate()];
    Ok(SpinorSet { k: *k, k4: four_vector(k, consts), u, v })
}

/// Residuals of the defining spinor relations at one wave vector.
#[derive(Clone, Copy, Debug, Default)]
pub struct SpinorResiduals {
    pub eigen: f64,
    pub ortho: f64,
    pub cross: f64,
    pub conjugation: f64,
}

impl SpinorResiduals {
    pub fn max(&self) -> f64 {
        self.eigen.max(self.ortho).max(self.cross).max(self.conjugation)
    }
}

pub fn spinor_residuals(k: &WaveVector, consts: &PhysicalConstants) -> Result<SpinorResiduals> {
    let sp = solve_spinors(k, consts)?;
    let neg = solve_spinors(&(-k), consts)?;
    let sl = slash(&sp.k4);
    let kap = C64::from(consts.kappa);
    let mut r = SpinorResiduals::default();
    for i in 0..2 {
        r.eigen = r.eigen.max(max_abs(&(&sl * &sp.u[i] - &sp.u[i] * kap)));
        r.eigen = r.eigen.max(max_abs(&(&sl * &sp.v[i] + &sp.v[i] * kap)));
    }
    let (u, v) = (sp.u_mat(), sp.v_mat());
    let id = CMat::identity(2, 2);
    r.ortho = max_abs(&(u.adjoint() * &u - &id)).max(max_abs(&(v.adjoint() * &v - &id)));
    r.cross = max_abs(&(u.adjoint() * neg.v_mat()));
    let c = conjugation_matrix();
    r.conjugation = max_abs(&(&c * sp.u[0].conjugate() - &neg.v[1])).max(max_abs(&(&c * sp.u[1].conjugate() - &neg.v[0])));
    Ok(r)
}

/// CSV: k_x,k_y,k_z then Re/Im of the four components of u1,u2,v3,v4.
pub fn write_spinor_csv<W: Write>(ks: &[WaveVector], consts: &PhysicalConstants, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k_x".to_string(), "k_y".into(), "k_z".into()];
    for name in ["u1", "u2", "v3", "v4"] {
        for r in 1..=4 {
            header.push(format!("{name}_{r}_re"));
            header.push(format!("{name}_{r}_im"));
        }
    }
    w.write_record(&header)?;
    for k in ks {
        let sp = solve_spinors(k, consts)?;
        let mut row = vec![format!("{:.17e}", k.x), format!("{:.17e}", k.y), format!("{:.17e}", k.z)];
        for s in sp.u.iter().chain(sp.v.iter()) {
            for z in s.iter() {
                row.push(format!("{:.17e}", z.re));
                row.push(format!("{:.17e}", z.im));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Dirac field operators

/// ψ_{r,k}(x) = (2π)^{−3/2}[Σ_s u_r^(s) e^{−ik·x} σ_s^(+) + Σ_t v_r^(t) e^{ik·x} σ_t^(−)].
pub fn dirac_field_pw(sp: &SpinorSet, cl: &Clifford16) -> [PlaneWaveOp; 4] {
    let n = C64::from((2.0 * PI).powf(-1.5));
    std::array::from_fn(|r| {
        let minus = (&cl.plus[0] * sp.u[0][r] + &cl.plus[1] * sp.u[1][r]) * n;
        let plus = (&cl.minus[2] * sp.v[0][r] + &cl.minus[3] * sp.v[1][r]) * n;
        PlaneWaveOp { k: sp.k4, minus, plus }
    })
}

/// ψ^a_r = Σ_{r'} ψ†_{r'} γ⁰_{r'r}.
pub fn dirac_adjoint_pw(psi: &[PlaneWaveOp; 4]) -> [PlaneWaveOp; 4] {
    let g0 = gammas()[0].clone();
    std::array::from_fn(|r| psi[r].adjoint().scale(g0[(r, r)]))
}

pub fn dirac_field_ops(x: [f64; 4], sp: &SpinorSet, cl: &Clifford16) -> [CMat; 4] {
    let psi = dirac_field_pw(sp, cl);
    std::array::from_fn(|r| psi[r].eval(&x))
}

fn combine(ops: &[PlaneWaveOp; 4], coeff: &CMat, r: usize) -> PlaneWaveOp {
    (0..4).fold(ops[0].zero_like(), |acc, rp| acc.add(&ops[rp].scale(coeff[(r, rp)])))
}

/// max_r ‖iγ^μ∂_μψ_r − κψ_r‖ at x.
pub fn dirac_equation_residual(x: [f64; 4], sp: &SpinorSet, cl: &Clifford16, consts: &PhysicalConstants) -> f64 {
    let psi = dirac_field_pw(sp, cl);
    let g = gammas();
    let d: Vec<[PlaneWaveOp; 4]> = (0..4).map(|mu| std::array::from_fn(|r| psi[r].deriv(mu))).collect();
    (0..4)
        .map(|r| {
            let mut acc = psi[r].scale(C64::from(-consts.kappa));
            for mu in 0..4 {
                acc = acc.add(&combine(&d[mu], &(&g[mu] * I), r));
            }
            max_abs(&acc.eval(&x))
        })
        .fold(0.0, f64::max)
}

/// max_r ‖(□ + κ²)ψ_r‖ at x.
pub fn klein_gordon_residual(x: [f64; 4], sp: &SpinorSet, cl: &Clifford16, consts: &PhysicalConstants) -> f64 {
    dirac_field_pw(sp, cl)
        .iter()
        .map(|p| {
            let mut acc = p.scale(C64::from(consts.kappa * consts.kappa));
            for mu in 0..4 {
                acc = acc.add(&p.deriv(mu).deriv(mu).scale(C64::from(METRIC[mu])));
            }
            max_abs(&acc.eval(&x))
        })
        .fold(0.0, f64::max)
}

/// max_r ‖iħc∂₀ψ_r − [ψ_r, H^el]‖.
pub fn dirac_heisenberg_residual(x: [f64; 4], sp: &SpinorSet, cl: &Clifford16, consts: &PhysicalConstants) -> f64 {
    let h = dirac_hamiltonian(cl, consts).at(&sp.k);
    dirac_field_pw(sp, cl)
        .iter()
        .map(|p| {
            let lhs = p.deriv(0).eval(&x) * (I * consts.hbar * consts.c);
            max_abs(&(lhs - comm(&p.eval(&x), &h)))
        })
        .fold(0.0, f64::max)
}

/// {ψ_{r,k}(x), ψ_{r',k}(y)†} minus (2π)^{−3}[Σ_s u_r ū_{r'} e^{−ik(x−y)} + Σ_t v_r v̄_{r'} e^{ik(x−y)}].
pub fn dirac_car_residual(x: [f64; 4], y: [f64; 4], sp: &SpinorSet, cl: &Clifford16) -> f64 {
    let psi = dirac_field_pw(sp, cl);
    let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2], x[3] - y[3]];
    let e = C64::from_polar(1.0, -minkowski_dot(&sp.k4, &d));
    let uu = sp.u_mat() * sp.u_mat().adjoint();
    let vv = sp.v_mat() * sp.v_mat().adjoint();
    let n = (2.0 * PI).powi(-3);
    let mut worst: f64 = 0.0;
    for r in 0..4 {
        for rp in 0..4 {
            let lhs = anticomm(&psi[r].eval(&x), &psi[rp].eval(&y).adjoint());
            let amp = (uu[(r, rp)] * e + vv[(r, rp)] * e.conj()) * n;
            worst = worst.max(max_abs(&(lhs - CMat::identity(16, 16) * amp)));
        }
        for rp in 0..4 {
            worst = worst.max(max_abs(&anticomm(&psi[r].eval(&x), &psi[rp].eval(&y))));
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// Charge conjugation

/// The 4×4 matrix C and the 16×16 operator C_c.
#[derive(Clone, Debug)]
pub struct ChargeConjugation {
    pub c: CMat,
    pub cc: CMat,
    /// Smallest nonzero eigenvalue of the constraint system (null-space gap).
    pub gap: f64,
}

/// Deterministic sample points for the C_c constraints.
fn conjugation_samples() -> Vec<(WaveVector, [f64; 4])> {
    let ks = [
        WaveVector::new(0.0, 0.0, 0.0),
        WaveVector::new(0.3, -0.7, 0.5),
        WaveVector::new(-1.1, 0.2, 0.9),
        WaveVector::new(0.6, 1.3, -0.4),
    ];
    let xs = [[0.0, 0.0, 0.0, 0.0], [0.4, -0.3, 1.1, 0.7], [-0.9, 0.5, 0.2, -1.3]];
    ks.iter().flat_map(|k| xs.iter().map(move |x| (*k, *x))).collect()
}

/// Pairs (X, Y) with C_c X C_c⁻¹ = Y.
fn conjugation_constraints(k: &WaveVector, x: [f64; 4], c: &CMat, cl: &Clifford16, consts: &PhysicalConstants) -> Result<Vec<(CMat, CMat)>> {
    let sp = solve_spinors(k, consts)?;
    let psi = dirac_field_pw(&sp, cl);
    let adj = dirac_adjoint_pw(&psi);
    let p: Vec<CMat> = psi.iter().map(|o| o.eval(&x)).collect();
    let a: Vec<CMat> = adj.iter().map(|o| o.eval(&x)).collect();
    let mut out = Vec::with_capacity(8);
    for r in 0..4 {
        let mut y1 = CMat::zeros(16, 16);
        let mut y2 = CMat::zeros(16, 16);
        for rp in 0..4 {
            y1 -= &a[rp] * c[(r, rp)];
            y2 += &p[rp] * c[(r, rp)];
        }
        out.push((p[r].clone(), y1));
        out.push((a[r].clone(), y2));
    }
    Ok(out)
}

/// Solves C_c X = Y C_c over the sampled constraints as the null vector of
/// Σ B†B with B = Xᵀ⊗I − I⊗Y (column-major vec), then fixes the scale to a
/// unitary and the phase so that C_c² = −I.
pub fn construct_charge_conjugation(consts: &PhysicalConstants) -> Result<ChargeConjugation> {
    let cl = Clifford16::new();
    let c = conjugation_matrix();
    let id = CMat::identity(16, 16);
    let mut a = CMat::zeros(256, 256);
    for (k, x) in conjugation_samples() {
        for (xm, ym) in conjugation_constraints(&k, x, &c, &cl, consts)? {
            let b = kron(&xm.transpose(), &id) - kron(&id, &ym);
            a += b.adjoint() * b;
        }
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..256).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let (lo, next) = (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]);
    if lo.abs() > 1e-8 || next < 1e-6 {
        return Err(Error::ChargeConjugation(format!("constraint system has no unique solution (eigenvalues {lo:e}, {next:e})")));
    }
    let v = eig.eigenvectors.column(order[0]);
    let mut cc = CMat::from_fn(16, 16, |i, j| v[j * 16 + i]);
    let scale = (16.0 / cc.norm_squared()).sqrt();
    cc *= C64::from(scale);
    let sq = (&cc * &cc)[(0, 0)];
    cc *= C64::from_polar(1.0, 0.5 * (PI - sq.arg()));
    // Remaining sign: first sizeable entry gets a positive real part.
    if let Some(z) = cc.iter().find(|z| z.norm() > 0.5) {
        if z.re < 0.0 || (z.re == 0.0 && z.im < 0.0) {
            cc = -cc;
        }
    }
    Ok(ChargeConjugation { c, cc, gap: next })
}

impl ChargeConjugation {
    /// Largest residual of both conjugation relations for ψ sampled at (x, k).
    pub fn residual(&self, k: &WaveVector, x: [f64; 4], consts: &PhysicalConstants) -> Result<f64> {
        let cl = Clifford16::new();
        let inv = self.cc.adjoint();
        Ok(conjugation_constraints(k, x, &self.c, &cl, consts)?
            .iter()
            .map(|(xm, ym)| max_abs(&(&self.cc * xm * &inv - ym)))
            .fold(0.0, f64::max))
    }

    /// max of ‖C_c†C_c − I‖ and ‖C_c† + C_c‖.
    pub fn unitarity_residual(&self) -> f64 {
        let id = CMat::identity(16, 16);
        max_abs(&(self.cc.adjoint() * &self.cc - id)).max(max_abs(&(self.cc.adjoint() + &self.cc)))
    }
}

// ---------------------------------------------------------------------------
// Current

/// Generator index: 0..4 are σ_s^(+) (s = g+1), 4..8 are σ_s^(−) (s = g−3).
pub fn generator(cl: &Clifford16, g: usize) -> &CMat {
    if g < 4 {
        &cl.plus[g]
    } else {
        &cl.minus[g - 4]
    }
}

const E_ANN: [usize; 2] = [0, 1];
const P_ANN: [usize; 2] = [2, 3];
const E_CRE: [usize; 2] = [4, 5];
const P_CRE: [usize; 2] = [6, 7];

/// Σ_{a,b} m[μ]_{ab} X_a Y_b with X, Y drawn from pairs of generators.
#[derive(Clone, Debug)]
pub struct Bilinear {
    pub xs: [usize; 2],
    pub ys: [usize; 2],
    pub m: [CMat; 4],
}

impl Bilinear {
    pub fn dense(&self, cl: &Clifford16, mu: usize) -> CMat {
        let mut acc = CMat::zeros(16, 16);
        for a in 0..2 {
            for b in 0..2 {
                acc += generator(cl, self.xs[a]) * generator(cl, self.ys[b]) * self.m[mu][(a, b)];
            }
        }
        acc
    }

    /// ⟨∅|·|∅⟩; only annihilator-creator orderings contribute.
    pub fn vacuum_value(&self, mu: usize) -> C64 {
        let mut v = C64::from(0.0);
        for a in 0..2 {
            for b in 0..2 {
                if self.xs[a] < 4 && self.ys[b] == self.xs[a] + 4 {
                    v += self.m[mu][(a, b)];
                }
            }
        }
        v
    }
}

/// Phase label (s, s'): the term carries exp(−i(s k + s' k')_ν x^ν).
pub type PhaseLabel = (i8, i8);

pub const PHASE_LABELS: [PhaseLabel; 4] = [(-1, 1), (-1, -1), (1, 1), (1, -1)];

/// The terms of J^μ_{k,k'} = (q c/2)[Σ γ^μ_{rr'} ψ^a_{r,k} ψ_{r',k'} − Σ γ^μ_{r'r} ψ_{r,k} ψ^a_{r',k'}]
/// as spinor bilinears with Γ = γ⁰γ^μ, grouped by phase label.
pub fn current_bilinears(k: &SpinorSet, kp: &SpinorSet, consts: &PhysicalConstants) -> Vec<(PhaseLabel, Bilinear)> {
    current_bilinears_for(k, kp, consts, None)
}

/// As [`current_bilinears`], restricted to one phase label when given.
pub fn current_bilinears_for(k: &SpinorSet, kp: &SpinorSet, consts: &PhysicalConstants, only: Option<PhaseLabel>) -> Vec<(PhaseLabel, Bilinear)> {
    let g = gammas();
    let pref = C64::from(0.5 * consts.q_el * consts.c * (2.0 * PI).powi(-3));
    let (uk, vk, ukp, vkp) = (k.u_mat(), k.v_mat(), kp.u_mat(), kp.v_mat());
    let gam: Vec<CMat> = (0..4).map(|mu| &g[0] * &g[mu]).collect();
    // (label, X, Y, A, B, transpose, sign) for ± (A†ΓB)[ᵀ] X_a Y_b.
    let specs: [(PhaseLabel, [usize; 2], [usize; 2], &CMat, &CMat, bool, f64); 8] = [
        ((-1, 1), E_CRE, E_ANN, &uk, &ukp, false, 1.0),
        ((-1, -1), E_CRE, P_CRE, &uk, &vkp, false, 1.0),
        ((1, 1), P_ANN, E_ANN, &vk, &ukp, false, 1.0),
        ((1, -1), P_ANN, P_CRE, &vk, &vkp, false, 1.0),
        ((1, -1), E_ANN, E_CRE, &ukp, &uk, true, -1.0),
        ((1, 1), E_ANN, P_ANN, &vkp, &uk, true, -1.0),
        ((-1, -1), P_CRE, E_CRE, &ukp, &vk, true, -1.0),
        ((-1, 1), P_CRE, P_ANN, &vkp, &vk, true, -1.0),
    ];
    specs
        .iter()
        .filter(|s| only.map_or(true, |l| l == s.0))
        .map(|&(label, xs, ys, a, b, transpose, sign)| {
            let m = std::array::from_fn(|mu| {
                let t = a.adjoint() * &gam[mu] * b;
                let t = if transpose { t.transpose() } else { t };
                t * (pref * sign)
            });
            (label, Bilinear { xs, ys, m })
        })
        .collect()
}

/// J^μ_{k,k'}(x) decomposed by phase label; mats[μ] for μ = 0..3.
#[derive(Clone, Debug)]
pub struct CurrentKernel {
    pub k4: [f64; 4],
    pub kp4: [f64; 4],
    pub terms: BTreeMap<PhaseLabel, [CMat; 4]>,
}

impl CurrentKernel {
    pub fn eval(&self, x: [f64; 4]) -> [CMat; 4] {
        let mut out: [CMat; 4] = std::array::from_fn(|_| CMat::zeros(16, 16));
        for (&(s, sp), mats) in &self.terms {
            let q: [f64; 4] = std::array::from_fn(|i| s as f64 * self.k4[i] + sp as f64 * self.kp4[i]);
            let e = C64::from_polar(1.0, -minkowski_dot(&q, &x));
            for mu in 0..4 {
                out[mu] += &mats[mu] * e;
            }
        }
        out
    }

    /// Removes ⟨∅|·|∅⟩ from every term, leaving the normal-ordered kernel.
    pub fn normal_ordered(mut self) -> Self {
        for mats in self.terms.values_mut() {
            for m in mats.iter_mut() {
                let vac = m[(0, 0)];
                for i in 0..16 {
                    m[(i, i)] -= vac;
                }
            }
        }
        self
    }
}

pub fn current_kernel(k: &SpinorSet, kp: &SpinorSet, cl: &Clifford16, consts: &PhysicalConstants) -> CurrentKernel {
    let mut terms: BTreeMap<PhaseLabel, [CMat; 4]> = BTreeMap::new();
    for (label, b) in current_bilinears(k, kp, consts) {
        let slot = terms.entry(label).or_insert_with(|| std::array::from_fn(|_| CMat::zeros(16, 16)));
        for (mu, m) in slot.iter_mut().enumerate() {
            *m += b.dense(cl, mu);
        }
    }
    CurrentKernel { k4: k.k4, kp4: kp.k4, terms }
}

/// The same current evaluated directly from the field-operator matrices at x.
pub fn current_at(x: [f64; 4], k: &SpinorSet, kp: &SpinorSet, cl: &Clifford16, consts: &PhysicalConstants) -> [CMat; 4] {
    let g = gammas();
    let pk = dirac_field_pw(k, cl);
    let pkp = dirac_field_pw(kp, cl);
    let ak: Vec<CMat> = dirac_adjoint_pw(&pk).iter().map(|o| o.eval(&x)).collect();
    let akp: Vec<CMat> = dirac_adjoint_pw(&pkp).iter().map(|o| o.eval(&x)).collect();
    let pk: Vec<CMat> = pk.iter().map(|o| o.eval(&x)).collect();
    let pkp: Vec<CMat> = pkp.iter().map(|o| o.eval(&x)).collect();
    let pref = C64::from(0.5 * consts.q_el * consts.c);
    std::array::from_fn(|mu| {
        let mut acc = CMat::zeros(16, 16);
        for r in 0..4 {
            for rp in 0..4 {
                acc += &ak[r] * &pkp[rp] * g[mu][(r, rp)];
                acc -= &pk[r] * &akp[rp] * g[mu][(rp, r)];
            }
        }
        acc * pref
    })
}

/// (1/c)∫dx J⁰_{k,k'}(x): the coefficient of δ(k − k') (evaluated at k' = k)
/// and of δ(k + k') (at k' = −k), each including the (2π)³ from the x-integral.
pub fn total_charge(k: &WaveVector, cl: &Clifford16, consts: &PhysicalConstants) -> Result<(CMat, CMat)> {
    let sk = solve_spinors(k, consts)?;
    let sm = solve_spinors(&(-k), consts)?;
    let vol = (2.0 * PI).powi(3) / consts.c;
    let same = current_kernel(&sk, &sk, cl, consts);
    let same_m = (&same.terms[&(-1, 1)][0] + &same.terms[&(1, -1)][0]) * C64::from(vol);
    let opp = current_kernel(&sk, &sm, cl, consts);
    // At k' = −k the time phases of the (±1, ±1) labels are e^{∓2ik⁰x⁰}; the
    // coefficient must vanish for every x⁰, so both parts are returned summed
    // in absolute value.
    let a = &opp.terms[&(1, 1)][0];
    let b = &opp.terms[&(-1, -1)][0];
    let opp_m = CMat::from_fn(16, 16, |i, j| C64::from(a[(i, j)].norm() + b[(i, j)].norm())) * C64::from(vol);
    Ok((same_m, opp_m))
}

// ---------------------------------------------------------------------------
// Two-point current

/// r^μ(x) = Tr γ^μ G(x,x) for a properly normalized field on the 16-dim space.
/// G_{r'r} = ℓ³⟨a_r|b_{r'}⟩ with b_r = Σ_k w ψ_{r,k}(x)ζ_k and a_r = γ⁰_{rr} b_r.
pub fn two_point_current(field: &KField, x: [f64; 4], cl: &Clifford16, consts: &PhysicalConstants) -> Result<[C64; 4]> {
    if field.dim != 16 {
        return Err(Error::Dimension { expected: 16, got: field.dim });
    }
    let mut b: [CVec; 4] = std::array::from_fn(|_| CVec::zeros(16));
    for ((k, w), z) in field.grid.nodes.iter().zip(&field.grid.weights).zip(&field.values) {
        let sp = solve_spinors(k, consts)?;
        for (r, op) in dirac_field_ops(x, &sp, cl).iter().enumerate() {
            b[r] += (op * z) * C64::from(*w);
        }
    }
    let g = gammas();
    let mut gmat = CMat::zeros(4, 4);
    for rp in 0..4 {
        for r in 0..4 {
            gmat[(rp, r)] = b[r].dotc(&b[rp]) * g[0][(r, r)] * consts.ell3();
        }
    }
    let out: [C64; 4] = std::array::from_fn(|mu| (&g[mu] * &gmat).trace());
    if out.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Divergent("two-point current".into()));
    }
    Ok(out)
}

/// Central-difference ∂_μ r^μ at x with step h (second order).
pub fn continuity_residual(field: &KField, x: [f64; 4], h: f64, cl: &Clifford16, consts: &PhysicalConstants) -> Result<f64> {
    let mut div = C64::from(0.0);
    for mu in 0..4 {
        let mut xp = x;
        let mut xm = x;
        xp[mu] += h;
        xm[mu] -= h;
        let d = two_point_current(field, xp, cl, consts)?[mu] - two_point_current(field, xm, cl, consts)?[mu];
        div += d / (2.0 * h);
    }
    Ok(div.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dispersion_values() {
        let c = PhysicalConstants::default();
        assert!((dispersion(&WaveVector::new(1.0, 0.0, 0.0), &c) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(dispersion(&WaveVector::zeros(), &c), c.c * c.kappa);
    }

    #[test]
    fn clifford_is_exact() {
        assert_eq!(clifford_residual(&Clifford16::new()), 0.0);
    }

    #[test]
    fn ordered_basis_has_no_sign() {
        let cl = Clifford16::new();
        for mask in 0..16usize {
            let lam: Vec<usize> = (1..=4).filter(|s| mask & (1 << (s - 1)) != 0).collect();
            assert_eq!(cl.state(&lam), crate::linalg::basis(16, mask));
        }
    }

    #[test]
    fn rest_frame_spinor() {
        let sp = solve_spinors(&WaveVector::zeros(), &PhysicalConstants::default()).unwrap();
        assert_eq!(sp.u[0], crate::linalg::basis(4, 0));
    }

    #[test]
    fn conjugation_matrix_display() {
        let c = conjugation_matrix();
        assert_eq!(c[(0, 3)], C64::from(-1.0));
        assert_eq!(c[(1, 2)], C64::from(1.0));
        assert_eq!(c[(2, 1)], C64::from(-1.0));
        assert_eq!(c[(3, 0)], C64::from(1.0));
    }

    #[test]
    fn massless_rejected() {
        let c = PhysicalConstants { kappa: 0.0, ..Default::default() };
        assert!(matches!(solve_spinors(&WaveVector::zeros(), &c), Err(Error::Unsupported(_))));
    }
}
