//! Variational single-electron trial states dressed with one photon, their
//! energy bookkeeping and the long-wavelength behavior of the coupling.

use serde::{Deserialize, Serialize};

use crate::boson::normalization;
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::fermion::{dispersion, gammas, solve_spinors};
use crate::kspace::{QuadratureGrid, WaveVector};
use crate::linalg::C64;
use crate::photon::polarization_basis;
use crate::reduce::par_sum;

/// Below this transverse fraction k and k_ph count as parallel and the
/// coupling is exactly zero (the ε-contraction would only leave rounding).
pub const PARALLEL_TOL: f64 = 8.0 * f64::EPSILON;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingModel {
    /// The closed form in terms of k_α and the dispersion.
    #[default]
    ClosedForm,
    /// ⟨u⁽¹⁾(k)|γ⁰γ^α u⁽¹⁾(k+k_ph)⟩ from the numerically solved spinors.
    SpinorMatrixElement,
}

/// U^(H), U^(V) at one node pair together with the ε-contracted matrix
/// elements g^(p) = (λq_el c/4N₀) Σ_α ε^(p)_α M_α that enter E_int.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingFunctions {
    pub u: [C64; 2],
    pub g: [C64; 2],
}

impl CouplingFunctions {
    pub fn u_perp_sq(&self) -> f64 {
        self.u[0].norm_sqr() + self.u[1].norm_sqr()
    }
}

fn prefactor(q: &WaveVector, c: &PhysicalConstants) -> f64 {
    c.lambda * c.q_el * c.c / (4.0 * normalization(q.norm(), c) * c.hbar * q.norm())
}

fn is_parallel(q: &WaveVector, k: &WaveVector) -> bool {
    k.cross(q).norm() <= PARALLEL_TOL * k.norm() * q.norm()
}

/// (ω + ω′ + 2cκ) / (√(ω′(ω′+cκ)) √(ω(ω+cκ))), ω′ = ω(k+k_ph).
pub fn dispersion_factor(q: &WaveVector, k: &WaveVector, c: &PhysicalConstants) -> f64 {
    let w = dispersion(k, c);
    let wp = dispersion(&(k + q), c);
    let ck = c.c * c.kappa;
    (w + wp + 2.0 * ck) / ((wp * (wp + ck)).sqrt() * (w * (w + ck)).sqrt())
}

pub fn coupling(q: &WaveVector, k: &WaveVector, c: &PhysicalConstants, model: CouplingModel) -> Result<CouplingFunctions> {
    if q.norm() == 0.0 {
        return Err(Error::Domain("coupling needs a nonzero photon wave vector".into()));
    }
    if !(c.kappa > 0.0) {
        return Err(Error::Unsupported("coupling needs kappa > 0".into()));
    }
    let basis = polarization_basis(q)?;
    // M_α for α = 1, 2, 3.
    let m: [C64; 3] = if is_parallel(q, k) && model == CouplingModel::ClosedForm {
        [C64::from(0.0); 3]
    } else {
        match model {
            CouplingModel::ClosedForm => {
                let f = dispersion_factor(q, k, c);
                std::array::from_fn(|a| C64::from(-c.c * k[a] * f))
            }
            CouplingModel::SpinorMatrixElement => {
                let a = solve_spinors(k, c)?;
                let b = solve_spinors(&(k + q), c)?;
                let g = gammas();
                std::array::from_fn(|al| a.u[0].dotc(&(&g[0] * &g[al + 1] * &b.u[0])))
            }
        }
    };
    let ph = c.hbar * c.c * q.norm();
    let mut u = [C64::from(0.0); 2];
    let mut g = [C64::from(0.0); 2];
    for p in 0..2 {
        let eps = basis.eps(p);
        let contracted = (0..3).fold(C64::from(0.0), |acc, al| acc + m[al] * eps[al]);
        g[p] = contracted * (ph * prefactor(q, c));
        u[p] = g[p] / ph;
    }
    Ok(CouplingFunctions { u, g })
}

/// U²_⊥ from the projected closed form, without polarization vectors.
pub fn u_perp_sq_closed(q: &WaveVector, k: &WaveVector, c: &PhysicalConstants) -> f64 {
    let qn = q.norm();
    let perp = (k.norm_squared() - k.dot(q).powi(2) / (qn * qn)).max(0.0);
    (c.c * prefactor(q, c)).powi(2) * perp * dispersion_factor(q, k, c).powi(2)
}

/// The bound with 4/(ωω′) in place of the squared dispersion factor.
pub fn u_perp_sq_lower_bound(q: &WaveVector, k: &WaveVector, c: &PhysicalConstants) -> f64 {
    let qn = q.norm();
    let perp = (k.norm_squared() - k.dot(q).powi(2) / (qn * qn)).max(0.0);
    (c.c * prefactor(q, c)).powi(2) * perp * 4.0 / (dispersion(k, c) * dispersion(&(k + q), c))
}

/// First-order expansion in k_ph: (4/ω²)(1 − k·k_ph/(κ² + |k|²)).
pub fn u_perp_sq_long_wave(q: &WaveVector, k: &WaveVector, c: &PhysicalConstants) -> f64 {
    let qn = q.norm();
    let perp = (k.norm_squared() - k.dot(q).powi(2) / (qn * qn)).max(0.0);
    let w = dispersion(k, c);
    (c.c * prefactor(q, c)).powi(2) * perp * 4.0 / (w * w) * (1.0 - k.dot(q) / (c.kappa * c.kappa + k.norm_squared()))
}

/// Electron-only amplitude a₀₀(k_ph, k).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum A00Profile {
    /// A·exp(−|k−k_c|²/2σ_k²)·e^{i t·k} · |k_ph|³/(|k_ph|³+k₀³)·exp(−|k_ph|²/2σ_ph²).
    Gaussian {
        amplitude: f64,
        k_center: [f64; 3],
        sigma_k: f64,
        k0: f64,
        sigma_ph: f64,
        #[serde(default)]
        twist: [f64; 3],
    },
    /// A·exp(−(|k|−k_s)²/2w²) with the same photon factor.
    Shell { amplitude: f64, k_shell: f64, width: f64, k0: f64, sigma_ph: f64 },
}

impl Default for A00Profile {
    fn default() -> Self {
        A00Profile::Gaussian { amplitude: 0.5, k_center: [0.0, 0.0, 0.3], sigma_k: 0.5, k0: 0.3, sigma_ph: 1.0, twist: [0.0; 3] }
    }
}

fn photon_factor(q: &WaveVector, k0: f64, sigma_ph: f64) -> f64 {
    let q3 = q.norm().powi(3);
    q3 / (q3 + k0.powi(3)) * (-q.norm_squared() / (2.0 * sigma_ph * sigma_ph)).exp()
}

impl A00Profile {
    pub fn eval(&self, q: &WaveVector, k: &WaveVector) -> C64 {
        match *self {
            A00Profile::Gaussian { amplitude, k_center, sigma_k, k0, sigma_ph, twist } => {
                let d = k - WaveVector::from(k_center);
                let phase = WaveVector::from(twist).dot(k);
                C64::from_polar(amplitude * (-d.norm_squared() / (2.0 * sigma_k * sigma_k)).exp() * photon_factor(q, k0, sigma_ph), phase)
            }
            A00Profile::Shell { amplitude, k_shell, width, k0, sigma_ph } => {
                let r = k.norm() - k_shell;
                C64::from(amplitude * (-r * r / (2.0 * width * width)).exp() * photon_factor(q, k0, sigma_ph))
            }
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = *self;
        match &mut out {
            A00Profile::Gaussian { amplitude, .. } | A00Profile::Shell { amplitude, .. } => *amplitude *= alpha,
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            A00Profile::Gaussian { amplitude, sigma_k, k0, sigma_ph, .. } => amplitude.is_finite() && sigma_k > 0.0 && k0 > 0.0 && sigma_ph > 0.0,
            A00Profile::Shell { amplitude, k_shell, width, k0, sigma_ph } => {
                amplitude.is_finite() && k_shell >= 0.0 && width > 0.0 && k0 > 0.0 && sigma_ph > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid a00 profile {self:?}")))
        }
    }
}

/// Log–log slope of |a₀₀(s·d̂, k)| for s over a geometric sweep.
pub fn decay_exponent(profile: &A00Profile, k: &WaveVector, direction: &WaveVector, s_min: f64, s_max: f64, n: usize) -> f64 {
    let d = direction / direction.norm();
    let pts: Vec<(f64, f64)> = geometric(s_min, s_max, n)
        .into_iter()
        .map(|s| (s.ln(), profile.eval(&(d * s), k).norm().ln()))
        .collect();
    fit_slope(&pts)
}

/// Rejects profiles whose small-|k_ph| decay is slower than |k_ph|³.
pub fn check_decay(profile: &A00Profile, k: &WaveVector, direction: &WaveVector, tol: f64) -> Result<f64> {
    let p = decay_exponent(profile, k, direction, 1e-5, 1e-3, 9);
    if p < 3.0 - tol {
        return Err(Error::Domain(format!("a00 decays as |k_ph|^{p:.3} toward k_ph -> 0; at least 3 is needed")));
    }
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodePair {
    pub a00: C64,
    /// a₀₀(k_ph, k + k_ph).
    pub a00_shift: C64,
    pub a10: C64,
    pub a01: C64,
    pub rho_vac: f64,
    pub coupling: CouplingFunctions,
}

#[derive(Clone, Debug)]
pub struct TrialState {
    pub photon: QuadratureGrid,
    pub electron: QuadratureGrid,
    /// Node pair (i, j) at `i * electron.len() + j`.
    pub pairs: Vec<NodePair>,
}

impl TrialState {
    pub fn weight(&self, idx: usize) -> f64 {
        let ne = self.electron.len();
        self.photon.weights[idx / ne] * self.electron.weights[idx % ne]
    }

    pub fn nodes(&self, idx: usize) -> (&WaveVector, &WaveVector) {
        let ne = self.electron.len();
        (&self.photon.nodes[idx / ne], &self.electron.nodes[idx % ne])
    }

    /// max |ρ_vac + |a₀₀|² + |a₁₀|² + |a₀₁|² − 1|.
    pub fn normalization_defect(&self) -> f64 {
        self.pairs
            .iter()
            .map(|p| (p.rho_vac + p.a00.norm_sqr() + p.a10.norm_sqr() + p.a01.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_rho_vac(&self) -> f64 {
        self.pairs.iter().map(|p| p.rho_vac).fold(f64::INFINITY, f64::min)
    }
}

/// a₁₀ = −U^(H) a₀₀(k_ph, k+k_ph), a₀₁ = −U^(V) a₀₀(k_ph, k+k_ph) and the
/// vacuum weight that completes the normalization.
pub fn variational_optimum(
    profile: &A00Profile,
    photon: &QuadratureGrid,
    electron: &QuadratureGrid,
    c: &PhysicalConstants,
    model: CouplingModel,
) -> Result<TrialState> {
    use rayon::prelude::*;
    profile.validate()?;
    let ne = electron.len();
    let pairs: Result<Vec<NodePair>> = (0..photon.len() * ne)
        .into_par_iter()
        .map(|idx| {
            let q = &photon.nodes[idx / ne];
            let k = &electron.nodes[idx % ne];
            let cf = coupling(q, k, c, model)?;
            let a00 = profile.eval(q, k);
            let a00_shift = profile.eval(q, &(k + q));
            let rho_vac = 1.0 - a00.norm_sqr() - cf.u_perp_sq() * a00_shift.norm_sqr();
            Ok(NodePair { a00, a00_shift, a10: -cf.u[0] * a00_shift, a01: -cf.u[1] * a00_shift, rho_vac, coupling: cf })
        })
        .collect();
    let pairs = pairs?;
    let (worst, p) = pairs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.rho_vac.total_cmp(&b.1.rho_vac))
        .ok_or_else(|| Error::Domain("empty grids".into()))?;
    if p.rho_vac < 0.0 {
        let q = photon.nodes[worst / ne];
        let k = electron.nodes[worst % ne];
        return Err(Error::Infeasible { rho_vac: p.rho_vac, k_ph: q.into(), k: k.into() });
    }
    Ok(TrialState { photon: photon.clone(), electron: electron.clone(), pairs })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Energies {
    pub e_ph: f64,
    pub e_el: f64,
    pub e_int: f64,
    pub e_total: f64,
}

impl Energies {
    /// |E_int + 2E_ph| / E_ph (absolute when E_ph = 0).
    pub fn identity_defect(&self) -> f64 {
        let d = (self.e_int + 2.0 * self.e_ph).abs();
        if self.e_ph > 0.0 {
            d / self.e_ph
        } else {
            d
        }
    }
}

/// E_ph from the photon amplitudes, E_int from the matrix elements g^(p)
/// paired with a₁₀, a₀₁ and a₀₀(k+k_ph), E_el from the electron density.
pub fn energies(state: &TrialState, c: &PhysicalConstants) -> Result<Energies> {
    let l6 = c.ell3().powi(2);
    let n = state.pairs.len();
    let e_ph = l6
        * par_sum(n, |i| {
            let p = &state.pairs[i];
            let (q, _) = state.nodes(i);
            state.weight(i) * c.hbar * c.c * q.norm() * (p.a10.norm_sqr() + p.a01.norm_sqr())
        });
    let e_int = l6
        * par_sum(n, |i| {
            let p = &state.pairs[i];
            let g = &p.coupling.g;
            let s = p.a10.conj() * p.a00_shift * g[0] + p.a01.conj() * p.a00_shift * g[1];
            state.weight(i) * 2.0 * s.re
        });
    let e_el = l6
        * par_sum(n, |i| {
            let p = &state.pairs[i];
            let (_, k) = state.nodes(i);
            state.weight(i) * c.hbar * dispersion(k, c) * (p.a00.norm_sqr() + p.a10.norm_sqr() + p.a01.norm_sqr())
        });
    for (name, v) in [("E_ph", e_ph), ("E_int", e_int), ("E_el", e_el)] {
        if !v.is_finite() {
            return Err(Error::Divergent(format!("{name} = {v}")));
        }
    }
    Ok(Energies { e_ph, e_el, e_int, e_total: e_el - e_ph })
}

pub fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| lo * (r * i as f64).exp()).collect()
}

/// Least-squares slope of y against x.
pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub direction: usize,
    pub k_ph: f64,
    pub u_perp_sq: f64,
}

#[derive(Clone, Debug)]
pub struct LongWaveScan {
    pub rows: Vec<ScanRow>,
    /// Fitted log–log slope per direction; None where U²_⊥ vanishes.
    pub slopes: Vec<Option<f64>>,
}

/// U²_⊥(s·d̂, k) for s on a geometric sweep and each direction d̂.
pub fn long_wavelength_scan(
    k: &WaveVector,
    directions: &[WaveVector],
    s_min: f64,
    s_max: f64,
    n: usize,
    c: &PhysicalConstants,
    model: CouplingModel,
) -> Result<LongWaveScan> {
    use rayon::prelude::*;
    let mags = geometric(s_min, s_max, n);
    let per_dir: Result<Vec<(Vec<ScanRow>, Option<f64>)>> = directions
        .par_iter()
        .enumerate()
        .map(|(di, d)| {
            let dh = d / d.norm();
            let mut rows = Vec::with_capacity(n);
            for &s in &mags {
                let u = coupling(&(dh * s), k, c, model)?.u_perp_sq();
                rows.push(ScanRow { direction: di, k_ph: s, u_perp_sq: u });
            }
            let slope = if rows.iter().all(|r| r.u_perp_sq > 0.0) {
                Some(fit_slope(&rows.iter().map(|r| (r.k_ph.ln(), r.u_perp_sq.ln())).collect::<Vec<_>>()))
            } else {
                None
            };
            Ok((rows, slope))
        })
        .collect();
    let (rows, slopes): (Vec<_>, Vec<_>) = per_dir?.into_iter().unzip();
    Ok(LongWaveScan { rows: rows.into_iter().flatten().collect(), slopes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_is_zero() {
        let c = PhysicalConstants::default();
        let q = WaveVector::new(0.0, 0.0, 0.01);
        let k = WaveVector::new(0.0, 0.0, 0.7);
        assert_eq!(coupling(&q, &k, &c, CouplingModel::ClosedForm).unwrap().u_perp_sq(), 0.0);
    }

    #[test]
    fn zero_photon_rejected() {
        let c = PhysicalConstants::default();
        assert!(coupling(&WaveVector::zeros(), &WaveVector::x(), &c, CouplingModel::ClosedForm).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<_> = geometric(1e-3, 1.0, 5).into_iter().map(|x| (x.ln(), (2.0 * x.powi(-3)).ln())).collect();
        assert!((fit_slope(&pts) + 3.0).abs() < 1e-12);
    }

    #[test]
    fn profile_scaling() {
        let p = A00Profile::default();
        let q = WaveVector::new(0.3, 0.1, 0.2);
        let k = WaveVector::new(0.1, 0.0, 0.2);
        assert!((p.scaled(0.5).eval(&q, &k) - p.eval(&q, &k) * 0.5).norm() < 1e-16);
    }
}
