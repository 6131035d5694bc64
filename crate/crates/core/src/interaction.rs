//! Photons coupled to the electron/positron field. States live on pairs of
//! grids (photon k_ph, electron k) with values in H_em ⊗ H₁₆, where H_em keeps
//! at most one quantum per polarization. The x-integral in H^I is done
//! symbolically: each plane-wave product becomes a momentum constraint that is
//! resolved by looking the partner wave vector up on the electron grid.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::boson::normalization;
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::fermion::{current_bilinears_for, dispersion, generator, gammas, solve_spinors, Clifford16, PhaseLabel, SpinorSet, PHASE_LABELS};
use crate::kspace::{QuadratureGrid, WaveVector};
use crate::linalg::{kron, CMat, CVec, C64};
use crate::photon::{polarization_basis, TwoModeSpace};
use crate::reduce::pairwise_sum_c;

pub const PHOTON_DIM: usize = 4;
pub const PRODUCT_DIM: usize = 64;

/// Index of |m, n, Λ⟩ with m, n ∈ {0, 1} and Λ given as a bit mask.
pub fn product_index(m: usize, n: usize, mask: usize) -> usize {
    (2 * m + n) * 16 + mask
}

/// A field on photon × electron node pairs; value (i, j) at `i * n_el + j`.
#[derive(Clone, Debug)]
pub struct ProductState {
    pub photon: Arc<QuadratureGrid>,
    pub electron: Arc<QuadratureGrid>,
    pub values: Vec<CVec>,
}

impl ProductState {
    pub fn from_fn<F>(photon: Arc<QuadratureGrid>, electron: Arc<QuadratureGrid>, f: F) -> Result<Self>
    where
        F: Fn(&WaveVector, &WaveVector) -> CVec + Sync + Send,
    {
        let ne = electron.len();
        let values: Vec<CVec> = (0..photon.len() * ne)
            .into_par_iter()
            .map(|idx| f(&photon.nodes[idx / ne], &electron.nodes[idx % ne]))
            .collect();
        if let Some(v) = values.iter().find(|v| v.len() != PRODUCT_DIM) {
            return Err(Error::Dimension { expected: PRODUCT_DIM, got: v.len() });
        }
        Ok(Self { photon, electron, values })
    }

    /// The free vacuum |0,0,∅⟩ everywhere.
    pub fn vacuum(photon: Arc<QuadratureGrid>, electron: Arc<QuadratureGrid>) -> Self {
        let v = crate::linalg::basis(PRODUCT_DIM, 0);
        let n = photon.len() * electron.len();
        Self { photon, electron, values: vec![v; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn weight(&self, idx: usize) -> f64 {
        let ne = self.electron.len();
        self.photon.weights[idx / ne] * self.electron.weights[idx % ne]
    }

    pub fn max_norm_deviation(&self) -> f64 {
        self.values.iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Σ w_ph w_el ⟨self|other⟩ (no ℓ factors).
    pub fn inner(&self, other: &ProductState) -> C64 {
        let terms: Vec<C64> = (0..self.len()).map(|i| self.values[i].dotc(&other.values[i]) * self.weight(i)).collect();
        pairwise_sum_c(&terms)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    pub fn sub(&self, other: &ProductState) -> ProductState {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        ProductState { values, ..self.clone() }
    }

    fn with_values(&self, values: Vec<CVec>) -> ProductState {
        ProductState { photon: self.photon.clone(), electron: self.electron.clone(), values }
    }
}

/// Bookkeeping for the momentum constraints met during one action.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ActionReport {
    pub matched: usize,
    /// Partners that fell off the electron grid; their terms are dropped.
    pub dropped: usize,
    pub max_snap_error: f64,
}

impl ActionReport {
    fn merge(self, o: ActionReport) -> ActionReport {
        ActionReport {
            matched: self.matched + o.matched,
            dropped: self.dropped + o.dropped,
            max_snap_error: self.max_snap_error.max(o.max_snap_error),
        }
    }
}

/// Signed-permutation form of a Clifford generator: column j maps to row
/// `to[j]` with factor `sign[j]` (0 when the generator annihilates |j⟩).
#[derive(Clone, Copy, Debug)]
struct SparseGen {
    to: [usize; 16],
    sign: [f64; 16],
}

impl SparseGen {
    fn from_dense(m: &CMat) -> Self {
        let mut to = [0; 16];
        let mut sign = [0.0; 16];
        for j in 0..16 {
            for i in 0..16 {
                if m[(i, j)].re != 0.0 {
                    to[j] = i;
                    sign[j] = m[(i, j)].re;
                }
            }
        }
        Self { to, sign }
    }
}

/// Partner wave vector of the constraint δ(s_A k_ph + s k + s' k').
pub fn partner(q: &WaveVector, k: &WaveVector, s_a: i8, label: PhaseLabel) -> WaveVector {
    -(q * s_a as f64 + k * label.0 as f64) * label.1 as f64
}

/// Wave-vector-local phase Λ(k_ph, k) for gauge transformations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GaugeFunction {
    Constant(f64),
    /// Λ = a·sin(|k_⊥|/s)·(1 + |k_ph|), a function of k_ph and |k_⊥| only.
    Transverse { amplitude: f64, scale: f64 },
    /// Λ = a·(k·k̂_ph); not invariant under k → k ± k_ph.
    Longitudinal { amplitude: f64 },
}

/// |k_⊥| relative to the direction of q.
pub fn transverse_norm(q: &WaveVector, k: &WaveVector) -> f64 {
    let qh = q / q.norm();
    (k - qh * k.dot(&qh)).norm()
}

impl GaugeFunction {
    pub fn eval(&self, q: &WaveVector, k: &WaveVector) -> f64 {
        match *self {
            GaugeFunction::Constant(c) => c,
            GaugeFunction::Transverse { amplitude, scale } => amplitude * (transverse_norm(q, k) / scale).sin() * (1.0 + q.norm()),
            GaugeFunction::Longitudinal { amplitude } => amplitude * k.dot(q) / q.norm(),
        }
    }

    pub fn is_admissible(&self) -> bool {
        !matches!(self, GaugeFunction::Longitudinal { .. })
    }
}

/// Gauge defect ‖U⁻¹H^I U ζ − H^I ζ‖, absolute and relative to ‖H^I ζ‖.
#[derive(Clone, Copy, Debug)]
pub struct GaugeDefect {
    pub absolute: f64,
    pub relative: f64,
}

/// Ĥ = Ĥ^ph + Ĥ^el + Ĥ^I on product states.
#[derive(Clone, Debug)]
pub struct Interaction {
    pub consts: PhysicalConstants,
    /// Largest accepted distance between a partner and its grid node.
    pub snap_tol: f64,
    gens: [SparseGen; 8],
    ladders: [CMat; 2],
    charge: [f64; 16],
    occupation: [f64; 16],
}

impl Interaction {
    pub fn new(consts: PhysicalConstants) -> Self {
        let cl = Clifford16::new();
        let gens = std::array::from_fn(|g| SparseGen::from_dense(generator(&cl, g)));
        let space = TwoModeSpace::new(1, 1);
        let q = cl.charge();
        let n = cl.total_number();
        Self {
            consts,
            snap_tol: 1e-9,
            gens,
            ladders: [space.a_h.clone(), space.a_v.clone()],
            charge: std::array::from_fn(|i| q[(i, i)].re),
            occupation: std::array::from_fn(|i| n[(i, i)].re),
        }
    }

    pub fn with_snap_tol(mut self, tol: f64) -> Self {
        self.snap_tol = tol;
        self
    }

    /// Σ_α ε^p_α J^α restricted to one phase label and normal ordered, as a
    /// dense 16×16 matrix, for both polarizations.
    fn polarized_current(&self, q: &WaveVector, k: &SpinorSet, kp: &SpinorSet, label: PhaseLabel) -> Result<[CMat; 2]> {
        let basis = polarization_basis(q)?;
        let bil = current_bilinears_for(k, kp, &self.consts, Some(label));
        Ok(std::array::from_fn(|p| {
            let eps = basis.eps(p);
            let mut out = CMat::zeros(16, 16);
            for (_, b) in &bil {
                let m = (1..4).fold(CMat::zeros(2, 2), |acc, al| acc + &b.m[al] * C64::from(eps[al - 1]));
                for (ai, &xa) in b.xs.iter().enumerate() {
                    for (bi, &yb) in b.ys.iter().enumerate() {
                        let c = m[(ai, bi)];
                        let (gx, gy) = (&self.gens[xa], &self.gens[yb]);
                        for col in 0..16 {
                            let s1 = gy.sign[col];
                            if s1 == 0.0 {
                                continue;
                            }
                            let mid = gy.to[col];
                            let s2 = gx.sign[mid];
                            if s2 != 0.0 {
                                out[(gx.to[mid], col)] += c * (s1 * s2);
                            }
                        }
                    }
                }
            }
            let vac = out[(0, 0)];
            for i in 0..16 {
                out[(i, i)] -= vac;
            }
            out
        }))
    }

    fn prefactor(&self, q: &WaveVector) -> f64 {
        (2.0 * PI).powi(3) * self.consts.lambda / (2.0 * normalization(q.norm(), &self.consts))
    }

    fn photon_op(&self, p: usize, s_a: i8) -> CMat {
        if s_a > 0 {
            self.ladders[p].clone()
        } else {
            self.ladders[p].adjoint()
        }
    }

    /// The 64×64 block of H^I that feeds ζ_{k_ph,k'} into [H^I ζ]_{k_ph,k} for
    /// the photon term s_A (+1: a_p, −1: a_p†) and current label, where k'
    /// is the partner of (k_ph, k).
    pub fn block(&self, q: &WaveVector, k: &SpinorSet, kp: &SpinorSet, s_a: i8, label: PhaseLabel) -> Result<CMat> {
        let cur = self.polarized_current(q, k, kp, label)?;
        let mut out = CMat::zeros(PRODUCT_DIM, PRODUCT_DIM);
        for (p, cp) in cur.iter().enumerate() {
            out += kron(&self.photon_op(p, s_a), cp);
        }
        Ok(out * C64::from(self.prefactor(q)))
    }

    /// Same as `block(..) * v` without forming the Kronecker product:
    /// (O ⊗ K) vec(Z) = vec(K Z Oᵀ) with Z the 16×4 reshaping of v.
    fn apply_block(&self, q: &WaveVector, k: &SpinorSet, kp: &SpinorSet, s_a: i8, label: PhaseLabel, v: &CVec) -> Result<CVec> {
        let cur = self.polarized_current(q, k, kp, label)?;
        let z = CMat::from_column_slice(16, PHOTON_DIM, v.as_slice());
        let mut r = CMat::zeros(16, PHOTON_DIM);
        for (p, cp) in cur.iter().enumerate() {
            r += cp * &z * self.photon_op(p, s_a).transpose();
        }
        Ok(CVec::from_column_slice(r.as_slice()) * C64::from(self.prefactor(q)))
    }

    /// [Ĥ^I ζ] with a record of matched and dropped momentum constraints.
    pub fn apply_interaction(&self, state: &ProductState) -> Result<(ProductState, ActionReport)> {
        let el = &state.electron;
        let spinors: Result<Vec<SpinorSet>> = el.nodes.par_iter().map(|k| solve_spinors(k, &self.consts)).collect();
        let spinors = spinors?;
        let ne = el.len();
        let results: Result<Vec<(CVec, ActionReport)>> = (0..state.len())
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / ne, idx % ne);
                let q = &state.photon.nodes[i];
                let k = &el.nodes[j];
                let mut acc = CVec::zeros(PRODUCT_DIM);
                let mut rep = ActionReport::default();
                for s_a in [1i8, -1] {
                    for label in PHASE_LABELS {
                        let exact = partner(q, k, s_a, label);
                        match el.find_node(&exact, self.snap_tol) {
                            Some((jp, err)) => {
                                acc += self.apply_block(q, &spinors[j], &spinors[jp], s_a, label, &state.values[i * ne + jp])?;
                                rep.matched += 1;
                                rep.max_snap_error = rep.max_snap_error.max(err);
                            }
                            None => rep.dropped += 1,
                        }
                    }
                }
                Ok((acc, rep))
            })
            .collect();
        let results = results?;
        let report = results.iter().fold(ActionReport::default(), |a, r| a.merge(r.1));
        Ok((state.with_values(results.into_iter().map(|r| r.0).collect()), report))
    }

    /// Ĥ^ph + Ĥ^el, diagonal in the product basis: ħc|k_ph|(m + n) + ħω(k)|Λ|.
    pub fn apply_free(&self, state: &ProductState) -> ProductState {
        let ne = state.electron.len();
        let c = &self.consts;
        let values = state
            .values
            .par_iter()
            .enumerate()
            .map(|(idx, v)| {
                let eph = c.hbar * c.c * state.photon.nodes[idx / ne].norm();
                let eel = c.hbar * dispersion(&state.electron.nodes[idx % ne], c);
                CVec::from_fn(PRODUCT_DIM, |r, _| {
                    let ph = r / 16;
                    let photons = (ph / 2 + ph % 2) as f64;
                    v[r] * (eph * photons + eel * self.occupation[r % 16])
                })
            })
            .collect();
        state.with_values(values)
    }

    pub fn apply_hamiltonian(&self, state: &ProductState) -> Result<(ProductState, ActionReport)> {
        let (hi, rep) = self.apply_interaction(state)?;
        let free = self.apply_free(state);
        let values = hi.values.iter().zip(&free.values).map(|(a, b)| a + b).collect();
        Ok((state.with_values(values), rep))
    }

    /// ⟨Ĥ⟩ = ℓ⁶ Σ w w ⟨ζ|Ĥζ⟩ for a properly normalized state.
    pub fn energy(&self, state: &ProductState, tol: f64) -> Result<C64> {
        let dev = state.max_norm_deviation();
        if dev > tol {
            return Err(Error::NotNormalized { deviation: dev, tol });
        }
        let (h, _) = self.apply_hamiltonian(state)?;
        Ok(state.inner(&h) * self.consts.ell3().powi(2))
    }

    /// Node-pair-wise e^{±iΛQ}, Q = q_el(N₁+N₂−N₃−N₄).
    pub fn gauge_transform(&self, lambda: &GaugeFunction, state: &ProductState, inverse: bool) -> ProductState {
        let ne = state.electron.len();
        let sign = if inverse { -1.0 } else { 1.0 };
        let values = state
            .values
            .par_iter()
            .enumerate()
            .map(|(idx, v)| {
                let l = lambda.eval(&state.photon.nodes[idx / ne], &state.electron.nodes[idx % ne]);
                CVec::from_fn(PRODUCT_DIM, |r, _| v[r] * C64::from_polar(1.0, sign * l * self.consts.q_el * self.charge[r % 16]))
            })
            .collect();
        state.with_values(values)
    }

    pub fn gauge_defect(&self, lambda: &GaugeFunction, state: &ProductState) -> Result<GaugeDefect> {
        let (direct, _) = self.apply_interaction(state)?;
        let (conj, _) = self.apply_interaction(&self.gauge_transform(lambda, state, false))?;
        let conj = self.gauge_transform(lambda, &conj, true);
        let absolute = conj.sub(&direct).norm();
        let scale = direct.norm();
        Ok(GaugeDefect { absolute, relative: if scale > 0.0 { absolute / scale } else { absolute } })
    }

    fn apply_charge(&self, state: &ProductState) -> ProductState {
        let values = state
            .values
            .iter()
            .map(|v| CVec::from_fn(PRODUCT_DIM, |r, _| v[r] * (self.consts.q_el * self.charge[r % 16])))
            .collect();
        state.with_values(values)
    }

    /// ‖[Q̂, Ĥ]ζ‖.
    pub fn charge_conservation_defect(&self, state: &ProductState) -> Result<f64> {
        let (h, _) = self.apply_hamiltonian(state)?;
        let (hq, _) = self.apply_hamiltonian(&self.apply_charge(state))?;
        Ok(self.apply_charge(&h).sub(&hq).norm())
    }

    /// Pair-creation amplitude from the vacuum in its collapsed form
    /// −λq_el c/(2N₀) Σ_α ε^p_α ⟨u^(s)(k)|γ⁰γ^α v^(t)(−k−k_ph)⟩ (s ∈ {1,2}, t ∈ {3,4}).
    pub fn collapsed_pair_amplitude(&self, q: &WaveVector, k: &WaveVector, pol: usize, s: usize, t: usize) -> Result<C64> {
        let c = &self.consts;
        let eps = polarization_basis(q)?.eps(pol);
        let a = solve_spinors(k, c)?;
        let b = solve_spinors(&-(k + q), c)?;
        let g = gammas();
        let mut acc = C64::from(0.0);
        for al in 1..4 {
            let m = a.u[s - 1].dotc(&(&g[0] * &g[al] * &b.v[t - 3]));
            acc += m * eps[al - 1];
        }
        Ok(acc * (-c.lambda * c.q_el * c.c / (2.0 * normalization(q.norm(), c))))
    }
}

/// Single-electron states |0,0,{1}⟩ weighted by a profile, completed by the
/// free vacuum so every node pair is normalized.
pub fn electron_state(photon: Arc<QuadratureGrid>, electron: Arc<QuadratureGrid>, amp: impl Fn(&WaveVector, &WaveVector) -> C64 + Sync + Send) -> Result<ProductState> {
    ProductState::from_fn(photon, electron, move |q, k| {
        let a = amp(q, k);
        let mut v = CVec::zeros(PRODUCT_DIM);
        v[product_index(0, 0, 0)] = C64::from((1.0 - a.norm_sqr()).max(0.0).sqrt());
        v[product_index(0, 0, 1)] = a;
        v
    })
}
