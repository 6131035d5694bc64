//! Verification suites shared by the scenario runner and the acceptance
//! target. Each suite measures residuals, compares them with thresholds and
//! returns the raw table it was computed from.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boson::{self, CoherentProfile, OscillatorSpace};
use crate::boundstate::{self as bs, A00Profile, CouplingModel};
use crate::constants::PhysicalConstants;
use crate::coulomb::{self, Boundary, ClassicalFieldSet, DensityPreset, SpatialGrid};
use crate::error::{Error, Result};
use crate::fermion::{self, Clifford16};
use crate::interaction::{electron_state, GaugeFunction, Interaction, ProductState, PRODUCT_DIM};
use crate::kspace::{expectation, make_grid, GridConfig, KField, QuadratureGrid, WaveVector, DEFAULT_NORMALIZATION_TOL};
use crate::linalg::{comm, max_abs, restricted_max_abs, restricted_norm, CMat, CVec, C64};
use crate::photon::{self, TwoModeSpace};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Relation {
    Below,
    /// Negative controls: the value must exceed the threshold.
    Above,
    Exact,
    /// |value − target| ≤ threshold.
    Within { target: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub relation: Relation,
    pub passed: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, relation: Relation::Below, passed: value < threshold }
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, relation: Relation::Above, passed: value > threshold }
    }

    pub fn exact(name: impl Into<String>, value: f64, expected: f64) -> Self {
        Self { name: name.into(), value, threshold: expected, relation: Relation::Exact, passed: value == expected }
    }

    pub fn within(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold: tol,
            relation: Relation::Within { target },
            passed: (value - target).abs() <= tol,
        }
    }
}

/// Rows of a results table; every cell is already formatted.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Shortest round-trip representation, so CSV bytes are reproducible.
pub fn fmt(v: f64) -> String {
    format!("{v:e}")
}

#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
    pub table: Table,
    /// Wall-clock seconds per labeled step; kept out of the table so that the
    /// table is reproducible.
    pub timings: Vec<(String, f64)>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn merge(mut self, other: SuiteReport) -> SuiteReport {
        self.checks.extend(other.checks);
        self.timings.extend(other.timings);
        if self.table.header.is_empty() {
            self.table = other.table;
        }
        self
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform in the ball of radius r.
pub fn random_in_ball(rng: &mut ChaCha8Rng, r: f64) -> WaveVector {
    loop {
        let v = WaveVector::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if v.norm_squared() <= 1.0 {
            return v * r;
        }
    }
}

pub fn random_event(rng: &mut ChaCha8Rng, half: f64) -> [f64; 4] {
    std::array::from_fn(|_| rng.random_range(-half..half))
}

pub fn random_unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> CVec {
    let v = CVec::from_fn(dim, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let n = v.norm();
    v / C64::from(n)
}

// ---------------------------------------------------------------------------
// Bound state

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundStateParams {
    pub profiles: Vec<A00Profile>,
    pub photon_grid: GridConfig,
    pub electron_grid: GridConfig,
    pub model: CouplingModel,
    pub identity_tol: f64,
    pub normalization_tol: f64,
    /// Negative control: a profile too strong to normalize. The check passes
    /// when the optimum is rejected with ρ_vac < 0.
    pub infeasible_control: Option<A00Profile>,
}

impl Default for BoundStateParams {
    fn default() -> Self {
        Self {
            profiles: vec![
                A00Profile::default(),
                A00Profile::Shell { amplitude: 0.4, k_shell: 0.5, width: 0.2, k0: 0.2, sigma_ph: 0.8 },
                A00Profile::Gaussian {
                    amplitude: 0.6,
                    k_center: [0.2, -0.1, 0.0],
                    sigma_k: 0.3,
                    k0: 0.5,
                    sigma_ph: 1.5,
                    twist: [1.0, 0.5, -0.3],
                },
            ],
            photon_grid: GridConfig { k_max: 2.0, n_radial: 4, n_polar: 4, n_azimuthal: 4 },
            electron_grid: GridConfig { k_max: 1.5, n_radial: 6, n_polar: 6, n_azimuthal: 4 },
            model: CouplingModel::ClosedForm,
            identity_tol: 1e-10,
            normalization_tol: 1e-12,
            infeasible_control: Some(A00Profile::default().scaled(10.0)),
        }
    }
}

pub fn bound_state(p: &BoundStateParams, c: &PhysicalConstants) -> Result<SuiteReport> {
    let photon = p.photon_grid.build()?;
    let electron = p.electron_grid.build()?;
    let mut rep = SuiteReport {
        table: Table::new(&["profile", "node_pairs", "E_ph", "E_el", "E_int", "E_total", "identity_defect"]),
        ..Default::default()
    };
    for (i, prof) in p.profiles.iter().enumerate() {
        let t = Instant::now();
        let st = bs::variational_optimum(prof, &photon, &electron, c, p.model)?;
        let e = bs::energies(&st, c)?;
        let secs = t.elapsed().as_secs_f64();
        rep.checks.push(Check::below(format!("profile{i}.identity"), e.identity_defect(), p.identity_tol));
        rep.checks.push(Check::below(format!("profile{i}.normalization"), st.normalization_defect(), p.normalization_tol));
        rep.checks.push(Check::above(format!("profile{i}.min_rho_vac"), st.min_rho_vac(), 0.0));
        rep.checks.push(Check::above(format!("profile{i}.photon_energy"), e.e_ph, 0.0));
        rep.checks.push(Check::below(format!("profile{i}.lowering"), e.e_total - e.e_el, 0.0));
        rep.table.push(vec![
            i.to_string(),
            st.pairs.len().to_string(),
            fmt(e.e_ph),
            fmt(e.e_el),
            fmt(e.e_int),
            fmt(e.e_total),
            fmt(e.identity_defect()),
        ]);
        rep.timings.push((format!("profile{i}"), secs));
    }
    if let Some(prof) = &p.infeasible_control {
        let deficit = match bs::variational_optimum(prof, &photon, &electron, c, p.model) {
            Err(Error::Infeasible { rho_vac, .. }) => -rho_vac,
            Err(e) => return Err(e),
            Ok(st) => -st.min_rho_vac(),
        };
        rep.checks.push(Check::above("infeasible_control.rho_deficit", deficit, 0.0));
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Long-wavelength scan

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LongWaveParams {
    pub k: [f64; 3],
    /// Sweep directions; the direction of k itself is always added.
    pub directions: Vec<[f64; 3]>,
    pub k_ph_min: f64,
    pub k_ph_max: f64,
    pub points: usize,
    pub model: CouplingModel,
    pub slope_tol: f64,
}

impl Default for LongWaveParams {
    fn default() -> Self {
        Self {
            k: [0.3, -0.2, 0.5],
            directions: vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0], [1.0, -2.0, 3.0], [-1.0, 0.5, 0.2], [0.0, 0.3, -1.0]],
            k_ph_min: 1e-4,
            k_ph_max: 1e-2,
            points: 9,
            model: CouplingModel::ClosedForm,
            slope_tol: 0.02,
        }
    }
}

pub fn long_wave(p: &LongWaveParams, c: &PhysicalConstants) -> Result<SuiteReport> {
    let k = WaveVector::from(p.k);
    let mut dirs: Vec<WaveVector> = p.directions.iter().map(|d| WaveVector::from(*d)).collect();
    dirs.push(k);
    let scan = bs::long_wavelength_scan(&k, &dirs, p.k_ph_min, p.k_ph_max, p.points, c, p.model)?;
    let mut rep = SuiteReport { table: Table::new(&["direction", "k_ph", "u_perp_sq", "slope"]), ..Default::default() };
    let parallel = dirs.len() - 1;
    for row in &scan.rows {
        let slope = scan.slopes[row.direction].map(fmt).unwrap_or_else(|| "nan".into());
        rep.table.push(vec![row.direction.to_string(), fmt(row.k_ph), fmt(row.u_perp_sq), slope]);
    }
    for (d, s) in scan.slopes.iter().enumerate().take(parallel) {
        rep.checks.push(Check::within(format!("direction{d}.slope"), s.unwrap_or(f64::NAN), -3.0, p.slope_tol));
    }
    let par_max = scan.rows.iter().filter(|r| r.direction == parallel).map(|r| r.u_perp_sq).fold(0.0, f64::max);
    rep.checks.push(Check::exact("parallel.u_perp_sq", par_max, 0.0));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Spinors and charge conjugation

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpinorParams {
    pub samples: usize,
    pub k_max: f64,
    pub seed: u64,
    pub tol: f64,
    /// Samples (k, x) for the 16×16 conjugation operator.
    pub conjugation_samples: usize,
}

impl Default for SpinorParams {
    fn default() -> Self {
        Self { samples: 1000, k_max: 10.0, seed: 1, tol: 1e-12, conjugation_samples: 20 }
    }
}

pub fn spinor_suite(p: &SpinorParams, c: &PhysicalConstants) -> Result<SuiteReport> {
    let mut r = rng(p.seed);
    let ks: Vec<WaveVector> = (0..p.samples).map(|_| random_in_ball(&mut r, p.k_max)).collect();
    let res: Result<Vec<fermion::SpinorResiduals>> = ks.par_iter().map(|k| fermion::spinor_residuals(k, c)).collect();
    let res = res?;
    let worst = |f: fn(&fermion::SpinorResiduals) -> f64| res.iter().map(f).fold(0.0, f64::max);
    let mut rep = SuiteReport { table: Table::new(&["k_x", "k_y", "k_z", "eigen", "ortho", "cross", "conjugation"]), ..Default::default() };
    for (k, s) in ks.iter().zip(&res) {
        rep.table.push(vec![fmt(k.x), fmt(k.y), fmt(k.z), fmt(s.eigen), fmt(s.ortho), fmt(s.cross), fmt(s.conjugation)]);
    }
    rep.checks.push(Check::below("eigen", worst(|s| s.eigen), p.tol));
    rep.checks.push(Check::below("orthonormal", worst(|s| s.ortho), p.tol));
    rep.checks.push(Check::below("cross", worst(|s| s.cross), p.tol));
    rep.checks.push(Check::below("charge_conjugate", worst(|s| s.conjugation), p.tol));
    if p.conjugation_samples > 0 {
        let cc = fermion::construct_charge_conjugation(c)?;
        rep.checks.push(Check::below("conjugation.unitarity", cc.unitarity_residual(), p.tol));
        let mut worst_op: f64 = 0.0;
        for _ in 0..p.conjugation_samples {
            let k = random_in_ball(&mut r, p.k_max);
            let x = random_event(&mut r, 3.0);
            worst_op = worst_op.max(cc.residual(&k, x, c)?);
        }
        rep.checks.push(Check::below("conjugation.operator", worst_op, p.tol));
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Continuity of the two-point current

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuityParams {
    pub grid: GridConfig,
    pub x: [f64; 4],
    pub steps: Vec<f64>,
    pub order_tol: f64,
}

impl Default for ContinuityParams {
    fn default() -> Self {
        Self {
            grid: GridConfig { k_max: 2.0, n_radial: 4, n_polar: 4, n_azimuthal: 4 },
            x: [0.3, -0.4, 0.2, 0.5],
            steps: vec![0.2, 0.1, 0.05],
            order_tol: 0.2,
        }
    }
}

/// Two normalized 16-dim test fields: a spin-up electron packet over the
/// vacuum, and a mixture with a spin-down electron and an electron–positron pair.
pub fn continuity_profiles(grid: Arc<QuadratureGrid>) -> Result<[KField; 2]> {
    let cl = Clifford16::new();
    let e1 = cl.state(&[1]);
    let e2 = cl.state(&[2]);
    let pair = cl.state(&[1, 3]);
    let vac = Clifford16::vacuum();
    let d = WaveVector::new(0.7, -0.2, 0.4);
    let a = KField::from_fn(grid.clone(), |k| {
        let rho = 0.5 * (-k.norm_squared() / 2.0).exp();
        &vac * C64::from((1.0 - rho).sqrt()) + &e1 * C64::from_polar(rho.sqrt(), k.dot(&d))
    })?;
    let b = KField::from_fn(grid, |k| {
        let r1 = 0.3 * (-(k - d).norm_squared()).exp();
        let r2 = 0.2 * (-k.norm_squared() / 3.0).exp();
        &vac * C64::from((1.0 - r1 - r2).sqrt()) + &e2 * C64::from_polar(r1.sqrt(), 0.5 * k.x) + &pair * C64::from_polar(r2.sqrt(), -k.z)
    })?;
    Ok([a, b])
}

pub fn continuity_suite(p: &ContinuityParams, c: &PhysicalConstants) -> Result<SuiteReport> {
    let grid = Arc::new(p.grid.build()?);
    let cl = Clifford16::new();
    let mut rep = SuiteReport { table: Table::new(&["profile", "h", "residual"]), ..Default::default() };
    for (i, field) in continuity_profiles(grid)?.iter().enumerate() {
        let mut errs = Vec::new();
        for &h in &p.steps {
            let r = fermion::continuity_residual(field, p.x, h, &cl, c)?;
            rep.table.push(vec![i.to_string(), fmt(h), fmt(r)]);
            errs.push(r);
        }
        let order = coulomb::convergence_order(&p.steps, &errs);
        rep.checks.push(Check::within(format!("profile{i}.order"), order, 2.0, p.order_tol));
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Algebra and total charge

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlgebraParams {
    pub samples: usize,
    pub seed: u64,
    pub oscillator_cutoff: usize,
    pub photon_cutoff: usize,
    pub tol: f64,
    /// Rounding allowance for identities that hold exactly in exact arithmetic.
    pub exact_tol: f64,
}

impl Default for AlgebraParams {
    fn default() -> Self {
        Self { samples: 200, seed: 2, oscillator_cutoff: 32, photon_cutoff: 6, tol: 1e-12, exact_tol: 1e-14 }
    }
}

pub fn algebra_suite(p: &AlgebraParams, c: &PhysicalConstants) -> Result<SuiteReport> {
    let mut rep = SuiteReport { table: Table::new(&["check", "value"]), ..Default::default() };
    let cl = Clifford16::new();
    rep.checks.push(Check::exact("clifford.car", fermion::clifford_residual(&cl), 0.0));
    rep.checks.push(Check::exact("gamma.anticommutator", fermion::gamma_residual(), 0.0));

    let osc = OscillatorSpace::new(p.oscillator_cutoff);
    // Entries of a·a† are (√n)², so rounding is measured against the cutoff.
    let ccr = comm(&osc.a, &osc.adag) - CMat::identity(osc.dim(), osc.dim());
    let ccr = restricted_max_abs(&ccr, &osc.levels_up_to(p.oscillator_cutoff - 1)) / p.oscillator_cutoff as f64;
    rep.checks.push(Check::below("oscillator.ccr", ccr, p.exact_tol));

    let mut r = rng(p.seed);
    let safe = osc.levels_up_to(p.oscillator_cutoff - 1);
    let two = TwoModeSpace::new(p.photon_cutoff, p.photon_cutoff);
    let (mut scalar, mut em): (f64, f64) = (0.0, 0.0);
    for _ in 0..p.samples {
        let k = random_in_ball(&mut r, 5.0);
        if k.norm() < 1e-3 {
            continue;
        }
        let (x, y) = (random_event(&mut r, 5.0), random_event(&mut r, 5.0));
        scalar = scalar.max(restricted_norm(&boson::commutator_check(x, y, &k, &osc, c), &safe));
        em = em.max(photon::a_commutator_check(x, y, &k, &two, c, p.photon_cutoff - 1)?);
    }
    rep.checks.push(Check::below("scalar.commutator", scalar, p.tol));
    rep.checks.push(Check::below("photon.commutator", em, p.tol));
    for ch in &rep.checks {
        rep.table.push(vec![ch.name.clone(), fmt(ch.value)]);
    }
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChargeParams {
    pub samples: usize,
    pub k_max: f64,
    pub seed: u64,
    pub exact_tol: f64,
}

impl Default for ChargeParams {
    fn default() -> Self {
        Self { samples: 100, k_max: 10.0, seed: 3, exact_tol: 1e-14 }
    }
}

/// (1/c)∫dx J⁰ against q_el(N₁+N₂−N₃−N₄) as 16×16 matrices.
pub fn total_charge_suite(p: &ChargeParams, c: &PhysicalConstants) -> Result<SuiteReport> {
    let cl = Clifford16::new();
    let target = cl.charge() * C64::from(c.q_el);
    let mut r = rng(p.seed);
    let ks: Vec<WaveVector> = (0..p.samples).map(|_| random_in_ball(&mut r, p.k_max)).collect();
    let mut rep = SuiteReport { table: Table::new(&["k_x", "k_y", "k_z", "same_defect", "opposite_max"]), ..Default::default() };
    let (mut same_w, mut opp_w): (f64, f64) = (0.0, 0.0);
    for k in &ks {
        let (same, opp) = fermion::total_charge(k, &cl, c)?;
        let d = max_abs(&(same - &target));
        let o = max_abs(&opp);
        same_w = same_w.max(d);
        opp_w = opp_w.max(o);
        rep.table.push(vec![fmt(k.x), fmt(k.y), fmt(k.z), fmt(d), fmt(o)]);
    }
    rep.checks.push(Check::below("total_charge.identity", same_w, p.exact_tol));
    rep.checks.push(Check::exact("total_charge.opposite", opp_w, 0.0));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Transversality and Gauss

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaussParams {
    pub samples: usize,
    pub k_max: f64,
    pub seed: u64,
    pub tol: f64,
}

impl Default for GaussParams {
    fn default() -> Self {
        Self { samples: 10_000, k_max: 10.0, seed: 4, tol: 1e-12 }
    }
}

pub fn gauss_suite(p: &GaussParams, c: &PhysicalConstants) -> Result<SuiteReport> {
    let mut r = rng(p.seed);
    let samples: Vec<(WaveVector, [f64; 4])> =
        (0..p.samples).map(|_| (random_in_ball(&mut r, p.k_max), random_event(&mut r, 10.0))).filter(|(k, _)| k.norm() > 0.0).collect();
    let space = TwoModeSpace::new(2, 2);
    let res: Result<Vec<(f64, f64)>> = samples
        .par_iter()
        .map(|(k, x)| Ok((photon::transversality_residual(k)?, photon::gauss_residual(*x, k, &space, c)?)))
        .collect();
    let res = res?;
    let mut rep = SuiteReport { table: Table::new(&["k_x", "k_y", "k_z", "transversality", "gauss"]), ..Default::default() };
    for ((k, _), (t, g)) in samples.iter().zip(&res) {
        rep.table.push(vec![fmt(k.x), fmt(k.y), fmt(k.z), fmt(*t), fmt(*g)]);
    }
    rep.checks.push(Check::below("transversality", res.iter().map(|r| r.0).fold(0.0, f64::max), p.tol));
    rep.checks.push(Check::below("gauss", res.iter().map(|r| r.1).fold(0.0, f64::max), p.tol));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Gauge symmetry

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaugeParams {
    pub photon_spacing: f64,
    pub photon_half_width: i64,
    pub electron_spacing: f64,
    pub electron_half_width: i64,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    /// The longitudinal counterexample passes when its relative defect exceeds this.
    pub negative_threshold: f64,
    /// Defaults to π/(q_el·photon_spacing): a half-turn phase jump between
    /// sectors linked by the smallest photon wave vector.
    pub longitudinal_amplitude: Option<f64>,
    /// Electron amplitude of the crafted counterexample state.
    pub counterexample_amplitude: f64,
}

impl Default for GaugeParams {
    fn default() -> Self {
        Self {
            photon_spacing: 0.25,
            photon_half_width: 1,
            electron_spacing: 0.25,
            electron_half_width: 2,
            samples: 10,
            seed: 5,
            tol: 1e-10,
            negative_threshold: 1e-2,
            longitudinal_amplitude: None,
            counterexample_amplitude: 0.8,
        }
    }
}

/// Independent random unit vectors at every node pair.
pub fn random_product_state(photon: Arc<QuadratureGrid>, electron: Arc<QuadratureGrid>, seed: u64) -> ProductState {
    let mut r = rng(seed);
    let values = (0..photon.len() * electron.len()).map(|_| random_unit_vector(&mut r, PRODUCT_DIM)).collect();
    ProductState { photon, electron, values }
}

pub fn gauge_suite(p: &GaugeParams, c: &PhysicalConstants) -> Result<SuiteReport> {
    let photon = Arc::new(QuadratureGrid::lattice(p.photon_spacing, p.photon_half_width, false)?);
    let electron = Arc::new(QuadratureGrid::lattice(p.electron_spacing, p.electron_half_width, true)?);
    let it = Interaction::new(*c);
    let mut r = rng(p.seed);
    let mut rep = SuiteReport { table: Table::new(&["lambda", "admissible", "absolute", "relative"]), ..Default::default() };
    let (mut worst_abs, mut worst_rel): (f64, f64) = (0.0, 0.0);
    let mut lambdas = vec![GaugeFunction::Constant(r.random_range(-PI..PI))];
    for _ in 0..p.samples {
        lambdas.push(GaugeFunction::Transverse { amplitude: r.random_range(0.5..3.0), scale: r.random_range(0.1..1.0) });
    }
    for (i, lam) in lambdas.iter().enumerate() {
        let z = random_product_state(photon.clone(), electron.clone(), p.seed.wrapping_add(1 + i as u64));
        let d = it.gauge_defect(lam, &z)?;
        worst_abs = worst_abs.max(d.absolute);
        worst_rel = worst_rel.max(d.relative);
        rep.table.push(vec![format!("{lam:?}"), "true".into(), fmt(d.absolute), fmt(d.relative)]);
    }
    rep.checks.push(Check::below("admissible.absolute", worst_abs, p.tol));
    rep.checks.push(Check::below("admissible.relative", worst_rel, p.tol));

    let amplitude = p.longitudinal_amplitude.unwrap_or(PI / (c.q_el * p.photon_spacing));
    let lam = GaugeFunction::Longitudinal { amplitude };
    let a = C64::from(p.counterexample_amplitude);
    let z = electron_state(photon.clone(), electron.clone(), move |_, _| a)?;
    let d = it.gauge_defect(&lam, &z)?;
    rep.table.push(vec![format!("{lam:?}"), "false".into(), fmt(d.absolute), fmt(d.relative)]);
    rep.checks.push(Check::above("longitudinal.relative", d.relative, p.negative_threshold));
    rep.checks.push(Check::above("longitudinal.absolute", d.absolute, p.negative_threshold));

    let unitarity = (it.gauge_transform(&lam, &z, false).norm() - z.norm()).abs();
    rep.checks.push(Check::below("gauge.unitarity", unitarity, 1e-12));
    rep.checks.push(Check::below("charge.conservation", it.charge_conservation_defect(&z)?, p.tol));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Energy correspondences

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyParams {
    pub radial: Vec<usize>,
    pub n_polar: usize,
    pub n_azimuthal: usize,
    pub scalar_amplitude: f64,
    pub scalar_width: f64,
    pub photon_amplitudes: [f64; 2],
    pub photon_widths: [f64; 2],
    pub tol: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            radial: vec![8, 16, 32],
            n_polar: 6,
            n_azimuthal: 6,
            scalar_amplitude: 2.0,
            scalar_width: 0.7,
            photon_amplitudes: [1.2, 0.9],
            photon_widths: [0.6, 1.1],
            tol: 1e-6,
        }
    }
}

/// ∫d³k ħc|k| ℓ³A² e^{−|k|²/w²} = 2πħcℓ³A²w⁴.
pub fn gaussian_energy(amplitude: f64, width: f64, c: &PhysicalConstants) -> f64 {
    2.0 * PI * c.hbar * c.c * c.ell3() * amplitude * amplitude * width.powi(4)
}

pub fn energy_suite(p: &EnergyParams, c: &PhysicalConstants) -> Result<SuiteReport> {
    let mut rep = SuiteReport { table: Table::new(&["field", "n_radial", "quantum", "classical", "closed_form", "relative"]), ..Default::default() };
    let scalar = CoherentProfile::gaussian(C64::from(p.scalar_amplitude), p.scalar_width);
    let (f1, f2) = (
        CoherentProfile::gaussian(C64::from(p.photon_amplitudes[0]), p.photon_widths[0]),
        CoherentProfile::gaussian(C64::from(p.photon_amplitudes[1]), p.photon_widths[1]),
    );
    let osc = OscillatorSpace::default();
    let two = TwoModeSpace::new(20, 20);
    let closed_s = gaussian_energy(p.scalar_amplitude, p.scalar_width, c);
    let closed_p = gaussian_energy(p.photon_amplitudes[0], p.photon_widths[0], c) + gaussian_energy(p.photon_amplitudes[1], p.photon_widths[1], c);
    let wmax = p.photon_widths[0].max(p.photon_widths[1]);
    let mut errs = [Vec::new(), Vec::new()];
    for &n in &p.radial {
        let gs = Arc::new(make_grid(10.0 * p.scalar_width, n, p.n_polar, p.n_azimuthal)?);
        let field = boson::coherent_field(&scalar, gs.clone(), &osc)?;
        let q = expectation(&boson::free_hamiltonian(&osc, c), &field, c, DEFAULT_NORMALIZATION_TOL)?.re;
        let cl = boson::classical_energy(&scalar, &gs, c);
        let rel = ((q - closed_s) / closed_s).abs();
        errs[0].push(rel);
        rep.table.push(vec!["scalar".into(), n.to_string(), fmt(q), fmt(cl), fmt(closed_s), fmt(rel)]);

        let gp = Arc::new(make_grid(10.0 * wmax, n, p.n_polar, p.n_azimuthal)?);
        let field = photon::coherent_em_field(&f1, &f2, gp.clone(), &two)?;
        let q = expectation(&photon::em_hamiltonian(&two, c), &field, c, DEFAULT_NORMALIZATION_TOL)?.re;
        let cl = photon::classical_em_energy(&f1, &f2, &gp, c);
        let rel = ((q - closed_p) / closed_p).abs();
        errs[1].push(rel);
        rep.table.push(vec!["photon".into(), n.to_string(), fmt(q), fmt(cl), fmt(closed_p), fmt(rel)]);
    }
    for (name, e) in ["scalar", "photon"].iter().zip(&errs) {
        let last = *e.last().ok_or_else(|| Error::Config("energy suite needs radial sizes".into()))?;
        rep.checks.push(Check::below(format!("{name}.relative"), last, p.tol));
        // Converging: each refinement improves the error or it has reached rounding.
        let worst_step = e.windows(2).map(|w| if w[1] < w[0] || w[1] < 1e-13 { 0.0 } else { 1.0 }).fold(0.0, f64::max);
        rep.checks.push(Check::exact(format!("{name}.converging"), worst_step, 0.0));
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Emergent Coulomb field

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoulombParams {
    pub sigma: f64,
    /// Box edge in units of σ for the Gauss study.
    pub extent_sigmas: f64,
    pub sizes: Vec<usize>,
    pub boundary: Boundary,
    pub gauss_tol: f64,
    pub order_tol: f64,
    pub roundtrip_tol: f64,
    /// Far-field comparison: box edge in σ and relative tolerance outside 3σ.
    pub far_extent_sigmas: f64,
    pub far_tol: f64,
    pub seed: u64,
}

impl Default for CoulombParams {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            extent_sigmas: 6.0,
            sizes: vec![32, 48, 64],
            boundary: Boundary::Open,
            gauss_tol: 0.02,
            order_tol: 0.2,
            roundtrip_tol: 1e-10,
            far_extent_sigmas: 12.0,
            far_tol: 0.02,
            seed: 6,
        }
    }
}

pub fn coulomb_suite(p: &CoulombParams, c: &PhysicalConstants) -> Result<SuiteReport> {
    let mut rep = SuiteReport { table: Table::new(&["n", "h", "gauss_relative", "curl", "div_b"]), ..Default::default() };
    let gauss = DensityPreset::Gaussian { charge: 1.0, sigma: p.sigma, center: [0.0; 3] };
    let (mut hs, mut errs) = (Vec::new(), Vec::new());
    let mut finest = None;
    for &n in &p.sizes {
        let g = SpatialGrid::new(n, p.extent_sigmas * p.sigma, p.boundary)?;
        let f = ClassicalFieldSet::with_density(g, gauss.sample(&g, 0.0));
        let cor = coulomb::add_coulomb(&f, c)?;
        let m = coulomb::verify_maxwell(&f, &cor, c);
        rep.table.push(vec![n.to_string(), fmt(g.h), fmt(m.gauss), fmt(m.curl_correction), fmt(m.div_b)]);
        hs.push(g.h);
        errs.push(m.gauss);
        finest = Some((g, f, cor, m));
    }
    let (g, f, cor, m) = finest.ok_or_else(|| Error::Config("coulomb suite needs grid sizes".into()))?;
    rep.checks.push(Check::below("gauss.relative", m.gauss, p.gauss_tol));
    rep.checks.push(Check::within("gauss.order", coulomb::convergence_order(&hs, &errs), 2.0, p.order_tol));
    rep.checks.push(Check::below("correction.curl", m.curl_correction, 1e-10));

    // remove ∘ add on a random smooth density and a random transverse E′.
    let mut r = rng(p.seed);
    let blobs: Vec<([f64; 3], f64, f64)> = (0..4)
        .map(|_| {
            let ctr = std::array::from_fn(|_| r.random_range(-1.0..1.0) * p.sigma);
            (ctr, r.random_range(-1.0..1.0), r.random_range(0.5..1.5) * p.sigma)
        })
        .collect();
    let j0 = g.sample(|x| blobs.iter().map(|(ctr, q, s)| coulomb::gaussian_density(*q, *s, *ctr, x)).sum());
    let mut start = ClassicalFieldSet::with_density(g, j0);
    let phase: [f64; 3] = std::array::from_fn(|_| r.random_range(0.0..PI));
    start.e = [
        g.sample(|x| (x[1] + phase[0]).sin()),
        g.sample(|x| (x[2] + phase[1]).cos()),
        g.sample(|x| (x[0] + phase[2]).sin()),
    ];
    let back = coulomb::remove_coulomb(&coulomb::add_coulomb(&start, c)?, c)?;
    let rt = (0..3).map(|a| back.e[a].iter().zip(&start.e[a]).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)).fold(0.0, f64::max);
    rep.checks.push(Check::below("roundtrip", rt, p.roundtrip_tol));
    let _ = (f, cor);

    // Far zone against the closed-form field of a Gaussian charge.
    let gf = SpatialGrid::new(*p.sizes.last().unwrap_or(&64), p.far_extent_sigmas * p.sigma, Boundary::Open)?;
    let phi = coulomb::newtonian_potential(&gf, &gauss.sample(&gf, 0.0))?;
    let grad = gf.gradient(&phi);
    let mut far: f64 = 0.0;
    for idx in gf.interior(1) {
        let x = gf.point(idx);
        let rr = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if rr > 3.0 * p.sigma {
            let radial = (0..3).map(|a| grad[a][idx] * x[a]).sum::<f64>() / rr;
            let exact = coulomb::gaussian_potential_gradient(1.0, p.sigma, rr);
            far = far.max(((radial - exact) / exact).abs());
        }
    }
    rep.checks.push(Check::below("far_field.relative", far, p.far_tol));
    Ok(rep)
}
