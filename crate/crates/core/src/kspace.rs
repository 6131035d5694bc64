//! Wave-vector grids, fields of Hilbert spaces and the operators acting on them.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};
use crate::quad::gauss_legendre_on;
use crate::reduce::{pairwise_sum, pairwise_sum_c};

pub type WaveVector = Vector3<f64>;

pub const DEFAULT_NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum GridScheme {
    /// Gauss–Legendre in r and cos θ, uniform (periodic-exact) in φ.
    Spherical { k_max: f64, n_radial: usize, n_polar: usize, n_azimuthal: usize },
    /// Cubic lattice j·spacing with |j_i| ≤ half_width, cell-volume weights.
    Lattice { spacing: f64, half_width: i64, include_origin: bool },
    Custom,
}

/// Spherical grid parameters as they appear in config files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub k_max: f64,
    pub n_radial: usize,
    pub n_polar: usize,
    pub n_azimuthal: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { k_max: 1.0, n_radial: 8, n_polar: 8, n_azimuthal: 8 }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<QuadratureGrid> {
        make_grid(self.k_max, self.n_radial, self.n_polar, self.n_azimuthal)
    }
}

#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    pub nodes: Vec<WaveVector>,
    pub weights: Vec<f64>,
    pub scheme: GridScheme,
    lattice_index: Option<HashMap<[i64; 3], usize>>,
}

/// Product rule over the ball 0 < |k| ≤ k_max. The weights carry the
/// r² sin θ Jacobian.
pub fn make_grid(k_max: f64, n_radial: usize, n_polar: usize, n_azimuthal: usize) -> Result<QuadratureGrid> {
    if !(k_max.is_finite() && k_max > 0.0) {
        return Err(Error::Config(format!("k_max must be > 0, got {k_max}")));
    }
    if n_radial == 0 || n_polar == 0 || n_azimuthal == 0 {
        return Err(Error::Config("grid node counts must be positive".into()));
    }
    let (r, wr) = gauss_legendre_on(0.0, k_max, n_radial);
    let (ct, wt) = gauss_legendre_on(-1.0, 1.0, n_polar);
    let dphi = 2.0 * PI / n_azimuthal as f64;
    let mut nodes = Vec::with_capacity(n_radial * n_polar * n_azimuthal);
    let mut weights = Vec::with_capacity(nodes.capacity());
    for (ri, wri) in r.iter().zip(&wr) {
        for (cti, wti) in ct.iter().zip(&wt) {
            let st = (1.0 - cti * cti).sqrt();
            for j in 0..n_azimuthal {
                let phi = (j as f64 + 0.5) * dphi;
                nodes.push(WaveVector::new(ri * st * phi.cos(), ri * st * phi.sin(), ri * cti));
                weights.push(wri * ri * ri * wti * dphi);
            }
        }
    }
    Ok(QuadratureGrid {
        nodes,
        weights,
        scheme: GridScheme::Spherical { k_max, n_radial, n_polar, n_azimuthal },
        lattice_index: None,
    })
}

impl QuadratureGrid {
    /// Cubic lattice of nodes j·spacing, |j_i| ≤ half_width, each carrying
    /// the cell volume. Sums and differences of lattice vectors stay on the
    /// lattice, which is what exact momentum matching needs.
    pub fn lattice(spacing: f64, half_width: i64, include_origin: bool) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) || half_width < 1 {
            return Err(Error::Config("lattice needs spacing > 0 and half_width >= 1".into()));
        }
        let mut nodes = Vec::new();
        let mut index = HashMap::new();
        for i in -half_width..=half_width {
            for j in -half_width..=half_width {
                for l in -half_width..=half_width {
                    if !include_origin && i == 0 && j == 0 && l == 0 {
                        continue;
                    }
                    index.insert([i, j, l], nodes.len());
                    nodes.push(WaveVector::new(i as f64, j as f64, l as f64) * spacing);
                }
            }
        }
        let weights = vec![spacing.powi(3); nodes.len()];
        Ok(Self {
            nodes,
            weights,
            scheme: GridScheme::Lattice { spacing, half_width, include_origin },
            lattice_index: Some(index),
        })
    }

    pub fn from_nodes(nodes: Vec<WaveVector>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::Dimension { expected: nodes.len(), got: weights.len() });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Domain("weights must be positive".into()));
        }
        Ok(Self { nodes, weights, scheme: GridScheme::Custom, lattice_index: None })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn volume(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// Σ_k w_k f(k).
    pub fn integrate<F: Fn(&WaveVector) -> f64 + Sync>(&self, f: F) -> f64 {
        let vals: Vec<f64> = self.nodes.par_iter().zip(&self.weights).map(|(k, w)| w * f(k)).collect();
        pairwise_sum(&vals)
    }

    /// Nearest node to `k` and its distance, if within `tol`.
    pub fn find_node(&self, k: &WaveVector, tol: f64) -> Option<(usize, f64)> {
        let (idx, dist) = match (&self.scheme, &self.lattice_index) {
            (GridScheme::Lattice { spacing, .. }, Some(index)) => {
                let key = [
                    (k.x / spacing).round() as i64,
                    (k.y / spacing).round() as i64,
                    (k.z / spacing).round() as i64,
                ];
                let idx = *index.get(&key)?;
                (idx, (self.nodes[idx] - k).norm())
            }
            _ => self
                .nodes
                .iter()
                .enumerate()
                .map(|(i, n)| (i, (n - k).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))?,
        };
        (dist <= tol).then_some((idx, dist))
    }

    /// CSV with header k_x,k_y,k_z,weight.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k_x", "k_y", "k_z", "weight"])?;
        for (k, wt) in self.nodes.iter().zip(&self.weights) {
            w.write_record([k.x, k.y, k.z, *wt].iter().map(|v| format!("{v:.17e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The map k ↦ ζ_k on the nodes of a grid.
#[derive(Clone, Debug)]
pub struct KField {
    pub grid: Arc<QuadratureGrid>,
    pub dim: usize,
    pub values: Vec<CVec>,
}

impl KField {
    pub fn new(grid: Arc<QuadratureGrid>, values: Vec<CVec>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension { expected: grid.len(), got: values.len() });
        }
        let dim = values.first().map_or(0, |v| v.len());
        if let Some(v) = values.iter().find(|v| v.len() != dim) {
            return Err(Error::Dimension { expected: dim, got: v.len() });
        }
        Ok(Self { grid, dim, values })
    }

    pub fn from_fn<F>(grid: Arc<QuadratureGrid>, f: F) -> Result<Self>
    where
        F: Fn(&WaveVector) -> CVec + Sync + Send,
    {
        let values = grid.nodes.par_iter().map(&f).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<QuadratureGrid>, v: CVec) -> Self {
        let values = vec![v.clone(); grid.len()];
        Self { dim: v.len(), grid, values }
    }

    pub fn max_norm_deviation(&self) -> Result<f64> {
        if self.values.is_empty() {
            return Err(Error::Domain("empty field".into()));
        }
        Ok(self.values.iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max))
    }

    pub fn is_properly_normalized(&self, tol: f64) -> Result<bool> {
        Ok(self.max_norm_deviation()? <= tol)
    }

    /// Σ_k w_k ⟨η_k|ζ_k⟩ (no ℓ³ factor).
    pub fn inner(&self, other: &KField) -> Result<C64> {
        if self.dim != other.dim || self.values.len() != other.values.len() {
            return Err(Error::Dimension { expected: self.dim, got: other.dim });
        }
        let terms: Vec<C64> = self
            .values
            .par_iter()
            .zip(&other.values)
            .zip(&self.grid.weights)
            .map(|((a, b), w)| a.dotc(b) * *w)
            .collect();
        Ok(pairwise_sum_c(&terms))
    }
}

pub trait FieldOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, field: &KField) -> Result<KField>;
}

type DiagRule = dyn Fn(&WaveVector) -> CMat + Send + Sync;
type KernelRule = dyn Fn(&WaveVector, &WaveVector) -> CMat + Send + Sync;

/// k ↦ A_k acting node-wise.
#[derive(Clone)]
pub struct DiagonalOperator {
    pub dim: usize,
    rule: Arc<DiagRule>,
}

impl std::fmt::Debug for DiagonalOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiagonalOperator").field("dim", &self.dim).finish()
    }
}

impl DiagonalOperator {
    pub fn from_fn<F>(dim: usize, rule: F) -> Self
    where
        F: Fn(&WaveVector) -> CMat + Send + Sync + 'static,
    {
        Self { dim, rule: Arc::new(rule) }
    }

    pub fn constant(m: CMat) -> Self {
        let dim = m.nrows();
        Self::from_fn(dim, move |_| m.clone())
    }

    pub fn identity(dim: usize) -> Self {
        Self::constant(CMat::identity(dim, dim))
    }

    pub fn at(&self, k: &WaveVector) -> CMat {
        (self.rule)(k)
    }

    /// The per-node conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let rule = self.rule.clone();
        Self::from_fn(self.dim, move |k| rule(k).adjoint())
    }
}

impl FieldOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, field: &KField) -> Result<KField> {
        if field.dim != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: field.dim });
        }
        let values = field.grid.nodes.par_iter().zip(&field.values).map(|(k, v)| self.at(k) * v).collect();
        KField::new(field.grid.clone(), values)
    }
}

/// (k, k′) ↦ J(k, k′); acts as [Ĵζ]_k = Σ_k′ w_k′ J(k,k′) ζ_k′.
#[derive(Clone)]
pub struct IntegralKernel {
    pub dim: usize,
    rule: Arc<KernelRule>,
}

impl std::fmt::Debug for IntegralKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IntegralKernel").field("dim", &self.dim).finish()
    }
}

impl IntegralKernel {
    pub fn from_fn<F>(dim: usize, rule: F) -> Self
    where
        F: Fn(&WaveVector, &WaveVector) -> CMat + Send + Sync + 'static,
    {
        Self { dim, rule: Arc::new(rule) }
    }

    pub fn at(&self, k: &WaveVector, kp: &WaveVector) -> CMat {
        (self.rule)(k, kp)
    }

    /// (J∗L)(k,k″) = Σ_k′ w_k′ J(k,k′) L(k′,k″) on `grid`.
    pub fn compose(&self, other: &IntegralKernel, grid: Arc<QuadratureGrid>) -> Result<IntegralKernel> {
        if self.dim != other.dim {
            return Err(Error::Dimension { expected: self.dim, got: other.dim });
        }
        let (j, l) = (self.rule.clone(), other.rule.clone());
        let dim = self.dim;
        Ok(IntegralKernel::from_fn(dim, move |k, kpp| {
            let mut acc = CMat::zeros(dim, dim);
            for (kp, w) in grid.nodes.iter().zip(&grid.weights) {
                acc += (j(k, kp) * l(kp, kpp)) * C64::from(*w);
            }
            acc
        }))
    }
}

impl FieldOperator for IntegralKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, field: &KField) -> Result<KField> {
        if field.dim != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: field.dim });
        }
        let grid = &field.grid;
        let values: Result<Vec<CVec>> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let k = &grid.nodes[i];
                let mut acc = CVec::zeros(self.dim);
                for (j, (kp, w)) in grid.nodes.iter().zip(&grid.weights).enumerate() {
                    let m = self.at(k, kp);
                    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                        return Err(Error::KernelEvaluation(i, j));
                    }
                    acc += (m * &field.values[j]) * C64::from(*w);
                }
                Ok(acc)
            })
            .collect();
        KField::new(grid.clone(), values?)
    }
}

/// ⟨Â⟩ = ℓ³ Σ_k w_k ⟨ζ_k|(Âζ)_k⟩ for a properly normalized field.
pub fn expectation<O: FieldOperator + ?Sized>(
    op: &O,
    field: &KField,
    consts: &PhysicalConstants,
    tol: f64,
) -> Result<C64> {
    let dev = field.max_norm_deviation()?;
    if dev > tol {
        return Err(Error::NotNormalized { deviation: dev, tol });
    }
    let image = op.apply(field)?;
    let value = field.inner(&image)? * consts.ell3();
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(Error::Divergent("expectation value is not finite".into()));
    }
    Ok(value)
}

/// ‖(Ûζ)_k‖ = ‖ζ_k‖ at every node.
pub fn check_isometry(op: &DiagonalOperator, field: &KField, tol: f64) -> Result<bool> {
    let image = op.apply(field)?;
    Ok(image.values.iter().zip(&field.values).all(|(a, b)| (a.norm() - b.norm()).abs() <= tol))
}
