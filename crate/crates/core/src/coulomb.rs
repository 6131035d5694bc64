//! Classical (expectation-level) emergent Coulomb fields on a cubic lattice.
//!
//! The correction E_c = (μ₀c/4π) ∇Φ with Φ(x) = ∫dy j⁰(y)/|x−y| turns a
//! divergence-free E′ into E″ = E′ + E_c obeying ∇·E″ = −μ₀c j⁰. Φ comes from
//! a direct kernel sum (evaluated as a zero-padded FFT convolution, with the
//! exact cell integral of 1/|x| on the diagonal) or, for periodic boxes, from
//! spectral inversion. Derivatives are second-order central differences.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::linalg::C64;

/// ∫ d³u / |u| over the unit cube centered at the origin.
pub fn self_cell_integral() -> f64 {
    let s3 = 3f64.sqrt();
    3.0 * ((s3 + 1.0) / (s3 - 1.0)).ln() - PI / 2.0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

/// n³ cell-centered points (i − (n−1)/2)·h per axis; flat index (i·n + j)·n + l.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialGrid {
    pub n: usize,
    pub h: f64,
    pub boundary: Boundary,
}

pub type Scalar = Vec<f64>;
pub type Vector = [Vec<f64>; 3];

impl SpatialGrid {
    pub fn new(n: usize, extent: f64, boundary: Boundary) -> Result<Self> {
        if n < 16 {
            return Err(Error::Config(format!("spatial grid needs at least 16 points per axis, got {n}")));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::Config(format!("spatial extent must be > 0, got {extent}")));
        }
        Ok(Self { n, h: extent / n as f64, boundary })
    }

    pub fn extent(&self) -> f64 {
        self.n as f64 * self.h
    }

    pub fn len(&self) -> usize {
        self.n.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self, i: usize, j: usize, l: usize) -> usize {
        (i * self.n + j) * self.n + l
    }

    pub fn unindex(&self, idx: usize) -> [usize; 3] {
        [idx / (self.n * self.n), (idx / self.n) % self.n, idx % self.n]
    }

    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n as f64 - 1.0) / 2.0) * self.h
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        self.unindex(idx).map(|i| self.coord(i))
    }

    pub fn sample<F: Fn([f64; 3]) -> f64 + Sync>(&self, f: F) -> Scalar {
        (0..self.len()).into_par_iter().map(|i| f(self.point(i))).collect()
    }

    /// Points at least `margin` cells away from every face.
    pub fn interior(&self, margin: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&idx| self.unindex(idx).iter().all(|&i| i >= margin && i + margin < self.n))
    }

    /// Neighbor of `idx` shifted by ±1 along `axis`; None across an open face.
    fn shift(&self, idx: usize, axis: usize, up: bool) -> Option<usize> {
        let mut c = self.unindex(idx);
        let n = self.n;
        c[axis] = match (up, c[axis], self.boundary) {
            (true, i, _) if i + 1 < n => i + 1,
            (true, _, Boundary::Periodic) => 0,
            (false, 0, Boundary::Periodic) => n - 1,
            (false, i, _) if i > 0 => i - 1,
            _ => return None,
        };
        Some(self.index(c[0], c[1], c[2]))
    }

    /// ∂_axis f: central inside, second-order one-sided on open faces.
    pub fn derivative(&self, f: &[f64], axis: usize) -> Scalar {
        let h = self.h;
        (0..self.len())
            .into_par_iter()
            .map(|idx| match (self.shift(idx, axis, false), self.shift(idx, axis, true)) {
                (Some(m), Some(p)) => (f[p] - f[m]) / (2.0 * h),
                (None, Some(p)) => {
                    let pp = self.shift(p, axis, true).unwrap_or(p);
                    (-3.0 * f[idx] + 4.0 * f[p] - f[pp]) / (2.0 * h)
                }
                (Some(m), None) => {
                    let mm = self.shift(m, axis, false).unwrap_or(m);
                    (3.0 * f[idx] - 4.0 * f[m] + f[mm]) / (2.0 * h)
                }
                (None, None) => 0.0,
            })
            .collect()
    }

    pub fn gradient(&self, f: &[f64]) -> Vector {
        [self.derivative(f, 0), self.derivative(f, 1), self.derivative(f, 2)]
    }

    pub fn divergence(&self, v: &Vector) -> Scalar {
        let d: Vec<Scalar> = (0..3).map(|a| self.derivative(&v[a], a)).collect();
        (0..self.len()).map(|i| d[0][i] + d[1][i] + d[2][i]).collect()
    }

    pub fn curl(&self, v: &Vector) -> Vector {
        std::array::from_fn(|a| {
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            let x = self.derivative(&v[c], b);
            let y = self.derivative(&v[b], c);
            x.iter().zip(&y).map(|(p, q)| p - q).collect()
        })
    }

    /// Σ f h³.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        crate::reduce::pairwise_sum(f) * self.h.powi(3)
    }
}

/// 3D FFT of an m³ cube in place, axis by axis.
fn fft3(data: &mut Vec<C64>, m: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(m) } else { planner.plan_fft_forward(m) };
    for _ in 0..3 {
        data.par_chunks_mut(m).for_each(|line| fft.process(line));
        // (i, j, l) → (l, i, j): the next axis becomes contiguous.
        let src = std::mem::take(data);
        *data = (0..m * m * m)
            .into_par_iter()
            .map(|t| {
                let (l, i, j) = (t / (m * m), (t / m) % m, t % m);
                src[(i * m + j) * m + l]
            })
            .collect();
    }
}

/// Φ(x) = ∫ dy j⁰(y)/|x − y| sampled at the grid points.
pub fn newtonian_potential(grid: &SpatialGrid, j0: &[f64]) -> Result<Scalar> {
    if j0.len() != grid.len() {
        return Err(Error::Dimension { expected: grid.len(), got: j0.len() });
    }
    if j0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("charge density has non-finite values".into()));
    }
    match grid.boundary {
        Boundary::Open => Ok(open_potential(grid, j0)),
        Boundary::Periodic => Ok(periodic_potential(grid, j0)),
    }
}

fn open_potential(grid: &SpatialGrid, j0: &[f64]) -> Scalar {
    let n = grid.n;
    let m = 2 * n;
    let h = grid.h;
    let wrap = |i: usize| if i < n { i as f64 } else { i as f64 - m as f64 };
    let mut kernel: Vec<C64> = (0..m * m * m)
        .into_par_iter()
        .map(|t| {
            let d = [wrap(t / (m * m)), wrap((t / m) % m), wrap(t % m)];
            let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            // h³ · 1/(h r), or the exact self-cell integral.
            C64::from(if r == 0.0 { self_cell_integral() * h * h } else { h * h / r })
        })
        .collect();
    let mut rho = vec![C64::from(0.0); m * m * m];
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                rho[(i * m + j) * m + l] = C64::from(j0[grid.index(i, j, l)]);
            }
        }
    }
    fft3(&mut kernel, m, false);
    fft3(&mut rho, m, false);
    rho.par_iter_mut().zip(&kernel).for_each(|(a, b)| *a *= b);
    fft3(&mut rho, m, true);
    let scale = 1.0 / (m * m * m) as f64;
    (0..grid.len())
        .map(|idx| {
            let [i, j, l] = grid.unindex(idx);
            rho[(i * m + j) * m + l].re * scale
        })
        .collect()
}

/// Spectral solution of ∇²Φ = −4π(j⁰ − ⟨j⁰⟩) with zero mean.
fn periodic_potential(grid: &SpatialGrid, j0: &[f64]) -> Scalar {
    let n = grid.n;
    let mut rho: Vec<C64> = j0.iter().map(|&v| C64::from(v)).collect();
    fft3(&mut rho, n, false);
    let dk = 2.0 * PI / grid.extent();
    let freq = |i: usize| if i <= n / 2 { i as f64 } else { i as f64 - n as f64 } * dk;
    rho.par_iter_mut().enumerate().for_each(|(t, v)| {
        let k2 = freq(t / (n * n)).powi(2) + freq((t / n) % n).powi(2) + freq(t % n).powi(2);
        *v = if k2 == 0.0 { C64::from(0.0) } else { *v * (4.0 * PI / k2) };
    });
    fft3(&mut rho, n, true);
    let scale = 1.0 / grid.len() as f64;
    rho.iter().map(|v| v.re * scale).collect()
}

/// E_c = (μ₀c/4π) ∇Φ.
pub fn coulomb_correction(grid: &SpatialGrid, j0: &[f64], c: &PhysicalConstants) -> Result<Vector> {
    let phi = newtonian_potential(grid, j0)?;
    let s = c.mu0 * c.c / (4.0 * PI);
    Ok(grid.gradient(&phi).map(|g| g.into_iter().map(|v| v * s).collect()))
}

/// Charge-density presets. Gaussians carry total charge `charge`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum DensityPreset {
    Gaussian { charge: f64, sigma: f64, #[serde(default)] center: [f64; 3] },
    /// ±charge Gaussians at ±separation/2 along z.
    Dipole { charge: f64, sigma: f64, separation: f64 },
    /// A Gaussian moving rigidly with `velocity` (in units of c); x⁰ = ct.
    TranslatingGaussian { charge: f64, sigma: f64, #[serde(default)] center: [f64; 3], velocity: [f64; 3] },
}

pub fn gaussian_density(charge: f64, sigma: f64, center: [f64; 3], x: [f64; 3]) -> f64 {
    let r2: f64 = (0..3).map(|a| (x[a] - center[a]).powi(2)).sum();
    charge / ((2.0 * PI).powf(1.5) * sigma.powi(3)) * (-r2 / (2.0 * sigma * sigma)).exp()
}

impl DensityPreset {
    pub fn sigma(&self) -> f64 {
        match *self {
            DensityPreset::Gaussian { sigma, .. } | DensityPreset::Dipole { sigma, .. } | DensityPreset::TranslatingGaussian { sigma, .. } => sigma,
        }
    }

    /// j⁰ at x⁰ = `x0`.
    pub fn eval(&self, x: [f64; 3], x0: f64) -> f64 {
        match *self {
            DensityPreset::Gaussian { charge, sigma, center } => gaussian_density(charge, sigma, center, x),
            DensityPreset::Dipole { charge, sigma, separation } => {
                let z = separation / 2.0;
                gaussian_density(charge, sigma, [0.0, 0.0, z], x) - gaussian_density(charge, sigma, [0.0, 0.0, -z], x)
            }
            DensityPreset::TranslatingGaussian { charge, sigma, center, velocity } => {
                let c = std::array::from_fn(|a| center[a] + velocity[a] * x0);
                gaussian_density(charge, sigma, c, x)
            }
        }
    }

    pub fn sample(&self, grid: &SpatialGrid, x0: f64) -> Scalar {
        grid.sample(|x| self.eval(x, x0))
    }
}

/// Radial component of ∇Φ for a Gaussian charge: d/dr [Q erf(r/√2σ)/r].
pub fn gaussian_potential_gradient(charge: f64, sigma: f64, r: f64) -> f64 {
    let s = r / (2f64.sqrt() * sigma);
    charge * (-libm::erf(s) / (r * r) + (2.0 / PI).sqrt() / sigma * (-s * s).exp() / r)
}

#[derive(Clone, Debug)]
pub struct ClassicalFieldSet {
    pub grid: SpatialGrid,
    pub e: Vector,
    pub b: Vector,
    pub j0: Scalar,
    pub j: Vector,
}

impl ClassicalFieldSet {
    /// Source-free fields (E = B = 0) carrying the given charge density.
    pub fn with_density(grid: SpatialGrid, j0: Scalar) -> Self {
        let z = || vec![0.0; grid.len()];
        Self { grid, e: [z(), z(), z()], b: [z(), z(), z()], j0, j: [z(), z(), z()] }
    }
}

fn axpy(a: &Vector, s: f64, b: &Vector) -> Vector {
    std::array::from_fn(|k| a[k].iter().zip(&b[k]).map(|(x, y)| x + s * y).collect())
}

/// E → E″ = E + E_c; B, j⁰ unchanged.
pub fn add_coulomb(fields: &ClassicalFieldSet, c: &PhysicalConstants) -> Result<ClassicalFieldSet> {
    let ec = coulomb_correction(&fields.grid, &fields.j0, c)?;
    Ok(ClassicalFieldSet { e: axpy(&fields.e, 1.0, &ec), ..fields.clone() })
}

/// E″ → E″ − E_c.
pub fn remove_coulomb(fields: &ClassicalFieldSet, c: &PhysicalConstants) -> Result<ClassicalFieldSet> {
    let ec = coulomb_correction(&fields.grid, &fields.j0, c)?;
    Ok(ClassicalFieldSet { e: axpy(&fields.e, -1.0, &ec), ..fields.clone() })
}

/// √(Σ r²) / √(Σ s²) over the listed points.
pub fn relative_l2(r: &[f64], s: &[f64], points: &[usize]) -> f64 {
    let num: f64 = crate::reduce::pairwise_sum(&points.iter().map(|&i| r[i] * r[i]).collect::<Vec<_>>());
    let den: f64 = crate::reduce::pairwise_sum(&points.iter().map(|&i| s[i] * s[i]).collect::<Vec<_>>());
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

/// Interior points, two cells away from open faces (all points if periodic).
pub fn check_points(grid: &SpatialGrid) -> Vec<usize> {
    match grid.boundary {
        Boundary::Open => grid.interior(2).collect(),
        Boundary::Periodic => (0..grid.len()).collect(),
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MaxwellReport {
    /// ‖∇·E″ + μ₀c j⁰‖ / ‖μ₀c j⁰‖ (absolute when j⁰ = 0).
    pub gauss: f64,
    /// max |∇·B″|.
    pub div_b: f64,
    /// max |∇×(E″ − E′)|.
    pub curl_correction: f64,
}

pub fn verify_maxwell(fields: &ClassicalFieldSet, corrected: &ClassicalFieldSet, c: &PhysicalConstants) -> MaxwellReport {
    let g = &fields.grid;
    let pts = check_points(g);
    let source: Scalar = match g.boundary {
        Boundary::Open => corrected.j0.clone(),
        Boundary::Periodic => {
            let mean = corrected.j0.iter().sum::<f64>() / g.len() as f64;
            corrected.j0.iter().map(|v| v - mean).collect()
        }
    }
    .into_iter()
    .map(|v| v * c.mu0 * c.c)
    .collect();
    let div = g.divergence(&corrected.e);
    let res: Scalar = div.iter().zip(&source).map(|(a, b)| a + b).collect();
    let diff = axpy(&corrected.e, -1.0, &fields.e);
    let curl = g.curl(&diff);
    let div_b = g.divergence(&corrected.b);
    let max_at = |f: &[f64]| pts.iter().map(|&i| f[i].abs()).fold(0.0, f64::max);
    MaxwellReport {
        gauss: relative_l2(&res, &source, &pts),
        div_b: max_at(&div_b),
        curl_correction: (0..3).map(|a| max_at(&curl[a])).fold(0.0, f64::max),
    }
}

/// Discrete continuity of (j⁰, j″) for a moving density:
/// ∂₀j⁰ − ∇·j″ with j″_α = −(1/4π) ∂₀∂_α Φ, ∂₀ by central differences of
/// step `dx0`. Returns the relative L² residual against ∂₀j⁰.
pub fn continuity_residual(grid: &SpatialGrid, density: &DensityPreset, x0: f64, dx0: f64) -> Result<f64> {
    let at = |t: f64| -> Result<(Scalar, Vector)> {
        let j0 = density.sample(grid, t);
        let phi = newtonian_potential(grid, &j0)?;
        Ok((j0, grid.gradient(&phi)))
    };
    let (jp, gp) = at(x0 + dx0)?;
    let (jm, gm) = at(x0 - dx0)?;
    let dj0: Scalar = jp.iter().zip(&jm).map(|(a, b)| (a - b) / (2.0 * dx0)).collect();
    let jpp: Vector = std::array::from_fn(|a| gp[a].iter().zip(&gm[a]).map(|(p, m)| -(p - m) / (2.0 * dx0) / (4.0 * PI)).collect());
    let div = grid.divergence(&jpp);
    let res: Scalar = dj0.iter().zip(&div).map(|(a, b)| a - b).collect();
    Ok(relative_l2(&res, &dj0, &check_points(grid)))
}

/// Net flux of E through the faces of the box, Σ E·n h².
pub fn boundary_flux(grid: &SpatialGrid, e: &Vector) -> f64 {
    let n = grid.n;
    let mut terms = Vec::new();
    for a in 0..3 {
        for u in 0..n {
            for v in 0..n {
                let idx = |w: usize| {
                    let mut c = [0; 3];
                    c[a] = w;
                    c[(a + 1) % 3] = u;
                    c[(a + 2) % 3] = v;
                    grid.index(c[0], c[1], c[2])
                };
                terms.push(e[a][idx(n - 1)] - e[a][idx(0)]);
            }
        }
    }
    crate::reduce::pairwise_sum(&terms) * grid.h * grid.h
}

/// Order p from errors at spacings h_i by least squares on log e = p log h + c.
pub fn convergence_order(h: &[f64], err: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = h.iter().zip(err).map(|(a, b)| (a.ln(), b.ln())).collect();
    crate::boundstate::fit_slope(&pts)
}

/// CSV of the plane i_axis = `index`: two in-plane coordinates then one
/// column per component.
pub fn write_slice_csv<W: Write>(out: W, grid: &SpatialGrid, comps: &[&[f64]], axis: usize, index: usize) -> Result<()> {
    if index >= grid.n || axis > 2 {
        return Err(Error::Domain(format!("slice {axis}:{index} outside grid")));
    }
    let mut w = csv::Writer::from_writer(out);
    let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
    let mut header = vec![format!("x{}", a + 1), format!("x{}", b + 1)];
    header.extend((0..comps.len()).map(|k| format!("f{k}")));
    w.write_record(&header)?;
    for u in 0..grid.n {
        for v in 0..grid.n {
            let mut c = [0; 3];
            c[axis] = index;
            c[a] = u;
            c[b] = v;
            let idx = grid.index(c[0], c[1], c[2]);
            let mut row = vec![format!("{:e}", grid.coord(u)), format!("{:e}", grid.coord(v))];
            row.extend(comps.iter().map(|f| format!("{:e}", f[idx])));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub const VOLUME_MAGIC: &[u8; 8] = b"RQEDVOL1";

/// Binary volume: magic, three u64 dims, u64 component count, f64 spacing,
/// then f64 values in row-major order (x slowest, component fastest), all
/// little-endian.
pub fn write_volume<W: Write>(mut out: W, grid: &SpatialGrid, comps: &[&[f64]]) -> Result<()> {
    out.write_all(VOLUME_MAGIC)?;
    for _ in 0..3 {
        out.write_all(&(grid.n as u64).to_le_bytes())?;
    }
    out.write_all(&(comps.len() as u64).to_le_bytes())?;
    out.write_all(&grid.h.to_le_bytes())?;
    let mut buf = Vec::with_capacity(grid.len() * comps.len() * 8);
    for idx in 0..grid.len() {
        for f in comps {
            buf.extend_from_slice(&f[idx].to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Inverse of [`write_volume`]: (dims, spacing, components).
pub fn read_volume<R: Read>(mut input: R) -> Result<([usize; 3], f64, Vec<Vec<f64>>)> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != VOLUME_MAGIC {
        return Err(Error::Domain("not an RQEDVOL1 volume".into()));
    }
    let mut word = [0u8; 8];
    let mut next = |input: &mut R| -> Result<[u8; 8]> {
        input.read_exact(&mut word)?;
        Ok(word)
    };
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = u64::from_le_bytes(next(&mut input)?) as usize;
    }
    let ncomp = u64::from_le_bytes(next(&mut input)?) as usize;
    let h = f64::from_le_bytes(next(&mut input)?);
    let total = dims.iter().product::<usize>();
    let mut comps = vec![Vec::with_capacity(total); ncomp];
    for _ in 0..total {
        for comp in comps.iter_mut() {
            comp.push(f64::from_le_bytes(next(&mut input)?));
        }
    }
    Ok((dims, h, comps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_centered() {
        let g = SpatialGrid::new(16, 4.0, Boundary::Open).unwrap();
        assert_eq!(g.coord(0), -g.coord(15));
        assert_eq!(g.unindex(g.index(3, 5, 7)), [3, 5, 7]);
        assert!(SpatialGrid::new(8, 1.0, Boundary::Open).is_err());
    }

    #[test]
    fn fft_round_trip() {
        let m = 6;
        let orig: Vec<C64> = (0..m * m * m).map(|i| C64::new(i as f64, (i * i % 7) as f64)).collect();
        let mut d = orig.clone();
        fft3(&mut d, m, false);
        fft3(&mut d, m, true);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a / (m * m * m) as f64 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_density_zero_field() {
        let g = SpatialGrid::new(16, 4.0, Boundary::Open).unwrap();
        let e = coulomb_correction(&g, &vec![0.0; g.len()], &PhysicalConstants::default()).unwrap();
        assert!(e.iter().all(|c| c.iter().all(|&v| v == 0.0)));
    }
}
