//! Small dense complex linear algebra shared by all modules.

use nalgebra::{DMatrix, DVector, Dim, Matrix, RawStorage};
pub use num_complex::Complex64 as C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn basis(n: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(n);
    v[i] = ONE;
    v
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn comm(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticomm(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

/// Pauli matrices σ₁, σ₂, σ₃.
pub fn pauli() -> [CMat; 3] {
    let s1 = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let s2 = CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
    let s3 = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
    [s1, s2, s3]
}

/// Largest entry modulus.
pub fn max_abs<R: Dim, C: Dim, S: RawStorage<C64, R, C>>(m: &Matrix<C64, R, C, S>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Frobenius norm of the block of `m` with rows and columns in `idx`.
pub fn restricted_norm(m: &CMat, idx: &[usize]) -> f64 {
    let mut s = 0.0;
    for &i in idx {
        for &j in idx {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    max_abs(&(m - m.adjoint())) <= tol
}

/// An operator-valued plane wave
///
///   O(x) = minus · e^{-i k_μ x^μ} + plus · e^{+i k_μ x^μ},
///
/// with `k` the contravariant four-vector (k⁰, k¹, k², k³) and metric
/// (+,−,−,−). Derivatives act on the phases in closed form.
#[derive(Clone, Debug)]
pub struct PlaneWaveOp {
    pub k: [f64; 4],
    pub minus: CMat,
    pub plus: CMat,
}

/// k_μ x^μ with metric (+,−,−,−).
pub fn minkowski_dot(k: &[f64; 4], x: &[f64; 4]) -> f64 {
    k[0] * x[0] - k[1] * x[1] - k[2] * x[2] - k[3] * x[3]
}

impl PlaneWaveOp {
    pub fn eval(&self, x: &[f64; 4]) -> CMat {
        let ph = minkowski_dot(&self.k, x);
        let e = C64::from_polar(1.0, -ph);
        &self.minus * e + &self.plus * e.conj()
    }

    /// ∂/∂x^μ.
    pub fn deriv(&self, mu: usize) -> PlaneWaveOp {
        let k_lower = if mu == 0 { self.k[0] } else { -self.k[mu] };
        PlaneWaveOp {
            k: self.k,
            minus: &self.minus * (-I * k_lower),
            plus: &self.plus * (I * k_lower),
        }
    }

    pub fn scale(&self, s: C64) -> PlaneWaveOp {
        PlaneWaveOp { k: self.k, minus: &self.minus * s, plus: &self.plus * s }
    }

    /// Hermitian conjugate: the phase e^{-ikx} becomes e^{+ikx}.
    pub fn adjoint(&self) -> PlaneWaveOp {
        PlaneWaveOp { k: self.k, minus: self.plus.adjoint(), plus: self.minus.adjoint() }
    }

    pub fn add(&self, other: &PlaneWaveOp) -> PlaneWaveOp {
        debug_assert_eq!(self.k, other.k);
        PlaneWaveOp { k: self.k, minus: &self.minus + &other.minus, plus: &self.plus + &other.plus }
    }

    pub fn zero_like(&self) -> PlaneWaveOp {
        let n = self.minus.nrows();
        PlaneWaveOp { k: self.k, minus: CMat::zeros(n, n), plus: CMat::zeros(n, n) }
    }
}

/// Largest entry modulus of the block of `m` with rows and columns in `idx`.
pub fn restricted_max_abs(m: &CMat, idx: &[usize]) -> f64 {
    idx.iter().flat_map(|&i| idx.iter().map(move |&j| (i, j))).fold(0.0, |acc, ij| acc.max(m[ij].norm()))
}
