use super::{fro, CMat, CVec, Complex64};
use crate::error::{Error, Result};

/// A validated complex Hermitian matrix.
///
/// Construction checks conjugate symmetry to a relative tolerance of `1e-10`
/// and stores the exactly Hermitian part, so downstream quadratic forms are
/// real to machine precision.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    m: CMat,
}

impl HermitianMatrix {
    pub const SYMMETRY_TOL: f64 = 1e-10;

    pub fn new(m: CMat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NonSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let scale = fro(&m);
        let asym = fro(&(&m - m.adjoint()));
        let rel = if scale > 0.0 { asym / scale } else { 0.0 };
        if rel > Self::SYMMETRY_TOL {
            return Err(Error::NotHermitian { asymmetry: rel });
        }
        Ok(Self::from_hermitian_part(&m))
    }

    /// Takes `(M + M^H)/2` without validation.
    pub fn from_hermitian_part(m: &CMat) -> Self {
        let mut h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
        for i in 0..h.nrows() {
            h[(i, i)].im = 0.0;
        }
        Self { m: h }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: CMat::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: CMat::identity(n, n),
        }
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = CMat::zeros(n, n);
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = Complex64::new(x, 0.0);
        }
        Self { m }
    }

    /// `v v^H`.
    pub fn outer(v: &CVec) -> Self {
        Self::from_hermitian_part(&(v * v.adjoint()))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.m[(i, i)].re).sum()
    }

    /// `x^H A x` (real).
    pub fn quad(&self, x: &CVec) -> f64 {
        super::quad_form(&self.m, x)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            m: &self.m * Complex64::new(s, 0.0),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            m: &self.m + &other.m,
        }
    }

    /// `A ⊙ B^T`, Hermitian whenever `B` is.
    pub fn hadamard_transposed(&self, b: &HermitianMatrix) -> Self {
        Self::from_hermitian_part(&self.m.component_mul(&b.m.transpose()))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)].re).collect()
    }

    /// Sub-matrix on the given index set.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        let m = CMat::from_fn(k, k, |i, j| self.m[(idx[i], idx[j])]);
        Self { m }
    }
}

impl std::ops::Index<(usize, usize)> for HermitianMatrix {
    type Output = Complex64;
    fn index(&self, ij: (usize, usize)) -> &Complex64 {
        &self.m[ij]
    }
}
