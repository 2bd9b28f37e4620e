//! Dense complex linear algebra and the small convex solvers used by every
//! optimization block: a Hermitian eigensolver, a primal-dual interior-point
//! SDP solver with an ADMM fallback, and a barrier-method QCQP solver.

mod eig;
mod hermitian;
pub mod qcqp;
pub mod sdp;

pub use eig::{eig_hermitian, Eigen};
pub use hermitian::HermitianMatrix;
pub use qcqp::{
    solve_ball_qp, solve_qcqp, solve_qcqp_from, solve_real_qcqp, QcqpProblem, QcqpSolution,
    QcqpStatus, QuadConstraint, RealQcqpProblem, RealQcqpSolution,
};
pub use sdp::{
    solve_sdp, solve_sdp_with, AffineConstraint, BlockTerm, SdpMethod, SdpOptions, SdpProblem,
    SdpSolution, SdpStatus, Sense, SymTerm,
};

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

pub const J: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `x^H A y`.
pub fn bilinear(x: &CVec, a: &CMat, y: &CVec) -> Complex64 {
    let ay = a * y;
    x.dotc(&ay)
}

/// Real part of `x^H A x`; exact for Hermitian `A`.
pub fn quad_form(a: &CMat, x: &CVec) -> f64 {
    bilinear(x, a, x).re
}

/// `x y^H`.
pub fn outer(x: &CVec, y: &CVec) -> CMat {
    x * y.adjoint()
}

/// Element-wise product `A ⊙ B`.
pub fn hadamard(a: &CMat, b: &CMat) -> CMat {
    a.component_mul(b)
}

/// `diag(v)` as a dense matrix.
pub fn diag(v: &CVec) -> CMat {
    CMat::from_diagonal(v)
}

/// Frobenius norm.
pub fn fro(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5, 0.0)
}

/// `Re tr(A B)` without forming the product.
pub fn re_trace_product(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for r in 0..n {
        for k in 0..a.ncols() {
            let x = a[(r, k)];
            let y = b[(k, r)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

/// Real embedding `[[Re A, -Im A], [Im A, Re A]]` of a complex matrix.
pub fn real_embedding(a: &CMat) -> RMat {
    let (r, c_) = a.shape();
    let mut out = RMat::zeros(2 * r, 2 * c_);
    for i in 0..r {
        for j in 0..c_ {
            let z = a[(i, j)];
            out[(i, j)] = z.re;
            out[(i, j + c_)] = -z.im;
            out[(i + r, j)] = z.im;
            out[(i + r, j + c_)] = z.re;
        }
    }
    out
}
