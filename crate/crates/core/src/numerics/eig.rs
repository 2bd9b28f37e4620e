use super::{CMat, Complex64, HermitianMatrix};
use crate::error::{Error, Result};

/// Eigen-decomposition `A = U diag(λ) U^H` with `λ` sorted descending.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl Eigen {
    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn reconstruct(&self) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = Complex64::new(self.values[j], 0.0);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

const MAX_QL_SWEEPS: usize = 60;

/// Householder tridiagonalization followed by implicit QL with Wilkinson-type
/// shifts. Equal eigenvalues keep the order produced by the tridiagonal sweep.
pub fn eig_hermitian(a: &HermitianMatrix) -> Result<Eigen> {
    let n = a.dim();
    if n == 0 {
        return Ok(Eigen {
            values: vec![],
            vectors: CMat::zeros(0, 0),
        });
    }
    let (mut d, mut e, mut z) = tridiagonalize(a.as_matrix());
    ql_implicit(&mut d, &mut e, &mut z)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| z[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

/// Returns the real diagonal, real sub-diagonal (last entry zero) and the
/// unitary `Q` such that `A = Q T Q^H`.
fn tridiagonalize(a0: &CMat) -> (Vec<f64>, Vec<f64>, CMat) {
    let n = a0.nrows();
    let mut a = a0.clone();
    let mut q = CMat::identity(n, n);

    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let norm: f64 = (0..len)
            .map(|i| a[(k + 1 + i, k)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mut u: Vec<Complex64> = (0..len).map(|i| a[(k + 1 + i, k)]).collect();
        u[0] += phase * norm;
        let unorm: f64 = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if unorm == 0.0 {
            continue;
        }
        // H = I - u u^H with |u|^2 = 2.
        let s = std::f64::consts::SQRT_2 / unorm;
        for z in u.iter_mut() {
            *z *= s;
        }

        // Column/row k.
        for i in 0..len {
            a[(k + 1 + i, k)] = Complex64::new(0.0, 0.0);
            a[(k, k + 1 + i)] = Complex64::new(0.0, 0.0);
        }
        let head = -phase * norm;
        a[(k + 1, k)] = head;
        a[(k, k + 1)] = head.conj();

        // Trailing block S <- H S H.
        let mut p = vec![Complex64::new(0.0, 0.0); len];
        for i in 0..len {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..len {
                acc += a[(k + 1 + i, k + 1 + j)] * u[j];
            }
            p[i] = acc;
        }
        let kk: f64 = u
            .iter()
            .zip(&p)
            .map(|(ui, pi)| (ui.conj() * pi).re)
            .sum::<f64>()
            * 0.5;
        let w: Vec<Complex64> = p.iter().zip(&u).map(|(pi, ui)| pi - ui * kk).collect();
        for i in 0..len {
            for j in 0..len {
                a[(k + 1 + i, k + 1 + j)] -= u[i] * w[j].conj() + w[i] * u[j].conj();
            }
        }

        // Q <- Q H on columns k+1..n.
        for r in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..len {
                acc += q[(r, k + 1 + j)] * u[j];
            }
            for j in 0..len {
                q[(r, k + 1 + j)] -= acc * u[j].conj();
            }
        }
    }

    // Diagonal unitary scaling turns the complex sub-diagonal real.
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut s = Complex64::new(1.0, 0.0);
    for i in 0..n {
        d[i] = a[(i, i)].re;
        if i > 0 {
            for r in 0..n {
                q[(r, i)] *= s;
            }
        }
        if i + 1 < n {
            let sub = a[(i + 1, i)];
            let m = sub.norm();
            e[i] = m;
            if m > 0.0 {
                s *= sub / m;
            }
        }
    }
    (d, e, q)
}

fn ql_implicit(d: &mut [f64], e: &mut [f64], z: &mut CMat) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_SWEEPS {
                return Err(Error::EigenNoConvergence { index: l });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zf = z[(k, i + 1)];
                    let zi = z[(k, i)];
                    z[(k, i + 1)] = zi * s + zf * c;
                    z[(k, i)] = zi * c - zf * s;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, fro};

    #[test]
    fn identity_has_unit_spectrum() {
        let e = eig_hermitian(&HermitianMatrix::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        let u = &e.vectors;
        assert!(fro(&(u.adjoint() * u - CMat::identity(3, 3))) < 1e-14);
    }

    #[test]
    fn diagonal_sorted_descending() {
        let a = HermitianMatrix::from_real_diagonal(&[-1.0, 2.0]);
        let e = eig_hermitian(&a).unwrap();
        assert_eq!(e.values, vec![2.0, -1.0]);
        assert!((e.vectors[(1, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn complex_two_by_two() {
        // [[2, i], [-i, 2]] has eigenvalues 3 and 1.
        let m = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let e = eig_hermitian(&HermitianMatrix::new(m.clone()).unwrap()).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-13);
        assert!((e.values[1] - 1.0).abs() < 1e-13);
        assert!(fro(&(e.reconstruct() - m)) < 1e-13);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            HermitianMatrix::new(m),
            Err(Error::NotHermitian { .. })
        ));
    }
}
