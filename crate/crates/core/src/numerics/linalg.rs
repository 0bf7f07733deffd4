//! Cyclic Jacobi eigensolver for small dense Hermitian matrices.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::Real;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order with matching unit eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    /// `vectors[k]` is the eigenvector of `values[k]`.
    pub vectors: Vec<Vec<Complex<T>>>,
}

/// Full eigendecomposition of a Hermitian matrix given as rows.
pub fn hermitian_eigen<T: Real>(matrix: &[Vec<Complex<T>>]) -> Result<HermitianEigen<T>> {
    let n = matrix.len();
    if matrix.iter().any(|row| row.len() != n) {
        return Err(Error::Internal("eigensolver needs a square matrix".into()));
    }
    let mut a: Vec<Vec<Complex<T>>> = matrix.to_vec();
    let mut v: Vec<Vec<Complex<T>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        Complex::new(T::one(), T::zero())
                    } else {
                        Complex::new(T::zero(), T::zero())
                    }
                })
                .collect()
        })
        .collect();

    let frob = a
        .iter()
        .flatten()
        .fold(T::zero(), |acc, z| acc + z.norm_sqr());
    let target = frob * T::epsilon() * T::epsilon();
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let off = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(T::zero(), |acc, (i, j)| acc + a[i][j].norm_sqr());
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::Internal(
            "Jacobi eigensolver did not converge".into(),
        ));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[i][i]
            .re
            .partial_cmp(&a[j][j].re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&k| a[k][k].re).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|i| v[i][k]).collect())
        .collect();
    Ok(HermitianEigen { values, vectors })
}

fn rotate<T: Real>(a: &mut [Vec<Complex<T>>], v: &mut [Vec<Complex<T>>], p: usize, q: usize) {
    let apq = a[p][q];
    let b = apq.norm();
    if b == T::zero() {
        return;
    }
    let n = a.len();
    let two = T::lit(2.0);
    // phase that makes the (p, q) element real and positive
    let d = apq.conj() / b;
    let theta = (a[q][q].re - a[p][p].re) / (two * b);
    let t = if theta == T::zero() {
        T::one()
    } else {
        theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt())
    };
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;

    for row in a.iter_mut() {
        let (kp, kq) = (row[p], row[q]);
        row[p] = kp.scale(c) - kq * d.scale(s);
        row[q] = kp.scale(s) + kq * d.scale(c);
    }
    for k in 0..n {
        let (pk, qk) = (a[p][k], a[q][k]);
        a[p][k] = pk.scale(c) - qk * d.conj().scale(s);
        a[q][k] = pk.scale(s) + qk * d.conj().scale(c);
    }
    a[p][q] = Complex::new(T::zero(), T::zero());
    a[q][p] = Complex::new(T::zero(), T::zero());
    a[p][p].im = T::zero();
    a[q][q].im = T::zero();
    for row in v.iter_mut() {
        let (kp, kq) = (row[p], row[q]);
        row[p] = kp.scale(c) - kq * d.scale(s);
        row[q] = kp.scale(s) + kq * d.scale(c);
    }
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues<T: Real>(matrix: &[Vec<Complex<T>>]) -> Result<Vec<T>> {
    Ok(hermitian_eigen(matrix)?.values)
}

/// Eigendecomposition of a real symmetric matrix; the eigenvectors are real.
pub fn symmetric_eigen<T: Real>(matrix: &[Vec<T>]) -> Result<(Vec<T>, Vec<Vec<T>>)> {
    let lifted: Vec<Vec<Complex<T>>> = matrix
        .iter()
        .map(|row| row.iter().map(|&x| Complex::new(x, T::zero())).collect())
        .collect();
    let eig = hermitian_eigen(&lifted)?;
    let vectors = eig
        .vectors
        .into_iter()
        .map(|col| col.into_iter().map(|z| z.re).collect())
        .collect();
    Ok((eig.values, vectors))
}

/// Principal square root of a positive semidefinite symmetric matrix
/// together with its spectral condition number (`∞` when singular).
pub fn psd_sqrt<T: Real>(matrix: &[Vec<T>]) -> Result<(Vec<Vec<T>>, T)> {
    let n = matrix.len();
    let (values, vectors) = symmetric_eigen(matrix)?;
    let max = values.iter().fold(T::zero(), |m, &x| m.max(x));
    let min = values.iter().fold(T::infinity(), |m, &x| m.min(x));
    let cond = if min > T::zero() {
        max / min
    } else {
        T::infinity()
    };
    let roots: Vec<T> = values.iter().map(|&l| l.max(T::zero()).sqrt()).collect();
    let mut out = vec![vec![T::zero(); n]; n];
    for (k, vec_k) in vectors.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                out[i][j] = out[i][j] + vec_k[i] * roots[k] * vec_k[j];
            }
        }
    }
    Ok((out, cond))
}

/// `A B` for square complex matrices.
pub(crate) fn matmul<T: Real>(
    a: &[Vec<Complex<T>>],
    b: &[Vec<Complex<T>>],
) -> Vec<Vec<Complex<T>>> {
    let n = a.len();
    let m = b[0].len();
    let mut out = vec![vec![Complex::new(T::zero(), T::zero()); m]; n];
    for i in 0..n {
        for (k, bk) in b.iter().enumerate() {
            let aik = a[i][k];
            for j in 0..m {
                out[i][j] = out[i][j] + aik * bk[j];
            }
        }
    }
    out
}
