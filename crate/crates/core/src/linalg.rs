//! Small dense complex linear algebra: just what capacity evaluation and
//! least-squares refitting need, generic over the scalar type.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Complex<T>] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Self::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).fold(Complex::zero(), |acc, k| acc + self[(i, k)] * rhs[(k, j)])
        }))
    }

    pub fn mul_vec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(Complex::zero(), |acc, (a, b)| acc + *a * *b)
            })
            .collect()
    }

    /// `A^H x`.
    pub fn adjoint_mul_vec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = vec![Complex::zero(); self.cols];
        for (i, xi) in x.iter().enumerate().take(self.rows) {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * xi;
            }
        }
        out
    }

    /// Gram matrix of the smaller side: `A A^H` if rows <= cols, else `A^H A`.
    /// Both share the nonzero eigenvalues `sigma_k^2`.
    pub fn compact_gram(&self) -> Self {
        if self.rows <= self.cols {
            Self::from_fn(self.rows, self.rows, |i, j| {
                self.row(i)
                    .iter()
                    .zip(self.row(j))
                    .fold(Complex::zero(), |acc, (a, b)| acc + *a * b.conj())
            })
        } else {
            Self::from_fn(self.cols, self.cols, |i, j| {
                (0..self.rows).fold(Complex::zero(), |acc, k| {
                    acc + self[(k, i)].conj() * self[(k, j)]
                })
            })
        }
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Natural log-determinant of a Hermitian positive definite matrix via
/// Cholesky. `None` if the matrix is not numerically positive definite.
pub fn hermitian_logdet<T: Scalar>(a: &CMatrix<T>) -> Option<T> {
    let n = a.rows();
    let mut l = CMatrix::<T>::zeros(n, n);
    let mut logdet = T::zero();
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > T::zero()) {
            return None;
        }
        let ljj = d.sqrt();
        l[(j, j)] = Complex::new(ljj, T::zero());
        logdet += ljj.ln();
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Some(logdet + logdet)
}

/// Eigenvalues of a Hermitian matrix, descending, by cyclic complex Jacobi.
pub fn hermitian_eigenvalues<T: Scalar>(a: &CMatrix<T>) -> Vec<T> {
    let n = a.rows();
    let mut m = a.clone();
    let total = m.frobenius_norm();
    let tol = T::epsilon() * total;
    for _sweep in 0..64 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= tol || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut m, p, q);
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| m[(i, i)].re).collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

fn jacobi_rotate<T: Scalar>(m: &mut CMatrix<T>, p: usize, q: usize) {
    let apq = m[(p, q)];
    let mag = apq.norm();
    if mag == T::zero() {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    // Phase factor making the (p, q) entry real, then a real Schur rotation.
    let e = apq.conj() / mag;
    let tau = (aqq - app) / (mag + mag);
    let t = if tau >= T::zero() {
        T::one() / (tau + (T::one() + tau * tau).sqrt())
    } else {
        -T::one() / (-tau + (T::one() + tau * tau).sqrt())
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = t * c;
    let vpp = Complex::new(c, T::zero());
    let vpq = Complex::new(s, T::zero());
    let vqp = e * (-s);
    let vqq = e * c;
    let n = m.rows();
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * vpp + akq * vqp;
        m[(k, q)] = akp * vpq + akq * vqq;
    }
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = vpp.conj() * apk + vqp.conj() * aqk;
        m[(q, k)] = vpq.conj() * apk + vqq.conj() * aqk;
    }
    m[(p, q)] = Complex::zero();
    m[(q, p)] = Complex::zero();
    m[(p, p)] = Complex::new(m[(p, p)].re, T::zero());
    m[(q, q)] = Complex::new(m[(q, q)].re, T::zero());
}

/// Singular values of `a`, descending, from the compact Gram matrix.
pub fn singular_values<T: Scalar>(a: &CMatrix<T>) -> Vec<T> {
    hermitian_eigenvalues(&a.compact_gram())
        .into_iter()
        .map(|x| x.max(T::zero()).sqrt())
        .collect()
}

/// Least-squares solution of `A x = y` for a tall (or square) matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares<T> {
    pub solution: Vec<Complex<T>>,
    pub residual: Vec<Complex<T>>,
    pub residual_norm: T,
    /// `min |R_kk| / max |R_kk|` from the QR factorisation.
    pub rcond: T,
}

/// Householder QR least squares. Fails with [`Error::RankDeficient`] when the
/// reciprocal condition estimate falls below `rcond_min`.
pub fn least_squares<T: Scalar>(
    a: &CMatrix<T>,
    y: &[Complex<T>],
    rcond_min: T,
) -> Result<LeastSquares<T>> {
    let (m, n) = (a.rows(), a.cols());
    if y.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{} observations for {m} rows",
            y.len()
        )));
    }
    if m < n {
        return Err(Error::Underdetermined {
            measurements: m,
            unknowns: n,
        });
    }
    let mut r = a.clone();
    let mut qty = y.to_vec();
    let mut diag = Vec::with_capacity(n);
    for k in 0..n {
        let norm = (k..m)
            .fold(T::zero(), |acc, i| acc + r[(i, k)].norm_sqr())
            .sqrt();
        if norm == T::zero() {
            diag.push(T::zero());
            continue;
        }
        let x0 = r[(k, k)];
        let phase = if x0.norm() > T::zero() {
            x0 / x0.norm()
        } else {
            Complex::new(T::one(), T::zero())
        };
        let alpha = -phase * norm;
        let mut v: Vec<Complex<T>> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm = v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
        if vnorm > T::zero() {
            for z in v.iter_mut() {
                *z /= vnorm;
            }
            let two = T::lit(2.0);
            for j in k..n {
                let dot = v
                    .iter()
                    .enumerate()
                    .fold(Complex::zero(), |acc, (i, vi)| acc + vi.conj() * r[(k + i, j)]);
                for (i, vi) in v.iter().enumerate() {
                    r[(k + i, j)] -= *vi * dot * two;
                }
            }
            let dot = v
                .iter()
                .enumerate()
                .fold(Complex::zero(), |acc, (i, vi)| acc + vi.conj() * qty[k + i]);
            for (i, vi) in v.iter().enumerate() {
                qty[k + i] -= *vi * dot * two;
            }
        }
        diag.push(r[(k, k)].norm());
    }
    let dmax = diag.iter().fold(T::zero(), |acc, d| acc.max(*d));
    let dmin = diag.iter().fold(T::infinity(), |acc, d| acc.min(*d));
    let rcond = if dmax > T::zero() { dmin / dmax } else { T::zero() };
    if n > 0 && !(rcond >= rcond_min) {
        return Err(Error::RankDeficient {
            rcond: rcond.to_f64_lossy(),
        });
    }
    let mut x = vec![Complex::<T>::zero(); n];
    for k in (0..n).rev() {
        let mut s = qty[k];
        for j in (k + 1)..n {
            s -= r[(k, j)] * x[j];
        }
        x[k] = s / r[(k, k)];
    }
    let fitted = a.mul_vec(&x);
    let residual: Vec<Complex<T>> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let residual_norm = residual
        .iter()
        .fold(T::zero(), |acc, z| acc + z.norm_sqr())
        .sqrt();
    Ok(LeastSquares {
        solution: x,
        residual,
        residual_norm,
        rcond,
    })
}
