//! Dense complex-matrix kernel: tensor products, bipartite symmetrization,
//! Hermitian eigendecomposition, and Schatten norms.
//!
//! Everything here is sized for desk-scale operators (dimension up to a few
//! hundred); matrices are stored dense and row-major.

use num_complex::Complex64;
use thiserror::Error;

/// Maximum Jacobi sweeps before the eigen solver gives up.
const MAX_JACOBI_SWEEPS: usize = 100;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix dimensions must be positive")]
    EmptyMatrix,

    #[error("entry count {len} does not match shape {rows}x{cols}")]
    ShapeMismatch {
        len: usize,
        rows: usize,
        cols: usize,
    },

    #[error("matrix entries must be finite (no NaN or infinity)")]
    NonFiniteEntry,

    #[error("dimension mismatch: {context} expects {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix of dimension {dim} is not bipartite over two {d}-dimensional factors")]
    NotBipartite { dim: usize, d: usize },

    #[error("matrix is not Hermitian within tolerance (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("eigen iteration failed to converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

/// Dense complex matrix in row-major order.
///
/// Constructors reject non-finite entries, so downstream numerics never have
/// to re-check for NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Build a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        if entries.len() != rows * cols {
            return Err(LinalgError::ShapeMismatch {
                len: entries.len(),
                rows,
                cols,
            });
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(LinalgError::NonFiniteEntry);
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    /// Build a square matrix from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self, LinalgError> {
        Self::new(
            rows,
            cols,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows: rows.max(1),
            cols: cols.max(1),
            entries: vec![Complex64::new(0.0, 0.0); rows.max(1) * cols.max(1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    /// Diagonal matrix from real values.
    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in diag.iter().enumerate() {
            m.set(i, i, Complex64::new(x, 0.0));
        }
        m
    }

    /// Rank-one projector |v><v| from a (not necessarily normalized) vector.
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, v[i] * v[j].conj());
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.entries[row * self.cols + col] = value;
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_same_shape(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_same_shape(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                context: "matrix product",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + aik * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn trace(&self) -> Result<Complex64, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok((0..self.rows).map(|i| self.get(i, i)).sum())
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Max-entry deviation from Hermiticity.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..=i {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermitian_deviation() <= tol
    }

    /// Entrywise closeness under the max norm.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| (a - b).norm() <= tol)
    }

    fn check_same_shape(&self, other: &Self) -> Result<(), LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                context: "elementwise operation",
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(())
    }

    fn require_square(&self) -> Result<usize, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(self.rows)
    }
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted descending; `eigenvectors` holds the matching
/// orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianSpectrum {
    /// Rebuild V diag(lambda) V†, for reconstruction checks.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &lambda) in self.eigenvalues.iter().enumerate() {
                    acc += v.get(i, k) * lambda * v.get(j, k).conj();
                }
                out.set(i, j, acc);
            }
        }
        out
    }
}

/// Kronecker product of two square matrices, left factor major.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    let d1 = a.require_square()?;
    let d2 = b.require_square()?;
    let d = d1 * d2;
    let mut out = ComplexMatrix::zeros(d, d);
    for i1 in 0..d1 {
        for j1 in 0..d1 {
            let aij = a.get(i1, j1);
            if aij.norm_sqr() == 0.0 {
                continue;
            }
            for i2 in 0..d2 {
                for j2 in 0..d2 {
                    out.set(i1 * d2 + i2, j1 * d2 + j2, aij * b.get(i2, j2));
                }
            }
        }
    }
    Ok(out)
}

/// Swap operator S on a d (x) d bipartite space: S(x (x) y) = y (x) x.
pub fn swap_operator(d: usize) -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            s.set(i * d + j, j * d + i, Complex64::new(1.0, 0.0));
        }
    }
    s
}

/// Swap-average (W + S W S) / 2 of a bipartite operator over two
/// d-dimensional factors.
pub fn symmetrize_bipartite(w: &ComplexMatrix, d: usize) -> Result<ComplexMatrix, LinalgError> {
    let dim = w.require_square()?;
    if d == 0 || dim != d * d {
        return Err(LinalgError::NotBipartite { dim, d });
    }
    let s = swap_operator(d);
    let sws = s.matmul(w)?.matmul(&s)?;
    Ok(w.add(&sws)?.scale(0.5))
}

/// Whether a bipartite operator is invariant under the factor swap.
pub fn is_swap_symmetric(w: &ComplexMatrix, d: usize, tol: f64) -> Result<bool, LinalgError> {
    let dim = w.require_square()?;
    if d == 0 || dim != d * d {
        return Err(LinalgError::NotBipartite { dim, d });
    }
    let s = swap_operator(d);
    let sws = s.matmul(w)?.matmul(&s)?;
    Ok(w.approx_eq(&sws, tol))
}

/// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// The input must be Hermitian within `1e-8 * max(1, max_abs)`; it is
/// symmetrized exactly before iterating, so the result always satisfies the
/// reconstruction bound for the symmetrized input.
pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<HermitianSpectrum, LinalgError> {
    let d = a.require_square()?;
    let scale = a.max_abs();
    let dev = a.hermitian_deviation();
    if dev > 1e-8 * scale.max(1.0) {
        return Err(LinalgError::NotHermitian { deviation: dev });
    }

    // Exactly Hermitian working copy.
    let mut m = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        m.set(i, i, Complex64::new(a.get(i, i).re, 0.0));
        for j in 0..i {
            let avg = 0.5 * (a.get(i, j) + a.get(j, i).conj());
            m.set(i, j, avg);
            m.set(j, i, avg.conj());
        }
    }
    let mut v = ComplexMatrix::identity(d);

    let stop = 1e-14 * scale.max(1.0);
    let mut converged = d <= 1;
    for _sweep in 0..MAX_JACOBI_SWEEPS {
        if converged {
            break;
        }
        let mut off: f64 = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                off = off.max(m.get(p, q).norm());
            }
        }
        if off <= stop {
            converged = true;
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                jacobi_rotate(&mut m, &mut v, p, q);
            }
        }
    }
    if !converged {
        // One final check: the last sweep may have finished the job.
        let mut off: f64 = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                off = off.max(m.get(p, q).norm());
            }
        }
        if off > stop {
            return Err(LinalgError::NoConvergence {
                sweeps: MAX_JACOBI_SWEEPS,
            });
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        m.get(j, j)
            .re
            .partial_cmp(&m.get(i, i).re)
            .expect("diagonal is finite")
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m.get(i, i).re).collect();
    let mut eigenvectors = ComplexMatrix::zeros(d, d);
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..d {
            eigenvectors.set(row, new_col, v.get(row, old_col));
        }
    }
    Ok(HermitianSpectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// One two-sided unitary rotation zeroing the (p, q) entry of a Hermitian
/// matrix, accumulated into `v`.
fn jacobi_rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = m.get(p, q);
    let amag = apq.norm();
    if amag == 0.0 {
        return;
    }
    let phase = apq / amag;
    let alpha = m.get(p, p).re;
    let gamma = m.get(q, q).re;
    let tau = (alpha - gamma) / (2.0 * amag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        1.0 / (tau - (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let d = m.rows();
    // Column update: cols (p, q) <- (c*p + s*conj(phase)*q, -s*phase*p + c*q).
    for row in 0..d {
        let mp = m.get(row, p);
        let mq = m.get(row, q);
        m.set(row, p, mp * c + mq * (phase.conj() * s));
        m.set(row, q, mp * (-(phase * s)) + mq * c);
    }
    // Row update with the adjoint coefficients.
    for col in 0..d {
        let mp = m.get(p, col);
        let mq = m.get(q, col);
        m.set(p, col, mp * c + mq * (phase * s));
        m.set(q, col, mp * (-(phase.conj() * s)) + mq * c);
    }
    // Clean up round-off where exact values are known.
    m.set(p, q, Complex64::new(0.0, 0.0));
    m.set(q, p, Complex64::new(0.0, 0.0));
    let app = m.get(p, p);
    let aqq = m.get(q, q);
    m.set(p, p, Complex64::new(app.re, 0.0));
    m.set(q, q, Complex64::new(aqq.re, 0.0));

    for row in 0..d {
        let vp = v.get(row, p);
        let vq = v.get(row, q);
        v.set(row, p, vp * c + vq * (phase.conj() * s));
        v.set(row, q, vp * (-(phase * s)) + vq * c);
    }
}

/// Singular values in descending order.
///
/// Hermitian inputs take the eigenvalue route; general square inputs go
/// through the Hermitian decomposition of A†A.
pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>, LinalgError> {
    let scale = a.max_abs().max(1.0);
    if a.is_hermitian(1e-10 * scale) {
        let mut sv: Vec<f64> = hermitian_eigen(a)?
            .eigenvalues
            .into_iter()
            .map(f64::abs)
            .collect();
        sv.sort_by(|x, y| y.partial_cmp(x).expect("finite singular values"));
        return Ok(sv);
    }
    a.require_square()?;
    let ata = a.adjoint().matmul(a)?;
    let sv = hermitian_eigen(&ata)?
        .eigenvalues
        .into_iter()
        .map(|lambda| lambda.max(0.0).sqrt())
        .collect();
    Ok(sv)
}

/// Trace norm (sum of singular values).
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64, LinalgError> {
    Ok(singular_values(a)?.iter().sum())
}

/// Operator norm (largest singular value).
pub fn operator_norm(a: &ComplexMatrix) -> Result<f64, LinalgError> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

/// PSD test tolerant of eigen round-off: the most negative eigenvalue may not
/// exceed 1e-8 relative to max(1, spectral radius).
pub fn is_positive_semidefinite(a: &ComplexMatrix) -> Result<bool, LinalgError> {
    let spectrum = hermitian_eigen(a)?;
    let max_abs = spectrum
        .eigenvalues
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max);
    let min = spectrum.eigenvalues.last().copied().unwrap_or(0.0);
    Ok(min >= -1e-8 * max_abs.max(1.0))
}
