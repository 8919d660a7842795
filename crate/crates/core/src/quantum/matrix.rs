use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

#[allow(unused_imports)] // method resolution falls back to std when it is linked
use num_traits::Float;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Dense row-major complex matrix.
///
/// Register sizes here never exceed 8×8, so no attempt is made at sparsity
/// or blocking.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::invalid_input("matrix data length does not match its shape"));
        }
        Ok(CMatrix { rows, cols, data })
    }

    /// Column vector from amplitudes.
    pub fn column(v: &[C64]) -> Self {
        CMatrix { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    pub fn diag(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
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

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn scale(&self, k: C64) -> Self {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * k).collect() }
    }

    pub fn scale_real(&self, k: f64) -> Self {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * k).collect() }
    }

    /// `self += k * other`
    pub fn add_scaled(&mut self, other: &CMatrix, k: f64) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b * k;
        }
    }

    pub fn kron(&self, other: &CMatrix) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self[(r1, c1)];
                if a == ZERO {
                    continue;
                }
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        out[(r1 * other.rows + r2, c1 * other.cols + c2)] = a * other[(r2, c2)];
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Real part of the Frobenius inner product ⟨self, other⟩ = Re Σ conj(self)·other.
    pub fn real_inner(&self, other: &CMatrix) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data.iter().zip(other.data.iter()).map(|(a, b)| a.re * b.re + a.im * b.im).sum()
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data.iter().zip(other.data.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation of U†U from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let p = &self.dagger() * self;
        p.max_abs_diff(&Self::identity(self.cols))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.max_abs_diff(&self.dagger()) <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Matrix-vector product on raw amplitude slices.
    pub fn apply_to(&self, v: &[C64]) -> Vec<C64> {
        debug_assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| {
                let row = &self.data[r * self.cols..(r + 1) * self.cols];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }
}

/// Number of qubits spanned by a power-of-two dimension.
pub fn qubits_for_dim(dim: usize) -> Option<usize> {
    if dim.is_power_of_two() {
        Some(dim.trailing_zeros() as usize)
    } else {
        None
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let brow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Sorted-eigenvalue check for Hermitian matrices up to 8×8 via Jacobi rotations.
///
/// Returns the smallest eigenvalue. Only used for positivity checks on
/// density matrices, never on a hot path.
pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    // Embed the n×n Hermitian matrix as a real symmetric 2n×2n matrix
    // [[A, -B], [B, A]]; its spectrum is the original one, doubled.
    let n = m.rows();
    let size = 2 * n;
    let mut a = vec![0.0f64; size * size];
    for r in 0..n {
        for c in 0..n {
            let z = m[(r, c)];
            a[r * size + c] = z.re;
            a[(r + n) * size + (c + n)] = z.re;
            a[r * size + (c + n)] = -z.im;
            a[(r + n) * size + c] = z.im;
        }
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..size {
            for q in (p + 1)..size {
                off += a[p * size + q] * a[p * size + q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..size {
            for q in (p + 1)..size {
                let apq = a[p * size + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * size + p];
                let aqq = a[q * size + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..size {
                    let akp = a[k * size + p];
                    let akq = a[k * size + q];
                    a[k * size + p] = c * akp - s * akq;
                    a[k * size + q] = s * akp + c * akq;
                }
                for k in 0..size {
                    let apk = a[p * size + k];
                    let aqk = a[q * size + k];
                    a[p * size + k] = c * apk - s * aqk;
                    a[q * size + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..size).map(|i| a[i * size + i]).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_dimensions_and_entries() {
        let a = CMatrix::diag(&[ONE, -ONE]);
        let b = CMatrix::identity(2);
        let k = a.kron(&b);
        assert_eq!(k.rows(), 4);
        assert_eq!(k[(2, 2)], -ONE);
        assert_eq!(k[(1, 1)], ONE);
    }

    #[test]
    fn min_eigenvalue_of_diagonal() {
        let m = CMatrix::diag(&[C64::new(0.3, 0.0), C64::new(-0.2, 0.0), C64::new(0.9, 0.0)]);
        assert!((min_hermitian_eigenvalue(&m) + 0.2).abs() < 1e-12);
    }

    #[test]
    fn min_eigenvalue_of_complex_hermitian() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2.
        let m = CMatrix::from_rows(2, 2, vec![ONE, I, -I, ONE]).unwrap();
        assert!(min_hermitian_eigenvalue(&m).abs() < 1e-12);
    }
}
