use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense square complex matrix stored row-major.
///
/// Used for every Hamiltonian and operator in the crate. Energies are in
/// MHz with ħ = 1.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries. Fails unless the entry count
    /// is a perfect square.
    pub fn from_row_major(data: Vec<Complex64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != data.len() {
            return Err(Error::NotSquare { len: data.len() });
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let data: Vec<Complex64> = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        if rows.iter().any(|r| r.len() != rows.len()) {
            return Err(Error::NotSquare { len: data.len() });
        }
        Self::from_row_major(data)
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest |M[i][j] − conj(M[j][i])|.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Hermitian to a relative tolerance of the largest entry.
    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_error() <= rel_tol * self.max_abs().max(f64::MIN_POSITIVE)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.dim, v.len(), "mul_vec dimension mismatch");
        let n = self.dim;
        (0..n)
            .map(|i| (0..n).map(|j| self.data[i * n + j] * v[j]).sum())
            .collect()
    }

    /// ⟨u|M|v⟩
    pub fn sandwich(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        let mv = self.mul_vec(v);
        u.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn commutator(&self, rhs: &Self) -> Self {
        &self.matmul(rhs) - &rhs.matmul(self)
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (n, m) = (self.dim, rhs.dim);
        let dim = n * m;
        let mut out = Self::zeros(dim);
        for i in 0..n {
            for j in 0..n {
                let a = self[(i, j)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out.data[(i * m + k) * dim + j * m + l] = a * rhs[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Same basis reordered: `out[i][j] = self[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = self[(perm[i], perm[j])];
            }
        }
        out
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Mul<f64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: f64) -> ComplexMatrix {
        self.scale_real(rhs)
    }
}

impl Mul<Complex64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Complex64) -> ComplexMatrix {
        self.scale(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.4e}{:+.4e}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Kronecker product of `factors` in the given order.
///
/// Embedding an operator on one subsystem is done by passing identities for
/// the other factors.
pub fn kron_compose(factors: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let (first, rest) = factors.split_first().ok_or(Error::EmptyFactorList)?;
    Ok(rest.iter().fold(first.clone(), |acc, f| acc.kron(f)))
}

/// Places `op` at position `slot` of a product space with factor dimensions
/// `dims`, padding with identities.
pub fn embed(op: &ComplexMatrix, slot: usize, dims: &[usize]) -> Result<ComplexMatrix> {
    if slot >= dims.len() {
        return Err(Error::InvalidInput(format!(
            "slot {slot} outside a {}-factor space",
            dims.len()
        )));
    }
    if dims[slot] != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: dims[slot],
            found: op.dim(),
        });
    }
    let factors: Vec<ComplexMatrix> = dims
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            if k == slot {
                op.clone()
            } else {
                ComplexMatrix::identity(d)
            }
        })
        .collect();
    kron_compose(&factors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_kron_identity() {
        let m = kron_compose(&[ComplexMatrix::identity(2), ComplexMatrix::identity(3)]).unwrap();
        assert_eq!(m, ComplexMatrix::identity(6));
    }

    #[test]
    fn empty_factor_list_is_an_error() {
        assert_eq!(kron_compose(&[]), Err(Error::EmptyFactorList));
    }

    #[test]
    fn embeddings_on_different_slots_commute() {
        let sz = ComplexMatrix::diagonal(&[0.5, -0.5]);
        let a = embed(&sz, 0, &[2, 2]).unwrap();
        let b = embed(&sz, 1, &[2, 2]).unwrap();
        assert!(a.commutator(&b).max_abs() == 0.0);
    }

    #[test]
    fn trace_is_multiplicative_under_kron() {
        let a = ComplexMatrix::from_row_major(vec![c(1.0, 0.5), c(2.0, 0.0), c(-0.3, 1.0), c(4.0, -1.0)])
            .unwrap();
        let b = ComplexMatrix::from_row_major(
            (0..9).map(|k| c(k as f64 * 0.7 - 2.0, (k % 4) as f64)).collect(),
        )
        .unwrap();
        let lhs = a.kron(&b).trace();
        let rhs = a.trace() * b.trace();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn non_square_data_rejected() {
        assert!(matches!(
            ComplexMatrix::from_row_major(vec![c(1.0, 0.0); 5]),
            Err(Error::NotSquare { len: 5 })
        ));
    }

    #[test]
    fn adjoint_and_hermiticity() {
        let m = ComplexMatrix::from_row_major(vec![c(1.0, 0.0), c(0.0, 2.0), c(0.0, -2.0), c(3.0, 0.0)])
            .unwrap();
        assert!(m.is_hermitian(1e-12));
        assert_eq!(m.adjoint(), m);
        let mut n = m.clone();
        n[(0, 1)] = c(0.0, 2.1);
        assert!(!n.is_hermitian(1e-10));
    }
}
