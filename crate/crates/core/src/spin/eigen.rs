//! Cyclic complex Jacobi diagonalization for small Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq`, then applies a
//! real Jacobi rotation. Sweeps stop once the off-diagonal Frobenius norm is
//! below `1e-12 · ‖H‖_F`.

use num_complex::Complex64;

use super::basis::ProductBasis;
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

pub const MAX_DIM: usize = 64;
pub const MAX_SWEEPS: usize = 100;
pub const OFF_DIAGONAL_TOLERANCE: f64 = 1e-12;
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;

/// Overlap weights closer than this count as tied when labeling.
const LABEL_TIE: f64 = 1e-12;

/// Sorted eigenpairs of a Hermitian matrix.
///
/// `states[k]` is the normalized eigenvector belonging to `energies[k]`.
/// Every state carries the index of the uncoupled basis vector it overlaps
/// most, so states keep their names across level crossings.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub energies: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    pub basis_index: Vec<usize>,
    pub labels: Vec<String>,
    pub sweeps: usize,
    basis: Option<ProductBasis>,
}

impl Eigensystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Replaces the generic `b<k>` labels with product-basis names.
    pub fn with_basis(mut self, basis: ProductBasis) -> Result<Self> {
        if basis.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: basis.dim(),
            });
        }
        self.labels = self.basis_index.iter().map(|&b| basis.label(b)).collect();
        self.basis = Some(basis);
        Ok(self)
    }

    pub fn basis(&self) -> Option<&ProductBasis> {
        self.basis.as_ref()
    }

    /// First eigenstate assigned to basis vector `basis_idx`.
    pub fn state_for_basis(&self, basis_idx: usize) -> Option<usize> {
        self.basis_index.iter().position(|&b| b == basis_idx)
    }

    pub fn state_labeled(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Quantum numbers of the basis vector assigned to eigenstate `k`.
    pub fn m_values(&self, k: usize) -> Option<Vec<f64>> {
        self.basis.as_ref().map(|b| b.m_values(self.basis_index[k]))
    }

    /// Largest ‖H v_k − E_k v_k‖ over all eigenpairs.
    pub fn max_residual(&self, h: &ComplexMatrix) -> f64 {
        self.states
            .iter()
            .zip(&self.energies)
            .map(|(v, &e)| {
                h.mul_vec(v)
                    .iter()
                    .zip(v)
                    .map(|(hv, vi)| (hv - vi * e).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation of the state overlap matrix from identity.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let dot: Complex64 = self.states[i]
                    .iter()
                    .zip(&self.states[j])
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }
}

/// Diagonalizes a Hermitian matrix of dimension ≤ 64.
pub fn hermitian_eig(h: &ComplexMatrix) -> Result<Eigensystem> {
    let n = h.dim();
    if n > MAX_DIM {
        return Err(Error::DimensionTooLarge {
            dim: n,
            max: MAX_DIM,
        });
    }
    let scale = h.max_abs();
    let deviation = h.hermiticity_error();
    if deviation > HERMITICITY_TOLERANCE * scale {
        return Err(Error::NotHermitian {
            deviation,
            allowed: HERMITICITY_TOLERANCE * scale,
        });
    }

    let mut a = h.clone();
    let mut v = ComplexMatrix::identity(n);
    let norm = h.frobenius_norm();
    let target = OFF_DIAGONAL_TOLERANCE * norm;

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= target {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));

    let energies: Vec<f64> = order.iter().map(|&k| a[(k, k)].re).collect();
    let states: Vec<Vec<Complex64>> = order
        .iter()
        .map(|&k| fix_phase((0..n).map(|i| v[(i, k)]).collect()))
        .collect();
    let basis_index: Vec<usize> = states.iter().map(|s| dominant_component(s)).collect();
    let labels = basis_index.iter().map(|b| format!("b{b}")).collect();

    Ok(Eigensystem {
        energies,
        states,
        basis_index,
        labels,
        sweeps,
        basis: None,
    })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // J = [[c, s], [-s e^{-iα}, c e^{-iα}]] on the (p, q) plane.
    let e_minus = phase.conj();
    let n = a.dim();

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * e_minus * s;
        a[(k, q)] = akp * s + akq * e_minus * c;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * phase * s;
        a[(q, k)] = apk * s + aqk * phase * c;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * e_minus * s;
        v[(k, q)] = vkp * s + vkq * e_minus * c;
    }

    let zero = Complex64::new(0.0, 0.0);
    a[(p, q)] = zero;
    a[(q, p)] = zero;
    a[(p, p)] = Complex64::new(app - t * mag, 0.0);
    a[(q, q)] = Complex64::new(aqq + t * mag, 0.0);
}

/// Rotates the global phase so the dominant component is real and positive.
fn fix_phase(mut state: Vec<Complex64>) -> Vec<Complex64> {
    let k = dominant_component(&state);
    let z = state[k];
    if z.norm() > 0.0 {
        let phase = z.conj() / z.norm();
        for x in &mut state {
            *x *= phase;
        }
    }
    state
}

fn dominant_component(state: &[Complex64]) -> usize {
    let max = state.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    state
        .iter()
        .position(|z| z.norm_sqr() >= max - LABEL_TIE)
        .unwrap_or(0)
}
