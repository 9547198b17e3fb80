use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Spin quantum numbers supported by the builders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Half,
    One,
}

impl Spin {
    pub fn from_f64(s: f64) -> Result<Self> {
        if s == 0.5 {
            Ok(Spin::Half)
        } else if s == 1.0 {
            Ok(Spin::One)
        } else {
            Err(Error::UnsupportedSpin(s))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Spin::Half => 0.5,
            Spin::One => 1.0,
        }
    }

    /// 2s + 1
    pub fn multiplicity(self) -> usize {
        match self {
            Spin::Half => 2,
            Spin::One => 3,
        }
    }

    /// Magnetic quantum numbers in basis order: s, s−1, …, −s.
    pub fn m_values(self) -> Vec<f64> {
        let s = self.value();
        (0..self.multiplicity()).map(|k| s - k as f64).collect()
    }
}

/// Cartesian and ladder operators for a single spin.
#[derive(Debug, Clone)]
pub struct SpinOperatorSet {
    pub spin: Spin,
    pub sx: ComplexMatrix,
    pub sy: ComplexMatrix,
    pub sz: ComplexMatrix,
    pub s_plus: ComplexMatrix,
    pub s_minus: ComplexMatrix,
}

impl SpinOperatorSet {
    pub fn new(spin: Spin) -> Self {
        let m = spin.m_values();
        let s = spin.value();
        let n = m.len();
        let sz = ComplexMatrix::diagonal(&m);
        let mut s_plus = ComplexMatrix::zeros(n);
        // ⟨m+1|S+|m⟩ = sqrt(s(s+1) − m(m+1)); basis is descending in m.
        for col in 1..n {
            let mm = m[col];
            s_plus[(col - 1, col)] = Complex64::new((s * (s + 1.0) - mm * (mm + 1.0)).sqrt(), 0.0);
        }
        let s_minus = s_plus.adjoint();
        let sx = (&s_plus + &s_minus).scale_real(0.5);
        let sy = (&s_plus - &s_minus).scale(Complex64::new(0.0, -0.5));
        Self {
            spin,
            sx,
            sy,
            sz,
            s_plus,
            s_minus,
        }
    }

    pub fn identity(&self) -> ComplexMatrix {
        ComplexMatrix::identity(self.spin.multiplicity())
    }

    /// Component along `(x, y, z)`.
    pub fn dot(&self, v: [f64; 3]) -> ComplexMatrix {
        let mut out = self.sx.scale_real(v[0]);
        out += &self.sy.scale_real(v[1]);
        out += &self.sz.scale_real(v[2]);
        out
    }

    pub fn cartesian(&self) -> [&ComplexMatrix; 3] {
        [&self.sx, &self.sy, &self.sz]
    }
}

/// Spin operators for `s ∈ {1/2, 1}`.
pub fn spin_operators(s: f64) -> Result<SpinOperatorSet> {
    Ok(SpinOperatorSet::new(Spin::from_f64(s)?))
}
