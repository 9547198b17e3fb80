use super::operators::Spin;

/// What a tensor factor of the Hilbert space represents. Only affects how
/// basis states are printed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    Electron,
    /// Spin-1/2 nucleus, printed as `+1/2`.
    HalfNucleus,
    /// Spin-1 nucleus, printed as `+1_N`.
    OneNucleus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisFactor {
    pub spin: Spin,
    pub kind: FactorKind,
}

/// Uncoupled product basis `|m_0⟩ ⊗ |m_1⟩ ⊗ …`, each factor descending in m.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductBasis {
    factors: Vec<BasisFactor>,
}

impl ProductBasis {
    pub fn new(factors: Vec<BasisFactor>) -> Self {
        Self { factors }
    }

    pub fn factors(&self) -> &[BasisFactor] {
        &self.factors
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.spin.multiplicity()).collect()
    }

    pub fn dim(&self) -> usize {
        self.dims().iter().product()
    }

    /// Per-factor level indices of a flat basis index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let dims = self.dims();
        let mut out = vec![0; dims.len()];
        for (k, &d) in dims.iter().enumerate().rev() {
            out[k] = index % d;
            index /= d;
        }
        out
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        self.dims()
            .iter()
            .zip(digits)
            .fold(0, |acc, (&d, &x)| acc * d + x)
    }

    /// Magnetic quantum numbers of every factor for a flat basis index.
    pub fn m_values(&self, index: usize) -> Vec<f64> {
        self.digits(index)
            .iter()
            .zip(&self.factors)
            .map(|(&k, f)| f.spin.m_values()[k])
            .collect()
    }

    /// Flat index of the state with the given m values.
    pub fn index_of_m(&self, ms: &[f64]) -> Option<usize> {
        if ms.len() != self.factors.len() {
            return None;
        }
        let digits: Option<Vec<usize>> = ms
            .iter()
            .zip(&self.factors)
            .map(|(&m, f)| f.spin.m_values().iter().position(|&x| x == m))
            .collect();
        digits.map(|d| self.index_of(&d))
    }

    pub fn label(&self, index: usize) -> String {
        self.m_values(index)
            .iter()
            .zip(&self.factors)
            .map(|(&m, f)| format_m(m, f))
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn format_m(m: f64, factor: &BasisFactor) -> String {
    let core = match factor.spin {
        Spin::One => format_signed_int(m),
        Spin::Half => {
            if m > 0.0 {
                "+1/2".to_string()
            } else {
                "-1/2".to_string()
            }
        }
    };
    match factor.kind {
        FactorKind::Electron => format!("{core}_e"),
        FactorKind::OneNucleus => format!("{core}_N"),
        FactorKind::HalfNucleus => core,
    }
}

fn format_signed_int(m: f64) -> String {
    if m == 0.0 {
        "0".to_string()
    } else {
        format!("{:+}", m as i64)
    }
}
