//! Assembly of electron–nuclear cluster Hamiltonians in MHz.
//!
//! The electron occupies the first tensor factor, nuclei follow in the order
//! given. The transverse field lies at `azimuth_rad` in the NV frame and
//! nuclear azimuths are measured in the same frame.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperfine::{HyperfineScalars, PhysicalConstants};
use crate::spin::{
    embed, hermitian_eig, BasisFactor, ComplexMatrix, Eigensystem, FactorKind, ProductBasis, Spin,
    SpinOperatorSet, MAX_DIM,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElectronSpecies {
    /// Negatively charged NV, S = 1.
    NvMinus,
    /// Neutral NV ground state, S = 1/2.
    Nv0,
}

impl ElectronSpecies {
    pub fn spin(self) -> Spin {
        match self {
            ElectronSpecies::NvMinus => Spin::One,
            ElectronSpecies::Nv0 => Spin::Half,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NuclearSpecies {
    C13,
    N14,
}

impl NuclearSpecies {
    pub fn spin(self) -> Spin {
        match self {
            NuclearSpecies::C13 => Spin::Half,
            NuclearSpecies::N14 => Spin::One,
        }
    }

    pub fn gamma(self, c: &PhysicalConstants) -> f64 {
        match self {
            NuclearSpecies::C13 => c.gamma_n_c13_mhz_per_g,
            NuclearSpecies::N14 => c.gamma_n_n14_mhz_per_g,
        }
    }

    fn kind(self) -> FactorKind {
        match self {
            NuclearSpecies::C13 => FactorKind::HalfNucleus,
            NuclearSpecies::N14 => FactorKind::OneNucleus,
        }
    }
}

/// Electron–nuclear coupling of one nucleus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Coupling {
    /// Scalar form. `a_perp_prime` only enters when double-quantum terms are
    /// switched on.
    Scalars(HyperfineScalars),
    /// Full `S·A·I` with a symmetric 3×3 tensor in the NV frame.
    Tensor([[f64; 3]; 3]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NucleusSpec {
    pub species: NuclearSpecies,
    pub coupling: Coupling,
    /// `Q·I_z²` coefficient in MHz; spin-1 nuclei only.
    pub quadrupole_mhz: Option<f64>,
}

impl NucleusSpec {
    pub fn c13(scalars: HyperfineScalars) -> Self {
        Self {
            species: NuclearSpecies::C13,
            coupling: Coupling::Scalars(scalars),
            quadrupole_mhz: None,
        }
    }

    pub fn c13_tensor(a: [[f64; 3]; 3]) -> Self {
        Self {
            species: NuclearSpecies::C13,
            coupling: Coupling::Tensor(a),
            quadrupole_mhz: None,
        }
    }

    pub fn n14(a_par: f64, a_perp: f64, quadrupole_mhz: f64) -> Self {
        Self {
            species: NuclearSpecies::N14,
            coupling: Coupling::Scalars(HyperfineScalars::secular(a_par, a_perp)),
            quadrupole_mhz: Some(quadrupole_mhz),
        }
    }
}

/// Static magnetic field in the NV frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    /// Component along the NV axis, G.
    pub bz_gauss: f64,
    /// Transverse magnitude, G.
    pub bx_gauss: f64,
    /// Direction of the transverse component, rad.
    pub azimuth_rad: f64,
}

impl FieldConfig {
    pub fn axial(bz_gauss: f64) -> Self {
        Self {
            bz_gauss,
            ..Self::default()
        }
    }

    pub fn new(bz_gauss: f64, bx_gauss: f64, azimuth_rad: f64) -> Self {
        Self {
            bz_gauss,
            bx_gauss,
            azimuth_rad,
        }
    }

    /// Cartesian components `(B_x, B_y, B_z)` in G.
    pub fn vector(&self) -> [f64; 3] {
        let (s, c) = self.azimuth_rad.sin_cos();
        [self.bx_gauss * c, self.bx_gauss * s, self.bz_gauss]
    }
}

/// Declarative description of one electron–nuclear cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinSystemSpec {
    pub electron: ElectronSpecies,
    pub nuclei: Vec<NucleusSpec>,
    pub field: FieldConfig,
    pub constants: PhysicalConstants,
    pub include_double_quantum: bool,
}

impl SpinSystemSpec {
    pub fn new(electron: ElectronSpecies, nuclei: Vec<NucleusSpec>, field: FieldConfig) -> Self {
        Self {
            electron,
            nuclei,
            field,
            constants: PhysicalConstants::default(),
            include_double_quantum: false,
        }
    }

    pub fn nv_c13(scalars: HyperfineScalars, field: FieldConfig) -> Self {
        Self::new(ElectronSpecies::NvMinus, vec![NucleusSpec::c13(scalars)], field)
    }

    pub fn nv_c13_pair(first: HyperfineScalars, second: HyperfineScalars, field: FieldConfig) -> Self {
        Self::new(
            ElectronSpecies::NvMinus,
            vec![NucleusSpec::c13(first), NucleusSpec::c13(second)],
            field,
        )
    }

    /// NV⁻ with its ¹⁴N using the couplings stored in `constants`.
    pub fn nv_n14(constants: PhysicalConstants, field: FieldConfig) -> Self {
        let n = NucleusSpec::n14(
            constants.a_par_n14_nvm_mhz,
            constants.a_perp_n14_nvm_mhz,
            constants.q_n14_nvm_mhz,
        );
        Self {
            constants,
            ..Self::new(ElectronSpecies::NvMinus, vec![n], field)
        }
    }

    /// NV⁰ with its ¹⁴N using the couplings stored in `constants`.
    pub fn nv0_n14(constants: PhysicalConstants, field: FieldConfig) -> Self {
        let n = NucleusSpec::n14(
            constants.a0_par_n14_nv0_mhz,
            constants.a0_perp_n14_nv0_mhz,
            constants.q0_n14_nv0_mhz,
        );
        Self {
            constants,
            ..Self::new(ElectronSpecies::Nv0, vec![n], field)
        }
    }

    pub fn with_constants(mut self, constants: PhysicalConstants) -> Self {
        self.constants = constants;
        self
    }

    pub fn with_double_quantum(mut self, on: bool) -> Self {
        self.include_double_quantum = on;
        self
    }

    pub fn basis(&self) -> ProductBasis {
        let mut factors = vec![BasisFactor {
            spin: self.electron.spin(),
            kind: FactorKind::Electron,
        }];
        factors.extend(self.nuclei.iter().map(|n| BasisFactor {
            spin: n.species.spin(),
            kind: n.species.kind(),
        }));
        ProductBasis::new(factors)
    }

    pub fn dim(&self) -> usize {
        self.basis().dim()
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if dim > MAX_DIM {
            return Err(Error::DimensionTooLarge { dim, max: MAX_DIM });
        }
        for (k, n) in self.nuclei.iter().enumerate() {
            match (n.species, n.quadrupole_mhz) {
                (NuclearSpecies::N14, None) => {
                    return Err(Error::InvalidSystem(format!("nucleus {k}: ¹⁴N needs a quadrupole value")))
                }
                (NuclearSpecies::C13, Some(_)) => {
                    return Err(Error::InvalidSystem(format!(
                        "nucleus {k}: spin-1/2 nuclei carry no quadrupole term"
                    )))
                }
                _ => {}
            }
            if let Coupling::Tensor(a) = &n.coupling {
                let asym = (a[0][1] - a[1][0])
                    .abs()
                    .max((a[0][2] - a[2][0]).abs())
                    .max((a[1][2] - a[2][1]).abs());
                let scale = a.iter().flatten().map(|x| x.abs()).fold(1.0, f64::max);
                if asym > 1e-12 * scale {
                    return Err(Error::NotSymmetric(asym));
                }
            }
        }
        let b = self.field.vector();
        if b.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSystem("field contains non-finite values".into()));
        }
        Ok(())
    }

    fn expect_shape(&self, electron: ElectronSpecies, nuclei: &[NuclearSpecies]) -> Result<()> {
        let found: Vec<NuclearSpecies> = self.nuclei.iter().map(|n| n.species).collect();
        if self.electron != electron || found != nuclei {
            return Err(Error::InvalidSystem(format!(
                "expected {electron:?} with {nuclei:?}, found {:?} with {found:?}",
                self.electron
            )));
        }
        Ok(())
    }
}

/// A Hamiltonian matrix together with the product basis it is written in.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub matrix: ComplexMatrix,
    pub basis: ProductBasis,
}

impl Hamiltonian {
    /// Exact eigensystem with product-basis labels.
    pub fn eigensystem(&self) -> Result<Eigensystem> {
        hermitian_eig(&self.matrix)?.with_basis(self.basis.clone())
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// Builds the Hamiltonian of an arbitrary validated spec.
pub fn build(spec: &SpinSystemSpec) -> Result<Hamiltonian> {
    spec.validate()?;
    let basis = spec.basis();
    let dims = basis.dims();
    let dim = basis.dim();
    let c = &spec.constants;
    let b = spec.field.vector();

    let e_ops = SpinOperatorSet::new(spec.electron.spin());
    let s = EmbeddedSpin::new(&e_ops, 0, &dims)?;

    let mut h = ComplexMatrix::zeros(dim);
    if spec.electron == ElectronSpecies::NvMinus {
        h += &s.z.matmul(&s.z).scale_real(c.d_mhz);
    }
    h += &s.dot(b).scale_real(c.gamma_e_mhz_per_g);

    for (k, nucleus) in spec.nuclei.iter().enumerate() {
        let n_ops = SpinOperatorSet::new(nucleus.species.spin());
        let i = EmbeddedSpin::new(&n_ops, k + 1, &dims)?;
        h += &i.dot(b).scale_real(nucleus.species.gamma(c));
        if let Some(q) = nucleus.quadrupole_mhz {
            h += &i.z.matmul(&i.z).scale_real(q);
        }
        h += &match &nucleus.coupling {
            Coupling::Scalars(sc) => scalar_coupling(&s, &i, sc, spec.include_double_quantum),
            Coupling::Tensor(a) => tensor_coupling(&s, &i, a),
        };
    }
    Ok(Hamiltonian { matrix: h, basis })
}

/// NV⁻ with one ¹³C (6×6).
pub fn build_nv_c13(spec: &SpinSystemSpec) -> Result<Hamiltonian> {
    spec.expect_shape(ElectronSpecies::NvMinus, &[NuclearSpecies::C13])?;
    build(spec)
}

/// NV⁻ with its ¹⁴N (9×9).
pub fn build_nv_n14(spec: &SpinSystemSpec) -> Result<Hamiltonian> {
    spec.expect_shape(ElectronSpecies::NvMinus, &[NuclearSpecies::N14])?;
    build(spec)
}

/// NV⁰ with its ¹⁴N (6×6).
pub fn build_nv0_n14(spec: &SpinSystemSpec) -> Result<Hamiltonian> {
    spec.expect_shape(ElectronSpecies::Nv0, &[NuclearSpecies::N14])?;
    build(spec)
}

/// NV⁻ with two ¹³C and no direct nuclear–nuclear term (12×12).
pub fn build_nv_c13_pair(spec: &SpinSystemSpec) -> Result<Hamiltonian> {
    spec.expect_shape(ElectronSpecies::NvMinus, &[NuclearSpecies::C13, NuclearSpecies::C13])?;
    build(spec)
}

/// Spin operators of one factor lifted to the full product space.
pub(crate) struct EmbeddedSpin {
    pub x: ComplexMatrix,
    pub y: ComplexMatrix,
    pub z: ComplexMatrix,
    pub plus: ComplexMatrix,
    pub minus: ComplexMatrix,
}

impl EmbeddedSpin {
    pub fn new(ops: &SpinOperatorSet, slot: usize, dims: &[usize]) -> Result<Self> {
        Ok(Self {
            x: embed(&ops.sx, slot, dims)?,
            y: embed(&ops.sy, slot, dims)?,
            z: embed(&ops.sz, slot, dims)?,
            plus: embed(&ops.s_plus, slot, dims)?,
            minus: embed(&ops.s_minus, slot, dims)?,
        })
    }

    pub fn dot(&self, v: [f64; 3]) -> ComplexMatrix {
        let mut out = self.x.scale_real(v[0]);
        out += &self.y.scale_real(v[1]);
        out += &self.z.scale_real(v[2]);
        out
    }

    fn cartesian(&self) -> [&ComplexMatrix; 3] {
        [&self.x, &self.y, &self.z]
    }
}

fn scalar_coupling(
    s: &EmbeddedSpin,
    i: &EmbeddedSpin,
    sc: &HyperfineScalars,
    double_quantum: bool,
) -> ComplexMatrix {
    let mut h = s.z.matmul(&i.z).scale_real(sc.a_par);
    let flip_flop = &s.plus.matmul(&i.minus) + &s.minus.matmul(&i.plus);
    h += &flip_flop.scale_real(sc.a_perp / 2.0);

    if sc.a_ani != 0.0 {
        let e = Complex64::from_polar(1.0, -sc.phi);
        let raise = &s.plus.matmul(&i.z) + &s.z.matmul(&i.plus);
        let term = raise.scale(e * (sc.a_ani / 2.0));
        h += &term;
        h += &term.adjoint();
    }
    if double_quantum && sc.a_perp_prime != 0.0 {
        let e2 = Complex64::from_polar(1.0, -2.0 * sc.phi);
        let term = s.plus.matmul(&i.plus).scale(e2 * (sc.a_perp_prime / 2.0));
        h += &term;
        h += &term.adjoint();
    }
    h
}

fn tensor_coupling(s: &EmbeddedSpin, i: &EmbeddedSpin, a: &[[f64; 3]; 3]) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(s.x.dim());
    for (p, sp) in s.cartesian().iter().enumerate() {
        for (q, iq) in i.cartesian().iter().enumerate() {
            if a[p][q] != 0.0 {
                h += &sp.matmul(iq).scale_real(a[p][q]);
            }
        }
    }
    h
}
